"""Synthetic-corpus experiments: planted-odds recovery and null calibration."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

from .config import PipelineConfig
from .ingest import restrict_tags
from .pipeline import analyze
from .polarity import Label, SeedList
from .synth import SynthConfig, generate_corpus

RECOVERY_CONFIG = SynthConfig(parties=("afd", "csu"), hashjack_matrix={("afd", "csu"): 0.3},
                              contra_hashjack={("afd", "csu"): 0.05})
NULL_CONFIG = SynthConfig(parties=("afd", "csu"), hashjack_matrix={("afd", "csu"): 0.05},
                          contra_hashjack={("afd", "csu"): 0.05})


def hub_seeds(truth) -> dict:
    """Every hub as a seed for its own cluster."""
    seeds: dict = {}
    for (party, polarity), accounts in truth.hubs.items():
        seeds.setdefault(party, SeedList(party)).seeds.update(
            {acc: Label(polarity) for acc in accounts})
    return seeds


@dataclass
class CellRun:
    seed: int
    records: int
    odds: float
    ci_low: float
    ci_high: float
    target: float
    seconds: float

    @property
    def covers(self) -> bool:
        return self.ci_low <= self.target <= self.ci_high


@dataclass
class CellSummary:
    runs: list = field(default_factory=list)

    @property
    def covered(self) -> int:
        return sum(r.covers for r in self.runs)

    @property
    def median_odds(self) -> float:
        return statistics.median(r.odds for r in self.runs)

    @property
    def seconds(self) -> float:
        return sum(r.seconds for r in self.runs)


def run_cell(synth: SynthConfig, seed: int, cell=("afd", "csu"), target=None,
             level: float = 0.99, universe: str = "pair") -> CellRun:
    """Generate one corpus, analyze it, and report the (pro-X, contra-Y) cell."""
    start = time.perf_counter()
    records, truth = generate_corpus(synth, seed)
    cfg = PipelineConfig(tags=tuple(synth.parties), seed=seed, level=level,
                         universe=universe, layout=False)
    result = analyze(restrict_tags(records, cfg.tags), cfg, hub_seeds(truth))
    odds = result.report.odds[cell]
    if isinstance(odds, str):
        raise RuntimeError(f"cell {cell} failed: {odds}")
    if target is None:
        target = truth.planted[cell][2]
    return CellRun(seed, len(records), odds.odds_ratio, odds.ci_low, odds.ci_high, target,
                   time.perf_counter() - start)


def sweep(synth: SynthConfig, seeds, **kwargs) -> CellSummary:
    return CellSummary([run_cell(synth, s, **kwargs) for s in seeds])
