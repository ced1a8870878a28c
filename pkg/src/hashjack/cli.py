"""Command-line entry point: ``hashjack <stage> [options]``.

Exit codes: 0 success, 1 configuration error, 2 input error, 3 analysis error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import MANIFEST_SCHEMA_VERSION, __version__
from .config import OUTPUT_ENV, PipelineConfig, apply_overrides, read_config
from .errors import HashjackError
from . import pipeline as pl

log = logging.getLogger("hashjack")

STAGES = ("ingest", "graph", "communities", "label", "overlap", "layout", "pipeline")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value run configuration")
    p.add_argument("--output", help=f"output directory (env {OUTPUT_ENV} overrides the config)")
    p.add_argument("--input", nargs="+", dest="inputs", help="JSONL corpus files")
    p.add_argument("--tags", help="comma-separated tracked hashtags")
    p.add_argument("--alias-file")
    p.add_argument("--window-start", help="ISO-8601 timestamp with offset")
    p.add_argument("--window-end", help="ISO-8601 timestamp with offset")
    p.add_argument("--seed", type=int)
    p.add_argument("--resolution", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--giant-only", action="store_true", default=None)
    p.add_argument("--seeds", dest="seeds_path", help="seed account CSV")
    p.add_argument("--top-k", type=int)
    p.add_argument("--annotations", dest="annotations_path", help="sentiment annotation CSV")
    p.add_argument("--sentiment-hashtag")
    p.add_argument("--level", type=float, help="confidence level for intervals")
    p.add_argument("--universe", choices=("labeled", "pair"))
    p.add_argument("--no-layout", dest="layout", action="store_false", default=None)
    p.add_argument("--layout-iterations", type=int)
    p.add_argument("--layout-gravity", type=float)
    p.add_argument("--layout-scaling", type=float)
    p.add_argument("--linlog", dest="layout_linlog", action="store_true", default=None)
    p.add_argument("--barnes-hut", dest="layout_barnes_hut", choices=("auto", "on", "off"))
    p.add_argument("--svg", action="store_true", help="also write layout.svg per hashtag")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hashjack", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"hashjack {__version__} (manifest schema {MANIFEST_SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)
    for stage in STAGES:
        _add_common(sub.add_parser(stage, help=f"run the {stage} stage"))
    synth = sub.add_parser("synth", help="write a synthetic corpus with planted structure")
    synth.add_argument("--config", help="flat key = value synthetic configuration")
    synth.add_argument("--seed", type=int)
    synth.add_argument("--output", required=True)
    synth.add_argument("-v", "--verbose", action="store_true")
    return parser


CONFIG_FLAGS = ("inputs", "tags", "alias_file", "window_start", "window_end", "seed",
                "resolution", "restarts", "giant_only", "seeds_path", "top_k",
                "annotations_path", "sentiment_hashtag", "level", "universe", "layout",
                "layout_iterations", "layout_gravity", "layout_scaling", "layout_linlog",
                "layout_barnes_hut")


def resolve_config(args) -> PipelineConfig:
    """Defaults < config file < environment < command-line flags."""
    cfg = read_config(args.config) if args.config else PipelineConfig()
    if os.environ.get(OUTPUT_ENV):
        cfg = apply_overrides(cfg, {"output_dir": os.environ[OUTPUT_ENV]})
    values = {k: getattr(args, k) for k in CONFIG_FLAGS}
    if args.output:
        values["output_dir"] = args.output
    return apply_overrides(cfg, values).validate()


def run_stage(command: str, cfg: PipelineConfig, svg_out: bool = False) -> None:
    out = Path(cfg.output_dir)
    if command == "pipeline":
        pl.run_pipeline(cfg, svg_out)
        return
    if command == "ingest":
        pl.check_inputs(cfg)
        files, _ = pl.stage_ingest(cfg)
    else:
        records = pl.load_records(out)
        if command == "graph":
            files, _ = pl.stage_graph(cfg, records)
        else:
            graphs = pl.load_graphs(out, cfg)
            if command == "communities":
                files, _ = pl.stage_communities(cfg, graphs)
            else:
                partitions = pl.load_partitions(out, cfg, graphs)
                if command == "label":
                    files, _ = pl.stage_label(cfg, graphs, partitions, records)
                else:
                    polarities = pl.load_polarities(out, partitions)
                    if command == "overlap":
                        files, _ = pl.stage_overlap(cfg, graphs, partitions, polarities)
                    else:
                        files = pl.stage_layout(cfg, graphs, partitions, polarities, svg_out)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_files(out, files)
    pl.write_manifest(out, cfg)


def run_synth(args) -> None:
    from .ingest import serialize_corpus
    from .synth import (SynthConfig, generate_corpus, ground_truth_csv, planted_odds_csv,
                        read_synth_config, seed_list_csv)

    cfg = read_synth_config(args.config) if args.config else SynthConfig()
    records, truth = generate_corpus(cfg, args.seed)
    files = {
        "corpus.jsonl": serialize_corpus(records),
        "ground_truth.csv": ground_truth_csv(truth),
        "planted_odds.csv": planted_odds_csv(truth),
        "seeds.csv": seed_list_csv(truth),
    }
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    pl.write_files(out, files)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            run_synth(args)
        else:
            run_stage(args.command, resolve_config(args), args.svg)
    except HashjackError as exc:
        print(f"hashjack: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
