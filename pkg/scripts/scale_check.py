"""Time the file-based pipeline on a ~200k-record synthetic corpus.

Writes the corpus and seed list into --workdir, runs ingest through overlap,
then the Barnes-Hut layout stage, and prints wall-clock times.

    python3 scripts/scale_check.py --workdir /tmp/scale --records 200000
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from hashjack import pipeline as pl
from hashjack.config import PipelineConfig
from hashjack.ingest import serialize_corpus
from hashjack.synth import SynthConfig, generate_corpus, seed_list_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", type=Path, required=True)
    parser.add_argument("--records", type=int, default=200_000)
    parser.add_argument("--iterations", type=int, default=500)
    parser.add_argument("--seed", type=int, default=8)
    args = parser.parse_args()

    per_user = 12.6
    users = max(1, round(args.records / per_user / 4))
    synth = SynthConfig(parties=("afd", "csu"), pro_size=users, contra_size=users,
                        retweets_per_user=per_user, hashjack_matrix={("afd", "csu"): 0.3},
                        contra_hashjack={("afd", "csu"): 0.05}, seed=args.seed)
    args.workdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    records, truth = generate_corpus(synth)
    (args.workdir / "corpus.jsonl").write_text(serialize_corpus(records), encoding="utf-8")
    (args.workdir / "seeds.csv").write_text(seed_list_csv(truth), encoding="utf-8")
    print(f"generated {len(records)} records in {time.perf_counter() - start:.1f} s")

    cfg = PipelineConfig(inputs=(str(args.workdir / "corpus.jsonl"),), tags=synth.parties,
                         seeds_path=str(args.workdir / "seeds.csv"), seed=args.seed,
                         layout=False, layout_iterations=args.iterations,
                         layout_barnes_hut="on", output_dir=str(args.workdir / "out"))
    start = time.perf_counter()
    pl.run_pipeline(cfg)
    print(f"ingest -> overlap: {time.perf_counter() - start:.1f} s")

    out = Path(cfg.output_dir)
    graphs = pl.load_graphs(out, cfg)
    partitions = pl.load_partitions(out, cfg, graphs)
    polarities = pl.load_polarities(out, partitions)
    start = time.perf_counter()
    files = pl.stage_layout(cfg, graphs, partitions, polarities)
    pl.write_files(out, files)
    pl.write_manifest(out, cfg)
    nodes = sum(len(g) for g in graphs.values())
    print(f"layout ({args.iterations} iterations, Barnes-Hut, {nodes} nodes): "
          f"{time.perf_counter() - start:.1f} s")


if __name__ == "__main__":
    main()
