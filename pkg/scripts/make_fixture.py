"""Regenerate the bundled test fixture and its golden report bundle.

    python3 scripts/make_fixture.py            # fixture inputs + golden outputs
    python3 scripts/make_fixture.py --golden   # golden outputs only

The fixture is a ~500-record synthetic corpus over three parties, with a
handful of hand-written lines appended to exercise ingest edge cases
(malformed JSON, a duplicate id, an out-of-window tweet, alias spellings,
an untracked hashtag and a self-retweet).
"""
from __future__ import annotations

import argparse
import json
import shutil
from pathlib import Path

from hashjack.config import read_config
from hashjack.ingest import serialize_corpus
from hashjack.pipeline import run_pipeline
from hashjack.synth import SynthConfig, generate_corpus, seed_list_csv

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "tests" / "fixtures"
GOLDEN = ROOT / "tests" / "golden"

FIXTURE_SYNTH = SynthConfig(
    parties=("afd", "csu", "spd"),
    pro_size=10,
    contra_size=10,
    hub_count=2,
    retweets_per_user=7.0,
    own_tag_rate=0.5,
    hashjack_matrix={("afd", "csu"): 0.3, ("afd", "spd"): 0.2, ("spd", "afd"): 0.1},
    base_hashjack_rate=0.1,
    peer_rate=0.1,
    seed=20180528,
)

EXTRA_LINES = [
    '{"id": "x-broken", "author": "afd_pro_u00001", "tags": ["afd"]',
    json.dumps({"id": "rt0000000", "author": "dup", "rt_author": "dup2", "rt_id": "z",
                "tags": ["afd"], "ts": "2018-05-30T10:00:00+00:00", "text": "duplicate id"}),
    json.dumps({"id": "x-early", "author": "afd_pro_u00002", "rt_author": "afd_pro_hub0",
                "rt_id": "afd_pro_hub0-0", "tags": ["afd"], "ts": "2018-05-27T21:59:59+00:00",
                "text": "before the window"}),
    json.dumps({"id": "x-alias", "author": "spd_pro_u00003", "rt_author": "gruene_hub",
                "rt_id": "g-1", "tags": ["#Grüne", "DieGrünen"], "ts": "2018-06-01T12:00:00+02:00",
                "text": "alias spellings"}),
    json.dumps({"id": "x-untracked", "author": "csu_pro_u00004", "rt_author": "csu_pro_hub0",
                "rt_id": "csu_pro_hub0-0", "tags": ["wetter"], "ts": "2018-06-02T08:00:00Z",
                "text": "untracked tag"}),
    json.dumps({"id": "x-self", "author": "afd_pro_hub0", "rt_author": "afd_pro_hub0",
                "rt_id": "afd_pro_hub0-1", "tags": ["afd"], "ts": "2018-06-03T09:00:00Z",
                "text": "self retweet"}),
]

CONFIG = """\
# bundled fixture run
inputs = corpus.jsonl
tags = afd, csu, spd, gruene
seeds_path = seeds.csv
annotations_path = annotations.csv
sentiment_hashtag = afd
seed = 7
level = 0.99
universe = labeled
layout_iterations = 200
"""


def annotations(records) -> str:
    """Sentiment codes for #afd retweets: pro side mostly +, contra side mostly -."""
    rows = ["tweet_id,sentiment"]
    afd = [r for r in records if r.is_retweet and "afd" in r.hashtags][:40]
    for k, rec in enumerate(afd):
        pro = "_pro_" in rec.retweeted_author and rec.author.startswith("afd_pro")
        code = "?" if k % 7 == 3 else ("+" if pro else "-")
        if k % 11 == 5:
            code = "-" if code == "+" else ("+" if code == "-" else code)
        rows.append(f"{rec.tweet_id},{code}")
    return "\n".join(rows) + "\n"


def write_inputs() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    records, truth = generate_corpus(FIXTURE_SYNTH)
    corpus = serialize_corpus(records) + "\n".join(EXTRA_LINES) + "\n"
    (FIXTURES / "corpus.jsonl").write_text(corpus, encoding="utf-8")
    (FIXTURES / "seeds.csv").write_text(seed_list_csv(truth), encoding="utf-8")
    (FIXTURES / "annotations.csv").write_text(annotations(records), encoding="utf-8")
    (FIXTURES / "fixture.cfg").write_text(CONFIG, encoding="utf-8")


def write_golden() -> None:
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    cfg = read_config(FIXTURES / "fixture.cfg")
    cfg.output_dir = str(GOLDEN)
    run_pipeline(cfg)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--golden", action="store_true", help="only rebuild golden outputs")
    args = parser.parse_args()
    if not args.golden:
        write_inputs()
    write_golden()
    print(f"fixture in {FIXTURES}, golden bundle in {GOLDEN}")


if __name__ == "__main__":
    main()
