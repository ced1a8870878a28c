"""Pro/contra labels for communities, top-account reports, sentiment agreement."""
from __future__ import annotations

import csv
import enum
import io
import logging
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError, InputError
from .graph import RetweetGraph, top_retweeted
from .ingest import normalize_hashtag

log = logging.getLogger(__name__)


class Label(str, enum.Enum):
    PRO = "pro"
    CONTRA = "contra"
    UNLABELED = "unlabeled"


class Sentiment(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    UNCLEAR = "unclear"


SENTIMENT_CODES = {"+": Sentiment.POSITIVE, "-": Sentiment.NEGATIVE, "?": Sentiment.UNCLEAR}


class SeedTieError(AnalysisError):
    """Seeds inside one community split evenly between pro and contra."""


class SeedConflictError(AnalysisError):
    """Seed majorities put the same label on both dominant communities."""


class UndefinedCorrelationError(AnalysisError):
    """A correlation input column is constant or too short."""


@dataclass(frozen=True)
class SeedList:
    hashtag: str
    seeds: dict = field(default_factory=dict)  # account -> Label


@dataclass(frozen=True)
class PolarityMap:
    hashtag: str
    labels: dict  # community id -> Label
    coverage: float = 0.0

    def community_with(self, label: Label):
        for cid, lab in self.labels.items():
            if lab is label:
                return cid
        return None


def label_clusters(partition, seeds: SeedList) -> PolarityMap:
    """Give the two largest communities the majority label of their seed accounts.

    Smaller communities, and dominant ones without seeds, stay unlabeled.
    """
    assignment = partition.assignment
    unknown = sorted(acc for acc in seeds.seeds if acc not in assignment)
    if unknown:
        log.warning("%s: %d seed accounts not in graph, skipped (e.g. %s)",
                    seeds.hashtag, len(unknown), unknown[0])
    smallest: dict = {}
    for node, cid in assignment.items():
        if cid not in smallest or node < smallest[cid]:
            smallest[cid] = node
    # the two largest communities (ids 0 and 1 on canonical partitions)
    dominant = sorted(partition.community_sizes,
                      key=lambda c: (-partition.community_sizes[c], smallest.get(c, "")))[:2]
    labels = {cid: Label.UNLABELED for cid in sorted(partition.community_sizes)}
    votes = {cid: Counter() for cid in dominant}
    for acc, lab in seeds.seeds.items():
        cid = assignment.get(acc)
        if cid in votes:
            votes[cid][Label(lab)] += 1
        elif cid is not None:
            log.info("%s: seed %s sits in minor community %d, ignored", seeds.hashtag, acc, cid)
    for cid in dominant:
        pro, contra = votes[cid][Label.PRO], votes[cid][Label.CONTRA]
        if pro == contra == 0:
            continue
        if pro == contra:
            raise SeedTieError(
                f"{seeds.hashtag}: community {cid} seeds split {pro}:{contra}; add more seeds")
        labels[cid] = Label.PRO if pro > contra else Label.CONTRA
    assigned = [labels[cid] for cid in dominant if labels[cid] is not Label.UNLABELED]
    if len(assigned) == 2 and assigned[0] is assigned[1]:
        raise SeedConflictError(
            f"{seeds.hashtag}: both dominant communities have a {assigned[0].value} seed majority")
    total = sum(partition.community_sizes.values())
    covered = sum(partition.community_sizes[c] for c, lab in labels.items()
                  if lab is not Label.UNLABELED)
    return PolarityMap(seeds.hashtag, labels, covered / total if total else 0.0)


def top_accounts_report(graph: RetweetGraph, partition, k: int = 50) -> dict:
    """Per community, its top-k accounts by weighted in-degree in the full graph."""
    members: dict = {}
    for node, cid in partition.assignment.items():
        members.setdefault(cid, []).append(node)
    return {cid: top_retweeted(graph, k, among=members[cid]) for cid in sorted(members)}


def sentiment_table(rows):
    """2x2 counts over decided rows, plus the number of unclear rows dropped.

    Counts are keyed ``(label, sentiment)`` with label in {pro, contra} and
    sentiment in {positive, negative}.
    """
    counts = Counter()
    dropped = 0
    for label, sentiment in rows:
        label, sentiment = Label(label), Sentiment(sentiment)
        if label is Label.UNLABELED:
            raise ValueError("sentiment rows need a pro or contra cluster label")
        if sentiment is Sentiment.UNCLEAR:
            dropped += 1
            continue
        counts[label, sentiment] += 1
    return counts, dropped


def sentiment_agreement(rows) -> float:
    """Pearson correlation between cluster label (pro=1) and sentiment (positive=1).

    Rows with unclear sentiment are excluded.
    """
    x, y = [], []
    for label, sentiment in rows:
        label, sentiment = Label(label), Sentiment(sentiment)
        if sentiment is Sentiment.UNCLEAR:
            continue
        if label is Label.UNLABELED:
            raise ValueError("sentiment rows need a pro or contra cluster label")
        x.append(1.0 if label is Label.PRO else 0.0)
        y.append(1.0 if sentiment is Sentiment.POSITIVE else 0.0)
    if len(x) < 2:
        raise UndefinedCorrelationError(f"need at least 2 decided rows, got {len(x)}")
    x, y = np.array(x), np.array(y)
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("a column is constant after dropping unclear rows")
    return float(dx @ dy) / math.sqrt(sxx * syy)


# -- files -------------------------------------------------------------------

def read_seed_file(path) -> dict:
    """Seed CSV with header ``hashtag,account,polarity``; returns hashtag -> SeedList."""
    out: dict = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["hashtag", "account", "polarity"]:
                raise InputError(f"{path}: seed file header must be hashtag,account,polarity")
            for row in reader:
                tag = normalize_hashtag(row["hashtag"])
                seeds = out.setdefault(tag, {})
                acc = row["account"]
                lab = Label(row["polarity"].strip().lower())
                if lab is Label.UNLABELED:
                    raise InputError(f"{path}: seed {acc} must be pro or contra")
                if acc in seeds and seeds[acc] is not lab:
                    raise InputError(f"{path}: seed {acc} listed twice for {tag}")
                seeds[acc] = lab
    except OSError as exc:
        raise InputError(f"cannot read seed file {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    return {tag: SeedList(tag, seeds) for tag, seeds in sorted(out.items())}


def read_annotations(path) -> list:
    """Annotation CSV with header ``tweet_id,sentiment`` (+, - or ?)."""
    rows = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["tweet_id", "sentiment"]:
                raise InputError(f"{path}: annotation header must be tweet_id,sentiment")
            for row in reader:
                code = row["sentiment"].strip()
                if code not in SENTIMENT_CODES:
                    raise InputError(f"{path}: unknown sentiment code {code!r}")
                rows.append((row["tweet_id"].strip(), SENTIMENT_CODES[code]))
    except OSError as exc:
        raise InputError(f"cannot read annotation file {path}: {exc}") from exc
    return rows


POLARITY_HEADER = ("community_id", "label", "size")
TOP_HEADER = ("community_id", "rank", "account", "in_weight")


def polarity_csv(polarity: PolarityMap, partition) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(POLARITY_HEADER)
    for cid in sorted(polarity.labels):
        writer.writerow((cid, polarity.labels[cid].value, partition.community_sizes[cid]))
    return buf.getvalue()


def read_polarity_csv(text: str, hashtag: str, partition) -> PolarityMap:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is not None and tuple(header) != POLARITY_HEADER:
        raise ValueError(f"unexpected polarity header {header}")
    labels = {int(cid): Label(lab) for cid, lab, _ in reader}
    total = sum(partition.community_sizes.values())
    covered = sum(partition.community_sizes[c] for c, lab in labels.items()
                  if lab is not Label.UNLABELED)
    return PolarityMap(hashtag, labels, covered / total if total else 0.0)


def top_accounts_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TOP_HEADER)
    for cid in sorted(report):
        for rank, (acc, weight) in enumerate(report[cid], 1):
            writer.writerow((cid, rank, acc, weight))
    return buf.getvalue()
