"""Synthetic tweet corpora with planted pro/contra clusters and hashjacking.

Every user belongs to one group: the pro or the contra side of a home party
X. A user retweets hubs of their own group under #X. Independently per other
party Y, a user becomes a hashjacker of Y with a per-user probability (from
``hashjack_matrix`` for pro-X users, ``contra_hashjack`` or
``base_hashjack_rate`` for contra-X users); a hashjacker retweets the
contra-Y hubs under #Y at least once, which places them in Y's contra cluster.

Among the accounts of X's network, the planted odds factor for the cell
(pro-X, contra-Y) compares pro-X users with everyone else in X's network:
contra-X users plus accounts imported by hashjacking #X. When nobody
hashjacks #X the factor is exactly the ratio of the two rates' odds.
"""
from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, field, fields
from datetime import timedelta

import numpy as np

from .errors import ConfigError
from .ingest import DEFAULT_WINDOW, CorpusWindow, TweetRecord, utc

OFFTOPIC_TAG = "politik"


@dataclass(frozen=True)
class SynthConfig:
    parties: tuple = ("afd", "csu")
    pro_size: int = 2000
    contra_size: int = 2000
    hub_count: int = 5
    hub_exponent: float = 1.0
    retweets_per_user: float = 12.5
    own_tag_rate: float = 0.6
    hashjack_matrix: dict = field(default_factory=dict)  # (pro party X, party Y) -> rate
    contra_hashjack: dict = field(default_factory=dict)  # (contra party X, party Y) -> rate
    base_hashjack_rate: float = 0.0  # contra-side rate for pairs absent from contra_hashjack
    peer_rate: float = 0.0
    originals_per_hub: int = 2
    window: CorpusWindow = DEFAULT_WINDOW
    seed: int = 0

    def __post_init__(self):
        validate(self)

    def rate(self, party: str, polarity: str, target: str) -> float:
        if polarity == "pro":
            return self.hashjack_matrix.get((party, target), 0.0)
        return self.contra_hashjack.get((party, target), self.base_hashjack_rate)


def validate(cfg: SynthConfig) -> None:
    parties = list(cfg.parties)
    if len(parties) < 1 or len(set(parties)) != len(parties):
        raise ConfigError("parties must be a non-empty list of distinct tags")
    if OFFTOPIC_TAG in parties:
        raise ConfigError(f"{OFFTOPIC_TAG!r} is reserved for off-topic retweets")
    if cfg.pro_size < 0 or cfg.contra_size < 0 or cfg.hub_count < 1:
        raise ConfigError("population sizes must be non-negative and hub_count positive")
    if cfg.retweets_per_user <= 0 or cfg.hub_exponent < 0 or cfg.originals_per_hub < 0:
        raise ConfigError("retweets_per_user must be positive; exponent and originals >= 0")
    probs = {"own_tag_rate": cfg.own_tag_rate, "base_hashjack_rate": cfg.base_hashjack_rate,
             "peer_rate": cfg.peer_rate}
    for side, matrix in (("pro", cfg.hashjack_matrix), ("contra", cfg.contra_hashjack)):
        probs.update({f"{side} hashjack {x}->{y}": p for (x, y), p in matrix.items()})
        for x, y in matrix:
            if x not in parties or y not in parties or x == y:
                raise ConfigError(f"hashjack entry ({x}, {y}) needs two distinct configured parties")
    for name, p in probs.items():
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name} = {p} is not a probability")
    for x in parties:
        for polarity in ("pro", "contra"):
            row = sum(cfg.rate(x, polarity, y) for y in parties if y != x)
            if cfg.own_tag_rate + row > 1.0 + 1e-12:
                raise ConfigError(f"{polarity}-{x}: own_tag_rate plus hashjack rates exceed 1")


@dataclass
class GroundTruth:
    groups: dict  # account -> (party, polarity)
    hubs: dict  # (party, polarity) -> list of hub accounts
    planted: dict  # (pro X, contra Y) -> (pro rate, reference rate, implied odds ratio)


def implied_odds(p_pro: float, p_ref: float) -> float:
    if p_pro >= 1 or p_ref <= 0:
        return math.inf if p_pro > 0 else math.nan
    if p_pro <= 0:
        return 0.0
    return (p_pro / (1 - p_pro)) / (p_ref / (1 - p_ref))


def generate_corpus(config: SynthConfig, seed: int | None = None):
    """Return ``(records, truth)``; records are sorted by timestamp."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    parties = list(config.parties)
    groups = [(x, s) for x in parties for s in ("pro", "contra")]
    members = {g: [f"{g[0]}_{g[1]}_u{i:05d}" for i in range(config.pro_size if g[1] == "pro"
                                                             else config.contra_size)]
               for g in groups}
    hubs = {g: [f"{g[0]}_{g[1]}_hub{j}" for j in range(config.hub_count)] for g in groups}
    hub_p = np.arange(1, config.hub_count + 1, dtype=float) ** -config.hub_exponent
    hub_p /= hub_p.sum()
    pool = max(config.originals_per_hub, 1)

    span = int((config.window.end - config.window.start).total_seconds())
    raw = []  # (author, rt_author or None, rt_id or tweet id, tag)

    for g in groups:
        for hub in hubs[g]:
            for j in range(config.originals_per_hub):
                raw.append((hub, None, f"{hub}-{j}", g[0]))

    cluster_ids = {g: i for i, g in enumerate(groups)}
    rt_user, rt_cluster, rt_tag, rt_self = [], [], [], []
    for g in groups:
        party, polarity = g
        others = [y for y in parties if y != party]
        for pos, user in enumerate(members[g]):
            targets = [y for y in others if rng.random() < config.rate(party, polarity, y)]
            n = max(int(rng.poisson(config.retweets_per_user)), 1 + len(targets))
            tags = [party] + targets
            extra = n - len(tags)
            if extra > 0:
                u = rng.random(extra)
                pick = rng.integers(len(targets), size=extra) if targets else None
                for k in range(extra):
                    if u[k] < config.own_tag_rate:
                        tags.append(party)
                    elif targets:
                        tags.append(targets[pick[k]])
                    else:
                        tags.append(OFFTOPIC_TAG)
            for tag in tags:
                own = tag in (party, OFFTOPIC_TAG)
                rt_user.append(user)
                rt_cluster.append(cluster_ids[g] if own else cluster_ids[tag, "contra"])
                rt_tag.append(tag)
                rt_self.append(pos if own else -1)

    # retweet targets, drawn in bulk: a hub by rank weight, or a random peer
    total = len(rt_user)
    hub_idx = np.searchsorted(np.cumsum(hub_p), rng.random(total), side="right")
    hub_idx = np.minimum(hub_idx, config.hub_count - 1)
    tweet_idx = rng.integers(pool, size=total)
    use_peer = rng.random(total) < config.peer_rate
    peer_u = rng.random(total)
    for k in range(total):
        cluster = groups[rt_cluster[k]]
        peers = members[cluster]
        me = rt_self[k]
        n_choices = len(peers) - (me >= 0)
        if use_peer[k] and n_choices > 0:
            j = int(peer_u[k] * n_choices)
            if me >= 0 and j >= me:
                j += 1
            author, ref = peers[j], f"{peers[j]}-0"
        else:
            author = hubs[cluster][hub_idx[k]]
            ref = f"{author}-{tweet_idx[k]}"
        raw.append((rt_user[k], author, ref, rt_tag[k]))

    offsets = rng.integers(0, span + 1, size=len(raw))
    order = np.argsort(offsets, kind="stable")
    records = []
    for k, idx in enumerate(order):
        author, rt_author, ref, tag = raw[idx]
        ts = config.window.start + timedelta(seconds=int(offsets[idx]))
        if rt_author is None:
            records.append(TweetRecord(ref, author, frozenset([tag]), ts, text="synthetic"))
        else:
            records.append(TweetRecord(f"rt{k:07d}", author, frozenset([tag]), ts,
                                       rt_author, ref, text="synthetic"))

    accounts = {}
    for g in groups:
        for acc in members[g] + hubs[g]:
            accounts[acc] = g
    return records, GroundTruth(accounts, hubs, planted_odds(config))


def reference_rate(config: SynthConfig, x: str, y: str) -> float:
    """Expected share of X's non-pro accounts that sit in Y's contra cluster.

    The reference group is contra-X plus every account imported into X's
    network by hashjacking X. Imported contra-Y users are contra-Y members
    by construction; imported pro-Y users never are; users from a third
    party Z are when they also hashjack Y. Hub accounts are ignored.
    """
    size = {"pro": config.pro_size, "contra": config.contra_size}
    total = float(size["contra"])
    hits = size["contra"] * config.rate(x, "contra", y)
    for z in config.parties:
        if z == x:
            continue
        for polarity in ("pro", "contra"):
            imported = size[polarity] * config.rate(z, polarity, x)
            if z == y:
                share = 1.0 if polarity == "contra" else 0.0
            else:
                share = config.rate(z, polarity, y)
            total += imported
            hits += imported * share
    return hits / total if total else 0.0


def planted_odds(config: SynthConfig) -> dict:
    planted = {}
    for x in config.parties:
        for y in config.parties:
            if x != y:
                p_pro, p_ref = config.rate(x, "pro", y), reference_rate(config, x, y)
                planted[x, y] = (p_pro, p_ref, implied_odds(p_pro, p_ref))
    return planted


def read_synth_config(path) -> SynthConfig:
    """Flat ``key = value`` file; ``hashjack.X.Y = p`` sets one matrix entry.

    ``contra.X.Y = p`` sets a contra-side rate. ``parties`` is comma-separated; ``window_start``/``window_end`` are
    ISO-8601 timestamps with offset.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[synth]\n" + fh.read())
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read synth config {path}: {exc}") from exc
    types = {f.name: f.type for f in fields(SynthConfig)}
    values, matrix, contra = {}, {}, {}
    window = [DEFAULT_WINDOW.start, DEFAULT_WINDOW.end]
    try:
        for key, text in parser["synth"].items():
            text = text.strip()
            if key.startswith(("hashjack.", "contra.")):
                parts = key.split(".")
                if len(parts) != 3:
                    raise ConfigError(f"rate key must look like {parts[0]}.X.Y, got {key!r}")
                target = matrix if parts[0] == "hashjack" else contra
                target[parts[1], parts[2]] = float(text)
            elif key in ("window_start", "window_end"):
                window[key == "window_end"] = utc(text)
            elif key == "parties":
                values[key] = tuple(t.strip() for t in text.split(",") if t.strip())
            elif key in types and key not in ("hashjack_matrix", "contra_hashjack", "window"):
                values[key] = (int if types[key] == "int" else float)(text)
            else:
                raise ConfigError(f"unknown synth config key {key!r}")
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return SynthConfig(hashjack_matrix=matrix, contra_hashjack=contra,
                       window=CorpusWindow(*window), **values)


def seed_list_csv(truth: GroundTruth) -> str:
    """Hub accounts as analyst seeds: each hub marks its own cluster."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("hashtag", "account", "polarity"))
    for (party, polarity), accounts in sorted(truth.hubs.items()):
        for acc in accounts:
            writer.writerow((party, acc, polarity))
    return buf.getvalue()


def ground_truth_csv(truth: GroundTruth) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("account", "party", "polarity"))
    for acc in sorted(truth.groups):
        writer.writerow((acc, *truth.groups[acc]))
    return buf.getvalue()


def planted_odds_csv(truth: GroundTruth) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("pro_party", "contra_party", "pro_rate", "reference_rate", "implied_odds"))
    for (x, y), (p_pro, p_ref, odds) in sorted(truth.planted.items()):
        writer.writerow((x, y, f"{p_pro:.12g}", f"{p_ref:.12g}", f"{odds:.12g}"))
    return buf.getvalue()
