"""Corpus ingestion: parse line-delimited tweet records, window and slice them."""
from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping

from .errors import ConfigError, InputError

log = logging.getLogger(__name__)

PARTY_TAGS = ("afd", "cdu", "csu", "fdp", "gruene", "linke", "spd")

DEFAULT_ALIASES = {"gruene": "gruene", "grüne": "gruene", "diegrünen": "gruene"}


def utc(text: str) -> datetime:
    """Parse an ISO-8601 timestamp carrying an offset into a UTC instant."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp without offset: {text!r}")
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def normalize_hashtag(tag: str, aliases: Mapping[str, str] | None = None) -> str:
    tag = unicodedata.normalize("NFC", tag.strip()).lstrip("#").lower()
    if aliases is None:
        aliases = DEFAULT_ALIASES
    return aliases.get(tag, tag)


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author: str
    hashtags: frozenset
    timestamp: datetime
    retweeted_author: str | None = None
    retweeted_tweet_id: str | None = None
    text: str | None = None

    def __post_init__(self):
        if self.retweeted_author is not None and self.retweeted_tweet_id is None:
            raise ValueError(f"retweet {self.tweet_id} lacks the retweeted tweet id")

    @property
    def is_retweet(self) -> bool:
        return self.retweeted_author is not None

    def to_json(self) -> str:
        obj = {"id": self.tweet_id, "author": self.author}
        if self.retweeted_author is not None:
            obj["rt_author"] = self.retweeted_author
            obj["rt_id"] = self.retweeted_tweet_id
        obj["tags"] = sorted(self.hashtags)
        obj["ts"] = self.timestamp.isoformat()
        if self.text is not None:
            obj["text"] = self.text
        return json.dumps(obj, ensure_ascii=False)


@dataclass(frozen=True)
class CorpusWindow:
    start: datetime
    end: datetime

    def __post_init__(self):
        if self.start > self.end:
            raise ConfigError(f"window start {self.start} is after end {self.end}")

    def __contains__(self, ts: datetime) -> bool:
        return self.start <= ts <= self.end


# May 28th 00:00:00 CEST through June 4th 2018 23:59:59 CEST, in UTC.
DEFAULT_WINDOW = CorpusWindow(utc("2018-05-27T22:00:00Z"), utc("2018-06-04T21:59:59Z"))


@dataclass
class ParseReport:
    records_ok: int = 0
    records_malformed: int = 0
    duplicates_dropped: int = 0
    outside_window: int = 0

    def __add__(self, other: "ParseReport") -> "ParseReport":
        return ParseReport(
            self.records_ok + other.records_ok,
            self.records_malformed + other.records_malformed,
            self.duplicates_dropped + other.duplicates_dropped,
            self.outside_window + other.outside_window,
        )


def _optional_str(obj: dict, key: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str) or not value:
        raise ValueError(f"{key} must be a non-empty string")
    return value


def parse_line(line: str, aliases: Mapping[str, str] | None = None) -> TweetRecord:
    """Parse one input line; raises ValueError (or KeyError/TypeError) when malformed."""
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    tweet_id, author = obj["id"], obj["author"]
    if not (isinstance(tweet_id, str) and tweet_id and isinstance(author, str) and author):
        raise ValueError("id and author must be non-empty strings")
    tags = obj["tags"]
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise ValueError("tags must be an array of strings")
    text = obj.get("text")
    if text is not None and not isinstance(text, str):
        raise ValueError("text must be a string")
    return TweetRecord(
        tweet_id=tweet_id,
        author=author,
        hashtags=frozenset(normalize_hashtag(t, aliases) for t in tags if t.strip("# ")),
        timestamp=utc(obj["ts"]),
        retweeted_author=_optional_str(obj, "rt_author"),
        retweeted_tweet_id=_optional_str(obj, "rt_id"),
        text=text,
    )


def parse_corpus(stream: Iterable[str], aliases: Mapping[str, str] | None = None):
    """Parse a line-delimited record stream.

    Malformed lines and duplicate tweet ids (first occurrence wins) are counted
    in the returned ParseReport, never raised. Blank lines are ignored.
    """
    records: list[TweetRecord] = []
    report = ParseReport()
    seen: set[str] = set()
    try:
        for lineno, line in enumerate(stream, 1):
            if not line.strip():
                continue
            try:
                rec = parse_line(line, aliases)
            except (ValueError, KeyError, TypeError) as exc:
                report.records_malformed += 1
                log.debug("line %d malformed: %s", lineno, exc)
                continue
            if rec.tweet_id in seen:
                report.duplicates_dropped += 1
                continue
            seen.add(rec.tweet_id)
            records.append(rec)
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read corpus stream: {exc}") from exc
    report.records_ok = len(records)
    if report.duplicates_dropped:
        log.warning("dropped %d duplicate tweet ids", report.duplicates_dropped)
    return records, report


def serialize_corpus(records: Iterable[TweetRecord]) -> str:
    return "".join(rec.to_json() + "\n" for rec in records)


def filter_window(records: Iterable[TweetRecord], window: CorpusWindow) -> list[TweetRecord]:
    return [rec for rec in records if rec.timestamp in window]


def restrict_tags(records: Iterable[TweetRecord], tracked) -> list[TweetRecord]:
    """Drop untracked hashtags from each record, and records left with none."""
    tracked = frozenset(tracked)
    out = []
    for rec in records:
        tags = rec.hashtags & tracked
        if not tags:
            continue
        if tags != rec.hashtags:
            rec = TweetRecord(rec.tweet_id, rec.author, tags, rec.timestamp,
                              rec.retweeted_author, rec.retweeted_tweet_id, rec.text)
        out.append(rec)
    return out


def slice_by_hashtag(records: Iterable[TweetRecord], tracked) -> dict[str, list[TweetRecord]]:
    """Map each tracked hashtag to the records carrying it (multi-tag records repeat)."""
    tracked = set(tracked)
    if not tracked:
        raise ConfigError("no tracked hashtags given; nothing to analyze")
    slices: dict[str, list[TweetRecord]] = {tag: [] for tag in sorted(tracked)}
    for rec in records:
        for tag in rec.hashtags:
            if tag in slices:
                slices[tag].append(rec)
    return slices


def load_aliases(path) -> dict[str, str]:
    """Read an alias table: CSV lines ``alias,canonical`` (header optional); merged over the defaults."""
    import csv

    aliases = dict(DEFAULT_ALIASES)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.reader(fh):
                if not row:
                    continue
                if len(row) != 2:
                    raise ConfigError(f"{path}: alias rows need exactly two fields, got {row}")
                alias, canonical = (normalize_hashtag(x, {}) for x in row)
                if (alias, canonical) == ("alias", "canonical"):
                    continue
                aliases[alias] = canonical
    except OSError as exc:
        raise InputError(f"cannot read alias file {path}: {exc}") from exc
    return aliases


def read_corpus_files(paths, aliases=None):
    """Parse several corpus files as one stream so duplicates are detected across files."""

    def lines():
        for path in paths:
            try:
                with open(path, encoding="utf-8") as fh:
                    yield from fh
            except OSError as exc:
                raise InputError(f"cannot read {path}: {exc}") from exc

    return parse_corpus(lines(), aliases)


@dataclass
class IngestResult:
    records: list
    report: ParseReport
    untracked: int = 0
    counts: dict = field(default_factory=dict)


def ingest(paths, window: CorpusWindow, tracked, aliases=None) -> IngestResult:
    """Parse, window and tag-restrict a corpus; the records feed every later stage."""
    records, report = read_corpus_files(paths, aliases)
    windowed = filter_window(records, window)
    report.outside_window = len(records) - len(windowed)
    kept = restrict_tags(windowed, tracked)
    retweets = sum(rec.is_retweet for rec in kept)
    return IngestResult(
        records=kept,
        report=report,
        untracked=len(windowed) - len(kept),
        counts={"retweets": retweets, "originals": len(kept) - retweets},
    )
