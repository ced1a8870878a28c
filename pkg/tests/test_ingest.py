import io
import json
from datetime import timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hashjack.errors import ConfigError, InputError
from hashjack.ingest import (DEFAULT_WINDOW, PARTY_TAGS, CorpusWindow, ParseReport, TweetRecord,
                             filter_window, ingest, load_aliases, normalize_hashtag,
                             parse_corpus, parse_line, read_corpus_files, restrict_tags,
                             serialize_corpus, slice_by_hashtag, utc)


def line(tid, author="a", tags=("afd",), ts="2018-05-30T12:00:00Z", rt=None, **extra):
    obj = {"id": tid, "author": author, "tags": list(tags), "ts": ts, **extra}
    if rt:
        obj["rt_author"], obj["rt_id"] = rt, f"{rt}-1"
    return json.dumps(obj)


def rec(tid, tags=("afd",), ts=DEFAULT_WINDOW.start, author="a", rt=None):
    return TweetRecord(tid, author, frozenset(tags), ts, rt, f"{rt}-1" if rt else None)


class TestParse:
    def test_empty_stream(self):
        records, report = parse_corpus([])
        assert records == [] and report == ParseReport()

    def test_truncated_middle_line(self):
        lines = [line("1"), line("2")[:-7], line("3")]
        records, report = parse_corpus(lines)
        assert [r.tweet_id for r in records] == ["1", "3"]
        assert report.records_malformed == 1 and report.records_ok == 2

    def test_retweet_with_two_tags(self):
        r = parse_line(line("1", tags=["AfD", "CSU"], rt="b"))
        assert r.hashtags == {"afd", "csu"}
        assert r.retweeted_author == "b" and r.retweeted_tweet_id == "b-1" and r.is_retweet

    def test_duplicates_first_wins(self):
        records, report = parse_corpus([line("1", author="x"), line("1", author="y")])
        assert [r.author for r in records] == ["x"] and report.duplicates_dropped == 1

    def test_duplicates_across_files(self, tmp_path):
        (tmp_path / "a.jsonl").write_text(line("1") + "\n")
        (tmp_path / "b.jsonl").write_text(line("1") + "\n" + line("2") + "\n")
        records, report = read_corpus_files([tmp_path / "a.jsonl", tmp_path / "b.jsonl"])
        assert len(records) == 2 and report.duplicates_dropped == 1

    @pytest.mark.parametrize("bad", [
        "[1, 2]",
        json.dumps({"id": "1", "author": "a", "tags": ["afd"], "ts": "2018-05-30T12:00:00"}),
        json.dumps({"id": "1", "author": "a", "tags": "afd", "ts": "2018-05-30T12:00:00Z"}),
        json.dumps({"id": "", "author": "a", "tags": [], "ts": "2018-05-30T12:00:00Z"}),
        json.dumps({"id": "1", "author": "a", "rt_author": "b", "tags": [],
                    "ts": "2018-05-30T12:00:00Z"}),
    ])
    def test_malformed_counted(self, bad):
        records, report = parse_corpus([bad])
        assert records == [] and report.records_malformed == 1

    def test_blank_lines_ignored(self):
        records, report = parse_corpus(["", line("1"), "   \n"])
        assert len(records) == 1 and report.records_malformed == 0

    def test_unreadable_stream(self):
        def broken():
            yield line("1")
            raise OSError("disk gone")

        with pytest.raises(InputError):
            parse_corpus(broken())

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            read_corpus_files([tmp_path / "nope.jsonl"])

    def test_timestamp_offset_to_utc(self):
        r = parse_line(line("1", ts="2018-05-28T00:00:00.750+02:00"))
        assert r.timestamp == utc("2018-05-27T22:00:00Z")


def test_normalize_hashtag_aliases():
    assert normalize_hashtag("#AfD") == "afd"
    assert normalize_hashtag("#Grüne") == "gruene"
    assert normalize_hashtag("DieGrünen") == "gruene"
    # decomposed umlaut normalizes to the composed alias key
    assert normalize_hashtag("Grüne") == "gruene"
    assert normalize_hashtag("#Grüne", aliases={}) == "grüne"


def test_load_aliases(tmp_path):
    path = tmp_path / "aliases.csv"
    path.write_text("alias,canonical\n#Bündnis90,gruene\n")
    aliases = load_aliases(path)
    assert aliases["bündnis90"] == "gruene" and aliases["grüne"] == "gruene"
    path.write_text("a,b,c\n")
    with pytest.raises(ConfigError):
        load_aliases(path)


class TestWindow:
    def test_default_window(self):
        assert DEFAULT_WINDOW.start == utc("2018-05-27T22:00:00Z")
        assert DEFAULT_WINDOW.end == utc("2018-06-04T21:59:59Z")

    def test_inclusive_bounds(self):
        w = DEFAULT_WINDOW
        records = [rec("start", ts=w.start), rec("end", ts=w.end),
                   rec("after", ts=w.end + timedelta(seconds=1)),
                   rec("before", ts=w.start - timedelta(seconds=1))]
        assert [r.tweet_id for r in filter_window(records, w)] == ["start", "end"]

    def test_reversed_window(self):
        with pytest.raises(ConfigError):
            CorpusWindow(DEFAULT_WINDOW.end, DEFAULT_WINDOW.start)


class TestSlice:
    def test_multi_tag_record_in_both(self):
        slices = slice_by_hashtag([rec("1", tags=("afd", "csu"))], PARTY_TAGS)
        assert [r.tweet_id for r in slices["afd"]] == ["1"]
        assert [r.tweet_id for r in slices["csu"]] == ["1"]

    def test_normalized_tag_matches(self):
        r = parse_line(line("1", tags=["#AfD"]))
        assert slice_by_hashtag([r], PARTY_TAGS)["afd"] == [r]

    def test_untracked_in_no_slice(self):
        slices = slice_by_hashtag([rec("1", tags=("fußball",))], PARTY_TAGS)
        assert all(not s for s in slices.values())

    def test_empty_tracked(self):
        with pytest.raises(ConfigError):
            slice_by_hashtag([rec("1")], [])

    def test_restrict_tags(self):
        kept = restrict_tags([rec("1", tags=("afd", "wetter")), rec("2", tags=("wetter",))],
                             PARTY_TAGS)
        assert [(r.tweet_id, r.hashtags) for r in kept] == [("1", {"afd"})]


def test_ingest_fixture_report(fixture_dir):
    result = ingest([fixture_dir / "corpus.jsonl"], DEFAULT_WINDOW,
                    ("afd", "csu", "spd", "gruene"))
    assert result.report.records_malformed == 1
    assert result.report.duplicates_dropped == 1
    assert result.report.outside_window == 1
    assert result.counts["retweets"] + result.counts["originals"] == len(result.records)
    assert any(r.hashtags == {"gruene"} for r in result.records)


# -- properties ----------------------------------------------------------------

tag_text = st.sampled_from(["afd", "csu", "spd", "#AfD", "Grüne", "fußball", "x"])
instants = st.integers(-86400, 9 * 86400).map(lambda s: DEFAULT_WINDOW.start + timedelta(seconds=s))
records_st = st.lists(
    st.builds(
        lambda i, author, tags, ts, rt, text: TweetRecord(
            f"id{i}", author, frozenset(normalize_hashtag(t) for t in tags), ts,
            rt, f"{rt}-x" if rt else None, text),
        st.integers(0, 10**6), st.text(min_size=1, max_size=6),
        st.sets(tag_text, min_size=1, max_size=3), instants,
        st.one_of(st.none(), st.text(min_size=1, max_size=6)),
        st.one_of(st.none(), st.text(max_size=10))),
    max_size=20, unique_by=lambda r: r.tweet_id)


@given(records_st)
def test_roundtrip_identity(records):
    parsed, report = parse_corpus(io.StringIO(serialize_corpus(records)))
    assert parsed == records and report.records_malformed == 0


def test_roundtrip_through_output_file(tmp_path):
    from hashjack.pipeline import load_records

    records = [rec("1"), TweetRecord("2", "a\u2028b", frozenset({"afd"}), DEFAULT_WINDOW.start,
                                     text="line\x85sep\r\n")]
    (tmp_path / "corpus.jsonl").write_text(serialize_corpus(records), encoding="utf-8")
    assert load_records(tmp_path) == records


@given(records_st)
def test_filter_window_idempotent(records):
    once = filter_window(records, DEFAULT_WINDOW)
    assert filter_window(once, DEFAULT_WINDOW) == once


@given(records_st)
def test_slice_sizes_cover_records(records):
    kept = restrict_tags(records, PARTY_TAGS)
    slices = slice_by_hashtag(kept, PARTY_TAGS)
    total = sum(len(s) for s in slices.values())
    assert total >= len(kept)
    assert (total == len(kept)) == all(len(r.hashtags) == 1 for r in kept)


@given(st.lists(st.tuples(*[st.integers(0, 50)] * 4), min_size=3, max_size=3))
def test_parse_report_merge_associative(counts):
    a, b, c = (ParseReport(*x) for x in counts)
    assert (a + b) + c == a + (b + c)
