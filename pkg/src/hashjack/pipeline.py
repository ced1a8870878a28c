"""Stage orchestration: ingest -> graphs -> communities -> labels -> overlap -> layout.

Each stage returns the files it produces as ``{relative path: text}``. The
``pipeline`` command computes every core stage in memory before writing
anything, so a core failure leaves no partial bundle. Stage-by-stage commands
read upstream files back from the output directory and write the same files.
"""
from __future__ import annotations

import hashlib
import io
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from . import MANIFEST_SCHEMA_VERSION, __version__
from .community import (communities_csv, louvain, read_communities_csv, summary_line)
from .config import PipelineConfig, derive_seed, sha256_file
from .errors import AnalysisError, HashjackError, InputError
from .graph import build_retweet_graph, edges_csv, graphml, largest_component, read_edges_csv
from .ingest import ingest, load_aliases, parse_corpus, serialize_corpus, slice_by_hashtag
from .layout import forceatlas2, layout_csv, svg
from .overlap import (coefficients_csv, hashjack_matrix, membership_csv, membership_table,
                      models_json, odds_matrix_csv)
from .polarity import (Label, SeedList, label_clusters, polarity_csv, read_annotations,
                       read_polarity_csv, read_seed_file, sentiment_agreement, sentiment_table,
                       top_accounts_csv, top_accounts_report)

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def check_inputs(cfg: PipelineConfig) -> None:
    """Fail early (before any output) when a configured input is missing."""
    if not cfg.inputs:
        raise InputError("no input corpus files configured")
    for path in list(cfg.inputs) + [cfg.alias_file, cfg.seeds_path, cfg.annotations_path]:
        if path is not None and not os.path.isfile(path):
            raise InputError(f"input file not found: {path}")


# -- in-memory stages ----------------------------------------------------------

def build_graphs(records, tags) -> dict:
    return {tag: build_retweet_graph(recs, tag)
            for tag, recs in slice_by_hashtag(records, tags).items()}


def analyzed_graph(graph, cfg: PipelineConfig):
    return largest_component(graph) if cfg.giant_only else graph


def detect_communities(graphs: dict, cfg: PipelineConfig) -> dict:
    return {tag: louvain(analyzed_graph(g, cfg),
                         cfg.louvain_params(derive_seed(cfg.seed, "community", tag)))
            for tag, g in graphs.items()}


def label_networks(partitions: dict, seeds: dict) -> dict:
    out = {}
    for tag, part in partitions.items():
        seed_list = seeds.get(tag, SeedList(tag))
        if not seed_list.seeds:
            log.warning("%s: no seed accounts; all communities unlabeled", tag)
        out[tag] = label_clusters(part, seed_list)
    return out


def cross_network(graphs, partitions, polarities, cfg: PipelineConfig):
    labeled = [(graphs[t], partitions[t], polarities[t]) for t in sorted(partitions)]
    table = membership_table(labeled)
    return table, hashjack_matrix(table, cfg.level, cfg.universe)


@dataclass
class Analysis:
    graphs: dict
    partitions: dict
    polarities: dict
    table: object
    report: object


def analyze(records, cfg: PipelineConfig, seeds: dict) -> Analysis:
    """Core analysis on already-ingested records, without touching the filesystem."""
    graphs = build_graphs(records, cfg.tags)
    partitions = detect_communities(graphs, cfg)
    polarities = label_networks(partitions, seeds)
    analyzed = {t: analyzed_graph(g, cfg) for t, g in graphs.items()}
    table, report = cross_network(analyzed, partitions, polarities, cfg)
    return Analysis(graphs, partitions, polarities, table, report)


# -- file-producing stages -----------------------------------------------------

def stage_ingest(cfg: PipelineConfig):
    aliases = load_aliases(cfg.alias_file) if cfg.alias_file else None
    result = ingest(cfg.inputs, cfg.window, cfg.tags, aliases)
    per_tag = {tag: len(recs) for tag, recs in slice_by_hashtag(result.records, cfg.tags).items()}
    report = {
        "records_ok": result.report.records_ok,
        "records_malformed": result.report.records_malformed,
        "duplicates_dropped": result.report.duplicates_dropped,
        "outside_window": result.report.outside_window,
        "untracked": result.untracked,
        "kept": len(result.records),
        **result.counts,
        "per_tag": per_tag,
    }
    files = {"corpus.jsonl": serialize_corpus(result.records), "ingest_report.json": _dump(report)}
    return files, result.records


def stage_graph(cfg: PipelineConfig, records):
    graphs = build_graphs(records, cfg.tags)
    files = {}
    for tag, g in graphs.items():
        files[f"{tag}/edges.csv"] = edges_csv(g)
        files[f"{tag}/graph.graphml"] = graphml(g)
    return files, graphs


def stage_communities(cfg: PipelineConfig, graphs: dict):
    partitions = detect_communities(graphs, cfg)
    files = {}
    for tag, part in partitions.items():
        files[f"{tag}/communities.csv"] = communities_csv(part)
        files[f"{tag}/communities_summary.txt"] = summary_line(analyzed_graph(graphs[tag], cfg), part)
    return files, partitions


def sentiment_report(cfg: PipelineConfig, records, partitions, polarities) -> dict:
    tag = cfg.sentiment_hashtag
    if tag not in partitions:
        raise AnalysisError(f"sentiment hashtag {tag} is not tracked")
    part, pol = partitions[tag], polarities[tag]
    by_id = {rec.tweet_id: rec for rec in records}
    rows, unmatched, unlabeled = [], 0, 0
    annotations = read_annotations(cfg.annotations_path)
    for tweet_id, sentiment in annotations:
        rec = by_id.get(tweet_id)
        if rec is None or tag not in rec.hashtags:
            unmatched += 1
            continue
        label = pol.labels.get(part.assignment.get(rec.author), Label.UNLABELED)
        if label is Label.UNLABELED:
            unlabeled += 1
            continue
        rows.append((label, sentiment))
    counts, dropped = sentiment_table(rows)
    return {
        "hashtag": tag,
        "annotations": len(annotations),
        "unmatched": unmatched,
        "unlabeled": unlabeled,
        "unclear_dropped": dropped,
        "used": sum(counts.values()),
        "table": {f"{lab.value}/{sent.value}": n for (lab, sent), n in sorted(counts.items())},
        "correlation": round(sentiment_agreement(rows), 12),
    }


def stage_label(cfg: PipelineConfig, graphs, partitions, records=None):
    seeds = read_seed_file(cfg.seeds_path) if cfg.seeds_path else {}
    polarities = label_networks(partitions, seeds)
    files = {}
    for tag, part in partitions.items():
        files[f"{tag}/polarity.csv"] = polarity_csv(polarities[tag], part)
        report = top_accounts_report(graphs[tag], part, cfg.top_k)
        files[f"{tag}/top_accounts.csv"] = top_accounts_csv(report)
    if cfg.annotations_path and records is not None:
        try:
            files["sentiment.json"] = _dump(sentiment_report(cfg, records, partitions, polarities))
        except (HashjackError, ValueError) as exc:
            log.warning("sentiment agreement skipped: %s", exc)
    return files, polarities


def stage_overlap(cfg: PipelineConfig, graphs, partitions, polarities):
    analyzed = {t: analyzed_graph(g, cfg) for t, g in graphs.items()}
    table, report = cross_network(analyzed, partitions, polarities, cfg)
    files = {
        "membership.csv": membership_csv(table),
        "odds_matrix.csv": odds_matrix_csv(report),
        "models.json": models_json(report),
        "coefficients.csv": coefficients_csv(report),
    }
    return files, (table, report)


def stage_layout(cfg: PipelineConfig, graphs, partitions, polarities, svg_out=False):
    files = {}
    for tag in sorted(graphs):
        g = analyzed_graph(graphs[tag], cfg)
        try:
            result = forceatlas2(g, cfg.layout_params(derive_seed(cfg.seed, "layout", tag)))
        except (FloatingPointError, ValueError) as exc:
            log.warning("%s: layout failed: %s", tag, exc)
            continue
        part, pol = partitions.get(tag), polarities.get(tag)
        files[f"{tag}/layout.csv"] = layout_csv(result, part, pol)
        attrs = {
            "x": ("double", {n: round(p[0], 6) for n, p in result.positions.items()}),
            "y": ("double", {n: round(p[1], 6) for n, p in result.positions.items()}),
        }
        if part is not None:
            attrs["community"] = ("int", dict(part.assignment))
            if pol is not None:
                attrs["polarity"] = ("string", {n: pol.labels[c].value
                                                for n, c in part.assignment.items()})
        files[f"{tag}/layout.graphml"] = graphml(g, attrs)
        if svg_out:
            files[f"{tag}/layout.svg"] = svg(result, g, part)
    return files


# -- loaders for stage-by-stage runs ---------------------------------------------

def _read(out: Path, rel: str) -> str:
    try:
        return (out / rel).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"missing upstream file {out / rel}: {exc}") from exc


def load_records(out: Path):
    records, report = parse_corpus(io.StringIO(_read(out, "corpus.jsonl"), newline="\n"))
    if report.records_malformed:
        raise InputError(f"{out / 'corpus.jsonl'} has {report.records_malformed} malformed lines")
    return records


def _parsed(out: Path, rel: str, parse):
    try:
        return parse(_read(out, rel))
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"malformed upstream file {out / rel}: {exc}") from exc


def load_graphs(out: Path, cfg: PipelineConfig) -> dict:
    return {tag: _parsed(out, f"{tag}/edges.csv", lambda t, tag=tag: read_edges_csv(t, tag))
            for tag in sorted(cfg.tags)}


def load_partitions(out: Path, cfg: PipelineConfig, graphs) -> dict:
    return {tag: _parsed(out, f"{tag}/communities.csv",
                         lambda t, g=g: read_communities_csv(t, analyzed_graph(g, cfg), cfg.resolution))
            for tag, g in graphs.items()}


def load_polarities(out: Path, partitions) -> dict:
    return {tag: _parsed(out, f"{tag}/polarity.csv",
                         lambda t, tag=tag, p=part: read_polarity_csv(t, tag, p))
            for tag, part in partitions.items()}


# -- writing -----------------------------------------------------------------

def write_files(out: Path, files: dict) -> None:
    for rel, text in sorted(files.items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def build_manifest(out: Path, cfg: PipelineConfig) -> dict:
    from .overlap import z_quantile

    outputs = {}
    for path in sorted(p for p in out.rglob("*") if p.is_file() and p.name != MANIFEST):
        outputs[path.relative_to(out).as_posix()] = sha256_file(path)
    inputs = {}
    for path in list(cfg.inputs) + [cfg.alias_file, cfg.seeds_path, cfg.annotations_path]:
        if path is not None and os.path.isfile(path):
            inputs[os.path.basename(path)] = sha256_file(path)
    digest = hashlib.sha256("".join(f"{k} {v}\n" for k, v in outputs.items()).encode())
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "package_version": __version__,
        "config": cfg.echo(),
        "z": round(z_quantile(cfg.level), 12),
        "inputs": inputs,
        "outputs": outputs,
        "bundle_checksum": digest.hexdigest(),
    }


def write_manifest(out: Path, cfg: PipelineConfig) -> dict:
    manifest = build_manifest(out, cfg)
    (out / MANIFEST).write_text(_dump(manifest), encoding="utf-8")
    return manifest


def run_pipeline(cfg: PipelineConfig, svg_out: bool = False) -> dict:
    """Run every stage and write the report bundle; returns the manifest."""
    cfg.validate()
    check_inputs(cfg)
    out = Path(cfg.output_dir)
    files, records = stage_ingest(cfg)
    more, graphs = stage_graph(cfg, records)
    files.update(more)
    more, partitions = stage_communities(cfg, graphs)
    files.update(more)
    more, polarities = stage_label(cfg, graphs, partitions, records)
    files.update(more)
    more, _ = stage_overlap(cfg, graphs, partitions, polarities)
    files.update(more)
    if cfg.layout:
        try:
            files.update(stage_layout(cfg, graphs, partitions, polarities, svg_out))
        except Exception as exc:  # optional stage: never fatal
            log.warning("layout stage failed: %s", exc)
    out.mkdir(parents=True, exist_ok=True)
    write_files(out, files)
    return write_manifest(out, cfg)
