"""Weighted directed retweet networks, one per hashtag."""
from __future__ import annotations

import csv
import io
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from xml.sax.saxutils import quoteattr


@dataclass(frozen=True)
class RetweetGraph:
    """Directed retweeter -> original-author graph with integer retweet counts.

    ``nodes`` is sorted, so ``node_index`` (the position in ``nodes``) is stable
    across runs and independent of record order.
    """

    hashtag: str
    nodes: tuple
    edges: dict  # (retweeter, author) -> weight
    self_loops_dropped: int = 0
    node_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "node_index", {n: i for i, n in enumerate(self.nodes)})

    @classmethod
    def from_edges(cls, hashtag: str, edges, self_loops_dropped: int = 0) -> "RetweetGraph":
        edges = {(u, v): int(w) for (u, v), w in edges.items() if u != v}
        nodes = {n for pair in edges for n in pair}
        return cls(hashtag, tuple(sorted(nodes)), dict(sorted(edges.items())), self_loops_dropped)

    def __len__(self):
        return len(self.nodes)

    @property
    def total_weight(self) -> int:
        return sum(self.edges.values())

    def in_weights(self) -> dict:
        weights = dict.fromkeys(self.nodes, 0)
        for (_, v), w in self.edges.items():
            weights[v] += w
        return weights

    def undirected(self) -> dict:
        """Symmetrized adjacency: node -> {neighbor: w_uv + w_vu}."""
        adj = {n: {} for n in self.nodes}
        for (u, v), w in self.edges.items():
            adj[u][v] = adj[u].get(v, 0) + w
            adj[v][u] = adj[v].get(u, 0) + w
        return adj

    def subgraph(self, keep) -> "RetweetGraph":
        keep = set(keep)
        edges = {(u, v): w for (u, v), w in self.edges.items() if u in keep and v in keep}
        return RetweetGraph(self.hashtag, tuple(n for n in self.nodes if n in keep), edges,
                            self.self_loops_dropped)


def build_retweet_graph(records, hashtag: str = "") -> RetweetGraph:
    """Aggregate retweets into weighted edges; self-retweets are dropped and counted."""
    counts: Counter = Counter()
    self_loops = 0
    for rec in records:
        if rec.retweeted_author is None:
            continue
        if rec.retweeted_author == rec.author:
            self_loops += 1
            continue
        counts[rec.author, rec.retweeted_author] += 1
    return RetweetGraph.from_edges(hashtag, counts, self_loops)


def top_retweeted(graph: RetweetGraph, k: int = 50, among=None):
    """Accounts ranked by weighted in-degree, ties lexicographic.

    ``among`` restricts the ranking to a subset of nodes while keeping
    in-degrees measured on the whole graph.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    weights = graph.in_weights()
    pool = weights.items() if among is None else ((n, weights[n]) for n in among)
    return sorted(pool, key=lambda kv: (-kv[1], kv[0]))[:k]


def weak_components(graph: RetweetGraph) -> list:
    """Weakly connected components as sorted node lists (union-find)."""
    parent = {n: n for n in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in graph.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups = defaultdict(list)
    for n in graph.nodes:
        groups[find(n)].append(n)
    return sorted(groups.values(), key=lambda c: (-len(c), c[0]))


def largest_component(graph: RetweetGraph) -> RetweetGraph:
    comps = weak_components(graph)
    if not comps:
        return graph
    return graph.subgraph(comps[0])


# -- exports ---------------------------------------------------------------

EDGE_HEADER = ("source", "target", "weight")


def edges_csv(graph: RetweetGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for (u, v), w in sorted(graph.edges.items()):
        writer.writerow((u, v, w))
    return buf.getvalue()


def read_edges_csv(text: str, hashtag: str = "") -> RetweetGraph:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is not None and tuple(header) != EDGE_HEADER:
        raise ValueError(f"unexpected edge list header {header}")
    edges = {(u, v): int(w) for u, v, w in reader}
    return RetweetGraph.from_edges(hashtag, edges)


def graphml(graph: RetweetGraph, node_attrs: dict | None = None) -> str:
    """GraphML text with edge weights; ``node_attrs`` maps attr name -> (type, {node: value})."""
    node_attrs = node_attrs or {}
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">']
    for name, (typ, _) in node_attrs.items():
        out.append(f'  <key id={quoteattr(name)} for="node" attr.name={quoteattr(name)} '
                   f'attr.type="{typ}"/>')
    out.append('  <key id="weight" for="edge" attr.name="weight" attr.type="int"/>')
    out.append(f'  <graph id={quoteattr(graph.hashtag or "g")} edgedefault="directed">')
    for n in graph.nodes:
        data = [(name, values[n]) for name, (_, values) in node_attrs.items() if n in values]
        if not data:
            out.append(f"    <node id={quoteattr(n)}/>")
            continue
        out.append(f"    <node id={quoteattr(n)}>")
        for name, value in data:
            out.append(f"      <data key={quoteattr(name)}>{_xml_value(value)}</data>")
        out.append("    </node>")
    for (u, v), w in sorted(graph.edges.items()):
        out.append(f'    <edge source={quoteattr(u)} target={quoteattr(v)}>'
                   f'<data key="weight">{w}</data></edge>')
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def _xml_value(value) -> str:
    from xml.sax.saxutils import escape

    if isinstance(value, float):
        return repr(value)
    return escape(str(value))
