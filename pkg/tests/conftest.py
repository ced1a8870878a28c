from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hashjack.graph import RetweetGraph

FIXTURES = Path(__file__).parent / "fixtures"
GOLDEN = Path(__file__).parent / "golden"

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def graph_from(edges, hashtag="t") -> RetweetGraph:
    """Directed graph from ``(source, target, weight)`` triples."""
    return RetweetGraph.from_edges(hashtag, {(u, v): w for u, v, w in edges})


def clique_bridge(k=5, cliques=2, bridge_weight=1, prefix=("a", "b", "c", "d")) -> RetweetGraph:
    """``cliques`` complete graphs of size k joined in a chain by single edges."""
    edges = []
    for c in range(cliques):
        names = [f"{prefix[c]}{i}" for i in range(k)]
        edges += [(u, v, 1) for i, u in enumerate(names) for v in names[i + 1:]]
        if c:
            edges.append((f"{prefix[c - 1]}0", names[0], bridge_weight))
    return graph_from(edges)


@pytest.fixture
def fixture_dir() -> Path:
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: int(c.split()[0])):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}")
