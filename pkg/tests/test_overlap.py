import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import graph_from
from hashjack.community import canonical_partition
from hashjack.errors import AnalysisError
from hashjack.overlap import (fit_logistic, fit_logistic_arrays, hashjack_matrix,
                              logistic_irls, membership_csv, membership_table, models_json,
                              normal_ppf, odds_2x2, odds_matrix_csv, table_2x2, z_quantile)
from hashjack.polarity import Label, PolarityMap
from oracles import normal_quantile, wald_interval


def expand_2x2(a, b, c, d):
    """Observation arrays (x, y) realising a 2x2 table."""
    x = np.array([1] * (a + b) + [0] * (c + d), dtype=float)
    y = np.array([1] * a + [0] * b + [1] * c + [0] * d, dtype=float)
    return x, y


def network(tag, pro_members, contra_members, other=()):
    """A labeled network whose communities are exactly the given member lists."""
    groups = [list(pro_members), list(contra_members), list(other)]
    labels = {n: cid for cid, ms in enumerate(groups) for n in ms}
    edges = [(ms[i], ms[i + 1], 1) for ms in groups for i in range(len(ms) - 1)]
    edges += [(ms[0], ms[0] + "~", 1) for ms in groups if len(ms) == 1]
    g = graph_from(edges, tag)
    labels.update({n: labels[n[:-1]] for n in g.nodes if n.endswith("~")})
    part = canonical_partition(g, labels)
    polarity = {}
    for cid in part.community_sizes:
        member = part.members(cid)[0].rstrip("~")
        polarity[cid] = (Label.PRO if member in pro_members else
                         Label.CONTRA if member in contra_members else Label.UNLABELED)
    return g, part, PolarityMap(tag, polarity)


class TestZ:
    def test_values(self):
        assert z_quantile(0.99) == pytest.approx(2.575829, abs=1e-6)
        assert z_quantile(0.95) == pytest.approx(1.959964, abs=1e-6)

    def test_limit_zero(self):
        assert z_quantile(1e-12) == pytest.approx(0, abs=1e-9)

    @pytest.mark.parametrize("level", [0, 1, -0.5, 1.5])
    def test_bad_level(self, level):
        with pytest.raises(ValueError):
            z_quantile(level)

    @given(st.floats(1e-6, 1 - 1e-12))
    def test_against_high_precision(self, level):
        assert z_quantile(level) == pytest.approx(normal_quantile(level), abs=1e-6)

    @given(st.floats(1e-300, 1 - 1e-16))
    def test_ppf_inverts_cdf(self, p):
        x = normal_ppf(p)
        back = 0.5 * math.erfc(-x / math.sqrt(2))
        assert back == pytest.approx(p, rel=1e-9)


class TestOdds2x2:
    def test_nine(self):
        r = odds_2x2(30, 10, 10, 30)
        assert r.odds_ratio == pytest.approx(9.0) and not r.corrected and r.n == 80

    def test_one(self):
        assert odds_2x2(10, 10, 10, 10).odds_ratio == pytest.approx(1.0)

    def test_haldane(self):
        r = odds_2x2(5, 0, 3, 7)
        assert r.corrected and (r.a, r.b, r.c, r.d) == (5, 0, 3, 7)
        assert r.odds_ratio == pytest.approx(5.5 * 7.5 / (0.5 * 3.5))
        assert r.odds_ratio == pytest.approx(23.571, abs=1e-3)
        _, lo, hi = wald_interval(5.5, 0.5, 3.5, 7.5, z_quantile(0.99))
        assert (r.ci_low, r.ci_high) == pytest.approx((lo, hi), rel=1e-12)

    def test_interval(self):
        r = odds_2x2(12, 7, 4, 20, level=0.95)
        assert (r.odds_ratio, r.ci_low, r.ci_high) == pytest.approx(
            wald_interval(12, 7, 4, 20, 1.959963984540054), rel=1e-9)

    def test_empty(self):
        with pytest.raises(ValueError):
            odds_2x2(0, 0, 0, 0)


class TestLogistic:
    def test_single_predictor_nine(self):
        x, y = expand_2x2(30, 10, 10, 30)
        m = fit_logistic_arrays(x, y, ["pro_afd"], "csu")
        assert m.converged and m.coefficients["pro_afd"].odds == pytest.approx(9.0, abs=1e-6)

    def test_intercept_only_half(self):
        m = fit_logistic_arrays(np.zeros((10, 0)), np.array([0, 1] * 5), [], "csu")
        assert m.intercept.beta == pytest.approx(0.0, abs=1e-12) and m.converged

    def test_separation_flagged(self):
        x, y = expand_2x2(10, 0, 0, 10)
        m = fit_logistic_arrays(x, y, ["pro_afd"], "csu")
        assert m.separated and not m.converged and "separation" in m.diagnostic

    def test_constant_outcome(self):
        with pytest.raises(AnalysisError):
            fit_logistic_arrays(np.array([0.0, 1.0]), np.array([1.0, 1.0]), ["x"], "csu")

    def test_constant_predictor_dropped(self):
        x, y = expand_2x2(30, 10, 10, 30)
        X = np.column_stack([x, np.ones_like(x)])
        m = fit_logistic_arrays(X, y, ["pro_afd", "pro_spd"], "csu")
        assert m.dropped == ["pro_spd"] and list(m.coefficients) == ["pro_afd"]

    def test_gradient_at_convergence(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.ones(300), rng.integers(0, 2, (300, 3))])
        y = (rng.random(300) < 0.3 + 0.3 * X[:, 1]).astype(float)
        beta, _, _, converged, _ = logistic_irls(X, y)
        p = 1 / (1 + np.exp(-X @ beta))
        assert converged and np.max(np.abs(X.T @ (y - p))) <= 1e-8

    def test_iteration_cap(self):
        x, y = expand_2x2(30, 10, 10, 30)
        X = np.column_stack([np.ones_like(x), x])
        _, _, iterations, converged, diagnostic = logistic_irls(X, y, max_iter=1)
        assert iterations == 1 and not converged and "1 iterations" in diagnostic


def two_party_table():
    # u1, u2 sit in pro-afd and contra-csu; u3 pro-afd only; u4..u6 contra-afd
    afd = network("afd", ["u1", "u2", "u3"], ["u4", "u5", "u6"])
    csu = network("csu", ["u7", "u8"], ["u1", "u2", "u4", "u9"], ["z1", "z2"])
    return membership_table([afd, csu])


class TestMembership:
    def test_flags(self):
        t = two_party_table()
        i = t.accounts.index("u1")
        assert t.column("pro", "afd")[i] and t.column("contra", "csu")[i]
        assert not t.column("contra", "afd")[i]
        i = t.accounts.index("u3")
        assert (t.pro[i].sum() + t.contra[i].sum()) == 1

    def test_unlabeled_excluded(self):
        t = two_party_table()
        assert "z1" not in t.accounts and t.excluded >= 2

    def test_no_labels_empty(self):
        g, part, _ = network("afd", ["a"], ["b"])
        t = membership_table([(g, part, PolarityMap("afd", dict.fromkeys(part.community_sizes,
                                                                         Label.UNLABELED)))])
        assert t.universe_size == 0

    def test_duplicate_hashtag(self):
        net = network("afd", ["a"], ["b"])
        with pytest.raises(AnalysisError):
            membership_table([net, net])

    def test_never_both(self):
        t = two_party_table()
        assert not np.any(t.pro & t.contra)

    def test_2x2_universes(self):
        t = two_party_table()
        a, b, c, d = table_2x2(t, "afd", "csu")
        assert (a, b) == (2, 1) and a + b + c + d == t.universe_size
        assert table_2x2(t, "afd", "csu", "pair") == (2, 1, 1, 2)
        with pytest.raises(ValueError):
            table_2x2(t, "afd", "csu", "everyone")

    def test_matrix_and_exports(self):
        t = two_party_table()
        report = hashjack_matrix(t, 0.99)
        assert set(report.odds) == {("afd", "csu"), ("csu", "afd")}
        assert report.z == pytest.approx(2.575829, abs=1e-6)
        lines = odds_matrix_csv(report).splitlines()
        assert lines[0] == "pro_party,contra_party,a,b,c,d,odds,ci_low,ci_high,corrected"
        assert membership_csv(t).splitlines()[0] == "account,pro_afd,contra_afd,pro_csu,contra_csu"
        models = json.loads(models_json(report))
        assert set(models["models"]) == {"afd", "csu"}

    def test_matrix_needs_two_parties(self):
        with pytest.raises(AnalysisError):
            hashjack_matrix(membership_table([network("afd", ["a"], ["b"])]))

    def test_fit_logistic_table(self):
        m = fit_logistic(two_party_table(), "csu")
        assert list(m.coefficients) == ["pro_afd"] and m.outcome == "csu"


# -- properties ----------------------------------------------------------------

cells = st.integers(1, 60)


@given(cells, cells, cells, cells)
def test_logistic_matches_closed_form(a, b, c, d):
    x, y = expand_2x2(a, b, c, d)
    m = fit_logistic_arrays(x, y, ["x"], "y")
    assert m.converged
    assert m.coefficients["x"].odds == pytest.approx(odds_2x2(a, b, c, d).odds_ratio, rel=1e-6)
    # Wald intervals agree too: the information-matrix SE equals sqrt(1/a+1/b+1/c+1/d)
    r = odds_2x2(a, b, c, d)
    assert m.coefficients["x"].ci_low == pytest.approx(r.ci_low, rel=1e-6)


@given(cells, cells, cells, cells)
def test_swap_rows_inverts(a, b, c, d):
    assert odds_2x2(c, d, a, b).odds_ratio == pytest.approx(1 / odds_2x2(a, b, c, d).odds_ratio,
                                                            rel=1e-12)


@given(cells, cells, cells, cells, st.floats(0.5, 0.98), st.floats(0.001, 0.019))
def test_ci_width_monotone(a, b, c, d, level, bump):
    r = odds_2x2(a, b, c, d, level=level)
    wider = odds_2x2(a, b, c, d, level=level + bump)
    assert wider.ci_low < r.ci_low and wider.ci_high > r.ci_high
    assert r.ci_low <= r.odds_ratio <= r.ci_high
    for k in range(4):
        bigger = [a, b, c, d]
        bigger[k] += 5
        s = odds_2x2(*bigger, level=level)
        assert math.log(s.ci_high / s.ci_low) < math.log(r.ci_high / r.ci_low)


@given(st.integers(0, 10**6))
def test_null_membership_covers_one(seed):
    rng = np.random.default_rng(seed)
    x = rng.random(400) < 0.4
    y = rng.random(400) < 0.3
    a, b, c, d = (int(np.sum(x & y)), int(np.sum(x & ~y)), int(np.sum(~x & y)),
                  int(np.sum(~x & ~y)))
    r = odds_2x2(a, b, c, d)
    # 99% intervals: exceedances are allowed, but far outliers would flag a biased estimator
    assert r.ci_low < 2.5 and r.ci_high > 0.4


def test_null_coverage_rate():
    rng = np.random.default_rng(1234)
    covered = 0
    for _ in range(400):
        x = rng.random(500) < 0.4
        y = rng.random(500) < 0.3
        r = odds_2x2(int(np.sum(x & y)), int(np.sum(x & ~y)), int(np.sum(~x & y)),
                     int(np.sum(~x & ~y)))
        covered += r.ci_low <= 1 <= r.ci_high
    assert covered / 400 >= 0.97
