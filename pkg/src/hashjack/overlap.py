"""Cross-network membership and the odds of pro-X users sitting in contra-Y clusters."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AnalysisError
from .polarity import Label

log = logging.getLogger(__name__)

SEPARATION_BETA = 15.0

# Acklam's rational approximation to the standard normal inverse CDF.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _poly(coefs, x):
    acc = 0.0
    for c in coefs:
        acc = acc * x + c
    return acc


def normal_ppf(p: float) -> float:
    """Inverse standard normal CDF: rational approximation plus one Newton step."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {p}")
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        x = _poly(_C, q) / (_poly(_D, q) * q + 1)
    elif p <= 1 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = _poly(_A, r) * q / (_poly(_B, r) * r + 1)
    else:
        q = math.sqrt(-2 * math.log(1 - p))
        x = -_poly(_C, q) / (_poly(_D, q) * q + 1)
    err = 0.5 * math.erfc(-x / math.sqrt(2)) - p
    return x - err * math.sqrt(2 * math.pi) * math.exp(x * x / 2)


def z_quantile(level: float) -> float:
    """Two-sided standard normal critical value for a confidence level."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level}")
    # lower tail: (1 - level) / 2 is exact in floating point, (1 + level) / 2 is not
    return -normal_ppf((1 - level) / 2)


@dataclass(frozen=True)
class OddsResult:
    pro_party: str
    contra_party: str
    a: int
    b: int
    c: int
    d: int
    odds_ratio: float
    ci_low: float
    ci_high: float
    corrected: bool = False

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


def odds_2x2(a, b, c, d, level=0.99, pro_party="", contra_party="") -> OddsResult:
    """Odds ratio ad/bc with a Wald interval on the log scale.

    A zero cell adds 0.5 to every cell first (Haldane-Anscombe) and sets
    ``corrected``.
    """
    if min(a, b, c, d) < 0 or a + b + c + d < 1:
        raise ValueError("cell counts must be non-negative with a positive total")
    corrected = 0 in (a, b, c, d)
    ca, cb, cc, cd = (x + 0.5 for x in (a, b, c, d)) if corrected else map(float, (a, b, c, d))
    log_or = math.log(ca) + math.log(cd) - math.log(cb) - math.log(cc)
    se = math.sqrt(1 / ca + 1 / cb + 1 / cc + 1 / cd)
    z = z_quantile(level)
    return OddsResult(pro_party, contra_party, a, b, c, d, (ca * cd) / (cb * cc),
                      math.exp(log_or - z * se), math.exp(log_or + z * se), corrected)


@dataclass(frozen=True)
class Coefficient:
    beta: float
    se: float
    odds: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_beta(cls, beta, se, z):
        return cls(beta, se, _exp(beta), _exp(beta - z * se), _exp(beta + z * se))


def _exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


@dataclass
class LogisticModel:
    outcome: str
    coefficients: dict  # predictor name -> Coefficient
    intercept: Coefficient
    n: int
    converged: bool
    iterations: int
    separated: bool = False
    diagnostic: str = ""
    dropped: list = field(default_factory=list)


def _sigmoid(eta):
    return 0.5 * (1.0 + np.tanh(0.5 * eta))


def logistic_irls(X, y, max_iter=50, tol=1e-8):
    """Newton/IRLS maximum likelihood for logistic regression.

    ``X`` must already contain the intercept column. Returns
    ``(beta, information, iterations, converged, diagnostic)``; convergence
    means max |gradient| <= ``tol``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    diagnostic = ""
    converged = False
    iterations = 0
    while True:
        p = _sigmoid(X @ beta)
        grad = X.T @ (y - p)
        info = X.T @ (X * (p * (1 - p))[:, None])
        if np.max(np.abs(grad)) <= tol:
            converged = True
            break
        if iterations == max_iter:
            diagnostic = f"no convergence after {max_iter} iterations"
            break
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            diagnostic = "singular information matrix"
            break
        if not np.all(np.isfinite(step)):
            diagnostic = "non-finite Newton step"
            break
        beta = beta + step
        iterations += 1
    return beta, info, iterations, converged, diagnostic


def fit_logistic_arrays(X, y, names, outcome="", level=0.99) -> LogisticModel:
    """Fit ``y`` on an intercept plus the columns of ``X`` (named by ``names``)."""
    X = np.asarray(X, dtype=float).reshape(len(y), -1)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        raise AnalysisError(f"{outcome}: no observations")
    if y.min() == y.max():
        raise AnalysisError(f"{outcome}: outcome is constant")
    keep = [j for j in range(X.shape[1]) if X[:, j].min() != X[:, j].max()]
    dropped = [names[j] for j in range(X.shape[1]) if j not in keep]
    design = np.column_stack([np.ones(len(y))] + [X[:, j] for j in keep])
    beta, info, iterations, converged, diagnostic = logistic_irls(design, y)
    separated = bool(np.any(np.abs(beta) > SEPARATION_BETA))
    if separated:
        converged = False
        diagnostic = (diagnostic + "; " if diagnostic else "") + \
            f"separation: |beta| > {SEPARATION_BETA:g}"
    try:
        se = np.sqrt(np.diag(np.linalg.inv(info)))
    except np.linalg.LinAlgError:
        se = np.full(len(beta), np.inf)
    se = np.where(np.isfinite(se), se, np.inf)
    z = z_quantile(level)
    coefs = {names[j]: Coefficient.from_beta(float(beta[i + 1]), float(se[i + 1]), z)
             for i, j in enumerate(keep)}
    if dropped:
        log.info("%s: constant predictors dropped: %s", outcome, ", ".join(dropped))
    return LogisticModel(outcome, coefs, Coefficient.from_beta(float(beta[0]), float(se[0]), z),
                         len(y), converged, iterations, separated, diagnostic, dropped)


@dataclass(frozen=True)
class MembershipTable:
    """Per-account pro/contra flags across all analyzed hashtag networks."""

    accounts: tuple
    parties: tuple
    pro: np.ndarray  # bool, (accounts, parties)
    contra: np.ndarray
    excluded: int = 0
    has_pro: frozenset = frozenset()
    has_contra: frozenset = frozenset()
    contra_share: dict = field(default_factory=dict)  # party -> contra size / network size

    @property
    def universe_size(self) -> int:
        return len(self.accounts)

    def column(self, kind: str, party: str) -> np.ndarray:
        j = self.parties.index(party)
        return (self.pro if kind == "pro" else self.contra)[:, j]


def membership_table(labeled) -> MembershipTable:
    """Build the table from ``(graph, partition, polarity)`` triples, one per hashtag."""
    seen_tags = set()
    flags: dict = {}
    everyone: set = set()
    has_pro, has_contra, share = set(), set(), {}
    for graph, partition, polarity in labeled:
        tag = polarity.hashtag or graph.hashtag
        if tag in seen_tags:
            raise AnalysisError(f"hashtag {tag} given twice")
        seen_tags.add(tag)
        everyone.update(partition.assignment)
        for cid, label in polarity.labels.items():
            if label is Label.UNLABELED:
                continue
            (has_pro if label is Label.PRO else has_contra).add(tag)
            if label is Label.CONTRA:
                share[tag] = partition.community_sizes[cid] / len(partition.assignment)
        for node, cid in partition.assignment.items():
            label = polarity.labels.get(cid, Label.UNLABELED)
            if label is not Label.UNLABELED:
                flags.setdefault(node, []).append((tag, label))
    parties = tuple(sorted(seen_tags))
    accounts = tuple(sorted(flags))
    pro = np.zeros((len(accounts), len(parties)), dtype=bool)
    contra = np.zeros_like(pro)
    col = {p: j for j, p in enumerate(parties)}
    for i, acc in enumerate(accounts):
        for tag, label in flags[acc]:
            (pro if label is Label.PRO else contra)[i, col[tag]] = True
    return MembershipTable(accounts, parties, pro, contra, len(everyone) - len(accounts),
                           frozenset(has_pro), frozenset(has_contra), share)


def fit_logistic(table: MembershipTable, outcome: str, level=0.99) -> LogisticModel:
    """contra_<outcome> on an intercept plus pro_X for every other party X."""
    predictors = [p for p in table.parties if p != outcome and p in table.has_pro]
    X = np.column_stack([table.column("pro", p) for p in predictors]) if predictors \
        else np.zeros((table.universe_size, 0))
    y = table.column("contra", outcome)
    return fit_logistic_arrays(X, y, [f"pro_{p}" for p in predictors], outcome, level)


def table_2x2(table: MembershipTable, pro_party: str, contra_party: str, universe="labeled"):
    x = table.column("pro", pro_party)
    y = table.column("contra", contra_party)
    if universe == "pair":
        # accounts in a labeled community of the pro party's network
        rows = x | table.column("contra", pro_party)
        x, y = x[rows], y[rows]
    elif universe != "labeled":
        raise ValueError(f"unknown universe mode {universe!r}")
    return (int(np.sum(x & y)), int(np.sum(x & ~y)), int(np.sum(~x & y)), int(np.sum(~x & ~y)))


@dataclass
class HashjackReport:
    level: float
    z: float
    universe: str
    odds: dict  # (pro X, contra Y) -> OddsResult, or an error string
    models: dict  # contra Y -> LogisticModel, or an error string
    contra_share: dict


def hashjack_matrix(table: MembershipTable, level=0.99, universe="labeled") -> HashjackReport:
    """Univariate 2x2 odds for every (pro X, contra Y), X != Y, plus one model per Y."""
    pro_parties = sorted(table.has_pro)
    contra_parties = sorted(table.has_contra)
    if len(set(pro_parties) | set(contra_parties)) < 2:
        raise AnalysisError("need at least two labeled parties for cross-network odds")
    odds, models = {}, {}
    for y in contra_parties:
        try:
            models[y] = fit_logistic(table, y, level)
        except AnalysisError as exc:
            log.warning("model for contra_%s failed: %s", y, exc)
            models[y] = str(exc)
        for x in pro_parties:
            if x == y:
                continue
            cells = table_2x2(table, x, y, universe)
            if sum(cells) == 0:
                odds[x, y] = "empty table"
                continue
            odds[x, y] = odds_2x2(*cells, level=level, pro_party=x, contra_party=y)
    return HashjackReport(level, z_quantile(level), universe, odds, models,
                          dict(sorted(table.contra_share.items())))


# -- exports -----------------------------------------------------------------

def fmt(x) -> str:
    """Stable text for floats in reports (12 significant digits)."""
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return f"{x:.12g}"
    return str(x)


def _rounded(x):
    if isinstance(x, float):
        return None if not math.isfinite(x) else float(f"{x:.12g}")
    return x


def membership_csv(table: MembershipTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["account"] + [f"{k}_{p}" for p in table.parties for k in ("pro", "contra")])
    for i, acc in enumerate(table.accounts):
        row = [acc]
        for j in range(len(table.parties)):
            row += [int(table.pro[i, j]), int(table.contra[i, j])]
        writer.writerow(row)
    return buf.getvalue()


ODDS_HEADER = ("pro_party", "contra_party", "a", "b", "c", "d", "odds", "ci_low", "ci_high",
               "corrected")


def odds_matrix_csv(report: HashjackReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ODDS_HEADER)
    for (x, y), res in sorted(report.odds.items()):
        if isinstance(res, str):
            writer.writerow((x, y, "", "", "", "", "", "", "", ""))
            continue
        writer.writerow((x, y, res.a, res.b, res.c, res.d, fmt(res.odds_ratio), fmt(res.ci_low),
                         fmt(res.ci_high), int(res.corrected)))
    return buf.getvalue()


def _coef_json(c: Coefficient) -> dict:
    return {k: _rounded(getattr(c, k)) for k in ("beta", "se", "odds", "ci_low", "ci_high")}


def models_json(report: HashjackReport) -> str:
    out = {"level": report.level, "z": _rounded(report.z), "universe": report.universe,
           "models": {}}
    for y, model in sorted(report.models.items()):
        if isinstance(model, str):
            out["models"][y] = {"error": model}
            continue
        out["models"][y] = {
            "outcome": f"contra_{y}",
            "contra_relative_size": _rounded(report.contra_share.get(y)),
            "n": model.n,
            "converged": model.converged,
            "iterations": model.iterations,
            "separated": model.separated,
            "diagnostic": model.diagnostic,
            "dropped_predictors": model.dropped,
            "intercept": _coef_json(model.intercept),
            "coefficients": {k: _coef_json(v) for k, v in sorted(model.coefficients.items())},
        }
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


COEF_HEADER = ("contra_party", "contra_relative_size", "pro_party", "source", "odds", "ci_low",
               "ci_high", "converged")


def coefficients_csv(report: HashjackReport) -> str:
    """One row per (contra Y, pro X, source) for dot-and-interval plots."""
    rows = []
    for y, model in report.models.items():
        if isinstance(model, str):
            continue
        for name, c in model.coefficients.items():
            rows.append((y, name[len("pro_"):], "multivariate", c.odds, c.ci_low, c.ci_high,
                         int(model.converged)))
    for (x, y), res in report.odds.items():
        if isinstance(res, str):
            continue
        rows.append((y, x, "univariate", res.odds_ratio, res.ci_low, res.ci_high, 1))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COEF_HEADER)
    for y, x, source, odds, lo, hi, conv in sorted(rows, key=lambda r: r[:3]):
        writer.writerow((y, fmt(report.contra_share.get(y)), x, source, fmt(odds), fmt(lo),
                         fmt(hi), conv))
    return buf.getvalue()
