"""ForceAtlas2 layout for retweet networks (exact or Barnes-Hut repulsion)."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph import RetweetGraph

BARNES_HUT_THRESHOLD = 10_000
_MAX_DEPTH = 32
_MIN_D2 = 1e-12


@dataclass(frozen=True)
class LayoutParams:
    scaling: float = 2.0
    gravity: float = 1.0
    linlog: bool = False
    iterations: int = 1000
    seed: int = 0
    tolerance: float = 1.0
    barnes_hut: bool | None = None  # None: only above BARNES_HUT_THRESHOLD nodes
    theta: float = 1.2
    debug: bool = False

    def __post_init__(self):
        if self.scaling <= 0 or self.tolerance <= 0 or self.theta <= 0:
            raise ValueError("scaling, tolerance and theta must be positive")
        if self.gravity < 0:
            raise ValueError("gravity must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")


@dataclass
class LayoutResult:
    positions: dict  # node -> (x, y)
    iterations_run: int
    final_total_swinging: float


@njit(cache=True)
def _repulsion_exact(x, y, mass, kr, fx, fy):
    n = x.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            d2 = dx * dx + dy * dy
            if d2 > 0.0:
                f = kr * mass[i] * mass[j] / max(d2, _MIN_D2)
                fx[i] += dx * f
                fy[i] += dy * f
                fx[j] -= dx * f
                fy[j] -= dy * f


@njit(cache=True)
def _build_quadtree(x, y, mass):
    """Quadtree over the bodies.

    Cell state: ``head`` is -1 for an internal cell, else the first body of
    the leaf's chain (``nxt`` links further bodies that share a max-depth leaf).
    """
    n = x.shape[0]
    cap = 4 * n + 16
    cx = np.empty(cap)
    cy = np.empty(cap)
    half = np.empty(cap)
    cm = np.zeros(cap)
    cmx = np.zeros(cap)
    cmy = np.zeros(cap)
    child = np.full((cap, 4), -1, dtype=np.int64)
    head = np.full(cap, -1, dtype=np.int64)
    depth = np.zeros(cap, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)

    x0, x1, y0, y1 = x.min(), x.max(), y.min(), y.max()
    cx[0] = 0.5 * (x0 + x1)
    cy[0] = 0.5 * (y0 + y1)
    half[0] = 0.5 * max(x1 - x0, y1 - y0) * 1.0001 + 1e-9
    head[0] = 0
    cm[0] = mass[0]
    cmx[0] = mass[0] * x[0]
    cmy[0] = mass[0] * y[0]
    used = 1

    for b in range(1, n):
        cell = 0
        while True:
            if used + 2 >= cap:
                new_cap = 2 * cap
                cx = np.concatenate((cx, np.empty(new_cap - cap)))
                cy = np.concatenate((cy, np.empty(new_cap - cap)))
                half = np.concatenate((half, np.empty(new_cap - cap)))
                cm = np.concatenate((cm, np.zeros(new_cap - cap)))
                cmx = np.concatenate((cmx, np.zeros(new_cap - cap)))
                cmy = np.concatenate((cmy, np.zeros(new_cap - cap)))
                child = np.concatenate((child, np.full((new_cap - cap, 4), -1, dtype=np.int64)))
                head = np.concatenate((head, np.full(new_cap - cap, -1, dtype=np.int64)))
                depth = np.concatenate((depth, np.zeros(new_cap - cap, dtype=np.int64)))
                cap = new_cap
            h = head[cell]
            if h >= 0:
                if depth[cell] >= _MAX_DEPTH:
                    nxt[b] = h
                    head[cell] = b
                    cm[cell] += mass[b]
                    cmx[cell] += mass[b] * x[b]
                    cmy[cell] += mass[b] * y[b]
                    break
                # split the single-body leaf
                head[cell] = -1
                q = (1 if x[h] >= cx[cell] else 0) + (2 if y[h] >= cy[cell] else 0)
                c = used
                used += 1
                hh = 0.5 * half[cell]
                cx[c] = cx[cell] + (hh if q & 1 else -hh)
                cy[c] = cy[cell] + (hh if q & 2 else -hh)
                half[c] = hh
                depth[c] = depth[cell] + 1
                head[c] = h
                cm[c] = mass[h]
                cmx[c] = mass[h] * x[h]
                cmy[c] = mass[h] * y[h]
                child[cell, q] = c
            cm[cell] += mass[b]
            cmx[cell] += mass[b] * x[b]
            cmy[cell] += mass[b] * y[b]
            q = (1 if x[b] >= cx[cell] else 0) + (2 if y[b] >= cy[cell] else 0)
            c = child[cell, q]
            if c == -1:
                c = used
                used += 1
                hh = 0.5 * half[cell]
                cx[c] = cx[cell] + (hh if q & 1 else -hh)
                cy[c] = cy[cell] + (hh if q & 2 else -hh)
                half[c] = hh
                depth[c] = depth[cell] + 1
                head[c] = b
                cm[c] = mass[b]
                cmx[c] = mass[b] * x[b]
                cmy[c] = mass[b] * y[b]
                child[cell, q] = c
                break
            cell = c
    return half, cm, cmx, cmy, child, head, nxt


@njit(cache=True)
def _repulsion_barnes_hut(x, y, mass, kr, theta, fx, fy):
    n = x.shape[0]
    if n < 2:
        return
    half, cm, cmx, cmy, child, head, nxt = _build_quadtree(x, y, mass)
    stack = np.empty(4 * _MAX_DEPTH + 8, dtype=np.int64)
    for i in range(n):
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            c = stack[top]
            h = head[c]
            if h >= 0:
                b = h
                while b >= 0:
                    if b != i:
                        dx = x[i] - x[b]
                        dy = y[i] - y[b]
                        d2 = dx * dx + dy * dy
                        if d2 > 0.0:
                            f = kr * mass[i] * mass[b] / max(d2, _MIN_D2)
                            fx[i] += dx * f
                            fy[i] += dy * f
                    b = nxt[b]
                continue
            dx = x[i] - cmx[c] / cm[c]
            dy = y[i] - cmy[c] / cm[c]
            d2 = dx * dx + dy * dy
            size = 2.0 * half[c]
            if d2 > 0.0 and size * size < theta * theta * d2:
                f = kr * mass[i] * cm[c] / d2
                fx[i] += dx * f
                fy[i] += dy * f
            else:
                for q in range(4):
                    if child[c, q] >= 0:
                        stack[top] = child[c, q]
                        top += 1


@njit(cache=True)
def _attraction(x, y, src, dst, w, linlog, fx, fy):
    for e in range(src.shape[0]):
        i = src[e]
        j = dst[e]
        dx = x[i] - x[j]
        dy = y[i] - y[j]
        if linlog:
            d = math.sqrt(dx * dx + dy * dy)
            if d <= 0.0:
                continue
            f = -w[e] * math.log(1.0 + d) / d
        else:
            f = -w[e]
        fx[i] += dx * f
        fy[i] += dy * f
        fx[j] -= dx * f
        fy[j] -= dy * f


@njit(cache=True)
def _gravity(x, y, mass, g, fx, fy):
    for i in range(x.shape[0]):
        d = math.sqrt(x[i] * x[i] + y[i] * y[i])
        if d > 0.0:
            f = mass[i] * g / d
            fx[i] -= x[i] * f
            fy[i] -= y[i] * f


def _arrays(graph: RetweetGraph):
    index = graph.node_index
    pairs: dict = {}
    for (u, v), w in graph.edges.items():
        i, j = sorted((index[u], index[v]))
        pairs[i, j] = pairs.get((i, j), 0) + w
    keys = sorted(pairs)
    src = np.array([i for i, _ in keys], dtype=np.int64)
    dst = np.array([j for _, j in keys], dtype=np.int64)
    w = np.array([pairs[k] for k in keys], dtype=float)
    degree = np.bincount(np.concatenate([src, dst]), minlength=len(graph.nodes))
    return src, dst, w, 1.0 + degree.astype(float)


def initial_positions(n: int, seed: int):
    """Uniform points on the unit disk scaled by sqrt(n)."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.random(n)) * math.sqrt(n)
    phi = 2 * math.pi * rng.random(n)
    return r * np.cos(phi), r * np.sin(phi)


def forceatlas2(graph: RetweetGraph, params: LayoutParams = LayoutParams(), initial=None) -> LayoutResult:
    """Run ForceAtlas2 with adaptive global and per-node speed.

    Repulsion uses mass = unweighted degree + 1; edge weights only scale
    attraction. Stops after ``params.iterations`` steps, or earlier once total
    swinging drops below 1e-4 per node. ``initial`` overrides the seeded start
    positions with an (n, 2) array.
    """
    n = len(graph.nodes)
    if n == 0:
        return LayoutResult({}, 0, 0.0)
    src, dst, w, mass = _arrays(graph)
    if initial is None:
        x, y = initial_positions(n, params.seed)
    else:
        initial = np.asarray(initial, dtype=float)
        x, y = initial[:, 0].copy(), initial[:, 1].copy()
    use_bh = params.barnes_hut if params.barnes_hut is not None else n > BARNES_HUT_THRESHOLD
    max_step = 10.0 * math.sqrt(n)

    speed, speed_efficiency = 1.0, 1.0
    old_fx, old_fy = np.zeros(n), np.zeros(n)
    total_swinging = 0.0
    iterations_run = 0
    for _ in range(params.iterations):
        fx, fy = np.zeros(n), np.zeros(n)
        if use_bh:
            _repulsion_barnes_hut(x, y, mass, params.scaling, params.theta, fx, fy)
        else:
            _repulsion_exact(x, y, mass, params.scaling, fx, fy)
        if params.gravity > 0:
            _gravity(x, y, mass, params.gravity, fx, fy)
        if len(src):
            _attraction(x, y, src, dst, w, params.linlog, fx, fy)

        swinging = mass * np.hypot(old_fx - fx, old_fy - fy)
        total_swinging = float(swinging.sum())
        total_traction = float((0.5 * mass * np.hypot(old_fx + fx, old_fy + fy)).sum())

        # adaptive global speed, as in Gephi's ForceAtlas2
        estimated_jt = 0.05 * math.sqrt(n)
        jt = params.tolerance * max(math.sqrt(estimated_jt),
                                    min(10.0, estimated_jt * total_traction / n ** 2))
        if total_traction > 0 and total_swinging / total_traction > 2.0:
            if speed_efficiency > 0.05:
                speed_efficiency *= 0.5
            jt = max(jt, params.tolerance)
        if total_swinging == 0:
            target_speed = math.inf
        else:
            target_speed = jt * speed_efficiency * total_traction / total_swinging
        if total_swinging > jt * total_traction:
            if speed_efficiency > 0.05:
                speed_efficiency *= 0.7
        elif speed < 1000:
            speed_efficiency *= 1.3
        speed = speed + min(target_speed - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * swinging))
        dx, dy = fx * factor, fy * factor
        step = np.hypot(dx, dy)
        clamp = step > max_step
        if clamp.any():
            dx[clamp] *= max_step / step[clamp]
            dy[clamp] *= max_step / step[clamp]
        x += dx
        y += dy
        old_fx, old_fy = fx, fy
        iterations_run += 1
        if params.debug and not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise FloatingPointError(f"non-finite coordinates after iteration {iterations_run}")
        if total_swinging < 1e-4 * n:
            break
    positions = {node: (float(x[i]), float(y[i])) for i, node in enumerate(graph.nodes)}
    return LayoutResult(positions, iterations_run, total_swinging)


# -- exports -----------------------------------------------------------------

LAYOUT_HEADER = ("account", "x", "y", "community_id", "polarity_label")


def layout_csv(result: LayoutResult, partition=None, polarity=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LAYOUT_HEADER)
    for node in sorted(result.positions):
        px, py = result.positions[node]
        cid = partition.assignment.get(node, "") if partition is not None else ""
        label = ""
        if polarity is not None and cid != "":
            label = polarity.labels[cid].value
        writer.writerow((node, f"{px:.6f}", f"{py:.6f}", cid, label))
    return buf.getvalue()


def svg(result: LayoutResult, graph: RetweetGraph, partition=None, size: int = 800) -> str:
    """Static SVG drawing: edges as faint lines, nodes colored by community."""
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    if not result.positions:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}"/>\n'
    xs = np.array([p[0] for p in result.positions.values()])
    ys = np.array([p[1] for p in result.positions.values()])
    span = max(xs.max() - xs.min(), ys.max() - ys.min()) or 1.0
    pad = 10

    def tx(px, py):
        return (pad + (px - xs.min()) / span * (size - 2 * pad),
                pad + (py - ys.min()) / span * (size - 2 * pad))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    for u, v in sorted(graph.edges):
        (x1, y1), (x2, y2) = tx(*result.positions[u]), tx(*result.positions[v])
        out.append(f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
                   'stroke="#999" stroke-opacity="0.2"/>')
    for node in sorted(result.positions):
        px, py = tx(*result.positions[node])
        cid = partition.assignment.get(node, 0) if partition is not None else 0
        color = palette[cid % len(palette)] if cid < len(palette) else "#cccccc"
        out.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2" fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
