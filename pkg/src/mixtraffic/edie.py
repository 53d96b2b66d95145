"""Fundamental diagrams from trajectories via Edie's generalized definitions.

Measurement regions are parallelograms in the time-space plane with one
pair of sides along the shockwave speed ``w`` and the other along a
target speed ``v*``. In local coordinates ``(alpha, beta)`` a region is
the unit square, ``alpha`` running along the ``w`` side and ``beta``
along the ``v*`` side.

Units: regions are specified in km/h, m and s; densities are veh/km and
flows veh/h.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import Trajectory

log = logging.getLogger(__name__)

KMH = 1 / 3.6


@dataclass(frozen=True)
class Parallelogram:
    """Time-space region anchored at ``(t, x)``.

    The side along ``w`` spans ``extent_w`` metres in space (so
    ``extent_w/|w|`` seconds); the side along ``v_star`` spans
    ``extent_v`` seconds.
    """

    t: float
    x: float
    v_star: float  # km/h
    w: float = -18.0  # km/h
    extent_w: float = 200.0  # m
    extent_v: float = 5.0  # s

    def __post_init__(self):
        if not self.w < 0:
            raise ValueError("shockwave speed must be negative")
        if self.v_star < 0:
            raise ValueError("target speed must be non-negative")
        if self.extent_w <= 0 or self.extent_v <= 0:
            raise ValueError("region extents must be positive")

    @property
    def edge_w(self) -> Tuple[float, float]:
        """(dt, dx) of the side parallel to ``w``."""
        return self.extent_w / (-self.w * KMH), -self.extent_w

    @property
    def edge_v(self) -> Tuple[float, float]:
        """(dt, dx) of the side parallel to ``v_star``."""
        return self.extent_v, self.v_star * KMH * self.extent_v

    @property
    def area(self) -> float:
        """|A| in m*s."""
        (t1, x1), (t2, x2) = self.edge_w, self.edge_v
        return abs(t1 * x2 - x1 * t2)

    @property
    def matrix(self) -> np.ndarray:
        (t1, x1), (t2, x2) = self.edge_w, self.edge_v
        return np.array([[t1, t2], [x1, x2]])

    def to_local(self, t, x) -> Tuple[np.ndarray, np.ndarray]:
        inv = np.linalg.inv(self.matrix)
        dt = np.asarray(t, dtype=float) - self.t
        dx = np.asarray(x, dtype=float) - self.x
        return inv[0, 0] * dt + inv[0, 1] * dx, inv[1, 0] * dt + inv[1, 1] * dx

    def to_global(self, alpha, beta) -> Tuple[np.ndarray, np.ndarray]:
        m = self.matrix
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        return self.t + m[0, 0] * alpha + m[0, 1] * beta, self.x + m[1, 0] * alpha + m[1, 1] * beta

    def vertices(self) -> np.ndarray:
        t, x = self.to_global([0, 1, 1, 0], [0, 0, 1, 1])
        return np.column_stack([t, x])

    @property
    def t_range(self) -> Tuple[float, float]:
        (t1, _), (t2, _) = self.edge_w, self.edge_v
        return self.t, self.t + t1 + t2

    def contains(self, t, x) -> np.ndarray:
        a, b = self.to_local(t, x)
        return (a >= 0) & (a < 1) & (b >= 0) & (b < 1)

    def overlaps(self, other: "Parallelogram") -> bool:
        """Interior overlap test for two regions of the same shape."""
        a, b = self.to_local(other.t, other.x)
        return bool(abs(a) < 1 - 1e-9 and abs(b) < 1 - 1e-9)


@dataclass(frozen=True)
class FDPoint:
    k: float  # veh/km
    q: float  # veh/h
    v: float  # km/h
    n_vehicles: int
    region: Parallelogram
    coverage: float = 1.0


@dataclass(frozen=True)
class FdConfig:
    """Region geometry and filters for FD construction.

    Attributes
    ----------
    min_vehicles : int
        vehicles with at least two samples inside a region
    speed_tol : float
        allowed gap between mean in-region sample speed and ``v*``, km/h
    min_coverage : float
        minimum share of the region lying between the first and last
        vehicle of the stream
    method : {"exact", "approx"}
        which estimator ``fd_curve`` uses
    """

    w: float = -18.0
    extent_w: float = 200.0
    extent_v: float = 5.0
    min_vehicles: int = 5
    speed_tol: float = 2.5
    min_coverage: float = 0.5
    method: str = "exact"
    v_star_max: float = 90.0
    v_star_step: float = 5.0

    def __post_init__(self):
        if self.method not in ("exact", "approx"):
            raise ValueError(f"unknown FD method {self.method!r}")
        if not 0 < self.min_coverage <= 1:
            raise ValueError("min_coverage must be in (0, 1]")

    @property
    def v_stars(self) -> np.ndarray:
        n = int(round(self.v_star_max / self.v_star_step))
        return self.v_star_step * np.arange(n + 1)

    def region(self, t: float, x: float, v_star: float) -> Parallelogram:
        return Parallelogram(t, x, v_star, self.w, self.extent_w, self.extent_v)

    def to_dict(self) -> dict:
        return asdict(self)


def micro_fd(spacing: float, v_e: float) -> Tuple[float, float, float]:
    """Equilibrium estimate from spacing (m) and speed (km/h)."""
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    k = 1000.0 / spacing
    return k, v_e, k * v_e


class _Stream:
    """Trajectories laid out on one time grid (NaN where a vehicle is absent)."""

    def __init__(self, trajs: Sequence[Trajectory]):
        dts = {round(tr.dt, 12) for tr in trajs}
        if len(dts) != 1:
            raise ValueError("trajectories must share the sampling interval")
        self.dt = trajs[0].dt
        self.t_min = min(float(tr.t[0]) for tr in trajs)
        starts = [int(round((tr.t[0] - self.t_min) / self.dt)) for tr in trajs]
        n_t = max(s + len(tr) for s, tr in zip(starts, trajs))
        self.t = self.t_min + self.dt * np.arange(n_t)
        self.X = np.full((len(trajs), n_t), np.nan)
        self.V = np.full((len(trajs), n_t), np.nan)
        for i, (s, tr) in enumerate(zip(starts, trajs)):
            self.X[i, s:s + len(tr)] = tr.x
            self.V[i, s:s + len(tr)] = tr.v
        present = ~np.isnan(self.X)
        occupied = present.any(axis=0)
        self.head = np.full(n_t, np.nan)
        self.tail = np.full(n_t, np.nan)
        self.head[occupied] = np.nanmax(self.X[:, occupied], axis=0)
        self.tail[occupied] = np.nanmin(self.X[:, occupied], axis=0)
        # vehicles on the edge of the stream own only half the space around them
        self.weight = np.where(present & ((self.X == self.head) | (self.X == self.tail)), 0.5, 1.0)
        self.t_max = float(self.t[occupied].max())

    def coverage(self, region: Parallelogram, n_alpha: int = 400, n_beta: int = 10) -> float:
        a = (np.arange(n_alpha) + 0.5) / n_alpha
        b = (np.arange(n_beta) + 0.5) / n_beta
        A, B = np.meshgrid(a, b)
        t, x = region.to_global(A.ravel(), B.ravel())
        idx = np.clip(np.round((t - self.t_min) / self.dt).astype(int), 0, len(self.t) - 1)
        lo = np.interp(t, self.t, np.nan_to_num(self.tail, nan=np.inf))
        hi = np.interp(t, self.t, np.nan_to_num(self.head, nan=-np.inf))
        inside = (x >= lo) & (x <= hi) & ~np.isnan(self.head[idx])
        return float(inside.mean())


def _clip_lengths(a0, b0, a1, b1) -> np.ndarray:
    """Fraction of each segment inside ``[0, 1) x [0, 1)`` (Liang-Barsky).

    The far sides are open so a trajectory running exactly along a shared
    edge is counted in one region only.
    """
    lo = np.zeros_like(a0)
    hi = np.ones_like(a0)
    da, db = a1 - a0, b1 - b0
    with np.errstate(divide="ignore", invalid="ignore"):
        for p, q, closed in ((-da, a0, True), (da, 1 - a0, False),
                             (-db, b0, True), (db, 1 - b0, False)):
            r = q / p
            neg, pos, zero = p < 0, p > 0, p == 0
            lo = np.where(neg, np.maximum(lo, r), lo)
            hi = np.where(pos, np.minimum(hi, r), hi)
            outside = (q < 0) if closed else (q <= 0)
            hi = np.where(zero & outside, -1.0, hi)
    return np.clip(hi - lo, 0.0, None)


def _in_region(stream: _Stream, region: Parallelogram, edge_weights: bool = True):
    """Per-vehicle in-region time, distance, sample count, weights.

    With ``edge_weights`` off every vehicle counts fully, which is the
    right choice when the caller supplies the measurement area itself.
    """
    t0, t1 = region.t_range
    k0 = max(int(np.floor((t0 - stream.t_min) / stream.dt)) - 1, 0)
    k1 = min(int(np.ceil((t1 - stream.t_min) / stream.dt)) + 2, len(stream.t))
    t = stream.t[k0:k1]
    X = stream.X[:, k0:k1]
    W = stream.weight[:, k0:k1] if edge_weights else np.ones_like(X)
    a, b = region.to_local(t[None, :], X)
    inside = (a >= 0) & (a < 1) & (b >= 0) & (b < 1)
    n_inside = inside.sum(axis=1)
    frac = _clip_lengths(a[:, :-1], b[:, :-1], a[:, 1:], b[:, 1:])
    frac = np.nan_to_num(frac, nan=0.0)
    dx = np.nan_to_num(np.diff(X, axis=1), nan=0.0)
    seg_w = W[:, :-1]
    ti = (frac * stream.dt * seg_w).sum(axis=1)
    xi = (frac * dx * seg_w).sum(axis=1)
    # a vehicle's weight is that of its in-region samples
    wi = np.where(n_inside > 0, np.where(inside, W, 0).sum(axis=1) / np.maximum(n_inside, 1), 0.0)
    return ti, xi, n_inside, wi


def _effective_area(stream: Optional[_Stream], region: Parallelogram, coverage: Optional[float]):
    if coverage is None:
        coverage = stream.coverage(region) if stream is not None else 1.0
    if coverage <= 0:
        raise ValueError("region does not overlap the traffic stream")
    return region.area * coverage, coverage


def measure_exact(region: Parallelogram, trajs, coverage: Optional[float] = None) -> FDPoint:
    """Edie's definitions with each vehicle's actual in-region time and distance.

    The area is the part of the region between the first and the last
    vehicle of the stream (``coverage`` times ``|A|``).
    """
    stream = trajs if isinstance(trajs, _Stream) else _Stream(trajs)
    ti, xi, n_inside, _ = _in_region(stream, region, coverage is None)
    n = int((n_inside >= 2).sum())
    total_t = float(ti.sum())
    if n == 0 or total_t <= 0:
        raise ValueError("no vehicle traverses the region")
    area, cov = _effective_area(stream, region, coverage)
    k = total_t / area * 1000.0
    q = float(xi.sum()) / area * 3600.0
    return FDPoint(k, q, q / k, n, region, cov)


def measure_approx(region: Parallelogram, trajs, coverage: Optional[float] = None) -> FDPoint:
    """Count-based form: every traversing vehicle is credited the region's
    ``v*``-side projections (``extent_v`` seconds, ``v*·extent_v`` metres)."""
    stream = trajs if isinstance(trajs, _Stream) else _Stream(trajs)
    _, _, n_inside, wi = _in_region(stream, region, coverage is None)
    traversing = n_inside >= 2
    n = int(traversing.sum())
    if n == 0:
        raise ValueError("no vehicle traverses the region")
    m = float(wi[traversing].sum())
    area, cov = _effective_area(stream, region, coverage)
    t_side, x_side = region.edge_v
    k = m * t_side / area * 1000.0
    q = m * x_side / area * 3600.0
    return FDPoint(k, q, region.v_star, n, region, cov)


def generate_regions(trajs, v_star: float, cfg: FdConfig = FdConfig()) -> List[Parallelogram]:
    """Place non-overlapping steady-state regions for one target speed.

    Candidate anchors lie on a half-region lattice. A candidate is kept if
    enough vehicles traverse it, the mean speed of its samples is within
    ``speed_tol`` of ``v_star``, it lies inside the simulated time span
    and overlaps the stream by at least ``min_coverage``. Candidates are
    accepted in order of anchor time and must not overlap earlier ones.
    """
    if isinstance(trajs, _Stream):
        stream = trajs
    else:
        if len(trajs) == 0:
            return []
        stream = _Stream(trajs)
    proto = cfg.region(0.0, 0.0, v_star)
    present = ~np.isnan(stream.X)
    veh, kk = np.nonzero(present)
    if veh.size == 0:
        return []
    a, b = proto.to_local(stream.t[kk], stream.X[veh, kk])
    ci = np.floor(2 * a).astype(np.int64)
    cj = np.floor(2 * b).astype(np.int64)
    # shift so that anchors one half-cell below the data are still indexable
    i_off, j_off = ci.min() - 1, cj.min() - 1
    ci -= i_off
    cj -= j_off
    n_i, n_j = int(ci.max()) + 2, int(cj.max()) + 2
    flat = ci * n_j + cj
    size = n_i * n_j
    speed_kmh = stream.V[veh, kk] / KMH
    cell_sum = np.bincount(flat, weights=speed_kmh, minlength=size).reshape(n_i, n_j)
    cell_cnt = np.bincount(flat, minlength=size).reshape(n_i, n_j).astype(float)

    def box(g):
        out = np.zeros_like(g)
        out[:-1, :-1] = g[:-1, :-1] + g[1:, :-1] + g[:-1, 1:] + g[1:, 1:]
        return out

    reg_sum, reg_cnt = box(cell_sum), box(cell_cnt)
    veh_count = np.zeros(size)
    shifts = np.array([0, 1, n_j, n_j + 1])
    for v_id in range(stream.X.shape[0]):
        sel = veh == v_id
        if not sel.any():
            continue
        cells, cnt = np.unique(flat[sel], return_counts=True)
        keys = (cells[None, :] - shifts[:, None]).ravel()
        weights = np.tile(cnt, 4)
        ok = keys >= 0
        uk, inv = np.unique(keys[ok], return_inverse=True)
        sums = np.bincount(inv, weights=weights[ok])
        veh_count[uk[sums >= 2]] += 1
    veh_count = veh_count.reshape(n_i, n_j)

    with np.errstate(invalid="ignore", divide="ignore"):
        mean_speed = reg_sum / reg_cnt
    cand = (veh_count >= cfg.min_vehicles) & (np.abs(mean_speed - v_star) <= cfg.speed_tol)
    ii, jj = np.nonzero(cand)
    if ii.size == 0:
        return []
    alpha0 = (ii + i_off) / 2.0
    beta0 = (jj + j_off) / 2.0
    t0, x0 = proto.to_global(alpha0, beta0)
    span = proto.t_range[1] - proto.t_range[0]
    in_time = (t0 >= stream.t_min - 1e-9) & (t0 + span <= stream.t_max + 1e-9)
    order = np.lexsort((x0, t0))
    accepted: List[Parallelogram] = []
    taken = set()
    for o in order:
        if not in_time[o]:
            continue
        i, j = int(ii[o]), int(jj[o])
        if any((i + di, j + dj) in taken for di in (-1, 0, 1) for dj in (-1, 0, 1)):
            continue
        region = cfg.region(float(t0[o]), float(x0[o]), v_star)
        if stream.coverage(region) < cfg.min_coverage:
            continue
        taken.add((i, j))
        accepted.append(region)
    return accepted


@dataclass
class FDCurve:
    """FD points grouped by target speed with per-group means."""

    groups: Dict[float, List[FDPoint]] = field(default_factory=dict)
    omitted: List[float] = field(default_factory=list)

    @property
    def v_stars(self) -> List[float]:
        return sorted(self.groups)

    def mean(self, v_star: float) -> Tuple[float, float]:
        pts = self.groups[v_star]
        return float(np.mean([p.k for p in pts])), float(np.mean([p.q for p in pts]))

    def rows(self) -> List[dict]:
        out = []
        for vs in self.v_stars:
            k, q = self.mean(vs)
            out.append({"v_star": vs, "mean_k": k, "mean_q": q, "n_regions": len(self.groups[vs])})
        return out

    @property
    def points(self) -> List[FDPoint]:
        return [p for vs in self.v_stars for p in self.groups[vs]]

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class FDSummary:
    optimal_density: float  # veh/km
    capacity: float  # veh/h
    v_star: float = float("nan")  # km/h of the capacity group


def fd_curve(trajs: Sequence[Trajectory], cfg: FdConfig = FdConfig(),
             v_stars: Optional[Sequence[float]] = None) -> FDCurve:
    """Sweep ``v*``, place regions, measure each, and group the points."""
    if len(trajs) == 0:
        raise ValueError("need at least one trajectory")
    stream = _Stream(trajs)
    measure = measure_exact if cfg.method == "exact" else measure_approx
    curve = FDCurve()
    for vs in (cfg.v_stars if v_stars is None else v_stars):
        vs = float(vs)
        pts = []
        for region in generate_regions(stream, vs, cfg):
            try:
                pts.append(measure(region, stream))
            except ValueError:
                continue
        if pts:
            curve.groups[vs] = pts
        else:
            curve.omitted.append(vs)
    if curve.omitted:
        log.info("no valid regions for v* = %s km/h", ", ".join(f"{v:g}" for v in curve.omitted))
    return curve


def fd_summary(curve: FDCurve) -> FDSummary:
    """Capacity = largest group-mean flow; ties go to the lower density."""
    if not curve.groups:
        raise ValueError("empty FD curve")
    best = None
    for vs in curve.v_stars:
        k, q = curve.mean(vs)
        if best is None or q > best[1] or (q == best[1] and k < best[0]):
            best = (k, q, vs)
    return FDSummary(best[0], best[1], best[2])

