"""Grid scans of P_em and Mandel Q, plus branch-line / branch-circle overlays.

Grids are computed one row at a time (y outer, x inner).  Every row is an
independent call with identical array shapes, so the result does not depend
on how rows are spread over worker processes.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import analysis
from .bloch import PhaseMatchPoint, phase_match_theta
from .core import InvalidParameterError, ReducedParams
from .transfer import emission_direct

EMISSION = "emission"
MANDEL_Q = "mandel_q"

# default figure grids
FIG2_DELTA = ("delta_over_pi", -4.0, 4.0, 501)
FIG2_ETA = ("eta", 0.0, 4 * math.pi, 501)
FIG5_N = ("n", 1.0, 1000.0, 401)
FIG5_DELTA = ("delta_over_pi", -4.0, 4.0, 401)
FIG5_ETA0 = 0.24
FIG5_D_CAV = 0.0038


@dataclass(frozen=True)
class AxisSpec:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if not self.min < self.max:
            raise InvalidParameterError(f"axis {self.name}: need min < max")
        if int(self.count) != self.count or self.count < 2:
            raise InvalidParameterError(f"axis {self.name}: need count >= 2")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)

    @property
    def step(self) -> float:
        return (self.max - self.min) / (self.count - 1)

    def to_dict(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max, "count": self.count}


@dataclass
class ScalarGrid:
    x_axis: AxisSpec
    y_axis: AxisSpec
    values: np.ndarray  # shape (y.count, x.count)
    quantity: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.y_axis.count, self.x_axis.count)
        if self.values.shape != expected:
            raise InvalidParameterError(f"values shape {self.values.shape} != {expected}")

    def flat(self) -> np.ndarray:
        """Row-major (y outer, x inner) view of the values."""
        return self.values.reshape(-1)

    def stable_mask(self) -> np.ndarray:
        """Nodes where the Mandel-Q stationary point is stable (Q > -1).

        Q = s/(D - s) <= -1 exactly when the slope s exceeds D_cav, where the
        gain curve crosses the loss line the wrong way; Q there is not a
        steady-state quantity.
        """
        if self.quantity != MANDEL_Q:
            raise InvalidParameterError("stable_mask applies to Mandel-Q grids only")
        return self.values > -1.0

    def argmin(self, mask=None) -> tuple[int, int]:
        v = self.values if mask is None else np.where(mask, self.values, np.inf)
        iy, ix = np.unravel_index(int(np.argmin(v)), v.shape)
        return int(iy), int(ix)


@dataclass(frozen=True)
class BranchLine:
    p: int
    theta: float
    start: tuple[float, float]  # (delta/pi, eta)
    end: tuple[float, float]


@dataclass(frozen=True)
class BranchCircle:
    q: int
    radius: float


@dataclass
class BranchGeometry:
    n_segments: int
    lines: list[BranchLine]
    circles: list[BranchCircle]
    intersections: list[PhaseMatchPoint]


def resolve_workers(workers: int | None) -> int:
    if workers is None or workers <= 0:
        return os.cpu_count() or 1
    return workers


def _map_rows(fn, rows, workers):
    workers = resolve_workers(workers)
    if workers == 1 or len(rows) < 2:
        return [fn(r) for r in rows]
    chunk = max(1, len(rows) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, rows, chunksize=chunk))


def _emission_row(eta, delta_values, n_segments):
    return emission_direct(ReducedParams(eta, delta_values, n_segments))


def _mandel_row(delta, n_values, n_segments, eta0, d_cav, dn):
    slope = analysis.emission_slope(n_segments, eta0, delta, n_values, dn)
    return analysis.mandel_q_value(slope, d_cav)


def _delta_radians(axis: AxisSpec) -> np.ndarray:
    return axis.values * math.pi if axis.name == "delta_over_pi" else axis.values


def scan_emission(n_segments: int, delta_axis: AxisSpec, eta_axis: AxisSpec,
                  workers: int | None = 1) -> ScalarGrid:
    """P_em over a (delta, eta) grid; x = delta axis, y = eta axis.

    A delta axis named ``delta_over_pi`` is in units of pi, anything else in
    radians.
    """
    deltas = _delta_radians(delta_axis)
    fn = partial(_emission_row, delta_values=deltas, n_segments=n_segments)
    rows = _map_rows(fn, list(eta_axis.values), workers)
    return ScalarGrid(delta_axis, eta_axis, np.array(rows), EMISSION,
                      {"N": n_segments})


def scan_mandel_q(n_segments: int, eta0: float, d_cav: float, n_axis: AxisSpec,
                  delta_axis: AxisSpec, workers: int | None = 1) -> ScalarGrid:
    """Mandel Q over an (n, delta) grid; x = n axis, y = delta axis.

    The n-derivative uses dn = max(1e-3 n, 1e-3), capped at n/2 so that
    n - dn stays positive.  Singular nodes hold +-inf.
    """
    if not n_axis.min > 0:
        raise InvalidParameterError("n axis must start above 0")
    if not d_cav > 0:
        raise InvalidParameterError("D_cav must be positive")
    n_values = n_axis.values
    dn = analysis.default_dn(n_values)
    fn = partial(_mandel_row, n_values=n_values, n_segments=n_segments,
                 eta0=eta0, d_cav=d_cav, dn=dn)
    rows = _map_rows(fn, list(_delta_radians(delta_axis)), workers)
    return ScalarGrid(n_axis, delta_axis, np.array(rows), MANDEL_Q,
                      {"N": n_segments, "eta0": eta0, "d_cav": d_cav,
                       "dn": "max(1e-3*n, 1e-3), capped at n/2"})


def _clip_ray(theta: float, xlim, ylim):
    """Segment of the ray t (cos theta, sin theta), t >= 0, inside the box."""
    d = (math.cos(theta), math.sin(theta))
    t0, t1 = 0.0, math.inf
    for k, (lo, hi) in enumerate((xlim, ylim)):
        if abs(d[k]) < 1e-15:
            if not lo <= 0.0 <= hi:
                return None
            continue
        a, b = lo / d[k], hi / d[k]
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    if t0 > t1:
        return None
    return (t0 * d[0], t0 * d[1]), (t1 * d[0], t1 * d[1])


def branch_geometry(n_segments: int, q_max: int,
                    bounds: tuple[AxisSpec, AxisSpec]) -> BranchGeometry:
    """Branch lines (fixed theta) and circles (phi = (2q-1) pi) for an overlay.

    ``bounds`` is (delta axis, eta axis); line endpoints are reported as
    (delta/pi, eta) clipped to the box.  Lines that miss the box are omitted.
    Intersections are the ray/circle crossings, with the mirror image in
    delta for the minus sign.
    """
    if n_segments < 1 or q_max < 1:
        raise InvalidParameterError("N and q_max must be >= 1")
    delta_axis, eta_axis = bounds
    scale = math.pi if delta_axis.name == "delta_over_pi" else 1.0
    xlim = (delta_axis.min * scale, delta_axis.max * scale)
    ylim = (eta_axis.min, eta_axis.max)
    lines = []
    for p in range(1, n_segments + 1):
        theta = phase_match_theta(n_segments, p)
        seg = _clip_ray(theta, xlim, ylim)
        if seg is None:
            continue
        (x0, y0), (x1, y1) = seg
        lines.append(BranchLine(p, theta, (x0 / math.pi, y0), (x1 / math.pi, y1)))
    circles = [BranchCircle(q, (2 * q - 1) * math.pi) for q in range(1, q_max + 1)]
    intersections = []
    for c in circles:
        for p in range(1, n_segments + 1):
            theta = phase_match_theta(n_segments, p)
            x, y = c.radius * math.cos(theta), c.radius * math.sin(theta)
            for sign in (1, -1):
                intersections.append(PhaseMatchPoint(p, c.q, sign, theta, sign * x, y))
    return BranchGeometry(n_segments, lines, circles, intersections)
