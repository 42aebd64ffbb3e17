"""Bloch-sphere picture: RK4 oracle, reflection model, phase-matched points.

The Bloch vector obeys dR/dt = R x Omega with a torque Omega = (+-eta, 0, delta)
that is constant on each unit interval and flips the sign of its x component
between intervals.  Time is measured in units of the segment duration.

The integrator here never touches the segment unitaries, so it serves as an
independent check on :mod:`solcqed.transfer`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidParameterError, ReducedParams, State2

DEFAULT_STEPS = 1000
MIN_STEPS = 16


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def norm(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)


@dataclass(frozen=True)
class TorqueVector:
    x: float
    y: float
    z: float


@dataclass
class Trajectory:
    """Samples of the Bloch vector; ``segment`` is ceil(t) (1-based), 0 at t = 0."""

    t: np.ndarray
    R: np.ndarray  # shape (len(t), 3)
    segment: np.ndarray
    params: ReducedParams | None = None
    steps_per_segment: int = DEFAULT_STEPS
    norm_drift: np.ndarray = field(init=False)

    def __post_init__(self):
        self.norm_drift = np.linalg.norm(self.R, axis=1) - 1.0

    def __len__(self):
        return len(self.t)

    @property
    def final(self) -> BlochVector:
        return BlochVector(*map(float, self.R[-1]))

    @property
    def max_norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm_drift)))


@dataclass(frozen=True)
class PhaseMatchPoint:
    p: int
    q: int
    sign: int
    theta: float
    delta_opt: float
    eta_opt: float

    @property
    def phi(self) -> float:
        return math.hypot(self.eta_opt, self.delta_opt)

    @property
    def delta_over_pi(self) -> float:
        return self.delta_opt / math.pi


def bloch_from_state(s: State2) -> BlochVector:
    """R = (2 Re(c_e c_g*), -2 Im(c_e c_g*), |c_e|^2 - |c_g|^2), a unit vector."""
    cross = s.c_e * np.conj(s.c_g)
    return BlochVector(float(2 * cross.real), float(-2 * cross.imag),
                       float(abs(s.c_e) ** 2 - abs(s.c_g) ** 2))


def rotating_frame(s: State2, t: float, delta: float) -> State2:
    """Segment-product amplitudes at time t -> frame where the torque is static.

    The segment unitaries propagate the complex conjugate of the amplitudes
    of the coupled equations for c_e, c_g (with the coupling sign reversed).
    Conjugating back and removing the detuning phases exp(+-i delta t/2) gives
    amplitudes whose Bloch vector obeys dR/dt = R x Omega exactly.
    Populations are unchanged.
    """
    return State2(np.conj(s.c_e) * np.exp(0.5j * delta * t),
                  np.conj(s.c_g) * np.exp(-0.5j * delta * t))


def torque(segment: int, r: ReducedParams) -> TorqueVector:
    """Omega on the given 1-based interval: x = (-1)^(m+1) eta, z = delta."""
    sign = 1.0 if segment % 2 else -1.0
    return TorqueVector(sign * float(r.eta), 0.0, float(r.delta))


def _bloch_rhs(R: np.ndarray, omega: np.ndarray) -> np.ndarray:
    # R x Omega, batched over leading axes
    rx, ry, rz = R[..., 0], R[..., 1], R[..., 2]
    ox, oy, oz = omega[..., 0], omega[..., 1], omega[..., 2]
    return np.stack([ry * oz - rz * oy, rz * ox - rx * oz, rx * oy - ry * ox], axis=-1)


def rk4_step(R: np.ndarray, omega: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step of dR/dt = R x Omega with Omega held fixed."""
    k1 = _bloch_rhs(R, omega)
    k2 = _bloch_rhs(R + 0.5 * h * k1, omega)
    k3 = _bloch_rhs(R + 0.5 * h * k2, omega)
    k4 = _bloch_rhs(R + h * k3, omega)
    return R + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_steps(steps_per_segment: int):
    if steps_per_segment < MIN_STEPS:
        raise InvalidParameterError(
            f"steps_per_segment must be >= {MIN_STEPS}, got {steps_per_segment}")


def integrate_trajectory(r: ReducedParams, steps_per_segment: int = DEFAULT_STEPS,
                         renormalize: bool = False) -> Trajectory:
    """Integrate the Bloch equation from the north pole over N intervals.

    Steps are aligned with the interval boundaries so the torque switch is
    never straddled.  Norm drift is recorded on the trajectory and left in
    place unless ``renormalize`` is set.
    """
    _check_steps(steps_per_segment)
    n = r.n_segments
    h = 1.0 / steps_per_segment
    total = n * steps_per_segment
    R = np.empty((total + 1, 3))
    R[0] = (0.0, 0.0, 1.0)
    t = np.empty(total + 1)
    t[0] = 0.0
    segment = np.zeros(total + 1, dtype=int)
    cur = R[0].copy()
    i = 0
    for m in range(1, n + 1):
        tq = torque(m, r)
        omega = np.array([tq.x, tq.y, tq.z])
        for j in range(1, steps_per_segment + 1):
            cur = rk4_step(cur, omega, h)
            if renormalize:
                cur = cur / np.linalg.norm(cur)
            i += 1
            R[i] = cur
            t[i] = (m - 1) + j * h
            segment[i] = m
    return Trajectory(t, R, segment, params=r, steps_per_segment=steps_per_segment)


def integrate_final(eta, delta, n_segments,
                    steps_per_segment: int = DEFAULT_STEPS) -> np.ndarray:
    """Final Bloch vectors for a batch of (eta, delta, N) points.

    Same integrator as :func:`integrate_trajectory` without storing samples.
    ``n_segments`` may be per point; a point whose N intervals are done sees a
    zero torque, which RK4 leaves exactly unchanged.  Returns shape (..., 3).
    """
    _check_steps(steps_per_segment)
    eta, delta, n_seg = np.broadcast_arrays(np.asarray(eta, float),
                                            np.asarray(delta, float),
                                            np.asarray(n_segments, int))
    if np.any(n_seg < 1):
        raise InvalidParameterError("N must be >= 1")
    R = np.zeros(eta.shape + (3,))
    R[..., 2] = 1.0
    h = 1.0 / steps_per_segment
    for m in range(1, int(n_seg.max()) + 1):
        sign = 1.0 if m % 2 else -1.0
        active = n_seg >= m
        omega = np.stack([np.where(active, sign * eta, 0.0), np.zeros_like(eta),
                          np.where(active, delta, 0.0)], axis=-1)
        for _ in range(steps_per_segment):
            R = rk4_step(R, omega, h)
    return R


def emission_from_trajectory(t: Trajectory) -> float:
    """P_em = (1 - z)/2 at the last sample."""
    if len(t) == 0:
        raise InvalidParameterError("empty trajectory")
    return float(np.clip((1.0 - t.R[-1, 2]) / 2.0, 0.0, 1.0))


def bloch_from_evolution(r: ReducedParams) -> list[BlochVector]:
    """Bloch vector after each interval (m = 0..N) from the segment unitaries."""
    from .transfer import segment_unitary

    s = State2.excited()
    out = [bloch_from_state(rotating_frame(s, 0.0, float(r.delta)))]
    for m in range(1, r.n_segments + 1):
        s = segment_unitary(m, r).apply(s)
        out.append(bloch_from_state(rotating_frame(s, float(m), float(r.delta))))
    return out


def reflection_model_final(n_segments: int, theta: float) -> tuple[float, float]:
    """(x, z) after N intervals when each interval is a half-turn (phi odd * pi).

    Each half-turn reflects the x-z projection about the current torque
    direction; composing N of them from the north pole lands at
    ((-1)^(N+1) sin 2N theta, cos 2N theta).
    """
    two_n_theta = 2 * n_segments * theta
    sign = 1.0 if n_segments % 2 else -1.0
    return sign * math.sin(two_n_theta), math.cos(two_n_theta)


def reflection_model_path(n_segments: int, theta: float) -> list[tuple[float, float]]:
    """Explicit product of the per-interval reflection matrices, point by point."""
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    pos = np.array([0.0, 1.0])
    path = [tuple(pos)]
    for m in range(1, n_segments + 1):
        sgn = (-1) ** (m + 1)
        refl = np.array([[-c2, sgn * s2], [sgn * s2, c2]])
        pos = refl @ pos
        path.append((float(pos[0]), float(pos[1])))
    return path


def phase_match_theta(n_segments: int, p: int) -> float:
    return (p - 0.5) * math.pi / n_segments


def phase_match_points(n_segments: int, q_max: int) -> list[PhaseMatchPoint]:
    """All complete-emission points with p = 1..N, q = 1..q_max and both detuning signs.

    delta_opt = +-(2q - 1) pi cos theta_p, eta_opt = (2q - 1) pi sin theta_p with
    theta_p = (p - 1/2) pi / N.  Sorted by (q, p, sign), + before -.
    """
    if n_segments < 1 or q_max < 1:
        raise InvalidParameterError("N and q_max must be >= 1")
    points = []
    for q in range(1, q_max + 1):
        radius = (2 * q - 1) * math.pi
        for p in range(1, n_segments + 1):
            theta = phase_match_theta(n_segments, p)
            for sign in (1, -1):
                points.append(PhaseMatchPoint(
                    p=p, q=q, sign=sign, theta=theta,
                    delta_opt=sign * radius * math.cos(theta),
                    eta_opt=radius * math.sin(theta)))
    return points
