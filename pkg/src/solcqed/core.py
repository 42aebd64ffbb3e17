"""Parameter types for the poled two-level atom / cavity-mode problem.

Everything downstream works in the dimensionless pair (eta, delta) with the
segment duration fixed to 1:

    eta   = 2 sqrt(n) g0 tau      pulse area per segment
    delta = Delta tau             detuning per segment
    phi   = sqrt(eta^2 + delta^2) precession angle per segment
    theta = atan2(eta, delta)     tilt of the torque vector from the z axis

The ``eta``/``delta`` fields of :class:`ReducedParams` may be numpy arrays, in
which case every function in :mod:`solcqed.transfer` evaluates elementwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


class InvalidParameterError(ValueError):
    """Raised when a parameter violates the precondition of an operation."""


class DegenerateParametersError(ValueError):
    """Raised at phi = 0, where the Chebyshev angle is undefined."""


class InternalConsistencyError(ArithmeticError):
    """A closed form produced a value that cannot be a probability."""


@dataclass(frozen=True)
class PhysicalParams:
    g0: float
    tau: float
    n: float
    delta_freq: float

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError(f"tau must be positive, got {self.tau}")
        if self.n < 0:
            raise InvalidParameterError(f"mean photon number must be >= 0, got {self.n}")


@dataclass(frozen=True)
class ReducedParams:
    eta: ArrayLike
    delta: ArrayLike
    n_segments: int = 1

    def __post_init__(self):
        if int(self.n_segments) != self.n_segments or self.n_segments < 1:
            raise InvalidParameterError(
                f"n_segments must be a positive integer, got {self.n_segments}")
        object.__setattr__(self, "n_segments", int(self.n_segments))
        # only eta^2 enters the emission probability
        if isinstance(self.eta, np.ndarray):
            object.__setattr__(self, "eta", np.abs(self.eta))
        else:
            object.__setattr__(self, "eta", abs(float(self.eta)))
        if not isinstance(self.delta, np.ndarray):
            object.__setattr__(self, "delta", float(self.delta))

    @property
    def phi(self) -> ArrayLike:
        return np.hypot(self.eta, self.delta)

    def with_segments(self, n_segments: int) -> "ReducedParams":
        return ReducedParams(self.eta, self.delta, n_segments)


@dataclass(frozen=True)
class PolarParams:
    phi: float
    theta: float

    def to_reduced(self, n_segments: int = 1) -> ReducedParams:
        """Inverse of :func:`to_polar`: (eta, delta) = (phi sin theta, phi cos theta).

        A negative reconstructed eta is folded to |eta| by ReducedParams; use
        :meth:`cartesian` for the signed pair.
        """
        eta, delta = self.cartesian()
        return ReducedParams(eta, delta, n_segments)

    def cartesian(self) -> tuple[float, float]:
        return self.phi * math.sin(self.theta), self.phi * math.cos(self.theta)


@dataclass
class State2:
    c_e: complex
    c_g: complex

    @property
    def norm2(self) -> float:
        return abs(self.c_e) ** 2 + abs(self.c_g) ** 2

    @property
    def excited_probability(self) -> float:
        return abs(self.c_e) ** 2

    @property
    def ground_probability(self) -> float:
        return abs(self.c_g) ** 2

    @classmethod
    def excited(cls) -> "State2":
        return cls(1.0 + 0j, 0j)


def reduce(p: PhysicalParams, n_segments: int) -> ReducedParams:
    """Convert physical parameters to the dimensionless (eta, delta, N)."""
    if not p.tau > 0:
        raise InvalidParameterError(f"tau must be positive, got {p.tau}")
    if int(n_segments) != n_segments or n_segments < 1:
        raise InvalidParameterError(f"N must be a positive integer, got {n_segments}")
    eta = 2.0 * math.sqrt(p.n) * p.g0 * p.tau
    return ReducedParams(eta, p.delta_freq * p.tau, n_segments)


def to_polar(r: ReducedParams) -> PolarParams:
    """Map (eta, delta) to (phi, theta); theta is 0 at the origin."""
    eta, delta = float(r.eta), float(r.delta)
    phi = math.hypot(eta, delta)
    theta = math.atan2(eta, delta) if phi > 0 else 0.0
    return PolarParams(phi, theta)


def polar_point(phi: float, theta: float, n_segments: int = 1) -> ReducedParams:
    """Reduced parameters of the point at precession angle phi and tilt theta."""
    return PolarParams(phi, theta).to_reduced(n_segments)
