"""Segment unitaries, unit cells and the emission probability.

Three routes to the emission probability are provided:

* :func:`emission_direct` -- strict left-multiplication of the segment
  unitaries U(1), U(2), ..., U(N) applied to the inverted atom.  This is the
  reference every other route is checked against.
* :func:`emission_closed` -- Chebyshev closed forms built on the
  phase-stripped cell.
* :func:`table_polynomial` -- hard-coded polynomials in
  x = (delta/phi)^2 sin^2(phi/2) for N = 1..8.

All functions accept scalar or array-valued (eta, delta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ArrayLike,
    DegenerateParametersError,
    InternalConsistencyError,
    InvalidParameterError,
    ReducedParams,
    State2,
)

#: |sin xi| below which sin(k xi)/sin(xi) is evaluated by recurrence
DEGENERATE_SIN_XI = 1e-6
#: slack allowed on [0, 1] before a closed-form value is treated as a bug
BOUND_SLACK = 1e-9


class UnsupportedSegmentCount(ValueError):
    pass


@dataclass(frozen=True)
class Unitary2:
    """2x2 matrix [[u11, u12], [u21, u22]]; entries may be arrays."""

    u11: ArrayLike
    u12: ArrayLike
    u21: ArrayLike
    u22: ArrayLike

    @classmethod
    def identity(cls, like: ArrayLike = 0.0) -> "Unitary2":
        one = np.ones_like(like, dtype=complex)
        zero = np.zeros_like(like, dtype=complex)
        if np.ndim(like) == 0:
            one, zero = complex(one), complex(zero)
        return cls(one, zero, zero, one)

    def __matmul__(self, other: "Unitary2") -> "Unitary2":
        return Unitary2(
            self.u11 * other.u11 + self.u12 * other.u21,
            self.u11 * other.u12 + self.u12 * other.u22,
            self.u21 * other.u11 + self.u22 * other.u21,
            self.u21 * other.u12 + self.u22 * other.u22,
        )

    def dagger(self) -> "Unitary2":
        return Unitary2(np.conj(self.u11), np.conj(self.u21),
                        np.conj(self.u12), np.conj(self.u22))

    def det(self) -> ArrayLike:
        return self.u11 * self.u22 - self.u12 * self.u21

    def trace(self) -> ArrayLike:
        return self.u11 + self.u22

    def apply(self, s: State2) -> State2:
        return State2(self.u11 * s.c_e + self.u12 * s.c_g,
                      self.u21 * s.c_e + self.u22 * s.c_g)

    def as_array(self) -> np.ndarray:
        """Entries stacked into shape (..., 2, 2)."""
        top = np.stack(np.broadcast_arrays(self.u11, self.u12), axis=-1)
        bottom = np.stack(np.broadcast_arrays(self.u21, self.u22), axis=-1)
        return np.stack([top, bottom], axis=-2)

    def unitarity_defect(self) -> float:
        """max |U U^dagger - I| over entries (and over any array axes)."""
        p = self @ self.dagger()
        return float(np.max(np.abs(np.stack(np.broadcast_arrays(
            p.u11 - 1, p.u12, p.u21, p.u22 - 1)))))


@dataclass(frozen=True)
class CellAngle:
    """Chebyshev angle xi of the phase-stripped cell.

    ``degenerate`` marks points with |sin xi| < 1e-6 where the quotient
    sin(k xi)/sin(xi) is replaced by the U-polynomial recurrence.
    """

    xi: ArrayLike
    cos_xi: ArrayLike
    sin_xi: ArrayLike
    degenerate: ArrayLike


def _half_angle_terms(r: ReducedParams):
    """(phi, eta/phi, delta/phi, sin(phi/2)) with the ratios defined as 0 at phi=0."""
    phi = r.phi
    safe = np.where(phi > 0, phi, 1.0)
    return phi, r.eta / safe, r.delta / safe, np.sin(phi / 2)


def _detuning_weight(r: ReducedParams) -> ArrayLike:
    """x = (delta/phi)^2 sin^2(phi/2); cos xi = 1 - 2x."""
    _, _, d, s = _half_angle_terms(r)
    return (d * s) ** 2


def segment_unitary(m: int, r: ReducedParams) -> Unitary2:
    """Evolution over the m-th interval, (m-1) < t < m, coupling sign (-1)^(m+1)."""
    if m < 1:
        raise InvalidParameterError(f"segment index must be >= 1, got {m}")
    phi, e, d, s = _half_angle_terms(r)
    u11 = (np.cos(phi / 2) - 1j * d * s) * np.exp(0.5j * r.delta)
    u12 = (-1) ** m * 1j * e * s * np.exp(1j * (m - 0.5) * r.delta)
    return Unitary2(u11, u12, -np.conj(u12), np.conj(u11))


def unit_cell(k: int, r: ReducedParams) -> Unitary2:
    """T(k) = U(2k) U(2k-1): one +g0 interval followed by one -g0 interval."""
    if k < 1:
        raise InvalidParameterError(f"cell index must be >= 1, got {k}")
    return segment_unitary(2 * k, r) @ segment_unitary(2 * k - 1, r)


def unit_cell_closed(k: int, r: ReducedParams) -> Unitary2:
    """Closed-form entries of T(k); agrees with :func:`unit_cell`."""
    if k < 1:
        raise InvalidParameterError(f"cell index must be >= 1, got {k}")
    stripped = reduced_cell(r)
    t11 = stripped.u11 * np.exp(1j * r.delta)
    t12 = stripped.u12 * np.exp(1j * (2 * k - 1) * r.delta)
    return Unitary2(t11, t12, -np.conj(t12), np.conj(t11))


def reduced_cell(r: ReducedParams) -> Unitary2:
    """Unit cell with the k-dependent phase factors removed."""
    phi, e, d, s = _half_angle_terms(r)
    t11 = 1 - 2 * (d * s) ** 2 - 1j * d * np.sin(phi)
    t12 = -2 * e * d * s**2 + 0j
    return Unitary2(t11, t12, -np.conj(t12), np.conj(t11))


def _angle_from_weight(x: ArrayLike) -> CellAngle:
    x = np.clip(x, 0.0, 1.0)
    cos_xi = np.clip(1 - 2 * x, -1.0, 1.0)
    # atan2 form keeps full precision near xi = 0 and xi = pi
    xi = np.arctan2(2 * np.sqrt(x * (1 - x)), 1 - 2 * x)
    sin_xi = np.sin(xi)
    degenerate = np.abs(sin_xi) < DEGENERATE_SIN_XI
    if np.ndim(xi) == 0:
        return CellAngle(float(xi), float(cos_xi), float(sin_xi), bool(degenerate))
    return CellAngle(xi, cos_xi, sin_xi, degenerate)


def cell_angle(r: ReducedParams) -> CellAngle:
    """Chebyshev angle xi with cos xi = 1 - 2 (delta/phi)^2 sin^2(phi/2)."""
    if np.any(r.phi == 0):
        raise DegenerateParametersError("phi = 0: evolution is the identity, xi is undefined")
    return _angle_from_weight(_detuning_weight(r))


def chebyshev_u(order: int, c: ArrayLike) -> ArrayLike:
    """Chebyshev polynomial of the second kind U_order(c), order >= -2."""
    if order == -2:
        return -np.ones_like(c)
    prev, cur = np.zeros_like(c), np.ones_like(c)  # U_-1, U_0
    if order == -1:
        return prev
    for _ in range(order):
        prev, cur = cur, 2 * c * cur - prev
    return cur


def chebyshev_ratio(k: int, angle: CellAngle) -> ArrayLike:
    """sin(k xi)/sin(xi), i.e. U_{k-1}(cos xi); valid for k >= -1."""
    if k < -1:
        raise InvalidParameterError(f"k must be >= -1, got {k}")
    via_recurrence = chebyshev_u(k - 1, np.asarray(angle.cos_xi, dtype=float))
    if np.ndim(angle.xi) == 0:
        if angle.degenerate:
            return float(via_recurrence)
        return float(np.sin(k * angle.xi) / angle.sin_xi)
    safe = np.where(angle.degenerate, 1.0, angle.sin_xi)
    return np.where(angle.degenerate, via_recurrence, np.sin(k * angle.xi) / safe)


def reduced_cell_power(k: int, r: ReducedParams) -> Unitary2:
    """(reduced cell)^k from the Chebyshev identity for unimodular matrices."""
    if k < 0:
        raise InvalidParameterError(f"power must be >= 0, got {k}")
    cell = reduced_cell(r)
    angle = _angle_from_weight(_detuning_weight(r))
    uk = chebyshev_ratio(k, angle)
    ukm1 = chebyshev_ratio(k - 1, angle)
    return Unitary2(cell.u11 * uk - ukm1, cell.u12 * uk,
                    cell.u21 * uk, cell.u22 * uk - ukm1)


def evolve_sequential(r: ReducedParams, initial: State2 | None = None) -> State2:
    """Apply U(1), ..., U(N) in that order to ``initial`` (default: excited)."""
    state = State2.excited() if initial is None else initial
    c_e, c_g = state.c_e, state.c_g
    for m in range(1, r.n_segments + 1):
        u = segment_unitary(m, r)
        c_e, c_g = u.u11 * c_e + u.u12 * c_g, u.u21 * c_e + u.u22 * c_g
    return State2(c_e, c_g)


def emission_direct(r: ReducedParams) -> ArrayLike:
    """Ground-state population after N intervals, from the matrix product."""
    p = np.abs(evolve_sequential(r).c_g) ** 2
    return float(p) if np.ndim(p) == 0 else p


def _checked_probability(p: ArrayLike) -> ArrayLike:
    if np.any(p < -BOUND_SLACK) or np.any(p > 1 + BOUND_SLACK) or np.any(np.isnan(p)):
        raise InternalConsistencyError(
            f"emission probability out of range: min={np.min(p)!r}, max={np.max(p)!r}")
    p = np.clip(p, 0.0, 1.0)
    return float(p) if np.ndim(p) == 0 else p


def emission_closed(r: ReducedParams) -> ArrayLike:
    """Emission probability from the Chebyshev closed forms.

    Even N = 2k:
        P = 4 eta^2 delta^2 / phi^4 * (sin k xi / sin xi)^2 * sin^4(phi/2)
    Odd N = 2k+1:
        P = eta^2/phi^2 sin^2(phi/2)
            * [(1 - 4x) sin(k xi)/sin(xi) - sin((k-1) xi)/sin(xi)]^2
    with x = (delta/phi)^2 sin^2(phi/2).  The printed odd-N form divides
    4 delta^2 by phi rather than phi^2; the version here is the one that
    matches the matrix product.  phi = 0 gives 0.
    """
    _, e, d, s = _half_angle_terms(r)
    x = (d * s) ** 2
    angle = _angle_from_weight(x)
    n = r.n_segments
    k = n // 2
    if n % 2 == 0:
        p = 4 * (e * d) ** 2 * s**4 * chebyshev_ratio(k, angle) ** 2
    else:
        bracket = (1 - 4 * x) * chebyshev_ratio(k, angle) - chebyshev_ratio(k - 1, angle)
        p = (e * s) ** 2 * bracket**2
    return _checked_probability(p)


# Coefficients in x = (delta/phi)^2 sin^2(phi/2), lowest order first.  Odd rows
# multiply P(1), even rows multiply P(2).
TABLE_ROWS = {
    1: (1,),
    2: (1,),
    3: (1, -4),
    4: (2, -4),
    5: (1, -12, 16),
    6: (3, -16, 16),
    7: (1, -24, 80, -64),
    8: (4, -40, 96, -64),
}


def emission_single(r: ReducedParams) -> ArrayLike:
    """P(1) = (eta/phi)^2 sin^2(phi/2), the ordinary Rabi formula."""
    _, e, _, s = _half_angle_terms(r)
    return (e * s) ** 2


def emission_double(r: ReducedParams) -> ArrayLike:
    """P(2) = 4 eta^2 delta^2 / phi^4 sin^4(phi/2)."""
    _, e, d, s = _half_angle_terms(r)
    return 4 * (e * d) ** 2 * s**4


def table_polynomial(n_segments: int, r: ReducedParams) -> ArrayLike:
    """Tabulated emission polynomial for 1 <= N <= 8 (r.n_segments is ignored)."""
    if n_segments not in TABLE_ROWS:
        raise UnsupportedSegmentCount(f"tabulated only for N = 1..8, got {n_segments}")
    base = emission_single(r) if n_segments % 2 else emission_double(r)
    poly = np.polynomial.polynomial.polyval(_detuning_weight(r), TABLE_ROWS[n_segments])
    p = base * poly**2
    return float(p) if np.ndim(p) == 0 else p
