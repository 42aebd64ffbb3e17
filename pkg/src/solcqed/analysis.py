"""Passband spectra, Mandel Q and the weak-coupling Fourier picture."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bloch import phase_match_theta
from .core import InvalidParameterError, ReducedParams
from .transfer import emission_direct

#: |D_cav - slope| below which Q is reported as a signed infinity
Q_SINGULAR = 1e-12
PEAK_MIN = 0.999


class PeakNotFoundError(ValueError):
    pass


class StrongCouplingWarning(UserWarning):
    pass


@dataclass
class PassbandSpectrum:
    N: int
    p: int
    phi_axis: np.ndarray
    values: np.ndarray

    @property
    def theta(self) -> float:
        return phase_match_theta(self.N, self.p)


@dataclass(frozen=True)
class MandelQPoint:
    n: float
    delta: float
    slope: float
    q_value: float

    @property
    def singular(self) -> bool:
        return math.isinf(self.q_value)


@dataclass
class FourierCoefficients:
    """Coefficients G(l), |l| <= l_max, of the square-wave coupling, in units of g0."""

    N: int
    coefficients: dict[int, complex]

    @property
    def l_max(self) -> int:
        return max(self.coefficients)

    def power(self, l: int) -> float:
        return abs(self.coefficients[l]) ** 2

    def parseval_partial_sums(self) -> np.ndarray:
        """Sum of |G(l)|^2 over |l| <= L for L = 0..l_max."""
        sums = [self.power(0)]
        for l in range(1, self.l_max + 1):
            sums.append(sums[-1] + self.power(l) + self.power(-l))
        return np.array(sums)


@dataclass
class WeakCouplingComparison:
    delta_axis: np.ndarray
    comb_index: np.ndarray        # nearest s with delta = 2 pi s / N
    off_comb: np.ndarray          # True where N delta / 2 pi is not an integer
    predicted: np.ndarray         # |G(s)|^2 normalized to max 1
    exact: np.ndarray             # P_em normalized to max 1

    def correlation(self) -> float:
        return float(np.corrcoef(self.predicted, self.exact)[0, 1])


def passband(n_segments: int, p: int, phi_max: float, samples: int) -> PassbandSpectrum:
    """P_em along the branch line theta_p = (p - 1/2) pi / N for phi in [0, phi_max]."""
    if not 1 <= p <= n_segments:
        raise InvalidParameterError(f"p must lie in 1..{n_segments}, got {p}")
    if samples < 2 or not phi_max > 0:
        raise InvalidParameterError("need samples >= 2 and phi_max > 0")
    theta = phase_match_theta(n_segments, p)
    phi = np.linspace(0.0, phi_max, samples)
    r = ReducedParams(phi * math.sin(theta), phi * math.cos(theta), n_segments)
    return PassbandSpectrum(n_segments, p, phi, emission_direct(r))


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def passband_fwhm(s: PassbandSpectrum, center_phi: float) -> float:
    """Full width at half maximum of the peak next to ``center_phi``.

    The peak sample must be a local maximum >= 0.999 within one grid step of
    ``center_phi``; the half-maximum crossings on either side are linearly
    interpolated.
    """
    phi, v = s.phi_axis, s.values
    near = np.flatnonzero(np.abs(phi - center_phi) <= (phi[1] - phi[0]) * (1 + 1e-9))
    if near.size == 0:
        raise PeakNotFoundError(f"phi = {center_phi} is outside the sampled range")
    i = int(near[np.argmax(v[near])])
    left_ok = i == 0 or v[i] >= v[i - 1]
    right_ok = i == len(v) - 1 or v[i] >= v[i + 1]
    if v[i] < PEAK_MIN or not (left_ok and right_ok):
        raise PeakNotFoundError(f"no peak >= {PEAK_MIN} near phi = {center_phi}")
    half = v[i] / 2
    j = i
    while j > 0 and v[j - 1] > half:
        j -= 1
    if j == 0:
        raise PeakNotFoundError("left half-maximum crossing not sampled")
    lo = _crossing(phi[j - 1], v[j - 1], phi[j], v[j], half)
    j = i
    while j < len(v) - 1 and v[j + 1] > half:
        j += 1
    if j == len(v) - 1:
        raise PeakNotFoundError("right half-maximum crossing not sampled")
    hi = _crossing(phi[j], v[j], phi[j + 1], v[j + 1], half)
    return float(hi - lo)


def emission_vs_n(n_segments: int, eta0: float, delta, n):
    """P_em with the pulse area scaled by the field amplitude, eta = sqrt(n) eta0."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 0):
        raise InvalidParameterError("mean photon number must be >= 0")
    return emission_direct(ReducedParams(np.sqrt(n) * eta0, delta, n_segments))


def default_dn(n):
    """max(1e-3 n, 1e-3), capped at n/2 so that n - dn stays positive."""
    n = np.asarray(n, dtype=float)
    dn = np.minimum(np.maximum(1e-3 * n, 1e-3), 0.5 * n)
    return float(dn) if dn.ndim == 0 else dn


def mandel_q_value(slope, d_cav: float):
    """Q = slope / (D_cav - slope); +-inf where the denominator vanishes."""
    slope = np.asarray(slope, dtype=float)
    denom = d_cav - slope
    singular = np.abs(denom) < Q_SINGULAR
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(singular, np.copysign(np.inf, slope), slope / np.where(singular, 1.0, denom))
    return float(q) if q.ndim == 0 else q


def emission_slope(n_segments: int, eta0: float, delta, n, dn=None):
    """Central difference of P_em with respect to n."""
    n = np.asarray(n, dtype=float)
    if dn is None:
        dn = default_dn(n)
    dn = np.asarray(dn, dtype=float)
    if np.any(dn <= 0) or np.any(n <= dn):
        raise InvalidParameterError("mandel_q requires n > dn > 0")
    hi = emission_vs_n(n_segments, eta0, delta, n + dn)
    lo = emission_vs_n(n_segments, eta0, delta, n - dn)
    return (hi - lo) / (2 * dn)


def mandel_q(n_segments: int, eta0: float, d_cav: float, n: float, delta: float,
             dn: float | None = None) -> MandelQPoint:
    """Mandel Q from the slope of P_em along n at fixed detuning."""
    if not d_cav > 0:
        raise InvalidParameterError(f"D_cav must be positive, got {d_cav}")
    slope = float(emission_slope(n_segments, eta0, delta, n, dn))
    return MandelQPoint(float(n), float(delta), slope, mandel_q_value(slope, d_cav))


def fourier_coefficients(n_segments: int, l_max: int) -> FourierCoefficients:
    """Exact Fourier coefficients of g(t)/g0 on [0, N].

    G(l) = (1/N) sum_m (-1)^(m+1) int_{m-1}^{m} exp(2 pi i l t / N) dt.
    """
    if l_max < 1:
        raise InvalidParameterError(f"l_max must be >= 1, got {l_max}")
    n = n_segments
    m = np.arange(1, n + 1)
    signs = np.where(m % 2 == 1, 1.0, -1.0)
    coeffs = {}
    for l in range(-l_max, l_max + 1):
        if l == 0:
            coeffs[l] = complex(signs.sum() / n)
            continue
        w = 2 * math.pi * l / n
        seg = (np.exp(1j * w * m) - np.exp(1j * w * (m - 1))) / (1j * w)
        coeffs[l] = complex(np.sum(signs * seg) / n)
    return FourierCoefficients(n, coeffs)


def weak_coupling_prediction(n_segments: int, eta: float, delta_axis) -> WeakCouplingComparison:
    """First-order lineshape |G(s)|^2 next to the exact P_em(delta).

    delta is snapped to the Fourier comb delta = 2 pi s / N; points off the comb
    are flagged.  Both curves are normalized to a maximum of 1.
    """
    if eta >= 1:
        warnings.warn(f"eta = {eta} is outside the weak-coupling regime (eta < 1)",
                      StrongCouplingWarning, stacklevel=2)
    delta_axis = np.asarray(delta_axis, dtype=float)
    raw = n_segments * delta_axis / (2 * math.pi)
    s = np.rint(raw).astype(int)
    off_comb = np.abs(raw - s) > 1e-9
    coeffs = fourier_coefficients(n_segments, max(1, int(np.max(np.abs(s)))))
    predicted = np.array([coeffs.power(int(k)) for k in s])
    exact = emission_direct(ReducedParams(eta, delta_axis, n_segments))
    return WeakCouplingComparison(delta_axis, s, off_comb,
                                  predicted / predicted.max(), exact / exact.max())
