"""Random-matrix-theory utilities.

Standard Marchenko-Pastur law (density, CDF, sampling, KS distance), the
spiked-model forward/inverse/cosine maps, and the SNR-improvement diagnostics
of homogenization.
"""

import math
from typing import Union

import numpy as np
import scipy.integrate

from ..core.exceptions import BelowTransitionError, DataError
from ..core.settings import get_settings
from ..models.covariance_models import CovarianceModel, MpDistribution

ArrayLike = Union[float, np.ndarray]

# Eigenvalues within this fraction of the spectral scale of zero belong to the zero atom
ZERO_ATOM_RTOL = 1e-10


def _out(values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(values) == 0 else values


def bulk_edge(gamma: float) -> float:
    """Upper MP edge (1 + √γ)²"""
    return (1.0 + math.sqrt(gamma)) ** 2


# ----------------------------------------------------------------------------
# Marchenko-Pastur law
# ----------------------------------------------------------------------------

def mp_pdf(d: MpDistribution, x: ArrayLike) -> ArrayLike:
    """Continuous part of the MP density: √((b−x)(x−a))/(2πγx) on (a, b), else 0"""
    a, b, gamma = d.support_lo, d.support_hi, d.gamma
    xs = np.asarray(x, dtype=float)
    inside = (xs > a) & (xs < b) & (xs > 0)
    safe = np.where(inside, xs, 1.0)
    density = np.sqrt(np.clip((b - safe) * (safe - a), 0.0, None)) / (2.0 * math.pi * gamma * safe)
    return _out(np.where(inside, density, 0.0))


def _angle_of(d: MpDistribution, x: float) -> float:
    # x = c − h·cos φ maps φ ∈ [0, π] onto [a, b]
    a, b = d.support_lo, d.support_hi
    c, h = (a + b) / 2.0, (b - a) / 2.0
    return math.acos(min(1.0, max(-1.0, (c - x) / h)))


def _angle_density(d: MpDistribution, phi: float) -> float:
    # MP density times dx/dφ; smooth on [0, π] including the γ = 1 edge at zero
    a, b, gamma = d.support_lo, d.support_hi, d.gamma
    c, h = (a + b) / 2.0, (b - a) / 2.0
    x = c - h * math.cos(phi)
    s = math.sin(phi)
    if x <= 0.0:
        # Only reachable at φ = 0 when γ = 1; the integrand tends to 2/π
        return 2.0 / math.pi if gamma == 1.0 else 0.0
    return (h * s) ** 2 / (2.0 * math.pi * gamma * x)


def _continuous_mass(d: MpDistribution, phi_lo: float, phi_hi: float) -> float:
    if phi_hi <= phi_lo:
        return 0.0
    tol = get_settings().quad_tolerance
    value, _ = scipy.integrate.quad(
        lambda phi: _angle_density(d, phi), phi_lo, phi_hi,
        epsabs=tol * 1e-2, epsrel=1e-10, limit=200
    )
    return value


def mp_cdf(d: MpDistribution, x: ArrayLike) -> ArrayLike:
    """
    MP CDF: atom·1{x ≥ 0} plus the integrated density on (a, min(x, b)).

    The integral is taken in the angle variable x = c − h·cos φ, which removes
    the square-root edge behavior and the 1/√x singularity at γ = 1.
    """
    xs = np.asarray(x, dtype=float)
    flat = xs.reshape(-1)
    result = np.empty_like(flat)
    order = np.argsort(flat, kind="stable")
    result[order] = mp_cdf_sorted(d, flat[order])
    return _out(result.reshape(xs.shape))


def mp_cdf_sorted(d: MpDistribution, xs: np.ndarray) -> np.ndarray:
    """CDF at ascending points, integrating piecewise between neighbors"""
    atom = d.atom_at_zero
    a, b = d.support_lo, d.support_hi
    values = np.empty(len(xs))
    mass = 0.0
    phi_prev = 0.0
    for i, x in enumerate(xs):
        if x < 0:
            values[i] = 0.0
            continue
        if x >= b:
            values[i] = 1.0
            continue
        base = atom
        if x <= a:
            values[i] = base
            continue
        phi = _angle_of(d, x)
        mass += _continuous_mass(d, phi_prev, phi)
        phi_prev = max(phi_prev, phi)
        values[i] = min(1.0, base + mass)
    return values


def mp_sample(d: MpDistribution, size: int, rng: np.random.Generator, grid: int = 4096) -> np.ndarray:
    """
    Inverse-CDF samples from the MP law.

    The CDF is tabulated on a uniform grid in the angle variable and inverted
    by monotone interpolation; the zero atom is sampled exactly.
    """
    phis = np.linspace(0.0, math.pi, grid + 1)
    pieces = np.array([_continuous_mass(d, lo, hi) for lo, hi in zip(phis[:-1], phis[1:])])
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    cdf /= cdf[-1]
    u = rng.random(size)
    atom = d.atom_at_zero
    samples = np.zeros(size)
    continuous = u >= atom
    if atom > 0:
        u_cont = (u[continuous] - atom) / (1.0 - atom)
    else:
        u_cont = u[continuous]
    phi = np.interp(u_cont, cdf, phis)
    c, h = (d.support_lo + d.support_hi) / 2.0, (d.support_hi - d.support_lo) / 2.0
    samples[continuous] = c - h * np.cos(phi)
    return samples


def ks_statistic(eigenvalues: np.ndarray, d: MpDistribution) -> float:
    """
    Kolmogorov-Smirnov distance between the empirical spectral CDF and the MP law.

    Raises:
        DataError: empty or non-finite spectrum
    """
    values = np.sort(np.asarray(eigenvalues, dtype=float).reshape(-1))
    m = values.size
    if m == 0:
        raise DataError("Cannot compute a KS distance for an empty spectrum")
    if not np.all(np.isfinite(values)):
        raise DataError("Spectrum contains non-finite eigenvalues")
    # Structural zeros come out of eigensolvers as ±round-off
    values = np.where(np.abs(values) <= ZERO_ATOM_RTOL * np.max(np.abs(values)), 0.0, values)
    values.sort()
    cdf = mp_cdf_sorted(d, values)
    # Left limits differ from the CDF only at the zero atom
    left = np.where(values == 0.0, cdf - d.atom_at_zero, cdf)
    upper = np.arange(1, m + 1) / m - cdf
    lower = left - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


# ----------------------------------------------------------------------------
# Spiked-model maps
# ----------------------------------------------------------------------------

def spike_forward(ell: ArrayLike, gamma: float) -> ArrayLike:
    """Asymptotic top eigenvalue: (1+ℓ)(1+γ/ℓ) above ℓ = √γ, bulk edge otherwise"""
    ells = np.asarray(ell, dtype=float)
    above = ells > math.sqrt(gamma)
    safe = np.where(above, ells, 1.0)
    value = np.where(above, (1.0 + safe) * (1.0 + gamma / safe), bulk_edge(gamma))
    return _out(value)


def spike_inverse(lam: ArrayLike, gamma: float) -> ArrayLike:
    """
    Invert the spike forward map.

    Raises:
        BelowTransitionError: some λ is at or below the bulk edge
    """
    lams = np.asarray(lam, dtype=float)
    if np.any(lams <= bulk_edge(gamma)):
        raise BelowTransitionError(
            f"Eigenvalue {float(np.min(lams))!r} is not above the bulk edge {bulk_edge(gamma)!r}"
        )
    shifted = lams - 1.0 - gamma
    disc = np.clip(shifted * shifted - 4.0 * gamma, 0.0, None)
    return _out((shifted + np.sqrt(disc)) / 2.0)


def cosine_sq(ell: ArrayLike, gamma: float) -> ArrayLike:
    """Asymptotic squared cosine (1−γ/ℓ²)/(1+γ/ℓ) above ℓ = √γ, else 0"""
    ells = np.asarray(ell, dtype=float)
    above = ells > math.sqrt(gamma)
    safe = np.where(above, ells, 1.0)
    value = np.where(above, (1.0 - gamma / (safe * safe)) / (1.0 + gamma / safe), 0.0)
    return _out(np.clip(value, 0.0, 1.0))


# ----------------------------------------------------------------------------
# SNR improvement diagnostics
# ----------------------------------------------------------------------------

def snr_improvement(v: np.ndarray, D: np.ndarray) -> float:
    """SNR gain of homogenization: (tr D/p)·(vᵀD⁻¹v)/(vᵀv)"""
    v = np.asarray(v, dtype=float)
    D = np.asarray(D, dtype=float)
    if np.all(D == D[0]):
        return 1.0
    energy = float(np.sum(v * v))
    return float(np.mean(D) * np.sum(v * v / D) / energy)


def beta_heteroskedasticity(D: np.ndarray) -> float:
    """β = (ΣD_i · ΣD_i⁻¹)/p² ≥ 1, with equality iff D is constant"""
    D = np.asarray(D, dtype=float)
    if np.all(D == D[0]):
        return 1.0
    p = D.size
    return float(max(1.0, np.sum(D) * np.sum(1.0 / D) / (p * p)))


def estimated_improvement(model: CovarianceModel, index: int) -> float:
    """Î = τ_i/α̂_i for a kept spike; 1 for spikes below the transition"""
    if index < 0 or index >= model.rank:
        raise IndexError(f"Spike index {index} outside rank {model.rank}")
    if index >= model.kept_count:
        return 1.0
    return float(model.taus[index] / model.alphas[index])
