"""Single-photon scattering amplitudes t_{mu nu}(k) and Fano line-shape features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import as_model
from .errors import DomainError

# below this |C_ij| a background entry counts as absent
_ZERO_ENTRY = 1e-12


@dataclass(frozen=True)
class SpectralGrid:
    k_values: np.ndarray

    def __post_init__(self):
        k = np.array(self.k_values, dtype=float).ravel()
        if k.size == 0:
            raise DomainError("spectral grid is empty")
        if not np.all(np.isfinite(k)):
            raise DomainError("spectral grid contains non-finite values")
        if np.any(np.diff(k) <= 0):
            raise DomainError("spectral grid must be strictly increasing")
        k.setflags(write=False)
        object.__setattr__(self, "k_values", k)

    @classmethod
    def linspace(cls, k_min: float, k_max: float, points: int) -> "SpectralGrid":
        if points < 1:
            raise DomainError(f"points must be positive, got {points}")
        if points > 1 and not k_max > k_min:
            raise DomainError(f"k_max must exceed k_min, got [{k_min}, {k_max}]")
        return cls(np.linspace(k_min, k_max, points))

    def __len__(self):
        return len(self.k_values)


@dataclass(frozen=True)
class AmplitudeTable:
    """t[i, mu, nu] = t_{mu+1, nu+1}(k_i) on a spectral grid."""

    grid: SpectralGrid
    amplitudes: np.ndarray
    complex_sigma: bool

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def t(self, mu: int, nu: int) -> np.ndarray:
        return self.amplitudes[:, mu - 1, nu - 1]

    @property
    def unitarity_residual(self) -> np.ndarray:
        """Per-k max over incident channels of |sum_mu |t_{mu nu}|^2 - 1|."""
        return np.max(np.abs(self.probabilities.sum(axis=1) - 1.0), axis=1)


@dataclass(frozen=True)
class FanoFeatures:
    k_zero: float | None
    k_peak: float | None


def s1_amplitude(system, mu: int, nu: int, k):
    """t_{mu nu}(k) = C_{mu nu} + d_mu kappa_nu i / (k - Omega + i Sigma).

    Channels are labelled 1..N.  `k` may be a scalar or an array.
    """
    m = as_model(system)
    i, j = m.channel_index(mu), m.channel_index(nu)
    k = np.asarray(k, dtype=float)
    val = m.c_matrix[i, j] + m.d[i] * m.kappa[j] * 1j / (k - m.omega + 1j * m.sigma)
    return complex(val) if val.ndim == 0 else val


def transmission_spectrum(system, grid: SpectralGrid) -> AmplitudeTable:
    m = as_model(system)
    k = grid.k_values
    pole = 1j / (k - m.omega + 1j * m.sigma)
    amps = m.c_matrix[None, :, :] + np.outer(m.d, m.kappa)[None, :, :] * pole[:, None, None]
    amps.setflags(write=False)
    return AmplitudeTable(grid=grid, amplitudes=amps, complex_sigma=m.complex_sigma)


def unitarity_residual(system, grid: SpectralGrid) -> float:
    return float(np.max(transmission_spectrum(system, grid).unitarity_residual))


def fano_features(system) -> FanoFeatures:
    """Transmission zero and unit-transmission point of t_11.

    Both are real roots of a linear numerator: t_11 vanishes where
    C_11 (k - Omega + i Sigma) + i d_1 kappa_1 = 0, and |t_11| = 1 where t_21
    vanishes.  For the two-port background with real Sigma this gives
    k_zero = Omega - r Sigma / t and k_peak = Omega + t Sigma / r.
    """
    m = as_model(system)
    c, d, kappa = m.c_matrix, m.d, m.kappa

    def root(c_entry, dd):
        if abs(c_entry) <= _ZERO_ENTRY:
            return None
        return float((m.omega - 1j * m.sigma - 1j * dd / c_entry).real)

    return FanoFeatures(k_zero=root(c[0, 0], d[0] * kappa[0]), k_peak=root(c[1, 0], d[1] * kappa[0]))
