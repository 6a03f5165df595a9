"""Two-photon scattering: connected kernel, bound state and G2 correlations.

Kernels are coefficients of the energy delta function delta(p1 + p2 - k1 - k2).
G2 uses the raw normalization in which a two-photon plane wave with
k1 = k2 gives 1/pi^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .coupling import SystemSpec, as_model
from .errors import DomainError, QuadratureError, UnsupportedConfigurationError
from .single_photon import s1_amplitude

SQRT2PI = math.sqrt(2.0) * math.pi


@dataclass(frozen=True)
class EffectiveCavity:
    """Non-Hermitian cavity Hamiltonian restricted to 0, 1, 2 excitations."""

    omega: float
    sigma: complex
    chi: float

    @classmethod
    def of(cls, system) -> "EffectiveCavity":
        m = as_model(system)
        return cls(m.omega, m.sigma, m.chi)

    @property
    def levels(self) -> np.ndarray:
        e1 = self.omega - 1j * self.sigma
        e2 = 2.0 * e1 + self.chi
        return np.array([0.0, e1, e2])

    def hamiltonian(self) -> np.ndarray:
        if math.isinf(self.chi):
            raise UnsupportedConfigurationError("the 3-level ladder needs a finite chi")
        return np.diag(self.levels)

    @staticmethod
    def annihilation() -> np.ndarray:
        return np.diag(np.sqrt([1.0, 2.0]), k=1).astype(complex)

    def propagator_diagonal(self, s) -> np.ndarray:
        """exp(-i H s) for each s; H is diagonal in the number basis."""
        return np.exp(-1j * np.outer(np.asarray(s, dtype=float), self.levels))


@dataclass(frozen=True)
class TwoPhotonKernel:
    p1: float
    k1: float
    k2: float
    channels: tuple
    amplitude: complex
    error_estimate: float = 0.0

    @property
    def p2(self) -> float:
        return self.k1 + self.k2 - self.p1


@dataclass(frozen=True)
class QuadratureParams:
    """Relative-time quadrature on [0, t_max_factor/Re Sigma] with step step_factor/Re Sigma."""

    t_max_factor: float = 40.0
    step_factor: float = 0.01
    abs_tol: float = 1e-6
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.t_max_factor <= 0 or self.step_factor <= 0:
            raise DomainError("quadrature span and step must be positive")
        if self.step_factor * 4 > self.t_max_factor:
            raise DomainError("quadrature step too coarse for the span")


@dataclass(frozen=True)
class CorrelationTrace:
    tau_values: np.ndarray
    g2_values: np.ndarray
    baseline: float
    k1: float
    k2: float
    channel: int = 1
    incident_channel: int = 1
    meta: dict = field(default_factory=dict)

    def normalized(self) -> np.ndarray:
        return self.g2_values / self.baseline


def _channels(m, channels):
    if len(channels) != 4:
        raise DomainError(f"expected four channel labels, got {channels!r}")
    mu, nu, rho, sg = (m.channel_index(c) for c in channels)
    return m.d[mu] * m.d[nu] * m.kappa[rho] * m.kappa[sg]


def _require_atom(m, what):
    if not m.is_atom:
        raise UnsupportedConfigurationError(
            f"{what} has a closed form only for chi = inf; use connected_kernel_numeric for finite chi"
        )


def connected_kernel(system, channels, p1, k1: float, k2: float):
    """Connected two-photon S-matrix coefficient in the two-level limit.

    (i/pi) d_mu d_nu kappa_rho kappa_sigma (E - 2 Omega + 2 i Sigma)
        / [(p1 - Omega + i Sigma)(p2 - Omega + i Sigma)(k1 - Omega + i Sigma)(k2 - Omega + i Sigma)]
    with p2 = k1 + k2 - p1.  `p1` may be an array.
    """
    m = as_model(system)
    _require_atom(m, "connected_kernel")
    pref = _channels(m, channels)
    z = m.omega - 1j * m.sigma
    p1 = np.asarray(p1, dtype=float)
    energy = k1 + k2
    p2 = energy - p1
    val = (1j / math.pi) * pref * (energy - 2 * z) / ((p1 - z) * (p2 - z) * (k1 - z) * (k2 - z))
    return complex(val) if val.ndim == 0 else val


def _simpson_pair(samples, h):
    """Simpson integrals of samples along axis 0 at step h and 2h."""
    fine = simpson(samples, dx=h, axis=0)
    coarse = simpson(samples[::2], dx=2 * h, axis=0)
    return fine, coarse


def connected_kernel_numeric(system, channels, p1: float, k1: float, k2: float, quad: QuadratureParams | None = None) -> TwoPhotonKernel:
    """Connected kernel of a Kerr cavity with finite chi from the effective Hamiltonian.

    Only orderings creation, creation, annihilation, annihilation reach the
    doubly excited level, so the connected part is the difference between
    those contributions at chi and at chi = 0.  With relative times s1 (one
    excitation), s2 (two) and s3 (one), the s2 integral is the resolvent
    i (E - H)^-1 and the (s1, s3) integral factorizes, so the 2-D composite
    Simpson rule reduces to two vector-valued 1-D rules.
    """
    quad = quad or QuadratureParams()
    m = as_model(system)
    if m.is_atom:
        raise UnsupportedConfigurationError("connected_kernel_numeric needs a finite chi; use connected_kernel")
    pref = _channels(m, channels)
    gamma = m.sigma.real
    n = int(math.ceil(quad.t_max_factor / quad.step_factor / 4.0)) * 4
    h = quad.t_max_factor / gamma / n
    s = h * np.arange(n + 1)
    energy = k1 + k2
    p2 = energy - p1

    a = EffectiveCavity.annihilation()
    vac = np.array([1.0, 0.0, 0.0], dtype=complex)

    def projected(chi):
        cav = EffectiveCavity(m.omega, m.sigma, chi)
        u = cav.propagator_diagonal(s)  # (n+1, 3)
        col = a.conj().T @ vac  # a^dag |0>
        row = vac @ a  # <0| a
        middle = a @ (1j * np.linalg.inv(energy * np.eye(3) - cav.hamiltonian())) @ a.conj().T
        fine = coarse = 0.0
        for ka in (k1, k2):
            vin_f, vin_c = _simpson_pair(np.exp(1j * ka * s)[:, None] * u * col[None, :], h)
            for pd in (p1, p2):
                vout_f, vout_c = _simpson_pair(np.exp(1j * pd * s)[:, None] * u * row[None, :], h)
                fine = fine + vout_f @ middle @ vin_f
                coarse = coarse + vout_c @ middle @ vin_c
        return fine, coarse

    full_f, full_c = projected(m.chi)
    lin_f, lin_c = projected(0.0)
    fine = pref / (2 * math.pi) * (full_f - lin_f)
    coarse = pref / (2 * math.pi) * (full_c - lin_c)
    value = fine + (fine - coarse) / 15.0
    err = abs(fine - coarse) / 15.0 + math.exp(-quad.t_max_factor) * abs(value)
    if err > quad.abs_tol + quad.rel_tol * abs(value):
        raise QuadratureError(
            f"kernel quadrature error {err:.2e} exceeds tolerance at p1={p1}", achieved_error=err, value=value
        )
    return TwoPhotonKernel(p1=float(p1), k1=float(k1), k2=float(k2), channels=tuple(channels),
                           amplitude=complex(value), error_estimate=float(err))


def plane_wave_pair(k1, k2, x1, x2):
    """Symmetrized two-photon plane wave P_{k1 k2}(x1, x2)."""
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    return (np.exp(1j * (k1 * x1 + k2 * x2)) + np.exp(1j * (k1 * x2 + k2 * x1))) / (2.0 * SQRT2PI)


def bound_state(system, mu: int, nu: int, k1: float, k2: float, x1, x2):
    """Two-photon bound state H_{mu nu}(x1, x2) for both photons incident in nu.

    (1/(sqrt2 pi)) d_mu^2 kappa_nu^2 e^{iE(x1+x2)/2} e^{i(E/2 - Omega + i Sigma)|x1-x2|}
        / [(k1 - Omega + i Sigma)(k2 - Omega + i Sigma)]

    The relative-coordinate factor decays as exp(-Re Sigma |x1 - x2|).
    """
    m = as_model(system)
    _require_atom(m, "bound_state")
    i, j = m.channel_index(mu), m.channel_index(nu)
    z = m.omega - 1j * m.sigma
    energy = k1 + k2
    x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
    pref = m.d[i] ** 2 * m.kappa[j] ** 2 / (SQRT2PI * (k1 - z) * (k2 - z))
    val = pref * np.exp(0.5j * energy * (x1 + x2)) * np.exp(1j * (0.5 * energy - z) * np.abs(x1 - x2))
    return complex(val) if val.ndim == 0 else val


def outgoing_wavefunction(system, mu: int, nu: int, k1: float, k2: float, x1, x2):
    """t(k1) t(k2) P_{k1 k2}(x1, x2) + H(x1, x2) for both photons leaving in mu."""
    tt = s1_amplitude(system, mu, nu, k1) * s1_amplitude(system, mu, nu, k2)
    val = tt * plane_wave_pair(k1, k2, x1, x2) + bound_state(system, mu, nu, k1, k2, x1, x2)
    return complex(val) if np.ndim(val) == 0 else val


def g2_trace(system, k1: float, k2: float, tau_grid, channel: int = 1, incident_channel: int = 1, y: float = 0.0) -> CorrelationTrace:
    """G2(tau) = 2 |t t P(y + tau, y) + H(y + tau, y)|^2.

    For k1 = k2 the y dependence is a global phase.  For k1 != k2 the trace
    keeps the beat of the plane-wave pair; y is pinned (0 by default) and the
    baseline is the beat-averaged asymptote.
    """
    tau = np.asarray(tau_grid, dtype=float).ravel()
    psi = outgoing_wavefunction(system, channel, incident_channel, k1, k2, y + tau, np.full_like(tau, y))
    g2 = 2.0 * np.abs(psi) ** 2
    tt = abs(s1_amplitude(system, channel, incident_channel, k1) * s1_amplitude(system, channel, incident_channel, k2)) ** 2
    same = k1 == k2
    baseline = tt / math.pi**2 if same else tt / (2.0 * math.pi**2)
    meta = {} if same else {"y": float(y), "baseline": "beat-averaged"}
    return CorrelationTrace(tau_values=tau, g2_values=g2, baseline=baseline, k1=float(k1), k2=float(k2),
                            channel=channel, incident_channel=incident_channel, meta=meta)


def _fano_params(spec):
    if not isinstance(spec, SystemSpec):
        raise TypeError("closed-form E profiles need a SystemSpec")
    spec.require_two_port()
    if not spec.is_atom:
        raise UnsupportedConfigurationError("closed-form E profiles need chi = inf")
    # parity flips the sign with which r enters t_11; a Lamb shift moves the centre
    return spec.t_bg, spec.parity * spec.r, spec.omega + spec.sigma.imag, spec.sigma.real


def _detuning(spec, energy):
    t, r, centre, gamma = _fano_params(spec)
    return t, r, (0.5 * np.asarray(energy, dtype=float) - centre) / gamma


def _scalar(val):
    return float(val) if np.ndim(val) == 0 else val


def product_weight(spec: SystemSpec, energy):
    """|t11 t11 / (sqrt2 pi)|^2 at k1 = k2 = E/2."""
    t, r, x = _detuning(spec, energy)
    return _scalar((t * x + r) ** 4 / (x * x + 1) ** 2 / (2 * math.pi**2))


def fluorescence_weight(spec: SystemSpec, energy):
    """|H11(0, 0)|^2 at k1 = k2 = E/2; independent of the background."""
    _, _, x = _detuning(spec, energy)
    return _scalar(1.0 / (x * x + 1) ** 2 / (2 * math.pi**2))


def g2_zero_closed(spec: SystemSpec, energy):
    """Half the equal-time correlation, G2(0)/2, at k1 = k2 = E/2.

    (1/(2 pi^2)) |(t x + r)^2 + (t + i r)^2|^2 / (x^2 + 1)^2 with x = (E/2 - Omega)/Sigma.
    """
    t, r, x = _detuning(spec, energy)
    num = np.abs((t * x + r) ** 2 + (t + 1j * r) ** 2) ** 2
    return _scalar(num / (x * x + 1) ** 2 / (2 * math.pi**2))


def g2_zero_compact(spec: SystemSpec, energy):
    """Same quantity written as a Lorentzian-squared times |(...)^2 e^{-2i theta} + 1|^2.

    theta = arccos(t) carries the sign of r; this is a cross-check of
    `g2_zero_closed`, not an independent formula.
    """
    t, r, x = _detuning(spec, energy)
    theta = math.copysign(math.acos(t), r) if r != 0 else 0.0
    inner = np.abs((t * x + r) ** 2 * np.exp(-2j * theta) + 1.0) ** 2
    return _scalar(inner / (x * x + 1) ** 2 / (2 * math.pi**2))
