"""Parameter model of the input-output description and its constraint algebra.

A scatterer is described by four objects: the direct (background) scattering
matrix C, the output and input coupling vectors d and kappa, and the complex
self-energy Sigma of the resonance.  Physical consistency (flux conservation,
time-reversal symmetry, causality) ties them together:

    C C^dag = 1,   C = C^T,   C d* = -d,   d^dag d = Sigma + Sigma*,   kappa = d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UnsupportedConfigurationError

DEFAULT_TOL = 1e-12


def _readonly(a, dtype=complex):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _wrap_phase(phi):
    # map onto [-pi, pi)
    return (float(phi) + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class SystemSpec:
    """One physical configuration: resonator plus two-port background.

    `chi` is the Kerr strength; ``math.inf`` selects the two-level-atom limit.
    `t_bg` is the background transmission amplitude and r = r_sign*sqrt(1-t^2).
    """

    omega: float = 1.0
    sigma: complex = 0.2
    chi: float = math.inf
    t_bg: float = 1.0
    r_sign: int = 1
    phi: float = 0.0
    parity: int = 1
    n_channels: int = 2

    def __post_init__(self):
        sigma = complex(self.sigma)
        if not sigma.real > 0.0:
            raise DomainError(f"Re(sigma) must be positive, got {sigma!r}")
        t = float(self.t_bg)
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t_bg must lie in [0, 1], got {t!r}")
        if self.r_sign not in (1, -1):
            raise DomainError(f"r_sign must be +1 or -1, got {self.r_sign!r}")
        if self.parity not in (1, -1):
            raise DomainError(f"parity must be +1 or -1, got {self.parity!r}")
        chi = float(self.chi)
        if math.isnan(chi) or chi < 0.0:
            raise DomainError(f"chi must be a nonnegative real or inf, got {self.chi!r}")
        if int(self.n_channels) != self.n_channels or self.n_channels < 1:
            raise DomainError(f"n_channels must be a positive integer, got {self.n_channels!r}")
        if not math.isfinite(float(self.omega)) or not math.isfinite(float(self.phi)):
            raise DomainError("omega and phi must be finite")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "t_bg", t)
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "phi", _wrap_phase(self.phi))
        object.__setattr__(self, "n_channels", int(self.n_channels))

    @property
    def r(self) -> float:
        return self.r_sign * math.sqrt(max(0.0, 1.0 - self.t_bg**2))

    @property
    def is_atom(self) -> bool:
        return math.isinf(self.chi)

    @property
    def complex_sigma(self) -> bool:
        return self.sigma.imag != 0.0

    def require_two_port(self):
        if self.n_channels != 2:
            raise UnsupportedConfigurationError(
                f"closed-form engines cover 2 channels only, got n_channels={self.n_channels}"
            )

    def background(self) -> "DirectScattering":
        self.require_two_port()
        return build_two_port_background(self.t_bg, self.r_sign, self.phi)

    def couplings(self) -> "CouplingSet":
        return solve_mirror_coupling(self)

    def model(self) -> "ScatteringModel":
        return ScatteringModel(
            c_matrix=self.background().c_matrix,
            d=self.couplings().d,
            kappa=self.couplings().kappa,
            sigma=self.sigma,
            omega=self.omega,
            chi=self.chi,
        )


@dataclass(frozen=True)
class DirectScattering:
    """Background scattering matrix C (unitarity is checked, not enforced)."""

    c_matrix: np.ndarray

    def __post_init__(self):
        c = _readonly(self.c_matrix)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DomainError(f"c_matrix must be square, got shape {c.shape}")
        object.__setattr__(self, "c_matrix", c)

    @property
    def n_channels(self) -> int:
        return self.c_matrix.shape[0]

    @property
    def unitarity_residual(self) -> float:
        c = self.c_matrix
        return float(np.max(np.abs(c @ c.conj().T - np.eye(len(c)))))

    @property
    def symmetry_residual(self) -> float:
        return float(np.max(np.abs(self.c_matrix - self.c_matrix.T)))


@dataclass(frozen=True)
class CouplingSet:
    d: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        d = _readonly(self.d)
        kappa = _readonly(self.kappa)
        if d.ndim != 1 or kappa.shape != d.shape:
            raise DomainError(f"d and kappa must be equal-length vectors, got {d.shape}, {kappa.shape}")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "kappa", kappa)


@dataclass(frozen=True)
class MicroscopicParams:
    """Cavity-channel couplings xi and direct channel-channel couplings V."""

    xi: np.ndarray
    v_matrix: np.ndarray

    def __post_init__(self):
        xi = _readonly(self.xi, float)
        v = _readonly(self.v_matrix, float)
        n = len(xi)
        if xi.ndim != 1 or v.shape != (n, n):
            raise DomainError(f"v_matrix must be {n}x{n} to match xi")
        if np.any(v != v.T):
            raise DomainError("v_matrix must be symmetric")
        if np.any(np.diag(v) != 0.0):
            raise DomainError("v_matrix must have zero diagonal")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "v_matrix", v)

    @property
    def n_channels(self) -> int:
        return len(self.xi)

    @classmethod
    def for_background(cls, t: float, sigma: float = 0.2) -> "MicroscopicParams":
        """Symmetric two-channel couplings giving |C11| = t and Re(Sigma) = sigma."""
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {t!r}")
        v = 2.0 * math.sqrt((1.0 - t) / (1.0 + t))
        # Sigma = xi^2 (1 - i v/2) / (1 + v^2/4) for xi1 = xi2
        xi = math.sqrt(sigma * (1.0 + v * v / 4.0))
        return cls(xi=np.array([xi, xi]), v_matrix=np.array([[0.0, v], [v, 0.0]]))


@dataclass(frozen=True)
class ConstraintReport:
    residuals: dict
    passed: bool
    tolerance: float

    def format(self) -> str:
        lines = [f"{name:<11s} {value:.3e}" for name, value in self.residuals.items()]
        lines.append(f"tolerance   {self.tolerance:.1e}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


@dataclass(frozen=True)
class ScatteringModel:
    """Resolved (C, d, kappa, Sigma) plus resonance frequency and Kerr strength.

    This is what the scattering engines actually consume; a SystemSpec
    resolves to one through `SystemSpec.model`, a microscopic model through
    `ScatteringModel.from_microscopic`.
    """

    c_matrix: np.ndarray
    d: np.ndarray
    kappa: np.ndarray
    sigma: complex
    omega: float
    chi: float = math.inf
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c_matrix", _readonly(self.c_matrix))
        object.__setattr__(self, "d", _readonly(self.d))
        object.__setattr__(self, "kappa", _readonly(self.kappa))
        object.__setattr__(self, "sigma", complex(self.sigma))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "chi", float(self.chi))
        if not self.sigma.real > 0.0:
            raise DomainError(f"Re(sigma) must be positive, got {self.sigma!r}")

    @classmethod
    def from_microscopic(cls, m: MicroscopicParams, omega: float = 1.0, chi: float = math.inf):
        c, coup, sigma = from_microscopic(m)
        return cls(c.c_matrix, coup.d, coup.kappa, sigma, omega, chi)

    @property
    def n_channels(self) -> int:
        return len(self.d)

    @property
    def is_atom(self) -> bool:
        return math.isinf(self.chi)

    @property
    def complex_sigma(self) -> bool:
        return self.sigma.imag != 0.0

    @property
    def resonance(self) -> float:
        """Real part of the pole position, Omega + Im(Sigma)."""
        return self.omega + self.sigma.imag

    def require_two_port(self):
        if self.n_channels != 2:
            raise UnsupportedConfigurationError(
                f"closed-form engines cover 2 channels only, got {self.n_channels}"
            )

    def channel_index(self, mu) -> int:
        """Map a 1-based channel label onto an array index."""
        if int(mu) != mu or not 1 <= mu <= self.n_channels:
            raise DomainError(f"channel must be in 1..{self.n_channels}, got {mu!r}")
        return int(mu) - 1


def as_model(system) -> ScatteringModel:
    if isinstance(system, ScatteringModel):
        system.require_two_port()
        return system
    if isinstance(system, SystemSpec):
        return system.model()
    raise TypeError(f"expected SystemSpec or ScatteringModel, got {type(system).__name__}")


def build_two_port_background(t_bg: float, r_sign: int = 1, phi: float = 0.0) -> DirectScattering:
    """C = e^{i phi} [[t, i r], [i r, t]] with r = r_sign sqrt(1 - t^2)."""
    if not 0.0 <= t_bg <= 1.0:
        raise DomainError(f"t_bg must lie in [0, 1], got {t_bg!r}")
    if r_sign not in (1, -1):
        raise DomainError(f"r_sign must be +1 or -1, got {r_sign!r}")
    r = r_sign * math.sqrt(1.0 - t_bg * t_bg)
    phase = complex(math.cos(phi), math.sin(phi))
    return DirectScattering(phase * np.array([[t_bg, 1j * r], [1j * r, t_bg]]))


def solve_mirror_coupling(spec: SystemSpec) -> CouplingSet:
    """Couplings of a mirror-symmetric two-port resonator.

    d = e^{i phi/2} sqrt(Re Sigma) (i(1+t) - p r) / sqrt(2(1+t)) [1, p]  with p the parity.

    The prefactor is sqrt(Re Sigma): only a real magnitude keeps both
    C d* = -d and d^dag d = 2 Re Sigma when Sigma carries a shift.  For real
    Sigma this is the principal sqrt(Sigma).  A global sign of d cancels in
    every observable.
    """
    spec.require_two_port()
    t, r, p = spec.t_bg, spec.r, spec.parity
    scale = math.sqrt(spec.sigma.real)
    half_phase = complex(math.cos(spec.phi / 2), math.sin(spec.phi / 2))
    d1 = half_phase * scale * (1j * (1.0 + t) - p * r) / math.sqrt(2.0 * (1.0 + t))
    d = np.array([d1, p * d1])
    return CouplingSet(d=d, kappa=d.copy())


def validate_constraints(c: DirectScattering, coup: CouplingSet, sigma: complex, tol: float = DEFAULT_TOL) -> ConstraintReport:
    cm = c.c_matrix
    d, kappa = coup.d, coup.kappa
    if len(d) != cm.shape[0]:
        raise DomainError(f"dimension mismatch: C is {cm.shape}, d has length {len(d)}")
    sigma = complex(sigma)
    two_re = 2.0 * sigma.real
    residuals = {
        "unitarity": float(np.max(np.abs(cm @ cm.conj().T - np.eye(len(cm))))),
        "symmetry": float(np.max(np.abs(cm - cm.T))),
        "cd_star": float(np.max(np.abs(cm @ d.conj() + d))),
        "flux": abs(np.vdot(d, d) - two_re),
        "causality": abs(two_re + 0.5 * (kappa @ cm.conj().T @ d + np.vdot(d, cm @ kappa.conj()))),
        "kappa_eq_d": float(np.max(np.abs(kappa - d))),
    }
    residuals = {k: float(v) for k, v in residuals.items()}
    passed = all(v <= tol for v in residuals.values())
    return ConstraintReport(residuals=residuals, passed=passed, tolerance=tol)


def from_microscopic(m: MicroscopicParams):
    """Cayley-transform map from (xi, V) to (C, couplings, Sigma)."""
    n = m.n_channels
    eye = np.eye(n)
    a = eye + 0.5j * m.v_matrix
    c = (eye - 0.5j * m.v_matrix) @ np.linalg.inv(a)
    a_inv_xi = np.linalg.solve(a, m.xi.astype(complex))
    d = -1j * a_inv_xi
    kappa = -1j * np.linalg.solve(eye + 0.5j * m.v_matrix.T, m.xi.astype(complex))
    sigma = 0.5 * complex(m.xi @ a_inv_xi)
    return DirectScattering(c), CouplingSet(d=d, kappa=kappa), sigma
