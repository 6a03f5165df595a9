"""Lanczos propagation of exp(-i H t) for Hermitian operators given as a matvec."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal


@dataclass
class PropagationStats:
    steps: int = 0
    matvecs: int = 0
    max_dim: int = 0
    max_error: float = 0.0


def _lanczos_step(apply, v, dt, tol, max_dim, stats):
    """exp(-i dt A) v, or None if the Krylov space of size max_dim is not enough."""
    beta0 = np.linalg.norm(v)
    if beta0 == 0.0:
        return v.copy()
    basis = np.empty((max_dim + 1, v.size), dtype=complex)
    basis[0] = v / beta0
    alpha = np.zeros(max_dim)
    beta = np.zeros(max_dim)
    for j in range(max_dim):
        w = apply(basis[j])
        stats.matvecs += 1
        alpha[j] = np.vdot(basis[j], w).real
        # two passes of full Gram-Schmidt keep the basis orthonormal to roundoff
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        beta[j] = np.linalg.norm(w)
        dim = j + 1
        evals, evecs = eigh_tridiagonal(alpha[:dim], beta[: dim - 1]) if dim > 1 else (alpha[:1], np.ones((1, 1)))
        coef = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
        err = beta0 * beta[j] * abs(coef[-1])
        if beta[j] <= 1e-14 * beta0 or err <= tol:
            stats.max_dim = max(stats.max_dim, dim)
            stats.max_error = max(stats.max_error, err)
            return beta0 * (coef @ basis[:dim])
        basis[j + 1] = w / beta[j]
    return None


def propagate(apply, psi0, total_time, dt, tol=1e-10, max_dim=40, shift=0.0, stats=None):
    """Evolve psi0 under H for `total_time` with Lanczos steps of at most `dt`.

    `apply(v)` returns H v for a flat complex vector.  `shift` is an energy
    offset removed inside the Krylov iteration and restored as a phase; it
    only reduces the spectral range the iteration has to resolve.  A step
    whose error estimate cannot reach `tol` within `max_dim` vectors is
    halved, so the schedule depends only on the inputs.
    """
    stats = stats if stats is not None else PropagationStats()
    psi = np.array(psi0, dtype=complex).ravel()
    if total_time == 0:
        return psi, stats
    nsteps = max(1, math.ceil(total_time / dt - 1e-12))
    h = total_time / nsteps

    def shifted(v):
        return apply(v) - shift * v

    def advance(vec, step, depth=0):
        out = _lanczos_step(shifted, vec, step, tol, max_dim, stats)
        if out is not None:
            stats.steps += 1
            return out
        if depth > 20:
            raise RuntimeError("Lanczos propagation failed to converge")
        half = advance(vec, step / 2, depth + 1)
        return advance(half, step / 2, depth + 1)

    for _ in range(nsteps):
        psi = advance(psi, h)
    return psi * np.exp(-1j * shift * total_time), stats
