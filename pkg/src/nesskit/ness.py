"""Kernel vectors of the zero-sector level shift operator and the NESS weights."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, PerronFrobeniusError
from .levelshift import ZERO_EIG_TOL, assemble_lambda_zero, spectral_certificate
from .model import ParticleSystem, ReservoirSpec, gibbs_vector, partition_function

SIGN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class NessSolution:
    """Kernel vectors ``zeta`` (of Lambda_0) and ``zeta_star`` (of its adjoint).

    ``gamma`` are the components of ``zeta_star`` at beta_p = 0, normalized
    to sum to sqrt(N); ``populations`` = gamma / sqrt(N).
    """

    zeta: np.ndarray
    zeta_star: np.ndarray
    gamma: np.ndarray
    populations: np.ndarray
    residuals: tuple
    beta_p: float
    particle: ParticleSystem
    reservoirs: tuple

    @property
    def overlap(self) -> float:
        return float(np.dot(self.zeta_star, self.zeta))


def null_vector(A: np.ndarray, zero_tol: float = ZERO_EIG_TOL) -> np.ndarray:
    """Eigenvector of the smallest-modulus eigenvalue, refined by one inverse-iteration step."""
    lam, V = np.linalg.eig(A)
    k = int(np.argmin(np.abs(lam)))
    v = V[:, k]
    shift = lam[k]
    scale = np.linalg.norm(A, 2) + 1.0
    if abs(shift) < 1e-15 * scale:
        shift = 1e-15 * scale
    try:
        w = np.linalg.solve(A - shift * np.eye(A.shape[0]), v)
    except np.linalg.LinAlgError:
        w = v
    if np.all(np.isfinite(w)) and np.linalg.norm(w) > 0:
        v = w
    return v / np.linalg.norm(v)


def positive_phase(v: np.ndarray, sign_tol: float = SIGN_TOL) -> np.ndarray:
    """Rotate ``v`` so its largest entry is real positive; require a single sign."""
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    top = np.abs(v).max()
    if np.any(v.real < -sign_tol * top) or np.any(np.abs(v.imag) > sign_tol * top):
        raise PerronFrobeniusError(
            "kernel vector is not single-signed; golden-rule rates may vanish "
            f"or the solve broke down: {np.round(v, 12).tolist()}")
    return v.real


def solve_ness(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec],
               zero_tol: float = ZERO_EIG_TOL, sign_tol: float = SIGN_TOL) -> NessSolution:
    L0 = assemble_lambda_zero(p, reservoirs, beta_p=0.0)
    spectral_certificate(L0, zero_tol).require()
    N = p.n
    v = positive_phase(null_vector(L0.conj().T, zero_tol), sign_tol)
    gamma = v * math.sqrt(N) / v.sum()
    sol0 = NessSolution(zeta=gibbs_vector(p, 0.0), zeta_star=gamma, gamma=gamma,
                        populations=gamma / math.sqrt(N), residuals=(),
                        beta_p=0.0, particle=p, reservoirs=tuple(reservoirs))
    zeta = gibbs_vector(p, p.beta_p)
    zeta_star = convert_beta_p(sol0, p.beta_p, p, check=False)
    Lp = assemble_lambda_zero(p, reservoirs, p.beta_p)
    residuals = (float(np.linalg.norm(Lp @ zeta)), float(np.linalg.norm(Lp.conj().T @ zeta_star)))
    return NessSolution(zeta=zeta, zeta_star=zeta_star, gamma=gamma,
                        populations=gamma / math.sqrt(N), residuals=residuals,
                        beta_p=p.beta_p, particle=p, reservoirs=tuple(reservoirs))


def convert_beta_p(sol: NessSolution, target_beta_p: float, p: ParticleSystem | None = None,
                   check: bool = True, tol: float = 1e-9) -> np.ndarray:
    """Adjoint kernel vector at another particle inverse temperature.

    Returns sqrt(Z(beta_p) / N) exp(beta_p E_j / 2) gamma_j.  With ``check``
    the result is verified against Lambda_0(beta_p) to relative residual ``tol``.
    """
    p = sol.particle if p is None else p
    N = p.n
    E = p.E
    v = math.sqrt(partition_function(p, target_beta_p) / N) * np.exp(target_beta_p * E / 2) * sol.gamma
    if check:
        L = assemble_lambda_zero(p, sol.reservoirs, target_beta_p)
        res = np.linalg.norm(L.conj().T @ v)
        if res > tol * (1 + np.linalg.norm(L, 2)) * np.linalg.norm(v):
            raise PerronFrobeniusError(f"converted vector is not an adjoint kernel vector "
                                       f"(residual {res:.3g})")
    return v


def two_level_closed_form(E: float, beta1: float, beta2: float, g1E: float, g2E: float):
    """Weights (gamma_1, gamma_2, alpha) for two levels at spacing E.

    gamma_1 belongs to the lower level.  ``g1E``/``g2E`` are the on-shell
    coupling strengths of the two reservoirs; only their ratio matters.
    """
    if not E > 0:
        raise ConfigError("level spacing E must be positive")
    if not g1E + g2E > 0:
        raise ConfigError("at least one reservoir must couple the two levels")
    rho1 = 1.0 / math.expm1(beta1 * E)
    rho2 = 1.0 / math.expm1(beta2 * E)
    alpha = 1.0 + (g1E + g2E) / (g1E * rho1 + g2E * rho2)
    s = math.sqrt(2.0)
    return s * alpha / (alpha + 1), s / (alpha + 1), alpha
