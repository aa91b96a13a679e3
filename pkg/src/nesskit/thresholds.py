"""Numeric diagnostics for the weak-coupling regime.

Constants that are only specified up to an unnamed multiplicative factor are
set to 1; the resulting g0, g1 and cone parameter are order-of-magnitude
indicators, not guarantees.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.special import gamma as gamma_fn

from .errors import ConfigError, IntegrabilityError, NumericalError
from .model import AngularMomentFormFactor, ParticleSystem, PowerGaussianFormFactor, ReservoirSpec

UNSPECIFIED_CONSTANT = 1.0
QUAD_ABS_TOL = 1e-10
# exp(-2 u^2) < 1e-300 beyond this radius
GAUSSIAN_TAIL_CUT = math.sqrt(300 * math.log(10) / 2)


def fgr_constant(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec]) -> float | None:
    """Minimal on-shell coupling min_j min_{n<m} E_mn^2 S^(j)_mn; None when N = 1."""
    if p.n < 2:
        return None
    best = math.inf
    for r in reservoirs:
        for m in range(p.n):
            for n in range(m):
                w = p.energies[m] - p.energies[n]
                best = min(best, w * w * r.form_factor.moment(w, m, n))
    return float(best)


def sa_integral(ff) -> float | None:
    """Integral of (1 + 1/|k|) ||G(k)||^2 over momentum space; None for tabulated couplings."""
    if not isinstance(ff, PowerGaussianFormFactor):
        return None
    a = ff.alpha
    # int_0^inf u^q exp(-2u^2) du = Gamma((q+1)/2) / (2 * 2^((q+1)/2))
    mom = lambda q: gamma_fn((q + 1) / 2) / (2 * 2 ** ((q + 1) / 2))
    radial = mom(2 * a + 2) + mom(2 * a + 1)
    return float(4 * math.pi * ff.amplitude ** 2 * np.linalg.norm(ff.coupling, 2) ** 2 * radial)


def _radial_weight_integral(alpha: float, nu: float, dbeta: float, abs_tol: float = QUAD_ABS_TOL) -> float:
    """int_0^inf u (u+1) u^(-2 nu) exp(dbeta u) u^(2 alpha) exp(-2 u^2) du."""
    p = 1 - 2 * nu + 2 * alpha
    if p <= -1:
        raise IntegrabilityError(
            f"weighted norm diverges at u -> 0 for nu={nu:g}, alpha={alpha:g} (needs nu < alpha + 1)")
    # the algebraic factor u^p is handled by the quadrature weight
    f = lambda u: (u + 1) * math.exp(dbeta * u - 2 * u * u)
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, 0.0, GAUSSIAN_TAIL_CUT, weight="alg", wvar=(p, 0.0),
                                      epsabs=abs_tol, epsrel=1e-12, limit=200)
        except integrate.IntegrationWarning as exc:
            raise NumericalError(f"norm quadrature did not converge: {exc}") from None
    return val


def _weighted_norm(reservoir: ReservoirSpec, other_beta: float, nus) -> float:
    ff = reservoir.form_factor
    if isinstance(ff, AngularMomentFormFactor):
        raise ConfigError("weighted coupling norms need radial data; tabulated angular moments "
                          "only fix the on-shell values")
    beta = max(reservoir.beta, other_beta)
    dbeta = reservoir.beta - beta  # <= 0
    scale = ff.amplitude * float(np.linalg.norm(ff.coupling, 2))
    total = 0.0
    for nu in nus:
        # sphere factor 4 pi, both glued half-lines give factor 2
        total += math.sqrt(8 * math.pi * _radial_weight_integral(ff.alpha, nu, dbeta))
    return scale * total


def condition_b_norm(reservoir: ReservoirSpec, other_beta: float, mu: float) -> float:
    """Weighted coupling norm summed over nu in {1/2, mu} at zero deformation."""
    if not mu > 0.5:
        raise ConfigError("mu must exceed 1/2")
    return _weighted_norm(reservoir, other_beta, (0.5, mu))


def half_norm(reservoir: ReservoirSpec, other_beta: float) -> float:
    """The same weighted norm with mu = 1/2 (single term)."""
    return _weighted_norm(reservoir, other_beta, (0.5,))


def alpha_exponent(mu: float) -> float:
    return (mu - 0.5) / (mu + 0.5)


def g1_from(g0: float, alpha: float, betas) -> float:
    thermal = min(1.0 / b for b in betas) ** (1.0 / (2.0 + alpha))
    if math.isinf(g0):
        return thermal
    return min(g0 ** (1.0 / alpha), thermal)


@dataclass(frozen=True)
class Thresholds:
    g0: float
    g1: float
    alpha: float
    level_gap: float
    half_norms: tuple
    constant: float = UNSPECIFIED_CONSTANT

    @property
    def uncoupled(self) -> bool:
        return math.isinf(self.g0)


def coupling_thresholds(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], mu: float,
                        delta0: float, half_norms=None) -> Thresholds:
    if p.n < 2:
        raise ConfigError("coupling thresholds need at least two levels")
    if not 0 < delta0 < math.pi / 2:
        raise ConfigError("delta0 must lie in (0, pi/2)")
    if not mu > 0.5:
        raise ConfigError("mu must exceed 1/2")
    b1, b2 = reservoirs[0].beta, reservoirs[1].beta
    if half_norms is None:
        half_norms = (half_norm(reservoirs[0], b2), half_norm(reservoirs[1], b1))
    sigma = p.level_gap()
    c0 = 1 + b1 ** -0.5 + b2 ** -0.5
    top = max(half_norms)
    g0 = math.inf if top == 0 else UNSPECIFIED_CONSTANT * math.sqrt(sigma) * math.sin(delta0) / (c0 * top)
    a = alpha_exponent(mu)
    return Thresholds(g0=g0, g1=g1_from(g0, a, (b1, b2)), alpha=a, level_gap=sigma,
                      half_norms=tuple(half_norms))


def remainder_scale(g: float, rho: float, mu: float) -> float:
    """|g| rho^mu + |g|^3 rho^(-1/2) + |g|^2 rho^(2 mu - 1)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    g = abs(g)
    return g * rho ** mu + g ** 3 * rho ** -0.5 + g ** 2 * rho ** (2 * mu - 1)


def cone_parameter(g: float, im_delta: float, reservoirs: Sequence[ReservoirSpec],
                   half_norms=None) -> float:
    """Lower bound (up to a constant) on the cone offset containing the deformed spectrum."""
    b1, b2 = reservoirs[0].beta, reservoirs[1].beta
    if half_norms is None:
        half_norms = (half_norm(reservoirs[0], b2), half_norm(reservoirs[1], b1))
    c0 = UNSPECIFIED_CONSTANT * (1 + b1 ** -0.5 + b2 ** -0.5)
    return g * g / math.sin(im_delta) * c0 ** 2 * sum(half_norms) ** 2


@dataclass(frozen=True)
class ConditionReport:
    fgr_gamma0: float | None
    sa_integral: float | None
    condB_norms: tuple | None
    g0: float | None
    g1: float | None
    alpha_exponent: float
    cone_a: float | None
    epsilon_g_rho: float | None
    beta_difference: float
    min_beta: float
    flags: dict = field(default_factory=dict)
    g_below_g1: bool | None = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v is not False for v in self.flags.values())


def check_conditions(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], g: float,
                     mu: float = 1.5, delta0: float = math.pi / 4) -> ConditionReport:
    """Evaluate every diagnostic that the model data allow.

    Flags are True/False, or None when a condition cannot be decided from
    the given data (e.g. norms of tabulated couplings).
    """
    notes = ["g0, g1 and cone_a are given up to an unspecified multiplicative constant (taken 1)"]
    flags = {}
    a = alpha_exponent(mu)
    b1, b2 = reservoirs[0].beta, reservoirs[1].beta

    gamma0 = fgr_constant(p, reservoirs)
    flags["D"] = None if gamma0 is None else bool(gamma0 > 0)
    if gamma0 is None:
        notes.append("golden-rule constant not applicable for a single level")

    sa = [sa_integral(r.form_factor) for r in reservoirs]
    if any(v is None for v in sa):
        sa_val = None
        flags["A"] = None
    else:
        sa_val = max(sa)
        flags["A"] = bool(math.isfinite(sa_val))

    flags["C"] = True
    degenerate = p.degenerate_bohr_pairs()
    if degenerate:
        notes.append(f"degenerate Bohr frequencies: {degenerate}")

    norms = g0 = g1 = cone = eps = None
    radial = all(isinstance(r.form_factor, PowerGaussianFormFactor) for r in reservoirs)
    if radial:
        try:
            norms = (condition_b_norm(reservoirs[0], b2, mu), condition_b_norm(reservoirs[1], b1, mu))
            flags["B"] = True
        except IntegrabilityError as exc:
            flags["B"] = False
            notes.append(str(exc))
        halves = (half_norm(reservoirs[0], b2), half_norm(reservoirs[1], b1))
        if p.n >= 2:
            th = coupling_thresholds(p, reservoirs, mu, delta0, half_norms=halves)
            g0, g1 = th.g0, th.g1
        cone = cone_parameter(g, delta0, reservoirs, half_norms=halves)
        if g != 0:
            eps = remainder_scale(g, abs(g) ** (2 - 2 * a), mu)
    else:
        flags["B"] = None
        notes.append("weighted norms need radial coupling data; skipped for tabulated moments")

    flags["E"] = True if p.n == 2 else None
    below = None if g1 is None else bool(abs(g) < g1)
    return ConditionReport(fgr_gamma0=gamma0, sa_integral=sa_val, condB_norms=norms, g0=g0, g1=g1,
                           alpha_exponent=a, cone_a=cone, epsilon_g_rho=eps,
                           beta_difference=abs(b1 - b2), min_beta=min(b1, b2),
                           flags=flags, g_below_g1=below, notes=notes)
