"""Leading-order heat fluxes, entropy production and linear response in the temperature difference."""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .levelshift import gamma_single_reservoir, gamma_single_reservoir_dbeta
from .model import ParticleSystem, ReservoirSpec, angular_moment, moment_matrix, partition_function
from .ness import solve_ness

log = logging.getLogger(__name__)


def spectral_coupling(p: ParticleSystem, r: ReservoirSpec, j: int, i: int) -> float:
    """On-shell coupling g_ji(E_ji)^2 = E_ji^2 S_ji for j > i."""
    if j <= i:
        raise ValueError("spectral_coupling requires j > i")
    w = p.energies[j] - p.energies[i]
    return w * w * angular_moment(r.form_factor, p, j, i)


def eta_prime(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], which_reservoir: int,
              gamma) -> float:
    """Leading-order heat flux (per g^2) into reservoir ``which_reservoir``.

    ``gamma`` is the adjoint kernel vector at beta_p = 0 with sum sqrt(N).
    """
    r = reservoirs[which_reservoir - 1]
    gamma = np.asarray(gamma, dtype=float)
    N = p.n
    S = moment_matrix(r.form_factor, p)
    E = p.E
    total = 0.0
    for j in range(N):
        for i in range(j):
            w = E[j] - E[i]
            rho = 1.0 / math.expm1(r.beta * w)
            # (gamma_j e^{bw} - gamma_i) / (e^{bw} - 1) written without cancellation
            total += (gamma[j] * (1 + rho) - gamma[i] * rho) * w * (w * w * S[j, i])
    return 2 * math.pi / math.sqrt(N) * total


def entropy_production(eta_prime_1: float, g: float, beta1: float, beta2: float) -> float:
    """Leading-order entropy production (beta_1 - beta_2) g^2 eta'_1."""
    return (beta1 - beta2) * g * g * eta_prime_1


@dataclass(frozen=True)
class ThermoReport:
    eta_prime_1: float
    eta_prime_2: float
    flux_sum: float
    ep_leading: float
    linear_coefficient: float | None
    g: float
    flux_into_particle: float = 0.0  # vanishes identically at stationarity


def _identical_couplings(p, reservoirs) -> bool:
    S1 = moment_matrix(reservoirs[0].form_factor, p)
    S2 = moment_matrix(reservoirs[1].form_factor, p)
    return bool(np.allclose(S1, S2, rtol=1e-12, atol=0))


def thermo_report(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], g: float,
                  with_linear: bool = True) -> ThermoReport:
    sol = solve_ness(p, reservoirs)
    e1 = eta_prime(p, reservoirs, 1, sol.gamma)
    e2 = eta_prime(p, reservoirs, 2, sol.gamma)
    lin = None
    if with_linear and _identical_couplings(p, reservoirs):
        lin = linear_response(p, reservoirs[0].beta, reservoirs).value
    return ThermoReport(eta_prime_1=e1, eta_prime_2=e2, flux_sum=e1 + e2,
                        ep_leading=entropy_production(e1, g, reservoirs[0].beta, reservoirs[1].beta),
                        linear_coefficient=lin, g=g)


@dataclass(frozen=True)
class LinearResponse:
    value: float          # matrix route, authoritative
    closed_form: float    # printed prefactor formula
    ratio: float          # closed_form / value


def linear_response(p: ParticleSystem, base_beta: float,
                    reservoirs: Sequence[ReservoirSpec]) -> LinearResponse:
    """Coefficient L with eta'_1 = L (beta_1 - beta_2) + O((beta_1 - beta_2)^2) at beta_1 = base_beta.

    Requires identical couplings.  The matrix route solves the first-order
    kernel equation of Lambda_0^*(delta beta) at beta_p = 0; the component along
    the zeroth-order kernel is dropped since it carries no flux.
    """
    if not _identical_couplings(p, reservoirs):
        raise ConfigError("linear_response requires identical couplings on both reservoirs")
    b1 = float(base_beta)
    r1 = ReservoirSpec(b1, reservoirs[0].form_factor)
    r2 = ReservoirSpec(b1, reservoirs[1].form_factor)
    E = p.E
    N = p.n
    if N < 2:
        return LinearResponse(0.0, 0.0, math.nan)
    Dm = np.diag(np.exp(-b1 * (E - E[0]) / 2))
    Dp = np.diag(np.exp(b1 * (E - E[0]) / 2))
    H = np.diag(E)
    G1 = gamma_single_reservoir(p, r1)
    G2 = gamma_single_reservoir(p, r2)
    dG2 = gamma_single_reservoir_dbeta(p, r2)
    M0 = -1j * Dm @ (G1 + G2) @ Dp
    M1 = -1j * Dm @ (0.5 * (H @ G2 - G2 @ H) - dG2) @ Dp
    z0 = np.exp(-b1 * (E - E[0]))
    z0 = z0 * math.sqrt(N) / z0.sum()
    z1 = -np.linalg.pinv(M0) @ (M1 @ z0)
    z1 = z1.real
    value = eta_prime(p, [r1, r2], 1, z1)

    total = 0.0
    for j in range(N):
        for k in range(j):
            w = E[j] - E[k]
            g2 = spectral_coupling(p, r1, j, k)
            total += w * w * g2 / (math.exp(b1 * E[j]) - math.exp(b1 * E[k]))
    closed = 0.5 * partition_function(p, 0.0) / partition_function(p, b1) * total
    ratio = closed / value if value != 0 else math.nan
    return LinearResponse(value=float(value), closed_form=float(closed), ratio=float(ratio))


@dataclass(frozen=True)
class SweepRow:
    delta_beta: float
    beta1: float
    beta2: float
    gamma: tuple
    eta_prime_1: float
    eta_prime_2: float
    ep_leading: float


def _sweep_point(p, reservoirs, db, g, anchor):
    b1 = reservoirs[0].beta
    if anchor == "beta1":
        beta1, beta2 = b1, b1 - db
    else:
        mid = 0.5 * (reservoirs[0].beta + reservoirs[1].beta)
        beta1, beta2 = mid + db / 2, mid - db / 2
    if beta1 <= 0 or beta2 <= 0:
        return None
    rs = [ReservoirSpec(beta1, reservoirs[0].form_factor),
          ReservoirSpec(beta2, reservoirs[1].form_factor)]
    sol = solve_ness(p, rs)
    e1 = eta_prime(p, rs, 1, sol.gamma)
    e2 = eta_prime(p, rs, 2, sol.gamma)
    return SweepRow(db, beta1, beta2, tuple(sol.gamma), e1, e2,
                    entropy_production(e1, g, beta1, beta2))


def sweep(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], delta_betas, g: float,
          anchor: str = "beta1", threads: int | None = None) -> list:
    """Flux table over a grid of temperature differences delta_beta = beta_1 - beta_2.

    ``anchor="beta1"`` keeps beta_1 from the template and sets
    beta_2 = beta_1 - delta_beta; ``anchor="midpoint"`` keeps the mean of
    the two template temperatures fixed.  Points with a nonpositive
    temperature are skipped with a warning.  Rows come back in grid order.
    """
    if anchor not in ("beta1", "midpoint"):
        raise ValueError("anchor must be 'beta1' or 'midpoint'")
    grid = [float(x) for x in delta_betas]
    if not all(math.isfinite(x) for x in grid):
        raise ConfigError("sweep grid must be finite")
    if threads is None:
        threads = int(os.environ.get("NESSKIT_THREADS", "1") or 1)
    threads = max(1, threads)
    work = lambda db: _sweep_point(p, reservoirs, db, g, anchor)
    if threads == 1:
        results = [work(db) for db in grid]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, grid))
    rows = []
    for db, row in zip(grid, results):
        if row is None:
            log.warning("skipping delta_beta=%g: reservoir temperature would be nonpositive", db)
            continue
        rows.append(row)
    return rows


SWEEP_HEADER = ("delta_beta", "eta_prime_1", "eta_prime_2", "ep_leading")


def write_sweep_csv(rows, fh, fmt=".17g") -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([format(v + 0.0, fmt) for v in (r.delta_beta, r.eta_prime_1, r.eta_prime_2, r.ep_leading)])
