"""Golden-rule Pauli master equation for the level populations.

This is the independent oracle for the level-shift pipeline: rates are built
directly from emission/absorption factors (1 + rho) and rho, sharing nothing
with :mod:`nesskit.levelshift` except the angular moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.sparse.csgraph import connected_components

from .errors import DegenerateKernelError, NumericalError
from .model import ParticleSystem, ReservoirSpec, moment_matrix

EIG_COND_LIMIT = 1e8
FIT_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class RateMatrix:
    """Per-reservoir rates ``W[j][n, m]`` (m -> n) and the summed generator ``M``."""

    W: np.ndarray
    M: np.ndarray
    energies: np.ndarray
    betas: tuple

    @property
    def n(self):
        return self.M.shape[0]


def transition_rates(p: ParticleSystem, r: ReservoirSpec) -> np.ndarray:
    """Rates W[n, m] for the jump m -> n induced by a single reservoir."""
    S = moment_matrix(r.form_factor, p)
    E = p.E
    N = p.n
    W = np.zeros((N, N))
    for m in range(N):
        for n in range(N):
            if m == n:
                continue
            w = E[m] - E[n]
            rho = 1.0 / math.expm1(r.beta * abs(w))
            occ = 1.0 + rho if w > 0 else rho  # emission if m lies above n
            W[n, m] = 2 * math.pi * w * w * occ * S[m, n]
    return W


def build_generator(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec]) -> RateMatrix:
    W = np.array([transition_rates(p, r) for r in reservoirs])
    total = W.sum(axis=0)
    M = total - np.diag(total.sum(axis=0))
    return RateMatrix(W=W, M=M, energies=p.E, betas=tuple(r.beta for r in reservoirs))


def stationary_distribution(rm: RateMatrix) -> np.ndarray:
    """Normalized kernel of the generator; refuses disconnected transition graphs."""
    N = rm.n
    if N == 1:
        return np.ones(1)
    adjacency = (rm.M - np.diag(np.diag(rm.M))) > 0
    ncomp, labels = connected_components(adjacency, directed=True, connection="strong")
    if ncomp > 1:
        comps = [np.flatnonzero(labels == c).tolist() for c in range(ncomp)]
        raise DegenerateKernelError(
            f"transition graph is not strongly connected; components {comps}")
    A = rm.M.copy()
    A[-1, :] = 1.0
    b = np.zeros(N)
    b[-1] = 1.0
    p = np.linalg.solve(A, b)
    return p


def _propagator(M: np.ndarray, t: float) -> np.ndarray:
    return scipy.linalg.expm(M * t)


def evolve(rm: RateMatrix, p0, g: float, t_grid) -> np.ndarray:
    """Populations exp(g^2 M t) p0 on each time of ``t_grid``; rows are times."""
    p0 = np.asarray(p0, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if p0.shape != (rm.n,) or np.any(p0 < 0) or abs(p0.sum() - 1) > 1e-12:
        raise ValueError("p0 must be a probability vector")
    if np.any(t_grid < 0) or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be nonnegative and strictly increasing")
    G = g * g * rm.M
    out = np.empty((t_grid.size, rm.n))
    lam, V = np.linalg.eig(G)
    if np.linalg.cond(V) < EIG_COND_LIMIT:
        c = np.linalg.solve(V, p0)
        for i, t in enumerate(t_grid):
            out[i] = (V @ (np.exp(lam * t) * c)).real
    else:
        for i, t in enumerate(t_grid):
            out[i] = _propagator(G, t) @ p0
    if t_grid.size and t_grid[0] == 0:
        out[0] = p0
    return out


def spectral_gap(M: np.ndarray) -> float:
    """Smallest nonzero |Re lambda| over the spectrum of M."""
    lam = np.linalg.eigvals(M)
    scale = 1.0 + np.abs(M).max()
    nonzero = lam[np.abs(lam) > 1e-10 * scale]
    if nonzero.size == 0:
        return math.inf
    return float(np.min(np.abs(nonzero.real)))


@dataclass(frozen=True)
class ConvergenceRate:
    spectral: float | None
    empirical: float
    defective: bool

    @property
    def relative_mismatch(self) -> float | None:
        if self.spectral is None:
            return None
        return abs(self.empirical - self.spectral) / self.spectral


def convergence_rate(rm: RateMatrix, g: float, p0=None, floor: float = FIT_FLOOR) -> ConvergenceRate:
    """Relaxation rate toward the stationary state, spectral and fitted.

    The empirical rate is the slope of log ||p(t) - p*|| on a log-spaced
    time grid, fitted over the second half of the interval on which the
    distance stays above ``floor`` (below it rounding dominates).  Without
    ``p0`` the distance is the worst case over the pure initial states, so
    the slowest mode is always visible; a single trajectory can barely
    excite it and then shows a faster apparent rate.
    """
    pstar = stationary_distribution(rm)
    G = g * g * rm.M
    lam, V = np.linalg.eig(G)
    defective = np.linalg.cond(V) >= EIG_COND_LIMIT
    gap = spectral_gap(rm.M) * g * g
    t = np.geomspace(1e-2, 60.0, 600) / gap
    starts = np.eye(rm.n) if p0 is None else np.atleast_2d(np.asarray(p0, dtype=float))
    dist = np.zeros(t.size)
    for q in starts:
        dist = np.maximum(dist, np.linalg.norm(evolve(rm, q, g, t) - pstar, axis=1))
    above = np.flatnonzero(dist > floor)
    if above.size < 2:
        raise NumericalError("distance to the stationary state is below the rounding floor")
    t_end = t[above[-1]]
    sel = (t >= t_end / 2) & (t <= t_end)
    slope = np.polyfit(t[sel], np.log(dist[sel]), 1)[0]
    return ConvergenceRate(spectral=None if defective else float(gap),
                           empirical=float(-slope), defective=bool(defective))


def stationary_flux(rm: RateMatrix, p, which_reservoir: int) -> float:
    """Energy deposited into reservoir ``which_reservoir`` (1 or 2) per unit scaled time."""
    W = rm.W[which_reservoir - 1]
    E = rm.energies
    p = np.asarray(p, dtype=float)
    total = 0.0
    for m in range(rm.n):
        for n in range(m):
            total += (E[m] - E[n]) * (W[n, m] * p[m] - W[m, n] * p[n])
    return float(total)
