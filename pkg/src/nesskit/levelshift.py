"""Level shift operators on the zero sector and the nonzero Bohr sectors."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dynamics import transition_rates
from .errors import DegenerateBohrFrequencyError, DegenerateKernelError
from .model import BOHR_DEGENERACY_TOL, ParticleSystem, ReservoirSpec, moment_matrix

ZERO_EIG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RateKernel:
    eta: np.ndarray
    beta: float


def rate_kernel(p: ParticleSystem, r: ReservoirSpec) -> RateKernel:
    """eta_mn = 2 pi E_mn^2 exp(b|E_mn|/2) / (exp(b|E_mn|) - 1) S_mn, zero diagonal."""
    S = moment_matrix(r.form_factor, p)
    W = np.abs(p.bohr_matrix())
    np.fill_diagonal(W, 1.0)  # placeholder, diagonal is zeroed below
    eta = np.where(S > 0, 2 * np.pi * W ** 2 * S / (2.0 * np.sinh(r.beta * W / 2)), 0.0)
    np.fill_diagonal(eta, 0.0)
    return RateKernel(eta=eta, beta=r.beta)


def _gamma_from_eta(E: np.ndarray, eta: np.ndarray, beta: float) -> np.ndarray:
    bohr = E[:, None] - E[None, :]
    up = np.exp(beta * bohr / 2) * eta
    G = -eta.copy()
    np.fill_diagonal(G, up.sum(axis=1) - np.diag(up))
    return G


def gamma_single_reservoir(p: ParticleSystem, r: ReservoirSpec) -> np.ndarray:
    """Real matrix Gamma_j0: off-diagonal -eta_mn, diagonal sum_k exp(b E_mk/2) eta_mk.

    Its kernel is the Gibbs vector at the reservoir temperature.
    """
    return _gamma_from_eta(p.E, rate_kernel(p, r).eta, r.beta)


def gamma_single_reservoir_dbeta(p: ParticleSystem, r: ReservoirSpec) -> np.ndarray:
    """Derivative of :func:`gamma_single_reservoir` with respect to the reservoir beta."""
    S = moment_matrix(r.form_factor, p)
    E = p.E
    bohr = E[:, None] - E[None, :]
    W = np.abs(bohr)
    np.fill_diagonal(W, 1.0)
    sh = np.sinh(r.beta * W / 2)
    eta = np.where(S > 0, np.pi * W ** 2 * S / sh, 0.0)
    deta = np.where(S > 0, -np.pi * W ** 3 * S * np.cosh(r.beta * W / 2) / (2 * sh ** 2), 0.0)
    np.fill_diagonal(eta, 0.0)
    np.fill_diagonal(deta, 0.0)
    f = np.exp(r.beta * bohr / 2)
    diag_terms = f * (bohr / 2 * eta + deta)
    D = -deta
    np.fill_diagonal(D, diag_terms.sum(axis=1) - np.diag(diag_terms))
    return D


def conjugate_diagonal(A: np.ndarray, E: np.ndarray, a: float) -> np.ndarray:
    """D(a) A D(-a) with D(a) = diag(exp(a E_n / 2))."""
    d = np.exp(a * (E - E[0]) / 2)
    return d[:, None] * A / d[None, :]


def assemble_lambda_zero(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec],
                         beta_p: float | None = None) -> np.ndarray:
    """Zero-sector level shift operator on span{phi_n (x) phi_n}.

    Entry (m, n) is i sum_j exp((beta_j - beta_p) E_mn / 2) (Gamma_j0)_mn.
    """
    if beta_p is None:
        beta_p = p.beta_p
    E = p.E
    total = np.zeros((p.n, p.n))
    for r in reservoirs:
        total += conjugate_diagonal(gamma_single_reservoir(p, r), E, r.beta - beta_p)
    return 1j * total


@dataclass(frozen=True)
class NonzeroShift:
    """Level shift on a simple nonzero Bohr sector; the real (Lamb) part is not computed."""

    e: float
    m: int
    n: int
    width: float
    real_part: float | None = None

    @property
    def value(self) -> complex | None:
        return None if self.real_part is None else complex(self.real_part, self.width)


def _bohr_sector(p: ParticleSystem, m: int, n: int, tol: float = BOHR_DEGENERACY_TOL):
    e = p.energies[m] - p.energies[n]
    for i in range(p.n):
        for j in range(p.n):
            if i != j and (i, j) != (m, n) and abs(p.energies[i] - p.energies[j] - e) <= tol:
                raise DegenerateBohrFrequencyError(
                    f"Bohr frequency {e:g} of pair ({m},{n}) is shared by pair ({i},{j})")
    return e


def lambda_width_nonzero(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec],
                         m: int, n: int) -> NonzeroShift:
    """Im Lambda_e for e = E_m - E_n: half the summed golden-rule escape widths of m and n."""
    if m == n:
        raise ValueError("nonzero sector requires m != n")
    e = _bohr_sector(p, m, n)
    W = sum(transition_rates(p, r) for r in reservoirs)
    escape = W.sum(axis=0)  # column k: total rate out of level k
    return NonzeroShift(e=e, m=m, n=n, width=float(0.5 * (escape[m] + escape[n])))


@dataclass(frozen=True, eq=False)
class SpectralCertificate:
    eigenvalues: np.ndarray
    n_zero: int
    gap: float
    upper_half_plane: bool
    zero_tol: float

    @property
    def passed(self) -> bool:
        return self.n_zero == 1 and self.upper_half_plane

    @property
    def zero_eigenvalues(self):
        return self.eigenvalues[np.abs(self.eigenvalues) <= self.zero_tol]

    def require(self):
        if self.n_zero != 1:
            raise DegenerateKernelError(
                f"degenerate kernel: {self.n_zero} eigenvalues within {self.zero_tol:.3g} of zero",
                self.zero_eigenvalues)
        if not self.upper_half_plane:
            raise DegenerateKernelError("spectrum leaves the closed upper half plane",
                                        self.eigenvalues[self.eigenvalues.imag < -self.zero_tol])
        return self


def spectral_certificate(lambda0: np.ndarray, zero_tol: float = ZERO_EIG_TOL) -> SpectralCertificate:
    """Sorted spectrum, zero count, gap above zero and half-plane containment."""
    lambda0 = np.asarray(lambda0, dtype=complex)
    scale = 1.0 + np.linalg.norm(lambda0, 2)
    tol = zero_tol * scale
    lam = np.linalg.eigvals(lambda0)
    lam = lam[np.argsort(lam.imag, kind="stable")]
    is_zero = np.abs(lam) <= tol
    nonzero = lam[~is_zero]
    gap = float(nonzero.imag.min()) if nonzero.size else math.inf
    return SpectralCertificate(eigenvalues=lam, n_zero=int(is_zero.sum()), gap=gap,
                               upper_half_plane=bool(np.all(lam.imag >= -tol)), zero_tol=tol)


@dataclass(frozen=True, eq=False)
class LevelShiftSet:
    gamma_j0: tuple
    lambda_zero: np.ndarray
    lambda_nonzero: dict
    beta_p: float
    certificate: SpectralCertificate
    skipped_sectors: list = field(default_factory=list)


def build_level_shift_set(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec],
                          beta_p: float | None = None) -> LevelShiftSet:
    if beta_p is None:
        beta_p = p.beta_p
    L0 = assemble_lambda_zero(p, reservoirs, beta_p)
    nonzero, skipped = {}, []
    for m in range(p.n):
        for n in range(p.n):
            if m == n:
                continue
            try:
                shift = lambda_width_nonzero(p, reservoirs, m, n)
            except DegenerateBohrFrequencyError as exc:
                warnings.warn(str(exc), stacklevel=2)
                skipped.append((m, n))
                continue
            nonzero[shift.e] = shift
    return LevelShiftSet(
        gamma_j0=tuple(gamma_single_reservoir(p, r) for r in reservoirs),
        lambda_zero=L0, lambda_nonzero=nonzero, beta_p=beta_p,
        certificate=spectral_certificate(L0), skipped_sectors=skipped)


@dataclass(frozen=True)
class Resonance:
    e: float
    value: complex


@dataclass(frozen=True)
class ResonanceForecast:
    resonances: list
    zero_sector_gap: float
    gap_lower_bound: float | None
    gap_constant: float = 1.0  # unspecified multiplicative constant, taken as 1


def resonance_forecast(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], g: float,
                       beta_p: float | None = None, tau_prime: float | None = None,
                       g1: float | None = None) -> ResonanceForecast:
    """Second-order resonance positions e + g^2 sigma(Lambda_e).

    The zero-sector zero eigenvalue is pinned at exactly 0.  If ``g1`` is
    given and ``|g| >= g1`` a warning is issued.
    """
    if g1 is not None and abs(g) >= g1:
        warnings.warn(f"coupling |g|={abs(g):g} is not below the threshold g1={g1:g}", stacklevel=2)
    ls = build_level_shift_set(p, reservoirs, beta_p)
    cert = ls.certificate
    g2 = g * g
    out = []
    for lam in cert.eigenvalues:
        out.append(Resonance(0.0, 0j if abs(lam) <= cert.zero_tol else complex(g2 * lam)))
    for e in sorted(ls.lambda_nonzero):
        out.append(Resonance(e, complex(e, g2 * ls.lambda_nonzero[e].width)))
    bound = None
    if tau_prime is not None:
        bound = min(g2 * cert.gap, tau_prime / 2)
    return ResonanceForecast(resonances=out, zero_sector_gap=cert.gap, gap_lower_bound=bound)
