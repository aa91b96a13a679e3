"""Particle system, reservoirs and coupling form factors.

Units are hbar = k_B = 1 and reservoir modes have dispersion omega(k) = |k|.
All matrices are written in the ordered energy eigenbasis of the particle
Hamiltonian, so eigenvectors are never stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError

HERMITIAN_TOL = 1e-12
BOHR_DEGENERACY_TOL = 1e-10
UNIT_VECTOR_TOL = 1e-9


@dataclass(frozen=True)
class ParticleSystem:
    """N-level particle with strictly increasing energies.

    Parameters
    ----------
    energies : sequence of float
        Eigenvalues E_0 < E_1 < ... < E_{N-1} of the particle Hamiltonian.
    beta_p : float
        Inverse temperature of the reference particle state (default 0).
    """

    energies: tuple
    beta_p: float = 0.0

    def __post_init__(self):
        try:
            e = tuple(float(x) for x in np.atleast_1d(np.asarray(self.energies, dtype=float)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"energies must be real numbers: {exc}") from None
        object.__setattr__(self, "energies", e)
        errors = []
        if len(e) < 1:
            errors.append("at least one energy level is required")
        if not all(math.isfinite(x) for x in e):
            errors.append("energies must be finite")
        if any(b - a <= 0 for a, b in zip(e, e[1:])):
            errors.append("Condition (C) violated: degenerate spectrum "
                          "(energies must be strictly increasing)")
        bp = float(self.beta_p)
        if not (math.isfinite(bp) and bp >= 0):
            errors.append("beta_p must be finite and nonnegative")
        object.__setattr__(self, "beta_p", bp)
        if errors:
            raise ConfigError(errors)

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def E(self) -> np.ndarray:
        return np.array(self.energies)

    def bohr_matrix(self) -> np.ndarray:
        """Matrix of Bohr frequencies, entry (m, n) = E_m - E_n."""
        E = self.E
        return E[:, None] - E[None, :]

    def level_gap(self) -> float:
        """Smallest spacing between distinct energies (infinite for N = 1)."""
        if self.n < 2:
            return math.inf
        return float(np.min(np.diff(self.E)))

    def degenerate_bohr_pairs(self, tol: float = BOHR_DEGENERACY_TOL):
        """Pairs ((i, j), (m, n)) of distinct level pairs with equal nonzero Bohr frequency."""
        diffs = [((m, n), self.energies[m] - self.energies[n])
                 for m in range(self.n) for n in range(self.n) if m != n]
        out = []
        for a in range(len(diffs)):
            for b in range(a + 1, len(diffs)):
                if abs(diffs[a][1] - diffs[b][1]) <= tol:
                    out.append((diffs[a][0], diffs[b][0]))
        return out

    def with_beta_p(self, beta_p: float) -> "ParticleSystem":
        return ParticleSystem(self.energies, beta_p)


def bohr_frequency(p: ParticleSystem, m: int, n: int) -> float:
    for idx in (m, n):
        if not 0 <= idx < p.n:
            raise IndexError(f"level index {idx} out of range for N={p.n}")
    return p.energies[m] - p.energies[n]


def gibbs_vector(p: ParticleSystem, beta: float) -> np.ndarray:
    """Unit vector with components exp(-beta E_j / 2) / sqrt(Z(beta))."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    E = p.E
    w = np.exp(-0.5 * beta * (E - E[0]))
    return w / np.linalg.norm(w)


def gibbs_populations(p: ParticleSystem, beta: float) -> np.ndarray:
    E = p.E
    w = np.exp(-beta * (E - E[0]))
    return w / w.sum()


def partition_function(p: ParticleSystem, beta: float) -> float:
    return float(np.sum(np.exp(-beta * p.E)))


# --------------------------------------------------------------------------
# form factors
# --------------------------------------------------------------------------

def _as_complex_matrix(data, name="coupling"):
    """Accept nested lists of numbers or of [re, im] pairs."""
    arr = np.asarray(data, dtype=object)
    try:
        if arr.ndim == 3 and arr.shape[-1] == 2:
            out = np.asarray(data, dtype=float)
            out = out[..., 0] + 1j * out[..., 1]
        else:
            out = np.asarray(data, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: could not parse matrix ({exc})") from None
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ConfigError(f"{name}: expected a square matrix, got shape {out.shape}")
    return out


@dataclass(frozen=True, eq=False)
class PowerGaussianFormFactor:
    """G(k) = c |k|^alpha exp(-|k|^2) B with B Hermitian."""

    alpha: float
    amplitude: float
    coupling: np.ndarray
    kind: str = field(default="power_gaussian", init=False)

    def __post_init__(self):
        B = _as_complex_matrix(self.coupling)
        object.__setattr__(self, "coupling", B)
        errors = []
        if not np.allclose(B, B.conj().T, rtol=0, atol=HERMITIAN_TOL):
            errors.append("coupling matrix must be Hermitian")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            errors.append("amplitude must be nonnegative")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            errors.append("exponent alpha must be > 0")
        if errors:
            raise ConfigError(errors)

    @property
    def n(self) -> int:
        return self.coupling.shape[0]

    def radial(self, r):
        r = np.abs(r)
        return self.amplitude * r ** self.alpha * np.exp(-r * r)

    def matrix(self, k) -> np.ndarray:
        """G(k) for a momentum vector k (or a radius)."""
        r = float(np.linalg.norm(np.atleast_1d(k)))
        return self.radial(r) * self.coupling

    def moment(self, freq: float, m: int, n: int) -> float:
        # isotropic profile: the sphere integral is 4 pi times the squared entry
        r = abs(freq)
        return float(4 * math.pi * self.amplitude ** 2 * r ** (2 * self.alpha)
                     * math.exp(-2 * r * r) * abs(self.coupling[n, m]) ** 2)

    def scaled(self, factor: float) -> "PowerGaussianFormFactor":
        return PowerGaussianFormFactor(self.alpha, self.amplitude * factor, self.coupling)

    def to_dict(self):
        B = self.coupling
        if np.all(B.imag == 0):
            cpl = B.real.tolist()
        else:
            cpl = np.stack([B.real, B.imag], axis=-1).tolist()
        return {"kind": self.kind, "alpha": self.alpha, "amplitude": self.amplitude,
                "coupling": cpl}


@dataclass(frozen=True, eq=False)
class AngularMomentFormFactor:
    """Tabulated angular second moments S_mn at the Bohr frequencies.

    ``moments`` is either an N x N array (diagonal ignored) or a mapping
    ``{(m, n): S_mn}``; in the mapping form one ordering per pair suffices.
    """

    moments: object
    kind: str = field(default="angular_moments", init=False)

    def __post_init__(self):
        table = {}
        errors = []
        if isinstance(self.moments, Mapping):
            items = [(tuple(k), v) for k, v in self.moments.items()]
        else:
            arr = np.asarray(self.moments, dtype=object)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ConfigError(f"moments: expected a square matrix, got shape {arr.shape}")
            items = [((m, n), arr[m, n]) for m in range(arr.shape[0])
                     for n in range(arr.shape[1]) if m != n and arr[m, n] is not None]
        for (m, n), v in items:
            if m == n:
                continue
            try:
                v = float(v)
            except (TypeError, ValueError):
                errors.append(f"moment ({m},{n}) is not a number")
                continue
            if not (math.isfinite(v) and v >= 0):
                errors.append(f"moment ({m},{n}) must be finite and nonnegative")
                continue
            other = table.get((n, m))
            if other is not None and abs(other - v) > HERMITIAN_TOL * max(1.0, abs(v)):
                errors.append(f"moments ({m},{n}) and ({n},{m}) differ")
            table[(m, n)] = v
            table.setdefault((n, m), v)
        if errors:
            raise ConfigError(errors)
        object.__setattr__(self, "moments", table)

    @property
    def n(self):
        idx = [i for pair in self.moments for i in pair]
        return max(idx) + 1 if idx else 0

    def moment(self, freq: float, m: int, n: int) -> float:
        try:
            return self.moments[(m, n)]
        except KeyError:
            raise ConfigError(f"no angular moment tabulated for level pair ({m},{n})") from None

    def scaled(self, factor: float) -> "AngularMomentFormFactor":
        return AngularMomentFormFactor({k: v * factor ** 2 for k, v in self.moments.items()})

    def to_dict(self):
        n = self.n
        S = [[None if (m, k) not in self.moments else self.moments[(m, k)]
              for k in range(n)] for m in range(n)]
        for m in range(n):
            S[m][m] = 0.0
        return {"kind": self.kind, "moments": S}


FormFactor = PowerGaussianFormFactor | AngularMomentFormFactor


def form_factor_from_dict(d: Mapping) -> FormFactor:
    kind = d.get("kind")
    if kind == "power_gaussian":
        missing = [k for k in ("alpha", "amplitude", "coupling") if k not in d]
        if missing:
            raise ConfigError([f"form_factor: missing key '{k}'" for k in missing])
        return PowerGaussianFormFactor(float(d["alpha"]), float(d["amplitude"]), d["coupling"])
    if kind == "angular_moments":
        if "moments" not in d:
            raise ConfigError("form_factor: missing key 'moments'")
        return AngularMomentFormFactor(d["moments"])
    raise ConfigError(f"form_factor: unknown kind {kind!r} "
                      "(expected 'power_gaussian' or 'angular_moments')")


@dataclass(frozen=True, eq=False)
class ReservoirSpec:
    beta: float
    form_factor: FormFactor

    def __post_init__(self):
        b = float(self.beta)
        if not (math.isfinite(b) and b > 0):
            raise ConfigError("reservoir beta must be positive and finite")
        object.__setattr__(self, "beta", b)


def angular_moment(ff: FormFactor, p: ParticleSystem, m: int, n: int) -> float:
    """S_mn: integral over the unit sphere of |G(|E_mn| sigma)_nm|^2."""
    if m == n:
        raise ValueError("angular moment is defined for m != n only")
    return ff.moment(bohr_frequency(p, m, n), m, n)


def moment_matrix(ff: FormFactor, p: ParticleSystem) -> np.ndarray:
    """All angular moments as an N x N array with zero diagonal."""
    if isinstance(ff, PowerGaussianFormFactor) and ff.n != p.n:
        raise ConfigError(f"coupling matrix is {ff.n}x{ff.n} but the particle has {p.n} levels")
    S = np.zeros((p.n, p.n))
    for m in range(p.n):
        for n in range(p.n):
            if m != n:
                S[m, n] = angular_moment(ff, p, m, n)
    return S


def bose(beta: float, freq):
    """Bose-Einstein occupation 1 / (exp(beta freq) - 1)."""
    return 1.0 / np.expm1(beta * np.asarray(freq, dtype=float))


# --------------------------------------------------------------------------
# gluing
# --------------------------------------------------------------------------

def glue(f: Callable, u: float, sigma) -> complex | np.ndarray:
    """Glued value sqrt|u| f(u sigma) for u >= 0 and -sqrt|u| conj(f)(-u sigma) otherwise."""
    sigma = np.asarray(sigma, dtype=float)
    if u >= 0:
        return math.sqrt(u) * np.asarray(f(u * sigma))[()]
    return -math.sqrt(-u) * np.conj(np.asarray(f(-u * sigma)))[()]


def _thermal_prefactor(u: float, beta: float) -> float:
    # sqrt(u / (1 - exp(-beta u))), continuous at u = 0 with value sqrt(1/beta)
    if u == 0:
        return math.sqrt(1.0 / beta)
    return math.sqrt(u / -math.expm1(-beta * u))


def glued_interaction_eval(p: ParticleSystem, reservoirs: Sequence[ReservoirSpec], which: str,
                           u: float, sigma, alpha_idx: int) -> np.ndarray:
    """Matrix value of the glued interaction F1 or F2 on the doubled N^2 space.

    ``which`` is "F1" or "F2" and ``alpha_idx`` (1 or 2) selects the reservoir.
    Imaginary-time particle evolution is applied as diagonal conjugation in
    the energy basis.
    """
    if which not in ("F1", "F2"):
        raise ValueError("which must be 'F1' or 'F2'")
    if alpha_idx not in (1, 2):
        raise ValueError("alpha_idx must be 1 or 2")
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (3,) or abs(np.linalg.norm(sigma) - 1) > UNIT_VECTOR_TOL:
        raise ValueError("sigma must be a unit 3-vector")
    res = reservoirs[alpha_idx - 1]
    ff = res.form_factor
    if not isinstance(ff, PowerGaussianFormFactor):
        raise ConfigError("glued interaction needs a form factor evaluable off-shell")
    N = p.n
    if u == 0:
        return np.zeros((N * N, N * N), dtype=complex)

    beta = max(r.beta for r in reservoirs)
    db_alpha = res.beta - beta
    db_p = p.beta_p - beta
    s = 1.0 if which == "F1" else -1.0
    weight = math.exp(-res.beta * u / 2) * math.exp(s * db_alpha * u / 2)
    # alpha_p^{+i db_p/2}(A) = exp(-db_p H/2) A exp(db_p H/2) for F1, inverse for F2
    d = np.exp(-s * db_p * p.E / 2)
    evolve = lambda A: (d[:, None] * A) / d[None, :]
    one = np.eye(N)
    G = ff.matrix(abs(u) * sigma)
    if u > 0:
        body = math.sqrt(u) * (np.kron(G, one) - weight * np.kron(one, evolve(G.T)))
    else:
        body = -math.sqrt(-u) * (np.kron(G.conj().T, one) - weight * np.kron(one, evolve(G.conj())))
    return _thermal_prefactor(u, res.beta) * body
