"""Reference models shared by the tests and the experiment scripts."""
from __future__ import annotations

import numpy as np

from .model import AngularMomentFormFactor, ParticleSystem, PowerGaussianFormFactor, ReservoirSpec

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def two_level_form_factor(amplitude: float = 1.0) -> PowerGaussianFormFactor:
    return PowerGaussianFormFactor(alpha=0.5, amplitude=amplitude, coupling=SIGMA_X)


def two_level_fixture(beta1: float = 1.0, beta2: float = 0.5, beta_p: float = 0.0):
    """E = (0, 1), both reservoirs with c = 1, alpha = 1/2, B = sigma_x."""
    p = ParticleSystem((0.0, 1.0), beta_p)
    ff = two_level_form_factor()
    return p, [ReservoirSpec(beta1, ff), ReservoirSpec(beta2, ff)]


def random_hermitian(rng, n: int, offdiag_floor: float = 0.2) -> np.ndarray:
    """Random Hermitian matrix whose off-diagonal moduli are bounded below."""
    mod = rng.uniform(offdiag_floor, 1.0, (n, n))
    phase = np.exp(2j * np.pi * rng.random((n, n)))
    A = np.triu(mod * phase, 1)
    return A + A.conj().T + np.diag(rng.normal(size=n))


def random_energies(rng, n: int, span: float = 2.0, min_gap: float = 0.1) -> tuple:
    """Strictly increasing energies starting at 0 with spacings >= ``min_gap``."""
    if n == 1:
        return (0.0,)
    gaps = rng.uniform(min_gap, max(min_gap, span / (n - 1)), n - 1)
    return tuple(np.concatenate([[0.0], np.cumsum(gaps)]))


def random_form_factor(rng, n: int, kind: str | None = None):
    kind = kind or ("power_gaussian" if rng.random() < 0.5 else "angular_moments")
    if kind == "power_gaussian":
        return PowerGaussianFormFactor(alpha=0.5, amplitude=float(rng.uniform(0.5, 1.5)),
                                       coupling=random_hermitian(rng, n))
    S = rng.uniform(0.1, 1.0, (n, n))
    S = np.triu(S, 1)
    return AngularMomentFormFactor(S + S.T)


def random_model(rng, n_max: int = 8, n_min: int = 2, beta_range=(0.2, 5.0),
                 equal_betas: bool = False, identical: bool = False, kind: str | None = None):
    """A random FGR-positive model with N in [n_min, n_max]."""
    n = int(rng.integers(n_min, n_max + 1))
    p = ParticleSystem(random_energies(rng, n))
    b1 = float(rng.uniform(*beta_range))
    b2 = b1 if equal_betas else float(rng.uniform(*beta_range))
    f1 = random_form_factor(rng, n, kind)
    f2 = f1 if identical else random_form_factor(rng, n, kind)
    return p, [ReservoirSpec(b1, f1), ReservoirSpec(b2, f2)]


def random_complex(rng, shape) -> np.ndarray:
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def oblique_projection(rng, n: int, rank: int) -> np.ndarray:
    """Random idempotent U (W^H U)^-1 W^H of the given rank."""
    U = random_complex(rng, (n, rank))
    W = random_complex(rng, (n, rank))
    return U @ np.linalg.solve(W.conj().T @ U, W.conj().T)


def planted_kernel_instance(rng, n: int, rank: int, oblique: bool = True):
    """(H, P, v) with H v = 0 for a unit vector v and P a projection of the given rank."""
    v = random_complex(rng, n)
    v /= np.linalg.norm(v)
    H = random_complex(rng, (n, n)) @ (np.eye(n) - np.outer(v, v.conj()))
    if oblique:
        P = oblique_projection(rng, n, rank)
    else:
        Q, _ = np.linalg.qr(random_complex(rng, (n, rank)))
        P = Q @ Q.conj().T
    return H, P, v


def neumann_fixture(rng, n: int = 8, rank: int = 2):
    """(L0, I, P) such that L0 + g I is singular for every g.

    L0 is block diagonal with a singular block on Ran P and an invertible
    block on its complement; I shares the left kernel vector of L0, so the
    zero mode persists along the whole coupling path.
    """
    A = random_complex(rng, (rank, rank))
    A[:, -1] = A[:, :-1] @ random_complex(rng, rank - 1) if rank > 1 else 0.0
    B = random_complex(rng, (n - rank, n - rank)) + 4.0 * np.eye(n - rank)
    L0 = np.zeros((n, n), dtype=complex)
    L0[:rank, :rank] = A
    L0[rank:, rank:] = B
    _, _, Vh = np.linalg.svd(A.conj().T)
    w = np.zeros(n, dtype=complex)
    w[:rank] = Vh[-1].conj()  # w^H L0 = 0
    I0 = random_complex(rng, (n, n))
    I = I0 - np.outer(w, w.conj() @ I0)
    P = np.zeros((n, n))
    P[:rank, :rank] = np.eye(rank)
    return L0, I, P
