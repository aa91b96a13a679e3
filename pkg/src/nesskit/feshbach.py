"""Feshbach map for finite matrices and Neumann-series eigenvector reconstruction.

Projections need not be orthogonal.  Ranges are represented by orthonormal
bases obtained from an SVD, so operators restricted to Ran P come back as
small square matrices together with the basis that defines them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutsideDomainError

IDEMPOTENCE_TOL = 1e-12
INVERTIBILITY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Projection:
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=complex)
        if P.ndim != 2 or P.shape[0] != P.shape[1]:
            raise ConfigError("projection must be a square matrix")
        nrm = np.linalg.norm(P, 2)
        if np.linalg.norm(P @ P - P, 2) > IDEMPOTENCE_TOL * (1 + nrm ** 2):
            raise ConfigError("matrix is not idempotent")
        object.__setattr__(self, "P", P)

    @property
    def dim(self) -> int:
        return self.P.shape[0]

    @property
    def complement(self) -> np.ndarray:
        return np.eye(self.dim) - self.P

    @property
    def conditioning(self) -> float:
        """Operator norm of P (1 for orthogonal projections, larger when oblique)."""
        return float(np.linalg.norm(self.P, 2))

    @classmethod
    def onto(cls, columns) -> "Projection":
        """Orthogonal projection onto the span of ``columns``."""
        Q, _ = np.linalg.qr(np.asarray(columns, dtype=complex))
        return cls(Q @ Q.conj().T)


def range_basis(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(A)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
    return U[:, :rank]


@dataclass(frozen=True, eq=False)
class FeshbachResult:
    matrix: np.ndarray        # F_P(H) in the coordinates of ``basis``
    basis: np.ndarray         # orthonormal basis of Ran P
    full: np.ndarray          # F_P(H) as an operator on the whole space
    reduced_resolvent: np.ndarray  # R_Pbar(H) = Pbar (Pbar H Pbar)^-1 Pbar
    complement_smin: float
    projection_norm: float


def reduced_resolvent(H: np.ndarray, P: Projection) -> tuple:
    """R_Pbar(H) and the smallest singular value of Pbar H Pbar on Ran Pbar."""
    H = np.asarray(H, dtype=complex)
    Pb = P.complement
    V = range_basis(Pb)
    if V.shape[1] == 0:
        return np.zeros_like(H), np.inf
    A = V.conj().T @ Pb @ H @ V
    smin = float(np.linalg.svd(A, compute_uv=False).min())
    if smin <= INVERTIBILITY_TOL * max(np.linalg.norm(H, 2), 1e-300):
        raise OutsideDomainError(
            f"outside Dom(F_P): complement block is singular (smallest singular value {smin:.3g})",
            singular_value=smin)
    R = V @ np.linalg.solve(A, V.conj().T @ Pb)
    return R, smin


def feshbach_map(H, P: Projection) -> FeshbachResult:
    """F_P(H) = P (H - H R_Pbar(H) H) P restricted to Ran P."""
    H = np.asarray(H, dtype=complex)
    if H.shape != P.P.shape:
        raise ConfigError("H and P must have the same shape")
    R, smin = reduced_resolvent(H, P)
    full = P.P @ (H - H @ R @ H) @ P.P
    U = range_basis(P.P)
    return FeshbachResult(matrix=U.conj().T @ full @ U, basis=U, full=full, reduced_resolvent=R,
                          complement_smin=smin, projection_norm=P.conditioning)


def schur_complement(H, P: Projection) -> np.ndarray:
    """Block Schur complement H11 - H12 H22^-1 H21 in the split basis [Ran P, Ran Pbar]."""
    H = np.asarray(H, dtype=complex)
    U = range_basis(P.P)
    V = range_basis(P.complement)
    T = np.hstack([U, V])
    Hs = np.linalg.solve(T, H @ T)
    r = U.shape[1]
    H11, H12, H21, H22 = Hs[:r, :r], Hs[:r, r:], Hs[r:, :r], Hs[r:, r:]
    if H22.size == 0:
        return H11
    return H11 - H12 @ np.linalg.solve(H22, H21)


@dataclass(frozen=True, eq=False)
class IsospectralityReport:
    smin_H: float
    smin_F: float
    H_singular: bool
    F_singular: bool
    consistent: bool
    reconstruction_defect: float | None


def isospectrality_check(H, P: Projection, tol: float = 1e-9, recon_tol: float = 1e-8) -> IsospectralityReport:
    """Compare singularity of H and F_P(H); rebuild a kernel vector of H when F_P(H) is singular."""
    H = np.asarray(H, dtype=complex)
    res = feshbach_map(H, P)
    scale = max(np.linalg.norm(H, 2), 1e-300)
    sH = float(np.linalg.svd(H, compute_uv=False).min())
    if res.matrix.size:
        _, sF_all, Vh = np.linalg.svd(res.matrix)
        sF = float(sF_all.min())
    else:
        sF, Vh = np.inf, None
    h_sing = sH <= tol * scale
    f_sing = sF <= tol * scale
    defect = None
    if f_sing:
        phi = res.basis @ Vh[-1].conj()
        psi = phi - res.reduced_resolvent @ (H @ phi)
        defect = float(np.linalg.norm(H @ psi) / (scale * np.linalg.norm(psi)))
    ok = (h_sing == f_sing) and (defect is None or defect <= recon_tol)
    return IsospectralityReport(smin_H=sH, smin_F=sF, H_singular=bool(h_sing), F_singular=bool(f_sing),
                                consistent=bool(ok), reconstruction_defect=defect)


@dataclass(frozen=True, eq=False)
class NeumannExpansion:
    vector: np.ndarray
    terms: list          # norms of the individual series terms
    defect: float        # ||(L0 + g I) vector|| / ||vector||
    ratio_bound: float   # g ||R_Pbar(L0)|| ||I||


def kernel_vector(K: np.ndarray) -> np.ndarray:
    _, _, Vh = np.linalg.svd(K)
    return Vh[-1].conj()


def neumann_eigenvector(L0, I, g: float, P: Projection, order: int, p_psi0=None) -> NeumannExpansion:
    """Truncated series sum_k g^k (-R_Pbar(L0) I)^k P psi0 for the zero mode of L0 + g I.

    If ``p_psi0`` is not supplied it is computed as P applied to the
    smallest-singular vector of L0 + g I.
    """
    L0 = np.asarray(L0, dtype=complex)
    I = np.asarray(I, dtype=complex)
    if order < 0:
        raise ValueError("order must be nonnegative")
    R, _ = reduced_resolvent(L0, P)
    K = L0 + g * I
    if p_psi0 is None:
        p_psi0 = P.P @ kernel_vector(K)
    x = np.asarray(p_psi0, dtype=complex)
    term = x.copy()
    terms = [float(np.linalg.norm(term))]
    for _ in range(order):
        term = -g * (R @ (I @ term))
        terms.append(float(np.linalg.norm(term)))
        x = x + term
    defect = float(np.linalg.norm(K @ x) / np.linalg.norm(x))
    bound = abs(g) * np.linalg.norm(R, 2) * np.linalg.norm(I, 2)
    return NeumannExpansion(vector=x, terms=terms, defect=defect, ratio_bound=float(bound))


def fit_defect_exponent(L0, I, P: Projection, order: int, gs=(1e-2, 5e-3, 2.5e-3)) -> float:
    """Slope of log(defect) against log(g) across the coupling values ``gs``."""
    defects = [neumann_eigenvector(L0, I, g, P, order).defect for g in gs]
    return float(np.polyfit(np.log(gs), np.log(defects), 1)[0])
