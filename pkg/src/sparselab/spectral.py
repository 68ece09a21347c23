"""Semicircle analytics, eigendecomposition and resolvent quadratic forms."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EigenSolverError(RuntimeError):
    """Dense eigensolver failure; carries the replay metadata of the offending sample."""

    def __init__(self, message: str, meta: dict | None = None):
        super().__init__(message)
        self.meta = meta or {}


def m_sc(z):
    """Stieltjes transform of the semicircle law.

    Both roots of ``m**2 + z m + 1 = 0`` are formed and the one with positive
    imaginary part is kept, which avoids any branch-cut bookkeeping.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("m_sc requires Im z > 0")
    r = np.sqrt(z * z - 4.0)
    m1 = (-z + r) / 2.0
    m2 = (-z - r) / 2.0
    m = np.where(m1.imag > 0, m1, m2)
    return m[()] if m.ndim == 0 else m


def semicircle_density(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.maximum(4.0 - x * x, 0.0)) / (2.0 * np.pi)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2.0, 2.0)
    c = 0.5 + x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi
    return np.clip(c, 0.0, 1.0)


def semicircle(x):
    """``(density, cdf)`` of the semicircle law at ``x``."""
    d, c = semicircle_density(x), semicircle_cdf(x)
    if np.ndim(d) == 0:
        return float(d), float(c)
    return d, c


def _upper_quantile(target, tol=1e-12, max_iter=60):
    """Vectorized bisection for ``1 - cdf(x) = target`` on [-2, 2]."""
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, -2.0)
    hi = np.full(target.shape, 2.0)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        tail = 1.0 - semicircle_cdf(mid)
        exact = tail == target
        lo = np.where(exact, mid, np.where(tail > target, mid, lo))
        hi = np.where(exact, mid, np.where(tail > target, hi, mid))
        if np.all(hi - lo <= tol):
            break
    return 0.5 * (lo + hi)


def gamma_sc(k, N: int):
    """Semicircle classical location: ``(k - 1/2)/N = int_gamma^2 rho_sc``."""
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or np.any(k_arr > N):
        raise ValueError(f"k must lie in [1, {N}]")
    g = _upper_quantile((k_arr - 0.5) / N)
    return float(g) if g.ndim == 0 else g


def gamma_rho(k, N: int, edge: float = 2.0):
    """Classical location of the edge-rescaled semicircle: ``k/N = int_gamma^edge rho``.

    Stand-in for the implicitly defined sparse measure, whose support is
    ``[-edge, edge]``.
    """
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or np.any(k_arr > N):
        raise ValueError(f"k must lie in [1, {N}]")
    g = _upper_quantile(k_arr / N) * edge / 2.0
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues in descending order with eigenvectors as matching columns.

    ``eigenvectors`` is ``None`` for eigenvalue-only decompositions.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.eigenvalues.shape[0]

    def overlaps(self, x: np.ndarray) -> np.ndarray:
        """``<x, u_k>`` for all k; ``x`` may be a stack of row vectors."""
        return np.asarray(x) @ self.eigenvectors

    def check(self, M: np.ndarray, tol: float = 1e-9) -> None:
        U, lam = self.eigenvectors, self.eigenvalues
        scale = max(np.max(np.abs(lam)), 1e-300)
        resid = np.linalg.norm(M @ U - U * lam, axis=0)
        if np.max(resid) > tol * scale:
            raise AssertionError(f"eigen-residual {np.max(resid):.3e} exceeds {tol} ||M||")
        gram = U.T @ U - np.eye(self.n)
        if np.max(np.abs(gram)) > tol:
            raise AssertionError(f"eigenvector Gram deviates by {np.max(np.abs(gram)):.3e}")


def _fix_signs(U: np.ndarray) -> None:
    # top vector: <e, u_1> >= 0; others: first non-negligible coordinate >= 0
    n = U.shape[0]
    if U[:, 0].sum() < 0:
        U[:, 0] *= -1
    rest = U[:, 1:]
    first = np.argmax(np.abs(rest) > 1e-14 / math.sqrt(n), axis=0)
    flip = rest[first, np.arange(rest.shape[1])] < 0
    rest[:, flip] *= -1


def eigh(M: np.ndarray, vectors: bool = True, meta: dict | None = None) -> SpectralData:
    """Full symmetric eigendecomposition, eigenvalues descending."""
    try:
        if not vectors:
            return SpectralData(np.linalg.eigvalsh(M)[::-1].copy())
        lam, U = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"eigensolver did not converge: {exc}", meta) from exc
    lam = lam[::-1].copy()
    U = U[:, ::-1].copy()
    _fix_signs(U)
    return SpectralData(lam, U)


def resolvent_qforms(S: SpectralData, z: complex, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Matrix of ``<x_a, G(z) y_b>`` for row stacks ``X`` and ``Y``."""
    if z.imag == 0:
        raise ValueError("resolvent needs Im z != 0")
    d = 1.0 / (S.eigenvalues - z)
    PX = np.atleast_2d(S.overlaps(X))
    PY = np.atleast_2d(S.overlaps(Y))
    return (PX * d) @ PY.T


def resolvent_qform(S: SpectralData, z: complex, x: np.ndarray, y: np.ndarray) -> complex:
    z = complex(z)
    for v in (x, y):
        if np.linalg.norm(v) > 1 + 1e-9:
            raise ValueError("resolvent_qform expects vectors of norm <= 1")
    return complex(resolvent_qforms(S, z, x, y)[0, 0])


def ward_residual(S: SpectralData, z: complex, i: int) -> float:
    """Relative defect of ``sum_j |G_ij|^2 = Im G_ii / eta``.

    The row ``G_i.`` is rebuilt from the eigenvectors, so the check also
    exercises their orthonormality.
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("ward_residual requires Im z > 0")
    U = S.eigenvectors
    d = 1.0 / (S.eigenvalues - z)
    row = U @ (U[i] * d)
    lhs = float(np.sum(np.abs(row) ** 2))
    rhs = row[i].imag / z.imag
    return abs(lhs - rhs) / rhs


@dataclass(frozen=True)
class SpectralDomainPoint:
    E: float
    eta: float
    inside: bool = True

    @property
    def z(self) -> complex:
        return complex(self.E, self.eta)


def in_domain(E: float, eta: float, N: int, tau: float) -> bool:
    return abs(E) <= 3.0 and N ** (-1.0 + tau) * (1 - 1e-12) <= eta <= 1.0


def domain_grid(N: int, tau: float, nE: int, nEta: int) -> list[SpectralDomainPoint]:
    """``nE`` energies on [-3, 3] crossed with ``nEta`` log-spaced scales in [N^(tau-1), 1]."""
    if nE < 2 or nEta < 2:
        raise ValueError("domain_grid needs nE, nEta >= 2")
    Es = np.linspace(-3.0, 3.0, nE)
    etas = np.geomspace(N ** (-1.0 + tau), 1.0, nEta)
    return [SpectralDomainPoint(float(E), float(eta), True) for E in Es for eta in etas]
