"""Eigenvector overlap statistics: edge Gaussianity, bulk moments, top alignment, smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from sparselab.ensemble import EnsembleSpec, ProbeSet, sample_matrix, unit_e
from sparselab.spectral import SpectralData, eigh

EDGE_INDICES = range(2, 7)


class DegenerateSpectrumError(ValueError):
    """The requested eigenvector is not determined by the matrix."""


class GapTooSmall(ValueError):
    """``lam_2 - lam_3`` is too small for the Poisson window around ``lam_2``."""


@dataclass
class OverlapSample:
    sample_index: int
    a: int
    value: float
    vw_inner: float
    gap_flag: bool = False
    pair: tuple = (0, 0)

    def to_row(self) -> dict:
        return {"sample_index": self.sample_index, "a": self.a, "vw_inner": self.vw_inner,
                "value": self.value, "gap_flag": int(self.gap_flag)}


def _check_simple(lam: np.ndarray, a: int, rtol: float = 1e-12) -> None:
    scale = max(1.0, float(np.max(np.abs(lam))))
    i = a - 1
    for j in (i - 1, i + 1):
        if 0 <= j < lam.size and abs(lam[i] - lam[j]) <= rtol * scale:
            raise DegenerateSpectrumError(f"eigenvalue {a} is degenerate; its eigenvector is not defined")


def default_pairs(k: int):
    return [(i, j) for i in range(k) for j in range(i, k)]


def overlap_values(S: SpectralData, probes: ProbeSet, a_list, pairs=None, sample_index: int = 0):
    """``N <v, u_a><w, u_a>`` for every requested probe pair and index ``a`` (1-based)."""
    V = np.atleast_2d(probes.vectors)
    if V.shape[1] != S.n:
        raise ValueError(f"probe dimension {V.shape[1]} does not match N={S.n}")
    pairs = default_pairs(V.shape[0]) if pairs is None else pairs
    P = S.overlaps(V)
    out = []
    for a in a_list:
        _check_simple(S.eigenvalues, a)
        for i, j in pairs:
            out.append(OverlapSample(sample_index, a, float(S.n * P[i, a - 1] * P[j, a - 1]),
                                     float(V[i] @ V[j]), pair=(i, j)))
    return out


def edge_overlap_samples(spec: EnsembleSpec, probes: ProbeSet, a_list, M: int, pairs=None, start: int = 0):
    if not set(a_list) <= set(EDGE_INDICES):
        raise ValueError(f"edge indices must lie in {{2..6}}, got {list(a_list)}")
    if probes.n != spec.N:
        raise ValueError(f"probes are for N={probes.n}, spec has N={spec.N}")
    if not probes.perp:
        raise ValueError("edge overlap probes must be orthogonal to e")
    out = []
    for i in range(start, start + M):
        A, _ = sample_matrix(spec, i)
        out.extend(overlap_values(eigh(A), probes, a_list, pairs, sample_index=i))
    return out


def target_cf(t, vw_inner: float):
    """Characteristic function of ``<v, z><w, z>`` for a standard Gaussian vector ``z``."""
    if abs(vw_inner) > 1 + 1e-12:
        raise ValueError("|<v, w>| must be <= 1")
    t = np.asarray(t, dtype=float)
    g = (1.0 - 2j * vw_inner * t + (1.0 - vw_inner**2) * t**2) ** -0.5
    return complex(g) if g.ndim == 0 else g


def bulk_window(N: int, tau: float) -> tuple[int, int]:
    return math.ceil(tau * N), math.floor((1 - tau) * N)


@dataclass
class MomentRow:
    name: str
    mean: float
    se: float
    target: float
    M: int


def bulk_moments(values: dict) -> list[MomentRow]:
    """Moment table from per-index arrays of ``N <v, u_i>^2``.

    Targets are the Gaussian ones: ``E Z^2 = 1``, ``E Z^4 = 3`` and
    ``E Z_i^2 Z_j^2 = 1`` for ``i != j``.
    """
    rows = []

    def add(name, x, target):
        x = np.asarray(x, dtype=float)
        rows.append(MomentRow(name, float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), target, x.size))

    idx = sorted(values)
    for i in idx:
        add(f"mean[{i}]", values[i], 1.0)
        add(f"fourth[{i}]", np.asarray(values[i]) ** 2, 3.0)
    for n, i in enumerate(idx):
        for j in idx[n + 1:]:
            add(f"cross[{i},{j}]", np.asarray(values[i]) * np.asarray(values[j]), 1.0)
    return rows


def bulk_overlaps(S: SpectralData, probe: np.ndarray, i_list) -> dict:
    ov = S.overlaps(probe)
    return {i: float(S.n * ov[i - 1] ** 2) for i in i_list}


def bulk_moment_check(spec: EnsembleSpec, probe: np.ndarray, i_list, M: int, start: int = 0) -> list[MomentRow]:
    lo, hi = bulk_window(spec.N, spec.tau)
    if any(not lo <= i <= hi for i in i_list):
        raise ValueError(f"bulk indices must lie in [{lo}, {hi}]")
    values = {i: [] for i in i_list}
    for s in range(start, start + M):
        A, _ = sample_matrix(spec, s)
        for i, x in bulk_overlaps(eigh(A), probe, i_list).items():
            values[i].append(x)
    return bulk_moments(values)


def top_alignment_check(S: SpectralData, f: float) -> tuple[float, float]:
    """Rescaled deviations of the outlier eigenvalue from ``f`` and of ``<e, u_1>`` from ``1 - 1/(2 f^2)``."""
    if f < 3:
        raise ValueError(f"top alignment needs f >= 3, got {f}")
    N = S.n
    align = abs(float(unit_e(N) @ S.eigenvectors[:, 0]))
    dev_lambda1 = (S.eigenvalues[0] - f) * f
    dev_align = (align - 1.0 + 1.0 / (2 * f * f)) * min(f**3, math.sqrt(N) * f)
    return float(dev_lambda1), float(dev_align)


@dataclass(frozen=True)
class SmoothingParams:
    """Scales of the Poisson smoothing around the second eigenvalue.

    ``strict`` enforces ``delta < xi/100`` and ``xi < tau/100``; those windows
    are far too narrow at a few hundred dimensions, so desk runs switch it off.
    """

    N: int
    xi: float
    delta: float
    tau: float = 0.3
    strict: bool = True

    def __post_init__(self):
        if not (self.xi > 0 and self.delta > 0):
            raise ValueError("xi and delta must be positive")
        if self.strict and not (self.delta < self.xi / 100 and self.xi < self.tau / 100):
            raise ValueError(f"need delta < xi/100 < tau/10^4; got xi={self.xi}, delta={self.delta}, tau={self.tau}")

    @classmethod
    def desk(cls, N: int, xi: float = 0.5, delta: float = 0.3, tau: float = 0.3) -> SmoothingParams:
        return cls(N, xi, delta, tau, strict=False)

    @property
    def eta_plus(self) -> float:
        return self.N ** (-2.0 / 3.0 - self.xi)

    @property
    def eta_minus(self) -> float:
        return self.N ** (-2.0 / 3.0 - 6.0 * self.xi)

    @property
    def half_width(self) -> float:
        return self.N**self.delta * self.eta_plus


def _gauss_panels(f, a: float, b: float, panels: int, order: int = 8) -> float:
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return float(np.dot(weights, f(nodes)))


def smoothed_overlap(S: SpectralData, v, w, sp: SmoothingParams, panels: int = 200, rtol: float = 1e-9,
                     max_panels: int = 1 << 16) -> float:
    """``(N/pi) int Im <v, G(E + i eta_+) w> dE`` over ``lam_2 +- N^delta eta_+``.

    Panels are doubled until two successive composite Gauss-Legendre sums
    agree to ``rtol`` (absolute below 1). Raises ``GapTooSmall`` when ``lam_2 - lam_3`` is not
    larger than the window width.
    """
    if S.n != sp.N:
        raise ValueError(f"smoothing parameters are for N={sp.N}, spectrum has N={S.n}")
    lam = S.eigenvalues
    width = sp.half_width
    if lam[1] - lam[2] <= 2 * width:
        raise GapTooSmall(f"lam2 - lam3 = {lam[1] - lam[2]:.3e} <= {2 * width:.3e}")
    eta = sp.eta_plus
    c = S.overlaps(v) * S.overlaps(w)

    def integrand(E):
        return (c / ((lam[None, :] - E[:, None]) ** 2 + eta * eta)).sum(axis=1) * eta

    a, b = lam[1] - width, lam[1] + width
    prev = S.n * _gauss_panels(integrand, a, b, panels) / math.pi
    while panels < max_panels:
        panels *= 2
        cur = S.n * _gauss_panels(integrand, a, b, panels) / math.pi
        if abs(cur - prev) <= rtol * max(abs(cur), 1.0):
            return cur
        prev = cur
    raise RuntimeError("smoothed_overlap quadrature did not converge")

