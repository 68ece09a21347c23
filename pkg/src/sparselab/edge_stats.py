"""Random spectral edge, edge universality against GOE, gaps, repulsion and rigidity."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from sparselab.ensemble import EnsembleSpec, sample_goe, sample_matrix
from sparselab.spectral import SpectralData, eigh, gamma_sc
from sparselab.stat_tests import ks_one_sample, reference_cdf

MIN_CALIBRATION = 100


class Which(str, enum.Enum):
    A_LAMBDA2 = "A_lambda2"
    H_LAMBDA1 = "H_lambda1"
    GOE_MU1 = "GOE_mu1"


def z_statistic(H: np.ndarray) -> float:
    """Leading fluctuation of the random edge: ``(1/N) sum_{i != j} (H_ij^2 - 1/N)``."""
    N = H.shape[0]
    H2 = H * H
    off = H2.sum() - np.trace(H2)
    return float((off - (N - 1)) / N)


def fourth_moment_sum(H: np.ndarray) -> float:
    return float(np.sum(H**4))


def er_fourth_moment_sum(p: float) -> float:
    """Closed form of ``sum_ij E H_ij^4`` for the rescaled Erdős–Rényi matrix."""
    return ((1 - p) ** 3 + p**3) / (p * (1 - p))


@dataclass
class EdgeEstimate:
    """Edge ``L_det + z`` calibrated from a stream of centered matrices.

    ``L_det`` is the calibration mean of the top eigenvalue, minus
    ``goe_shift``: the mean of ``mu_1 - 2`` for GOE at the same ``N`` (the
    Tracy–Widom offset between the mean top eigenvalue and the edge).
    """

    N: int
    L_det: float
    z_stat: np.ndarray
    L_hat: np.ndarray
    fourth_moment_sum: float
    lambda1: np.ndarray
    goe_shift: float = 0.0

    @property
    def M(self) -> int:
        return self.z_stat.size


def estimate_edge(H_samples, goe_shift: float = 0.0) -> EdgeEstimate:
    lam1, zs, m4 = [], [], []
    N = None
    for H in H_samples:
        N = H.shape[0]
        lam1.append(eigh(H, vectors=False).eigenvalues[0])
        zs.append(z_statistic(H))
        m4.append(fourth_moment_sum(H))
    if len(lam1) < MIN_CALIBRATION:
        raise ValueError(f"edge calibration needs >= {MIN_CALIBRATION} samples, got {len(lam1)}")
    return edge_estimate_from_stats(N, np.array(lam1), np.array(zs), np.array(m4), goe_shift)


def edge_estimate_from_stats(N, lambda1, z_stat, m4, goe_shift: float = 0.0) -> EdgeEstimate:
    lambda1 = np.asarray(lambda1, dtype=float)
    z_stat = np.asarray(z_stat, dtype=float)
    if lambda1.size < MIN_CALIBRATION:
        raise ValueError(f"edge calibration needs >= {MIN_CALIBRATION} samples, got {lambda1.size}")
    L_det = float(lambda1.mean()) - goe_shift
    return EdgeEstimate(int(N), L_det, z_stat, L_det + z_stat, float(np.mean(m4)), lambda1, goe_shift)


def standardized_z(z_stats, N: int, fourth_moment_sum: float) -> np.ndarray:
    if fourth_moment_sum <= 0:
        raise ValueError("fourth_moment_sum must be positive")
    return np.asarray(z_stats, dtype=float) * N / math.sqrt(2.0 * fourth_moment_sum)


def clt_check_z(z_stats, N: int, fourth_moment_sum: float) -> float:
    """KS distance of the standardized edge fluctuation to the standard normal."""
    zs = standardized_z(z_stats, N, fourth_moment_sum)
    return ks_one_sample(zs, lambda x: reference_cdf("StdNormal", x))


@dataclass
class EdgeSampleSet:
    rescaled_edges: np.ndarray
    gaps: np.ndarray
    ensemble_tag: str
    interlacing_violations: int = 0


def interlacing_ok(lam_A: np.ndarray, lam_H: np.ndarray, tol: float = 1e-10) -> bool:
    """Cauchy interlacing for a positive rank-one shift: ``lam_H[k] <= lam_A[k] <= lam_H[k-1]``."""
    slack = tol * max(1.0, float(np.max(np.abs(lam_A))))
    return bool(np.all(lam_H <= lam_A + slack) and np.all(lam_A[1:] <= lam_H[:-1] + slack))


def edge_sample(A, H, N: int, which: Which, edge) -> tuple[float, float, bool]:
    """One rescaled edge statistic, its adjacent gap, and the interlacing verdict."""
    scale = N ** (2.0 / 3.0)
    if which is Which.GOE_MU1:
        lam = eigh(A, vectors=False).eigenvalues
        return scale * (lam[0] - 2.0), scale * (lam[0] - lam[1]), True
    L_hat = edge.L_det + z_statistic(H) if isinstance(edge, EdgeEstimate) else float(edge)
    lam_H = eigh(H, vectors=False).eigenvalues
    if which is Which.H_LAMBDA1:
        return scale * (lam_H[0] - L_hat), scale * (lam_H[0] - lam_H[1]), True
    lam_A = eigh(A, vectors=False).eigenvalues
    return scale * (lam_A[1] - L_hat), scale * (lam_A[1] - lam_A[2]), interlacing_ok(lam_A, lam_H)


def edge_samples(ensemble: EnsembleSpec, M: int, which: Which | str, edge=2.0, start: int = 0) -> EdgeSampleSet:
    which = Which(which)
    if M < MIN_CALIBRATION:
        raise ValueError(f"edge_samples needs M >= {MIN_CALIBRATION}")
    N = ensemble.N
    if isinstance(edge, EdgeEstimate) and edge.N != N:
        raise ValueError(f"edge estimate is for N={edge.N}, ensemble has N={N}")
    stats, gaps, bad = [], [], 0
    for i in range(start, start + M):
        if which is Which.GOE_MU1:
            A = H = sample_goe(N, i, ensemble.master_seed)
        else:
            A, H = sample_matrix(ensemble, i)
        s, g, ok = edge_sample(A, H, N, which, edge)
        stats.append(s)
        gaps.append(g)
        bad += not ok
    return EdgeSampleSet(np.array(stats), np.array(gaps), which.value, bad)


def top_gap_shift(N: int, M: int, master_seed: int = 0, purpose: str = "goe") -> float:
    """Mean of ``mu_1 - 2`` over ``M`` GOE samples."""
    return float(np.mean([eigh(sample_goe(N, i, master_seed, purpose), vectors=False).eigenvalues[0] - 2.0
                          for i in range(M)]))


def gap_and_repulsion(S_stream, indices, epsilons):
    """Rescaled gaps ``N^(2/3)(lam_i - lam_{i+1})`` and, per epsilon, the frequency of gaps <= N^(-2/3-eps).

    Returns ``(gaps, freqs)``: ``gaps[i]`` is an array over samples, ``freqs`` a
    list of dicts ``{epsilon, threshold, frequency, M}``.
    """
    gaps = {i: [] for i in indices}
    N = None
    for S in S_stream:
        lam = S.eigenvalues if isinstance(S, SpectralData) else np.asarray(S)
        N = lam.size
        for i in indices:
            gaps[i].append(lam[i - 1] - lam[i])
    if N is None:
        raise ValueError("empty spectral stream")
    scale = N ** (2.0 / 3.0)
    out_gaps = {i: scale * np.array(g) for i, g in gaps.items()}
    pooled = np.concatenate([np.array(g) for g in gaps.values()])
    freqs = []
    for eps in epsilons:
        thr = N ** (-2.0 / 3.0 - eps)
        freqs.append({"epsilon": float(eps), "threshold": thr,
                      "frequency": float(np.mean(pooled <= thr)), "M": int(pooled.size)})
    return out_gaps, freqs


def rigidity_residuals(S, edge: float, k_range) -> np.ndarray:
    """``(lam_k - gamma_k) / (N^(-2/3) min(k, N-k+1)^(-1/3))`` with classical locations scaled to ``edge``."""
    lam = S.eigenvalues if isinstance(S, SpectralData) else np.asarray(S)
    N = lam.size
    k = np.asarray(list(k_range))
    gam = gamma_sc(k, N) * edge / 2.0
    scale = N ** (-2.0 / 3.0) * np.minimum(k, N - k + 1) ** (-1.0 / 3.0)
    return (lam[k - 1] - gam) / scale
