"""Edge quantum-ergodicity fluctuations and the eigenstate thermalization bound for Wigner matrices."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from sparselab._rng import stream
from sparselab.ensemble import sample_wigner
from sparselab.spectral import SpectralData, eigh

ETH_PAIRS = 10_000


@dataclass
class EthSample:
    sample_index: int
    a: int
    stat: float
    obs_tag: str

    def to_row(self) -> dict:
        return {"sample_index": self.sample_index, "a": self.a, "obs_tag": self.obs_tag, "stat": self.stat}


def _check_traceless(B: np.ndarray) -> None:
    if abs(np.trace(B)) >= 1e-8:
        raise ValueError(f"observable must be traceless, tr B = {np.trace(B):.3e}")


def eth_stat(u: np.ndarray, B: np.ndarray) -> float:
    """``N <u, B u> / sqrt(2 tr B^2)``."""
    N = u.size
    return float(N * (u @ B @ u) / math.sqrt(2.0 * np.sum(B * B)))


def eth_stats_for(S: SpectralData, observables, a_list, tags, sample_index: int = 0) -> list[EthSample]:
    out = []
    for B, tag in zip(observables, tags):
        for a in a_list:
            out.append(EthSample(sample_index, a, eth_stat(S.eigenvectors[:, a - 1], B), tag))
    return out


def eth_edge_samples(N: int, observables, a_list, M: int, master_seed: int = 0, entry_law: str = "gaussian",
                     tags=None, tau: float = 0.3, start: int = 0) -> list[EthSample]:
    tags = list(tags) if tags is not None else [f"B{i}" for i in range(len(observables))]
    for B in observables:
        _check_traceless(B)
        if np.sum(B * B) < N**tau * np.linalg.norm(B, 2) ** 2:
            raise ValueError("observable violates tr B^2 >= N^tau ||B||^2")
    out = []
    for i in range(start, start + M):
        S = eigh(sample_wigner(N, i, master_seed, entry_law))
        out.extend(eth_stats_for(S, observables, a_list, tags, sample_index=i))
    return out


def eth_pairs(N: int, n_pairs: int = ETH_PAIRS, seed: int = 0, full: bool = False):
    """Off-diagonal pairs ``i < j`` (seeded uniform draw, or all of them) followed by every diagonal pair."""
    if full or n_pairs >= N * (N - 1) // 2:
        I, J = np.triu_indices(N, 1)
    else:
        rng = stream(seed, 0, "eth-pairs")
        I = rng.integers(0, N, size=n_pairs)
        J = rng.integers(0, N - 1, size=n_pairs)
        J = J + (J >= I)
        I, J = np.minimum(I, J), np.maximum(I, J)
    d = np.arange(N)
    return np.r_[I, d], np.r_[J, d]


def eth_bound_scan(S: SpectralData, B: np.ndarray, n_pairs: int = ETH_PAIRS, full: bool = False,
                   seed: int = 0) -> float:
    """``max N |<u_i, B u_j>| / sqrt(tr B^2)`` over sampled pairs plus the diagonal."""
    _check_traceless(B)
    lam = S.eigenvalues
    if np.any(np.abs(np.diff(lam)) <= 1e-12 * max(1.0, float(np.max(np.abs(lam))))):
        warnings.warn("degenerate spectrum: eigenvectors are not unique and the bound need not hold",
                      RuntimeWarning, stacklevel=2)
    N = S.n
    U = S.eigenvectors
    I, J = eth_pairs(N, n_pairs, seed, full)
    BU = B @ U
    elems = np.einsum("ki,ki->i", U[:, I], BU[:, J])
    return float(N * np.max(np.abs(elems)) / math.sqrt(np.sum(B * B)))
