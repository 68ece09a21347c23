"""Green-function error scans over the spectral domain and delocalization statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from sparselab._rng import stream
from sparselab.ensemble import ProbeSet, unit_e
from sparselab.spectral import SpectralData, SpectralDomainPoint, m_sc, resolvent_qforms

N_PAIRS = 200


@dataclass
class LocalLawRecord:
    E: float
    eta: float
    err_iso: float
    err_ee: float
    err_ev: float
    err_entry: float
    bound_iso: float
    bound_entry: float
    N: int
    sample_index: int = 0

    @property
    def z(self) -> SpectralDomainPoint:
        return SpectralDomainPoint(self.E, self.eta)

    def to_row(self) -> dict:
        d = asdict(self)
        d.pop("N")
        return d


@dataclass
class DelocalizationRecord:
    max_inf_norm: float
    max_e_overlap_nontop: float
    max_probe_overlap: float
    sum_e_overlap_sq_nontop: float


def bound_iso(N: int, eta: float, q: float) -> float:
    return (N * eta) ** (-1.0 / 3.0) + q ** (-1.0 / 3.0)


def bound_entry(N: int, eta: float, q: float) -> float:
    return math.sqrt(1.0 / (N * eta)) + 1.0 / (N * eta) + 1.0 / q


def entry_index_sets(N: int, seed: int = 0, full: bool = False):
    """Index pairs ``(I, J)`` for the entrywise scan: off-diagonal pairs plus diagonal entries."""
    if full:
        I, J = np.triu_indices(N)
        return I, J
    rng = stream(seed, 0, "entry-pairs")
    n_off = min(N_PAIRS, N * (N - 1) // 2)
    I = rng.integers(0, N, size=4 * n_off)
    J = rng.integers(0, N, size=4 * n_off)
    keep = I != J
    pairs = np.unique(np.sort(np.c_[I[keep], J[keep]], axis=1), axis=0)[:n_off]
    diag = rng.choice(N, size=min(N_PAIRS, N), replace=False)
    return np.r_[pairs[:, 0], diag], np.r_[pairs[:, 1], diag]


def scan_local_law(S: SpectralData, probes: ProbeSet, grid, f: float, q: float,
                   sample_index: int = 0, full_entries: bool = False, pair_seed: int = 0) -> list[LocalLawRecord]:
    """Green-function errors at every grid point.

    ``f = 0`` marks a scan of the centered matrix ``H``; ``err_ee`` and
    ``err_ev`` are then not defined and reported as NaN.
    """
    N = S.n
    V = np.atleast_2d(probes.vectors)
    if V.shape[1] != N or probes.n != N:
        raise ValueError(f"probe dimension {V.shape[1]} does not match N={N}")
    e = unit_e(N)
    inner = V @ V.T
    I, J = entry_index_sets(N, pair_seed, full_entries)
    U = S.eigenvectors
    W = U[I] * U[J]
    delta = (I == J).astype(float)

    records = []
    for pt in grid:
        z = pt.z
        m = complex(m_sc(z))
        G_vw = resolvent_qforms(S, z, V, V)
        err_iso = float(np.max(np.abs(G_vw - inner * m)))
        if f > 0:
            G_ee = resolvent_qforms(S, z, e, e)[0, 0]
            G_ev = resolvent_qforms(S, z, e, V)[0]
            err_ee = abs(G_ee - 1.0 / f)
            err_ev = float(np.max(np.abs(G_ev)))
        else:
            err_ee = err_ev = math.nan
        G_ij = W @ (1.0 / (S.eigenvalues - z))
        err_entry = float(np.max(np.abs(G_ij - delta * m)))
        records.append(LocalLawRecord(
            E=pt.E, eta=pt.eta, err_iso=err_iso, err_ee=float(err_ee), err_ev=err_ev, err_entry=err_entry,
            bound_iso=bound_iso(N, pt.eta, q), bound_entry=bound_entry(N, pt.eta, q), N=N,
            sample_index=sample_index,
        ))
    return records


def delocalization_stats(S: SpectralData, probes: ProbeSet) -> DelocalizationRecord:
    U = S.eigenvectors
    e_ov = unit_e(S.n) @ U
    probe_ov = np.atleast_2d(S.overlaps(probes.vectors))
    return DelocalizationRecord(
        max_inf_norm=float(np.max(np.abs(U))),
        max_e_overlap_nontop=float(np.max(np.abs(e_ov[1:]))),
        max_probe_overlap=float(np.max(np.abs(probe_ov[:, 1:]))),
        sum_e_overlap_sq_nontop=float(np.sum(e_ov[1:] ** 2)),
    )


def fit_error_scaling(records) -> tuple[float, float]:
    """Worst calibrated ratio and the log-log slope of ``err_iso`` against ``eta``.

    The slope is fitted within each energy (energies enter as fixed effects)
    and needs at least ten records spanning a decade of ``eta``.
    """
    ratio_max = max(r.err_iso / r.bound_iso for r in records)
    used = [r for r in records if r.err_iso > 0]
    if len(used) < 10:
        raise ValueError(f"need >= 10 records with nonzero error, got {len(used)}")
    etas = np.array([r.eta for r in used])
    if math.log10(etas.max() / etas.min()) < 1.0 - 1e-12:
        raise ValueError("records span less than one decade of eta")
    x = np.log(etas)
    y = np.log([r.err_iso for r in used])
    Es = np.array([r.E for r in used])
    xc, yc = x.copy(), y.copy()
    for E in np.unique(Es):
        sel = Es == E
        xc[sel] -= x[sel].mean()
        yc[sel] -= y[sel].mean()
    return float(ratio_max), float(np.sum(xc * yc) / np.sum(xc * xc))
