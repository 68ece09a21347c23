"""Distances between empirical samples and reference laws, and pass/fail records."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

KS_99 = 1.63
ECF_GRID = np.linspace(-5.0, 5.0, 41)


class Reference(str, enum.Enum):
    STD_NORMAL = "StdNormal"
    CHISQ1 = "ChiSq1"


@dataclass
class TestResult:
    """One pass/fail line; ``passed`` is always ``statistic <= threshold``."""

    __test__ = False  # keep pytest from collecting this class

    name: str
    statistic: float
    threshold: float
    M: int
    notes: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.statistic <= self.threshold)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "M": int(self.M),
            "pass": self.passed,
            "notes": self.notes,
        }

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.statistic:.6g} <= {self.threshold:.6g} (M={self.M}) {self.notes}".rstrip()


def reference_cdf(kind: Reference | str, x):
    kind = Reference(kind)
    x = np.asarray(x, dtype=float)
    if kind is Reference.STD_NORMAL:
        out = ndtr(x)
    else:
        out = np.where(x > 0, 2.0 * ndtr(np.sqrt(np.maximum(x, 0.0))) - 1.0, 0.0)
    return float(out) if out.ndim == 0 else out


def ks_one_sample(samples, cdf) -> float:
    """Exact sup-distance between the empirical CDF and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    M = x.size
    if M == 0:
        raise ValueError("ks_one_sample on empty input")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, M + 1)
    return float(max(np.max(i / M - F), np.max(F - (i - 1) / M)))


def ks_two_sample(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("ks_two_sample on empty input")
    pts = np.concatenate([a, b])
    Fa = np.searchsorted(a, pts, side="right") / a.size
    Fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def empirical_cf(samples, t_grid) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("empirical_cf on empty input")
    t = np.asarray(t_grid, dtype=float)
    return np.exp(1j * np.multiply.outer(t, x)).mean(axis=-1)


def ecf_sup_distance(samples, target, t_grid=ECF_GRID) -> float:
    emp = empirical_cf(samples, t_grid)
    return float(np.max(np.abs(emp - target(np.asarray(t_grid)))))


def ks_threshold(M: int, two_sample_with: int | None = None) -> float:
    """Asymptotic 99% null quantile of the KS distance."""
    if two_sample_with is None:
        return KS_99 / math.sqrt(M)
    return KS_99 * math.sqrt((M + two_sample_with) / (M * two_sample_with))


def mean_and_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def z_score_of_mean(x, target: float = 0.0) -> float:
    """``|mean - target|`` in units of the standard error."""
    m, se = mean_and_se(x)
    return abs(m - target) / se if se > 0 else (0.0 if m == target else math.inf)


def correlation_z(x, y) -> float:
    """Sample correlation in units of its null standard error ``1/sqrt(M - 1)``."""
    r = float(np.corrcoef(x, y)[0, 1])
    return abs(r) * math.sqrt(len(x) - 1)
