"""Random matrix laws and deterministic probe objects.

Matrices are dense, symmetric ``numpy`` arrays of shape ``(N, N)``. Both
triangles are filled from a single draw of the upper triangle, so symmetry
holds bit for bit.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from sparselab._rng import stream

DEFAULT_TAU = 0.3


class Kind(str, enum.Enum):
    SPARSE_ER = "SparseER"
    GENERAL_SPARSE = "GeneralSparse"
    GOE = "GOE"


class ObservableKind(str, enum.Enum):
    DIAG_PM = "DiagPM"
    CENTERED_PROJECTION = "CenteredProjection"
    RANDOM_SYM = "RandomSym"


class SpecError(ValueError):
    """Raised for an ensemble parameterization that violates its constraints."""


@dataclass(frozen=True)
class EnsembleSpec:
    """Parameterization of one random matrix law.

    For ``SparseER`` only ``p`` is supplied; ``q = sqrt(N p)`` and
    ``f = sqrt(N p / (1 - p))`` are derived from it. ``GeneralSparse`` takes
    ``q`` and ``f`` directly and checks ``N**tau <= q <= sqrt(N)`` and
    ``tau q <= f <= q / tau``. ``GOE`` needs only ``N``.
    """

    kind: Kind
    N: int
    p: float | None = None
    q: float | None = None
    f: float | None = None
    tau: float = DEFAULT_TAU
    master_seed: int = 0
    zero_diagonal: bool = False

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not isinstance(self.N, (int, np.integer)) or self.N < 2:
            raise SpecError(f"N must be an integer >= 2, got {self.N!r}")
        if not 0.0 < self.tau <= 0.5:
            raise SpecError(f"tau must lie in (0, 1/2], got {self.tau}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise SpecError("master_seed must be a 64-bit unsigned integer")

        if kind is Kind.SPARSE_ER:
            if self.p is None or not 0.0 < self.p <= 0.5:
                raise SpecError(f"p must lie in (0, 1/2] for SparseER, got {self.p}")
            q = math.sqrt(self.N * self.p)
            f = math.sqrt(self.N * self.p / (1.0 - self.p))
            for name, given, derived in (("q", self.q, q), ("f", self.f, f)):
                if given is not None and not math.isclose(given, derived, rel_tol=1e-12):
                    raise SpecError(f"{name} is derived from p for SparseER; got {given}, expected {derived}")
            object.__setattr__(self, "q", q)
            object.__setattr__(self, "f", f)
        elif kind is Kind.GENERAL_SPARSE:
            if self.q is None or self.f is None:
                raise SpecError("GeneralSparse requires q and f")
            lo, hi = self.N**self.tau, math.sqrt(self.N)
            if not lo * (1 - 1e-12) <= self.q <= hi * (1 + 1e-12):
                raise SpecError(f"q={self.q} outside [N^tau, N^1/2] = [{lo:.6g}, {hi:.6g}]")
            if not self.tau * self.q * (1 - 1e-12) <= self.f <= self.q / self.tau * (1 + 1e-12):
                raise SpecError(f"f={self.f} outside [tau q, q/tau]")
        else:
            if self.p is not None or self.q is not None or self.f is not None:
                raise SpecError("GOE takes no p, q or f")

    @property
    def theta(self) -> float:
        """Success probability of the two-point entry law, clamped to [1/N, 1/2]."""
        if self.kind is Kind.SPARSE_ER:
            return self.p
        if self.kind is Kind.GENERAL_SPARSE:
            return min(max(self.q**2 / self.N, 1.0 / self.N), 0.5)
        raise SpecError("GOE has no two-point entry law")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "N": int(self.N), "tau": self.tau, "master_seed": int(self.master_seed)}
        if self.kind is Kind.SPARSE_ER:
            d["p"] = self.p
            d["zero_diagonal"] = self.zero_diagonal
        elif self.kind is Kind.GENERAL_SPARSE:
            d["q"] = self.q
            d["f"] = self.f
        return d

    @classmethod
    def from_dict(cls, d: dict) -> EnsembleSpec:
        known = {"kind", "N", "p", "q", "f", "tau", "master_seed", "zero_diagonal"}
        unknown = set(d) - known
        if unknown:
            raise SpecError(f"unknown ensemble fields: {sorted(unknown)}")
        return cls(**d)

    def with_seed(self, master_seed: int) -> EnsembleSpec:
        d = self.to_dict()
        d["master_seed"] = master_seed
        return EnsembleSpec.from_dict(d)


def unit_e(N: int) -> np.ndarray:
    return np.full(N, 1.0 / math.sqrt(N))


def _symmetric_from_upper(N: int, upper: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(N)
    M = np.zeros((N, N))
    M[iu] = upper
    M.T[iu] = upper
    return M


def sample_er_rescaled(spec: EnsembleSpec, sample_index: int, purpose: str = "sample"):
    """Rescaled Erdős–Rényi adjacency matrix.

    Returns ``(A, H)`` with ``A = adj / sqrt(N p (1-p))`` and
    ``H = A - f e e^T = (adj - p J) / sqrt(N p (1-p))``.
    """
    if spec.kind is not Kind.SPARSE_ER:
        raise SpecError(f"sample_er_rescaled needs a SparseER spec, got {spec.kind.value}")
    N, p = spec.N, spec.p
    rng = stream(spec.master_seed, sample_index, purpose)
    draws = rng.random(N * (N + 1) // 2) < p
    adj = _symmetric_from_upper(N, draws.astype(float))
    if spec.zero_diagonal:
        np.fill_diagonal(adj, 0.0)
    scale = math.sqrt(N * p * (1.0 - p))
    A = adj / scale
    H = (adj - p) / scale
    return A, H


def sample_general_sparse(spec: EnsembleSpec, sample_index: int, purpose: str = "sample") -> np.ndarray:
    """Centered two-point law with ``E H_ij^2 = 1/N`` at sparsity ``q``.

    Each upper-triangular entry equals ``(1-theta)/(sqrt(N) s)`` with probability
    ``theta`` and ``-theta/(sqrt(N) s)`` otherwise, ``s = sqrt(theta (1-theta))``.
    """
    if spec.kind is Kind.GOE:
        raise SpecError("sample_general_sparse needs a two-point ensemble")
    N, theta = spec.N, spec.theta
    rng = stream(spec.master_seed, sample_index, purpose)
    hits = rng.random(N * (N + 1) // 2) < theta
    s = math.sqrt(N * theta * (1.0 - theta))
    upper = np.where(hits, (1.0 - theta) / s, -theta / s)
    return _symmetric_from_upper(N, upper)


def add_rank_one(H: np.ndarray, f: float) -> np.ndarray:
    if f <= 0:
        raise ValueError(f"f must be positive, got {f}")
    return H + f / H.shape[0]


def sample_goe(N: int, sample_index: int, master_seed: int = 0, purpose: str = "goe") -> np.ndarray:
    """GOE with off-diagonal variance 1/N and diagonal variance 2/N."""
    if N < 2:
        raise SpecError(f"N must be >= 2, got {N}")
    rng = stream(master_seed, sample_index, purpose)
    upper = rng.standard_normal(N * (N + 1) // 2) / math.sqrt(N)
    M = _symmetric_from_upper(N, upper)
    M[np.diag_indices(N)] *= math.sqrt(2.0)
    return M


def sample_wigner(N: int, sample_index: int, master_seed: int = 0, entry_law: str = "gaussian",
                  purpose: str = "wigner") -> np.ndarray:
    """Dense Wigner matrix: GOE entries or symmetric ±1/sqrt(N) entries."""
    if entry_law == "gaussian":
        return sample_goe(N, sample_index, master_seed, purpose)
    if entry_law == "rademacher":
        spec = EnsembleSpec(Kind.GENERAL_SPARSE, N, q=math.sqrt(N), f=math.sqrt(N), master_seed=master_seed)
        return sample_general_sparse(spec, sample_index, purpose)
    raise ValueError(f"unknown entry law {entry_law!r}")


def sample_matrix(spec: EnsembleSpec, sample_index: int, purpose: str = "sample"):
    """``(A, H)`` for any ensemble; ``A is H`` for GOE."""
    if spec.kind is Kind.SPARSE_ER:
        return sample_er_rescaled(spec, sample_index, purpose)
    if spec.kind is Kind.GENERAL_SPARSE:
        H = sample_general_sparse(spec, sample_index, purpose)
        return add_rank_one(H, spec.f), H
    H = sample_goe(spec.N, sample_index, spec.master_seed, purpose)
    return H, H


def make_perp_frame(N: int, k: int, frame_seed: int, orthonormal: bool = True, perp: bool = True) -> np.ndarray:
    """``k`` deterministic unit vectors (rows), orthogonal to ``e`` when ``perp``."""
    limit = N - 1 if perp else N
    if not 1 <= k <= limit:
        raise ValueError(f"need 1 <= k <= {limit} for N={N}, got k={k}")
    rng = stream(frame_seed, 0, "frame")
    X = rng.standard_normal((k, N))
    e = unit_e(N)
    rows = []
    for x in X:
        for _ in range(2):
            if perp:
                x = x - (x @ e) * e
            if orthonormal:
                for r in rows:
                    x = x - (x @ r) * r
        rows.append(x / np.linalg.norm(x))
    return np.array(rows)


def make_traceless_observable(N: int, kind: ObservableKind | str, obs_seed: int = 0) -> np.ndarray:
    kind = ObservableKind(kind)
    if kind is ObservableKind.DIAG_PM:
        if N % 2:
            raise ValueError(f"DiagPM needs even N, got {N}")
        return np.diag(np.r_[np.ones(N // 2), -np.ones(N // 2)])
    if kind is ObservableKind.CENTERED_PROJECTION:
        r = N // 4
        d = np.full(N, -r / N)
        d[:r] += 1.0
        return np.diag(d)
    B = sample_goe(N, 0, obs_seed, purpose="observable")
    B[np.diag_indices(N)] -= np.trace(B) / N
    return B / np.linalg.norm(B, 2)


def interleaved_diag_pm(N: int) -> np.ndarray:
    """Diagonal ±1 observable with alternating signs; trace-orthogonal to DiagPM when 4 | N."""
    if N % 4:
        raise ValueError(f"interleaved split needs N divisible by 4, got {N}")
    return np.diag(np.tile([1.0, -1.0], N // 2))


@dataclass
class ProbeSet:
    """Test directions: unit vectors (rows of ``vectors``) and traceless observables."""

    n: int
    vectors: np.ndarray
    observables: list = field(default_factory=list)
    perp: bool = True

    @property
    def e(self) -> np.ndarray:
        return unit_e(self.n)

    def validate(self, tau: float = DEFAULT_TAU) -> None:
        V = np.atleast_2d(self.vectors)
        if V.shape[1] != self.n:
            raise ValueError(f"probe dimension {V.shape[1]} != {self.n}")
        if np.max(np.abs(np.linalg.norm(V, axis=1) - 1.0)) > 1e-12:
            raise ValueError("probe vectors must be unit vectors")
        if self.perp and np.max(np.abs(V @ self.e)) > 1e-12:
            raise ValueError("probe vectors must be orthogonal to e")
        for B in self.observables:
            if abs(np.trace(B)) >= 1e-10:
                raise ValueError("observable is not traceless")
            if np.trace(B @ B) < self.n**tau * np.linalg.norm(B, 2) ** 2:
                raise ValueError("observable violates tr B^2 >= N^tau ||B||^2")


def make_probe_set(N: int, k: int, frame_seed: int = 0, perp: bool = True, observables=()) -> ProbeSet:
    probes = ProbeSet(N, make_perp_frame(N, k, frame_seed, orthonormal=True, perp=perp), list(observables), perp)
    probes.validate()
    return probes


# SEL1 dump: 16-byte header then little-endian float64, row-major.
_SEL1_MAGIC = b"SEL1"
_SEL1_HEADER = struct.Struct("<4sIII")


def dump_matrix(path, M: np.ndarray) -> None:
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("matrix must be square")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_SEL1_HEADER.pack(_SEL1_MAGIC, n, 0, 0))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())
    tmp.replace(path)


def load_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    magic, n, _, _ = _SEL1_HEADER.unpack_from(raw)
    if magic != _SEL1_MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = raw[_SEL1_HEADER.size:]
    if len(body) != 8 * n * n:
        raise ValueError(f"truncated SEL1 file: expected {8 * n * n} bytes, got {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(n, n).copy()
