from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparselab import _rng
from sparselab.ensemble import (
    EnsembleSpec,
    Kind,
    ProbeSet,
    SpecError,
    _symmetric_from_upper,
    add_rank_one,
    dump_matrix,
    interleaved_diag_pm,
    load_matrix,
    make_perp_frame,
    make_probe_set,
    make_traceless_observable,
    sample_er_rescaled,
    sample_general_sparse,
    sample_goe,
    sample_matrix,
    sample_wigner,
    unit_e,
)
from sparselab.spectral import eigh


def test_er_derived_parameters():
    s = EnsembleSpec("SparseER", 1000, p=0.05)
    assert s.q == pytest.approx(math.sqrt(50))
    assert s.f == pytest.approx(math.sqrt(50 / 0.95))
    assert s.theta == 0.05
    with pytest.raises(SpecError):
        EnsembleSpec("SparseER", 1000, p=0.05, q=3.0)
    EnsembleSpec("SparseER", 1000, p=0.05, q=math.sqrt(50))


@pytest.mark.parametrize("kw", [
    dict(kind="SparseER", N=1, p=0.1),
    dict(kind="SparseER", N=100, p=0.0),
    dict(kind="SparseER", N=100, p=0.7),
    dict(kind="SparseER", N=100),
    dict(kind="GeneralSparse", N=1000, q=2.0, f=2.0),
    dict(kind="GeneralSparse", N=1000, q=10.0, f=100.0),
    dict(kind="GeneralSparse", N=1000, q=40.0, f=10.0),
    dict(kind="GOE", N=10, p=0.1),
    dict(kind="Cauchy", N=10),
])
def test_spec_rejects_invalid(kw):
    with pytest.raises((SpecError, ValueError)):
        EnsembleSpec(**kw)


def test_spec_roundtrip():
    for s in (EnsembleSpec("SparseER", 300, p=0.1, master_seed=9),
              EnsembleSpec("GeneralSparse", 400, q=8.0, f=6.0, tau=0.25),
              EnsembleSpec("GOE", 50)):
        assert EnsembleSpec.from_dict(s.to_dict()) == s
    assert EnsembleSpec("GOE", 50).with_seed(3).master_seed == 3
    with pytest.raises(SpecError):
        EnsembleSpec.from_dict({"kind": "GOE", "N": 5, "bogus": 1})


def test_upper_fill_all_ones_and_zero(monkeypatch):
    p = 0.3
    spec = EnsembleSpec("SparseER", 4, p=p)
    scale = math.sqrt(4 * p * (1 - p))

    class Fixed:
        def __init__(self, value):
            self.value = value

        def random(self, n):
            return np.full(n, self.value)

    for draw, expect in ((0.0, (1 - p) / scale), (0.99, -p / scale)):
        monkeypatch.setattr("sparselab.ensemble.stream", lambda *a, v=draw: Fixed(v))
        A, H = sample_er_rescaled(spec, 0)
        assert np.allclose(H, expect, atol=1e-15)
        assert np.allclose(A, (1.0 if draw == 0.0 else 0.0) / scale)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.floats(0.01, 0.5), st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_er_symmetry_decomposition_determinism(N, p, seed, idx):
    spec = EnsembleSpec("SparseER", N, p=p, master_seed=seed)
    A, H = sample_er_rescaled(spec, idx)
    assert np.array_equal(A, A.T) and np.array_equal(H, H.T)
    assert np.max(np.abs(A - H - spec.f * np.outer(unit_e(N), unit_e(N)))) < 1e-14
    A2, H2 = sample_er_rescaled(spec, idx)
    assert np.array_equal(A, A2) and np.array_equal(H, H2)


def test_determinism_independent_of_call_order():
    spec = EnsembleSpec("SparseER", 60, p=0.1, master_seed=5)
    forward = [sample_matrix(spec, i)[0] for i in range(5)]
    backward = [sample_matrix(spec, i)[0] for i in reversed(range(5))][::-1]
    assert all(np.array_equal(a, b) for a, b in zip(forward, backward))
    assert not np.array_equal(forward[0], forward[1])
    assert not np.array_equal(sample_matrix(spec, 0)[0], sample_matrix(spec, 0, purpose="calib")[0])


def test_stream_rejects_negative_index():
    with pytest.raises(ValueError):
        _rng.stream(0, -1)


def test_zero_diagonal_flag():
    spec = EnsembleSpec("SparseER", 50, p=0.3, zero_diagonal=True)
    A, H = sample_er_rescaled(spec, 0)
    assert np.all(np.diag(A) == 0)
    assert np.allclose(np.diag(H), -spec.f / 50)


def test_er_moments_n2000():
    N, p = 2000, 0.02
    spec = EnsembleSpec("SparseER", N, p=p, master_seed=11)
    _, H = sample_er_rescaled(spec, 0)
    sd = math.sqrt(1.0 / N)
    assert abs(H.mean()) < 3 * (N * math.sqrt(N)) ** -0.5 * sd
    off = H[np.triu_indices(N, 1)]
    assert abs(off.var() * N - 1) < 0.05


def test_er_pooled_moments():
    N, M = 1000, 200
    spec = EnsembleSpec("SparseER", N, p=0.05, master_seed=2)
    iu = np.triu_indices(N, 1)
    m1, m2 = [], []
    for i in range(M):
        x = sample_er_rescaled(spec, i)[1][iu]
        m1.append(x.mean())
        m2.append((x * x).mean())
    m1, m2 = np.array(m1), np.array(m2)
    assert abs(m1.mean()) < 5 * m1.std(ddof=1) / math.sqrt(M)
    assert abs(m2.mean() - 1 / N) < 5 * m2.std(ddof=1) / math.sqrt(M)


def test_general_sparse_dense_endpoint():
    N = 400
    spec = EnsembleSpec("GeneralSparse", N, q=math.sqrt(N), f=math.sqrt(N))
    assert spec.theta == 0.5
    H = sample_general_sparse(spec, 0)
    assert np.allclose(np.abs(H), 1 / math.sqrt(N))
    assert np.array_equal(H, H.T)
    W = sample_wigner(N, 0, entry_law="rademacher")
    assert np.allclose(np.abs(W), 1 / math.sqrt(N))


def test_general_sparse_moments():
    N = 1000
    theta = 0.02
    spec = EnsembleSpec("GeneralSparse", N, q=math.sqrt(theta * N), f=4.0, tau=0.2)
    H = sample_general_sparse(spec, 3)
    off = H[np.triu_indices(N, 1)]
    expect4 = ((1 - theta) ** 3 + theta**3) / (N**2 * theta * (1 - theta))
    assert abs(np.mean(off**4) / expect4 - 1) < 0.10
    assert abs(np.mean(off**2) * N - 1) < 0.05
    A, H2 = sample_matrix(spec, 3)
    assert np.array_equal(H, H2)
    assert np.allclose(A - H, 4.0 / N)


def test_add_rank_one():
    A = add_rank_one(np.zeros((4, 4)), 3.0)
    assert np.allclose(A, 0.75)
    S = eigh(A)
    assert abs(S.eigenvalues[0] - 3) < 1e-14 and np.allclose(S.eigenvectors[:, 0], 0.5)
    assert np.allclose(add_rank_one(np.diag([1.0, -1.0]), 2.0), [[2, 1], [1, 0]])
    spec = EnsembleSpec("SparseER", 30, p=0.2)
    A, H = sample_matrix(spec, 1)
    assert np.max(np.abs(add_rank_one(A - spec.f / 30, spec.f) - A)) < 1e-15
    with pytest.raises(ValueError):
        add_rank_one(A, 0.0)


def test_goe_moments_and_edge():
    N = 1000
    G = sample_goe(N, 0)
    off = G[np.triu_indices(N, 1)]
    assert abs(off.var() * N - 1) < 0.05
    assert abs(np.mean(np.diag(G) ** 2) * N / 2 - 1) < 0.15
    lam1 = [eigh(sample_goe(N, i), vectors=False).eigenvalues[0] for i in range(200)]
    assert np.mean((np.array(lam1) >= 1.8) & (np.array(lam1) <= 2.2)) >= 0.99


def test_goe_n2_sign_symmetry():
    tr = np.array([np.trace(sample_goe(2, i)) for i in range(10_000)])
    assert abs(tr.mean()) < 3 * tr.std(ddof=1) / 100


def test_wigner_rejects_unknown_law():
    with pytest.raises(ValueError):
        sample_wigner(10, 0, entry_law="cauchy")


def test_perp_frame():
    v = make_perp_frame(2, 1, 0)[0]
    assert np.allclose(np.abs(v), 1 / math.sqrt(2)) and abs(v.sum()) < 1e-15
    with pytest.raises(ValueError):
        make_perp_frame(2, 2, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 200), st.integers(1, 6), st.integers(0, 1000))
def test_perp_frame_contract(N, k, seed):
    k = min(k, N - 1)
    V = make_perp_frame(N, k, seed)
    assert np.max(np.abs(np.linalg.norm(V, axis=1) - 1)) < 1e-12
    assert np.max(np.abs(V @ unit_e(N))) < 1e-12
    assert np.max(np.abs(V @ V.T - np.eye(k))) < 1e-12
    assert np.array_equal(V, make_perp_frame(N, k, seed))


def test_observables():
    B = make_traceless_observable(4, "DiagPM")
    assert np.array_equal(B, np.diag([1.0, 1, -1, -1]))
    assert np.trace(B) == 0 and np.trace(B @ B) == 4
    B = make_traceless_observable(8, "CenteredProjection")
    assert np.allclose(np.diag(B), [0.75, 0.75] + [-0.25] * 6)
    with pytest.raises(ValueError):
        make_traceless_observable(5, "DiagPM")


@pytest.mark.parametrize("N", [64, 100, 256])
@pytest.mark.parametrize("kind", ["DiagPM", "CenteredProjection", "RandomSym"])
def test_observable_hypotheses(N, kind):
    B = make_traceless_observable(N, kind, obs_seed=4)
    assert abs(np.trace(B)) < 1e-10
    assert np.trace(B @ B) >= N**0.3 * np.linalg.norm(B, 2) ** 2
    assert np.array_equal(B, B.T)


def test_interleaved_is_trace_orthogonal():
    B1 = make_traceless_observable(16, "DiagPM")
    B2 = interleaved_diag_pm(16)
    assert np.trace(B2) == 0 and np.trace(B1 @ B2) == 0
    with pytest.raises(ValueError):
        interleaved_diag_pm(10)


def test_probe_set_validation():
    P = make_probe_set(50, 3, 1, observables=[make_traceless_observable(50, "DiagPM")])
    assert P.vectors.shape == (3, 50)
    with pytest.raises(ValueError):
        ProbeSet(4, np.array([[1.0, 0, 0, 0]])).validate()
    with pytest.raises(ValueError):
        ProbeSet(4, np.array([[2.0, 0, 0, 0]]), perp=False).validate()
    with pytest.raises(ValueError):
        ProbeSet(4, make_perp_frame(4, 1, 0), [np.eye(4)]).validate()


def test_sel1_roundtrip(tmp_path, rng):
    M = rng.standard_normal((7, 7))
    path = tmp_path / "m.sel1"
    dump_matrix(path, M)
    raw = path.read_bytes()
    assert raw[:4] == b"SEL1" and len(raw) == 16 + 8 * 49
    assert int.from_bytes(raw[4:8], "little") == 7
    assert np.array_equal(load_matrix(path), M)
    assert np.frombuffer(raw[16:24], "<f8")[0] == M[0, 0]
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        load_matrix(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        load_matrix(path)


def test_symmetric_from_upper():
    M = _symmetric_from_upper(3, np.arange(6.0))
    assert np.array_equal(M, [[0, 1, 2], [1, 3, 4], [2, 4, 5]])


def test_kinds_enum():
    assert Kind("GOE") is Kind.GOE
