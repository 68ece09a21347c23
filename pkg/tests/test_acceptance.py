"""Desk-scale acceptance checks, one test per criterion.

Each test prints ``[PASS]``/``[FAIL]`` lines; the same lines are repeated in
the terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from sparselab.config import config_from_dict
from sparselab.ensemble import EnsembleSpec, make_probe_set, sample_goe, sample_matrix
from sparselab.reporting import read_csv
from sparselab.runner import load_seed_metadata, replay, report_json_without_clock, run
from sparselab.spectral import (
    domain_grid,
    eigh,
    gamma_sc,
    m_sc,
    resolvent_qforms,
    semicircle_cdf,
    ward_residual,
)
from sparselab.stat_tests import TestResult

pytestmark = pytest.mark.acceptance


def record(criterion: int, results) -> None:
    for r in results:
        line = f"criterion {criterion:>2} {r.line()}"
        print(line)
        ACCEPTANCE_LINES.append(line)
    failed = [r.name for r in results if not r.passed]
    assert not failed, f"criterion {criterion} failed: {failed}"


def pick(report, *names):
    by = {r.name: r for r in report.results}
    return [by[n] for n in names]


def suite(tmp_path_factory, name, raw):
    raw = {**raw, "output_dir": str(tmp_path_factory.mktemp(name))}
    return run(config_from_dict(raw))


@pytest.fixture(scope="module")
def er1000_local(tmp_path_factory):
    return suite(tmp_path_factory, "c45", {
        "suite": "local-law", "M": 200,
        "ensemble": {"kind": "SparseER", "N": 1000, "p": 0.05, "master_seed": 1001},
        "local_law": {"scan_M": 50}, "grid": {"nE": 10, "nEta": 8},
    })


@pytest.fixture(scope="module")
def evec_stream(tmp_path_factory):
    return suite(tmp_path_factory, "c78", {
        "suite": "edge-evec,bulk-evec", "M": 2000,
        "ensemble": {"kind": "SparseER", "N": 1000, "p": 0.05, "master_seed": 1007},
    })


@pytest.fixture(scope="module")
def edge_law(tmp_path_factory):
    return suite(tmp_path_factory, "c91011", {
        "suite": "edge-law", "M": 500,
        "ensemble": {"kind": "SparseER", "N": 500, "p": 0.05, "master_seed": 1009},
        "edge_law": {"goe_M": 500, "z_M": 2000, "repulsion_N": 1000, "repulsion_M": 2000},
    })


def test_c01_algebraic_identities():
    Es = np.linspace(-3, 3, 20)
    etas = np.geomspace(1000**-0.7, 1, 20)
    z = (Es[:, None] + 1j * etas[None, :]).ravel()
    m = m_sc(z)
    identity = float(np.max(np.abs(1 + z * m + m * m)))

    grid = domain_grid(200, 0.3, 5, 5)
    pts = [grid[i] for i in (0, 6, 12, 18, 24)]
    ward = 0.0
    for s in range(10):
        S = eigh(sample_goe(200, s, 77))
        ward = max(ward, max(ward_residual(S, p.z, i) for p in pts for i in range(0, 200, 7)))

    rng = np.random.default_rng(5)
    solve = 0.0
    for n in (10, 25, 50):
        X = rng.standard_normal((n, n))
        M = (X + X.T) / np.sqrt(2 * n)
        S = eigh(M)
        V = make_probe_set(n, 3, n).vectors
        for p in domain_grid(n, 0.3, 4, 4):
            direct = V @ np.linalg.solve(M - p.z * np.eye(n), V.T)
            solve = max(solve, np.max(np.abs(direct - resolvent_qforms(S, p.z, V, V))) / np.max(np.abs(direct)))
    record(1, [TestResult("m_sc_identity_20x20", identity, 1e-12, 400),
               TestResult("ward_residual_N200", ward, 1e-8, 10),
               TestResult("resolvent_vs_solve_rel", solve, 1e-8, 3)])


def test_c02_gamma_sc():
    N = 1000
    k = np.arange(1, N + 1)
    err = float(np.max(np.abs(1 - semicircle_cdf(gamma_sc(k, N)) - (k - 0.5) / N)))
    mid = max(abs(gamma_sc((n + 1) // 2, n)) for n in (999, 1001, 2001))
    record(2, [TestResult("gamma_sc_inverse_N1000", err, 1e-10, N),
               TestResult("gamma_sc_odd_middle", mid, 1e-10, 3)])


def test_c03_semicircle(tmp_path_factory):
    rep = suite(tmp_path_factory, "c03", {
        "suite": "semicircle", "M": 1,
        "ensemble": {"kind": "SparseER", "N": 2000, "p": 0.02, "master_seed": 1003},
    })
    assert len(rep.results) == 1 and rep.results[0].threshold == 0.03
    record(3, rep.results)


def test_c04_top_eigenpair(er1000_local):
    record(4, pick(er1000_local, "top_eigenvalue_excess_frac", "top_alignment_excess_frac", "e_overlap_sum_f2_mean"))


def test_c05_isotropic_local_law(er1000_local):
    res = pick(er1000_local, "iso_ratio_p99", "ee_f2_mean", "ev_f_p99")
    assert all(r.M == 50 for r in res)
    record(5, res)


def test_c06_delocalization(tmp_path_factory):
    rep = suite(tmp_path_factory, "c06", {
        "suite": "local-law", "M": 20,
        "ensemble": {"kind": "SparseER", "N": 2000, "p": 0.02, "master_seed": 1006},
        "local_law": {"scan_M": 0},
    })
    record(6, pick(rep, "deloc_inf_norm", "deloc_e_overlap"))


def test_c07_edge_eigenvector_gaussianity(evec_stream):
    record(7, pick(evec_stream, "evec_chi2_ks", "evec_ecf_sup", "evec_corr_z"))


def test_c08_bulk_eigenvector_universality(evec_stream):
    record(8, pick(evec_stream, "bulk_mean_dev", "bulk_fourth_dev"))


def test_c09_edge_universality(edge_law):
    res = pick(edge_law, "edge_universality_ks", "interlacing_violations")
    assert res[0].M == 500
    record(9, res)


def test_c10_z_clt(edge_law):
    res = pick(edge_law, "z_clt_ks", "z_mean_z", "fourth_moment_rel_err")
    assert all(r.M == 2000 for r in res)
    record(10, res)


def test_c11_level_repulsion(edge_law):
    (res,) = pick(edge_law, "level_repulsion_freq")
    assert res.M == 2000 and "N=1000" in res.notes
    record(11, [res])


def test_c12_smoothing_identity(tmp_path_factory):
    rep = suite(tmp_path_factory, "c12", {
        "suite": "smoothing", "M": 100,
        "ensemble": {"kind": "SparseER", "N": 500, "p": 0.05, "master_seed": 1012},
    })
    res = pick(rep, "smoothing_fail_frac_vv", "smoothing_fail_frac_vw", "smoothing_quadrature_rel")
    assert all(r.M == 100 for r in res)
    record(12, res)


def test_c13_eth(tmp_path_factory):
    rep = suite(tmp_path_factory, "c13", {
        "suite": "eth", "M": 1000,
        "ensemble": {"kind": "GOE", "N": 500, "master_seed": 1013},
    })
    record(13, pick(rep, "eth_ks_DiagPM", "eth_ks_RandomSym", "eth_scan_max", "eth_corr_z"))


def test_c14_infrastructure(tmp_path_factory):
    base = {"suite": "semicircle,local-law,edge-evec,eth", "M": 8,
            "ensemble": {"kind": "SparseER", "N": 96, "p": 0.15, "master_seed": 1014},
            "local_law": {"scan_M": 2}, "eth": {"n_pairs": 200}}
    dirs = [tmp_path_factory.mktemp(f"c14_{t}") for t in ("a", "b", "w")]
    cfgs = [config_from_dict({**base, "output_dir": str(d)}) for d in dirs]
    cfgs[2] = dataclasses.replace(cfgs[2], workers=2)
    reports = [run(c) for c in cfgs]
    texts = [report_json_without_clock(d / "report.json") for d in dirs]
    double_run = float(texts[0] != texts[1])
    stats = [[r.to_dict() for r in rep.results] for rep in reports]
    workers = float(stats[0] != stats[2])

    meta = load_seed_metadata(dirs[0] / "report.json")
    spectra = read_csv(dirs[0] / "local_law" / "spectra.csv")
    info = replay(meta, 5, out_dir=dirs[0] / "replay")
    fidelity = float(repr(info["lambda1"]) != spectra[5]["lambda1"])
    fidelity += float(replay(meta, 6)["matrix_sha256"] == info["matrix_sha256"])
    A5 = sample_matrix(EnsembleSpec.from_dict(meta["ensemble"]), 5)[0]
    fidelity += float(not np.array_equal(np.fromfile(dirs[0] / "replay" / "sample_5.sel1", "<f8", offset=16).reshape(96, 96), A5))

    raw = json.loads((dirs[0] / "report.json").read_text())
    raw["seed_metadata"]["ensemble"]["N"] = 128
    tampered = dirs[0] / "tampered.json"
    tampered.write_text(json.dumps(raw))
    try:
        load_seed_metadata(tampered)
        mismatch = 1.0
    except ValueError:
        mismatch = 0.0
    # the statistic counts violations; zero means the contract holds
    record(14, [TestResult("double_run_byte_identical", double_run, 0, 2),
                TestResult("worker_count_independence", workers, 0, 2),
                TestResult("replay_fidelity", fidelity, 0, 1),
                TestResult("replay_version_mismatch", mismatch, 0, 1)])
