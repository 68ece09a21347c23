"""Suite orchestration: calibration-then-measurement scheduling, fan-out, reports and replay."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from sparselab import edge_stats, eth, evec_stats, local_laws
from sparselab.config import ExperimentConfig, calib_size
from sparselab.ensemble import (
    EnsembleSpec,
    Kind,
    dump_matrix,
    interleaved_diag_pm,
    make_perp_frame,
    make_probe_set,
    make_traceless_observable,
    sample_goe,
    sample_matrix,
    sample_wigner,
)
from sparselab.reporting import dumps_json, write_csv, write_json
from sparselab.spectral import EigenSolverError, domain_grid, eigh, semicircle_cdf
from sparselab.stat_tests import (
    TestResult,
    correlation_z,
    ecf_sup_distance,
    empirical_cf,
    ks_one_sample,
    ks_two_sample,
    reference_cdf,
    z_score_of_mean,
    ECF_GRID,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1


class ReplayError(ValueError):
    pass


@dataclass
class SuiteReport:
    config: dict
    results: list = field(default_factory=list)
    files: dict = field(default_factory=dict)
    seed_metadata: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0
    error: dict | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        names = [r.name for r in self.results]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate result names: {names}")
        d = {
            "format_version": FORMAT_VERSION,
            "config": self.config,
            "results": [r.to_dict() for r in self.results],
            "files": self.files,
            "seed_metadata": self.seed_metadata,
            "all_pass": self.passed,
            "wall_clock_seconds": self.wall_clock_seconds,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


def fingerprint(ensemble: dict) -> str:
    payload = json.dumps({"format_version": FORMAT_VERSION, "ensemble": ensemble}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def seed_metadata(spec: EnsembleSpec) -> dict:
    ens = spec.to_dict()
    return {"format_version": FORMAT_VERSION, "ensemble": ens, "fingerprint": fingerprint(ens),
            "master_seed": int(spec.master_seed), "purpose": "sample"}


def _meta(spec: EnsembleSpec, i: int, purpose: str = "sample") -> dict:
    return {**seed_metadata(spec), "sample_index": i, "purpose": purpose}


def _fan_out(fn, indices, workers: int) -> list:
    """Map ``fn`` over sample indices; results come back in index order for any worker count."""
    indices = list(indices)
    if workers == 1 or len(indices) < 2:
        return [fn(i) for i in indices]
    chunk = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, indices, chunksize=chunk))


def _frac_exceeding(x, bound: float) -> float:
    return float(np.mean(np.abs(np.asarray(x)) > bound))


# -- semicircle ---------------------------------------------------------------

def _semicircle_sample(spec, i):
    _, H = sample_matrix(spec, i)
    lam = eigh(H, vectors=False, meta=_meta(spec, i)).eigenvalues
    return ks_one_sample(lam, semicircle_cdf)


def _suite_semicircle(cfg, out):
    spec, M = cfg.ensemble, cfg.M
    ks = _fan_out(partial(_semicircle_sample, spec), range(M), cfg.workers)
    write_csv(out / "semicircle.csv", [{"sample_index": i, "ks": k} for i, k in enumerate(ks)], ["sample_index", "ks"])
    res = [TestResult("semicircle_ks", max(ks), cfg.thresholds["semicircle_ks"], M, "max over samples, ESD of H")]
    return res, ["semicircle.csv"], {}


# -- local laws, delocalization, top eigenpair -----------------------------------

def _local_law_sample(spec, probes, grid, scan_M, full, i):
    A, _ = sample_matrix(spec, i)
    S = eigh(A, meta=_meta(spec, i))
    f = spec.f or 0.0
    out = {"lambda1": float(S.eigenvalues[0]), "lambda2": float(S.eigenvalues[1]),
           "deloc": local_laws.delocalization_stats(S, probes)}
    if f >= 3:
        out["top"] = evec_stats.top_alignment_check(S, f)
    if i < scan_M:
        out["records"] = local_laws.scan_local_law(S, probes, grid, f, spec.q or math.sqrt(spec.N),
                                                   sample_index=i, full_entries=full)
    return out


def _suite_local_law(cfg, out):
    spec, M, th = cfg.ensemble, cfg.M, cfg.thresholds
    N = spec.N
    lo = cfg.options["local_law"]
    probes = make_probe_set(N, lo["n_probes"], lo["frame_seed"], perp=spec.kind is not Kind.GOE)
    grid = domain_grid(N, spec.tau, cfg.opt("grid", "nE"), cfg.opt("grid", "nEta"))
    scan_M = min(int(lo["scan_M"]), M)
    outs = _fan_out(partial(_local_law_sample, spec, probes, grid, scan_M, bool(lo["full_entries"])),
                    range(M), cfg.workers)
    files, results, extra = ["spectra.csv", "delocalization.csv"], [], {}
    write_csv(out / "spectra.csv", [{"sample_index": i, "lambda1": o["lambda1"], "lambda2": o["lambda2"]}
                                    for i, o in enumerate(outs)], ["sample_index", "lambda1", "lambda2"])
    deloc_cols = ["max_inf_norm", "max_e_overlap_nontop", "max_probe_overlap", "sum_e_overlap_sq_nontop"]
    write_csv(out / "delocalization.csv",
              [{"sample_index": i, **{c: getattr(o["deloc"], c) for c in deloc_cols}} for i, o in enumerate(outs)],
              ["sample_index", *deloc_cols])

    f = spec.f or 0.0
    deloc = [o["deloc"] for o in outs]
    inf_norm = max(d.max_inf_norm for d in deloc)
    results.append(TestResult("deloc_inf_norm", inf_norm, math.sqrt(th["deloc_inf_norm_C"] * math.log(N) / N), M,
                              "max_i ||u_i||_inf vs sqrt(C ln N / N)"))
    if f > 0:
        e_ov = max(d.max_e_overlap_nontop for d in deloc) * math.sqrt(N) * f
        results.append(TestResult("deloc_e_overlap", e_ov, th["deloc_e_overlap"], M,
                                  "max_{i>=2} |<e,u_i>| sqrt(N) f"))
        results.append(TestResult("e_overlap_sum_f2_mean",
                                  float(np.mean([d.sum_e_overlap_sq_nontop for d in deloc])) * f * f,
                                  th["e_overlap_sum_f2_mean"], M, "pooled mean f^2 sum_{i>=2} <e,u_i>^2"))
    if f >= 3:
        top = np.array([o["top"] for o in outs])
        write_csv(out / "top_alignment.csv",
                  [{"sample_index": i, "dev_lambda1": t[0], "dev_align": t[1]} for i, t in enumerate(top)],
                  ["sample_index", "dev_lambda1", "dev_align"])
        files.append("top_alignment.csv")
        C = th["top_dev_C"]
        results.append(TestResult("top_eigenvalue_excess_frac", _frac_exceeding(top[:, 0], C),
                                  th["top_eigenvalue_excess_frac"], M, f"fraction with |lambda1 - f| f > {C:g}"))
        results.append(TestResult("top_alignment_excess_frac", _frac_exceeding(top[:, 1], C),
                                  th["top_alignment_excess_frac"], M, f"fraction with |dev_align| > {C:g}"))

    records = [r for o in outs for r in o.get("records", [])]
    if records:
        cols = ["sample_index", "E", "eta", "err_iso", "err_ee", "err_ev", "err_entry", "bound_iso", "bound_entry"]
        write_csv(out / "local_law.csv", [r.to_row() for r in records], cols)
        files.append("local_law.csv")
        ratio = np.array([r.err_iso / r.bound_iso for r in records])
        results.append(TestResult("iso_ratio_p99", float(np.percentile(ratio, 99)), th["iso_ratio_p99"],
                                  scan_M, f"{len(grid)} grid points per sample"))
        if f > 0:
            results.append(TestResult("ee_f2_mean", float(np.mean([r.err_ee for r in records])) * f * f,
                                      th["ee_f2_mean"], scan_M, "pooled mean |G_ee - 1/f| f^2"))
            results.append(TestResult("ev_f_p99", float(np.percentile([r.err_ev for r in records], 99)) * f,
                                      th["ev_f_p99"], scan_M, "99th percentile |G_ev| f"))
        entry_ratio = np.array([r.err_entry / r.bound_entry for r in records])
        extra["entry_ratio_p99"] = float(np.percentile(entry_ratio, 99))
        try:
            ratio_max, slope = local_laws.fit_error_scaling(records)
            extra["iso_ratio_max"], extra["iso_eta_slope"] = ratio_max, slope
        except ValueError as exc:
            extra["iso_eta_slope"] = f"not fitted: {exc}"
    return results, files, {"local_law_summary": extra}


# -- edge eigenvalues --------------------------------------------------------------

def _goe_edge(N, seed, purpose, i):
    lam = _goe_spectrum(N, seed, purpose, i)
    scale = N ** (2.0 / 3.0)
    rig = edge_stats.rigidity_residuals(lam, 2.0, range(1, N // 2 + 1))
    return scale * (lam[0] - 2.0), scale * (lam[0] - lam[1]), float(np.max(np.abs(rig)))


def _goe_spectrum(N, seed, purpose, i):
    return eigh(sample_goe(N, i, seed, purpose), vectors=False,
                meta={"N": N, "master_seed": seed, "sample_index": i, "purpose": purpose}).eigenvalues


def _calib_sample(spec, i):
    _, H = sample_matrix(spec, i, purpose="calib")
    lam1 = eigh(H, vectors=False, meta=_meta(spec, i, "calib")).eigenvalues[0]
    return float(lam1), edge_stats.z_statistic(H), edge_stats.fourth_moment_sum(H)


def _a_edge_sample(spec, L_det, i):
    A, H = sample_matrix(spec, i)
    N = spec.N
    lam_H = eigh(H, vectors=False, meta=_meta(spec, i)).eigenvalues
    lam_A = eigh(A, vectors=False, meta=_meta(spec, i)).eigenvalues
    L_hat = L_det + edge_stats.z_statistic(H)
    scale = N ** (2.0 / 3.0)
    rig = edge_stats.rigidity_residuals(lam_A, L_det, range(2, N // 2 + 1))
    return (scale * (lam_A[1] - L_hat), scale * (lam_A[1] - lam_A[2]),
            edge_stats.interlacing_ok(lam_A, lam_H), float(np.max(np.abs(rig))))


def _z_sample(spec, i):
    _, H = sample_matrix(spec, i, purpose="zclt")
    return edge_stats.z_statistic(H), edge_stats.fourth_moment_sum(H)


def _suite_edge_law(cfg, out):
    spec, M, th, w = cfg.ensemble, cfg.M, cfg.thresholds, cfg.workers
    N, seed = spec.N, spec.master_seed
    if spec.kind is Kind.GOE:
        raise ValueError("edge-law needs a sparse ensemble with a rank-one part")
    el = cfg.options["edge_law"]
    goe_M = int(el["goe_M"] or M)
    calib_M = int(el["calib_M"] or max(calib_size(M), edge_stats.MIN_CALIBRATION))
    z_M = int(el["z_M"] or M)
    rep_N = int(el["repulsion_N"] or N)
    rep_M = int(el["repulsion_M"] or M)
    eps = float(el["repulsion_epsilon"])
    results, extra = [], {}

    # phase 1: calibration of the deterministic edge
    goe = np.array(_fan_out(partial(_goe_edge, N, seed, "goe"), range(goe_M), w))
    goe_shift = float(np.mean(goe[:, 0])) / N ** (2.0 / 3.0)
    calib = np.array(_fan_out(partial(_calib_sample, spec), range(calib_M), w))
    est = edge_stats.edge_estimate_from_stats(N, calib[:, 0], calib[:, 1], calib[:, 2], goe_shift)
    extra.update(L_det=est.L_det, goe_shift=goe_shift, mean_lambda1_H=float(np.mean(calib[:, 0])), calib_M=calib_M)

    # phase 2: measurement
    a_set = np.array(_fan_out(partial(_a_edge_sample, spec, est.L_det), range(M), w))
    rows = [{"sample_index": i, "statistic": s, "ensemble_tag": "A_lambda2"} for i, s in enumerate(a_set[:, 0])]
    rows += [{"sample_index": i, "statistic": s, "ensemble_tag": "GOE_mu1"} for i, s in enumerate(goe[:, 0])]
    write_csv(out / "edge_samples.csv", rows, ["sample_index", "statistic", "ensemble_tag"])
    results.append(TestResult("edge_universality_ks", ks_two_sample(a_set[:, 0], goe[:, 0]),
                              th["edge_universality_ks"], M, f"A lambda_2 vs GOE mu_1 (M_goe={goe_M})"))
    violations = int(np.sum(a_set[:, 2] == 0))
    results.append(TestResult("interlacing_violations", violations, 0, M, "samples failing Cauchy interlacing"))
    log_c = th["rigidity_C"] * math.log(N)
    results.append(TestResult("rigidity_A_max", float(np.max(a_set[:, 3])), log_c, M, "k in [2, N/2], edge L_det"))
    results.append(TestResult("rigidity_goe_max", float(np.max(goe[:, 2])), log_c, goe_M, "k in [1, N/2], edge 2"))

    z = np.array(_fan_out(partial(_z_sample, spec), range(z_M), w))
    m4 = float(np.mean(z[:, 1]))
    write_csv(out / "z_stats.csv", [{"sample_index": i, "z_stat": v} for i, v in enumerate(z[:, 0])],
              ["sample_index", "z_stat"])
    results.append(TestResult("z_clt_ks", edge_stats.clt_check_z(z[:, 0], N, m4), th["z_clt_ks"], z_M,
                              "standardized edge fluctuation vs N(0,1)"))
    results.append(TestResult("z_mean_z", z_score_of_mean(z[:, 0]), th["z_mean_z"], z_M, "|mean| / SE"))
    closed = edge_stats.er_fourth_moment_sum(spec.theta)
    results.append(TestResult("fourth_moment_rel_err", abs(m4 - closed) / closed, th["fourth_moment_rel_err"],
                              z_M, f"empirical {m4:.6g} vs closed form {closed:.6g}"))

    rep = _fan_out(partial(_goe_spectrum, rep_N, seed, "repulsion"), range(rep_M), w)
    _, freqs = edge_stats.gap_and_repulsion(rep, [1], [0.0, eps])
    for fr in freqs:
        fr["N"] = rep_N
    write_json(out / "repulsion.json", freqs)
    results.append(TestResult("level_repulsion_freq", freqs[-1]["frequency"], th["level_repulsion_freq"], rep_M,
                              f"GOE N={rep_N}: P(mu1 - mu2 <= N^(-2/3-{eps:g}))"))
    return results, ["edge_samples.csv", "z_stats.csv", "repulsion.json"], {"edge_law_summary": extra}


# -- eigenvectors -------------------------------------------------------------------

def _evec_sample(spec, probes, a_list, pairs, bulk_i, i):
    A, _ = sample_matrix(spec, i)
    S = eigh(A, meta=_meta(spec, i))
    ov = evec_stats.overlap_values(S, probes, a_list, pairs, sample_index=i) if a_list else []
    bulk = evec_stats.bulk_overlaps(S, probes.vectors[0], bulk_i) if bulk_i else {}
    return ov, bulk, float(S.eigenvalues[0]), float(S.eigenvalues[1])


def _suite_evec(cfg, out, edge: bool, bulk: bool):
    spec, M, th = cfg.ensemble, cfg.M, cfg.thresholds
    N = spec.N
    ev = cfg.options["evec"]
    probes = make_probe_set(N, 2, ev["frame_seed"])
    a_list = list(ev["edge_a"]) if edge else []
    bulk_i = list(ev["bulk_i"] or [N // 2, N // 2 + 1]) if bulk else []
    if bulk:
        lo, hi = evec_stats.bulk_window(N, spec.tau)
        if any(not lo <= i <= hi for i in bulk_i):
            raise ValueError(f"evec.bulk_i: indices must lie in [{lo}, {hi}]")
    pairs = [(0, 0), (0, 1)]
    outs = _fan_out(partial(_evec_sample, spec, probes, a_list, pairs, bulk_i), range(M), cfg.workers)
    results, files = [], []
    if edge:
        samples = [s for o in outs for s in o[0]]
        write_csv(out / "overlaps.csv", [s.to_row() for s in samples], ["sample_index", "a", "vw_inner", "value", "gap_flag"])
        files.append("overlaps.csv")

        def vals(a, pair):
            return np.array([s.value for s in samples if s.a == a and s.pair == pair])

        a0 = a_list[0]
        vv, vw = vals(a0, (0, 0)), vals(a0, (0, 1))
        results.append(TestResult("evec_chi2_ks", ks_one_sample(vv, lambda x: reference_cdf("ChiSq1", x)),
                                  th["evec_chi2_ks"], M, f"v=w, a={a0}: N<v,u_a>^2 vs chi^2_1"))
        target = partial(evec_stats.target_cf, vw_inner=0.0)
        results.append(TestResult("evec_ecf_sup", ecf_sup_distance(vw, target), th["evec_ecf_sup"], M,
                                  f"v perp w, a={a0}: sup over 41 t in [-5,5]"))
        results.append(TestResult("evec_vw_mean_z", z_score_of_mean(vw), th["evec_vw_mean_z"], M, "|mean| / SE, v perp w"))
        emp = empirical_cf(vw, ECF_GRID)
        tgt = target(ECF_GRID)
        write_json(out / "ecf.json", [{"t": float(t), "re_emp": float(e.real), "im_emp": float(e.imag),
                                       "re_target": float(g.real), "im_target": float(g.imag)}
                                      for t, e, g in zip(ECF_GRID, emp, tgt)])
        files.append("ecf.json")
        if len(a_list) > 1:
            a1 = a_list[1]
            results.append(TestResult("evec_corr_z", correlation_z(vv, vals(a1, (0, 0))), th["evec_corr_z"], M,
                                      f"corr(N<v,u_{a0}>^2, N<v,u_{a1}>^2) / SE"))
    if bulk:
        values = {i: [o[1][i] for o in outs] for i in bulk_i}
        table = evec_stats.bulk_moments(values)
        write_csv(out / "bulk_moments.csv", [vars(r) for r in table], ["name", "mean", "se", "target", "M"])
        files.append("bulk_moments.csv")
        i0 = bulk_i[0]
        row = {r.name: r for r in table}
        results.append(TestResult("bulk_mean_dev", abs(row[f"mean[{i0}]"].mean - 1.0), th["bulk_mean_dev"], M,
                                  f"|mean N<v,u_{i0}>^2 - 1|"))
        results.append(TestResult("bulk_fourth_dev", abs(row[f"fourth[{i0}]"].mean - 3.0), th["bulk_fourth_dev"], M,
                                  f"|mean (N<v,u_{i0}>^2)^2 - 3|"))
    write_csv(out / "evec_spectra.csv", [{"sample_index": i, "lambda1": o[2], "lambda2": o[3]} for i, o in enumerate(outs)],
              ["sample_index", "lambda1", "lambda2"])
    files.append("evec_spectra.csv")
    return results, files, {}


# -- ETH ---------------------------------------------------------------------------

def _eth_sample(N, seed, law, observables, tags, n_pairs, scan_M, i):
    S = eigh(sample_wigner(N, i, seed, law), meta={"N": N, "master_seed": seed, "sample_index": i, "purpose": "wigner"})
    stats = eth.eth_stats_for(S, observables, [1], tags, sample_index=i)
    scans = {}
    if i < scan_M:
        for B, tag in zip(observables, tags):
            if tag != "DiagPMAlt":
                scans[tag] = eth.eth_bound_scan(S, B, n_pairs, seed=seed)
    return stats, scans


def _suite_eth(cfg, out):
    N, M, th = cfg.ensemble.N, cfg.M, cfg.thresholds
    seed = cfg.ensemble.master_seed
    eo = cfg.options["eth"]
    observables = [make_traceless_observable(N, "DiagPM"), make_traceless_observable(N, "RandomSym", seed),
                   interleaved_diag_pm(N)]
    tags = ["DiagPM", "RandomSym", "DiagPMAlt"]
    scan_M = int(eo["scan_M"] if eo["scan_M"] is not None else M)
    outs = _fan_out(partial(_eth_sample, N, seed, eo["entry_law"], observables, tags, int(eo["n_pairs"]), scan_M),
                    range(M), cfg.workers)
    samples = [s for o in outs for s in o[0]]
    write_csv(out / "eth.csv", [s.to_row() for s in samples], ["sample_index", "a", "obs_tag", "stat"])
    by_tag = {t: np.array([s.stat for s in samples if s.obs_tag == t]) for t in tags}
    results = []
    for t in ("DiagPM", "RandomSym"):
        results.append(TestResult(f"eth_ks_{t}", ks_one_sample(by_tag[t], lambda x: reference_cdf("StdNormal", x)),
                                  th["eth_ks"], M, f"a=1, {eo['entry_law']} Wigner"))
    results.append(TestResult("eth_mean_z", z_score_of_mean(by_tag["DiagPM"]), th["eth_mean_z"], M, "DiagPM |mean| / SE"))
    results.append(TestResult("eth_corr_z", correlation_z(by_tag["DiagPM"], by_tag["DiagPMAlt"]), th["eth_corr_z"], M,
                              "trace-orthogonal DiagPM pair"))
    scan = max(v for o in outs for v in o[1].values()) if scan_M > 0 else math.nan
    results.append(TestResult("eth_scan_max", scan, th["eth_scan_max"], scan_M,
                              f"max N|<u_i,B u_j>|/sqrt(tr B^2), {eo['n_pairs']} pairs + diagonal"))
    extra = {t: float(np.sum(B * B) / np.linalg.norm(B, 2) ** 2) for t, B in zip(tags, observables)}
    return results, ["eth.csv"], {"eth_trace_ratio": extra}


# -- smoothing ---------------------------------------------------------------------

def _smoothing_sample(spec, V, sp, i):
    A, _ = sample_matrix(spec, i)
    S = eigh(A, meta=_meta(spec, i))
    row = {"sample_index": i, "gap": float(S.eigenvalues[1] - S.eigenvalues[2])}
    P = S.overlaps(V)
    try:
        for tag, (a, b) in (("vv", (0, 0)), ("vw", (0, 1))):
            direct = S.n * P[a, 1] * P[b, 1]
            sm = evec_stats.smoothed_overlap(S, V[a], V[b], sp)
            sm2 = evec_stats.smoothed_overlap(S, V[a], V[b], sp, panels=400)
            row[f"direct_{tag}"], row[f"smoothed_{tag}"] = float(direct), sm
            row[f"quad_rel_{tag}"] = abs(sm2 - sm) / max(abs(sm), 1.0)
        row["gap_flag"] = 0
    except evec_stats.GapTooSmall:
        row["gap_flag"] = 1
    return row


def _suite_smoothing(cfg, out):
    spec, M, th = cfg.ensemble, cfg.M, cfg.thresholds
    so = cfg.options["smoothing"]
    sp = evec_stats.SmoothingParams.desk(spec.N, float(so["xi"]), float(so["delta"]), spec.tau)
    V = make_perp_frame(spec.N, 2, cfg.opt("evec", "frame_seed"))
    fn = partial(_smoothing_sample, spec, V, sp)
    rows, start, limit = [], 0, int(so["max_tries_factor"]) * M
    while sum(1 - r["gap_flag"] for r in rows) < M and start < limit:
        batch = min(M, limit - start)
        rows += _fan_out(fn, range(start, start + batch), cfg.workers)
        start += batch
    passing = [r for r in rows if not r["gap_flag"]][:M]
    cols = ["sample_index", "gap", "gap_flag", "direct_vv", "smoothed_vv", "direct_vw", "smoothed_vw"]
    write_csv(out / "smoothing.csv", [{c: r.get(c, "") for c in cols} for r in rows], cols)
    excluded = sum(r["gap_flag"] for r in rows[: rows.index(passing[-1]) + 1]) if passing else len(rows)
    C = th["smoothing_C"]
    results = []
    for tag in ("vv", "vw"):
        bad = [abs(r[f"smoothed_{tag}"] - r[f"direct_{tag}"]) > C * (1 + abs(r[f"direct_{tag}"])) for r in passing]
        frac = float(np.mean(bad)) if passing else 1.0
        results.append(TestResult(f"smoothing_fail_frac_{tag}", frac, th["smoothing_fail_frac"], len(passing),
                                  f"xi={sp.xi:g} delta={sp.delta:g}; {excluded} samples excluded by the gap check"))
    quad = max((max(r["quad_rel_vv"], r["quad_rel_vw"]) for r in passing), default=math.inf)
    results.append(TestResult("smoothing_quadrature_rel", quad, th["smoothing_quadrature_rel"], len(passing),
                              "200 vs 400 starting panels"))
    if len(passing) < M:
        results.append(TestResult("smoothing_gap_pass_count", M - len(passing), 0, M, "too few samples passed the gap check"))
    return results, ["smoothing.csv"], {"smoothing_params": {"xi": sp.xi, "delta": sp.delta, "eta_plus": sp.eta_plus,
                                                             "half_width": sp.half_width, "excluded": excluded}}


def _suite_dir_name(suite: str) -> str:
    return suite.replace("-", "_")


def run(cfg: ExperimentConfig) -> SuiteReport:
    """Run the selected suites and write ``report.json`` plus per-suite CSV/JSON files."""
    t0 = time.perf_counter()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = SuiteReport(config=cfg.to_dict(), seed_metadata=seed_metadata(cfg.ensemble))
    summaries = {}
    suites = list(cfg.suites)
    try:
        for suite in suites:
            if suite == "bulk-evec" and "edge-evec" in suites:
                continue
            log.info("running suite %s", suite)
            sdir = out / _suite_dir_name(suite)
            sdir.mkdir(exist_ok=True)
            if suite == "semicircle":
                res, files, extra = _suite_semicircle(cfg, sdir)
            elif suite == "local-law":
                res, files, extra = _suite_local_law(cfg, sdir)
            elif suite == "edge-law":
                res, files, extra = _suite_edge_law(cfg, sdir)
            elif suite == "edge-evec":
                res, files, extra = _suite_evec(cfg, sdir, edge=True, bulk="bulk-evec" in suites)
            elif suite == "bulk-evec":
                res, files, extra = _suite_evec(cfg, sdir, edge=False, bulk=True)
            elif suite == "eth":
                res, files, extra = _suite_eth(cfg, sdir)
            else:
                res, files, extra = _suite_smoothing(cfg, sdir)
            report.results.extend(res)
            report.files[suite] = [f"{sdir.name}/{f}" for f in files]
            summaries.update(extra)
    except EigenSolverError as exc:
        report.error = {"message": str(exc), "replay": exc.meta}
    if summaries:
        write_json(out / "summaries.json", summaries)
    report.wall_clock_seconds = round(time.perf_counter() - t0, 3)
    write_json(out / "report.json", report.to_dict())
    return report


def load_seed_metadata(path) -> dict:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    meta = raw.get("seed_metadata", raw)
    if meta.get("format_version") != FORMAT_VERSION:
        raise ReplayError(f"metadata version mismatch: {meta.get('format_version')} != {FORMAT_VERSION}")
    if fingerprint(meta.get("ensemble", {})) != meta.get("fingerprint"):
        raise ReplayError("metadata version mismatch: ensemble does not match its recorded fingerprint")
    return meta


def replay(meta: dict, sample_index: int | None = None, purpose: str | None = None, out_dir=None) -> dict:
    """Regenerate one sample's matrix and spectrum; optionally dump them to ``out_dir``."""
    spec = EnsembleSpec.from_dict(meta["ensemble"])
    i = int(meta.get("sample_index", 0) if sample_index is None else sample_index)
    purpose = purpose or meta.get("purpose", "sample")
    A, _ = sample_matrix(spec, i, purpose)
    # same LAPACK path as the suites that record spectra, so lambda_1 matches bit for bit
    lam = eigh(A, meta=_meta(spec, i, purpose)).eigenvalues
    info = {"sample_index": i, "purpose": purpose, "lambda1": float(lam[0]),
            "matrix_sha256": hashlib.sha256(np.ascontiguousarray(A, dtype="<f8").tobytes()).hexdigest(),
            "fingerprint": meta["fingerprint"]}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        dump_matrix(out / f"sample_{i}.sel1", A)
        write_csv(out / f"sample_{i}_eigenvalues.csv", [{"k": k + 1, "eigenvalue": float(x)} for k, x in enumerate(lam)],
                  ["k", "eigenvalue"])
        write_json(out / f"sample_{i}_replay.json", info)
    return info


def report_json_without_clock(path) -> str:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    d.pop("wall_clock_seconds", None)
    return dumps_json(d)
