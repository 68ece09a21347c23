"""Experiment configuration: a TOML file with one table per concern."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from sparselab.ensemble import EnsembleSpec, SpecError

SUITES = ("semicircle", "local-law", "edge-law", "edge-evec", "bulk-evec", "eth", "smoothing")

DEFAULT_THRESHOLDS = {
    "semicircle_ks": 0.03,
    "top_dev_C": 10.0,
    "top_eigenvalue_excess_frac": 0.05,
    "top_alignment_excess_frac": 0.05,
    "e_overlap_sum_f2_mean": 10.0,
    "iso_ratio_p99": 10.0,
    "ee_f2_mean": 10.0,
    "ev_f_p99": 10.0,
    "deloc_inf_norm_C": 10.0,
    "deloc_e_overlap": 30.0,
    "edge_universality_ks": 0.10,
    "z_clt_ks": 0.06,
    "z_mean_z": 3.0,
    "fourth_moment_rel_err": 0.10,
    "level_repulsion_freq": 0.05,
    "rigidity_C": 10.0,
    "evec_chi2_ks": 0.05,
    "evec_ecf_sup": 0.05,
    "evec_corr_z": 3.0,
    "evec_vw_mean_z": 3.0,
    "bulk_mean_dev": 0.15,
    "bulk_fourth_dev": 0.5,
    "smoothing_C": 0.1,
    "smoothing_fail_frac": 0.05,
    "smoothing_quadrature_rel": 1e-6,
    "eth_ks": 0.06,
    "eth_scan_max": 8.0,
    "eth_corr_z": 3.0,
    "eth_mean_z": 3.0,
}

# None means "derived from M or N at run time"
DEFAULT_OPTIONS = {
    "grid": {"nE": 10, "nEta": 8},
    "smoothing": {"xi": 0.5, "delta": 0.3, "max_tries_factor": 5},
    "local_law": {"scan_M": 50, "n_probes": 4, "frame_seed": 1, "full_entries": False},
    "edge_law": {"calib_M": None, "goe_M": None, "z_M": None, "repulsion_N": None, "repulsion_M": None,
                 "repulsion_epsilon": 0.2},
    "evec": {"frame_seed": 1, "edge_a": [2, 3], "bulk_i": None},
    "eth": {"entry_law": "gaussian", "n_pairs": 10_000, "scan_M": None},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    suites: tuple
    ensemble: EnsembleSpec
    M: int = 200
    workers: int = 1
    output_dir: Path = Path("runs/out")
    thresholds: dict = field(default_factory=lambda: dict(DEFAULT_THRESHOLDS))
    options: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_OPTIONS))

    def __post_init__(self):
        if isinstance(self.suites, str):
            self.suites = parse_suites(self.suites)
        if self.M < 1:
            raise ConfigError(f"M: must be >= 1, got {self.M}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")
        for name, value in self.thresholds.items():
            if not value > 0:
                raise ConfigError(f"thresholds.{name}: must be positive, got {value}")
        self.output_dir = Path(self.output_dir)

    def opt(self, section: str, key: str):
        return self.options[section][key]

    def to_dict(self) -> dict:
        return {
            "suites": list(self.suites),
            "ensemble": self.ensemble.to_dict(),
            "M": self.M,
            "thresholds": dict(self.thresholds),
            "options": copy.deepcopy(self.options),
        }


def parse_suites(text) -> tuple:
    names = [s.strip() for s in (text.split(",") if isinstance(text, str) else text)]
    if names == ["all"]:
        return SUITES
    bad = [n for n in names if n not in SUITES]
    if bad or not names:
        raise ConfigError(f"suite: unknown suite(s) {bad}; choose from {', '.join(SUITES)} or 'all'")
    return tuple(n for n in SUITES if n in names)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = copy.deepcopy(raw)
    known = {"suite", "M", "workers", "output_dir", "ensemble", "thresholds", *DEFAULT_OPTIONS}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    try:
        ensemble = EnsembleSpec.from_dict(raw.get("ensemble", {}))
    except (SpecError, TypeError) as exc:
        raise ConfigError(f"ensemble: {exc}") from exc

    thresholds = dict(DEFAULT_THRESHOLDS)
    for name, value in raw.get("thresholds", {}).items():
        if name not in DEFAULT_THRESHOLDS:
            raise ConfigError(f"thresholds.{name}: unknown threshold")
        thresholds[name] = float(value)

    options = copy.deepcopy(DEFAULT_OPTIONS)
    for section in DEFAULT_OPTIONS:
        for key, value in raw.get(section, {}).items():
            if key not in options[section]:
                raise ConfigError(f"{section}.{key}: unknown option")
            options[section][key] = value

    return ExperimentConfig(
        suites=parse_suites(raw.get("suite", "all")),
        ensemble=ensemble,
        M=int(raw.get("M", 200)),
        workers=int(raw.get("workers", 1)),
        output_dir=Path(raw.get("output_dir", "runs/out")),
        thresholds=thresholds,
        options=options,
    )


def load_config(path) -> ExperimentConfig:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw)


def calib_size(M: int) -> int:
    return math.ceil(M / 4)
