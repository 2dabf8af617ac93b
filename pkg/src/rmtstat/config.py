"""Strict parsing of experiment configs.

Flat INI-style documents with two sections: [experiment] for the run
parameters and [ensemble] for the matrix law. Every experiment declares
which keys it accepts and which it requires; anything else is an error
that names the offending key. Numeric fields are range-checked here so
a bad config dies before any computation starts.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, replace
from typing import Optional

from .det_functional import ComplexZ
from .ensembles import GAUSSIAN, RECT_KINDS, SYMMETRIC_KINDS, EnsembleSpec
from .pointproc import IntervalPartition
from .spectra import RESCALE_MODES
from .tails import FAMILIES, TailSpec

EXPERIMENTS = (
    "spectrum",
    "poisson-test",
    "frechet-test",
    "coupling",
    "row-diagnostics",
    "tw-contrast",
    "esd-check",
    "det-functional",
    "tw-table",
)

# keys accepted by every experiment
_COMMON_KEYS = {"name", "seed", "workers", "output_dir", "trials"}

_EXTRA_KEYS = {
    "spectrum": {"k", "rescale"},
    "poisson-test": {"partition"},
    "frechet-test": {"k"},
    "coupling": {"k"},
    "row-diagnostics": {"delta", "n_values"},
    "tw-contrast": {"ks_threshold"},
    "esd-check": set(),
    "det-functional": {"z_list"},
    "tw-table": {"s_min", "s_max", "step"},
}

_REQUIRED_KEYS = {
    "spectrum": {"trials"},
    "poisson-test": {"trials", "partition"},
    "frechet-test": {"trials", "k"},
    "coupling": {"trials", "k"},
    "row-diagnostics": {"trials", "delta", "n_values"},
    "tw-contrast": {"trials"},
    "esd-check": set(),
    "det-functional": {"trials", "z_list"},
    "tw-table": set(),
}

_ENSEMBLE_KEYS = {"kind", "n", "m", "d", "entry", "alpha", "stable_beta"}

# experiments whose statistics are stated for heavy-tailed entries only
_HEAVY_ONLY = {"poisson-test", "frechet-test", "coupling", "row-diagnostics"}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    ensemble: Optional[EnsembleSpec]
    trials: int
    seed: int
    workers: int
    output_dir: str
    name: str = ""
    partition: Optional[IntervalPartition] = None
    k: int = 0
    z_list: tuple[ComplexZ, ...] = ()
    delta: float = 0.0
    n_values: tuple[int, ...] = ()
    ks_threshold: float = 0.12
    rescale: str = ""
    s_min: float = -8.0
    s_max: float = 8.0
    step: float = 0.005

    def echo(self) -> dict:
        """Plain dict for the manifest; inf rendered as a string."""
        out = {
            "experiment": self.experiment,
            "name": self.name,
            "trials": self.trials,
            "seed": self.seed,
            "workers": self.workers,
            "output_dir": self.output_dir,
        }
        if self.ensemble is not None:
            e = self.ensemble
            entry = (
                "gaussian"
                if e.entry == GAUSSIAN
                else {
                    "family": e.entry.family,
                    "alpha": e.entry.alpha,
                    "stable_beta": e.entry.stable_beta,
                }
            )
            out["ensemble"] = {
                "kind": e.kind, "n": e.n, "m": e.m, "d": e.d, "entry": entry,
            }
        if self.partition is not None:
            out["partition"] = [
                [x, "inf" if math.isinf(y) else y] for x, y in self.partition.intervals
            ]
        if self.k:
            out["k"] = self.k
        if self.z_list:
            out["z_list"] = [[z.re, z.im] for z in self.z_list]
        if self.experiment == "row-diagnostics":
            out["delta"] = self.delta
            out["n_values"] = list(self.n_values)
        if self.experiment == "tw-contrast":
            out["ks_threshold"] = self.ks_threshold
        if self.rescale:
            out["rescale"] = self.rescale
        if self.experiment == "tw-table":
            out["s_min"] = self.s_min
            out["s_max"] = self.s_max
            out["step"] = self.step
        return out


def _parse_int(section: str, key: str, raw: str, lo=None, hi=None) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}")
    if lo is not None and value < lo:
        raise ConfigError(f"[{section}] {key} must be at least {lo}")
    if hi is not None and value > hi:
        raise ConfigError(f"[{section}] {key} must be at most {hi}")
    return value


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}")


def _parse_partition(raw: str) -> IntervalPartition:
    intervals = []
    for token in raw.split():
        if not (token.startswith("(") and token.endswith(")")):
            raise ConfigError(
                f"[experiment] partition entries look like (x,y); got {token!r}"
            )
        parts = token[1:-1].split(",")
        if len(parts) != 2:
            raise ConfigError(
                f"[experiment] partition entries need two endpoints; got {token!r}"
            )
        try:
            x = float(parts[0])
            y = math.inf if parts[1].strip() == "inf" else float(parts[1])
        except ValueError:
            raise ConfigError(f"[experiment] bad partition endpoint in {token!r}")
        intervals.append((x, y))
    try:
        return IntervalPartition(tuple(intervals))
    except ValueError as exc:
        raise ConfigError(f"[experiment] partition: {exc}")


def _parse_z_list(raw: str) -> tuple[ComplexZ, ...]:
    out = []
    for token in raw.split():
        try:
            z = complex(token.replace("i", "j"))
        except ValueError:
            raise ConfigError(f"[experiment] z_list entry {token!r} is not complex")
        try:
            out.append(ComplexZ(z.real, z.imag))
        except ValueError as exc:
            raise ConfigError(f"[experiment] z_list entry {token!r}: {exc}")
    if not out:
        raise ConfigError("[experiment] z_list must not be empty")
    return tuple(out)


def _parse_ensemble(items: dict[str, str], seed: int) -> EnsembleSpec:
    unknown = set(items) - _ENSEMBLE_KEYS
    if unknown:
        raise ConfigError(f"[ensemble] unknown key {sorted(unknown)[0]!r}")
    if "kind" not in items:
        raise ConfigError("[ensemble] missing required key 'kind'")
    kind = items["kind"]
    if kind not in SYMMETRIC_KINDS + RECT_KINDS:
        raise ConfigError(f"[ensemble] unknown kind {kind!r}")
    if "n" not in items:
        raise ConfigError("[ensemble] missing required key 'n'")
    n = _parse_int("ensemble", "n", items["n"], lo=1)
    m = _parse_int("ensemble", "m", items["m"], lo=1) if "m" in items else None
    d = _parse_int("ensemble", "d", items["d"], lo=0) if "d" in items else None

    family = items.get("entry", "gaussian")
    if family == "gaussian":
        for key in ("alpha", "stable_beta"):
            if key in items:
                raise ConfigError(f"[ensemble] {key} applies to heavy-tailed entries only")
        entry = GAUSSIAN
    else:
        if family not in FAMILIES:
            raise ConfigError(f"[ensemble] unknown entry family {family!r}")
        if family == "cauchy":
            alpha = _parse_float("ensemble", "alpha", items.get("alpha", "1.0"))
        else:
            if "alpha" not in items:
                raise ConfigError("[ensemble] missing required key 'alpha'")
            alpha = _parse_float("ensemble", "alpha", items["alpha"])
        beta = _parse_float("ensemble", "stable_beta", items.get("stable_beta", "0.0"))
        try:
            entry = TailSpec(family, alpha, stable_beta=beta)
        except ValueError as exc:
            raise ConfigError(f"[ensemble] {exc}")
    try:
        return EnsembleSpec(kind=kind, n=n, m=m, d=d, entry=entry, seed=seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[ensemble] {exc}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a config document."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}")

    sections = set(parser.sections())
    if "experiment" not in sections:
        raise ConfigError("missing [experiment] section")
    extra_sections = sections - {"experiment", "ensemble"}
    if extra_sections:
        raise ConfigError(f"unknown section [{sorted(extra_sections)[0]}]")

    exp_items = dict(parser.items("experiment"))
    if "name" not in exp_items:
        raise ConfigError("[experiment] missing required key 'name'")
    experiment = exp_items.pop("name")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}"
        )

    allowed = (_COMMON_KEYS - {"name"}) | _EXTRA_KEYS[experiment]
    unknown = set(exp_items) - allowed
    if unknown:
        raise ConfigError(
            f"[experiment] key {sorted(unknown)[0]!r} does not apply to {experiment}"
        )
    missing = _REQUIRED_KEYS[experiment] - set(exp_items)
    if missing:
        raise ConfigError(
            f"[experiment] missing required key {sorted(missing)[0]!r} for {experiment}"
        )

    seed = _parse_int("experiment", "seed", exp_items.get("seed", "0"), lo=0, hi=2**63 - 1)
    workers = _parse_int(
        "experiment", "workers", exp_items.get("workers", str(os.cpu_count() or 1)), lo=1
    )
    trials = _parse_int("experiment", "trials", exp_items.get("trials", "1"), lo=1)
    output_dir = exp_items.get("output_dir", "out")

    ensemble = None
    if experiment == "tw-table":
        if "ensemble" in sections:
            raise ConfigError("tw-table takes no [ensemble] section")
    else:
        if "ensemble" not in sections:
            raise ConfigError(f"{experiment} needs an [ensemble] section")
        ensemble = _parse_ensemble(dict(parser.items("ensemble")), seed)

    cfg = ExperimentConfig(
        experiment=experiment,
        ensemble=ensemble,
        trials=trials,
        seed=seed,
        workers=workers,
        output_dir=output_dir,
        name=exp_items.get("name", experiment),
    )

    if experiment in _HEAVY_ONLY and ensemble.entry == GAUSSIAN:
        raise ConfigError(f"{experiment} requires a heavy-tailed entry law")
    if experiment in _HEAVY_ONLY and not ensemble.is_symmetric:
        raise ConfigError(f"{experiment} requires a symmetric-kind ensemble")

    if "partition" in exp_items:
        cfg = replace(cfg, partition=_parse_partition(exp_items["partition"]))
    if "k" in exp_items:
        cfg = replace(cfg, k=_parse_int("experiment", "k", exp_items["k"], lo=1))
    elif experiment == "spectrum":
        cfg = replace(cfg, k=0)
    if "z_list" in exp_items:
        cfg = replace(cfg, z_list=_parse_z_list(exp_items["z_list"]))
    if "delta" in exp_items:
        delta = _parse_float("experiment", "delta", exp_items["delta"])
        if not 0.0 < delta < 0.25:
            raise ConfigError("[experiment] delta must lie in (0, 1/4)")
        cfg = replace(cfg, delta=delta)
    if "n_values" in exp_items:
        values = tuple(
            _parse_int("experiment", "n_values", tok, lo=2)
            for tok in exp_items["n_values"].split()
        )
        if len(values) < 2:
            raise ConfigError("[experiment] n_values needs at least two sizes")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("[experiment] n_values must increase strictly")
        cfg = replace(cfg, n_values=values)
    if "ks_threshold" in exp_items:
        thr = _parse_float("experiment", "ks_threshold", exp_items["ks_threshold"])
        if not 0.0 < thr < 1.0:
            raise ConfigError("[experiment] ks_threshold must lie in (0, 1)")
        cfg = replace(cfg, ks_threshold=thr)
    if "rescale" in exp_items:
        mode = exp_items["rescale"]
        if mode not in RESCALE_MODES:
            raise ConfigError(
                f"[experiment] unknown rescale mode {mode!r}; "
                f"expected one of {RESCALE_MODES}"
            )
        symmetric_modes = ("bn", "sqrt_n", "goe_edge")
        if ensemble.is_symmetric and mode not in symmetric_modes:
            raise ConfigError(
                f"[experiment] rescale {mode!r} requires a rectangular-kind ensemble"
            )
        if not ensemble.is_symmetric and mode in symmetric_modes:
            raise ConfigError(
                f"[experiment] rescale {mode!r} requires a symmetric-kind ensemble"
            )
        if mode == "bn" and ensemble.entry == GAUSSIAN:
            raise ConfigError(
                "[experiment] rescale 'bn' requires a heavy-tailed entry law"
            )
        cfg = replace(cfg, rescale=mode)
    if "s_min" in exp_items:
        cfg = replace(cfg, s_min=_parse_float("experiment", "s_min", exp_items["s_min"]))
    if "s_max" in exp_items:
        cfg = replace(cfg, s_max=_parse_float("experiment", "s_max", exp_items["s_max"]))
    if "step" in exp_items:
        cfg = replace(cfg, step=_parse_float("experiment", "step", exp_items["step"]))

    if experiment == "frechet-test" and cfg.k > 10:
        raise ConfigError("[experiment] k must be at most 10")
    if experiment == "coupling" and cfg.k > 10:
        raise ConfigError("[experiment] k must be at most 10")
    if experiment == "det-functional":
        if ensemble.kind not in ("sample_cov", "sparse_sample_cov"):
            raise ConfigError("det-functional requires a sample-covariance kind")
        if ensemble.entry == GAUSSIAN or ensemble.entry.family != "cauchy":
            raise ConfigError("det-functional requires cauchy entries")
        if trials < 100:
            raise ConfigError("[experiment] trials must be at least 100")
    if experiment == "esd-check":
        if ensemble.entry != GAUSSIAN:
            raise ConfigError("esd-check requires gaussian entries")
        if ensemble.kind in ("band_aperiodic", "band_periodic"):
            raise ConfigError("esd-check does not support band kinds")
        if ensemble.n < 20:
            raise ConfigError("esd-check needs n >= 20 for the distribution fit")
    if experiment == "poisson-test" and trials < 50:
        raise ConfigError("[experiment] trials must be at least 50")
    if experiment in ("frechet-test", "tw-contrast") and trials < 20:
        raise ConfigError("[experiment] trials must be at least 20")
    if cfg.k and ensemble is not None and 4 * cfg.k > ensemble.n:
        raise ConfigError("[experiment] k must satisfy 4 k <= n")

    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
