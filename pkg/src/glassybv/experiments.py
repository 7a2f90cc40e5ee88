"""Experiment runners behind the command line: sweeps, fits and CSV output.

Every CSV starts with one ``#`` metadata line (tool version, experiment,
seed, SHA-256 of the resolved configuration) followed by a header row.
Numbers are written with 9 significant digits so identical runs give
identical bytes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .disorder import (
    SQUEEZE_D_DEFAULT,
    DegenerateParam,
    QuantumDisorder,
    classical_param_for_strength,
    quantum_param_for_strength,
    quantum_strength,
    squeeze_r_range,
)
from .engine import SecretString, classical_success
from .fitting import FitModel, FitResult, fit
from .quench import DEFAULT_MAX_SAMPLES, lnP_statistics, quenched_average

EXPERIMENTS = ("sweep", "squeezed", "advantage", "clt", "fit")
EXPERIMENT_ALIASES = {"squeezed_sweep": "squeezed"}
SWEEP_FAMILIES = ("uniform", "gaussian", "cauchy", "discrete")
WORKERS_ENV = "GLASSYBV_WORKERS"
DEFAULT_GRID_POINTS = 21
DEFAULT_CLT_SAMPLES = 200_000

# Reference fit parameters (a, b, c, d, error) for known (family, n) curves.
REFERENCE_FITS = {
    ("uniform", 1): (0.59, 1.8, 0.0, 0.41, 0.0023),
    ("uniform", 2): (0.79, 2.6, 0.0, 0.19, 0.0046),
    ("uniform", 10): (0.99, 10.0, 0.0, 0.0, 0.0059),
    ("gaussian", 1): (0.19, 4.3, -0.31, 0.80, 0.0012),
    ("gaussian", 2): (0.43, 4.4, -0.33, 0.57, 0.0018),
    ("gaussian", 10): (0.95, 10.0, -0.052, 0.046, 0.0045),
    ("cauchy", 1): (0.25, 2.5, -0.27, 0.75, 0.00056),
    ("cauchy", 2): (0.52, 2.9, -0.26, 0.47, 0.0012),
    ("cauchy", 10): (0.95, 9.3, -0.044, 0.030, 0.0044),
    ("discrete", 1): (0.46, 5.5, -0.58, 0.52, 0.017),
    ("discrete", 2): (0.82, 7.6, -0.20, 0.16, 0.014),
    ("discrete", 10): (0.99, 35.4, 0.0, 0.0, 0.0035),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int | None = None
    family: str | None = None
    n: list[int] | None = None
    n_range: list[int] | None = None
    grid: list[float] | None = None
    sigma_bar: list[float] | None = None
    D: float = SQUEEZE_D_DEFAULT
    max_samples: int | None = None
    output_path: str | None = None
    input_path: str | None = None
    form: str = "auto"
    pin: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' field")
        return cls(**data)

    def resolved(self) -> "ExperimentConfig":
        """Validated copy with every experiment default filled in."""
        cfg = ExperimentConfig(**asdict(self))
        cfg.experiment = EXPERIMENT_ALIASES.get(cfg.experiment, cfg.experiment)
        if cfg.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {cfg.experiment!r}")
        if cfg.experiment != "fit":
            if cfg.seed is None:
                raise ConfigError("a seed is required (--seed or 'seed' in the config)")
            if not 0 <= int(cfg.seed) < 2**64:
                raise ConfigError("seed must be a 64-bit unsigned integer")
            cfg.seed = int(cfg.seed)
        if cfg.max_samples is not None and int(cfg.max_samples) < 10_000:
            raise ConfigError("max_samples must be >= 10000")
        exp = cfg.experiment
        if exp == "sweep":
            if cfg.family not in SWEEP_FAMILIES:
                raise ConfigError(f"sweep family must be one of {SWEEP_FAMILIES}")
            cfg.n = cfg.n or [1, 2, 10]
            cfg.grid = cfg.grid or _linspace(0.0, 1.0, DEFAULT_GRID_POINTS)
            _check_unit(cfg.grid, "grid")
        elif exp == "squeezed":
            if not 0.0 < cfg.D <= math.pi:
                raise ConfigError("D must lie in (0, pi]")
            lo, hi = squeeze_r_range(cfg.D)
            cfg.n = cfg.n or [1, 10]
            cfg.grid = cfg.grid or [float(r) for r in np.geomspace(lo, hi, 11)]
            if any(not lo * (1 - 1e-9) <= r <= hi * (1 + 1e-9) for r in cfg.grid):
                raise ConfigError(f"r grid must lie in [{lo:.6g}, {hi:.6g}] for D={cfg.D}")
        elif exp == "advantage":
            if cfg.family is not None and cfg.family not in SWEEP_FAMILIES:
                raise ConfigError(f"advantage family must be one of {SWEEP_FAMILIES}")
            cfg.sigma_bar = cfg.sigma_bar or [0.2, 0.4, 0.6]
            cfg.n_range = cfg.n_range or [1, 25]
            _check_unit(cfg.sigma_bar, "sigma_bar")
        elif exp == "clt":
            cfg.family = cfg.family or "uniform"
            if cfg.family not in SWEEP_FAMILIES:
                raise ConfigError(f"clt family must be one of {SWEEP_FAMILIES}")
            cfg.n = cfg.n or [5, 10, 20, 50]
            cfg.sigma_bar = cfg.sigma_bar or [0.2]
            _check_unit(cfg.sigma_bar, "sigma_bar")
        else:
            if not cfg.input_path:
                raise ConfigError("fit needs an input CSV (--input)")
            if cfg.form not in ("auto", "gauss_only", "gauss_quad"):
                raise ConfigError("form must be auto, gauss_only or gauss_quad")
        if cfg.n is not None and any(int(k) < 1 for k in cfg.n):
            raise ConfigError("n values must be >= 1")
        if cfg.n_range is not None:
            lo, hi = (int(v) for v in cfg.n_range)
            if lo < 1 or hi < lo:
                raise ConfigError("n_range must satisfy 1 <= lo <= hi")
            cfg.n_range = [lo, hi]
        return cfg

    def digest(self) -> str:
        body = {k: v for k, v in asdict(self).items() if k not in ("output_path", "input_path")}
        text = json.dumps(body, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _linspace(lo, hi, num):
    return [float(v) for v in np.linspace(lo, hi, num)]


def _check_unit(values, name):
    if any(not 0.0 <= v <= 1.0 for v in values):
        raise ConfigError(f"{name} values must lie in [0, 1]")


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _ordered_map(fn: Callable, items: Sequence) -> list:
    """Map preserving input order; fans out to processes when workers > 1."""
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- CSV ------------------------------------------------------------------------


def format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return str(value)


def render_csv(columns: Sequence[str], rows: Iterable[Sequence], meta: dict[str, Any]) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={format_value(v)}" for k, v in meta.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write via a sibling temp file so failures never leave partial output."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def read_csv(path: str | os.PathLike) -> tuple[dict[str, str], list[dict[str, str]]]:
    meta: dict[str, str] = {}
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            for token in line[1:].split():
                key, _, value = token.partition("=")
                meta[key] = value
        elif line.strip():
            lines.append(line)
    return meta, list(csv.DictReader(lines))


def _meta(cfg: ExperimentConfig, **extra) -> dict[str, Any]:
    meta = {"tool": f"glassybv-{__version__}", "experiment": cfg.experiment}
    if cfg.seed is not None:
        meta["seed"] = cfg.seed
    meta["config_sha256"] = cfg.digest()
    meta.update(extra)
    return meta


# -- experiments ------------------------------------------------------------------


def _max_samples(cfg):
    return int(cfg.max_samples) if cfg.max_samples is not None else DEFAULT_MAX_SAMPLES


def _sweep_point(args):
    family, sigma_bar, n, index, seed, max_samples = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateParam)
        qmodel = quantum_param_for_strength(family, sigma_bar)
        est = quenched_average(qmodel, SecretString.zeros(n), seed, max_samples, stream=(n, index))
    cmodel = classical_param_for_strength(family, sigma_bar)
    return (n, sigma_bar, est.q_mean, est.std_error, classical_success(cmodel, n),
            est.n_samples, est.converged)


SWEEP_COLUMNS = ("n", "sigma_bar", "Q", "Q_stderr", "C", "n_samples", "converged")


def run_sweep(cfg: ExperimentConfig) -> str:
    """Q and C against scaled strength for one family; rows ordered by (n, grid)."""
    cfg = cfg.resolved()
    jobs = [(cfg.family, float(t), int(n), i, cfg.seed, _max_samples(cfg))
            for n in cfg.n for i, t in enumerate(cfg.grid)]
    rows = _ordered_map(_sweep_point, jobs)
    meta = _meta(cfg, family=cfg.family, grid_points=len(cfg.grid))
    return render_csv(SWEEP_COLUMNS, rows, meta)


def _squeezed_point(args):
    D, r, n, index, seed, max_samples = args
    model = QuantumDisorder.squeezed(D, r)
    sigma = quantum_strength(model).sigma
    est = quenched_average(model, SecretString.zeros(n), seed, max_samples, stream=(n, index))
    return (r, sigma, est.q_mean, est.std_error, n)


SQUEEZED_COLUMNS = ("r", "sigma_QS", "Q", "Q_stderr", "n")


def run_squeezed_sweep(cfg: ExperimentConfig) -> str:
    cfg = cfg.resolved()
    jobs = [(cfg.D, float(r), int(n), i, cfg.seed, _max_samples(cfg))
            for n in cfg.n for i, r in enumerate(cfg.grid)]
    rows = _ordered_map(_squeezed_point, jobs)
    return render_csv(SQUEEZED_COLUMNS, rows, _meta(cfg, D=cfg.D, grid_points=len(cfg.grid)))


def _advantage_block(args):
    family, sigma_bar, n_lo, n_hi, seed, max_samples, key = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateParam)
        qmodel = quantum_param_for_strength(family, sigma_bar)
        cmodel = classical_param_for_strength(family, sigma_bar)
        rows = []
        for n in range(n_lo, n_hi + 1):
            est = quenched_average(qmodel, SecretString.zeros(n), seed, max_samples,
                                   stream=(*key, n))
            c = classical_success(cmodel, n)
            rows.append((family, sigma_bar, n, est.q_mean, c, est.q_mean - c))
    return rows


ADVANTAGE_COLUMNS = ("family", "sigma_bar", "n", "Q", "C", "diff")


def run_advantage(cfg: ExperimentConfig) -> str:
    cfg = cfg.resolved()
    families = [cfg.family] if cfg.family else list(SWEEP_FAMILIES)
    lo, hi = cfg.n_range
    jobs = [(fam, float(sb), lo, hi, cfg.seed, _max_samples(cfg),
             (SWEEP_FAMILIES.index(fam), j))
            for fam in families for j, sb in enumerate(cfg.sigma_bar)]
    rows = [row for block in _ordered_map(_advantage_block, jobs) for row in block]
    return render_csv(ADVANTAGE_COLUMNS, rows, _meta(cfg))


def _clt_point(args):
    family, sigma_bar, n, samples, seed = args
    model = quantum_param_for_strength(family, sigma_bar)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        st = lnP_statistics(model, n, samples, seed, stream=(n,))
    return (n, st.mean_lnP, st.std_lnP, st.skewness, st.excess_kurtosis,
            st.predicted_mean_P, st.mc_mean_P)


CLT_COLUMNS = ("n", "mean_lnP", "std_lnP", "skewness", "excess_kurtosis",
               "predicted_mean_P", "mc_mean_P")


def run_clt(cfg: ExperimentConfig) -> str:
    cfg = cfg.resolved()
    samples = int(cfg.max_samples) if cfg.max_samples is not None else DEFAULT_CLT_SAMPLES
    sb = float(cfg.sigma_bar[0])
    jobs = [(cfg.family, sb, int(n), samples, cfg.seed) for n in cfg.n]
    rows = _ordered_map(_clt_point, jobs)
    return render_csv(CLT_COLUMNS, rows, _meta(cfg, family=cfg.family, sigma_bar=sb))


FIT_COLUMNS = ("family", "n", "form", "a", "b", "c", "d",
               "a_hw", "b_hw", "c_hw", "d_hw", "rms_error", "converged")


def auto_fit_model(family: str, n: int) -> FitModel:
    """Model form used for each family's curve."""
    if family == "uniform":
        return FitModel.gauss_only()
    if family == "discrete" and n >= 10:
        return FitModel.gauss_quad(c=0.0, d=0.0)
    return FitModel.gauss_quad()


def fit_sweep_rows(rows: Sequence[dict[str, str]], family: str, form: str = "auto",
                   pin: dict[str, float] | None = None) -> list[tuple[int, FitModel, FitResult]]:
    by_n: dict[int, list[tuple[float, float]]] = {}
    for row in rows:
        by_n.setdefault(int(row["n"]), []).append((float(row["sigma_bar"]), float(row["Q"])))
    out = []
    for n in sorted(by_n):
        if form == "auto":
            model = auto_fit_model(family, n)
            if pin:
                model = FitModel(model.form, {**model.fixed, **pin})
        else:
            model = FitModel(form, dict(pin or {}))
        out.append((n, model, fit(by_n[n], model)))
    return out


def compare_to_reference(family: str, n: int, result: FitResult) -> list[str]:
    ref = REFERENCE_FITS.get((family, n))
    if ref is None:
        return []
    lines = [f"{family} n={n}: reference comparison"]
    for name, got, want in zip("abcd", result.params, ref[:4]):
        lines.append(f"  {name}: fitted {got:.4g}  reference {want:.4g}  delta {got - want:+.3g}")
    lines.append(f"  error: fitted {result.rms_error:.3g}  reference {ref[4]:.3g}")
    return lines


def run_fit(cfg: ExperimentConfig) -> tuple[str, str]:
    """Fit every n in a sweep CSV; returns (csv text, human-readable report)."""
    cfg = cfg.resolved()
    meta, rows = read_csv(cfg.input_path)
    family = cfg.family or meta.get("family")
    if not rows or "sigma_bar" not in rows[0]:
        raise ConfigError(f"{cfg.input_path} does not look like sweep output")
    fits = fit_sweep_rows(rows, family or "", cfg.form, cfg.pin)
    out_rows, report = [], []
    for n, model, res in fits:
        out_rows.append((family, n, model.form, *res.params, *res.half_widths_95,
                         res.rms_error, res.converged))
        report.append(
            f"{family} n={n} [{model.form}, pinned {sorted(model.fixed)}]: "
            + ", ".join(f"{k}={v:.4g}±{h:.2g}" for k, v, h in zip("abcd", res.params, res.half_widths_95))
            + f", rms={res.rms_error:.3g}"
        )
        report.extend(compare_to_reference(family, n, res))
    extra = {"family": family, "source_seed": meta.get("seed", "unknown")}
    return render_csv(FIT_COLUMNS, out_rows, _meta(cfg, **extra)), "\n".join(report)


RUNNERS = {
    "sweep": run_sweep,
    "squeezed": run_squeezed_sweep,
    "advantage": run_advantage,
    "clt": run_clt,
}
