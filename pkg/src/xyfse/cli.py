"""Command-line batch driver.

    xyfse run <config.ini | preset>  [--output DIR] [--threads N] [--cache-dir DIR]
    xyfse report <dir>
    xyfse cache warm <gamma> <h> <xmax> [--cache-dir DIR]

Exit status: 0 on success, 2 for configuration or input errors, 3 for
numerical failures.  Errors are also printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .cft import DEFAULT_CALIBRATION_LENGTHS, CftParams, CoefficientMode, calibrate_s0
from .corr_matrix import build
from .entropy import edge_localization, nu_spectrum
from .errors import ConfigError, MalformedInput, XyFseError
from .fse import (
    EntropyEngine,
    Kind,
    dilation_sweep,
    expected_eta,
    fit_eta,
    in_exclusion_window,
    read_records_csv,
    run_manifest,
    scaling_bound_check,
    write_manifest,
    write_records_csv,
)
from .intervals import IntervalSet, PatternFamily
from .xy_model import Correlator, PhasePoint, cache_filename

logger = logging.getLogger("xyfse")

CACHE_ENV = "XYFSE_CACHE_DIR"
PRESETS = ("fig3", "fig4", "fig5", "fig6")
ETA_TOLERANCE = 0.15

_COMMON_KEYS = {"task", "output", "threads", "cache"}
_TASK_KEYS = {
    "sweep": {
        "gamma", "h", "patterns", "alphas", "lambdas", "kinds", "coefficient",
        "calibration_lengths", "fit_min_lambda", "slack",
    },
    "correlator": {"points", "xmax"},
    "localization": {"points", "length", "width", "modes", "threshold"},
}


@dataclass
class RunConfig:
    task: str
    output: Path
    threads: int = 1
    cache: Path | None = None
    point: PhasePoint | None = None
    points: list[PhasePoint] = field(default_factory=list)
    patterns: list[PatternFamily] = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    lambdas: list[int] = field(default_factory=list)
    kinds: list[Kind] = field(default_factory=list)
    coefficient: CoefficientMode = CoefficientMode.STANDARD
    calibration_lengths: tuple[int, ...] = DEFAULT_CALIBRATION_LENGTHS
    fit_min_lambda: int = 4
    slack: float = 0.15
    xmax: int = 100
    length: int = 100
    width: int = 10
    modes: list[int] = field(default_factory=list)
    threshold: float = 1e-3


def _float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {text!r}")
    return value


def _int(key, text, minimum=None):
    try:
        value = int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _list(text, sep=","):
    return [t.strip() for t in text.split(sep) if t.strip()]


def _int_range(key, text):
    """``"1-20"`` or ``"1, 2, 4"``."""
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = (_int(key, t, 1) for t in text.split("-", 1))
        values = list(range(lo, hi + 1))
    else:
        values = [_int(key, t, 1) for t in _list(text)]
    if values != sorted(set(values)):
        raise ConfigError(f"{key}: values must be strictly ascending")
    return values


def _points(text):
    out = []
    for item in _list(text, ";"):
        parts = item.split(":")
        if len(parts) != 2:
            raise ConfigError(f"points: expected 'gamma:h' entries, got {item!r}")
        out.append(PhasePoint(_float("points", parts[0]), _float("points", parts[1])))
    if not out:
        raise ConfigError("points: empty list")
    return out


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if parser.sections() != ["run"]:
        raise ConfigError(f"{source}: expected exactly one [run] section, got {parser.sections()}")
    raw = dict(parser["run"])
    task = raw.get("task", "sweep")
    if task not in _TASK_KEYS:
        raise ConfigError(f"task: unknown task {task!r}; choose from {sorted(_TASK_KEYS)}")
    unknown = set(raw) - _COMMON_KEYS - _TASK_KEYS[task]
    if unknown:
        raise ConfigError(f"unknown key(s) for task {task!r}: {', '.join(sorted(unknown))}")
    if "output" not in raw:
        raise ConfigError("output: missing")
    cfg = RunConfig(task=task, output=Path(raw["output"]))
    cfg.threads = _int("threads", raw.get("threads", "1"), 1)
    if raw.get("cache"):
        cfg.cache = Path(raw["cache"])
    if task == "sweep":
        for key in ("gamma", "h", "patterns", "alphas", "lambdas"):
            if key not in raw:
                raise ConfigError(f"{key}: missing")
        cfg.point = PhasePoint(_float("gamma", raw["gamma"]), _float("h", raw["h"]))
        try:
            cfg.patterns = [PatternFamily.parse(t) for t in _list(raw["patterns"], ";")]
        except XyFseError as exc:
            raise ConfigError(f"patterns: {exc}") from None
        if not cfg.patterns:
            raise ConfigError("patterns: empty list")
        cfg.alphas = [_float("alphas", t) for t in _list(raw["alphas"])]
        if not cfg.alphas or any(a <= 0 for a in cfg.alphas):
            raise ConfigError("alphas: need a non-empty list of positive values")
        cfg.lambdas = _int_range("lambdas", raw["lambdas"])
        if len(cfg.lambdas) < 6:
            raise ConfigError(f"lambdas: need >= 6 dilation factors, got {len(cfg.lambdas)}")
        try:
            cfg.kinds = [Kind(t) for t in _list(raw.get("kinds", "single, extrinsic, intrinsic"))]
            cfg.coefficient = CoefficientMode(raw.get("coefficient", "standard"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not cfg.kinds:
            raise ConfigError("kinds: empty list")
        if "calibration_lengths" in raw:
            cfg.calibration_lengths = tuple(_int("calibration_lengths", t, 1) for t in _list(raw["calibration_lengths"]))
        cfg.fit_min_lambda = _int("fit_min_lambda", raw.get("fit_min_lambda", "4"), 1)
        cfg.slack = _float("slack", raw.get("slack", "0.15"))
        if not cfg.point.is_critical and ({Kind.SINGLE, Kind.INTRINSIC} & set(cfg.kinds)):
            raise ConfigError(f"kinds single/intrinsic need a critical point, got {cfg.point}")
    elif task == "correlator":
        cfg.points = _points(raw.get("points", ""))
        cfg.xmax = _int("xmax", raw.get("xmax", "100"), 1)
    else:
        cfg.points = _points(raw.get("points", ""))
        cfg.length = _int("length", raw.get("length", "100"), 2)
        cfg.width = _int("width", raw.get("width", "10"), 1)
        cfg.modes = [_int("modes", t, 1) for t in _list(raw.get("modes", ""))]
        cfg.threshold = _float("threshold", raw.get("threshold", "1e-3"))
        if any(m > 2 * cfg.length for m in cfg.modes):
            raise ConfigError(f"modes: indices must be <= 2 * length = {2 * cfg.length}")
    return cfg


def load_config(name: str) -> RunConfig:
    """Read a config file, or a shipped preset by name."""
    path = Path(name)
    if path.is_file():
        return parse_config(path.read_text(), str(path))
    if name in PRESETS:
        text = resources.files("xyfse").joinpath("presets", f"{name}.ini").read_text()
        return parse_config(text, f"preset {name}")
    raise ConfigError(f"no config file or preset named {name!r} (presets: {', '.join(PRESETS)})")


def default_cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "xyfse")


def _correlator(point: PhasePoint, cache_dir: Path | None) -> Correlator:
    c = Correlator(point)
    if cache_dir is not None:
        path = cache_dir / cache_filename(c)
        if path.exists():
            c.load(path)
    return c


def _save_cache(c: Correlator, cache_dir: Path | None):
    if cache_dir is not None:
        cache_dir.mkdir(parents=True, exist_ok=True)
        c.save(cache_dir / cache_filename(c))


def _slug(text: str) -> str:
    return str(text).replace(",", "-").replace("*", "n")


def _fmt(v: float) -> str:
    return repr(float(v))


def _status(eta: float | None, alpha: float) -> str:
    if in_exclusion_window(alpha):
        return "SKIPPED"
    if eta is None or not math.isfinite(eta):
        return "FAIL"
    target = expected_eta(alpha)
    if alpha >= 10:
        return "PASS" if eta <= 2.0 / alpha + ETA_TOLERANCE else "FAIL"
    return "PASS" if abs(eta - target) <= ETA_TOLERANCE else "FAIL"


def _gnuplot(entries: list[tuple[str, str]], logscale: str, xlabel: str, ylabel: str) -> str:
    lines = [
        "set terminal pngcairo size 900,650",
        "set output 'figure.png'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [f"'{fname}' using 1:2 with linespoints title '{title}'" for fname, title in entries]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def run_sweep(cfg: RunConfig) -> dict:
    p = cfg.point
    out = cfg.output
    (out / "plots").mkdir(parents=True, exist_ok=True)
    correlator = _correlator(p, cfg.cache)
    engine = EntropyEngine(p, correlator)
    needs_cft = bool({Kind.SINGLE, Kind.INTRINSIC} & set(cfg.kinds))
    cft: dict[float, CftParams | None] = {}
    for alpha in cfg.alphas:
        if needs_cft:
            cal = calibrate_s0(p, alpha, cfg.calibration_lengths, engine=engine, mode=cfg.coefficient, corrections=True)
            cft[alpha] = CftParams.for_point(p, cal.s0, cfg.coefficient)
            logger.info("alpha=%s s0=%.10f residual=%.2e", alpha, cal.s0, cal.residual)
        else:
            cft[alpha] = None

    records, fits, plots = [], [], []
    for family in cfg.patterns:
        kinds = [k for k in cfg.kinds if k is Kind.SINGLE or family.n_blocks >= 2]
        for kind in kinds:
            for alpha in cfg.alphas:
                recs = dilation_sweep(p, family, alpha, kind, cfg.lambdas, cft=cft[alpha], engine=engine, threads=cfg.threads)
                records.extend(recs)
                fits.append(_fit_entry(cfg, family, kind, alpha, recs))
                fname = f"plots/{kind.value}_{_slug(family)}_alpha{alpha:g}.dat"
                (out / fname).write_text("".join(f"{r.lam} {_fmt(abs(r.delta_bits))}\n" for r in recs))
                plots.append((Path(fname).name, f"{kind.value} {family} alpha={alpha:g}"))
    write_records_csv(out / "records.csv", records)
    (out / "fits.json").write_text(json.dumps(fits, indent=2, sort_keys=True) + "\n")
    (out / "plots" / "plot.gp").write_text(_gnuplot(plots, "xy", "lambda", "|Delta| (bits)"))
    manifest = run_manifest(p, ";".join(str(f) for f in cfg.patterns), cfg.kinds[0], cfg.alphas, cfg.lambdas, cft, correlator)
    manifest["kind"] = [k.value for k in cfg.kinds]
    write_manifest(out / "manifest.json", manifest)
    _save_cache(correlator, cfg.cache)
    return {"records": len(records), "fits": len(fits)}


def _fit_entry(cfg, family, kind, alpha, recs) -> dict:
    entry = {
        "pattern": str(family),
        "kind": kind.value,
        "alpha": float(alpha),
        "expected_eta": expected_eta(alpha),
        "uniform": family.uniform,
    }
    try:
        fit = fit_eta(recs, cfg.point.k_fermi, min_lambda=cfg.fit_min_lambda)
        entry.update(fit.to_dict())
    except XyFseError as exc:
        entry.update({"eta": None, "error": f"{type(exc).__name__}: {exc}"})
    base = [r for r in recs if r.lam == 1]
    if base:
        report = scaling_bound_check(base[0], [r for r in recs if r.lam > 1], expected_eta(alpha), cfg.slack)
        entry["bound"] = {
            "passed": report.passed,
            "skipped": report.skipped,
            "max_violation_ratio": None if math.isnan(report.max_violation_ratio) else report.max_violation_ratio,
            "b_values": {str(k): v for k, v in report.b_values.items()},
        }
    entry["status"] = _status(entry.get("eta"), alpha)
    return entry


def run_correlator(cfg: RunConfig) -> dict:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    plots = []
    for p in cfg.points:
        c = _correlator(p, cfg.cache)
        xs = np.arange(1, cfg.xmax + 1)
        g = c.values(xs)
        fname = f"K_gamma{p.gamma:g}_h{p.h:g}.dat"
        (out / fname).write_text("".join(f"{x} {_fmt(x * v)}\n" for x, v in zip(xs, g)))
        plots.append((fname, f"gamma={p.gamma:g} h={p.h:g} ({p.phase.value})"))
        _save_cache(c, cfg.cache)
    (out / "plot.gp").write_text(_gnuplot(plots, "", "x", "K(x) = x G(x)"))
    return {"tables": len(plots)}


def run_localization(cfg: RunConfig) -> dict:
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    summary, plots = [], []
    n = cfg.length
    for p in cfg.points:
        c = _correlator(p, cfg.cache)
        spectrum = nu_spectrum(build(c, IntervalSet(((0, n),))), with_vectors=True)
        report = edge_localization(spectrum, cfg.width, cfg.threshold)
        nus = spectrum.nus
        for mode in cfg.modes:
            # modes are 1-based indices into the ascending spectrum
            col = 2 * n - mode
            amp = np.abs(spectrum.vectors[:, col]) ** 2
            weight = amp[0::2] + amp[1::2]
            fname = f"mode_gamma{p.gamma:g}_h{p.h:g}_nu{mode}.dat"
            (out / fname).write_text("".join(f"{s} {_fmt(w)}\n" for s, w in zip(spectrum.sites, weight)))
            plots.append((fname, f"gamma={p.gamma:g} h={p.h:g} nu_{mode}={nus[col]:.4f}"))
        summary.append(
            {
                "gamma": p.gamma,
                "h": p.h,
                "pairs": [float(v) for v in spectrum.pairs],
                "mean_edge_weight_entangling": report.mean_edge_entangling,
                "mean_edge_weight_bulk": report.mean_edge_bulk,
                "baseline": report.baseline,
                "inconclusive": report.inconclusive,
            }
        )
        _save_cache(c, cfg.cache)
    (out / "localization.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "plot.gp").write_text(_gnuplot(plots, "", "site", "|psi|^2"))
    return {"points": len(summary)}


def run(cfg: RunConfig) -> dict:
    runner = {"sweep": run_sweep, "correlator": run_correlator, "localization": run_localization}[cfg.task]
    return runner(cfg)


def report(directory: str | Path) -> str:
    """Table of fitted ``eta`` per (pattern, kind, alpha) with PASS/FAIL/SKIPPED."""
    directory = Path(directory)
    records_path, fits_path = directory / "records.csv", directory / "fits.json"
    for path in (records_path, fits_path):
        if not path.is_file():
            raise MalformedInput(f"{path} does not exist")
    rows = read_records_csv(records_path)
    try:
        fits = json.loads(fits_path.read_text())
        entries = [(f["pattern"], f["kind"], float(f["alpha"]), f.get("eta")) for f in fits]
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedInput(f"{fits_path}: {exc}") from None
    lines = [f"{len(rows)} records, {len(entries)} fits", f"{'pattern':<16} {'kind':<10} {'alpha':>6} {'eta':>8} {'expect':>7}  status"]
    for pattern, kind, alpha, eta in entries:
        shown = "-" if eta is None else f"{eta:8.4f}"
        lines.append(f"{pattern:<16} {kind:<10} {alpha:>6g} {shown:>8} {expected_eta(alpha):>7.4f}  {_status(eta, alpha)}")
    return "\n".join(lines)


def cache_warm(gamma: float, h: float, xmax: int, cache_dir: Path) -> Path:
    c = _correlator(PhasePoint(gamma, h), cache_dir)
    c.warm(xmax)
    _save_cache(c, cache_dir)
    return cache_dir / cache_filename(c)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="xyfse", description="Finite-size effects of XY-chain Renyi entropies.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a config file or preset (fig3..fig6)")
    r.add_argument("config")
    r.add_argument("--output", type=Path)
    r.add_argument("--threads", type=int)
    r.add_argument("--cache-dir", type=Path)
    rep = sub.add_parser("report", help="summarise records.csv and fits.json in a run directory")
    rep.add_argument("directory")
    cache = sub.add_parser("cache", help="correlator cache maintenance")
    csub = cache.add_subparsers(dest="cache_command", required=True)
    warm = csub.add_parser("warm", help="precompute G(x) for |x| <= xmax")
    warm.add_argument("gamma", type=float)
    warm.add_argument("h", type=float)
    warm.add_argument("xmax", type=int)
    warm.add_argument("--cache-dir", type=Path)
    return ap


def _fail(exc: Exception, code: int) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.output is not None:
                cfg.output = args.output
            if args.threads is not None:
                if args.threads < 1:
                    raise ConfigError(f"--threads must be >= 1, got {args.threads}")
                cfg.threads = args.threads
            if args.cache_dir is not None:
                cfg.cache = args.cache_dir
            elif cfg.cache is None:
                cfg.cache = default_cache_dir()
            summary = run(cfg)
            print(json.dumps({"output": str(cfg.output), **summary}, sort_keys=True))
        elif args.command == "report":
            print(report(args.directory))
        else:
            if args.xmax < 0:
                raise ConfigError(f"xmax must be >= 0, got {args.xmax}")
            print(cache_warm(args.gamma, args.h, args.xmax, args.cache_dir or default_cache_dir()))
    except (ConfigError, MalformedInput) as exc:
        return _fail(exc, 2)
    except (XyFseError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return _fail(exc, 3)
    except ValueError as exc:
        return _fail(exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
