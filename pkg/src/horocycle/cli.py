"""Config-driven experiment runner.

Usage::

    horocycle --config run.ini --output-dir out/ [--threads K] [--verbose]

The config is an INI file.  ``[run]`` picks the command (``transform``,
``synthesize``, ``reconstruct``, ``verify-support``, ``solve-selftest``),
``n`` and ``seed``; ``[function]`` names the test function; ``[grids]``,
``[tolerances]``, ``[output]`` and ``[input]`` are optional.  Sample
configs live in ``configs/``.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import os
import re
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import HorocycleError
from .support import (
    DATA_TOL,
    SLICE_TOL,
    ExteriorDataset,
    default_frequencies,
    reconstruct,
    reference_slices,
    relative_linf,
    synthesize_dataset,
    verify_support,
)
from .transform import DecayFunction, QuadratureSpec, transform_sphere, transform_via_isometry, zero_function
from .volterra import AbelProblem, SecondKindProblem, solve_abel, solve_second_kind

log = logging.getLogger("horocycle")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3
THREADS_ENV = "HOROCYCLE_THREADS"
COMMANDS = ("transform", "synthesize", "reconstruct", "verify-support", "solve-selftest")
FUNCTIONS = ("gaussian-bump", "vertical-bump", "zero", "custom-table")

DEFAULT_TOLERANCES = {
    "transform": 1e-5,
    "roundtrip": 5e-2,
    "roundtrip_reduced": 1e-1,
    "data": DATA_TOL,
    "slice": SLICE_TOL,
    "selftest_second_kind": 1e-4,
    "selftest_abel": 1e-3,
}


class ConfigError(Exception):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


# -- config -----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    command: str
    n: int
    function: dict[str, str]
    grids: dict[str, str]
    tolerances: dict[str, float]
    output: dict[str, str]
    seed: int = 0
    threads: int = 1
    path: Path | None = None
    raw: dict[str, dict[str, str]] = field(default_factory=dict)
    lines: dict[tuple[str, str], int] = field(default_factory=dict)

    def line_of(self, section: str, key: str) -> int | None:
        return self.lines.get((section, key))

    def grid(self, key: str, cast: Callable, default):
        if key not in self.grids:
            return default
        try:
            return cast(self.grids[key])
        except ValueError as exc:
            raise ConfigError(f"[grids] {key}: {exc}", self.line_of("grids", key)) from None

    def func(self, key: str, cast: Callable, default):
        if key not in self.function:
            return default
        try:
            return cast(self.function[key])
        except ValueError as exc:
            raise ConfigError(f"[function] {key}: {exc}", self.line_of("function", key)) from None


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = ""
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"\s*([^#;=:\s][^=:]*?)\s*[=:]", line)
        if m and section:
            lines[(section, m.group(1).strip().lower())] = i
    return lines


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)


def parse_config(text: str, path: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=str(path or "<config>"))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line) from None
    lines = _key_lines(text)
    known = {"run", "function", "grids", "tolerances", "output", "input"}
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]",
                              next((i for i, l in enumerate(text.splitlines(), 1)
                                    if l.strip() == f"[{section}]"), None))
    if not parser.has_section("run"):
        raise ConfigError("missing [run] section")
    run = parser["run"]

    def run_int(key, default=None):
        if key not in run:
            if default is None:
                raise ConfigError(f"[run] needs '{key}'")
            return default
        try:
            return int(run[key])
        except ValueError:
            raise ConfigError(f"[run] {key} must be an integer, got {run[key]!r}",
                              lines.get(("run", key))) from None

    command = run.get("command", "").strip()
    if command not in COMMANDS:
        raise ConfigError(f"[run] command must be one of {', '.join(COMMANDS)}; got {command!r}",
                          lines.get(("run", "command")))
    n = run_int("n", 3 if command == "solve-selftest" else None)
    if not 2 <= n <= 8:
        raise ConfigError(f"[run] n must lie in [2, 8], got {n}", lines.get(("run", "n")))
    seed = run_int("seed", 0)
    threads = run_int("threads", 1)
    if threads < 1:
        raise ConfigError("[run] threads must be >= 1", lines.get(("run", "threads")))

    function = dict(parser["function"]) if parser.has_section("function") else {"kind": "zero"}
    kind = function.get("kind", "zero")
    if kind not in FUNCTIONS:
        raise ConfigError(f"[function] kind must be one of {', '.join(FUNCTIONS)}; got {kind!r}",
                          lines.get(("function", "kind")))
    function["kind"] = kind

    tolerances = dict(DEFAULT_TOLERANCES)
    if parser.has_section("tolerances"):
        for key, val in parser["tolerances"].items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"[tolerances] unknown key '{key}'", lines.get(("tolerances", key)))
            try:
                tolerances[key] = float(val)
            except ValueError:
                raise ConfigError(f"[tolerances] {key} must be a number, got {val!r}",
                                  lines.get(("tolerances", key))) from None
            if not tolerances[key] > 0:
                raise ConfigError(f"[tolerances] {key} must be positive", lines.get(("tolerances", key)))

    raw = {s: dict(parser[s]) for s in parser.sections()}
    return ExperimentConfig(
        command=command, n=n, function=function,
        grids=dict(parser["grids"]) if parser.has_section("grids") else {},
        tolerances=tolerances,
        output=dict(parser["output"]) if parser.has_section("output") else {},
        seed=seed, threads=threads, path=path, raw=raw, lines=lines,
    )


# -- test functions ---------------------------------------------------------


def smooth_bump(u, low: float, high: float) -> np.ndarray:
    """``exp(-1/((u-low)(high-u)))`` normalized to 1 at the midpoint, zero outside ``(low, high)``."""
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    inside = (u > low) & (u < high)
    mid = 0.25 * (high - low) ** 2
    ui = u[inside]
    out[inside] = np.exp(1.0 / mid - 1.0 / ((ui - low) * (high - ui)))
    return out


def build_function(cfg: ExperimentConfig) -> DecayFunction:
    kind = cfg.function["kind"]
    n = cfg.n
    if kind == "zero":
        return zero_function(n)
    width = cfg.func("width", float, 1.0)
    center = cfg.func("center", _vector, [0.0])
    center = np.resize(np.asarray(center, float), n - 1)
    order = cfg.func("decay_order", float, 12.0)
    if kind == "gaussian-bump":
        mu = cfg.func("log_height", float, -0.5)
        kappa = cfg.func("kappa", float, 1.0)

        def fn(xp, xn):
            return np.exp(-np.sum((xp - center) ** 2, -1) / width**2 - kappa * (np.log(xn) - mu) ** 2)

        return DecayFunction(fn, order, n, name="gaussian-bump")
    if kind == "vertical-bump":
        low, high = cfg.func("low", float, 0.2), cfg.func("high", float, 0.8)
        if not 0 < low < high:
            raise ConfigError("[function] need 0 < low < high", cfg.line_of("function", "low"))

        def fn(xp, xn):
            return np.exp(-np.sum((xp - center) ** 2, -1) / width**2) * smooth_bump(xn, low, high)

        return DecayFunction(fn, order, n, name="vertical-bump")
    # custom-table: a two-column CSV (height, value) giving the height profile
    table = cfg.function.get("table")
    if not table:
        raise ConfigError("[function] custom-table needs 'table = <path>'", cfg.line_of("function", "kind"))
    tpath = Path(table)
    if not tpath.is_absolute() and cfg.path is not None:
        tpath = cfg.path.parent / tpath
    try:
        rows = np.loadtxt(tpath, delimiter=",", ndmin=2)
    except OSError as exc:
        raise OSError(f"cannot read table {tpath}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[function] table {tpath}: {exc}", cfg.line_of("function", "table")) from None
    if rows.shape[1] != 2 or len(rows) < 4 or np.any(np.diff(rows[:, 0]) <= 0) or rows[0, 0] <= 0:
        raise ConfigError("[function] table needs >= 4 rows of increasing positive heights",
                          cfg.line_of("function", "table"))
    spline = CubicSpline(rows[:, 0], rows[:, 1])
    lo, hi = rows[0, 0], rows[-1, 0]

    def fn(xp, xn):
        xn = np.asarray(xn, float)
        prof = np.where((xn >= lo) & (xn <= hi), spline(np.clip(xn, lo, hi)), 0.0)
        return np.exp(-np.sum((xp - center) ** 2, -1) / width**2) * prof

    return DecayFunction(fn, order, n, name="custom-table")


def _vector(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _eta_list(text: str, n: int) -> np.ndarray:
    rows = []
    for chunk in text.split(";"):
        if chunk.strip():
            v = [float(x) for x in chunk.split(",")]
            if len(v) != n - 1:
                raise ValueError(f"frequency {chunk.strip()!r} must have {n - 1} components")
            rows.append(v)
    if not rows:
        raise ValueError("empty frequency list")
    return np.array(rows)


def quadrature_from(cfg: ExperimentConfig) -> QuadratureSpec:
    defaults = QuadratureSpec()
    cutoff = cfg.grid("plane_cutoff", float, None)
    try:
        return QuadratureSpec(
            theta_nodes=cfg.grid("theta_nodes", int, defaults.theta_nodes),
            sphere_nodes=cfg.grid("sphere_nodes", int, 32 if cfg.n <= 3 else 8),
            plane_cutoff=cutoff,
            plane_nodes=cfg.grid("plane_nodes", int, 96 if cfg.n <= 3 else 64),
            tail_tol=cfg.grid("tail_tol", float, defaults.tail_tol),
        )
    except ValueError as exc:
        raise ConfigError(f"[grids] {exc}") from None


# -- output helpers ---------------------------------------------------------


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) and not isinstance(v, bool)
                        else v for v in row])


def check(value: float, tolerance: float) -> dict:
    return {"max": float(value), "tolerance": float(tolerance), "pass": bool(value <= tolerance)}


# -- commands ---------------------------------------------------------------


def cmd_transform(cfg, q, out, threads):
    f = build_function(cfg)
    count = cfg.grid("count", int, 10)
    rng = np.random.default_rng(cfg.seed)
    tol = cfg.tolerances["transform"]
    rows, worst = [], 0.0
    for i in range(count):
        r = float(rng.uniform(0.1, 0.5))
        contact = rng.uniform(-1.0, 1.0, cfg.n - 1)
        a = transform_sphere(f, contact, r, q)
        b = transform_via_isometry(f, contact, r, q)
        rel = abs(a.value - b.value) / (abs(a.value) + 1e-12)
        worst = max(worst, rel)
        rows.append([i, ";".join(fmt(c) for c in contact), r, a.value, a.error, b.value, b.error, rel])
    write_csv(out / cfg.output.get("csv", "transform.csv"),
              ["index", "contact", "r", "sphere_value", "sphere_error", "isometry_value",
               "isometry_error", "relative_difference"], rows)
    return {"cross_check": check(worst, tol)}, {}


def _dataset_for(cfg, q, threads) -> tuple[ExteriorDataset, DecayFunction | None]:
    src = cfg.raw.get("input", {}).get("dataset")
    if src:
        p = Path(src)
        if not p.is_absolute() and cfg.path is not None:
            p = cfg.path.parent / p
        data = ExteriorDataset.load(p)
        if data.n != cfg.n:
            raise ConfigError(f"dataset has n={data.n} but config says n={cfg.n}",
                              cfg.line_of("input", "dataset"))
        # a [function] section, when present, supplies the reference slices
        return data, build_function(cfg) if "function" in cfg.raw else None
    f = build_function(cfg)
    eta = _eta_for(cfg)
    nodes = cfg.grid("s_nodes", int, 256)
    method = cfg.grids.get("method", "slices")
    if method not in ("slices", "horocycles"):
        raise ConfigError("[grids] method must be 'slices' or 'horocycles'", cfg.line_of("grids", "method"))
    return synthesize_dataset(f, eta, nodes, method=method, q=q, threads=threads), f


def _eta_for(cfg) -> np.ndarray:
    if "eta" in cfg.grids:
        try:
            return _eta_list(cfg.grids["eta"], cfg.n)
        except ValueError as exc:
            raise ConfigError(f"[grids] eta: {exc}", cfg.line_of("grids", "eta")) from None
    return default_frequencies(cfg.n)


def cmd_synthesize(cfg, q, out, threads):
    data, _ = _dataset_for(cfg, q, threads)
    data.save(out / cfg.output.get("dataset", "dataset.txt"))
    rows = []
    for k, eta in enumerate(data.eta_list):
        for j, r in enumerate(data.r_grid):
            z = data.g[k, j]
            rows.append([";".join(fmt(e) for e in eta), r, z.real, z.imag])
    write_csv(out / cfg.output.get("csv", "synthesize.csv"), ["eta", "r", "re_g", "im_g"], rows)
    return {}, {"max_abs_data": float(np.max(np.abs(data.g)))}


def cmd_reconstruct(cfg, q, out, threads):
    data, f = _dataset_for(cfg, q, threads)
    slices = reconstruct(data, threads)
    ref = reference_slices(f, data, q, threads) if f is not None else None
    rows, per_freq = [], {}
    for k, sl in enumerate(slices):
        key = ";".join(fmt(e) for e in sl.eta)
        for j, u in enumerate(sl.u_grid):
            z = sl.values[j]
            if ref is None:
                rows.append([key, u, z.real, z.imag, "", "", ""])
            else:
                zr = ref[k, j]
                rows.append([key, u, z.real, z.imag, zr.real, zr.imag, abs(z - zr)])
        if ref is not None:
            per_freq[key] = relative_linf(sl.values, ref[k])
    write_csv(out / cfg.output.get("csv", "reconstruct.csv"),
              ["eta", "u", "re_f", "im_f", "re_reference", "im_reference", "abs_error"], rows)
    checks = {}
    if ref is not None:
        key = "roundtrip" if cfg.n <= 3 else "roundtrip_reduced"
        checks["roundtrip"] = check(max(per_freq.values()), cfg.tolerances[key])
    return checks, {"relative_linf_per_frequency": per_freq,
                    "max_abs_slice": float(max(np.max(np.abs(s.values)) for s in slices))}


def cmd_verify_support(cfg, q, out, threads):
    f = build_function(cfg)
    if cfg.function["kind"] == "zero":
        delta = cfg.func("delta", float, 0.2)
    else:
        delta = cfg.func("delta", float, max(cfg.func("low", float, 1.2) - 1.0, 1e-3))
    report = verify_support(f, delta, q, tol=cfg.tolerances["slice"], data_tol=cfg.tolerances["data"],
                            eta_list=_eta_for(cfg) if "eta" in cfg.grids else None,
                            s_nodes=cfg.grid("s_nodes", int, None), threads=threads)
    rows = [[";".join(fmt(e) for e in k), v] for k, v in report.profile.items()]
    write_csv(out / cfg.output.get("csv", "verify_support.csv"), ["eta", "max_abs_slice"], rows)
    return report.checks, {"verdict": report.verdict, "delta": delta}


def selftest_cases(nodes: int) -> list[tuple[str, Callable[[], np.ndarray], str]]:
    def exp_case():
        sol = solve_second_kind(SecondKindProblem(0.0, 1.0, lambda s, t: np.ones_like(s * t),
                                                  lambda s: np.ones_like(s), nodes))
        return np.max(np.abs(sol.values - np.exp(-sol.s)))

    def sin_case():
        sol = solve_second_kind(SecondKindProblem(0.0, 1.0, lambda s, t: s - t, lambda s: s, nodes))
        return np.max(np.abs(sol.values - np.sin(sol.s)))

    def abel_case():
        sol = solve_abel(AbelProblem(0.0, 1.0, 0.5, lambda s, t: np.ones_like(s * t),
                                     lambda s: 2.0 * np.sqrt(s), nodes,
                                     G_s=lambda s, t: np.zeros_like(s * t)))
        return np.max(np.abs(sol.values - 1.0))

    return [("second_kind_exp", exp_case, "selftest_second_kind"),
            ("second_kind_sin", sin_case, "selftest_second_kind"),
            ("abel_constant", abel_case, "selftest_abel")]


def cmd_solve_selftest(cfg, q, out, threads):
    nodes = cfg.grid("nodes", int, 513)
    rows, checks = [], {}
    for name, case, tol_key in selftest_cases(nodes):
        err = float(case())
        tol = cfg.tolerances[tol_key]
        checks[name] = check(err, tol)
        rows.append([name, nodes, err, tol, "pass" if err <= tol else "fail"])
    write_csv(out / cfg.output.get("csv", "selftest.csv"),
              ["case", "nodes", "max_error", "tolerance", "status"], rows)
    return checks, {}


COMMAND_TABLE = {
    "transform": cmd_transform,
    "synthesize": cmd_synthesize,
    "reconstruct": cmd_reconstruct,
    "verify-support": cmd_verify_support,
    "solve-selftest": cmd_solve_selftest,
}


def run(cfg: ExperimentConfig, output_dir: Path, threads: int = 1) -> int:
    """Execute ``cfg``; writes the CSV and ``report.json`` into ``output_dir``."""
    report: dict[str, Any] = {
        "command": cfg.command, "n": cfg.n, "seed": cfg.seed, "threads": threads,
        "config": cfg.raw, "tolerances": cfg.tolerances,
    }
    report_path = output_dir / cfg.output.get("report", "report.json")
    started = time.perf_counter()
    status = EXIT_OK
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        q = quadrature_from(cfg)
        report["quadrature"] = {k: getattr(q, k) for k in
                                ("theta_nodes", "sphere_nodes", "plane_cutoff", "plane_nodes", "tail_tol")}
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            checks, extra = COMMAND_TABLE[cfg.command](cfg, q, output_dir, threads)
        report["warnings"] = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
        report["checks"] = checks
        report.update(extra)
        report["passed"] = all(c["pass"] for c in checks.values())
        report["partial"] = False
        if not report["passed"]:
            status = EXIT_NUMERIC
    except ConfigError:
        raise
    except (HorocycleError, FloatingPointError, np.linalg.LinAlgError) as exc:
        report.update(passed=False, partial=True, error=f"{type(exc).__name__}: {exc}")
        status = EXIT_NUMERIC
    except OSError as exc:
        report.update(passed=False, partial=True, error=f"{type(exc).__name__}: {exc}")
        status = EXIT_IO
    report["elapsed_seconds"] = round(time.perf_counter() - started, 3)
    try:
        report_path.write_text(json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n")
    except OSError as exc:
        log.error("cannot write report: %s", exc)
        return EXIT_IO
    for name, c in report.get("checks", {}).items():
        log.info("%-20s max=%.3e tol=%.1e %s", name, c["max"], c["tolerance"], "PASS" if c["pass"] else "FAIL")
    if "error" in report:
        log.error("%s", report["error"])
    return status


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def resolve_threads(flag: int | None, cfg: ExperimentConfig) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return cfg.threads


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="horocycle", description=__doc__.split("\n\n")[0])
    ap.add_argument("--config", required=True, help="INI experiment config")
    ap.add_argument("--output-dir", default=".", help="directory for CSV and report.json")
    ap.add_argument("--threads", type=int, default=None,
                    help=f"worker threads for per-frequency work (overrides ${THREADS_ENV})")
    ap.add_argument("--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
        threads = resolve_threads(args.threads, cfg)
        return run(cfg, Path(args.output_dir), threads)
    except ConfigError as exc:
        print(f"{args.config}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
