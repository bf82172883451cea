"""Command-line entry point: ``almostdiag <group> <action> [flags]``.

Every run writes one JSON report (to ``--out`` or stdout) that embeds the
resolved configuration, the tool version and the catalog metadata used.
Arrays go beside the report as ``<stem>.<name>.arr.json`` / ``.bin`` and
plot data as ``<stem>.<name>.csv``.

Exit codes: 0 success, 2 certification failure, 1 usage or IO error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .amalgam import CellCover, verify_wiener_convolution, wiener_norm
from .arrays import emit_plotdata, header_path, read_array, read_header, write_array
from .catalog import SymbolEntry, load_symbol, load_window, symbol as catalog_symbol, window as catalog_window
from .diag import (
    REL_FLOOR,
    FLOOR,
    decay_pipeline,
    envelope,
    fit_decay,
    mtilde_membership,
    verify_equivalence,
)
from .errors import AllBelowFloor, AlmostDiagError, InsufficientData, NotAFrame, NotIntegrable
from .frames import Lattice, dual_window, frame_bounds, frame_trend, gabor_coefficients, gaussian_decay_fit, reconstruct
from .hmetric import MetricSpec, check_metric_admissible, default_pairs, hm_diag_check, sg_seminorm
from .seqspace import LatticeSeq, seq_convolve, seq_norm, verify_convolution_inequality
from .tfcore import Grid, SampledSignal, SymbolGrid
from .weights import WeightParams, check_moderate, check_submultiplicative, check_subconvolutive
from .weyl import gabor_matrix, magic_formula_check, magic_pair_values, random_pairs, weak_form_check, weyl_apply, weyl_kernel

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

COMMANDS = {
    "weights": ("check",),
    "seq": ("norm", "convolve", "verify"),
    "amalgam": ("norm", "verify"),
    "frame": ("bounds", "dual", "reconstruct"),
    "weyl": ("apply", "kernel", "gabor-matrix", "magic-check"),
    "diag": ("envelope", "fit", "membership", "verify"),
    "hm": ("check-metric", "diag-check", "seminorm"),
}

# config key -> (flag, type)
FIELDS = {
    "N": ("--N", int),
    "delta": ("--delta", float),
    "a": ("--a", int),
    "b": ("--b", int),
    "window": ("--window", str),
    "symbol": ("--symbol", str),
    "r": ("--r", float),
    "s": ("--s", float),
    "metric": ("--metric", str),
    "M": ("--M", str),
    "N_power": ("--N-power", float),
    "k": ("--k", int),
    "in": ("--in", str),
    "in2": ("--in2", str),
    "alpha": ("--alpha", float),
    "beta": ("--beta", float),
    "kind": ("--kind", str),
    "params": ("--params", str),
    "vparams": ("--vparams", str),
    "box": ("--box", float),
    "n": ("--n", int),
    "pairs": ("--pairs", int),
    "seed": ("--seed", int),
    "dual": ("--dual", bool),
    "out": ("--out", str),
}

DEFAULTS = {"N": 128, "a": 8, "b": 8, "window": "gaussian", "metric": "euclidean", "M": "one", "k": 2, "pairs": 100}


class UsageError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("argv", message)


@dataclass
class RunConfig:
    """Resolved command and parameters; ``sources`` remembers where each came from."""

    command: tuple[str, str]
    values: dict
    sources: dict = field(default_factory=dict)

    def get(self, key, default=None):
        v = self.values.get(key)
        return default if v is None else v

    def where(self, key) -> str:
        return self.sources.get(key, FIELDS[key][0] if key in FIELDS else key)

    def require(self, key):
        v = self.values.get(key)
        if v is None:
            raise UsageError(FIELDS[key][0], f"required for {' '.join(self.command)}")
        return v

    def to_dict(self) -> dict:
        d = {k: v for k, v in sorted(self.values.items()) if v is not None and k != "out"}
        d["command"] = " ".join(self.command)
        return d


# -- parsing -------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="almostdiag", allow_abbrev=False, description="Time-frequency almost-diagonalization toolkit.")
    p.add_argument("--version", action="version", version=f"almostdiag {__version__}")
    p.add_argument("--config", help="JSON file with a 'command' and any of the flags below")
    p.add_argument("group", nargs="?", choices=sorted(COMMANDS))
    p.add_argument("action", nargs="?")
    for key, (flag, typ) in FIELDS.items():
        if typ is bool:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=key, type=typ, default=None)
    return p


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError("config", f"{p} is not valid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise UsageError("config", "top level must be an object")
    return data


def parse_config(argv: list[str]) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    cfg = _load_config(ns.config) if ns.config else {}
    values, sources = {}, {}
    for key, val in cfg.items():
        if key == "command":
            continue
        if key not in FIELDS:
            raise UsageError(f"config.{key}", "unknown field")
        typ = FIELDS[key][1]
        try:
            values[key] = typ(val) if val is not None else None
        except (TypeError, ValueError):
            raise UsageError(f"config.{key}", f"expected {typ.__name__}, got {val!r}") from None
        sources[key] = f"config.{key}"
    for key, (flag, _) in FIELDS.items():
        v = getattr(ns, key)
        if v is not None:
            values[key], sources[key] = v, flag
    group, action = ns.group, ns.action
    if group is None:
        cmd = cfg.get("command")
        if not cmd:
            raise UsageError("command", "give a command on the command line or as config.command")
        parts = str(cmd).split()
        if len(parts) != 2:
            raise UsageError("config.command", f"expected '<group> <action>', got {cmd!r}")
        group, action = parts
    if group not in COMMANDS:
        raise UsageError("command", f"unknown group {group!r}; choose from {sorted(COMMANDS)}")
    if action not in COMMANDS[group]:
        raise UsageError("command", f"{group} takes one of {list(COMMANDS[group])}, got {action!r}")
    for key, v in DEFAULTS.items():
        values.setdefault(key, v)
    return RunConfig((group, action), values, sources)


# -- shared builders -----------------------------------------------------------


def _grid(cfg: RunConfig) -> Grid:
    N = cfg.get("N")
    if N <= 0 or N % 2:
        raise UsageError(cfg.where("N"), f"must be a positive even integer, got {N}")
    delta = cfg.get("delta", 1.0 / math.sqrt(N))
    if delta <= 0:
        raise UsageError(cfg.where("delta"), f"must be positive, got {delta}")
    return Grid(N, delta)


def _lattice(cfg: RunConfig, grid: Grid) -> Lattice:
    a, b = cfg.get("a"), cfg.get("b")
    for key, v in (("a", a), ("b", b)):
        if v <= 0 or grid.N % v:
            raise UsageError(cfg.where(key), f"must be a positive divisor of N={grid.N}, got {v}")
    return Lattice(grid, a, b)


def _weight(cfg: RunConfig, key: str) -> WeightParams:
    try:
        return WeightParams.parse(cfg.require(key))
    except ValueError as exc:
        raise UsageError(cfg.where(key), str(exc)) from None


def _window_source(cfg: RunConfig):
    """``grid -> SampledSignal`` for catalog windows (needed when grids are refined)."""
    spec = cfg.get("window")
    if spec.startswith("file:"):
        raise UsageError(cfg.where("window"), "this command refines the grid and needs a catalog window")
    entry = catalog_window(spec)
    return entry.sample, entry.metadata()


def _symbol_entry(cfg: RunConfig) -> SymbolEntry:
    spec = cfg.require("symbol")
    if spec.startswith("file:"):
        raise UsageError(cfg.where("symbol"), "this command needs a catalog symbol with analytic metadata")
    return catalog_symbol(spec)


def _rng(cfg: RunConfig) -> np.random.Generator:
    seed = cfg.values.get("seed")
    if seed is None:
        raise UsageError("--seed", "randomized checks need an explicit seed")
    return np.random.default_rng(seed)


def _input_path(cfg: RunConfig, key: str) -> Path:
    p = Path(cfg.require(key))
    if not p.exists() and not header_path(p).exists():
        raise FileNotFoundError(f"input file not found: {p}")
    return p


def _read_seq(cfg: RunConfig, key: str) -> LatticeSeq:
    p = _input_path(cfg, key)
    try:
        return LatticeSeq.from_json(json.loads(p.read_text()))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(cfg.where(key), f"{p} is not a sequence file ({exc})") from None


def _read_phase_array(cfg: RunConfig, key: str) -> SymbolGrid:
    """2-D array; axes from header keys ``x0, dx, xi0, dxi`` or a centred square grid."""
    p = _input_path(cfg, key)
    data = read_array(p)
    if data.ndim != 2:
        raise UsageError(cfg.where(key), f"{p} holds shape {list(data.shape)}, expected a 2-D array")
    head = read_header(p)
    n1, n2 = data.shape
    d = 1.0 / math.sqrt(n1)
    dx, dxi = head.get("dx", d), head.get("dxi", d)
    x0, xi0 = head.get("x0", -(n1 // 2) * dx), head.get("xi0", -(n2 // 2) * dxi)
    return SymbolGrid(x0 + dx * np.arange(n1), xi0 + dxi * np.arange(n2), data)


def _signal(cfg: RunConfig, grid: Grid, fallback: SampledSignal | None = None) -> tuple[SampledSignal, dict]:
    if cfg.values.get("in") is not None:
        p = _input_path(cfg, "in")
        data = read_array(p).reshape(-1)
        if data.size != grid.N:
            raise UsageError(cfg.where("in"), f"{p} has {data.size} samples, grid has {grid.N}")
        return SampledSignal(grid, data.astype(complex)), {"source": str(p)}
    if fallback is not None:
        return fallback, {"source": "window"}
    rng = _rng(cfg)
    v = rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N)
    return SampledSignal(grid, v), {"source": "random", "seed": cfg.values["seed"]}


# -- commands ------------------------------------------------------------------


@dataclass
class Outcome:
    result: dict
    ok: bool = True
    catalog: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict)
    plot: dict = field(default_factory=dict)
    seqs: dict = field(default_factory=dict)


def cmd_weights_check(cfg: RunConfig) -> Outcome:
    kind = cfg.require("kind")
    p = _weight(cfg, "params")
    box = cfg.get("box", 12.0)
    if kind == "sub":
        rep = check_submultiplicative(p, box, cfg.get("n", 481))
    elif kind == "moderate":
        rep = check_moderate(p, _weight(cfg, "vparams"), box, cfg.get("n", 481))
    elif kind == "subconv":
        grid = None
        if cfg.values.get("n") is not None or cfg.values.get("box") is not None:
            n = cfg.get("n", 16384)
            grid = Grid(n + n % 2, 2 * cfg.get("box", 2048.0) / (n + n % 2))
        try:
            rep = check_subconvolutive(p, grid)
        except NotIntegrable as exc:
            return Outcome({"kind": "subconvolutive", "holds": False, "error": str(exc)}, ok=False)
    else:
        raise UsageError(cfg.where("kind"), f"expected sub, subconv or moderate, got {kind!r}")
    return Outcome(rep.to_dict(), ok=rep.holds)


def cmd_seq(cfg: RunConfig) -> Outcome:
    action = cfg.command[1]
    a = _read_seq(cfg, "in")
    if action == "norm":
        return Outcome({"norm": seq_norm(a, cfg.require("r"), cfg.require("s")), "support": len(a.entries)})
    b = _read_seq(cfg, "in2")
    if action == "convolve":
        c = seq_convolve(a, b)
        return Outcome({"support": len(c.entries)}, seqs={"convolution": c.to_json()})
    rep = verify_convolution_inequality(a, b, cfg.require("r"), cfg.require("s"))
    return Outcome(rep, ok=rep["holds"])


def cmd_amalgam(cfg: RunConfig) -> Outcome:
    F = _read_phase_array(cfg, "in")
    cover = CellCover(cfg.require("alpha"), cfg.require("beta"))
    r, s = cfg.require("r"), cfg.require("s")
    if cfg.command[1] == "norm":
        return Outcome({"norm": wiener_norm(F, cover, r, s), "cells": list(cover.spacing)})
    G = _read_phase_array(cfg, "in2")
    rep = verify_wiener_convolution(F, G, cover, r, s)
    return Outcome(rep, ok=rep["holds"])


def cmd_frame(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    lat = _lattice(cfg, grid)
    spec = cfg.get("window")
    g, meta = load_window(spec, grid)
    action = cfg.command[1]
    if action == "bounds":
        fb = frame_bounds(g, lat)
        res = {"lattice": lat.to_dict(), "bounds": fb.to_dict()}
        if not spec.startswith("file:"):
            res.update(frame_trend(catalog_window(spec).sample, lat))
        return Outcome(res, catalog={"window": meta})
    try:
        gamma = dual_window(g, lat)
    except NotAFrame as exc:
        return Outcome({"lattice": lat.to_dict(), "is_frame": False, "error": str(exc)}, ok=False,
                       catalog={"window": meta})
    from .frames import dual_residual

    res = {"lattice": lat.to_dict(), "dual_residual": dual_residual(g, gamma, lat)}
    if action == "dual":
        res["decay"] = gaussian_decay_fit(gamma)
        return Outcome(res, catalog={"window": meta}, arrays={"dual": (gamma.samples, {"lattice": lat.to_dict()})})
    f, src = _signal(cfg, grid)
    back = reconstruct(gabor_coefficients(f, g, lat), gamma, lat)
    err = (back - f).norm() / f.norm()
    res.update(signal=src, relative_error=err)
    return Outcome(res, ok=err <= 1e-8, catalog={"window": meta}, arrays={"reconstructed": (back.samples, {})})


def cmd_weyl(cfg: RunConfig) -> Outcome:
    grid = _grid(cfg)
    a, smeta, _ = load_symbol(cfg.require("symbol"), grid)
    g, wmeta = load_window(cfg.get("window"), grid)
    cat = {"symbol": smeta, "window": wmeta}
    action = cfg.command[1]
    if action == "kernel":
        K = weyl_kernel(a)
        return Outcome({"shape": list(K.shape)}, catalog=cat, arrays={"kernel": (K, {"N": grid.N, "delta": grid.delta})})
    if action == "apply":
        f, src = _signal(cfg, grid, fallback=g)
        out = weyl_apply(a, f)
        res = {"signal": src, "output_norm": out.norm(), "weak_form_deviation": weak_form_check(a, f, g)}
        return Outcome(res, catalog=cat, arrays={"applied": (out.samples, {"N": grid.N, "delta": grid.delta})})
    if action == "gabor-matrix":
        lat = _lattice(cfg, grid)
        M = gabor_matrix(a, g, lat, window_id=wmeta["id"], symbol_id=smeta["id"])
        res = {"lattice": lat.to_dict(), "shape": list(M.entries.shape), "hermitian_defect": M.hermitian_defect()}
        meta = {"lattice": lat.to_dict(), "index_order": "time index outermost"}
        return Outcome(res, catalog=cat, arrays={"gabor": (M.entries, meta)})
    rng = _rng(cfg)
    pairs = random_pairs(grid, cfg.get("pairs"), rng)
    lhs, rhs = magic_pair_values(a, g, pairs)
    score = magic_formula_check(a, g, pairs)
    res = {
        "pairs": len(pairs),
        "max_abs_deviation": float(np.max(np.abs(lhs - rhs))) if len(pairs) else 0.0,
        "max_scaled_deviation": score,
        "tolerance": {"rel": 1e-6, "floor": 1e-12},
        "holds": bool(score <= 1.0),
    }
    return Outcome(res, ok=res["holds"], catalog=cat)


def _envelope_payload(env, fit=None) -> dict:
    order = np.argsort(env.radii, kind="stable")
    d = {"radius": env.radii[order].tolist(), "H": env.H[order].tolist()}
    if fit is not None:
        d["fit"] = fit
    return d


def cmd_diag(cfg: RunConfig) -> Outcome:
    action = cfg.command[1]
    grid = _grid(cfg)
    if action in ("envelope", "fit"):
        lat = _lattice(cfg, grid)
        a, smeta, entry = load_symbol(cfg.get("symbol", "constant"), grid)
        g, wmeta = load_window(cfg.get("window"), grid)
        cat = {"symbol": smeta, "window": wmeta}
        M = gabor_matrix(a, g, lat)
        env = envelope(M, inner=0.5)
        res = {"lattice": lat.to_dict(), "points": int(env.H.size), "max_H": float(env.H.max())}
        if action == "envelope":
            payload = _envelope_payload(env)
            return Outcome(dict(res, envelope=payload), catalog=cat, plot={"envelope": payload})
        s = cfg.get("s", entry.s_known if entry is not None and entry.gevrey else None)
        if s is None:
            raise UsageError("--s", "required for symbols without a known Gevrey order")
        floor = max(FLOOR, REL_FLOOR * float(env.H.max()))
        try:
            fit = fit_decay(env, s, floor=floor).to_dict()
        except (InsufficientData, AllBelowFloor) as exc:
            return Outcome(dict(res, fit=None, certified=False, error=str(exc)), ok=False, catalog=cat)
        payload = _envelope_payload(env, fit)
        res.update(fit=fit, floor=floor, certified=fit["certified"], envelope=payload)
        return Outcome(res, ok=fit["certified"], catalog=cat, plot={"envelope": payload})
    entry = _symbol_entry(cfg)
    g_src, wmeta = _window_source(cfg)
    cat = {"symbol": entry.metadata(), "window": wmeta}
    if action == "membership":
        if not np.isclose(grid.delta**2 * grid.N, 1.0):
            raise UsageError(cfg.where("delta"), "membership needs a square grid (delta = 1/sqrt(N))")
        s = cfg.get("s", entry.s_known)
        if s is None:
            raise UsageError("--s", f"required for {entry.id}")
        rep = mtilde_membership(entry, g_src, cfg.require("r"), s, grid)
        return Outcome(rep, ok=not rep["grows_with_box"], catalog=cat)
    lat = _lattice(cfg, grid)
    s = cfg.get("s", entry.s_known)
    if s is None:
        raise UsageError("--s", f"required for {entry.id}")
    m = WeightParams.parse(cfg.get("M")) if cfg.sources.get("M") else None
    if entry.gevrey and entry.s_known <= s + 1e-12:
        rep = verify_equivalence(entry, g_src, lat, s, m, use_dual=bool(cfg.get("dual", False)))
        rep["hypothesis"] = "analytic Gevrey bound from the catalog"
    else:
        rep = decay_pipeline(entry, g_src, lat, s, m, use_dual=bool(cfg.get("dual", False)))
        rep["hypothesis"] = "none available; pipeline run as a negative control"
    return Outcome(rep, ok=rep["certified"], catalog=cat)


def cmd_hm(cfg: RunConfig) -> Outcome:
    M = _weight(cfg, "M")
    spec = MetricSpec.parse(cfg.get("metric"), M)
    action = cfg.command[1]
    if action == "check-metric":
        rep = check_metric_admissible(spec)
        ok = all(rep[k]["holds"] for k in ("slow_variation", "temperance", "uncertainty"))
        ok = ok and rep.get("weight", {"holds": True})["holds"]
        return Outcome(rep, ok=ok)
    entry = _symbol_entry(cfg)
    if action == "seminorm":
        rep = sg_seminorm(entry, spec, cfg.get("k"))
        return Outcome(rep, ok=not rep["grows_with_box"], catalog={"symbol": entry.metadata()})
    grid = _grid(cfg)
    chi = catalog_window(cfg.get("window"))
    if not np.isclose(grid.delta**2 * grid.N, 1.0):
        raise UsageError(cfg.where("delta"), "diag-check needs a square grid (delta = 1/sqrt(N))")
    step = grid.delta * max(1, round(1.0 / grid.delta))  # grid-aligned spacing near 1
    pairs = default_pairs(grid, step)
    rep = hm_diag_check(entry, chi, spec, cfg.require("N_power"), grid, pairs)
    return Outcome(rep, ok=rep["stable"], catalog={"symbol": entry.metadata(), "window": chi.metadata()})


HANDLERS = {
    "weights": cmd_weights_check,
    "seq": cmd_seq,
    "amalgam": cmd_amalgam,
    "frame": cmd_frame,
    "weyl": cmd_weyl,
    "diag": cmd_diag,
    "hm": cmd_hm,
}


# -- reports -------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(obj.real), _jsonable(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"


def run(cfg: RunConfig) -> int:
    """Dispatch, write the report and side files, return the exit code."""
    outcome = HANDLERS[cfg.command[0]](cfg)
    code = EXIT_OK if outcome.ok else EXIT_FAIL
    out = cfg.values.get("out")
    files = []
    if out:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        stem = out.with_name(out.name[: -len(out.suffix)] if out.suffix else out.name)
        for name, (values, meta) in sorted(outcome.arrays.items()):
            files.append(write_array(stem.with_name(f"{stem.name}.{name}"), values, meta).name)
        for name, seq in sorted(outcome.seqs.items()):
            p = stem.with_name(f"{stem.name}.{name}.json")
            p.write_text(dumps(seq))
            files.append(p.name)
        if outcome.plot:
            files += [p.name for p in emit_plotdata(outcome.plot, stem)]
    report = {
        "tool": "almostdiag",
        "version": __version__,
        "command": " ".join(cfg.command),
        "config": cfg.to_dict(),
        "catalog": outcome.catalog,
        "result": outcome.result,
        "status": "ok" if outcome.ok else "certification-failed",
        "exit_code": code,
        "files": files,
    }
    text = dumps(report)
    if out:
        out.write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except UsageError as exc:
        print(f"almostdiag: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"almostdiag: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AlmostDiagError, ValueError, OSError) as exc:
        print(f"almostdiag: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
