"""Command-line experiment runner.

Usage::

    sobopatch graph    --input g.txt --p 2 --k inf --kind dirichlet
    sobopatch cover    --fixture cactus --kappa 2
    sobopatch patch    --fixture chain64 --kappa 2 --p 2
    sobopatch manifold --kind schwarzschild --n 4 --gamma-core 1 --rmax 1e4
    sobopatch analyze  --fixture euclid3 --estimator sobolev
    sobopatch verify

Every subcommand accepts ``--config file.json`` (a flat object of the same
keys, underscores for dashes); flags given on the command line win.  Reports
are JSON with sorted keys and carry the seed, so identical inputs produce
byte-identical files.

Exit codes: 0 success, 1 verification failure, 2 config error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .errors import ConfigInvalid
from .fixtures import FIXTURES

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

COMMON: Dict[str, Any] = {"seed": 0, "out": "sobopatch_out", "threads": None, "plot": False}

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "graph": {"input": None, "p": 1.0, "k": math.inf, "kind": "dirichlet", "boundary": None, "starts": 32},
    "cover": {"input": None, "fixture": None, "kappa": 2.0},
    "patch": {
        "input": None,
        "fixture": None,
        "kappa": 2.0,
        "p": 2.0,
        "k": math.inf,
        "mode": "certified",
        "beta": None,
        "cross_check": True,
    },
    "manifold": {
        "kind": "schwarzschild",
        "n": 4,
        "gamma_core": 1.0,
        "c": 1.0,
        "nu": None,
        "rmax": 1e4,
        "window": None,
    },
    "analyze": {"input": None, "fixture": None, "estimator": "hardy", "p": 1.0, "n": None, "beta": 0.0, "starts": 2},
    "verify": {},
}


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def _dump(doc: dict, path: Path) -> Path:
    path.write_text(json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def _report(cfg: dict, doc: dict, path: Path) -> Path:
    doc["seed"] = cfg["seed"]
    return _dump(doc, path)


def _rel(path: Path) -> str:
    try:
        return str(path.resolve().relative_to(Path.cwd().resolve()))
    except ValueError:
        return str(path)


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def _float(name: str, v, lo: float | None = None, strict: bool = False) -> float:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{name} must be a number, got {v!r}") from None
    if math.isnan(x):
        raise ConfigInvalid(f"{name} is NaN")
    if lo is not None and (x < lo or (strict and x == lo)):
        raise ConfigInvalid(f"{name} must be {'>' if strict else '>='} {lo}, got {x}")
    return x


def _int(name: str, v, lo: int) -> int:
    try:
        x = int(v)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{name} must be an integer, got {v!r}") from None
    if x != float(v) or x < lo:
        raise ConfigInvalid(f"{name} must be an integer >= {lo}, got {v!r}")
    return x


def _choice(name: str, v, options) -> str:
    if v not in options:
        raise ConfigInvalid(f"{name} must be one of {sorted(options)}, got {v!r}")
    return v


def _existing(name: str, v) -> str:
    if not Path(v).is_file():
        raise ConfigInvalid(f"{name}: no such file {v!r}")
    return str(v)


def load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("config must be a JSON object")
    return doc


def resolve_config(command: str, file_doc: dict, flags: dict) -> dict:
    """Defaults, then the config file, then command-line flags."""
    doc = dict(file_doc)
    cmd = doc.pop("command", command)
    if cmd != command:
        raise ConfigInvalid(f"config is for {cmd!r}, not {command!r}")
    allowed = set(COMMON) | set(DEFAULTS[command])
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigInvalid(f"unknown config keys for {command}: {unknown}")
    cfg = {**COMMON, **DEFAULTS[command], **doc, **flags}
    return validate_config(command, cfg)


def validate_config(command: str, cfg: dict) -> dict:
    cfg["seed"] = _int("seed", cfg["seed"], 0)
    if cfg["threads"] is not None:
        cfg["threads"] = _int("threads", cfg["threads"], 1)
    cfg["plot"] = bool(cfg["plot"])
    cfg["out"] = str(cfg["out"])
    if "p" in cfg:
        cfg["p"] = _float("p", cfg["p"], 1.0)
    if "k" in cfg:
        cfg["k"] = _float("k", cfg["k"])
        if not cfg["k"] > cfg["p"]:
            raise ConfigInvalid(f"k must exceed p, got k={cfg['k']}, p={cfg['p']}")
    if "kappa" in cfg:
        cfg["kappa"] = _float("kappa", cfg["kappa"], 1.0, strict=True)
    if "starts" in cfg:
        cfg["starts"] = _int("starts", cfg["starts"], 1)
    if "fixture" in cfg:
        if cfg["fixture"] is None and cfg["input"] is None:
            raise ConfigInvalid("give --input or --fixture")
        if cfg["fixture"] is not None and cfg["input"] is not None:
            raise ConfigInvalid("give only one of --input and --fixture")
        if cfg["fixture"] is not None:
            _choice("fixture", cfg["fixture"], FIXTURES)
    if cfg.get("input") is not None:
        cfg["input"] = _existing("input", cfg["input"])
    if command == "graph":
        if cfg["input"] is None:
            raise ConfigInvalid("graph needs --input")
        _choice("kind", cfg["kind"], {"dirichlet", "neumann", "isoperimetric"})
        if cfg["boundary"] is not None:
            cfg["boundary"] = [_int("boundary", b, 0) for b in cfg["boundary"]]
    elif command == "patch":
        _choice("mode", cfg["mode"], {"certified", "estimate"})
        if cfg["beta"] is not None:
            cfg["beta"] = _float("beta", cfg["beta"])
        cfg["cross_check"] = bool(cfg["cross_check"])
    elif command == "manifold":
        _choice("kind", cfg["kind"], {"euclidean", "cone", "powerlaw", "schwarzschild"})
        cfg["n"] = _int("n", cfg["n"], 3)
        cfg["gamma_core"] = _float("gamma_core", cfg["gamma_core"], 0.0, strict=True)
        cfg["c"] = _float("c", cfg["c"], 0.0, strict=True)
        cfg["rmax"] = _float("rmax", cfg["rmax"], 1.0, strict=True)
        if cfg["kind"] == "powerlaw":
            if cfg["nu"] is None:
                raise ConfigInvalid("powerlaw needs --nu")
            cfg["nu"] = _float("nu", cfg["nu"], 0.0, strict=True)
        if cfg["window"] is None:
            cfg["window"] = [cfg["rmax"] / 100, cfg["rmax"]]
        w = [_float("window", x, 0.0, strict=True) for x in cfg["window"]]
        if len(w) != 2 or not w[0] < w[1] <= cfg["rmax"]:
            raise ConfigInvalid(f"window must be two radii lo < hi <= rmax, got {cfg['window']}")
        cfg["window"] = w
    elif command == "analyze":
        _choice("estimator", cfg["estimator"], {"hardy", "sobolev"})
        cfg["beta"] = _float("beta", cfg["beta"])
        if cfg["n"] is not None:
            cfg["n"] = _int("n", cfg["n"], 3)
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load_space(cfg):
    from .space import read_space

    if cfg["fixture"] is not None:
        return FIXTURES[cfg["fixture"]](), {"fixture": cfg["fixture"]}
    return read_space(cfg["input"]), {"input": Path(cfg["input"]).name}


def cmd_graph(cfg, out: Path):
    from . import discrete
    from .graph import read_graph

    g = read_graph(cfg["input"])
    if cfg["kind"] == "isoperimetric":
        rep = discrete.isoperimetric_constant(g, cfg["k"], cfg["boundary"], seed=cfg["seed"])
        doc = {"constant": rep.to_json()}
    else:
        rep = discrete.best_sobolev_constant(
            g, cfg["p"], cfg["k"], cfg["kind"], cfg["boundary"], starts=cfg["starts"], seed=cfg["seed"]
        )
        up = discrete.sobolev_upper_bound(g, cfg["p"], cfg["k"], cfg["kind"], cfg["boundary"])
        doc = {"constant": rep.to_json(), "upper_bound": up.to_json()}
    doc["graph"] = {"vertices": g.n_vertices, "edges": g.n_edges, "input": Path(cfg["input"]).name}
    return EXIT_OK, [_report(cfg, doc, out / "graph_report.json")], doc


def cmd_cover(cfg, out: Path):
    from .covering import build_annuli_covering, validate_covering

    space, src = _load_space(cfg)
    cov = build_annuli_covering(space, cfg["kappa"])
    val = validate_covering(space, cov)
    doc = {"covering": cov.to_json(), "validation": val.to_json(), "source": src}
    code = EXIT_OK if val.ok else EXIT_VERIFY
    return code, [_report(cfg, doc, out / "covering.json")], doc


def cmd_patch(cfg, out: Path):
    from .analysis import WeightSpec, mu_rho_weights
    from .patching import certify_global

    space, src = _load_space(cfg)
    lam = mu = None
    weight = None
    if cfg["beta"] is not None:
        spec = WeightSpec(space.n, cfg["beta"])
        lam, mu = mu_rho_weights(space, spec)
        weight = spec.to_json()
    cert = certify_global(
        space,
        cfg["kappa"],
        cfg["p"],
        cfg["k"],
        lam=lam,
        mu=mu,
        weight=weight,
        mode=cfg["mode"],
        cross_check=cfg["cross_check"],
        seed=cfg["seed"],
    )
    doc = {"certificate": cert.to_json(), "source": src}
    code = EXIT_VERIFY if cert.cross_check_ok is False else EXIT_OK
    return code, [_report(cfg, doc, out / "certificate.json")], doc


def _profile(cfg):
    from . import manifolds

    kind, n, rmax = cfg["kind"], cfg["n"], cfg["rmax"]
    if kind == "euclidean":
        return manifolds.euclidean_profile(n, rmax)
    if kind == "cone":
        return manifolds.cone_profile(n, cfg["c"], rmax)
    if kind == "powerlaw":
        return manifolds.powerlaw_profile(n, cfg["nu"], rmax)
    return manifolds.schwarzschild_solve(n, cfg["gamma_core"], rmax)


def cmd_manifold(cfg, out: Path):
    from . import manifolds
    from .errors import KindUnsupported
    from .plotting import render, write_xy

    prof = _profile(cfg)
    window = tuple(cfg["window"])
    V = manifolds.volume_function(prof)
    growth = manifolds.inverse_doubling_fit(V, window)
    rho = manifolds.rho_function(prof)
    files = []
    csv_path = out / "profile.csv"
    manifolds.write_profile_csv(prof, csv_path)
    files.append(csv_path)
    files.append(write_xy(out / "volume.dat", V.t, V.values, ("t", "V")))
    doc: Dict[str, Any] = {
        "profile": {"kind": prof.kind, "n": prof.n, "params": prof.params, "points": len(prof.r)},
        "window": list(window),
        "growth": growth.to_json(),
        "rho": {"monotone": rho.monotone, "worst_decrease": rho.worst_decrease},
        "provenance": {"growth": "quadrature", "rho": "quadrature"},
    }
    if prof.first_integral is not None:
        doc["first_integral_max"] = float(np.max(np.abs(prof.first_integral)))
        doc["provenance"]["first_integral_max"] = "quadrature"
    series = {"V(t)": (V.t, V.values)}
    try:
        curv = manifolds.curvature_field(prof)
    except KindUnsupported:
        curv = None
    if curv is not None:
        doc["ricci_residual_max"] = float(np.max(curv.ricci_residual))
        doc["provenance"]["ricci_residual_max"] = "formula"
        if np.any(curv.riemann_norm > 0):
            doc["decay"] = manifolds.decay_fit(curv.r, curv.riemann_norm, window).to_json()
            doc["provenance"]["decay"] = "formula"
        files.append(write_xy(out / "riemann.dat", curv.r, curv.riemann_norm, ("r", "riemannNorm")))
    if cfg["plot"]:
        files.append(render(out / "volume.png", series, "t", "V"))
        if curv is not None and np.any(curv.riemann_norm > 0):
            files.append(render(out / "riemann.png", {"|Rm|": (curv.r[1:], curv.riemann_norm[1:])}, "r", "|Rm|"))
    files.append(_report(cfg, doc, out / "manifold.json"))
    return EXIT_OK, files, doc


def cmd_analyze(cfg, out: Path):
    from . import analysis

    space, src = _load_space(cfg)
    if cfg["estimator"] == "hardy":
        wb = analysis.estimate_hardy_witness(space, cfg["p"], seed=cfg["seed"])
        extra = {}
    else:
        spec = analysis.WeightSpec(cfg["n"] or space.n, cfg["beta"])
        wb = analysis.estimate_sobolev_witness(space, spec, starts=cfg["starts"], seed=cfg["seed"])
        S, method = analysis.sobolev_upper_bound_space(space, spec)
        extra = {"upper_bound": {"value": S, "method": method, "bound_type": "upper"}}
    wpath = out / "witness.csv"
    with open(wpath, "w", encoding="utf-8") as fh:
        fh.write("index,value\n")
        for i, v in enumerate(wb.witness):
            fh.write(f"{i},{float(v)!r}\n")
    doc = {**wb.to_json(), **extra, "witnessFile": wpath.name, "estimator": cfg["estimator"], "source": src}
    return EXIT_OK, [wpath, _report(cfg, doc, out / "analysis.json")], doc


def cmd_verify(cfg, out: Path):
    from .acceptance import run_all

    results = run_all(seed=cfg["seed"])
    doc = {"criteria": [r.to_json() for r in results], "passed": all(r.passed for r in results)}
    # runtimes vary between runs; keep them out of the archived report
    for c in doc["criteria"]:
        c.pop("runtime")
    code = EXIT_OK if doc["passed"] else EXIT_VERIFY
    return code, [_report(cfg, doc, out / "verify.json")], doc


COMMANDS = {
    "graph": cmd_graph,
    "cover": cmd_cover,
    "patch": cmd_patch,
    "manifold": cmd_manifold,
    "analyze": cmd_analyze,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with the same keys as the flags")
    common.add_argument("--out", help="output directory (default sobopatch_out)")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help="cap on BLAS/OpenMP worker threads")
    common.add_argument("--plot", action="store_true", help="also render PNG figures (needs matplotlib)")

    ap = argparse.ArgumentParser(prog="sobopatch", description="Discrete Sobolev constants and patching certificates.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def space_source(p):
        p.add_argument("--input", help="space file")
        p.add_argument("--fixture", help=f"built-in fixture: {', '.join(FIXTURES)}")

    p = sub.add_parser("graph", parents=[common], argument_default=S, help="best constants of a weighted graph")
    p.add_argument("--input", help="graph file")
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=float, help="order (use inf for infinity)")
    p.add_argument("--kind", choices=["dirichlet", "neumann", "isoperimetric"])
    p.add_argument("--boundary", type=int, nargs="+")
    p.add_argument("--starts", type=int)

    p = sub.add_parser("cover", parents=[common], argument_default=S, help="build and validate a good covering")
    space_source(p)
    p.add_argument("--kappa", type=float)

    p = sub.add_parser("patch", parents=[common], argument_default=S, help="certify a global constant")
    space_source(p)
    p.add_argument("--kappa", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--mode", choices=["certified", "estimate"])
    p.add_argument("--beta", type=float, help="weight the inequality by rho (needs rho in the space)")
    p.add_argument("--no-cross-check", dest="cross_check", action="store_false")

    p = sub.add_parser("manifold", parents=[common], argument_default=S, help="radial model profiles")
    p.add_argument("--kind", choices=["euclidean", "cone", "powerlaw", "schwarzschild"])
    p.add_argument("--n", type=int)
    p.add_argument("--gamma-core", dest="gamma_core", type=float)
    p.add_argument("--c", type=float, help="cone aperture")
    p.add_argument("--nu", type=float, help="power-law exponent")
    p.add_argument("--rmax", type=float)
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("analyze", parents=[common], argument_default=S, help="witness lower bounds")
    space_source(p)
    p.add_argument("--estimator", choices=["hardy", "sobolev"])
    p.add_argument("--p", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--starts", type=int)

    sub.add_parser("verify", parents=[common], argument_default=S, help="run the acceptance suite")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = vars(ap.parse_args(argv))
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    try:
        file_doc = load_config(config_path) if config_path else {}
        cfg = resolve_config(command, file_doc, ns)
    except ConfigInvalid as exc:
        print(f"[error] config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=cfg["threads"]):
            code, files, doc = COMMANDS[command](cfg, out)
        cfg_doc = {k: v for k, v in cfg.items() if k not in ("out", "plot", "threads")}
        _dump({"command": command, "config": cfg_doc, "version": __version__}, out / f"{command}_config.json")
    except ConfigInvalid as exc:
        print(f"[error] config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # surfaced with context, never a traceback
        print(f"[error] {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for f in files:
        print(f"[ok] wrote: {_rel(Path(f))}")
    if code == EXIT_VERIFY:
        print(f"[fail] {command}: verification failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
