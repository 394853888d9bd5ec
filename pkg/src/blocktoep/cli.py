"""Command line: ``python -m blocktoep {run,list,spectrum,check}``."""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import analysis as an
from .krylov import KrylovConfig, load_config
from .presets import get_preset, list_presets
from .runner import compute_spectrum, output_dir, render_table, run_experiment


def _etas(text):
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eta list {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("eta values must be positive integers")
    return vals


def _parser():
    ap = argparse.ArgumentParser(prog="blocktoep", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a preset and write its table")
    r.add_argument("preset")
    r.add_argument("--eta", type=_etas, default=None, help="comma separated, e.g. 100,200,500")
    r.add_argument("--out", default=None, help="output directory (default $BLOCKTOEP_OUT or ./results)")
    r.add_argument("--format", choices=("csv", "json", "markdown"), default="csv")
    r.add_argument("--config", default=None, help="solver config JSON")
    r.add_argument("--absolute", action="store_true", help="stop on ||r|| < tol instead of ||r|| <= tol ||b||")
    r.add_argument("--no-solve", action="store_true", help="analysis columns only")
    r.add_argument("--coupling", choices=("fast_n", "fast_2n"), default=None,
                   help="coupling block layout for ex3")

    sub.add_parser("list", help="list presets")

    s = sub.add_parser("spectrum", help="dump a sorted spectrum")
    s.add_argument("preset")
    s.add_argument("--eta", type=int, required=True)
    s.add_argument("--what", choices=("A", "precond", "diff"), default="precond")
    s.add_argument("--out", default=None)

    c = sub.add_parser("check", help="run the property checks")
    c.add_argument("names", nargs="*", help="subset of checks (default all)")
    return ap


def _cmd_run(a):
    preset = get_preset(a.preset)
    cfg = load_config(a.config) if a.config else KrylovConfig()
    if a.absolute:
        cfg = KrylovConfig(cfg.tol, cfg.maxit, cfg.restart, "absolute")
    out = a.out or output_dir()
    kw = {}
    if a.coupling:
        if preset.name != "ex3":
            raise SystemExit("--coupling only applies to ex3")
        kw["coupling"] = a.coupling
    table = run_experiment(preset, a.eta, out, cfg, a.format, solvers=not a.no_solve, **kw)
    sys.stdout.write(render_table(table, "markdown"))
    return 2 if table.failed else 0


def _cmd_list(_):
    for name, desc, rule in list_presets():
        print(f"{name:8s}  {rule:28s}  {desc}")
    return 0


def _cmd_spectrum(a):
    preset = get_preset(a.preset)
    prob = preset.build(a.eta)
    mode = "singular" if a.what == "diff" else preset.cluster_mode
    rep = compute_spectrum(prob, a.what, mode)
    out = a.out or output_dir()
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{preset.name}_{a.eta}_{a.what}.csv")
    an.export_spectrum(rep, path)
    v = rep.values
    print(f"{rep.kind}: {len(v)} values, min |.| {np.min(np.abs(v)):.3e}, max |.| {np.max(np.abs(v)):.3e} -> {path}")
    return 0


def _cmd_check(a):
    from .checks import ALL_CHECKS, run_checks
    unknown = [n for n in a.names if n not in ALL_CHECKS]
    if unknown:
        raise SystemExit(f"unknown checks {unknown}; known: {', '.join(ALL_CHECKS)}")
    results = run_checks(a.names or None)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 2


def main(argv=None):
    a = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return {"run": _cmd_run, "list": _cmd_list, "spectrum": _cmd_spectrum, "check": _cmd_check}[a.cmd](a)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
