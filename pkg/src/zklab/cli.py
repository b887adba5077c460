"""Command line interface: ``zklab <subcommand> [flags]``.

Exit codes: ``0`` success, ``2`` invalid configuration or flags, ``3`` the
run completed but some rows were flagged (degenerate inputs or blow-up).
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

from . import __version__, config, runner
from .config import ConfigError
from .errors import ContractViolation

EXIT_OK, EXIT_INVALID, EXIT_FLAGGED = 0, 2, 3

# subcommand -> (config section, {flag dest: config key})
_FAMILY = {
    "simulate": ("simulate", {"k": "k", "sign": "sign", "dt": "dt", "T": "T",
                              "stride": "stride", "amplitude": "amplitude", "band": "band",
                              "datum": "datum"}),
    "l4": ("estimates", {"estimates": "ids", "Ns": "N", "samples": "samples", "s": "s",
                         "b": "b", "eps": "eps", "p": "p", "alpha": "alpha",
                         "time_oversample": "time_oversample"}),
    "measure": ("measure", {"variant": "variant", "eps": "eps", "family": "family",
                            "K": "K", "Ns": "N", "per_N": "per_N", "alpha": "alpha",
                            "mc_samples": "mc_samples"}),
    "counterexample": ("counterexample", {"s": "s", "b": "b", "Ns": "N", "l4": "l4"}),
    "resonance": ("resonance", {"samples": "samples", "Ns": "N"}),
    "identities": ("identities", {"samples": "samples", "bound": "bound", "den": "den"}),
    "multilinear": ("multilinear", {"k": "k", "s": "s", "eps": "eps", "Ns": "N",
                                    "samples": "samples"}),
}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("common")
    g.add_argument("--config", help="INI or JSON experiment file")
    g.add_argument("--out", help="output directory (ZKLAB_OUT overrides)")
    g.add_argument("--seed", type=int, help="master seed (default: config, else 0)")
    g.add_argument("--workers", type=int, help="worker processes")
    g.add_argument("--grid", metavar="Nx,Ny,Nt,Lx,Tw", help="solver grid")
    g.add_argument("--plots", action="store_true", default=None,
                   help="render PNG figures from the CSVs (needs matplotlib)")
    return p


def _lst(help_):
    return {"default": None, "metavar": "LIST", "help": help_ + " (comma list; a..b = dyadic range)"}


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="zklab", description=__doc__.splitlines()[0],
                                 formatter_class=argparse.RawDescriptionHelpFormatter,
                                 epilog="Exit codes: 0 ok, 2 invalid input, 3 flagged rows.")
    ap.add_argument("--version", action="version", version=f"zklab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sub.add_parser("run", parents=[common], help="run every family of a config file")

    p = sub.add_parser("simulate", parents=[common], help="nonlinear solver with drift report")
    p.add_argument("--k", **_lst("nonlinearity degrees"))
    p.add_argument("--sign", **_lst("nonlinearity signs (+1/-1)"))
    p.add_argument("--dt", default=None)
    p.add_argument("--T", default=None)
    p.add_argument("--stride", default=None)
    p.add_argument("--amplitude", default=None, help="L2 norm of the datum")
    p.add_argument("--band", default=None, help="frequency band of the random datum")
    p.add_argument("--datum", default=None, choices=config.DATA, help="initial datum")

    p = sub.add_parser("l4", parents=[common], help="quotient sweeps of the linear and unary estimates")
    p.add_argument("--estimates", **_lst("estimate ids (default L4-main)"))
    p.add_argument("--Ns", **_lst("dyadic shells"))
    p.add_argument("--samples", default=None)
    p.add_argument("--s", **_lst("rhs Sobolev exponents, 'default' for the estimate's own"))
    p.add_argument("--b", **_lst("modulation exponents"))
    p.add_argument("--eps", **_lst("epsilon values"))
    p.add_argument("--p", **_lst("Lebesgue exponents of the Lp families"))
    p.add_argument("--alpha", **_lst("refinement exponents"))
    p.add_argument("--time-oversample", dest="time_oversample", default=None)

    p = sub.add_parser("measure", parents=[common], help="level-set measure scans")
    p.add_argument("--variant", **_lst("lin and/or alpha"))
    p.add_argument("--eps", **_lst("epsilon values"))
    p.add_argument("--family", default=None, choices=config.MEASURE_FAMILIES)
    p.add_argument("--K", **_lst("window sizes"))
    p.add_argument("--Ns", **_lst("dyadic shells"))
    p.add_argument("--per-N", dest="per_N", default=None)
    p.add_argument("--alpha", **_lst("alpha values of the alpha variant"))
    p.add_argument("--mc-samples", dest="mc_samples", default=None)

    p = sub.add_parser("counterexample", parents=[common], help="norms of the counterexample sequence")
    p.add_argument("--s", **_lst("Sobolev exponents"))
    p.add_argument("--b", **_lst("modulation exponents"))
    p.add_argument("--Ns", **_lst("shells"))
    p.add_argument("--no-l4", dest="l4", action="store_const", const="false", default=None)

    p = sub.add_parser("resonance", parents=[common], help="exact resonance factorizations")
    p.add_argument("--samples", default=None)
    p.add_argument("--Ns", **_lst("frequency bounds"))

    p = sub.add_parser("identities", parents=[common], help="exact algebraic identities")
    p.add_argument("--samples", default=None)
    p.add_argument("--bound", default=None)
    p.add_argument("--den", default=None)

    p = sub.add_parser("multilinear", parents=[common], help="multilinear quotient sweeps")
    p.add_argument("--k", **_lst("degrees"))
    p.add_argument("--s", **_lst("regularities"))
    p.add_argument("--eps", **_lst("epsilon values"))
    p.add_argument("--Ns", **_lst("dyadic shells"))
    p.add_argument("--samples", default=None)

    sub.add_parser("report", parents=[common], help="sweep summary (and plots) from existing CSVs")
    return ap


def _config_dict(args) -> dict:
    if args.config:
        d = config.load(args.config).to_dict()
    else:
        if args.command == "run":
            raise ConfigError("--config", "run needs a config file")
        d = {"run": {"seed": 0}}
        if args.command == "l4":
            d["estimates"] = {"ids": "L4-main"}
    run = d.setdefault("run", {})
    for key in ("seed", "workers", "out", "plots"):
        v = getattr(args, key, None)
        if v is not None:
            run[key] = v
    if args.grid:
        parts = args.grid.split(",")
        if len(parts) != 5:
            raise ConfigError("--grid", "expected Nx,Ny,Nt,Lx,Tw")
        d["grid"] = dict(zip(("Nx", "Ny", "Nt", "Lx", "Tw"), parts))
    if args.command in _FAMILY:
        section, keys = _FAMILY[args.command]
        sec = d.setdefault(section, {})
        for dest, key in keys.items():
            v = getattr(args, dest, None)
            if v is not None:
                sec[key] = v
    return d


def _out_dir(cfg, args) -> Path:
    env = os.environ.get("ZKLAB_OUT")
    return Path(env) if env else Path(cfg.out)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = config.from_dict(_config_dict(args))
        out = _out_dir(cfg, args)
        if args.command == "report":
            out.mkdir(parents=True, exist_ok=True)
            t0 = time.perf_counter()
            res = runner.run_report(out, plots=cfg.plots, seed=cfg.seed)
            for line in res.lines:
                print(f"[report] {line}")
            runner.write_manifest(out, cfg, [res], time.perf_counter() - t0, "report")
            return EXIT_OK
        families = None if args.command == "run" else [_FAMILY[args.command][0]]
        results = runner.run(cfg, out, families, command=args.command)
    except ConfigError as exc:
        print(f"zklab: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ContractViolation as exc:
        print(f"zklab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    flagged = sum(r.flagged for r in results)
    print(f"wrote {sum(len(r.csvs) for r in results)} CSV file(s) to {out}")
    if flagged:
        print(f"zklab: {flagged} row(s) flagged (degenerate input or blow-up)", file=sys.stderr)
        return EXIT_FLAGGED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
