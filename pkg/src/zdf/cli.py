"""Command line: ``zdf sim``, ``zdf plotdata``, ``zdf precode``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .precode import build_precode, write_alist
from .sim import ConfigError, ExperimentConfig, emit_plotdata, run_experiment


def _float_list(text: str) -> list:
    return [float(x) for x in text.replace(",", " ").split()]


def _int_list(text: str) -> list:
    return [int(x) for x in text.replace(",", " ").split()]


def read_config_file(path) -> dict:
    """``key=value`` lines; keys use CLI option names (``t-a`` or ``t_a``)."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _sim_parser(sub):
    p = sub.add_parser("sim", help="run a Monte-Carlo decoding experiment")
    p.add_argument("--config", help="key=value file; command-line options take precedence")
    p.add_argument("--n", type=int, default=1000, help="number of precoded packets")
    p.add_argument("--ell", type=int, default=100, help="packet length in bits")
    p.add_argument("--alpha", type=_float_list, nargs="+", default=[[0.1]],
                   help="overheads, comma or space separated")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--algo", choices=["original", "scheduled", "both"], default="both")
    p.add_argument("--t-a", dest="t_a", default="6/alpha", help="<int>, 6/alpha or inf")
    p.add_argument("--t-b", dest="t_b", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--per-iteration", dest="per_iteration", type=_int_list, nargs="+",
                   default=[], help="trial ids whose per-iteration counts are dumped")
    p.add_argument("--omega", default="zdf-paper-omega", help="preset name or degree:prob file")
    p.add_argument("--delta", default="zdf-paper-delta", help="preset name or shift:prob file")
    p.add_argument("--benchmark", action="store_true", help="force one worker for timing")
    p.add_argument("--out", default="results")
    return p


_CONVERTERS = {
    "n": int, "ell": int, "trials": int, "t_b": int, "seed": int, "workers": int,
    "alpha": lambda v: [_float_list(v)], "per_iteration": lambda v: [_int_list(v)],
    "benchmark": lambda v: v.lower() in ("1", "true", "yes", "on"),
}


def _flatten(nested) -> list:
    return [x for part in nested for x in part]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="zdf", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sim = _sim_parser(sub)

    pd = sub.add_parser("plotdata", help="turn a result CSV into gnuplot columns")
    pd.add_argument("csv")
    pd.add_argument("--out", default=None)

    pc = sub.add_parser("precode", help="build a (3,30)-regular precode and write it as alist")
    pc.add_argument("--n", type=int, required=True)
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "sim":
            if args.config:
                defaults = read_config_file(args.config)
                unknown = set(defaults) - set(_CONVERTERS) - {
                    "algo", "t_a", "omega", "delta", "out"}
                if unknown:
                    raise ConfigError(f"unknown config keys: {sorted(unknown)}")
                sim.set_defaults(**{k: _CONVERTERS.get(k, str)(v) for k, v in defaults.items()})
                args = parser.parse_args(argv)
            cfg = ExperimentConfig(
                n=args.n, ell=args.ell, alphas=_flatten(args.alpha), trials=args.trials,
                algo=args.algo, t_a=args.t_a, t_b=args.t_b, seed=args.seed,
                workers=args.workers, per_iteration=_flatten(args.per_iteration),
                omega=args.omega, delta=args.delta, out=args.out, benchmark=args.benchmark)
            written = run_experiment(cfg)
            for path in written["aggregate"]:
                print(path.read_text(), end="")
        elif args.command == "plotdata":
            for path in emit_plotdata(args.csv, args.out):
                print(path)
        elif args.command == "precode":
            H, _, used = build_precode(args.n, args.seed)
            write_alist(H, args.out)
            print(f"n={H.n} m={H.m} seed={used} -> {args.out}")
    except (ConfigError, ValueError, OSError) as err:
        print(f"zdf: error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
