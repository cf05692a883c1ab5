"""Command line entry point.

Exit codes: 0 success, 1 usage or input error, 2 a verification failed.
Every artifact carries the tool version, the merged config, the seed and
the command line, and nothing time-dependent, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction

from . import __version__
from . import asymptotics as asy
from . import exact_enum as ee
from . import montecarlo as mc
from .decompose import decompose
from .genus import DEFAULT_DART_CAP, TooLarge, is_planar, min_genus
from .graph_model import GraphError, graph_from_json, multigraph_from_json


@dataclass
class Config:
    brute_n: int = ee.SIMPLE_CAP
    kernel_n: int = ee.KERNEL_CAP_N
    kernel_m: int = ee.KERNEL_CAP_M
    genus_darts: int = DEFAULT_DART_CAP
    c: float = 1.0
    e_g: float = 1.0
    c_g: float = 1.0
    nu: float = 1.0
    tau: float = 6.0
    lambda_crit: float = 10.0
    zeta_crit: float = 10.0
    precision_dps: int = asy.PRECISION_DPS
    workers: int = 1

    def context(self) -> asy.AsymptoticContext:
        return asy.AsymptoticContext(self.c, self.e_g, self.c_g, self.nu, self.tau, self.lambda_crit, self.zeta_crit)


class UsageError(Exception):
    pass


def load_config(path: str | None) -> Config:
    cfg = Config()
    if path:
        with open(path) as fh:
            data = json.load(fh)
        known = {f.name for f in fields(Config)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    ee.SIMPLE_CAP, ee.KERNEL_CAP_N, ee.KERNEL_CAP_M = cfg.brute_n, cfg.kernel_n, cfg.kernel_m
    asy.PRECISION_DPS = cfg.precision_dps
    return cfg


def _plain(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def artifact(args, cfg: Config, argv, result) -> str:
    doc = {
        "tool": "surfgraph",
        "version": __version__,
        "command": list(argv),
        "config": asdict(cfg),
        "seed": getattr(args, "seed", None),
        "result": _plain(result),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.split(",") if x.strip()]


# ---------------------------------------------------------------------------
# subcommands; each returns (result, exit code)

def cmd_enumerate(args, cfg):
    cls = ee.GraphClass(args.cls)
    q = ee.ClassQuery(cls, args.n, args.m, args.g)
    return {"class": cls.value, "n": args.n, "m": args.m, "g": args.g, "count": ee.brute_count(q)}, 0


def cmd_verify(args, cfg):
    reports, failures = [], []

    def keep(r):
        reports.append(r.to_json())
        if not r.ok:
            failures.append(r.to_json())

    for g in _ints(args.g):
        for n in range(1, args.n_max + 1):
            m_top = n * (n - 1) // 2
            if args.m_max is not None:
                m_top = min(m_top, args.m_max)
            for m in range(m_top + 1):
                keep(ee.verify_identity_general(n, m, g, strict=False))
        for l in range(1, args.l_max + 1):
            for n in range(1, min(args.n_max, 6) + 1):
                keep(ee.verify_identity_complexcore(n, l, g, strict=False))
                keep(ee.verify_identity_core(n, l, g, strict=False))
    result = {"checked": len(reports), "failed": len(failures), "reports": reports}
    if failures:
        print(f"first failing cell: {json.dumps(failures[0])}", file=sys.stderr)
        return result, 2
    return result, 0


def cmd_decompose(args, cfg):
    g = graph_from_json(_read_json(args.input))
    return decompose(g).to_json(), 0


def cmd_genus(args, cfg):
    data = _read_json(args.input)
    g = multigraph_from_json(data)
    res = min_genus(g, cap=args.cap if args.cap is not None else cfg.genus_darts)
    out = {"genus": res.genus, "planar": is_planar(g)}
    if args.witness and res.witness is not None:
        out["rotation"] = {str(v): list(r) for v, r in sorted(res.witness.rotation.items())}
        out["edges"] = [list(e) for e in res.witness.edges]
    return out, 0


def cmd_rho(args, cfg):
    rho = ee.rho_exact(args.n, args.m)
    return {"n": args.n, "m": args.m, "count_noncomplex": ee.count_noncomplex(args.n, args.m),
            "rho": rho, "rho_float": float(rho)}, 0


def cmd_l0(args, cfg):
    p = asy.l0_solve(args.n, args.m, cfg.context(), check_regime=not args.any_regime)
    return {"l0": p.l0, "residual": p.residual, "regime": p.regime, "n": args.n, "m": args.m}, 0


def cmd_predict(args, cfg):
    p = asy.l0_solve(args.n, args.m, cfg.context(), d=args.d, check_regime=not args.any_regime)
    return {**p.to_json(), "g": args.g}, 0


def cmd_sums(args, cfg):
    if args.which == "core":
        ev = asy.sigma_core_eval(args.n_c, args.l, args.d, nu=cfg.nu)
    else:
        ev = asy.sigma_d_eval(args.n_c, args.l, tau=cfg.tau, nu=cfg.nu)
    lo, hi = asy.window(ev, args.mass)
    out = {**ev.to_json(), "window": [lo, hi], "window_mass": ev.mass(lo, hi), "mass": args.mass}
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write("index,log_term\n")
            for i, t in ev.rows():
                fh.write(f"{i},{t!r}\n")
    return out, 0


def cmd_asymptotics(args, cfg):
    ctx = cfg.context()
    if args.case == "main4":
        return asy.main4_log(args.n, args.m, args.g, ctx).to_json(), 0
    if args.case == "britikov":
        return {"log_f": asy.britikov_f_log(args.n, args.m, ctx).to_json()}, 0
    if args.case == "cubic-kernel":
        return {"log_kernels": asy.cubic_kernel_log(args.l, args.g, ctx).to_json()}, 0
    return asy.classify_regime(args.n, args.m, ctx).to_json(), 0


def cmd_sample(args, cfg):
    if args.g is None:
        g, tries = mc.sample_gnm(args.n, args.m, args.seed), 1
    else:
        g, tries = mc.sample_surface(args.n, args.m, args.g, args.seed, args.max_tries)
    rec = mc.measure(g, args.g, tries=tries)
    out = {"record": asdict(rec)}
    if args.edges:
        out["graph"] = g.to_json()
    return out, 0


def cmd_sweep(args, cfg):
    plan = [mc.GridPoint.from_json(p) for p in _read_json(args.plan)]
    records = mc.sweep(plan, args.reps, args.seed, args.workers or cfg.workers)
    return records, 0


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="surfgraph", description="Random graphs on surfaces: exact counts, asymptotics, sampling.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file merged over the defaults")
        sp.add_argument("--out", help="write the artifact here instead of stdout")
        sp.set_defaults(func=func)
        return sp

    sp = add("enumerate", cmd_enumerate, "brute-force count of one class")
    sp.add_argument("--class", dest="cls", required=True, choices=[c.value for c in ee.GraphClass])
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--g", type=int, default=0)

    sp = add("verify-identities", cmd_verify, "check the decomposition identities exactly")
    sp.add_argument("--n-max", type=int, required=True)
    sp.add_argument("--g", default="0", help="comma separated genera")
    sp.add_argument("--l-max", type=int, default=2)
    sp.add_argument("--m-max", type=int, default=None, help="skip larger m in the general identity")

    sp = add("decompose", cmd_decompose, "decompose a graph given as JSON")
    sp.add_argument("--in", dest="input", required=True)

    sp = add("genus", cmd_genus, "minimum orientable genus of a (multi)graph given as JSON")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--witness", action="store_true")
    sp.add_argument("--cap", type=int, default=None, help="dart cap for the exhaustive search")

    sp = add("rho", cmd_rho, "exact probability of no complex component")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)

    for name, func in (("l0", cmd_l0), ("predict", cmd_predict)):
        sp = add(name, func, "typical excess" if name == "l0" else "predicted structure parameters")
        sp.add_argument("--n", type=float, required=True)
        sp.add_argument("--m", type=float, required=True)
        sp.add_argument("--any-regime", action="store_true", help="skip the regime check")
        if name == "predict":
            sp.add_argument("--g", type=int, default=0)
            sp.add_argument("--d", type=int, default=0)

    sp = add("sums", cmd_sums, "evaluate the core or deficiency sum")
    sp.add_argument("--which", choices=["core", "d"], required=True)
    sp.add_argument("--n-c", type=int, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--d", type=int, default=0)
    sp.add_argument("--mass", type=float, default=0.99)
    sp.add_argument("--csv", help="per-index log terms")

    sp = add("asymptotics", cmd_asymptotics, "closed forms and regime classification")
    sp.add_argument("--case", choices=["main4", "britikov", "cubic-kernel", "regime"], required=True)
    sp.add_argument("--n", type=float, default=0)
    sp.add_argument("--m", type=float, default=0)
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--g", type=int, default=0)

    sp = add("sample", cmd_sample, "draw and measure one graph")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--g", type=int, default=None, help="omit for the plain uniform model")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--max-tries", type=int, default=1000)
    sp.add_argument("--edges", action="store_true", help="include the sampled edge list")

    sp = add("sweep", cmd_sweep, "run a plan of grid points and write CSV")
    sp.add_argument("--plan", required=True)
    sp.add_argument("--reps", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--workers", type=int, default=None)
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config)
        result, code = args.func(args, cfg)
    except UsageError as exc:
        print(f"surfgraph: error: {exc}", file=sys.stderr)
        return 1
    except (ee.IdentityViolation, ee.BoundViolation) as exc:
        print(f"verification failed: {json.dumps(_plain(exc.cell))}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, GraphError, ee.CapExceeded, mc.CapExceeded, mc.BadM, mc.Rejected,
            asy.OutOfScope, asy.DomainError, asy.NoRoot, asy.Inadmissible, TooLarge, ValueError) as exc:
        print(f"surfgraph: error: {exc}", file=sys.stderr)
        return 1
    if args.command == "sweep":
        header = artifact(args, cfg, argv, None)
        text = "".join(f"# {line}\n" for line in header.splitlines()) + mc.records_to_csv(result)
    else:
        text = artifact(args, cfg, argv, result)
    _emit(text, args.out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
