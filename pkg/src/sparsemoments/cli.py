"""Command line entry point: ``sparsemoments {recover,certify,chebyshev,experiment}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness, plotting
from .bp_solver import SolverOptions, solve_gme_on_grid
from .certificate import build_l2_sign_interpolant, build_nonnegative_dual, verify_dual_polynomial
from .chebyshev import generalized_chebyshev
from .errors import CapacityError, NumericalFailure
from .measures import JordanSupport, MomentVector
from .msystem import KINDS, FunctionFamily

log = logging.getLogger("sparsemoments")


def parse_support(text: str) -> list[tuple[float, int]]:
    """``"0.3:+,-0.4:-"`` -> ``[(0.3, 1), (-0.4, -1)]``; a missing sign means ``+``."""
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        loc, _, sign = item.rpartition(":") if ":" in item else (item, "", "+")
        sign = sign.strip() or "+"
        if sign not in ("+", "-", "+1", "-1"):
            raise argparse.ArgumentTypeError(f"bad sign in {item!r}")
        out.append((float(loc), -1 if sign.startswith("-") else 1))
    if not out:
        raise argparse.ArgumentTypeError("empty support")
    return out


def parse_poles(text: str) -> list[complex]:
    return [complex(t.strip().replace(" ", "").replace("i", "j")) for t in text.split(",") if t.strip()]


def parse_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def family_from_args(args, n: int) -> FunctionFamily:
    kind = args.family.lower().replace("-", "_")
    poles = parse_poles(args.poles) if getattr(args, "poles", None) else ()
    exps = parse_floats(args.exponents) if getattr(args, "exponents", None) else ()
    if kind == "stieltjes" and len(poles) < n:
        raise SystemExit(f"stieltjes family of degree {n} needs {n} poles, got {len(poles)}")
    return FunctionFamily(kind, n, None, tuple(poles[:n]) if poles else (), tuple(exps))


def _add_family_args(p, default="cosine"):
    p.add_argument("--family", default=default, choices=KINDS + ("exponential",))
    p.add_argument("--poles", help='Stieltjes poles, e.g. "2+0i,3+0i"')
    p.add_argument("--exponents", help='Muntz exponents, e.g. "0.5,1,1.5"')


def _write_json(path, obj):
    text = json.dumps(harness._jsonable(obj), indent=2)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


# ---------------------------------------------------------------------------


def cmd_recover(args) -> int:
    data = json.loads(Path(args.input).read_text())
    if isinstance(data, list):
        data = {"values": data}
    mv = MomentVector.from_dict(data)
    n = args.n if args.n is not None else mv.n
    if mv.n != n:
        raise SystemExit(f"--n {n} but the input holds {mv.n + 1} moments")
    fam = family_from_args(args, n)
    grid = harness.interior_grid(fam, args.grid_size)
    opts = SolverOptions(atom_prune_tol=args.prune_tol)
    measure, res = solve_gme_on_grid(mv, fam, grid, opts)
    _write_json(args.output, {**res.summary(), "family": fam.to_config(), "measure": measure.to_dict()})
    return 0 if res.optimal else 1


def cmd_certify(args) -> int:
    fam = family_from_args(args, args.n)
    support = parse_support(args.support)
    method = args.method
    if method == "auto":
        method = "nonnegative" if all(e > 0 for _, e in support) else "l2"
    try:
        if method == "nonnegative":
            if any(e < 0 for _, e in support):
                raise SystemExit("nonnegative certificates need an all-positive support")
            cert = build_nonnegative_dual(fam, [x for x, _ in support], args.n, grid_size=args.grid)
        else:
            jordan = JordanSupport.from_signs(*zip(*support))
            cert = build_l2_sign_interpolant(fam, jordan, args.n, grid_size=args.grid)
    except CapacityError as exc:
        log.error("capacity: %s", exc)
        _write_json(args.report, {"verified": False, "error": str(exc)})
        return 1
    except NumericalFailure as exc:
        log.error("%s", exc)
        cert = exc.payload
        if cert is None:
            _write_json(args.report, {"verified": False, "error": str(exc)})
            return 1
    _write_json(args.report, {"method": method, **cert.to_dict()})
    return 0 if cert.verified else 1


def cmd_chebyshev(args) -> int:
    fam = family_from_args(args, args.k)
    try:
        res = generalized_chebyshev(fam, args.k)
    except NumericalFailure as exc:
        log.error("%s", exc)
        return 1
    out = res.to_dict()
    cert = verify_dual_polynomial(res.coefficients, res.family,
                                  list(zip(res.alternation_points, np.sign(res.values))))
    out["certificate"] = cert.to_dict()["report"]
    _write_json(args.out, out)
    return 0


def cmd_experiment(args) -> int:
    outdir = Path(args.out)
    name = args.name
    workers = args.workers
    if name == "err-sweep":
        p, N = args.p, args.trials if args.trials is not None else 10
        rep = harness.run_err_sweep(p, N, args.seed, workers=workers)
        s = [c.params["s"] for c in rep.cells]
        err = [c.mean_l1_error for c in rep.cells]
        rep.write(outdir, lambda path: plotting.plot_err_sweep(s, err, path, harness.ERR_BOUND))
    elif name == "figure1":
        cfg = harness.ExperimentConfig.from_json(args.config) if args.config else None
        if cfg is None and args.preset is None:
            args.preset = "fig1"
        if cfg is not None and args.preset is None:
            cfg = harness.ExperimentConfig(**{**cfg.__dict__, "seed": args.seed})
        elif cfg is None:
            cfg = harness.ExperimentConfig(seed=args.seed)
        rep, res, grid, x0 = harness.run_figure1(cfg, args.preset)
        rep.write(outdir, lambda path: plotting.plot_overlay(grid, x0, res.solution, path,
                                                            rep.meta["family"]))
        np.savetxt(outdir / "overlay.csv", np.column_stack([grid, x0, res.solution]),
                   delimiter=",", header="t,target,recovered", comments="")
    elif name == "figure2":
        trials = args.trials if args.trials is not None else 100
        rep = harness.run_figure2(args.seed, trials=trials, fast=args.fast, workers=workers)
        deltas, ns, R = harness.figure2_rates(rep)
        rep.write(outdir, lambda path: plotting.plot_heatmap(deltas, ns, R, path))
    elif name == "counterexample":
        s, n = args.s, args.n if args.n is not None else 2 * args.s
        ce = harness.counterexample(s, n, args.seed)
        rep = harness.SweepReport("counterexample", [harness.CellRecord(
            {"s": s, "n": n}, int(ce.tv_mu < ce.tv_sigma and ce.moment_gap <= 1e-8), 1, 0.0,
            {"tv_sigma": ce.tv_sigma, "tv_mu": ce.tv_mu, "moment_gap": ce.moment_gap})],
            meta={"seed": args.seed, "construction": ce.to_dict()})
        rep.add_check("tv_strictly_smaller", ce.tv_mu, ce.tv_sigma, ce.tv_mu < ce.tv_sigma)
        rep.add_check("moment_gap", ce.moment_gap, 1e-8, ce.moment_gap <= 1e-8)
        rep.write(outdir, lambda path: plotting.plot_counterexample(ce.sigma, ce.mu, path))
    elif name == "exactness":
        trials = args.trials if args.trials is not None else 200
        rep = harness.run_exactness_suite(args.family, trials, args.seed, workers=workers)
        recs = rep.meta["records"]
        rep.write(outdir)
        fails = [r for r in recs if r["passes_filter"] and not r["success"]]
        for r in fails:
            log.warning("miss: s=%d p=%d err=%.2e normalized smin=%.2e 1-coherence=%.2e",
                        r["s"], r["p"], r["linf_error"], r["normalized_support_smin"],
                        1.0 - r["neighbour_coherence"])
    else:  # pragma: no cover - argparse restricts the choices
        raise SystemExit(f"unknown experiment {name}")

    for key, chk in rep.checks.items():
        log.info("%-22s %-6s value=%s bound=%s", key, "ok" if chk["passed"] else "FAIL",
                 chk["value"], chk["bound"])
    print(f"{name}: {'passed' if rep.passed else 'FAILED'} -> {outdir}")
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsemoments", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("recover", help="TV-minimal measure on a grid from a moment vector")
    _add_family_args(p)
    p.add_argument("--n", type=int, help="highest moment index (defaults to the input length - 1)")
    p.add_argument("--grid-size", type=int, default=500)
    p.add_argument("--prune-tol", type=float, default=SolverOptions().atom_prune_tol)
    p.add_argument("--input", required=True, help="JSON moment vector")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    _add_family_args(p, default="power")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--support", required=True, help='e.g. "0.3:+,-0.4:-"')
    p.add_argument("--method", choices=("auto", "nonnegative", "l2"), default="auto")
    p.add_argument("--grid", type=int, default=10_001)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("chebyshev", help="generalized Chebyshev polynomial by Remez exchange")
    _add_family_args(p, default="power")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_chebyshev)

    p = sub.add_parser("experiment", help="run an experiment and write report.json, cells.csv, plot.svg")
    p.add_argument("name", choices=("figure1", "figure2", "err-sweep", "counterexample", "exactness"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=sorted(harness.PRESETS))
    p.add_argument("--config", help="JSON ExperimentConfig for figure1")
    p.add_argument("--fast", action="store_true", help="figure2 with 25 trials per cell")
    p.add_argument("--trials", type=int)
    p.add_argument("--p", type=int, default=100, help="grid size for err-sweep")
    p.add_argument("--s", type=int, default=2, help="sparsity for counterexample")
    p.add_argument("--n", type=int, help="moments for counterexample (default 2s)")
    p.add_argument("--family", default="cosine", choices=("power", "cosine", "laplace"),
                   help="family for the exactness suite")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"sparsemoments: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
