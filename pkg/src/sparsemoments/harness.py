"""Random instances and the numerical experiments.

Every trial draws from its own counter-based generator keyed by
``(seed, cell, trial)``, so serial and parallel runs produce identical
reports.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .bp_solver import BasisPursuitProblem, SolverOptions, solve_bp, solve_gme_on_grid
from .certificate import DualCertificate, build_l2_sign_interpolant
from .errors import CapacityError, NumericalFailure
from .measures import DiscreteMeasure, JordanSupport, moments, tv_norm
from .msystem import FunctionFamily, vandermonde

log = logging.getLogger(__name__)

RECOVERY_TOL = 1e-5
ERR_BOUND = 0.05


# ---------------------------------------------------------------------------
# randomness


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox generator for the stream addressed by ``key`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals from pairs of uniforms."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
    return z[:size]


def chi2_1(rng, size):
    return box_muller(rng, size) ** 2


def _as_rng(rng_or_seed):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return make_rng(rng_or_seed)


# ---------------------------------------------------------------------------
# configuration and reports


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of a recovery run; ``s <= min(n // 2, p)`` is enforced."""

    seed: int = 0
    family: dict = field(default_factory=lambda: {"kind": "cosine"})
    p: int = 500
    n: int = 41
    s: int = 20
    trials: int = 1
    delta: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.s < 0 or self.p < 1 or self.n < 0:
            raise ValueError("p must be positive, s and n nonnegative")
        if self.s > min(self.n // 2, self.p):
            raise ValueError(f"s = {self.s} exceeds min(n // 2, p) = {min(self.n // 2, self.p)}")

    def build_family(self) -> FunctionFamily:
        return FunctionFamily.from_config({**self.family, "n": self.n})

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


@dataclass
class CellRecord:
    params: dict
    success_count: int
    trials: int
    mean_l1_error: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.success_count <= self.trials:
            raise ValueError("success count outside [0, trials]")

    @property
    def rate(self) -> float:
        return self.success_count / self.trials if self.trials else math.nan


@dataclass
class SweepReport:
    """Per-cell outcomes plus the acceptance checks of one experiment."""

    name: str
    cells: list[CellRecord]
    max_err: float | None = None
    checks: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def add_check(self, name, value, bound, passed):
        self.checks[name] = {"value": value, "bound": bound, "passed": bool(passed)}

    def to_dict(self) -> dict:
        """JSON-ready view; non-finite floats become strings."""
        return _jsonable({
            "name": self.name,
            "passed": self.passed,
            "max_err": self.max_err,
            "max_err_defined": self.max_err is not None,
            "checks": self.checks,
            "meta": self.meta,
            "cells": [asdict(c) | {"rate": c.rate} for c in self.cells],
        })

    def write(self, outdir, plot=None):
        """Write ``report.json``, ``cells.csv`` and (if given) ``plot.svg``."""
        out = Path(outdir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(self.to_dict(), indent=2))
        keys = sorted({k for c in self.cells for k in c.params})
        extra = sorted({k for c in self.cells for k, v in c.extra.items() if np.isscalar(v)})
        with open(out / "cells.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys + ["success_count", "trials", "rate", "mean_l1_error"] + extra)
            for c in self.cells:
                w.writerow(
                    [c.params.get(k) for k in keys]
                    + [c.success_count, c.trials, c.rate, c.mean_l1_error]
                    + [c.extra.get(k) for k in extra]
                )
        if plot is not None:
            plot(out / "plot.svg")
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _map(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return [fn(t) for t in tasks]


# ---------------------------------------------------------------------------
# instance generators


def gen_sparse_instance(p: int, s: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Nonnegative ``s``-sparse vector of length ``p`` with chi-square(1) entries.

    Returns ``(x0, support)`` with the support sorted.
    """
    if not 0 <= s <= p:
        raise ValueError(f"need 0 <= s <= p, got s={s}, p={p}")
    rng = _as_rng(rng)
    support = np.sort(rng.choice(p, size=s, replace=False)) if s else np.empty(0, int)
    x0 = np.zeros(p)
    x0[support] = chi2_1(rng, s)
    return x0, support


def gen_delta_spaced_jordan(s: int, delta: float, rng, interval=(0.0, 1.0)) -> JordanSupport:
    """``s`` points in ``[lo, hi)`` pairwise at least ``delta`` apart with one
    pair exactly ``delta`` apart, and a non-constant sign pattern.

    Free positions are drawn uniformly from the reduced interval of length
    ``L - (s - 1) delta``; re-inserting the mandatory gaps (with one pair
    glued at distance exactly ``delta``) gives the configuration.
    """
    if s < 2:
        raise ValueError("need at least two points")
    lo, hi = map(float, interval)
    length = hi - lo
    if not delta > 0 or s * delta > length:
        raise ValueError(f"cannot place {s} points {delta}-apart in an interval of length {length}")
    rng = _as_rng(rng)
    slack = length - (s - 1) * delta
    free = np.sort(rng.random(s - 1)) * slack
    pair = rng.integers(s - 1)
    free = np.insert(free, pair + 1, free[pair])
    pts = lo + free + delta * np.arange(s)
    while True:
        signs = np.where(rng.random(s) < 0.5, 1.0, -1.0)
        if abs(signs.sum()) < s:
            break
    jordan = JordanSupport.from_signs(pts.tolist(), signs.tolist())
    _validate_spacing(jordan, delta, interval)
    return jordan


def _validate_spacing(jordan, delta, interval):
    x = jordan.locations
    gaps = np.diff(x)
    if x.min() < interval[0] or x.max() >= interval[1]:
        raise AssertionError("point outside the half-open interval")
    if gaps.min() < delta * (1 - 1e-12):
        raise AssertionError("separation below delta")
    if not np.any(np.isclose(gaps, delta, rtol=1e-12, atol=1e-15)):
        raise AssertionError("no pair at exactly delta")
    if len(jordan.plus) == 0 or len(jordan.minus) == 0:
        raise AssertionError("constant sign pattern")


def grid_with_support(base, support, tol: float = 1e-6) -> np.ndarray:
    """``base`` plus the support points, minus base points within ``tol`` of one.

    A plain union would keep near-duplicates (``-0.4`` next to
    ``-0.39999999999999997``, or a Remez-polished extremum a few ``1e-9``
    from the grid point it converged to). Such column pairs are numerically
    identical and make the grid problem ambiguous.
    """
    base = np.asarray(base, dtype=float)
    xs = np.asarray(support, dtype=float)
    if xs.size:
        near = np.min(np.abs(base[:, None] - xs[None, :]), axis=1) <= tol
        base = base[~near]
    return np.union1d(base, xs)


def interior_grid(fam: FunctionFamily, p: int) -> np.ndarray:
    """``lo + (hi - lo) k / (p + 1)`` for ``k = 1..p``."""
    lo, hi = fam.interval
    return lo + (hi - lo) * np.arange(1, p + 1) / (p + 1)


# ---------------------------------------------------------------------------
# recovery protocol


def recovery_trial(fam, grid, s, rng, opts=None):
    """One draw of the recovery protocol: returns ``(x0, support, result)``."""
    x0, support = gen_sparse_instance(grid.size, s, rng)
    A = vandermonde(fam, grid).entries
    res = solve_bp(BasisPursuitProblem(A, A @ x0), opts)
    return x0, support, res


def _err_cell(task):
    seed, s, p, trials = task
    n = 2 * s + 1
    fam = FunctionFamily.cosine(n)
    grid = interior_grid(fam, p)
    errs, ok, failures = [], 0, 0
    for t in range(trials):
        x0, _, res = recovery_trial(fam, grid, s, make_rng(seed, s, t))
        xh = res.solution if res.optimal else np.zeros(p)
        failures += not res.optimal
        errs.append(np.abs(xh - x0).sum() / p)
        ok += np.abs(xh - x0).max() <= RECOVERY_TOL
    mean = float(np.mean(errs)) if errs else math.nan
    return CellRecord({"s": s, "n": n, "p": p}, ok, trials, mean, {"solver_failures": failures})


def run_err_sweep(p: int = 100, N: int = 10, seed: int = 0, *, s_max=None, workers=1) -> SweepReport:
    """Mean ``l1`` error per sparsity level on the cosine family.

    For each ``s = 1..floor((p-1)/2)``: ``n = 2s + 1`` moments, grid
    ``t_k = k/(p+1)``, ``N`` trials. ``max_err`` is the largest mean error;
    it is ``None`` when ``N = 0``.
    """
    s_max = (p - 1) // 2 if s_max is None else s_max
    cells = _map(_err_cell, [(seed, s, p, N) for s in range(1, s_max + 1)], workers)
    rep = SweepReport("err-sweep", cells, meta={"seed": seed, "p": p, "N": N, "family": "cosine"})
    if N == 0 or not cells:
        rep.meta["max_err_undefined"] = True
        return rep
    rep.max_err = max(c.mean_l1_error for c in cells)
    rep.add_check("max_err", rep.max_err, ERR_BOUND, rep.max_err <= ERR_BOUND)
    return rep


PRESETS = {
    "fig1": (20, 41, 500),
    "s10": (10, 21, 500),
    "s50": (50, 101, 500),
    "s150": (150, 301, 500),
}


def run_figure1(cfg: ExperimentConfig | None = None, preset: str | None = None):
    """One recovery on the cosine grid ``k/(p+1)``.

    Returns ``(report, recovery_result, grid, x0)``. The ``s50`` preset is
    known to misestimate some coordinates; its worst coordinate is reported
    but not judged.
    """
    if preset is not None:
        s, n, p = PRESETS[preset]
        seed = cfg.seed if cfg else 0
        cfg = ExperimentConfig(seed=seed, family={"kind": "cosine"}, p=p, n=n, s=s)
    cfg = cfg or ExperimentConfig()
    fam = cfg.build_family()
    grid = interior_grid(fam, cfg.p)
    t0 = time.perf_counter()
    x0, support, res = recovery_trial(fam, grid, cfg.s, make_rng(cfg.seed, 0, 0))
    elapsed = time.perf_counter() - t0
    xh = res.solution
    err = np.abs(xh - x0)
    l1p = float(err.sum() / cfg.p)
    contains = bool(np.all(np.abs(xh[support]) > SolverOptions().atom_prune_tol))
    cell = CellRecord(
        {"s": cfg.s, "n": cfg.n, "p": cfg.p},
        int(err.max() <= RECOVERY_TOL),
        1,
        l1p,
        {"max_coordinate_error": float(err.max()), "status": res.status.value,
         "support_contained": contains, "seconds": elapsed},
    )
    rep = SweepReport("figure1", [cell], max_err=l1p,
                      meta={"seed": cfg.seed, "preset": preset, "family": fam.family_id,
                            "solver": res.summary()})
    rep.add_check("l1_over_p", l1p, ERR_BOUND, l1p <= ERR_BOUND)
    if preset != "s50":
        rep.add_check("support_contained", contains, True, contains)
    return rep, res, grid, x0


# ---------------------------------------------------------------------------
# exactness suite with conditioning diagnostics


def _exact_trial(task):
    kind, seed, t, s_max, p_max, filter_tol = task
    rng = make_rng(seed, t)
    s = int(rng.integers(1, s_max + 1))
    p = int(rng.integers(2 * s + 2, p_max + 1))
    fam = FunctionFamily(kind, 2 * s + 1)
    grid = interior_grid(fam, p)
    x0, support, res = recovery_trial(fam, grid, s, rng)
    A = vandermonde(fam, grid).entries
    smin = float(np.linalg.svd(A[:, support], compute_uv=False)[-1])
    An = A / np.linalg.norm(A, axis=1)[:, None]
    Au = An / np.linalg.norm(An, axis=0)
    # how nearly each support column is parallel to a grid neighbour
    coh = 0.0
    for j in support:
        for k in (j - 1, j + 1):
            if 0 <= k < p:
                coh = max(coh, abs(float(Au[:, j] @ Au[:, k])))
    err = float(np.abs(res.solution - x0).max())
    return {
        "family": kind, "trial": t, "s": s, "p": p, "n": 2 * s + 1,
        "support_smin": smin,
        "passes_filter": smin >= filter_tol,
        "normalized_support_smin": float(
            np.linalg.svd(An[:, support], compute_uv=False)[-1]),
        "neighbour_coherence": coh,
        "linf_error": err,
        "success": err <= RECOVERY_TOL,
        "status": res.status.value,
        "residual": res.residual_norm,
    }


def run_exactness_suite(kind: str, trials: int = 200, seed: int = 0, *, s_max=10, p_max=200,
                        filter_tol=1e-8, workers=1) -> SweepReport:
    """Random nonnegative recoveries with ``n = 2s + 1`` on uniform interior grids.

    ``s`` is uniform on ``1..s_max`` and ``p`` uniform on ``2s+2..p_max``.
    Each record carries conditioning diagnostics: the smallest singular
    value of the raw support columns (the filter), the same for the
    row-normalized support columns, and the largest cosine between a
    support column and an adjacent grid column.
    """
    tasks = [(kind, seed, t, s_max, p_max, filter_tol) for t in range(trials)]
    recs = _map(_exact_trial, tasks, workers)
    kept = [r for r in recs if r["passes_filter"]]
    ok = sum(r["success"] for r in kept)
    cell = CellRecord({"family": kind}, ok, len(kept),
                      float(np.mean([r["linf_error"] for r in kept])) if kept else math.nan,
                      {"filtered_out": trials - len(kept)})
    rep = SweepReport(f"exactness-{kind}", [cell], meta={"seed": seed, "records": recs})
    rate = ok / len(kept) if kept else math.nan
    rep.add_check("success_rate", rate, 0.99, rate >= 0.99)
    return rep


# ---------------------------------------------------------------------------
# figure 2: L2 sign interpolants on delta-separated supports

FIG2_DELTAS = tuple(1.0 / m for m in range(15, 56, 5))
FIG2_NS = tuple(range(20, 101, 10))


def _fig2_cell(task):
    seed, ci, delta, n, s, trials = task
    fam = FunctionFamily.cosine(n)
    ok = kkt_fail = 0
    for t in range(trials):
        jordan = gen_delta_spaced_jordan(s, delta, make_rng(seed, ci, t))
        try:
            ok += build_l2_sign_interpolant(fam, jordan, n).verified
        except (CapacityError, NumericalFailure):
            kkt_fail += 1
    return CellRecord({"delta": delta, "n": n, "s": s}, ok, trials, math.nan,
                      {"kkt_failures": kkt_fail})


def run_figure2(seed: int = 0, *, trials: int = 100, fast: bool = False, deltas=FIG2_DELTAS,
                ns=FIG2_NS, s: int = 10, workers=1) -> SweepReport:
    """Certificate success rate over the (separation, degree) grid.

    With ``fast`` the trials drop to 25 per cell and the acceptance
    threshold for the ``n = 80`` row from 95% to 90%.
    """
    if fast:
        trials = 25
    threshold = 0.90 if fast else 0.95
    tasks = [(seed, i * len(ns) + j, d, n, s, trials)
             for i, d in enumerate(deltas) for j, n in enumerate(ns)]
    cells = _map(_fig2_cell, tasks, workers)
    rep = SweepReport("figure2", cells, meta={"seed": seed, "trials": trials, "s": s,
                                              "fast": fast, "family": "cosine"})
    row = [c for c in cells if c.params["n"] == 80]
    if row:
        worst = min(c.rate for c in row)
        rep.add_check("n80_min_rate", worst, threshold, worst >= threshold)
    return rep


def figure2_rates(rep: SweepReport):
    deltas = sorted({c.params["delta"] for c in rep.cells}, reverse=True)
    ns = sorted({c.params["n"] for c in rep.cells})
    R = np.full((len(deltas), len(ns)), np.nan)
    for c in rep.cells:
        R[deltas.index(c.params["delta"]), ns.index(c.params["n"])] = c.rate
    return deltas, ns, R


# ---------------------------------------------------------------------------
# TV counterexample for weighted (non-homogeneous) systems


@dataclass
class Counterexample:
    sigma: DiscreteMeasure
    mu: DiscreteMeasure
    family: FunctionFamily
    tv_sigma: float
    tv_mu: float
    moment_gap: float

    def to_dict(self):
        return {
            "sigma": self.sigma.to_dict(),
            "mu": self.mu.to_dict(),
            "family": self.family.to_config() | {"weight_knots": [list(k) for k in self.family.weight_knots]},
            "tv_sigma": self.tv_sigma,
            "tv_mu": self.tv_mu,
            "moment_gap": self.moment_gap,
        }


def counterexample(s: int, n: int, seed: int = 0, *, base: FunctionFamily | None = None,
                   sigma: DiscreteMeasure | None = None, max_retries: int = 50,
                   cond_limit: float = 1e10) -> Counterexample:
    """Nonnegative ``sigma`` and a measure ``mu`` of smaller TV with the same
    moments under a weighted family ``{w, w u_1, ..., w u_n}``.

    ``nu`` on ``n + 1`` other points matches the unweighted moments of
    ``sigma``. With ``r = |sigma| / (|nu| + 1)`` and a piecewise-linear
    weight ``w`` equal to ``r`` on the support of ``sigma`` and 1 on that of
    ``nu``, the measure ``mu = r nu`` matches ``sigma`` under the weighted
    family while ``|mu| = r |nu| < |sigma|``.
    """
    if s < 1 or n < 2 * s:
        raise ValueError("need s >= 1 and n >= 2s")
    base = (base or FunctionFamily.power(n)).with_degree(n)
    lo, hi = base.interval
    rng = make_rng(seed)
    if sigma is None:
        xs = np.sort(lo + (hi - lo) * rng.random(s))
        sigma = DiscreteMeasure(xs, chi2_1(rng, s) + 0.1, base.interval)
    elif np.any(sigma.weights <= 0):
        raise ValueError("sigma must be nonnegative")
    xs = sigma.locations
    c_sigma = moments(sigma, base).values

    cheb = lo + (hi - lo) * (1 - np.cos(np.pi * (2 * np.arange(n + 1) + 1) / (2 * n + 2))) / 2
    spacing = (hi - lo) / (n + 1)
    for attempt in range(max_retries):
        ts = np.sort(np.clip(cheb + 0.25 * spacing * (rng.random(n + 1) - 0.5), lo, hi))
        if np.min(np.abs(ts[:, None] - xs[None, :])) < 0.05 * spacing or np.any(np.diff(ts) <= 0):
            continue
        V = base.evaluate_matrix(ts)
        if np.linalg.cond(V) > cond_limit:
            continue
        nu = np.linalg.solve(V, c_sigma)
        break
    else:
        raise NumericalFailure("no well-conditioned node set found", {"retries": max_retries})

    tv_s = tv_norm(sigma)
    tv_nu = float(np.abs(nu).sum())
    r = tv_s / (tv_nu + 1.0)
    knots = {float(x): r for x in xs} | {float(t): 1.0 for t in ts}
    for end in (lo, hi):
        knots.setdefault(end, 1.0)
    floor = min(r, 1.0) / 2
    weighted = base.weighted([(x, max(v, floor)) for x, v in sorted(knots.items())])

    keep = np.abs(nu) >= 1e-14
    mu = DiscreteMeasure(ts[keep], r * nu[keep], base.interval)
    cs = moments(sigma, weighted).values
    cm = moments(mu, weighted).values
    gap = float(np.linalg.norm(cs - cm) / np.linalg.norm(cs))
    return Counterexample(sigma, mu, weighted, tv_s, tv_norm(mu), gap)


# ---------------------------------------------------------------------------
# certificate soundness


def check_certificate_soundness(cert: DualCertificate, trials: int = 50, seed: int = 0,
                                grid_size: int = 101) -> list[float]:
    """Recover random measures from the certificate's sign cone.

    Each trial puts chi-square(1) magnitudes (shifted away from zero) with
    the certificate's signs on its support and solves the grid problem on a
    uniform grid augmented with the support. Returns the ``l_inf`` errors.
    """
    fam = cert.family
    xs = np.array([x for x, _ in cert.support])
    eps = np.array([e for _, e in cert.support], dtype=float)
    lo, hi = fam.interval
    base = np.linspace(lo, hi, grid_size, endpoint=fam.kind != "complex_exponential")
    grid = grid_with_support(base, xs)
    errs = []
    for t in range(trials):
        rng = make_rng(seed, t)
        w = eps * (chi2_1(rng, xs.size) + 0.05)
        sigma = DiscreteMeasure(xs, w, fam.interval)
        rec, _ = solve_gme_on_grid(moments(sigma, fam), fam, grid)
        diff = rec - sigma
        errs.append(float(np.abs(diff.weights).max()) if diff.size else 0.0)
    return errs


def default_workers() -> int:
    return max(1, min(8, (os.cpu_count() or 1)))
