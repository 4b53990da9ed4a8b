"""Basis pursuit ``min ||y||_1  s.t.  A y = b`` as a linear program.

The LP is posed on nonnegative variables ``(y+, y-)`` with cost ``1`` and
solved by a Mehrotra predictor-corrector interior point method using
dense normal equations. Before the IP loop the constraint rows are
replaced by an orthonormal basis of the (row-scaled) row space, which
leaves the feasible set unchanged but keeps the normal matrix well
conditioned for the badly scaled Vandermonde systems this package builds.

The Newton systems are solved through a QR factorization of the scaled
constraint matrix rather than a Cholesky factor of the normal matrix;
near the optimum the latter loses half the available digits. If the
interior point stalls, HiGHS dual simplex is run on the original data.

A converged point is then purified: the smallest set of top-ranked
columns that reproduces the data exactly, with l1 norm no larger than the
converged point, replaces it. For a T-system any exact fit using at most
``n + 1 - s`` columns must coincide with an ``s``-sparse solution, so
this recovers vertices with exact zeros.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .measures import DiscreteMeasure, MomentVector
from .msystem import FunctionFamily, real_rows, vandermonde

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    MAX_ITERATIONS = "max_iterations"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class SolverOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    atom_prune_tol: float = 1e-6
    #: singular values below ``rank_tol * s_max`` of the row-scaled matrix are
    #: treated as zero when building the orthonormal constraint basis
    rank_tol: float = 1e-13
    crossover: bool = True
    simplex_fallback: bool = True


@dataclass(frozen=True)
class BasisPursuitProblem:
    """Constraint data ``A y = b``; complex rows are split into ``[Re; Im]``."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A))
        b = np.atleast_1d(np.asarray(self.b))
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if A.shape[0] == 0:
            raise ValueError("at least one constraint row is required")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite entries in basis pursuit data")
        if np.iscomplexobj(A) or np.iscomplexobj(b):
            A = real_rows(A.astype(complex))
            b = b.astype(complex)
            b = np.concatenate([b.real, b.imag])
        A = np.array(A, dtype=float)
        b = np.array(b, dtype=float)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class RecoveryResult:
    solution: np.ndarray
    objective: float
    status: Status
    iterations: int
    duality_gap: float
    residual_norm: float
    #: dual vector ``nu`` with ``|A^T nu| <= 1`` and ``b . nu`` close to the objective
    dual: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "iterations": self.iterations,
            "duality_gap": self.duality_gap,
            "residual_norm": self.residual_norm,
            "nonzeros": int(np.count_nonzero(self.solution)),
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------------------
# preprocessing


@dataclass
class _Reduced:
    M: np.ndarray  # r x p with orthonormal rows
    c: np.ndarray
    back: np.ndarray  # m x r, maps a dual for M onto a dual for A
    row_scale: np.ndarray
    rank: int
    range_residual: float


def _reduce(A, b, rank_tol):
    row_norm = np.linalg.norm(A, axis=1)
    row_scale = np.where(row_norm > 0, 1.0 / np.where(row_norm > 0, row_norm, 1.0), 0.0)
    As = A * row_scale[:, None]
    bs = b * row_scale
    U, s, Vt = np.linalg.svd(As, full_matrices=False)
    r = int(np.sum(s > rank_tol * s[0])) if s.size and s[0] > 0 else 0
    Ur, sr = U[:, :r], s[:r]
    proj = Ur.T @ bs
    range_residual = np.linalg.norm(bs - Ur @ proj) / max(1.0, np.linalg.norm(bs))
    return _Reduced(
        M=Vt[:r],
        c=proj / sr,
        back=(row_scale[:, None] * Ur) / sr,
        row_scale=row_scale,
        rank=r,
        range_residual=float(range_residual),
    )


def _scaled_residual(A, b, y, row_scale):
    bs = b * row_scale
    return float(np.linalg.norm(row_scale * (A @ y - b)) / max(1.0, np.linalg.norm(bs)))


# ---------------------------------------------------------------------------
# interior point core on  min 1.u  s.t.  [M, -M] u = c,  u >= 0


def _step_length(v, dv):
    neg = dv < 0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def _mehrotra(M, c, opts, target=1e-12):
    """Predictor-corrector iterations.

    Runs until the iterate meets ``target`` (tighter than the user tolerances,
    so the crossover sees a well separated support) or stops improving; the
    status reflects the user tolerances at the last iterate.
    """
    r, p = M.shape
    N = 2 * p

    def E(u):
        return M @ (u[:p] - u[p:])

    def Et(v):
        w = M.T @ v
        return np.concatenate([w, -w])

    # Mehrotra starting point; E E^T = 2 I because M has orthonormal rows.
    u = Et(c) / 2.0
    nu = np.zeros(r)
    z = np.ones(N)
    u = u + max(-1.5 * u.min(), 0.0)
    uz = u @ z
    u = u + 0.5 * uz / z.sum()
    z = z + 0.5 * uz / u.sum()

    cnorm = 1.0 + np.linalg.norm(c)

    def measures(u, nu, z):
        pobj = u.sum()
        gap = abs(pobj - c @ nu) / (1.0 + abs(pobj))
        pres = np.linalg.norm(c - E(u)) / cnorm
        dres = np.linalg.norm(1.0 - Et(nu) - z) / (1.0 + np.sqrt(N))
        return max(pres, dres), gap

    def meets(m, feas, gap):
        return m[0] <= feas and m[1] <= gap

    best = (u, nu, z)
    best_m = measures(u, nu, z)
    stalled = 0
    failed = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        m = measures(u, nu, z)
        if meets(m, target, target):
            break
        rp = c - E(u)
        rd = 1.0 - Et(nu) - z
        mu = (u @ z) / N

        d = u / z
        # K = M diag(d+ + d-) M^T = R^T R from a QR of its square-root factor,
        # which stays accurate long after forming K and using Cholesky would not.
        B = M.T * np.sqrt(d[:p] + d[p:])[:, None]
        R = scipy.linalg.qr(B, mode="r", check_finite=False)[0][:r]
        diag_r = np.abs(np.diag(R))
        if diag_r.min() <= 1e-14 * diag_r.max():
            R[np.diag_indices_from(R)] += np.where(np.diag(R) >= 0, 1.0, -1.0) * 1e-14 * diag_r.max()

        def solve(rhs):
            w = scipy.linalg.solve_triangular(R, rhs, trans="T", check_finite=False)
            return scipy.linalg.solve_triangular(R, w, check_finite=False)

        def newton(rc, rp_, rd_):
            # Z du + U dz = rc,  E du = rp,  E^T dnu + dz = rd
            t = (rc - u * rd_) / z
            dnu = solve(rp_ - E(t))
            etn = Et(dnu)
            return t + d * etn, dnu, rd_ - etn

        def direction(rc):
            # with u/z spread over many decades the reduced solve loses
            # digits; two rounds of refinement against the full system
            du, dnu, dz = newton(rc, rp, rd)
            for _ in range(2):
                c1 = newton(
                    rc - z * du - u * dz, rp - E(du), rd - Et(dnu) - dz
                )
                du, dnu, dz = du + c1[0], dnu + c1[1], dz + c1[2]
            return du, dnu, dz

        du_a, dnu_a, dz_a = direction(-u * z)
        ap = _step_length(u, du_a)
        ad = _step_length(z, dz_a)
        mu_aff = ((u + ap * du_a) @ (z + ad * dz_a)) / N
        sigma = min(1.0, (mu_aff / mu) ** 3) if mu > 0 else 0.0
        du_, dnu_, dz_ = direction(-u * z - du_a * dz_a + sigma * mu)
        if not (np.all(np.isfinite(du_)) and np.all(np.isfinite(dnu_)) and np.all(np.isfinite(dz_))):
            failed = True
            break
        eta = 0.99995 if mu < 1e-6 else 0.995
        ap = eta * _step_length(u, du_)
        ad = eta * _step_length(z, dz_)
        u_new = u + ap * du_
        z_new = z + ad * dz_
        if u_new.min() <= 0 or z_new.min() <= 0:
            failed = True
            break
        u, nu, z = u_new, nu + ad * dnu_, z_new

        m = measures(u, nu, z)
        if max(m) < max(best_m):
            best, best_m, stalled = (u, nu, z), m, 0
        else:
            stalled += 1
            if stalled >= 8:
                break

    u, nu, z = best
    if meets(best_m, opts.feas_tol, opts.gap_tol):
        status = Status.OPTIMAL
    elif failed:
        status = Status.NUMERICAL_FAILURE
    else:
        status = Status.MAX_ITERATIONS
    return u, nu, z, status, it


def _fit(M, c, J):
    w = np.linalg.lstsq(M[:, J], c, rcond=None)[0]
    return w, np.linalg.norm(M[:, J] @ w - c)


def _sparsest_fit(M, c, order, kmax, tol, l1_ref):
    if _fit(M, c, order[:kmax])[1] > tol:
        return None
    # the residual can only shrink as columns are added, so bisect for the
    # smallest prefix that fits, then walk up until the l1 test also passes
    lo, hi = 1, kmax
    while lo < hi:
        mid = (lo + hi) // 2
        if _fit(M, c, order[:mid])[1] <= tol:
            hi = mid
        else:
            lo = mid + 1
    for k in range(lo, kmax + 1):
        J = order[:k]
        w, res = _fit(M, c, J)
        if res <= tol and np.abs(w).sum() <= l1_ref:
            out = np.zeros(M.shape[1])
            out[J] = w
            return out
    return None


def _purify(M, c, y, nu, opts):
    """Sparsest exact fit among the most promising columns.

    Columns are ranked either by ``|y|`` or by how close the dual
    polynomial ``|M^T nu|`` comes to 1, and the shortest exact-fitting
    prefix is taken; failing that, columns of ``y``'s support are removed
    one by one while the fit stays exact. A fit is accepted when it
    reproduces ``c`` and its l1 norm does not exceed that of ``y``. A
    near machine-precision residual bound is tried before ``feas_tol``,
    because loose fits admit neighbouring grid columns in place of the
    true ones. Returns ``None`` when nothing qualifies.
    """
    r, p = M.shape
    kmax = min(r, p)
    cn = 1.0 + np.linalg.norm(c)
    l1_ref = np.abs(y).sum() * (1.0 + opts.gap_tol) + opts.gap_tol
    orders = [np.argsort(-np.abs(y), kind="stable")]
    if nu is not None:
        orders.append(np.argsort(-np.abs(M.T @ nu), kind="stable"))
    tols = (min(opts.feas_tol, 1e-11) * cn, opts.feas_tol * cn)
    for tol in tols:
        for order in orders:
            w = _sparsest_fit(M, c, order, kmax, tol, l1_ref)
            if w is not None:
                return w
    # prefixes of a ranking can miss when mass is smeared over neighbours;
    # drop columns one at a time, weakest first, while the fit stays exact
    J = [int(j) for j in np.flatnonzero(np.abs(y) > 1e-9 * np.abs(y).max())]
    for tol in tols:
        if _fit(M, c, J)[1] > tol:
            continue
        keep = list(J)
        for j in sorted(J, key=lambda j: abs(y[j])):
            rest = [i for i in keep if i != j]
            if rest and _fit(M, c, rest)[1] <= tol:
                keep = rest
        w, _ = _fit(M, c, keep)
        if np.abs(w).sum() <= l1_ref:
            out = np.zeros(p)
            out[keep] = w
            return out
    return None


def _simplex(A, b):
    m, p = A.shape
    res = scipy.optimize.linprog(
        np.ones(2 * p),
        A_eq=np.hstack([A, -A]),
        b_eq=b,
        bounds=(0, None),
        method="highs-ds",
    )
    if res.status != 0:
        return None, None
    y = res.x[:p] - res.x[p:]
    dual = getattr(res, "eqlin", None)
    return y, (None if dual is None else np.asarray(dual.marginals))


def solve_bp(prob: BasisPursuitProblem, opts: SolverOptions | None = None) -> RecoveryResult:
    """Minimize ``||y||_1`` subject to ``A y = b``.

    Returns a :class:`RecoveryResult`; infeasibility and stalls are
    reported through ``status`` rather than raised. The residual is
    measured on the row-normalized system, relative to ``max(1, |b|)``.
    """
    opts = opts or SolverOptions()
    A, b = prob.A, prob.b
    p = A.shape[1]
    diag = {"unique": "unknown"}

    if not np.any(b):
        return RecoveryResult(
            np.zeros(p), 0.0, Status.OPTIMAL, 0, 0.0, 0.0, np.zeros(A.shape[0]), diag
        )

    red = _reduce(A, b, opts.rank_tol)
    diag["rank"] = red.rank
    diag["range_residual"] = red.range_residual
    if red.rank == 0 or red.range_residual > 1e-6:
        return RecoveryResult(
            np.zeros(p), 0.0, Status.INFEASIBLE, 0, np.inf,
            _scaled_residual(A, b, np.zeros(p), red.row_scale), None, diag,
        )

    u, nu, z, status, iters = _mehrotra(red.M, red.c, opts)
    y = u[:p] - u[p:]
    dual = red.back @ nu
    fallback_dual = None

    if status is not Status.OPTIMAL and opts.simplex_fallback:
        log.info("interior point stopped with %s; running simplex cleanup", status.value)
        ys, ds = _simplex(A, b)
        diag["fallback"] = "highs-ds"
        if ys is not None:
            y, status = ys, Status.OPTIMAL
            if ds is not None:
                dual = fallback_dual = ds

    if status is Status.OPTIMAL and opts.crossover:
        w = _purify(red.M, red.c, y, nu if fallback_dual is None else None, opts)
        diag["crossover"] = w is not None
        if w is not None:
            y = w
    gap = np.inf
    if dual is not None:
        gap = abs(np.abs(y).sum() - b @ dual) / (1.0 + np.abs(y).sum())
    support = np.flatnonzero(np.abs(y) > opts.atom_prune_tol)
    if support.size:
        sv = np.linalg.svd(A[:, support] * red.row_scale[:, None], compute_uv=False)
        diag["support_smin"] = float(sv[-1]) if support.size <= A.shape[0] else 0.0

    return RecoveryResult(
        solution=y,
        objective=float(np.abs(y).sum()),
        status=status,
        iterations=iters,
        duality_gap=float(gap),
        residual_norm=_scaled_residual(A, b, y, red.row_scale),
        dual=dual,
        diagnostics=diag,
    )


def solve_gme_on_grid(
    measure_moments: MomentVector,
    fam: FunctionFamily,
    grid,
    opts: SolverOptions | None = None,
) -> tuple[DiscreteMeasure, RecoveryResult]:
    """TV minimization over measures carried by ``grid``.

    The map sending ``y`` to ``sum_j y_j delta_{t_j}`` is an isometry from
    ``l1`` onto grid measures and turns the moment constraints into
    ``A y = b`` with ``A`` the Vandermonde matrix on the grid, so basis
    pursuit solves the grid-restricted problem exactly.
    """
    opts = opts or SolverOptions()
    grid = np.asarray(grid, dtype=float)
    V = vandermonde(fam, grid, measure_moments.n)
    res = solve_bp(BasisPursuitProblem(V.entries, measure_moments.values), opts)
    if not res.optimal:
        return DiscreteMeasure.zero(fam.interval), res
    order = np.argsort(grid)
    measure = DiscreteMeasure.from_grid(
        grid[order], res.solution[order], fam.interval, opts.atom_prune_tol
    )
    return measure, res
