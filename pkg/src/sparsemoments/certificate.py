"""Generalized dual polynomials: construction and verification.

A dual certificate for a Jordan support ``(S+, S-)`` is a generalized
polynomial ``P = sum_k a_k u_k`` with ``P = +1`` on ``S+``, ``P = -1`` on
``S-`` and ``|P| < 1`` everywhere else, together with injectivity of the
Vandermonde system at the support. Its existence guarantees that every
measure with that sign pattern is the unique TV minimizer among measures
sharing its moments.

The continuum condition ``|P| < 1`` is checked on a uniform grid.
"""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as Pl

from .errors import CapacityError, NumericalFailure
from .measures import JordanSupport
from .msystem import FunctionFamily, has_full_column_rank, index, vandermonde

DEFAULT_GRID = 10_001
INTERP_TOL = 1e-9
SUP_TOL = 1e-9
MARGIN_TOL = 1e-9
#: exclusion radius for a one-point support, as a fraction of the interval length
SINGLE_POINT_RADIUS = 0.05


@dataclass(frozen=True)
class CertificateReport:
    max_interp_residual: float
    grid_sup_norm: float
    off_support_margin: float
    vandermonde_full_rank: bool
    verified: bool
    grid_size: int
    exclusion_radius: float


@dataclass(frozen=True)
class DualCertificate:
    """Coefficients of ``P`` in the family basis plus its verification report."""

    coefficients: np.ndarray
    family: FunctionFamily
    support: tuple[tuple[float, int], ...]
    report: CertificateReport

    @property
    def family_id(self) -> str:
        return self.family.family_id

    @property
    def verified(self) -> bool:
        return self.report.verified

    @property
    def jordan(self) -> JordanSupport:
        return JordanSupport.from_signs(*zip(*self.support)) if self.support else JordanSupport()

    def __call__(self, x):
        return self.family.evaluate_poly(self.coefficients, x)

    def to_dict(self) -> dict:
        a = np.asarray(self.coefficients)
        coeffs = [[z.real, z.imag] for z in a.tolist()] if np.iscomplexobj(a) else a.tolist()
        return {
            "family": self.family.to_config(),
            "coefficients": coeffs,
            "support": [[x, e] for x, e in self.support],
            "report": asdict(self.report),
        }


def _as_pairs(support_signs) -> list[tuple[float, int]]:
    if isinstance(support_signs, JordanSupport):
        pairs = zip(support_signs.locations.tolist(), support_signs.signs.tolist())
    else:
        pairs = support_signs
    out = []
    for x, e in pairs:
        e = int(round(float(e)))
        if e not in (-1, 1):
            raise ValueError(f"sign must be +1 or -1, got {e}")
        out.append((float(x), e))
    out.sort()
    xs = [x for x, _ in out]
    if len(set(xs)) != len(xs):
        raise ValueError("support locations must be distinct")
    return out


def uniform_grid(fam: FunctionFamily, size: int) -> np.ndarray:
    lo, hi = fam.interval
    # the complex exponential domain excludes its right end
    return np.linspace(lo, hi, size, endpoint=fam.kind != "complex_exponential")


@functools.lru_cache(maxsize=16)
def _grid_matrix(fam: FunctionFamily, size: int):
    grid = uniform_grid(fam, size)
    V = fam.evaluate_matrix(grid)
    V.setflags(write=False)
    return grid, V


def _exclusion_radius(xs, interval) -> float:
    if len(xs) >= 2:
        return 0.5 * float(np.min(np.diff(np.sort(xs))))
    return SINGLE_POINT_RADIUS * (interval[1] - interval[0])


def verify_dual_polynomial(
    coefficients,
    fam: FunctionFamily,
    support_signs,
    grid_size: int = DEFAULT_GRID,
    *,
    interp_tol: float = INTERP_TOL,
    sup_tol: float = SUP_TOL,
    margin_tol: float = MARGIN_TOL,
    exclusion_radius: float | None = None,
    rank_tol: float = 1e-10,
) -> DualCertificate:
    """Check the three certificate conditions for ``P = sum a_k u_k``.

    Parameters
    ----------
    coefficients : array_like
        ``a_0..a_m``; ``m`` may be below the family degree.
    fam : FunctionFamily
    support_signs : JordanSupport or iterable of (location, sign)
    grid_size : int
        Points in the uniform verification grid.
    exclusion_radius : float, optional
        Grid points this close to the support are left out of the strict
        ``|P| < 1`` check. Defaults to half the smallest gap between
        support points (a fixed fraction of the interval for one point).

    Returns
    -------
    DualCertificate
        Failing any condition gives ``verified = False``; nothing is raised.
    """
    a = np.asarray(coefficients)
    m = a.size - 1
    if m > fam.n:
        raise ValueError(f"{a.size} coefficients for a family of degree {fam.n}")
    fam_m = fam if m == fam.n else fam.with_degree(m)
    pairs = _as_pairs(support_signs)
    xs = np.array([x for x, _ in pairs])
    eps = np.array([e for _, e in pairs], dtype=float)

    grid, V = _grid_matrix(fam_m, grid_size)
    Pg = np.abs(a @ V)
    if xs.size:
        Ps = fam_m.evaluate_poly(a, xs)
        interp = float(np.max(np.abs(Ps - eps)))
        sup = float(max(Pg.max(), np.abs(Ps).max()))
        radius = _exclusion_radius(xs, fam.interval) if exclusion_radius is None else exclusion_radius
        dist = np.min(np.abs(grid[:, None] - xs[None, :]), axis=1)
        outside = dist >= radius
        margin = float(1.0 - Pg[outside].max()) if outside.any() else math.inf
        full_rank = has_full_column_rank(vandermonde(fam_m, xs), rank_tol)
    else:
        interp, sup, radius, full_rank = 0.0, float(Pg.max()), 0.0, True
        margin = float(1.0 - Pg.max())

    verified = interp <= interp_tol and sup <= 1.0 + sup_tol and margin > margin_tol and full_rank
    report = CertificateReport(
        max_interp_residual=interp,
        grid_sup_norm=sup,
        off_support_margin=margin,
        vandermonde_full_rank=bool(full_rank),
        verified=bool(verified),
        grid_size=int(grid_size),
        exclusion_radius=float(radius),
    )
    return DualCertificate(a, fam_m, tuple(pairs), report)


# ---------------------------------------------------------------------------
# nonnegative certificates  P = 1 - c Q  with Q >= 0 vanishing on the support


def _root_factors(ts, lo, hi, interior_power=2):
    """Monic-ish factors of a polynomial in ``t`` that is >= 0 on ``[lo, hi]``
    and vanishes exactly at ``ts`` (double roots inside, simple at the ends)."""
    poly = np.array([1.0])
    for t in ts:
        if t == lo:
            f = np.array([-lo, 1.0])  # t - lo
        elif t == hi:
            f = np.array([hi, -1.0])  # hi - t
        else:
            f = Pl.polypow([-t, 1.0], interior_power)
        poly = Pl.polymul(poly, f)
    return poly


def _vanishing_coefficients(fam: FunctionFamily, xs, n):
    """Coefficients of a nonnegative ``Q`` vanishing on ``xs``, or ``None`` if
    there is no exact construction for this family."""
    lo, hi = fam.interval
    if fam.kind == "power":
        q = _root_factors(xs, lo, hi)
    elif fam.kind == "cosine" and (lo, hi) == (0.0, 1.0):
        # cos(k pi x) = T_k(cos pi x); y = cos(pi x) reverses [0, 1] onto [-1, 1]
        ys = np.cos(np.pi * np.asarray(xs))
        ys[np.asarray(xs) == 0.0] = 1.0
        ys[np.asarray(xs) == 1.0] = -1.0
        q = C.poly2cheb(_root_factors(ys, -1.0, 1.0))
    elif fam.kind == "laplace":
        # exp(-k x) = z^k with z = exp(-x) on [exp(-hi), exp(-lo)]
        zlo, zhi = math.exp(-hi), math.exp(-lo)
        zs = np.exp(-np.asarray(xs))
        zs[np.asarray(xs) == lo] = zhi
        zs[np.asarray(xs) == hi] = zlo
        q = _root_factors(zs, zlo, zhi)
    else:
        return None
    out = np.zeros(n + 1)
    out[: q.size] = q
    return out


def _lstsq_vanishing(fam: FunctionFamily, xs, n, fit_size=2001):
    """Least-squares fit of the squared-distance profile under the constraints
    ``Q(x_i) = 0`` and ``Q'(x_i) = 0`` at interior points."""
    lo, hi = fam.interval
    grid = uniform_grid(fam, fit_size)
    profile = np.ones_like(grid)
    for t in xs:
        if t == lo:
            profile *= grid - lo
        elif t == hi:
            profile *= hi - grid
        else:
            profile *= (grid - t) ** 2
    profile /= np.abs(profile).max()
    interior = [t for t in xs if lo < t < hi]
    rows = [fam.evaluate_matrix(xs, n).T]
    if interior:
        rows.append(fam.evaluate_matrix(interior, n, derivative=True).T)
    Cm = np.vstack(rows)
    Vg = fam.evaluate_matrix(grid, n).T
    # a = a0 + N z with C a0 = 0 means a lies in null(C)
    N = scipy.linalg.null_space(Cm)
    if N.shape[1] == 0:
        raise NumericalFailure("no room for a vanishing polynomial at this support")
    z = np.linalg.lstsq(Vg @ N, profile, rcond=None)[0]
    return N @ z


def build_nonnegative_dual(
    fam: FunctionFamily,
    support,
    n: int | None = None,
    *,
    margin: float = 0.1,
    grid_size: int = DEFAULT_GRID,
) -> DualCertificate:
    """Certificate ``P = 1 - c Q`` for nonnegative measures on ``support``.

    ``Q`` is a nonnegative generalized polynomial vanishing exactly on the
    support. For the power, cosine and Laplace families it is a product of
    squared linear factors in the variable that turns the family into
    ordinary polynomials. Other families get a constrained least-squares
    fit that must then pass verification. ``c`` scales the grid maximum of
    ``cQ`` to ``1 - margin``.

    Raises
    ------
    CapacityError
        Empty support, or index of the support larger than ``n``.
    NumericalFailure
        The construction does not verify; the failed certificate is in
        ``payload``.
    """
    n = fam.n if n is None else n
    if not fam.is_homogeneous:
        raise ValueError("nonnegative certificates need a homogeneous family")
    xs = np.sort(np.asarray(list(support), dtype=float))
    if xs.size == 0:
        raise CapacityError("empty support has no nonnegative certificate")
    if np.unique(xs).size != xs.size:
        raise ValueError("support locations must be distinct")
    fam_n = fam.with_degree(n)
    if index(xs, fam.interval) > n:
        raise CapacityError(f"support index {index(xs, fam.interval)} exceeds n = {n}")

    q = _vanishing_coefficients(fam_n, xs, n)
    if q is None:
        q = _lstsq_vanishing(fam_n, xs, n)
    _, V = _grid_matrix(fam_n, grid_size)
    Qg = np.real(q @ V)
    peak = Qg.max()
    if not peak > 0:
        raise NumericalFailure("vanishing polynomial is not positive anywhere on the grid")
    coeffs = -(1.0 - margin) / peak * q
    coeffs = coeffs.astype(np.result_type(coeffs, float))
    coeffs[0] += 1.0
    cert = verify_dual_polynomial(coeffs, fam_n, [(x, 1) for x in xs], grid_size)
    if not cert.verified:
        raise NumericalFailure("nonnegative certificate failed verification", cert)
    return cert


# ---------------------------------------------------------------------------
# L2-minimal sign interpolant


def gram_matrix(fam: FunctionFamily, n: int | None = None) -> np.ndarray:
    """``G[j, k] = int_I u_j conj(u_k) dx`` in closed form."""
    n = fam.n if n is None else n
    if not fam.is_homogeneous:
        raise ValueError("no closed-form Gram matrix for a weighted family")
    lo, hi = fam.interval
    L = hi - lo
    j, k = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")

    if fam.kind == "power":
        m = j + k + 1
        return (hi**m - lo**m) / m
    if fam.kind == "muntz":
        a = np.concatenate([[0.0], fam.exponents[:n]])
        e = a[:, None] + a[None, :] + 1
        return (hi**e - lo**e) / e
    if fam.kind == "laplace":
        m = (j + k).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            G = (np.exp(-m * lo) - np.exp(-m * hi)) / m
        G[m == 0] = L
        return G
    if fam.kind == "cosine":

        def icos(m):
            m = m.astype(float)
            with np.errstate(invalid="ignore", divide="ignore"):
                v = (np.sin(m * np.pi * hi) - np.sin(m * np.pi * lo)) / (m * np.pi)
            return np.where(m == 0, L, v)

        return 0.5 * (icos(j - k) + icos(j + k))
    if fam.kind == "complex_exponential":
        m = (j - k).astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            G = (np.exp(1j * m * np.pi * hi) - np.exp(1j * m * np.pi * lo)) / (1j * m * np.pi)
        G[m == 0] = L
        return G
    # stieltjes: u_0 = 1, u_k = 1/(z_k - x); conj(u_k) = 1/(conj z_k - x)
    z = np.array(fam.poles[:n], dtype=complex)

    def log_int(w):  # int 1/(w - x) dx
        return np.log(w - lo) - np.log(w - hi)

    G = np.empty((n + 1, n + 1), dtype=complex)
    G[0, 0] = L
    G[0, 1:] = log_int(np.conj(z))
    G[1:, 0] = log_int(z)
    for p in range(n):
        for q in range(n):
            a, b = z[p], np.conj(z[q])
            if abs(a - b) < 1e-14 * (1 + abs(a)):
                G[p + 1, q + 1] = 1.0 / (a - hi) - 1.0 / (a - lo)
            else:
                G[p + 1, q + 1] = (log_int(a) - log_int(b)) / (b - a)
    if not fam.is_complex:
        G = G.real
    return G


def build_l2_sign_interpolant(
    fam: FunctionFamily,
    jordan: JordanSupport,
    n: int | None = None,
    *,
    grid_size: int = DEFAULT_GRID,
) -> DualCertificate:
    """Minimum ``L2(I)`` norm polynomial matching the sign pattern.

    Constraints are ``P(x_i) = sign_i`` at every support point and
    ``P'(x_i) = 0`` at interior ones. The KKT system
    ``[[G, C^H], [C, 0]] [a; lam] = [0; d]`` is solved directly and the
    result verified; ``verified`` may well be false.

    Raises
    ------
    CapacityError
        More constraints than coefficients.
    NumericalFailure
        Singular KKT system or constraints not met by the solve.
    """
    n = fam.n if n is None else n
    fam_n = fam.with_degree(n)
    pairs = _as_pairs(jordan)
    xs = np.array([x for x, _ in pairs])
    eps = np.array([e for _, e in pairs], dtype=float)
    lo, hi = fam.interval
    interior = xs[(xs > lo) & (xs < hi)]
    n_con = xs.size + interior.size
    if xs.size == 0:
        raise CapacityError("empty sign pattern")
    if n_con > n + 1:
        raise CapacityError(f"{n_con} constraints for {n + 1} coefficients")

    rows = [fam_n.evaluate_matrix(xs).T]
    rhs = [eps]
    if interior.size:
        rows.append(fam_n.evaluate_matrix(interior, derivative=True).T)
        rhs.append(np.zeros(interior.size))
    Cm = np.vstack(rows)
    d = np.concatenate(rhs)
    G = gram_matrix(fam_n)

    K = np.block([[G, Cm.conj().T], [Cm, np.zeros((n_con, n_con))]])
    rhs_full = np.concatenate([np.zeros(n + 1), d])
    try:
        with warnings.catch_warnings():
            # rcond below machine precision: treat as singular
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            sol = scipy.linalg.solve(K, rhs_full, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
        raise NumericalFailure(f"singular KKT system: {exc}") from exc
    a = sol[: n + 1]
    if not np.all(np.isfinite(a)) or np.max(np.abs(Cm @ a - d)) > 1e-6:
        raise NumericalFailure("KKT solve does not meet the interpolation constraints")
    if np.iscomplexobj(a) and not fam_n.is_complex:
        a = a.real
    return verify_dual_polynomial(a, fam_n, pairs, grid_size)


def delta_degree_bound(delta: float) -> float:
    """Degree sufficient for sign interpolation on ``delta``-separated supports.

    ``(2/sqrt(pi)) * (sqrt(e)/delta) ** (5/2 + 1/delta)``, evaluated in
    log space; returns ``inf`` past the float range.
    """
    delta = float(delta)
    if not 0.0 < delta <= 2.0:
        raise ValueError(f"delta must lie in (0, 2], got {delta}")
    log_val = math.log(2.0 / math.sqrt(math.pi)) + (2.5 + 1.0 / delta) * (0.5 - math.log(delta))
    try:
        return math.exp(log_val)
    except OverflowError:
        return math.inf


def check_weak_nullspace_instance(fam: FunctionFamily, n: int, jordan: JordanSupport) -> bool:
    """Whether a verified L2 sign interpolant exists for ``jordan`` at degree ``n``."""
    try:
        return build_l2_sign_interpolant(fam, jordan, n).verified
    except (CapacityError, NumericalFailure):
        return False
