"""Classical and generalized Chebyshev polynomials.

The generalized Chebyshev polynomial of order ``k`` for a real T-system
is the normalized error ``u_k - sum_{j<k} a_j u_j`` of the best uniform
approximation of ``u_k`` from the first ``k`` members. It equioscillates
at ``k + 1`` points, and its ``+1``/``-1`` level sets carry measures that
are recovered from ``k + 1`` moments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from .errors import DomainError, NumericalFailure
from .measures import JordanSupport
from .msystem import FunctionFamily

EPS = np.finfo(float).eps


def classical_T(k: int, x):
    """``T_k(x) = cos(k arccos x)`` by the three-term recurrence."""
    if k < 0:
        raise ValueError("k must be >= 0")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise DomainError("classical_T is defined on [-1, 1]")
    t_prev, t = np.ones_like(x), x.copy()
    if k == 0:
        t = t_prev
    for _ in range(k - 1):
        t_prev, t = t, 2.0 * x * t - t_prev
    return float(t) if scalar else t


def _clean(v):
    v = float(v)
    if abs(v) < 1e-15:
        return 0.0
    if abs(abs(v) - 1.0) < 1e-15:
        return float(np.sign(v))
    return v


def extrema_sets(k: int) -> JordanSupport:
    """Points where ``T_k = +1`` (plus) and ``T_k = -1`` (minus) on [-1, 1]."""
    if k < 1:
        raise ValueError("k must be >= 1")
    plus = [_clean(np.cos(2 * l * np.pi / k)) for l in range(k // 2 + 1)]
    minus = [_clean(np.cos((2 * l + 1) * np.pi / k)) for l in range((k - 1) // 2 + 1)]
    return JordanSupport(tuple(plus), tuple(minus))


@dataclass(frozen=True)
class RemezOptions:
    grid_size: int = 20_001
    #: stop once (max |error|) / (levelled error) - 1 falls below this, or
    #: below the rounding noise of evaluating the error if that is larger
    tol: float = 1e-10
    max_iter: int = 100


@dataclass(frozen=True)
class ChebyshevResult:
    coefficients: np.ndarray
    alternation_points: np.ndarray
    sup_norm: float
    equioscillation_residual: float
    sign_at_right_end: float
    family: FunctionFamily = field(repr=False)
    iterations: int = 0

    def __call__(self, x):
        return self.family.evaluate_poly(self.coefficients, x)

    @property
    def values(self) -> np.ndarray:
        return self(self.alternation_points)

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_config(),
            "coefficients": self.coefficients.tolist(),
            "alternation_points": self.alternation_points.tolist(),
            "values": np.asarray(self.values).tolist(),
            "sup_norm": self.sup_norm,
            "equioscillation_residual": self.equioscillation_residual,
            "sign_at_right_end": self.sign_at_right_end,
            "iterations": self.iterations,
        }


def _alternating_peaks(err):
    """Index of the largest ``|err|`` within each run of constant sign."""
    sgn = np.sign(err)
    # zeros join the run on their left
    for i in range(1, sgn.size):
        if sgn[i] == 0:
            sgn[i] = sgn[i - 1]
    breaks = np.flatnonzero(np.diff(sgn) != 0) + 1
    peaks = []
    for run in np.split(np.arange(err.size), breaks):
        if run.size and sgn[run[0]] != 0:
            peaks.append(run[np.argmax(np.abs(err[run]))])
    return peaks


def generalized_chebyshev(
    fam: FunctionFamily, k: int, opts: RemezOptions | None = None
) -> ChebyshevResult:
    """Best uniform approximation of ``u_k`` by ``u_0..u_{k-1}`` via Remez exchange.

    Uses the multi-point exchange on a uniform working grid, polishing each
    interior extremum with a golden-section search. The result is scaled to
    unit sup norm with a positive value at the right end of the interval.

    Raises
    ------
    NumericalFailure
        The reference degenerates, the exchange stalls, or the normalized
        polynomial vanishes at the right end. ``payload`` holds the last
        reference.
    """
    opts = opts or RemezOptions()
    if fam.is_complex:
        raise ValueError("Chebyshev polynomials are defined here for real families only")
    if not 1 <= k <= fam.n:
        raise ValueError(f"k must lie in 1..{fam.n}")
    fk = fam.with_degree(k)
    lo, hi = fam.interval
    grid = np.linspace(lo, hi, opts.grid_size)
    Ug = fk.evaluate_matrix(grid)

    def error_at(x, a):
        U = fk.evaluate_matrix(np.atleast_1d(x))
        return U[k] - a @ U[:k]

    # seed: extrema of T_k carried affinely onto the interval
    ref = lo + (hi - lo) * (1.0 - np.cos(np.pi * np.arange(k + 1) / k)) / 2.0
    alt = (-1.0) ** np.arange(k + 1)
    last_ref = None
    for it in range(1, opts.max_iter + 1):
        U = fk.evaluate_matrix(ref)
        system = np.column_stack([U[:k].T, alt])
        try:
            sol = np.linalg.solve(system, U[k])
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"degenerate Remez reference: {exc}", ref) from exc
        a, level = sol[:k], abs(sol[k])

        err = Ug[k] - a @ Ug[:k]
        peaks = _alternating_peaks(err)
        if len(peaks) < k + 1:
            raise NumericalFailure("fewer alternations than the order", ref)
        # drop the weaker end until exactly k + 1 alternating peaks remain
        while len(peaks) > k + 1:
            if abs(err[peaks[0]]) < abs(err[peaks[-1]]):
                peaks.pop(0)
            else:
                peaks.pop()

        # the error curve cannot be resolved more finely than its rounding noise
        noise = 4 * EPS * (np.abs(a) @ np.abs(Ug[:k]) + np.abs(Ug[k])).max()
        new_ref = grid[peaks].copy()
        for j, g in enumerate(peaks):
            if 0 < g < grid.size - 1:
                new_ref[j] = _polish(lambda x: -abs(error_at(x, a)[0]),
                                     grid[g - 1], grid[g], grid[g + 1], noise)
        peak_err = max(np.abs(err).max(), np.abs(error_at(new_ref, a)).max())
        # converged: keep the reference the levelled solve was built on
        if level > 0 and peak_err / level - 1.0 <= max(opts.tol, noise / level):
            break
        ref = new_ref
        if last_ref is not None and np.array_equal(ref, last_ref):
            raise NumericalFailure("Remez exchange stalled", ref)
        last_ref = ref
    else:
        raise NumericalFailure(f"Remez did not converge in {opts.max_iter} iterations", ref)

    # final levelled solve on the converged reference
    U = fk.evaluate_matrix(ref)
    sol = np.linalg.solve(np.column_stack([U[:k].T, alt]), U[k])
    raw = np.concatenate([-sol[:k], [1.0]])
    vals = raw @ fk.evaluate_matrix(ref)
    scale = np.abs(vals).max()
    right = (raw @ fk.evaluate_matrix([hi]))[0] / scale
    if abs(right) < 1e-12:
        raise NumericalFailure("normalized polynomial vanishes at the right end", ref)
    coeffs = raw * np.sign(right) / scale
    right_end = float((coeffs @ fk.evaluate_matrix([hi]))[0])
    vals = coeffs @ fk.evaluate_matrix(ref)
    if np.any(np.sign(vals[1:]) == np.sign(vals[:-1])):
        raise NumericalFailure("values at the reference do not alternate", ref)
    sup = float(max(np.abs(coeffs @ Ug).max(), np.abs(vals).max()))
    return ChebyshevResult(
        coefficients=coeffs,
        alternation_points=ref,
        sup_norm=sup,
        equioscillation_residual=float(np.abs(np.abs(vals) - 1.0).max()),
        sign_at_right_end=float(np.sign(right_end)),
        family=fk,
        iterations=it,
    )


def _polish(f, a, b, c, noise=0.0):
    """Golden-section minimum of ``f`` bracketed by ``a < b < c``.

    The move is kept only if it lowers ``f`` by more than ``noise``.
    """
    try:
        res = scipy.optimize.minimize_scalar(f, bracket=(a, b, c), method="golden", tol=1e-12)
    except ValueError:
        return b
    x = float(res.x)
    # |error| is flat at a peak; moves that do not beat rounding are noise
    fb = f(b)
    return x if a <= x <= c and f(x) < fb - max(noise, 1e-14 * abs(fb)) else b


def chebyshev_measure_support(
    fam: FunctionFamily, k: int, opts: RemezOptions | None = None
) -> JordanSupport:
    """Alternation points of the order-``k`` Chebyshev polynomial split by sign."""
    res = generalized_chebyshev(fam, k, opts)
    return JordanSupport.from_signs(res.alternation_points.tolist(), np.sign(res.values))
