"""Catalog of Markov function systems and generalized Vandermonde matrices.

Every family here is stored in homogeneous form (``u_0`` constant) unless
it carries a positive weight, which only the counterexample generator
builds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

KINDS = ("power", "cosine", "complex_exponential", "laplace", "stieltjes", "muntz")

DEFAULT_INTERVALS = {
    "power": (-1.0, 1.0),
    "cosine": (0.0, 1.0),
    "complex_exponential": (-1.0, 1.0),
    "laplace": (-1.0, 1.0),
    "stieltjes": (-1.0, 1.0),
    "muntz": (0.0, 1.0),
}

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class FunctionFamily:
    """An ordered family ``u_0, ..., u_n`` of continuous functions.

    Parameters
    ----------
    kind : str
        One of :data:`KINDS`.
    n : int
        Highest index; the family has ``n + 1`` members.
    interval : (float, float), optional
        Domain. Defaults per kind (see :data:`DEFAULT_INTERVALS`). The
        complex exponential family is right-open: ``hi`` itself is excluded
        because ``exp(i k pi x)`` takes equal values at both ends of a
        length-2 interval.
    poles : tuple of complex
        Stieltjes poles ``z_1..z_n``, none on the interval.
    exponents : tuple of float
        Muntz exponents ``0 < a_1 < ... < a_n``; default ``a_k = k/2``.
    weight_knots : tuple of (x, value), optional
        Positive piecewise-linear weight multiplying every member. A weighted
        family is not homogeneous.
    """

    kind: str
    n: int
    interval: tuple[float, float] | None = None
    poles: tuple[complex, ...] = ()
    exponents: tuple[float, ...] = ()
    weight_knots: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        lo, hi = self.interval if self.interval is not None else DEFAULT_INTERVALS[self.kind]
        lo, hi = float(lo), float(hi)
        if not lo < hi:
            raise ValueError("empty interval")
        object.__setattr__(self, "interval", (lo, hi))

        if self.kind == "stieltjes":
            poles = tuple(complex(z) for z in self.poles)
            if len(poles) < self.n:
                raise ValueError(f"stieltjes family of degree {self.n} needs {self.n} poles")
            poles = poles[: self.n]
            for z in poles:
                if z.imag == 0.0 and lo <= z.real <= hi:
                    raise ValueError(f"pole {z} lies on the interval")
            if len(set(poles)) != len(poles):
                raise ValueError("stieltjes poles must be distinct")
            object.__setattr__(self, "poles", poles)
        if self.kind == "muntz":
            exps = tuple(float(a) for a in self.exponents) or tuple(
                k / 2 for k in range(1, self.n + 1)
            )
            if len(exps) < self.n:
                raise ValueError(f"muntz family of degree {self.n} needs {self.n} exponents")
            exps = exps[: self.n]
            if exps and (exps[0] <= 0 or np.any(np.diff(exps) <= 0)):
                raise ValueError("muntz exponents must be positive and strictly increasing")
            if lo < 0:
                raise ValueError("muntz family needs a nonnegative interval")
            object.__setattr__(self, "exponents", exps)
        if self.weight_knots:
            knots = tuple(sorted((float(x), float(v)) for x, v in self.weight_knots))
            if min(v for _, v in knots) <= 0:
                raise ValueError("weight must be positive")
            object.__setattr__(self, "weight_knots", knots)

    # -- constructors ---------------------------------------------------------

    @classmethod
    def power(cls, n, interval=None):
        return cls("power", n, interval)

    @classmethod
    def cosine(cls, n, interval=None):
        return cls("cosine", n, interval)

    @classmethod
    def complex_exponential(cls, n, interval=None):
        return cls("complex_exponential", n, interval)

    @classmethod
    def laplace(cls, n, interval=None):
        return cls("laplace", n, interval)

    @classmethod
    def stieltjes(cls, poles, interval=None):
        return cls("stieltjes", len(poles), interval, poles=tuple(poles))

    @classmethod
    def muntz(cls, exponents, interval=None):
        return cls("muntz", len(exponents), interval, exponents=tuple(exponents))

    def with_degree(self, n: int) -> "FunctionFamily":
        """Same family truncated (or extended, where parameters allow) to degree ``n``."""
        return FunctionFamily(
            self.kind, n, self.interval, self.poles, self.exponents, self.weight_knots
        )

    def weighted(self, knots) -> "FunctionFamily":
        """The non-homogeneous family ``{w u_0, w u_1, ...}`` for a piecewise-linear ``w``."""
        return FunctionFamily(
            self.kind, self.n, self.interval, self.poles, self.exponents, tuple(knots)
        )

    # -- properties -----------------------------------------------------------

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def is_homogeneous(self) -> bool:
        return not self.weight_knots

    @property
    def is_complex(self) -> bool:
        if self.kind == "complex_exponential":
            return True
        return self.kind == "stieltjes" and any(z.imag != 0 for z in self.poles)

    @property
    def family_id(self) -> str:
        lo, hi = self.interval
        extra = ""
        if self.kind == "stieltjes":
            extra = ",poles=" + ";".join(f"{z.real:g}{z.imag:+g}i" for z in self.poles)
        elif self.kind == "muntz":
            extra = ",exponents=" + ";".join(f"{a:g}" for a in self.exponents)
        if self.weight_knots:
            extra += ",weighted"
        return f"{self.kind}(n={self.n},I=[{lo:g},{hi:g}]{extra})"

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo, hi = self.interval
        if self.kind == "complex_exponential":
            return (x >= lo) & (x < hi)
        return (x >= lo) & (x <= hi)

    def _check_domain(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(self.contains(x)):
            bad = x[~self.contains(x)]
            raise DomainError(f"{bad[0]!r} outside the domain of {self.family_id}")
        return x

    # -- evaluation -----------------------------------------------------------

    def _weight(self, x, derivative=False):
        xs, vs = np.array(self.weight_knots).T
        if not derivative:
            return np.interp(x, xs, vs)
        slopes = np.diff(vs) / np.diff(xs)
        idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
        return slopes[idx]

    def _raw(self, k: int, x: np.ndarray, derivative: bool):
        kind = self.kind
        if kind == "power":
            if not derivative:
                return x**k
            return k * x ** (k - 1) if k else np.zeros_like(x)
        if kind == "cosine":
            if not derivative:
                return np.cos(k * np.pi * x)
            return -k * np.pi * np.sin(k * np.pi * x)
        if kind == "complex_exponential":
            e = np.exp(1j * k * np.pi * x)
            return 1j * k * np.pi * e if derivative else e
        if kind == "laplace":
            e = np.exp(-k * x)
            return -k * e if derivative else e
        if k == 0:
            return np.zeros_like(x) if derivative else np.ones_like(x)
        if kind == "stieltjes":
            z = self.poles[k - 1]
            if z.imag == 0:
                z = z.real
            return 1.0 / (z - x) ** 2 if derivative else 1.0 / (z - x)
        a = self.exponents[k - 1]  # muntz
        if not derivative:
            return x**a
        with np.errstate(divide="ignore"):
            return a * x ** (a - 1)

    def _member(self, k, x, derivative=False):
        if not 0 <= k <= self.n:
            raise IndexError(f"index {k} outside 0..{self.n}")
        if not self.weight_knots:
            return self._raw(k, x, derivative)
        if not derivative:
            return self._weight(x) * self._raw(k, x, False)
        return self._weight(x, True) * self._raw(k, x, False) + self._weight(x) * self._raw(
            k, x, True
        )

    def evaluate(self, k: int, x: float):
        """Value of ``u_k`` at a single point."""
        v = self._member(k, self._check_domain(x), False)[0]
        return complex(v) if np.iscomplexobj(v) else float(v)

    def evaluate_matrix(self, x, n: int | None = None, derivative: bool = False) -> np.ndarray:
        """``(n+1) x m`` array with entry ``[k, j] = u_k(x_j)`` (or ``u_k'(x_j)``)."""
        n = self.n if n is None else n
        if n > self.n:
            raise ValueError(f"family has degree {self.n}, asked for {n}")
        x = self._check_domain(x)
        rows = [np.broadcast_to(self._member(k, x, derivative), x.shape) for k in range(n + 1)]
        return np.array(rows)

    def evaluate_poly(self, coefficients, x, derivative: bool = False) -> np.ndarray:
        """Generalized polynomial ``sum_k a_k u_k`` evaluated at ``x``."""
        a = np.asarray(coefficients)
        V = self.evaluate_matrix(x, a.size - 1, derivative)
        out = a @ V
        if np.iscomplexobj(out) and np.all(np.abs(out.imag) <= 1e-13 * (1 + np.abs(out.real))):
            out = out.real
        return out

    # -- config ---------------------------------------------------------------

    def to_config(self) -> dict:
        cfg = {"kind": self.kind, "n": self.n, "interval": list(self.interval)}
        if self.kind == "stieltjes":
            cfg["poles"] = [[z.real, z.imag] for z in self.poles]
        if self.kind == "muntz":
            cfg["exponents"] = list(self.exponents)
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "FunctionFamily":
        """Build from ``{"kind": "cosine", "n": 41}``-style dictionaries.

        Stieltjes poles are given as ``[[re, im], ...]``.
        """
        kind = cfg["kind"].lower().replace("-", "_")
        kind = {"exponential": "complex_exponential", "polynomial": "power"}.get(kind, kind)
        poles = tuple(complex(re, im) for re, im in cfg.get("poles", []))
        interval = tuple(cfg["interval"]) if cfg.get("interval") else None
        n = int(cfg.get("n", len(poles) or len(cfg.get("exponents", []))))
        return cls(kind, n, interval, poles, tuple(cfg.get("exponents", ())))


@dataclass(frozen=True)
class VandermondeMatrix:
    entries: np.ndarray
    nodes: np.ndarray
    family_id: str

    @property
    def shape(self):
        return self.entries.shape


def vandermonde(fam: FunctionFamily, nodes, n: int | None = None) -> VandermondeMatrix:
    """Generalized Vandermonde matrix ``A[k, j] = u_k(t_j)``."""
    nodes = np.atleast_1d(np.asarray(nodes, dtype=float))
    if np.unique(nodes).size != nodes.size:
        raise ValueError("duplicate Vandermonde nodes")
    entries = fam.evaluate_matrix(nodes, n)
    entries.setflags(write=False)
    return VandermondeMatrix(entries, nodes, fam.family_id)


def real_rows(A: np.ndarray) -> np.ndarray:
    """Stack ``[Re A; Im A]`` for complex ``A``; real input passes through."""
    A = np.asarray(A)
    if np.iscomplexobj(A):
        return np.vstack([A.real, A.imag])
    return A


def has_full_column_rank(V, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Whether the columns are independent, judged by singular values.

    Complex matrices are tested as maps on real weight vectors (their
    ``[Re; Im]`` stacking), which is what injectivity means for real
    measures. A wide matrix is never full column rank.
    """
    A = real_rows(V.entries if isinstance(V, VandermondeMatrix) else V)
    rows, cols = A.shape
    if cols == 0:
        return True
    if cols > rows:
        return False
    s = np.linalg.svd(A, compute_uv=False)
    return bool(s[-1] > tol * s[0])


def index(locations, interval) -> int:
    """Zero-capacity count: 2 per interior point, 1 per endpoint."""
    lo, hi = interval
    total = 0
    for t in locations:
        if t < lo or t > hi:
            raise DomainError(f"{t} outside [{lo}, {hi}]")
        total += 1 if t in (lo, hi) else 2
    return total
