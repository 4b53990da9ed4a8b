"""Finitely supported signed measures and their generalized moments."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError

#: Atoms lighter than this are refused at construction.
MIN_WEIGHT = 1e-14


def _frozen(a):
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JordanSupport:
    """Supports of the positive and negative parts of a signed measure."""

    plus: tuple[float, ...] = ()
    minus: tuple[float, ...] = ()

    def __post_init__(self):
        plus = tuple(sorted(float(x) for x in self.plus))
        minus = tuple(sorted(float(x) for x in self.minus))
        if set(plus) & set(minus):
            raise ValueError("positive and negative supports must be disjoint")
        if len(set(plus)) != len(plus) or len(set(minus)) != len(minus):
            raise ValueError("duplicate location in Jordan support")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @property
    def locations(self) -> np.ndarray:
        """All support points, ascending."""
        return np.array(sorted(self.plus + self.minus), dtype=float)

    @property
    def signs(self) -> np.ndarray:
        """Sign (+1/-1) attached to each entry of :attr:`locations`."""
        plus = set(self.plus)
        return np.array([1.0 if x in plus else -1.0 for x in self.locations])

    @classmethod
    def from_signs(cls, locations, signs) -> "JordanSupport":
        plus = [x for x, e in zip(locations, signs) if e > 0]
        minus = [x for x, e in zip(locations, signs) if e < 0]
        return cls(tuple(plus), tuple(minus))

    def __len__(self):
        return len(self.plus) + len(self.minus)


@dataclass(frozen=True)
class DiscreteMeasure:
    """A signed measure ``sum_i w_i delta_{x_i}`` on a closed interval.

    Locations are kept strictly increasing. Use :meth:`from_atoms` to
    build one from unordered ``(location, weight)`` pairs.
    """

    locations: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        x = np.asarray(self.locations, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if x.shape != w.shape:
            raise ValueError("locations and weights differ in length")
        lo, hi = map(float, self.interval)
        if not lo < hi:
            raise ValueError(f"empty interval {self.interval!r}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValueError("non-finite atom")
        if x.size and (x.min() < lo or x.max() > hi):
            raise DomainError(f"atom outside [{lo}, {hi}]")
        if np.any(np.diff(x) <= 0):
            raise ValueError("locations must be strictly increasing (use from_atoms)")
        if np.any(np.abs(w) < MIN_WEIGHT):
            raise ValueError(f"atom weight below {MIN_WEIGHT}; prune before building")
        object.__setattr__(self, "locations", _frozen(x))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "interval", (lo, hi))

    @classmethod
    def from_atoms(cls, atoms: Iterable[Sequence[float]], interval=(-1.0, 1.0)):
        atoms = sorted((float(x), float(w)) for x, w in atoms)
        xs = [a[0] for a in atoms]
        if len(set(xs)) != len(xs):
            raise ValueError("duplicate atom location")
        return cls(np.array(xs), np.array([a[1] for a in atoms]), interval)

    @classmethod
    def from_grid(cls, grid, values, interval, prune_tol=MIN_WEIGHT):
        """Measure carried by ``grid`` with weights ``values``, small entries dropped."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        keep = (np.abs(values) > prune_tol) & (np.abs(values) >= MIN_WEIGHT)
        return cls.from_atoms(zip(grid[keep], values[keep]), interval)

    @classmethod
    def zero(cls, interval=(-1.0, 1.0)):
        return cls(np.empty(0), np.empty(0), interval)

    @property
    def size(self) -> int:
        return int(self.locations.size)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    # -- arithmetic (atoms merged by exact location) -------------------------

    def _combine(self, other: "DiscreteMeasure", sign: float):
        if self.interval != other.interval:
            raise ValueError("measures live on different intervals")
        acc: dict[float, float] = {}
        for x, w in self.atoms:
            acc[x] = acc.get(x, 0.0) + w
        for x, w in other.atoms:
            acc[x] = acc.get(x, 0.0) + sign * w
        return DiscreteMeasure.from_atoms(
            [(x, w) for x, w in acc.items() if abs(w) >= MIN_WEIGHT], self.interval
        )

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        scalar = float(scalar)
        if scalar == 0.0:
            return DiscreteMeasure.zero(self.interval)
        w = self.weights * scalar
        keep = np.abs(w) >= MIN_WEIGHT
        return DiscreteMeasure(self.locations[keep], w[keep], self.interval)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def restrict(self, locations) -> "DiscreteMeasure":
        keep = np.isin(self.locations, np.asarray(list(locations), dtype=float))
        return DiscreteMeasure(self.locations[keep], self.weights[keep], self.interval)

    def positive_part(self):
        return self.restrict(jordan_decompose(self).plus)

    def negative_part(self):
        return -self.restrict(jordan_decompose(self).minus)

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"interval": list(self.interval), "atoms": [list(a) for a in self.atoms]}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteMeasure":
        return cls.from_atoms(data.get("atoms", []), tuple(data["interval"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DiscreteMeasure":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class MomentVector:
    """Observed generalized moments ``c_0 .. c_n``; real or complex."""

    values: np.ndarray
    family_id: str = ""
    _is_complex: bool = field(default=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("moment vector must be a non-empty 1-d array")
        is_complex = np.iscomplexobj(v)
        v = v.astype(complex if is_complex else float)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite moment")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "_is_complex", bool(is_complex))

    @property
    def is_complex(self) -> bool:
        return self._is_complex

    @property
    def n(self) -> int:
        return self.values.size - 1

    def to_dict(self) -> dict:
        if self.is_complex:
            vals = [[z.real, z.imag] for z in self.values.tolist()]
        else:
            vals = self.values.tolist()
        return {"family": self.family_id, "complex": self.is_complex, "values": vals}

    @classmethod
    def from_dict(cls, data: dict) -> "MomentVector":
        vals = data["values"]
        if data.get("complex") or (vals and isinstance(vals[0], (list, tuple))):
            vals = np.array([complex(re, im) for re, im in vals])
        return cls(np.asarray(vals), str(data.get("family", "")))


def tv_norm(m: DiscreteMeasure) -> float:
    """Total variation norm; for an atomic measure the sum of |weights|."""
    return float(np.abs(m.weights).sum())


def jordan_decompose(m: DiscreteMeasure) -> JordanSupport:
    return JordanSupport(
        tuple(m.locations[m.weights > 0].tolist()),
        tuple(m.locations[m.weights < 0].tolist()),
    )


def moments(m: DiscreteMeasure, fam, n: int | None = None) -> MomentVector:
    """Generalized moments ``c_k = sum_i w_i u_k(x_i)`` for ``k = 0..n``.

    ``fam`` is a :class:`~sparsemoments.msystem.FunctionFamily`; ``n``
    defaults to the family's full degree.
    """
    n = fam.n if n is None else n
    if n > fam.n:
        raise ValueError(f"family has only {fam.n + 1} functions, asked for {n + 1}")
    if m.size == 0:
        dtype = complex if fam.is_complex else float
        return MomentVector(np.zeros(n + 1, dtype=dtype), fam.family_id)
    V = fam.evaluate_matrix(m.locations, n)
    return MomentVector(V @ m.weights, fam.family_id)
