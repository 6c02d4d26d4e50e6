"""Exact finite-support distributions and one-tick stochastic kernels.

A kernel is a total map from input rows (tuples of values, one per wire) to
exact distributions over output rows. Deterministic maps are the kernels all
of whose outputs are Dirac. Probabilities are ``fractions.Fraction``
throughout; composition, marginals, conditionals and ranges are exact, so
tests compare tables with ``==`` and no tolerances.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional

from .errors import BadIndex, EmptySupport, NotEnumerable, ShapeMismatch
from .values import Row, Value, is_value, row_key, value_key, value_str

ONE = Fraction(1)
ZERO = Fraction(0)


# ---------------------------------------------------------------------------
# Wire shapes
# ---------------------------------------------------------------------------

class Base:
    """A single wire's type descriptor."""

    def contains(self, v: Value) -> bool:
        raise NotImplementedError

    def enumerate(self) -> tuple:
        raise NotEnumerable(f"{self} is not enumerable")

    @property
    def enumerable(self) -> bool:
        return True

    def card(self) -> int:
        return len(self.enumerate())

    def smallest(self) -> Value:
        return self.enumerate()[0]


@dataclass(frozen=True)
class UnitBase(Base):
    def contains(self, v):
        return v is None

    def enumerate(self):
        return (None,)

    def __repr__(self):
        return "unit"


@dataclass(frozen=True)
class BoolBase(Base):
    def contains(self, v):
        return isinstance(v, bool)

    def enumerate(self):
        return (False, True)

    def __repr__(self):
        return "bool"


@dataclass(frozen=True)
class IntBase(Base):
    """Unbounded integers. Total for arithmetic, but not enumerable."""

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool)

    def enumerate(self):
        raise NotEnumerable("int is not enumerable")

    @property
    def enumerable(self):
        return False

    def card(self):
        raise NotEnumerable("int is not enumerable")

    def smallest(self):
        raise NotEnumerable("int has no smallest element")

    def __repr__(self):
        return "int"


@dataclass(frozen=True)
class IntRange(Base):
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty range {self.lo}..{self.hi}")

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def enumerate(self):
        return tuple(range(self.lo, self.hi + 1))

    def __repr__(self):
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class FinSet(Base):
    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        if not vals:
            raise ValueError("FinSet must be nonempty")
        if len(set(vals)) != len(vals):
            raise ValueError("FinSet values must be distinct")
        if not all(is_value(v) for v in vals):
            raise ValueError("FinSet entries must be values")
        object.__setattr__(self, "values", tuple(sorted(vals, key=value_key)))

    def contains(self, v):
        return v in self.values

    def enumerate(self):
        return self.values

    def __repr__(self):
        return "{" + ",".join(value_str(v) for v in self.values) + "}"


UNIT = UnitBase()
BOOL = BoolBase()
INT = IntBase()

#: A wire bundle: a flat tuple of base descriptors. The empty tuple is the
#: monoidal unit; tensoring is concatenation, so associators are identities.
Shape = tuple

unit_shape: Shape = ()


def shape_enumerable(shape: Shape) -> bool:
    return all(b.enumerable for b in shape)


def enumerate_rows(shape: Shape) -> Iterator[Row]:
    return itertools.product(*(b.enumerate() for b in shape))


def shape_card(shape: Shape) -> int:
    n = 1
    for b in shape:
        n *= b.card()
    return n


def smallest_row(shape: Shape) -> Row:
    return tuple(b.smallest() for b in shape)


def row_in_shape(row: Row, shape: Shape) -> bool:
    return len(row) == len(shape) and all(b.contains(v) for b, v in zip(shape, row))


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

class Dist:
    """Exact finite-support distribution over values.

    Entries with zero mass are pruned at construction and the total mass must
    be exactly 1. Instances are immutable and compare by table equality.
    """

    __slots__ = ("_p",)

    def __init__(self, mapping):
        p = {}
        total = ZERO
        for v, q in mapping.items() if isinstance(mapping, dict) else mapping:
            q = Fraction(q)
            if q < 0:
                raise ValueError(f"negative mass {q} at {v!r}")
            if q == 0:
                continue
            p[v] = p.get(v, ZERO) + q
            total += q
        if total != 1:
            raise ValueError(f"masses sum to {total}, not 1")
        self._p = p

    def __getitem__(self, v) -> Fraction:
        return self._p.get(v, ZERO)

    def __iter__(self):
        return iter(self.support())

    def __len__(self):
        return len(self._p)

    def __eq__(self, other):
        return isinstance(other, Dist) and self._p == other._p

    def __hash__(self):
        return hash(frozenset(self._p.items()))

    def __repr__(self):
        inner = ", ".join(f"{v!r}: {q}" for v, q in self.items())
        return "Dist({" + inner + "})"

    def items(self):
        return sorted(self._p.items(), key=lambda kv: value_key(kv[0]))

    def pairs(self):
        """Like items() but in arbitrary order (no sort; hot paths)."""
        return self._p.items()

    def support(self):
        return sorted(self._p, key=value_key)

    @property
    def is_dirac(self) -> bool:
        return len(self._p) == 1

    def the_value(self) -> Value:
        """The unique supported value of a Dirac distribution."""
        if not self.is_dirac:
            raise ValueError("distribution is not Dirac")
        return next(iter(self._p))

    def map(self, f) -> "Dist":
        """Exact pushforward along ``f``."""
        out = {}
        for v, q in self._p.items():
            w = f(v)
            out[w] = out.get(w, ZERO) + q
        return Dist(out)

    def to_json(self):
        return {value_str(v): f"{q.numerator}/{q.denominator}" for v, q in self.items()}

    def to_json_str(self) -> str:
        # items() is canonically sorted; keep that order in the object
        return json.dumps(self.to_json())


def dirac(v: Value) -> Dist:
    """The point distribution at ``v``."""
    return Dist({v: ONE})


def uniform(vs) -> Dist:
    """The uniform distribution on a nonempty list of distinct values."""
    vs = list(vs)
    if not vs:
        raise EmptySupport("uniform over an empty list")
    if len(set(vs)) != len(vs):
        raise ValueError("uniform values must be distinct")
    q = Fraction(1, len(vs))
    return Dist({v: q for v in vs})


def marginalize(d: Dist, keep) -> Dist:
    """Project a distribution over rows onto the wires listed in ``keep``."""
    keep = tuple(keep)
    for v in d.support():
        if not isinstance(v, tuple):
            raise BadIndex("marginalize needs a distribution over rows")
        if any(i < 0 or i >= len(v) for i in keep):
            raise BadIndex(f"index out of range in {keep}")
        break
    return d.map(lambda row: tuple(row[i] for i in keep))


def sample(d: Dist, u) -> Value:
    """Inverse-CDF draw: ``u`` in [0,1), support walked in canonical order."""
    acc = ZERO
    vs = d.support()
    for v in vs:
        acc += d[v]
        if u < acc:
            return v
    return vs[-1]  # u rounded up against 1 - only reachable with float fuzz


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------

class Kernel:
    """A one-tick stochastic map between wire bundles.

    ``rule`` sends each input row to a :class:`Dist` over output rows; it is
    cached per row, so repeated observation of the same state is cheap. The
    ``deterministic`` flag is a guarantee, not an analysis: ``True`` means
    every output is Dirac (constructors only set it when that is certain).
    """

    __slots__ = ("in_shape", "out_shape", "deterministic", "_rule", "_cache")

    def __init__(self, in_shape: Shape, out_shape: Shape,
                 rule: Callable[[Row], Dist], deterministic: bool = False):
        self.in_shape = tuple(in_shape)
        self.out_shape = tuple(out_shape)
        self.deterministic = deterministic
        self._rule = rule
        self._cache = {}

    def dist(self, row: Row) -> Dist:
        """The output distribution on input ``row`` (cached)."""
        d = self._cache.get(row)
        if d is None:
            d = self._rule(row)
            self._cache[row] = d
        return d

    def __call__(self, row: Row) -> Dist:
        return self.dist(row)

    def table(self) -> dict:
        """Materialize the full table; requires an enumerable input shape."""
        return {row: self.dist(row) for row in enumerate_rows(self.in_shape)}

    def __repr__(self):
        return f"Kernel({self.in_shape!r} -> {self.out_shape!r})"


def det_kernel(in_shape, out_shape, fn: Callable[[Row], Row]) -> Kernel:
    """Kernel of a function on rows (all outputs Dirac)."""
    return Kernel(in_shape, out_shape, lambda row: dirac(fn(row)), deterministic=True)


def const_dist_kernel(out_shape, d: Dist) -> Kernel:
    """A source: ignores its (unit) input and emits ``d`` over rows."""
    return Kernel(unit_shape, out_shape, lambda row: d,
                  deterministic=d.is_dirac)


def dist_source(d: Dist, base: Base) -> Kernel:
    """A source emitting ``d`` (a distribution over plain values) on one wire."""
    for v in d.support():
        if not base.contains(v):
            raise ShapeMismatch(f"{v!r} is not a {base!r} value")
    return const_dist_kernel((base,), d.map(lambda v: (v,)))


def const_source(v: Value, base: Base) -> Kernel:
    """A one-wire constant source."""
    return dist_source(dirac(v), base)


def identity_kernel(shape) -> Kernel:
    return det_kernel(shape, shape, lambda row: row)


def rewire(in_shape, indices) -> Kernel:
    """Deterministic wire shuffle: output wire ``j`` is input wire ``indices[j]``.

    Covers projections, duplications and permutations in one primitive.
    """
    indices = tuple(indices)
    for i in indices:
        if i < 0 or i >= len(in_shape):
            raise BadIndex(f"rewire index {i} out of range")
    out_shape = tuple(in_shape[i] for i in indices)
    return det_kernel(in_shape, out_shape, lambda row: tuple(row[i] for i in indices))


def copy(shape) -> Kernel:
    n = len(shape)
    return rewire(shape, tuple(range(n)) + tuple(range(n)))


def discard(shape) -> Kernel:
    return det_kernel(shape, unit_shape, lambda row: ())


def swap(a, b) -> Kernel:
    la = len(a)
    return rewire(tuple(a) + tuple(b), tuple(range(la, la + len(b))) + tuple(range(la)))


def kernel_compose(f: Kernel, g: Kernel) -> Kernel:
    """Sequential composition: route each output of ``f`` through ``g``."""
    if f.out_shape != g.in_shape:
        raise ShapeMismatch(f"compose: {f.out_shape!r} vs {g.in_shape!r}")

    def rule(row):
        out = {}
        for y, p in f.dist(row)._p.items():
            for z, q in g.dist(y)._p.items():
                out[z] = out.get(z, ZERO) + p * q
        return Dist(out)

    return Kernel(f.in_shape, g.out_shape, rule,
                  deterministic=f.deterministic and g.deterministic)


def kernel_tensor(f: Kernel, g: Kernel) -> Kernel:
    """Parallel composition on disjoint wires; product of distributions."""
    nf = len(f.in_shape)

    def rule(row):
        df = f.dist(row[:nf])
        dg = g.dist(row[nf:])
        out = {}
        for y, p in df._p.items():
            for y2, q in dg._p.items():
                out[y + y2] = p * q
        return Dist(out)

    return Kernel(f.in_shape + g.in_shape, f.out_shape + g.out_shape, rule,
                  deterministic=f.deterministic and g.deterministic)


def kernel_seq(*ks: Kernel) -> Kernel:
    """Compose a chain of kernels left to right."""
    out = ks[0]
    for k in ks[1:]:
        out = kernel_compose(out, k)
    return out


def kernel_eq(f: Kernel, g: Kernel) -> bool:
    """Exact table equality; needs an enumerable input shape."""
    if f.in_shape != g.in_shape or f.out_shape != g.out_shape:
        return False
    return all(f.dist(row) == g.dist(row) for row in enumerate_rows(f.in_shape))


def conditional(f: Kernel, split: int):
    """Factor ``f : A -> X ⊗ Y`` as its X-marginal and a conditional.

    ``split`` is the number of wires in the X block. Returns ``(f_X, c_f)``
    with ``f_X : A -> X`` and ``c_f : X ⊗ A -> Y`` such that
    ``triangle(f_X, c_f)`` reconstructs ``f`` exactly. Where the X-marginal
    gives an x no mass, ``c_f`` is Dirac at the canonically smallest row of
    the Y block.
    """
    x_shape = f.out_shape[:split]
    y_shape = f.out_shape[split:]
    a_shape = f.in_shape

    def marg_rule(a):
        return f.dist(a).map(lambda row: row[:split])

    f_x = Kernel(a_shape, x_shape, marg_rule, deterministic=f.deterministic)

    nx = len(x_shape)

    def cond_rule(row):
        x, a = row[:nx], row[nx:]
        joint = f.dist(a)
        total = ZERO
        masses = {}
        for full, p in joint._p.items():
            if full[:split] == x:
                y = full[split:]
                masses[y] = masses.get(y, ZERO) + p
                total += p
        if total == 0:
            return dirac(smallest_row(y_shape))
        return Dist({y: p / total for y, p in masses.items()})

    c_f = Kernel(x_shape + a_shape, y_shape, cond_rule)
    return f_x, c_f


def range_kernel(f: Kernel) -> Kernel:
    """The deterministic support-normalizer of ``f : A -> B`` on ``A ⊗ B``.

    Keeps (a, b) fixed when ``f(b|a) > 0``; otherwise rewrites b to the
    canonically smallest output with positive mass under a.
    """
    na = len(f.in_shape)

    def fn(row):
        a, b = row[:na], row[na:]
        d = f.dist(a)
        if d[b] > 0:
            return row
        return a + d.support()[0]

    return det_kernel(f.in_shape + f.out_shape, f.in_shape + f.out_shape, fn)


def triangle(f: Kernel, g: Kernel) -> Kernel:
    """The composite that copies A, runs ``f``, copies its output X, and runs
    ``g : X ⊗ A -> Y``, returning ``A -> X ⊗ Y``."""
    if g.in_shape != f.out_shape + f.in_shape:
        raise ShapeMismatch(
            f"triangle: {g.in_shape!r} vs {f.out_shape!r} + {f.in_shape!r}")

    def rule(a):
        out = {}
        for x, p in f.dist(a)._p.items():
            for y, q in g.dist(x + a)._p.items():
                out[x + y] = out.get(x + y, ZERO) + p * q
        return Dist(out)

    return Kernel(f.in_shape, f.out_shape + g.out_shape, rule,
                  deterministic=f.deterministic and g.deterministic)


# ---------------------------------------------------------------------------
# Random kernels (property-test fuel)
# ---------------------------------------------------------------------------

def random_dist(rows, rng, max_support=4) -> Dist:
    """Random distribution over a sample of ``rows`` with small denominators."""
    rows = list(rows)
    k = rng.randrange(1, min(max_support, len(rows)) + 1)
    chosen = rng.sample(rows, k)
    weights = [rng.randrange(1, 5) for _ in chosen]
    total = sum(weights)
    return Dist({r: Fraction(w, total) for r, w in zip(chosen, weights)})


def random_kernel(in_shape, out_shape, rng, deterministic=False,
                  max_support=4) -> Kernel:
    """Random total kernel over enumerable shapes, as a concrete table."""
    rows_out = list(enumerate_rows(out_shape))
    table = {}
    for row in enumerate_rows(in_shape):
        if deterministic:
            table[row] = dirac(rng.choice(rows_out))
        else:
            table[row] = random_dist(rows_out, rng, max_support)
    return Kernel(in_shape, out_shape, lambda row: table[row],
                  deterministic=deterministic)
