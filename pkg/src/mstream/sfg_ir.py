"""Typed terms for signal-flow graphs with delayed feedback.

Terms denote wirings of one-tick kernels: sequential/parallel composition,
symmetry, copy/discard, one-tick buffers, and a feedback constructor whose
loop carries values one tick later. Each wire has a base type and a delay:
the wire is silent before tick ``delay`` and carries base values from then
on. ``infer_type`` checks a term, ``compile`` turns it into a stream
process, ``random_term`` generates well-typed terms for the law suites, and
``pretty``/``read_term`` give a parse-stable text form.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

from .errors import ParseError, ShapeMismatch, TermTypeError
from .kernel import (
    BOOL,
    INT,
    UNIT,
    Base,
    FinSet,
    IntRange,
    Kernel,
    Shape,
    const_source,
    copy as copy_kernel,
    det_kernel,
    discard as discard_kernel,
    dist_source,
    identity_kernel,
    rewire,
    swap as swap_kernel,
    uniform,
    unit_shape,
)
from .stream_core import (
    ShapeSeq,
    Stream,
    delay as delay_stream,
    fbk as fbk_stream,
    lift_seq,
    mealy,
    par_comp,
    seq_comp,
)
from .values import Value, value_str


# ---------------------------------------------------------------------------
# Wires
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WireType:
    """One wire: silent before tick ``delay``, carries ``base`` afterwards."""
    base: Base
    delay: int = 0

    def shifted(self, k: int = 1) -> "WireType":
        return WireType(self.base, self.delay + k)

    def __repr__(self):
        return f"{self.base!r}@{self.delay}"


Wires = Tuple[WireType, ...]


def wires(*pairs) -> Wires:
    """Convenience: wires(INT, (BOOL, 2)) == (int@0, bool@2)."""
    out = []
    for p in pairs:
        if isinstance(p, WireType):
            out.append(p)
        elif isinstance(p, Base):
            out.append(WireType(p, 0))
        else:
            base, d = p
            out.append(WireType(base, d))
    return tuple(out)


def shift_wires(ws: Wires, k: int = 1) -> Wires:
    return tuple(w.shifted(k) for w in ws)


def alive(ws: Wires, t: int) -> Shape:
    """The bases live at tick t, in wire order."""
    return tuple(w.base for w in ws if w.delay <= t)


def wires_to_seq(ws: Wires) -> ShapeSeq:
    d = max((w.delay for w in ws), default=0)
    return ShapeSeq([alive(ws, t) for t in range(d)], alive(ws, d))


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenSpec:
    """A named one-tick generator: kernel applied at every live tick."""
    name: str
    in_bases: Shape
    out_bases: Shape
    kernel: Kernel
    stochastic: bool = False
    args: Tuple[Value, ...] = ()

    def __post_init__(self):
        if (self.kernel.in_shape != self.in_bases
                or self.kernel.out_shape != self.out_bases):
            raise ShapeMismatch(f"generator {self.name}: kernel shape "
                                f"does not match declared bases")


class Signature:
    """Named generators plus parameterized families (e.g. unif over a set)."""

    def __init__(self, gens: Sequence[GenSpec] = (),
                 families: Optional[Dict[str, Callable[..., GenSpec]]] = None):
        self.gens = {g.name: g for g in gens}
        self.families = dict(families or {})

    def lookup(self, name: str, args: Tuple[Value, ...] = ()) -> GenSpec:
        if args == () and name in self.gens:
            return self.gens[name]
        if name in self.families:
            return self.families[name](*args)
        raise TermTypeError(f"unknown generator {name!r}")

    def names(self):
        return sorted(self.gens)


def _binop(name, fn):
    return GenSpec(name, (INT, INT), (INT,),
                   det_kernel((INT, INT), (INT,), lambda r: (fn(r[0], r[1]),)))


def _unif_family(*values) -> GenSpec:
    vals = tuple(values)
    if not vals or any(not isinstance(v, int) or isinstance(v, bool)
                       for v in vals):
        raise TermTypeError(f"unif needs integer values, got {vals!r}")
    return GenSpec("unif", (), (INT,),
                   dist_source(uniform(sorted(set(vals))), INT),
                   stochastic=True, args=vals)


def default_signature() -> Signature:
    """Integer arithmetic plus the uniform-choice family."""
    return Signature(
        gens=[
            _binop("plus", lambda a, b: a + b),
            _binop("minus", lambda a, b: a - b),
            _binop("times", lambda a, b: a * b),
            GenSpec("neg", (INT,), (INT,),
                    det_kernel((INT,), (INT,), lambda r: (-r[0],))),
        ],
        families={"unif": _unif_family},
    )


def finite_signature() -> Signature:
    """Generators over finite bases only; every wire stays enumerable.

    This is the signature the random-term law suites draw from, so that
    compiled terms can always be observed exactly.
    """
    i3 = IntRange(0, 2)
    return Signature(gens=[
        GenSpec("not", (BOOL,), (BOOL,),
                det_kernel((BOOL,), (BOOL,), lambda r: (not r[0],))),
        GenSpec("xor", (BOOL, BOOL), (BOOL,),
                det_kernel((BOOL, BOOL), (BOOL,), lambda r: (r[0] ^ r[1],))),
        GenSpec("conj", (BOOL, BOOL), (BOOL,),
                det_kernel((BOOL, BOOL), (BOOL,), lambda r: (r[0] and r[1],))),
        GenSpec("coin", (), (BOOL,),
                dist_source(uniform([False, True]), BOOL), stochastic=True),
        GenSpec("cyc", (i3,), (i3,),
                det_kernel((i3,), (i3,), lambda r: ((r[0] + 1) % 3,))),
        GenSpec("addmod3", (i3, i3), (i3,),
                det_kernel((i3, i3), (i3,), lambda r: ((r[0] + r[1]) % 3,))),
        GenSpec("unif3", (), (i3,),
                dist_source(uniform([0, 1, 2]), i3), stochastic=True),
        GenSpec("tobit", (BOOL,), (i3,),
                det_kernel((BOOL,), (i3,), lambda r: (int(r[0]),))),
        GenSpec("iszero", (i3,), (BOOL,),
                det_kernel((i3,), (BOOL,), lambda r: (r[0] == 0,))),
    ])


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    pass


@dataclass(frozen=True)
class Id(Term):
    ws: Wires = ()


@dataclass(frozen=True)
class Gen(Term):
    name: str
    delay: int = 0
    args: Tuple[Value, ...] = ()


@dataclass(frozen=True)
class Const(Term):
    value: Value
    base: Base
    delay: int = 0


@dataclass(frozen=True)
class Seq(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Par(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class Sym(Term):
    a: Wires
    b: Wires


@dataclass(frozen=True)
class Copy(Term):
    ws: Wires


@dataclass(frozen=True)
class Discard(Term):
    ws: Wires


@dataclass(frozen=True)
class FbyBox(Term):
    w: WireType


@dataclass(frozen=True)
class Wait(Term):
    w: WireType


@dataclass(frozen=True)
class Register(Term):
    w: WireType


@dataclass(frozen=True)
class Fbk(Term):
    s: Wires
    body: Term


@dataclass(frozen=True)
class DelayTerm(Term):
    body: Term


def seq(*ts: Term) -> Term:
    out = ts[0]
    for t in ts[1:]:
        out = Seq(out, t)
    return out


def par(*ts: Term) -> Term:
    out = ts[0]
    for t in ts[1:]:
        out = Par(out, t)
    return out


# ---------------------------------------------------------------------------
# Typechecking
# ---------------------------------------------------------------------------

def infer_type(t: Term, sig: Signature, _path: tuple = ()) -> Tuple[Wires, Wires]:
    """Input and output wires of a term, or TermTypeError at the failing node."""

    def fail(msg):
        raise TermTypeError(msg, path=_path)

    if isinstance(t, Id):
        return t.ws, t.ws
    if isinstance(t, Gen):
        try:
            spec = sig.lookup(t.name, t.args)
        except TermTypeError as e:
            fail(str(e.args[0] if e.args else e))
        d = t.delay
        return (tuple(WireType(b, d) for b in spec.in_bases),
                tuple(WireType(b, d) for b in spec.out_bases))
    if isinstance(t, Const):
        if not t.base.contains(t.value):
            fail(f"constant {value_str(t.value)} is not a {t.base!r} value")
        return (), (WireType(t.base, t.delay),)
    if isinstance(t, Seq):
        in1, out1 = infer_type(t.fst, sig, _path + ("seq", 0))
        in2, out2 = infer_type(t.snd, sig, _path + ("seq", 1))
        if out1 != in2:
            fail(f"cannot compose: first yields {out1!r}, second needs {in2!r}")
        return in1, out2
    if isinstance(t, Par):
        in1, out1 = infer_type(t.fst, sig, _path + ("par", 0))
        in2, out2 = infer_type(t.snd, sig, _path + ("par", 1))
        return in1 + in2, out1 + out2
    if isinstance(t, Sym):
        return t.a + t.b, t.b + t.a
    if isinstance(t, Copy):
        return t.ws, t.ws + t.ws
    if isinstance(t, Discard):
        return t.ws, ()
    if isinstance(t, FbyBox):
        return (t.w, t.w.shifted()), (t.w,)
    if isinstance(t, Wait):
        return (t.w,), (t.w.shifted(),)
    if isinstance(t, Register):
        return (t.w, t.w), (t.w,)
    if isinstance(t, Fbk):
        bin_, bout = infer_type(t.body, sig, _path + ("fbk",))
        k = len(t.s)
        want_in = shift_wires(t.s)
        if bin_[:k] != want_in:
            fail(f"feedback body must consume {want_in!r} in front, "
                 f"found {bin_[:k]!r}")
        if bout[:k] != t.s:
            fail(f"feedback body must produce {t.s!r} in front, "
                 f"found {bout[:k]!r}")
        return bin_[k:], bout[k:]
    if isinstance(t, DelayTerm):
        bin_, bout = infer_type(t.body, sig, _path + ("delay",))
        return shift_wires(bin_), shift_wires(bout)
    fail(f"not a term: {t!r}")


# ---------------------------------------------------------------------------
# Compilation
# ---------------------------------------------------------------------------

def _lift_pointwise(in_ws: Wires, out_ws: Wires,
                    k_at: Callable[[int], Kernel]) -> Stream:
    d = max((w.delay for w in in_ws + out_ws), default=0)
    return lift_seq([k_at(t) for t in range(d)], k_at(d))


def _compile_gen(spec: GenSpec, d: int) -> Stream:
    def k_at(t):
        return identity_kernel(unit_shape) if t < d else spec.kernel
    return lift_seq([k_at(t) for t in range(d)], k_at(d))


def _compile_buffer(w: WireType, kind: str) -> Stream:
    b, d = (w.base,), w.delay
    if kind == "fby":
        def k_at(t):
            if t < d:
                return identity_kernel(unit_shape)
            if t == d:
                return identity_kernel(b)
            return rewire(b + b, (1,))
        return lift_seq([k_at(t) for t in range(d + 1)], k_at(d + 1))
    # wait and reg hold one value from tick d on
    in_ws = (w, w) if kind == "reg" else (w,)
    out_ws = (w.shifted(),) if kind == "wait" else (w,)

    def mem_at(t):
        return unit_shape if t < d else b

    def k_at(t):
        if t < d:
            return identity_kernel(unit_shape)
        if kind == "wait":
            return identity_kernel(b) if t == d else swap_kernel(b, b)
        if t == d:
            return swap_kernel(b, b)                     # (a, b) -> (b | a)
        return rewire(b + b + b, (2, 0))                 # (m, a, b) -> (b | m)

    return mealy(wires_to_seq(in_ws), wires_to_seq(out_ws), mem_at, k_at)


def compile(t: Term, sig: Signature) -> Stream:  # noqa: A001 - module-local name
    """Structural compilation of a checked term to a stream process."""
    infer_type(t, sig)
    return _compile(t, sig)


def _compile(t: Term, sig: Signature) -> Stream:
    if isinstance(t, Id):
        return _lift_pointwise(t.ws, t.ws,
                               lambda tk: identity_kernel(alive(t.ws, tk)))
    if isinstance(t, Gen):
        return _compile_gen(sig.lookup(t.name, t.args), t.delay)
    if isinstance(t, Const):
        d = t.delay
        src = const_source(t.value, t.base)

        def k_at(tk):
            return identity_kernel(unit_shape) if tk < d else src
        return lift_seq([k_at(tk) for tk in range(d)], k_at(d))
    if isinstance(t, Seq):
        return seq_comp(_compile(t.fst, sig), _compile(t.snd, sig))
    if isinstance(t, Par):
        return par_comp(_compile(t.fst, sig), _compile(t.snd, sig))
    if isinstance(t, Sym):
        return _lift_pointwise(t.a + t.b, t.b + t.a,
                               lambda tk: swap_kernel(alive(t.a, tk),
                                                      alive(t.b, tk)))
    if isinstance(t, Copy):
        return _lift_pointwise(t.ws, t.ws + t.ws,
                               lambda tk: copy_kernel(alive(t.ws, tk)))
    if isinstance(t, Discard):
        return _lift_pointwise(t.ws, (),
                               lambda tk: discard_kernel(alive(t.ws, tk)))
    if isinstance(t, FbyBox):
        return _compile_buffer(t.w, "fby")
    if isinstance(t, Wait):
        return _compile_buffer(t.w, "wait")
    if isinstance(t, Register):
        return _compile_buffer(t.w, "reg")
    if isinstance(t, Fbk):
        return fbk_stream(_compile(t.body, sig), wires_to_seq(t.s))
    if isinstance(t, DelayTerm):
        return delay_stream(_compile(t.body, sig))
    raise TermTypeError(f"not a term: {t!r}")


def is_stochastic(t: Term, sig: Signature) -> bool:
    """True when some generator in the term draws randomness."""
    if isinstance(t, Gen):
        return sig.lookup(t.name, t.args).stochastic
    if isinstance(t, (Seq, Par)):
        return is_stochastic(t.fst, sig) or is_stochastic(t.snd, sig)
    if isinstance(t, Fbk):
        return is_stochastic(t.body, sig)
    if isinstance(t, DelayTerm):
        return is_stochastic(t.body, sig)
    return False


def node_count(t: Term) -> int:
    if isinstance(t, (Seq, Par)):
        return 1 + node_count(t.fst) + node_count(t.snd)
    if isinstance(t, Fbk):
        return 1 + node_count(t.body)
    if isinstance(t, DelayTerm):
        return 1 + node_count(t.body)
    return 1


# ---------------------------------------------------------------------------
# Permutations as terms
# ---------------------------------------------------------------------------

def perm_term(ws: Wires, perm: Sequence[int]) -> Term:
    """A term permuting ``ws`` so output j is input perm[j], as layered swaps."""
    perm = list(perm)
    if sorted(perm) != list(range(len(ws))):
        raise TermTypeError(f"not a permutation: {perm!r}")
    cur = list(range(len(ws)))
    layers = []
    # selection sort by adjacent transpositions
    for j in range(len(perm)):
        i = cur.index(perm[j])
        while i > j:
            layer = _adjacent_swap(tuple(ws[k] for k in cur), i - 1)
            layers.append(layer)
            cur[i - 1], cur[i] = cur[i], cur[i - 1]
            i -= 1
    out = Id(ws)
    for layer in layers:
        out = Seq(out, layer)
    return out


def _adjacent_swap(ws: Wires, i: int) -> Term:
    left = Id(ws[:i]) if i else None
    mid = Sym((ws[i],), (ws[i + 1],))
    right = Id(ws[i + 2:]) if i + 2 < len(ws) else None
    t = mid
    if left is not None:
        t = Par(left, t)
    if right is not None:
        t = Par(t, right)
    return t


# ---------------------------------------------------------------------------
# Random terms
# ---------------------------------------------------------------------------

_POOL_BASES = (BOOL, IntRange(0, 2), FinSet((-1, 1)))


def _random_wires(rng, limit=2, max_delay=1) -> Wires:
    n = rng.randrange(0, limit + 1)
    return tuple(WireType(rng.choice(_POOL_BASES), rng.randrange(0, max_delay + 1))
                 for _ in range(n))


def _const_for(rng, w: WireType) -> Term:
    return Const(rng.choice(w.base.enumerate()), w.base, w.delay)


def _consts(rng, ws: Wires) -> Term:
    if not ws:
        return Id(())
    return par(*[_const_for(rng, w) for w in ws])


def _fallback_cost(iw: Wires, ow: Wires) -> int:
    if iw == ow:
        return 1
    if not ow:
        return 1
    consts = max(1, 2 * len(ow) - 1)
    return consts if not iw else 2 + consts


def _fallback(rng, iw: Wires, ow: Wires) -> Term:
    if iw == ow:
        return Id(iw)
    if not ow:
        return Discard(iw)
    if not iw:
        return _consts(rng, ow)
    return Seq(Discard(iw), _consts(rng, ow))


def random_term_of_type(rng: random.Random, sig: Signature,
                        iw: Wires, ow: Wires, budget: int) -> Term:
    """A random term of the requested wire type.

    Uses at most max(budget, minimal-size-for-this-type) constructors; every
    structural choice is admitted only when the remaining budget can still pay
    for both halves, so the bound is exact, not best-effort.
    """
    floor = _fallback_cost(iw, ow)
    if budget < floor:
        budget = floor
    options = []
    if iw == ow and iw:
        options += [("id", None)]
    g = _pick_gen(rng, sig, iw, ow)
    if g is not None:
        options += [("gen", g)] * 2
    for _ in range(3):
        mid = _random_wires(rng)
        if budget >= 1 + _fallback_cost(iw, mid) + _fallback_cost(mid, ow):
            options += [("seq", mid)] * 3
            break
    if len(iw) + len(ow) > 1:
        ci = rng.randrange(0, len(iw) + 1)
        co = rng.randrange(0, len(ow) + 1)
        split = (iw[:ci], iw[ci:], ow[:co], ow[co:])
        if ((ci, co) not in ((0, 0), (len(iw), len(ow)))
                and budget >= (1 + _fallback_cost(split[0], split[2])
                               + _fallback_cost(split[1], split[3]))):
            options += [("par", split)]
    s = (WireType(rng.choice(_POOL_BASES), rng.randrange(0, 2)),)
    if budget >= 1 + _fallback_cost(shift_wires(s) + iw, s + ow):
        options += [("fbk", s)] * 2
    if not options:
        return _fallback(rng, iw, ow)
    kind, data = rng.choice(options)

    if kind == "id":
        return Id(iw)
    if kind == "gen":
        return data
    if kind == "seq":
        mid = data
        t1 = random_term_of_type(rng, sig, iw, mid,
                                 budget - 1 - _fallback_cost(mid, ow))
        t2 = random_term_of_type(rng, sig, mid, ow,
                                 budget - 1 - node_count(t1))
        return Seq(t1, t2)
    if kind == "par":
        i1, i2, o1, o2 = data
        t1 = random_term_of_type(rng, sig, i1, o1,
                                 budget - 1 - _fallback_cost(i2, o2))
        t2 = random_term_of_type(rng, sig, i2, o2,
                                 budget - 1 - node_count(t1))
        return Par(t1, t2)
    body = random_term_of_type(rng, sig, shift_wires(data) + iw, data + ow,
                               budget - 1)
    return Fbk(data, body)


def _pick_gen(rng, sig: Signature, iw: Wires, ow: Wires) -> Optional[Term]:
    if not ow or len(set(w.delay for w in iw + ow)) > 1:
        return None
    d = ow[0].delay
    names = [n for n in sig.names()
             if sig.gens[n].in_bases == tuple(w.base for w in iw)
             and sig.gens[n].out_bases == tuple(w.base for w in ow)]
    if not names:
        return None
    return Gen(rng.choice(names), d)


def random_term(sig: Signature, size: int, seed: int) -> Term:
    """A random well-typed term with at most ``size`` constructors."""
    rng = random.Random(seed)
    if size <= 1:
        iw = _random_wires(rng, limit=1)
        return random_term_of_type(rng, sig, iw, iw, 1)
    iw = _random_wires(rng)
    ow = _random_wires(rng)
    while _fallback_cost(iw, ow) > size:
        ow = ow[:-1]
    return random_term_of_type(rng, sig, iw, ow, size)


# ---------------------------------------------------------------------------
# Printer / reader
# ---------------------------------------------------------------------------

def _base_str(b: Base) -> str:
    return repr(b)


def _wire_str(w: WireType) -> str:
    return f"{_base_str(w.base)}@{w.delay}"


def _wires_str(ws: Wires) -> str:
    return ",".join(_wire_str(w) for w in ws)


def pretty(t: Term) -> str:
    if isinstance(t, Id):
        return f"id[{_wires_str(t.ws)}]" if t.ws else "id"
    if isinstance(t, Gen):
        args = ""
        if t.args:
            args = "{" + ",".join(value_str(v) for v in t.args) + "}"
        return f"{t.name}{args}@{t.delay}"
    if isinstance(t, Const):
        return f"const({value_str(t.value)}:{_base_str(t.base)})@{t.delay}"
    if isinstance(t, Seq):
        return f"seq({pretty(t.fst)}, {pretty(t.snd)})"
    if isinstance(t, Par):
        return f"par({pretty(t.fst)}, {pretty(t.snd)})"
    if isinstance(t, Sym):
        return f"sym[{_wires_str(t.a)}|{_wires_str(t.b)}]"
    if isinstance(t, Copy):
        return f"copy[{_wires_str(t.ws)}]"
    if isinstance(t, Discard):
        return f"discard[{_wires_str(t.ws)}]"
    if isinstance(t, FbyBox):
        return f"fby[{_wire_str(t.w)}]"
    if isinstance(t, Wait):
        return f"wait[{_wire_str(t.w)}]"
    if isinstance(t, Register):
        return f"reg[{_wire_str(t.w)}]"
    if isinstance(t, Fbk):
        return f"fbk[{_wires_str(t.s)}]({pretty(t.body)})"
    if isinstance(t, DelayTerm):
        return f"delay({pretty(t.body)})"
    raise TermTypeError(f"not a term: {t!r}")


class _TermReader:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def error(self, msg):
        raise ParseError(msg, line=1, col=self.i + 1)

    def ws_(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self):
        self.ws_()
        return self.text[self.i] if self.i < len(self.text) else ""

    def eat(self, s):
        self.ws_()
        if not self.text.startswith(s, self.i):
            self.error(f"expected {s!r}")
        self.i += len(s)

    def try_eat(self, s):
        self.ws_()
        if self.text.startswith(s, self.i):
            self.i += len(s)
            return True
        return False

    def name(self):
        self.ws_()
        j = self.i
        while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
            j += 1
        if j == self.i:
            self.error("expected a name")
        out = self.text[self.i:j]
        self.i = j
        return out

    def int_(self):
        self.ws_()
        j = self.i
        if j < len(self.text) and self.text[j] == "-":
            j += 1
        while j < len(self.text) and self.text[j].isdigit():
            j += 1
        if j == self.i or self.text[self.i:j] == "-":
            self.error("expected an integer")
        out = int(self.text[self.i:j])
        self.i = j
        return out

    def value(self) -> Value:
        if self.try_eat("true"):
            return True
        if self.try_eat("false"):
            return False
        if self.try_eat("()"):
            return None
        return self.int_()

    def base(self) -> Base:
        if self.try_eat("unit"):
            return UNIT
        if self.try_eat("bool"):
            return BOOL
        if self.try_eat("int["):
            lo = self.int_()
            self.eat("..")
            hi = self.int_()
            self.eat("]")
            return IntRange(lo, hi)
        if self.try_eat("int"):
            return INT
        if self.try_eat("{"):
            vals = [self.value()]
            while self.try_eat(","):
                vals.append(self.value())
            self.eat("}")
            return FinSet(tuple(vals))
        self.error("expected a base type")

    def wire(self) -> WireType:
        b = self.base()
        self.eat("@")
        return WireType(b, self.int_())

    def wire_list(self, closer: str) -> Wires:
        out = []
        if self.peek() not in (closer, "|"):
            out.append(self.wire())
            while self.try_eat(","):
                out.append(self.wire())
        return tuple(out)

    def term(self) -> Term:
        self.ws_()
        for kw, cls in (("seq", Seq), ("par", Par)):
            if self._kw(kw, "("):
                self.eat(kw)
                self.eat("(")
                a = self.term()
                self.eat(",")
                b = self.term()
                self.eat(")")
                return cls(a, b)
        if self._kw("delay", "("):
            self.eat("delay")
            self.eat("(")
            body = self.term()
            self.eat(")")
            return DelayTerm(body)
        if self._kw("fbk", "["):
            self.eat("fbk")
            self.eat("[")
            s = self.wire_list("]")
            self.eat("]")
            self.eat("(")
            body = self.term()
            self.eat(")")
            return Fbk(s, body)
        if self._kw("sym", "["):
            self.eat("sym")
            self.eat("[")
            a = self.wire_list("]")
            self.eat("|")
            b = self.wire_list("]")
            self.eat("]")
            return Sym(a, b)
        for kw, mk in (("id", lambda ws: Id(ws)),
                       ("copy", Copy), ("discard", Discard)):
            if self._kw(kw, "["):
                self.eat(kw)
                self.eat("[")
                ws = self.wire_list("]")
                self.eat("]")
                return mk(ws)
        for kw, mk in (("fby", FbyBox), ("wait", Wait), ("reg", Register)):
            if self._kw(kw, "["):
                self.eat(kw)
                self.eat("[")
                w = self.wire()
                self.eat("]")
                return mk(w)
        if self._kw("const", "("):
            self.eat("const")
            self.eat("(")
            v = self.value()
            self.eat(":")
            b = self.base()
            self.eat(")")
            self.eat("@")
            return Const(v, b, self.int_())
        if self._kw("id", None):
            self.eat("id")
            return Id(())
        name = self.name()
        args = ()
        if self.try_eat("{"):
            vals = [self.value()]
            while self.try_eat(","):
                vals.append(self.value())
            self.eat("}")
            args = tuple(vals)
        self.eat("@")
        return Gen(name, self.int_(), args)

    def _kw(self, kw: str, opener) -> bool:
        self.ws_()
        if not self.text.startswith(kw, self.i):
            return False
        j = self.i + len(kw)
        if j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
            return False
        if opener is None:
            return j >= len(self.text) or self.text[j] not in "[({@"
        k = j
        while k < len(self.text) and self.text[k].isspace():
            k += 1
        return k < len(self.text) and self.text[k] == opener


def read_term(text: str) -> Term:
    r = _TermReader(text)
    t = r.term()
    r.ws_()
    if r.i != len(r.text):
        r.error("trailing input after term")
    return t
