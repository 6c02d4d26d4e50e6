import random
from fractions import Fraction

import pytest

from mstream.errors import (
    NondeterministicStream,
    ShapeMismatch,
    StateCapExceeded,
)
from mstream.kernel import (
    BOOL,
    INT,
    Dist,
    IntRange,
    det_kernel,
    dirac,
    discard,
    dist_source,
    identity_kernel,
    kernel_compose,
    marginalize,
    random_kernel,
    uniform,
)
from mstream.stream_core import (
    ShapeSeq,
    Stream,
    copy_stream,
    delay,
    discard_stream,
    fbk,
    fby_box,
    identity,
    lift_const,
    lift_seq,
    mealy,
    obs_equal,
    observe,
    observe_marginals,
    par_comp,
    register,
    run_det,
    sample_trace,
    seq_comp,
    wait_stream,
)

F = Fraction
I01 = IntRange(0, 1)


def coin_stream():
    return lift_const(dist_source(uniform([0, 1]), I01))


def walk_stream():
    """Position starts at 0 and moves ±1 per tick, built by hand."""
    s = (INT,)
    k0 = det_kernel((), s + s, lambda r: (0, 0))
    kt = type(k0)(s, s + s,
                  lambda r: Dist({(r[0] - 1, r[0] - 1): F(1, 2),
                                  (r[0] + 1, r[0] + 1): F(1, 2)}))
    return fbk(lift_seq((k0,), kt), ShapeSeq.constant(s))


def counter_stream():
    s = (INT,)
    k0 = det_kernel((), s + s, lambda r: (0, 0))
    kt = det_kernel(s, s + s, lambda r: (r[0] + 1, r[0] + 1))
    return fbk(lift_seq((k0,), kt), ShapeSeq.constant(s))


# ---------------------------------------------------------------------------
# shape sequences
# ---------------------------------------------------------------------------

def test_shape_seq_normalizes():
    a = ShapeSeq([(INT,), (INT,)], (INT,))
    assert a == ShapeSeq.constant((INT,))
    assert a.at(0) == (INT,) and a.at(7) == (INT,)


def test_shape_seq_ops():
    s = ShapeSeq([()], (BOOL,))
    assert s.at(0) == () and s.at(1) == (BOOL,)
    assert s.cons((INT,)).at(0) == (INT,)
    assert s.cons((INT,)).at(1) == ()
    assert s.drop(1) == ShapeSeq.constant((BOOL,))
    assert s.glue0((INT,)).at(0) == (INT,)
    t = s.tensor(ShapeSeq.constant((INT,)))
    assert t.at(0) == (INT,) and t.at(1) == (BOOL, INT)


# ---------------------------------------------------------------------------
# identity / lifts / delay
# ---------------------------------------------------------------------------

def test_identity_echoes_inputs():
    s = identity(ShapeSeq.constant((INT,)))
    assert run_det(s, [(1,), (2,), (3,)]) == [(1,), (2,), (3,)]


def test_observe_identity_is_identity_on_tuples():
    s = identity(ShapeSeq.constant((I01,)))
    p = observe(s, 3)
    for row in [(0, 1, 0, 1), (1, 1, 1, 0)]:
        assert p.dist(row) == dirac(row)


def test_lift_const_increment():
    inc = det_kernel((INT,), (INT,), lambda r: (r[0] + 1,))
    assert run_det(lift_const(inc), [(1,), (2,)]) == [(2,), (3,)]


def test_delay_shifts_one_tick():
    inc = det_kernel((INT,), (INT,), lambda r: (r[0] + 1,))
    d = delay(lift_const(inc))
    assert run_det(d, [(), (5,), (6,)]) == [(), (6,), (7,)]


def test_lift_respects_composition():
    f0 = det_kernel((IntRange(0, 3),), (IntRange(1, 4),), lambda r: (r[0] + 1,))
    g0 = det_kernel((IntRange(1, 4),), (IntRange(2, 8),), lambda r: (2 * r[0],))
    lhs = seq_comp(lift_const(f0), lift_const(g0))
    rhs = lift_const(kernel_compose(f0, g0))
    assert obs_equal(lhs, rhs, 5)


def test_seq_comp_identity_unit():
    f = lift_const(det_kernel((I01,), (I01,), lambda r: (1 - r[0],)))
    assert obs_equal(seq_comp(f, identity(f.out_seq)), f, 5)
    assert obs_equal(seq_comp(identity(f.in_seq), f), f, 5)


def test_seq_comp_shape_mismatch():
    f = lift_const(identity_kernel((I01,)))
    g = lift_const(identity_kernel((BOOL,)))
    with pytest.raises(ShapeMismatch):
        seq_comp(f, g)


def test_par_of_coins_uniform_on_four():
    p = observe(par_comp(coin_stream(), coin_stream()), 0)
    assert p.dist(()) == Dist({(a, b): F(1, 4) for a in (0, 1) for b in (0, 1)})


def test_interchange_on_lifts():
    rng = random.Random(5)
    sh = (I01,)
    for _ in range(20):
        f, fp, g, gp = (lift_const(random_kernel(sh, sh, rng))
                        for _ in range(4))
        lhs = seq_comp(par_comp(f, fp), par_comp(g, gp))
        rhs = par_comp(seq_comp(f, g), seq_comp(fp, gp))
        assert obs_equal(lhs, rhs, 3)


def test_delay_functorial():
    rng = random.Random(9)
    sh = (I01,)
    f = lift_const(random_kernel(sh, sh, rng))
    g = lift_const(random_kernel(sh, sh, rng))
    assert obs_equal(delay(seq_comp(f, g)), seq_comp(delay(f), delay(g)), 5)
    ident = identity(ShapeSeq.constant(sh))
    assert obs_equal(delay(ident), identity(ident.in_seq.cons(())), 5)


# ---------------------------------------------------------------------------
# feedback
# ---------------------------------------------------------------------------

def test_wait_as_feedback_over_symmetry():
    sh = (INT,)
    body = lift_seq((identity_kernel(sh),),
                    det_kernel(sh + sh, sh + sh, lambda r: (r[1], r[0])))
    w = fbk(body, ShapeSeq.constant(sh))
    assert run_det(w, [(1,), (2,), (3,)]) == [(), (1,), (2,)]
    sh2 = (I01,)
    body2 = lift_seq((identity_kernel(sh2),),
                     det_kernel(sh2 + sh2, sh2 + sh2, lambda r: (r[1], r[0])))
    assert obs_equal(fbk(body2, ShapeSeq.constant(sh2)), wait_stream(sh2), 5)


def test_feedback_vanishing_over_unit():
    f = lift_const(det_kernel((I01,), (I01,), lambda r: (1 - r[0],)))
    assert obs_equal(fbk(f, ShapeSeq.constant(())), f, 5)


def test_counter_via_feedback():
    trace = run_det(counter_stream(), n=5)
    assert trace == [(0,), (1,), (2,), (3,), (4,), (5,)]


def test_fbk_shape_mismatch():
    f = lift_const(identity_kernel((I01,)))
    with pytest.raises(ShapeMismatch):
        fbk(f, ShapeSeq.constant((BOOL,)))


# ---------------------------------------------------------------------------
# fby / register / wait
# ---------------------------------------------------------------------------

def test_register_buffers_second_port():
    r = register((INT,))
    got = run_det(r, [(9, 1), (9, 2), (9, 3)])
    assert got == [(9,), (1,), (2,)]


def test_register_equals_fby_box_of_delayed_port():
    sh = (I01,)
    composite = seq_comp(par_comp(identity(ShapeSeq.constant(sh)),
                                  wait_stream(sh)),
                         fby_box(sh))
    assert obs_equal(register(sh), composite, 6)


def test_fby_box_replays_delayed_wire():
    sh = (INT,)
    # port 1 gets x through wait: output is x0, x0, x1, x2, ...
    composite = seq_comp(seq_comp(copy_stream(ShapeSeq.constant(sh)),
                                  par_comp(identity(ShapeSeq.constant(sh)),
                                           wait_stream(sh))),
                         fby_box(sh))
    got = run_det(composite, [(3,), (4,), (5,)])
    assert got == [(3,), (3,), (4,)]


# ---------------------------------------------------------------------------
# observation
# ---------------------------------------------------------------------------

def test_walk_marginals_match_binomial_oracle():
    p = observe(walk_stream(), 3)
    d = p.dist(())
    # oracle: position after k steps is a sum of k independent ±1 moves
    def binom(k):
        acc = {}
        for bits in range(2 ** k):
            pos = sum(1 if bits >> i & 1 else -1 for i in range(k))
            acc[(pos,)] = acc.get((pos,), 0) + F(1, 2 ** k)
        return Dist(acc)
    for k in range(4):
        assert marginalize(d, [k]) == binom(k)


def test_observe_matches_per_tick_marginals():
    w = walk_stream()
    margs = observe_marginals(w, 4)
    d = observe(w, 4).dist(())
    for k in range(5):
        assert marginalize(d, [k]) == margs[k]


def test_observe_is_marginal_of_longer_observe():
    w = walk_stream()
    p3 = observe(w, 3).dist(())
    p4 = observe(w, 4).dist(())
    assert marginalize(p4, range(4)) == p3


def test_copy_not_natural_for_coin_stream():
    c = coin_stream()
    sh = ShapeSeq.constant((I01,))
    lhs = seq_comp(c, copy_stream(sh))
    rhs = seq_comp(copy_stream(ShapeSeq.constant(())),
                   par_comp(coin_stream(), coin_stream()))
    assert not obs_equal(lhs, rhs, 0)


def test_discard_stream_natural():
    rng = random.Random(3)
    sh = ShapeSeq.constant((I01,))
    f = lift_const(random_kernel((I01,), (I01,), rng))
    assert obs_equal(seq_comp(f, discard_stream(sh)), discard_stream(sh), 4)


def test_observe_state_cap():
    w = par_comp(coin_stream(), coin_stream())
    with pytest.raises(StateCapExceeded) as e:
        observe(w, 5, cap=10)
    assert e.value.size > e.value.cap == 10


def test_memoized_unroll_is_stable():
    w = walk_stream()
    assert w.unroll() is w.unroll()
    mem, now, later = w.unroll()
    assert later.unroll() is later.unroll()


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def test_run_det_rejects_stochastic_tick():
    with pytest.raises(NondeterministicStream):
        run_det(coin_stream(), n=2)


def test_run_det_validates_inputs():
    s = identity(ShapeSeq.constant((I01,)))
    with pytest.raises(ShapeMismatch):
        run_det(s, [(7,)])


def test_sample_trace_deterministic_stream_equals_run_det():
    c = counter_stream()
    for seed in (0, 1, 12345):
        assert sample_trace(c, None, 5, seed) == run_det(c, n=5)


def test_sample_trace_reproducible_and_walk_shaped():
    w = walk_stream()
    t1 = sample_trace(w, None, 20, seed=42)
    t2 = sample_trace(w, None, 20, seed=42)
    assert t1 == t2
    assert t1[0] == (0,)
    for a, b in zip(t1, t1[1:]):
        assert abs(b[0] - a[0]) == 1


def test_sample_trace_tick2_frequency_matches_exact():
    w = walk_stream()
    exact = observe_marginals(w, 2)[2]
    n = 10_000
    counts = {}
    for i in range(n):
        v = sample_trace(w, None, 2, seed=1000 + i)[2]
        counts[v] = counts.get(v, 0) + 1
    for v in exact.support():
        p = float(exact[v])
        sigma = (n * p * (1 - p)) ** 0.5
        assert abs(counts.get(v, 0) - n * p) <= 5 * sigma
