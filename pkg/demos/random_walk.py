#!/usr/bin/env python3
"""Exact and sampled views of the same random walk.

The walk takes a fresh uniform +/-1 step every tick.  Its exact per-tick
distributions are computed by enumerating every branch with rational
weights; sampling the compiled process must agree with them in the
frequency sense.
"""

from fractions import Fraction

from mstream import (
    compile_term,
    default_signature,
    elaborate,
    mix,
    observe_marginals,
    parse,
    sample_trace,
)

WALK = "walk = 0 fby (unif(-1, 1) + walk)\n"


def main():
    stream = compile_term(elaborate(parse(WALK)), default_signature())

    horizon = 4
    exact = observe_marginals(stream, horizon)
    print("exact marginals:")
    for t, dist in enumerate(exact):
        cells = ", ".join(f"{v[0]:+d}: {p}" for v, p in dist.items())
        print(f"  t={t}  {cells}")

    trials = 20_000
    counts = [dict() for _ in range(horizon + 1)]
    for i in range(trials):
        for t, row in enumerate(sample_trace(stream, None, horizon,
                                             mix(2024, i))):
            counts[t][row] = counts[t].get(row, 0) + 1

    print(f"\nsampled frequencies ({trials} trials) vs exact:")
    for t in range(horizon + 1):
        for v, p in exact[t].items():
            emp = Fraction(counts[t].get(v, 0), trials)
            print(f"  t={t} value {v[0]:+d}: {float(emp):.4f} "
                  f"(exact {float(p):.4f})")

    one = sample_trace(stream, None, 15, seed=8)
    print("\none trajectory:", [row[0] for row in one])


if __name__ == "__main__":
    main()
