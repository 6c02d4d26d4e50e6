#!/usr/bin/env python3
"""The Ehrenfest urn model, exactly.

Four balls sit in two urns, all starting in urn 1.  Each tick one
uniformly chosen ball hops to the other urn.  The program tracks one
0/1 indicator per ball; the two shared random bits select the hopping
ball, so all indicators see the same draw — exactly one ball moves.

The urn-1 occupancy is a birth-death chain on {0..4}.  Its exact
distribution is read off the compiled program and compared against
matrix powers of the 5-state chain.
"""

from fractions import Fraction
from pathlib import Path

from mstream import (
    compile_term,
    default_signature,
    elaborate,
    observe_marginals,
    parse,
    sample_trace,
)

PROGRAM = Path(__file__).resolve().parent.parent / "programs" / "ehrenfest.ms"


def chain_oracle(k):
    """Occupancy distribution after k moves, by 5-state matrix power."""
    row = {4: Fraction(1)}
    for _ in range(k):
        nxt = {}
        for s, p in row.items():
            if s > 0:
                nxt[s - 1] = nxt.get(s - 1, Fraction(0)) + p * Fraction(s, 4)
            if s < 4:
                nxt[s + 1] = nxt.get(s + 1, Fraction(0)) + p * Fraction(4 - s, 4)
        row = nxt
    return row


def main():
    prog = parse(PROGRAM.read_text())
    stream = compile_term(elaborate(prog), default_signature())

    horizon = 8
    marginals = observe_marginals(stream, horizon)
    print("urn-1 occupancy distribution (program vs chain oracle):")
    for k in range(horizon + 1):
        got = {v[0]: p for v, p in marginals[k].items()}
        assert got == chain_oracle(k), f"mismatch at k={k}"
        cells = ", ".join(f"{s}: {p}" for s, p in sorted(got.items()))
        print(f"  k={k}  {cells}")

    print("\nthe occupancy alternates parity (4,3,4,... even/odd),")
    print("spreading toward the binomial profile on each parity class.")

    trace = [row[0] for row in sample_trace(stream, None, 20, seed=6)]
    print("\none sampled occupancy path:", trace)
    assert all(abs(b - a) == 1 for a, b in zip(trace, trace[1:]))
    print("every step moves exactly one ball.")


if __name__ == "__main__":
    main()
