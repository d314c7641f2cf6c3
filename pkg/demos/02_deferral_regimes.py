#!/usr/bin/env python3
"""Map where deferral (investing for every type) can start a herd.

A member defers by setting her cut at the bottom of the type support, so
her investment carries no information.  That is only rational when the
odds jump after her investment is large enough to tip everyone later
into an all-invest herd.  Whether such a tipping cut exists depends on
the reliability floor R: below a critical value the public odds can
never jump past the herd bound in one step.

The script scans R, reports the critical floor, and shows the hazard
shape that decides which member of an all-deferring block can be the
one to defer.
"""

import numpy as np

from cascadefund.beliefs import QualitySpec, TypeDistribution
from cascadefund.cascades import cascade_startable, min_R_for_cascades
from cascadefund.unanimity import J_monotone_segments, delegation_analysis


def main() -> None:
    Q = 0.8
    crit = min_R_for_cascades(Q)
    print(f"quality ceiling Q = {Q}")
    print(f"critical reliability floor for startable herds: R* = {crit:.6f}\n")

    print(f"  {'R':>5}  startable  lowest tipping cut")
    for R in (0.50, 0.55, 0.60, crit, 0.65, 0.70, 0.75):
        dist = TypeDistribution(QualitySpec.uniform(R, Q))
        found, witness = cascade_startable(dist)
        where = f"x = {witness:.6f}" if found else "-"
        print(f"  {R:5.3f}  {str(found):>9}  {where}")

    print("\ndeferral report, R = 0.65:")
    rep = delegation_analysis(TypeDistribution(QualitySpec.uniform(0.65, Q)))
    for a, b in rep.witness_intervals:
        print(f"  tipping cuts in [{a:.6f}, {b:.6f}]")
    print(f"  earliest mover only: {rep.earliest_only}")
    print(f"  latest mover only:   {rep.latest_only}")

    # The screening hazard J(x) = x/(1-x) * (1-F0)/(1-F1) is what pins
    # equal cuts in a must-fill game; where it loses monotonicity, unequal
    # and deferring profiles become possible.
    print("\nhazard monotonicity segments (sign of d log J / dx):")
    for R in (0.50, 0.65):
        dist = TypeDistribution(QualitySpec.uniform(R, Q))
        segs = J_monotone_segments(dist)
        desc = ", ".join(
            f"[{a:.3f}, {b:.3f}] {'rising' if s > 0 else 'falling'}"
            for a, b, s in segs
        )
        print(f"  R = {R:.2f}: {desc}")


if __name__ == "__main__":
    main()
