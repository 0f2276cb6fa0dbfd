"""Why the product of two compactified lines is the wrong compactification.

Vertical translates of [-1, 1] x {0} never shrink in the product topology,
but in the join compactification they settle into one neighborhood of a
boundary point.  Run with ``python3 demos/join_counterexample.py``.
"""

from __future__ import annotations

import math

from zlab.direct_product import JoinCompactification, JoinPoint, reproduce_counterexample


def main() -> None:
    J = JoinCompactification()
    rep = reproduce_counterexample(100, 0.1, J)
    print(f"product cover fits some translate: {not rep['product_never_fits']}")
    print(f"join neighborhood of <ybar, inf> holds every translate from n = {rep['n0']} on")
    print(f"p stays below {rep['p_max_on_C']:.3f} on C while q(n) grows:")
    for n in (1, 5, 15, 50, 100):
        print(f"  q(e({n})) = {float(J.proper_y.of_real(n)):8.2f}")

    print("ray slopes approach the target slope:")
    for mu in (0.1, 1.0, 10.0):
        for k in (5, 20, 80):
            t = k * math.sqrt(mu * mu + 1)
            z = J.ray_gamma_prime(JoinPoint(1.0, 1.0, mu), t)
            lo, hi = J.slope_interval(mu, t)
            print(f"  mu {mu:5}: t {t:7.2f} slope {J.slope(z.x, z.y):.4f} in ({lo:.4f}, {hi:.4f})")


if __name__ == "__main__":
    main()
