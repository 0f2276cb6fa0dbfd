"""A walk through the glued space for Z*Z acting on two copies of the line.

Run with ``python3 demos/free_product_tour.py``.
"""

from __future__ import annotations

import numpy as np

from zlab.free_product import End, FreeProductSpace, line_compactum
from zlab.words import format_word, parse_word


def main() -> None:
    space = FreeProductSpace()
    x0 = space.basepoint
    w = parse_word("g:1,h:2,g:1")
    print(f"r*({format_word(w)}) = {space.rstar(w)}")

    a = space.point(parse_word("g:1"), "Y", 0.2)
    b = space.point(parse_word("g:3,h:-1"), "X", 0.9)
    path = ", ".join(str(p) for p in space.connecting_sequence(a, b))
    print(f"d(a, b) = {space.dist(a, b):.6f} via {path}")

    end = End(parse_word("h:1,g:1,h:1,g:1,h:1,g:1"))
    d, tol = space.dist_bounds(x0, end)
    print(f"d(x0, end) = {d:.6f} +/- {tol:.6f}")

    for eps in (0.5, 0.25, 0.125):
        net = space.epsilon_net(eps)
        rng = np.random.default_rng(0)
        gap = max(space.nearest_center(net, space.random_point(rng, 8))[0] for _ in range(2000))
        print(f"eps = {eps}: {len(net)} centers, largest sampled gap {gap:.4f}")

    idx = space.build_z_epsilon(0.25)
    print(f"Z_eps core words at eps 1/4: {sorted(format_word(v) for v in idx.core)}")
    p = space.point(parse_word("g:1,h:5,g:2"), "Y", 0.85)
    track = [space.homotopy_K(p, t, idx) for t in np.linspace(0, 1, 6)]
    print("K track:", " -> ".join(str(q) for q in track))

    C = line_compactum()
    gamma, _ = space.exceptional_translates(C, 0.125, 6)
    print(f"translates of C wider than 1/8: {[format_word(v) for v in gamma]}")


if __name__ == "__main__":
    main()
