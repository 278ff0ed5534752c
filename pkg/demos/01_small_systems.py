# %% [markdown]
# Two small systems where everything can be checked by hand.
#
# The first is a double pole: G(s) = 1/(s+1)^2, so y(t) = t e^{-t} peaks at
# 1/e. The second has a non-normal 2x2 block with transient growth.

# %%
import math
import sys
from pathlib import Path

import numpy as np

from iopseudo import (GridSpec, circle_contour, compute_bounds, evaluate_grid, example1,
                      example2, extract_level_curves, transient_sup, upper_bound_contour,
                      upper_bound_semicircle)
from iopseudo.formats import write_curves_csv, write_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "small"
out.mkdir(parents=True, exist_ok=True)

# %% Level sets of ||G(s)|| are circles |s+1| = sqrt(eps) for the double pole
ex1 = example1()
grid = evaluate_grid(ex1, GridSpec((-2.5, 0.5), (-1.6, 1.6), (300, 300)))
curves = {eps: extract_level_curves(grid, eps) for eps in (0.1, 0.25, 0.5, 1.0)}
for eps, cs in curves.items():
    (c,) = cs
    print(f"eps={eps:<5} radius~{c.arc_length / (2 * math.pi):.4f}  "
          f"sqrt(eps)={math.sqrt(eps):.4f}")
write_curves_csv(curves, out / "example1_curves.csv")
write_svg(out / "example1_curves.svg", [c for cs in curves.values() for c in cs],
          ex1.eigenvalues(), window=(-2.5, 0.5, -1.6, 1.6))

# %% Lower bound, axis bound and the actual peak
rep = compute_bounds(ex1, "2", eps_ladder=[0.25, 1.0],
                     grid_spec=GridSpec((-2.5, 0.5), (-1.6, 1.6), (300, 300)))
peak = transient_sup(ex1).sup_value
print(f"\nexample 1: {rep.lower.value:.4f} <= sup {peak:.4f} <= {rep.best_upper:.4f}")
print(f"  contour bound at eps={rep.upper1.epsilon:g}: {rep.upper1.value:.4f}")

# a contour further left gives a bound that decays in time
(quarter,) = extract_level_curves(grid, 0.25)
cb = upper_bound_contour(ex1, quarter)
t = np.array([0.0, 1.0, 2.0, 5.0])
print("  eps=0.25 bound over time:", np.round(cb.at(t), 4))
print("  actual response:         ", np.round(t * np.exp(-t), 4))

# %% Example 2 decays like 1/s, so only the semicircle bound applies
ex2 = example2()
lower = compute_bounds(ex2, "inf", a=3.0)
semi = upper_bound_semicircle(ex2, "opt", norm="inf")
circle = upper_bound_contour(ex2, circle_contour(ex2, -1.0, 1.0, "inf"))
peak = transient_sup(ex2, "inf").sup_value
print(f"\nexample 2 (inf-norm): lower {lower.lower.value:.4f}, sup {peak:.4f}")
print(f"  semicircle a=3: {lower.upper2.value:.4f}, best a={semi.a:.3f}: {semi.value:.4f}")
print(f"  contour on |s+1|=1: {circle.value:.4f}")
print(f"\nartifacts in {out}")
