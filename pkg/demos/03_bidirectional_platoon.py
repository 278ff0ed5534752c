# %% [markdown]
# Cars that look both ahead and behind.
#
# Here the peak no longer explodes: both bounds stay near the same values
# as the string grows, and the frequency responses of different lengths
# lie on one curve until the slowest mode of the shorter string kicks in.

# %%
import sys
from pathlib import Path

import numpy as np

from iopseudo import (FullInitialCondition, GridSpec, PlatoonSpec, build_platoon,
                      evaluate_grid, extract_level_curves, kreiss_constant, resolvent_norms,
                      scenario_matrices, upper_bound_semicircle)
from iopseudo.formats import write_bode_csv, write_svg

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "bidirectional"
out.mkdir(parents=True, exist_ok=True)


def platoon(n):
    return scenario_matrices(build_platoon(PlatoonSpec(n, "bidirectional")),
                             FullInitialCondition())


# %% Bounds for growing strings
# the lower bound search is the slow part, so it stops at n = 400
for n in (50, 400, 4000):
    s = platoon(n)
    hi = upper_bound_semicircle(s, 3.0, norm="inf").value
    lo = f"{kreiss_constant(s, 'inf').value:.3f}" if n <= 400 else "  -  "
    print(f"n={n:5d}  lower {lo}  upper(a=3) {hi:.3f}")

# %% Frequency responses overlap above the corner of the shorter string
omega = np.logspace(-6, np.log10(4), 120)
amps = {}
for n in (1000, 10000):
    amps[n] = resolvent_norms(platoon(n), 1j * omega, "inf")
    write_bode_csv(omega, amps[n], out / f"bode_n{n}.csv")
ratio = amps[10000] / amps[1000]
for w in (1e-6, 1e-4, 1e-2, 1.0):
    k = int(np.argmin(np.abs(omega - w)))
    print(f"omega={omega[k]:.1e}  n=1e4 / n=1e3 = {ratio[k]:.3f}")

# %% Level sets of ||G(s)|| = 10^1.5 for n = 400
# one component hugs the eigenvalues around -1, a larger one also takes in
# the real eigenvalues near -2.5 and the point s = 0
s400 = platoon(400)
window = (-3.0, 1.0, -2.5, 2.5)
grid = evaluate_grid(s400, GridSpec(window[:2], window[2:], (160, 200), "inf"))
curves = extract_level_curves(grid, 10 ** -1.5)
for c in curves:
    print(f"component: max |s+1| = {np.abs(c.vertices + 1).max():.3f}, "
          f"max Re s = {c.max_real_part:+.4f}")
write_svg(out / "pseudospectrum_n400.svg", curves, s400.eigenvalues(), window=window)
