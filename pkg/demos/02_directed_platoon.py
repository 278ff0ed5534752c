# %% [markdown]
# A string of vehicles where each car only looks at the one ahead.
#
# The closed loop is stable for every length, yet the worst-case response
# grows exponentially with the number of cars. The banded resolvent makes
# n = 400 cheap even though sup ||C e^{tA}|| is around 1e31.

# %%
import sys
import time
from pathlib import Path

import numpy as np

from iopseudo import (FullInitialCondition, PlatoonSpec, build_platoon, kreiss_constant,
                      resolvent_norms, scenario_matrices, upper_bound_semicircle)
from iopseudo.formats import write_bode_csv

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out") / "directed"
out.mkdir(parents=True, exist_ok=True)


def platoon(n):
    # every initial position and velocity error is a possible input
    return scenario_matrices(build_platoon(PlatoonSpec(n, "directed")), FullInitialCondition())


# %% Bode family: the peak near omega = 1 grows with n
omega = np.logspace(-3, np.log10(4), 400)
for n in (50, 100, 200, 400):
    amp = resolvent_norms(platoon(n), 1j * omega, "inf")
    k = int(np.argmax(amp))
    print(f"n={n:4d}  peak {amp[k]:.3e} at omega={omega[k]:.3f}")
    write_bode_csv(omega, amp, out / f"bode_n{n}.csv")

# %% Both bounds at n = 400
sys400 = platoon(400)
t0 = time.perf_counter()
lower = kreiss_constant(sys400, "inf")
print(f"\nKreiss lower bound {lower.value:.3e} at s = {lower.argmax:.4f}"
      f"  ({time.perf_counter() - t0:.1f}s)")
t0 = time.perf_counter()
upper = upper_bound_semicircle(sys400, "opt", norm="inf")
print(f"semicircle upper bound {upper.value:.3e} with a = {upper.a:.3f}"
      f"  ({time.perf_counter() - t0:.1f}s)")
print(f"the two agree within a factor {upper.value / lower.value:.0f}")
