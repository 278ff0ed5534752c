import math

import numpy as np
import pytest

from iopseudo.bounds import kreiss_constant, upper_bound_semicircle
from iopseudo.errors import HorizonTooShort, NotConverged
from iopseudo.linalg import induced_norm
from iopseudo.oracle import HorizonConfig, check_laplace_identity, transient_sup
from iopseudo.systems import StateSpaceSystem, example1, example2


def test_example1_peak():
    # C e^{tA} B = t e^{-t}
    tr = transient_sup(example1())
    assert tr.sup_value == pytest.approx(math.exp(-1), rel=1e-6)
    assert tr.sup_time == pytest.approx(1.0, abs=1e-3)
    assert tr.converged
    assert tr.values[0] == 0.0


def test_trace_matches_closed_form():
    tr = transient_sup(example1())
    t = tr.times[::97]
    assert np.allclose(tr.values[::97], t * np.exp(-t), atol=1e-12)


def test_identity_decay_peaks_at_zero():
    tr = transient_sup(StateSpaceSystem(-np.eye(3), np.eye(3), np.eye(3)))
    assert tr.sup_value == pytest.approx(1.0)
    assert tr.sup_time == 0.0


def test_normal_matrix():
    A = np.array([[-0.3, 0, 0], [0, -2.0, 1.0], [0, -1.0, -2.0]])
    tr = transient_sup(StateSpaceSystem(A, np.eye(3), np.eye(3)))
    assert tr.sup_value == pytest.approx(1.0)


@pytest.mark.parametrize("norm", ["1", "2", "inf"])
def test_example2_inside_bounds(norm):
    sys = example2()
    sup = transient_sup(sys, norm).sup_value
    assert kreiss_constant(sys, norm).value <= sup * (1 + 1e-6)
    assert sup <= upper_bound_semicircle(sys, 3.0, norm=norm).value


def test_sup_at_least_initial_value(rng):
    from conftest import random_stable
    for _ in range(5):
        A, B, C = random_stable(rng, 6, 2, 3, 0.2)
        tr = transient_sup(StateSpaceSystem(A, B, C))
        assert tr.sup_value >= induced_norm(C @ B, "2") - 1e-12


def test_grid_refinement_stable():
    sys = example2()
    coarse = transient_sup(sys, config=HorizonConfig(delta=0.02)).sup_value
    fine = transient_sup(sys, config=HorizonConfig(delta=0.01)).sup_value
    assert abs(coarse - fine) / fine < 1e-3


def test_not_converged():
    sys = StateSpaceSystem([[-1e-3]], [[1.0]], [[1.0]])
    with pytest.raises(NotConverged):
        transient_sup(sys, config=HorizonConfig(horizon=5.0))
    tr = transient_sup(sys, config=HorizonConfig(horizon=5.0), strict=False)
    assert not tr.converged and tr.times[-1] == pytest.approx(5.0, abs=1e-2)


@pytest.mark.parametrize("s", [1.0, 2 + 1j, 10.0])
def test_laplace_identity(s):
    assert check_laplace_identity(example1(), s) < 1e-10
    assert check_laplace_identity(example2(), s) < 1e-10


def test_laplace_horizon_too_short():
    with pytest.raises(HorizonTooShort):
        check_laplace_identity(example1(), 1.0, horizon=1.0)
    with pytest.raises(HorizonTooShort):
        check_laplace_identity(example1(), -2.0)


def test_unstable_trace_overflows():
    from iopseudo.errors import Overflow
    with pytest.raises(Overflow):
        transient_sup(StateSpaceSystem([[0.5]], [[1.0]], [[1.0]]))
