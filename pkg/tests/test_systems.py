import numpy as np
import pytest
import scipy.sparse

from iopseudo.errors import DimensionMismatch, InvalidSpec, SingularMatrix
from iopseudo.linalg import induced_norm
from iopseudo.systems import (FullInitialCondition, Impulse, MatrixPolynomialSystem,
                              NetworkSystem, PlatoonSpec, SecondOrderNetwork,
                              StateSpaceSystem, StructuredInitialCondition, build_platoon,
                              companion_embed, example1, example2, is_platoon_file,
                              load_platoon_spec, load_system, resolvent_apply,
                              save_platoon_spec, save_system, scenario_matrices)


def dense_resolvent(A, s):
    return np.linalg.inv(s * np.eye(A.shape[0]) - A)


# ---- state space -----------------------------------------------------------

def test_state_space_validation():
    with pytest.raises(DimensionMismatch):
        StateSpaceSystem(np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 2)))
    with pytest.raises(DimensionMismatch):
        StateSpaceSystem(np.eye(2), np.zeros((3, 1)), np.zeros((1, 2)))
    with pytest.raises(InvalidSpec):
        StateSpaceSystem(1j * np.eye(2), np.zeros((2, 1)), np.zeros((1, 2)))
    sys = StateSpaceSystem(-np.eye(2), [1, 0], [1, 0])
    assert (sys.N, sys.P, sys.Q) == (2, 1, 1)


def test_examples_transfer_values():
    assert abs(example1().transfer(0)[0, 0]) == pytest.approx(1.0)
    assert abs(example2().transfer(0)[0, 0]) == pytest.approx(2.0)
    s = 0.3 + 0.7j
    assert example1().transfer(s)[0, 0] == pytest.approx(1 / (s + 1) ** 2)
    assert example2().transfer(s)[0, 0] == pytest.approx((s + 2) / (s + 1) ** 2)
    with pytest.raises(SingularMatrix):
        example1().transfer(-1)


def test_transfer_batch_matches_pointwise(rng):
    A = rng.standard_normal((5, 5))
    sys = StateSpaceSystem(A, rng.standard_normal((5, 2)), rng.standard_normal((3, 5)))
    s = rng.standard_normal(30) + 1j * rng.standard_normal(30)
    s[4] = np.linalg.eigvals(A)[0]
    G, sing = sys.transfer_batch(s)
    assert sing[4]
    for k in range(30):
        if k != 4:
            assert np.allclose(G[k], sys.transfer(s[k]), rtol=1e-9, atol=1e-12)


# ---- matrix polynomial and companion form ----------------------------------

def test_companion_first_order():
    sys = companion_embed(MatrixPolynomialSystem(([[1.0]],), [[1.0]], [[1.0]]))
    assert np.array_equal(sys.A, [[-1.0]])


def test_companion_reproduces_example1():
    sys = companion_embed(MatrixPolynomialSystem(([[1.0]], [[2.0]]), [[1.0]], [[1.0, 0.0]]))
    assert np.array_equal(sys.A, example1().A)
    assert np.array_equal(sys.B, example1().B)
    assert np.array_equal(sys.C, example1().C)


def test_companion_charpoly_matches_determinant(rng):
    coeffs = tuple(rng.standard_normal((2, 2)) for _ in range(3))
    poly = MatrixPolynomialSystem(coeffs, np.eye(2), np.eye(6)[:2])
    A = companion_embed(poly).A
    for s in rng.standard_normal(5) + 1j * rng.standard_normal(5):
        lhs = np.linalg.det(s * np.eye(6) - A)
        rhs = np.linalg.det(s**3 * np.eye(2) + s**2 * coeffs[2] + s * coeffs[1] + coeffs[0])
        assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_companion_transfer_matches_polynomial(rng):
    A0, A1 = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    B = rng.standard_normal((3, 2))
    Cx = rng.standard_normal((2, 3))
    poly = MatrixPolynomialSystem((A0, A1), B, np.hstack([Cx, np.zeros((2, 3))]))
    sys = companion_embed(poly)
    for s in rng.standard_normal(10) + 1j * rng.standard_normal(10):
        ref = Cx @ np.linalg.solve(poly.polynomial(s), B)
        assert np.linalg.norm(sys.transfer(s) - ref) <= 1e-10 * np.linalg.norm(ref)


def test_polynomial_validation():
    with pytest.raises(DimensionMismatch):
        MatrixPolynomialSystem((np.eye(2), np.eye(3)), np.ones((2, 1)), np.ones((1, 4)))
    with pytest.raises(InvalidSpec):
        MatrixPolynomialSystem((), np.ones((2, 1)), np.ones((1, 2)))


# ---- platoons --------------------------------------------------------------

def test_directed_laplacian_rows():
    net = build_platoon(PlatoonSpec(3, "directed"))
    L = net.Lp.to_dense().real
    assert np.array_equal(L, [[0, 0, 0], [-2, 2, 0], [0, -2, 2]])
    assert np.array_equal(net.Ld.to_dense().real, L)


def test_bidirectional_laplacian_rows():
    net = build_platoon(PlatoonSpec(3, "bidirectional"))
    assert np.array_equal(net.Lp.to_dense().real, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])


def test_custom_symmetric_equals_bidirectional():
    a = build_platoon(PlatoonSpec(9, "custom", 0.0, 0.0))
    b = build_platoon(PlatoonSpec(9, "bidirectional"))
    assert np.array_equal(a.Lp.data, b.Lp.data) and np.array_equal(a.Ld.data, b.Ld.data)


@pytest.mark.parametrize("sym,bp,bd", [("directed", 1, 1), ("bidirectional", 0, 0),
                                        ("custom", 0.3, -0.5), ("custom", 1.0, 0.2)])
def test_laplacian_rows_sum_to_zero(sym, bp, bd):
    net = build_platoon(PlatoonSpec(12, sym, bp, bd))
    for L in (net.Lp, net.Ld):
        assert np.allclose(L.to_dense().sum(axis=1), 0.0, atol=1e-15)


def test_platoon_selector_and_validation():
    net = build_platoon(PlatoonSpec(7, "directed"))
    Cx = net.Cx().toarray()
    # gaps between vehicles 1-2, 3-4 and 6-7 (1-based)
    assert np.array_equal(np.nonzero(Cx)[1], [0, 1, 2, 3, 5, 6])
    assert np.array_equal(Cx.sum(axis=1), [0, 0, 0])
    with pytest.raises(InvalidSpec):
        build_platoon(PlatoonSpec(2))
    with pytest.raises(InvalidSpec):
        PlatoonSpec(5, "sideways")
    with pytest.raises(InvalidSpec):
        PlatoonSpec(1)


def test_network_norms_match_dense():
    for sym in ("directed", "bidirectional"):
        net = build_platoon(PlatoonSpec(15, sym))
        A = net.companion_dense()
        for kind in ("1", "2", "inf"):
            assert net.norm_A(kind) == pytest.approx(induced_norm(A, kind), rel=1e-8)
            assert net.norm_C(kind) == pytest.approx(induced_norm(net.output_matrix().toarray(), kind))
    assert build_platoon(PlatoonSpec(400, "directed")).norm_A("inf") == pytest.approx(8.1)


# ---- structured resolvent --------------------------------------------------

def test_resolvent_apply_tiny_network():
    from iopseudo.linalg import BandedMatrix

    L = BandedMatrix.from_dense([[1.0, -1.0], [-1.0, 1.0]], 1, 1)
    net = SecondOrderNetwork(L, L, 0.1, ({0: 1.0, 1: -1.0},))
    A = net.companion_dense()
    X = resolvent_apply(net, 1.0, np.eye(4), output=False)
    assert np.abs(X - dense_resolvent(A, 1.0)).max() <= 1e-12


def test_resolvent_apply_singular_at_origin():
    net = build_platoon(PlatoonSpec(6, "bidirectional", alpha=0.0))
    with pytest.raises(SingularMatrix):
        resolvent_apply(net, 0.0, np.ones(12))


@pytest.mark.parametrize("sym", ["directed", "bidirectional"])
def test_resolvent_apply_matches_dense(rng, sym):
    net = build_platoon(PlatoonSpec(20, sym))
    A = net.companion_dense()
    C = net.output_matrix().toarray()
    RHS = rng.standard_normal((40, 3))
    for s in [0.05 + 1.0j, -0.3 + 0.2j, 2.0]:
        ref = C @ dense_resolvent(A, s) @ RHS
        got = resolvent_apply(net, s, RHS)
        assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)
        # transposed route used for B = I
        assert np.allclose(net.output_resolvent(s), C @ dense_resolvent(A, s), rtol=1e-9, atol=1e-12)


def test_resolvent_apply_large_directed_is_finite():
    net = build_platoon(PlatoonSpec(400, "directed"))
    y = resolvent_apply(net, 0.05 + 1.0j, np.ones(800))
    assert np.isfinite(y).all()


def test_resolvent_conjugate_symmetry(rng):
    net = build_platoon(PlatoonSpec(11, "custom", 0.4, 0.2))
    RHS = rng.standard_normal((22, 2))
    s = 0.2 + 0.9j
    assert np.allclose(resolvent_apply(net, s.conjugate(), RHS),
                       resolvent_apply(net, s, RHS).conj(), rtol=0, atol=1e-12)


def test_output_norms_match_dense(rng):
    for sym in ("directed", "bidirectional"):
        sys = NetworkSystem(build_platoon(PlatoonSpec(16, sym)))
        dense = sys.dense()
        s = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        for kind in ("1", "2", "inf"):
            ref = [induced_norm(dense.transfer(x), kind) for x in s]
            assert np.allclose(sys.transfer_norms(s, kind), ref, rtol=1e-10)


def test_output_norms_singular_is_inf():
    sys = NetworkSystem(build_platoon(PlatoonSpec(6, "bidirectional", alpha=0.0)))
    assert np.isinf(sys.transfer_norms([0.0], "inf")[0])


# ---- scenarios -------------------------------------------------------------

def test_scenarios_on_example():
    sys = example1()
    assert np.array_equal(scenario_matrices(sys, Impulse()).B, [[0], [1]])
    assert np.array_equal(scenario_matrices(sys, FullInitialCondition).B, np.eye(2))
    assert np.array_equal(scenario_matrices(sys, StructuredInitialCondition([[1], [0]])).B,
                          example2().B)
    with pytest.raises(DimensionMismatch):
        scenario_matrices(sys, StructuredInitialCondition(np.ones((3, 1))))


def test_scenarios_on_platoon():
    net = build_platoon(PlatoonSpec(400, "directed"))
    full = scenario_matrices(net, FullInitialCondition())
    assert full.P == 800 and full.B is None
    assert scipy.sparse.issparse(full.input_matrix())
    assert (full.input_matrix() != scipy.sparse.identity(800)).nnz == 0
    ref = scenario_matrices(net, Impulse())
    assert np.all(ref.B[:400] == 0) and np.allclose(ref.B[400:], 0.1)
    structured = scenario_matrices(net, StructuredInitialCondition(np.eye(800)[:, :5]))
    assert structured.P == 5


# ---- files -----------------------------------------------------------------

def test_system_file_roundtrip(tmp_path, rng):
    sys = StateSpaceSystem(rng.standard_normal((3, 3)), rng.standard_normal((3, 2)),
                           rng.standard_normal((1, 3)))
    save_system(sys, tmp_path / "s.txt")
    back = load_system(tmp_path / "s.txt")
    assert np.array_equal(back.A, sys.A) and np.array_equal(back.B, sys.B)
    assert np.array_equal(back.C, sys.C)
    assert (tmp_path / "s.txt").read_text().splitlines()[0] == "3 2 1"


def test_system_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1 1\n1 2 3\n")
    with pytest.raises(InvalidSpec):
        load_system(bad)
    with pytest.raises(FileNotFoundError):
        load_system(tmp_path / "missing.txt")


def test_platoon_file_roundtrip(tmp_path):
    spec = PlatoonSpec(40, "custom", 0.25, 0.5, alpha=0.2)
    save_platoon_spec(spec, tmp_path / "p.txt")
    assert is_platoon_file(tmp_path / "p.txt")
    assert load_platoon_spec(tmp_path / "p.txt") == spec
    (tmp_path / "q.txt").write_text("platoon\nn=4\ncolor=red\n")
    with pytest.raises(InvalidSpec):
        load_platoon_spec(tmp_path / "q.txt")
