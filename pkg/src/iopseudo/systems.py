"""System representations.

Three shapes of linear system appear here:

* :class:`StateSpaceSystem` - a dense triple ``(A, B, C)``;
* :class:`MatrixPolynomialSystem` - ``x^(l) + A_{l-1} x^(l-1) + ... + A_0 x = B u``,
  turned into a state-space triple by :func:`companion_embed`;
* :class:`SecondOrderNetwork` - the closed loop
  ``[x'; v'] = [[0, I], [-Lp, -Ld - alpha I]] [x; v]`` kept in banded form so
  that resolvents cost O(n).

Every system exposes ``transfer(s)`` returning ``C (sI - A)^{-1} B``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse

from ._banded import network_output_norms
from .errors import DimensionMismatch, InvalidSpec, SingularMatrix
from .linalg import (PIVOT_RTOL, BandedMatrix, NormKind, _power_iteration_norm2, as_matrix,
                     induced_norm, solve_banded, solve_dense, solve_dense_batch)

__all__ = [
    "StateSpaceSystem",
    "MatrixPolynomialSystem",
    "SecondOrderNetwork",
    "NetworkSystem",
    "Impulse",
    "FullInitialCondition",
    "StructuredInitialCondition",
    "PlatoonSpec",
    "companion_embed",
    "build_platoon",
    "scenario_matrices",
    "resolvent_apply",
    "load_system",
    "save_system",
    "load_platoon_spec",
    "save_platoon_spec",
    "is_platoon_file",
    "example1",
    "example2",
]

# largest dense state for which grid evaluations use the vectorised solver
_BATCH_MAX_N = 48


@dataclass(frozen=True)
class StateSpaceSystem:
    """Dense linear system ``xi' = A xi + B u``, ``y = C xi``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        N = A.shape[0]
        if A.shape != (N, N):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape[0] != N:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, A is {N}x{N}")
        if C.shape[1] != N:
            if C.shape == (N, 1) and N > 1:
                C = C.T
            else:
                raise DimensionMismatch(f"C has {C.shape[1]} columns, A is {N}x{N}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            if np.any(M.imag != 0):
                raise InvalidSpec(f"{name} must be real-valued")
            M.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def N(self) -> int:
        return self.A.shape[0]

    @property
    def P(self) -> int:
        return self.B.shape[1]

    @property
    def Q(self) -> int:
        return self.C.shape[0]

    @property
    def is_real(self) -> bool:
        return True

    def with_input(self, B) -> "StateSpaceSystem":
        return StateSpaceSystem(self.A, B, self.C)

    def transfer(self, s) -> np.ndarray:
        """``C (sI - A)^{-1} B``; raises :class:`SingularMatrix` on the spectrum."""
        M = s * np.eye(self.N) - self.A
        if self.Q < self.P:
            return solve_dense(M.T, self.C.T).T @ self.B
        return self.C @ solve_dense(M, self.B)

    def transfer_batch(self, s):
        """Evaluate the transfer matrix at many points.

        Returns ``(G, singular)`` with ``G`` of shape ``(k, Q, P)``; rows of
        ``G`` at singular points are NaN.
        """
        s = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
        k = s.size
        out = np.full((k, self.Q, self.P), np.nan, dtype=complex)
        singular = np.zeros(k, dtype=bool)
        if self.N <= _BATCH_MAX_N:
            eye = np.eye(self.N)
            chunk = max(1, 2**20 // max(1, self.N * self.N))
            for lo in range(0, k, chunk):
                ss = s[lo:lo + chunk]
                Ms = ss[:, None, None] * eye - self.A
                X, sing = solve_dense_batch(Ms, self.B)
                out[lo:lo + chunk] = np.einsum("qn,knp->kqp", self.C, X)
                singular[lo:lo + chunk] = sing
                out[lo:lo + chunk][sing] = np.nan
        else:
            for i, si in enumerate(s):
                try:
                    out[i] = self.transfer(si)
                except SingularMatrix:
                    singular[i] = True
        return out, singular

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.A)

    def norm_A(self, kind=NormKind.P2) -> float:
        return induced_norm(self.A, kind)

    def norm_B(self, kind=NormKind.P2) -> float:
        return induced_norm(self.B, kind)

    def norm_C(self, kind=NormKind.P2) -> float:
        return induced_norm(self.C, kind)

    def dense(self) -> "StateSpaceSystem":
        return self


@dataclass(frozen=True)
class MatrixPolynomialSystem:
    """``x^(l) + A_{l-1} x^(l-1) + ... + A_0 x = B u`` with output ``y = C xi``.

    ``coefficients`` lists ``A_0 ... A_{l-1}``; ``C`` acts on the stacked
    state ``xi = [x, x', ..., x^(l-1)]``.
    """

    coefficients: tuple
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        coeffs = tuple(as_matrix(Ak, f"A{k}") for k, Ak in enumerate(self.coefficients))
        if not coeffs:
            raise InvalidSpec("order must be at least 1")
        n = coeffs[0].shape[0]
        for k, Ak in enumerate(coeffs):
            if Ak.shape != (n, n):
                raise DimensionMismatch(f"A{k} has shape {Ak.shape}, expected {(n, n)}")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        if C.shape[1] != n * len(coeffs) and C.shape[0] == n * len(coeffs):
            C = C.T
        if B.shape[0] != n:
            raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {n}")
        if C.shape[1] != n * len(coeffs):
            raise DimensionMismatch(f"C has {C.shape[1]} columns, expected {n * len(coeffs)}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def order(self) -> int:
        return len(self.coefficients)

    @property
    def n(self) -> int:
        return self.coefficients[0].shape[0]

    def polynomial(self, s) -> np.ndarray:
        """``s^l I + s^{l-1} A_{l-1} + ... + A_0``."""
        out = s**self.order * np.eye(self.n, dtype=complex)
        for k, Ak in enumerate(self.coefficients):
            out = out + s**k * Ak
        return out


def companion_embed(sys: MatrixPolynomialSystem) -> StateSpaceSystem:
    """First-order block-companion form of a matrix polynomial system."""
    n, l = sys.n, sys.order
    A = np.zeros((n * l, n * l), dtype=complex)
    for k in range(l - 1):
        A[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = np.eye(n)
    for k, Ak in enumerate(sys.coefficients):
        A[(l - 1) * n:, k * n:(k + 1) * n] = -Ak
    B = np.zeros((n * l, sys.B.shape[1]), dtype=complex)
    B[(l - 1) * n:] = sys.B
    return StateSpaceSystem(A, B, sys.C)


@dataclass(frozen=True)
class SecondOrderNetwork:
    """Closed loop ``[x'; v'] = [[0, I], [-Lp, -Ld - alpha I]] [x; v]``.

    ``selector`` lists output rows as ``{position index: weight}`` maps over
    ``x``; the velocity part of the output matrix is zero.
    """

    Lp: BandedMatrix
    Ld: BandedMatrix
    alpha: float
    selector: tuple

    def __post_init__(self):
        if self.Lp.n != self.Ld.n:
            raise DimensionMismatch("Lp and Ld must have the same size")
        if self.alpha < 0:
            raise InvalidSpec("alpha must be nonnegative")
        rows = tuple(dict(r) for r in self.selector)
        for r in rows:
            for idx in r:
                if not 0 <= idx < self.n:
                    raise DimensionMismatch(f"selector index {idx} out of range")
        object.__setattr__(self, "selector", rows)

    @property
    def n(self) -> int:
        return self.Lp.n

    @property
    def N(self) -> int:
        return 2 * self.n

    @property
    def Q(self) -> int:
        return len(self.selector)

    def Cx(self) -> scipy.sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for i, r in enumerate(self.selector):
            for j, w in r.items():
                rows.append(i)
                cols.append(j)
                vals.append(w)
        return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(self.Q, self.n))

    def output_matrix(self) -> scipy.sparse.csr_matrix:
        return scipy.sparse.hstack([self.Cx(), scipy.sparse.csr_matrix((self.Q, self.n))],
                                   format="csr")

    def reference_input(self) -> np.ndarray:
        """The ``[0; alpha 1]`` column multiplying the velocity reference."""
        B = np.zeros((self.N, 1))
        B[self.n:] = self.alpha
        return B

    def damping(self, s) -> BandedMatrix:
        """``D(s) = sI + Ld + alpha I``."""
        return self.Ld.shift(s + self.alpha)

    def quadratic(self, s) -> BandedMatrix:
        """``Q(s) = s^2 I + s (Ld + alpha I) + Lp``."""
        return (s * self.Ld + self.Lp).shift(s * s + s * self.alpha)

    def companion_sparse(self):
        n = self.n
        ident = scipy.sparse.identity(n, format="csr")
        return scipy.sparse.bmat(
            [[None, ident],
             [-self.Lp.to_sparse(), -self.Ld.shift(self.alpha).to_sparse()]],
            format="csr")

    def companion_dense(self) -> np.ndarray:
        return self.companion_sparse().toarray()

    def norm_A(self, kind=NormKind.P2) -> float:
        kind = NormKind.parse(kind)
        if kind is NormKind.PINF:
            lower = self.Lp.row_abs_sums() + self.Ld.shift(self.alpha).row_abs_sums()
            return float(max(1.0, lower.max()))
        if kind is NormKind.P1:
            left = self.Lp.col_abs_sums()
            right = 1.0 + self.Ld.shift(self.alpha).col_abs_sums()
            return float(max(left.max(), right.max()))
        return _power_iteration_norm2(self.companion_sparse())

    def norm_C(self, kind=NormKind.P2) -> float:
        return induced_norm(self.Cx().toarray(), kind)

    def output_resolvent(self, s) -> np.ndarray:
        """``C (sI - A)^{-1}`` as a dense ``Q x 2n`` array.

        Solves ``Q(s)^T q = c`` for each output row; the position block is
        then ``D(s)^T q``.
        """
        s = complex(s)
        Cx = self.Cx().toarray().T.astype(complex)
        q = solve_banded(self.quadratic(s).T, Cx)
        p = self.damping(s).T.matvec(q)
        return np.concatenate([p.T, q.T], axis=1)

    def output_norms(self, s, kind=NormKind.P2) -> np.ndarray:
        """``||C (sI - A)^{-1}||`` at many points; ``inf`` where singular.

        Same result as taking norms of :meth:`output_resolvent`, but runs
        in a compiled loop without storing the ``Q x 2n`` blocks.
        """
        kind = NormKind.parse(kind)
        s = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
        kl, ku = max(self.Lp.kl, self.Ld.kl), max(self.Lp.ku, self.Ld.ku)
        lp, ld = self.Lp.widen(kl, ku).data, self.Ld.widen(kl, ku).data
        cx = np.ascontiguousarray(self.Cx().toarray().T, dtype=complex)
        inf_n, one_n, gram = network_output_norms(lp, ld, kl, ku, float(self.alpha), cx, s,
                                                  PIVOT_RTOL)
        if kind is NormKind.PINF:
            return inf_n
        if kind is NormKind.P1:
            return one_n
        out = np.full(s.size, math.inf)
        ok = np.isfinite(inf_n)
        if ok.any():
            top = np.linalg.eigvalsh(gram[ok])[:, -1]
            out[ok] = np.sqrt(np.maximum(top, 0.0))
        return out

    def dense(self) -> StateSpaceSystem:
        return StateSpaceSystem(self.companion_dense(), self.reference_input(),
                                self.output_matrix().toarray())


def resolvent_apply(net: SecondOrderNetwork, s, RHS, output=True) -> np.ndarray:
    """Apply ``(sI - A)^{-1}`` (and the output map) using banded solves only.

    With ``RHS = [b1; b2]`` split into position and velocity blocks,
    ``x = Q(s)^{-1} (D(s) b1 + b2)`` and ``v = s x - b1``. Returns ``C x``
    when ``output`` is true, else the full state ``[x; v]``.
    """
    s = complex(s)
    RHS = np.asarray(RHS, dtype=complex)
    vector = RHS.ndim == 1
    RHS = RHS.reshape(RHS.shape[0], -1)
    n = net.n
    if RHS.shape[0] != 2 * n:
        raise DimensionMismatch(f"RHS has {RHS.shape[0]} rows, expected {2 * n}")
    b1, b2 = RHS[:n], RHS[n:]
    x = solve_banded(net.quadratic(s), net.damping(s).matvec(b1) + b2)
    if output:
        out = net.Cx() @ x
    else:
        out = np.concatenate([x, s * x - b1])
    return out[:, 0] if vector else out


@dataclass(frozen=True)
class NetworkSystem:
    """A :class:`SecondOrderNetwork` with an input matrix.

    ``B=None`` stands for the identity ``I_{2n}`` without storing it.
    """

    net: SecondOrderNetwork
    B: object = None

    def __post_init__(self):
        if self.B is not None:
            B = self.B
            if not scipy.sparse.issparse(B):
                B = as_matrix(B, "B")
            if B.shape[0] != self.net.N:
                raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {self.net.N}")
            object.__setattr__(self, "B", B)

    @property
    def N(self) -> int:
        return self.net.N

    @property
    def P(self) -> int:
        return self.net.N if self.B is None else self.B.shape[1]

    @property
    def Q(self) -> int:
        return self.net.Q

    @property
    def is_real(self) -> bool:
        return True

    def input_matrix(self):
        if self.B is None:
            return scipy.sparse.identity(self.net.N, format="csr")
        return self.B

    def transfer(self, s) -> np.ndarray:
        Y = self.net.output_resolvent(s)
        if self.B is None:
            return Y
        return np.asarray(Y @ self.B)

    def transfer_batch(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
        out = np.full((s.size, self.Q, self.P), np.nan, dtype=complex)
        singular = np.zeros(s.size, dtype=bool)
        for i, si in enumerate(s):
            try:
                out[i] = self.transfer(si)
            except SingularMatrix:
                singular[i] = True
        return out, singular

    def transfer_norms(self, s, kind=NormKind.P2):
        """Norms of ``G`` at many points without keeping the matrices.

        Singular points give ``inf``. Used in place of :meth:`transfer_batch`
        because ``Q x P`` can be huge for large networks.
        """
        if self.B is None:
            return self.net.output_norms(s, kind)
        s = np.atleast_1d(np.asarray(s, dtype=complex)).ravel()
        out = np.empty(s.size)
        for i, si in enumerate(s):
            try:
                out[i] = induced_norm(self.transfer(si), kind)
            except SingularMatrix:
                out[i] = math.inf
        return out

    def eigenvalues(self) -> np.ndarray:
        if self.net.N > 4000:
            raise ValueError("eigenvalues are only computed for N <= 4000")
        return np.linalg.eigvals(self.net.companion_dense())

    def norm_A(self, kind=NormKind.P2) -> float:
        return self.net.norm_A(kind)

    def norm_B(self, kind=NormKind.P2) -> float:
        if self.B is None:
            return 1.0
        B = self.B.toarray() if scipy.sparse.issparse(self.B) else self.B
        return induced_norm(B, kind)

    def norm_C(self, kind=NormKind.P2) -> float:
        return self.net.norm_C(kind)

    def dense(self) -> StateSpaceSystem:
        B = self.input_matrix()
        B = B.toarray() if scipy.sparse.issparse(B) else B
        return StateSpaceSystem(self.net.companion_dense(), B, self.net.output_matrix().toarray())


class Impulse:
    """Impulsive input through the system's own ``B``."""

    def __repr__(self):
        return "Impulse()"


class FullInitialCondition:
    """Worst-case initial state: ``B = I_N``."""

    def __repr__(self):
        return "FullInitialCondition()"


@dataclass(frozen=True)
class StructuredInitialCondition:
    """Initial states restricted to the range of ``B0``."""

    B0: np.ndarray


def scenario_matrices(sys, scenario):
    """Re-target ``sys`` to an input scenario.

    Accepts a :class:`StateSpaceSystem`, a :class:`SecondOrderNetwork` (whose
    own input is the reference column) or a :class:`NetworkSystem`.
    """
    if isinstance(sys, SecondOrderNetwork):
        sys = NetworkSystem(sys, sys.reference_input())
    if isinstance(scenario, type):
        scenario = scenario()
    if isinstance(scenario, Impulse):
        return sys
    if isinstance(scenario, FullInitialCondition):
        if isinstance(sys, NetworkSystem):
            return NetworkSystem(sys.net, None)
        return sys.with_input(np.eye(sys.N))
    if isinstance(scenario, StructuredInitialCondition):
        B0 = scenario.B0
        if not scipy.sparse.issparse(B0):
            B0 = as_matrix(B0, "B0")
        if B0.shape[0] != sys.N:
            raise DimensionMismatch(f"B0 has {B0.shape[0]} rows, system has N={sys.N}")
        if isinstance(sys, NetworkSystem):
            return NetworkSystem(sys.net, B0)
        return sys.with_input(B0)
    raise TypeError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class PlatoonSpec:
    """Vehicle string with relative position and velocity feedback.

    ``symmetry`` is ``"directed"`` (beta_p = beta_d = 1), ``"bidirectional"``
    (beta_p = beta_d = 0) or ``"custom"``. Spacing and the velocity
    reference drop out after translating to the equilibrium.
    """

    n: int
    symmetry: str = "directed"
    beta_p: float = 1.0
    beta_d: float = 1.0
    alpha: float = 0.1

    def __post_init__(self):
        sym = self.symmetry.lower()
        if sym not in ("directed", "bidirectional", "custom"):
            raise InvalidSpec(f"unknown symmetry {self.symmetry!r}")
        object.__setattr__(self, "symmetry", sym)
        if sym == "directed":
            object.__setattr__(self, "beta_p", 1.0)
            object.__setattr__(self, "beta_d", 1.0)
        elif sym == "bidirectional":
            object.__setattr__(self, "beta_p", 0.0)
            object.__setattr__(self, "beta_d", 0.0)
        if self.n < 2:
            raise InvalidSpec("a platoon needs at least two vehicles")
        if self.alpha < 0:
            raise InvalidSpec("alpha must be nonnegative")


def _string_laplacian(n, beta) -> BandedMatrix:
    # row k of u_k = (1+b)(x_{k-1}-x_k) - (1-b)(x_k-x_{k+1}), negated
    lower = np.full(n - 1, -(1.0 + beta))
    upper = np.full(n - 1, -(1.0 - beta))
    diag = np.full(n, 2.0)
    diag[0] = 1.0 - beta
    diag[-1] = 1.0 + beta
    return BandedMatrix.from_diagonals(n, {-1: lower, 0: diag, 1: upper})


def build_platoon(spec: PlatoonSpec) -> SecondOrderNetwork:
    """Closed-loop platoon with outputs at the front, middle and rear gaps."""
    n = spec.n
    if n < 3:
        raise InvalidSpec("the three-gap output needs n >= 3")
    m = n // 2
    selector = ({0: 1.0, 1: -1.0}, {m - 1: 1.0, m: -1.0}, {n - 2: 1.0, n - 1: -1.0})
    return SecondOrderNetwork(_string_laplacian(n, spec.beta_p),
                              _string_laplacian(n, spec.beta_d),
                              spec.alpha, selector)


def load_system(path) -> StateSpaceSystem:
    """Read ``N P Q`` followed by row-major entries of A, B and C."""
    text = Path(path).read_text()
    tokens = text.split()
    if len(tokens) < 3:
        raise InvalidSpec(f"{path}: missing 'N P Q' header")
    try:
        N, P, Q = (int(t) for t in tokens[:3])
        vals = np.array([float(t) for t in tokens[3:]])
    except ValueError as exc:
        raise InvalidSpec(f"{path}: {exc}") from None
    need = N * N + N * P + Q * N
    if vals.size != need:
        raise InvalidSpec(f"{path}: expected {need} entries, found {vals.size}")
    A = vals[:N * N].reshape(N, N)
    B = vals[N * N:N * N + N * P].reshape(N, P)
    C = vals[N * N + N * P:].reshape(Q, N)
    return StateSpaceSystem(A, B, C)


def save_system(sys, path) -> None:
    sys = sys.dense()
    lines = [f"{sys.N} {sys.P} {sys.Q}"]
    for M in (sys.A, sys.B, sys.C):
        for row in M.real:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


_PLATOON_MAGIC = "platoon"


def save_platoon_spec(spec: PlatoonSpec, path) -> None:
    """Write a platoon description as ``key=value`` lines after a ``platoon`` tag."""
    lines = [_PLATOON_MAGIC, f"n={spec.n}", f"symmetry={spec.symmetry}",
             f"beta_p={spec.beta_p!r}", f"beta_d={spec.beta_d!r}", f"alpha={spec.alpha!r}"]
    Path(path).write_text("\n".join(lines) + "\n")


def is_platoon_file(path) -> bool:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                return line.strip() == _PLATOON_MAGIC
    return False


def load_platoon_spec(path) -> PlatoonSpec:
    fields = {}
    for line in Path(path).read_text().splitlines()[1:]:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise InvalidSpec(f"{path}: expected key=value, got {line!r}")
        fields[key.strip()] = val.strip()
    try:
        kw = {"n": int(fields.pop("n"))}
        if "symmetry" in fields:
            kw["symmetry"] = fields.pop("symmetry")
        for key in ("beta_p", "beta_d", "alpha"):
            if key in fields:
                kw[key] = float(fields.pop(key))
    except (KeyError, ValueError) as exc:
        raise InvalidSpec(f"{path}: bad platoon description ({exc})") from None
    if fields:
        raise InvalidSpec(f"{path}: unknown keys {sorted(fields)}")
    return PlatoonSpec(**kw)


def example1() -> StateSpaceSystem:
    """Double pole at -1 driven through the velocity: ``1/(s+1)^2``."""
    return StateSpaceSystem([[0.0, 1.0], [-1.0, -2.0]], [[0.0], [1.0]], [[1.0, 0.0]])


def example2() -> StateSpaceSystem:
    """Same dynamics released from a position offset: ``(s+2)/(s+1)^2``."""
    return StateSpaceSystem([[0.0, 1.0], [-1.0, -2.0]], [[1.0], [0.0]], [[1.0, 0.0]])
