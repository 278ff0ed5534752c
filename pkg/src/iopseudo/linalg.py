"""Dense and banded complex linear algebra.

Matrices are plain 2-D ``complex128`` numpy arrays; :func:`as_matrix` is the
single gate that validates them. Banded matrices use LAPACK's
diagonal-ordered storage (``data[ku + i - j, j] == M[i, j]``).
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._banded import banded_lu_solve
from .errors import DimensionMismatch, Overflow, SingularMatrix

__all__ = [
    "NormKind",
    "as_matrix",
    "induced_norm",
    "solve_dense",
    "solve_dense_batch",
    "BandedMatrix",
    "solve_banded",
    "matrix_exponential",
]

#: relative pivot threshold below which a matrix is declared singular
PIVOT_RTOL = 1e-14

_SVD_MAX_DIM = 512


class NormKind(enum.Enum):
    P1 = "1"
    P2 = "2"
    PINF = "inf"

    @classmethod
    def parse(cls, value) -> "NormKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {"1": cls.P1, "p1": cls.P1, "2": cls.P2, "p2": cls.P2,
                   "inf": cls.PINF, "pinf": cls.PINF, "infinity": cls.PINF}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm {value!r}; expected 1, 2 or inf") from None


def as_matrix(M, name="matrix") -> np.ndarray:
    """Return ``M`` as a finite 2-D complex array."""
    arr = np.asarray(M, dtype=complex)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise ValueError(f"{name} contains NaN")
    return arr


def _power_iteration_norm2(M, tol=1e-12, maxiter=10_000):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(M.shape[1]) + 1j * rng.standard_normal(M.shape[1])
    x /= np.linalg.norm(x)
    sigma = 0.0
    for _ in range(maxiter):
        y = M.conj().T @ (M @ x)
        lam = np.linalg.norm(y)
        if lam == 0.0:
            return 0.0
        x = y / lam
        new = math.sqrt(lam)
        if abs(new - sigma) <= tol * new:
            return new
        sigma = new
    return sigma


def induced_norm(M, kind=NormKind.P2) -> float | np.ndarray:
    """Operator norm induced by the vector 1-, 2- or infinity-norm.

    Works on a single matrix or a stack of matrices in the last two axes.
    For the 2-norm a full SVD is used when every dimension is at most 512;
    a single wide or tall matrix goes through the Gram matrix of its short
    side, anything larger through power iteration on ``M^H M``.
    """
    kind = NormKind.parse(kind)
    M = np.asarray(M)
    if M.size == 0:
        return 0.0 if M.ndim == 2 else np.zeros(M.shape[:-2])
    absM = np.abs(M)
    if kind is NormKind.P1:
        out = absM.sum(axis=-2).max(axis=-1)
    elif kind is NormKind.PINF:
        out = absM.sum(axis=-1).max(axis=-1)
    else:
        m, n = M.shape[-2:]
        if max(m, n) <= _SVD_MAX_DIM:
            out = np.linalg.svd(M, compute_uv=False)[..., 0]
        elif M.ndim == 2 and min(m, n) <= _SVD_MAX_DIM:
            gram = M @ M.conj().T if m <= n else M.conj().T @ M
            out = math.sqrt(max(np.linalg.eigvalsh(gram)[-1], 0.0))
        elif M.ndim == 2:
            out = _power_iteration_norm2(M)
        else:
            out = np.array([induced_norm(X, kind) for X in M.reshape(-1, m, n)])
            out = out.reshape(M.shape[:-2])
    if np.ndim(out) == 0:
        return float(out)
    return out


def solve_dense(M, RHS) -> np.ndarray:
    """Solve ``M X = RHS`` by LU with partial pivoting.

    Raises :class:`SingularMatrix` when a pivot is smaller than
    ``1e-14 * max|M_ij|``.
    """
    M = as_matrix(M, "M")
    RHS = np.asarray(RHS, dtype=complex)
    vector = RHS.ndim == 1
    RHS = as_matrix(RHS, "RHS")
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    if RHS.shape[0] != n:
        raise DimensionMismatch(f"RHS has {RHS.shape[0]} rows, expected {n}")
    if n == 0:
        return RHS.copy()
    scale = np.abs(M).max()
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    # exact zero pivots are reported by the threshold test below
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    if np.abs(np.diag(lu)).min() < PIVOT_RTOL * scale:
        raise SingularMatrix("pivot below threshold")
    X = scipy.linalg.lu_solve((lu, piv), RHS, check_finite=False)
    return X[:, 0] if vector else X


def solve_dense_batch(Ms, RHS):
    """Solve a stack of small systems at once.

    ``Ms`` has shape ``(k, n, n)`` and ``RHS`` shape ``(k, n, p)`` or
    ``(n, p)``. Returns ``(X, singular)`` where ``singular`` flags the
    systems that hit the pivot threshold; their rows of ``X`` are NaN.
    Gaussian elimination with partial pivoting runs vectorised over ``k``.
    """
    A = np.array(Ms, dtype=complex)
    k, n, _ = A.shape
    B = np.asarray(RHS, dtype=complex)
    B = np.array(np.broadcast_to(B, (k,) + B.shape[-2:]))
    rows = np.arange(k)
    scale = np.abs(A).reshape(k, -1).max(axis=1)
    singular = scale == 0.0
    for j in range(n):
        p = j + np.abs(A[:, j:, j]).argmax(axis=1)
        swap = p != j
        if swap.any():
            r = rows[swap]
            A[r, j], A[r, p[swap]] = A[r, p[swap]], A[r, j].copy()
            B[r, j], B[r, p[swap]] = B[r, p[swap]], B[r, j].copy()
        pivot = A[:, j, j]
        singular |= np.abs(pivot) < PIVOT_RTOL * scale
        pivot = np.where(singular, 1.0, pivot)
        A[:, j, j] = pivot
        if j + 1 < n:
            f = A[:, j + 1:, j] / pivot[:, None]
            A[:, j + 1:, j:] -= f[:, :, None] * A[:, None, j, j:]
            B[:, j + 1:, :] -= f[:, :, None] * B[:, None, j, :]
    X = np.empty_like(B)
    for j in range(n - 1, -1, -1):
        acc = B[:, j, :] - np.einsum("ki,kip->kp", A[:, j, j + 1:], X[:, j + 1:, :])
        X[:, j, :] = acc / A[:, j, j][:, None]
    X[singular] = np.nan
    return X, singular


@dataclass(frozen=True)
class BandedMatrix:
    """Square banded matrix in diagonal-ordered storage.

    ``data`` has shape ``(kl + ku + 1, n)`` with ``data[ku + i - j, j]``
    holding entry ``(i, j)``; slots outside the matrix are zero.
    """

    data: np.ndarray
    kl: int
    ku: int

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != self.kl + self.ku + 1:
            raise DimensionMismatch(
                f"storage shape {data.shape} does not match bandwidths ({self.kl}, {self.ku})")
        n = data.shape[1]
        if n and (self.kl >= n and self.kl > 0 or self.ku >= n and self.ku > 0):
            raise DimensionMismatch("bandwidths must be smaller than the size")
        if np.isnan(data).any():
            raise ValueError("banded storage contains NaN")
        # zero the unused corners so that storage covers exactly the band
        for d in range(1, self.ku + 1):
            data[self.ku - d, :d] = 0.0
        for d in range(1, self.kl + 1):
            data[self.ku + d, n - d:] = 0.0
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self):
        return (self.n, self.n)

    @classmethod
    def from_diagonals(cls, n, diagonals) -> "BandedMatrix":
        """Build from ``{offset: values}``; offset > 0 is above the diagonal.

        Diagonal ``d`` has ``n - |d|`` entries; a scalar is broadcast.
        """
        ku = max([0] + [d for d in diagonals if d > 0])
        kl = max([0] + [-d for d in diagonals if d < 0])
        data = np.zeros((kl + ku + 1, n), dtype=complex)
        for d, vals in diagonals.items():
            m = n - abs(d)
            vals = np.broadcast_to(np.asarray(vals, dtype=complex), (m,))
            if d >= 0:
                data[ku - d, d:] = vals
            else:
                data[ku - d, :m] = vals
        return cls(data, kl, ku)

    @classmethod
    def from_dense(cls, M, kl, ku) -> "BandedMatrix":
        M = as_matrix(M, "M")
        n = M.shape[0]
        diags = {d: np.diagonal(M, d) for d in range(-kl, ku + 1) if abs(d) < n}
        out = cls.from_diagonals(n, diags)
        if (out.kl, out.ku) != (kl, ku):
            out = out.widen(kl, ku)
        return out

    @classmethod
    def identity(cls, n) -> "BandedMatrix":
        return cls(np.ones((1, n), dtype=complex), 0, 0)

    def diagonal(self, d=0) -> np.ndarray:
        if d > self.ku or -d > self.kl:
            return np.zeros(self.n - abs(d), dtype=complex)
        row = self.data[self.ku - d]
        return row[d:] if d >= 0 else row[: self.n + d]

    def widen(self, kl, ku) -> "BandedMatrix":
        if kl < self.kl or ku < self.ku:
            raise ValueError("can only widen the band")
        data = np.zeros((kl + ku + 1, self.n), dtype=complex)
        data[ku - self.ku: ku + self.kl + 1] = self.data
        return BandedMatrix(data, kl, ku)

    def to_dense(self) -> np.ndarray:
        n = self.n
        out = np.zeros((n, n), dtype=complex)
        for d in range(-self.kl, self.ku + 1):
            if abs(d) < n:
                out += np.diag(self.diagonal(d), d)
        return out

    def to_sparse(self):
        import scipy.sparse

        offsets = [d for d in range(-self.kl, self.ku + 1) if abs(d) < self.n]
        return scipy.sparse.diags([self.diagonal(d) for d in offsets], offsets,
                                  shape=self.shape, format="csr")

    def transpose(self) -> "BandedMatrix":
        return BandedMatrix.from_diagonals(
            self.n, {-d: self.diagonal(d) for d in range(-self.kl, self.ku + 1) if abs(d) < self.n})

    T = property(transpose)

    def __add__(self, other):
        if isinstance(other, BandedMatrix):
            if other.n != self.n:
                raise DimensionMismatch("size mismatch")
            kl, ku = max(self.kl, other.kl), max(self.ku, other.ku)
            a, b = self.widen(kl, ku), other.widen(kl, ku)
            return BandedMatrix(a.data + b.data, kl, ku)
        return NotImplemented

    def __mul__(self, scalar):
        if np.ndim(scalar) != 0:
            return NotImplemented
        return BandedMatrix(self.data * complex(scalar), self.kl, self.ku)

    __rmul__ = __mul__

    def shift(self, c) -> "BandedMatrix":
        """Return ``self + c I``."""
        data = np.array(self.data)
        data[self.ku] += c
        return BandedMatrix(data, self.kl, self.ku)

    def matvec(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=complex)
        vector = X.ndim == 1
        X = X.reshape(self.n, -1)
        out = np.zeros_like(X)
        for d in range(-self.kl, self.ku + 1):
            if abs(d) >= self.n:
                continue
            diag = self.diagonal(d)[:, None]
            if d >= 0:
                out[: self.n - d] += diag * X[d:]
            else:
                out[-d:] += diag * X[: self.n + d]
        return out[:, 0] if vector else out

    def max_abs(self) -> float:
        return float(np.abs(self.data).max()) if self.data.size else 0.0

    def row_abs_sums(self) -> np.ndarray:
        return np.abs(self.to_sparse()).sum(axis=1).A1

    def col_abs_sums(self) -> np.ndarray:
        return np.abs(self.data).sum(axis=0)


def solve_banded(M: BandedMatrix, RHS) -> np.ndarray:
    """Solve ``M X = RHS`` by banded LU with partial pivoting.

    Cost is linear in the size for fixed bandwidth. Same singularity
    contract as :func:`solve_dense`.
    """
    RHS = np.asarray(RHS, dtype=complex)
    vector = RHS.ndim == 1
    B = np.array(RHS.reshape(RHS.shape[0], -1), dtype=complex, order="C")
    if B.shape[0] != M.n:
        raise DimensionMismatch(f"RHS has {B.shape[0]} rows, expected {M.n}")
    if M.n == 0:
        return RHS.copy()
    if np.isnan(B).any():
        raise ValueError("RHS contains NaN")
    # LAPACK-style working storage with kl extra rows for pivoting fill-in
    ab = np.zeros((2 * M.kl + M.ku + 1, M.n), dtype=complex)
    ab[M.kl:] = M.data
    thresh = PIVOT_RTOL * M.max_abs()
    ok = banded_lu_solve(ab, M.kl, M.ku, B, thresh)
    if not ok:
        raise SingularMatrix("pivot below threshold")
    return B[:, 0] if vector else B


# Pade coefficients and theta bounds (Higham, scaling and squaring revisited)
_PADE = {
    3: (120., 60., 12., 1.),
    5: (30240., 15120., 3360., 420., 30., 1.),
    7: (17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.),
    9: (17643225600., 8821612800., 2075673600., 302702400., 30270240.,
        2162160., 110880., 3960., 90., 1.),
    13: (64764752532480000., 32382376266240000., 7771770303897600.,
         1187353796428800., 129060195264000., 10559470521600., 670442572800.,
         33522128640., 1323241920., 40840800., 960960., 16380., 182., 1.),
}
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1,
          7: 9.504178996162932e-1, 9: 2.097847961257068, 13: 5.371920351148152}


def matrix_exponential(M) -> np.ndarray:
    """``exp(M)`` by scaling and squaring with a diagonal Pade approximant.

    Degree 3 to 13 is chosen from the 1-norm of ``M``; for degree 13 the
    matrix is scaled by ``2**-s`` so that its norm drops below theta_13 and
    the result squared ``s`` times.
    """
    M = as_matrix(M, "M")
    n = M.shape[0]
    if M.shape != (n, n):
        raise DimensionMismatch(f"M must be square, got {M.shape}")
    if not np.isfinite(M).all():
        raise Overflow("non-finite input")
    ident = np.eye(n, dtype=complex)
    if n == 0:
        return ident
    norm1 = induced_norm(M, NormKind.P1)
    M2 = M @ M
    for m in (3, 5, 7, 9):
        if norm1 <= _THETA[m]:
            b = _PADE[m]
            powers = [ident, M2]
            while len(powers) < (m + 1) // 2:
                powers.append(powers[-1] @ M2)
            U = M @ sum(b[2 * k + 1] * powers[k] for k in range(len(powers)))
            V = sum(b[2 * k] * powers[k] for k in range(len(powers)))
            return _pade_quotient(U, V)
    s = max(0, math.ceil(math.log2(norm1 / _THETA[13])))
    A = M / 2.0**s
    A2 = M2 / 4.0**s
    A4 = A2 @ A2
    A6 = A4 @ A2
    b = _PADE[13]
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = (A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2)
         + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident)
    E = _pade_quotient(U, V)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            E = E @ E
    if not np.isfinite(E).all():
        raise Overflow("matrix exponential overflowed")
    return E


def _pade_quotient(U, V):
    with np.errstate(over="ignore", invalid="ignore"):
        E = scipy.linalg.solve(V - U, V + U, check_finite=False)
    if not np.isfinite(E).all():
        raise Overflow("matrix exponential overflowed")
    return E
