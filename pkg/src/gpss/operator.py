"""Linear operators, matvec accounting and synthetic test problems."""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "CountingOperator",
    "GeneratedProblem",
    "spectral_norm_estimate",
    "gen_gaussian_problem",
    "gen_illconditioned_problem",
    "save_problem",
    "load_problem",
    "problem_to_bytes",
    "problem_from_bytes",
    "problem_hash",
]


class LinearOperator:
    """Abstract ``n x p`` linear map with forward and adjoint products.

    Subclasses implement :meth:`_matvec` and :meth:`_rmatvec`; the public
    :meth:`apply` and :meth:`adjoint` validate dimensions.
    """

    def __init__(self, n: int, p: int):
        self.n = int(n)
        self.p = int(p)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.p)

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _rmatvec(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, x) -> np.ndarray:
        """Return ``K @ x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.p,):
            raise ValueError(f"apply expects a vector of length {self.p}, got shape {x.shape}")
        return self._matvec(x)

    def adjoint(self, r) -> np.ndarray:
        """Return ``K.T @ r``."""
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.n,):
            raise ValueError(f"adjoint expects a vector of length {self.n}, got shape {r.shape}")
        return self._rmatvec(r)

    def to_dense(self) -> np.ndarray:
        """Materialize the operator column by column (small sizes only)."""
        eye = np.eye(self.p)
        return np.column_stack([self._matvec(eye[:, j]) for j in range(self.p)])


class DenseOperator(LinearOperator):
    """Operator backed by an explicit float64 matrix."""

    def __init__(self, matrix):
        A = np.array(matrix, dtype=np.float64, order="C")
        if A.ndim != 2:
            raise ValueError("DenseOperator needs a 2-D array")
        A.setflags(write=False)
        super().__init__(*A.shape)
        self.matrix = A

    def _matvec(self, x):
        return self.matrix @ x

    def _rmatvec(self, r):
        return self.matrix.T @ r

    def to_dense(self):
        return self.matrix.copy()

    def __repr__(self):
        return f"DenseOperator(n={self.n}, p={self.p})"


class CountingOperator(LinearOperator):
    """Wrap an operator and count every forward and adjoint product.

    Solvers create one of these per run, so counts never leak between runs
    sharing the same underlying operator.
    """

    def __init__(self, op: LinearOperator):
        super().__init__(op.n, op.p)
        self.op = op
        self.count = 0

    def _matvec(self, x):
        self.count += 1
        return self.op._matvec(x)

    def _rmatvec(self, r):
        self.count += 1
        return self.op._rmatvec(r)


def spectral_norm_estimate(op: LinearOperator, max_iters: int = 1000, tol: float = 1e-8) -> float:
    """Estimate ``||K||_2`` by power iteration on ``K^T K``.

    Starts from the normalized all-ones vector. Each estimate is ``||K v||``
    for a unit vector ``v``, so it never exceeds the true norm and increases
    monotonically. The run stops once both the last change and the geometric
    tail predicted from the last two changes are below `tol` relative, or
    after `max_iters` iterations.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    v = np.ones(op.p) / np.sqrt(op.p)
    sigma = 0.0
    prev_delta = None
    for _ in range(max_iters):
        Kv = op.apply(v)
        new_sigma = float(np.linalg.norm(Kv))
        delta = new_sigma - sigma
        sigma = max(sigma, new_sigma)
        w = op.adjoint(Kv)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        v = w / nw
        if prev_delta is not None and 0 <= delta <= tol * sigma:
            rate = delta / prev_delta if prev_delta > 0 else 0.0
            if rate < 1 and delta * rate / (1 - rate) <= tol * sigma:
                break
        prev_delta = delta
    return sigma


@dataclass(frozen=True)
class GeneratedProblem:
    K: DenseOperator
    y: np.ndarray
    x_true: np.ndarray
    noise_level: float
    seed: int

    @property
    def n(self):
        return self.K.n

    @property
    def p(self):
        return self.K.p


def _sparse_spikes(rng: np.random.Generator, p: int, nnz: int) -> np.ndarray:
    x = np.zeros(p)
    support = rng.choice(p, size=nnz, replace=False)
    x[np.sort(support)] = rng.choice(np.array([-1.0, 1.0]), size=nnz)
    return x


def _add_noise(rng, clean, noise_level):
    if noise_level == 0:
        return clean.copy()
    e = rng.standard_normal(clean.shape[0])
    scale = np.linalg.norm(clean)
    if scale == 0.0:
        # no signal to be relative to: absolute noise norm
        scale = 1.0
    return clean + e * (noise_level * scale / np.linalg.norm(e))


def _check_common(n, p, nnz, noise_level):
    if n < 1 or p < 1:
        raise ValueError(f"dimensions must be positive, got n={n}, p={p}")
    if not 0 <= nnz <= p:
        raise ValueError(f"nnz must lie in [0, p={p}], got {nnz}")
    if noise_level < 0:
        raise ValueError("noise_level must be nonnegative")


def gen_gaussian_problem(n: int, p: int, nnz: int, noise_level: float = 0.02,
                         seed: int = 0) -> GeneratedProblem:
    """Compressed-sensing test problem with an i.i.d. Gaussian matrix.

    Draw order from ``numpy.random.default_rng(seed)``: the ``n x p``
    standard normal matrix, the support (without replacement), the ``+-1``
    amplitudes, then the noise vector. The matrix is divided by its largest
    singular value so that ``||K|| = 1``, and the noise is rescaled so that
    ``||y - K x_true|| / ||K x_true|| == noise_level``.
    """
    _check_common(n, p, nnz, noise_level)
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    A /= np.linalg.norm(A, 2)
    K = DenseOperator(A)
    x_true = _sparse_spikes(rng, p, nnz)
    y = _add_noise(rng, K.apply(x_true), noise_level)
    return GeneratedProblem(K, y, x_true, float(noise_level), int(seed))


def _random_orthonormal(rng, rows, cols):
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.sign(np.diag(R))


def gen_illconditioned_problem(n: int, p: int, nnz: int, decay: float = 0.93,
                               noise_level: float = 0.02, seed: int = 0) -> GeneratedProblem:
    """Test problem with geometrically decaying singular values.

    ``K = U diag(decay**i) V^T`` for ``i = 0 .. min(n, p) - 1`` with random
    orthonormal ``U`` and ``V`` (QR of Gaussian matrices, drawn in that
    order), so ``||K|| = 1`` and the condition number is
    ``decay**-(min(n, p) - 1)``. Support, amplitudes and noise follow
    :func:`gen_gaussian_problem`.
    """
    if not 0 < decay < 1:
        raise ValueError(f"decay must lie in (0, 1), got {decay}")
    _check_common(n, p, nnz, noise_level)
    rng = np.random.default_rng(seed)
    r = min(n, p)
    U = _random_orthonormal(rng, n, r)
    V = _random_orthonormal(rng, p, r)
    sigma = decay ** np.arange(r)
    K = DenseOperator((U * sigma) @ V.T)
    x_true = _sparse_spikes(rng, p, nnz)
    y = _add_noise(rng, K.apply(x_true), noise_level)
    return GeneratedProblem(K, y, x_true, float(noise_level), int(seed))


# Problem container, all little-endian:
#   magic   8 bytes  b"L1PROB\x00\x01"
#   n       uint64
#   p       uint64
#   seed    int64
#   noise   float64
#   K       n*p float64, row-major
#   y       n float64
#   x_true  p float64
_MAGIC = b"L1PROB\x00\x01"
_HEADER = struct.Struct("<8sQQqd")


def problem_to_bytes(prob: GeneratedProblem) -> bytes:
    A = prob.K.to_dense()
    head = _HEADER.pack(_MAGIC, prob.n, prob.p, prob.seed, prob.noise_level)
    return b"".join([
        head,
        np.ascontiguousarray(A, dtype="<f8").tobytes(),
        np.asarray(prob.y, dtype="<f8").tobytes(),
        np.asarray(prob.x_true, dtype="<f8").tobytes(),
    ])


def problem_from_bytes(data: bytes) -> GeneratedProblem:
    if len(data) < _HEADER.size:
        raise ValueError("truncated problem file")
    magic, n, p, seed, noise = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError("not a problem file (bad magic)")
    expected = _HEADER.size + 8 * (n * p + n + p)
    if len(data) != expected:
        raise ValueError(f"problem file has {len(data)} bytes, expected {expected}")
    off = _HEADER.size
    A = np.frombuffer(data, "<f8", n * p, off).reshape(n, p)
    off += 8 * n * p
    y = np.frombuffer(data, "<f8", n, off).astype(np.float64)
    off += 8 * n
    x_true = np.frombuffer(data, "<f8", p, off).astype(np.float64)
    return GeneratedProblem(DenseOperator(A), y, x_true, float(noise), int(seed))


def save_problem(prob: GeneratedProblem, path) -> None:
    Path(path).write_bytes(problem_to_bytes(prob))


def load_problem(path) -> GeneratedProblem:
    return problem_from_bytes(Path(path).read_bytes())


def problem_hash(prob: GeneratedProblem) -> str:
    """SHA-256 of the serialized problem."""
    return hashlib.sha256(problem_to_bytes(prob)).hexdigest()
