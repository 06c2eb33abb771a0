"""Gaussian kernels, stacked kernel features, and the block-diagonal metric.

A bank of Q Gaussian kernels evaluated against a shared set of r centers
yields a feature vector of length r*Q (kernel-major layout: entries
``(q-1)*r + l`` hold kernel q against center l).  The pairwise kernel
values between the centers themselves form Q symmetric blocks; their
block diagonal defines the inner product used by the metric-aware
projection learners.  The factorization of that matrix is computed once
per dictionary and reused for every projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.linalg import cho_solve

if TYPE_CHECKING:
    from .dictionary import Dictionary


class GramFactorizationError(RuntimeError):
    """Raised when the (regularized) Gram matrix is not positive definite.

    This signals a numerically linearly dependent dictionary, typically
    duplicate or near-duplicate centers, combined with a regularization
    too small to absorb the rank deficiency.
    """

    def __init__(self, size: int, num_kernels: int, gamma: float):
        self.size = size
        self.num_kernels = num_kernels
        self.gamma = gamma
        super().__init__(
            f"Gram matrix ({num_kernels} kernel blocks, total size {size}) is not "
            f"positive definite: the dictionary is numerically linearly dependent "
            f"and gamma={gamma:g} is too small to regularize it"
        )


@dataclass(frozen=True)
class KernelSpec:
    """A single Gaussian kernel, parameterized by its bandwidth.

    The bandwidth has the same units as distances in the input space and
    must be strictly positive.
    """

    bandwidth: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"kernel bandwidth must be positive, got {self.bandwidth}")


@dataclass(frozen=True)
class KernelBank:
    """An ordered collection of Gaussian kernels sharing one input space."""

    kernels: tuple[KernelSpec, ...]

    def __post_init__(self):
        if len(self.kernels) < 1:
            raise ValueError("a kernel bank needs at least one kernel")

    @classmethod
    def from_bandwidths(cls, bandwidths) -> "KernelBank":
        return cls(tuple(KernelSpec(b) for b in bandwidths))

    @property
    def num_kernels(self) -> int:
        return len(self.kernels)

    @property
    def bandwidths(self) -> tuple[float, ...]:
        return tuple(k.bandwidth for k in self.kernels)


def eval_kernel(spec: KernelSpec, x1, x2) -> float:
    """Evaluate a Gaussian kernel between two points.

    Parameters
    ----------
    spec : KernelSpec
        Kernel with bandwidth ``zeta``.
    x1, x2 : array_like
        Points of equal dimension.

    Returns
    -------
    float
        ``exp(-||x1 - x2||^2 / (2 * zeta^2))``, always in (0, 1].
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError(f"point dimensions differ: {x1.shape} vs {x2.shape}")
    sq_dist = float(np.sum((x1 - x2) ** 2))
    return float(np.exp(-sq_dist / (2.0 * spec.bandwidth**2)))


def kernel_vector(bank: KernelBank, dictionary: "Dictionary", x) -> np.ndarray:
    """Stacked kernel evaluations of ``x`` against every dictionary center.

    Returns a vector of length ``r*Q`` where entry ``(q-1)*r + l`` is
    kernel q evaluated between ``x`` and center l.  All entries lie in
    (0, 1] up to floating-point underflow far from the centers.
    """
    centers = dictionary.centers
    x = np.asarray(x, dtype=float)
    if x.shape != (centers.shape[1],):
        raise ValueError(
            f"input dimension {x.shape} does not match centers of dimension "
            f"({centers.shape[1]},)"
        )
    sq_dist = np.sum((centers - x) ** 2, axis=1)
    parts = [np.exp(-sq_dist / (2.0 * k.bandwidth**2)) for k in bank.kernels]
    return np.concatenate(parts)


def filter_output(w, kappa_x) -> float:
    """Filter response for the coefficient vector ``w`` at features ``kappa_x``.

    Plain Euclidean inner product; equals the metric-weighted form
    ``<w, K^{-1} kappa_x>_K`` when the metric is unregularized.
    """
    w = np.asarray(w, dtype=float)
    kappa_x = np.asarray(kappa_x, dtype=float)
    if w.shape != kappa_x.shape:
        raise ValueError(f"length mismatch: {w.shape} vs {kappa_x.shape}")
    return float(np.dot(w, kappa_x))


class GramMatrix:
    """Block-diagonal multikernel Gram matrix with a cached factorization.

    Holds the Q per-kernel center Gram blocks, their block-diagonal
    composite K, and a Cholesky factorization of ``K + gamma*I`` used for
    every metric solve.  Immutable after construction; safe to share
    across parallel trials.
    """

    def __init__(self, blocks: list[np.ndarray], gamma: float = 0.0):
        if gamma < 0:
            raise ValueError(f"regularization must be nonnegative, got {gamma}")
        self.blocks = [np.array(b, dtype=float) for b in blocks]
        self.gamma = float(gamma)
        r = self.blocks[0].shape[0]
        for b in self.blocks:
            if b.shape != (r, r):
                raise ValueError("all Gram blocks must be square and equally sized")
        n = r * len(self.blocks)
        composite = np.zeros((n, n))
        for q, b in enumerate(self.blocks):
            composite[q * r : (q + 1) * r, q * r : (q + 1) * r] = b
        self.composite = composite
        self.metric = composite + self.gamma * np.eye(n)
        try:
            self.chol_lower = np.linalg.cholesky(self.metric)
        except np.linalg.LinAlgError:
            raise GramFactorizationError(n, len(self.blocks), self.gamma) from None
        for arr in (*self.blocks, self.composite, self.metric, self.chol_lower):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        """Total dimension r*Q."""
        return self.composite.shape[0]

    @property
    def block_size(self) -> int:
        """Dictionary cardinality r."""
        return self.blocks[0].shape[0]

    @property
    def num_kernels(self) -> int:
        return len(self.blocks)

    def solve(self, v) -> np.ndarray:
        """Solve ``(K + gamma*I) u = v`` through the cached factorization.

        Accepts a single vector or a matrix of stacked right-hand sides
        in its columns.
        """
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.size:
            raise ValueError(f"right-hand side length {v.shape[0]} != {self.size}")
        return cho_solve((self.chol_lower, True), v)

    def inner(self, a, b) -> float:
        """Metric inner product ``a^T (K + gamma*I) b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != (self.size,) or b.shape != (self.size,):
            raise ValueError(f"vector lengths must equal {self.size}")
        return float(a @ self.metric @ b)

    def norm(self, a) -> float:
        """Metric norm ``sqrt(<a, a>)``; zero exactly when ``a`` is zero."""
        return float(np.sqrt(max(self.inner(a, a), 0.0)))


def build_gram(bank: KernelBank, dictionary: "Dictionary", gamma: float = 0.0) -> GramMatrix:
    """Assemble the multikernel Gram matrix of a dictionary and factorize it.

    Parameters
    ----------
    bank : KernelBank
        The Q Gaussian kernels.
    dictionary : Dictionary
        The r shared centers.
    gamma : float
        Nonnegative ridge added to the composite before factorization.

    Raises
    ------
    GramFactorizationError
        If ``K + gamma*I`` is not positive definite (numerically dependent
        centers with too little regularization).
    """
    centers = dictionary.centers
    diff = centers[:, None, :] - centers[None, :, :]
    sq_dist = np.sum(diff**2, axis=2)
    blocks = [np.exp(-sq_dist / (2.0 * k.bandwidth**2)) for k in bank.kernels]
    return GramMatrix(blocks, gamma=gamma)


def k_inner(gram: GramMatrix, a, b) -> float:
    """Metric inner product; see :meth:`GramMatrix.inner`."""
    return gram.inner(a, b)


def solve_k(gram: GramMatrix, v) -> np.ndarray:
    """Metric solve; see :meth:`GramMatrix.solve`."""
    return gram.solve(v)
