"""Per-iteration updates for all simulated algorithms.

The metric-aware family projects each node's coefficient vector onto the
hyperslab of vectors whose filter output at the current input stays
within epsilon of the measurement, then relaxes by the step size and
diffuses with the combine weights.  The LMS family adapts in the plain
Euclidean metric.  A centralized variant applies every node's projection
to one shared vector, and a random-Fourier-feature variant replaces the
dictionary expansion with a fixed trigonometric feature map.

All step functions are pure: they return fresh state and never mutate
their inputs, so per-node updates within one iteration may run in any
order (the diffusion stage is the barrier).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dictionary import Dictionary
from .kernels import GramMatrix, KernelBank, kernel_vector
from .network import MixingMatrix


@dataclass(frozen=True)
class NodeState:
    """One node's coefficient vector plus its update counter."""

    w: np.ndarray
    updates: int = 0
    index: int = 0

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)


@dataclass(frozen=True)
class HyperslabParams:
    """Slab half-width and relaxation step size for the projection family."""

    epsilon: float = 0.0
    mu: float = 0.5

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"slab half-width must be nonnegative, got {self.epsilon}")
        if not 0.0 < self.mu < 2.0:
            raise ValueError(f"step size must lie in (0, 2), got {self.mu}")


@dataclass(frozen=True)
class Sample:
    """One node's observation at one time index."""

    x: np.ndarray
    y: float
    k: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)


def zero_states(n_nodes: int, size: int) -> list[NodeState]:
    """All-zero initial states, one per node."""
    return [NodeState(w=np.zeros(size), index=j) for j in range(n_nodes)]


def states_matrix(states) -> np.ndarray:
    """Stack node coefficient vectors into a (J, n) matrix."""
    return np.array([s.w for s in states])


def project_hyperslab(w, kappa_x, y: float, epsilon: float, gram: GramMatrix) -> np.ndarray:
    """Metric projection of ``w`` onto the slab ``|w.kappa_x - y| <= epsilon``.

    Returns ``w`` unchanged when it already satisfies the constraint;
    otherwise moves along the metric-solved feature direction just far
    enough to land on the nearer slab face.
    """
    w = np.asarray(w, dtype=float)
    kappa_x = np.asarray(kappa_x, dtype=float)
    err = float(np.dot(w, kappa_x)) - y
    if abs(err) <= epsilon:
        return w
    direction = gram.solve(kappa_x)
    denom = float(np.dot(kappa_x, direction))
    if not denom > 0.0:
        raise ValueError(
            "projection direction vanished: the input is numerically orthogonal "
            "to every dictionary center (bandwidth/dictionary mis-specified)"
        )
    shift = err - epsilon if err > epsilon else err + epsilon
    return w - (shift / denom) * direction


def project_hyperslab_selective(
    w, kappa_x, y: float, epsilon: float, gram: GramMatrix, indices
) -> np.ndarray:
    """Slab projection correcting only the selected dictionary coordinates.

    ``indices`` selects dictionary centers; the correction touches those
    coordinates within every kernel block and solves the corresponding
    sub-metric.  Membership still uses the full filter output, and the
    corrected output still lands exactly on the slab face.  With all
    centers selected this reduces to :func:`project_hyperslab`.
    """
    w = np.asarray(w, dtype=float)
    kappa_x = np.asarray(kappa_x, dtype=float)
    err = float(np.dot(w, kappa_x)) - y
    if abs(err) <= epsilon:
        return w
    indices = np.asarray(indices, dtype=int)
    r = gram.block_size
    flat = np.concatenate([q * r + indices for q in range(gram.num_kernels)])
    sub_metric = gram.metric[np.ix_(flat, flat)]
    sub_kappa = kappa_x[flat]
    direction = np.linalg.solve(sub_metric, sub_kappa)
    denom = float(np.dot(sub_kappa, direction))
    if not denom > 0.0:
        raise ValueError(
            "projection direction vanished on the selected coordinates"
        )
    shift = err - epsilon if err > epsilon else err + epsilon
    out = w.copy()
    out[flat] -= (shift / denom) * direction
    return out


def local_cost(
    state: NodeState,
    sample: Sample,
    gram: GramMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
    epsilon: float,
) -> float:
    """Metric distance from the node's vector to its current slab.

    Zero exactly when the vector already satisfies the slab constraint.
    """
    kappa_x = kernel_vector(bank, dictionary, sample.x)
    projected = project_hyperslab(state.w, kappa_x, sample.y, epsilon, gram)
    return gram.norm(state.w - projected)


def apsm_local(
    state: NodeState,
    sample: Sample,
    params: HyperslabParams,
    gram: GramMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
) -> NodeState:
    """Relaxed projection step at one node.

    Moves the coefficient vector a fraction ``mu`` of the way to its slab
    projection.  The update counter increments only when the vector was
    outside the slab (an actual correction happened).
    """
    kappa_x = kernel_vector(bank, dictionary, sample.x)
    err = float(np.dot(state.w, kappa_x)) - sample.y
    if abs(err) <= params.epsilon:
        return state
    projected = project_hyperslab(state.w, kappa_x, sample.y, params.epsilon, gram)
    w_next = state.w - params.mu * (state.w - projected)
    return replace(state, w=w_next, updates=state.updates + 1)


def diffuse(vectors, mixing: MixingMatrix) -> np.ndarray:
    """Combine per-node vectors with the mixing weights: row j gets
    the weighted average of its neighbors' rows."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.shape[0] != mixing.n_nodes:
        raise ValueError(
            f"got {vectors.shape[0]} vectors for {mixing.n_nodes} nodes"
        )
    return mixing.weights @ vectors


def dchypass_step(
    states,
    samples,
    params: HyperslabParams,
    mixing: MixingMatrix,
    gram: GramMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
) -> list[NodeState]:
    """One network iteration: per-node relaxed slab projection, then diffusion."""
    intermediates = [
        apsm_local(state, sample, params, gram, bank, dictionary)
        for state, sample in zip(states, samples)
    ]
    combined = diffuse(states_matrix(intermediates), mixing)
    return [replace(s, w=w) for s, w in zip(intermediates, combined)]


def local_only_step(
    states,
    samples,
    params: HyperslabParams,
    gram: GramMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
) -> list[NodeState]:
    """Non-cooperative variant: each node adapts on its own data, no diffusion."""
    return [
        apsm_local(state, sample, params, gram, bank, dictionary)
        for state, sample in zip(states, samples)
    ]


def dmklms_step(
    states,
    samples,
    mu: float,
    mixing: MixingMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
) -> list[NodeState]:
    """Multikernel LMS adaptation in the Euclidean metric, then diffusion.

    ``w' = w + mu * (y - w.kappa(x)) * kappa(x)`` per node.  The counter
    increments whenever the instantaneous error is nonzero.
    """
    if not mu > 0:
        raise ValueError(f"step size must be positive, got {mu}")
    intermediates = []
    for state, sample in zip(states, samples):
        kappa_x = kernel_vector(bank, dictionary, sample.x)
        err = sample.y - float(np.dot(state.w, kappa_x))
        if err == 0.0:
            intermediates.append(state)
        else:
            intermediates.append(
                replace(state, w=state.w + mu * err * kappa_x, updates=state.updates + 1)
            )
    combined = diffuse(states_matrix(intermediates), mixing)
    return [replace(s, w=w) for s, w in zip(intermediates, combined)]


def fatc_klms_step(
    states,
    samples,
    mu: float,
    mixing: MixingMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
) -> list[NodeState]:
    """Single-kernel diffusion LMS: the multikernel update with a 1-kernel bank."""
    if bank.num_kernels != 1:
        raise ValueError(
            f"the single-kernel variant needs a 1-kernel bank, got {bank.num_kernels}"
        )
    return dmklms_step(states, samples, mu, mixing, bank, dictionary)


def central_chypass_step(
    w,
    samples,
    mu: float,
    gram: GramMatrix,
    bank: KernelBank,
    dictionary: Dictionary,
    epsilon: float = 0.0,
) -> np.ndarray:
    """Centralized reference: one vector corrected by every node's slab at once.

    ``w <- w - mu * sum_j (w - P_j(w))`` over all nodes' current slabs;
    stability requires a step size roughly inversely proportional to the
    node count.
    """
    if not mu > 0:
        raise ValueError(f"step size must be positive, got {mu}")
    w = np.asarray(w, dtype=float)
    total = np.zeros_like(w)
    for sample in samples:
        kappa_x = kernel_vector(bank, dictionary, sample.x)
        projected = project_hyperslab(w, kappa_x, sample.y, epsilon, gram)
        total += w - projected
    return w - mu * total


@dataclass(frozen=True)
class RffModel:
    """Random trigonometric feature map shared by all nodes, plus their weights.

    Frequencies are drawn once from a zero-mean Gaussian with standard
    deviation ``1/bandwidth`` per coordinate and phases uniformly on
    [0, 2*pi); both stay fixed so the feature inner product approximates
    the Gaussian kernel.
    """

    frequencies: np.ndarray  # (n_features, L)
    phases: np.ndarray  # (n_features,)
    weights: np.ndarray  # (J, n_features)

    def __post_init__(self):
        for arr in (self.frequencies, self.phases, self.weights):
            arr.setflags(write=False)

    @classmethod
    def initialize(
        cls,
        bandwidth: float,
        n_features: int,
        n_nodes: int,
        input_dim: int,
        rng: np.random.Generator,
    ) -> "RffModel":
        frequencies = rng.standard_normal((n_features, input_dim)) / bandwidth
        phases = rng.uniform(0.0, 2.0 * np.pi, n_features)
        return cls(
            frequencies=frequencies,
            phases=phases,
            weights=np.zeros((n_nodes, n_features)),
        )

    @property
    def n_features(self) -> int:
        return self.frequencies.shape[0]

    def features(self, x) -> np.ndarray:
        """Feature map ``sqrt(2/m) * cos(freq @ x + phase)``; rows of ``x`` map
        to rows of the output."""
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(x)
        z = np.sqrt(2.0 / self.n_features) * np.cos(pts @ self.frequencies.T + self.phases)
        return z[0] if x.ndim == 1 else z


def rff_dklms_step(model: RffModel, samples, mu: float, mixing: MixingMatrix) -> RffModel:
    """Feature-space LMS at every node, then diffusion of the feature weights."""
    if not mu > 0:
        raise ValueError(f"step size must be positive, got {mu}")
    xs = np.array([s.x for s in samples])
    ys = np.array([s.y for s in samples])
    z = model.features(xs)
    err = ys - np.einsum("jn,jn->j", model.weights, z)
    intermediate = model.weights + mu * err[:, None] * z
    return replace(model, weights=mixing.weights @ intermediate)
