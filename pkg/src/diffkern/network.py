"""Random geometric networks, combine weights, and consensus diagnostics.

Nodes live on the unit square and connect below a distance threshold;
every node is its own neighbor.  The Metropolis-Hastings construction
turns a connected graph into a symmetric doubly stochastic combine
matrix G whose deviation from uniform averaging contracts.  Validation
builds the network-wide combine operator ``G (x) I`` explicitly (small
instances only) and checks its singular-value profile, plus the fact
that conjugating it by the square root of the block-diagonal kernel
metric leaves it unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .kernels import GramMatrix


class GraphConnectivityError(RuntimeError):
    """Raised when no connected placement is found within the retry budget."""

    def __init__(self, n_nodes: int, radius: float, attempts: int):
        self.n_nodes = n_nodes
        self.radius = radius
        self.attempts = attempts
        super().__init__(
            f"no connected geometric graph with J={n_nodes}, D={radius:g} "
            f"after {attempts} placements; increase the radius or the budget"
        )


@dataclass(frozen=True)
class Graph:
    """Undirected geometric graph with self-loops on every node."""

    positions: np.ndarray  # (J, 2)
    adjacency: np.ndarray  # (J, J) bool, symmetric, True diagonal
    radius: float

    def __post_init__(self):
        self.positions.setflags(write=False)
        self.adjacency.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    @property
    def degrees(self) -> np.ndarray:
        """Neighborhood sizes, each node counting itself."""
        return self.adjacency.sum(axis=1)

    @property
    def edge_count(self) -> int:
        """Number of unordered node pairs sharing an edge (self-loops excluded)."""
        off_diag = self.adjacency.copy()
        np.fill_diagonal(off_diag, False)
        return int(off_diag.sum()) // 2

    def edges(self) -> np.ndarray:
        """Edge list as (i, j) rows with i < j, self-loops excluded."""
        i, j = np.where(np.triu(self.adjacency, k=1))
        return np.column_stack([i, j])


def random_geometric(
    n_nodes: int, radius: float, rng: np.random.Generator, max_attempts: int = 1000
) -> Graph:
    """Sample node positions uniformly on [0,1]^2 until the graph is connected.

    Two nodes share an edge iff their distance is strictly below ``radius``.
    Placements are redrawn (not repaired) when disconnected, preserving the
    uniform placement model; raises :class:`GraphConnectivityError` once the
    budget is exhausted.
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    if not 0.0 < radius <= np.sqrt(2.0) + 1e-12:
        raise ValueError(f"radius must lie in (0, sqrt(2)], got {radius}")
    for _ in range(max_attempts):
        positions = rng.random((n_nodes, 2))
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=2))
        adjacency = dist < radius
        np.fill_diagonal(adjacency, True)
        n_components, _ = connected_components(adjacency, directed=False)
        if n_components == 1:
            return Graph(positions=positions, adjacency=adjacency, radius=radius)
    raise GraphConnectivityError(n_nodes, radius, max_attempts)


@dataclass(frozen=True)
class MixingMatrix:
    """Symmetric combine weights matched to a graph's sparsity pattern."""

    weights: np.ndarray  # (J, J)

    def __post_init__(self):
        self.weights.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def identity(cls, n_nodes: int) -> "MixingMatrix":
        """No mixing; turns any diffusion scheme into local-only adaptation."""
        return cls(weights=np.eye(n_nodes))


def metropolis_hastings(graph: Graph) -> MixingMatrix:
    """Metropolis-Hastings combine weights for a connected graph.

    Each off-diagonal edge weight is the reciprocal of the larger of the
    two endpoint neighborhood sizes (self-loops counted); diagonals absorb
    the remainder so rows sum to one.  The result is symmetric, doubly
    stochastic, and zero off the graph's edges.
    """
    degrees = graph.degrees
    with np.errstate(divide="ignore"):
        weights = 1.0 / np.maximum.outer(degrees, degrees)
    off_edges = graph.adjacency.copy()
    np.fill_diagonal(off_edges, False)
    weights = np.where(off_edges, weights, 0.0)
    np.fill_diagonal(weights, 1.0 - weights.sum(axis=1))
    return MixingMatrix(weights=weights)


@dataclass(frozen=True)
class ConsensusReport:
    """Deviations of a combine operator from the consensus-operator contract."""

    row_sum_dev: float
    symmetry_dev: float
    contraction_norm: float  # ||G - (1/J) 1 1^T||_2
    unit_singular_count: int
    expected_unit_count: int
    max_subunit_singular: float
    metric_invariance_dev: float  # max |Khalf^-1 P Khalf - P|
    unit_tol: float

    @property
    def spectrum_ok(self) -> bool:
        return (
            self.unit_singular_count == self.expected_unit_count
            and self.max_subunit_singular < 1.0 - self.unit_tol
        )

    @property
    def contraction_ok(self) -> bool:
        return self.contraction_norm < 1.0

    @property
    def valid(self) -> bool:
        return (
            self.row_sum_dev <= 1e-10
            and self.symmetry_dev <= 1e-10
            and self.contraction_ok
            and self.spectrum_ok
        )


def validate_consensus(
    mixing: MixingMatrix, gram: GramMatrix, unit_tol: float = 1e-8
) -> ConsensusReport:
    """Check the combine operator built from ``mixing`` against its contract.

    Builds ``P = G (x) I`` explicitly, so intended for small instances
    (validation and tests).  Verifies that exactly r*Q singular values of
    P equal one within ``unit_tol`` with the rest strictly below, and
    measures how far conjugation by the symmetric square root of the
    block-diagonal metric moves P (exactly zero in exact arithmetic).
    """
    G = mixing.weights
    n_nodes = mixing.n_nodes
    n = gram.size
    row_sum_dev = float(np.max(np.abs(G.sum(axis=1) - 1.0)))
    symmetry_dev = float(np.max(np.abs(G - G.T)))
    contraction_norm = float(
        np.linalg.norm(G - np.full((n_nodes, n_nodes), 1.0 / n_nodes), 2)
    )

    P = np.kron(G, np.eye(n))
    singulars = np.linalg.svd(P, compute_uv=False)
    unit_count = int(np.sum(np.abs(singulars - 1.0) <= unit_tol))
    below = singulars[np.abs(singulars - 1.0) > unit_tol]
    max_subunit = float(below.max()) if below.size else 0.0

    eigvals, eigvecs = np.linalg.eigh(gram.metric)
    sqrt_k = eigvecs @ np.diag(np.sqrt(eigvals)) @ eigvecs.T
    inv_sqrt_k = eigvecs @ np.diag(1.0 / np.sqrt(eigvals)) @ eigvecs.T
    full_sqrt = np.kron(np.eye(n_nodes), sqrt_k)
    full_inv_sqrt = np.kron(np.eye(n_nodes), inv_sqrt_k)
    metric_dev = float(np.max(np.abs(full_inv_sqrt @ P @ full_sqrt - P)))

    return ConsensusReport(
        row_sum_dev=row_sum_dev,
        symmetry_dev=symmetry_dev,
        contraction_norm=contraction_norm,
        unit_singular_count=unit_count,
        expected_unit_count=n,
        max_subunit_singular=max_subunit,
        metric_invariance_dev=metric_dev,
        unit_tol=unit_tol,
    )


def consensus_basis(n_nodes: int, block_size: int) -> np.ndarray:
    """Orthonormal basis of the agreement subspace, one column per coordinate.

    Column n is the n-th coordinate unit vector replicated across all
    nodes and scaled by ``1/sqrt(J)``.
    """
    return np.kron(np.ones((n_nodes, 1)) / np.sqrt(n_nodes), np.eye(block_size))


def disagreement(states, block_size: int | None = None) -> float:
    """Distance of stacked node vectors from the agreement subspace.

    Accepts a ``(J, n)`` matrix of per-node vectors, or the flat stacked
    vector of length ``J*n`` together with ``block_size=n``.  Equals the
    norm of the stacked vector after projecting out the agreement
    subspace spanned by :func:`consensus_basis`, computed here as the
    deviation of every node's vector from the network average.
    """
    states = np.asarray(states, dtype=float)
    if states.ndim == 1:
        if block_size is None:
            raise ValueError("flat input needs block_size to delimit node vectors")
        if states.size % block_size != 0:
            raise ValueError(
                f"stacked length {states.size} is not a multiple of {block_size}"
            )
        states = states.reshape(-1, block_size)
    return float(np.linalg.norm(states - states.mean(axis=0)))


def save_graph_csv(graph: Graph, positions_path, edges_path) -> None:
    """Write node positions and the undirected edge list for reproducibility."""
    with open(positions_path, "w") as fh:
        fh.write("node,x1,x2\n")
        for j, (x1, x2) in enumerate(graph.positions):
            fh.write(f"{j},{x1:.17g},{x2:.17g}\n")
    with open(edges_path, "w") as fh:
        fh.write("i,j\n")
        for i, j in graph.edges():
            fh.write(f"{i},{j}\n")
