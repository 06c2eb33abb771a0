"""Greedy coherence-based dictionary construction over candidate points.

All nodes share one center set.  A candidate is admitted when its largest
kernel evaluation against every already-retained center, over all kernels
in the bank, stays at or below the coherence threshold.  Candidate order
therefore determines the result; callers fix it (node index order in the
simulations) to keep runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelBank


@dataclass(frozen=True)
class Dictionary:
    """An ordered set of kernel centers plus the threshold that built it."""

    centers: np.ndarray  # (r, L)
    tau: float

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if centers.size == 0:
            raise ValueError("a dictionary needs at least one center")
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def to_csv(self, path) -> None:
        """Write one center per row, one column per input dimension."""
        np.savetxt(path, self.centers, fmt="%.17g", delimiter=",")

    @classmethod
    def from_csv(cls, path, tau: float = 1.0) -> "Dictionary":
        """Load centers written by :meth:`to_csv`.

        The file stores centers only, so the threshold must be supplied
        (it defaults to 1, the permissive end of its range).
        """
        centers = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(centers=centers, tau=tau)


def coherence(bank: KernelBank, centers: np.ndarray, x) -> np.ndarray:
    """Largest kernel evaluation of ``x`` against each center, over all kernels.

    Returns one value per center, each in (0, 1].
    """
    x = np.asarray(x, dtype=float)
    sq_dist = np.sum((centers - x) ** 2, axis=1)
    values = np.stack([np.exp(-sq_dist / (2.0 * k.bandwidth**2)) for k in bank.kernels])
    return values.max(axis=0)


def build_coherence(bank: KernelBank, candidates, tau: float) -> Dictionary:
    """Run the greedy admission pass over ``candidates`` in order.

    The first candidate is always admitted; each later one is admitted
    iff its coherence against every retained center is <= ``tau``.

    Parameters
    ----------
    bank : KernelBank
        Kernels whose maximum evaluation defines coherence.
    candidates : array_like, shape (m, L)
        Ordered candidate points; must be nonempty.
    tau : float
        Coherence threshold in (0, 1].
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"coherence threshold must lie in (0, 1], got {tau}")
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.size == 0:
        raise ValueError("candidate list is empty")
    retained = [candidates[0]]
    for x in candidates[1:]:
        if coherence(bank, np.asarray(retained), x).max() <= tau:
            retained.append(x)
    return Dictionary(centers=np.asarray(retained), tau=tau)


def select_top_s(bank: KernelBank, dictionary: Dictionary, x, s: int) -> np.ndarray:
    """Indices of the ``s`` centers most coherent with ``x``.

    Sorted by decreasing coherence; ties resolve to the lower index.
    Returns all indices when ``s >= r``.
    """
    if s < 1:
        raise ValueError(f"selection size must be positive, got {s}")
    values = coherence(bank, dictionary.centers, x)
    order = np.argsort(-values, kind="stable")
    return order[: min(s, dictionary.size)]
