"""Space-filling experimental designs in the unit hypercube."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Design", "maximin_lhs"]

DEFAULT_SWAP_BUDGET = 10_000


@dataclass(frozen=True)
class Design:
    """A Latin hypercube design with its construction metadata."""

    points: np.ndarray  # (n, p), entries in (0, 1)
    n: int
    p: int
    seed: int | None
    min_distance: float
    budget: int

    def to_csv(self, path):
        # headerless, 17 significant digits: enough to round-trip float64
        np.savetxt(path, self.points, fmt="%.17g", delimiter=",")


def _min_sq_distance(d2):
    n = d2.shape[0]
    return d2[~np.eye(n, dtype=bool)].min()


def maximin_lhs(n, p, rng, budget=DEFAULT_SWAP_BUDGET, seed=None):
    """Latin hypercube design improved toward the maximin criterion.

    Columns are random permutations of the stratum midpoints
    (k - 0.5)/n, which keeps the Latin property exact.  A local search
    then proposes ``budget`` single-column swaps of two point
    coordinates and accepts only proposals that strictly increase the
    minimum pairwise Euclidean distance; swapping within a column
    preserves the strata, so the Latin property survives optimization.

    Parameters
    ----------
    n, p : int
        Number of points (>= 2) and input dimension (>= 1).
    rng : numpy.random.Generator
        Source of permutations and swap proposals; the result is a pure
        function of (n, p, rng state, budget).
    budget : int
        Number of swap proposals.
    seed : int, optional
        Recorded in the design metadata for provenance; the caller owns
        the mapping from seed to generator.
    """
    if n < 2:
        raise ValueError("a design needs at least 2 points")
    if p < 1:
        raise ValueError("dimension must be at least 1")

    mids = (np.arange(n) + 0.5) / n
    pts = np.column_stack([rng.permutation(mids) for _ in range(p)])

    # squared distance matrix, diagonal masked out of the min
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d2, np.inf)
    best = d2.min()

    if p == 1:
        # a single sorted column is already optimal; swaps cannot help
        pts = np.sort(pts, axis=0)
    else:
        for _ in range(budget):
            r1, r2 = rng.choice(n, size=2, replace=False)
            col = rng.integers(p)
            a, b = pts[r1, col], pts[r2, col]

            # only distances from rows r1 and r2 change
            old1, old2 = d2[r1].copy(), d2[r2].copy()
            delta1 = (b - pts[:, col]) ** 2 - (a - pts[:, col]) ** 2
            delta2 = (a - pts[:, col]) ** 2 - (b - pts[:, col]) ** 2
            d2[r1] += delta1
            d2[r2] += delta2
            d2[:, r1] = d2[r1]
            d2[:, r2] = d2[r2]
            d2[r1, r2] = d2[r2, r1] = old1[r2]  # unchanged by a same-column swap
            d2[r1, r1] = d2[r2, r2] = np.inf

            cand = d2.min()
            if cand > best:
                best = cand
                pts[r1, col], pts[r2, col] = b, a
            else:
                d2[r1] = old1
                d2[:, r1] = old1
                d2[r2] = old2
                d2[:, r2] = old2

    return Design(points=pts, n=n, p=p, seed=seed,
                  min_distance=float(np.sqrt(best)), budget=budget)
