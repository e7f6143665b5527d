"""The phi_2 space-filling criterion on control plots, and its randomization distribution.

phi_2 is the square root of the sum, over unordered pairs of control cells,
of the inverse squared Euclidean distance between their (row, column)
coordinates.  All controls are pooled regardless of label.  Smaller is
better spread.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import CONTROL_LETTERS, SquareArrayDesign
from .cyclic import worker_count
from .randgroup import GroupError, PermutationGroup

EXHAUSTIVE_LIMIT = 10**6


class RefusedComputation(RuntimeError):
    pass


def phi2_points(points) -> float:
    pts = np.asarray(points, dtype=float)
    ia, ib = np.triu_indices(len(pts), 1)
    d2 = ((pts[ia] - pts[ib]) ** 2).sum(axis=1)
    return float(np.sqrt(np.sum(1.0 / d2)))


def phi2(sq: SquareArrayDesign) -> float:
    return phi2_points(sq.control_cells)


@dataclass(frozen=True)
class Phi2Summary:
    n: int
    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float

    @classmethod
    def from_values(cls, values) -> "Phi2Summary":
        v = np.asarray(values, dtype=float)
        # numpy's default "linear" method is the type-7 quantile
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        return cls(len(v), float(v.min()), float(q1), float(med), float(v.mean()), float(q3), float(v.max()))

    def as_dict(self) -> dict:
        return {"n": self.n, "min": self.min, "q1": self.q1, "median": self.median,
                "mean": self.mean, "q3": self.q3, "max": self.max}


def _pair_offsets(sq: SquareArrayDesign, g: PermutationGroup):
    """Squared row and column offsets of every control pair under each group element."""
    cells = sq.control_cells
    ia, ib = np.triu_indices(len(cells), 1)
    r, c = cells[:, 0], cells[:, 1]
    el = g.elements
    dr = ((el[:, r[ia]] - el[:, r[ib]]) ** 2).astype(float)
    dc = ((el[:, c[ia]] - el[:, c[ib]]) ** 2).astype(float)
    return dr, dc


def phi2_values(sq: SquareArrayDesign, g: PermutationGroup, mode: str = "exhaustive",
                n: int | None = None, seed=None, force: bool = False) -> np.ndarray:
    """phi_2 of every randomized design; rows permuted by pi, columns by sigma.

    Exhaustive mode covers all ordered pairs (pi, sigma) in g x g, indexed
    ``pi * |g| + sigma``.  Sample mode draws ``n`` independent pairs.
    """
    if g.degree != sq.t:
        raise GroupError(f"group degree {g.degree} does not match t={sq.t}")
    dr, dc = _pair_offsets(sq, g)
    size = len(g)
    if mode == "exhaustive":
        if size * size > EXHAUSTIVE_LIMIT and not force:
            raise RefusedComputation(f"exhaustive run needs {size * size} designs (> {EXHAUSTIVE_LIMIT}); "
                                     "use --force or --mode sample")
        out = np.empty((size, size))

        def rows(i):
            out[i] = np.sqrt((1.0 / (dr[i][None, :] + dc)).sum(axis=1))

        with ThreadPoolExecutor(worker_count()) as pool:
            list(pool.map(rows, range(size)))
        return out.ravel()
    if mode == "sample":
        if not n or n < 1:
            raise ValueError("sample mode needs n >= 1")
        rng = np.random.default_rng(seed)
        pi = rng.integers(size, size=n)
        sigma = rng.integers(size, size=n)
        return np.sqrt((1.0 / (dr[pi] + dc[sigma])).sum(axis=1))
    raise ValueError(f"unknown mode {mode!r}")


def simulate_phi2(sq: SquareArrayDesign, g: PermutationGroup, mode: str = "exhaustive",
                  n: int | None = None, seed=None, force: bool = False) -> Phi2Summary:
    return Phi2Summary.from_values(phi2_values(sq, g, mode, n, seed, force))


def render_controls(sq: SquareArrayDesign) -> str:
    """Control positions only: letters for controls, dots elsewhere."""
    lines = []
    for row in sq.control_layout:
        lines.append(" ".join(CONTROL_LETTERS[v - 1] if v else "." for v in row))
    return "\n".join(lines)
