"""Cyclic designs as spacing sequences: enumeration, connectedness, multiplier classes, search.

A cyclic design on residues mod t is identified by the gaps between
consecutive elements of its initial block.  Two gap sequences that are
cyclic rotations of each other describe the same design, so each design is
stored as its lexicographically least rotation.  Multiplying the block by a
unit ``i`` of Z_t gives an isomorphic design with the same metrics.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import chain, combinations, islice

import numpy as np

from .core import DesignError, SpacingSequence, gcd_all, least_rotation
from .metrics import MetricsReport, cyclic_abd_batch, metrics_from_abd

CHUNK = 200_000
# orbits whose metrics agree this closely are flagged as possibly isomorphic
SAME_METRIC_TOL = 1e-9
TIE_TOL = 1e-10


def worker_count() -> int:
    env = os.environ.get("SQARRAY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def units(t: int) -> list[int]:
    return [i for i in range(1, t) if math.gcd(i, t) == 1]


def _composition_chunks(t: int, k: int, chunk: int = CHUNK):
    """Yield (n, k) arrays of all compositions of t into k positive parts.

    Compositions correspond to initial blocks {0} + (k-1)-subsets of 1..t-1.
    """
    it = combinations(range(1, t), k - 1)
    while True:
        flat = np.fromiter(chain.from_iterable(islice(it, chunk)), dtype=np.int64)
        if flat.size == 0:
            return
        cuts = flat.reshape(-1, k - 1)
        n = len(cuts)
        pts = np.hstack([np.zeros((n, 1), dtype=np.int64), cuts, np.full((n, 1), t, dtype=np.int64)])
        yield np.diff(pts, axis=1)


def _is_least_rotation(seqs: np.ndarray) -> np.ndarray:
    """Mask of rows that are lexicographically <= each of their rotations."""
    n, k = seqs.shape
    ok = np.ones(n, dtype=bool)
    for r in range(1, k):
        rot = np.roll(seqs, -r, axis=1)
        diff = rot - seqs
        nz = diff != 0
        first = np.argmax(nz, axis=1)
        sign = diff[np.arange(n), first]
        ok &= sign >= 0
    return ok


def canonical_array(t: int, k: int, connected_only: bool = False):
    """Yield chunks of canonical spacing sequences (one per rotation class)."""
    for comp in _composition_chunks(t, k):
        keep = _is_least_rotation(comp)
        if connected_only:
            keep &= np.gcd.reduce(comp, axis=1) == 1
        if keep.any():
            yield comp[keep]


def blocks_from_spacings(seqs: np.ndarray) -> np.ndarray:
    n = len(seqs)
    return np.hstack([np.zeros((n, 1), dtype=np.int64), np.cumsum(seqs[:, :-1], axis=1)])


def enumerate_cyclic(t: int, k: int) -> list[SpacingSequence]:
    if not 3 <= k < t:
        raise DesignError(f"need 3 <= k < t, got t={t}, k={k}")
    out = []
    for chunk in canonical_array(t, k):
        out.extend(SpacingSequence(t, tuple(row), canonical=True) for row in chunk.tolist())
    return sorted(out)


def is_connected(seq: SpacingSequence) -> bool:
    return gcd_all(seq.spacings) == 1


def multiplier_image(seq: SpacingSequence, i: int) -> SpacingSequence:
    t = seq.t
    if math.gcd(i, t) != 1:
        raise DesignError(f"multiplier {i} is not coprime to {t}")
    block = sorted((b * i) % t for b in seq.initial_block())
    raw = [b - a for a, b in zip(block, block[1:])] + [t - block[-1] + block[0]]
    return SpacingSequence(t, least_rotation(raw), canonical=True)


@dataclass(frozen=True)
class EquivalenceClass:
    representatives: tuple[SpacingSequence, ...]
    connected: bool
    metrics: MetricsReport | None
    class_id: int = 0

    @property
    def representative(self) -> SpacingSequence:
        return self.representatives[0]

    def labels(self) -> str:
        return ", ".join(s.label() for s in self.representatives)


def orbit(seq: SpacingSequence) -> tuple[SpacingSequence, ...]:
    return tuple(sorted({multiplier_image(seq, i) for i in units(seq.t)}))


def _metrics_for(seqs: list[SpacingSequence], t: int, k: int) -> list[MetricsReport | None]:
    if not seqs:
        return []
    arr = np.array([s.spacings for s in seqs], dtype=np.int64)
    abd = cyclic_abd_batch(t, blocks_from_spacings(arr))
    return [None if np.isnan(a) else metrics_from_abd(float(a), t, k) for a in abd]


def equivalence_classes(t: int, k: int) -> list[EquivalenceClass]:
    """Partition the canonical sequences into multiplier orbits.

    Classes are ordered connected-first by increasing ``a_tt``, then the
    disconnected ones, ties by representative.
    """
    seqs = enumerate_cyclic(t, k)
    seen: set[SpacingSequence] = set()
    orbits = []
    for s in seqs:
        if s in seen:
            continue
        members = orbit(s)
        seen.update(members)
        orbits.append(members)
    reps = [o[0] for o in orbits]
    reports = _metrics_for(reps, t, k)
    classes = [EquivalenceClass(o, is_connected(o[0]), m) for o, m in zip(orbits, reports)]
    classes.sort(key=lambda c: (not c.connected, c.metrics.a_tt if c.metrics else 0.0, c.representative))
    return [EquivalenceClass(c.representatives, c.connected, c.metrics, i + 1) for i, c in enumerate(classes)]


def possibly_isomorphic(classes: list[EquivalenceClass]) -> list[tuple[int, int]]:
    """Pairs of distinct orbits (by class_id) whose metrics coincide."""
    conn = [c for c in classes if c.connected]
    conn.sort(key=lambda c: c.metrics.a_abd)
    pairs = []
    for a, b in zip(conn, conn[1:]):
        if abs(a.metrics.a_abd - b.metrics.a_abd) < SAME_METRIC_TOL:
            pairs.append((a.class_id, b.class_id))
    return pairs


@dataclass(frozen=True)
class ClassCounts:
    orbits: int
    connected_orbits: int
    metric_distinct: int

    def as_dict(self) -> dict:
        return {"orbits": self.orbits, "connected_orbits": self.connected_orbits,
                "metric_distinct": self.metric_distinct}


def class_counts(t: int, k: int, classes: list[EquivalenceClass] | None = None) -> ClassCounts:
    """Orbit counts under three conventions.

    ``metric_distinct`` merges connected orbits with equal metrics and
    pools every disconnected design into a single extra class.  Values are
    merged at TIE_TOL, which sits between float noise (~1e-12) and the
    smallest genuine gap seen in practice (~6e-10 at t=30).
    """
    if classes is None:
        classes = equivalence_classes(t, k)
    conn = [c for c in classes if c.connected]
    values = sorted(c.metrics.a_abd for c in conn)
    distinct = 0
    last = None
    for v in values:
        if last is None or v - last >= TIE_TOL:
            distinct += 1
        last = v
    has_disconnected = len(conn) < len(classes)
    return ClassCounts(len(classes), len(conn), distinct + int(has_disconnected))


def _best_in_chunk(t: int, chunk: np.ndarray) -> tuple[float, tuple[int, ...]] | None:
    abd = cyclic_abd_batch(t, blocks_from_spacings(chunk))
    if np.all(np.isnan(abd)):
        return None
    best = np.nanmin(abd)
    ties = chunk[abd <= best + TIE_TOL]
    return float(best), min(tuple(r) for r in ties.tolist())


def min_abd_search(t: int, k: int, threads: int | None = None) -> tuple[float, SpacingSequence]:
    """Exhaustive minimum of ``a_abd`` over connected cyclic designs.

    Ties are broken by the lexicographically least canonical sequence.
    """
    if not 3 <= k < t:
        raise DesignError(f"need 3 <= k < t, got t={t}, k={k}")
    threads = threads or worker_count()
    chunks = canonical_array(t, k, connected_only=True)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda c: _best_in_chunk(t, c), chunks))
    else:
        results = [_best_in_chunk(t, c) for c in chunks]
    results = [r for r in results if r is not None]
    if not results:
        raise DesignError(f"no connected cyclic design for t={t}, k={k}")
    best = min(r[0] for r in results)
    rep = min(r[1] for r in results if r[0] <= best + TIE_TOL)
    return best, SpacingSequence(t, rep, canonical=True)


def min_metric_search(t: int, k: int, threads: int | None = None) -> tuple[EquivalenceClass, MetricsReport]:
    best, rep = min_abd_search(t, k, threads)
    report = metrics_from_abd(best, t, k)
    return EquivalenceClass(orbit(rep), True, report, 1), report


def table_grid(t_range=range(10, 31), k_range=range(3, 10), low=0.15, high=0.30):
    """(t, k) cells whose control fraction k/t lies in [low, high]."""
    eps = 1e-12
    return [(t, k) for t in t_range for k in k_range if k < t and low - eps <= k / t <= high + eps]


def in_window(t: int, k: int, low=0.20, high=0.25) -> bool:
    return low - 1e-12 <= k / t <= high + 1e-12
