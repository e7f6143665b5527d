"""Doubly transitive permutation groups and randomization of square array designs.

Row and column permutations drawn from a doubly transitive group give a
strongly valid randomization.  Groups are stored as an explicit array of
elements (one permutation per row, in image form) so that sampling is just
indexing.
"""

from __future__ import annotations

import enum
import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import SquareArrayDesign
from .gf import GaloisField, is_prime, prime_power

logger = logging.getLogger(__name__)

MAX_GROUP = 10**6


class GroupError(ValueError):
    pass


class GroupTooLarge(GroupError):
    def __init__(self, size: int, cap: int):
        self.size = size
        self.cap = cap
        super().__init__(f"group closure exceeded cap {cap} (reached {size} elements); "
                         "generators produce too large a group for explicit listing")


class Provenance(str, enum.Enum):
    AFFINE_PRIME = "affine_prime"
    AFFINE_PRIME_POWER = "affine_prime_power"
    GENERATOR_CLOSURE = "generator_closure"


@dataclass(frozen=True)
class Permutation:
    images: tuple[int, ...]

    def __post_init__(self):
        imgs = tuple(int(x) for x in self.images)
        if sorted(imgs) != list(range(len(imgs))):
            raise GroupError(f"{imgs} is not a permutation of 0..{len(imgs) - 1}")
        object.__setattr__(self, "images", imgs)

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, x: int) -> int:
        return self.images[x]

    def then(self, other: "Permutation") -> "Permutation":
        """Apply self first, then other."""
        return Permutation(tuple(other.images[x] for x in self.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.degree
        for x, y in enumerate(self.images):
            inv[y] = x
        return Permutation(tuple(inv))

    @classmethod
    def identity(cls, t: int) -> "Permutation":
        return cls(tuple(range(t)))


@dataclass(frozen=True, eq=False)
class PermutationGroup:
    degree: int
    elements: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        arr = np.array(self.elements, dtype=np.int64).reshape(-1, self.degree)
        arr.flags.writeable = False
        object.__setattr__(self, "elements", arr)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def __getitem__(self, i: int) -> Permutation:
        return Permutation(tuple(self.elements[i]))

    def __contains__(self, perm) -> bool:
        key = tuple(perm.images if isinstance(perm, Permutation) else perm)
        return key in self._index

    @property
    def _index(self) -> set:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {tuple(row) for row in self.elements.tolist()}
            self.__dict__["_index_cache"] = cache
        return cache

    def stabilizer_order(self, point: int = 0) -> int:
        return int(np.sum(self.elements[:, point] == point))


def affine_group(t: int) -> PermutationGroup:
    """``x -> a x + b`` mod a prime t, ``a != 0``."""
    if not is_prime(t):
        raise GroupError(f"t={t} is not prime; use affine_prime_power_group for prime powers "
                         "or closure_from_generators with a generator file")
    x = np.arange(t)
    elems = [(a * x + b) % t for a in range(1, t) for b in range(t)]
    return PermutationGroup(t, np.array(elems), Provenance.AFFINE_PRIME)


def affine_prime_power_group(t: int) -> PermutationGroup:
    """``x -> a x + b`` over GF(p^e), points labelled by the field's base-p enumeration."""
    pe = prime_power(t)
    if pe is None:
        raise GroupError(f"t={t} is not a prime power")
    p, e = pe
    field = GaloisField(p, e)
    mul, add = field.mul_table, field.add_table
    x = np.arange(t)
    elems = [add[mul[a, x], b] for a in range(1, t) for b in range(t)]
    prov = Provenance.AFFINE_PRIME if e == 1 else Provenance.AFFINE_PRIME_POWER
    return PermutationGroup(t, np.array(elems), prov)


def closure_from_generators(t: int, generators: Sequence, cap: int = 10_000) -> PermutationGroup:
    """Breadth-first closure of the generators under composition."""
    gens = [Permutation(tuple(g.images if isinstance(g, Permutation) else g)) for g in generators]
    for g in gens:
        if g.degree != t:
            raise GroupError(f"generator {g.images} has degree {g.degree}, expected {t}")
    gen_arr = [np.array(g.images) for g in gens]
    identity = tuple(range(t))
    seen = {identity}
    order = [identity]
    frontier = [np.array(identity)]
    while frontier:
        nxt = []
        for e in frontier:
            for g in gen_arr:
                c = g[e]
                key = tuple(c.tolist())
                if key not in seen:
                    seen.add(key)
                    order.append(key)
                    nxt.append(c)
                    if len(seen) > cap:
                        raise GroupTooLarge(len(seen), cap)
        frontier = nxt
    return PermutationGroup(t, np.array(order), Provenance.GENERATOR_CLOSURE)


def is_doubly_transitive(g: PermutationGroup) -> bool:
    """Orbit of the ordered pair (0, 1) covers all t(t-1) ordered pairs of distinct points."""
    t = g.degree
    if t < 2:
        return False
    pairs = {(int(a), int(b)) for a, b in g.elements[:, :2].tolist()}
    return len(pairs) == t * (t - 1)


def load_generators(path) -> list[Permutation]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data["generators"]
    return [Permutation(tuple(g)) for g in data]


def psl2_generators(q: int) -> list[Permutation]:
    """Generators x -> x + 1 and x -> -1/x of PSL(2, q) on the projective line, q prime.

    Field elements keep their own labels 0..q-1; infinity is point q.
    """
    if not is_prime(q):
        raise GroupError("only prime q is supported")
    inf = q
    shift = [(x + 1) % q for x in range(q)] + [inf]

    def neg_inv(x):
        if x == inf:
            return 0
        if x == 0:
            return inf
        return (-pow(x, -1, q)) % q

    return [Permutation(tuple(shift)), Permutation(tuple(neg_inv(x) for x in range(q + 1)))]


def group_for(t: int, spec: str = "affine", cap: int = MAX_GROUP) -> PermutationGroup:
    """Resolve a group description: ``affine`` or ``file:<path>``."""
    if spec == "affine":
        if is_prime(t):
            return affine_group(t)
        if prime_power(t):
            return affine_prime_power_group(t)
        raise GroupError(f"t={t} is neither prime nor a prime power; supply --group file:<generators.json>")
    if spec == "identity":
        return PermutationGroup(t, np.arange(t)[None, :], Provenance.GENERATOR_CLOSURE)
    if spec.startswith("file:"):
        from .fixtures import resolve

        return closure_from_generators(t, load_generators(resolve(spec[5:])), cap)
    raise GroupError(f"unknown group {spec!r}; expected 'affine' or 'file:<path>'")


def apply_permutations(sq: SquareArrayDesign, row_perm, col_perm) -> SquareArrayDesign:
    """Move row x to row_perm[x] and column y to col_perm[y]."""
    rp = np.asarray(row_perm.images if isinstance(row_perm, Permutation) else row_perm)
    cp = np.asarray(col_perm.images if isinstance(col_perm, Permutation) else col_perm)
    grid = np.empty_like(sq.grid)
    grid[np.ix_(rp, cp)] = sq.grid
    return SquareArrayDesign(sq.t, sq.k, grid)


def randomize(sq: SquareArrayDesign, g: PermutationGroup, seed=None) -> SquareArrayDesign:
    if g.degree != sq.t:
        raise GroupError(f"group degree {g.degree} does not match t={sq.t}")
    if len(g) > 1 and not is_doubly_transitive(g):
        warnings.warn("group is not doubly transitive; randomization is not strongly valid",
                      stacklevel=2)
    rng = np.random.default_rng(seed)
    i, j = rng.integers(len(g), size=2)
    return apply_permutations(sq, g.elements[i], g.elements[j])
