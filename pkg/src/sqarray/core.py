"""Design data model and the rectangle <-> square-array representation.

An auxiliary block design is held as a ``k x t`` rectangle of treatment
labels ``1..t``: column ``j`` is block ``j`` and every row is a permutation
of the treatments.  Its square array design is the ``t x t`` grid in which
row ``j`` carries control ``i`` in column ``s`` whenever ``rect[i][j] == s``;
all other cells hold unreplicated test lines.

Square grids are stored as signed integers: a negative entry ``-i`` is
control ``i`` (``1..k``) and a positive entry ``m`` is test line ``m``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

CONTROL_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


class DesignError(ValueError):
    """Base class for malformed or invalid designs."""


class ShapeError(DesignError):
    """Structural problem: array dimensions disagree with ``t`` and ``k``."""


class InvalidDesignError(DesignError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid design: " + "; ".join(report.violations))


class DesignParseError(DesignError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=np.int64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()
    # (row, column) 1-based locations of offending cells, when known
    cells: tuple[tuple[int, int], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True, eq=False)
class AuxiliaryBlockDesign:
    """A ``k x t`` rectangle: columns are blocks, rows hold each treatment once."""

    t: int
    k: int
    rect: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rect", _frozen(self.rect))

    @classmethod
    def from_rect(cls, rect) -> "AuxiliaryBlockDesign":
        arr = np.asarray(rect)
        if arr.ndim != 2:
            raise ShapeError(f"rectangle must be 2-D, got shape {arr.shape}")
        k, t = arr.shape
        return cls(t, k, arr)

    def blocks(self) -> list[tuple[int, ...]]:
        return [tuple(int(x) for x in self.rect[:, j]) for j in range(self.t)]

    def incidence(self) -> np.ndarray:
        """Treatment-by-block incidence matrix ``N`` (t x t)."""
        n = np.zeros((self.t, self.t), dtype=np.int64)
        for j in range(self.t):
            np.add.at(n[:, j], self.rect[:, j] - 1, 1)
        return n

    def __eq__(self, other):
        if not isinstance(other, AuxiliaryBlockDesign):
            return NotImplemented
        return self.t == other.t and self.k == other.k and np.array_equal(self.rect, other.rect)

    def __hash__(self):
        return hash((self.t, self.k, self.rect.tobytes()))


@dataclass(frozen=True, eq=False)
class SquareArrayDesign:
    """A ``t x t`` grid; ``-i`` marks control ``i``, ``m > 0`` marks test line ``m``."""

    t: int
    k: int
    grid: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", _frozen(self.grid))

    @property
    def control_layout(self) -> np.ndarray:
        """``t x t`` array holding the control index, 0 for test-line cells."""
        return np.where(self.grid < 0, -self.grid, 0)

    @property
    def control_cells(self) -> np.ndarray:
        """``(tk, 2)`` array of 0-based (row, column) coordinates of control plots."""
        return np.argwhere(self.grid < 0)

    @property
    def n_test_lines(self) -> int:
        return self.t * (self.t - self.k)

    def same_controls(self, other: "SquareArrayDesign") -> bool:
        return np.array_equal(self.control_layout, other.control_layout)

    def __eq__(self, other):
        if not isinstance(other, SquareArrayDesign):
            return NotImplemented
        return self.t == other.t and self.k == other.k and np.array_equal(self.grid, other.grid)

    def __hash__(self):
        return hash((self.t, self.k, self.grid.tobytes()))


@dataclass(frozen=True, order=True)
class SpacingSequence:
    """Cyclic gaps between consecutive control columns in one row."""

    t: int
    spacings: tuple[int, ...]
    canonical: bool = field(default=False, compare=False)

    def __post_init__(self):
        sp = tuple(int(s) for s in self.spacings)
        object.__setattr__(self, "spacings", sp)
        if any(s < 1 for s in sp) or sum(sp) != self.t:
            raise DesignError(f"spacings {sp} are not a composition of {self.t}")
        if self.canonical and sp != least_rotation(sp):
            raise DesignError(f"{sp} is not the canonical rotation")

    @property
    def k(self) -> int:
        return len(self.spacings)

    def canonicalize(self) -> "SpacingSequence":
        return SpacingSequence(self.t, least_rotation(self.spacings), canonical=True)

    def initial_block(self) -> tuple[int, ...]:
        """Residues ``{0, s1, s1+s2, ...}`` mod t."""
        out = [0]
        for s in self.spacings[:-1]:
            out.append(out[-1] + s)
        return tuple(out)

    def label(self) -> str:
        return "C(" + ",".join(map(str, self.spacings)) + ")"

    def __str__(self):
        return self.label()


def least_rotation(seq: Sequence[int]) -> tuple[int, ...]:
    seq = tuple(seq)
    return min(seq[i:] + seq[:i] for i in range(len(seq)))


# -- validation ---------------------------------------------------------------

def _check_params(t: int, k: int) -> list[str]:
    out = []
    if t < 4:
        out.append(f"t={t} is below 4")
    if not 3 <= k < t:
        out.append(f"k={k} outside 3 <= k < t")
    return out


def validate_auxiliary(design: AuxiliaryBlockDesign) -> ValidationReport:
    """List every violated rectangle invariant; an empty report means valid."""
    t, k, rect = design.t, design.k, design.rect
    if rect.shape != (k, t):
        raise ShapeError(f"rectangle has shape {rect.shape}, expected ({k}, {t})")
    violations = _check_params(t, k)
    cells = []
    bad = (rect < 1) | (rect > t)
    for i, j in np.argwhere(bad):
        violations.append(f"label {rect[i, j]} out of range at row {CONTROL_LETTERS[i]}, block {j + 1}")
        cells.append((int(i) + 1, int(j) + 1))
    for i in range(k):
        if sorted(rect[i].tolist()) != list(range(1, t + 1)):
            violations.append(f"row {CONTROL_LETTERS[i]} not a permutation of 1..{t}")
    for j in range(t):
        col = rect[:, j].tolist()
        dup = sorted({x for x in col if col.count(x) > 1})
        if dup:
            violations.append(f"duplicate in block {j + 1}: {dup}")
            cells.extend((i + 1, j + 1) for i in range(k) if col[i] in dup)
    return ValidationReport(tuple(violations), tuple(cells))


def validate_square(design: SquareArrayDesign) -> ValidationReport:
    t, k, grid = design.t, design.k, design.grid
    if grid.shape != (t, t):
        raise ShapeError(f"grid has shape {grid.shape}, expected ({t}, {t})")
    violations = _check_params(t, k)
    cells = []
    ctrl = design.control_layout
    for i in range(1, k + 1):
        rows = (ctrl == i).sum(axis=1)
        cols = (ctrl == i).sum(axis=0)
        for r in np.flatnonzero(rows != 1):
            violations.append(f"control {CONTROL_LETTERS[i - 1]} occurs {rows[r]} times in row {r + 1}")
        for c in np.flatnonzero(cols != 1):
            violations.append(f"control {CONTROL_LETTERS[i - 1]} occurs {cols[c]} times in column {c + 1}")
    for r, c in np.argwhere((grid < -k) | (grid == 0)):
        violations.append(f"bad cell value {grid[r, c]} at ({r + 1}, {c + 1})")
        cells.append((int(r) + 1, int(c) + 1))
    tests = grid[grid > 0]
    if sorted(tests.tolist()) != list(range(1, t * (t - k) + 1)):
        violations.append(f"test-line labels are not exactly 1..{t * (t - k)} once each")
    return ValidationReport(tuple(violations), tuple(cells))


def _require(report: ValidationReport):
    if not report.ok:
        raise InvalidDesignError(report)


# -- representation -------------------------------------------------------------

def to_square_array(aux: AuxiliaryBlockDesign) -> SquareArrayDesign:
    """Rectangle entry (i, j) = s puts control i at cell (j, s); test lines fill the rest row-major."""
    _require(validate_auxiliary(aux))
    t, k = aux.t, aux.k
    grid = np.zeros((t, t), dtype=np.int64)
    for i in range(k):
        grid[np.arange(t), aux.rect[i] - 1] = -(i + 1)
    free = grid == 0
    grid[free] = np.arange(1, int(free.sum()) + 1)
    return SquareArrayDesign(t, k, grid)


def from_square_array(sq: SquareArrayDesign) -> AuxiliaryBlockDesign:
    _require(validate_square(sq))
    t, k = sq.t, sq.k
    rect = np.zeros((k, t), dtype=np.int64)
    rows, cols = np.nonzero(sq.grid < 0)
    rect[-sq.grid[rows, cols] - 1, rows] = cols + 1
    return AuxiliaryBlockDesign(t, k, rect)


def cyclic_auxiliary(t: int, initial_block: Iterable[int]) -> AuxiliaryBlockDesign:
    """Develop an initial block of residues mod t; row order follows the sorted block."""
    residues = [int(b) % t for b in initial_block]
    if len(set(residues)) != len(residues):
        raise DesignError(f"initial block {list(initial_block)} has repeated residues mod {t}")
    block = np.array(sorted(residues))
    rect = (block[:, None] + np.arange(t)[None, :]) % t + 1
    return AuxiliaryBlockDesign(t, len(block), rect)


def spacings_of(t: int, coordinates: Iterable[int]) -> SpacingSequence:
    """Canonical spacing sequence of sorted control column coordinates in one row."""
    js = sorted(int(j) for j in coordinates)
    if len(set(js)) != len(js) or not js:
        raise DesignError(f"coordinates {js} must be distinct and non-empty")
    raw = [b - a for a, b in zip(js, js[1:])] + [t - js[-1] + js[0]]
    return SpacingSequence(t, raw).canonicalize()


def design_spacings(design: AuxiliaryBlockDesign | SquareArrayDesign) -> SpacingSequence:
    """Spacing sequence of a cyclic design; raises if the diagonals are broken."""
    sq = to_square_array(design) if isinstance(design, AuxiliaryBlockDesign) else design
    t = sq.t
    ctrl = sq.control_layout
    first = np.flatnonzero(ctrl[0])
    for r in range(1, t):
        if not np.array_equal(np.roll(ctrl[0], r), ctrl[r]):
            raise DesignError("not cyclic: control diagonals are broken")
    return spacings_of(t, first + 1)


def error_df(t: int, k: int) -> int:
    """Residual degrees of freedom of the row-column model, ``(t-1)(k-2)``."""
    if k < 3:
        raise DesignError(f"k={k} gives zero or negative error df")
    if k >= t:
        raise DesignError(f"k={k} must be smaller than t={t}")
    return (t - 1) * (k - 2)


def rectangle_from_blocks(t: int, blocks: Sequence[Sequence[int]]) -> AuxiliaryBlockDesign:
    """Arrange t blocks of size k (equireplicate, labels 1..t) so each row is a permutation.

    The treatment/block incidence graph is k-regular bipartite, so it splits
    into k perfect matchings; matching ``i`` becomes row ``i``.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import maximum_bipartite_matching

    if len(blocks) != t:
        raise ShapeError(f"expected {t} blocks, got {len(blocks)}")
    k = len(blocks[0])
    if any(len(b) != k or len(set(b)) != k for b in blocks):
        raise DesignError("blocks must all have k distinct treatments")
    remaining = [set(int(x) for x in b) for b in blocks]
    reps = np.bincount([x for b in remaining for x in b], minlength=t + 1)[1:]
    if np.any(reps != k):
        raise DesignError("design is not equireplicate with replication k")
    rect = np.zeros((k, t), dtype=np.int64)
    for i in range(k):
        rows = [j for j in range(t) for _ in remaining[j]]
        cols = [x - 1 for j in range(t) for x in sorted(remaining[j])]
        graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(t, t))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.any(match < 0):
            raise DesignError("no perfect matching; blocks do not form a regular design")
        for j in range(t):
            rect[i, j] = match[j] + 1
            remaining[j].discard(int(match[j]) + 1)
    return AuxiliaryBlockDesign(t, k, rect)


# -- JSON and text ------------------------------------------------------------

def _cell_code(v: int) -> str:
    return f"C{-v}" if v < 0 else f"T{v}"


def _parse_cell(code) -> int:
    if isinstance(code, str) and len(code) > 1 and code[0] in "CT" and code[1:].isdigit():
        n = int(code[1:])
        return -n if code[0] == "C" else n
    raise DesignError(f"bad cell code {code!r}; expected 'C<i>' or 'T<m>'")


def design_to_dict(design: AuxiliaryBlockDesign | SquareArrayDesign) -> dict:
    if isinstance(design, AuxiliaryBlockDesign):
        return {"t": design.t, "k": design.k, "kind": "auxiliary", "rect": design.rect.tolist()}
    grid = [[_cell_code(int(v)) for v in row] for row in design.grid]
    return {"t": design.t, "k": design.k, "kind": "square", "grid": grid}


def design_from_dict(data: dict) -> AuxiliaryBlockDesign | SquareArrayDesign:
    kind = data.get("kind")
    if kind == "auxiliary":
        rect = np.asarray(data["rect"], dtype=np.int64)
        if rect.ndim != 2:
            raise ShapeError("'rect' must be a list of rows")
        t = int(data.get("t", rect.shape[1]))
        k = int(data.get("k", rect.shape[0]))
        return AuxiliaryBlockDesign(t, k, rect)
    if kind == "square":
        grid = np.array([[_parse_cell(c) for c in row] for row in data["grid"]], dtype=np.int64)
        t = int(data.get("t", grid.shape[0]))
        if "k" in data:
            k = int(data["k"])
        else:
            k = int(-grid.min()) if grid.size and grid.min() < 0 else 0
        return SquareArrayDesign(t, k, grid)
    raise DesignError(f"unknown design kind {kind!r}")


def loads_design(text: str) -> AuxiliaryBlockDesign | SquareArrayDesign:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DesignParseError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(data, dict):
        raise DesignParseError("design file must hold a JSON object")
    try:
        return design_from_dict(data)
    except KeyError as exc:
        raise DesignParseError(f"missing field {exc.args[0]!r}") from None


def load_design(path) -> AuxiliaryBlockDesign | SquareArrayDesign:
    return loads_design(Path(path).read_text())


def dumps_design(design) -> str:
    d = design_to_dict(design)
    key = "rect" if d["kind"] == "auxiliary" else "grid"
    rows = ",\n    ".join(json.dumps(r) for r in d[key])
    head = json.dumps({k: v for k, v in d.items() if k != key})[:-1]
    return f'{head}, "{key}": [\n    {rows}\n  ]}}\n'


def render(design: AuxiliaryBlockDesign | SquareArrayDesign, show_tests: bool = False) -> str:
    """Plain-text grid with row and column numbers."""
    t = design.t
    if isinstance(design, AuxiliaryBlockDesign):
        width = len(str(t))
        lines = ["  " + " ".join(f"{j:>{width}}" for j in range(1, t + 1))]
        for i in range(design.k):
            lines.append(CONTROL_LETTERS[i] + " " + " ".join(f"{v:>{width}}" for v in design.rect[i]))
        return "\n".join(lines)
    width = max(len(str(design.n_test_lines)) if show_tests else 1, len(str(t)))
    lw = len(str(t))
    lines = [" " * lw + " " + " ".join(f"{j:>{width}}" for j in range(1, t + 1))]
    for r in range(t):
        cells = []
        for v in design.grid[r]:
            if v < 0:
                cells.append(f"{CONTROL_LETTERS[-v - 1]:>{width}}")
            else:
                cells.append(f"{v:>{width}}" if show_tests else " " * (width - 1) + ".")
        lines.append(f"{r + 1:>{lw}} " + " ".join(cells))
    return "\n".join(lines)


def control_fraction(t: int, k: int) -> float:
    return k / t


def gcd_all(values: Iterable[int]) -> int:
    out = 0
    for v in values:
        out = math.gcd(out, int(v))
    return out
