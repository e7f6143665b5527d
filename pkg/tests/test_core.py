import json
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqarray.core import (
    AuxiliaryBlockDesign,
    DesignError,
    DesignParseError,
    InvalidDesignError,
    ShapeError,
    SpacingSequence,
    SquareArrayDesign,
    cyclic_auxiliary,
    design_spacings,
    dumps_design,
    error_df,
    from_square_array,
    least_rotation,
    loads_design,
    rectangle_from_blocks,
    render,
    spacings_of,
    to_square_array,
    validate_auxiliary,
    validate_square,
)

from conftest import fixture_design, random_rectangle, random_square

BAILEY_LAYOUT = """\
C A B . . . . . . . . .
. . . A B C . . . . . .
. . . . . . C B A . . .
. . . . . . . . . C B A
B . . . . . . C . . A .
. C . . A . . . . . . B
. . C . . A . . B . . .
. . . C . . A . . B . .
A . . . C . B . . . . .
. B . . . . . . C A . .
. . A B . . . . . . C .
. . . . . B . A . . . C"""

CYCLIC_LAYOUT = """\
A . . B . . . C . . . .
. A . . B . . . C . . .
. . A . . B . . . C . .
. . . A . . B . . . C .
. . . . A . . B . . . C
C . . . . A . . B . . .
. C . . . . A . . B . .
. . C . . . . A . . B .
. . . C . . . . A . . B
B . . . C . . . . A . .
. B . . . C . . . . A .
. . B . . . C . . . . A"""


def letters(sq):
    return "\n".join(" ".join("ABC"[-v - 1] if v < 0 else "." for v in row) for row in sq.grid)


def brute_force_valid(sq):
    """Loop-by-loop validity check, independent of the vectorised validator."""
    t, k = sq.t, sq.k
    if not (t >= 4 and 3 <= k < t):
        return False
    for i in range(1, k + 1):
        for r in range(t):
            if sum(1 for c in range(t) if sq.grid[r][c] == -i) != 1:
                return False
        for c in range(t):
            if sum(1 for r in range(t) if sq.grid[r][c] == -i) != 1:
                return False
    seen = []
    for r, c in product(range(t), range(t)):
        v = int(sq.grid[r][c])
        if v == 0 or v < -k:
            return False
        if v > 0:
            seen.append(v)
    return sorted(seen) == list(range(1, t * (t - k) + 1))


def test_bailey_rectangle_gives_printed_layout():
    sq = to_square_array(fixture_design("bailey_speed.json"))
    assert letters(sq) == BAILEY_LAYOUT


def test_cyclic_block_gives_printed_layout(fig2b):
    assert letters(fig2b) == CYCLIC_LAYOUT


def test_cyclic_rectangle_rows():
    aux = cyclic_auxiliary(12, [0, 3, 7])
    assert aux.rect[0].tolist() == list(range(1, 13))
    assert aux.rect[1].tolist() == [4, 5, 6, 7, 8, 9, 10, 11, 12, 1, 2, 3]
    assert aux.rect[2].tolist() == [8, 9, 10, 11, 12, 1, 2, 3, 4, 5, 6, 7]


def test_test_lines_numbered_row_major(fig2b):
    tests = fig2b.grid[fig2b.grid > 0]
    assert tests.tolist() == list(range(1, 12 * 9 + 1))
    assert fig2b.grid[0, 1] == 1 and fig2b.grid[0, 2] == 2 and fig2b.grid[0, 4] == 3


def test_representation_rule(rng):
    aux = random_rectangle(rng, 9, 4)
    sq = to_square_array(aux)
    for i, j in product(range(4), range(9)):
        assert sq.grid[j, aux.rect[i, j] - 1] == -(i + 1)


@pytest.mark.parametrize("t,k", [(5, 3), (9, 4), (12, 3), (16, 6)])
def test_round_trip(rng, t, k):
    aux = random_rectangle(rng, t, k)
    assert from_square_array(to_square_array(aux)) == aux
    sq = to_square_array(aux)
    assert to_square_array(from_square_array(sq)) == sq


def test_validator_agrees_with_brute_force(rng):
    for trial in range(60):
        sq = random_square(rng, int(rng.integers(5, 10)), 3)
        grid = sq.grid.copy()
        mutation = trial % 4
        if mutation == 1:
            r, c = rng.integers(sq.t, size=2)
            grid[r, c] = -1
        elif mutation == 2:
            a, b = np.argwhere(grid > 0)[:2]
            grid[tuple(a)] = grid[tuple(b)]
        elif mutation == 3:
            r = rng.integers(sq.t)
            grid[r] = np.roll(grid[r], 1)
        bad = SquareArrayDesign(sq.t, sq.k, grid)
        assert validate_square(bad).ok == brute_force_valid(bad)


def test_duplicate_in_block_reported_with_cell():
    rect = np.array([[1, 2, 3, 4], [2, 3, 4, 1], [2, 4, 1, 3]])
    report = validate_auxiliary(AuxiliaryBlockDesign(4, 3, rect))
    assert not report.ok
    assert any("duplicate in block 1" in v for v in report.violations)
    assert report.cells == ((2, 1), (3, 1))


def test_row_not_a_permutation():
    rect = np.array([[1, 2, 3, 3], [2, 3, 4, 1], [3, 4, 1, 2]])
    report = validate_auxiliary(AuxiliaryBlockDesign(4, 3, rect))
    assert any("row A not a permutation" in v for v in report.violations)


def test_shape_mismatch_is_structural():
    with pytest.raises(ShapeError):
        validate_auxiliary(AuxiliaryBlockDesign(5, 3, np.ones((3, 4), dtype=int)))


def test_invalid_design_refused_by_constructor():
    rect = np.array([[1, 2, 3, 4], [1, 3, 4, 2], [3, 4, 1, 2]])
    with pytest.raises(InvalidDesignError) as exc:
        to_square_array(AuxiliaryBlockDesign(4, 3, rect))
    assert exc.value.report.cells


def test_parameter_bounds():
    rect = np.array([[1, 2, 3], [2, 3, 1], [3, 1, 2]])
    assert not validate_auxiliary(AuxiliaryBlockDesign(3, 3, rect)).ok


def test_error_df():
    assert error_df(12, 3) == 11
    assert error_df(16, 6) == 60
    with pytest.raises(DesignError):
        error_df(12, 2)
    with pytest.raises(DesignError):
        error_df(5, 5)


def test_spacings():
    assert least_rotation((4, 5, 3)) == (3, 4, 5)
    assert spacings_of(12, [1, 4, 8]).spacings == (3, 4, 5)
    assert design_spacings(cyclic_auxiliary(12, [0, 3, 7])).spacings == (3, 4, 5)
    assert SpacingSequence(12, (3, 4, 5)).initial_block() == (0, 3, 7)
    with pytest.raises(DesignError):
        SpacingSequence(12, (3, 4, 4))
    with pytest.raises(DesignError, match="not cyclic"):
        design_spacings(fixture_design("bailey_speed.json"))


def test_rectangle_from_blocks_keeps_blocks(rng):
    aux = random_rectangle(rng, 11, 5)
    blocks = [sorted(b) for b in aux.blocks()]
    rebuilt = rectangle_from_blocks(11, blocks)
    assert validate_auxiliary(rebuilt).ok
    assert [sorted(b) for b in rebuilt.blocks()] == blocks


def test_json_round_trip(fig2b):
    assert loads_design(dumps_design(fig2b)) == fig2b
    aux = from_square_array(fig2b)
    assert loads_design(dumps_design(aux)) == aux
    json.loads(dumps_design(fig2b))


def test_malformed_json_reports_position():
    with pytest.raises(DesignParseError) as exc:
        loads_design('{"t": 4,\n  "k": }')
    assert exc.value.line == 2 and exc.value.column is not None


def test_bad_cell_code():
    with pytest.raises(DesignError):
        loads_design('{"kind": "square", "grid": [["X1"]]}')


def test_render_marks_controls(fig2b):
    text = render(fig2b).splitlines()
    assert text[1].split()[1:] == CYCLIC_LAYOUT.splitlines()[0].split()
    assert "108" in render(fig2b, show_tests=True)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=3, max_size=8))
def test_canonicalization_idempotent(spacings):
    seq = SpacingSequence(sum(spacings), tuple(spacings))
    once = seq.canonicalize()
    assert once.canonicalize() == once
    assert sorted(once.spacings) == sorted(spacings)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 14), st.integers(0, 2**32 - 1))
def test_round_trip_property(t, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(3, t))
    aux = random_rectangle(rng, t, k)
    assert from_square_array(to_square_array(aux)) == aux
