from itertools import combinations

import numpy as np
import pytest

from sqarray.core import DesignError, cyclic_auxiliary, from_square_array, to_square_array
from sqarray.metrics import (
    DisconnectedError,
    abd_variance,
    aux_information,
    check_ct_tt_relation,
    circulant_eigenvalues,
    closed_form_metrics,
    cyclic_abd_batch,
    cyclic_abd_variance,
    cyclic_information_row,
    direct_metrics,
    is_psd_zero_rowsum,
    metrics_from_abd,
    projected_information,
    square_information,
    youden_lambda,
    youden_metrics,
)

from conftest import fixture_design, random_rectangle, random_square


def pairwise_average(pinv, idx_a, idx_b=None):
    """Mean of var(a - b) = p_aa + p_bb - 2 p_ab by explicit loops."""
    if idx_b is None:
        pairs = list(combinations(idx_a, 2))
    else:
        pairs = [(a, b) for a in idx_a for b in idx_b]
    return sum(pinv[a, a] + pinv[b, b] - 2 * pinv[a, b] for a, b in pairs) / len(pairs)


def test_square_information_matches_projection(fig2b):
    fast = square_information(fig2b).matrix
    slow = projected_information(fig2b).matrix
    assert np.abs(fast - slow).max() < 1e-10


def test_square_information_matches_projection_non_cyclic():
    sq = to_square_array(fixture_design("fig4a.json"))
    assert np.abs(square_information(sq).matrix - projected_information(sq).matrix).max() < 1e-10


def test_direct_metrics_against_double_loop():
    sq = to_square_array(fixture_design("fig4a.json"))
    info = square_information(sq)
    p = np.linalg.pinv(info.matrix)
    ctrl, tests = list(range(3)), list(range(3, info.dim))
    m = direct_metrics(sq)
    assert m.a_cc == pytest.approx(pairwise_average(p, ctrl), abs=1e-9)
    assert m.a_ct == pytest.approx(pairwise_average(p, ctrl, tests), abs=1e-9)
    assert m.a_tt == pytest.approx(pairwise_average(p, tests), abs=1e-9)


def test_cyclic_reference_values(fig2b):
    m = direct_metrics(fig2b)
    assert m.a_abd == pytest.approx(0.9911, abs=5e-4)
    assert m.a_cc == pytest.approx(1 / 6, abs=1e-9)
    assert m.a_ct == pytest.approx(2.0910, abs=5e-4)
    assert m.a_tt == pytest.approx(4.0341, abs=5e-4)
    assert m.error_df == 11
    assert m.max_difference(closed_form_metrics(from_square_array(fig2b))) < 1e-9


@pytest.mark.parametrize("t,k", [(7, 3), (10, 4), (13, 5)])
def test_control_pairs_average_two_over_t(rng, t, k):
    for _ in range(3):
        m = direct_metrics(random_square(rng, t, k))
        assert m.a_cc == pytest.approx(2 / t, abs=1e-9)


@pytest.mark.parametrize("block", [[0, 3, 7], [0, 1, 4], [0, 1, 2], [0, 2, 5, 6]])
def test_three_abd_routes_agree(block):
    t = 12
    general = abd_variance(cyclic_auxiliary(t, block))
    dft = cyclic_abd_variance(t, block)
    batch = cyclic_abd_batch(t, np.array([sorted(block)]))[0]
    assert dft == pytest.approx(general, abs=1e-12)
    assert batch == pytest.approx(general, abs=1e-12)


def test_circulant_eigenvalues_match_dense():
    row = cyclic_information_row(12, [0, 3, 7])
    dense = np.array([np.roll(row, i) for i in range(12)])
    assert np.allclose(sorted(circulant_eigenvalues(row)), np.linalg.eigvalsh(dense), atol=1e-10)


def test_disconnected_auxiliary():
    aux = cyclic_auxiliary(12, [0, 4, 8])
    with pytest.raises(DisconnectedError):
        abd_variance(aux)
    with pytest.raises(DisconnectedError):
        cyclic_abd_variance(12, [0, 4, 8])
    assert np.isnan(cyclic_abd_batch(12, np.array([[0, 4, 8]]))[0])
    report = direct_metrics(to_square_array(aux))
    assert not report.connected and report.a_tt is None


def test_youden_formula():
    # cyclic (7,3,1) difference set gives a Youden square
    direct = direct_metrics(to_square_array(cyclic_auxiliary(7, [0, 1, 3])))
    closed = youden_metrics(7, 3)
    assert direct.max_difference(closed) < 1e-9
    assert youden_lambda(16, 6) == 2
    with pytest.raises(DesignError):
        youden_lambda(12, 3)
    with pytest.raises(DesignError):
        youden_metrics(7, 3, lam=2)


def test_youden_square_fixture():
    sq = to_square_array(fixture_design("youden_16_6.json"))
    m = direct_metrics(sq)
    assert m.a_ct == pytest.approx(1.4375, abs=5e-4)
    assert m.a_tt == pytest.approx(2.7547, abs=5e-4)
    assert m.max_difference(youden_metrics(16, 6)) < 1e-9


def test_ct_tt_relation(rng):
    for t, k in [(8, 3), (11, 4), (12, 5)]:
        m = direct_metrics(random_square(rng, t, k))
        assert check_ct_tt_relation(m, t, k)
    bad = metrics_from_abd(1.0, 12, 3)
    assert not check_ct_tt_relation(type(bad)(bad.a_abd, bad.a_cc, bad.a_ct + 1e-6, bad.a_tt,
                                              bad.error_df, True, bad.method), 12, 3)


def test_information_matrices_psd(rng):
    for _ in range(5):
        aux = random_rectangle(rng, 9, 3)
        assert is_psd_zero_rowsum(aux_information(aux))
        assert is_psd_zero_rowsum(square_information(to_square_array(aux)))


def test_closed_form_identity_at_balance():
    # the closed forms reduce to 2, 1 + 1/t at the unattainable bound a_abd = 2/t
    m = metrics_from_abd(2 / 12, 12, 3)
    assert m.a_tt == pytest.approx(2.0)
    assert m.a_ct == pytest.approx(1 + 1 / 12)
