import math

import numpy as np
import pytest

from eigrefine import (
    InputError,
    SupportSelectionError,
    alpha_grid,
    find_alpha,
    select_support,
)


def test_grid_frozen_values_n100():
    grid = alpha_grid(100)
    assert grid.depth == pytest.approx(3.46935, abs=1e-4)
    expected = (0.46599, 0.21715, 0.10119, 0.07071)
    assert len(grid.values) == 4
    for got, want in zip(grid.values, expected):
        assert got == pytest.approx(want, abs=5e-5)


def test_grid_last_element_is_inv_sqrt_2n():
    for n in (8, 100, 513, 2048, 10_000):
        grid = alpha_grid(n)
        assert abs(grid.values[-1] - 1.0 / math.sqrt(2 * n)) <= 1e-12


def test_grid_strictly_descending():
    for n in (8, 64, 1000, 4096):
        vals = alpha_grid(n).values
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_grid_rejects_small_n():
    for n in (1, 2, 7):
        with pytest.raises(InputError):
            alpha_grid(n)


def test_find_alpha_basis_vector():
    v = np.zeros(100)
    v[3] = 1.0
    assert find_alpha(v) == pytest.approx(1.0 / math.sqrt(math.log(100)), rel=1e-12)


def test_find_alpha_requires_unit_norm():
    with pytest.raises(InputError):
        find_alpha(np.ones(100))


def test_find_alpha_no_admissible_level():
    # n=8 ladder: thresholds ~(0.6934, 0.4809, 0.3335, 0.25) with lower count
    # bounds ~(0.48, 1.0, 2.08, 3.70). Three decreasing head entries keep each
    # level's count at or below its bound, and the flat tail stays under 0.25.
    head = np.array([0.693, 0.48, 0.33])
    tail_mass = 1.0 - float(np.sum(head**2))
    v = np.concatenate([head, np.full(5, math.sqrt(tail_mass / 5))])
    assert np.max(v[3:]) < 0.25  # the tail never enters any level's count
    with pytest.raises(SupportSelectionError):
        find_alpha(v)


def test_select_support_uniform_hits_last_level():
    u = np.ones(100) / 10.0
    sel = select_support(u, alpha_grid(100), beta=0.0, mode="grid")
    assert sel.alpha_hat == pytest.approx(1.0 / math.sqrt(200), abs=1e-12)
    assert sel.size == 100
    assert not sel.relaxed_gap
    np.testing.assert_array_equal(sel.q, np.ones(100))


def test_select_support_spiked_vector_picks_spike():
    u = np.zeros(100)
    u[5] = -0.9
    rest = np.full(99, math.sqrt((1 - 0.81) / 99))
    u[np.arange(100) != 5] = rest
    sel = select_support(u, mode="grid")
    assert 5 in sel.support
    assert sel.q[5] == -1.0
    others = sel.support[sel.support != 5]
    assert np.all(sel.q[others] == 1.0)


def test_select_support_gap_condition_relaxes():
    # One coordinate sits inside every level's margin band, so beta > 0 can
    # never be satisfied and the scan must fall back with the flag set.
    grid = alpha_grid(100)
    u = np.zeros(100)
    u[0] = 1.0
    sel_plain = select_support(u, grid, beta=0.0, mode="grid")
    assert not sel_plain.relaxed_gap

    v = np.zeros(100)
    # Place mass exactly at each grid value so every admissible level has an
    # occupied band for beta=0.5.
    for i, alpha in enumerate(grid.values):
        v[i] = alpha * 1.001
    v /= np.linalg.norm(v)
    sel = select_support(v, alpha_grid(100), beta=0.5, mode="grid")
    assert sel.relaxed_gap
    assert sel.size >= 1


def test_select_support_grid_none_found():
    u = np.zeros(100)
    u[0] = 1e-12  # all counts are zero at every level
    with pytest.raises(SupportSelectionError):
        select_support(u, mode="grid")


def test_select_support_median_odd_is_ceil_half():
    u = np.arange(1.0, 102.0)
    u /= np.linalg.norm(u)
    sel = select_support(u, mode="median")
    assert sel.size == math.ceil(101 / 2)
    assert sel.mode == "median"
    assert not sel.relaxed_gap


def test_select_support_median_even_includes_lower_median():
    u = np.arange(1.0, 101.0)
    u /= np.linalg.norm(u)
    sel = select_support(u, mode="median")
    # Lower median plus everything above it: n/2 + 1 coordinates.
    assert sel.size == 51


def test_select_support_median_sign_pattern():
    u = np.array([0.9, -0.3, 0.2, -0.1, 0.05, 0.01, 0.005, 0.001])
    u /= np.linalg.norm(u)
    sel = select_support(u, mode="median")
    for i in sel.support:
        assert sel.q[i] == (1.0 if u[i] >= 0 else -1.0)
    outside = np.setdiff1d(np.arange(8), sel.support)
    np.testing.assert_array_equal(sel.q[outside], np.ones(len(outside)))


def test_select_support_validation():
    u = np.ones(100) / 10.0
    with pytest.raises(InputError):
        select_support(u, beta=1.0)
    with pytest.raises(InputError):
        select_support(u, mode="other")
    with pytest.raises(InputError):
        select_support(u, alpha_grid(64), mode="grid")  # grid size mismatch
