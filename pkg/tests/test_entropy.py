import math

import numpy as np
import pytest

from eigrefine import (
    CoverSet,
    InputError,
    PackingInfeasibleError,
    RowProfile,
    d_2inf_signed,
    enumerate_cover_T,
    greedy_packing,
    quantize_profile,
    sample_profile,
    verify_cover,
)
from oracles import quantize_reference_bound


def test_row_profile_validation():
    RowProfile(np.array([1.0, 0.0]), 1)
    with pytest.raises(InputError):
        RowProfile(np.array([1.0, 0.5]), 1)  # norm exceeds sqrt(r)
    with pytest.raises(InputError):
        RowProfile(np.array([-0.6, 0.8]), 1)  # negative entry
    with pytest.raises(InputError):
        RowProfile(np.array([1.2, 0.3]), 1)  # sup-norm above 1 (and norm off)


def test_quantize_trivial_grid_points():
    v = quantize_profile(RowProfile(np.array([1.0, 0.0]), 1), 4)
    np.testing.assert_allclose(v.h, [1.0, 0.0], atol=1e-15)
    half = math.sqrt(0.5)
    v = quantize_profile(RowProfile(np.array([half, half]), 1), 4)
    np.testing.assert_allclose(v.h, [half, half], atol=1e-15)


def test_quantize_worked_example():
    h = RowProfile(np.array([math.sqrt(0.3), math.sqrt(0.7)]), 1)
    v = quantize_profile(h, 4)
    np.testing.assert_allclose(v.h, [0.5, math.sqrt(0.75)], atol=1e-12)
    dev = float(np.max(np.abs(h.h - v.h)))
    assert dev == pytest.approx(0.047723, abs=1e-6)
    assert dev <= 0.5


def test_quantize_accepts_plain_arrays():
    v = quantize_profile(np.array([math.sqrt(0.3), math.sqrt(0.7)]), 4)
    np.testing.assert_allclose(v.h, [0.5, math.sqrt(0.75)], atol=1e-12)


def test_quantize_property_sweep():
    # Output entries stay on the 1/s grid, sum to rs exactly, never exceed
    # s+1, and sit within 1/sqrt(s) of the input in sup norm.
    rng = np.random.default_rng(0)
    for _ in range(400):
        n = int(rng.integers(2, 21))
        r = int(rng.integers(1, min(n, 4)))
        s = int(rng.integers(1, 101))
        h = sample_profile(n, r, rng)
        v = quantize_profile(h, s)
        z = v.h * v.h * s
        zi = np.rint(z)
        np.testing.assert_allclose(z, zi, atol=1e-6)
        assert int(round(float(z.sum()))) == r * s
        assert np.all(zi <= s + 1)
        assert quantize_reference_bound(h.h, v.h, s)


def test_enumerate_cover_small_examples():
    cover = enumerate_cover_T(2, 1, 4)
    assert cover.s == 4
    assert len(cover) == 5
    assert set(cover.z_tuples) == {(0, 4), (1, 3), (2, 2), (3, 1), (4, 0)}
    cover = enumerate_cover_T(2, 2, 1)
    assert len(cover) == 3
    assert set(cover.z_tuples) == {(0, 2), (1, 1), (2, 0)}


def test_enumerate_cover_orders_lexicographically():
    cover = enumerate_cover_T(3, 1, 2)
    assert list(cover.z_tuples) == sorted(cover.z_tuples)


def test_enumerate_cover_respects_entry_cap():
    # r*s = 6 with s = 2 allows entries up to s+1 = 3 only.
    cover = enumerate_cover_T(3, 3, 2)
    for z in cover.z_tuples:
        assert max(z) <= 3
        assert sum(z) == 6


def test_enumerate_cover_cardinality_bound():
    for n, r, s in [(2, 1, 4), (3, 1, 3), (4, 2, 2), (3, 2, 3)]:
        cover = enumerate_cover_T(n, r, s)
        assert len(cover) <= math.comb(n + r * s - 1, r * s)


def test_enumerate_cover_budget_error_reports_bound():
    with pytest.raises(InputError) as exc:
        enumerate_cover_T(30, 3, 30, cap=1000)
    assert str(math.comb(30 + 90 - 1, 90)) in str(exc.value)


def test_cover_membership_and_vectors():
    cover = enumerate_cover_T(2, 1, 4)
    assert (0, 4) in cover
    assert (2, 2) in cover
    assert (5, 0) not in cover
    v = np.array([0.5, math.sqrt(0.75)])
    assert v in cover
    vecs = cover.vectors()
    assert vecs.shape == (5, 2)
    np.testing.assert_allclose(np.sum(vecs * vecs, axis=1), 1.0, atol=1e-12)


def test_exterior_cover_membership_sweep():
    # Frozen cross-check: every sampled profile quantizes onto a cover
    # element within 1/sqrt(s) in sup norm.
    rng = np.random.default_rng(1)
    n, r, s = 6, 2, 9
    cover = enumerate_cover_T(n, r, s)
    for _ in range(1000):
        h = sample_profile(n, r, rng)
        v = quantize_profile(h, s)
        assert v in cover
        assert float(np.max(np.abs(h.h - v.h))) <= 1.0 / 3.0 + 1e-12


def test_verify_cover_runs_clean():
    rng = np.random.default_rng(2)
    cover = enumerate_cover_T(4, 1, 5)
    worst = verify_cover(cover, draws=200, rng=rng)
    assert worst <= 1.0 / math.sqrt(5) + 1e-12


def test_sample_profile_lands_in_domain():
    rng = np.random.default_rng(3)
    for _ in range(100):
        h = sample_profile(8, 2, rng)
        assert isinstance(h, RowProfile)
        assert abs(float(np.linalg.norm(h.h)) - math.sqrt(2)) <= 1e-10


def test_greedy_packing_diameter_gives_one():
    rng = np.random.default_rng(4)
    n, r, mu = 32, 1, 8.0
    delta = 2.0 * math.sqrt(r * mu / n) + 0.01
    assert greedy_packing(n, r, mu, delta, budget=200, rng=rng) == 1


def test_greedy_packing_separated_points_exist():
    rng = np.random.default_rng(5)
    count = greedy_packing(32, 1, 8.0, 0.25, budget=5000, rng=rng)
    assert count >= 2


def test_greedy_packing_monotone_in_delta():
    # Same seed and budget: a looser separation requirement can only keep
    # more of the identical candidate stream.
    counts = []
    for delta in (0.1, 0.2, 0.4):
        rng = np.random.default_rng(6)
        counts.append(greedy_packing(32, 1, 8.0, delta, budget=2000, rng=rng))
    assert counts[0] >= counts[1] >= counts[2]


def test_greedy_packing_accepted_points_are_separated():
    # Rebuild the accepted set independently and confirm pairwise gaps.
    rng = np.random.default_rng(7)
    n, r, mu, delta = 16, 2, 4.0, 0.8
    budget = 200
    count = greedy_packing(n, r, mu, delta, budget=budget, rng=rng)
    assert 1 <= count < budget
    rng = np.random.default_rng(7)
    from eigrefine import haar_basis

    accepted = []
    cap = math.sqrt(mu * r / n)
    for _ in range(budget):
        U = haar_basis(n, r, rng)
        if float(np.max(np.linalg.norm(U, axis=1))) > cap:
            continue
        if all(d_2inf_signed(U, V, exhaustive=True) > delta for V in accepted):
            accepted.append(U)
    assert len(accepted) == count
    for i in range(len(accepted)):
        for j in range(i + 1, len(accepted)):
            assert d_2inf_signed(accepted[i], accepted[j], exhaustive=True) > delta


def test_greedy_packing_infeasible_mu():
    # mu = 1 forces perfectly flat rows; Haar draws essentially never land
    # inside, so the probe trips the acceptance-rate guard.
    rng = np.random.default_rng(8)
    with pytest.raises(PackingInfeasibleError):
        greedy_packing(64, 1, 1.0, 0.1, budget=20000, rng=rng)


def test_greedy_packing_validation():
    rng = np.random.default_rng(9)
    with pytest.raises(InputError):
        greedy_packing(32, 1, 0.5, 0.1, budget=100, rng=rng)
    with pytest.raises(InputError):
        greedy_packing(32, 1, 40.0, 0.1, budget=100, rng=rng)
    with pytest.raises(InputError):
        greedy_packing(32, 1, 8.0, -0.1, budget=100, rng=rng)
    with pytest.raises(InputError):
        greedy_packing(32, 11, 1.5, 0.1, budget=100, rng=rng)


def test_cover_set_rejects_bad_tuples():
    bound = math.comb(5, 4)
    with pytest.raises(InputError):  # sum not r*s
        CoverSet(n=2, r=1, s=4, z_tuples=((0, 3),), binomial_bound=bound)
    with pytest.raises(InputError):  # entry above s+1
        CoverSet(n=2, r=2, s=2, z_tuples=((4, 0), (0, 4)),
                 binomial_bound=math.comb(5, 4))
    with pytest.raises(InputError):  # wrong length
        CoverSet(n=3, r=1, s=4, z_tuples=((0, 4),), binomial_bound=bound)
