import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment
from hypothesis import given, settings
from hypothesis import strategies as st

from lyfq import uniroots
from lyfq.uniroots import OffCircleRoot


def from_roots(r):
    return np.poly(r)[::-1]  # ascending


def test_roots_examples():
    np.testing.assert_allclose(sorted(uniroots.roots([1, 0, 1]), key=np.imag), [-1j, 1j], atol=1e-14)
    r = np.sort_complex(uniroots.roots([1, -2.5, 1]))
    np.testing.assert_allclose(r, [0.5, 2.0], atol=1e-14)


def test_roots_running_diagonal():
    c = 16 * np.array([1, -1, 0, -1, 1], dtype=complex)
    r = uniroots.roots(c)
    ref = [1, 1, np.exp(2j * np.pi / 3), np.exp(-2j * np.pi / 3)]
    for z in ref:
        assert np.min(np.abs(r - z)) < 1e-8


def test_angle_spectrum_examples():
    s = uniroots.angle_spectrum(from_roots([1, 1, 1]))
    np.testing.assert_allclose(s.angles, [0.0], atol=1e-12)
    assert s.mults.tolist() == [3]

    s = uniroots.angle_spectrum(16 * np.array([1, -1, 0, -1, 1]))
    np.testing.assert_allclose(s.angles, [0, 2 * np.pi / 3, 4 * np.pi / 3], atol=1e-9)
    assert s.mults.tolist() == [2, 1, 1]
    assert s.total == 4
    np.testing.assert_allclose(s.expanded(), [0, 0, 2 * np.pi / 3, 4 * np.pi / 3], atol=1e-9)

    with pytest.raises(OffCircleRoot) as info:
        uniroots.angle_spectrum([2, -1])
    assert info.value.root == pytest.approx(2)


def test_batch_matches_single():
    rng = np.random.default_rng(5)
    C = rng.normal(size=(20, 6)) + 1j * rng.normal(size=(20, 6))
    R = uniroots.batch_roots(C)
    for c, r in zip(C, R):
        assert np.all(np.abs(np.polyval(c[::-1], r)) < 1e-8 * np.abs(c).sum())


def test_cluster_angles_wraps():
    reps, mults = uniroots.cluster_angles(np.array([1e-9, 2 * np.pi - 1e-9, 1.0]), 1e-7)
    np.testing.assert_allclose(reps, [0.0, 1.0], atol=1e-12)
    assert mults.tolist() == [2, 1]


@given(st.lists(st.tuples(st.floats(0, 2 * np.pi, exclude_max=True), st.integers(1, 3)),
                min_size=1, max_size=7))
@settings(max_examples=80, deadline=None)
def test_unimodular_roots_recovered(pairs):
    angles = np.array([a for a, _ in pairs])
    mults = np.array([m for _, m in pairs])
    d = np.abs(np.angle(np.exp(1j * (angles[:, None] - angles[None, :]))))
    np.fill_diagonal(d, np.inf)
    # rounding the coefficients of packed triple roots already moves the exact
    # roots ~1e-4 off the circle, so only well separated clusters are a fair oracle
    if len(angles) > 1 and d.min() < 0.2:
        return
    roots = np.repeat(np.exp(1j * angles), mults)
    s = uniroots.angle_spectrum(from_roots(roots))
    assert s.total == mults.sum()
    exp = np.repeat(angles, mults)
    cost = np.abs(np.angle(np.exp(1j * (s.expanded()[:, None] - exp[None, :]))))
    row, col = linear_sum_assignment(cost)  # circular multiset match
    assert cost[row, col].max() < 1e-4  # triple roots are cube-root conditioned
