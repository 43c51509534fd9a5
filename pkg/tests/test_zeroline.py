import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lyfq import polycore, zeroline
from lyfq.randutil import SeededStream, haar_unitary
from lyfq.zeroline import TWO_PI
from conftest import ELL_ANTIDIAG, ELL_RUNNING

DATA = Path(__file__).parent / "data"


def circ(a):
    return np.angle(np.exp(1j * a))


def test_phase_spectrum_examples(running, antidiag):
    s = zeroline.phase_spectrum(running, [0, 0])
    np.testing.assert_allclose(s.expanded(), [0, 0, TWO_PI / 3, 2 * TWO_PI / 3], atol=1e-9)
    np.testing.assert_allclose(zeroline.phase_spectrum(antidiag, [0, 0]).expanded(), [0, np.pi], atol=1e-12)
    np.testing.assert_allclose(zeroline.phase_spectrum(antidiag, [np.pi / 2, 0]).expanded(),
                               [3 * np.pi / 4, 7 * np.pi / 4], atol=1e-12)


def test_track_step_binomial(antidiag):
    st0 = zeroline.start_track(antidiag, [1.0, 1.0], 0.3)
    st1 = zeroline.track_step(antidiag, st0, 0.1)
    np.testing.assert_allclose(st0.lifted - st1.lifted, [0.1, 0.1], atol=1e-12)


def test_track_step_diagonal_direction(running):
    c = 0.7
    st0 = zeroline.start_track(running, [c, c], 0.2)
    st1 = zeroline.track_step(running, st0, 0.5)
    np.testing.assert_allclose(st0.lifted - st1.lifted, c * 0.5, atol=1e-9)


def test_track_step_running(running):
    st0 = zeroline.start_track(running, ELL_RUNNING, 0.5)
    st1 = zeroline.track_step(running, st0, 0.3)
    assert abs((st0.lifted - st1.lifted).sum() - 0.3 * (5 * np.pi / 11 + 2)) <= 1e-8
    with pytest.raises(ValueError):
        zeroline.track_step(running, st0, 2.0)


def test_find_zeros_binomial(antidiag):
    zs = zeroline.find_zeros(antidiag, ELL_ANTIDIAG, 0, 10)
    np.testing.assert_allclose(zs.x, TWO_PI * np.arange(4) / (1 + np.sqrt(2)), atol=1e-9)
    assert zs.mult.tolist() == [1, 1, 1, 1]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_find_zeros_product_binomial(n):
    p = polycore.product_binomial((1,) * n)
    zs = zeroline.find_zeros(p, TWO_PI * np.ones(n), -0.5, 2.5)
    np.testing.assert_allclose(zs.x, [0, 1, 2], atol=1e-9)
    assert zs.mult.tolist() == [n] * 3


def test_running_regression_locked(running):
    with open(DATA / "running_zeros_6pi.csv") as fh:
        rows = list(csv.DictReader(fh))
    zs = zeroline.find_zeros(running, ELL_RUNNING, 0, 6 * np.pi)
    assert len(zs) == len(rows)
    np.testing.assert_allclose(zs.x, [float(r["x"]) for r in rows], atol=1e-9)
    assert zs.mult.tolist() == [int(r["mult"]) for r in rows]
    assert 7 <= zs.count <= 14


def test_reported_zeros_vanish_and_multiplicity_derivatives(running):
    zs = zeroline.find_zeros(running, ELL_RUNNING, 0, 6 * np.pi)
    f = lambda t: polycore.eval_torus(running, np.multiply.outer(t, ELL_RUNNING))
    assert np.abs(f(zs.x)).max() <= 1e-8 * running.scale
    h = 1e-4
    for x, m in zip(zs.x, zs.mult):
        if m >= 2:
            d1 = (f(x + h) - f(x - h)) / (2 * h)
            d1_ref = np.sum(np.abs(running.coeffs) * (running.exps @ ELL_RUNNING))  # bound on |f'|
            assert abs(d1) <= 1e-4 * d1_ref


def test_secular_function(antidiag, running):
    x = np.linspace(0.1, 6, 50)
    g = zeroline.secular_value(antidiag, [1.0, 1.0], x)
    np.testing.assert_allclose(np.abs(g), np.abs(2 * np.sin(x)), atol=1e-12)
    assert abs(zeroline.secular_value(running, ELL_RUNNING, 0.0)) <= 1e-12
    zs = zeroline.find_zeros(running, ELL_RUNNING, 0, 6 * np.pi)
    assert np.abs(zeroline.secular_value(running, ELL_RUNNING, zs.x)).max() <= 1e-8 * running.scale
    # double zero: touches without a sign change
    g = zeroline.secular_value(running, ELL_RUNNING, np.array([-1e-3, 1e-3]))
    assert g[0] * g[1] > 0


@pytest.mark.parametrize("name", ["running", "antidiag", "product"])
def test_cross_validation(name, running, antidiag):
    p, ell = {"running": (running, ELL_RUNNING), "antidiag": (antidiag, ELL_ANTIDIAG),
              "product": (polycore.product_binomial((1, 1)), ELL_ANTIDIAG)}[name]
    rep = zeroline.cross_validate(p, ell, 0, 6 * np.pi, x0=[0.2, 0.0])
    assert rep.matched, rep.to_dict()


def test_density_and_max_gap(running, antidiag):
    zs = zeroline.find_zeros(running, ELL_RUNNING, 0, 300)
    assert zeroline.density_check(zs, running.degree, [5, 20, 100]) <= 4
    assert zeroline.max_gap_check(zs) <= zeroline.max_gap_bound(running.degree, ELL_RUNNING) + 1e-9
    assert zeroline.max_gap_bound(running.degree, ELL_RUNNING) == pytest.approx(8 * np.pi * 11 / (5 * np.pi + 22))

    zb = zeroline.find_zeros(antidiag, [1.0, 1.0], 0, 50)
    assert zeroline.density_check(zb, antidiag.degree, [3.3, 7.1]) <= 2
    np.testing.assert_allclose(zb.gaps(), np.pi, atol=1e-9)

    p = polycore.product_binomial((1, 1))
    zp = zeroline.find_zeros(p, TWO_PI * np.ones(2), 0, 20)
    assert zeroline.max_gap_check(zp) == pytest.approx(1.0, abs=1e-9)
    assert zeroline.max_gap_bound(p.degree, TWO_PI * np.ones(2)) == pytest.approx(1.0)
    # integer windows [x, x+T] catch |d| endpoint mass: error |d| (1 - frac) style
    assert zeroline.density_check(zp, p.degree, [5.0]) == pytest.approx(2.0, abs=1e-9)


def test_first_return_orbit(antidiag, running):
    pts, taus = zeroline.first_return_orbit(antidiag, ELL_ANTIDIAG, [0, 0], 20)
    np.testing.assert_allclose(taus, TWO_PI / (1 + np.sqrt(2)), atol=1e-9)
    np.testing.assert_allclose(circ(pts.sum(axis=1)), 0, atol=1e-9)

    p = polycore.product_binomial((1, 1))
    pts, taus = zeroline.first_return_orbit(p, TWO_PI * np.ones(2), [0, 0], 5)
    np.testing.assert_allclose(taus, 1.0, atol=1e-9)
    np.testing.assert_allclose(circ(pts), 0, atol=1e-9)

    _, taus = zeroline.first_return_orbit(running, ELL_RUNNING, [0, 0], 1000)
    assert taus.size == 1000 and taus.max() <= zeroline.max_gap_bound(running.degree, ELL_RUNNING) + 1e-9
    with pytest.raises(ValueError):
        zeroline.first_return_orbit(running, ELL_RUNNING, [1.0, 0.3], 3)


def test_scale_action_shift(running):
    t0 = 1.37
    q = polycore.scale_action(running, t0 * ELL_RUNNING)
    zq = zeroline.find_zeros(q, ELL_RUNNING, 0, 15, x0=[0.1, 0.4])
    zp = zeroline.find_zeros(running, ELL_RUNNING, t0, 15 + t0, x0=[0.1, 0.4])
    np.testing.assert_allclose(zq.x, zp.x - t0, atol=1e-9)
    assert zq.mult.tolist() == zp.mult.tolist()


def _examples():
    return [polycore.running_example(), polycore.determinantal(haar_unitary(4, SeededStream(4)))]


@pytest.mark.parametrize("p", _examples(), ids=["running", "det4"])
def test_phase_identities(p):
    g = SeededStream(21)
    x = g.uniform(0, TWO_PI, (300, p.n))
    ang = zeroline.raw_angles(p, x)
    ang0 = zeroline.raw_angles(p, np.zeros(p.n))
    d = np.asarray(p.degree, float)
    # sum law, mod 2 pi
    assert np.abs(circ(ang.sum(axis=1) + x @ d - ang0.sum())).max() <= 1e-8
    # product formula
    lead = p.coeff(p.degree)
    prod = lead * np.exp(1j * x @ d) * np.prod(1 - np.exp(1j * ang), axis=1)
    assert np.abs(polycore.eval_torus(p, x) - prod).max() <= 1e-8 * p.scale
    # diagonal shift and lattice invariance
    t = g.uniform(-3, 3, 300)
    shifted = zeroline.raw_angles(p, x + t[:, None])
    expect = np.sort(np.mod(ang - t[:, None], TWO_PI), axis=1)
    dist = np.abs(circ(np.sort(np.mod(shifted, TWO_PI), axis=1)[:, :, None] - expect[:, None, :])).min(axis=2)
    assert dist.max() <= 1e-7
    e = np.zeros(p.n)
    e[0] = TWO_PI
    np.testing.assert_allclose(zeroline.raw_angles(p, x + e), ang, atol=1e-7)


def test_lift_windows():
    raw = np.array([0.5, 2.0, 4.0])
    out = zeroline.lift(raw, raw.sum() + TWO_PI)
    np.testing.assert_allclose(out, [2.0, 4.0, 0.5 + TWO_PI])
    assert np.all(np.diff(out) > 0)


@given(st.floats(0, TWO_PI), st.floats(0, TWO_PI), st.floats(0.3, 3.0), st.floats(0.3, 3.0))
@settings(max_examples=15, deadline=None)
def test_random_line_is_consistent(a, b, l1, l2):
    p = polycore.running_example()
    ell = np.array([l1, l2])
    zs = zeroline.find_zeros(p, ell, 0, 12, x0=[a, b])
    dl = float(np.dot(p.degree, ell))
    assert abs(zs.count - dl * 12 / TWO_PI) <= p.total_degree + 1e-9
    assert zeroline.cross_validate(p, ell, 0, 12, zs=zs).matched
