import numpy as np
import pytest

from lyfq import polycore, torusdyn, zeroline
from lyfq.randutil import SeededStream, haar_unitary
from lyfq.zeroline import TWO_PI
from conftest import ELL_ANTIDIAG, ELL_RUNNING


def test_layer_points_binomial(antidiag):
    np.testing.assert_allclose(torusdyn.layer_point(antidiag, 1, [np.pi / 2]), [5 * np.pi / 4, 3 * np.pi / 4])
    np.testing.assert_allclose(torusdyn.layer_point(antidiag, 2, [np.pi / 2]), [np.pi / 4, 7 * np.pi / 4])
    with pytest.raises(ValueError):
        torusdyn.layer_point(antidiag, 3, [0.1])


def test_layer_points_on_zero_set(running):
    g = SeededStream(3)
    for _ in range(1000 // 4):
        y = g.uniform(0, TWO_PI, 1)
        for j in range(1, 5):
            assert abs(polycore.eval_torus(running, torusdyn.layer_point(running, j, y))) <= 1e-9 * running.scale


def test_layers_exhaust_fiber(running):
    # 1-D scan along the diagonal through (y, 0) finds the same points
    y = 0.83
    zs = zeroline.find_zeros(running, [1.0, 1.0], 0, TWO_PI - 1e-9, x0=[y, 0.0])
    pts = np.array([torusdyn.layer_point(running, j, [y]) for j in range(1, 5)])
    t = np.sort(np.mod(pts[:, 1], TWO_PI))
    np.testing.assert_allclose(t, np.sort(zs.expanded()), atol=1e-8)


def test_sample_m_weights(antidiag, running):
    s = torusdyn.sample_m(running, [1.0, 1.0], 500, SeededStream(0))
    assert np.all(s.weight == 1.0)
    s = torusdyn.sample_m(antidiag, ELL_ANTIDIAG, 200, SeededStream(0))
    np.testing.assert_allclose(s.weight, (1 + np.sqrt(2)) / 2, atol=1e-8)
    s = torusdyn.sample_m(running, ELL_RUNNING, 2000, SeededStream(1))
    assert np.all(s.weight[s.regular] > 0)
    assert np.all((s.y > 0) & (s.y <= TWO_PI))
    assert np.all(torusdyn.on_zero_set(running, s.point))
    rec = s[0]
    assert isinstance(rec, torusdyn.LayerSample) and 1 <= rec.layer <= 4


@pytest.mark.parametrize("name", ["running", "antidiag", "product", "det3"])
def test_total_mass(name):
    p, ell = {
        "running": (polycore.running_example(), ELL_RUNNING),
        "antidiag": (polycore.binomial((1, 1)), ELL_ANTIDIAG),
        "product": (polycore.product_binomial((1, 1)), ELL_ANTIDIAG),
        "det3": (polycore.determinantal(haar_unitary(3, SeededStream(5))), np.array([1.0, np.sqrt(2), np.sqrt(3)])),
    }[name]
    exact = TWO_PI ** (p.n - 1) * float(np.dot(p.degree, ell))
    assert torusdyn.total_mass(p, ell, 10_000, SeededStream(2)) == pytest.approx(exact, rel=0.02)


def box(x):
    return (x[..., 0] <= np.pi).astype(float)


def test_orbit_average(antidiag):
    assert torusdyn.ergodic_orbit_average(antidiag, ELL_ANTIDIAG, box, 10_000) == pytest.approx(0.5, rel=0.02)
    one = lambda x: np.ones(x.shape[:-1])
    assert torusdyn.ergodic_orbit_average(antidiag, ELL_ANTIDIAG, one, 500) == 1.0


def test_space_average(antidiag, running):
    s = torusdyn.ergodic_space_average(antidiag, ELL_ANTIDIAG, box, 10_000, SeededStream(0))
    assert s.value == pytest.approx(0.5, rel=0.02)
    one = lambda x: np.ones(x.shape[:-1])
    s = torusdyn.ergodic_space_average(running, ELL_RUNNING, one, 10_000, SeededStream(1))
    assert s.value == pytest.approx(1.0, rel=0.02)
    # a shrinking neighbourhood of the singular point carries vanishing mass
    near = lambda x: (np.linalg.norm(np.angle(np.exp(1j * x)), axis=-1) < 1e-3).astype(float)
    s = torusdyn.ergodic_space_average(running, ELL_RUNNING, near, 10_000, SeededStream(2))
    assert s.value <= 1e-3


def test_orbit_and_space_agree_on_a_box(running):
    ell = np.array([1.0, np.sqrt(2)])
    h = lambda x: ((x[..., 0] > 1.0) & (x[..., 0] < 3.0) & (x[..., 1] > 2.0) & (x[..., 1] < 5.0)).astype(float)
    orbit = torusdyn.ergodic_orbit_average(running, ell, h, 10_000, x0=[0.3, 0.1])
    space = torusdyn.ergodic_space_average(running, ell, h, 20_000, SeededStream(4))
    assert abs(orbit - space.value) <= 3 * space.stderr
