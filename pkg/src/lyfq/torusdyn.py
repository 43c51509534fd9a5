"""Layers of the torus zero set, the transversal measure and ergodic averages.

The zero set is the union of ``|d|`` layers ``phi_j(y) = (y, 0) + theta_j(y, 0) * (1, ..., 1)``.
The transversal measure for direction ``ell`` has density
``-<grad theta_j(y, 0), ell>`` against ``dy`` on layer ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .polycore import MultiPoly, eval_torus
from .randutil import as_generator
from .uniroots import CLUSTER_RADIUS
from .zeroline import TWO_PI, find_zeros, phase_spectrum, raw_angles

FD_STEP = 1e-5
SEPARATION_MIN = 1e-4


@dataclass
class LayerSample:
    y: np.ndarray
    layer: int
    point: np.ndarray
    weight: float
    regular: bool
    mult: int = 1


@dataclass
class LayerSamples:
    """Array form of many :class:`LayerSample` records."""

    y: np.ndarray
    layer: np.ndarray
    point: np.ndarray
    weight: np.ndarray
    regular: np.ndarray
    mult: np.ndarray

    def __len__(self):
        return len(self.layer)

    def __getitem__(self, i) -> LayerSample:
        return LayerSample(self.y[i], int(self.layer[i]), self.point[i], float(self.weight[i]),
                           bool(self.regular[i]), int(self.mult[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))


def _base(y: np.ndarray) -> np.ndarray:
    return np.concatenate([y, np.zeros(y.shape[:-1] + (1,))], axis=-1)


def layer_point(p: MultiPoly, j: int, y) -> np.ndarray:
    """``phi_j(y)`` reduced mod ``2 pi``; layers are numbered from 1 by ascending angle."""
    D = p.total_degree
    if not 1 <= j <= D:
        raise ValueError(f"layer index must be in 1..{D}")
    base = _base(np.atleast_1d(np.asarray(y, float)))
    theta = phase_spectrum(p, base).expanded()[j - 1]
    return np.mod(base + theta, TWO_PI)


def _circ(a):
    return np.angle(np.exp(1j * a))


def _nearest(angles: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Entry of each row of ``angles`` circularly closest to ``target``."""
    d = np.abs(_circ(angles - target[:, None]))
    return np.take_along_axis(angles, np.argmin(d, axis=1)[:, None], axis=1)[:, 0]


def sample_m(p: MultiPoly, ell, count: int, rng=None, step: float = FD_STEP,
             separation: float = SEPARATION_MIN) -> LayerSamples:
    """Samples of the transversal measure: uniform ``y`` and layer, with density weights."""
    if count < 1:
        raise ValueError("count must be positive")
    g = as_generator(rng)
    ell = np.asarray(ell, float)
    n, D = p.n, p.total_degree
    y = TWO_PI - g.uniform(0, TWO_PI, (count, n - 1))  # (0, 2pi]
    layer = g.integers(1, D + 1, count)
    base = _base(y)
    ang = raw_angles(p, base)
    theta = ang[np.arange(count), layer - 1]
    point = np.mod(base + theta[:, None], TWO_PI)

    # cyclic gaps: tiny ones are inside a multiple root, small ones are near-collisions
    gaps = np.diff(np.concatenate([ang, ang[:, :1] + TWO_PI], axis=1), axis=1)
    regular = ~np.any((gaps > CLUSTER_RADIUS) & (gaps < separation), axis=1)
    mult = (np.abs(_circ(ang - theta[:, None])) <= CLUSTER_RADIUS).sum(axis=1)

    if np.all(ell == 1.0):
        weight = np.ones(count)
    else:
        grad = np.zeros((count, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = step
            up = _nearest(raw_angles(p, base + e), theta)
            dn = _nearest(raw_angles(p, base - e), theta)
            grad[:, k] = _circ(up - dn) / (2 * step)
        weight = -grad @ ell
    regular &= weight > 0
    return LayerSamples(y, layer, point, weight, regular, mult)


def ergodic_orbit_average(p: MultiPoly, ell, h: Callable, N: int, x0=None) -> float:
    """Mean of ``h`` over the first ``N`` zeros (with multiplicity) of the flow from ``x0``."""
    ell = np.asarray(ell, float)
    x0 = np.zeros(p.n) if x0 is None else np.asarray(x0, float)
    dl = float(np.dot(p.degree, ell))
    span = 1.05 * N * TWO_PI / dl + 10.0
    while True:
        zs = find_zeros(p, ell, 0.0, span, x0=x0)
        ts = zs.expanded()
        if ts.size >= N:
            break
        span *= 1.5
    pts = np.mod(x0 + np.multiply.outer(ts[:N], ell), TWO_PI)
    return float(np.mean(h(pts)))


@dataclass
class SpaceAverage:
    value: float
    stderr: float
    used: int
    excluded: int


def ergodic_space_average(p: MultiPoly, ell, h: Callable, count: int, rng=None) -> SpaceAverage:
    """Monte Carlo of ``int mult * h dm_ell / ((2 pi)^(n-1) <d, ell>)``.

    Each sampled layer already carries its own copy of a repeated root, so the
    layer sum counts multiplicity by itself and no extra factor is applied.
    """
    ell = np.asarray(ell, float)
    s = sample_m(p, ell, count, rng)
    dl = float(np.dot(p.degree, ell))
    D = p.total_degree
    vals = (D / dl) * np.asarray(h(s.point), float) * s.weight
    vals = vals[s.regular]
    se = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else float("nan")
    return SpaceAverage(float(vals.mean()), se, int(vals.size), int((~s.regular).sum()))


def total_mass(p: MultiPoly, ell, count: int, rng=None) -> float:
    """Estimate of ``m_ell`` of the zero set; the exact value is ``(2 pi)^(n-1) <d, ell>``
    for square-free ``p``."""
    s = sample_m(p, ell, count, rng)
    w = s.weight[s.regular]
    return float(w.mean() * p.total_degree * TWO_PI ** (p.n - 1))


def on_zero_set(p: MultiPoly, pts, tol: float = 1e-8) -> np.ndarray:
    return np.abs(eval_torus(p, pts)) <= tol * p.scale
