"""Gap distributions: empirical, Monte Carlo over the torus, and reference ensembles."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.stats import wasserstein_distance

from .polycore import MultiPoly, determinantal, power_substitute
from .randutil import as_generator, haar_unitary
from .zeroline import TWO_PI, ZeroSet, max_gap_bound, raw_angles

ATOM_WINDOW_REL = 1e-3
ATOM_THRESHOLD = 0.05
CHUNK = 20000


@dataclass(frozen=True)
class Atom:
    location: float
    mass: float


@dataclass(frozen=True)
class GapDistribution:
    """Weighted gap samples; weights are normalized to sum to one on construction."""

    gaps: np.ndarray
    weights: np.ndarray
    atoms: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.gaps, float).ravel()
        w = np.broadcast_to(np.asarray(self.weights, float), g.shape).astype(float)
        if g.size == 0:
            raise ValueError("no gap samples")
        if np.any(g < 0) or np.any(w <= 0):
            raise ValueError("gaps must be nonnegative and weights positive")
        order = np.argsort(g, kind="stable")
        g, w = g[order], w[order] / w.sum()
        g.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "gaps", g)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.gaps.size

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def cdf(self, x) -> np.ndarray:
        cw = np.concatenate([[0.0], np.cumsum(self.weights)])
        return cw[np.searchsorted(self.gaps, x, side="right")]

    def histogram(self, bins=50, range=None):
        """``(edges, mass)`` with mass per bin summing to the covered weight.

        The default range is ``[0, max gap]``, which also copes with point masses.
        """
        if range is None:
            hi = float(self.gaps[-1])
            range = (0.0, hi if hi > 0 else 1.0)
        mass, edges = np.histogram(self.gaps, bins=bins, range=range, weights=self.weights)
        return edges, mass

    def with_atoms(self, atoms) -> "GapDistribution":
        return replace(self, atoms=tuple(atoms))


# -- builders -----------------------------------------------------------------

def empirical_gaps(zs: ZeroSet, d=None) -> GapDistribution:
    """Consecutive differences of the zero list expanded by multiplicity."""
    x = zs.expanded()
    if x.size < 2:
        raise ValueError("need at least two zeros")
    meta = {"source": "empirical", "ell": np.asarray(zs.ell).tolist(),
            "interval": list(zs.interval)}
    if d is not None:
        meta["max_gap_bound"] = max_gap_bound(d, zs.ell)
    return GapDistribution(np.diff(x), np.ones(x.size - 1), (), meta)


def cyclic_gaps(angles: np.ndarray) -> np.ndarray:
    """Cyclic gaps of sorted angle rows ``(..., D)``."""
    a = np.sort(angles, axis=-1)
    return np.diff(np.concatenate([a, a[..., :1] + TWO_PI], axis=-1), axis=-1)


def _spectrum_gaps(p: MultiPoly, x: np.ndarray) -> np.ndarray:
    out = []
    for i in range(0, len(x), CHUNK):
        out.append(cyclic_gaps(raw_angles(p, x[i:i + CHUNK])))
    return np.concatenate(out)


def nu_one(p: MultiPoly, count: int, rng=None) -> GapDistribution:
    """Average over uniform ``x`` of the cyclic gap measure of ``p_x`` (weight ``1/|d|`` each)."""
    if count < 1:
        raise ValueError("count must be positive")
    g = as_generator(rng)
    x = g.uniform(0, TWO_PI, (count, p.n))
    gaps = _spectrum_gaps(p, x)
    return GapDistribution(gaps.ravel(), np.ones(gaps.size),
                           (), {"source": "nu_one", "count": count, "degree": list(p.degree)})


def nu_rational(p: MultiPoly, k, m: int, count: int, rng=None) -> GapDistribution:
    """Gap measure for the rational direction ``k / m`` via substitution ``z_j -> z_j^{k_j}``.

    The flow in direction ``k / m`` is the flow of ``p(z^k)`` in direction
    ``(1/m) * (1, ..., 1)``, which runs ``m`` times slower, so gaps scale by ``m``.
    """
    if m < 1:
        raise ValueError("m must be a positive integer")
    base = nu_one(power_substitute(p, k), count, rng)
    meta = dict(base.meta, source="nu_rational", k=[int(v) for v in k], m=int(m))
    return GapDistribution(base.gaps * m, base.weights, (), meta)


def poisson_reference(n: int, count: int, rng=None) -> GapDistribution:
    """Gaps of ``n`` iid uniform points on the circle."""
    g = as_generator(rng)
    gaps = cyclic_gaps(g.uniform(0, TWO_PI, (count, n)))
    return GapDistribution(gaps.ravel(), np.ones(gaps.size), (), {"source": "poisson", "n": n})


@dataclass
class CueOracle:
    samples: int
    max_deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_deviation <= self.tol


def cue_reference(n: int, count: int, rng=None, oracle: bool = False, tol: float = 1e-8):
    """Eigenangle gaps of ``diag(e^{ix}) U`` for Haar ``U`` and uniform ``x``.

    With ``oracle=True`` each sample is also computed from the root angles of
    ``det(1 - diag(z) U)`` restricted to the diagonal through ``x``; the sorted
    gap lists must coincide.  Returns ``(distribution, CueOracle | None)``.
    """
    g = as_generator(rng)
    allgaps = np.empty((count, n))
    worst = 0.0
    for i in range(count):
        U = haar_unitary(n, g)
        x = g.uniform(0, TWO_PI, n)
        ev = np.linalg.eigvals(np.exp(1j * x)[:, None] * U)
        gaps = cyclic_gaps(np.mod(np.angle(ev), TWO_PI))
        allgaps[i] = gaps
        if oracle:
            p = determinantal(U)
            other = cyclic_gaps(raw_angles(p, x))
            worst = max(worst, float(np.max(np.abs(np.sort(gaps) - np.sort(other)))))
    dist = GapDistribution(allgaps.ravel(), np.ones(allgaps.size), (), {"source": "cue", "n": n})
    return dist, (CueOracle(count, worst, tol) if oracle else None)


# -- summaries and comparisons --------------------------------------------------

def mean_gap(g: GapDistribution) -> float:
    return float(np.dot(g.gaps, g.weights))


def ks_distance(g1: GapDistribution, g2) -> float:
    """Sup distance between the CDF of ``g1`` and ``g2`` (a distribution or a CDF callable)."""
    if callable(g2) and not isinstance(g2, GapDistribution):
        x = g1.gaps
        F = np.asarray(g2(x), float)
        right = g1.cdf(x)
        left = right - g1.weights  # value just below each sample
        return float(max(np.max(np.abs(right - F)), np.max(np.abs(left - F))))
    pts = np.union1d(g1.gaps, g2.gaps)
    return float(np.max(np.abs(g1.cdf(pts) - g2.cdf(pts))))


def wasserstein1(g1: GapDistribution, g2: GapDistribution) -> float:
    return float(wasserstein_distance(g1.gaps, g2.gaps, g1.weights, g2.weights))


def uniform_cdf(lo: float, hi: float) -> Callable:
    return lambda x: np.clip((np.asarray(x) - lo) / (hi - lo), 0.0, 1.0)


def detect_atoms(g: GapDistribution, window: float | None = None,
                 mass_threshold: float = ATOM_THRESHOLD) -> list[Atom]:
    """Greedy atom extraction: the heaviest window of width ``window`` becomes an atom
    while it holds at least ``mass_threshold``."""
    if window is None:
        window = ATOM_WINDOW_REL * mean_gap(g)
    x = g.gaps.copy()
    w = g.weights.copy()
    atoms = []
    while x.size:
        cw = np.concatenate([[0.0], np.cumsum(w)])
        hi = np.searchsorted(x, x + window, side="right")
        mass = cw[hi] - cw[np.arange(x.size)]
        i = int(np.argmax(mass))
        if mass[i] < mass_threshold:
            break
        sl = slice(i, hi[i])
        atoms.append(Atom(float(np.dot(x[sl], w[sl]) / w[sl].sum()), float(mass[i])))
        x = np.delete(x, np.arange(i, hi[i]))
        w = np.delete(w, np.arange(i, hi[i]))
    return sorted(atoms, key=lambda a: a.location)


def diag_gap_multiset(p: MultiPoly, x) -> np.ndarray:
    """Sorted cyclic gaps of the unit-circle roots of ``p_x``."""
    return np.sort(cyclic_gaps(raw_angles(p, np.atleast_2d(x)))[0])
