"""Sampling battery for the Lee-Yang property.

Every check here is a necessary condition.  A passing report means no
counterexample was found, never that the property is established.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .polycore import MultiPoly, self_inversive_factor
from .randutil import as_generator
from .uniroots import CIRCLE_TOL, circle_deviation

DEFAULT_TRIALS = 200
DEFAULT_K = 3
DEFAULT_DEGREE_CAP = 200


class DegreeCapExceeded(ValueError):
    pass


@dataclass
class Witness:
    x0: list
    k: list
    root: complex
    deviation: float


@dataclass
class LYReport:
    self_inversive: bool
    c: complex | None
    slice_trials: int
    worst_circle_deviation: float
    circle_tol: float
    witnesses: list = field(default_factory=list)

    @property
    def verdict(self) -> str:
        ok = self.self_inversive and self.worst_circle_deviation <= self.circle_tol
        return "pass" if ok else "fail"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c"] = None if self.c is None else [self.c.real, self.c.imag]
        d["witnesses"] = [
            {"x0": w.x0, "k": w.k, "root": [w.root.real, w.root.imag], "deviation": w.deviation}
            for w in self.witnesses
        ]
        d["verdict"] = self.verdict
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def verify_self_inversive(p: MultiPoly, tol: float = 1e-10):
    c = self_inversive_factor(p, tol)
    return c is not None, c


def slice_poly(p: MultiPoly, x0, k) -> np.ndarray:
    """Ascending coefficients of ``w -> p(e^{i x0_1} w^{k_1}, ..., e^{i x0_n} w^{k_n})``."""
    x0 = np.asarray(x0, float)
    k = np.asarray(k, np.int64)
    e = p.exps.astype(np.int64)
    deg = e @ k
    out = np.zeros(int(deg.max()) + 1, dtype=complex)
    np.add.at(out, deg, p.coeffs * np.exp(1j * (e @ x0)))
    return out


def _slice_deviation(p, x0, k, degree_cap):
    k = np.asarray(k, np.int64)
    if np.any(k < 1) or k.shape != (p.n,):
        raise ValueError("k must be a positive integer vector of length n")
    D = int(np.dot(p.degree, k))
    if D > degree_cap:
        raise DegreeCapExceeded(f"slice degree {D} exceeds cap {degree_cap}")
    c = slice_poly(p, x0, k)
    nz = np.nonzero(np.abs(c) > 1e-14 * np.abs(c).max())[0]
    if nz[0] > 0:
        # a root at w = 0
        return 1.0, 0j
    if c.size < 2:
        return 0.0, None
    return circle_deviation(c)


def slice_test(p: MultiPoly, x0, k, degree_cap: int = DEFAULT_DEGREE_CAP) -> float:
    """Largest ``| |w| - 1 |`` over the roots of the slice polynomial."""
    return _slice_deviation(p, x0, k, degree_cap)[0]


def verify(p: MultiPoly, trials: int = DEFAULT_TRIALS, degree_cap: int = DEFAULT_DEGREE_CAP,
           rng=None, K: int = DEFAULT_K, circle_tol: float = CIRCLE_TOL,
           max_witnesses: int = 5) -> LYReport:
    if trials < 1:
        raise ValueError("trials must be positive")
    g = as_generator(rng)
    si, c = verify_self_inversive(p)
    worst = 0.0
    witnesses: list[Witness] = []
    done = 0
    for _ in range(trials):
        x0 = g.uniform(0, 2 * np.pi, p.n)
        k = g.integers(1, K + 1, p.n)
        # shrink k toward ones until the slice fits under the cap
        while int(np.dot(p.degree, k)) > degree_cap and np.any(k > 1):
            k = np.maximum(1, k // 2)
        if int(np.dot(p.degree, k)) > degree_cap:
            continue
        dev, root = _slice_deviation(p, x0, k, degree_cap)
        done += 1
        worst = max(worst, dev)
        if dev > circle_tol and len(witnesses) < max_witnesses:
            witnesses.append(Witness(x0.tolist(), k.tolist(), root, dev))
    return LYReport(si, c, done, worst, circle_tol, witnesses)
