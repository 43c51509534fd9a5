"""Sparse multivariate complex polynomials and the example families.

A :class:`MultiPoly` stores its support as an ``(m, n)`` array of exponent
vectors and an ``(m,)`` array of complex coefficients.  Objects are immutable
after construction; every operation returns a new polynomial.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

PRUNE_REL = 1e-14
COEFF_RTOL = 1e-10
EXP_MAX = np.iinfo(np.uint32).max
DETERMINANTAL_MAX_N = 20


class DimensionError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UnivariatePoly:
    """Dense univariate polynomial, ``coeffs[j]`` multiplies ``s**j``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        scale = np.max(np.abs(c))
        if scale > 0:
            nz = np.nonzero(np.abs(c) > PRUNE_REL * scale)[0]
            c = c[: nz[-1] + 1]
        else:
            c = c[:1]
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        acc = np.zeros_like(s)
        for c in self.coeffs[::-1]:
            acc = acc * s + c
        return acc

    def __mul__(self, other: "UnivariatePoly") -> "UnivariatePoly":
        return UnivariatePoly(np.convolve(self.coeffs, other.coeffs))

    def __repr__(self):
        return f"UnivariatePoly({np.array2string(self.coeffs, precision=6)})"


def _canonical(exps: np.ndarray, coeffs: np.ndarray):
    order = np.lexsort(exps.T[::-1]) if exps.size else np.arange(len(coeffs))
    exps, coeffs = exps[order], coeffs[order]
    # combine duplicate exponents
    if len(exps) > 1:
        same = np.all(exps[1:] == exps[:-1], axis=1)
        if same.any():
            keys = np.concatenate([[True], ~same])
            groups = np.cumsum(keys) - 1
            summed = np.zeros(groups[-1] + 1, dtype=complex)
            np.add.at(summed, groups, coeffs)
            exps, coeffs = exps[keys], summed
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    keep = np.abs(coeffs) > PRUNE_REL * scale if scale > 0 else np.zeros(len(coeffs), bool)
    return exps[keep], coeffs[keep]


@dataclass(frozen=True, eq=False)
class MultiPoly:
    """Polynomial ``sum_a c_a z^a`` in ``n`` variables with multidegree ``degree``.

    ``degree`` is inferred from the support when omitted.  When given it must
    be attained in every variable.
    """

    n: int
    exps: np.ndarray
    coeffs: np.ndarray
    degree: tuple = field(default=None)

    def __post_init__(self):
        exps = np.asarray(self.exps, dtype=np.int64).reshape(-1, self.n)
        coeffs = np.asarray(self.coeffs, dtype=complex).reshape(-1)
        if len(exps) != len(coeffs):
            raise ValueError("support and coefficient lengths differ")
        if np.any(exps < 0) or np.any(exps > EXP_MAX):
            raise ValueError("exponents must fit in uint32")
        exps, coeffs = _canonical(exps.astype(np.uint32), coeffs)
        attained = tuple(int(v) for v in exps.max(axis=0)) if len(exps) else (0,) * self.n
        if self.degree is not None:
            deg = tuple(int(v) for v in self.degree)
            if len(deg) != self.n:
                raise DimensionError("degree length must equal n")
            if deg != attained:
                raise ValueError(f"declared degree {deg} not attained (support gives {attained})")
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "exps", exps)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "degree", attained)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_dict(cls, terms: Mapping[tuple, complex], n: int | None = None, degree=None):
        items = list(terms.items())
        if n is None:
            n = len(items[0][0])
        exps = np.array([a for a, _ in items], dtype=np.int64).reshape(-1, n)
        coeffs = np.array([c for _, c in items], dtype=complex)
        return cls(n, exps, coeffs, degree)

    @classmethod
    def from_dense(cls, tensor: np.ndarray):
        tensor = np.asarray(tensor, dtype=complex)
        idx = np.argwhere(tensor != 0)
        return cls(tensor.ndim, idx, tensor[tuple(idx.T)])

    def to_dict(self) -> dict:
        return {tuple(int(v) for v in a): complex(c) for a, c in zip(self.exps, self.coeffs)}

    def to_dense(self) -> np.ndarray:
        out = np.zeros(tuple(d + 1 for d in self.degree), dtype=complex)
        out[tuple(self.exps.astype(np.int64).T)] = self.coeffs
        return out

    # -- basic properties -------------------------------------------------
    @property
    def total_degree(self) -> int:
        return int(sum(self.degree))

    @property
    def scale(self) -> float:
        """Largest coefficient magnitude."""
        return float(np.max(np.abs(self.coeffs))) if self.coeffs.size else 0.0

    def coeff(self, alpha) -> complex:
        hit = np.all(self.exps == np.asarray(alpha, dtype=np.uint32), axis=1)
        return complex(self.coeffs[hit][0]) if hit.any() else 0j

    @property
    def leading(self) -> complex:
        return self.coeff(self.degree)

    def __len__(self):
        return len(self.coeffs)

    def allclose(self, other: "MultiPoly", rtol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        a, b = self.to_dict(), other.to_dict()
        scale = max(self.scale, other.scale, 1e-300)
        keys = set(a) | set(b)
        return all(abs(a.get(k, 0) - b.get(k, 0)) <= rtol * scale for k in keys)

    def __eq__(self, other):
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return (self.n == other.n and self.exps.shape == other.exps.shape
                and np.array_equal(self.exps, other.exps)
                and np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None

    def __mul__(self, other):
        if isinstance(other, MultiPoly):
            if other.n != self.n:
                raise DimensionError("variable counts differ")
            e = (self.exps[:, None, :].astype(np.int64) + other.exps[None, :, :]).reshape(-1, self.n)
            c = (self.coeffs[:, None] * other.coeffs[None, :]).reshape(-1)
            return MultiPoly(self.n, e, c)
        return MultiPoly(self.n, self.exps, self.coeffs * complex(other))

    __rmul__ = __mul__

    def __add__(self, other: "MultiPoly"):
        return MultiPoly(self.n, np.vstack([self.exps, other.exps]),
                         np.concatenate([self.coeffs, other.coeffs]))

    def __neg__(self):
        return MultiPoly(self.n, self.exps, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __pow__(self, k: int):
        out = MultiPoly(self.n, np.zeros((1, self.n), int), [1.0])
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, z):
        return eval_poly(self, z)

    def __repr__(self):
        terms = ", ".join(f"{tuple(int(v) for v in a)}: {c:.6g}" for a, c in zip(self.exps, self.coeffs))
        return f"MultiPoly(n={self.n}, degree={self.degree}, {{{terms}}})"


def _check_len(p: MultiPoly, v, name="z"):
    v = np.asarray(v)
    if v.shape[-1] != p.n:
        raise DimensionError(f"{name} has length {v.shape[-1]}, polynomial has n={p.n}")
    return v


def eval_poly(p: MultiPoly, z) -> complex | np.ndarray:
    """Evaluate ``p`` at ``z`` (shape ``(..., n)``)."""
    z = _check_len(p, np.asarray(z, dtype=complex))
    mon = np.prod(z[..., None, :] ** p.exps.astype(np.int64), axis=-1)
    out = mon @ p.coeffs
    return complex(out) if out.ndim == 0 else out


def eval_torus(p: MultiPoly, x) -> complex | np.ndarray:
    """Evaluate ``p(exp(i x))`` for real angle vectors ``x`` (shape ``(..., n)``)."""
    x = _check_len(p, np.asarray(x, dtype=float), "x")
    phase = np.exp(1j * (x @ p.exps.T.astype(float)))
    out = phase @ p.coeffs
    return complex(out) if out.ndim == 0 else out


def grad_eval(p: MultiPoly, z) -> np.ndarray:
    """Gradient ``(dp/dz_1, ..., dp/dz_n)`` at ``z``."""
    z = _check_len(p, np.asarray(z, dtype=complex))
    e = p.exps.astype(np.int64)
    out = np.zeros(z.shape, dtype=complex)
    for j in range(p.n):
        ej = e.copy()
        mask = ej[:, j] > 0
        if not mask.any():
            continue
        ej[:, j] -= 1
        mon = np.prod(z[..., None, :] ** ej[mask], axis=-1)
        out[..., j] = mon @ (p.coeffs[mask] * e[mask, j])
    return out


def diag_coeffs(p: MultiPoly, x) -> np.ndarray:
    """Coefficients of ``p_x(s) = p(s e^{i x})`` for a batch of angle vectors.

    Returns an array of shape ``(..., |d|+1)`` in ascending powers of ``s``.
    """
    x = _check_len(p, np.asarray(x, dtype=float), "x")
    tot = p.exps.astype(np.int64).sum(axis=1)
    terms = p.coeffs * np.exp(1j * (x @ p.exps.T.astype(float)))
    out = np.zeros(x.shape[:-1] + (p.total_degree + 1,), dtype=complex)
    for j in np.unique(tot):
        out[..., j] = terms[..., tot == j].sum(axis=-1)
    return out


def diag_restrict(p: MultiPoly, x) -> UnivariatePoly:
    x = np.asarray(x, dtype=float)
    if x.shape != (p.n,):
        raise DimensionError(f"x must have shape ({p.n},)")
    return UnivariatePoly(diag_coeffs(p, x))


def involution(p: MultiPoly) -> MultiPoly:
    """``p^dagger``: coefficient ``conj(a_{d-alpha})`` at ``alpha``."""
    d = np.asarray(p.degree, dtype=np.int64)
    return MultiPoly(p.n, d - p.exps.astype(np.int64), np.conj(p.coeffs))


def self_inversive_factor(p: MultiPoly, tol: float = COEFF_RTOL) -> complex | None:
    """Unimodular ``c`` with ``p^dagger = c p`` (relative tolerance ``tol``), else ``None``."""
    if not len(p):
        raise ValueError("zero polynomial")
    pd, qd = p.to_dict(), involution(p).to_dict()
    # reference pair: the largest coefficient of p
    ref = max(pd, key=lambda k: abs(pd[k]))
    if ref not in qd:
        return None
    c = qd[ref] / pd[ref]
    if abs(abs(c) - 1) > tol:
        return None
    scale = p.scale
    for k in set(pd) | set(qd):
        if abs(qd.get(k, 0) - c * pd.get(k, 0)) > tol * scale:
            return None
    return c / abs(c)


def power_substitute(p: MultiPoly, k) -> MultiPoly:
    """``p(z_1^{k_1}, ..., z_n^{k_n})``."""
    k = np.asarray(k, dtype=np.int64)
    if k.shape != (p.n,) or np.any(k < 1):
        raise ValueError("k must be a positive integer vector of length n")
    e = p.exps.astype(np.int64)
    if np.any(e.max(axis=0, initial=0) * k > EXP_MAX):
        raise OverflowError("exponent overflow in power substitution")
    return MultiPoly(p.n, e * k, p.coeffs)


def scale_action(p: MultiPoly, x) -> MultiPoly:
    """``q(z) = p(exp(i x) z)``."""
    x = _check_len(p, np.asarray(x, dtype=float), "x")
    return MultiPoly(p.n, p.exps, p.coeffs * np.exp(1j * (p.exps.astype(float) @ x)))


def is_binomial(p: MultiPoly, tol: float = COEFF_RTOL):
    """Return ``(alpha, phi)`` with ``p`` proportional to ``1 - e^{-i phi} z^alpha``, or ``None``."""
    if len(p) != 2:
        return None
    zero = np.all(p.exps == 0, axis=1)
    if not zero.any():
        return None
    a0 = p.coeffs[zero][0]
    alpha = tuple(int(v) for v in p.exps[~zero][0])
    ratio = p.coeffs[~zero][0] / a0
    if abs(abs(ratio) - 1) > tol:
        return None
    # ratio = -e^{-i phi}
    phi = float(np.mod(-np.angle(-ratio), 2 * np.pi))
    if abs(phi - 2 * np.pi) < 1e-15:
        phi = 0.0
    return alpha, phi


# -- example families -------------------------------------------------------

def running_example() -> MultiPoly:
    """16(1 + z1^2 z2^2) - 8(z1 + z2 + z1^2 z2 + z1 z2^2) + (z1 - z2)^2."""
    return MultiPoly.from_dict({
        (0, 0): 16, (2, 2): 16,
        (1, 0): -8, (0, 1): -8, (2, 1): -8, (1, 2): -8,
        (2, 0): 1, (0, 2): 1, (1, 1): -2,
    })


def product_binomial(d) -> MultiPoly:
    """``prod_j (1 - z_j)^{d_j}``."""
    d = [int(v) for v in d]
    if any(v < 1 for v in d):
        raise ValueError("degrees must be positive")
    n = len(d)
    out = MultiPoly(n, np.zeros((1, n), int), [1.0])
    for j, dj in enumerate(d):
        e = np.zeros((2, n), int)
        e[1, j] = 1
        out = out * (MultiPoly(n, e, [1.0, -1.0]) ** dj)
    return out


def binomial(alpha, phi: float = 0.0) -> MultiPoly:
    """``1 - e^{-i phi} z^alpha``."""
    alpha = np.asarray(alpha, int)
    n = alpha.size
    return MultiPoly(n, np.vstack([np.zeros(n, int), alpha]), [1.0, -np.exp(-1j * phi)])


def determinantal(U, tol: float = 1e-10) -> MultiPoly:
    """``det(I - diag(z) U)`` by principal-minor expansion."""
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    if U.shape != (n, n):
        raise DimensionError("U must be square")
    if n > DETERMINANTAL_MAX_N:
        raise ValueError(f"n={n} exceeds the {DETERMINANTAL_MAX_N}-variable limit")
    if np.linalg.norm(U.conj().T @ U - np.eye(n), 2) > tol:
        raise NotUnitaryError("input matrix is not unitary")
    exps, coeffs = [np.zeros(n, int)], [1.0 + 0j]
    for r in range(1, n + 1):
        for S in itertools.combinations(range(n), r):
            e = np.zeros(n, int)
            e[list(S)] = 1
            exps.append(e)
            coeffs.append((-1) ** r * np.linalg.det(U[np.ix_(S, S)]))
    return MultiPoly(n, np.array(exps), np.array(coeffs))


# -- JSON -------------------------------------------------------------------

def to_json(p: MultiPoly) -> str:
    doc = {
        "n": p.n,
        "degree": list(p.degree),
        "coeffs": [{"alpha": [int(v) for v in a], "re": float(c.real), "im": float(c.imag)}
                   for a, c in zip(p.exps, p.coeffs)],
    }
    return json.dumps(doc)


def from_json(text: str | Mapping) -> MultiPoly:
    doc = json.loads(text) if isinstance(text, str) else text
    try:
        n = int(doc["n"])
        terms = doc["coeffs"]
        exps = np.array([t["alpha"] for t in terms], dtype=np.int64).reshape(-1, n)
        coeffs = np.array([complex(t["re"], t.get("im", 0.0)) for t in terms])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed polynomial document: {exc}") from exc
    return MultiPoly(n, exps, coeffs, doc.get("degree"))


def save(p: MultiPoly, path) -> None:
    with open(path, "w") as fh:
        fh.write(to_json(p))


def load(path) -> MultiPoly:
    with open(path) as fh:
        return from_json(fh.read())


def dot(a: Iterable[float], b: Iterable[float]) -> float:
    return float(math.fsum(float(x) * float(y) for x, y in zip(a, b)))
