"""The regularizing operator ``D_{lambda,x}`` and regularity diagnostics.

A self-inversive ``p`` is written in the basis

    B_alpha(z) = (-i)^{|alpha|} prod_j (z_j + e^{i x_j})^{alpha_j} (z_j - e^{i x_j})^{d_j - alpha_j}

as ``p = scalar * sum_alpha a_alpha B_alpha`` with real ``a``.  On that side
one step is ``a'_beta = a_beta + lambda * sum_j (beta_j + 1) a_{beta + e_j}``,
which moves the zero set off its singular points while keeping the Lee-Yang
property.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .polycore import MultiPoly, eval_torus, grad_eval, self_inversive_factor
from .randutil import as_generator

IMAG_TOL = 1e-9
ANCHOR_RTOL = 1e-6
GRAD_TOL = 1e-6
ANCHOR_PROBES = 64


class AnchorOnZeroSet(ValueError):
    pass


class NotSelfInversive(ValueError):
    pass


@dataclass(frozen=True)
class MobiusCoeffs:
    x: np.ndarray
    scalar: complex
    a: np.ndarray
    degree: tuple


def _basis_matrix(d: int, w: complex) -> np.ndarray:
    """Column ``alpha`` holds the ascending coefficients of ``(-i)^alpha (z+w)^alpha (z-w)^(d-alpha)``."""
    M = np.zeros((d + 1, d + 1), dtype=complex)
    for alpha in range(d + 1):
        plus = np.array([comb(alpha, k) * w ** (alpha - k) for k in range(alpha + 1)])
        minus = np.array([comb(d - alpha, k) * (-w) ** (d - alpha - k) for k in range(d - alpha + 1)])
        M[:, alpha] = (-1j) ** alpha * np.convolve(plus, minus)
    return M


def _mode_apply(T: np.ndarray, mats) -> np.ndarray:
    for axis, M in enumerate(mats):
        T = np.moveaxis(np.tensordot(M, T, axes=([1], [axis])), 0, axis)
    return T


def mobius_basis_coeffs(p: MultiPoly, x, anchor_rtol: float = ANCHOR_RTOL,
                        imag_tol: float = IMAG_TOL) -> MobiusCoeffs:
    x = np.asarray(x, float)
    if x.shape != (p.n,):
        raise ValueError(f"anchor must have length {p.n}")
    c = self_inversive_factor(p)
    if c is None:
        raise NotSelfInversive("polynomial is not self-inversive")
    if abs(eval_torus(p, x)) <= anchor_rtol * p.scale:
        raise AnchorOnZeroSet(f"anchor {x.tolist()} lies on the torus zero set")
    w = np.exp(1j * x)
    mats = [_basis_matrix(dj, wj) for dj, wj in zip(p.degree, w)]
    # the scalar that makes the coefficients real
    ratio = np.prod((-np.conj(w)) ** np.asarray(p.degree)) / c
    arg = np.angle(ratio)
    if arg <= -np.pi + 1e-12:
        arg += 2 * np.pi  # keep -1 on the principal branch despite rounding
    scalar = np.exp(0.5j * arg)
    sol = _mode_apply(p.to_dense(), [np.linalg.inv(M) for M in mats]) / scalar
    big = np.abs(sol).max()
    if np.abs(sol.imag).max() > imag_tol * max(big, 1.0):
        raise NotSelfInversive(f"basis coefficients not real (max imag {np.abs(sol.imag).max():.3g})")
    return MobiusCoeffs(x, complex(scalar), sol.real.copy(), p.degree)


def reconstruct(m: MobiusCoeffs) -> MultiPoly:
    w = np.exp(1j * m.x)
    mats = [_basis_matrix(dj, wj) for dj, wj in zip(m.degree, w)]
    dense = m.scalar * _mode_apply(m.a.astype(complex), mats)
    return MultiPoly.from_dense(dense)


def _step(a: np.ndarray, lam: float) -> np.ndarray:
    out = a.copy()
    for j in range(a.ndim):
        n = a.shape[j]
        # (beta_j + 1) a_{beta + e_j}, zero past the top degree
        shifted = np.zeros_like(a)
        src = [slice(None)] * a.ndim
        dst = [slice(None)] * a.ndim
        src[j] = slice(1, n)
        dst[j] = slice(0, n - 1)
        w = np.arange(1, n).reshape([-1 if k == j else 1 for k in range(a.ndim)])
        shifted[tuple(dst)] = w * a[tuple(src)]
        out += lam * shifted
    return out


def perturb_once(p: MultiPoly, x, lam: float) -> MultiPoly:
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0:
        return p
    m = mobius_basis_coeffs(p, x)
    return reconstruct(MobiusCoeffs(m.x, m.scalar, _step(m.a, lam), m.degree))


def regularize(p: MultiPoly, x, lam: float, steps: int | None = None) -> MultiPoly:
    """``steps`` applications of ``D_{lambda,x}`` (default ``|d|``)."""
    steps = p.total_degree if steps is None else int(steps)
    for _ in range(steps):
        p = perturb_once(p, x, lam)
    return p


def choose_anchor(p: MultiPoly, probes: int = ANCHOR_PROBES, rng=None) -> np.ndarray:
    """The probe point maximizing ``|p(exp(i x))|`` among uniform draws."""
    g = as_generator(rng)
    xs = g.uniform(0, 2 * np.pi, (probes, p.n))
    vals = np.abs(eval_torus(p, xs))
    return xs[int(np.argmax(vals))]


@dataclass
class RegularityReport:
    flagged: list
    min_grad_norm: float
    min_gap: float
    max_mult: int
    grad_tol: float

    @property
    def regular(self) -> bool:
        return not self.flagged

    def to_dict(self):
        return {"regular": self.regular, "flagged": self.flagged,
                "min_grad_norm": self.min_grad_norm, "min_gap": self.min_gap,
                "max_mult": self.max_mult, "grad_tol": self.grad_tol}


def regularity_report(p: MultiPoly, zs, grad_tol: float = GRAD_TOL) -> RegularityReport:
    """Flag zeros with multiplicity above one or a gradient below ``grad_tol * scale``."""
    pts = zs.x0 + np.multiply.outer(zs.x, zs.ell)
    norms = np.linalg.norm(grad_eval(p, np.exp(1j * pts)), axis=-1) if len(zs) else np.zeros(0)
    thr = grad_tol * p.scale
    flagged = [{"x": float(x), "mult": int(m), "grad_norm": float(g)}
               for x, m, g in zip(zs.x, zs.mult, norms) if m > 1 or g < thr]
    gaps = np.diff(zs.x)
    return RegularityReport(
        flagged,
        float(norms.min()) if norms.size else float("nan"),
        float(gaps.min()) if gaps.size else float("nan"),
        int(zs.mult.max()) if len(zs) else 0,
        grad_tol,
    )
