"""Zeros of ``f(t) = p(exp(i(x0 + t*ell)))`` for a Lee-Yang polynomial ``p``.

The engine tracks the lifted phase functions of the diagonal restriction.
Their sum satisfies ``sum_j theta_j(x) + <d, x> = const``, which pins down a
unique order-preserving lift of the raw root angles at every point, so the
phases can be evaluated pointwise and in batches.  A zero of ``f`` is a time
where some phase crosses a level ``2 pi k``; phases decrease strictly along
positive directions, so crossings are counted exactly and refined by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .polycore import MultiPoly, diag_coeffs, diag_restrict, eval_torus, self_inversive_factor
from .uniroots import (CIRCLE_TOL, CLUSTER_RADIUS, AngleSpectrum, adaptive_radius,
                       angle_spectrum, batch_roots)

TWO_PI = 2 * np.pi
DT_MIN = 1e-6
DROP_EPS = 1e-7
DROP_EPS_LOOSE = 1e-4
SUM_TOL = 1e-8
MERGE_TOL = 1e-7
RESIDUAL_RTOL = 1e-6
EDGE_TOL = 1e-7


class AmbiguousLift(ArithmeticError):
    def __init__(self, msg, t=None, dt=None):
        super().__init__(msg)
        self.t = t
        self.dt = dt


class ZeroResidualError(ArithmeticError):
    pass


# -- phases -------------------------------------------------------------------

def phase_spectrum(p: MultiPoly, point, circle_tol: float = CIRCLE_TOL,
                   cluster_radius: float = CLUSTER_RADIUS) -> AngleSpectrum:
    return angle_spectrum(diag_restrict(p, np.asarray(point, float)), circle_tol, cluster_radius)


def raw_angles(p: MultiPoly, points: np.ndarray) -> np.ndarray:
    """Sorted root angles in ``[0, 2pi)`` of ``p_x`` for a batch of points ``(..., n)``."""
    r = batch_roots(diag_coeffs(p, points))
    a = np.mod(np.angle(r), TWO_PI)
    a[a >= TWO_PI] = 0.0
    return np.sort(a, axis=-1)


def lift(raw: np.ndarray, target_sum: np.ndarray) -> np.ndarray:
    """Order-preserving lift of sorted raw angles whose sum is closest to ``target_sum``.

    The lifts are the windows ``(A_m, ..., A_{m+D-1})`` of the bi-infinite
    sequence ``A_i = a_{i mod D} + 2 pi floor(i / D)``; their sums are
    ``S + 2 pi m``.
    """
    raw = np.asarray(raw, float)
    D = raw.shape[-1]
    S = raw.sum(axis=-1)
    m = np.rint((np.asarray(target_sum) - S) / TWO_PI).astype(np.int64)
    i = m[..., None] + np.arange(D)
    q, r = np.divmod(i, D)
    return np.take_along_axis(raw, r, axis=-1) + TWO_PI * q


@dataclass
class PhaseTrack:
    """Lifted phases at ``x0 + t*ell``; ``const`` is the conserved ``sum + <d, x>``."""

    t: float
    lifted: np.ndarray
    x0: np.ndarray
    ell: np.ndarray
    const: float = field(default=None)
    degree: tuple = field(default=None, repr=False)

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, float)
        self.ell = np.asarray(self.ell, float)
        self.lifted = np.asarray(self.lifted, float)

    def point(self, t=None) -> np.ndarray:
        t = self.t if t is None else t
        return self.x0 + np.multiply.outer(t, self.ell)


def start_track(p: MultiPoly, ell, t: float = 0.0, x0=None) -> PhaseTrack:
    ell = np.asarray(ell, float)
    if ell.shape != (p.n,) or np.any(ell <= 0):
        raise ValueError("ell must be a strictly positive vector of length n")
    x0 = np.zeros(p.n) if x0 is None else np.asarray(x0, float)
    x = x0 + t * ell
    raw = raw_angles(p, x)
    const = float(raw.sum() + np.dot(p.degree, x))
    return PhaseTrack(t, raw, x0, ell, const, p.degree)


def phases_at(p: MultiPoly, track: PhaseTrack, t) -> np.ndarray:
    """Lifted phases at parameter(s) ``t`` consistent with ``track``."""
    t = np.asarray(t, float)
    x = track.point(t)
    target = track.const - x @ np.asarray(p.degree, float)
    return lift(raw_angles(p, x), target)


def _drop_ok(drop, dt, lmin, lmax, eps):
    return (drop >= dt[..., None] * lmin - eps) & (drop <= dt[..., None] * lmax + eps)


def track_step(p: MultiPoly, state: PhaseTrack, dt: float, eps: float = DROP_EPS,
               sum_tol: float = SUM_TOL) -> PhaseTrack:
    """Advance by ``dt``; raises :class:`AmbiguousLift` when the lift fails the drop bounds."""
    lmin, lmax = state.ell.min(), state.ell.max()
    if dt * lmax > np.pi / 2 + 1e-15:
        raise ValueError("step too large: dt * max(ell) must not exceed pi/2")
    new = phases_at(p, state, state.t + dt)
    drop = state.lifted - new
    dl = float(np.dot(p.degree, state.ell))
    total_err = abs(drop.sum() - dt * dl)
    if total_err > sum_tol or not _drop_ok(drop, np.asarray(dt), lmin, lmax, eps).all():
        raise AmbiguousLift(
            f"no admissible lift at t={state.t + dt:.12g} (sum error {total_err:.2e})",
            state.t, dt)
    return replace(state, t=state.t + dt, lifted=new)


# -- zero sets ----------------------------------------------------------------

@dataclass
class ZeroSet:
    interval: tuple
    ell: np.ndarray
    x: np.ndarray
    mult: np.ndarray
    x0: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.x)

    @property
    def count(self) -> int:
        return int(self.mult.sum())

    def expanded(self) -> np.ndarray:
        return np.repeat(self.x, self.mult)

    def gaps(self) -> np.ndarray:
        return np.diff(self.x)


def _grid(p, track, a, b, dt0):
    """Grid on ``[a - dt0, b + dt0]`` whose consecutive lifts satisfy the drop bounds.

    Failing intervals are halved; at the step floor the loose bound (split
    multiple roots) is accepted, anything worse raises.
    """
    lmin, lmax = track.ell.min(), track.ell.max()
    ts = np.arange(a - dt0, b + 2 * dt0, dt0)
    th = phases_at(p, track, ts)
    while True:
        dt = np.diff(ts)
        drops = th[:-1] - th[1:]
        strict = _drop_ok(drops, dt, lmin, lmax, DROP_EPS).all(axis=1)
        floor = dt / 2 < DT_MIN
        hopeless = floor & ~strict & ~_drop_ok(drops, dt, lmin, lmax, DROP_EPS_LOOSE).all(axis=1)
        if hopeless.any():
            i = int(np.nonzero(hopeless)[0][0])
            raise AmbiguousLift(f"lift failed at t={ts[i]:.12g} with dt={dt[i]:.3g}", ts[i], dt[i])
        refine = ~strict & ~floor
        if not refine.any():
            break
        idx = np.nonzero(refine)[0]
        mids = 0.5 * (ts[idx] + ts[idx + 1])
        ts = np.insert(ts, idx + 1, mids)
        th = np.insert(th, idx + 1, phases_at(p, track, mids), axis=0)
    loose = int((~strict).sum())
    return ts, th, {"loose_steps": loose, "min_step": float(np.diff(ts).min())}


def _bisect(p, track, lo, hi, j, level, width):
    """Vectorized bisection for ``theta_j(t) = level`` on brackets ``[lo, hi]``."""
    lo, hi = lo.copy(), hi.copy()
    depth = 0
    while True:
        active = (hi - lo) > width
        if not active.any():
            break
        depth += 1
        idx = np.nonzero(active)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        th = phases_at(p, track, mid)[np.arange(idx.size), j[idx]]
        # theta decreasing: above the level means the crossing lies to the right
        right = th > level[idx]
        lo[idx[right]] = mid[right]
        hi[idx[~right]] = mid[~right]
    return 0.5 * (lo + hi), depth


def _merge(times: np.ndarray, tols: np.ndarray):
    """Greedy merge of sorted crossing times; ``tols[m]`` is the radius for a cluster of size m+1."""
    xs, ms = [], []
    i, N = 0, times.size
    while i < N:
        j = i + 1
        while j < N and times[j] - times[i] <= tols[min(j - i, len(tols) - 1)]:
            j += 1
        xs.append(times[i:j].mean())
        ms.append(j - i)
        i = j
    return np.array(xs), np.array(ms, dtype=int)


def merge_tolerances(p: MultiPoly, ell, base: float = MERGE_TOL) -> np.ndarray:
    """Time radius for merging k crossings, ``k = 1..|d|``.

    A k-fold torus zero shows up as k crossings spread by the splitting scale
    of a k-fold root, about ``(eps * kappa)^(1/k)`` in angle.
    """
    D = p.total_degree
    c = np.abs(p.coeffs)
    lead = abs(p.leading)
    kappa = c.sum() / lead
    lmin = float(np.min(ell))
    tols = [base]
    for k in range(2, D + 1):
        r = 4 * (np.finfo(float).eps * kappa) ** (1.0 / k)
        tols.append(max(base, r / lmin))
    return np.array(tols)


def find_zeros(p: MultiPoly, ell, a: float, b: float, x0=None, dt0: float | None = None,
               merge_tol: float = MERGE_TOL, check_residual: bool = True) -> ZeroSet:
    """Zeros with multiplicity of ``t -> p(exp(i(x0 + t ell)))`` on ``[a, b]``."""
    ell = np.asarray(ell, float)
    if b < a:
        raise ValueError("empty interval")
    if abs(p.leading) == 0:
        raise ValueError("top coefficient vanishes")
    lmax = ell.max()
    if dt0 is None:
        dt0 = min(np.pi / (2 * lmax), 0.25)
    track = start_track(p, ell, a - dt0, x0)
    ts, th, diag = _grid(p, track, a, b, dt0)

    # crossings of 2 pi k with theta_new <= 2 pi k < theta_old
    k_hi = np.ceil(th[:-1] / TWO_PI) - 1
    k_lo = np.ceil(th[1:] / TWO_PI)
    cnt = (k_hi - k_lo + 1).astype(np.int64)
    cnt[cnt < 0] = 0
    step_idx, j_idx = np.nonzero(cnt)
    reps = cnt[step_idx, j_idx]
    step_idx = np.repeat(step_idx, reps)
    j_idx = np.repeat(j_idx, reps)
    base_k = np.repeat(k_lo[np.nonzero(cnt)], reps)
    offs = np.concatenate([np.arange(r) for r in reps]) if reps.size else np.zeros(0, int)
    levels = TWO_PI * (base_k + offs)

    # a few ulps of the largest parameter; phases are not more accurate than that
    width = 16 * np.finfo(float).eps * max(1.0, abs(a), abs(b))
    if step_idx.size:
        times, depth = _bisect(p, track, ts[step_idx], ts[step_idx + 1], j_idx, levels, width)
    else:
        times, depth = np.zeros(0), 0
    times.sort()
    tols = merge_tolerances(p, ell, merge_tol)
    xs, ms = _merge(times, tols)
    keep = (xs >= a - EDGE_TOL) & (xs <= b + EDGE_TOL)
    xs, ms = xs[keep], ms[keep]

    x0v = track.x0
    res = np.abs(eval_torus(p, x0v + np.multiply.outer(xs, ell))) if xs.size else np.zeros(0)
    scale = p.scale
    diag.update({
        "grid_points": int(ts.size),
        "crossings": int(times.size),
        "bisection_depth": int(depth),
        "bracket_width": width,
        "max_residual": float(res.max()) if res.size else 0.0,
        "scale": scale,
    })
    if check_residual and res.size and res.max() > RESIDUAL_RTOL * scale:
        i = int(np.argmax(res))
        raise ZeroResidualError(f"|f| = {res[i]:.3g} at reported zero {xs[i]:.15g}")
    return ZeroSet((float(a), float(b)), ell, xs, ms, x0v, diag)


def zero_multiplicity_at(zs: ZeroSet, x: float, tol: float = 1e-6) -> int:
    hit = np.abs(zs.x - x) <= tol
    return int(zs.mult[hit].sum())


# -- secular function ---------------------------------------------------------

def secular_value(p: MultiPoly, ell, x, x0=None, c: complex | None = None,
                  imag_tol: float = 1e-9):
    """Real de-phased ``f``: ``Re[exp(i(arg c - <d, x>)/2) p(exp(i x))]`` on the line.

    With ``p^dagger = c p`` the bracketed quantity is real on the torus, so it
    shares its zeros with ``f``.  The overall sign is a convention.
    """
    if c is None:
        c = self_inversive_factor(p)
        if c is None:
            raise ValueError("polynomial is not self-inversive")
    ell = np.asarray(ell, float)
    x = np.asarray(x, float)
    x0 = np.zeros(p.n) if x0 is None else np.asarray(x0, float)
    pts = x0 + np.multiply.outer(x, ell)
    phase = np.exp(0.5j * (np.angle(c) - pts @ np.asarray(p.degree, float)))
    w = phase * eval_torus(p, pts)
    worst = np.max(np.abs(np.imag(w))) if np.ndim(w) else abs(w.imag)
    if worst > imag_tol * p.scale:
        raise ArithmeticError(f"secular function has imaginary part {worst:.3g}")
    re = np.real(w)
    return float(re) if np.ndim(re) == 0 else re


@dataclass
class CrossReport:
    matched: bool
    sign_roots: np.ndarray
    unmatched_sign_roots: list
    unmatched_odd_zeros: list
    max_deviation: float
    tol: float

    def to_dict(self):
        return {"matched": self.matched, "sign_change_roots": int(self.sign_roots.size),
                "unmatched_sign_roots": self.unmatched_sign_roots,
                "unmatched_odd_zeros": self.unmatched_odd_zeros,
                "max_deviation": self.max_deviation, "tol": self.tol}


def cross_validate(p: MultiPoly, ell, a: float, b: float, zs: ZeroSet | None = None,
                   x0=None, tol: float = 1e-8) -> CrossReport:
    """Compare tracked zeros with sign-change roots of the secular function."""
    ell = np.asarray(ell, float)
    if zs is None:
        zs = find_zeros(p, ell, a, b, x0=x0)
    x0 = zs.x0
    c = self_inversive_factor(p)
    dl = float(np.dot(p.degree, ell))
    h = 0.1 * TWO_PI / dl
    grid = np.linspace(a, b, int(np.ceil((b - a) / h)) + 1)
    # refinement: split cells that hold tracked zeros so close pairs get separate brackets
    if len(zs):
        mids = 0.5 * (zs.x[1:] + zs.x[:-1])
        grid = np.unique(np.concatenate([grid, mids[(mids > a) & (mids < b)]]))

    def g(t):
        return secular_value(p, ell, t, x0, c)

    vals = g(grid)
    roots_found = []
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        roots_found.append(brentq(g, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200))
    exact = grid[vals == 0.0]
    sign_roots = np.sort(np.concatenate([np.array(roots_found), exact]))

    dev = 0.0
    unmatched_sign = []
    for r in sign_roots:
        d = np.min(np.abs(zs.x - r)) if len(zs) else np.inf
        dev = max(dev, float(d))
        if d > tol:
            unmatched_sign.append(float(r))
    unmatched_odd = []
    for x, m in zip(zs.x, zs.mult):
        if m % 2 == 1 and a < x < b:
            d = np.min(np.abs(sign_roots - x)) if sign_roots.size else np.inf
            if d > tol:
                unmatched_odd.append(float(x))
    ok = not unmatched_sign and not unmatched_odd
    return CrossReport(ok, sign_roots, unmatched_sign, unmatched_odd, dev, tol)


# -- validators -----------------------------------------------------------------

def density_check(zs: ZeroSet, d, T, windows: int = 32) -> float:
    """Largest ``|count([x, x+T]) - <d, ell> T / 2 pi|`` over ``windows`` placements per ``T``."""
    dl = float(np.dot(d, zs.ell))
    a, b = zs.interval
    xs = zs.x
    cum = np.concatenate([[0], np.cumsum(zs.mult)])
    worst = 0.0
    for T in np.atleast_1d(T):
        if T > b - a:
            raise ValueError(f"window {T} longer than the scanned interval")
        starts = np.linspace(a, b - T, windows)
        lo = np.searchsorted(xs, starts, side="left")
        hi = np.searchsorted(xs, starts + T, side="right")
        err = np.abs(cum[hi] - cum[lo] - dl * T / TWO_PI)
        worst = max(worst, float(err.max()))
    return worst


def max_gap_bound(d, ell) -> float:
    return TWO_PI * float(np.sum(d)) / float(np.dot(d, ell))


def max_gap_check(zs: ZeroSet, d=None) -> float:
    return float(np.max(np.diff(zs.x))) if len(zs) > 1 else 0.0


def first_return_orbit(p: MultiPoly, ell, x0, N: int, on_tol: float = 1e-8):
    """First ``N`` returns of the flow ``x0 + t ell`` to the zero set.

    Returns ``(points, taus)`` with ``points[j] = x0 + k_j ell mod 2 pi`` and
    ``taus[j] = k_{j+1} - k_j``; ``k_0 = 0``.
    """
    ell = np.asarray(ell, float)
    x0 = np.asarray(x0, float)
    if abs(eval_torus(p, x0)) > on_tol * p.scale:
        raise ValueError("x0 is not on the zero set")
    dl = float(np.dot(p.degree, ell))
    span = max(1.0, 1.2 * (N + 2) * TWO_PI / dl)
    while True:
        zs = find_zeros(p, ell, -1e-3, span, x0=x0)
        ks = zs.x[zs.x > -EDGE_TOL]
        if ks.size >= N + 1:
            break
        span *= 2
    ks = ks[: N + 1]
    ks[0] = 0.0
    pts = np.mod(x0 + np.multiply.outer(ks[:N], ell), TWO_PI)
    return pts, np.diff(ks)
