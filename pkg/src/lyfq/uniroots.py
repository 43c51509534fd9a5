"""Univariate root finding and unit-circle angle extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polycore import UnivariatePoly

CIRCLE_TOL = 1e-8
CLUSTER_RADIUS = 1e-7
RESIDUAL_RTOL = 1e-10
POLISH_ITERS = 6
TWO_PI = 2 * np.pi


class RootFindingError(ArithmeticError):
    def __init__(self, msg, worst_residual=None):
        super().__init__(msg)
        self.worst_residual = worst_residual


class OffCircleRoot(ValueError):
    def __init__(self, root, deviation):
        super().__init__(f"root {root!r} lies {deviation:.3g} off the unit circle")
        self.root = root
        self.deviation = deviation


@dataclass(frozen=True)
class AngleSpectrum:
    angles: np.ndarray
    mults: np.ndarray
    total: int

    def expanded(self) -> np.ndarray:
        """Angles repeated by multiplicity, ascending."""
        return np.repeat(self.angles, self.mults)

    def mult_at(self, angle: float, tol: float = 1e-6) -> int:
        dist = np.abs(np.angle(np.exp(1j * (self.angles - angle))))
        hit = dist <= tol
        return int(self.mults[hit].sum())

    def gaps(self) -> np.ndarray:
        """Cyclic gaps of the expanded angle list (length ``total``)."""
        a = self.expanded()
        return np.diff(np.append(a, a[0] + TWO_PI))


def _as_coeffs(q) -> np.ndarray:
    if isinstance(q, UnivariatePoly):
        return q.coeffs
    return UnivariatePoly(q).coeffs


def _horner(c: np.ndarray, r: np.ndarray):
    """Value and derivative of polynomials ``c`` (batch, D+1 ascending) at ``r`` (batch, D)."""
    val = np.zeros_like(r)
    der = np.zeros_like(r)
    for k in range(c.shape[-1] - 1, -1, -1):
        der = der * r + val
        val = val * r + c[..., k, None]
    return val, der


def _polish(c: np.ndarray, r: np.ndarray, iters: int = POLISH_ITERS,
            frozen: np.ndarray | None = None) -> np.ndarray:
    """Aberth iterations on a batch; a step is kept only where it lowers the residual.

    Entries flagged ``frozen`` are held fixed but still act on the others.
    """
    D = r.shape[-1]
    if D == 1:
        return -c[..., :1] / c[..., 1:2]
    val, der = _horner(c, r)
    res = np.abs(val)
    for _ in range(iters):
        diff = r[..., :, None] - r[..., None, :]
        with np.errstate(all="ignore"):
            inv = np.where(diff == 0, 0.0, 1.0 / diff)
            newton = val / der
            step = newton / (1.0 - newton * inv.sum(axis=-1))
        cand = r - step
        cval, cder = _horner(c, cand)
        better = np.isfinite(cand) & (np.abs(cval) < res)
        if frozen is not None:
            better &= ~frozen
        if not better.any():
            break
        r = np.where(better, cand, r)
        val = np.where(better, cval, val)
        der = np.where(better, cder, der)
        res = np.abs(val)
    return r


def _deriv_table(c: np.ndarray) -> np.ndarray:
    """``out[..., k, j]`` = coefficient of ``s^j`` in the k-th derivative, ``k = 0..D``."""
    D = c.shape[-1] - 1
    j = np.arange(D + 1)
    out = np.zeros(c.shape[:-1] + (D + 1, D + 1), dtype=complex)
    for k in range(D + 1):
        fac = np.ones(D + 1 - k)
        for i in range(k):
            fac = fac * (j[: D + 1 - k] + k - i)
        out[..., k, : D + 1 - k] = c[..., k:] * fac
    return out


def _horner_each(c: np.ndarray, z: np.ndarray) -> np.ndarray:
    val = np.zeros_like(z)
    for k in range(c.shape[-1] - 1, -1, -1):
        val = val * z + c[..., k]
    return val


def merge_multiple_roots(c: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Replace numerically split multiple roots by one refined value.

    Grouping radii shrink from the splitting scale of a ``D``-fold root down
    to that of a double root, so a multiple root sitting next to a distinct
    close root is still found at the smaller radius.
    """
    D = r.shape[-1]
    if D < 2:
        return r
    eps = np.finfo(float).eps
    kappa = np.abs(c).sum(axis=-1) / np.abs(c[:, -1])
    last = np.inf
    for k in range(D, 1, -1):
        rad = 4 * (eps * kappa) ** (1.0 / k)
        if np.max(rad) * 1.5 > last:
            continue
        last = np.max(rad)
        r = _merge_pass(c, r, rad)
    return r


def _merge_pass(c: np.ndarray, r: np.ndarray, radius: np.ndarray, iters: int = 8) -> np.ndarray:
    """One grouping pass at ``radius`` (per row).

    A group of size ``m`` is refined by Newton on the ``(m-1)``-th derivative
    from its centroid and replaced only when the result is a root of ``q`` to
    rounding accuracy.  Distinct close roots fail that test and are kept.
    """
    N, D = r.shape
    eps = np.finfo(float).eps
    absc = np.abs(c).sum(axis=-1)
    order = np.argsort(np.angle(r), axis=-1)
    rs = np.take_along_axis(r, order, axis=-1)
    step = np.abs(np.diff(rs, axis=-1))
    wrap = np.abs(rs[:, 0] - rs[:, -1])
    close = step <= radius[:, None]
    rows = np.nonzero(close.any(axis=1) | (wrap <= radius))[0]
    if not rows.size:
        return r
    rs, close, wrap, cr = rs[rows], close[rows], wrap[rows], c[rows]
    label = np.concatenate([np.zeros((rows.size, 1), int), np.cumsum(~close, axis=1)], axis=1)
    last = label[:, -1:]
    label = np.where((wrap <= radius[rows])[:, None] & (label == last), 0, label)
    eq = label[:, :, None] == label[:, None, :]
    size = eq.sum(axis=-1)
    z = (eq * rs[:, None, :]).sum(axis=-1) / size
    tab = _deriv_table(cr)
    ri = np.arange(rows.size)[:, None]
    f = tab[ri, size - 1]
    fp = tab[ri, np.minimum(size, D)]
    fz = _horner_each(f, z)
    for _ in range(iters):
        with np.errstate(all="ignore"):
            cand = z - fz / _horner_each(fp, z)
        fc = _horner_each(f, cand)
        better = np.isfinite(cand) & (np.abs(fc) < np.abs(fz))
        if not better.any():
            break
        z = np.where(better, cand, z)
        fz = np.where(better, fc, fz)
    # every derivative below order m must vanish to rounding accuracy
    zmax = np.maximum(1, np.abs(z)) ** D
    good = size > 1
    for j in range(int(size.max()) - 1):
        tj = np.broadcast_to(tab[:, None, j, :], f.shape)
        val = np.abs(_horner_each(tj, z))
        ref = np.abs(tab[:, j, :]).sum(axis=-1)[:, None] * zmax
        good &= (j > size - 2) | (val <= 64 * eps * ref)
    # a group is replaced only if every member passed
    good = (eq & ~good[:, None, :]).sum(axis=-1) == 0
    good &= size > 1
    new = np.where(good, z, rs)
    out = r.copy()
    inv = np.argsort(order[rows], axis=-1)
    out[rows] = np.take_along_axis(new, inv, axis=-1)
    return out


def batch_roots(coeffs: np.ndarray, check: bool = True, merge: bool = True) -> np.ndarray:
    """Roots of a batch of same-degree polynomials (ascending coefficients, shape ``(..., D+1)``).

    The leading coefficient must be nonzero for every row.
    """
    c = np.asarray(coeffs, dtype=complex)
    shape = c.shape[:-1]
    c = c.reshape(-1, c.shape[-1])
    D = c.shape[-1] - 1
    if D < 1:
        raise ValueError("degree must be at least 1")
    lead = c[:, -1]
    if np.any(lead == 0):
        raise ValueError("leading coefficient vanishes")
    comp = np.zeros((c.shape[0], D, D), dtype=complex)
    comp[:, 0, :] = -c[:, -2::-1] / lead[:, None]
    if D > 1:
        idx = np.arange(D - 1)
        comp[:, idx + 1, idx] = 1.0
    r = np.linalg.eigvals(comp)
    r = _polish(c, r)
    if merge:
        r = merge_multiple_roots(c, r)
        dup = (r[:, :, None] == r[:, None, :]).sum(axis=-1) > 1
        rows = np.nonzero(dup.any(axis=1) & ~dup.all(axis=1))[0]
        if rows.size:
            # neighbours of a multiple root converge poorly before the merge
            r[rows] = _polish(c[rows], r[rows], frozen=dup[rows])
    if check:
        val, _ = _horner(c, r)
        norm = np.linalg.norm(c, axis=-1)[:, None]
        bound = RESIDUAL_RTOL * norm * np.maximum(1.0, np.abs(r)) ** D
        bad = ~(np.abs(val) <= bound)
        if bad.any():
            worst = float(np.max(np.abs(val) / bound))
            raise RootFindingError(
                f"root residual exceeds tolerance (worst ratio {worst:.3g})", worst)
    return r.reshape(shape + (D,))


def roots(q) -> np.ndarray:
    c = _as_coeffs(q)
    if c.size < 2:
        raise ValueError("degree must be at least 1")
    return batch_roots(c)


def _circular_mean(a: np.ndarray) -> float:
    m = float(np.mod(np.angle(np.exp(1j * a).mean()), TWO_PI))
    return 0.0 if TWO_PI - m < 1e-13 else m


def cluster_angles(angles: np.ndarray, radius: float):
    """Greedy wrap-aware clustering of angles in [0, 2pi); returns (reps, mults)."""
    a = np.sort(np.mod(angles, TWO_PI))
    D = a.size
    if D == 1:
        return a.copy(), np.ones(1, int)
    gaps = np.diff(np.append(a, a[0] + TWO_PI))
    cuts = np.nonzero(gaps > radius)[0]
    if cuts.size == 0:
        return np.array([_circular_mean(a)]), np.array([D])
    # rotate so that the list starts right after a cut
    start = (cuts[-1] + 1) % D
    order = np.roll(np.arange(D), -start)
    rolled = a[order]
    rgaps = np.roll(gaps, -start)
    bounds = np.nonzero(rgaps > radius)[0] + 1
    groups = np.split(rolled, bounds[:-1])
    reps = np.array([_circular_mean(g) for g in groups])
    mults = np.array([len(g) for g in groups])
    o = np.argsort(reps)
    return reps[o], mults[o]


def adaptive_radius(coeffs: np.ndarray, base: float, max_mult: int = 8) -> float:
    """Radius that also merges the spread of a perturbed root of multiplicity ``max_mult``.

    A root of multiplicity ``k`` splits under a relative coefficient error ``eps``
    into a ring of radius about ``(eps * kappa) ** (1/k)``; ``kappa`` bounds the
    coefficient growth.  Only used when a tight cluster is detected.
    """
    c = np.abs(np.asarray(coeffs))
    kappa = c.sum() / c[-1]
    eps = np.finfo(float).eps
    return max(base, 4 * (eps * kappa) ** (1.0 / max_mult))


def root_centroids(r: np.ndarray, radius: float):
    """Single-linkage clusters of roots in the plane; returns (centroids, sizes).

    The centroid of a numerically split multiple root is far more accurate
    than any of its fragments.
    """
    r = np.asarray(r).ravel()
    D = r.size
    label = np.arange(D)
    close = np.abs(r[:, None] - r[None, :]) <= radius
    for i in range(D):
        for j in np.nonzero(close[i, i + 1:])[0] + i + 1:
            li, lj = label[i], label[j]
            if li != lj:
                label[label == lj] = li
    ids = np.unique(label)
    cents = np.array([r[label == k].mean() for k in ids])
    sizes = np.array([(label == k).sum() for k in ids])
    return cents, sizes


def refine_multiple(c: np.ndarray, z0: complex, m: int, iters: int = 8) -> complex:
    """Newton on the ``(m-1)``-th derivative, where a root of multiplicity ``m`` is simple."""
    dc = np.asarray(c, dtype=complex)
    for _ in range(m - 1):
        dc = dc[1:] * np.arange(1, dc.size)
    dd = dc[1:] * np.arange(1, dc.size)
    z = complex(z0)
    fz = np.polyval(dc[::-1], z)
    for _ in range(iters):
        der = np.polyval(dd[::-1], z)
        if der == 0:
            break
        cand = z - fz / der
        fc = np.polyval(dc[::-1], cand)
        if not abs(fc) < abs(fz):
            break
        z, fz = cand, fc
    return z


def circle_deviation(coeffs) -> tuple[float, complex]:
    """Worst ``| |root| - 1 |`` after merging split multiple roots; also returns that root."""
    c = _as_coeffs(coeffs)
    r = roots(c)
    cents, sizes = root_centroids(r, adaptive_radius(c, CLUSTER_RADIUS, 3))
    cents = np.array([z if m == 1 else refine_multiple(c, z, m) for z, m in zip(cents, sizes)])
    dev = np.abs(np.abs(cents) - 1)
    i = int(np.argmax(dev))
    return float(dev[i]), complex(cents[i])


def angle_spectrum(q, circle_tol: float = CIRCLE_TOL,
                   cluster_radius: float = CLUSTER_RADIUS) -> AngleSpectrum:
    """Unit-circle root angles of ``q`` merged into multiplicity clusters.

    If the plain radius leaves off-circle fragments (the signature of a
    numerically split multiple root), the radius is widened step by step to
    the expected splitting scale of a root of multiplicity 2, 3, ...
    """
    c = _as_coeffs(q)
    r = roots(c)
    return spectrum_from_roots(r, circle_tol, cluster_radius, coeffs=c)


def _check_clusters(r, ang, reps, mults, circle_tol, radius):
    for rep, m in zip(reps, mults):
        d = np.abs(np.angle(np.exp(1j * (ang - rep))))
        members = r[np.argsort(d)[:m]]
        if m == 1:
            dev, tol = abs(abs(members[0]) - 1), circle_tol
        else:
            # a split multiple root scatters off the circle; its geometric mean does not
            dev = abs(np.exp(np.log(np.abs(members)).mean()) - 1)
            tol = max(circle_tol, radius)
        if dev > tol:
            worst = members[np.argmax(np.abs(np.abs(members) - 1))]
            return OffCircleRoot(complex(worst), float(dev))
    return None


def spectrum_from_roots(r: np.ndarray, circle_tol: float = CIRCLE_TOL,
                        cluster_radius: float = CLUSTER_RADIUS,
                        coeffs: np.ndarray | None = None) -> AngleSpectrum:
    r = np.asarray(r)
    ang = np.mod(np.angle(r), TWO_PI)
    radii = [cluster_radius]
    if coeffs is not None:
        radii += sorted({adaptive_radius(coeffs, cluster_radius, k) for k in range(2, r.size + 1)})
    first = None
    for rad in radii:
        reps, mults = cluster_angles(ang, rad)
        err = _check_clusters(r, ang, reps, mults, circle_tol, rad)
        if err is None:
            return AngleSpectrum(reps, mults.astype(int), int(mults.sum()))
        first = first or err
        if not np.any(mults == 1) or rad > 1e-2:
            break
    raise first
