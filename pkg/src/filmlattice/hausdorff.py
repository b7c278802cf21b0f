"""Exact Hausdorff distance between complements of profile domains.

For a profile h the complement of its domain inside the open strip
(0, L) x (-R, oo) has closure

    S(h) = {(x, y) : 0 <= x <= L, y >= h(x)}  plus one vertical ray per cut,

which is closed under moving up.  Hence dist(., S(h2)) is non-increasing along
vertical lines, and the one-sided distance sup_{p in S(h1)} dist(p, S(h2)) is
attained on the lower boundary of S(h1): the graph polyline (jumps included)
and the bottoms of the cuts.  Along a straight piece p(t) of that boundary the
distance is a minimum of convex functions (distance to points and to lines),
so its maximum sits at t in {0, 1} or where two of those functions agree.
All such candidates are enumerated and evaluated exactly.
"""
from __future__ import annotations

import numpy as np

from .continuum import ContinuumProfile
from .lattice import DiscreteProfile, LatticeSpec


def continuum_from_discrete(profile: DiscreteProfile, spec: LatticeSpec) -> ContinuumProfile:
    """Piecewise-constant interpolation of a discrete profile as a polyline."""
    profile.check(spec)
    h = profile.heights(spec)
    w = spec.column_spacing
    n = h.size
    edge0 = min(h[0], h[-1])
    pts = [(0.0, edge0), (0.0, h[0])]
    for m in range(n):
        x_right = spec.length if m == n - 1 else (m + 1) * w
        pts.append((x_right, h[m]))
        if m < n - 1:
            pts.append((x_right, h[m + 1]))
    pts.append((spec.length, edge0))
    arr = np.array(pts)
    # drop repeated points so at most two vertices share an x coordinate
    keep = np.ones(len(arr), dtype=bool)
    keep[1:] = np.any(arr[1:] != arr[:-1], axis=1)
    arr = arr[keep]
    if len(arr) == 1:
        arr = np.array([[0.0, edge0], [spec.length, edge0]])
    return ContinuumProfile(spec.length, arr[:, 0], arr[:, 1])


def _as_continuum(p, spec):
    if isinstance(p, ContinuumProfile):
        return p
    if isinstance(p, DiscreteProfile):
        if spec is None:
            raise ValueError("a lattice spec is needed to interpolate a discrete profile")
        return continuum_from_discrete(p, spec)
    raise TypeError(f"unsupported profile type {type(p).__name__}")


class _Target:
    """Boundary primitives of S(h): segment lines (with zones) and points."""

    def __init__(self, prof: ContinuumProfile):
        self.prof = prof
        x0, h0, x1, h1 = prof.segments()
        a = np.column_stack([x0, h0])
        b = np.column_stack([x1, h1])
        top = float(np.max(prof.hs)) + 10 * (prof.length + float(np.max(prof.hs)) + 1)
        cut_a = np.array([[x, lo] for x, lo, _ in prof.cuts]).reshape(-1, 2)
        cut_b = np.array([[x, top] for x, _, _ in prof.cuts]).reshape(-1, 2)
        self.seg_a = np.vstack([a, cut_a])
        self.seg_b = np.vstack([b, cut_b])
        self.points = np.unique(np.vstack([self.seg_a, b]), axis=0)
        d = self.seg_b - self.seg_a
        self.seg_len2 = np.sum(d * d, axis=1)
        self.cuts = list(prof.cuts)

    def inside(self, p: np.ndarray) -> np.ndarray:
        x, y = p[:, 0], p[:, 1]
        L = self.prof.length
        tol = 1e-12 * max(1.0, L)
        inside = (x >= -tol) & (x <= L + tol) & (y >= self.prof(np.clip(x, 0, L)) - tol)
        for xc, lo, _ in self.cuts:
            inside |= (np.abs(x - xc) <= tol) & (y >= lo - tol)
        return inside

    def distance(self, p: np.ndarray, seg_idx=None) -> np.ndarray:
        a, b, l2 = self.seg_a, self.seg_b, self.seg_len2
        if seg_idx is not None:
            a, b, l2 = a[seg_idx], b[seg_idx], l2[seg_idx]
        d = b - a
        rel = p[:, None, :] - a[None, :, :]
        t = np.clip(np.einsum("nkj,kj->nk", rel, d) / l2, 0.0, 1.0)
        close = a[None] + t[..., None] * d[None]
        dist = np.sqrt(np.min(np.sum((p[:, None, :] - close) ** 2, axis=2), axis=1))
        return np.where(self.inside(p), 0.0, dist)


def _quadratics_segment(p0, p1, tgt: _Target, seg_idx, pt_idx):
    """Coefficients (c2, c1, c0) of squared distance along p0 + t (p1 - p0)."""
    v = p1 - p0
    rows = []
    # line primitives: signed distance s(t) = n.(p0 - a) + t n.v
    a = tgt.seg_a[seg_idx]
    d = tgt.seg_b[seg_idx] - a
    nrm = np.column_stack([-d[:, 1], d[:, 0]]) / np.sqrt(tgt.seg_len2[seg_idx])[:, None]
    s0 = np.sum(nrm * (p0 - a), axis=1)
    s1 = nrm @ v
    rows.append(np.column_stack([s1 * s1, 2 * s0 * s1, s0 * s0]))
    P = tgt.points[pt_idx]
    w = p0 - P
    rows.append(np.column_stack([np.full(len(P), v @ v), 2 * (w @ v), np.sum(w * w, axis=1)]))
    # zone boundaries of line primitives: projection parameter reaches 0 or 1
    proj0 = np.sum((p0 - a) * d, axis=1)
    proj1 = d @ v
    return np.vstack(rows), proj0, proj1, tgt.seg_len2[seg_idx]


def _roots_in_unit(c2, c1, c0):
    out = []
    lin = np.abs(c2) < 1e-14 * (np.abs(c1) + np.abs(c0) + 1e-300)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -c0[lin] / c1[lin]
        out.append(r[np.isfinite(r)])
        q = ~lin
        disc = c1[q] ** 2 - 4 * c2[q] * c0[q]
        ok = disc >= 0
        sq = np.sqrt(disc[ok])
        a2, b2 = c2[q][ok], c1[q][ok]
        out.append((-b2 + sq) / (2 * a2))
        out.append((-b2 - sq) / (2 * a2))
    t = np.concatenate(out) if out else np.zeros(0)
    return t[(t > 0) & (t < 1)]


def _directed(src: ContinuumProfile, tgt: _Target) -> float:
    x0, h0, x1, h1 = src.segments()
    pieces = [(np.array([a, ha]), np.array([b, hb])) for a, ha, b, hb in zip(x0, h0, x1, h1)]
    if not pieces:
        pieces = [(np.array([0.0, src.hs[0]]), np.array([src.length, src.hs[0]]))]
    best = 0.0
    lone = [np.array([[x, lo]]) for x, lo, _ in src.cuts]
    for q in lone:
        best = max(best, float(tgt.distance(q)[0]))
    seg_lo = np.minimum(tgt.seg_a, tgt.seg_b)
    seg_hi = np.maximum(tgt.seg_a, tgt.seg_b)
    for p0, p1 in pieces:
        ends = np.vstack([p0, p1])
        f_end = tgt.distance(ends)
        best = max(best, float(f_end.max()))
        ell = float(np.linalg.norm(p1 - p0))
        bound = 0.5 * (f_end.sum() + ell) + 1e-12 * (1 + ell)
        if bound <= best:
            continue
        lo = np.minimum(p0, p1) - bound
        hi = np.maximum(p0, p1) + bound
        near_seg = np.nonzero(np.all(seg_hi >= lo, axis=1) & np.all(seg_lo <= hi, axis=1))[0]
        P = tgt.points
        near_pt = np.nonzero(np.all(P >= lo, axis=1) & np.all(P <= hi, axis=1))[0]
        if near_seg.size == 0 and near_pt.size == 0:
            continue
        quads, proj0, proj1, l2 = _quadratics_segment(p0, p1, tgt, near_seg, near_pt)
        i, j = np.triu_indices(len(quads), k=1)
        diff = quads[i] - quads[j]
        t = [_roots_in_unit(diff[:, 0], diff[:, 1], diff[:, 2])]
        with np.errstate(divide="ignore", invalid="ignore"):
            for target in (np.zeros_like(l2), l2):
                r = (target - proj0) / proj1
                t.append(r[np.isfinite(r) & (r > 0) & (r < 1)])
        t = np.unique(np.concatenate(t))
        if t.size == 0:
            continue
        pts = p0 + t[:, None] * (p1 - p0)
        f = tgt.distance(pts, near_seg if near_seg.size else None)
        best = max(best, float(f.max()))
    return best


def hausdorff_distance(p1, p2, spec: LatticeSpec | None = None) -> float:
    """Hausdorff distance between the closed complements of the two profile domains."""
    a = _as_continuum(p1, spec)
    b = _as_continuum(p2, spec)
    if abs(a.length - b.length) > 1e-12 * max(a.length, b.length):
        raise ValueError("profiles live on different periods")
    return max(_directed(a, _Target(b)), _directed(b, _Target(a)))


def hausdorff_grid_estimate(p1, p2, spec: LatticeSpec | None = None, n: int = 2000) -> float:
    """Brute-force lower estimate by densely sampling both lower boundaries."""
    a = _as_continuum(p1, spec)
    b = _as_continuum(p2, spec)

    def samples(prof):
        x0, h0, x1, h1 = prof.segments()
        t = np.linspace(0, 1, max(2, n // max(1, len(x0))))
        pts = [np.column_stack([a_ + t * (b_ - a_), c + t * (d - c)])
               for a_, c, b_, d in zip(x0, h0, x1, h1)]
        pts += [np.array([[x, lo]]) for x, lo, _ in prof.cuts]
        return np.vstack(pts)

    ta, tb = _Target(a), _Target(b)
    return max(float(tb.distance(samples(a)).max()), float(ta.distance(samples(b)).max()))
