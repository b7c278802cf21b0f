"""Profile approximation and constraint matching.

Yosida (Lipschitz) lower approximants, volume rebalancing of Lipschitz
profiles, recovery profiles and deformations on the lattice, exact lattice
volume matching, and convergence diagnostics.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .continuum import ContinuumProfile
from .discrete import Deformation
from .fields import Field
from .hausdorff import continuum_from_discrete, hausdorff_distance
from .lattice import (DiscreteProfile, LatticeSpec, OccupiedRegion, ProfileError, build_region,
                      interpolate_profile)
from .rigidity import RigidMotion, extract_displacement

REPORT_HEADER = ("epsilon", "hausdorff", "l2_y", "l2_u", "e_surface", "e_elastic", "e_total")


# ---------------------------------------------------------------- Yosida

def _sweep(xs, hs, lam):
    """Left-to-right pass: f(x) = min(h(x), inf_{y<x} h(y) + lam (x - y))."""
    out_x, out_h = [xs[0]], [hs[0]]
    f = hs[0]
    for xa, ha, xb, hb in zip(xs[:-1], hs[:-1], xs[1:], hs[1:]):
        # on [xa, xb] the result is min(h, f + lam (x - xa)), two lines
        cone_end = f + lam * (xb - xa)
        if cone_end <= hb:
            # cone below the graph at both ends, hence on the whole piece
            out_x.append(xb)
            out_h.append(cone_end)
            f = cone_end
            continue
        # graph is at or below the cone at xb; crossing if cone was below at xa
        if f < ha:
            # f + lam t = ha + s t  ->  t = (ha - f) / (lam - s)
            slope = (hb - ha) / (xb - xa) if xb > xa else np.inf
            xc = xa + (ha - f) / (lam - slope)
            out_x.append(xc)
            out_h.append(f + lam * (xc - xa))
        out_x.append(xb)
        out_h.append(hb)
        f = hb
    return np.array(out_x), np.array(out_h)


def yosida_transform(profile: ContinuumProfile, lam: float) -> ContinuumProfile:
    """h_lam(x) = inf_y h(y) + lam d(x, y) with d the periodic distance, computed exactly.

    Cuts do not enter the infimum and are dropped from the output.
    """
    if not lam > 0:
        raise ValueError("Yosida parameter must be positive")
    L = profile.length
    xs, hs = profile.xs, profile.hs
    # three periods so that every cone reaches the middle copy from its nearest image
    X = np.concatenate([xs - L, xs[1:], xs[1:] + L])
    H = np.concatenate([hs, hs[1:], hs[1:]])
    fx, fh = _sweep(X, H, lam)
    bx, bh = _sweep(-fx[::-1], fh[::-1], lam)
    gx, gh = -bx[::-1], bh[::-1]
    # restrict to [0, L]; the result is continuous so interpolation is exact
    inner = (gx > 0) & (gx < L)
    h0 = float(np.interp(0.0, gx, gh))
    xs_out = np.concatenate([[0.0], gx[inner], [L]])
    hs_out = np.concatenate([[h0], gh[inner], [h0]])
    hs_out = np.maximum(hs_out, 0.0)
    # the result is continuous: collapse vertices that coincide up to round-off
    keep = np.ones(len(xs_out), dtype=bool)
    keep[1:] = np.diff(xs_out) > 1e-13 * max(1.0, L)
    keep[-1] = True
    if len(xs_out) > 2 and xs_out[-1] - xs_out[-2] <= 1e-13 * max(1.0, L):
        keep[-2] = False
    return ContinuumProfile(L, xs_out[keep], hs_out[keep]).simplified()


# ---------------------------------------------------------------- volume

@dataclass(frozen=True)
class RebalanceInfo:
    level: float
    lift: float
    mu: float
    ratio: float


def volume_rebalance(approximant: ContinuumProfile, target_volume: float, beta: float = 0.5,
                     return_info: bool = False):
    """Raise a Lipschitz profile to volume ``target_volume``.

    With deficit d = V - |h| the level is lam = d^beta, the lift eps solves
    eps * mu = d where mu = |{h >= lam}| + |h 1_{h < lam}|_1 / lam, and the
    output is h + eps above the level and h (1 + eps / lam) below it.
    """
    if not 0 < beta < 1:
        raise ValueError("beta must lie in (0, 1)")
    if not approximant.is_lipschitz:
        raise ValueError("volume rebalancing needs a Lipschitz approximant")
    vol = approximant.volume()
    V = float(target_volume)
    deficit = V - vol
    if deficit < -1e-12 * max(1.0, V):
        raise ValueError(f"approximant volume {vol} exceeds the target {V}")
    if deficit <= 1e-15 * max(1.0, V):
        info = RebalanceInfo(0.0, 0.0, float("nan"), 0.0)
        return (approximant, info) if return_info else approximant
    lam = deficit ** beta
    # split every piece where it crosses the level
    xs, hs = [approximant.xs[0]], [approximant.hs[0]]
    for xa, ha, xb, hb in zip(approximant.xs[:-1], approximant.hs[:-1],
                              approximant.xs[1:], approximant.hs[1:]):
        if (ha - lam) * (hb - lam) < 0:
            xc = xa + (lam - ha) / (hb - ha) * (xb - xa)
            xs.append(xc)
            hs.append(lam)
        xs.append(xb)
        hs.append(hb)
    xs, hs = np.array(xs), np.array(hs)
    dx = np.diff(xs)
    lo, hi = hs[:-1], hs[1:]
    above = (lo >= lam) & (hi >= lam)
    mu = float(np.sum(dx[above]) + np.sum((0.5 * (lo + hi) * dx)[~above]) / lam)
    if mu <= 0:
        raise ValueError("volume rebalancing is degenerate: the approximant carries no mass")
    lift = deficit / mu
    new_h = np.where(hs >= lam, hs + lift, hs * (1 + lift / lam))
    out = ContinuumProfile(approximant.length, xs, new_h).simplified()
    info = RebalanceInfo(lam, lift, mu, lift / lam)
    return (out, info) if return_info else out


# ---------------------------------------------------------------- recovery

def _parity_floor(g: np.ndarray, even: np.ndarray) -> np.ndarray:
    """Largest integer <= g with the column's parity (odd on even columns), floored at 0."""
    f = np.floor(g + 1e-9).astype(np.int64)
    wrong = (f % 2 == 0) == even  # even columns need odd values
    f = f - wrong.astype(np.int64)
    return np.maximum(f, 0)


def recovery_profile(h: ContinuumProfile, spec: LatticeSpec, mat, rounding: str = "parity") -> DiscreteProfile:
    """Discrete profile approximating a Lipschitz h from below (dewetting) or with a wetting layer.

    ``rounding="parity"`` takes, per column, the largest admissible height not
    above h at the column centre, so neighbouring columns never differ by more
    than the slope allows.  The wetting case adds one monolayer on top of an
    admissible base.  ``rounding="floor"`` uses eps * floor(h / eps) plus the
    half-step offset on the columns whose parity requires it.
    """
    if not h.is_lipschitz:
        raise ValueError("recovery profiles need a Lipschitz profile without jumps or cuts")
    if abs(h.length - spec.length) > 1e-9 * spec.length:
        raise ValueError(f"profile period {h.length} does not match lattice period {spec.length}")
    m = np.arange(spec.n_columns)
    even = m % 2 == 0
    values = h(spec.column_x(m))
    if rounding == "parity":
        n = _parity_floor(2 * values / spec.epsilon, even)
        if mat.wetting:
            n = np.maximum(n, even.astype(np.int64)) + 2
    elif rounding == "floor":
        q = np.floor(values / spec.epsilon + 1e-9).astype(np.int64)
        n = 2 * q + even
        if mat.wetting:
            n = n + 2
        else:
            n = np.where(values > 0, n, 0)
    else:
        raise ValueError(f"unknown rounding rule {rounding!r}")
    return DiscreteProfile(n)


def recovery_deformation(region: OccupiedRegion, u: Field, frame: RigidMotion,
                         spec: LatticeSpec | None = None) -> Deformation:
    """y(i) = R i + b + sqrt(eps) u(i) at every occupied site."""
    eps = region.spec.epsilon
    x = region.positions
    y = frame.apply(x) + np.sqrt(eps) * u.value(x)
    return Deformation(region, y)


def _longest_positive_run(n: np.ndarray) -> tuple[int, int]:
    pos = n > 0
    if not np.any(pos):
        raise ProfileError("no column of positive height can host the volume block")
    if np.all(pos):
        return 0, n.size
    best, best_len = (0, 0), 0
    start = None
    for i, p in enumerate(np.r_[pos, False]):
        if p and start is None:
            start = i
        elif not p and start is not None:
            if i - start > best_len:
                best, best_len = (start, i), i - start
            start = None
    return best


def lattice_volume_match(profile: DiscreteProfile, target: int, spec: LatticeSpec,
                         host: tuple[int, int] | None = None) -> DiscreteProfile:
    """Change the profile by a near-square block so its volume equals ``target`` exactly.

    Volumes are in units of sqrt(3) eps^2 / 4; a column changes in steps of
    eps (two units), so the difference must be even.  With N = difference / 2,
    s = floor(sqrt|N|) consecutive host columns change by s eps each and the
    first of them takes the remainder |N| - s^2.  The host is ``host`` =
    (first, stop) or the longest run of positive columns (leftmost on ties).
    """
    profile.check(spec)
    n = profile.half_heights.copy()
    diff = int(target) - int(n.sum())
    if diff == 0:
        return profile
    if diff % 2:
        raise ProfileError(f"volume difference {diff} is odd; columns change in steps of two units")
    N = diff // 2
    s = int(np.floor(np.sqrt(abs(N))))
    rest = abs(N) - s * s
    first, stop = host if host is not None else _longest_positive_run(n)
    if stop - first < s:
        raise ProfileError(f"host interval [{first}, {stop}) is shorter than the block width {s}")
    cols = (first + np.arange(s)) % n.size
    sign = 1 if N > 0 else -1
    n[cols] += sign * 2 * s
    n[cols[0]] += sign * 2 * rest
    bad = np.nonzero((n < 0) | ((n > 0) & ((n % 2 == 1) != (np.arange(n.size) % 2 == 0))))[0]
    if bad.size:
        raise ProfileError("removing the block would empty a column below its base", int(bad[0]))
    return DiscreteProfile(n)


def nearest_volume_units(V: float, spec: LatticeSpec, profile: DiscreteProfile) -> int:
    """Integer volume target closest to V with the parity of the profile's volume."""
    units = V / spec.volume_unit
    base = int(profile.half_heights.sum())
    k = np.rint((units - base) / 2)
    return int(base + 2 * k)


# ---------------------------------------------------------------- diagnostics

def _interp_l2(region: OccupiedRegion, site_values: np.ndarray, limit_fn, mask_fn) -> float:
    """L2 distance between the piecewise-affine interpolation and a field on masked triangles."""
    tri = region.triangles[~region.triangle_wrap]
    ref = region.positions[tri]
    inside = mask_fn(ref.reshape(-1, 2)).reshape(tri.shape).all(axis=1)
    if not np.any(inside):
        return 0.0
    tri, ref = tri[inside], ref[inside]
    vals = site_values[tri]
    # edge-midpoint rule: exact for quadratics
    pairs = ((0, 1), (1, 2), (2, 0))
    area = np.sqrt(3) / 4 * region.spec.epsilon ** 2
    total = 0.0
    for i, j in pairs:
        pts = 0.5 * (ref[:, i] + ref[:, j])
        diff = 0.5 * (vals[:, i] + vals[:, j]) - limit_fn(pts)
        total += float(np.sum(diff * diff)) * area / 3
    return float(np.sqrt(total))


def convergence_report(sequence, limit, specs, energies=None, margin: float | None = None,
                       lam: float | None = None) -> list[dict]:
    """Tabulate distances of a sequence of discrete states to a limit triple.

    ``sequence`` holds (positions, DiscreteProfile) pairs, ``limit`` is
    (RigidMotion, displacement Field, ContinuumProfile), ``specs`` the lattice
    specs per row and ``energies`` optional (surface, elastic) pairs.  The
    compact set is {-R + margin < x2 < h_lam(x1) - margin} with h_lam the Yosida
    transform of the limit profile; rows where it is not inside the discrete
    domain are flagged and left empty.
    """
    frame, u, h = limit
    rows = []
    for idx, ((y, prof), spec) in enumerate(zip(sequence, specs)):
        eps = spec.epsilon
        row = {"epsilon": eps}
        row["hausdorff"] = hausdorff_distance(prof, h, spec)
        mg = margin if margin is not None else 0.1 * min(spec.substrate_depth, max(float(h.hs.max()), 1e-9))
        hl = yosida_transform(h, lam if lam is not None else 1.0 / mg) if float(h.hs.max()) > 0 else h
        region = build_region(spec, prof)
        probe_x = np.unique(np.concatenate([hl.xs, np.arange(spec.n_columns + 1) * spec.column_spacing]))
        probe_x = np.clip(probe_x, 0, spec.length)
        contained = np.all(hl(probe_x) - mg <= interpolate_profile(prof, spec, probe_x) + 1e-12)
        row["flagged"] = not contained
        if not contained:
            row.update(l2_y=float("nan"), l2_u=float("nan"))
        else:
            def mask(p, hl=hl, mg=mg, R=spec.substrate_depth):
                return (p[:, 1] > -R + mg) & (p[:, 1] < hl(p[:, 0]) - mg)
            ypos = y.positions if isinstance(y, Deformation) else np.asarray(y, dtype=float)
            row["l2_y"] = _interp_l2(region, ypos, frame.apply, mask)
            disp = extract_displacement(region, ypos, frame)
            row["l2_u"] = _interp_l2(region, disp.values, u.value, mask)
        if energies is not None:
            es, ee = energies[idx]
            row.update(e_surface=float(es), e_elastic=float(ee), e_total=float(es + ee))
        else:
            row.update(e_surface=float("nan"), e_elastic=float("nan"), e_total=float("nan"))
        rows.append(row)
    return rows


def trend_flags(values, strict: bool = False) -> dict:
    """Monotone-decrease flag and successive ratios of a sequence."""
    v = np.asarray(values, dtype=float)
    ratios = v[1:] / np.where(v[:-1] != 0, v[:-1], np.nan)
    dec = np.all(v[1:] < v[:-1]) if strict else np.all(v[1:] <= v[:-1])
    return {"decreasing": bool(dec), "ratios": ratios.tolist(),
            "max_ratio": float(np.nanmax(ratios)) if ratios.size else float("nan")}


def report_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow([repr(float(r[k])) for k in REPORT_HEADER])
    return buf.getvalue()
