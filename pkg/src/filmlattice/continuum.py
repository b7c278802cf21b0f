"""Continuum limit energy: anisotropic surface tension and linearised elasticity.

A continuum profile is a closed polyline over one period [0, L].  Vertices
are listed with non-decreasing x; two consecutive vertices with the same x
describe a jump of the lower semicontinuous graph (the function value there
is the lower one).  Cuts are vertical cracks below the graph that count twice.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discrete import MaterialParams
from .lattice import SQRT3

PHI_VERTICAL = 4 * SQRT3 / 3  # phi((0, 1))
PHI_HORIZONTAL = 2.0  # phi((1, 0))

# prefactor c in  c*K*(2|A|^2 + tr^2 A)
ELASTIC_PREFACTOR = 8 / SQRT3
# the value obtained by expanding the harmonic bond sum of the lattice to second order
LATTICE_ELASTIC_PREFACTOR = SQRT3 / 4


def phi(nu) -> np.ndarray | float:
    """Surface tension of the triangular lattice, positively 1-homogeneous and even."""
    nu = np.asarray(nu, dtype=float)
    n1, n2 = nu[..., 0], nu[..., 1]
    out = (2 * SQRT3 / 3) * (np.abs(n2) + 0.5 * np.abs(SQRT3 * n1 - n2)
                             + 0.5 * np.abs(SQRT3 * n1 + n2))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class ContinuumProfile:
    """Periodic lower semicontinuous profile on [0, L] given as a polyline."""

    length: float
    xs: np.ndarray
    hs: np.ndarray
    cuts: tuple = ()
    tol: float = field(default=1e-12, repr=False)

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        hs = np.asarray(self.hs, dtype=float)
        L = float(self.length)
        if not L > 0:
            raise ValueError("period length must be positive")
        if xs.ndim != 1 or xs.shape != hs.shape or xs.size < 2:
            raise ValueError("need matching breakpoint arrays with at least two entries")
        if abs(xs[0]) > self.tol * L or abs(xs[-1] - L) > self.tol * L:
            raise ValueError("breakpoints must start at 0 and end at L")
        if np.any(np.diff(xs) < 0):
            raise ValueError("breakpoint x coordinates must be non-decreasing")
        if np.any(hs < 0):
            raise ValueError("profile heights must be non-negative")
        if abs(hs[0] - hs[-1]) > self.tol * max(1.0, abs(hs[0])):
            raise ValueError("profile must be periodic: h(0) = h(L)")
        same = np.diff(xs) == 0
        if np.any(same[1:] & same[:-1]):
            raise ValueError("at most two breakpoints may share an x coordinate")
        xs = xs.copy()
        xs[0], xs[-1] = 0.0, L
        cuts = tuple(sorted((float(c[0]), float(c[1]), float(c[2])) for c in self.cuts))
        for x, lo, hi in cuts:
            if not 0 <= x <= L:
                raise ValueError(f"cut at x={x} outside [0, L]")
            if not 0 <= lo < hi:
                raise ValueError(f"cut ({x}, {lo}, {hi}) needs 0 <= y_low < y_high")
            if hi > self.upper_value(x, xs, hs) + self.tol:
                raise ValueError(f"cut ({x}, {lo}, {hi}) reaches above the graph")
        for a, b in zip(cuts, cuts[1:]):
            if a[0] == b[0] and b[1] < a[2]:
                raise ValueError(f"overlapping cuts at x={a[0]}")
        xs.setflags(write=False)
        hs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "hs", hs)
        object.__setattr__(self, "length", L)
        object.__setattr__(self, "cuts", cuts)

    @staticmethod
    def upper_value(x, xs, hs):
        i = np.searchsorted(xs, x, side="left")
        j = np.searchsorted(xs, x, side="right")
        vals = hs[max(i - 1, 0):min(j + 1, len(xs))]
        return float(np.max(vals))

    # constructors -----------------------------------------------------------
    @classmethod
    def from_points(cls, length, points, cuts=()):
        pts = np.asarray(points, dtype=float)
        return cls(length, pts[:, 0], pts[:, 1], tuple(cuts))

    @classmethod
    def constant(cls, length, height):
        return cls(length, [0.0, length], [height, height])

    @classmethod
    def tent(cls, length, height, half_width, center=None):
        c = length / 2 if center is None else center
        a, b = c - half_width, c + half_width
        if a < 0 or b > length:
            raise ValueError("tent does not fit inside one period")
        xs, hs = [0.0], [0.0]
        if a > 0:
            xs.append(a); hs.append(0.0)
        xs.append(c); hs.append(height)
        if b < length:
            xs.append(b); hs.append(0.0)
        xs.append(length); hs.append(0.0)
        return cls(length, xs, hs)

    @classmethod
    def staircase(cls, length, heights):
        """Piecewise-constant profile with equal-width treads and vertical risers."""
        heights = list(map(float, heights))
        w = length / len(heights)
        xs, hs = [0.0], [heights[-1]]
        for i, h in enumerate(heights):
            xs += [i * w, (i + 1) * w]
            hs += [h, h]
        xs.append(length); hs.append(heights[-1])
        return cls(length, xs, hs).simplified()

    # geometry ---------------------------------------------------------------
    def segments(self):
        """Polyline pieces as arrays (x0, h0, x1, h1), degenerate pieces dropped."""
        x0, x1 = self.xs[:-1], self.xs[1:]
        h0, h1 = self.hs[:-1], self.hs[1:]
        keep = (x0 != x1) | (h0 != h1)
        return x0[keep], h0[keep], x1[keep], h1[keep]

    def simplified(self) -> "ContinuumProfile":
        """Drop zero-length pieces and merge collinear neighbours."""
        pts = [(self.xs[0], self.hs[0])]
        for x, h in zip(self.xs[1:], self.hs[1:]):
            if (x, h) != pts[-1]:
                pts.append((x, h))
        out = [pts[0]]
        for i in range(1, len(pts) - 1):
            (xa, ha), (xb, hb), (xc, hc) = out[-1], pts[i], pts[i + 1]
            cross = (xb - xa) * (hc - ha) - (hb - ha) * (xc - xa)
            same_dir = (xb - xa) * (xc - xb) + (hb - ha) * (hc - hb) > 0
            scale = max(1.0, abs(xc - xa) + abs(hc - ha)) ** 2
            if abs(cross) <= 1e-14 * scale and same_dir:
                continue
            out.append(pts[i])
        out.append(pts[-1])
        if len(out) < 2:
            out = [pts[0], pts[-1]]
        arr = np.array(out)
        return ContinuumProfile(self.length, arr[:, 0], arr[:, 1], self.cuts)

    def __call__(self, x):
        """Lower semicontinuous evaluation, periodic in x."""
        x = np.mod(np.asarray(x, dtype=float), self.length)
        xs, hs = self.xs, self.hs
        n = len(xs)
        lo = np.searchsorted(xs, x, side="left")
        hi = np.searchsorted(xs, x, side="right")
        j = np.clip(lo, 1, n - 1)
        i = j - 1
        dx = xs[j] - xs[i]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(dx > 0, (x - xs[i]) / dx, 0.0)
        val = hs[i] + t * (hs[j] - hs[i])
        # on a breakpoint (at most two share an x) take the lower value
        on_node = hi > lo
        node = np.minimum(hs[np.minimum(lo, n - 1)], hs[np.maximum(hi - 1, 0)])
        val = np.where(on_node, node, val)
        return float(val) if val.ndim == 0 else val

    @property
    def is_lipschitz(self) -> bool:
        return bool(np.all(np.diff(self.xs) > 0)) and not self.cuts

    def max_slope(self) -> float:
        x0, h0, x1, h1 = self.segments()
        dx = x1 - x0
        if np.any(dx == 0):
            return float("inf")
        return float(np.max(np.abs(h1 - h0) / dx)) if dx.size else 0.0

    def volume(self) -> float:
        """Exact L1 norm (area under the polyline)."""
        return float(np.sum(0.5 * (self.hs[1:] + self.hs[:-1]) * np.diff(self.xs)))

    def zero_set(self) -> list[tuple[float, float]]:
        """Maximal intervals where the profile vanishes identically."""
        x0, h0, x1, h1 = self.segments()
        flat = (h0 == 0) & (h1 == 0) & (x1 > x0)
        out: list[list[float]] = []
        for a, b in zip(x0[flat], x1[flat]):
            if out and out[-1][1] == a:
                out[-1][1] = b
            else:
                out.append([float(a), float(b)])
        return [tuple(v) for v in out]

    def translated(self, shift: float) -> "ContinuumProfile":
        """Profile shifted right by ``shift`` (periodically)."""
        L = self.length
        s = shift % L
        if s == 0 or L + s == L:
            return self
        verts = [(x + s, h) for x, h in zip(self.xs, self.hs)]
        i = max(j for j, (x, _) in enumerate(verts) if x <= L)
        (xa, ha), (xb, hb) = verts[i], verts[i + 1]
        head = verts[:i + 1]
        if xa < L:
            head.append((L, ha + (hb - ha) * (L - xa) / (xb - xa)))
        cross = head[-1]
        tail = [(cross[0] - L, cross[1])] + [(x - L, h) for x, h in verts[i + 1:]]
        pts = np.array(tail + head[1:])
        pts[:, 0] = np.clip(np.maximum.accumulate(pts[:, 0]), 0.0, L)  # absorb round-off
        cuts = [((x + s) % L, lo, hi) for x, lo, hi in self.cuts]
        return ContinuumProfile(L, pts[:, 0], pts[:, 1], cuts).simplified()


# ------------------------------------------------------------- surface energy

@dataclass(frozen=True)
class BoundarySegment:
    kind: str  # "graph", "cut" or "substrate"
    start: tuple[float, float]
    end: tuple[float, float]
    length: float
    density: float


def boundary_decomposition(profile: ContinuumProfile) -> list[BoundarySegment]:
    x0, h0, x1, h1 = profile.segments()
    out = []
    for a, ha, b, hb in zip(x0, h0, x1, h1):
        length = float(np.hypot(b - a, hb - ha))
        if ha == 0 and hb == 0:
            out.append(BoundarySegment("substrate", (a, 0.0), (b, 0.0), length, 0.5))
        else:
            out.append(BoundarySegment("graph", (a, ha), (b, hb), length, 0.5))
    for x, lo, hi in profile.cuts:
        out.append(BoundarySegment("cut", (x, lo), (x, hi), hi - lo, 1.0))
    return out


def surface_energy_continuum(profile: ContinuumProfile, mat: MaterialParams) -> float:
    x0, h0, x1, h1 = profile.segments()
    # phi is 1-homogeneous, so phi of the unnormalised normal gives phi * length
    normals = np.column_stack([-(h1 - h0), x1 - x0])
    weights = phi(normals) if normals.size else np.zeros(0)
    on_zero = (h0 == 0) & (h1 == 0)
    graph = mat.gamma_f * float(np.sum(weights[~on_zero]))
    zero = min(mat.gamma_s, mat.gamma_f) * float(np.sum(weights[on_zero]))
    cuts = 2 * mat.gamma_f * PHI_HORIZONTAL * sum(hi - lo for _, lo, hi in profile.cuts)
    return graph + zero + cuts


# ------------------------------------------------------------- elastic energy

@dataclass(frozen=True)
class ContinuumParams:
    delta: float
    theta: float
    translation: tuple = (0.0, 0.0)
    materials: MaterialParams | None = None
    substrate_depth: float = 1.0
    prefactor: float = ELASTIC_PREFACTOR


def elastic_density(grad_u, K: float, mismatch: float = 0.0, prefactor: float = ELASTIC_PREFACTOR):
    """prefactor * K * (2|A|^2 + tr^2 A) with A = sym(grad u) - mismatch * Id."""
    G = np.asarray(grad_u, dtype=float)
    A = 0.5 * (G + np.swapaxes(G, -1, -2)) - mismatch * np.eye(2)
    return prefactor * K * (2 * np.sum(A * A, axis=(-1, -2)) + np.trace(A, axis1=-2, axis2=-1) ** 2)


def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def elastic_energy_continuum(profile: ContinuumProfile, u, params: ContinuumParams,
                             quad_points: int = 24) -> float:
    """Linearised elastic energy of the displacement ``u`` on the film and substrate.

    ``u`` is either a mesh field (integrated exactly triangle by triangle) or an
    analytic field (integrated by tensor Gauss rules on the trapezoids under
    each linear piece of the graph and on the substrate slab).
    """
    from .fields import MeshField

    mat = params.materials
    if mat is None:
        raise ValueError("continuum parameters need materials")
    mismatch = params.delta * np.cos(params.theta)
    if isinstance(u, MeshField):
        return u.elastic_energy(profile, mat, mismatch, params.substrate_depth, params.prefactor)

    s, w = _gauss_legendre(quad_points)
    total = 0.0
    # film: map (s, t) -> (a + s (b - a), t h(x)) on every trapezoid
    x0, h0, x1, h1 = profile.segments()
    for a, ha, b, hb in zip(x0, h0, x1, h1):
        if b <= a or (ha == 0 and hb == 0):
            continue
        X = a + s * (b - a)
        H = ha + s * (hb - ha)
        pts = np.stack([np.repeat(X, len(s)), np.outer(H, s).ravel()], axis=1)
        jac = np.repeat(H * (b - a), len(s)) * np.tile(w, len(s)) * np.repeat(w, len(s))
        dens = elastic_density(u.gradient(pts), mat.K_f, mismatch, params.prefactor)
        total += float(np.sum(dens * jac))
    # substrate slab (0, L) x (-R, 0), split into columns for accuracy
    L, R = profile.length, params.substrate_depth
    nx = max(4, int(np.ceil(8 * L / R)))
    ny = 8
    for i in range(nx):
        for j in range(ny):
            X = L * (i + s) / nx
            Y = -R + R * (j + s) / ny
            pts = np.stack(np.meshgrid(X, Y, indexing="ij"), axis=-1).reshape(-1, 2)
            wt = np.outer(w, w).ravel() * (L / nx) * (R / ny)
            dens = elastic_density(u.gradient(pts), mat.K_s, 0.0, params.prefactor)
            total += float(np.sum(dens * wt))
    return total


def limit_energy(profile: ContinuumProfile, u, params: ContinuumParams) -> tuple[float, float]:
    """(surface, elastic) parts of the continuum energy."""
    return (surface_energy_continuum(profile, params.materials),
            elastic_energy_continuum(profile, u, params))
