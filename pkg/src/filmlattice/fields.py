"""Displacement fields: analytic built-ins and piecewise-affine mesh fields.

Every field exposes ``value(points)`` with shape (N, 2) and
``gradient(points)`` with shape (N, 2, 2), ``gradient[:, a, b] = d u_a / d x_b``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

TWO_PI = 2 * np.pi


class Field:
    def value(self, points) -> np.ndarray:
        raise NotImplementedError

    def gradient(self, points) -> np.ndarray:
        raise NotImplementedError

    def __add__(self, other: "Field") -> "Field":
        return SumField((self, other))

    def scaled(self, factor: float) -> "Field":
        return ScaledField(self, factor)


@dataclass(frozen=True)
class SumField(Field):
    parts: tuple

    def value(self, points):
        return sum(p.value(points) for p in self.parts)

    def gradient(self, points):
        return sum(p.gradient(points) for p in self.parts)


@dataclass(frozen=True)
class ScaledField(Field):
    base: Field
    factor: float

    def value(self, points):
        return self.factor * self.base.value(points)

    def gradient(self, points):
        return self.factor * self.base.gradient(points)


@dataclass(frozen=True)
class ZeroField(Field):
    def value(self, points):
        return np.zeros((len(np.atleast_2d(points)), 2))

    def gradient(self, points):
        return np.zeros((len(np.atleast_2d(points)), 2, 2))


@dataclass(frozen=True)
class AffineField(Field):
    """u(x) = G x + c.  Not periodic unless G[:, 0] = 0."""

    matrix: tuple = ((0.0, 0.0), (0.0, 0.0))
    offset: tuple = (0.0, 0.0)

    def value(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return x @ np.asarray(self.matrix).T + np.asarray(self.offset)

    def gradient(self, points):
        n = len(np.atleast_2d(points))
        return np.broadcast_to(np.asarray(self.matrix, dtype=float), (n, 2, 2)).copy()


@dataclass(frozen=True)
class TrigField(Field):
    """Smooth x1-periodic field

        u1 = a * sin(2 pi n x1 / L) * cos(pi x2 / d) + c * x2
        u2 = b * cos(2 pi n x1 / L) * sin(pi x2 / d)
    """

    length: float
    a: float = 0.1
    b: float = 0.1
    mode: int = 1
    depth: float = 1.0
    shear: float = 0.0

    def _parts(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        q = TWO_PI * self.mode / self.length
        p = np.pi / self.depth
        return x, q, p, q * x[:, 0], p * x[:, 1]

    def value(self, points):
        x, q, p, s, t = self._parts(points)
        u1 = self.a * np.sin(s) * np.cos(t) + self.shear * x[:, 1]
        u2 = self.b * np.cos(s) * np.sin(t)
        return np.column_stack([u1, u2])

    def gradient(self, points):
        x, q, p, s, t = self._parts(points)
        g = np.empty((len(x), 2, 2))
        g[:, 0, 0] = self.a * q * np.cos(s) * np.cos(t)
        g[:, 0, 1] = -self.a * p * np.sin(s) * np.sin(t) + self.shear
        g[:, 1, 0] = -self.b * q * np.sin(s) * np.sin(t)
        g[:, 1, 1] = self.b * p * np.cos(s) * np.cos(t)
        return g


@dataclass(frozen=True)
class PolynomialField(Field):
    """u_a(x) = sum_j coeffs[a][j] * x2**j, periodic in x1 by construction."""

    coeffs: tuple = ((0.0,), (0.0,))

    def value(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        return np.column_stack([np.polynomial.polynomial.polyval(x[:, 1], c)
                                for c in self.coeffs])

    def gradient(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float))
        g = np.zeros((len(x), 2, 2))
        for a, c in enumerate(self.coeffs):
            dc = np.polynomial.polynomial.polyder(np.asarray(c, dtype=float))
            g[:, a, 1] = np.polynomial.polynomial.polyval(x[:, 1], dc) if dc.size else 0.0
        return g


@dataclass(frozen=True)
class BandShiftedField(Field):
    """Field lifted by ``shift`` above a frozen band [x2_0, x2_0 + shift].

    Above the band u(x1, x2 - shift), inside it u(x1, x2_0), below it u itself.
    Used to follow a profile raised by ``shift`` while keeping periodicity.
    """

    base: Field
    shift: float
    band_start: float

    def _split(self, points):
        x = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        top = self.band_start + self.shift
        above = x[:, 1] > top
        band = (x[:, 1] >= self.band_start) & ~above
        x[above, 1] -= self.shift
        x[band, 1] = self.band_start
        return x, band

    def value(self, points):
        x, _ = self._split(points)
        return self.base.value(x)

    def gradient(self, points):
        x, band = self._split(points)
        g = self.base.gradient(x)
        g[band, :, 1] = 0.0
        return g


BUILTIN_FIELDS = {
    "zero": ZeroField,
    "affine": AffineField,
    "trig": TrigField,
    "polynomial": PolynomialField,
}


def builtin_field(name: str, **params) -> Field:
    try:
        cls = BUILTIN_FIELDS[name]
    except KeyError:
        raise ValueError(f"unknown built-in field {name!r}; choose from {sorted(BUILTIN_FIELDS)}")
    return cls(**params)


# ----------------------------------------------------------------- mesh fields

@dataclass(frozen=True, eq=False)
class MeshField(Field):
    """Piecewise-affine field on a triangulation given by node and element lists."""

    nodes: np.ndarray
    triangles: np.ndarray
    values: np.ndarray
    extend: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        tri = np.asarray(self.triangles, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or vals.shape != nodes.shape:
            raise ValueError("mesh nodes and values must both have shape (P, 2)")
        if tri.ndim != 2 or tri.shape[1] != 3 or tri.min() < 0 or tri.max() >= len(nodes):
            raise ValueError("triangles must index existing nodes")
        # orient counter-clockwise
        area2 = self._area2(nodes, tri)
        if np.any(area2 == 0):
            raise ValueError("degenerate triangle in mesh")
        flip = area2 < 0
        tri = tri.copy()
        tri[flip] = tri[flip][:, [0, 2, 1]]
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tri)
        object.__setattr__(self, "values", vals)

    @staticmethod
    def _area2(nodes, tri):
        p = nodes[tri]
        u, v = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    @property
    def areas(self) -> np.ndarray:
        return 0.5 * self._area2(self.nodes, self.triangles)

    def triangle_gradients(self) -> np.ndarray:
        if "grad" not in self._cache:
            p = self.nodes[self.triangles]
            f = self.values[self.triangles]
            D = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
            V = np.stack([f[:, 1] - f[:, 0], f[:, 2] - f[:, 0]], axis=-1)
            self._cache["grad"] = V @ np.linalg.inv(D)
        return self._cache["grad"]

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Containing triangle and barycentric weights; nearest triangle within ``extend``."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        p = self.nodes[self.triangles]
        if "tree" not in self._cache:
            self._cache["tree"] = cKDTree(p.mean(axis=1))
            self._cache["inv"] = np.linalg.inv(
                np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1))
        tree, inv = self._cache["tree"], self._cache["inv"]
        n_tri = len(self.triangles)
        kk = min(12, n_tri)
        _, cand = tree.query(x, k=kk)
        cand = np.asarray(cand).reshape(len(x), kk)
        best_tri = np.full(len(x), -1)
        best_out = np.full(len(x), np.inf)
        best_bary = np.zeros((len(x), 3))
        for c in range(kk):
            t = cand[:, c]
            lam12 = np.einsum("nij,nj->ni", inv[t], x - p[t, 0])
            bary = np.column_stack([1 - lam12.sum(axis=1), lam12])
            outside = np.maximum(-bary.min(axis=1), 0.0)
            better = outside < best_out - 1e-15
            best_out = np.where(better, outside, best_out)
            best_tri = np.where(better, t, best_tri)
            best_bary[better] = bary[better]
        # distance of outside points to their best triangle, measured crudely via its size
        scale = np.sqrt(np.abs(self.areas[best_tri]) * 2)
        miss = best_out * scale > self.extend + 1e-12 * np.maximum(scale, 1.0)
        if np.any(miss):
            bad = x[np.argmax(miss)]
            raise ValueError(f"point {bad.tolist()} lies outside the mesh of the displacement field")
        return best_tri, best_bary

    def value(self, points):
        t, bary = self.locate(points)
        f = self.values[self.triangles[t]]
        return np.einsum("ni,nij->nj", bary, f)

    def gradient(self, points):
        t, _ = self.locate(points)
        return self.triangle_gradients()[t]

    def check_periodic(self, length: float, tol: float = 1e-9) -> None:
        left = np.abs(self.nodes[:, 0]) <= tol * length
        right = np.abs(self.nodes[:, 0] - length) <= tol * length
        lv = {round(float(y), 9): v for y, v in zip(self.nodes[left, 1], self.values[left])}
        for y, v in zip(self.nodes[right, 1], self.values[right]):
            key = round(float(y), 9)
            if key in lv and np.max(np.abs(lv[key] - v)) > tol * max(1.0, np.max(np.abs(v))):
                raise ValueError(f"mesh field is not periodic at x2={y}")

    def elastic_energy(self, profile, mat, mismatch, depth, prefactor) -> float:
        from .continuum import elastic_density

        p = self.nodes[self.triangles]
        tol = 1e-12 * max(1.0, profile.length)
        above = (p[..., 1] > tol).any(axis=1)
        below = (p[..., 1] < -tol).any(axis=1)
        if np.any(above & below):
            i = int(np.argmax(above & below))
            raise ValueError(f"triangle {i} straddles the film/substrate interface x2 = 0")
        areas = self.areas
        film = above
        film_area = float(areas[film].sum())
        sub_area = float(areas[~film].sum())
        want_film, want_sub = profile.volume(), profile.length * depth
        if (abs(film_area - want_film) > 1e-9 * max(1.0, want_film)
                or abs(sub_area - want_sub) > 1e-9 * max(1.0, want_sub)):
            raise ValueError(
                f"mesh does not match the profile: film area {film_area} vs {want_film}, "
                f"substrate area {sub_area} vs {want_sub}")
        c = p.mean(axis=1)
        if np.any(c[film, 1] > profile(c[film, 0]) + tol) or np.any(c[~film, 1] < -depth - tol):
            raise ValueError("mesh does not match the profile: triangles outside the domain")
        G = self.triangle_gradients()
        dens = np.where(film,
                        elastic_density(G, mat.K_f, mismatch, prefactor),
                        elastic_density(G, mat.K_s, 0.0, prefactor))
        return float(np.sum(dens * areas))


def mesh_profile(profile, depth: float, field_: Field | None = None, nx: int = 4,
                 ny_film: int = 4, ny_sub: int = 4) -> MeshField:
    """Conforming triangulation of film and substrate below a Lipschitz profile.

    Every linear piece of the graph is split into ``nx`` columns; film columns
    get ``ny_film`` layers following the graph, the substrate ``ny_sub`` layers.
    Nodal values sample ``field_`` (zero when omitted).
    """
    if not profile.is_lipschitz:
        raise ValueError("meshing needs a Lipschitz profile without cuts")
    xb = profile.xs
    xg = np.unique(np.concatenate([np.linspace(a, b, nx + 1) for a, b in zip(xb[:-1], xb[1:])]))
    hg = profile(xg)
    hg[-1] = hg[0]
    nodes, tris = [], []
    index = {}

    def node(x, y):
        key = (float(x), float(y))
        if key not in index:
            index[key] = len(nodes)
            nodes.append(key)
        return index[key]

    ys = np.linspace(-depth, 0.0, ny_sub + 1)
    for i in range(len(xg) - 1):
        for j in range(ny_sub):
            a, b = node(xg[i], ys[j]), node(xg[i + 1], ys[j])
            c, d = node(xg[i + 1], ys[j + 1]), node(xg[i], ys[j + 1])
            tris += [(a, b, c), (a, c, d)]
    ts = np.linspace(0.0, 1.0, ny_film + 1)
    for i in range(len(xg) - 1):
        h0, h1 = hg[i], hg[i + 1]
        if h0 == 0 and h1 == 0:
            continue
        for j in range(ny_film):
            a, b = node(xg[i], ts[j] * h0), node(xg[i + 1], ts[j] * h1)
            c, d = node(xg[i + 1], ts[j + 1] * h1), node(xg[i], ts[j + 1] * h0)
            for tri in ((a, b, c), (a, c, d)):
                if len(set(tri)) == 3:
                    tris.append(tri)
    nodes = np.array(nodes)
    tris = np.array(tris)
    area2 = MeshField._area2(nodes, tris)
    tris = tris[np.abs(area2) > 1e-14 * profile.length ** 2]
    values = np.zeros_like(nodes) if field_ is None else field_.value(nodes)
    return MeshField(nodes, tris, values)
