"""Triangular reference lattice, discrete profiles and occupied regions.

Sites are addressed by (column, row).  Column ``m`` sits at
``x1 = sqrt(3) * eps * (2m + 1) / 4``; inside a column the site with row ``n``
sits at ``x2 = eps * (n + (m % 2) / 2)``.  Internally we mostly work with the
half-step index ``t = 2n + (m % 2)`` so that ``x2 = t * eps / 2`` and
neighbouring columns differ in the parity of ``t``.

The lattice is periodic in x1 with period ``L = sqrt(3) * k * eps`` (``2k``
columns).  Bonds that cross the lateral seam are kept with a wrap flag; their
raw length is not ``eps``, and the energy module gives them their own rest
lengths.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

SQRT3 = float(np.sqrt(3.0))

# forward half-step directions (dm, dt); each unordered bond is generated once
FORWARD_DIRECTIONS = ((0, 2), (1, 1), (1, -1))
ALL_DIRECTIONS = ((0, 2), (0, -2), (1, 1), (1, -1), (-1, 1), (-1, -1))


class ProfileError(ValueError):
    """Raised for inadmissible discrete profiles; ``column`` names the offender."""

    def __init__(self, message: str, column: int | None = None):
        super().__init__(message)
        self.column = column


@dataclass(frozen=True)
class LatticeSpec:
    epsilon: float
    k: int
    substrate_depth: float
    lam: float = 1.0
    include_bottom_boundary: bool = False

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or isinstance(self.k, bool):
            raise ValueError(f"k must be an integer, got {self.k!r}")
        if self.k <= 0:
            raise ValueError(f"k must be positive, got {self.k}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.substrate_depth > 0:
            raise ValueError(f"substrate_depth must be positive, got {self.substrate_depth}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "k", int(self.k))

    @property
    def n_columns(self) -> int:
        return 2 * self.k

    @property
    def length(self) -> float:
        return SQRT3 * self.k * self.epsilon

    @property
    def column_spacing(self) -> float:
        return SQRT3 * self.epsilon / 2

    def column_x(self, m) -> np.ndarray:
        return SQRT3 * self.epsilon * (2 * np.asarray(m) + 1) / 4

    @property
    def volume_unit(self) -> float:
        """Area carried by one half-step of one column."""
        return SQRT3 * self.epsilon**2 / 4

    def replace(self, **changes) -> "LatticeSpec":
        kw = dict(epsilon=self.epsilon, k=self.k, substrate_depth=self.substrate_depth,
                  lam=self.lam, include_bottom_boundary=self.include_bottom_boundary)
        kw.update(changes)
        return LatticeSpec(**kw)


@dataclass(frozen=True, order=True)
class SiteId:
    column: int
    row: int


def _check_parity(n: np.ndarray) -> None:
    for m, value in enumerate(n):
        if value < 0:
            raise ProfileError(f"column {m}: negative half-height {value}", column=m)
        if value != 0 and value % 2 == m % 2:
            want = "odd" if m % 2 == 0 else "even"
            raise ProfileError(
                f"column {m}: half-height {value} must be {want} (or 0)", column=m)


@dataclass(frozen=True, eq=False)
class DiscreteProfile:
    """Column heights h_m = n_m * eps / 2 stored as integers n_m."""

    half_heights: np.ndarray

    def __post_init__(self):
        n = np.array(self.half_heights)
        if n.ndim != 1 or n.size == 0 or n.size % 2:
            raise ProfileError(f"need an even, nonzero number of columns, got shape {n.shape}")
        if not np.issubdtype(n.dtype, np.integer):
            if not np.all(np.equal(np.mod(n, 1), 0)):
                raise ProfileError("half-heights must be integers")
        n = n.astype(np.int64)
        _check_parity(n)
        n.setflags(write=False)
        object.__setattr__(self, "half_heights", n)

    @property
    def k(self) -> int:
        return self.half_heights.size // 2

    def __eq__(self, other):
        return isinstance(other, DiscreteProfile) and np.array_equal(
            self.half_heights, other.half_heights)

    def __hash__(self):
        return hash(self.half_heights.tobytes())

    def heights(self, spec: LatticeSpec) -> np.ndarray:
        return self.half_heights * (spec.epsilon / 2)

    def check(self, spec: LatticeSpec) -> None:
        if self.k != spec.k:
            raise ProfileError(f"profile has {self.half_heights.size} columns, spec expects {2 * spec.k}")

    @classmethod
    def zeros(cls, k: int) -> "DiscreteProfile":
        return cls(np.zeros(2 * k, dtype=np.int64))

    @classmethod
    def zigzag(cls, k: int, n_even: int, n_odd: int) -> "DiscreteProfile":
        n = np.empty(2 * k, dtype=np.int64)
        n[0::2] = n_even
        n[1::2] = n_odd
        return cls(n)

    @classmethod
    def from_atoms(cls, atoms) -> "DiscreteProfile":
        """Canonical profile with ``atoms[m]`` film atoms in column m."""
        atoms = np.asarray(atoms, dtype=np.int64)
        base = (np.arange(atoms.size) % 2 == 0).astype(np.int64)
        return cls(2 * atoms + base)

    def atoms(self) -> np.ndarray:
        """Number of film atoms in each column."""
        n = self.half_heights
        even = np.arange(n.size) % 2 == 0
        return np.where(even, np.maximum(n - 1, 0) // 2, n // 2)


def top_half_index(n: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Half-step index of the highest occupied site of each column (film or substrate)."""
    base = np.where(m % 2 == 0, 0, -1)
    return np.maximum(n - 1, base)


def bottom_half_index(spec: LatticeSpec) -> np.ndarray:
    """Smallest half-step index with x2 > -R, per column."""
    m = np.arange(spec.n_columns)
    bound = -2.0 * spec.substrate_depth / spec.epsilon
    lowest = np.floor(bound + 1e-9) + 1  # strict inequality x2 > -R
    lowest = int(lowest)
    t = np.full(m.shape, lowest, dtype=np.int64)
    t += (t - m) % 2  # bump to the column's parity
    return t


def volume(profile: DiscreteProfile, spec: LatticeSpec | None = None) -> int:
    """Exact volume in units of sqrt(3) eps^2 / 4."""
    if spec is not None:
        profile.check(spec)
    return int(profile.half_heights.sum())


def interpolate_profile(profile: DiscreteProfile, spec: LatticeSpec, x1):
    """Lower semicontinuous piecewise-constant interpolation, periodic in x1."""
    profile.check(spec)
    h = profile.heights(spec)
    x = np.asarray(x1, dtype=float)
    s = np.mod(x, spec.length) / spec.column_spacing
    j = np.floor(s).astype(np.int64) % spec.n_columns
    nearest = np.rint(s)
    on_edge = np.abs(s - nearest) < 1e-12
    left = (nearest.astype(np.int64) - 1) % spec.n_columns
    right = nearest.astype(np.int64) % spec.n_columns
    out = np.where(on_edge, np.minimum(h[left], h[right]), h[j])
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class OccupiedRegion:
    spec: LatticeSpec
    profile: DiscreteProfile
    column: np.ndarray
    half_row: np.ndarray
    positions: np.ndarray
    is_film: np.ndarray
    bonds: np.ndarray
    bond_wrap: np.ndarray
    triangles: np.ndarray
    triangle_wrap: np.ndarray
    column_bottom: np.ndarray
    column_top: np.ndarray
    column_offset: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_sites(self) -> int:
        return self.column.size

    @property
    def row(self) -> np.ndarray:
        return (self.half_row - self.column % 2) // 2

    def site_ids(self) -> Iterator[SiteId]:
        for m, n in zip(self.column.tolist(), self.row.tolist()):
            yield SiteId(m, n)

    def lookup(self, column, half_row) -> np.ndarray:
        """Vectorised site index for (column, half-step) pairs; -1 when absent."""
        m = np.mod(np.asarray(column), self.spec.n_columns)
        t = np.asarray(half_row)
        lo = self.column_bottom[m]
        hi = self.column_top[m]
        ok = (t >= lo) & (t <= hi) & ((t - m) % 2 == 0)
        idx = self.column_offset[m] + (t - lo) // 2
        return np.where(ok, idx, -1)

    def index(self, site: SiteId) -> int:
        if not 0 <= site.column < self.spec.n_columns:
            raise KeyError(f"{site} is not in the region")
        t = 2 * site.row + site.column % 2
        i = int(self.lookup(site.column, t))
        if i < 0:
            raise KeyError(f"{site} is not in the region")
        return i

    def neighbor_counts(self) -> np.ndarray:
        if "nbr" not in self._cache:
            self._cache["nbr"] = np.bincount(self.bonds.ravel(), minlength=self.n_sites)
        return self._cache["nbr"]

    def virtual_neighbor_counts(self) -> np.ndarray:
        """Neighbour slots below the substrate bottom (suppressed in exclude mode)."""
        if "virtual" not in self._cache:
            count = np.zeros(self.n_sites, dtype=np.int64)
            for dm, dt in ALL_DIRECTIONS:
                m2 = (self.column + dm) % self.spec.n_columns
                count += self.half_row + dt < self.column_bottom[m2]
            self._cache["virtual"] = count
        return self._cache["virtual"]

    def reference_triangles(self) -> np.ndarray:
        """Triangle vertices with the seam unwrapped, shape (T, 3, 2)."""
        if "ref_tri" not in self._cache:
            verts = self.positions[self.triangles].copy()
            shift = self.triangle_wrap[:, None] & (self.column[self.triangles] == 0)
            verts[..., 0] += shift * self.spec.length
            self._cache["ref_tri"] = verts
        return self._cache["ref_tri"]

    def centroids(self) -> np.ndarray:
        return self.reference_triangles().mean(axis=1)

    def identity(self) -> np.ndarray:
        return self.positions.copy()


def build_region(spec: LatticeSpec, profile: DiscreteProfile) -> OccupiedRegion:
    profile.check(spec)
    ncol = spec.n_columns
    cols = np.arange(ncol)
    bottom = bottom_half_index(spec)
    top = top_half_index(profile.half_heights, cols)
    count = np.maximum((top - bottom) // 2 + 1, 0)
    offset = np.concatenate([[0], np.cumsum(count)])

    column = np.repeat(cols, count)
    local = np.arange(offset[-1]) - offset[column]
    t = bottom[column] + 2 * local
    eps = spec.epsilon
    positions = np.column_stack([spec.column_x(column), t * eps / 2])

    def target(dm, dt):
        m2 = column + dm
        wrap = m2 >= ncol
        m2 = m2 % ncol
        t2 = t + dt
        ok = (t2 >= bottom[m2]) & (t2 <= top[m2])
        return np.where(ok, offset[m2] + (t2 - bottom[m2]) // 2, -1), wrap

    bonds, wraps = [], []
    for dm, dt in FORWARD_DIRECTIONS:
        j, wrap = target(dm, dt)
        ok = j >= 0
        bonds.append(np.column_stack([np.nonzero(ok)[0], j[ok]]))
        wraps.append(wrap[ok])
    bonds = np.concatenate(bonds).astype(np.int64)
    bond_wrap = np.concatenate(wraps)

    # right-pointing: (m,t),(m,t+2),(m+1,t+1); left-pointing: (m,t),(m+1,t+1),(m+1,t-1)
    up, _ = target(0, 2)
    diag_up, wrap = target(1, 1)
    diag_down, _ = target(1, -1)
    base = np.arange(column.size)
    a = (up >= 0) & (diag_up >= 0)
    b = (diag_up >= 0) & (diag_down >= 0)
    triangles = np.concatenate([
        np.column_stack([base[a], up[a], diag_up[a]]),
        np.column_stack([base[b], diag_up[b], diag_down[b]]),
    ]).astype(np.int64)
    triangle_wrap = np.concatenate([wrap[a], wrap[b]])

    for arr in (column, t, positions, bonds, bond_wrap, triangles, triangle_wrap,
                bottom, top, offset):
        arr.setflags(write=False)
    return OccupiedRegion(
        spec=spec, profile=profile, column=column, half_row=t, positions=positions,
        is_film=t > 0, bonds=bonds, bond_wrap=bond_wrap, triangles=triangles,
        triangle_wrap=triangle_wrap, column_bottom=bottom, column_top=top,
        column_offset=offset)


def neighbor_count(region: OccupiedRegion, site: SiteId) -> int:
    """Number of occupied nearest neighbours, each lattice bond counted once."""
    return int(region.neighbor_counts()[region.index(site)])
