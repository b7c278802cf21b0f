"""Discrete surface and elastic energies on an occupied region.

Conventions
-----------
* Surface energy counts missing bonds: ``gamma * eps * (6 - #neighbours)`` per
  site, with the film or substrate tension picked by the site's material.
* Elastic energy is the ordered-pair sum ``sum_i sum_{j ~ i} eps * V_ij(r)``
  with ``r = |y_i - y_j| / eps``.  ``V_ij`` uses the constants of site ``i``,
  so a film/substrate bond contributes with two different springs.
* Bonds across the lateral seam are measured by their raw length and get
  their own rest lengths (``seam_rest_lengths``) so the identity map is
  stress free.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Literal

import numpy as np

from .lattice import (ALL_DIRECTIONS, SQRT3, DiscreteProfile, LatticeSpec,
                      OccupiedRegion, bottom_half_index, top_half_index)

# reference bond directions of a triangle, one per edge (the lattice has a vertical bond)
CELL_EDGES = np.array([[0.0, 1.0], [SQRT3 / 2, 0.5], [SQRT3 / 2, -0.5]])


@dataclass(frozen=True)
class MaterialParams:
    K_f: float
    K_s: float
    gamma_f: float
    gamma_s: float

    def __post_init__(self):
        for name in ("K_f", "K_s", "gamma_f", "gamma_s"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")

    @property
    def wetting(self) -> bool:
        return self.gamma_s >= self.gamma_f


@dataclass(frozen=True)
class EnergyBreakdown:
    surface_film: float = 0.0
    surface_substrate: float = 0.0
    elastic_film: float = 0.0
    elastic_substrate: float = 0.0

    @property
    def surface(self) -> float:
        return self.surface_film + self.surface_substrate

    @property
    def elastic(self) -> float:
        return self.elastic_film + self.elastic_substrate

    @property
    def total(self) -> float:
        return self.surface + self.elastic

    def __add__(self, other: "EnergyBreakdown") -> "EnergyBreakdown":
        return EnergyBreakdown(*(a + b for a, b in zip(self.as_tuple(), other.as_tuple())))

    def as_tuple(self):
        return (self.surface_film, self.surface_substrate,
                self.elastic_film, self.elastic_substrate)

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(surface=self.surface, elastic=self.elastic, total=self.total)
        return d


@dataclass(frozen=True, eq=False)
class Deformation:
    """Per-site images y(i), aligned with ``region`` site order."""

    region: OccupiedRegion
    positions: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.positions, dtype=float)
        if y.shape != (self.region.n_sites, 2):
            raise ValueError(
                f"deformation has shape {y.shape}, region has {self.region.n_sites} sites")
        if not np.all(np.isfinite(y)):
            raise ValueError("deformation contains non-finite values")
        object.__setattr__(self, "positions", y)

    @classmethod
    def identity(cls, region: OccupiedRegion) -> "Deformation":
        return cls(region, region.positions.copy())


@dataclass(frozen=True)
class PotentialSpec:
    mode: Literal["harmonic", "lennard-jones"] = "harmonic"

    def __post_init__(self):
        if self.mode not in ("harmonic", "lennard-jones"):
            raise ValueError(f"unknown potential mode {self.mode!r}")


def positions_of(region: OccupiedRegion, y) -> np.ndarray:
    if isinstance(y, Deformation):
        if y.region is not region and y.region.n_sites != region.n_sites:
            raise ValueError("deformation belongs to a different region")
        return y.positions
    y = np.asarray(y, dtype=float)
    if y.shape != (region.n_sites, 2):
        raise ValueError(f"deformation has shape {y.shape}, region has {region.n_sites} sites")
    return y


def _check_spec(region: OccupiedRegion, spec: LatticeSpec | None) -> LatticeSpec:
    if spec is not None and spec != region.spec:
        raise ValueError("spec does not match the region")
    return region.spec


def seam_rest_lengths(spec: LatticeSpec) -> tuple[float, float]:
    """Rest lengths (in units of eps) of substrate and film bonds across the seam.

    Both are the lengths of the seam vectors ``(sqrt3 k - sqrt3, 0) + rest * (sqrt3/2, +-1/2)``
    so that the reference lattice (substrate) or the lambda-scaled film row is unstressed.
    """
    k, lam = spec.k, spec.lam
    r1 = np.sqrt(3 * k * k - 3 * k + 1.0)
    r2 = np.sqrt(3 * (k - 1 + lam / 2) ** 2 + lam * lam / 4)
    return float(r1), float(r2)


def _bond_table(region: OccupiedRegion, mat: MaterialParams):
    key = ("bond_table", mat)
    if key not in region._cache:
        spec = region.spec
        r1, r2 = seam_rest_lengths(spec)
        a, b = region.bonds[:, 0], region.bonds[:, 1]
        wrap = region.bond_wrap

        def side(i):
            film = region.is_film[i]
            K = np.where(film, mat.K_f, mat.K_s)
            rest = np.where(film, np.where(wrap, r2, spec.lam), np.where(wrap, r1, 1.0))
            return film, K, rest

        region._cache[key] = side(a) + side(b)
    return region._cache[key]


def bond_lengths(region: OccupiedRegion, y) -> np.ndarray:
    """Raw bond lengths divided by eps."""
    y = positions_of(region, y)
    d = y[region.bonds[:, 0]] - y[region.bonds[:, 1]]
    return np.hypot(d[:, 0], d[:, 1]) / region.spec.epsilon


def surface_energy(region: OccupiedRegion, mat: MaterialParams,
                   spec: LatticeSpec | None = None) -> EnergyBreakdown:
    spec = _check_spec(region, spec)
    missing = 6 - region.neighbor_counts()
    if not spec.include_bottom_boundary:
        missing = missing - region.virtual_neighbor_counts()
    film = region.is_film
    eps = spec.epsilon
    return EnergyBreakdown(
        surface_film=mat.gamma_f * eps * float(missing[film].sum()),
        surface_substrate=mat.gamma_s * eps * float(missing[~film].sum()))


def _count_parity(lo, hi, parity):
    """How many integers t with t = parity (mod 2) lie in [lo, hi]."""
    n = (hi - parity) // 2 - (lo - parity + 1) // 2 + 1
    return np.maximum(n, 0)


def missing_bond_counts(profile: DiscreteProfile, spec: LatticeSpec) -> tuple[int, int]:
    """(film, substrate) missing-bond counts computed from column extents alone.

    Each column is an arithmetic run of half-step indices; a bond in direction
    (dm, dt) exists iff the shifted index lies inside the neighbour column's run.
    """
    profile.check(spec)
    m = np.arange(spec.n_columns)
    bottom = bottom_half_index(spec)
    top = top_half_index(profile.half_heights, m)
    parity = m % 2
    film_missing = np.zeros_like(m)
    sub_missing = np.zeros_like(m)
    for dm, dt in ALL_DIRECTIONS:
        m2 = (m + dm) % spec.n_columns
        lo2, hi2 = bottom[m2], top[m2]
        if not spec.include_bottom_boundary:
            # everything below the bottom counts as present
            hi_eff = np.maximum(hi2, lo2 - 2)
            lo_eff = np.full_like(lo2, -(1 << 40))
        else:
            hi_eff, lo_eff = hi2, lo2
        lo_ok = np.maximum(bottom, lo_eff - dt)
        hi_ok = np.minimum(top, hi_eff - dt)
        film_all = _count_parity(np.maximum(bottom, 1), top, parity)
        sub_all = _count_parity(bottom, np.minimum(top, 0), parity)
        film_ok = _count_parity(np.maximum(lo_ok, 1), hi_ok, parity)
        sub_ok = _count_parity(lo_ok, np.minimum(hi_ok, 0), parity)
        film_missing += film_all - film_ok
        sub_missing += sub_all - sub_ok
    return int(film_missing.sum()), int(sub_missing.sum())


def profile_surface_energy(profile: DiscreteProfile, spec: LatticeSpec,
                           mat: MaterialParams) -> EnergyBreakdown:
    """Surface energy of the region of ``profile`` without building the region."""
    film, sub = missing_bond_counts(profile, spec)
    return EnergyBreakdown(surface_film=mat.gamma_f * spec.epsilon * film,
                           surface_substrate=mat.gamma_s * spec.epsilon * sub)


def _bond_terms(region: OccupiedRegion, y, mat: MaterialParams, active=None):
    y = positions_of(region, y)
    film_a, K_a, rest_a, film_b, K_b, rest_b = _bond_table(region, mat)
    if active is not None:
        # switched-off bonds get zero stiffness
        active = np.asarray(active, dtype=bool)
        if active.shape != (len(region.bonds),):
            raise ValueError(f"bond mask has shape {active.shape}, region has {len(region.bonds)} bonds")
        K_a, K_b = K_a * active, K_b * active
    d = y[region.bonds[:, 0]] - y[region.bonds[:, 1]]
    length = np.hypot(d[:, 0], d[:, 1])
    r = length / region.spec.epsilon
    return d, length, r, (film_a, K_a, rest_a, film_b, K_b, rest_b)


def elastic_energy(region: OccupiedRegion, y, mat: MaterialParams,
                   spec: LatticeSpec | None = None, active=None) -> EnergyBreakdown:
    """Harmonic bond energy; ``active`` optionally restricts the sum to a subset of bonds."""
    spec = _check_spec(region, spec)
    _, _, r, (film_a, K_a, rest_a, film_b, K_b, rest_b) = _bond_terms(region, y, mat, active)
    eps = spec.epsilon
    e_a = 0.5 * eps * K_a * (r - rest_a) ** 2
    e_b = 0.5 * eps * K_b * (r - rest_b) ** 2
    return EnergyBreakdown(
        elastic_film=float(e_a[film_a].sum() + e_b[film_b].sum()),
        elastic_substrate=float(e_a[~film_a].sum() + e_b[~film_b].sum()))


def elastic_energy_and_gradient(region: OccupiedRegion, y, mat: MaterialParams, active=None):
    """Total elastic energy and its gradient with respect to every y(i)."""
    d, length, r, (_, K_a, rest_a, _, K_b, rest_b) = _bond_terms(region, y, mat, active)
    eps = region.spec.epsilon
    energy = 0.5 * eps * float(np.sum(K_a * (r - rest_a) ** 2 + K_b * (r - rest_b) ** 2))
    coef = K_a * (r - rest_a) + K_b * (r - rest_b)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(length[:, None] > 0, d / length[:, None], 0.0)
    force = coef[:, None] * unit
    n = region.n_sites
    a, b = region.bonds[:, 0], region.bonds[:, 1]
    grad = np.column_stack([
        np.bincount(a, force[:, c], n) - np.bincount(b, force[:, c], n) for c in (0, 1)])
    return energy, grad


def elastic_gradient(region: OccupiedRegion, y, mat: MaterialParams,
                     spec: LatticeSpec | None = None) -> np.ndarray:
    _check_spec(region, spec)
    return elastic_energy_and_gradient(region, y, mat)[1]


def energy(region: OccupiedRegion, y, mat: MaterialParams) -> EnergyBreakdown:
    return surface_energy(region, mat) + elastic_energy(region, y, mat)


def cell_energy(F, kind: str, spec: LatticeSpec, mat: MaterialParams):
    """Cell energy of an interior triangle of one material under the affine map F.

    Each of the three edges is shared by two ordered pairs carrying half a bond
    each, so the result is ``sum_edges K/2 (|F d| - rest)^2`` over the
    triangle's unit edge directions d.  Accepts a stack of matrices.
    """
    if kind == "film":
        K, rest = mat.K_f, spec.lam
    elif kind == "substrate":
        K, rest = mat.K_s, 1.0
    else:
        raise ValueError(f"triangle kind must be 'film' or 'substrate', got {kind!r}")
    F = np.asarray(F, dtype=float)
    images = F @ CELL_EDGES.T
    lengths = np.linalg.norm(images, axis=-2)
    out = 0.5 * K * np.sum((lengths - rest) ** 2, axis=-1)
    return float(out) if out.ndim == 0 else out


def triangle_gradients(region: OccupiedRegion, y) -> np.ndarray:
    """Piecewise-affine gradient of the interpolated deformation on each triangle."""
    y = positions_of(region, y)
    ref = region.reference_triangles()
    D_ref = np.stack([ref[:, 1] - ref[:, 0], ref[:, 2] - ref[:, 0]], axis=-1)
    tri = region.triangles
    D_def = np.stack([y[tri[:, 1]] - y[tri[:, 0]], y[tri[:, 2]] - y[tri[:, 0]]], axis=-1)
    return D_def @ np.linalg.inv(D_ref)


def triangle_cell_energies(region: OccupiedRegion, y, mat: MaterialParams) -> np.ndarray:
    """Cell energy of every triangle of the region, evaluated through its gradient.

    Mixed film/substrate triangles and seam triangles use the per-pair
    constants of the bond energy, so ``eps * sum`` reproduces the bond sum
    with each bond weighted by (number of triangles containing it) / 2.
    """
    spec = region.spec
    F = triangle_gradients(region, y)
    ref = region.reference_triangles()
    tri = region.triangles
    r1, r2 = seam_rest_lengths(spec)
    total = np.zeros(len(tri))
    for p, q in ((0, 1), (1, 2), (2, 0)):
        edge = (ref[:, q] - ref[:, p]) / spec.epsilon
        r = np.linalg.norm(np.einsum("tij,tj->ti", F, edge), axis=1)
        wrap = region.triangle_wrap & (region.column[tri[:, p]] != region.column[tri[:, q]])
        for vertex in (tri[:, p], tri[:, q]):
            film = region.is_film[vertex]
            K = np.where(film, mat.K_f, mat.K_s)
            rest = np.where(film, np.where(wrap, r2, spec.lam), np.where(wrap, r1, 1.0))
            total += 0.25 * K * (r - rest) ** 2
    return total


def orientation_check(region: OccupiedRegion, y) -> np.ndarray:
    """Indices of triangles whose signed area changes sign; empty means pass."""
    y = positions_of(region, y)
    x = region.positions
    tri = region.triangles

    def signed(p):
        u = p[tri[:, 1]] - p[tri[:, 0]]
        v = p[tri[:, 2]] - p[tri[:, 0]]
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    return np.nonzero(signed(y) * signed(x) < 0)[0]


# ---------------------------------------------------------------- Lennard-Jones

def lj_exponent(gamma: float, K: float, rest: float) -> float:
    """Exponent n of gamma*((r0/r)^2n - 2 (r0/r)^n) giving curvature K at r0.

    n = 6 is the usual 12-6 potential; here n is picked so V''(r0) = 2 gamma n^2 / r0^2 = K.
    """
    return rest * np.sqrt(K / (2.0 * gamma))


def lj_potential(r, gamma: float, K: float, rest: float):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("bond length 0 reached: Lennard-Jones singularity")
    n = lj_exponent(gamma, K, rest)
    s = (rest / r) ** n
    return gamma * (s * s - 2.0 * s)


def lj_energy(region: OccupiedRegion, y, mat: MaterialParams) -> float:
    """Atomistic energy: every ordered neighbour pair contributes eps * V_i(r)."""
    spec = region.spec
    _, _, r, (film_a, _, rest_a, film_b, _, rest_b) = _bond_terms(region, y, mat)
    total = 0.0
    for film, rest in ((film_a, rest_a), (film_b, rest_b)):
        well = np.where(film, spec.lam, 1.0)
        # seam bonds: same potential, well moved to the seam rest length
        arg = r - rest + well
        if np.any(arg <= 0):
            raise ValueError("bond length 0 reached: Lennard-Jones singularity")
        for is_film, gamma, K in ((True, mat.gamma_f, mat.K_f), (False, mat.gamma_s, mat.K_s)):
            sel = film == is_film
            if np.any(sel):
                lam = spec.lam if is_film else 1.0
                total += float(np.sum(lj_potential(arg[sel], gamma, K, lam)))
    return spec.epsilon * total


def lj_renormalized_energy(region: OccupiedRegion, y, pot: PotentialSpec,
                           mat: MaterialParams, spec: LatticeSpec | None = None) -> float:
    """Atomistic energy minus the bulk reference m_eps = -eps * sum_i 6 gamma_i.

    In exclude-bottom mode the bonds to the virtual row below the substrate are
    treated as unbroken, matching the surface-energy convention.
    """
    spec = _check_spec(region, spec)
    if pot.mode != "lennard-jones":
        raise ValueError("lj_renormalized_energy needs a lennard-jones potential")
    gamma = np.where(region.is_film, mat.gamma_f, mat.gamma_s)
    m_eps = -spec.epsilon * 6.0 * float(gamma.sum())
    out = lj_energy(region, y, mat) - m_eps
    if not spec.include_bottom_boundary:
        out -= spec.epsilon * float(np.sum(gamma * region.virtual_neighbor_counts()))
    return out
