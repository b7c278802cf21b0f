"""Experiment drivers: surface-tension oracle, recovery sweeps, affine patches,
Lennard-Jones comparison and the wetting search.

Each driver returns a list of flat row dictionaries; ``rows_to_csv`` writes
them with a fixed header.
"""
from __future__ import annotations

import csv
import io
from fractions import Fraction

import numpy as np

from .approx import (hausdorff_distance, lattice_volume_match, nearest_volume_units,
                     recovery_deformation, recovery_profile)
from .continuum import (ELASTIC_PREFACTOR, ContinuumParams, ContinuumProfile, elastic_density,
                        limit_energy, phi)
from .discrete import (MaterialParams, PotentialSpec, bond_lengths, elastic_energy, energy,
                       lj_renormalized_energy, profile_surface_energy, seam_rest_lengths)
from .fields import AffineField, Field
from .lattice import SQRT3, DiscreteProfile, LatticeSpec, build_region
from .relax import RelaxOptions, anneal_profile, exhaustive_minimum, enumerate_profiles, minimize_elastic
from .rigidity import RigidMotion

SCHEMA_VERSION = 1

ORACLE_HEADER = ("epsilon", "normal_x", "normal_y", "period_p", "period_q", "strip_length",
                 "missing_bonds", "density", "phi", "rel_error")
RECOVERY_HEADER = ("epsilon", "k", "n_sites", "volume_units", "target_units", "e_surface",
                   "e_elastic", "e_total", "c_surface", "c_elastic", "c_total", "gap_total",
                   "rel_gap", "hausdorff")
AFFINE_HEADER = ("epsilon", "k", "n_sites", "energy", "continuum", "rel_gap", "iterations",
                 "converged")
LJ_HEADER = ("epsilon", "k", "n_bonds", "renormalized", "harmonic", "per_bond_gap",
             "max_strain_ratio")


def rows_to_csv(rows: list[dict], header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in header])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ------------------------------------------------------------ surface oracle

# lattice offsets (dm, dj) of the three bond directions, positions m a1 + j a2
# with a1 = (sqrt3/2, 1/2), a2 = (0, 1)
_OFFSETS = ((0, 1), (1, 0), (1, -1))


def lattice_direction(normal, max_period: int | None = None) -> tuple[int, int, bool]:
    """Primitive lattice vector (p, q) = p a1 + q a2 along the boundary with outward ``normal``.

    The boundary runs along tau = (n2, -n1).  Rational directions are found
    exactly; others raise unless ``max_period`` allows a rational staircase
    approximation, in which case the returned flag is False.
    """
    n = np.asarray(normal, dtype=float)
    if n.shape != (2,) or not np.all(np.isfinite(n)) or np.hypot(*n) == 0:
        raise ValueError("normal direction must be a nonzero finite pair")
    tau = np.array([n[1], -n[0]]) / np.hypot(*n)
    p = tau[0] * 2 / SQRT3
    q = tau[1] - p / 2
    if abs(p) < 1e-12:
        return 0, int(np.sign(q)), True
    ratio = q / p
    exact = Fraction(ratio).limit_denominator(10**6)
    if abs(float(exact) - ratio) <= 1e-12 * max(1.0, abs(ratio)):
        frac, is_exact = exact, True
    elif max_period is not None:
        frac, is_exact = Fraction(ratio).limit_denominator(int(max_period)), False
    else:
        raise ValueError(f"normal {tuple(normal)} is not a rational lattice direction; "
                         "pass a staircase period to approximate it")
    s = 1 if p > 0 else -1
    return s * frac.denominator, s * frac.numerator, is_exact


def strip_missing_bonds(p: int, q: int, periods: int, depth: int | None = None) -> int:
    """Missing bonds across the top of a periodic strip below the lattice line along (p, q).

    Sites carry the integer level v = p j - q m (one site per level and period);
    the strip keeps levels -depth < v <= 0 and, as for the exclude-bottom
    convention, bonds leaving through the bottom are not counted.
    """
    if depth is None:
        depth = 2 * (abs(p) + abs(q)) + 2
    levels = np.arange(-depth + 1, 1)
    total = 0
    for dm, dj in _OFFSETS:
        dv = p * dj - q * dm
        for sign in (1, -1):
            nb = levels + sign * dv
            total += int(np.count_nonzero(nb > 0))
    return total * int(periods)


def surface_oracle(normal, eps_list, min_length: float = 1e4, max_period: int | None = None,
                   gamma: float = 1.0) -> list[dict]:
    """Missing-bond energy per unit boundary length against phi(normal)."""
    p, q, _ = lattice_direction(normal, max_period)
    tau = np.array([SQRT3 / 2 * p, p / 2 + q])
    period = float(np.hypot(*tau))
    periods = int(np.ceil(min_length / period))
    missing = strip_missing_bonds(p, q, periods)
    nu = np.asarray(normal, dtype=float) / np.hypot(*normal)
    target = gamma * phi(nu)
    rows = []
    for eps in eps_list:
        length = periods * period * eps
        density = gamma * eps * missing / length
        rows.append({"epsilon": float(eps), "normal_x": float(nu[0]), "normal_y": float(nu[1]),
                     "period_p": p, "period_q": q, "strip_length": length,
                     "missing_bonds": missing, "density": density, "phi": target,
                     "rel_error": abs(density - target) / target})
    return rows


# ------------------------------------------------------------ recovery sweeps

def eps_for_k(length: float, k: int) -> float:
    return length / (SQRT3 * k)


def recovery_state(h: ContinuumProfile, u: Field, frame: RigidMotion, delta: float,
                   mat: MaterialParams, k: int, substrate_depth: float,
                   volume_policy: str = "nearest", target_volume: float | None = None,
                   rounding: str = "parity"):
    """Recovery profile, region and deformation at the lattice with 2k columns."""
    eps = eps_for_k(h.length, k)
    spec = LatticeSpec(eps, k, substrate_depth, lam=1.0 + np.sqrt(eps) * delta)
    prof = recovery_profile(h, spec, mat, rounding=rounding)
    V = h.volume() if target_volume is None else float(target_volume)
    if mat.wetting:
        # the recovery profile carries a monolayer on top of h; aim for V plus that layer
        V += eps * h.length
    if volume_policy == "nearest":
        target = nearest_volume_units(V, spec, prof)
        prof = lattice_volume_match(prof, target, spec)
    elif volume_policy == "recovery":
        target = int(prof.half_heights.sum())
    else:
        raise ValueError(f"unknown volume policy {volume_policy!r}")
    region = build_region(spec, prof)
    y = recovery_deformation(region, u, frame)
    return spec, prof, region, y, target


def recovery_study(h: ContinuumProfile, u: Field, frame: RigidMotion, delta: float,
                   mat: MaterialParams, ks, substrate_depth: float,
                   prefactor: float = ELASTIC_PREFACTOR, volume_policy: str = "nearest",
                   target_volume: float | None = None, rounding: str = "parity",
                   with_hausdorff: bool = True) -> list[dict]:
    """Energies of recovery states against the continuum energy, one row per k."""
    if target_volume is not None and abs(target_volume - h.volume()) > 1e-9 * max(1.0, target_volume):
        raise ValueError(f"configured volume {target_volume} differs from the profile volume {h.volume()}")
    params = ContinuumParams(delta, frame.theta, frame.translation, mat, substrate_depth, prefactor)
    c_s, c_e = limit_energy(h, u, params)
    rows = []
    for k in ks:
        spec, prof, region, y, target = recovery_state(
            h, u, frame, delta, mat, int(k), substrate_depth, volume_policy, target_volume, rounding)
        E = energy(region, y, mat)
        c_t = c_s + c_e
        rows.append({
            "epsilon": spec.epsilon, "k": int(k), "n_sites": region.n_sites,
            "volume_units": int(prof.half_heights.sum()), "target_units": int(target),
            "e_surface": E.surface, "e_elastic": E.elastic, "e_total": E.total,
            "c_surface": c_s, "c_elastic": c_e, "c_total": c_t,
            "gap_total": abs(E.total - c_t),
            "rel_gap": abs(E.total - c_t) / abs(c_t) if c_t else float("inf"),
            "hausdorff": hausdorff_distance(prof, h, spec) if with_hausdorff else float("nan"),
        })
    return rows


# ------------------------------------------------------------ affine patches

def affine_patch_state(gradient, k: int, length: float = 1.0, depth: float = 1.0):
    """Substrate slab without seam bonds, deformed by x + sqrt(eps) G x."""
    eps = eps_for_k(length, k)
    spec = LatticeSpec(eps, k, depth)
    region = build_region(spec, DiscreteProfile.zeros(k))
    active = ~np.asarray(region.bond_wrap)
    n = region.n_sites
    count = np.bincount(region.bonds[active, 0], minlength=n) + np.bincount(region.bonds[active, 1], minlength=n)
    boundary = count < 6
    field_ = AffineField(tuple(map(tuple, np.asarray(gradient, dtype=float))))
    y = region.positions + np.sqrt(eps) * field_.value(region.positions)
    return spec, region, active, boundary, y


def affine_patch_study(gradient, ks, mat: MaterialParams, length: float = 1.0, depth: float = 1.0,
                       prefactor: float = ELASTIC_PREFACTOR, relax: bool = True,
                       relax_options: RelaxOptions | None = None) -> list[dict]:
    """Relaxed energies of clamped affine substrate patches against the continuum value."""
    G = np.asarray(gradient, dtype=float)
    continuum = float(elastic_density(G, mat.K_s, 0.0, prefactor)) * length * depth
    rows = []
    for k in ks:
        spec, region, active, boundary, y = affine_patch_state(G, int(k), length, depth)
        iterations, converged = 0, True
        if relax:
            opts = relax_options or RelaxOptions()
            opts = RelaxOptions(**{**opts.__dict__, "fixed": boundary, "pin": False,
                                   "active_bonds": active})
            res = minimize_elastic(region, y, mat, options=opts)
            y, iterations, converged = res.deformation.positions, res.iterations, res.converged
        e = elastic_energy(region, y, mat, active=active).elastic
        rows.append({"epsilon": spec.epsilon, "k": int(k), "n_sites": region.n_sites,
                     "energy": e, "continuum": continuum,
                     "rel_gap": abs(e - continuum) / continuum,
                     "iterations": iterations, "converged": converged})
    return rows


# ------------------------------------------------------------ Lennard-Jones

def lj_study(ks, mat: MaterialParams, C: float = 0.5, mismatch_share: float = 0.4,
             amplitude: float = 0.02, film_rows: int = 6, length: float = 1.0,
             depth: float = 0.25) -> list[dict]:
    """Renormalized Lennard-Jones energy against the harmonic energy along eps.

    The film mismatch uses ``mismatch_share * C * sqrt(eps)`` and the
    displacement sqrt(eps) u with a smooth periodic u; each row records the
    largest |r - rest| / (C sqrt(eps)) so the small-deformation bound can be checked.
    """
    from .fields import TrigField

    rows = []
    for k in ks:
        eps = eps_for_k(length, int(k))
        lam = 1.0 + mismatch_share * C * np.sqrt(eps)
        spec = LatticeSpec(eps, int(k), depth, lam=lam)
        prof = DiscreteProfile.zigzag(int(k), 2 * film_rows + 1, 2 * film_rows)
        region = build_region(spec, prof)
        u = TrigField(length, amplitude, amplitude, 1, depth)
        # film sites also dilate to the film spacing so strains stay small
        x = region.positions
        film = region.is_film
        base = x.copy()
        base[film, 1] = x[film, 1] * lam
        y = base + np.sqrt(eps) * u.value(x)
        r = bond_lengths(region, y)
        r1, r2 = seam_rest_lengths(spec)
        fa = region.is_film[region.bonds[:, 0]] | region.is_film[region.bonds[:, 1]]
        ref = np.where(region.bond_wrap, np.where(fa, r2, r1), 1.0)
        strain = np.abs(r - ref) / (C * np.sqrt(eps))
        ren = lj_renormalized_energy(region, y, PotentialSpec("lennard-jones"), mat)
        harm = energy(region, y, mat).total
        nb = len(region.bonds)
        rows.append({"epsilon": eps, "k": int(k), "n_bonds": nb, "renormalized": ren,
                     "harmonic": harm, "per_bond_gap": abs(ren - harm) / (nb * eps),
                     "max_strain_ratio": float(strain.max())})
    return rows


# ------------------------------------------------------------ wetting search

def covers_substrate(profile: DiscreteProfile) -> bool:
    """True when the first film row (odd columns, x2 = eps/2) is complete."""
    return bool(np.all(profile.atoms()[1::2] >= 1))


def wetting_study(k: int, n_atoms: int, mat: MaterialParams, seed: int = 0,
                  schedule=((0.5, 4000), (0.1, 4000), (0.0, 2000))) -> dict:
    """Annealed and exhaustive minima, plus the best covering layer and best island.

    A covering layer completes the first film row so no substrate bond is
    exposed; every other profile leaves part of the substrate bare (an island).
    """
    spec = LatticeSpec(0.1, k, 0.3)
    start = np.zeros(2 * k, dtype=np.int64)
    start[0] = n_atoms
    initial = DiscreteProfile.from_atoms(start)
    res = anneal_profile(spec, mat, initial, int(initial.half_heights.sum()), schedule, seed)
    best, best_profiles = exhaustive_minimum(spec, mat, n_atoms)
    layer, island = np.inf, np.inf
    for prof in enumerate_profiles(k, n_atoms):
        e = profile_surface_energy(prof, spec, mat).total
        if covers_substrate(prof):
            layer = min(layer, e)
        else:
            island = min(island, e)
    return {"k": k, "n_atoms": n_atoms, "volume_units": int(initial.half_heights.sum()),
            "annealed": float(res.score), "annealed_profile": res.profile.half_heights.tolist(),
            "annealed_covers": covers_substrate(res.profile),
            "exhaustive": float(best),
            "exhaustive_profiles": [p.half_heights.tolist() for p in best_profiles],
            "layer": float(layer), "island": float(island),
            "proposals": res.proposals, "accepted": res.accepted}
