"""Elastic relaxation at fixed profile and Metropolis profile annealing."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .discrete import (Deformation, EnergyBreakdown, MaterialParams, elastic_energy,
                       elastic_energy_and_gradient, energy, orientation_check, positions_of,
                       profile_surface_energy, surface_energy)
from .lattice import DiscreteProfile, LatticeSpec, OccupiedRegion, build_region

TRACE_HEADER = ("iteration", "energy", "gradient_norm", "step")


class OrientationError(ValueError):
    pass


@dataclass
class RelaxOptions:
    tol: float | None = None  # on |grad| / sqrt(#sites); default 1e-10 eps max(K)
    max_iter: int = 5000
    memory: int = 12
    armijo: float = 1e-4
    max_backtracks: int = 60
    fixed: np.ndarray | None = None  # boolean mask of sites held in place
    pin: bool = True  # keep the centroid of the bottom substrate row fixed
    active_bonds: np.ndarray | None = None  # boolean bond mask; None keeps every bond
    trace_path: str | None = None


@dataclass
class RelaxResult:
    deformation: Deformation
    energy: EnergyBreakdown
    iterations: int
    converged: bool
    gradient_norm: float
    trace: list = field(default_factory=list)


def default_tolerance(spec: LatticeSpec, mat: MaterialParams) -> float:
    return 1e-10 * spec.epsilon * max(mat.K_f, mat.K_s)


def _projector(region: OccupiedRegion, opts: RelaxOptions):
    n = region.n_sites
    free = np.ones(n, dtype=bool)
    if opts.fixed is not None:
        fixed = np.asarray(opts.fixed, dtype=bool)
        if fixed.shape != (n,):
            raise ValueError(f"fixed mask has shape {fixed.shape}, region has {n} sites")
        free = ~fixed
    bottom = region.half_row == region.column_bottom[region.column]
    pin = opts.pin and (opts.fixed is None or not np.any(~free))

    def project(v):
        v = np.where(free[:, None], v, 0.0)
        if pin:
            v = v - v[bottom].mean(axis=0)
        return v

    return project


def minimize_elastic(region: OccupiedRegion, y0, mat: MaterialParams,
                     spec: LatticeSpec | None = None,
                     options: RelaxOptions | None = None) -> RelaxResult:
    """L-BFGS on the harmonic elastic energy with orientation-feasible backtracking.

    Every accepted iterate keeps all triangle orientations and does not raise
    the energy.  The search direction is projected so that fixed sites stay put
    and (when pinning) the bottom-row centroid does not move.
    """
    opts = options or RelaxOptions()
    spec = region.spec
    tol = opts.tol if opts.tol is not None else default_tolerance(spec, mat)
    y = positions_of(region, y0).copy()
    if orientation_check(region, y).size:
        raise OrientationError("initial deformation flips the orientation of some triangles")
    project = _projector(region, opts)
    sqrt_n = np.sqrt(region.n_sites)

    f, g = elastic_energy_and_gradient(region, y, mat, opts.active_bonds)
    pg = project(g)
    gnorm = float(np.linalg.norm(pg))
    trace = [(0, f, gnorm, 0.0)]
    s_hist, y_hist = [], []
    it = 0
    converged = gnorm <= tol * sqrt_n
    while not converged and it < opts.max_iter:
        # two-loop recursion
        q = pg.ravel().copy()
        alphas = []
        for s, yv in reversed(list(zip(s_hist, y_hist))):
            rho = 1.0 / float(yv @ s)
            a = rho * float(s @ q)
            q -= a * yv
            alphas.append((rho, a))
        if y_hist:
            gamma = float(s_hist[-1] @ y_hist[-1]) / float(y_hist[-1] @ y_hist[-1])
        else:
            gamma = spec.epsilon / (max(mat.K_f, mat.K_s) * 12.0)
        r = gamma * q
        for (s, yv), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
            b = rho * float(yv @ r)
            r += (a - b) * s
        d = project(-r.reshape(-1, 2))
        slope = float(np.sum(d * pg))
        if slope >= 0:  # lost descent: restart from steepest descent
            s_hist.clear(); y_hist.clear()
            d = -pg * gamma
            slope = float(np.sum(d * pg))
        step = 1.0
        accepted = False
        f_noise = 1e-14 * max(abs(f), 1e-300)
        for _ in range(opts.max_backtracks):
            trial = y + step * d
            if orientation_check(region, trial).size == 0:
                f_new, g_new = elastic_energy_and_gradient(region, trial, mat, opts.active_bonds)
                pg_try = project(g_new)
                if f_new <= f + opts.armijo * step * slope:
                    accepted = True
                    break
                # When the decrease is below round-off the energy cannot decide;
                # use the approximate Wolfe test on the directional derivative.
                new_slope = float(np.sum(pg_try * d))
                if f_new <= f + f_noise and -0.9 * abs(slope) <= new_slope <= 0.8 * abs(slope):
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            if s_hist:  # stale curvature pairs: retry from steepest descent
                s_hist.clear(); y_hist.clear()
                continue
            break
        it += 1
        pg_new = project(g_new)
        sv = (step * d).ravel()
        yv = (pg_new - pg).ravel()
        if float(sv @ yv) > 1e-12 * float(np.linalg.norm(sv) * np.linalg.norm(yv)):
            s_hist.append(sv); y_hist.append(yv)
            if len(s_hist) > opts.memory:
                s_hist.pop(0); y_hist.pop(0)
        y, f, pg = trial, f_new, pg_new
        gnorm = float(np.linalg.norm(pg))
        trace.append((it, f, gnorm, step))
        converged = gnorm <= tol * sqrt_n

    if opts.trace_path:
        write_trace(opts.trace_path, trace)
    deformation = Deformation(region, y)
    E = surface_energy(region, mat) + elastic_energy(region, y, mat, active=opts.active_bonds)
    return RelaxResult(deformation, E,
                       it, bool(converged), gnorm, trace)


def write_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for row in trace:
            w.writerow([row[0], repr(float(row[1])), repr(float(row[2])), repr(float(row[3]))])


# ---------------------------------------------------------------- annealing

@dataclass
class AnnealResult:
    profile: DiscreteProfile
    deformation: Deformation
    energy: EnergyBreakdown
    proposals: int
    accepted: int
    score: float


def _parse_schedule(schedule) -> list[tuple[float, int]]:
    stages = []
    for item in schedule:
        if isinstance(item, (int, float)):
            T, n = float(item), 1
        else:
            T, n = float(item[0]), int(item[1])
        if T < 0 or n < 0:
            raise ValueError(f"bad schedule stage {item!r}")
        stages.append((T, n))
    if not stages or sum(n for _, n in stages) == 0:
        raise ValueError("annealing schedule is empty")
    return stages


def anneal_profile(spec: LatticeSpec, mat: MaterialParams, initial: DiscreteProfile,
                   volume_units: int | None = None, schedule=((0.0, 1000),), seed: int = 0,
                   elastic: bool = False, relax_options: RelaxOptions | None = None) -> AnnealResult:
    """Metropolis search over film profiles at fixed volume.

    A move takes one film atom (two volume units) from a column a to a column
    b != a, both uniform; a move from an empty column is a rejected proposal,
    which keeps the proposal distribution symmetric.  The score is the surface
    energy, plus the relaxed elastic energy when ``elastic`` is set.  At zero
    temperature only strict decreases are accepted.
    """
    stages = _parse_schedule(schedule)
    initial.check(spec)
    n0 = initial.half_heights
    if np.any(n0[0::2] < 1):
        raise ValueError("annealing works on profiles whose even columns keep their base site (n >= 1)")
    vol = int(n0.sum())
    if volume_units is not None and int(volume_units) != vol:
        raise ValueError(f"initial profile has volume {vol}, expected {volume_units}")
    rng = np.random.default_rng(seed)
    atoms = initial.atoms().copy()
    ncol = atoms.size

    def score(a):
        prof = DiscreteProfile.from_atoms(a)
        s = profile_surface_energy(prof, spec, mat).total
        if elastic:
            region = build_region(spec, prof)
            res = minimize_elastic(region, region.identity(), mat, options=relax_options)
            s += res.energy.elastic
        return s

    current = score(atoms)
    proposals = accepted = 0
    for T, steps in stages:
        for _ in range(steps):
            proposals += 1
            a = int(rng.integers(ncol))
            b = int(rng.integers(ncol - 1))
            b += b >= a
            u = rng.random()
            if atoms[a] == 0:
                continue
            trial = atoms.copy()
            trial[a] -= 1
            trial[b] += 1
            new = score(trial)
            dE = new - current
            if dE < 0 or (T > 0 and u < np.exp(-dE / T)):
                atoms, current = trial, new
                accepted += 1
    prof = DiscreteProfile.from_atoms(atoms)
    assert int(prof.half_heights.sum()) == vol
    region = build_region(spec, prof)
    if elastic:
        res = minimize_elastic(region, region.identity(), mat, options=relax_options)
        y, E = res.deformation, res.energy
    else:
        y = Deformation.identity(region)
        E = energy(region, y, mat)
    return AnnealResult(prof, y, E, proposals, accepted, current)


def enumerate_profiles(k: int, n_atoms: int):
    """All canonical profiles of 2k columns holding ``n_atoms`` film atoms."""
    ncol = 2 * k

    def rec(prefix, left, slots):
        if slots == 1:
            yield prefix + [left]
            return
        for i in range(left + 1):
            yield from rec(prefix + [i], left - i, slots - 1)

    for atoms in rec([], n_atoms, ncol):
        yield DiscreteProfile.from_atoms(atoms)


def exhaustive_minimum(spec: LatticeSpec, mat: MaterialParams, n_atoms: int):
    """Lowest surface energy over all canonical profiles with ``n_atoms`` atoms."""
    best, best_profiles = np.inf, []
    for prof in enumerate_profiles(spec.k, n_atoms):
        e = profile_surface_energy(prof, spec, mat).total
        if e < best - 1e-12:
            best, best_profiles = e, [prof]
        elif abs(e - best) <= 1e-12:
            best_profiles.append(prof)
    return best, best_profiles
