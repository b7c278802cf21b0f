"""Command-line front end.

    filmlattice SUBCOMMAND [--config PATH] [--out PATH] [--seed N] [--eps-list E ...]

Tables (surface-oracle, recovery) are written as CSV, everything else as a
JSON document.  On failure a JSON error document goes to stderr and the exit
code is nonzero: 2 for configuration errors, 1 for anything else.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as fio
from .approx import recovery_deformation, volume_rebalance, yosida_transform
from .continuum import (ELASTIC_PREFACTOR, LATTICE_ELASTIC_PREFACTOR, ContinuumProfile,
                        surface_energy_continuum)
from .discrete import Deformation, energy, lj_energy, lj_renormalized_energy
from .harness import (ORACLE_HEADER, RECOVERY_HEADER, SCHEMA_VERSION, recovery_study,
                      rows_to_csv, surface_oracle)
from .lattice import DiscreteProfile, SQRT3, build_region
from .relax import RelaxOptions, anneal_profile, minimize_elastic
from .rigidity import cell_bound_probe, lemma_distance_probe, rigidity_probe

PREFACTORS = {"continuum": ELASTIC_PREFACTOR, "lattice": LATTICE_ELASTIC_PREFACTOR}


def _need(doc, key):
    if key not in doc:
        raise fio.ConfigError(f"'{key}' is required for this command", f"/{key}")
    return doc[key]


def _options(doc) -> dict:
    return dict(doc.get("options", {}))


def _materials(doc):
    return fio.materials_from_dict(_need(doc, "materials"))


def _continuum_profile(doc) -> ContinuumProfile:
    prof = fio.profile_from_dict(_need(doc, "profile"))
    if not isinstance(prof, ContinuumProfile):
        raise fio.ConfigError("this command needs a continuum profile (shape or points)", "/profile")
    return prof


def _state(doc):
    """Spec, profile, region and deformation described by a config."""
    spec = fio.spec_from_dict(_need(doc, "lattice"))
    prof = fio.profile_from_dict(_need(doc, "profile"))
    if not isinstance(prof, DiscreteProfile):
        raise fio.ConfigError("this command needs a discrete profile (half_heights or atoms)", "/profile")
    region = build_region(spec, prof)
    if "deformation" in doc:
        y = Deformation(region, np.asarray(doc["deformation"], dtype=float))
    elif "field" in doc:
        y = recovery_deformation(region, fio.field_from_dict(doc["field"]),
                                 fio.frame_from_dict(doc.get("frame")))
    else:
        y = Deformation.identity(region)
    return spec, prof, region, y


def _ks_from_eps(eps_list, length):
    ks = []
    for eps in eps_list:
        k = length / (SQRT3 * eps)
        if not np.isclose(k, round(k), rtol=0, atol=1e-6 * max(1.0, k)) or round(k) < 1:
            raise fio.ConfigError(f"epsilon {eps} does not divide the period: L/(sqrt3 eps) = {k}",
                                  "/eps-list")
        ks.append(int(round(k)))
    return ks


# ------------------------------------------------------------------ commands

def cmd_surface_oracle(doc, args):
    opts = _options(doc)
    normal = opts.get("normal")
    if normal is None:
        raise fio.ConfigError("options.normal is required", "/options/normal")
    eps_list = args.eps_list or opts.get("eps_list") or [1.0]
    gamma = float(doc.get("materials", {}).get("gamma_f", 1.0))
    rows = surface_oracle(normal, eps_list, float(opts.get("min_length", 1e4)),
                          opts.get("max_period"), gamma)
    return rows_to_csv(rows, ORACLE_HEADER)


def cmd_recovery(doc, args):
    opts = _options(doc)
    h = _continuum_profile(doc)
    mat = _materials(doc)
    lat = doc.get("lattice", {})
    depth = float(lat.get("substrate_depth", 1.0))
    if args.eps_list:
        ks = _ks_from_eps(args.eps_list, h.length)
    elif "ks" in opts:
        ks = [int(k) for k in opts["ks"]]
    else:
        raise fio.ConfigError("give --eps-list or options.ks", "/options/ks")
    prefactor = opts.get("prefactor", "continuum")
    prefactor = PREFACTORS[prefactor] if isinstance(prefactor, str) else float(prefactor)
    rows = recovery_study(h, fio.field_from_dict(doc.get("field")), fio.frame_from_dict(doc.get("frame")),
                          float(doc.get("delta", 0.0)), mat, ks, depth, prefactor,
                          opts.get("volume_policy", "nearest"), doc["profile"].get("volume"),
                          opts.get("rounding", "parity"), bool(opts.get("hausdorff", True)))
    return rows_to_csv(rows, RECOVERY_HEADER)


def cmd_energy(doc, args):
    spec, prof, region, y = _state(doc)
    mat = _materials(doc)
    E = energy(region, y, mat)
    out = {"energy": E.as_dict(), "n_sites": region.n_sites, "n_bonds": len(region.bonds)}
    if fio.potential_from_config(doc).mode == "lennard-jones":
        out["lennard_jones"] = {"raw": lj_energy(region, y, mat),
                                "renormalized": lj_renormalized_energy(
                                    region, y, fio.potential_from_config(doc), mat)}
    return out


def cmd_relax(doc, args):
    spec, prof, region, y = _state(doc)
    mat = _materials(doc)
    opts = _options(doc)
    pos = y.positions.copy()
    amp = float(opts.get("perturbation", 0.0))
    if amp:
        rng = np.random.default_rng(args.seed)
        pos = pos + amp * spec.epsilon * rng.uniform(-1, 1, pos.shape)
    ro = RelaxOptions(tol=opts.get("tol"), max_iter=int(opts.get("max_iter", 5000)),
                      memory=int(opts.get("memory", 12)), pin=bool(opts.get("pin", True)),
                      trace_path=opts.get("trace"))
    res = minimize_elastic(region, pos, mat, options=ro)
    return {"energy": res.energy.as_dict(), "iterations": res.iterations,
            "converged": res.converged, "gradient_norm": res.gradient_norm,
            "state": fio.state_to_dict(spec, prof, res.deformation)}


def cmd_rigidity_probe(doc, args):
    opts = _options(doc)
    kind = opts.get("kind", "state")
    n = int(opts.get("n_samples", 100_000))
    if kind == "lemma":
        return lemma_distance_probe(n, args.seed)
    if kind == "cell":
        return cell_bound_probe(n, args.seed, float(opts.get("epsilon", 0.01)))
    if kind != "state":
        raise fio.ConfigError(f"unknown probe kind {kind!r}", "/options/kind")
    spec, prof, region, y = _state(doc)
    sub = opts.get("subregion")
    return rigidity_probe(region, y, subregion=tuple(sub) if sub else None)


def cmd_anneal(doc, args):
    spec = fio.spec_from_dict(_need(doc, "lattice"))
    mat = _materials(doc)
    prof = fio.profile_from_dict(_need(doc, "profile"))
    if not isinstance(prof, DiscreteProfile):
        raise fio.ConfigError("annealing starts from a discrete profile", "/profile")
    opts = _options(doc)
    schedule = opts.get("schedule", [[0.0, 1000]])
    res = anneal_profile(spec, mat, prof, None, schedule, args.seed, bool(opts.get("elastic", False)))
    return {"profile": fio.profile_to_dict(res.profile), "score": res.score,
            "energy": res.energy.as_dict(), "proposals": res.proposals,
            "accepted": res.accepted, "volume_units": int(res.profile.half_heights.sum())}


def cmd_yosida(doc, args):
    h = _continuum_profile(doc)
    lam = _options(doc).get("lam")
    if lam is None:
        raise fio.ConfigError("options.lam is required", "/options/lam")
    out = yosida_transform(h, float(lam))
    res = {"profile": fio.profile_to_dict(out), "volume": out.volume(), "max_slope": out.max_slope()}
    if "materials" in doc:
        mat = _materials(doc)
        res["surface_energy"] = surface_energy_continuum(out, mat)
        res["input_surface_energy"] = surface_energy_continuum(h, mat)
    return res


def cmd_rebalance(doc, args):
    h = _continuum_profile(doc)
    opts = _options(doc)
    if "volume" not in opts:
        raise fio.ConfigError("options.volume is required", "/options/volume")
    out, info = volume_rebalance(h, float(opts["volume"]), float(opts.get("beta", 0.5)), True)
    return {"profile": fio.profile_to_dict(out), "volume": out.volume(),
            "level": info.level, "lift": info.lift, "mu": info.mu}


COMMANDS = {
    "surface-oracle": cmd_surface_oracle,
    "recovery": cmd_recovery,
    "relax": cmd_relax,
    "energy": cmd_energy,
    "rigidity-probe": cmd_rigidity_probe,
    "anneal": cmd_anneal,
    "yosida": cmd_yosida,
    "rebalance": cmd_rebalance,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="filmlattice", description="Epitaxial film lattice experiments")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="JSON config document (default: empty config)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-list", type=float, nargs="+", dest="eps_list")
    return p


def _error_document(exc: BaseException) -> dict:
    err = {"type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, fio.ConfigError):
        err["path"] = exc.path
        err["message"] = exc.detail
    return {"error": err, "schema_version": SCHEMA_VERSION}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = fio.load_config(args.config) if args.config else fio.validate_config({})
        result = COMMANDS[args.command](doc, args)
        if isinstance(result, dict):
            result = fio.dumps({"command": args.command, "schema_version": SCHEMA_VERSION,
                                "seed": args.seed, "result": result})
        if args.out:
            fio.write_text(args.out, result)
        else:
            sys.stdout.write(result)
    except fio.ConfigError as exc:
        sys.stderr.write(json.dumps(_error_document(exc), sort_keys=True) + "\n")
        return 2
    except (ValueError, TypeError, KeyError, OSError) as exc:
        sys.stderr.write(json.dumps(_error_document(exc), sort_keys=True) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
