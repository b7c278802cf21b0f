"""JSON documents for configs, profiles, fields and lattice states.

Floats are written with ``repr`` precision and keys sorted so that the same
state always serialises to the same bytes.
"""
from __future__ import annotations

import json

import numpy as np

from .continuum import ContinuumProfile
from .discrete import Deformation, MaterialParams, PotentialSpec
from .fields import BUILTIN_FIELDS, MeshField, builtin_field
from .lattice import DiscreteProfile, LatticeSpec, build_region
from .rigidity import RigidMotion

# ------------------------------------------------------------------ schema

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon": _POS,
                "k": {"type": "integer", "minimum": 1},
                "length": _POS,
                "substrate_depth": _POS,
                "lam": _POS,
                "include_bottom_boundary": {"type": "boolean"},
            },
        },
        "materials": {
            "type": "object",
            "additionalProperties": False,
            "required": ["K_f", "K_s", "gamma_f", "gamma_s"],
            "properties": {"K_f": _POS, "K_s": _POS, "gamma_f": _POS, "gamma_s": _POS},
        },
        "potential": {"enum": ["harmonic", "lennard-jones"]},
        "profile": {
            "type": "object",
            "oneOf": [
                {"required": ["half_heights"]},
                {"required": ["atoms"]},
                {"required": ["shape"]},
                {"required": ["points"]},
            ],
            "properties": {
                "half_heights": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "atoms": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "shape": {"enum": ["tent", "constant", "staircase"]},
                "length": _POS,
                "height": {"type": "number", "minimum": 0},
                "half_width": _POS,
                "center": _NUM,
                "heights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "points": {"type": "array", "items": _PAIR, "minItems": 2},
                "cuts": {"type": "array",
                         "items": {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}},
                "volume": {"type": "number", "minimum": 0},
            },
        },
        "field": {
            "type": "object",
            "oneOf": [{"required": ["builtin"]}, {"required": ["mesh"]}],
            "properties": {
                "builtin": {"enum": sorted(BUILTIN_FIELDS)},
                "params": {"type": "object"},
                "mesh": {
                    "type": "object",
                    "required": ["nodes", "triangles", "values"],
                    "properties": {
                        "nodes": {"type": "array", "items": _PAIR},
                        "triangles": {"type": "array", "items": {
                            "type": "array", "items": {"type": "integer", "minimum": 0},
                            "minItems": 3, "maxItems": 3}},
                        "values": {"type": "array", "items": _PAIR},
                        "extend": {"type": "number", "minimum": 0},
                    },
                },
            },
        },
        "frame": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"theta": _NUM, "translation": _PAIR},
        },
        "delta": _NUM,
        "deformation": {"type": "array", "items": _PAIR},
        "options": {"type": "object"},
    },
}


def validate_config(doc: dict) -> dict:
    """Validate against CONFIG_SCHEMA; raise ConfigError naming the offending field."""
    import jsonschema

    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(e.message, "/" + "/".join(str(p) for p in e.absolute_path))
    return doc


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path or "/"
        self.detail = message


def load_config(path) -> dict:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"not valid JSON ({exc.msg} at line {exc.lineno})") from exc
    return validate_config(doc)


# ------------------------------------------------------------------ encoding

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not np.isfinite(v):
            return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
        return v
    return obj


def dumps(doc) -> str:
    return json.dumps(_plain(doc), sort_keys=True, indent=2) + "\n"


def spec_to_dict(spec: LatticeSpec) -> dict:
    return {"epsilon": spec.epsilon, "k": spec.k, "substrate_depth": spec.substrate_depth,
            "lam": spec.lam, "include_bottom_boundary": spec.include_bottom_boundary}


def spec_from_dict(d: dict) -> LatticeSpec:
    d = dict(d)
    length = d.pop("length", None)
    if "epsilon" not in d:
        if length is None or "k" not in d:
            raise ConfigError("lattice needs epsilon, or length together with k", "/lattice")
        d["epsilon"] = length / (np.sqrt(3) * d["k"])
    try:
        return LatticeSpec(**d)
    except TypeError as exc:
        raise ConfigError(str(exc), "/lattice") from exc


def materials_from_dict(d: dict) -> MaterialParams:
    return MaterialParams(float(d["K_f"]), float(d["K_s"]), float(d["gamma_f"]), float(d["gamma_s"]))


def materials_to_dict(mat: MaterialParams) -> dict:
    return {"K_f": mat.K_f, "K_s": mat.K_s, "gamma_f": mat.gamma_f, "gamma_s": mat.gamma_s}


def profile_to_dict(profile) -> dict:
    if isinstance(profile, DiscreteProfile):
        return {"half_heights": profile.half_heights.tolist()}
    if isinstance(profile, ContinuumProfile):
        return {"length": profile.length,
                "points": np.column_stack([profile.xs, profile.hs]).tolist(),
                "cuts": [list(c) for c in profile.cuts]}
    raise TypeError(f"cannot serialise {type(profile).__name__}")


def profile_from_dict(d: dict):
    if "half_heights" in d:
        return DiscreteProfile(np.asarray(d["half_heights"], dtype=np.int64))
    if "atoms" in d:
        return DiscreteProfile.from_atoms(d["atoms"])
    if "points" in d:
        if "length" not in d:
            raise ConfigError("a polyline profile needs its period length", "/profile/length")
        return ContinuumProfile.from_points(d["length"], d["points"], [tuple(c) for c in d.get("cuts", [])])
    shape = d.get("shape")
    try:
        if shape == "tent":
            return ContinuumProfile.tent(d["length"], d["height"], d["half_width"], d.get("center"))
        if shape == "constant":
            return ContinuumProfile.constant(d["length"], d["height"])
        if shape == "staircase":
            return ContinuumProfile.staircase(d["length"], d["heights"])
    except KeyError as exc:
        raise ConfigError(f"missing parameter {exc.args[0]!r} for shape {shape!r}",
                          f"/profile/{exc.args[0]}") from exc
    raise ConfigError(f"unknown profile shape {shape!r}", "/profile/shape")


def field_from_dict(d: dict | None):
    if d is None:
        return builtin_field("zero")
    if "mesh" in d:
        m = d["mesh"]
        return MeshField(m["nodes"], m["triangles"], m["values"], float(m.get("extend", 0.0)))
    params = dict(d.get("params", {}))
    for key, value in params.items():
        if isinstance(value, list):
            params[key] = tuple(tuple(v) if isinstance(v, list) else v for v in value)
    try:
        return builtin_field(d["builtin"], **params)
    except TypeError as exc:
        raise ConfigError(str(exc), "/field/params") from exc


def frame_from_dict(d: dict | None) -> RigidMotion:
    d = d or {}
    return RigidMotion(float(d.get("theta", 0.0)), tuple(map(float, d.get("translation", (0.0, 0.0)))))


def frame_to_dict(frame: RigidMotion) -> dict:
    return {"theta": frame.theta, "translation": list(frame.translation)}


def state_to_dict(spec: LatticeSpec, profile: DiscreteProfile, y) -> dict:
    """Self-contained lattice state: spec, profile and one position per occupied site."""
    pos = y.positions if isinstance(y, Deformation) else np.asarray(y, dtype=float)
    return {"lattice": spec_to_dict(spec), "profile": profile_to_dict(profile),
            "deformation": pos.tolist()}


def state_from_dict(d: dict):
    """Inverse of ``state_to_dict``; returns (spec, profile, region, deformation)."""
    spec = spec_from_dict(d["lattice"])
    profile = profile_from_dict(d["profile"])
    if not isinstance(profile, DiscreteProfile):
        raise ConfigError("a lattice state needs a discrete profile", "/profile")
    region = build_region(spec, profile)
    if "deformation" in d and d["deformation"] is not None:
        y = Deformation(region, np.asarray(d["deformation"], dtype=float))
    else:
        y = Deformation.identity(region)
    return spec, profile, region, y


def potential_from_config(doc: dict) -> PotentialSpec:
    return PotentialSpec(doc.get("potential", "harmonic"))


def write_text(path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)
