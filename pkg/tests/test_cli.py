import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filmlattice import io as fio
from filmlattice.cli import main
from filmlattice.continuum import ContinuumProfile
from filmlattice.discrete import MaterialParams
from filmlattice.harness import ORACLE_HEADER, RECOVERY_HEADER, SCHEMA_VERSION
from filmlattice.lattice import DiscreteProfile, LatticeSpec, build_region

MATS = {"K_f": 1.0, "K_s": 1.0, "gamma_f": 1.0, "gamma_s": 0.5}
TENT = {"shape": "tent", "length": 1.0, "height": 0.3, "half_width": 0.35}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ----------------------------------------------------------------------- io

def test_spec_round_trip():
    spec = LatticeSpec(0.05, 7, 0.3, lam=1.02, include_bottom_boundary=True)
    assert fio.spec_from_dict(fio.spec_to_dict(spec)) == spec
    from_length = fio.spec_from_dict({"length": 1.0, "k": 4, "substrate_depth": 0.2})
    assert from_length.length == pytest.approx(1.0)
    with pytest.raises(fio.ConfigError):
        fio.spec_from_dict({"k": 4, "substrate_depth": 0.2})
    with pytest.raises(fio.ConfigError):
        fio.spec_from_dict({"epsilon": 0.1, "k": 4, "substrate_depth": 0.2, "colour": 1})


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 5), min_size=2, max_size=8).filter(lambda a: len(a) % 2 == 0))
def test_state_round_trip(atoms):
    prof = DiscreteProfile.from_atoms(atoms)
    spec = LatticeSpec(0.1, prof.k, 0.3)
    region = build_region(spec, prof)
    y = region.identity() + 0.001
    doc = json.loads(fio.dumps(fio.state_to_dict(spec, prof, y)))
    spec2, prof2, region2, y2 = fio.state_from_dict(doc)
    assert spec2 == spec and prof2 == prof
    assert np.array_equal(y2.positions, y)


def test_profile_and_material_round_trip():
    h = ContinuumProfile(1.0, [0, 0.5, 1.0], [0.1, 0.4, 0.1], [(0.5, 0.0, 0.2)])
    back = fio.profile_from_dict(fio.profile_to_dict(h))
    assert np.array_equal(back.xs, h.xs) and back.cuts == h.cuts
    mat = MaterialParams(1.0, 2.0, 3.0, 4.0)
    assert fio.materials_from_dict(fio.materials_to_dict(mat)) == mat
    frame = fio.frame_from_dict({"theta": 0.2, "translation": [1, 2]})
    assert fio.frame_from_dict(fio.frame_to_dict(frame)) == frame
    with pytest.raises(fio.ConfigError):
        fio.profile_from_dict({"shape": "tent", "length": 1.0})
    with pytest.raises(TypeError):
        fio.profile_to_dict([1, 2])


def test_schema_errors_name_the_field():
    with pytest.raises(fio.ConfigError) as info:
        fio.validate_config({"materials": {"K_f": -1, "K_s": 1, "gamma_f": 1, "gamma_s": 1}})
    assert info.value.path == "/materials/K_f"
    with pytest.raises(fio.ConfigError) as info:
        fio.validate_config({"lattice": {"k": 0}})
    assert info.value.path == "/lattice/k"
    with pytest.raises(fio.ConfigError):
        fio.validate_config({"unknown": 1})
    with pytest.raises(fio.ConfigError):
        fio.validate_config({"profile": {"atoms": [1], "half_heights": [1]}})


def test_dumps_handles_numpy_and_non_finite():
    text = fio.dumps({"a": np.float64(1.5), "b": np.arange(2), "c": float("nan"), "d": np.inf})
    assert json.loads(text) == {"a": 1.5, "b": [0, 1], "c": None, "d": "inf"}


# ---------------------------------------------------------------------- cli

def test_surface_oracle_csv(tmp_path, capsys):
    cfg = _write(tmp_path, {"options": {"normal": [0, 1], "min_length": 20}})
    code, out, err = _run(capsys, "surface-oracle", "--config", cfg, "--eps-list", "1.0", "0.1")
    assert code == 0 and err == ""
    lines = out.splitlines()
    assert lines[0] == ",".join(ORACLE_HEADER) and len(lines) == 3


def test_recovery_csv_from_eps_list(tmp_path, capsys):
    cfg = _write(tmp_path, {"profile": TENT, "materials": MATS, "lattice": {"substrate_depth": 0.25}})
    eps = [repr(float(1 / (np.sqrt(3) * k))) for k in (8, 16)]
    out_path = tmp_path / "rec.csv"
    code, out, err = _run(capsys, "recovery", "--config", cfg, "--out", str(out_path),
                          "--eps-list", *eps)
    assert code == 0 and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0] == ",".join(RECOVERY_HEADER) and len(lines) == 3


def test_eps_list_must_divide_the_period(tmp_path, capsys):
    cfg = _write(tmp_path, {"profile": TENT, "materials": MATS})
    code, out, err = _run(capsys, "recovery", "--config", cfg, "--eps-list", "0.1")
    assert code == 2
    doc = json.loads(err)
    assert doc["error"]["path"] == "/eps-list" and doc["schema_version"] == SCHEMA_VERSION


def test_energy_of_identity_substrate(tmp_path, capsys):
    cfg = _write(tmp_path, {"lattice": {"epsilon": 0.1, "k": 3, "substrate_depth": 0.3},
                            "profile": {"half_heights": [0] * 6}, "materials": MATS})
    code, out, err = _run(capsys, "energy", "--config", cfg)
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "energy" and doc["seed"] == 0
    assert doc["result"]["energy"]["elastic"] == pytest.approx(0.0, abs=1e-25)
    assert doc["result"]["energy"]["surface"] == pytest.approx(0.5 * 0.1 * 4 * 3)


def test_rigidity_probe_on_rigid_state(tmp_path, capsys):
    cfg = _write(tmp_path, {"lattice": {"epsilon": 0.1, "k": 3, "substrate_depth": 0.3},
                            "profile": {"atoms": [1, 1, 1, 1, 1, 1]},
                            "frame": {"theta": 0.4, "translation": [1, 0]},
                            "field": {"builtin": "zero"}})
    code, out, err = _run(capsys, "rigidity-probe", "--config", cfg)
    assert code == 0 and json.loads(out)["result"]["ratio"] == 1.0


def test_relax_is_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, {"lattice": {"epsilon": 0.1, "k": 2, "substrate_depth": 0.3, "lam": 1.04},
                            "profile": {"atoms": [1, 2, 1, 2]}, "materials": MATS,
                            "options": {"perturbation": 0.05}})
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        assert _run(capsys, "relax", "--config", cfg, "--seed", "3", "--out", str(path))[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    other = tmp_path / "c.json"
    _run(capsys, "relax", "--config", cfg, "--seed", "4", "--out", str(other))
    assert other.read_bytes() != outs[0]
    # the written state reloads as a valid config
    state = json.loads(outs[0])["result"]["state"]
    assert fio.state_from_dict(fio.validate_config(state))[1] == DiscreteProfile.from_atoms([1, 2, 1, 2])


def test_anneal_yosida_rebalance(tmp_path, capsys):
    cfg = _write(tmp_path, {"lattice": {"epsilon": 0.1, "k": 2, "substrate_depth": 0.3},
                            "profile": {"atoms": [4, 0, 0, 0]}, "materials": MATS,
                            "options": {"schedule": [[0.0, 50]]}})
    doc = json.loads(_run(capsys, "anneal", "--config", cfg)[1])["result"]
    assert doc["volume_units"] == 10 and doc["proposals"] == 50
    cfg = _write(tmp_path, {"profile": {"shape": "staircase", "length": 1.0, "heights": [0.2, 0.6]},
                            "options": {"lam": 4.0}, "materials": MATS})
    doc = json.loads(_run(capsys, "yosida", "--config", cfg)[1])["result"]
    assert doc["max_slope"] == pytest.approx(4.0)
    assert doc["volume"] < 0.4 and "surface_energy" in doc  # the approximant lies below the input
    cfg = _write(tmp_path, {"profile": TENT, "options": {"volume": 0.2}})
    doc = json.loads(_run(capsys, "rebalance", "--config", cfg)[1])["result"]
    assert doc["volume"] == pytest.approx(0.2)


def test_missing_required_section(tmp_path, capsys):
    code, out, err = _run(capsys, "energy")
    assert code == 2 and json.loads(err)["error"]["path"] == "/lattice"
    code, out, err = _run(capsys, "yosida", "--config", _write(tmp_path, {"profile": TENT}))
    assert code == 2 and json.loads(err)["error"]["path"] == "/options/lam"


def test_runtime_errors_exit_one(tmp_path, capsys):
    cfg = _write(tmp_path, {"lattice": {"epsilon": 0.1, "k": 2, "substrate_depth": 0.3},
                            "profile": {"half_heights": [1, 2, 2, 2]}, "materials": MATS})
    code, out, err = _run(capsys, "energy", "--config", cfg)
    assert code == 1
    assert json.loads(err)["error"]["type"] == "ProfileError"
    code, out, err = _run(capsys, "energy", "--config", str(tmp_path / "missing.json"))
    assert code == 1


def test_module_entry_point(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    proc = subprocess.run([sys.executable, "-m", "filmlattice", "energy", "--config", str(bad)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "not valid JSON" in json.loads(proc.stderr)["error"]["message"]
    proc = subprocess.run([sys.executable, "-m", "filmlattice", "bogus"], capture_output=True, text=True)
    assert proc.returncode == 2  # argparse usage error
