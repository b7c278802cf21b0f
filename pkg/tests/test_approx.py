import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filmlattice.approx import (REPORT_HEADER, convergence_report, lattice_volume_match,
                                nearest_volume_units, recovery_deformation, recovery_profile,
                                report_csv, trend_flags, volume_rebalance, yosida_transform)
from filmlattice.continuum import ContinuumProfile
from filmlattice.discrete import MaterialParams
from filmlattice.fields import TrigField, ZeroField
from filmlattice.hausdorff import continuum_from_discrete, hausdorff_distance, hausdorff_grid_estimate
from filmlattice.lattice import DiscreteProfile, LatticeSpec, ProfileError, build_region, volume
from filmlattice.rigidity import RigidMotion

SQRT3 = np.sqrt(3.0)
DEWET = MaterialParams(1.0, 1.0, 1.0, 0.5)
WET = MaterialParams(1.0, 1.0, 1.0, 2.0)

heights = st.one_of(st.just(0.0), st.floats(0.01, 2.0))
polylines = st.lists(heights, min_size=2, max_size=7).map(
    lambda v: ContinuumProfile(2.0, np.linspace(0, 2.0, len(v) + 1), np.array(v + [v[0]])))


def _brute_yosida(h, lam, x):
    y = np.linspace(0, h.length, 20001)
    hy = h(y)
    d = np.abs(x[:, None] - y[None, :])
    d = np.minimum(d, h.length - d)
    return np.min(hy[None, :] + lam * d, axis=1)


# ------------------------------------------------------------------ Yosida

def test_yosida_examples():
    h = ContinuumProfile.staircase(1.0, [0.0, 1.0])
    out = yosida_transform(h, 4.0)
    # the step becomes a ramp of slope 4 that reaches 1 a quarter in
    assert out(0.5) == pytest.approx(0.0) and out(0.75) == pytest.approx(1.0)
    assert out(0.625) == pytest.approx(0.5)
    assert out.is_lipschitz and out.max_slope() == pytest.approx(4.0)
    tent = ContinuumProfile.tent(1.0, 0.3, 0.35)
    assert np.allclose(yosida_transform(tent, 1.0).hs, tent.simplified().hs)
    with pytest.raises(ValueError):
        yosida_transform(tent, 0.0)


@settings(max_examples=40, deadline=None)
@given(polylines, st.floats(0.2, 20))
def test_yosida_matches_brute_force(h, lam):
    out = yosida_transform(h, lam)
    x = np.linspace(0, h.length, 257)
    assert np.allclose(out(x), _brute_yosida(h, lam, x), atol=2e-3 * max(1.0, lam))
    assert out.max_slope() <= lam * (1 + 1e-9)
    assert np.all(out(x) <= h(x) + 1e-12)


@settings(max_examples=40, deadline=None)
@given(polylines, st.floats(0.2, 10), st.floats(1.0, 3.0))
def test_yosida_monotone_in_parameter(h, lam, factor):
    x = np.linspace(0, h.length, 101)
    lo, hi = yosida_transform(h, lam)(x), yosida_transform(h, lam * factor)(x)
    assert np.all(lo <= hi + 1e-12)


# ---------------------------------------------------------------- rebalance

def test_rebalance_constant():
    h = ContinuumProfile.constant(1.0, 0.99)
    out, info = volume_rebalance(h, 1.0, 0.5, True)
    assert out.volume() == pytest.approx(1.0)
    assert np.allclose(out.hs, 1.0)
    assert info.level == pytest.approx(0.1) and info.lift == pytest.approx(0.01)
    assert volume_rebalance(h, h.volume()) is h


def test_rebalance_tent_stays_close():
    tent = ContinuumProfile.tent(1.0, 0.3, 0.35)
    target = tent.volume() + 0.004
    out, info = volume_rebalance(tent, target, 0.5, True)
    assert out.volume() == pytest.approx(target, rel=1e-12)
    assert hausdorff_distance(out, tent) <= info.lift + info.level
    # zero set is preserved: profiles below the level are scaled, not lifted
    assert out.zero_set() == tent.zero_set()


def test_rebalance_errors():
    tent = ContinuumProfile.tent(1.0, 0.3, 0.35)
    with pytest.raises(ValueError):
        volume_rebalance(tent, tent.volume() - 0.01)
    with pytest.raises(ValueError):
        volume_rebalance(tent, 1.0, beta=1.0)
    with pytest.raises(ValueError):
        volume_rebalance(ContinuumProfile.staircase(1.0, [0.1, 0.2]), 1.0)
    with pytest.raises(ValueError):
        volume_rebalance(ContinuumProfile.constant(1.0, 0.0), 0.5)


@settings(max_examples=40, deadline=None)
@given(polylines.filter(lambda h: h.volume() > 1e-3), st.floats(1e-6, 0.5))
def test_rebalance_hits_volume(h, extra):
    out = volume_rebalance(h, h.volume() + extra)
    assert out.volume() == pytest.approx(h.volume() + extra, rel=1e-10)
    x = np.linspace(0, h.length, 101)
    assert np.all(out(x) >= h(x) - 1e-12)


# ----------------------------------------------------------------- recovery

def test_recovery_profile_parity_floor_values():
    spec = LatticeSpec(0.1, 5, 0.5)
    h = ContinuumProfile.constant(spec.length, 0.95)
    dewet = recovery_profile(h, spec, DEWET).heights(spec)
    assert np.allclose(dewet[0::2], 0.95) and np.allclose(dewet[1::2], 0.9)
    wet = recovery_profile(h, spec, WET).heights(spec)
    assert np.allclose(wet[0::2], 1.05) and np.allclose(wet[1::2], 1.0)
    zero = ContinuumProfile.constant(spec.length, 0.0)
    assert volume(recovery_profile(zero, spec, DEWET)) == 0
    layer = recovery_profile(zero, spec, WET)
    assert np.all(layer.atoms()[1::2] >= 1)


def test_recovery_profile_errors():
    spec = LatticeSpec(0.1, 5, 0.5)
    with pytest.raises(ValueError):
        recovery_profile(ContinuumProfile.constant(1.0, 0.3), spec, DEWET)
    with pytest.raises(ValueError):
        recovery_profile(ContinuumProfile.staircase(spec.length, [0.1, 0.3]), spec, DEWET)
    with pytest.raises(ValueError):
        recovery_profile(ContinuumProfile.constant(spec.length, 0.3), spec, DEWET, rounding="ceil")


@settings(max_examples=40, deadline=None)
@given(st.lists(heights, min_size=2, max_size=6), st.integers(4, 30), st.booleans(),
       st.sampled_from(["parity", "floor"]))
def test_recovery_profile_within_one_and_a_half_steps(values, k, wet, rounding):
    eps = 1.0 / (SQRT3 * k)
    spec = LatticeSpec(eps, k, 0.5)
    h = ContinuumProfile(1.0, np.linspace(0, 1.0, len(values) + 1), np.array(values + [values[0]]))
    mat = WET if wet else DEWET
    prof = recovery_profile(h, spec, mat, rounding)
    centres = h(spec.column_x(np.arange(spec.n_columns)))
    gap = prof.heights(spec) - centres
    assert np.all(np.abs(gap) <= 1.5 * eps + 1e-12)
    if not wet and rounding == "parity":
        assert np.all(gap <= 1e-12)


def test_recovery_deformation_scaling():
    spec = LatticeSpec(0.04, 5, 0.3)
    region = build_region(spec, DiscreteProfile.zigzag(5, 3, 2))
    frame = RigidMotion(0.3, (1.0, 0.0))
    u = TrigField(spec.length, 0.1, 0.1, 1, 0.3)
    y = recovery_deformation(region, u, frame)
    assert np.allclose(y.positions, frame.apply(region.positions) + 0.2 * u.value(region.positions))
    rigid = recovery_deformation(region, ZeroField(), frame)
    assert np.allclose(rigid.positions, frame.apply(region.positions))


# ----------------------------------------------------------- volume matching

def test_lattice_volume_match_blocks():
    spec = LatticeSpec(0.1, 4, 0.5)
    base = DiscreteProfile.zigzag(4, 5, 6)
    # 18 units = 9 cells of one atom: a 3 x 3 block
    up = lattice_volume_match(base, volume(base) + 18, spec)
    assert up.half_heights[:4].tolist() == [11, 12, 11, 6]
    assert volume(up) == volume(base) + 18
    # 20 units = 10 cells: 3 x 3 plus one on the first host column
    up = lattice_volume_match(base, volume(base) + 20, spec)
    assert up.half_heights[:4].tolist() == [13, 12, 11, 6]
    down = lattice_volume_match(base, volume(base) - 8, spec)
    assert down.half_heights[:3].tolist() == [1, 2, 5]
    assert lattice_volume_match(base, volume(base), spec) is base


def test_lattice_volume_match_errors():
    spec = LatticeSpec(0.1, 4, 0.5)
    base = DiscreteProfile.zigzag(4, 1, 2)
    with pytest.raises(ProfileError):
        lattice_volume_match(base, volume(base) + 3, spec)
    with pytest.raises(ProfileError):
        lattice_volume_match(base, volume(base) - 18, spec)
    with pytest.raises(ProfileError):
        lattice_volume_match(DiscreteProfile.zeros(4), 18, spec)
    with pytest.raises(ProfileError):
        lattice_volume_match(base, volume(base) + 18, spec, host=(0, 2))


def test_host_is_longest_positive_run():
    spec = LatticeSpec(0.1, 4, 0.5)
    prof = DiscreteProfile(np.array([1, 2, 0, 0, 1, 2, 1, 2]))
    out = lattice_volume_match(prof, volume(prof) + 8, spec)
    assert out.half_heights.tolist() == [1, 2, 0, 0, 5, 6, 1, 2]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(2, 6), min_size=8, max_size=8), st.integers(-4, 12))
def test_nearest_target_is_matched_exactly(atoms, cells):
    spec = LatticeSpec(0.1, 4, 0.5)
    prof = DiscreteProfile.from_atoms(atoms)
    V = (volume(prof) + 2 * cells + 0.4) * spec.volume_unit
    target = nearest_volume_units(V, spec, prof)
    assert target == volume(prof) + 2 * cells
    assert volume(lattice_volume_match(prof, target, spec)) == target


# --------------------------------------------------------------- Hausdorff

def test_hausdorff_examples():
    h = ContinuumProfile.tent(1.0, 0.3, 0.35)
    assert hausdorff_distance(h, h) == 0.0
    a, b = ContinuumProfile.constant(1.0, 0.2), ContinuumProfile.constant(1.0, 0.5)
    assert hausdorff_distance(a, b) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        hausdorff_distance(a, ContinuumProfile.constant(2.0, 0.2))
    with pytest.raises(ValueError):
        hausdorff_distance(DiscreteProfile.zeros(2), a)
    with pytest.raises(TypeError):
        hausdorff_distance([0.1], a)


def test_hausdorff_of_spike_is_horizontal():
    # every point above the flat line lies within the spike's half-width of the region above the spike
    spike = ContinuumProfile(1.0, [0, 0.49, 0.5, 0.51, 1.0], [0, 0, 1.0, 0, 0])
    assert hausdorff_distance(spike, ContinuumProfile.constant(1.0, 0.0)) == pytest.approx(
        0.01 / np.hypot(1.0, 0.01), rel=1e-9)


def test_continuum_from_discrete_is_the_column_interpolation():
    spec = LatticeSpec(0.2, 3, 0.5)
    prof = DiscreteProfile(np.array([3, 4, 0, 2, 5, 0]))
    c = continuum_from_discrete(prof, spec)
    assert c.volume() == pytest.approx(volume(prof) * spec.volume_unit)
    x = spec.column_x(np.arange(6))
    assert np.allclose(c(x), prof.heights(spec))


@settings(max_examples=30, deadline=None)
@given(polylines, polylines)
def test_hausdorff_symmetric_and_above_sampling(a, b):
    d = hausdorff_distance(a, b)
    assert d == pytest.approx(hausdorff_distance(b, a), abs=1e-12)
    est = hausdorff_grid_estimate(a, b, n=4000)
    assert est <= d + 1e-9
    assert d <= est + 2.0 / 4000 * 7 + 1e-9


# ---------------------------------------------------------------- reporting

def test_convergence_report_for_exact_recovery():
    h = ContinuumProfile.constant(1.0, 0.5)
    specs, seq = [], []
    for k in (4, 8, 16):
        spec = LatticeSpec(1.0 / (SQRT3 * k), k, 0.3)
        prof = recovery_profile(h, spec, DEWET)
        region = build_region(spec, prof)
        specs.append(spec)
        seq.append((region.positions, prof))
    rows = convergence_report(seq, (RigidMotion(0.0, (0.0, 0.0)), ZeroField(), h), specs,
                              energies=[(1.0, 0.0)] * 3, margin=0.2)
    assert [r["flagged"] for r in rows] == [False] * 3
    assert all(r["l2_y"] < 1e-14 and r["l2_u"] < 1e-14 for r in rows)
    assert all(r["hausdorff"] <= r["epsilon"] for r in rows)
    assert trend_flags([r["hausdorff"] for r in rows])["decreasing"]
    text = report_csv(rows)
    assert text.splitlines()[0] == ",".join(REPORT_HEADER)


def test_convergence_report_flags_uncontained_rows():
    h = ContinuumProfile.constant(1.0, 0.5)
    spec = LatticeSpec(1.0 / (SQRT3 * 4), 4, 0.3)
    prof = DiscreteProfile.zeros(4)
    row = convergence_report([(build_region(spec, prof).positions, prof)],
                             (RigidMotion(0.0, (0.0, 0.0)), ZeroField(), h), [spec])[0]
    assert row["flagged"] and np.isnan(row["l2_y"])


def test_trend_flags():
    assert trend_flags([3, 2, 1])["decreasing"]
    out = trend_flags([1, 1, 1])
    assert out["decreasing"] and not trend_flags([1, 1, 1], strict=True)["decreasing"]
    assert not trend_flags([1, 2])["decreasing"]
    assert trend_flags([4, 2, 1])["ratios"] == [0.5, 0.5]
