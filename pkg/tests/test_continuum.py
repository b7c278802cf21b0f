import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from filmlattice.continuum import (ELASTIC_PREFACTOR, PHI_HORIZONTAL, PHI_VERTICAL, ContinuumParams,
                                   ContinuumProfile, boundary_decomposition, elastic_density,
                                   elastic_energy_continuum, limit_energy, phi,
                                   surface_energy_continuum)
from filmlattice.discrete import MaterialParams
from filmlattice.fields import AffineField, PolynomialField, TrigField, ZeroField, mesh_profile

SQRT3 = np.sqrt(3.0)
finite = st.floats(-10, 10, allow_nan=False)


def test_phi_examples():
    assert phi((0.0, 1.0)) == pytest.approx(4 * SQRT3 / 3) == PHI_VERTICAL
    assert phi((1.0, 0.0)) == pytest.approx(2.0) == PHI_HORIZONTAL
    # close-packed directions: the lattice rows at +-60 degrees
    for ang in (np.pi / 6, 5 * np.pi / 6):
        assert phi((np.cos(ang), np.sin(ang))) == pytest.approx(4 * SQRT3 / 3)
    assert phi((0.0, 0.0)) == 0.0
    assert phi(np.array([[0.0, 2.0], [3.0, 0.0]])) == pytest.approx([8 * SQRT3 / 3, 6.0])


@settings(max_examples=200)
@given(finite, finite, st.floats(0, 50))
def test_phi_homogeneous_and_even(a, b, t):
    nu = np.array([a, b])
    assert phi(t * nu) == pytest.approx(t * phi(nu), rel=1e-12, abs=1e-12)
    assert phi(-nu) == pytest.approx(phi(nu), rel=1e-15, abs=0)


@settings(max_examples=200)
@given(finite, finite)
def test_phi_bounded_by_norm(a, b):
    r = np.hypot(a, b)
    assert 2 * r - 1e-12 <= phi((a, b)) <= 4 * SQRT3 / 3 * r + 1e-12 <= 4 * r + 1e-12


def test_phi_midpoint_convex_on_many_pairs():
    rng = np.random.default_rng(1)
    p = rng.normal(size=(100_000, 2))
    q = rng.normal(size=(100_000, 2))
    lhs = phi(0.5 * (p + q))
    rhs = 0.5 * (phi(p) + phi(q))
    assert np.all(lhs <= rhs + 1e-12)


# ----------------------------------------------------------------- profiles

def test_profile_validation():
    with pytest.raises(ValueError):
        ContinuumProfile(1.0, [0.0, 1.0], [0.0, 1.0])  # not periodic
    with pytest.raises(ValueError):
        ContinuumProfile(1.0, [0.0, 0.6, 0.5, 1.0], [0, 1, 1, 0])
    with pytest.raises(ValueError):
        ContinuumProfile(1.0, [0.0, 1.0], [-1.0, -1.0])
    with pytest.raises(ValueError):
        ContinuumProfile(1.0, [0.0, 0.5, 0.5, 0.5, 1.0], [0, 1, 2, 3, 0])
    with pytest.raises(ValueError):
        ContinuumProfile.constant(1.0, 0.5).__class__(1.0, [0.0, 1.0], [0.5, 0.5], [(0.5, 0.2, 0.9)])


def test_lower_semicontinuous_evaluation():
    h = ContinuumProfile.staircase(1.0, [0.2, 0.6])
    assert h(0.5) == pytest.approx(0.2)
    assert h(0.25) == pytest.approx(0.2) and h(0.75) == pytest.approx(0.6)
    assert h(1.25) == h(0.25)
    assert not h.is_lipschitz and h.max_slope() == float("inf")
    tent = ContinuumProfile.tent(2.0, 0.5, 0.5)
    assert tent.volume() == pytest.approx(0.25)
    assert tent.zero_set() == [(0.0, 0.5), (1.5, 2.0)]
    assert tent.max_slope() == pytest.approx(1.0)


def test_surface_energy_examples():
    mat = MaterialParams(1.0, 1.0, 1.5, 0.7)
    L = 2.0
    assert surface_energy_continuum(ContinuumProfile.constant(L, 0.4), mat) == pytest.approx(
        1.5 * 4 * SQRT3 / 3 * L)
    # exposed substrate pays the cheaper of the two tensions
    assert surface_energy_continuum(ContinuumProfile.constant(L, 0.0), mat) == pytest.approx(
        0.7 * 4 * SQRT3 / 3 * L)
    wet = MaterialParams(1.0, 1.0, 1.5, 3.0)
    assert surface_energy_continuum(ContinuumProfile.constant(L, 0.0), wet) == pytest.approx(
        1.5 * 4 * SQRT3 / 3 * L)
    # a crack of height t is counted on both faces
    base = ContinuumProfile.constant(L, 1.0)
    cut = ContinuumProfile(L, base.xs, base.hs, [(0.7, 0.2, 0.5)])
    assert surface_energy_continuum(cut, mat) - surface_energy_continuum(base, mat) == pytest.approx(
        4 * 1.5 * 0.3)


def test_staircase_surface_energy():
    mat = MaterialParams(1.0, 1.0, 1.0, 1.0)
    h = ContinuumProfile.staircase(1.0, [0.2, 0.5, 0.3])
    risers = 0.3 + 0.2 + 0.1
    assert surface_energy_continuum(h, mat) == pytest.approx(4 * SQRT3 / 3 + 2 * risers)


def test_boundary_decomposition():
    h = ContinuumProfile(1.0, [0.0, 0.25, 0.5, 0.75, 1.0], [0.0, 0.0, 0.5, 0.0, 0.0],
                         [(0.5, 0.1, 0.3)])
    parts = boundary_decomposition(h)
    kinds = [p.kind for p in parts]
    assert kinds.count("substrate") == 2 and kinds.count("graph") == 2 and kinds.count("cut") == 1
    graph_len = sum(p.length for p in parts if p.kind == "graph")
    assert graph_len == pytest.approx(2 * np.hypot(0.25, 0.5))
    assert [p.density for p in parts if p.kind == "cut"] == [1.0]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 2)), min_size=2, max_size=8), st.floats(0, 5))
def test_surface_energy_translation_invariant(values, shift):
    L = 3.0
    xs = np.linspace(0, L, len(values) + 1)
    hs = np.array(values + [values[0]])
    h = ContinuumProfile(L, xs, hs)
    mat = MaterialParams(1.0, 1.0, 1.0, 0.4)
    E0 = surface_energy_continuum(h, mat)
    moved = h.translated(shift)
    assert surface_energy_continuum(moved, mat) == pytest.approx(E0, rel=1e-9)
    assert moved.volume() == pytest.approx(h.volume(), rel=1e-9, abs=1e-12)


# ------------------------------------------------------------------ elastic

def _params(delta=0.0, theta=0.0, mat=None, depth=1.0, prefactor=ELASTIC_PREFACTOR):
    return ContinuumParams(delta, theta, materials=mat or MaterialParams(1.0, 1.0, 1.0, 1.0),
                           substrate_depth=depth, prefactor=prefactor)


def test_elastic_zero_displacement():
    h = ContinuumProfile.tent(1.0, 0.3, 0.35)
    assert elastic_energy_continuum(h, ZeroField(), _params()) == 0.0
    with pytest.raises(ValueError):
        elastic_energy_continuum(h, ZeroField(), ContinuumParams(0.0, 0.0))


def test_slab_under_uniaxial_strain():
    flat = ContinuumProfile.constant(1.0, 0.0)
    u = AffineField(((0.1, 0.0), (0.0, 0.0)))
    assert elastic_energy_continuum(flat, u, _params()) == pytest.approx(0.24 / SQRT3, rel=1e-12)


def test_mismatch_strain_only_enters_the_film():
    # the isotropic mismatch strain is free in the film
    delta = 0.04
    h = ContinuumProfile.constant(1.0, 0.5)
    u = PolynomialField(((0.0,), (0.0, delta)))  # u2 = delta x2 in the film
    dens = elastic_density(np.diag([delta, delta]), 1.0, delta)
    assert dens == pytest.approx(0.0, abs=1e-30)
    mat = MaterialParams(1.0, 1.0, 1.0, 1.0)
    total = elastic_energy_continuum(h, u, _params(delta, 0.0, mat, depth=1.0))
    # a vertical stretch: the film keeps its horizontal misfit, the substrate pays for the stretch
    A = np.diag([-delta, 0.0])
    expected_film = ELASTIC_PREFACTOR * (2 * np.sum(A * A) + np.trace(A) ** 2) * 0.5
    sub = ELASTIC_PREFACTOR * (2 * delta ** 2 + delta ** 2) * 1.0
    assert total == pytest.approx(expected_film + sub, rel=1e-10)


def test_density_formula_and_stack():
    G = np.array([[[0.1, 0.2], [0.0, -0.1]], [[0.0, 0.0], [0.0, 0.0]]])
    out = elastic_density(G, 2.0, 0.0, 1.0)
    A = np.array([[0.1, 0.1], [0.1, -0.1]])
    assert out[0] == pytest.approx(2.0 * 2 * np.sum(A * A))
    assert out[1] == 0.0
    # skew gradients (infinitesimal rotations) are free
    assert elastic_density(np.array([[0.0, 0.3], [-0.3, 0.0]]), 1.0) == 0.0


@pytest.mark.parametrize("field_", [
    AffineField(((0.02, -0.01), (0.03, 0.05))),
    TrigField(1.0, 0.05, 0.05, 1, 0.25),
])
def test_mesh_and_analytic_integration_agree(field_):
    h = ContinuumProfile.tent(1.0, 0.3, 0.35)
    params = _params(0.03, 0.2, MaterialParams(1.3, 0.8, 1.0, 1.0), depth=0.25)
    analytic = elastic_energy_continuum(h, field_, params)
    fine = 8 if isinstance(field_, TrigField) else 1
    mesh = mesh_profile(h, 0.25, field_, nx=4 * fine, ny_film=2 * fine, ny_sub=2 * fine)
    tol = 1e-10 if isinstance(field_, AffineField) else 2e-2
    assert elastic_energy_continuum(h, mesh, params) == pytest.approx(analytic, rel=tol)


def test_mesh_must_match_profile():
    h = ContinuumProfile.tent(1.0, 0.3, 0.35)
    mesh = mesh_profile(h, 0.25)
    other = ContinuumProfile.tent(1.0, 0.4, 0.35)
    with pytest.raises(ValueError):
        elastic_energy_continuum(other, mesh, _params(depth=0.25))


def test_limit_energy_parts():
    h = ContinuumProfile.constant(1.0, 0.2)
    mat = MaterialParams(1.0, 1.0, 2.0, 1.0)
    s, e = limit_energy(h, ZeroField(), _params(mat=mat))
    assert s == pytest.approx(2.0 * 4 * SQRT3 / 3) and e == 0.0
