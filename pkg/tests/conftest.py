import numpy as np
import pytest

from filmlattice.discrete import MaterialParams
from filmlattice.lattice import DiscreteProfile, LatticeSpec, build_region

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call":
        return
    number, title = mark.args
    detail = dict(item.user_properties).get("detail", "")
    _CRITERIA[number] = (title, report.passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, passed, detail = _CRITERIA[number]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:2d} {status}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a one-line measurement summary to the acceptance line of this test."""
    def record(text):
        request.node.user_properties.append(("detail", text))
    return record


@pytest.fixture
def unit_mat():
    return MaterialParams(1.0, 1.0, 1.0, 1.0)


def random_profile(rng, k, max_atoms=3):
    atoms = rng.integers(0, max_atoms + 1, size=2 * k)
    n = DiscreteProfile.from_atoms(atoms).half_heights.copy()
    # occasionally expose the substrate at an even column
    if rng.random() < 0.5:
        m = 2 * int(rng.integers(k))
        n[m] = 0
    return DiscreteProfile(n)


def random_state(rng, k=None, noise=0.05):
    """Random spec, profile, region and an orientation-preserving perturbed deformation."""
    k = int(k or rng.integers(2, 5))
    eps = float(rng.uniform(0.05, 0.3))
    spec = LatticeSpec(eps, k, float(rng.uniform(0.6, 1.5)) * eps * 2, lam=float(rng.uniform(0.95, 1.08)))
    prof = random_profile(rng, k)
    region = build_region(spec, prof)
    y = region.positions + noise * eps * rng.uniform(-1, 1, region.positions.shape)
    return spec, prof, region, y


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
