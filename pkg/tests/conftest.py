import pytest
from hypothesis import HealthCheck, settings

from landing_guidance.sim import Scenario, run_simulation
from landing_guidance.terrain import build_barriers, StepTerrain

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def site_terrain():
    return StepTerrain(heights=(500.0, 1000.0), half_widths=(600.0, 1000.0), lambdas=(20, 6),
                       theta_deg=0.05)


@pytest.fixture(scope="session")
def site_barriers(site_terrain):
    return build_barriers(site_terrain, 95.5)


@pytest.fixture(scope="session")
def literal_barriers(site_terrain):
    return build_barriers(site_terrain, 95.5, vertical_rule="altitude")


@pytest.fixture(scope="session")
def nominal_mss():
    return run_simulation(Scenario(law="MSS_OTALG"))


@pytest.fixture(scope="session")
def nominal_otalg():
    return run_simulation(Scenario(law="OTALG"))


@pytest.fixture(scope="session")
def nominal_ogl():
    return run_simulation(Scenario(law="OGL"))


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Store one acceptance result; printed as a single line at the end of the session."""
    ACCEPTANCE[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_configure(config):
    import time
    config._lg_start = time.time()
