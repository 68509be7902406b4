import pytest

from mimopower import validation
from mimopower.montecarlo import McSettings


@pytest.fixture(scope="module")
def checks():
    return validation.run_all(McSettings(trials=100_000, seed=1))


def test_all_checks_pass(checks):
    failed = [c.line() for c in checks if not (c.passed or c.informational)]
    assert failed == []


def test_every_analytic_operation_is_covered(checks):
    names = {c.name for c in checks}
    assert {"miso_outage", "simo_outage", "rmt_stats_mean", "rmt_stats_sigma", "mimo_outage_rmt",
            "fixed_power", "gamma_adaptive_power_exact", "mimo_adaptive_power"} <= names


def test_outage_grid_is_complete(checks):
    grid = [c for c in checks if c.name in ("miso_outage", "simo_outage")]
    assert len(grid) == 2 * len(validation.GRID_ANTENNAS) * len(validation.OUTAGE_GRID_RHO)


def test_reproducible(checks):
    again = validation.run_all(McSettings(trials=100_000, seed=1, workers=4))
    assert [c.as_dict() for c in again] == [c.as_dict() for c in checks]


def test_trial_floor():
    with pytest.raises(ValueError):
        validation.run_all(McSettings(trials=999))


def test_line_format(checks):
    line = checks[0].line()
    assert line.startswith("PASS miso_outage [M=1 rho=1]")
    info = [c for c in checks if c.informational]
    assert info and all(c.line().startswith("INFO") for c in info)
