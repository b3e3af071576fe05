from dataclasses import replace

import pytest

from fwmpairs.selftest import failed_checks, default_fixture, run_selftest


@pytest.fixture(scope="module")
def fixture():
    return default_fixture()


@pytest.mark.slow
def test_default_fixture_passes_every_check(fixture):
    results = run_selftest(fixture)
    assert [r.name for r in results] == [
        "solver_closed_form", "walkoff", "calibration_round_trip",
        "nb_moments", "accidental_factorization", "mc_vs_analytic",
    ]
    assert failed_checks(results) == []


def test_flipped_quartic_dispersion_fails_by_name(fixture):
    corrupted = replace(fixture, model=replace(fixture.model, beta4=-fixture.model.beta4))
    failed = failed_checks(run_selftest(corrupted))
    assert "solver_closed_form" in failed
    assert "walkoff" in failed
    assert "mc_vs_analytic" not in failed


def test_wrong_calibration_reference_fails_round_trip(fixture):
    shifted = replace(fixture, reference=replace(fixture.reference, pair_ratio_idler=0.6))
    assert failed_checks(run_selftest(shifted)) == ["calibration_round_trip"]
