from dataclasses import replace

import numpy as np
import pytest

from fwmpairs import config as C
from fwmpairs.dispersion import (
    DispersionModel,
    PumpSpec,
    calibrate_dispersion,
    conjugate_wavelength,
    detuning,
    group_delay_walkoff,
    linear_mismatch,
    matched_signal_slope,
    pair_mismatch,
    phase_matched_roots,
    signal_shift_per_power,
    solve_phase_matched_signal,
    total_mismatch,
)
from fwmpairs.errors import CalibrationError, DomainError, NumericalError

SIGNAL = 688.5 * C.NM


@pytest.fixture
def half_mw(pump):
    return pump.with_power(0.5 * C.MW)


def test_calibrated_sideband_lands_on_target(fiber, half_mw):
    model = calibrate_dispersion(half_mw, fiber, SIGNAL, -2.0 * C.PS, 0.5 * C.MW)
    signal, idler = solve_phase_matched_signal(half_mw, fiber, model)
    assert signal / C.NM == pytest.approx(688.5, abs=0.5)
    assert idler / C.NM == pytest.approx(789.8, abs=0.5)
    assert group_delay_walkoff(signal, idler, model, fiber.length) == pytest.approx(-2.0 * C.PS, rel=0.05)


def test_idler_later_branch_is_normal_with_one_root(fiber, half_mw):
    model = calibrate_dispersion(half_mw, fiber, SIGNAL, -2.0 * C.PS, 0.5 * C.MW)
    assert model.beta2 == pytest.approx(3.154e-27, rel=0.01)
    assert model.beta4 == pytest.approx(-1.2306e-54, rel=0.01)
    assert model.beta3 == 0.0
    assert phase_matched_roots(half_mw, fiber, model).size == 1


def test_signal_later_branch_needs_the_near_hint(fiber, half_mw):
    model = calibrate_dispersion(half_mw, fiber, SIGNAL, 2.0 * C.PS, 0.5 * C.MW)
    assert model.beta2 < 0 < model.beta4
    assert phase_matched_roots(half_mw, fiber, model).size == 2

    nearest, _ = solve_phase_matched_signal(half_mw, fiber, model)
    assert nearest / C.NM > 720.0
    hinted, _ = solve_phase_matched_signal(half_mw, fiber, model, near=SIGNAL)
    assert hinted / C.NM == pytest.approx(688.5, abs=1e-3)
    assert group_delay_walkoff(hinted, conjugate_wavelength(half_mw.wavelength, hinted),
                               model, fiber.length) == pytest.approx(2.0 * C.PS, rel=0.05)


def test_total_mismatch_vanishes_at_the_solution(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    signal, _ = solve_phase_matched_signal(pump, setup.fiber, setup.dispersion)
    scale = 2.0 * setup.fiber.gamma * pump.peak_power
    assert abs(total_mismatch(signal, pump, setup.fiber, setup.dispersion)) < 1e-9 * scale


def test_phase_index_shift_matches_the_quoted_estimate(fiber, pump):
    shift = signal_shift_per_power(SIGNAL, 1.0 * C.MW, pump, fiber)
    assert 1.5e-5 <= shift / C.NM <= 2.5e-5


def test_sideband_moves_monotonically_with_power(setup):
    signals = [
        solve_phase_matched_signal(setup.pump.with_power(p * C.MW), setup.fiber, setup.dispersion)[0]
        for p in (0.2, 0.4, 0.6, 0.8, 1.0)
    ]
    steps = np.diff(signals)
    assert np.all(steps < 0) or np.all(steps > 0)


def test_model_slope_is_blue_shift_of_tenths_of_a_nanometre_per_milliwatt(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    slope = matched_signal_slope(pump, setup.fiber, setup.dispersion)
    assert slope < 0
    assert abs(slope) * C.MW / C.NM == pytest.approx(0.078, rel=0.15)


def test_pair_mismatch_reduces_to_linear_on_the_ridge():
    model = DispersionModel(735.7 * C.NM, beta2=3e-27, beta3=1e-40, beta4=-1e-54)
    omega = np.linspace(-2e14, 2e14, 9)
    np.testing.assert_allclose(pair_mismatch(0.0, omega, model), linear_mismatch(omega, model))
    np.testing.assert_allclose(linear_mismatch(omega, model), linear_mismatch(-omega, model))


def test_no_sideband_raises(fiber, pump):
    model = DispersionModel(pump.wavelength, beta2=1e-27, beta4=1e-54)
    with pytest.raises(NumericalError):
        solve_phase_matched_signal(pump, fiber, model)


def test_degenerate_matching_at_zero_power(fiber, pump):
    model = DispersionModel(pump.wavelength, beta2=0.0, beta4=-1e-54)
    assert model.symmetric_degenerate
    signal, idler = solve_phase_matched_signal(pump.with_power(0.0), fiber, model)
    assert signal == idler == pump.wavelength


def test_zero_walkoff_target_is_rejected(fiber, pump):
    with pytest.raises(CalibrationError):
        calibrate_dispersion(pump, fiber, SIGNAL, 0.0, 0.5 * C.MW)


def test_conjugate_needs_positive_idler_frequency():
    assert conjugate_wavelength(735.7 * C.NM, SIGNAL) / C.NM == pytest.approx(789.85, abs=0.01)
    with pytest.raises(DomainError):
        conjugate_wavelength(735.7 * C.NM, 300.0 * C.NM)


def test_pump_duty_factor_bounds():
    PumpSpec(wavelength=735.7e-9, bandwidth=1e-10, average_power=1e-3, repetition_rate=4.0, pulse_width=0.25)
    with pytest.raises(DomainError):
        PumpSpec(wavelength=735.7e-9, bandwidth=1e-10, average_power=1e-3, repetition_rate=8.0, pulse_width=0.25)
    with pytest.raises(DomainError):
        PumpSpec(wavelength=735.7e-9, bandwidth=1e-10, average_power=-1.0, repetition_rate=8e7, pulse_width=8e-12)


def test_pure_quartic_root_has_a_closed_form(fiber, pump):
    one_watt_peak = pump.with_power(pump.duty_factor * 1.0)
    model = DispersionModel(pump.wavelength, beta2=0.0, beta4=-1e-55)
    signal, _ = solve_phase_matched_signal(one_watt_peak, fiber, model)
    expected = (24.0 * fiber.gamma * one_watt_peak.peak_power / abs(model.beta4)) ** 0.25
    assert detuning(signal, pump.wavelength) == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("signal_nm", [600.0, 688.5, 735.0])
def test_conjugate_conserves_energy(signal_nm):
    pump_wl, signal = 735.7 * C.NM, signal_nm * C.NM
    idler = conjugate_wavelength(pump_wl, signal)
    assert 1.0 / signal + 1.0 / idler == pytest.approx(2.0 / pump_wl, rel=1e-12)


def test_solved_pair_conserves_energy(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    signal, idler = solve_phase_matched_signal(pump, setup.fiber, setup.dispersion)
    assert 1.0 / signal + 1.0 / idler == pytest.approx(2.0 / pump.wavelength, rel=1e-12)


def test_beta3_drops_out_for_conjugate_pairs(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    plain = setup.dispersion
    skewed = replace(plain, beta3=5e-40)
    signal, idler = solve_phase_matched_signal(pump, setup.fiber, plain)
    assert solve_phase_matched_signal(pump, setup.fiber, skewed)[0] == pytest.approx(signal, rel=1e-12)
    assert group_delay_walkoff(signal, idler, skewed, setup.fiber.length) == pytest.approx(
        group_delay_walkoff(signal, idler, plain, setup.fiber.length), rel=1e-9
    )
    for nm in (686.0, 688.5, 691.0):
        assert total_mismatch(nm * C.NM, pump, setup.fiber, skewed) == pytest.approx(
            total_mismatch(nm * C.NM, pump, setup.fiber, plain), rel=1e-12
        )


def test_recalibration_recovers_known_coefficients(fiber, half_mw):
    known = DispersionModel(half_mw.wavelength, beta2=3.1e-27, beta4=-1.2e-54)
    signal, idler = solve_phase_matched_signal(half_mw, fiber, known)
    walkoff = group_delay_walkoff(signal, idler, known, fiber.length)
    recovered = calibrate_dispersion(half_mw, fiber, signal, walkoff, 0.5 * C.MW)
    assert recovered.beta2 == pytest.approx(known.beta2, rel=1e-9)
    assert recovered.beta4 == pytest.approx(known.beta4, rel=1e-9)
