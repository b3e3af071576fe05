import math

import numpy as np
import pytest

from fwmpairs import config as C
from fwmpairs.batches import batch_rng
from fwmpairs.errors import CalibrationError, DomainError
from fwmpairs.pairgen import (
    CollectionSpec,
    DetectionSpec,
    PhotonMeans,
    SourceModel,
    SourceReference,
    analytic_rates,
    analytic_self_rates,
    calibrate_source,
    collection_modes,
    mean_pair_number,
    raman_means,
    rates_from_means,
    sample_pulse,
    sample_pulses,
    scanned_contrast,
    single_arm_g2,
    spectral_weight,
    theory_coincidence_rate,
)


def _contrast(rates):
    return rates.D_c / rates.D_a


def _ratios(rates, det):
    true_pairs = rates.D_c - rates.D_a
    return true_pairs / (det.eta_i * rates.D_s), true_pairs / (det.eta_s * rates.D_i)


def test_time_bandwidth_mode_counts(setup):
    modes_s, modes_i = collection_modes(setup.collection, setup.pump)
    assert modes_s == pytest.approx(3.5415, rel=1e-3)
    assert modes_i == pytest.approx(2.691, rel=1e-3)
    assert setup.source.pair_modes == modes_i


@pytest.mark.parametrize("modes_attr", ["modes_s", "modes_i"])
def test_unit_efficiency_theory_rate_brackets_the_cw_prediction(setup, det, modes_attr):
    modes = getattr(setup.source, modes_attr)
    rate = theory_coincidence_rate(1.0 * C.MW, modes, det, setup.fiber, setup.pump)
    assert 140e3 <= rate <= 210e3


def test_calibration_inverts_the_reference_point(setup):
    source = setup.source
    assert 0.15 <= source.kappa <= 0.35
    assert source.kappa == pytest.approx(0.2219, rel=2e-3)
    means = setup.means(1.0 * C.MW)
    assert means.pair == pytest.approx(0.057162, rel=1e-4)
    assert means.raman_s == pytest.approx(0.002608, rel=2e-3)
    assert means.raman_i == pytest.approx(0.057597, rel=1e-3)


def test_cross_prediction_at_fifty_microwatts(setup, det):
    rates = analytic_rates(setup.source, 0.05 * C.MW, det, setup.pump, setup.fiber)
    r_s, r_i = _ratios(rates, det)
    assert 0.50 <= r_s <= 0.63
    assert 0.03 <= r_i <= 0.07
    assert 120 <= _contrast(rates) <= 600


def test_contrast_trend(setup, det):
    at_06 = analytic_rates(setup.source, 0.6 * C.MW, det, setup.pump, setup.fiber)
    at_1 = analytic_rates(setup.source, 1.0 * C.MW, det, setup.pump, setup.fiber)
    assert 14 <= _contrast(at_06) <= 30
    assert _contrast(at_1) == pytest.approx(10.0, rel=0.1)
    assert at_1.D_c == pytest.approx(37.6e3, rel=0.02)


def test_low_gain_true_coincidences_match_the_pair_rate(setup, det):
    power = 0.2 * C.MW
    means = setup.means(power)
    assert means.pair < 0.01
    rates = rates_from_means(means, det, setup.pump.repetition_rate)
    expected = det.eta_s * det.eta_i * means.pair * setup.pump.repetition_rate
    assert rates.D_c - rates.D_a == pytest.approx(expected, rel=0.02)


def test_single_arm_bunching(setup):
    means = setup.means(1.0 * C.MW)
    assert single_arm_g2(means, "signal") == pytest.approx(1.34, abs=0.005)
    assert single_arm_g2(means, "idler") == pytest.approx(1.186, abs=0.005)


@pytest.mark.parametrize("arm", ["signal", "idler"])
def test_split_beam_contrast_is_the_bunching_factor(setup, det, arm):
    rates = analytic_self_rates(setup.source, 1.0 * C.MW, det, setup.pump, setup.fiber, arm)
    assert rates.label == f"self_{arm}"
    assert _contrast(rates) == pytest.approx(single_arm_g2(setup.means(1.0 * C.MW), arm), rel=0.02)


def test_zero_power_gives_zero_rates(setup, det):
    rates = analytic_rates(setup.source, 0.0, det, setup.pump, setup.fiber)
    assert (rates.D_s, rates.D_i, rates.D_c, rates.D_a) == (0.0, 0.0, 0.0, 0.0)


def test_photons_per_pulse_stay_small(setup):
    means = setup.means(1.0 * C.MW)
    assert means.signal_total < 0.12
    assert means.idler_total < 0.12


def test_negative_binomial_sampling_moments():
    means = PhotonMeans(pair=0.3, raman_s=0.0, raman_i=0.0, pair_modes=2.0, modes_s=2.0, modes_i=2.0)
    batch = sample_pulses(batch_rng(1, "nb", 0), means, DetectionSpec(1.0, 1.0, 1.0), 400_000)
    n = batch.n_pair.astype(float)
    assert n.mean() == pytest.approx(0.3, abs=5 * math.sqrt(0.345 / n.size))
    assert n.var() == pytest.approx(0.3 + 0.09 / 2.0, rel=0.03)
    np.testing.assert_array_equal(batch.det_s, batch.n_pair)


def test_infinite_modes_sample_poisson():
    means = PhotonMeans(pair=0.0, raman_s=0.4, raman_i=0.0, pair_modes=1.0, modes_s=math.inf, modes_i=1.0)
    batch = sample_pulses(batch_rng(2, "poisson", 0), means, DetectionSpec(1.0, 1.0, 1.0), 400_000)
    n = batch.n_raman_s.astype(float)
    assert n.var() == pytest.approx(n.mean(), rel=0.03)
    assert not batch.n_raman_i.any()


def test_thinning_never_creates_photons(setup, det):
    batch = sample_pulses(batch_rng(3, "thin", 0), setup.means(1.0 * C.MW), det, 100_000)
    assert np.all(batch.det_s <= batch.n_pair + batch.n_raman_s + batch.n_unpaired_s)
    assert np.all(batch.det_i <= batch.n_pair + batch.n_raman_i + batch.n_unpaired_i)
    outcome = batch.outcome(0)
    assert outcome.click_s == bool(batch.click_s[0])


def test_single_pulse_view(setup, det):
    outcome = sample_pulse(batch_rng(4, "one", 0), setup.source, 1.0 * C.MW, det, setup.fiber, setup.pump)
    assert outcome.det_s <= outcome.n_pair + outcome.n_raman_s


def test_spectral_weight_moves_pairs_out_of_coincidence(setup):
    means = setup.means(0.5 * C.MW)
    weighted = means.with_spectral_weight(0.25)
    assert weighted.pair == pytest.approx(0.25 * means.pair)
    assert weighted.signal_total == pytest.approx(means.signal_total)
    assert weighted.idler_total == pytest.approx(means.idler_total)
    with pytest.raises(DomainError):
        means.with_spectral_weight(1.5)


def test_spectral_weight_peaks_at_the_matched_window(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    weight = lambda nm: spectral_weight(nm * C.NM, pump, setup.fiber, setup.dispersion, setup.collection)
    assert weight(0.0) == 1.0
    assert 0.7 < weight(0.2) < 1.0
    assert 0.7 < weight(-0.2) < 1.0
    assert weight(1.0) < 0.3
    assert weight(-1.5) < 0.05
    assert weight(5.0) < 0.01
    assert weight(-5.0) < 0.01


def test_rect_passband_cuts_off(setup):
    pump = setup.pump.with_power(0.5 * C.MW)
    rect = CollectionSpec(
        signal_wavelength=setup.collection.signal_wavelength,
        idler_wavelength=setup.collection.idler_wavelength,
        bandwidth=setup.collection.bandwidth,
        pump_envelope_bandwidth=setup.collection.pump_envelope_bandwidth,
        passband="rect",
    )
    assert spectral_weight(1.5 * C.NM, pump, setup.fiber, setup.dispersion, rect) < 0.05


def test_scanned_contrast_is_flat_background_plus_pairs():
    assert scanned_contrast(11.0, 1.0) == 11.0
    assert scanned_contrast(11.0, 0.0) == 1.0
    assert scanned_contrast(11.0, 0.5) == 6.0


def test_reference_checks(det, setup):
    good = dict(power=1e-3, coincidence_rate=37.6e3, contrast=10.0, pair_ratio_signal=0.96, pair_ratio_idler=0.5)
    for key, value in [("contrast", 1.0), ("pair_ratio_signal", 1.2), ("coincidence_rate", 0.0)]:
        with pytest.raises(CalibrationError):
            calibrate_source(SourceReference(**{**good, key: value}), det, setup.pump, setup.fiber,
                             setup.collection)


def test_negative_raman_mean_is_inconsistent(setup):
    det = DetectionSpec(0.1, 0.1, 0.0095)
    reference = SourceReference(1e-3, 37.6e3, 10.0, 1.0, 0.5)
    with pytest.raises(CalibrationError):
        calibrate_source(reference, det, setup.pump, setup.fiber, setup.collection)


def test_value_types_validate():
    with pytest.raises(DomainError):
        DetectionSpec(0.1, 0.1, 0.5)
    with pytest.raises(DomainError):
        DetectionSpec(1.2, 0.1, 0.12)
    with pytest.raises(DomainError):
        SourceModel(kappa=2.5, c_raman_s=0.0, c_raman_i=0.0, modes_s=1.0, modes_i=1.0, pair_modes=1.0)
    with pytest.raises(DomainError):
        PhotonMeans(pair=-0.1, raman_s=0.0, raman_i=0.0, pair_modes=1.0, modes_s=1.0, modes_i=1.0)
    SourceModel(kappa=0.0, c_raman_s=1.0, c_raman_i=1.0, modes_s=1.0, modes_i=1.0, pair_modes=1.0)


def test_pair_mean_is_quadratic_and_raman_linear_in_power(setup):
    source, fiber, pump = setup.source, setup.fiber, setup.pump
    one = mean_pair_number(1.0 * C.MW, source, fiber, pump)
    half = mean_pair_number(0.5 * C.MW, source, fiber, pump)
    assert one == pytest.approx(0.057162, rel=1e-3)
    assert half == pytest.approx(one / 4.0)

    raman_s, raman_i = raman_means(1.0 * C.MW, source)
    assert raman_s == pytest.approx(0.002608, rel=2e-3)
    assert raman_i == pytest.approx(0.057597, rel=1e-3)
    assert raman_means(0.5 * C.MW, source) == pytest.approx((raman_s / 2.0, raman_i / 2.0))

    with pytest.raises(DomainError):
        raman_means(-1.0, source)
