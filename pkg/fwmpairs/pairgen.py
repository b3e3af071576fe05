"""Phenomenological photon-pair source.

Pairs from four-wave mixing are multimode thermal (negative binomial with
the time-bandwidth mode count as shape) and perfectly number-correlated
before loss. Raman photons in each arm are independent, linear in average
pump power, and thermal with the arm's own mode count. Detectors are
threshold devices applied after binomial thinning.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid

from .config import PASSBANDS, PAIR_BANDWIDTH_ARMS, SPEED_OF_LIGHT
from .dispersion import (
    DispersionModel,
    FiberSpec,
    PumpSpec,
    nonlinear_phase_term,
    pair_mismatch,
)
from .errors import CalibrationError, DomainError

log = logging.getLogger(__name__)

MIN_MODES = 1e-6


# -----------------------------
# Specs
# -----------------------------
@dataclass(frozen=True)
class CollectionSpec:
    """Signal/idler collection windows. ``bandwidth`` is the per-arm FWHM."""

    signal_wavelength: float
    idler_wavelength: float
    bandwidth: float
    pump_envelope_bandwidth: float
    passband: str = "gaussian"

    def __post_init__(self):
        for name in ("signal_wavelength", "idler_wavelength", "bandwidth", "pump_envelope_bandwidth"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"CollectionSpec.{name} must be finite and > 0 (got {value!r})")
        if self.passband not in PASSBANDS:
            raise DomainError(f"CollectionSpec.passband must be one of {PASSBANDS} (got {self.passband!r})")

    def check_pump(self, pump: PumpSpec) -> None:
        if not (self.signal_wavelength < pump.wavelength < self.idler_wavelength):
            raise DomainError(
                "collection windows must straddle the pump: "
                f"{self.signal_wavelength!r} < {pump.wavelength!r} < {self.idler_wavelength!r} fails"
            )


@dataclass(frozen=True)
class DetectionSpec:
    eta_s: float
    eta_i: float
    eta_pair: float

    def __post_init__(self):
        for name in ("eta_s", "eta_i", "eta_pair"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"DetectionSpec.{name} must lie in [0, 1] (got {value!r})")
        if abs(self.eta_pair - self.eta_s * self.eta_i) > 1e-3:
            raise DomainError(
                f"eta_pair {self.eta_pair!r} inconsistent with eta_s·eta_i = {self.eta_s * self.eta_i!r}"
            )


@dataclass(frozen=True)
class PhotonMeans:
    """Per-pulse generated photon means and the NB shape of each contribution.

    ``unpaired_*`` are FWM photons whose partner falls outside the other
    arm's window; they share the pair mode count but carry no correlation.
    """

    pair: float
    raman_s: float
    raman_i: float
    pair_modes: float
    modes_s: float
    modes_i: float
    unpaired_s: float = 0.0
    unpaired_i: float = 0.0

    def __post_init__(self):
        for name in ("pair", "raman_s", "raman_i", "unpaired_s", "unpaired_i"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"PhotonMeans.{name} must be finite and >= 0 (got {value!r})")
        for name in ("pair_modes", "modes_s", "modes_i"):
            if not getattr(self, name) >= MIN_MODES:
                raise DomainError(f"PhotonMeans.{name} must be >= {MIN_MODES}")

    @property
    def signal_total(self) -> float:
        return self.pair + self.raman_s + self.unpaired_s

    @property
    def idler_total(self) -> float:
        return self.pair + self.raman_i + self.unpaired_i

    def with_spectral_weight(self, weight: float) -> "PhotonMeans":
        """Keep ``weight`` of the pairs correlated; the rest land in one window only."""
        if not 0.0 <= weight <= 1.0 + 1e-12:
            raise DomainError(f"spectral weight must lie in [0, 1] (got {weight!r})")
        weight = min(weight, 1.0)
        lost = (1.0 - weight) * self.pair
        return replace(
            self,
            pair=weight * self.pair,
            unpaired_s=self.unpaired_s + lost,
            unpaired_i=self.unpaired_i + lost,
        )


@dataclass(frozen=True)
class SourceModel:
    """Calibrated generator. Raman coefficients are photons/pulse per watt of average power.

    A mode count of ``math.inf`` selects Poisson statistics.
    """

    kappa: float
    c_raman_s: float
    c_raman_i: float
    modes_s: float
    modes_i: float
    pair_modes: float

    def __post_init__(self):
        # kappa = 0 switches pairing off for classical controls
        if not (0.0 <= self.kappa <= 2.0):
            raise DomainError(f"SourceModel.kappa must lie in [0, 2] (got {self.kappa!r})")
        for name in ("c_raman_s", "c_raman_i"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"SourceModel.{name} must be finite and >= 0 (got {value!r})")
        for name in ("modes_s", "modes_i", "pair_modes"):
            if not getattr(self, name) >= MIN_MODES:
                raise DomainError(f"SourceModel.{name} must be >= {MIN_MODES}")

    def means(self, average_power: float, fiber: FiberSpec, pump: PumpSpec) -> PhotonMeans:
        raman_s, raman_i = raman_means(average_power, self)
        return PhotonMeans(
            pair=mean_pair_number(average_power, self, fiber, pump),
            raman_s=raman_s,
            raman_i=raman_i,
            pair_modes=self.pair_modes,
            modes_s=self.modes_s,
            modes_i=self.modes_i,
        )


@dataclass(frozen=True)
class SourceReference:
    """Measured operating point the source is calibrated against (SI units, rates in Hz)."""

    power: float
    coincidence_rate: float
    contrast: float
    pair_ratio_signal: float
    pair_ratio_idler: float

    def check(self) -> None:
        for name in ("power", "coincidence_rate", "contrast"):
            value = getattr(self, name)
            if not value > 0:
                raise CalibrationError(f"calibration reference {name} must be > 0 (got {value!r})")
        if self.contrast <= 1:
            raise CalibrationError(f"calibration contrast must exceed 1 (got {self.contrast!r})")
        for name in ("pair_ratio_signal", "pair_ratio_idler"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise CalibrationError(f"calibration {name} must lie in (0, 1] (got {value!r})")


@dataclass(frozen=True)
class PulseOutcome:
    n_pair: int
    n_raman_s: int
    n_raman_i: int
    det_s: int
    det_i: int
    n_unpaired_s: int = 0
    n_unpaired_i: int = 0

    @property
    def click_s(self) -> bool:
        return self.det_s >= 1

    @property
    def click_i(self) -> bool:
        return self.det_i >= 1


@dataclass(frozen=True)
class PulseBatch:
    """Struct-of-arrays view of consecutive pulses."""

    n_pair: np.ndarray
    n_raman_s: np.ndarray
    n_raman_i: np.ndarray
    det_s: np.ndarray
    det_i: np.ndarray
    n_unpaired_s: np.ndarray = field(default=None)
    n_unpaired_i: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return int(self.n_pair.shape[0])

    @property
    def click_s(self) -> np.ndarray:
        return self.det_s >= 1

    @property
    def click_i(self) -> np.ndarray:
        return self.det_i >= 1

    def outcome(self, k: int) -> PulseOutcome:
        return PulseOutcome(
            n_pair=int(self.n_pair[k]),
            n_raman_s=int(self.n_raman_s[k]),
            n_raman_i=int(self.n_raman_i[k]),
            det_s=int(self.det_s[k]),
            det_i=int(self.det_i[k]),
            n_unpaired_s=0 if self.n_unpaired_s is None else int(self.n_unpaired_s[k]),
            n_unpaired_i=0 if self.n_unpaired_i is None else int(self.n_unpaired_i[k]),
        )

    @classmethod
    def from_outcomes(cls, outcomes) -> "PulseBatch":
        outcomes = list(outcomes)

        def column(name):
            return np.array([getattr(o, name) for o in outcomes], dtype=np.int32)

        return cls(
            n_pair=column("n_pair"),
            n_raman_s=column("n_raman_s"),
            n_raman_i=column("n_raman_i"),
            det_s=column("det_s"),
            det_i=column("det_i"),
            n_unpaired_s=column("n_unpaired_s"),
            n_unpaired_i=column("n_unpaired_i"),
        )


@dataclass(frozen=True)
class RateSet:
    """Expected singles, coincidence and one-pulse-delay accidental rates (Hz).

    For split-beam (self) records ``D_s``/``D_i`` are the two half-arm singles.
    """

    D_s: float
    D_i: float
    D_c: float
    D_a: float
    label: str = "cross"


# -----------------------------
# Means
# -----------------------------
def peak_power(pump: PumpSpec) -> float:
    return pump.peak_power


def mode_count(bandwidth: float, wavelength: float, pulse_width: float) -> float:
    """Time-bandwidth product Δν·τ with Δν = cΔλ/λ²."""
    if not bandwidth > 0:
        raise DomainError(f"bandwidth must be > 0 (got {bandwidth!r})")
    if not (wavelength > 0 and pulse_width > 0):
        raise DomainError("wavelength and pulse width must be > 0")
    return SPEED_OF_LIGHT * bandwidth / wavelength**2 * pulse_width


def collection_modes(collection: CollectionSpec, pump: PumpSpec) -> tuple[float, float]:
    """(M_s, M_i) for the two collection arms."""
    return (
        mode_count(collection.bandwidth, collection.signal_wavelength, pump.pulse_width),
        mode_count(collection.bandwidth, collection.idler_wavelength, pump.pulse_width),
    )


def pair_mode_count(collection: CollectionSpec, pump: PumpSpec, arm: str = "idler") -> float:
    if arm not in PAIR_BANDWIDTH_ARMS:
        raise DomainError(f"pair bandwidth arm must be one of {PAIR_BANDWIDTH_ARMS} (got {arm!r})")
    modes_s, modes_i = collection_modes(collection, pump)
    return modes_i if arm == "idler" else modes_s


def _nonlinear_phase_squared(average_power: float, fiber: FiberSpec, pump: PumpSpec) -> float:
    if average_power < 0:
        raise DomainError(f"average power must be >= 0 (got {average_power!r})")
    phase = fiber.gamma * average_power / pump.duty_factor * fiber.length
    return phase * phase


def mean_pair_number(average_power: float, source: SourceModel, fiber: FiberSpec,
                     pump: PumpSpec) -> float:
    """μ_f = κ(γ·P_peak·z)²·M pairs per pulse."""
    return source.kappa * _nonlinear_phase_squared(average_power, fiber, pump) * source.pair_modes


def raman_means(average_power: float, source: SourceModel) -> tuple[float, float]:
    if average_power < 0:
        raise DomainError(f"average power must be >= 0 (got {average_power!r})")
    return source.c_raman_s * average_power, source.c_raman_i * average_power


def theory_coincidence_rate(average_power: float, pair_modes: float, det: DetectionSpec,
                            fiber: FiberSpec, pump: PumpSpec) -> float:
    """cw-theory prediction η|γPz|²Δντ·R, i.e. the pair rate at κ = 1."""
    mu = _nonlinear_phase_squared(average_power, fiber, pump) * pair_modes
    return det.eta_pair * mu * pump.repetition_rate


# -----------------------------
# Calibration
# -----------------------------
def calibrate_source(
    reference: SourceReference,
    det: DetectionSpec,
    pump: PumpSpec,
    fiber: FiberSpec,
    collection: CollectionSpec,
    *,
    pair_arm: str = "idler",
) -> SourceModel:
    """Invert the pair-ratio definitions at the reference point into κ and Raman coefficients."""
    reference.check()
    rate = pump.repetition_rate
    true_pairs = reference.coincidence_rate * (1.0 - 1.0 / reference.contrast)
    singles_s = true_pairs / (det.eta_i * reference.pair_ratio_signal)
    singles_i = true_pairs / (det.eta_s * reference.pair_ratio_idler)

    mu_pair = true_pairs / (det.eta_pair * rate)
    mu_raman_s = singles_s / (det.eta_s * rate) - mu_pair
    mu_raman_i = singles_i / (det.eta_i * rate) - mu_pair
    # rounding noise around the pure-FWM limit
    tolerance = 1e-9 * mu_pair
    mu_raman_s = 0.0 if abs(mu_raman_s) <= tolerance else mu_raman_s
    mu_raman_i = 0.0 if abs(mu_raman_i) <= tolerance else mu_raman_i
    if mu_raman_s < 0 or mu_raman_i < 0:
        raise CalibrationError(
            "inconsistent calibration reference: inferred Raman means "
            f"({mu_raman_s:.4g}, {mu_raman_i:.4g}) photons/pulse are negative"
        )

    modes_s, modes_i = collection_modes(collection, pump)
    pair_modes = pair_mode_count(collection, pump, pair_arm)
    phase_squared = _nonlinear_phase_squared(reference.power, fiber, pump)
    kappa = mu_pair / (phase_squared * pair_modes)
    if not 0 < kappa <= 2:
        raise CalibrationError(f"calibrated pair-efficiency scale {kappa:.4g} outside (0, 2]")

    source = SourceModel(
        kappa=kappa,
        c_raman_s=mu_raman_s / reference.power,
        c_raman_i=mu_raman_i / reference.power,
        modes_s=modes_s,
        modes_i=modes_i,
        pair_modes=pair_modes,
    )
    log.info(
        "calibrated source: kappa=%.4g, mu_pair=%.4g, mu_raman=(%.4g, %.4g) at %.4g W",
        kappa, mu_pair, mu_raman_s, mu_raman_i, reference.power,
    )
    return source


# -----------------------------
# Sampling
# -----------------------------
def _thermal_counts(rng: np.random.Generator, mean: float, modes: float, size: int) -> np.ndarray:
    if mean == 0.0:
        return np.zeros(size, dtype=np.int32)
    if math.isinf(modes):
        return rng.poisson(mean, size).astype(np.int32)
    return rng.negative_binomial(modes, modes / (modes + mean), size).astype(np.int32)


def sample_pulses(rng: np.random.Generator, means: PhotonMeans, det: DetectionSpec,
                  n_pulses: int) -> PulseBatch:
    """Draw ``n_pulses`` independent pulse outcomes."""
    n_pair = _thermal_counts(rng, means.pair, means.pair_modes, n_pulses)
    n_raman_s = _thermal_counts(rng, means.raman_s, means.modes_s, n_pulses)
    n_raman_i = _thermal_counts(rng, means.raman_i, means.modes_i, n_pulses)
    n_unpaired_s = _thermal_counts(rng, means.unpaired_s, means.pair_modes, n_pulses)
    n_unpaired_i = _thermal_counts(rng, means.unpaired_i, means.pair_modes, n_pulses)

    det_s = rng.binomial(n_pair + n_raman_s + n_unpaired_s, det.eta_s).astype(np.int32)
    det_i = rng.binomial(n_pair + n_raman_i + n_unpaired_i, det.eta_i).astype(np.int32)
    return PulseBatch(n_pair, n_raman_s, n_raman_i, det_s, det_i, n_unpaired_s, n_unpaired_i)


def sample_pulse(rng: np.random.Generator, source: SourceModel, average_power: float,
                 det: DetectionSpec, fiber: FiberSpec, pump: PumpSpec) -> PulseOutcome:
    return sample_pulses(rng, source.means(average_power, fiber, pump), det, 1).outcome(0)


# -----------------------------
# Analytic rates
# -----------------------------
def _log_pgf(z: float, mean: float, modes: float) -> float:
    """log E[z^n] for n ~ NB(mean, modes); Poisson when modes is infinite."""
    if mean == 0.0:
        return 0.0
    if math.isinf(modes):
        return -mean * (1.0 - z)
    return -modes * math.log1p(mean * (1.0 - z) / modes)


def _arm_log_pgf(z: float, means: PhotonMeans, arm: str) -> float:
    pair = _log_pgf(z, means.pair, means.pair_modes)
    if arm == "signal":
        return pair + _log_pgf(z, means.raman_s, means.modes_s) + _log_pgf(z, means.unpaired_s, means.pair_modes)
    return pair + _log_pgf(z, means.raman_i, means.modes_i) + _log_pgf(z, means.unpaired_i, means.pair_modes)


def rates_from_means(means: PhotonMeans, det: DetectionSpec, repetition_rate: float) -> RateSet:
    """Exact threshold-detector rates from generating functions."""
    z_s = 1.0 - det.eta_s
    z_i = 1.0 - det.eta_i
    log_none_s = _arm_log_pgf(z_s, means, "signal")
    log_none_i = _arm_log_pgf(z_i, means, "idler")
    p_s = -math.expm1(log_none_s)
    p_i = -math.expm1(log_none_i)

    # only the shared pair number couples the arms
    coupling = (_log_pgf(z_s * z_i, means.pair, means.pair_modes)
                - _log_pgf(z_s, means.pair, means.pair_modes)
                - _log_pgf(z_i, means.pair, means.pair_modes))
    joint_excess = math.exp(log_none_s + log_none_i) * math.expm1(coupling)

    accidental = repetition_rate * p_s * p_i
    return RateSet(
        D_s=repetition_rate * p_s,
        D_i=repetition_rate * p_i,
        D_c=accidental + repetition_rate * joint_excess,
        D_a=accidental,
    )


def self_rates_from_means(means: PhotonMeans, det: DetectionSpec, repetition_rate: float,
                          arm: str) -> RateSet:
    """Rates between the two outputs of a 50/50 split of one arm's detected photons."""
    if arm not in ("signal", "idler"):
        raise DomainError(f"arm must be 'signal' or 'idler' (got {arm!r})")
    eta = det.eta_s if arm == "signal" else det.eta_i
    log_none_half = _arm_log_pgf(1.0 - eta / 2.0, means, arm)
    log_none_both = _arm_log_pgf(1.0 - eta, means, arm)
    p_half = -math.expm1(log_none_half)
    excess = math.exp(2.0 * log_none_half) * math.expm1(log_none_both - 2.0 * log_none_half)
    accidental = repetition_rate * p_half * p_half
    return RateSet(
        D_s=repetition_rate * p_half,
        D_i=repetition_rate * p_half,
        D_c=accidental + repetition_rate * excess,
        D_a=accidental,
        label=f"self_{arm}",
    )


def analytic_rates(source: SourceModel, average_power: float, det: DetectionSpec,
                   pump: PumpSpec, fiber: FiberSpec) -> RateSet:
    return rates_from_means(source.means(average_power, fiber, pump), det, pump.repetition_rate)


def analytic_self_rates(source: SourceModel, average_power: float, det: DetectionSpec,
                        pump: PumpSpec, fiber: FiberSpec, arm: str) -> RateSet:
    return self_rates_from_means(source.means(average_power, fiber, pump), det,
                                 pump.repetition_rate, arm)


def single_arm_g2(means: PhotonMeans, arm: str) -> float:
    """1 + Σ μ_k²/M_k / (Σ μ_k)² over the arm's independent thermal contributions."""
    if arm == "signal":
        parts = [(means.pair, means.pair_modes), (means.raman_s, means.modes_s),
                 (means.unpaired_s, means.pair_modes)]
    elif arm == "idler":
        parts = [(means.pair, means.pair_modes), (means.raman_i, means.modes_i),
                 (means.unpaired_i, means.pair_modes)]
    else:
        raise DomainError(f"arm must be 'signal' or 'idler' (got {arm!r})")
    total = sum(mu for mu, _ in parts)
    if total == 0:
        return math.nan
    excess = sum(mu * mu / modes for mu, modes in parts if not math.isinf(modes))
    return 1.0 + excess / total**2


# -----------------------------
# Spectral weight
# -----------------------------
_FWHM_TO_GAUSS = 4.0 * math.log(2.0)


def _passband(nu: np.ndarray, centre: float, fwhm: float, shape: str) -> np.ndarray:
    if shape == "rect":
        return (np.abs(nu - centre) <= fwhm / 2.0).astype(float)
    return np.exp(-_FWHM_TO_GAUSS * ((nu - centre) / fwhm) ** 2)


def _window_span(fwhm: float, shape: str) -> float:
    return fwhm / 2.0 if shape == "rect" else 3.0 * fwhm


def _joint_overlap(signal_centre: float, pump: PumpSpec, fiber: FiberSpec,
                   model: DispersionModel, collection: CollectionSpec,
                   grid_signal: int = 601, grid_sum: int = 121) -> float:
    c = SPEED_OF_LIGHT
    nu_p = c / pump.wavelength
    nu_s0 = c / signal_centre
    nu_i0 = c / collection.idler_wavelength
    fwhm_s = c * collection.bandwidth / signal_centre**2
    fwhm_i = c * collection.bandwidth / collection.idler_wavelength**2
    # pump self-convolution along ν_s + ν_i
    fwhm_env = math.sqrt(2.0) * c * collection.pump_envelope_bandwidth / pump.wavelength**2

    span_s = _window_span(fwhm_s, collection.passband)
    nu_s = np.linspace(nu_s0 - span_s, nu_s0 + span_s, grid_signal)
    eps = np.linspace(-2.0 * fwhm_env, 2.0 * fwhm_env, grid_sum)
    NS, EPS = np.meshgrid(nu_s, eps, indexing="ij")
    NI = 2.0 * nu_p + EPS - NS

    centre_offset = 2.0 * np.pi * (nu_p + EPS / 2.0) - model.reference_omega
    half_difference = np.pi * (NS - NI)
    mismatch = pair_mismatch(centre_offset, half_difference, model) - nonlinear_phase_term(pump, fiber)
    phase_matching = np.sinc(mismatch * fiber.length / (2.0 * np.pi)) ** 2

    integrand = (
        _passband(NS, nu_s0, fwhm_s, collection.passband)
        * _passband(NI, nu_i0, fwhm_i, collection.passband)
        * np.exp(-_FWHM_TO_GAUSS * (EPS / fwhm_env) ** 2)
        * phase_matching
    )
    return float(trapezoid(trapezoid(integrand, eps, axis=1), nu_s))


def spectral_weight(offset: float, pump: PumpSpec, fiber: FiberSpec, model: DispersionModel,
                    collection: CollectionSpec) -> float:
    """Pair rate into a signal window shifted by ``offset`` (m), relative to offset 0.

    The idler window stays fixed at ``collection.idler_wavelength``.
    """
    centre = collection.signal_wavelength
    if not centre + offset > 0:
        raise DomainError(f"signal window offset {offset!r} m leaves a non-positive wavelength")
    peak = _joint_overlap(centre, pump, fiber, model, collection)
    if peak <= 0:
        raise DomainError("collection windows see no phase-matched pairs at zero offset")
    if offset == 0.0:
        return 1.0
    return _joint_overlap(centre + offset, pump, fiber, model, collection) / peak


def scanned_contrast(peak_contrast: float, weight: float) -> float:
    """C/A at a scan point with flat background: 1 + (C/A_peak − 1)·weight."""
    return 1.0 + (peak_contrast - 1.0) * weight
