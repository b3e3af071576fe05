# fwmpairs/harness.py
"""Experiment drivers: calibration, power sweeps, spectral scans and ZWM tests.

Every driver returns a :class:`ScanResult` whose rows carry the analytic
expectation next to the Monte Carlo counts (unless run analytic-only).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from . import __version__
from . import config as C
from .batches import BatchPlan, execute_batches
from .counting import (
    CountsRecord,
    MetricsRecord,
    accumulate,
    metrics_from_rates,
    self_correlate,
    to_metrics,
    with_zwm,
    zwm_v,
)
from .dispersion import (
    DispersionModel,
    FiberSpec,
    PumpSpec,
    calibrate_dispersion,
    group_delay_walkoff,
    matched_signal_slope,
    signal_shift_per_power,
    solve_phase_matched_signal,
)
from .errors import CountingError, DomainError, NumericalError
from .fitting import fit_gaussian, fit_power_law
from .pairgen import (
    CollectionSpec,
    DetectionSpec,
    PhotonMeans,
    SourceModel,
    calibrate_source,
    rates_from_means,
    sample_pulses,
    scanned_contrast,
    self_rates_from_means,
    spectral_weight,
    theory_coincidence_rate,
)
from .settings import ExperimentConfig, model_entries

log = logging.getLogger(__name__)


# -----------------------------
# Calibration
# -----------------------------
@dataclass(frozen=True)
class CalibratedSetup:
    config: ExperimentConfig
    fiber: FiberSpec
    pump: PumpSpec
    collection: CollectionSpec
    detection: DetectionSpec
    dispersion: DispersionModel
    source: SourceModel

    def means(self, average_power: float) -> PhotonMeans:
        return self.source.means(average_power, self.fiber, self.pump.with_power(average_power))

    def derived_config(self) -> ExperimentConfig:
        """The input config with the calibrated models written in.

        Keys already set explicitly are kept as written, so deriving from a
        derived config reproduces it exactly.
        """
        entries = model_entries(self.dispersion, self.source, self.config)
        return self.config.with_entries({k: v for k, v in entries.items() if not self.config.has(k)})


class CheckRow(NamedTuple):
    quantity: str
    model: float
    reference: float


def calibrate_setup(config: ExperimentConfig) -> CalibratedSetup:
    """Use the config's models where given, calibrate the rest from its targets."""
    fiber, pump = config.fiber(), config.pump()
    collection, det = config.collection(), config.detection()

    model = config.dispersion()
    if model is None:
        targets = config.dispersion_targets()
        model = calibrate_dispersion(pump, fiber, targets.matched_signal, targets.walkoff, targets.power)

    source = config.source()
    if source is None:
        calibrated = calibrate_source(
            config.source_reference(), det, pump, fiber, collection,
            pair_arm=config.get("source.pair_bandwidth_arm"),
        )
        source = config.source(base=calibrated)

    return CalibratedSetup(config, fiber, pump, collection, det, model, source)


def figure_of_merit(coincidence_rate: float, average_power: float, bandwidth: float) -> float:
    """Coincidence rate per pump power per collection bandwidth, in kHz/mW/nm."""
    if not (average_power > 0 and bandwidth > 0):
        raise DomainError("figure of merit needs positive power and bandwidth")
    return (coincidence_rate / C.KHZ) / (average_power / C.MW) / (bandwidth / C.NM)


def _cross_metrics(setup: CalibratedSetup, average_power: float) -> MetricsRecord:
    rates = rates_from_means(setup.means(average_power), setup.detection, setup.pump.repetition_rate)
    return metrics_from_rates(rates, setup.detection, setup.config.integration().seconds_for(average_power))


def calibration_report(setup: CalibratedSetup) -> list[CheckRow]:
    """Model predictions next to the measured values they should reproduce."""
    config, fiber, pump = setup.config, setup.fiber, setup.pump
    nan = math.nan
    targets = config.dispersion_targets()
    matched_pump = pump.with_power(targets.power)
    signal, idler = solve_phase_matched_signal(matched_pump, fiber, setup.dispersion, near=targets.matched_signal)
    walkoff = group_delay_walkoff(signal, idler, setup.dispersion, fiber.length)
    slope = matched_signal_slope(matched_pump, fiber, setup.dispersion)
    index_shift = signal_shift_per_power(signal, C.MW, matched_pump, fiber)

    reference = config.source_reference()
    at_reference = _cross_metrics(setup, reference.power)
    crosscheck_power = config.get("calibration.crosscheck_power_mW") * C.MW
    at_crosscheck = _cross_metrics(setup, crosscheck_power)
    theory = theory_coincidence_rate(reference.power, setup.source.pair_modes, setup.detection,
                                     fiber, pump.with_power(reference.power))
    quoted_theory = config.get("calibration.theory_coincidence_rate_kHz") * C.KHZ

    rows = [
        CheckRow("matched signal (nm)", signal / C.NM, targets.matched_signal / C.NM),
        CheckRow("matched idler (nm)", idler / C.NM, setup.collection.idler_wavelength / C.NM),
        CheckRow("walkoff (ps)", walkoff / C.PS, targets.walkoff / C.PS),
        CheckRow("signal shift, phase index (nm/mW)", index_shift / C.NM, nan),
        CheckRow("signal shift, dispersion model (nm/mW)", slope * C.MW / C.NM, nan),
        CheckRow("kappa", setup.source.kappa, nan),
        CheckRow("kappa=1 theory D_c (kHz)", theory / C.KHZ, quoted_theory / C.KHZ),
        CheckRow("measured / kappa=1 theory D_c", reference.coincidence_rate / theory,
                 reference.coincidence_rate / quoted_theory),
        CheckRow("D_c at reference (kHz)", at_reference.D_c / C.KHZ, reference.coincidence_rate / C.KHZ),
        CheckRow("C/A at reference", at_reference.contrast, reference.contrast),
        CheckRow("R_s at reference", at_reference.R_s, reference.pair_ratio_signal),
        CheckRow("R_i at reference", at_reference.R_i, reference.pair_ratio_idler),
        CheckRow("C/A at cross-check", at_crosscheck.contrast, nan),
        CheckRow("R_s at cross-check", at_crosscheck.R_s, config.get("calibration.crosscheck_pair_ratio_signal")),
        CheckRow("R_i at cross-check", at_crosscheck.R_i, config.get("calibration.crosscheck_pair_ratio_idler")),
        CheckRow(
            "figure of merit (kHz/mW/nm)",
            figure_of_merit(at_reference.D_c, reference.power, setup.collection.bandwidth),
            figure_of_merit(reference.coincidence_rate, reference.power, setup.collection.bandwidth),
        ),
    ]
    return rows


# -----------------------------
# Monte Carlo kernel
# -----------------------------
@dataclass(frozen=True)
class PulseKernel:
    """Per-batch sampler; picklable so batches can run in worker processes."""

    means: PhotonMeans
    detection: DetectionSpec
    repetition_rate: float
    self_correlation: bool = False

    def __call__(self, rng: np.random.Generator, n_pulses: int) -> dict[str, CountsRecord]:
        batch = sample_pulses(rng, self.means, self.detection, n_pulses)
        records = {"cross": accumulate(batch, self.repetition_rate)}
        if self.self_correlation:
            records["self_signal"] = self_correlate(batch, "signal", rng, self.repetition_rate)
            records["self_idler"] = self_correlate(batch, "idler", rng, self.repetition_rate)
        return records


def pulse_count(seconds: float, repetition_rate: float) -> int:
    return max(int(round(seconds * repetition_rate)), 1)


def _simulate(config: ExperimentConfig, scenario: str, kernel: PulseKernel,
              pulses: int) -> dict[str, MetricsRecord]:
    plan = BatchPlan(pulses, config.batch_pulses, config.seed, scenario, config.workers)
    counts = execute_batches(plan, kernel)
    return {label: to_metrics(record, kernel.detection, strict=False) for label, record in counts.items()}


# -----------------------------
# Results
# -----------------------------
@dataclass(frozen=True)
class ScanRow:
    axis: float
    seconds: float
    pulses: int
    analytic: dict[str, MetricsRecord]
    mc: dict[str, MetricsRecord] = field(default_factory=dict)
    extras: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ScanResult:
    kind: str
    rows: list[ScanRow]
    fits: dict[str, Any]
    provenance: dict[str, Any]
    analytic_only: bool = False


def provenance(config: ExperimentConfig, analytic_only: bool) -> dict[str, Any]:
    return {
        "config_hash": config.config_hash,
        "seed": config.seed,
        "version": __version__,
        "overrides": list(config.overrides),
        "analytic_only": analytic_only,
    }


def _with_zwm_or_nan(cross: MetricsRecord, self_s: MetricsRecord, self_i: MetricsRecord) -> MetricsRecord:
    try:
        return with_zwm(cross, zwm_v(cross, self_s, self_i))
    except CountingError as exc:
        log.debug("V undefined: %s", exc)
        return cross


# -----------------------------
# Power sweep
# -----------------------------
def _exponent(powers: Sequence[float], rates: Sequence[float]) -> float:
    points = [(p, r) for p, r in zip(powers, rates) if p > 0 and r > 0 and math.isfinite(r)]
    if len(points) < 3:
        return math.nan
    return fit_power_law([p for p, _ in points], [r for _, r in points])


def sweep_fits(rows: Sequence[ScanRow], threshold: float) -> dict[str, float]:
    """Log-log exponents of the singles and coincidence rates, over the whole axis and above ``threshold``."""
    fits: dict[str, float] = {}
    sources = [("an", lambda row: row.analytic.get("cross"))]
    if any(row.mc for row in rows):
        sources.append(("mc", lambda row: row.mc.get("cross")))
    for prefix, pick in sources:
        records = [(row.axis, pick(row)) for row in rows if pick(row) is not None]
        for name in ("D_s", "D_i", "D_c"):
            powers = [p for p, _ in records]
            rates = [getattr(m, name) for _, m in records]
            fits[f"{prefix}_{name}_exponent"] = _exponent(powers, rates)
            upper = [(p, r) for p, r in zip(powers, rates) if p >= threshold]
            fits[f"{prefix}_{name}_exponent_above_threshold"] = _exponent(
                [p for p, _ in upper], [r for _, r in upper]
            )
    return fits


def run_power_sweep(config: ExperimentConfig, *, setup: Optional[CalibratedSetup] = None,
                    analytic_only: bool = False) -> ScanResult:
    setup = setup or calibrate_setup(config)
    policy = config.integration()
    rate = setup.pump.repetition_rate
    rows = []
    for power in config.powers:
        seconds = policy.seconds_for(power)
        pulses = pulse_count(seconds, rate)
        means = setup.means(power)
        analytic = {"cross": metrics_from_rates(rates_from_means(means, setup.detection, rate),
                                                setup.detection, seconds)}
        mc = {}
        if not analytic_only:
            kernel = PulseKernel(means, setup.detection, rate)
            mc = _simulate(config, f"sweep-power:{power!r}", kernel, pulses)
        rows.append(ScanRow(axis=power, seconds=seconds, pulses=pulses, analytic=analytic, mc=mc))
        log.info("sweep point %.4g mW done (%d pulses%s)", power / C.MW, pulses,
                 ", analytic only" if analytic_only else "")

    fits = sweep_fits(rows, policy.threshold)
    return ScanResult("sweep-power", rows, fits, provenance(config, analytic_only), analytic_only)


# -----------------------------
# Spectral scan
# -----------------------------
def _gaussian_fit_entry(offsets_nm, contrasts, sigmas) -> dict[str, Any]:
    x = np.asarray(offsets_nm, dtype=float)
    y = np.asarray(contrasts, dtype=float)
    s = np.asarray(sigmas, dtype=float)
    keep = np.isfinite(y)
    sigma = s[keep] if np.all(np.isfinite(s[keep])) and np.all(s[keep] > 0) else None
    try:
        return fit_gaussian(x[keep], y[keep], sigma).as_dict()
    except (NumericalError, DomainError) as exc:
        log.warning("Gaussian fit of C/A vs offset failed: %s", exc)
        return {"error": str(exc)}


def run_spectral_scan(config: ExperimentConfig, *, setup: Optional[CalibratedSetup] = None,
                      analytic_only: bool = False) -> ScanResult:
    setup = setup or calibrate_setup(config)
    power = config.scan_power
    pump = setup.pump.with_power(power)
    rate = pump.repetition_rate
    seconds = config.integration().seconds_for(power)
    pulses = pulse_count(seconds, rate)

    base = setup.means(power)
    peak = rates_from_means(base, setup.detection, rate)
    peak_contrast = peak.D_c / peak.D_a if peak.D_a > 0 else math.nan

    rows = []
    for offset in config.offsets:
        weight = spectral_weight(offset, pump, setup.fiber, setup.dispersion, setup.collection)
        means = base.with_spectral_weight(min(weight, 1.0))
        analytic = {"cross": metrics_from_rates(rates_from_means(means, setup.detection, rate),
                                                setup.detection, seconds)}
        mc = {}
        if not analytic_only:
            kernel = PulseKernel(means, setup.detection, rate)
            mc = _simulate(config, f"scan-spectrum:{offset!r}", kernel, pulses)
        extras = {"weight": weight, "model_contrast": scanned_contrast(peak_contrast, weight)}
        rows.append(ScanRow(axis=offset, seconds=seconds, pulses=pulses, analytic=analytic, mc=mc, extras=extras))
        log.info("scan point %+.3g nm: weight %.4g", offset / C.NM, weight)

    offsets_nm = [row.axis / C.NM for row in rows]
    fits = {"an_gaussian": _gaussian_fit_entry(
        offsets_nm,
        [row.analytic["cross"].contrast for row in rows],
        [row.analytic["cross"].sigma_contrast for row in rows],
    )}
    if not analytic_only:
        fits["mc_gaussian"] = _gaussian_fit_entry(
            offsets_nm,
            [row.mc["cross"].contrast for row in rows],
            [row.mc["cross"].sigma_contrast for row in rows],
        )
    return ScanResult("scan-spectrum", rows, fits, provenance(config, analytic_only), analytic_only)


# -----------------------------
# ZWM test
# -----------------------------
def run_zwm(config: ExperimentConfig, *, setup: Optional[CalibratedSetup] = None,
            analytic_only: bool = False) -> ScanResult:
    setup = setup or calibrate_setup(config)
    policy = config.integration()
    rate = setup.pump.repetition_rate
    det = setup.detection
    if setup.source.kappa == 0:
        log.info("pairing disabled: running the classical control")

    rows = []
    for power in config.powers:
        seconds = policy.seconds_for(power)
        pulses = pulse_count(seconds, rate)
        means = setup.means(power)
        analytic = {
            "cross": metrics_from_rates(rates_from_means(means, det, rate), det, seconds),
            "self_signal": metrics_from_rates(self_rates_from_means(means, det, rate, "signal"), det, seconds),
            "self_idler": metrics_from_rates(self_rates_from_means(means, det, rate, "idler"), det, seconds),
        }
        analytic["cross"] = _with_zwm_or_nan(analytic["cross"], analytic["self_signal"], analytic["self_idler"])
        mc = {}
        if not analytic_only:
            kernel = PulseKernel(means, det, rate, self_correlation=True)
            mc = _simulate(config, f"zwm:{power!r}", kernel, pulses)
            mc["cross"] = _with_zwm_or_nan(mc["cross"], mc["self_signal"], mc["self_idler"])
        rows.append(ScanRow(axis=power, seconds=seconds, pulses=pulses, analytic=analytic, mc=mc))
        log.info("ZWM point %.4g mW: V/sigma %.4g (analytic)", power / C.MW, analytic["cross"].V_over_sigma)

    return ScanResult("zwm-test", rows, {}, provenance(config, analytic_only), analytic_only)


def classical_control(setup: CalibratedSetup) -> CalibratedSetup:
    """The same setup with pairing switched off."""
    return replace(setup, source=replace(setup.source, kappa=0.0))
