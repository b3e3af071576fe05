# fwmpairs/selftest.py
"""Closed-form oracles run at reduced scale by ``fwm_pairs.py selftest``."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import config as C
from .batches import batch_rng
from .counting import accumulate, self_correlate
from .dispersion import (
    DispersionModel,
    FiberSpec,
    PumpSpec,
    detuning,
    group_delay_walkoff,
    nonlinear_phase_term,
    solve_phase_matched_signal,
)
from .errors import FwmPairsError
from .harness import calibrate_setup
from .pairgen import (
    DetectionSpec,
    PhotonMeans,
    SourceModel,
    SourceReference,
    rates_from_means,
    sample_pulses,
    self_rates_from_means,
)
from .settings import ExperimentConfig

log = logging.getLogger(__name__)

MC_PULSES = 1_000_000
MC_SIGMAS = 5.0


@dataclass(frozen=True)
class SelftestFixture:
    fiber: FiberSpec
    pump: PumpSpec              # at the dispersion calibration power
    model: DispersionModel
    matched_signal: float
    walkoff: float
    detection: DetectionSpec
    source: SourceModel
    reference: SourceReference
    pulses: int = MC_PULSES
    seed: int = C.DEFAULT_SEED


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str


def default_fixture() -> SelftestFixture:
    config = ExperimentConfig.defaults()
    setup = calibrate_setup(config)
    targets = config.dispersion_targets()
    return SelftestFixture(
        fiber=setup.fiber,
        pump=setup.pump.with_power(targets.power),
        model=setup.dispersion,
        matched_signal=targets.matched_signal,
        walkoff=targets.walkoff,
        detection=setup.detection,
        source=setup.source,
        reference=config.source_reference(),
    )


# -----------------------------
# Checks
# -----------------------------
def _closed_form_detuning(fx: SelftestFixture) -> Optional[float]:
    """Positive root Ω of β4Ω⁴/12 + β2Ω² + 2γP = 0 nearest the target, if any."""
    b2, b4 = fx.model.beta2, fx.model.beta4
    k = nonlinear_phase_term(fx.pump, fx.fiber)
    if b4 == 0.0:
        candidates = [-k / b2] if b2 != 0.0 else []
    else:
        disc = b2 * b2 - k * b4 / 3.0
        if disc < 0:
            return None
        root = math.sqrt(disc)
        candidates = [(-b2 + root) / (b4 / 6.0), (-b2 - root) / (b4 / 6.0)]
    squares = [x for x in candidates if x > 0]
    if not squares:
        return None
    target = float(detuning(fx.matched_signal, fx.pump.wavelength))
    return min((math.sqrt(x) for x in squares), key=lambda omega: abs(omega - target))


def check_solver_closed_form(fx: SelftestFixture) -> CheckResult:
    name = "solver_closed_form"
    omega = _closed_form_detuning(fx)
    if omega is None:
        return CheckResult(name, False, "no positive phase-matched detuning in closed form")
    closed_signal = 2.0 * np.pi * C.SPEED_OF_LIGHT / (fx.pump.omega + omega)
    signal, _ = solve_phase_matched_signal(fx.pump, fx.fiber, fx.model, near=fx.matched_signal)
    off_target = abs(closed_signal - fx.matched_signal) / C.NM
    agree = math.isclose(signal, closed_signal, rel_tol=1e-9)
    passed = agree and off_target <= 0.5
    return CheckResult(name, passed,
                       f"solver {signal / C.NM:.4f} nm, closed form {closed_signal / C.NM:.4f} nm, "
                       f"target {fx.matched_signal / C.NM:.4f} nm")


def check_walkoff(fx: SelftestFixture) -> CheckResult:
    idler = 1.0 / (2.0 / fx.pump.wavelength - 1.0 / fx.matched_signal)
    walkoff = group_delay_walkoff(fx.matched_signal, idler, fx.model, fx.fiber.length)
    passed = math.isclose(walkoff, fx.walkoff, rel_tol=1e-6)
    return CheckResult("walkoff", passed, f"{walkoff / C.PS:.6g} ps vs target {fx.walkoff / C.PS:.6g} ps")


def check_calibration_round_trip(fx: SelftestFixture) -> CheckResult:
    """The low-gain pair-ratio definitions evaluated on the calibrated means return the references."""
    ref, det = fx.reference, fx.detection
    means = fx.source.means(ref.power, fx.fiber, fx.pump.with_power(ref.power))
    rate = fx.pump.repetition_rate
    true_pairs = det.eta_pair * means.pair * rate
    singles_s = det.eta_s * means.signal_total * rate
    singles_i = det.eta_i * means.idler_total * rate
    got = {
        "true pairs": (true_pairs, ref.coincidence_rate * (1.0 - 1.0 / ref.contrast)),
        "R_s": (true_pairs / (det.eta_i * singles_s), ref.pair_ratio_signal),
        "R_i": (true_pairs / (det.eta_s * singles_i), ref.pair_ratio_idler),
    }
    bad = [k for k, (value, want) in got.items() if not math.isclose(value, want, rel_tol=1e-9)]
    return CheckResult("calibration_round_trip", not bad,
                       "ok" if not bad else f"mismatch in {', '.join(bad)}")


def check_nb_moments(fx: SelftestFixture) -> CheckResult:
    mean, modes = 0.5, fx.source.pair_modes
    means = PhotonMeans(pair=mean, raman_s=0.0, raman_i=0.0, pair_modes=modes, modes_s=modes, modes_i=modes)
    rng = batch_rng(fx.seed, "selftest:nb-moments", 0)
    n = sample_pulses(rng, means, DetectionSpec(1.0, 1.0, 1.0), fx.pulses).n_pair.astype(float)
    variance = mean + mean * mean / modes
    mean_ok = abs(n.mean() - mean) <= MC_SIGMAS * math.sqrt(variance / n.size)
    var_ok = math.isclose(n.var(), variance, rel_tol=0.03)
    g2 = float(np.mean(n * (n - 1.0))) / n.mean() ** 2
    g2_ok = math.isclose(g2, 1.0 + 1.0 / modes, rel_tol=0.03)
    return CheckResult("nb_moments", mean_ok and var_ok and g2_ok,
                       f"mean {n.mean():.5f} (want {mean}), var {n.var():.5f} (want {variance:.5f}), "
                       f"g2 {g2:.4f} (want {1.0 + 1.0 / modes:.4f})")


def _within(observed: int, expected: float) -> bool:
    return abs(observed - expected) <= MC_SIGMAS * math.sqrt(max(expected, 1.0))


def _mc_batch(fx: SelftestFixture, scenario: str):
    power = fx.reference.power
    means = fx.source.means(power, fx.fiber, fx.pump.with_power(power))
    rng = batch_rng(fx.seed, scenario, 0)
    return means, rng, sample_pulses(rng, means, fx.detection, fx.pulses)


def check_accidental_factorization(fx: SelftestFixture) -> CheckResult:
    _, _, batch = _mc_batch(fx, "selftest:accidentals")
    record = accumulate(batch, fx.pump.repetition_rate)
    expected = record.N_s * record.N_i / record.N_pulses
    return CheckResult("accidental_factorization", _within(record.N_a, expected),
                       f"N_a {record.N_a} vs N_s·N_i/N {expected:.1f}")


def check_mc_vs_analytic(fx: SelftestFixture) -> CheckResult:
    means, rng, batch = _mc_batch(fx, "selftest:mc-vs-analytic")
    rate = fx.pump.repetition_rate
    seconds = fx.pulses / rate
    records = {
        "cross": (accumulate(batch, rate), rates_from_means(means, fx.detection, rate)),
        "self_signal": (self_correlate(batch, "signal", rng, rate),
                        self_rates_from_means(means, fx.detection, rate, "signal")),
        "self_idler": (self_correlate(batch, "idler", rng, rate),
                       self_rates_from_means(means, fx.detection, rate, "idler")),
    }
    bad = []
    for label, (record, rates) in records.items():
        for count, field in (("N_s", "D_s"), ("N_i", "D_i"), ("N_c", "D_c"), ("N_a", "D_a")):
            if not _within(getattr(record, count), getattr(rates, field) * seconds):
                bad.append(f"{label}.{count}")
    return CheckResult("mc_vs_analytic", not bad,
                       f"{fx.pulses} pulses, all within {MC_SIGMAS:g}σ" if not bad else f"outside band: {', '.join(bad)}")


CHECKS: list[Callable[[SelftestFixture], CheckResult]] = [
    check_solver_closed_form,
    check_walkoff,
    check_calibration_round_trip,
    check_nb_moments,
    check_accidental_factorization,
    check_mc_vs_analytic,
]


def run_selftest(fixture: Optional[SelftestFixture] = None) -> list[CheckResult]:
    fixture = fixture or default_fixture()
    results = []
    for check in CHECKS:
        name = check.__name__.removeprefix("check_")
        try:
            result = check(fixture)
        except FwmPairsError as exc:
            result = CheckResult(name, False, f"{type(exc).__name__}: {exc}")
        log.info("selftest %s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
        results.append(result)
    return results


def failed_checks(results: list[CheckResult]) -> list[str]:
    return [r.name for r in results if not r.passed]
