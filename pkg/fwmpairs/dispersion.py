"""Fiber dispersion, four-wave-mixing phase matching and dispersion calibration.

Dispersion is a fourth-order Taylor expansion of the propagation constant
about a reference (pump) frequency. Only the relative terms enter the
observables, so the absolute beta0 and beta1 are never stored.

All wavelengths are in meters and angular frequencies in rad/s.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .config import (
    ROOT_GRID_POINTS,
    ROOT_RTOL,
    SHORTEST_SEARCH_WAVELENGTH,
    SPEED_OF_LIGHT,
)
from .errors import CalibrationError, DomainError, NumericalError

log = logging.getLogger(__name__)


def _require_positive(owner: str, **values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{owner}.{name} must be finite and > 0 (got {value!r})")


@dataclass(frozen=True)
class FiberSpec:
    """Microstructure fiber constants. gamma is in 1/(W·m)."""

    length: float
    gamma: float
    zero_dispersion_wavelength: float
    mode_diameter: float
    refractive_index: float

    def __post_init__(self):
        _require_positive(
            "FiberSpec",
            length=self.length,
            gamma=self.gamma,
            zero_dispersion_wavelength=self.zero_dispersion_wavelength,
            mode_diameter=self.mode_diameter,
            refractive_index=self.refractive_index,
        )


@dataclass(frozen=True)
class PumpSpec:
    """Pulsed pump laser. Peak power is average power over the duty factor R·τ."""

    wavelength: float
    bandwidth: float
    average_power: float
    repetition_rate: float
    pulse_width: float

    def __post_init__(self):
        _require_positive(
            "PumpSpec",
            wavelength=self.wavelength,
            bandwidth=self.bandwidth,
            repetition_rate=self.repetition_rate,
            pulse_width=self.pulse_width,
        )
        if not (math.isfinite(self.average_power) and self.average_power >= 0):
            raise DomainError(f"PumpSpec.average_power must be >= 0 (got {self.average_power!r})")
        # duty factor 1 is the cw limit
        if not (0 < self.duty_factor <= 1):
            raise DomainError(f"PumpSpec duty factor R·τ must lie in (0, 1] (got {self.duty_factor!r})")

    @property
    def duty_factor(self) -> float:
        return self.repetition_rate * self.pulse_width

    @property
    def peak_power(self) -> float:
        return self.average_power / self.duty_factor

    @property
    def omega(self) -> float:
        return angular_frequency(self.wavelength)

    def with_power(self, average_power: float) -> "PumpSpec":
        return replace(self, average_power=average_power)


@dataclass(frozen=True)
class DispersionModel:
    """Taylor coefficients about ``reference_wavelength`` (s²/m, s³/m, s⁴/m)."""

    reference_wavelength: float
    beta2: float
    beta3: float = 0.0
    beta4: float = 0.0

    def __post_init__(self):
        _require_positive("DispersionModel", reference_wavelength=self.reference_wavelength)
        for name in ("beta2", "beta3", "beta4"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"DispersionModel.{name} must be finite")

    @property
    def reference_omega(self) -> float:
        return angular_frequency(self.reference_wavelength)

    @property
    def symmetric_degenerate(self) -> bool:
        # only then does the zero-power matching collapse onto Ω = 0
        return self.beta2 == 0.0 and self.beta4 < 0.0


def angular_frequency(wavelength):
    return 2.0 * np.pi * SPEED_OF_LIGHT / wavelength


def detuning(wavelength, reference_wavelength: float):
    """Angular-frequency offset of ``wavelength`` above ``reference_wavelength``."""
    return 2.0 * np.pi * SPEED_OF_LIGHT * (1.0 / wavelength - 1.0 / reference_wavelength)


def conjugate_wavelength(pump_wavelength: float, signal_wavelength: float) -> float:
    """Idler wavelength from energy conservation ω_s + ω_i = 2ω_p."""
    _require_positive("conjugate_wavelength", pump_wavelength=pump_wavelength,
                      signal_wavelength=signal_wavelength)
    inverse = 2.0 / pump_wavelength - 1.0 / signal_wavelength
    if not inverse > 0:
        raise DomainError(
            f"no conjugate for signal {signal_wavelength!r} m about pump {pump_wavelength!r} m: "
            "idler frequency would be non-positive"
        )
    return 1.0 / inverse


def linear_mismatch(omega, model: DispersionModel):
    """2β(ω_p) − β(ω_p+Ω) − β(ω_p−Ω) for a pump sitting at the reference frequency.

    Even in Ω; the odd Taylor terms cancel.
    """
    omega = np.asarray(omega, dtype=float)
    result = -(model.beta2 * omega**2 + model.beta4 * omega**4 / 12.0)
    return result if result.ndim else float(result)


def pair_mismatch(center_offset, half_difference, model: DispersionModel):
    """2β(ω̄) − β(ω̄+d) − β(ω̄−d) with ω̄ = ω_ref + ``center_offset``.

    Exact for the quartic model. Reduces to :func:`linear_mismatch` at
    ``center_offset = 0``; beta3 enters only through the centre offset.
    """
    a = np.asarray(center_offset, dtype=float)
    d = np.asarray(half_difference, dtype=float)
    d2 = d * d
    result = -(
        model.beta2 * d2
        + model.beta3 * a * d2
        + model.beta4 * (a * a * d2 / 2.0 + d2 * d2 / 12.0)
    )
    return result if result.ndim else float(result)


def nonlinear_phase_term(pump: PumpSpec, fiber: FiberSpec) -> float:
    """The 2γP/(Rτ) self/cross-phase term of the matching condition."""
    return 2.0 * fiber.gamma * pump.peak_power


def _pump_offset(pump: PumpSpec, model: DispersionModel) -> float:
    return float(detuning(pump.wavelength, model.reference_wavelength))


def total_mismatch(signal_wavelength: float, pump: PumpSpec, fiber: FiberSpec,
                   model: DispersionModel) -> float:
    """Phase mismatch (2k_p − k_s − k_i) − 2γP/(Rτ) at the given signal wavelength."""
    conjugate_wavelength(pump.wavelength, signal_wavelength)
    omega = detuning(signal_wavelength, pump.wavelength)
    offset = _pump_offset(pump, model)
    if offset == 0.0:
        linear = linear_mismatch(omega, model)
    else:
        linear = pair_mismatch(offset, omega, model)
    return float(linear - nonlinear_phase_term(pump, fiber))


def _mismatch_of_detuning(omega, pump: PumpSpec, fiber: FiberSpec, model: DispersionModel):
    offset = _pump_offset(pump, model)
    return pair_mismatch(offset, omega, model) - nonlinear_phase_term(pump, fiber)


def search_bracket(pump: PumpSpec) -> float:
    """Upper detuning bound Ω_max: signal no shorter than the search floor wavelength."""
    return float(detuning(SHORTEST_SEARCH_WAVELENGTH, pump.wavelength))


def phase_matched_roots(pump: PumpSpec, fiber: FiberSpec, model: DispersionModel) -> np.ndarray:
    """Every positive detuning Ω in (0, Ω_max] where the total mismatch vanishes, ascending."""
    omega_max = search_bracket(pump)
    if omega_max <= 0:
        raise DomainError(f"pump wavelength {pump.wavelength!r} m is below the search floor")

    grid = np.concatenate([[0.0], np.geomspace(omega_max * 1e-9, omega_max, ROOT_GRID_POINTS)])
    values = _mismatch_of_detuning(grid, pump, fiber, model)

    def f(omega: float) -> float:
        return float(_mismatch_of_detuning(omega, pump, fiber, model))

    roots = []
    for k in range(len(grid) - 1):
        lo, hi = grid[k], grid[k + 1]
        f_lo, f_hi = values[k], values[k + 1]
        if f_hi == 0.0:
            roots.append(hi)
        elif f_lo * f_hi < 0:
            roots.append(brentq(f, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500))
    return np.array(sorted(set(roots)), dtype=float)


def solve_phase_matched_signal(
    pump: PumpSpec,
    fiber: FiberSpec,
    model: DispersionModel,
    *,
    near: Optional[float] = None,
) -> tuple[float, float]:
    """Phase-matched (λ_s, λ_i).

    Returns the smallest positive root, or the root closest to the ``near``
    signal wavelength when a model has more than one sideband.
    """
    roots = phase_matched_roots(pump, fiber, model)
    if roots.size == 0:
        if _mismatch_of_detuning(0.0, pump, fiber, model) == 0.0:
            # degenerate matching at the pump itself
            return pump.wavelength, pump.wavelength
        raise NumericalError(
            "no phase-matched sideband: total mismatch has no sign change in "
            f"(0, {search_bracket(pump):.6g}] rad/s"
        )
    if near is None:
        omega = roots[0]
    else:
        target = abs(float(detuning(near, pump.wavelength)))
        omega = roots[np.argmin(np.abs(roots - target))]
    if roots.size > 1:
        log.debug("phase-matched detunings %s rad/s, chose %.9g", roots.tolist(), omega)

    signal = float(2.0 * np.pi * SPEED_OF_LIGHT / (pump.omega + omega))
    return signal, conjugate_wavelength(pump.wavelength, signal)


def signal_shift_per_power(signal_wavelength: float, delta_power: float, pump: PumpSpec,
                           fiber: FiberSpec) -> float:
    """Phase-index estimate δλ_s = γλ_s²δP/(nπRτ)."""
    if delta_power < 0:
        raise DomainError(f"delta_power must be >= 0 (got {delta_power!r})")
    return (fiber.gamma * signal_wavelength**2 * delta_power
            / (fiber.refractive_index * np.pi * pump.duty_factor))


def matched_signal_slope(pump: PumpSpec, fiber: FiberSpec, model: DispersionModel,
                         *, step: float = 1e-5) -> float:
    """dλ_s/dP (m/W) of the solved sideband, by central difference about the pump's power."""
    centre, _ = solve_phase_matched_signal(pump, fiber, model)
    lo_power = max(pump.average_power - step, 0.0)
    hi_power = pump.average_power + step
    lo, _ = solve_phase_matched_signal(pump.with_power(lo_power), fiber, model, near=centre)
    hi, _ = solve_phase_matched_signal(pump.with_power(hi_power), fiber, model, near=centre)
    return (hi - lo) / (hi_power - lo_power)


def group_delay_walkoff(signal_wavelength: float, idler_wavelength: float,
                        model: DispersionModel, length: float) -> float:
    """z·(β1(ω_s) − β1(ω_i)); positive when the signal arrives later."""
    ref = model.reference_wavelength
    offset_s = detuning(signal_wavelength, ref)
    offset_i = detuning(idler_wavelength, ref)
    a = (offset_s + offset_i) / 2.0
    d = (offset_s - offset_i) / 2.0
    per_length = (
        2.0 * model.beta2 * d
        + 2.0 * model.beta3 * a * d
        + model.beta4 * (a * a * d + d**3 / 3.0)
    )
    return float(length * per_length)


def calibrate_dispersion(
    pump: PumpSpec,
    fiber: FiberSpec,
    matched_signal: float,
    walkoff: float,
    calibration_power: float,
) -> DispersionModel:
    """Solve for (β2, β4) that put the sideband at ``matched_signal`` and give ``walkoff``.

    beta3 is left at zero; it cancels in both constraints.
    """
    if walkoff == 0.0:
        raise CalibrationError("walkoff target must be non-zero")
    omega = float(detuning(matched_signal, pump.wavelength))
    if omega == 0.0:
        raise CalibrationError("matched signal equals the pump wavelength: calibration system is singular")

    phase = nonlinear_phase_term(pump.with_power(calibration_power), fiber)
    # unknowns u = β2Ω², v = β4Ω⁴/12
    system = np.array([[1.0, 1.0], [2.0, 4.0]])
    rhs = np.array([-phase, walkoff * omega / fiber.length])
    u, v = np.linalg.solve(system, rhs)

    model = DispersionModel(
        reference_wavelength=pump.wavelength,
        beta2=float(u / omega**2),
        beta3=0.0,
        beta4=float(12.0 * v / omega**4),
    )
    log.info("calibrated dispersion: beta2=%.6g s²/m, beta4=%.6g s⁴/m", model.beta2, model.beta4)
    return model
