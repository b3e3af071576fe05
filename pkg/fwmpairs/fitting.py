"""Curve fits used on scan and sweep tables."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .config import FIT_MAX_ITERATIONS, FIT_XTOL
from .errors import DomainError, NumericalError

log = logging.getLogger(__name__)

_FWHM_TO_GAUSS = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class GaussianFit:
    center: float
    fwhm: float
    amplitude: float
    baseline: float
    residual: float

    def as_dict(self) -> dict[str, float]:
        return {
            "center": self.center,
            "fwhm": self.fwhm,
            "amplitude": self.amplitude,
            "baseline": self.baseline,
            "residual": self.residual,
        }


def gaussian(x, center, fwhm, amplitude, baseline):
    return baseline + amplitude * np.exp(-_FWHM_TO_GAUSS * ((x - center) / fwhm) ** 2)


def _half_crossings(x: np.ndarray, y: np.ndarray, level: float) -> float:
    above = np.flatnonzero(y >= level)
    lo, hi = above[0], above[-1]

    def crossing(i_out, i_in):
        x0, x1, y0, y1 = x[i_out], x[i_in], y[i_out], y[i_in]
        return x0 + (level - y0) * (x1 - x0) / (y1 - y0)

    left = crossing(lo - 1, lo) if lo > 0 else x[0]
    right = crossing(hi + 1, hi) if hi < len(x) - 1 else x[-1]
    width = right - left
    return width if width > 0 else (x[-1] - x[0]) / 2.0


def initial_guess(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """(center, fwhm, amplitude, baseline) from argmax, extremes and half-maximum crossings."""
    peak = int(np.argmax(y))  # first maximum, i.e. smallest x on ties
    baseline = float(np.min(y))
    amplitude = float(np.max(y)) - baseline
    fwhm = _half_crossings(x, y, baseline + amplitude / 2.0)
    return float(x[peak]), float(fwhm), amplitude, baseline


def fit_gaussian(
    x: Sequence[float],
    y: Sequence[float],
    sigma_y: Optional[Sequence[float]] = None,
) -> GaussianFit:
    """Least-squares Gaussian-plus-baseline fit; weighted when ``sigma_y`` is given."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 5:
        raise DomainError("fit_gaussian needs at least 5 (x, y) points")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    sigma = None
    if sigma_y is not None:
        sigma = np.asarray(sigma_y, dtype=float)[order]
        if np.any(~np.isfinite(sigma)) or np.any(sigma <= 0):
            raise DomainError("sigma_y must be finite and > 0")
    if np.ptp(y) == 0:
        raise NumericalError("degenerate data: all y values are equal")

    p0 = initial_guess(x, y)
    try:
        popt, _ = curve_fit(
            gaussian, x, y, p0=p0, sigma=sigma, absolute_sigma=sigma is not None,
            xtol=FIT_XTOL, maxfev=FIT_MAX_ITERATIONS * (len(p0) + 1),
        )
    except (RuntimeError, ValueError) as exc:
        raise NumericalError(f"Gaussian fit did not converge: {exc}") from exc

    center, fwhm, amplitude, baseline = (float(v) for v in popt)
    weights = 1.0 if sigma is None else 1.0 / sigma**2
    residual = float(np.sum(weights * (y - gaussian(x, *popt)) ** 2))
    return GaussianFit(center, abs(fwhm), amplitude, baseline, residual)


def fit_power_law(powers: Sequence[float], rates: Sequence[float]) -> float:
    """Log-log least-squares slope."""
    p = np.asarray(powers, dtype=float)
    r = np.asarray(rates, dtype=float)
    if p.shape != r.shape or p.size < 3:
        raise DomainError("fit_power_law needs at least 3 (P, rate) points")
    if np.any(~(p > 0)) or np.any(~(r > 0)):
        raise DomainError("fit_power_law needs strictly positive powers and rates")
    slope, _ = np.polyfit(np.log(p), np.log(r), 1)
    return float(slope)
