"""Coincidence-circuit emulation and count-derived metrics."""
from __future__ import annotations

import functools
import math
import operator
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Union

import numpy as np

from .errors import CountingError
from .pairgen import DetectionSpec, PulseBatch, PulseOutcome, RateSet

LABELS = ("cross", "self_signal", "self_idler")

PulseStream = Union[PulseBatch, Iterable[PulseOutcome]]


@dataclass(frozen=True)
class CountsRecord:
    """Raw counts over ``N_pulses`` pulses. Integration time is N_pulses / repetition_rate.

    For split-beam records ``N_s``/``N_i`` count the two half-arm clicks.
    """

    N_s: int
    N_i: int
    N_c: int
    N_a: int
    N_pulses: int
    repetition_rate: float
    label: str = "cross"

    def __post_init__(self):
        for name in ("N_s", "N_i", "N_c", "N_a", "N_pulses"):
            if getattr(self, name) < 0:
                raise CountingError(f"CountsRecord.{name} must be >= 0")
        if self.N_c > min(self.N_s, self.N_i):
            raise CountingError("coincidences cannot exceed either singles count")
        if self.label not in LABELS:
            raise CountingError(f"unknown record label {self.label!r}")

    @property
    def seconds(self) -> float:
        return self.N_pulses / self.repetition_rate

    def __add__(self, other: "CountsRecord") -> "CountsRecord":
        if not isinstance(other, CountsRecord):
            return NotImplemented
        if other.label != self.label or other.repetition_rate != self.repetition_rate:
            raise CountingError(f"cannot merge {self.label!r} with {other.label!r} records")
        return CountsRecord(
            N_s=self.N_s + other.N_s,
            N_i=self.N_i + other.N_i,
            N_c=self.N_c + other.N_c,
            N_a=self.N_a + other.N_a,
            N_pulses=self.N_pulses + other.N_pulses,
            repetition_rate=self.repetition_rate,
            label=self.label,
        )


@dataclass(frozen=True)
class MetricsRecord:
    """Rates (Hz) with one-σ Poisson uncertainties and derived ratios."""

    D_s: float
    D_i: float
    D_c: float
    D_a: float
    sigma_D_s: float
    sigma_D_i: float
    sigma_D_c: float
    sigma_D_a: float
    contrast: float
    sigma_contrast: float
    R_s: float
    R_i: float
    seconds: float
    label: str = "cross"
    V: float = math.nan
    sigma_V: float = math.nan
    V_over_sigma: float = math.nan


class ZwmStatistic(NamedTuple):
    V: float
    sigma: float
    V_over_sigma: float


def merge_counts(records: Iterable[CountsRecord]) -> CountsRecord:
    records = list(records)
    if not records:
        raise CountingError("nothing to merge")
    return functools.reduce(operator.add, records)


def _as_batch(stream: PulseStream) -> PulseBatch:
    if isinstance(stream, PulseBatch):
        return stream
    return PulseBatch.from_outcomes(stream)


def _count(click_a: np.ndarray, click_b: np.ndarray, repetition_rate: float, label: str) -> CountsRecord:
    n = int(click_a.shape[0])
    if n == 0:
        raise CountingError("empty pulse stream")
    # b delayed by one pulse, wrapping inside the batch
    accidentals = int(np.count_nonzero(click_a & np.roll(click_b, 1))) if n >= 2 else 0
    return CountsRecord(
        N_s=int(np.count_nonzero(click_a)),
        N_i=int(np.count_nonzero(click_b)),
        N_c=int(np.count_nonzero(click_a & click_b)),
        N_a=accidentals,
        N_pulses=n,
        repetition_rate=repetition_rate,
        label=label,
    )


def accumulate(stream: PulseStream, repetition_rate: float, label: str = "cross") -> CountsRecord:
    """Singles, same-pulse coincidences and one-pulse-delay accidentals for a pulse stream."""
    batch = _as_batch(stream)
    return _count(batch.click_s, batch.click_i, repetition_rate, label)


def self_correlate(stream: PulseStream, arm: str, rng: np.random.Generator,
                   repetition_rate: float) -> CountsRecord:
    """Split one arm's detected photons 50/50 and count coincidences between the halves."""
    if arm not in ("signal", "idler"):
        raise CountingError(f"arm must be 'signal' or 'idler' (got {arm!r})")
    batch = _as_batch(stream)
    detected = batch.det_s if arm == "signal" else batch.det_i
    half_a = rng.binomial(detected, 0.5)
    half_b = detected - half_a
    return _count(half_a >= 1, half_b >= 1, repetition_rate, f"self_{arm}")


def _pair_ratios(D_s, D_i, D_c, D_a, det: DetectionSpec, strict: bool) -> tuple[float, float]:
    true_pairs = D_c - D_a
    ratios = []
    for singles, eta, name in ((D_s, det.eta_i, "R_s"), (D_i, det.eta_s, "R_i")):
        if singles == 0 or eta == 0:
            if strict:
                raise CountingError(f"{name} undefined: zero singles rate or efficiency")
            ratios.append(math.nan)
        else:
            ratios.append(true_pairs / (eta * singles))
    return ratios[0], ratios[1]


def _contrast(n_c: float, n_a: float, strict: bool) -> tuple[float, float]:
    if n_a == 0:
        if strict:
            raise CountingError("contrast undefined: no accidental counts")
        return math.nan, math.nan
    contrast = n_c / n_a
    if n_c == 0:
        return 0.0, 1.0 / n_a
    return contrast, contrast * math.sqrt(1.0 / n_c + 1.0 / n_a)


def to_metrics(record: CountsRecord, det: DetectionSpec, *, strict: bool = True) -> MetricsRecord:
    """Rates over the record's integration time with √N/T uncertainties."""
    seconds = record.seconds
    if not seconds > 0:
        raise CountingError("integration time must be > 0")

    def rate(n):
        return n / seconds, math.sqrt(n) / seconds

    D_s, sigma_s = rate(record.N_s)
    D_i, sigma_i = rate(record.N_i)
    D_c, sigma_c = rate(record.N_c)
    D_a, sigma_a = rate(record.N_a)
    contrast, sigma_contrast = _contrast(record.N_c, record.N_a, strict)
    if record.label == "cross":
        R_s, R_i = _pair_ratios(D_s, D_i, D_c, D_a, det, strict)
    else:
        R_s = R_i = math.nan
    return MetricsRecord(
        D_s=D_s, D_i=D_i, D_c=D_c, D_a=D_a,
        sigma_D_s=sigma_s, sigma_D_i=sigma_i, sigma_D_c=sigma_c, sigma_D_a=sigma_a,
        contrast=contrast, sigma_contrast=sigma_contrast,
        R_s=R_s, R_i=R_i, seconds=seconds, label=record.label,
    )


def metrics_from_rates(rates: RateSet, det: DetectionSpec, seconds: float, *,
                       strict: bool = False) -> MetricsRecord:
    """Expected metrics, with uncertainties from the expected counts over ``seconds``."""
    if not seconds > 0:
        raise CountingError("integration time must be > 0")

    def sigma(value):
        return math.sqrt(value / seconds)

    contrast, sigma_contrast = _contrast(rates.D_c * seconds, rates.D_a * seconds, strict)
    if rates.label == "cross":
        R_s, R_i = _pair_ratios(rates.D_s, rates.D_i, rates.D_c, rates.D_a, det, strict)
    else:
        R_s = R_i = math.nan
    return MetricsRecord(
        D_s=rates.D_s, D_i=rates.D_i, D_c=rates.D_c, D_a=rates.D_a,
        sigma_D_s=sigma(rates.D_s), sigma_D_i=sigma(rates.D_i),
        sigma_D_c=sigma(rates.D_c), sigma_D_a=sigma(rates.D_a),
        contrast=contrast, sigma_contrast=sigma_contrast,
        R_s=R_s, R_i=R_i, seconds=seconds, label=rates.label,
    )


def nonclassicality_violation(V: float, sigma: float) -> float:
    if not sigma > 0:
        raise CountingError("V/σ undefined: combined uncertainty is zero")
    return V / sigma


def zwm_v(cross: MetricsRecord, self_s: MetricsRecord, self_i: MetricsRecord) -> ZwmStatistic:
    """V = (D_c − D_a) − 2(D_s − D_s,a + D_i − D_i,a); classical light has V < 0."""
    for other in (self_s, self_i):
        if not math.isclose(other.seconds, cross.seconds, rel_tol=1e-12):
            raise CountingError(
                f"records integrate over different times ({cross.seconds!r} s vs {other.seconds!r} s)"
            )
    V = (cross.D_c - cross.D_a) - 2.0 * (
        self_s.D_c - self_s.D_a + self_i.D_c - self_i.D_a
    )
    sigma = math.sqrt(
        cross.sigma_D_c**2 + cross.sigma_D_a**2
        + 4.0 * (self_s.sigma_D_c**2 + self_s.sigma_D_a**2
                 + self_i.sigma_D_c**2 + self_i.sigma_D_a**2)
    )
    return ZwmStatistic(V, sigma, nonclassicality_violation(V, sigma))


def with_zwm(cross: MetricsRecord, statistic: ZwmStatistic) -> MetricsRecord:
    return replace(cross, V=statistic.V, sigma_V=statistic.sigma, V_over_sigma=statistic.V_over_sigma)
