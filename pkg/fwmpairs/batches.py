# fwmpairs/batches.py
"""Deterministic batched Monte Carlo.

Batch ``b`` of a scenario always draws from the stream seeded by
(master seed, scenario id, b), so merged counts do not depend on how many
workers ran the batches.
"""
from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import repeat
from typing import Callable, Mapping

import numpy as np

from .counting import CountsRecord, merge_counts
from .errors import DomainError

log = logging.getLogger(__name__)

Kernel = Callable[[np.random.Generator, int], Mapping[str, CountsRecord]]


@dataclass(frozen=True)
class BatchPlan:
    n_pulses: int
    batch_pulses: int
    seed: int
    scenario: str
    workers: int = 1

    def __post_init__(self):
        if self.n_pulses < 1:
            raise DomainError(f"planned pulse count must be >= 1 (got {self.n_pulses!r})")
        if self.batch_pulses < 1:
            raise DomainError(f"batch size must be >= 1 (got {self.batch_pulses!r})")
        if self.workers < 1:
            raise DomainError(f"worker count must be >= 1 (got {self.workers!r})")
        if self.seed < 0:
            raise DomainError(f"seed must be >= 0 (got {self.seed!r})")

    def batch_sizes(self) -> list[int]:
        full, rest = divmod(self.n_pulses, self.batch_pulses)
        return [self.batch_pulses] * full + ([rest] if rest else [])


def scenario_id(scenario: str) -> int:
    return int.from_bytes(hashlib.sha256(scenario.encode("utf-8")).digest()[:8], "big")


def batch_rng(seed: int, scenario: str, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, scenario_id(scenario), index]))


def _run_batch(kernel: Kernel, plan: BatchPlan, index: int, size: int) -> Mapping[str, CountsRecord]:
    return kernel(batch_rng(plan.seed, plan.scenario, index), size)


def execute_batches(plan: BatchPlan, kernel: Kernel) -> dict[str, CountsRecord]:
    """Run ``kernel`` over every batch of ``plan`` and merge the records label by label."""
    sizes = plan.batch_sizes()
    indices = range(len(sizes))
    log.debug("scenario %s: %d pulses in %d batches on %d worker(s)",
              plan.scenario, plan.n_pulses, len(sizes), plan.workers)

    if plan.workers == 1 or len(sizes) == 1:
        results = [_run_batch(kernel, plan, b, n) for b, n in zip(indices, sizes)]
    else:
        with ProcessPoolExecutor(max_workers=min(plan.workers, len(sizes))) as pool:
            results = list(pool.map(_run_batch, repeat(kernel), repeat(plan), indices, sizes))

    labels = list(results[0].keys())
    return {label: merge_counts(r[label] for r in results) for label in labels}
