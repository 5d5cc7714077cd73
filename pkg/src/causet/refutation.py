"""Sensitivity battery: four refuters plus a normal-tail p-value.

A refuter re-runs an estimation procedure on perturbed copies of the data
and summarizes how far the estimate moves.  Procedures are described by an
:class:`EstimationTask` so the refuters can re-fit everything (including
nuisance models) on each perturbed frame.

Every refuter is deterministic per (seed, repetitions): repetition ``i``
draws from its own child stream ``derive_seed(seed, i)``.  Refuted effects
are sorted before any statistic is computed, so aggregation order can never
change a report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import EmptyFrameError
from .frame import Column, Frame
from .rng import derive_seed, make_rng

DEFAULT_REPETITIONS = 100
PLACEBO_RATIO = 0.25       # pass when |mean refuted| < ratio * |original|
STABLE_CHANGE = 0.10       # pass when relative change stays below this


@dataclass(frozen=True)
class EstimationTask:
    """A re-runnable estimation bound to column roles, not to one frame.

    ``estimate`` receives a frame and an adjustment set and returns the
    effect value; refuters call it with perturbed frames (and, for the
    random-common-cause refuter, an extended adjustment set).
    """

    estimate: Callable[[Frame, tuple[str, ...]], float]
    treatment: str
    outcome: str
    adjustment: tuple[str, ...]

    def run(self, f: Frame, adjustment: Sequence[str] | None = None) -> float:
        z = self.adjustment if adjustment is None else tuple(adjustment)
        return float(self.estimate(f, z))


@dataclass(frozen=True)
class RefutationReport:
    """Outcome of one refuter: the moved estimates and their summary.

    ``p_value`` is the two-sided tail probability of the original effect
    under a normal fit to the refuted effects.  For the placebo and
    random-common-cause refuters a HIGH p means the perturbation did not
    move the estimate in a way inconsistent with the original; the verdict
    rule applied is spelled out in ``verdict_rule``.
    """

    refuter: str
    original_effect: float
    refuted_effects: tuple[float, ...]
    mean_refuted: float
    relative_change: float
    p_value: float
    repetitions: int
    seed: int
    verdict: str
    verdict_rule: str


def _normal_tail_p(refuted: np.ndarray, original: float) -> float:
    mean = float(refuted.mean())
    std = float(refuted.std())
    if std == 0.0:
        return 1.0 if original == mean else 0.0
    zscore = abs(original - mean) / std
    return min(1.0, math.erfc(zscore / math.sqrt(2.0)))


def refutation_p_value(refuted_effects: Sequence[float], original_effect: float) -> float:
    """Two-sided normal tail probability of the original among refuted effects.

    Fits a normal distribution to the refuted effects and returns the
    clamped two-sided tail probability of the original effect under it.
    With zero variance the result is 1 when the original equals the
    constant, else 0.  Requires at least 30 repetitions.
    """
    refuted = np.asarray(refuted_effects, dtype=float)
    if refuted.size < 30:
        raise ValueError("p-value needs at least 30 repetitions")
    return _normal_tail_p(refuted, float(original_effect))


def _relative_change(mean_refuted: float, original: float) -> float:
    if original == 0.0:
        return 0.0 if mean_refuted == 0.0 else math.inf
    return abs(mean_refuted - original) / abs(original)


def _finish(
    refuter: str,
    original: float,
    effects: list[float],
    repetitions: int,
    seed: int,
    verdict: str,
    rule: str,
) -> RefutationReport:
    arr = np.sort(np.asarray(effects, dtype=float))
    return RefutationReport(
        refuter=refuter,
        original_effect=original,
        refuted_effects=tuple(float(v) for v in arr),
        mean_refuted=float(arr.mean()),
        relative_change=_relative_change(float(arr.mean()), original),
        p_value=_normal_tail_p(arr, original),
        repetitions=repetitions,
        seed=seed,
        verdict=verdict,
        verdict_rule=rule,
    )


def _fresh_name(f: Frame, stem: str) -> str:
    name = stem
    suffix = 0
    while name in f.names:
        suffix += 1
        name = f"{stem}_{suffix}"
    return name


def refute_random_common_cause(
    task: EstimationTask,
    f: Frame,
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = 0,
) -> RefutationReport:
    """Re-estimate with an independent standard-normal covariate adjoined.

    The new column is appended to the frame and to the adjustment set for
    every repetition.  A sound estimate should barely move.
    """
    original = task.run(f)
    n = f.n_rows
    effects = []
    for i in range(repetitions):
        rng = make_rng(derive_seed(seed, i))
        name = _fresh_name(f, "random_cause")
        col = Column(name, "numeric", rng.standard_normal(n), np.zeros(n, dtype=bool))
        effects.append(task.run(f.with_column(col), (*task.adjustment, name)))
    mean_ref = float(np.mean(effects))
    verdict = "pass" if _relative_change(mean_ref, original) < STABLE_CHANGE else "fail"
    return _finish(
        "random_common_cause", original, effects, repetitions, seed, verdict,
        f"pass when relative change < {STABLE_CHANGE}",
    )


def refute_placebo(
    task: EstimationTask,
    f: Frame,
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = 0,
) -> RefutationReport:
    """Re-estimate with the treatment replaced by an independent coin flip.

    The placebo treatment is Bernoulli with the original prevalence, so arm
    sizes stay comparable.  A sound estimate collapses towards zero.
    """
    original = task.run(f)
    tv = f.binary_vector(task.treatment)
    prevalence = float(tv.mean())
    n = f.n_rows
    effects = []
    for i in range(repetitions):
        rng = make_rng(derive_seed(seed, i))
        placebo = (rng.uniform(size=n) < prevalence).astype(float)
        col = Column(task.treatment, "binary", placebo, np.zeros(n, dtype=bool))
        effects.append(task.run(f.with_column(col)))
    mean_ref = float(np.mean(effects))
    verdict = "pass" if abs(mean_ref) < PLACEBO_RATIO * abs(original) else "fail"
    return _finish(
        "placebo_treatment", original, effects, repetitions, seed, verdict,
        f"pass when |mean refuted| < {PLACEBO_RATIO} * |original|",
    )


def refute_subset(
    task: EstimationTask,
    f: Frame,
    fraction: float = 0.8,
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = 0,
) -> RefutationReport:
    """Re-estimate on seeded uniform row subsamples of the given fraction."""
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be strictly between 0 and 1")
    n = f.n_rows
    if n == 0:
        raise EmptyFrameError("cannot subsample an empty frame")
    original = task.run(f)
    m = math.ceil(n * fraction - 1e-9)
    effects = []
    for i in range(repetitions):
        rng = make_rng(derive_seed(seed, i))
        idx = np.sort(rng.permutation(n)[:m])
        effects.append(task.run(f.subset_rows(idx)))
    mean_ref = float(np.mean(effects))
    verdict = "pass" if _relative_change(mean_ref, original) < STABLE_CHANGE else "fail"
    return _finish(
        "data_subset", original, effects, repetitions, seed, verdict,
        f"pass when relative change < {STABLE_CHANGE}",
    )


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    eta = np.clip(eta, -35.0, 35.0)
    return 1.0 / (1.0 + np.exp(-eta))


def _simulate_confounder(rng, tv: np.ndarray, strength_t: float, base_p: float) -> np.ndarray:
    """Latent u ~ N(0,1) drawn conditional on the observed arms.

    Under the tilt model P(t=1 | u) = sigmoid(logit(base_p) + strength_t*u),
    treated units carry upward-tilted u and controls downward-tilted u, so
    the simulated confounder is exactly as predictive of treatment as the
    logit shift implies.  Sampled by vectorized rejection with a fixed
    round count, so results are deterministic per stream.
    """
    n = tv.shape[0]
    logit_base = math.log(base_p / (1.0 - base_p))
    u = np.zeros(n)
    pending = np.ones(n, dtype=bool)
    for _ in range(64):
        proposal = rng.standard_normal(n)
        u[pending] = proposal[pending]
        p_treat = _sigmoid(logit_base + strength_t * proposal)
        accept_p = np.where(tv == 1.0, p_treat, 1.0 - p_treat)
        pending &= ~(rng.uniform(size=n) < accept_p)
        if not pending.any():
            break
    return u


def refute_unobserved_confounder(
    task: EstimationTask,
    f: Frame,
    strength_t: float,
    strength_y: float,
    repetitions: int = DEFAULT_REPETITIONS,
    seed: int = 0,
) -> RefutationReport:
    """Re-estimate after simulating a latent confounder of given strengths.

    Each repetition simulates a standard-normal confounder u that tilts the
    treatment-assignment probability by a logit shift of strength_t * u --
    u is drawn conditional on the observed arms under that model, so the
    factual assignment is kept -- and shifts the outcome additively by
    strength_y * u.  The estimate is re-run without conditioning on u, so
    the report shows the effect range a hidden confounder of this strength
    would induce.  Zero strengths leave the frame untouched, bit for bit.
    """
    for s in (strength_t, strength_y):
        if not 0.0 <= s < 1.0:
            raise ValueError("strengths must lie in [0, 1)")
    original = task.run(f)
    tv = f.binary_vector(task.treatment)
    yc = f.column(task.outcome)
    base_p = min(max(float(tv.mean()), 0.05), 0.95)
    effects = []
    for i in range(repetitions):
        rng = make_rng(derive_seed(seed, i))
        u = _simulate_confounder(rng, tv, strength_t, base_p)
        perturbed = f
        if strength_y > 0.0:
            perturbed = f.with_column(
                Column(task.outcome, "numeric", yc.values + strength_y * u, yc.missing)
            )
        effects.append(task.run(perturbed))
    lo, hi = float(np.min(effects)), float(np.max(effects))
    return _finish(
        "unobserved_confounder", original, effects, repetitions, seed, "info",
        f"induced effect range [{lo!r}, {hi!r}] at strengths "
        f"({strength_t!r}, {strength_y!r}); informational",
    )
