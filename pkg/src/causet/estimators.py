"""Classical average-effect estimators over a backdoor adjustment set.

All four estimators are pure functions of an immutable frame: regression
adjustment, propensity-score matching (ATT), inverse propensity weighting,
and propensity stratification.  Propensity scores are always clipped away
from 0 and 1 so the weighting estimators stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoValidStrataError, SingleClassError
from .frame import Frame
from .learners import FittedModel, LearnerSpec, fit_linear, fit_logistic

DEFAULT_CLIP = 0.05


@dataclass(frozen=True)
class EffectEstimate:
    """One method's average-effect estimate in outcome units.

    ``estimand`` is "ATE" or "ATT"; ``adjustment_set`` records the covariates
    conditioned on; ``seed`` stays None for these deterministic estimators.
    """

    method: str
    estimand: str
    value: float
    n_treated: int
    n_control: int
    adjustment_set: tuple[str, ...]
    seed: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"effect estimate for {self.method!r} is not finite")


class PropensityModel:
    """Fitted treatment-assignment model with clipped scores.

    Args:
        model: Logistic model of treatment on the adjustment set.
        adjustment: Covariate names the model was fitted on.
        clip: Scores are clamped into [clip, 1 - clip].
    """

    def __init__(self, model: FittedModel, adjustment: tuple[str, ...], clip: float = DEFAULT_CLIP):
        if not 0.0 < clip < 0.5:
            raise ValueError("clip must be in (0, 0.5)")
        self.model = model
        self.adjustment = tuple(adjustment)
        self.clip = clip

    def scores(self, f: Frame) -> np.ndarray:
        """Clipped propensity scores for every row of ``f``."""
        X = f.numeric_matrix(self.adjustment)
        return np.clip(self.model.predict(X, self.adjustment), self.clip, 1.0 - self.clip)


def _treatment_vector(f: Frame, t: str) -> np.ndarray:
    tv = f.binary_vector(t)
    if tv.min() == tv.max():
        raise SingleClassError(f"treatment column {t!r} has a single class")
    return tv


def fit_propensity(
    f: Frame,
    t: str,
    z: Sequence[str],
    clip: float = DEFAULT_CLIP,
    spec: LearnerSpec | None = None,
) -> PropensityModel:
    """Fit a logistic propensity model of ``t`` on the adjustment set ``z``.

    With an empty adjustment set this reduces to an intercept-only model
    whose score is the (clipped) treatment prevalence.
    """
    tv = _treatment_vector(f, t)
    X = f.numeric_matrix(z)
    model = fit_logistic(X, tv, feature_names=tuple(z), spec=spec)
    return PropensityModel(model, tuple(z), clip)


def regression_adjustment(
    f: Frame, t: str, y: str, z: Sequence[str], spec: LearnerSpec | None = None
) -> EffectEstimate:
    """ATE as the treatment coefficient of an OLS of y on (t, z, intercept)."""
    tv = _treatment_vector(f, t)
    yv = f.column(y).values
    X = np.column_stack([tv, f.numeric_matrix(z)])
    model = fit_linear(X, yv, feature_names=(t, *z), spec=spec)
    effect = model.coefficient(t)
    return EffectEstimate(
        method="regression_adjustment",
        estimand="ATE",
        value=effect,
        n_treated=int(tv.sum()),
        n_control=int((1 - tv).sum()),
        adjustment_set=tuple(z),
    )


def psm_att(
    f: Frame, t: str, y: str, z: Sequence[str], pm: PropensityModel
) -> EffectEstimate:
    """ATT by 1-nearest-neighbor propensity matching with replacement.

    Each treated unit is matched to the control with the closest propensity
    score; exact ties go to the lower row index.  The effect is the mean of
    (treated outcome - matched control outcome).
    """
    tv = _treatment_vector(f, t)
    yv = f.column(y).values
    e = pm.scores(f)
    treated = np.flatnonzero(tv == 1.0)
    control = np.flatnonzero(tv == 0.0)
    e_c = e[control]
    matched = np.empty(len(treated), dtype=np.int64)
    # Chunked so the distance matrix stays small on large frames.
    for start in range(0, len(treated), 256):
        block = treated[start : start + 256]
        d = np.abs(e[block][:, None] - e_c[None, :])
        matched[start : start + len(block)] = control[np.argmin(d, axis=1)]
    effect = float(np.mean(yv[treated] - yv[matched]))
    return EffectEstimate(
        method="psm",
        estimand="ATT",
        value=effect,
        n_treated=len(treated),
        n_control=len(np.unique(matched)),
        adjustment_set=pm.adjustment,
    )


def ipw_ate(f: Frame, t: str, y: str, pm: PropensityModel) -> EffectEstimate:
    """Horvitz-Thompson inverse propensity weighted ATE with clipped scores."""
    tv = _treatment_vector(f, t)
    yv = f.column(y).values
    e = pm.scores(f)
    effect = float(np.mean(tv * yv / e) - np.mean((1.0 - tv) * yv / (1.0 - e)))
    return EffectEstimate(
        method="ipw",
        estimand="ATE",
        value=effect,
        n_treated=int(tv.sum()),
        n_control=int((1 - tv).sum()),
        adjustment_set=pm.adjustment,
    )


def stratified_ate(
    f: Frame, t: str, y: str, pm: PropensityModel, k: int = 5
) -> EffectEstimate:
    """ATE from ``k`` propensity-quantile strata.

    Strata missing either arm are dropped and the remaining strata weights
    renormalize; with ``k=1`` this is exactly the difference of arm means.
    Raises :class:`NoValidStrataError` when no stratum keeps both arms.
    """
    if k < 1:
        raise ValueError("stratum count k must be >= 1")
    tv = _treatment_vector(f, t)
    yv = f.column(y).values
    e = pm.scores(f)
    edges = np.quantile(e, [i / k for i in range(1, k)]) if k > 1 else np.array([])
    # right-closed quantile bins: a score equal to an edge stays in the lower stratum
    stratum = np.searchsorted(edges, e, side="left")

    n_kept = 0
    pieces = []  # (n_s, diff_s)
    n_treated = 0
    n_control = 0
    for s in range(k):
        in_s = stratum == s
        ts = tv[in_s]
        if in_s.sum() == 0 or ts.min() == ts.max():
            continue
        ys = yv[in_s]
        diff = float(ys[ts == 1.0].mean() - ys[ts == 0.0].mean())
        pieces.append((int(in_s.sum()), diff))
        n_kept += int(in_s.sum())
        n_treated += int(ts.sum())
        n_control += int((1 - ts).sum())
    if not pieces:
        raise NoValidStrataError("every propensity stratum lacks one arm")
    effect = float(sum(n_s * d for n_s, d in pieces) / n_kept)
    return EffectEstimate(
        method="stratification",
        estimand="ATE",
        value=effect,
        n_treated=n_treated,
        n_control=n_control,
        adjustment_set=pm.adjustment,
    )
