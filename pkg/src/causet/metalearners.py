"""S/T/X/R meta-learners: per-unit effect estimates from any base learner.

Each learner returns a :class:`CateModel` holding the in-sample individual
treatment effects, their mean, and the fitted sub-models needed to predict
effects for new rows.  Base learners must be regression models ("linear" or
"gbt"); the R-learner additionally requires weighted fitting, which both
support.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SingleClassError
from .estimators import PropensityModel
from .frame import Frame
from .learners import FittedModel, LearnerSpec, fit_learner


@dataclass
class CateModel:
    """Per-unit effect predictions from one meta-learner.

    ``ite`` holds tau-hat for every row of the fitting frame and ``ate`` is
    exactly its mean.  ``models`` keeps the fitted sub-models (keys depend on
    the learner) so :meth:`predict_ite` works out of sample.
    """

    learner: str
    base: LearnerSpec
    ite: np.ndarray
    ate: float
    features: tuple[str, ...]
    treatment: str
    models: dict[str, FittedModel] = field(default_factory=dict)
    propensity: PropensityModel | None = None

    def __post_init__(self):
        self.ite = np.asarray(self.ite, dtype=float)
        self.ite.setflags(write=False)

    def predict_ite(self, f: Frame) -> np.ndarray:
        """Predicted per-unit effects for the rows of a new frame."""
        X = f.numeric_matrix(self.features)
        if self.learner == "S":
            mu = self.models["mu"]
            if self.base.kind == "linear":
                return np.full(X.shape[0], mu.coefficient(self.treatment))
            ones = np.ones((X.shape[0], 1))
            x1 = np.column_stack([X, ones])
            x0 = np.column_stack([X, np.zeros((X.shape[0], 1))])
            return mu.predict(x1) - mu.predict(x0)
        if self.learner == "T":
            return self.models["mu1"].predict(X) - self.models["mu0"].predict(X)
        if self.learner == "X":
            g = self.propensity.scores(f)
            return g * self.models["tau0"].predict(X) + (1.0 - g) * self.models["tau1"].predict(X)
        return self.models["tau"].predict(X)

    def write_ite_csv(self, path: str | Path) -> None:
        """Dump the in-sample effects as ``row,ite`` lines."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("row,ite\n")
            for i, v in enumerate(self.ite):
                fh.write(f"{i},{float(v)!r}\n")


def _setup(f: Frame, t: str, y: str, z: Sequence[str], base: LearnerSpec):
    if base.kind not in ("linear", "gbt"):
        raise ValueError(f"base learner must be a regression kind, got {base.kind!r}")
    tv = f.binary_vector(t)
    if tv.min() == tv.max():
        raise SingleClassError(f"treatment column {t!r} has a single class")
    yv = f.column(y).values
    X = f.numeric_matrix(z)
    return tv, yv, X


def s_learner(
    f: Frame, t: str, y: str, z: Sequence[str], base: LearnerSpec
) -> CateModel:
    """Single-model learner: fit mu(x, t) and difference the two treatment arms.

    With a linear base the arm difference is identically the treatment
    coefficient, so it is read off directly instead of differencing two
    predictions (same value without the per-row rounding residue).
    """
    tv, yv, X = _setup(f, t, y, z, base)
    names = (*z, t)
    mu = fit_learner(base, np.column_stack([X, tv]), yv, feature_names=names)
    if base.kind == "linear":
        ite = np.full(X.shape[0], mu.coefficient(t))
    else:
        ones = np.ones((X.shape[0], 1))
        ite = mu.predict(np.column_stack([X, ones])) - mu.predict(
            np.column_stack([X, np.zeros_like(ones)])
        )
    return CateModel(
        learner="S",
        base=base,
        ite=ite,
        ate=float(np.mean(ite)),
        features=tuple(z),
        treatment=t,
        models={"mu": mu},
    )


def t_learner(
    f: Frame, t: str, y: str, z: Sequence[str], base: LearnerSpec
) -> CateModel:
    """Two-model learner: fit each arm separately and difference predictions."""
    tv, yv, X = _setup(f, t, y, z, base)
    treated = tv == 1.0
    mu1 = fit_learner(base, X[treated], yv[treated], feature_names=z)
    mu0 = fit_learner(base, X[~treated], yv[~treated], feature_names=z)
    ite = mu1.predict(X) - mu0.predict(X)
    return CateModel(
        learner="T",
        base=base,
        ite=ite,
        ate=float(np.mean(ite)),
        features=tuple(z),
        treatment=t,
        models={"mu0": mu0, "mu1": mu1},
    )


def x_learner(
    f: Frame, t: str, y: str, z: Sequence[str], base: LearnerSpec, pm: PropensityModel
) -> CateModel:
    """Cross-imputation learner blended by the propensity score.

    Stage 1 fits the two arm models; stage 2 regresses the imputed effects
    (observed minus counterfactual prediction) within each arm; predictions
    blend as e(x) * tau0(x) + (1 - e(x)) * tau1(x).
    """
    tv, yv, X = _setup(f, t, y, z, base)
    treated = tv == 1.0
    mu1 = fit_learner(base, X[treated], yv[treated], feature_names=z)
    mu0 = fit_learner(base, X[~treated], yv[~treated], feature_names=z)
    d1 = yv[treated] - mu0.predict(X[treated])
    d0 = mu1.predict(X[~treated]) - yv[~treated]
    tau1 = fit_learner(base, X[treated], d1, feature_names=z)
    tau0 = fit_learner(base, X[~treated], d0, feature_names=z)
    g = pm.scores(f)
    ite = g * tau0.predict(X) + (1.0 - g) * tau1.predict(X)
    return CateModel(
        learner="X",
        base=base,
        ite=ite,
        ate=float(np.mean(ite)),
        features=tuple(z),
        treatment=t,
        models={"mu0": mu0, "mu1": mu1, "tau0": tau0, "tau1": tau1},
        propensity=pm,
    )


def r_learner(
    f: Frame, t: str, y: str, z: Sequence[str], base: LearnerSpec, pm: PropensityModel
) -> CateModel:
    """Residual-on-residual learner (Robinson decomposition).

    Fits m(x) = E[y|x], forms residuals y - m(x) and t - e(x), then fits the
    effect model by weighted regression of the pseudo-outcome
    (y - m) / (t - e) with weights (t - e)^2.  Propensity clipping keeps the
    pseudo-outcome finite.
    """
    tv, yv, X = _setup(f, t, y, z, base)
    m = fit_learner(base, X, yv, feature_names=z)
    y_res = yv - m.predict(X)
    t_res = tv - pm.scores(f)
    pseudo = y_res / t_res
    weights = t_res**2
    tau = fit_learner(base, X, pseudo, w=weights, feature_names=z)
    ite = tau.predict(X)
    return CateModel(
        learner="R",
        base=base,
        ite=ite,
        ate=float(np.mean(ite)),
        features=tuple(z),
        treatment=t,
        models={"m": m, "tau": tau},
        propensity=pm,
    )
