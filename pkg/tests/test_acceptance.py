"""Acceptance suite: one pass/fail line per criterion (run with -s to see them).

The synthetic-validation criteria share one module-scoped validation run at
n=10000 with 10 repetitions and a fixed, pre-registered seed.  Every
tolerance is pinned here, not tuned at runtime.
"""

import itertools
import json
import time

import numpy as np
import pytest

from causet.cli import main
from causet.errors import NotIdentifiableError
from causet.estimators import fit_propensity, ipw_ate
from causet.frame import Frame, write_csv
from causet.graph import CausalGraph, backdoor_sets, d_separated
from causet.learners import LearnerSpec, fit_gbt, fit_linear, fit_logistic
from causet.metalearners import t_learner
from causet.pipeline import run_validation
from causet.refutation import (
    EstimationTask,
    refute_placebo,
    refute_random_common_cause,
    refute_subset,
    refute_unobserved_confounder,
)
from causet.rng import derive_seed, make_rng
from causet.synth import generate

from oracles import (
    backdoor_bruteforce,
    dsep_bruteforce,
    enumerate_dags,
    enumerate_labeled_dags,
    logistic_loglik,
    normal_equations_fit,
)

ACCEPT_SEED = 20260809  # fixed before any results were inspected


def report(criterion: str, passed: bool, detail: str) -> None:
    marker = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {marker} ({detail})")


@pytest.fixture(scope="module")
def validation_run():
    t0 = time.perf_counter()
    rep = run_validation(n=10000, repetitions=10, sigma=1.0, seed=ACCEPT_SEED)
    rep["elapsed_seconds"] = time.perf_counter() - t0
    return rep


def _row(rep, r, learner, base, metric):
    return next(
        x[metric]
        for x in rep["rows"]
        if x["rep"] == r and x["learner"] == learner and x["base"] == base
    )


class TestCriterion1AteRecovery:
    def test_tgbt_ate_within_tolerance(self):
        t0 = time.perf_counter()
        errors = []
        for r in range(10):
            ss = generate(n=10000, sigma=1.0, seed=derive_seed(ACCEPT_SEED, r))
            cate = t_learner(ss.to_frame(), "w", "y", ss.feature_names, LearnerSpec("gbt"))
            errors.append(abs(cate.ate - float(ss.tau_true.mean())))
        elapsed = time.perf_counter() - t0
        hits = sum(e <= 0.05 for e in errors)
        ok = hits >= 9 and elapsed < 120.0
        report(
            "1 synthetic ATE recovery",
            ok,
            f"{hits}/10 reps within +-0.05, errors={[round(e, 3) for e in errors]}, "
            f"runtime {elapsed:.0f}s < 120s",
        )
        assert elapsed < 120.0
        assert hits >= 9, f"T-gbt ATE within 0.05 in only {hits}/10 repetitions"


class TestCriterion2AuucRanking:
    def test_gbt_xtr_beat_linear_s(self, validation_run):
        wins = 0
        for r in range(10):
            baseline = _row(validation_run, r, "S", "linear", "auuc_val")
            wins += all(
                _row(validation_run, r, L, "gbt", "auuc_val") > baseline
                for L in ("X", "T", "R")
            )
        report("2 learner ranking by AUUC", wins >= 9, f"{wins}/10 reps rank gbt X/T/R above linear S")
        assert wins >= 9


class TestCriterion3KldRanking:
    def test_linear_s_diverges_3x_more(self, validation_run):
        wins = 0
        ratios = []
        for r in range(10):
            s_lin = _row(validation_run, r, "S", "linear", "kld_val")
            gbt = [_row(validation_run, r, L, "gbt", "kld_val") for L in "STXR"]
            ratios.append(s_lin / max(gbt))
            wins += all(s_lin >= 3.0 * k for k in gbt)
        report(
            "3 learner ranking by KLD",
            wins >= 9,
            f"{wins}/10 reps with linear-S KLD >= 3x every gbt learner "
            f"(min ratio {min(ratios):.1f}x)",
        )
        assert wins >= 9


@pytest.fixture(scope="module")
def task_and_frame():
    ss = generate(n=2000, sigma=1.0, seed=derive_seed(ACCEPT_SEED, 77))
    f = ss.to_frame()

    def run(frame, z):
        return t_learner(frame, "w", "y", z, LearnerSpec("gbt")).ate

    task = EstimationTask(run, treatment="w", outcome="y", adjustment=ss.feature_names)
    return task, f


class TestCriterion4RefutationBattery:
    def test_placebo_collapses(self, task_and_frame):
        task, f = task_and_frame
        rep = refute_placebo(task, f, repetitions=30, seed=derive_seed(ACCEPT_SEED, 1))
        ok = abs(rep.mean_refuted) < 0.25 * abs(rep.original_effect)
        report(
            "4a placebo refuter",
            ok,
            f"|mean refuted| {abs(rep.mean_refuted):.3f} < 0.25*|original| "
            f"{0.25 * abs(rep.original_effect):.3f}",
        )
        assert ok

    def test_random_common_cause_stable(self, task_and_frame):
        task, f = task_and_frame
        rep = refute_random_common_cause(task, f, repetitions=30, seed=derive_seed(ACCEPT_SEED, 2))
        report("4b random-common-cause refuter", rep.relative_change < 0.10,
               f"relative change {rep.relative_change:.4f} < 0.10")
        assert rep.relative_change < 0.10

    def test_subset_stable(self, task_and_frame):
        task, f = task_and_frame
        rep = refute_subset(task, f, fraction=0.8, repetitions=30,
                            seed=derive_seed(ACCEPT_SEED, 3))
        report("4c subset refuter", rep.relative_change < 0.10,
               f"relative change {rep.relative_change:.4f} < 0.10")
        assert rep.relative_change < 0.10

    def test_zero_strength_confounder_is_identity(self, task_and_frame):
        task, f = task_and_frame
        rep = refute_unobserved_confounder(task, f, 0.0, 0.0, repetitions=3,
                                           seed=derive_seed(ACCEPT_SEED, 4))
        ok = all(e == rep.original_effect for e in rep.refuted_effects)
        report("4d zero-strength confounder identity", ok,
               "refuted effects bit-identical to original")
        assert ok


class TestCriterion5GraphOracles:
    def test_exhaustive_agreement(self):
        t0 = time.perf_counter()
        dsep_checks = 0
        backdoor_checks = 0

        def verify(names, edges):
            nonlocal dsep_checks, backdoor_checks
            base = CausalGraph({m: "covariate" for m in names}, edges)
            for a, b in itertools.combinations(names, 2):
                rest = [m for m in names if m not in (a, b)]
                for k in range(len(rest) + 1):
                    for z in itertools.combinations(rest, k):
                        assert d_separated(base, a, b, z) == dsep_bruteforce(base, a, b, z), (
                            edges, a, b, z)
                        dsep_checks += 1
            for t, y in itertools.permutations(names, 2):
                roles = {m: "covariate" for m in names}
                roles[t] = "treatment"
                roles[y] = "outcome"
                g = CausalGraph(roles, edges)
                try:
                    got = backdoor_sets(g, t, y)
                except NotIdentifiableError:
                    got = None
                expected = backdoor_bruteforce(g, t, y) or None
                assert got == expected, (edges, t, y)
                backdoor_checks += 1

        # All DAGs on <= 5 nodes whose labels follow a topological order;
        # every DAG is a relabeling of one of these and both algorithms are
        # label-agnostic, so this enumeration is structurally complete.
        for n in range(1, 6):
            for names, edges in enumerate_dags(n):
                verify(names, edges)

        # Full labeled enumeration at n <= 3 plus random relabelings at n = 5
        # confirm the label-invariance assumption directly.
        for n in range(2, 4):
            for names, g in enumerate_labeled_dags(n):
                verify(names, sorted(g.edges))
        rng = make_rng(ACCEPT_SEED)
        names5 = [f"n{i}" for i in range(5)]
        for _ in range(60):
            edges = [
                (names5[i], names5[j])
                for i in range(5)
                for j in range(i + 1, 5)
                if rng.uniform() < 0.5
            ]
            perm = rng.permutation(5)
            relabel = {names5[i]: names5[int(perm[i])] for i in range(5)}
            verify(names5, [(relabel[a], relabel[b]) for a, b in edges])

        elapsed = time.perf_counter() - t0
        ok = elapsed < 60.0
        report(
            "5 graph oracle equivalence",
            ok,
            f"{dsep_checks} d-separation and {backdoor_checks} backdoor cases, "
            f"zero mismatches, runtime {elapsed:.0f}s < 60s",
        )
        assert ok


class TestCriterion6NumericalOracles:
    def test_linear_matches_normal_equations(self):
        rng = make_rng(derive_seed(ACCEPT_SEED, 10))
        worst = 0.0
        for _ in range(100):
            n = int(rng.integers(5, 60))
            k = int(rng.integers(1, 5))
            X = rng.standard_normal((n, k))
            y = rng.standard_normal(n)
            m = fit_linear(X, y)
            got = np.array([m.intercept] + [m.coefficient(f"x{i}") for i in range(k)])
            want = normal_equations_fit(X, y, ridge=m.spec.ridge)
            worst = max(worst, float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1e-8))))
        report("6a linear vs normal equations", worst <= 1e-8,
               f"worst relative deviation {worst:.2e} <= 1e-8 over 100 problems")
        assert worst <= 1e-8

    def test_logistic_beats_grid(self):
        rng = make_rng(derive_seed(ACCEPT_SEED, 11))
        x = rng.standard_normal(80).reshape(-1, 1)
        y = (rng.uniform(size=80) < 1.0 / (1.0 + np.exp(-(0.5 + x[:, 0])))).astype(float)
        m = fit_logistic(x, y)
        fitted = logistic_loglik(x, y, m.intercept, [m.coefficient("x0")])
        grid = np.linspace(-10, 10, 201)
        best_grid = max(
            logistic_loglik(x, y, b0, [b1]) for b0 in grid for b1 in grid
        )
        report("6b logistic vs grid oracle", fitted >= best_grid - 1e-9,
               f"fitted loglik {fitted:.6f} >= grid best {best_grid:.6f}")
        assert fitted >= best_grid - 1e-9

    def test_gbt_training_mse_monotone(self):
        ok = True
        for seed in range(20):
            rng = make_rng(derive_seed(ACCEPT_SEED, 100 + seed))
            X = rng.uniform(size=(150, 3))
            y = np.sin(4 * X[:, 0]) + X[:, 1] ** 2 + rng.standard_normal(150) * 0.4
            m = fit_gbt(X, y, spec=LearnerSpec("gbt", max_iterations=50))
            stages = m.staged_predictions(X)
            mses = np.mean((stages - y) ** 2, axis=1)
            ok = ok and bool(np.all(np.diff(mses) <= 1e-12))
        report("6c gbt training MSE monotone", ok, "non-increasing across 20 seeds")
        assert ok


class TestCriterion7IpwExactness:
    def test_hand_example_and_balanced_equality(self):
        f2 = Frame.from_dict({"t": np.array([1.0, 0.0]), "y": np.array([3.0, 1.0])},
                             {"t": "binary", "y": "numeric"})
        pm2 = fit_propensity(f2, "t", ())
        hand = ipw_ate(f2, "t", "y", pm2).value
        rng = make_rng(derive_seed(ACCEPT_SEED, 12))
        n = 1000
        t = np.array([1.0, 0.0] * (n // 2))
        y = rng.standard_normal(n) + 1.5 * t
        fb = Frame.from_dict({"t": t, "y": y}, {"t": "binary", "y": "numeric"})
        pmb = fit_propensity(fb, "t", ())
        est = ipw_ate(fb, "t", "y", pmb).value
        diff = float(y[t == 1.0].mean() - y[t == 0.0].mean())
        ok = hand == 2.0 and abs(est - diff) <= 1e-12
        report("7 IPW exactness", ok,
               f"hand example = {hand} (want 2.0); |ipw - diff-in-means| = {abs(est - diff):.2e}")
        assert hand == 2.0
        assert abs(est - diff) <= 1e-12


class TestCriterion8Determinism:
    GRAPH = (
        "x0 -> w; x0 -> y\nx1 -> w; x1 -> y\nx2 -> w; x2 -> y\n"
        "x3 -> w; x3 -> y\nx4 -> w; x4 -> y\nw -> y\n@treatment w\n@outcome y\n"
    )

    def test_reports_byte_identical(self, tmp_path):
        ss = generate(n=400, sigma=1.0, seed=derive_seed(ACCEPT_SEED, 13))
        frame = ss.to_frame()
        for drop in ("tau_true", "e_true", "b_true"):
            frame = frame.drop(drop)
        write_csv(frame, tmp_path / "data.csv")
        (tmp_path / "model.graph").write_text(self.GRAPH, encoding="utf-8")
        (tmp_path / "query.spec").write_text(
            "data = data.csv\ngraph = model.graph\ntreatment = w\noutcome = y\n"
            "metalearners = T:gbt, S:linear\nseed = 21\n",
            encoding="utf-8",
        )
        pairs = []
        for run in ("a", "b"):
            out = tmp_path / f"est_{run}"
            assert main(["estimate", str(tmp_path / "query.spec"), "--out", str(out)]) == 0
            pairs.append((out / "report.json").read_bytes())
        estimate_ok = pairs[0] == pairs[1]

        vpairs = []
        for run in ("a", "b"):
            out = tmp_path / f"val_{run}"
            assert main(["validate", "--n", "400", "--repetitions", "2",
                         "--seed", "21", "--out", str(out)]) == 0
            vpairs.append((out / "validation_report.json").read_bytes())
        validate_ok = vpairs[0] == vpairs[1]

        report("8 determinism", estimate_ok and validate_ok,
               "estimate and validate reports byte-identical across consecutive runs")
        assert estimate_ok and validate_ok

    def test_report_documents_are_valid_json(self, tmp_path):
        ss = generate(n=200, sigma=1.0, seed=1)
        frame = ss.to_frame()
        write_csv(frame, tmp_path / "s.csv")
        rc = main(["validate", "--n", "200", "--repetitions", "1", "--seed", "0",
                   "--out", str(tmp_path)])
        assert rc == 0
        blob = json.loads((tmp_path / "validation_report.json").read_text())
        assert blob["report_version"] == 1
