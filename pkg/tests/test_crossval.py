import numpy as np
import pytest

from emprobe.crossval import (CVReport, f1_score, grouped_kfold,
                              nested_cv_classify, nested_cv_regress, rmse)
from emprobe.dataio import make_binary_task
from emprobe.errors import ValidationError

from conftest import build_table, random_task_table


class TestGroupedKFold:
    def test_partition_two_folds(self):
        plan = grouped_kfold(["a", "a", "b", "c", "d"], 2, seed=0)
        assert plan.k == 2
        assert set(plan.assignment) == {"a", "b", "c", "d"}
        sizes = [sum(1 for f in plan.assignment.values() if f == i) for i in range(2)]
        assert sizes == [2, 2]

    def test_too_few_speakers(self):
        with pytest.raises(ValidationError, match="folds"):
            grouped_kfold(["a", "b", "c", "d"], 5, seed=0)

    def test_determinism_and_seed_sensitivity(self):
        groups = [f"s{i}" for i in range(12)]
        a = grouped_kfold(groups, 4, seed=1)
        b = grouped_kfold(groups, 4, seed=1)
        assert a.assignment == b.assignment
        assert a.digest() == b.digest()
        c = grouped_kfold(groups, 4, seed=2)
        assert c.assignment != a.assignment

    def test_all_folds_non_empty(self):
        for k in (2, 3, 5, 7):
            plan = grouped_kfold([f"s{i}" for i in range(7)], k, seed=3)
            assert set(plan.assignment.values()) == set(range(k))


class TestScores:
    def test_f1_perfect(self):
        assert f1_score([1, 0, 1], [1, 0, 1]) == 1.0

    def test_f1_all_negative_predictions(self):
        assert f1_score([1, 0, 1], [0, 0, 0]) == 0.0

    def test_f1_formula(self):
        # TP=2, FP=1, FN=1 -> P=2/3, R=2/3 -> F1=2/3
        y_true = [1, 1, 1, 0, 0]
        y_pred = [1, 1, 0, 1, 0]
        assert f1_score(y_true, y_pred) == pytest.approx(2 / 3, abs=1e-15)

    def test_f1_errors(self):
        with pytest.raises(ValidationError, match="mismatch"):
            f1_score([1, 0], [1])
        with pytest.raises(ValidationError, match="empty"):
            f1_score([], [])
        with pytest.raises(ValidationError, match="positives"):
            f1_score([0, 0], [1, 0])

    def test_rmse(self):
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert rmse([0.0, 0.0], [1.0, -1.0]) == 1.0
        assert rmse([0.0], [3.0]) == 3.0
        with pytest.raises(ValidationError):
            rmse([], [])
        with pytest.raises(ValidationError):
            rmse([1.0], [1.0, 2.0])


GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


class TestNestedClassify:
    def test_separable_task_perfect_pooled_f1(self, rng):
        table = random_task_table(rng, n_speakers=10, per_speaker=8, d=3)
        task = make_binary_task(table, "emo")
        report = nested_cv_classify(task, GRID, seed=0)
        assert report.pooled_score == 1.0

    def test_permutation_baseline_near_half(self):
        scores = []
        for seed in range(20):
            rng = np.random.default_rng(1000 + seed)
            table = random_task_table(rng, n_speakers=10, per_speaker=10,
                                      d=5, informative=False)
            task = make_binary_task(table, "emo")
            scores.append(nested_cv_classify(task, (1.0,), seed=seed).pooled_score)
        assert 0.35 <= float(np.mean(scores)) <= 0.65

    def test_single_value_grid(self, rng):
        table = random_task_table(rng)
        task = make_binary_task(table, "emo")
        report = nested_cv_classify(task, (1.0,), seed=0)
        assert all(c == 1.0 for c in report.chosen_hyperparams)

    def test_grid_membership_and_structure(self, rng):
        table = random_task_table(rng, n_speakers=8)
        task = make_binary_task(table, "emo")
        report = nested_cv_classify(task, GRID, seed=3)
        assert all(c in GRID for c in report.chosen_hyperparams)
        assert len(report.outer_scores) == report.k_outer == 5
        assert report.oof_predictions.shape == (task.n,)
        assert set(np.unique(report.oof_predictions)) <= {0, 1}

    def test_oof_partition_and_disjoint_speakers(self, rng):
        table = random_task_table(rng, n_speakers=9, per_speaker=6)
        task = make_binary_task(table, "emo")
        report = nested_cv_classify(task, (1.0,), seed=7)
        groups = np.array(task.groups)
        seen = np.zeros(task.n, dtype=int)
        for f in range(report.k_outer):
            test = report.fold_of_rows == f
            seen[test] += 1
            assert set(groups[test]).isdisjoint(set(groups[~test]))
        assert np.all(seen == 1)

    def test_determinism(self, rng):
        table = random_task_table(rng)
        task = make_binary_task(table, "emo")
        a = nested_cv_classify(task, GRID, seed=11)
        b = nested_cv_classify(task, GRID, seed=11)
        assert a.pooled_score == b.pooled_score
        assert a.chosen_hyperparams == b.chosen_hyperparams
        assert a.oof_predictions.tobytes() == b.oof_predictions.tobytes()
        assert a.fold_plan_digest == b.fold_plan_digest

    def test_k_reduction_with_four_speakers(self, rng):
        table = random_task_table(rng, n_speakers=4, per_speaker=10)
        task = make_binary_task(table, "emo")
        report = nested_cv_classify(task, (1.0,), k_outer=5, k_inner=5, seed=0)
        assert report.k_outer == 4
        assert all(k <= 3 for k in report.k_inner_per_fold)
        assert any("reduced" in note for note in report.notes)

    def test_single_class_split_reported(self, rng):
        # all positives come from one speaker: its outer fold leaves a
        # single-class training set
        vals = rng.standard_normal((16, 2))
        speakers = ["p"] * 4 + ["a", "a", "b", "b", "c", "c", "d", "d",
                                "e", "e", "f", "f"]
        labels = ["emo"] * 4 + ["neutral"] * 12
        table = build_table(vals, speakers, labels, ["f.0", "f.1"])
        task = make_binary_task(table, "emo")
        with pytest.raises(ValidationError, match="single-class"):
            nested_cv_classify(task, (1.0,), k_outer=3, k_inner=2, seed=0)

    def test_scale_robustness_with_rescaled_c(self, rng):
        table = random_task_table(rng, n_speakers=8, per_speaker=8, d=4)
        task = make_binary_task(table, "emo")
        f1_base = nested_cv_classify(task, (1.0,), seed=5).pooled_score
        scaled = type(task)(emotion=task.emotion, neutral_label=task.neutral_label,
                            X=task.X * 10.0, y=task.y, groups=task.groups,
                            column_names=task.column_names,
                            utterance_ids=task.utterance_ids)
        f1_scaled = nested_cv_classify(scaled, (0.01,), seed=5).pooled_score
        assert f1_scaled == f1_base


ALPHAS = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0)


class TestNestedRegress:
    def test_noise_free_linear_target(self, rng):
        # ridge bias at alpha=0.001 is ~alpha/(n_train * col_var); keep it
        # well under the 1e-6 bar with wide columns and a unit-scale target
        n = 250
        X = 3.0 * rng.standard_normal((n, 4))
        y = X @ np.array([0.2, -0.1, 0.15, 0.05]) + 0.7
        groups = [f"s{i % 10}" for i in range(n)]
        report = nested_cv_regress(X, y, groups, ALPHAS, seed=0)
        assert report.pooled_score <= 1e-6

    def test_null_target_rmse_near_one(self):
        scores = []
        for seed in range(10):
            rng = np.random.default_rng(2000 + seed)
            X = rng.standard_normal((100, 3))
            y = rng.standard_normal(100)
            y = (y - y.mean()) / y.std()
            groups = [f"s{i % 10}" for i in range(100)]
            scores.append(nested_cv_regress(X, y, groups, ALPHAS, seed=seed).pooled_score)
        assert 0.85 <= float(np.mean(scores)) <= 1.15

    def test_single_alpha_grid(self, rng):
        X = rng.standard_normal((40, 2))
        y = rng.standard_normal(40)
        groups = [f"s{i % 8}" for i in range(40)]
        report = nested_cv_regress(X, y, groups, (10.0,), seed=0)
        assert all(a == 10.0 for a in report.chosen_hyperparams)

    def test_determinism(self, rng):
        X = rng.standard_normal((40, 3))
        y = rng.standard_normal(40)
        groups = [f"s{i % 8}" for i in range(40)]
        a = nested_cv_regress(X, y, groups, ALPHAS, seed=1)
        b = nested_cv_regress(X, y, groups, ALPHAS, seed=1)
        assert a.pooled_score == b.pooled_score
        assert a.oof_predictions.tobytes() == b.oof_predictions.tobytes()

    def test_empty_grid_rejected(self, rng):
        X = rng.standard_normal((10, 2))
        with pytest.raises(ValidationError, match="empty"):
            nested_cv_regress(X, np.zeros(10), ["a", "b"] * 5, (), seed=0)
