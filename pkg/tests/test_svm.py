import json

import numpy as np
import pytest

from esgclassify import svm
from esgclassify.errors import InputError
from oracles import svm_fixtures
from synth import make_catalog


def load_frozen_oracle():
    import pathlib
    with open(pathlib.Path(__file__).parent / "data" / "svm_oracle.json") as fh:
        return json.load(fh)


def fit_tight(X, y, C, seed=1):
    return svm.fit_binary(X, y, C=C, tol=1e-8, max_iter=20000, seed=seed)


class TestFitBinary:
    def test_symmetric_pair_boundary(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]])
        y = np.array([1.0, -1.0])
        m = svm.fit_binary(X, y, C=10.0, seed=0)
        assert m.weights[0] > 0.5
        assert abs(m.weights[1]) < 1e-3
        assert abs(m.bias) < 1e-3

    def test_separable_20pt_matches_grid_oracle(self):
        fx = svm_fixtures()["separable-2d-20"]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        m = fit_tight(X, y, C)
        obj = svm.primal_objective(m.weights, m.bias, X, y, C)
        oracle = load_frozen_oracle()["separable-2d-20"]["grid_objective"]
        assert abs(obj - oracle) / oracle < 1e-4

    def test_overlapping_4pt_matches_oracle_and_has_positive_hinge(self):
        fx = svm_fixtures()["overlap-2d-4"]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        m = fit_tight(X, y, C)
        obj = svm.primal_objective(m.weights, m.bias, X, y, C)
        oracle = load_frozen_oracle()["overlap-2d-4"]["grid_objective"]
        assert abs(obj - oracle) / oracle < 1e-4
        # the negative point sitting inside the positive cluster keeps a loss
        misfit_margin = y[3] * m.decision(X[3])
        assert 1.0 - misfit_margin > 0.1

    def test_single_class_rejected(self):
        X = np.array([[1.0], [2.0]])
        with pytest.raises(InputError, match="both classes"):
            svm.fit_binary(X, np.array([1.0, 1.0]))

    def test_non_positive_c_rejected(self):
        X = np.array([[1.0], [-1.0]])
        y = np.array([1.0, -1.0])
        with pytest.raises(InputError, match="C"):
            svm.fit_binary(X, y, C=0.0)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(InputError):
            svm.fit_binary(np.ones((3, 2)), np.array([1.0, -1.0]))

    def test_deterministic_to_last_decimal(self):
        fx = svm_fixtures()["overlap-2d-30"]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        a = svm.fit_binary(X, y, C=C, seed=33)
        b = svm.fit_binary(X, y, C=C, seed=33)
        assert json.dumps([list(map(float, a.weights)), a.bias]) == \
               json.dumps([list(map(float, b.weights)), b.bias])

    def test_seed_changes_path_not_solution(self):
        fx = svm_fixtures()["overlap-2d-30"]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        a = fit_tight(X, y, C, seed=1)
        b = fit_tight(X, y, C, seed=2)
        oa = svm.primal_objective(a.weights, a.bias, X, y, C)
        ob = svm.primal_objective(b.weights, b.bias, X, y, C)
        assert oa == pytest.approx(ob, rel=1e-6)

    def test_dual_objective_monotone_per_sweep(self):
        # each coordinate update minimizes the dual exactly along one axis,
        # so per-sweep dual values can only go down (the primal measured at
        # the same snapshots is allowed to fluctuate)
        for name, fx in svm_fixtures().items():
            X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
            duals = []

            def snap(sweep, w, b, alpha):
                duals.append(0.5 * (w @ w + b * b) - float(np.sum(alpha)))

            svm.fit_binary(X, y, C=C, tol=1e-8, max_iter=3000, seed=7, on_sweep=snap)
            diffs = np.diff(duals)
            assert np.all(diffs <= 1e-10), f"dual increased on {name}"

    def test_scale_invariance_of_decision_signs(self):
        fx = svm_fixtures()["separable-2d-20"]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        base = fit_tight(X, y, C)
        base_signs = np.sign(X @ base.weights + base.bias)
        for lam in (0.5, 2.0, 10.0):
            m = fit_tight(lam * X, y, C / lam**2)
            signs = np.sign((lam * X) @ m.weights + m.bias)
            assert np.array_equal(signs, base_signs)


class TestFrozenOracleAgreement:
    @pytest.mark.parametrize("name", sorted(svm_fixtures()))
    def test_objective_within_1e3_of_subgradient_oracle(self, name):
        fx = svm_fixtures()[name]
        X, y, C = np.asarray(fx["X"]), np.asarray(fx["y"]), fx["C"]
        m = fit_tight(X, y, C)
        obj = svm.primal_objective(m.weights, m.bias, X, y, C)
        oracle = load_frozen_oracle()[name]["subgradient_objective"]
        assert abs(obj - oracle) / oracle < 1e-3


class TestFitPlatt:
    def separable_decisions(self):
        dec = np.concatenate([np.linspace(2.0, 4.0, 10), np.linspace(-4.0, -2.0, 10)])
        y = np.array([1.0] * 10 + [-1.0] * 10)
        return dec, y

    def test_midpoint_probability_half(self):
        dec, y = self.separable_decisions()
        p = svm.fit_platt(dec, y)
        assert p.converged
        assert p.A < 0
        midpoint = 0.0  # halfway between the decision clusters
        prob = svm._sigmoid_probability(p.A, p.B, midpoint)
        assert abs(prob - 0.5) <= 0.05

    def test_flat_decisions_give_zero_slope(self):
        y = np.array([1.0] * 10 + [-1.0] * 10)
        p = svm.fit_platt(np.full(20, 0.5), y)
        assert abs(p.A) < 1e-3
        # no signal: every input maps to the smoothed base rate
        for f in (-3.0, 0.0, 5.0):
            assert svm._sigmoid_probability(p.A, p.B, f) == pytest.approx(0.5, abs=1e-3)

    def test_flat_zero_decisions_unbalanced(self):
        y = np.array([1.0] * 5 + [-1.0] * 15)
        p = svm.fit_platt(np.zeros(20), y)
        assert abs(p.A) < 1e-3
        t = np.where(y > 0, 6.0 / 7.0, 1.0 / 17.0)
        expected = float(np.mean(t))  # intercept-only optimum
        assert svm._sigmoid_probability(p.A, p.B, 0.0) == pytest.approx(expected, abs=1e-3)

    def test_label_flip_negates_parameters_exactly(self):
        dec, y = self.separable_decisions()
        p = svm.fit_platt(dec, y)
        q = svm.fit_platt(dec, -y)
        assert q.A == -p.A
        assert q.B == -p.B

    def test_label_flip_antisymmetry_on_asymmetric_data(self):
        dec = np.array([3.1, 2.2, 0.4, 1.7, -0.2, -1.5, -2.0, 0.3, -0.8, -2.6, 1.1])
        y = np.array([1, 1, 1, 1, 1, -1, -1, -1, -1, -1, -1], dtype=float)
        p = svm.fit_platt(dec, y)
        q = svm.fit_platt(dec, -y)
        assert q.A == -p.A and q.B == -p.B

    def test_monotone_in_decision_when_slope_negative(self):
        dec, y = self.separable_decisions()
        p = svm.fit_platt(dec, y)
        grid = np.linspace(-5, 5, 101)
        probs = [svm._sigmoid_probability(p.A, p.B, f) for f in grid]
        assert np.all(np.diff(probs) > 0)

    def test_single_class_rejected(self):
        with pytest.raises(InputError, match="both classes"):
            svm.fit_platt(np.array([1.0, 2.0]), np.array([1.0, 1.0]))

    def test_non_convergence_flagged(self):
        dec, y = self.separable_decisions()
        p = svm.fit_platt(dec, y, max_iter=1)
        assert not p.converged


def cluster_fixture(per_label=15, n_labels=3, spread=0.15):
    """Disjoint point clusters around well-separated 2-d centers."""
    centers = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0], [8.0, 8.0]])[:n_labels]
    catalog = make_catalog(n_labels)
    X, gold = [], []
    for li in range(n_labels):
        for j in range(per_label):
            angle = 2.0 * np.pi * j / per_label
            X.append(centers[li] + spread * np.array([np.cos(angle), np.sin(angle)]))
            gold.append({catalog.ids()[li]})
    return np.asarray(X), gold, catalog, centers


class TestOneVsRest:
    def test_three_clusters_three_machines_train_accuracy_one(self):
        X, gold, catalog, _ = cluster_fixture()
        model = svm.fit_one_vs_rest(X, gold, catalog, C=10.0, seed=3)
        assert set(model.machines) == set(catalog.ids())
        assert model.skipped == ()
        hits = 0
        for x, g in zip(X, gold):
            probs = svm.predict_proba(model, x)
            best = max(probs, key=lambda lab: probs[lab])
            hits += best in g
        assert hits == len(X)

    def test_label_without_positives_is_skipped(self):
        X, gold, _, _ = cluster_fixture(n_labels=3)
        catalog = make_catalog(4)  # issue-03 never appears in gold
        model = svm.fit_one_vs_rest(X, gold, catalog, C=10.0, seed=3)
        assert "issue-03" in model.skipped
        assert "issue-03" not in model.machines
        probs = svm.predict_proba(model, X[0])
        assert probs["issue-03"] == 0.0

    def test_multi_label_article_positive_for_both_machines(self):
        X, gold, catalog, centers = cluster_fixture(per_label=10, n_labels=2)
        midpoint = centers[:2].mean(axis=0)
        X = np.vstack([X, midpoint])
        gold = gold + [set(catalog.ids()[:2])]
        model = svm.fit_one_vs_rest(X, gold, catalog, C=10.0, seed=5)
        probs = svm.predict_proba(model, midpoint)
        assert probs[catalog.ids()[0]] > 0.5
        assert probs[catalog.ids()[1]] > 0.5

    def test_probability_at_positive_centroid_high(self):
        X, gold, catalog, centers = cluster_fixture(per_label=15)
        model = svm.fit_one_vs_rest(X, gold, catalog, C=10.0, seed=3)
        probs = svm.predict_proba(model, centers[0])
        assert probs[catalog.ids()[0]] > 0.9

    def test_probabilities_in_unit_interval(self):
        X, gold, catalog, _ = cluster_fixture(per_label=6)
        model = svm.fit_one_vs_rest(X, gold, catalog, seed=2)
        for x in X:
            for p in svm.predict_proba(model, x).values():
                assert 0.0 <= p < 1.0

    def test_normalized_view_sums_to_one(self):
        X, gold, catalog, _ = cluster_fixture(per_label=6)
        model = svm.fit_one_vs_rest(X, gold, catalog, seed=2)
        total = sum(svm.predict_proba_normalized(model, X[0]).values())
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_dimension_mismatch(self):
        X, gold, catalog, _ = cluster_fixture(per_label=4)
        model = svm.fit_one_vs_rest(X, gold, catalog, seed=2)
        with pytest.raises(InputError, match="mismatch"):
            svm.predict_proba(model, np.ones(5))

    def test_missing_calibration_falls_back_with_warning(self):
        machine = svm.BinarySvm(weights=np.array([1.0]), bias=0.0, C=1.0, platt=None)
        model = svm.OneVsRestSvm(labels=("a",), machines={"a": machine}, dim=1)
        assert model.uncalibrated == ("a",)
        with pytest.warns(UserWarning, match="calibration"):
            probs = svm.predict_proba(model, np.array([2.0]))
        # logistic of the raw decision with A=-1, B=0
        assert probs["a"] == pytest.approx(1.0 / (1.0 + np.exp(-2.0)), abs=1e-12)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        X, gold, catalog, _ = cluster_fixture(per_label=5)
        model = svm.fit_one_vs_rest(X, gold, catalog, seed=4)
        path = tmp_path / "svm.json"
        svm.save_one_vs_rest(model, path)
        loaded = svm.load_one_vs_rest(path)
        assert loaded.labels == model.labels
        assert loaded.dim == model.dim
        for label in model.machines:
            a, b = model.machines[label], loaded.machines[label]
            assert np.array_equal(a.weights, b.weights)
            assert a.bias == b.bias
            assert a.platt.A == b.platt.A and a.platt.B == b.platt.B

    def test_schema_shape(self, tmp_path):
        X, gold, catalog, _ = cluster_fixture(per_label=5)
        model = svm.fit_one_vs_rest(X, gold, catalog, seed=4)
        doc = svm.one_vs_rest_to_dict(model)
        assert set(doc) == {"dim", "labels", "machines"}
        first = next(iter(doc["machines"].values()))
        assert set(first) == {"w", "b", "C", "platt"}
        assert set(first["platt"]) == {"A", "B"}

    def test_fixed_seed_identical_serialization(self):
        X, gold, catalog, _ = cluster_fixture(per_label=5)
        d1 = svm.one_vs_rest_to_dict(svm.fit_one_vs_rest(X, gold, catalog, seed=4))
        d2 = svm.one_vs_rest_to_dict(svm.fit_one_vs_rest(X, gold, catalog, seed=4))
        assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True)
