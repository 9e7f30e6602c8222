import json
import math

import numpy as np
import pytest

from embshift.frechet import fit_gaussian, frechet_distance
from embshift.synth import (
    CohortSpec,
    ConfidencePlan,
    LabelPlan,
    SynthSpec,
    closed_form_fd,
    generate,
    load_spec,
    load_truth,
    qp_oracle_svc,
    qp_oracle_svc_batch,
    qp_oracle_svr,
    qp_oracle_svr_batch,
    save_truth,
    spec_from_dict,
)

from conftest import diagonal_fd


def two_cluster_spec(flip_rate=0.2, n=500, seed=0, dim=4, offset=3.0):
    cohorts = (
        CohortSpec(name="left", mean=np.zeros(dim), covariance=1.0, n=n),
        CohortSpec(name="right", mean=offset * np.eye(dim)[0], covariance=1.0, n=n),
    )
    plans = {
        "side": LabelPlan(
            values_by_cohort={"left": "l", "right": "r"}, flip_rate=flip_rate
        )
    }
    return SynthSpec(dim=dim, cohorts=cohorts, label_plans=plans, seed=seed)


class TestGenerate:
    def test_zero_flip_rate_labels_are_clean(self):
        ds, truth = generate(two_cluster_spec(flip_rate=0.0))
        for rec in ds.records:
            assert rec.labels["side"] == truth.clean_labels["side"][rec.id]
        assert not any(truth.flip_mask["side"].values())

    def test_flip_rate_concentration(self):
        # binomial concentration around the planted 0.8 agreement
        ds, truth = generate(two_cluster_spec(flip_rate=0.2, n=2500, seed=3))
        agree = np.mean(
            [rec.labels["side"] == truth.clean_labels["side"][rec.id] for rec in ds.records]
        )
        assert 0.78 <= agree <= 0.82

    def test_flip_mask_matches_observed_labels(self):
        ds, truth = generate(two_cluster_spec(flip_rate=0.3, n=300, seed=9))
        for rec in ds.records:
            flipped = truth.flip_mask["side"][rec.id]
            clean = truth.clean_labels["side"][rec.id]
            assert (rec.labels["side"] != clean) == flipped

    def test_planted_fd_matrix_mean_shift(self):
        spec = two_cluster_spec(dim=4, offset=3.0)
        _, truth = generate(spec)
        assert math.isclose(truth.fd_matrix["left"]["right"], 9.0, abs_tol=1e-9)
        assert truth.fd_matrix["left"]["left"] == 0.0

    def test_determinism(self):
        spec = two_cluster_spec(seed=77)
        ds1, t1 = generate(spec)
        ds2, t2 = generate(spec)
        assert ds1.equals(ds2)
        assert t1.clean_labels == t2.clean_labels
        assert t1.flip_mask == t2.flip_mask
        assert t1.true_confidence == t2.true_confidence

    def test_sample_moments_concentrate(self):
        dim = 6
        mean = np.linspace(-1, 1, dim)
        var = np.linspace(0.5, 2.0, dim)
        spec = SynthSpec(
            dim=dim,
            cohorts=(
                CohortSpec(name="c", mean=mean, covariance={"diag": var.tolist()}, n=4000),
            ),
            seed=5,
        )
        ds, _ = generate(spec)
        x = ds.vectors()
        bound = 4.0 * np.sqrt(var) / math.sqrt(4000)
        assert np.all(np.abs(x.mean(axis=0) - mean) <= bound)

    def test_confidence_plan(self):
        dim = 3
        plan = ConfidencePlan(
            weights=np.array([1.0, -0.5, 0.2]),
            bias=0.1,
            noise_std=0.05,
            cohort_shift={"b": -1.0},
        )
        spec = SynthSpec(
            dim=dim,
            cohorts=(
                CohortSpec(name="a", mean=np.zeros(dim), covariance=1.0, n=400),
                CohortSpec(name="b", mean=np.zeros(dim), covariance=1.0, n=400),
            ),
            confidence_plan=plan,
            seed=2,
        )
        ds, truth = generate(spec)
        conf = ds.confidences()
        assert np.all(conf >= 0.0) and np.all(conf <= 1.0)
        # pre-noise truth follows the logistic link exactly
        for rec in ds.records[:20]:
            shift = -1.0 if rec.cohort == "b" else 0.0
            logit = float(rec.vector @ plan.weights) + 0.1 + shift
            assert math.isclose(
                truth.true_confidence[rec.id], 1.0 / (1.0 + math.exp(-logit)), rel_tol=1e-12
            )
        # the planted shift depresses cohort b's confidence
        a_mean = np.mean([r.confidence for r in ds.records if r.cohort == "a"])
        b_mean = np.mean([r.confidence for r in ds.records if r.cohort == "b"])
        assert a_mean - b_mean > 0.1

    def test_invalid_covariance_rejected(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        with pytest.raises(ValueError, match="PSD"):
            CohortSpec(name="x", mean=np.zeros(2), covariance=bad, n=10)

    def test_flip_with_single_value_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            LabelPlan(values_by_cohort={"a": "same", "b": "same"}, flip_rate=0.1)


class TestClosedFormFd:
    def test_identical_specs(self):
        a = CohortSpec(name="a", mean=np.array([1.0, 2.0]), covariance=np.eye(2), n=10)
        b = CohortSpec(name="b", mean=np.array([1.0, 2.0]), covariance=np.eye(2), n=10)
        assert closed_form_fd(a, b) == 0.0

    def test_diagonal_case(self):
        a = CohortSpec(name="a", mean=np.zeros(2), covariance={"diag": [1.0, 4.0]}, n=5)
        b = CohortSpec(name="b", mean=np.zeros(2), covariance={"diag": [4.0, 1.0]}, n=5)
        assert abs(closed_form_fd(a, b) - 2.0) <= 1e-9

    def test_symmetry_and_nonnegativity(self, rng):
        for _ in range(10):
            base = rng.normal(size=(6, 4))
            cov_a = base.T @ base / 6 + 0.1 * np.eye(4)
            base2 = rng.normal(size=(6, 4))
            cov_b = base2.T @ base2 / 6 + 0.1 * np.eye(4)
            a = CohortSpec(name="a", mean=rng.normal(size=4), covariance=cov_a, n=5)
            b = CohortSpec(name="b", mean=rng.normal(size=4), covariance=cov_b, n=5)
            d_ab = closed_form_fd(a, b)
            d_ba = closed_form_fd(b, a)
            assert d_ab >= 0
            assert math.isclose(d_ab, d_ba, rel_tol=1e-8, abs_tol=1e-10)

    def test_matches_diagonal_formula(self, rng):
        mu = rng.normal(size=5)
        va = rng.uniform(0.2, 3.0, 5)
        vb = rng.uniform(0.2, 3.0, 5)
        a = CohortSpec(name="a", mean=np.zeros(5), covariance={"diag": va.tolist()}, n=5)
        b = CohortSpec(name="b", mean=mu, covariance={"diag": vb.tolist()}, n=5)
        expected = diagonal_fd(np.zeros(5), va, mu, vb)
        assert math.isclose(closed_form_fd(a, b), expected, rel_tol=1e-10)

    @pytest.mark.slow
    def test_large_sample_convergence(self, rng):
        # one-off convergence check: estimator on 1e6 samples per cohort
        base = rng.normal(size=(8, 6))
        cov_a = base.T @ base / 8 + 0.2 * np.eye(6)
        base2 = rng.normal(size=(8, 6))
        cov_b = base2.T @ base2 / 8 + 0.2 * np.eye(6)
        a = CohortSpec(name="a", mean=np.zeros(6), covariance=cov_a, n=10**6)
        b = CohortSpec(name="b", mean=rng.normal(size=6) * 0.5, covariance=cov_b, n=10**6)
        spec = SynthSpec(dim=6, cohorts=(a, b), seed=13)
        ds, truth = generate(spec)
        xa = ds.vectors()[: 10**6]
        xb = ds.vectors()[10**6 :]
        est = frechet_distance(fit_gaussian(xa, 0.0), fit_gaussian(xb, 0.0))
        planted = truth.fd_matrix["a"]["b"]
        assert abs(est - planted) <= 0.02 * planted


class TestSpecSerialization:
    def test_dict_round_trip(self):
        d = {
            "dim": 3,
            "seed": 11,
            "cohorts": [
                {"name": "a", "mean": [0, 0, 0], "covariance": 1.0, "n": 50},
                {"name": "b", "mean": [1, 2, 3], "covariance": {"diag": [1, 2, 3]}, "n": 60},
            ],
            "label_plans": {
                "m": {"values_by_cohort": {"a": "x", "b": "y"}, "flip_rate": 0.1}
            },
            "confidence_plan": {
                "weights": [0.5, -0.5, 0.1],
                "bias": 0.2,
                "noise_std": 0.01,
                "cohort_shift": {"b": -0.5},
            },
        }
        spec = spec_from_dict(d)
        assert spec.dim == 3
        assert spec.cohorts[1].covariance[2, 2] == 3.0
        ds, _ = generate(spec)
        assert len(ds) == 110
        assert ds.records[0].confidence is not None

    def test_load_spec_file(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(
            json.dumps(
                {
                    "dim": 2,
                    "cohorts": [{"name": "only", "mean": [0, 0], "n": 10}],
                }
            )
        )
        spec = load_spec(p)
        assert spec.cohorts[0].n == 10

    def test_truth_round_trip(self, tmp_path):
        _, truth = generate(two_cluster_spec(n=30))
        save_truth(truth, tmp_path / "t.json")
        again = load_truth(tmp_path / "t.json")
        assert again.clean_labels == truth.clean_labels
        assert again.flip_mask == truth.flip_mask
        assert again.fd_matrix == truth.fd_matrix

    def test_plan_requires_all_cohorts(self):
        with pytest.raises(ValueError, match="missing cohorts"):
            SynthSpec(
                dim=2,
                cohorts=(
                    CohortSpec(name="a", mean=np.zeros(2), covariance=1.0, n=5),
                    CohortSpec(name="b", mean=np.zeros(2), covariance=1.0, n=5),
                ),
                label_plans={"m": LabelPlan(values_by_cohort={"a": "x"}, flip_rate=0.0)},
            )


@pytest.fixture(scope="module")
def svc_oracle_run():
    from probe_instances import svc_instance

    inst = svc_instance(11)
    return inst, qp_oracle_svc(*inst), qp_oracle_svc_batch([inst])[0]


@pytest.fixture(scope="module")
def svr_oracle_run():
    from probe_instances import svr_instance

    inst = svr_instance(7)
    return inst, qp_oracle_svr(*inst), qp_oracle_svr_batch([inst])[0]


class TestQpOracleSvc:
    def test_symmetric_two_point_analytic(self):
        # W(alpha) = 2a - a^2 (1 - k) at a1 = a2 = a, interior optimum
        # a* = 1/(1 - k) with k = exp(-gamma * 4)
        x = np.array([[-1.0], [1.0]])
        y = np.array([-1.0, 1.0])
        sol = qp_oracle_svc(x, y, c=10.0, gamma=0.5)
        k = math.exp(-2.0)
        a_star = 1.0 / (1.0 - k)
        assert abs(sol.alpha[0] - sol.alpha[1]) <= 1e-12
        assert abs(sol.alpha[0] - a_star) <= 1e-6
        assert abs(sol.objective - (2 * a_star - a_star**2 * (1 - k))) <= 1e-6

    def test_trace_monotone(self, svc_oracle_run):
        _, sol, _ = svc_oracle_run
        assert len(sol.trace) >= 2
        for a, b in zip(sol.trace, sol.trace[1:]):
            assert b >= a - 1e-9

    def test_feasibility_exact(self, svc_oracle_run):
        (x, y, c, gamma), sol, _ = svc_oracle_run
        assert np.all(sol.alpha >= 0.0)
        assert np.all(sol.alpha <= c)
        assert abs(sol.alpha @ y) <= 1e-12

    def test_size_guard(self):
        x = np.zeros((31, 2))
        y = np.concatenate([np.ones(16), -np.ones(15)])
        with pytest.raises(ValueError, match="n <= 30"):
            qp_oracle_svc(x, y, 1.0, 1.0)

    def test_batch_matches_single(self, svc_oracle_run):
        _, single, batched = svc_oracle_run
        assert np.abs(batched.alpha - single.alpha).max() <= 1e-9
        assert abs(batched.objective - single.objective) <= 1e-9


class TestQpOracleSvr:
    def test_constant_targets_zero_duals(self):
        x = np.linspace(0, 1, 6).reshape(-1, 1)
        sol = qp_oracle_svr(x, np.full(6, 0.4), c=1.0, epsilon=0.1, gamma=1.0)
        assert np.all(sol.dual_coefs == 0.0)
        assert sol.objective == 0.0

    def test_trace_monotone(self, svr_oracle_run):
        _, sol, _ = svr_oracle_run
        for a, b in zip(sol.trace, sol.trace[1:]):
            assert b >= a - 1e-9

    def test_feasibility_exact(self, svr_oracle_run):
        (x, t, c, eps, gamma), sol, _ = svr_oracle_run
        n = x.shape[0]
        y2 = np.concatenate([np.ones(n), -np.ones(n)])
        assert np.all(sol.alpha >= 0.0)
        assert np.all(sol.alpha <= c)
        assert abs(sol.alpha @ y2) <= 1e-12

    def test_batch_matches_single(self, svr_oracle_run):
        _, single, batched = svr_oracle_run
        assert np.abs(batched.alpha - single.alpha).max() <= 1e-9
        assert abs(batched.objective - single.objective) <= 1e-9
