"""Synthetic embedding cohorts with planted ground truth, plus QP oracles.

Generation is fully determined by the spec's seed: cohorts are sampled in
order, then label flips per plan, then confidence noise, all from one PCG64
stream. The returned GroundTruth carries the clean labels, the flip mask,
the pre-noise confidence, and the closed-form FD matrix between cohorts,
which is what the test suites score against.

The QP oracles solve the probe duals by projected-gradient ascent with an
exact projection onto the box/equality feasible set; they exist to verify
the SMO solver and are deliberately slow and simple.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ._rng import generator
from .dataset import Dataset, EmbeddingRecord

ORACLE_STEPS = 100_000
ORACLE_MAX_N = 30


# ---------------------------------------------------------------------------
# Specs


def _as_covariance(cov, dim: int) -> np.ndarray:
    """Accept a full matrix, {'diag': [...]}, or a scalar variance."""
    if isinstance(cov, Mapping):
        if set(cov.keys()) != {"diag"}:
            raise ValueError(f"covariance mapping must have a single 'diag' key, got {sorted(cov)}")
        diag = np.asarray(cov["diag"], dtype=np.float64)
        if diag.shape != (dim,):
            raise ValueError(f"diag length {diag.shape} does not match dim {dim}")
        return np.diag(diag)
    if np.isscalar(cov):
        return float(cov) * np.eye(dim)
    mat = np.asarray(cov, dtype=np.float64)
    if mat.shape != (dim, dim):
        raise ValueError(f"covariance shape {mat.shape} does not match dim {dim}")
    return mat


@dataclass(frozen=True)
class CohortSpec:
    """One planted Gaussian cohort."""

    name: str
    mean: np.ndarray
    covariance: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        object.__setattr__(self, "mean", mean)
        cov = _as_covariance(self.covariance, mean.shape[0])
        object.__setattr__(self, "covariance", cov)
        if self.n < 2:
            raise ValueError(f"cohort {self.name!r}: n must be >= 2, got {self.n}")
        if float(np.abs(cov - cov.T).max()) > 1e-10 * max(1.0, float(np.abs(cov).max())):
            raise ValueError(f"cohort {self.name!r}: covariance is not symmetric")
        eigvals = np.linalg.eigvalsh(0.5 * (cov + cov.T))
        if eigvals[0] < -1e-10 * max(1.0, float(eigvals[-1])):
            raise ValueError(f"cohort {self.name!r}: covariance is not PSD")


@dataclass(frozen=True)
class LabelPlan:
    """Clean value per cohort plus an independent symmetric flip rate."""

    values_by_cohort: dict[str, str]
    flip_rate: float

    def __post_init__(self):
        if not (0.0 <= self.flip_rate < 0.5):
            raise ValueError(f"flip_rate must lie in [0, 0.5), got {self.flip_rate}")
        if self.flip_rate > 0 and len(set(self.values_by_cohort.values())) < 2:
            raise ValueError("flip_rate > 0 needs at least 2 distinct label values")


@dataclass(frozen=True)
class ConfidencePlan:
    """Logistic link from embedding to a [0, 1] confidence target.

    confidence = clip(sigmoid(w . x + bias + cohort_shift) + noise, 0, 1).
    The per-cohort shift is how a planted domain gap enters the target.
    """

    weights: np.ndarray
    bias: float = 0.0
    noise_std: float = 0.0
    cohort_shift: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")


@dataclass(frozen=True)
class SynthSpec:
    dim: int
    cohorts: tuple[CohortSpec, ...]
    label_plans: dict[str, LabelPlan] = field(default_factory=dict)
    confidence_plan: ConfidencePlan | None = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cohorts", tuple(self.cohorts))
        names = [c.name for c in self.cohorts]
        if len(set(names)) != len(names):
            raise ValueError("cohort names must be unique")
        for c in self.cohorts:
            if c.mean.shape != (self.dim,):
                raise ValueError(
                    f"cohort {c.name!r}: mean length {c.mean.shape} != dim {self.dim}"
                )
        for label, plan in self.label_plans.items():
            missing = [n for n in names if n not in plan.values_by_cohort]
            if missing:
                raise ValueError(
                    f"label plan {label!r} missing cohorts {missing}"
                )
        if self.confidence_plan is not None:
            if self.confidence_plan.weights.shape != (self.dim,):
                raise ValueError("confidence weights length must equal dim")


@dataclass
class GroundTruth:
    """Everything the generator knows that the dataset does not reveal."""

    clean_labels: dict[str, dict[str, str]]
    flip_mask: dict[str, dict[str, bool]]
    true_confidence: dict[str, float]
    fd_matrix: dict[str, dict[str, float]]


def spec_from_dict(d: Mapping) -> SynthSpec:
    cohorts = tuple(
        CohortSpec(
            name=c["name"],
            mean=np.asarray(c["mean"], dtype=np.float64),
            covariance=c.get("covariance", 1.0),
            n=int(c["n"]),
        )
        for c in d["cohorts"]
    )
    plans = {
        name: LabelPlan(
            values_by_cohort=dict(p["values_by_cohort"]),
            flip_rate=float(p.get("flip_rate", 0.0)),
        )
        for name, p in d.get("label_plans", {}).items()
    }
    conf = None
    if d.get("confidence_plan") is not None:
        cp = d["confidence_plan"]
        conf = ConfidencePlan(
            weights=np.asarray(cp["weights"], dtype=np.float64),
            bias=float(cp.get("bias", 0.0)),
            noise_std=float(cp.get("noise_std", 0.0)),
            cohort_shift={k: float(v) for k, v in cp.get("cohort_shift", {}).items()},
        )
    return SynthSpec(
        dim=int(d["dim"]),
        cohorts=cohorts,
        label_plans=plans,
        confidence_plan=conf,
        seed=int(d.get("seed", 0)),
    )


def load_spec(path: str | Path) -> SynthSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Generation


def _factor(cov: np.ndarray) -> np.ndarray:
    """A matrix F with F F^T = cov; Cholesky when possible, eigh otherwise."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(0.5 * (cov + cov.T))
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def generate(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    """Sample the planted cohorts; returns the dataset and its ground truth."""
    rng = generator(spec.seed)
    ids: list[str] = []
    cohort_of: list[str] = []
    blocks: list[np.ndarray] = []
    for cohort in spec.cohorts:
        z = rng.standard_normal((cohort.n, spec.dim))
        x = cohort.mean + z @ _factor(cohort.covariance).T
        blocks.append(x)
        ids.extend(f"{cohort.name}-{i:05d}" for i in range(cohort.n))
        cohort_of.extend([cohort.name] * cohort.n)
    vectors = np.vstack(blocks) if blocks else np.empty((0, spec.dim))
    n_total = len(ids)

    clean_labels: dict[str, dict[str, str]] = {}
    flip_mask: dict[str, dict[str, bool]] = {}
    noisy: dict[str, list[str]] = {}
    for label, plan in spec.label_plans.items():
        clean = [plan.values_by_cohort[c] for c in cohort_of]
        values = sorted(set(plan.values_by_cohort.values()))
        flips = rng.random(n_total) < plan.flip_rate
        observed = list(clean)
        for i in np.flatnonzero(flips):
            others = [v for v in values if v != clean[i]]
            observed[i] = others[int(rng.integers(0, len(others)))]
        clean_labels[label] = dict(zip(ids, clean))
        flip_mask[label] = dict(zip(ids, flips.tolist()))
        noisy[label] = observed

    true_conf: dict[str, float] = {}
    conf_values: list[float | None] = [None] * n_total
    if spec.confidence_plan is not None:
        plan = spec.confidence_plan
        shift = np.array([plan.cohort_shift.get(c, 0.0) for c in cohort_of])
        logit = vectors @ plan.weights + plan.bias + shift
        clean_conf = 1.0 / (1.0 + np.exp(-logit))
        noise = rng.normal(0.0, plan.noise_std, n_total) if plan.noise_std > 0 else 0.0
        observed_conf = np.clip(clean_conf + noise, 0.0, 1.0)
        true_conf = dict(zip(ids, clean_conf.tolist()))
        conf_values = observed_conf.tolist()

    records = []
    for i, rec_id in enumerate(ids):
        labels = {name: noisy[name][i] for name in spec.label_plans}
        records.append(
            EmbeddingRecord(
                id=rec_id,
                cohort=cohort_of[i],
                vector=vectors[i],
                labels=labels,
                confidence=conf_values[i],
            )
        )
    schema = {
        name: set(plan.values_by_cohort.values())
        for name, plan in spec.label_plans.items()
    }
    ds = Dataset(records, dim=spec.dim, label_schema=schema)

    fd_matrix: dict[str, dict[str, float]] = {}
    for a in spec.cohorts:
        fd_matrix[a.name] = {}
        for b in spec.cohorts:
            fd_matrix[a.name][b.name] = 0.0 if a.name == b.name else closed_form_fd(a, b)
    truth = GroundTruth(
        clean_labels=clean_labels,
        flip_mask=flip_mask,
        true_confidence=true_conf,
        fd_matrix=fd_matrix,
    )
    return ds, truth


def closed_form_fd(a: CohortSpec, b: CohortSpec) -> float:
    """Exact squared FD between two planted Gaussians.

    Uses the general-eigenvalue route Tr((Sa Sb)^{1/2}) = sum sqrt(eig(Sa Sb)),
    a different numerical path from the estimator's symmetric-sqrt chain, so
    the two stay independent cross-checks of each other.
    """
    if a.mean.shape != b.mean.shape:
        raise ValueError(
            f"dimension mismatch: {a.mean.shape} vs {b.mean.shape}"
        )
    diff = a.mean - b.mean
    eigvals = np.linalg.eigvals(a.covariance @ b.covariance)
    cross = float(np.sqrt(np.clip(eigvals.real, 0.0, None)).sum())
    val = float(diff @ diff) + float(
        np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * cross
    )
    return max(val, 0.0)


def truth_to_dict(truth: GroundTruth) -> dict:
    return {
        "clean_labels": truth.clean_labels,
        "flip_mask": truth.flip_mask,
        "true_confidence": truth.true_confidence,
        "fd_matrix": truth.fd_matrix,
    }


def truth_from_dict(d: Mapping) -> GroundTruth:
    return GroundTruth(
        clean_labels={k: dict(v) for k, v in d["clean_labels"].items()},
        flip_mask={k: {i: bool(f) for i, f in v.items()} for k, v in d["flip_mask"].items()},
        true_confidence={k: float(v) for k, v in d["true_confidence"].items()},
        fd_matrix={k: {j: float(v) for j, v in row.items()} for k, row in d["fd_matrix"].items()},
    )


def save_truth(truth: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(json.dumps(truth_to_dict(truth), indent=2) + "\n", encoding="utf-8")


def load_truth(path: str | Path) -> GroundTruth:
    return truth_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# QP oracles for the kernel probes


@dataclass(frozen=True)
class QpSolution:
    """Dual solution from projected-gradient ascent.

    alpha holds the raw dual variables (length n for the classifier, 2n for
    the regressor), dual_coefs the signed per-point coefficients, objective
    the maximized dual value, and trace the objective sampled every 1000
    steps for monotonicity checks.
    """

    alpha: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    objective: float
    trace: tuple[float, ...]


def _rbf_kernel(x: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0, None)
    k = np.exp(-gamma * d2)
    k = 0.5 * (k + k.T)
    np.fill_diagonal(k, 1.0)
    return k


def _project_batch(z: np.ndarray, y: np.ndarray, cap: np.ndarray) -> np.ndarray:
    """Exact Euclidean projection onto {0 <= a <= cap, sum_i y_i a_i = 0}.

    Batched over axis 0. With a(lam) = clip(z - lam*y, 0, cap), the balance
    h(lam) = y . a(lam) is piecewise linear and nonincreasing: variable i
    drains at slope -1 on [start_i, end_i] of width cap_i and is flat
    outside. An event sweep over the sorted interval endpoints locates the
    root; when the root falls exactly on an event, that event value is used
    verbatim so fixed points of the ascent map are reproduced bit for bit.
    """
    bsz, m = z.shape
    bp_a = z * y
    bp_b = bp_a - cap * y
    ev = np.empty((bsz, 2 * m))
    np.minimum(bp_a, bp_b, out=ev[:, :m])   # interval starts: slope -1
    np.maximum(bp_a, bp_b, out=ev[:, m:])   # interval ends: slope +1
    order = np.argsort(ev, axis=1, kind="stable")
    lam_sorted = np.take_along_axis(ev, order, axis=1)
    delta = np.where(order < m, -1.0, 1.0)
    slope_after = np.cumsum(delta, axis=1)
    h0 = np.sum(np.where(y > 0, cap, 0.0), axis=1)  # h before any event
    dh = slope_after[:, :-1] * np.diff(lam_sorted, axis=1)
    h = np.concatenate([h0[:, None], h0[:, None] + np.cumsum(dh, axis=1)], axis=1)
    below = h <= 0.0
    k = np.argmax(below, axis=1)[:, None]
    crosses = np.take_along_axis(below, k, axis=1)[:, 0]
    k0 = np.maximum(k - 1, 0)
    h_k = np.take_along_axis(h, k, axis=1)[:, 0]
    h_prev = np.take_along_axis(h, k0, axis=1)[:, 0]
    lam_k = np.take_along_axis(lam_sorted, k, axis=1)[:, 0]
    lam_prev = np.take_along_axis(lam_sorted, k0, axis=1)[:, 0]
    slope = np.take_along_axis(slope_after, k0, axis=1)[:, 0]
    safe_slope = np.where(slope == 0.0, -1.0, slope)
    lam = np.where(h_k == 0.0, lam_k, lam_prev - h_prev / safe_slope)
    lam = np.where(k[:, 0] == 0, lam_sorted[:, 0], lam)
    lam = np.where(crosses, lam, lam_sorted[:, -1])
    return np.clip(z - lam[:, None] * y, 0.0, cap)


def _projected_ascent_batch(
    q: np.ndarray,
    y: np.ndarray,
    p: np.ndarray,
    cap: np.ndarray,
    steps: np.ndarray,
    n_steps: int,
    trace_every: int = 1000,
) -> tuple[np.ndarray, np.ndarray]:
    """Lock-step projected-gradient ascent on -(1/2 a'Qa + p'a) for a batch.

    q: (B, m, m) with q = (y y^T) * K; y, p, cap: (B, m); steps: (B,) step
    sizes. Returns (alpha, trace) where trace is (B, n_checks) objectives.

    The update map is deterministic, so once every instance reproduces its
    iterate bit for bit the remaining budget cannot change anything and the
    loop exits early with the identical result.
    """
    bsz, m = y.shape
    a = np.zeros((bsz, m))
    neg_steps = -steps[:, None]
    traces = []
    for it in range(n_steps):
        z = np.einsum("bij,bj->bi", q, a)
        z += p
        z *= neg_steps
        z += a
        a_next = _project_batch(z, y, cap)
        fixed = np.array_equal(a_next, a)
        a = a_next
        if (it + 1) % trace_every == 0 or fixed:
            qa = np.einsum("bij,bj->bi", q, a)
            obj = -(0.5 * np.einsum("bi,bi->b", a, qa) + np.einsum("bi,bi->b", p, a))
            traces.append(obj)
        if fixed:
            break
    trace = np.stack(traces, axis=1) if traces else np.zeros((bsz, 0))
    return a, trace


def _kkt_bias(a: np.ndarray, grad_f: np.ndarray, y: np.ndarray, cap: float) -> float:
    """Bias from the KKT system: mean of -y*grad over free variables,
    midpoint of the remaining bracket if none are free."""
    crit = -y * grad_f
    tol_c = 1e-8 * max(cap, 1.0)
    free = (a > tol_c) & (a < cap - tol_c)
    if np.any(free):
        return float(np.mean(crit[free]))
    up = ((y > 0) & (a < cap - tol_c)) | ((y < 0) & (a > tol_c))
    low = ((y > 0) & (a > tol_c)) | ((y < 0) & (a < cap - tol_c))
    hi = crit[up].max() if np.any(up) else 0.0
    lo = crit[low].min() if np.any(low) else 0.0
    return float(0.5 * (hi + lo))


def qp_oracle_svc(
    x: np.ndarray,
    y: np.ndarray,
    c: float,
    gamma: float,
    n_steps: int = ORACLE_STEPS,
) -> QpSolution:
    """Brute-force dual solution of the soft-margin RBF classifier.

    Projected-gradient ascent with step 1e-3 / lambda_max(K), projecting
    onto the exact feasible set every step. Limited to n <= 30.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to n <= {ORACLE_MAX_N}, got {n}")
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise ValueError("labels must be -1/+1")
    k = _rbf_kernel(x, gamma)
    lam_max = float(np.linalg.eigvalsh(k)[-1])
    q = (y[:, None] * y[None, :]) * k
    cap = np.full((1, n), float(c))
    alpha, trace = _projected_ascent_batch(
        q[None, :, :],
        y[None, :],
        np.full((1, n), -1.0),
        cap,
        np.array([1e-3 / lam_max]),
        n_steps,
    )
    a = alpha[0]
    grad_f = q @ a - 1.0
    obj = float(a.sum() - 0.5 * a @ q @ a)
    bias = _kkt_bias(a, grad_f, y, float(c))
    return QpSolution(
        alpha=a,
        dual_coefs=y * a,
        bias=bias,
        objective=obj,
        trace=tuple(trace[0].tolist()),
    )


def qp_oracle_svr(
    x: np.ndarray,
    t: np.ndarray,
    c: float,
    epsilon: float,
    gamma: float,
    n_steps: int = ORACLE_STEPS,
) -> QpSolution:
    """Brute-force dual solution of the epsilon-tube RBF regressor."""
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    n = x.shape[0]
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to n <= {ORACLE_MAX_N}, got {n}")
    k = _rbf_kernel(x, gamma)
    y2 = np.concatenate([np.ones(n), -np.ones(n)])
    k2 = np.tile(k, (2, 2))
    q = (y2[:, None] * y2[None, :]) * k2
    p = np.concatenate([epsilon - t, epsilon + t])
    lam_max = float(np.linalg.eigvalsh(k2)[-1])
    cap = np.full((1, 2 * n), float(c))
    alpha, trace = _projected_ascent_batch(
        q[None, :, :],
        y2[None, :],
        p[None, :],
        cap,
        np.array([1e-3 / lam_max]),
        n_steps,
    )
    a = alpha[0]
    grad_f = q @ a + p
    obj = float(-(0.5 * a @ q @ a + p @ a))
    bias = _kkt_bias(a, grad_f, y2, float(c))
    return QpSolution(
        alpha=a,
        dual_coefs=a[:n] - a[n:],
        bias=bias,
        objective=obj,
        trace=tuple(trace[0].tolist()),
    )


def qp_oracle_svc_batch(
    instances: Sequence[tuple[np.ndarray, np.ndarray, float, float]],
    n_steps: int = ORACLE_STEPS,
) -> list[QpSolution]:
    """Solve many (x, y, c, gamma) classifier instances in lock step.

    Instances are padded to a common size with zero-capped variables, so one
    vectorized ascent covers all of them; per-instance results match the
    single-instance oracle up to summation order.
    """
    if not instances:
        return []
    sizes = [np.asarray(x).shape[0] for x, _, _, _ in instances]
    m = max(sizes)
    if m > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to n <= {ORACLE_MAX_N}")
    bsz = len(instances)
    q = np.zeros((bsz, m, m))
    yb = np.ones((bsz, m))
    pb = np.zeros((bsz, m))
    capb = np.zeros((bsz, m))
    steps = np.empty(bsz)
    for i, (x, y, c, gamma) in enumerate(instances):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = x.shape[0]
        k = _rbf_kernel(x, gamma)
        q[i, :n, :n] = (y[:, None] * y[None, :]) * k
        yb[i, :n] = y
        pb[i, :n] = -1.0
        capb[i, :n] = float(c)
        steps[i] = 1e-3 / float(np.linalg.eigvalsh(k)[-1])
    alpha, trace = _projected_ascent_batch(q, yb, pb, capb, steps, n_steps)
    out = []
    for i, (x, y, c, gamma) in enumerate(instances):
        n = sizes[i]
        a = alpha[i, :n]
        y = np.asarray(y, dtype=np.float64)
        qi = q[i, :n, :n]
        grad_f = qi @ a - 1.0
        out.append(
            QpSolution(
                alpha=a,
                dual_coefs=y * a,
                bias=_kkt_bias(a, grad_f, y, float(c)),
                objective=float(a.sum() - 0.5 * a @ qi @ a),
                trace=tuple(trace[i].tolist()),
            )
        )
    return out


def qp_oracle_svr_batch(
    instances: Sequence[tuple[np.ndarray, np.ndarray, float, float, float]],
    n_steps: int = ORACLE_STEPS,
) -> list[QpSolution]:
    """Solve many (x, t, c, epsilon, gamma) regressor instances in lock step."""
    if not instances:
        return []
    sizes = [np.asarray(x).shape[0] for x, _, _, _, _ in instances]
    if max(sizes) > ORACLE_MAX_N:
        raise ValueError(f"oracle is limited to n <= {ORACLE_MAX_N}")
    m = 2 * max(sizes)
    bsz = len(instances)
    q = np.zeros((bsz, m, m))
    yb = np.ones((bsz, m))
    pb = np.zeros((bsz, m))
    capb = np.zeros((bsz, m))
    steps = np.empty(bsz)
    for i, (x, t, c, epsilon, gamma) in enumerate(instances):
        x = np.asarray(x, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        n = x.shape[0]
        k2 = np.tile(_rbf_kernel(x, gamma), (2, 2))
        y2 = np.concatenate([np.ones(n), -np.ones(n)])
        q[i, : 2 * n, : 2 * n] = (y2[:, None] * y2[None, :]) * k2
        yb[i, : 2 * n] = y2
        pb[i, : 2 * n] = np.concatenate([epsilon - t, epsilon + t])
        capb[i, : 2 * n] = float(c)
        steps[i] = 1e-3 / float(np.linalg.eigvalsh(k2)[-1])
    alpha, trace = _projected_ascent_batch(q, yb, pb, capb, steps, n_steps)
    out = []
    for i, (x, t, c, epsilon, gamma) in enumerate(instances):
        n = sizes[i]
        a = alpha[i, : 2 * n]
        qi = q[i, : 2 * n, : 2 * n]
        pi = pb[i, : 2 * n]
        grad_f = qi @ a + pi
        out.append(
            QpSolution(
                alpha=a,
                dual_coefs=a[:n] - a[n:],
                bias=_kkt_bias(a, grad_f, yb[i, : 2 * n], float(c)),
                objective=float(-(0.5 * a @ qi @ a + pi @ a)),
                trace=tuple(trace[i].tolist()),
            )
        )
    return out
