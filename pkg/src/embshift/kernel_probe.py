"""RBF-kernel shallow probes: a binary SVM classifier and an epsilon-SVR.

Both duals are solved by sequential minimal optimization with maximal-
violating-pair working-set selection: at every step the pair (i, j) with
the largest KKT violation m(a) - M(a) is updated analytically, ties broken
by a seeded shuffle, until the violation drops below tol. The regressor is
reduced to the same box/equality form over doubled variables (a, a*), so
one solver serves both probes.

Kernel matrices are held in full for n <= 8192 training points; desk-scale
cohorts never exceed that.
"""
from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._rng import generator

FULL_CACHE_LIMIT = 8192
GAMMA_SCALE = "scale"


@dataclass(frozen=True)
class RbfParams:
    """Kernel width: k(x, y) = exp(-gamma * ||x - y||^2)."""

    gamma: float

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class TrainConfig:
    """Probe training knobs.

    gamma may be an explicit positive float or the string "scale", which
    resolves to 1 / (D * mean per-feature variance) of the training matrix.
    max_iter defaults to 10 * m**2 working-set steps (m = dual variables),
    a hard cap that flags rather than raises on exhaustion.
    """

    c: float = 1.0
    epsilon: float = 0.1
    tol: float = 1e-3
    max_iter: int | None = None
    seed: int = 0
    gamma: float | str = GAMMA_SCALE

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if isinstance(self.gamma, str):
            if self.gamma != GAMMA_SCALE:
                raise ValueError(f"gamma must be a positive float or '{GAMMA_SCALE}'")
        elif not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")


@dataclass(frozen=True)
class SvcModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    params: RbfParams
    classes: tuple
    converged: bool = True
    objective: float = math.nan
    n_iter: int = 0


@dataclass(frozen=True)
class SvrModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray
    bias: float
    params: RbfParams
    epsilon: float
    converged: bool = True
    objective: float = math.nan
    n_iter: int = 0


def rbf(x: np.ndarray, y: np.ndarray, params: RbfParams) -> float:
    """Single kernel evaluation; 1 iff x == y, falling toward 0 with distance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    d = x - y
    return float(np.exp(-params.gamma * (d @ d)))


def kernel_matrix(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    """Pairwise RBF kernel block between row sets a and b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    sq_a = np.sum(a * a, axis=1)
    sq_b = np.sum(b * b, axis=1)
    d2 = np.clip(sq_a[:, None] + sq_b[None, :] - 2.0 * (a @ b.T), 0.0, None)
    return np.exp(-gamma * d2)


class _KernelSource:
    """Gram-matrix access for the solver.

    Up to FULL_CACHE_LIMIT training rows the full matrix is held (the desk
    scale this package targets); beyond that, columns are computed on
    demand and kept in an LRU cache bounded by roughly 1 GiB.
    """

    def __init__(self, x: np.ndarray, gamma: float, full_limit: int | None = None):
        if full_limit is None:
            full_limit = FULL_CACHE_LIMIT
        self.x = x
        self.gamma = gamma
        self.n = x.shape[0]
        self.full: np.ndarray | None = None
        if self.n <= full_limit:
            k = kernel_matrix(x, x, gamma)
            k = 0.5 * (k + k.T)
            np.fill_diagonal(k, 1.0)
            self.full = k
        else:
            from collections import OrderedDict

            self._lru: "OrderedDict[int, np.ndarray]" = OrderedDict()
            self._max_cols = max(2, (1 << 30) // (8 * self.n))

    def col(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[:, i]
        cached = self._lru.get(i)
        if cached is not None:
            self._lru.move_to_end(i)
            return cached
        col = kernel_matrix(self.x, self.x[i : i + 1], self.gamma)[:, 0]
        col[i] = 1.0
        self._lru[i] = col
        if len(self._lru) > self._max_cols:
            self._lru.popitem(last=False)
        return col

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.full is not None:
            return self.full @ v
        out = np.empty(self.n)
        block = max(1, (1 << 24) // (8 * self.n))  # ~128 MiB of scratch
        for start in range(0, self.n, block):
            stop = min(start + block, self.n)
            kb = kernel_matrix(self.x[start:stop], self.x, self.gamma)
            kb[np.arange(stop - start), np.arange(start, stop)] = 1.0
            out[start:stop] = kb @ v
        return out


def resolve_gamma(cfg: TrainConfig, x: np.ndarray) -> float:
    """Resolve "scale" against the training matrix; explicit values pass through."""
    if isinstance(cfg.gamma, str):
        d = x.shape[1]
        var = float(np.mean(np.var(x, axis=0)))
        return 1.0 / (d * var) if var > 0 else 1.0 / d
    return float(cfg.gamma)


# ---------------------------------------------------------------------------
# SMO core
#
# Both probes minimize f(a) = 1/2 a'Qa + p'a over {0 <= a <= c, y'a = 0}
# with Q = (y y') * Ktilde. The classifier uses Ktilde = K directly; the
# regressor doubles the variables, and Ktilde columns are tiled K columns,
# so only the n x n Gram matrix is ever stored.


class _Problem:
    def __init__(self, source: _KernelSource, y: np.ndarray, p: np.ndarray):
        self.source = source
        self.y = y
        self.p = p
        self.m = y.shape[0]
        self.n = source.n
        self.doubled = self.m == 2 * self.n
        if not self.doubled and self.m != self.n:
            raise ValueError("variable count must be n or 2n")

    def kcol(self, i: int) -> np.ndarray:
        col = self.source.col(i % self.n)
        return np.concatenate([col, col]) if self.doubled else col

    def kdiag(self) -> np.ndarray:
        # RBF diagonal is exactly 1
        return np.ones(self.m)

    def kdot(self, v: np.ndarray) -> np.ndarray:
        if self.doubled:
            base = self.source.matvec(v[: self.n] + v[self.n :])
            return np.concatenate([base, base])
        return self.source.matvec(v)


def _smo(
    prob: _Problem, c: float, tol: float, max_iter: int, seed: int
) -> tuple[np.ndarray, np.ndarray, bool, int]:
    """Returns (alpha, grad_f, converged, n_iter)."""
    m = prob.m
    y = prob.y
    a = np.zeros(m)
    g = prob.p.copy()
    kd = prob.kdiag()
    perm = generator(seed).permutation(m)
    converged = False
    it = 0
    while it < max_iter:
        crit = -y * g
        up = ((y > 0) & (a < c)) | ((y < 0) & (a > 0))
        low = ((y > 0) & (a > 0)) | ((y < 0) & (a < c))
        vals_up = np.where(up, crit, -np.inf)
        vals_low = np.where(low, crit, np.inf)
        # argmax/argmin scanned in permuted order: ties resolve by the shuffle
        i = int(perm[np.argmax(vals_up[perm])])
        j = int(perm[np.argmin(vals_low[perm])])
        m_val = vals_up[i]
        big_m_val = vals_low[j]
        if m_val - big_m_val <= tol:
            converged = True
            break
        ki = prob.kcol(i)
        kj = prob.kcol(j)
        quad = kd[i] + kd[j] - 2.0 * y[i] * y[j] * ki[j]
        if quad <= 0:
            quad = 1e-12
        t_star = (m_val - big_m_val) / quad
        bound_i = (c - a[i]) if y[i] > 0 else a[i]
        bound_j = a[j] if y[j] > 0 else (c - a[j])
        t = min(t_star, bound_i, bound_j)
        a[i] = min(max(a[i] + y[i] * t, 0.0), c)
        a[j] = min(max(a[j] - y[j] * t, 0.0), c)
        g += (t * y) * (ki - kj)
        it += 1
    return a, g, converged, it


def _bias_from_kkt(a: np.ndarray, g: np.ndarray, y: np.ndarray, c: float) -> float:
    crit = -y * g
    free = (a > 0) & (a < c)
    if np.any(free):
        return float(np.mean(crit[free]))
    up = ((y > 0) & (a < c)) | ((y < 0) & (a > 0))
    low = ((y > 0) & (a > 0)) | ((y < 0) & (a < c))
    hi = crit[up].max() if np.any(up) else 0.0
    lo = crit[low].min() if np.any(low) else 0.0
    return float(0.5 * (hi + lo))


def _default_max_iter(m: int) -> int:
    return 10 * m * m


def train_svc(
    x: np.ndarray,
    y: Sequence[int],
    cfg: TrainConfig = TrainConfig(),
    classes: tuple = (-1, 1),
) -> SvcModel:
    """Train the soft-margin classifier on -1/+1 labels.

    Raises on single-class input; exhausting max_iter returns the model
    with converged=False rather than raising.
    """
    x = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != yv.shape[0]:
        raise ValueError("x must be (n, d) with one label per row")
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 training points, got {n}")
    labels = set(np.unique(yv).tolist())
    if labels - {-1.0, 1.0}:
        raise ValueError(f"labels must be -1/+1, got {sorted(labels)}")
    if len(labels) < 2:
        raise ValueError("single-class input")
    gamma = resolve_gamma(cfg, x)
    prob = _Problem(_KernelSource(x, gamma), yv, np.full(n, -1.0))
    max_iter = cfg.max_iter if cfg.max_iter is not None else _default_max_iter(n)
    a, g, converged, it = _smo(prob, cfg.c, cfg.tol, max_iter, cfg.seed)
    bias = _bias_from_kkt(a, g, yv, cfg.c)
    objective = float(a.sum() - 0.5 * a @ (prob.kdot(a * yv) * yv))
    keep = a > 0
    return SvcModel(
        support_vectors=x[keep].copy(),
        dual_coefs=(yv * a)[keep],
        bias=bias,
        params=RbfParams(gamma=gamma),
        classes=tuple(classes),
        converged=converged,
        objective=objective,
        n_iter=it,
    )


def train_svr(
    x: np.ndarray, t: Sequence[float], cfg: TrainConfig = TrainConfig()
) -> SvrModel:
    """Train the epsilon-tube regressor on real targets."""
    x = np.asarray(x, dtype=np.float64)
    tv = np.asarray(t, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != tv.shape[0]:
        raise ValueError("x must be (n, d) with one target per row")
    n = x.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 training points, got {n}")
    if not np.all(np.isfinite(tv)):
        raise ValueError("targets must be finite")
    gamma = resolve_gamma(cfg, x)
    y2 = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([cfg.epsilon - tv, cfg.epsilon + tv])
    prob = _Problem(_KernelSource(x, gamma), y2, p)
    max_iter = cfg.max_iter if cfg.max_iter is not None else _default_max_iter(2 * n)
    a, g, converged, it = _smo(prob, cfg.c, cfg.tol, max_iter, cfg.seed)
    bias = _bias_from_kkt(a, g, y2, cfg.c)
    coef = a[:n] - a[n:]
    objective = float(-(0.5 * a @ (prob.kdot(a * y2) * y2) + p @ a))
    keep = coef != 0.0
    return SvrModel(
        support_vectors=x[keep].copy(),
        dual_coefs=coef[keep],
        bias=bias,
        params=RbfParams(gamma=gamma),
        epsilon=cfg.epsilon,
        converged=converged,
        objective=objective,
        n_iter=it,
    )


# ---------------------------------------------------------------------------
# Prediction


def decision_values(model: SvcModel | SvrModel, x: np.ndarray) -> np.ndarray:
    """Raw decision values sum_i coef_i k(sv_i, x_j) + bias for rows of x."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    d = model.support_vectors.shape[1] if model.support_vectors.size else x.shape[1]
    if x.shape[1] != d:
        raise ValueError(f"dimension mismatch: model expects {d}, got {x.shape[1]}")
    if model.support_vectors.size == 0:
        return np.full(x.shape[0], model.bias)
    k = kernel_matrix(model.support_vectors, x, model.params.gamma)
    return model.dual_coefs @ k + model.bias


def predict_class(model: SvcModel, x: np.ndarray):
    """(label, decision_value) for one vector; an exact 0 goes positive."""
    dv = float(decision_values(model, np.asarray(x, dtype=np.float64)[None, :])[0])
    label = model.classes[1] if dv >= 0 else model.classes[0]
    return label, dv


def predict_value(model: SvrModel, x: np.ndarray) -> float:
    return float(decision_values(model, np.asarray(x, dtype=np.float64)[None, :])[0])


def predict_classes(model: SvcModel, x: np.ndarray) -> tuple[list, np.ndarray]:
    """Vectorized predict_class over rows; returns (labels, decision_values)."""
    dv = decision_values(model, x)
    labels = [model.classes[1] if v >= 0 else model.classes[0] for v in dv]
    return labels, dv


# ---------------------------------------------------------------------------
# Serialization: versioned JSON, exact round trip


def _encode_f64(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_f64(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype="<f8").reshape(obj["shape"]).copy()


def model_to_dict(model: SvcModel | SvrModel) -> dict:
    out = {
        "version": 1,
        "kind": "svc" if isinstance(model, SvcModel) else "svr",
        "gamma": model.params.gamma,
        "bias": model.bias,
        "support_vectors": _encode_f64(model.support_vectors),
        "dual_coefs": _encode_f64(model.dual_coefs),
        "converged": model.converged,
        "objective": model.objective,
        "n_iter": model.n_iter,
    }
    if isinstance(model, SvcModel):
        out["classes"] = list(model.classes)
    else:
        out["epsilon"] = model.epsilon
    return out


def model_from_dict(d: dict) -> SvcModel | SvrModel:
    if d.get("version") != 1:
        raise ValueError(f"unsupported model version {d.get('version')!r}")
    common = dict(
        support_vectors=_decode_f64(d["support_vectors"]),
        dual_coefs=_decode_f64(d["dual_coefs"]),
        bias=float(d["bias"]),
        params=RbfParams(gamma=float(d["gamma"])),
        converged=bool(d["converged"]),
        objective=float(d["objective"]),
        n_iter=int(d["n_iter"]),
    )
    if d["kind"] == "svc":
        return SvcModel(classes=tuple(d["classes"]), **common)
    if d["kind"] == "svr":
        return SvrModel(epsilon=float(d["epsilon"]), **common)
    raise ValueError(f"unknown model kind {d['kind']!r}")


def save_model(model: SvcModel | SvrModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> SvcModel | SvrModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Hyperparameter search


def grid_search(
    x: np.ndarray,
    target: np.ndarray,
    task: str,
    cfg: TrainConfig = TrainConfig(),
    c_grid: Sequence[float] = (0.1, 1.0, 10.0),
    gamma_mults: Sequence[float] = (0.1, 1.0, 10.0),
    folds: int = 5,
    seed: int = 0,
) -> tuple[TrainConfig, list[dict]]:
    """Small seeded grid search by k-fold CV.

    Scores classifier candidates by accuracy and regressor candidates by
    negative MSE; gamma candidates are multiples of the "scale" value.
    Returns the winning config and the full score table.
    """
    if task not in ("svc", "svr"):
        raise ValueError(f"task must be 'svc' or 'svr', got {task!r}")
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n = x.shape[0]
    folds = min(folds, n)
    order = generator(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    for pos, idx in enumerate(order):
        fold_of[idx] = pos % folds
    base_gamma = resolve_gamma(TrainConfig(gamma=GAMMA_SCALE), x)
    table = []
    best = None
    for c in c_grid:
        for mult in gamma_mults:
            gamma = base_gamma * mult
            scores = []
            for f in range(folds):
                tr = fold_of != f
                te = ~tr
                if len(np.unique(target[tr])) < 2 and task == "svc":
                    continue
                cand = TrainConfig(
                    c=c, epsilon=cfg.epsilon, tol=cfg.tol,
                    max_iter=cfg.max_iter, seed=cfg.seed, gamma=gamma,
                )
                if task == "svc":
                    model = train_svc(x[tr], target[tr], cand)
                    _, dv = predict_classes(model, x[te])
                    pred = np.where(dv >= 0, 1.0, -1.0)
                    scores.append(float(np.mean(pred == target[te])))
                else:
                    model = train_svr(x[tr], target[tr], cand)
                    dv = decision_values(model, x[te])
                    scores.append(-float(np.mean((dv - target[te]) ** 2)))
            score = float(np.mean(scores)) if scores else -math.inf
            table.append({"c": c, "gamma": gamma, "score": score})
            if best is None or score > best[0]:
                best = (score, c, gamma)
    _, c_best, gamma_best = best
    winner = TrainConfig(
        c=c_best, epsilon=cfg.epsilon, tol=cfg.tol,
        max_iter=cfg.max_iter, seed=cfg.seed, gamma=gamma_best,
    )
    return winner, table
