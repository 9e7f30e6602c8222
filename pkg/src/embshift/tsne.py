"""Exact t-SNE projection to 2-d for cluster inspection.

O(n^2) only, intended for desk scale (n <= 5000). Per-row bandwidths come
from bisection on log sigma until the perplexity 2^H(p_row) matches the
target; the joint affinities are the symmetrized conditionals with a 1e-12
floor so the KL objective never sees log(0). Descent follows the standard
recipe: seeded Gaussian init (std 1e-4), early exaggeration, momentum
switch, and per-coordinate gain adaptation. Everything is deterministic in
the seed.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from ._rng import generator

AFFINITY_FLOOR = 1e-12
KL_CHECK_EVERY = 50


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 30.0
    iterations: int = 1000
    exaggeration_factor: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    momentum_early: float = 0.5
    momentum_late: float = 0.8
    momentum_switch_iter: int = 250
    seed: int = 0
    entropy_tol: float = 1e-5
    max_bisection_steps: int = 50

    def __post_init__(self):
        if not self.perplexity > 1:
            raise ValueError(f"perplexity must exceed 1, got {self.perplexity}")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass(frozen=True)
class Projection:
    """2-d coordinates per input id plus the final KL divergence."""

    ids: tuple[str, ...]
    coords: np.ndarray
    final_kl: float
    config: TsneConfig
    kl_trace: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def coords_by_id(self) -> dict[str, tuple[float, float]]:
        return {
            rec_id: (float(x), float(y))
            for rec_id, (x, y) in zip(self.ids, self.coords)
        }


class CalibrationResult(NamedTuple):
    sigma: float
    p_row: np.ndarray
    converged: bool


def _row_entropy(sq_dists: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """(entropy in nats, probabilities) for p_i ~ exp(-beta * d_i)."""
    shifted = sq_dists - sq_dists.min()
    w = np.exp(-beta * shifted)
    z = w.sum()
    p = w / z
    h = math.log(z) + beta * float(p @ shifted)
    return h, p


def calibrate_row(
    sq_dists: np.ndarray,
    perplexity: float,
    tol: float = 1e-5,
    max_steps: int = 50,
) -> CalibrationResult:
    """Find sigma so the row's effective neighbor count matches perplexity.

    Bisection on log sigma (entropy is nondecreasing in sigma); if the
    target cannot be bracketed or hit within max_steps, the closest row
    found is returned with converged=False instead of raising.
    """
    sq_dists = np.asarray(sq_dists, dtype=np.float64)
    finite = np.isfinite(sq_dists)
    if finite.sum() < 2:
        raise ValueError("need at least 2 finite distances")
    if np.any(sq_dists < 0):
        raise ValueError("squared distances must be nonnegative")
    m = sq_dists.shape[0]
    if not (1.0 < perplexity <= m):
        raise ValueError(
            f"perplexity must lie in (1, {m}] for a row of {m} distances"
        )
    target = math.log(perplexity)

    scale = float(sq_dists[finite].mean())
    if scale <= 0:
        scale = 1.0
    t = 0.5 * math.log(scale)  # log sigma, starting from the mean distance

    def entropy_at(log_sigma: float):
        # exponent clamped so runaway brackets on unreachable targets
        # (e.g. all-equal distances) stay finite and get flagged instead
        beta = 0.5 * math.exp(min(max(-2.0 * log_sigma, -700.0), 700.0))
        return _row_entropy(sq_dists, beta)

    best = None  # (gap, sigma, p, h)
    t_lo = t_hi = None
    h_cur, p_cur = entropy_at(t)
    steps = 0

    def consider(h, p, log_s):
        nonlocal best
        gap = abs(math.exp(h) - perplexity)
        if best is None or gap < best[0]:
            best = (gap, math.exp(log_s), p, h)

    consider(h_cur, p_cur, t)
    # expand a bracket around the target entropy
    width = 1.0
    while steps < max_steps and (t_lo is None or t_hi is None):
        if h_cur < target:
            t_lo = t
            t = t + width if t_hi is None else 0.5 * (t + t_hi)
        else:
            t_hi = t
            t = t - width if t_lo is None else 0.5 * (t + t_lo)
        width *= 2.0
        h_cur, p_cur = entropy_at(t)
        consider(h_cur, p_cur, t)
        steps += 1
        if best[0] <= tol * perplexity:
            return CalibrationResult(best[1], best[2] / best[2].sum(), True)
    while steps < max_steps and t_lo is not None and t_hi is not None:
        t = 0.5 * (t_lo + t_hi)
        h_cur, p_cur = entropy_at(t)
        consider(h_cur, p_cur, t)
        if best[0] <= tol * perplexity:
            return CalibrationResult(best[1], best[2] / best[2].sum(), True)
        if h_cur < target:
            t_lo = t
        else:
            t_hi = t
        steps += 1
    converged = best[0] <= tol * perplexity
    return CalibrationResult(best[1], best[2] / best[2].sum(), converged)


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = np.clip(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0, None)
    np.fill_diagonal(d2, 0.0)
    return d2


def joint_affinities(vectors: np.ndarray, config: TsneConfig) -> np.ndarray:
    """Symmetrized joint probabilities P with zero diagonal, summing to 1."""
    x = np.asarray(vectors, dtype=np.float64)
    n = x.shape[0]
    if n < 4:
        raise ValueError(f"need at least 4 vectors, got {n}")
    if not config.perplexity < n - 1:
        raise ValueError(
            f"perplexity {config.perplexity} must be below n - 1 = {n - 1}"
        )
    d2 = _pairwise_sq_dists(x)
    p_cond = np.zeros((n, n))
    off = ~np.eye(n, dtype=bool)
    failed = 0
    for i in range(n):
        res = calibrate_row(
            d2[i][off[i]],
            config.perplexity,
            tol=config.entropy_tol,
            max_steps=config.max_bisection_steps,
        )
        if not res.converged:
            failed += 1
        p_cond[i][off[i]] = res.p_row
    if failed:
        warnings.warn(
            f"perplexity calibration missed tolerance on {failed} of {n} rows"
        )
    p = (p_cond + p_cond.T) / (2.0 * n)
    p[off] = np.maximum(p[off], AFFINITY_FLOOR)
    p /= p.sum()
    return p


def kl_and_gradient(p: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """KL(P || Q) under the Student-t kernel and its gradient in y.

    grad_i = 4 sum_j (p_ij - q_ij) w_ij (y_i - y_j), w = 1/(1 + d^2).
    Both are invariant to translating y.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = p.shape[0]
    if y.shape != (n, 2):
        raise ValueError(f"coordinates must be ({n}, 2), got {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("coordinates must be finite")
    d2 = _pairwise_sq_dists(y)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    z = w.sum()
    q = w / z
    mask = p > 0
    kl = float(np.sum(p[mask] * np.log(p[mask] / np.maximum(q[mask], AFFINITY_FLOOR))))
    m = (p - q) * w
    row = m.sum(axis=1)
    grad = 4.0 * (row[:, None] * y - m @ y)
    return kl, grad


def tsne_embed(
    vectors: np.ndarray, ids: Sequence[str], config: TsneConfig = TsneConfig()
) -> Projection:
    """Project vectors to 2-d; identical config means identical output.

    The KL divergence against the unscaled affinities is recorded every 50
    iterations once the exaggeration phase ends, and the final value is
    reported on the returned Projection.
    """
    x = np.asarray(vectors, dtype=np.float64)
    ids = tuple(ids)
    n = x.shape[0]
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} vectors")
    if n < 4:
        raise ValueError(f"need at least 4 vectors, got {n}")
    if not config.perplexity < n - 1:
        raise ValueError(
            f"perplexity {config.perplexity} must be below n - 1 = {n - 1}"
        )
    p = joint_affinities(x, config)

    rng = generator(config.seed)
    y = rng.normal(0.0, 1e-4, size=(n, 2))
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    trace: list[tuple[int, float]] = []

    for it in range(config.iterations):
        exaggerating = it < config.exaggeration_iters
        p_eff = p * config.exaggeration_factor if exaggerating else p
        kl, grad = kl_and_gradient(p_eff, y)
        if not exaggerating and (it - config.exaggeration_iters) % KL_CHECK_EVERY == 0:
            trace.append((it, kl))
        momentum = (
            config.momentum_early
            if it < config.momentum_switch_iter
            else config.momentum_late
        )
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.clip(gains, 0.01, None, out=gains)
        update = momentum * update - config.learning_rate * (gains * grad)
        y = y + update
        y = y - y.mean(axis=0)

    final_kl, _ = kl_and_gradient(p, y)
    return Projection(
        ids=ids,
        coords=y,
        final_kl=final_kl,
        config=config,
        kl_trace=tuple(trace),
    )


def points_in_polygon(coords: np.ndarray, polygon: Sequence[Sequence[float]]) -> np.ndarray:
    """Even-odd point-in-polygon mask over projection coordinates.

    The crossing test is the textbook ray cast, written so a client-side
    reimplementation in IEEE doubles produces the identical mask:
    ((yi > y) != (yj > y)) and (x < (xj - xi) * (y - yi) / (yj - yi) + xi).
    """
    coords = np.asarray(coords, dtype=np.float64)
    poly = [(float(px), float(py)) for px, py in polygon]
    if len(poly) < 3:
        raise ValueError("polygon needs at least 3 vertices")
    mask = np.zeros(coords.shape[0], dtype=bool)
    for k in range(coords.shape[0]):
        x, y = float(coords[k, 0]), float(coords[k, 1])
        inside = False
        j = len(poly) - 1
        for i in range(len(poly)):
            xi, yi = poly[i]
            xj, yj = poly[j]
            if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
                inside = not inside
            j = i
        mask[k] = inside
    return mask


# ---------------------------------------------------------------------------
# Serialization


def write_projection_csv(proj: Projection, path: str | Path) -> None:
    """CSV rows id,x,y; floats written with full round-trip precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "x", "y"])
        for rec_id, (px, py) in zip(proj.ids, proj.coords):
            writer.writerow([rec_id, repr(float(px)), repr(float(py))])


def read_projection_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray]:
    """Load id,x,y rows; returns (ids, (n, 2) coordinates)."""
    ids: list[str] = []
    coords: list[tuple[float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "x", "y"]:
            raise ValueError(f"{path}: expected header id,x,y, got {header}")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}: malformed row {row}")
            ids.append(row[0])
            coords.append((float(row[1]), float(row[2])))
    return tuple(ids), np.asarray(coords, dtype=np.float64).reshape(-1, 2)


def projection_to_points(proj: Projection) -> list[dict]:
    """JSON-friendly point list for the serving layer."""
    return [
        {"id": rec_id, "x": float(x), "y": float(y)}
        for rec_id, (x, y) in zip(proj.ids, proj.coords)
    ]
