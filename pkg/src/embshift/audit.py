"""Audit workflows: bootstrapped metrics, probe denoising, and relabeling.

Metrics are percentile bootstraps over index resamples, deterministic in
the seed. Label corrections are event-sourced: a LabelStore never mutates
the base labels of its dataset, it folds an append-only action log over
them, so any past state can be replayed and audited.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._rng import generator
from .dataset import DataError, Dataset, concat
from .kernel_probe import (
    SvcModel,
    TrainConfig,
    decision_values,
    train_svc,
    train_svr,
)

PEARSON_REDRAW_LIMIT = 10


@dataclass(frozen=True)
class AccuracyReport:
    point: float
    ci_lo: float
    ci_hi: float
    n: int
    b: int
    seed: int


@dataclass(frozen=True)
class CorrelationReport:
    r: float
    ci_lo: float
    ci_hi: float
    n: int
    b: int
    seed: int
    degenerate_resamples: int = 0


def accuracy_ci(
    pred: Sequence, truth: Sequence, b: int = 1000, seed: int = 0
) -> AccuracyReport:
    """Fraction equal, with a percentile bootstrap over index resamples."""
    pred = list(pred)
    truth = list(truth)
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(truth)}")
    n = len(pred)
    if n == 0:
        raise ValueError("empty input")
    if b < 2:
        raise ValueError(f"need at least 2 bootstrap resamples, got {b}")
    eq = np.fromiter((a == t for a, t in zip(pred, truth)), dtype=np.float64, count=n)
    point = float(eq.mean())
    rng = generator(seed)
    idx = rng.integers(0, n, size=(b, n))
    stats = eq[idx].mean(axis=1)
    ci_lo, ci_hi = np.percentile(stats, [2.5, 97.5])
    return AccuracyReport(
        point=point, ci_lo=float(ci_lo), ci_hi=float(ci_hi), n=n, b=b, seed=seed
    )


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation; rejects constant inputs."""
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValueError("x and y must be 1-d and equally long")
    if xv.shape[0] < 2:
        raise ValueError("need at least 2 pairs")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    ssx = float(xc @ xc)
    ssy = float(yc @ yc)
    if ssx == 0.0 or ssy == 0.0:
        raise ValueError("constant input: correlation undefined")
    r = float(xc @ yc) / math.sqrt(ssx * ssy)
    return min(1.0, max(-1.0, r))


def pearson_ci(
    x: Sequence[float], y: Sequence[float], b: int = 1000, seed: int = 0
) -> CorrelationReport:
    """Percentile bootstrap of r over index resamples.

    Resamples that come out constant in x or y are redrawn up to 10 times,
    then skipped; the skip count lands in the report.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    point = pearson(xv, yv)
    if b < 2:
        raise ValueError(f"need at least 2 bootstrap resamples, got {b}")
    n = xv.shape[0]
    rng = generator(seed)
    boot: list[float] = []
    degenerate = 0
    for _ in range(b):
        r_val = None
        for _attempt in range(PEARSON_REDRAW_LIMIT + 1):
            idx = rng.integers(0, n, n)
            xs = xv[idx]
            ys = yv[idx]
            if np.ptp(xs) == 0.0 or np.ptp(ys) == 0.0:
                continue
            xc = xs - xs.mean()
            yc = ys - ys.mean()
            r_val = float(xc @ yc) / math.sqrt(float(xc @ xc) * float(yc @ yc))
            break
        if r_val is None:
            degenerate += 1
        else:
            boot.append(min(1.0, max(-1.0, r_val)))
    if not boot:
        raise ValueError("all bootstrap resamples were degenerate")
    ci_lo, ci_hi = np.percentile(np.asarray(boot), [2.5, 97.5])
    return CorrelationReport(
        r=point,
        ci_lo=float(ci_lo),
        ci_hi=float(ci_hi),
        n=n,
        b=b,
        seed=seed,
        degenerate_resamples=degenerate,
    )


def accuracy_to_dict(rep: AccuracyReport) -> dict:
    return {
        "point": rep.point, "ci": [rep.ci_lo, rep.ci_hi],
        "n": rep.n, "b": rep.b, "seed": rep.seed,
    }


def correlation_to_dict(rep: CorrelationReport) -> dict:
    return {
        "r": rep.r, "ci": [rep.ci_lo, rep.ci_hi], "n": rep.n,
        "b": rep.b, "seed": rep.seed,
        "degenerate_resamples": rep.degenerate_resamples,
    }


# ---------------------------------------------------------------------------
# Event-sourced relabeling


@dataclass(frozen=True)
class RelabelAction:
    """Force one label value onto a selection of record ids."""

    selection: frozenset[str]
    label_name: str
    new_value: str
    author: str
    timestamp: str
    note: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "selection", frozenset(self.selection))
        if not self.selection:
            raise ValueError("selection must be non-empty")


def make_action(
    ids: Iterable[str],
    label_name: str,
    new_value: str,
    author: str,
    note: str | None = None,
    timestamp: str | None = None,
) -> RelabelAction:
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat()
    return RelabelAction(
        selection=frozenset(ids),
        label_name=label_name,
        new_value=new_value,
        author=author,
        timestamp=timestamp,
        note=note,
    )


def action_to_dict(action: RelabelAction, seq: int) -> dict:
    return {
        "seq": seq,
        "ids": sorted(action.selection),
        "label_name": action.label_name,
        "value": action.new_value,
        "author": action.author,
        "timestamp": action.timestamp,
        "note": action.note,
    }


def action_from_dict(d: Mapping) -> RelabelAction:
    return RelabelAction(
        selection=frozenset(d["ids"]),
        label_name=d["label_name"],
        new_value=d["value"],
        author=d["author"],
        timestamp=d["timestamp"],
        note=d.get("note"),
    )


class LabelStore:
    """Base labels plus an append-only action log; the view is their fold.

    Mutations must be externally serialized (single writer); reading the
    current view is safe at any time. When log_path is set, every applied
    action is appended to the newline-delimited JSON file immediately.
    """

    def __init__(self, dataset: Dataset, log_path: str | Path | None = None):
        self._dataset = dataset
        self._schema = dataset.label_schema
        self._ids = set(dataset.ids())
        self._base = {r.id: dict(r.labels) for r in dataset.records}
        self._view = {r.id: dict(r.labels) for r in dataset.records}
        self._actions: list[RelabelAction] = []
        self._log_path = Path(log_path) if log_path is not None else None
        if self._log_path is not None and self._log_path.exists():
            for action in load_action_log(self._log_path):
                self._apply_to_view(action)
                self._actions.append(action)

    @property
    def dataset(self) -> Dataset:
        return self._dataset

    @property
    def actions(self) -> tuple[RelabelAction, ...]:
        return tuple(self._actions)

    @property
    def seq(self) -> int:
        """Sequence number of the latest action (0 when none)."""
        return len(self._actions)

    def _validate(self, action: RelabelAction) -> None:
        unknown = sorted(action.selection - self._ids)
        if unknown:
            raise DataError(f"unknown ids: {unknown}")
        if action.label_name not in self._schema:
            raise DataError(f"unknown label {action.label_name!r}")
        allowed = self._schema[action.label_name]
        if action.new_value not in allowed:
            raise DataError(
                f"value {action.new_value!r} not allowed for label "
                f"{action.label_name!r} (schema: {sorted(allowed)})"
            )

    def _apply_to_view(self, action: RelabelAction) -> None:
        for rec_id in action.selection:
            self._view[rec_id][action.label_name] = action.new_value

    def apply(self, action: RelabelAction) -> int:
        """Validate, append, update the view; returns the sequence number."""
        self._validate(action)
        self._actions.append(action)
        self._apply_to_view(action)
        seq = len(self._actions)
        if self._log_path is not None:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(action_to_dict(action, seq)) + "\n")
                fh.flush()
        return seq

    def current_view(self) -> dict[str, dict[str, str]]:
        return {rec_id: dict(labels) for rec_id, labels in self._view.items()}

    def labels_for(self, label_name: str) -> dict[str, str | None]:
        return {rec_id: labels.get(label_name) for rec_id, labels in self._view.items()}

    def replay(self) -> dict[str, dict[str, str]]:
        """Recompute the view from base + log; equals current_view always."""
        view = {rec_id: dict(labels) for rec_id, labels in self._base.items()}
        for action in self._actions:
            for rec_id in action.selection:
                view[rec_id][action.label_name] = action.new_value
        return view


def relabel_selection(store: LabelStore, action: RelabelAction) -> dict[str, dict[str, str]]:
    """Append one action and return the updated view."""
    store.apply(action)
    return store.current_view()


def store_accuracy(
    store: LabelStore, label: str, reference: str, b: int = 1000, seed: int = 0
) -> AccuracyReport:
    """Accuracy of the store's current labels against a reference label.

    Shared by the CLI and the serving layer so their numbers are identical
    for identical state. Records missing either value are skipped; order
    follows the dataset.
    """
    view = store.current_view()
    pred, truth = [], []
    for rec in store.dataset.records:
        labels = view[rec.id]
        if label in labels and reference in labels:
            pred.append(labels[label])
            truth.append(labels[reference])
    if not pred:
        raise DataError(
            f"no records carry both label {label!r} and reference {reference!r}"
        )
    return accuracy_ci(pred, truth, b=b, seed=seed)


def load_action_log(path: str | Path) -> list[RelabelAction]:
    actions = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                actions.append(action_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}:{line_no}: bad action record: {exc}") from None
    return actions


# ---------------------------------------------------------------------------
# Probe-based denoising


@dataclass(frozen=True)
class DenoiseResult:
    """Probe predictions on the test split plus the side-by-side reports.

    predictions maps test id -> bool (positive class or not); the reports
    are present only when clean reference labels were supplied.
    """

    predictions: dict[str, bool]
    decision_values: dict[str, float]
    model: SvcModel
    probe_accuracy: AccuracyReport | None = None
    noisy_agreement: AccuracyReport | None = None


def denoise_via_probe(
    ds_train: Dataset,
    ds_test: Dataset,
    label_name: str,
    positive_value: str,
    cfg: TrainConfig = TrainConfig(),
    clean_labels: Mapping[str, str] | None = None,
    b: int = 1000,
    seed: int = 0,
) -> DenoiseResult:
    """Train a classifier on noisy train labels, predict the test split.

    Input labels are never mutated; when clean_labels covers the test ids,
    the result reports probe-vs-clean accuracy next to noisy-vs-clean
    agreement, which is the denoising payoff being measured.
    """
    if label_name not in ds_train.label_schema:
        raise DataError(f"label {label_name!r} missing from training data")
    labeled = [r for r in ds_train.records if label_name in r.labels]
    if not labeled:
        raise DataError(f"no training records carry label {label_name!r}")
    x = np.stack([r.vector for r in labeled])
    y = np.array(
        [1.0 if r.labels[label_name] == positive_value else -1.0 for r in labeled]
    )
    model = train_svc(x, y, cfg, classes=(False, True))

    dv = decision_values(model, ds_test.vectors())
    test_ids = ds_test.ids()
    predictions = {rec_id: bool(v >= 0) for rec_id, v in zip(test_ids, dv)}
    dv_map = {rec_id: float(v) for rec_id, v in zip(test_ids, dv)}

    probe_report = None
    agreement_report = None
    if clean_labels is not None:
        missing = [rec_id for rec_id in test_ids if rec_id not in clean_labels]
        if missing:
            raise DataError(
                f"clean labels missing for {len(missing)} test ids, e.g. {missing[:3]}"
            )
        clean = [clean_labels[rec_id] == positive_value for rec_id in test_ids]
        probe_report = accuracy_ci(
            [predictions[rec_id] for rec_id in test_ids], clean, b=b, seed=seed
        )
        unlabeled = [r.id for r in ds_test.records if label_name not in r.labels]
        if unlabeled:
            raise DataError(
                f"noisy label {label_name!r} missing on {len(unlabeled)} test records"
            )
        noisy = [r.labels[label_name] == positive_value for r in ds_test.records]
        agreement_report = accuracy_ci(noisy, clean, b=b, seed=seed)
    return DenoiseResult(
        predictions=predictions,
        decision_values=dv_map,
        model=model,
        probe_accuracy=probe_report,
        noisy_agreement=agreement_report,
    )


# ---------------------------------------------------------------------------
# Detector-performance prediction scenarios

SCENARIO_NAMES = (
    "train_israel_test_israel",
    "train_israel_test_japan",
    "train_union_test_japan",
)

NLL_FLOOR = 1e-6


def nll_transform(confidences: np.ndarray) -> np.ndarray:
    """-log(confidence), floored away from zero.

    Offered as an alternative regression target; the default everywhere is
    the raw confidence in [0, 1].
    """
    return -np.log(np.clip(np.asarray(confidences, dtype=np.float64), NLL_FLOOR, None))


def _require_confidence(ds: Dataset, name: str) -> np.ndarray:
    conf = ds.confidences()
    if np.any(np.isnan(conf)):
        missing = int(np.isnan(conf).sum())
        raise DataError(f"{name}: confidence missing on {missing} records")
    return conf


def run_table5_scenarios(
    israel_train: Dataset,
    israel_test: Dataset,
    japan_train: Dataset,
    japan_test: Dataset,
    cfg: TrainConfig = TrainConfig(),
    b: int = 1000,
    seed: int = 0,
    nll: bool = False,
) -> list[CorrelationReport]:
    """Three regressor transfer scenarios, reported in SCENARIO_NAMES order:
    in-domain (train/test Israel), transfer (train Israel, test Japan), and
    union (train Israel+Japan subset, test Japan). Row r's bootstrap uses
    the stream (seed, r); rows share no mutable state. With nll=True the
    regression target is -log(confidence) on both sides.
    """
    confs = {
        "israel_train": _require_confidence(israel_train, "israel_train"),
        "israel_test": _require_confidence(israel_test, "israel_test"),
        "japan_train": _require_confidence(japan_train, "japan_train"),
        "japan_test": _require_confidence(japan_test, "japan_test"),
    }
    if nll:
        confs = {k: nll_transform(v) for k, v in confs.items()}
    overlap = set(japan_train.ids()) & set(japan_test.ids())
    if overlap:
        raise DataError(
            f"id overlap between japan train and test: {sorted(overlap)[:5]}"
        )

    union = concat([israel_train, japan_train])
    union_conf = np.concatenate([confs["israel_train"], confs["japan_train"]])
    rows = [
        (israel_train.vectors(), confs["israel_train"], israel_test, confs["israel_test"]),
        (israel_train.vectors(), confs["israel_train"], japan_test, confs["japan_test"]),
        (union.vectors(), union_conf, japan_test, confs["japan_test"]),
    ]
    reports = []
    for row_idx, (train_x, train_t, test_ds, test_t) in enumerate(rows):
        model = train_svr(train_x, train_t, cfg)
        preds = decision_values(model, test_ds.vectors())
        row_seed_stream = generator(seed, row_idx)
        row_seed = int(row_seed_stream.integers(0, 2**63 - 1))
        reports.append(pearson_ci(preds, test_t, b=b, seed=row_seed))
    return reports
