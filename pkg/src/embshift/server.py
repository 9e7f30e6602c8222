"""HTTP API for the inspector UI.

Read endpoints are safe for any number of concurrent clients; every label
mutation funnels through one lock and lands in the append-only action log
before the response is sent, so a read issued after a relabel
acknowledgment always reflects it. Heavy computations (projection on
demand, probe training) run one at a time per session.

All errors are 4xx JSON bodies of the form {error, detail, ...}.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import audit, frechet, kernel_probe, tsne
from .dataset import DataError, Dataset, filter_by_cohort


@dataclass
class SessionState:
    """Everything one serving session holds: immutable dataset, the label
    store, named projections, trained probes, and cached shift reports."""

    dataset: Dataset
    log_path: str | Path | None = None
    store: audit.LabelStore = field(init=False)
    projections: dict[str, tsne.Projection] = field(default_factory=dict)
    probes: dict[str, kernel_probe.SvcModel | kernel_probe.SvrModel] = field(default_factory=dict)
    frechet_cache: dict[tuple, frechet.FrechetReport] = field(default_factory=dict)
    default_tsne: tsne.TsneConfig = field(default_factory=tsne.TsneConfig)
    write_lock: threading.Lock = field(default_factory=threading.Lock)
    compute_lock: threading.Lock = field(default_factory=threading.Lock)

    def __post_init__(self):
        self.store = audit.LabelStore(self.dataset, log_path=self.log_path)

    def add_projection(self, name: str, proj: tsne.Projection) -> None:
        self.projections[name] = proj

    def projection_or_compute(self, name: str) -> tsne.Projection:
        if name in self.projections:
            return self.projections[name]
        if name != "main":
            raise KeyError(name)
        with self.compute_lock:
            if "main" not in self.projections:
                ds = self.dataset
                if len(ds) < 4:
                    raise DataError("dataset too small to project")
                cfg = self.default_tsne
                if not cfg.perplexity < len(ds) - 1:
                    cfg = tsne.TsneConfig(
                        perplexity=max(2.0, (len(ds) - 2) / 3.0),
                        iterations=cfg.iterations,
                        seed=cfg.seed,
                    )
                self.projections["main"] = tsne.tsne_embed(ds.vectors(), ds.ids(), cfg)
        return self.projections["main"]


class RelabelRequest(BaseModel):
    ids: list[str]
    label_name: str
    value: str
    author: str
    note: str | None = None


class ProbeTrainRequest(BaseModel):
    task: str
    label_name: str | None = None
    positive: str | None = None
    c: float = 1.0
    gamma: float | str = "scale"
    seed: int = 0


def _error(status: int, detail: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": "request failed", "detail": detail, **extra})


def create_app(session: SessionState, frontend_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="embshift inspector API")
    ds = session.dataset

    def record_payload(rec_id: str) -> dict:
        rec = ds.record_by_id(rec_id)
        labels = session.store.current_view()[rec_id]
        return {
            "id": rec.id,
            "cohort": rec.cohort,
            "group_id": rec.group_id,
            "labels": labels,
            "confidence": rec.confidence,
        }

    @app.get("/api/dataset/summary")
    def dataset_summary():
        cohort_counts: dict[str, int] = {}
        for rec in ds.records:
            cohort_counts[rec.cohort] = cohort_counts.get(rec.cohort, 0) + 1
        return {
            "n": len(ds),
            "dim": ds.dim,
            "cohorts": cohort_counts,
            "label_schema": {k: sorted(v) for k, v in ds.label_schema.items()},
            "has_confidence": bool(np.any(~np.isnan(ds.confidences()))) if len(ds) else False,
            "seq": session.store.seq,
        }

    @app.get("/api/projection")
    def projection(name: str = Query(default="main")):
        try:
            proj = session.projection_or_compute(name)
        except KeyError:
            return _error(404, f"no projection named {name!r}")
        except DataError as exc:
            return _error(409, str(exc))
        view = session.store.current_view()
        points = []
        for rec_id, (x, y) in zip(proj.ids, proj.coords):
            rec = ds.record_by_id(rec_id)
            points.append(
                {
                    "id": rec_id,
                    "x": float(x),
                    "y": float(y),
                    "cohort": rec.cohort,
                    "labels": view[rec_id],
                    "confidence": rec.confidence,
                }
            )
        return {
            "name": name,
            "final_kl": None if np.isnan(proj.final_kl) else proj.final_kl,
            "points": points,
            "seq": session.store.seq,
        }

    @app.get("/api/records")
    def records(ids: str = Query(...)):
        wanted = [i for i in ids.split(",") if i]
        known = set(ds.ids())
        missing = [i for i in wanted if i not in known]
        if missing:
            return _error(404, f"unknown ids: {missing}", offending_ids=missing)
        return {"records": [record_payload(i) for i in wanted]}

    @app.post("/api/selection/relabel")
    def relabel(req: RelabelRequest):
        action = audit.make_action(
            req.ids, req.label_name, req.value, author=req.author, note=req.note
        )
        try:
            with session.write_lock:
                seq = session.store.apply(action)
        except DataError as exc:
            unknown = sorted(set(req.ids) - set(ds.ids()))
            return _error(422, str(exc), offending_ids=unknown)
        except ValueError as exc:
            return _error(422, str(exc), offending_ids=[])
        return {"action": audit.action_to_dict(action, seq), "seq": seq}

    @app.post("/api/probe/train")
    def probe_train(req: ProbeTrainRequest):
        if req.task not in ("svc", "svr"):
            return _error(422, f"task must be svc or svr, got {req.task!r}")
        try:
            cfg = kernel_probe.TrainConfig(c=req.c, gamma=req.gamma, seed=req.seed)
        except ValueError as exc:
            return _error(422, str(exc))
        with session.compute_lock:  # one training at a time per session
            try:
                if req.task == "svc":
                    if not req.label_name or req.positive is None:
                        return _error(422, "svc training needs label_name and positive")
                    view = session.store.current_view()
                    missing = [r.id for r in ds.records if req.label_name not in view[r.id]]
                    if missing:
                        return _error(
                            422,
                            f"label {req.label_name!r} missing on {len(missing)} records",
                        )
                    y = np.array(
                        [1.0 if view[r.id][req.label_name] == req.positive else -1.0 for r in ds.records]
                    )
                    model = kernel_probe.train_svc(ds.vectors(), y, cfg, classes=(False, True))
                else:
                    conf = ds.confidences()
                    if np.any(np.isnan(conf)):
                        return _error(422, "confidence missing on some records")
                    model = kernel_probe.train_svr(ds.vectors(), conf, cfg)
            except ValueError as exc:
                return _error(422, str(exc))
            probe_id = f"{req.task}-{len(session.probes) + 1}"
            session.probes[probe_id] = model
        return {
            "probe_id": probe_id,
            "kind": req.task,
            "converged": model.converged,
            "n_support": int(model.dual_coefs.shape[0]),
            "objective": model.objective,
        }

    @app.get("/api/metrics/accuracy")
    def metrics_accuracy(
        label_name: str = Query(...),
        reference: str = Query(...),
        b: int = Query(default=1000),
        seed: int = Query(default=0),
    ):
        if b < 2:
            return _error(422, f"b must be at least 2, got {b}")
        try:
            rep = audit.store_accuracy(session.store, label_name, reference, b, seed)
        except (DataError, ValueError) as exc:
            return _error(422, str(exc))
        return {
            "label_name": label_name,
            "reference": reference,
            "accuracy": audit.accuracy_to_dict(rep),
            "seq": session.store.seq,
        }

    @app.get("/api/frechet")
    def frechet_endpoint(
        ref: str = Query(...),
        cohort: str = Query(...),
        b: int = Query(default=1000),
        seed: int = Query(default=0),
    ):
        if b < 2:
            return _error(422, f"b must be at least 2, got {b}")
        present = {r.cohort for r in ds.records}
        missing = [c for c in (ref, cohort) if c not in present]
        if missing:
            return _error(404, f"unknown cohorts: {missing}")
        key = (ref, cohort, b, seed)
        if key not in session.frechet_cache:
            with session.compute_lock:
                if key not in session.frechet_cache:
                    session.frechet_cache[key] = frechet.bootstrap_frechet(
                        filter_by_cohort(ds, {ref}).vectors(),
                        filter_by_cohort(ds, {cohort}).vectors(),
                        b=b,
                        seed=seed,
                    )
        rep = session.frechet_cache[key]
        return {"ref": ref, "cohort": cohort, **frechet.report_to_dict(rep)}

    @app.get("/api/actions")
    def actions():
        return {
            "actions": [
                audit.action_to_dict(a, i + 1)
                for i, a in enumerate(session.store.actions)
            ],
            "seq": session.store.seq,
        }

    if frontend_dir is not None:
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=Path(frontend_dir), html=True), name="ui")

    return app
