"""Command-line entry points for every workflow.

One binary, subcommands per workflow. Every command takes --seed, --out,
and --format json|csv, echoes its effective configuration into the primary
JSON artifact, and renders a matplotlib figure next to the delimited
output where the report has something to draw. Primary artifacts are
byte-identical across reruns; wall-clock metadata goes to a separate
.meta.json sidecar.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
non-convergence (the artifact is still written, flagged converged=false).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import audit, figures, frechet, kernel_probe, synth, tsne
from .dataset import (
    DataError,
    Dataset,
    SplitSpec,
    filter_by_cohort,
    load_binary,
    load_csv,
    write_binary,
    write_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NONCONVERGED = 3


class UsageError(Exception):
    """Bad flag combinations or out-of-range values caught before work."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _write_meta(out_dir: Path, name: str, args, started: float) -> None:
    meta = {
        "command": name,
        "argv": sys.argv[1:],
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "duration_s": round(time.time() - started, 3),
    }
    _write_json(out_dir / f"{name}.meta.json", meta)


def _load_dataset(path: str) -> Dataset:
    p = Path(path)
    if p.suffix == ".json":
        return load_binary(p)
    return load_csv(p)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _gamma_flag(value: str):
    if value == "scale":
        return "scale"
    try:
        gamma = float(value)
    except ValueError:
        raise UsageError(f"--gamma must be a positive number or 'scale', got {value!r}")
    if gamma <= 0:
        raise UsageError(f"--gamma must be positive, got {gamma}")
    return gamma


def _train_config(args) -> kernel_probe.TrainConfig:
    return kernel_probe.TrainConfig(
        c=args.c,
        epsilon=args.epsilon,
        tol=args.tol,
        max_iter=args.max_iter,
        seed=args.seed,
        gamma=_gamma_flag(args.gamma),
    )


def _config_echo(args, keys) -> dict:
    return {k: getattr(args, k) for k in keys}


def _require_b(b: int) -> None:
    if b < 2:
        raise UsageError(f"--b must be at least 2, got {b}")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_synth(args) -> int:
    out = _out_dir(args)
    spec = synth.load_spec(args.spec)
    if args.seed is not None:
        spec = synth.SynthSpec(
            dim=spec.dim,
            cohorts=spec.cohorts,
            label_plans=spec.label_plans,
            confidence_plan=spec.confidence_plan,
            seed=args.seed,
        )
    ds, truth = synth.generate(spec)
    data_path = out / "data.csv"
    write_csv(ds, data_path)
    artifacts = [str(data_path)]
    if args.binary:
        manifest = out / "data.json"
        write_binary(ds, manifest)
        artifacts.append(str(manifest))
    truth_path = out / "truth.json"
    synth.save_truth(truth, truth_path)
    artifacts.append(str(truth_path))
    report = {
        "config": {"spec": str(args.spec), "seed": spec.seed, "format": args.format},
        "n": len(ds),
        "dim": ds.dim,
        "cohorts": {name: sum(1 for r in ds.records if r.cohort == name) for name in ds.cohorts()},
        "fd_matrix": truth.fd_matrix,
        "artifacts": artifacts,
    }
    _write_json(out / "synth_report.json", report)
    print(f"synth: wrote {len(ds)} records ({ds.dim}-d) to {data_path}")
    return EXIT_OK


def cmd_frechet(args) -> int:
    _require_b(args.b)
    out = _out_dir(args)
    ds = _load_dataset(args.data)
    cohorts = [c for c in args.cohorts.split(",") if c]
    if not cohorts:
        raise UsageError("--cohorts must name at least one cohort")
    present = set(r.cohort for r in ds.records)
    missing = [c for c in [args.ref, *cohorts] if c not in present]
    if missing:
        raise DataError(f"unknown cohorts: {missing} (present: {sorted(present)})")
    ref_x = filter_by_cohort(ds, {args.ref}).vectors()
    reports = {}
    for name in cohorts:
        x = filter_by_cohort(ds, {name}).vectors()
        reports[name] = frechet.bootstrap_frechet(
            ref_x, x, b=args.b, seed=args.seed, ridge_scale=args.ridge_scale
        )
    tests = []
    for i, a in enumerate(cohorts):
        for b_name in cohorts[i + 1 :]:
            tests.append(frechet.shift_z_test(reports[a], reports[b_name], a, b_name))
    payload = {
        "config": _config_echo(args, ["data", "ref", "cohorts", "b", "seed", "ridge_scale", "format"]),
        "reference": args.ref,
        "reports": {
            name: frechet.report_to_dict(rep, full=args.full)
            for name, rep in reports.items()
        },
        "tests": [frechet.shift_to_dict(t) for t in tests],
    }
    _write_json(out / "frechet_report.json", payload)
    if args.format == "csv":
        with open(out / "frechet_reports.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["cohort", "point", "ci_lo", "ci_hi", "b", "seed"])
            for name in cohorts:
                rep = reports[name]
                w.writerow([name, repr(rep.point), repr(rep.ci_lo), repr(rep.ci_hi), rep.b, rep.seed])
        with open(out / "frechet_tests.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["pair_a", "pair_b", "z", "p"])
            for t in tests:
                w.writerow([t.pair_a, t.pair_b, repr(t.z), repr(t.p)])
    figures.interval_plot(
        cohorts,
        [reports[c].point for c in cohorts],
        [(reports[c].ci_lo, reports[c].ci_hi) for c in cohorts],
        out / "frechet_cis.png",
        ylabel="squared Frechet distance",
        title=f"shift vs {args.ref}",
    )
    worst = max(reports, key=lambda c: reports[c].point)
    print(
        f"frechet: {len(cohorts)} cohorts vs {args.ref}; farthest {worst} "
        f"(fd {reports[worst].point:.4g})"
    )
    return EXIT_OK


def cmd_tsne(args) -> int:
    out = _out_dir(args)
    ds = _load_dataset(args.data)
    if args.cohorts:
        ds = filter_by_cohort(ds, set(args.cohorts.split(",")))
    n = len(ds)
    if n < 4:
        raise DataError(f"need at least 4 records for a projection, got {n}")
    if not args.perplexity < n - 1:
        raise UsageError(
            f"--perplexity {args.perplexity} must be below n - 1 = {n - 1}"
        )
    config = tsne.TsneConfig(
        perplexity=args.perplexity,
        iterations=args.iterations,
        seed=args.seed,
        exaggeration_factor=args.exaggeration,
        learning_rate=args.learning_rate,
    )
    proj = tsne.tsne_embed(ds.vectors(), ds.ids(), config)
    tsne.write_projection_csv(proj, out / "projection.csv")
    report = {
        "config": {
            "data": args.data,
            "cohorts": args.cohorts,
            "perplexity": args.perplexity,
            "iterations": args.iterations,
            "exaggeration": args.exaggeration,
            "learning_rate": args.learning_rate,
            "seed": args.seed,
            "format": args.format,
        },
        "n": n,
        "final_kl": proj.final_kl,
        "kl_trace": [[it, kl] for it, kl in proj.kl_trace],
    }
    _write_json(out / "tsne_report.json", report)
    figures.scatter_projection(
        proj.coords,
        [r.cohort for r in ds.records],
        out / "projection.png",
        title="t-SNE projection by cohort",
    )
    print(f"tsne: projected {n} records, final KL {proj.final_kl:.4f}")
    return EXIT_OK


def _binary_labels(ds: Dataset, label: str, positive: str) -> np.ndarray:
    missing = [r.id for r in ds.records if label not in r.labels]
    if missing:
        raise DataError(f"label {label!r} missing on {len(missing)} records")
    return np.array(
        [1.0 if r.labels[label] == positive else -1.0 for r in ds.records]
    )


def cmd_probe_train(args) -> int:
    out = _out_dir(args)
    ds = _load_dataset(args.data)
    cfg = _train_config(args)
    if args.task == "svc":
        if not args.label or args.positive is None:
            raise UsageError("--task svc requires --label and --positive")
        y = _binary_labels(ds, args.label, args.positive)
        model = kernel_probe.train_svc(ds.vectors(), y, cfg, classes=(False, True))
    else:
        conf = ds.confidences()
        if np.any(np.isnan(conf)):
            raise DataError("confidence missing on some records; svr needs it")
        if args.nll:
            conf = audit.nll_transform(conf)
        model = kernel_probe.train_svr(ds.vectors(), conf, cfg)
    kernel_probe.save_model(model, out / "model.json")
    report = {
        "config": {
            "data": args.data,
            "task": args.task,
            "label": args.label,
            "positive": args.positive,
            "c": args.c,
            "gamma": args.gamma,
            "epsilon": args.epsilon,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "nll": args.nll,
            "seed": args.seed,
            "format": args.format,
        },
        "converged": model.converged,
        "n_support": int(model.dual_coefs.shape[0]),
        "objective": model.objective,
        "n_iter": model.n_iter,
        "gamma_effective": model.params.gamma,
        "artifacts": [str(out / "model.json")],
    }
    _write_json(out / "probe_train_report.json", report)
    print(
        f"probe-train: {args.task} on {len(ds)} records, "
        f"{report['n_support']} support vectors, converged={model.converged}"
    )
    return EXIT_OK if model.converged else EXIT_NONCONVERGED


def cmd_probe_eval(args) -> int:
    _require_b(args.b)
    out = _out_dir(args)
    ds = _load_dataset(args.data)
    model = kernel_probe.load_model(args.model)
    config = _config_echo(args, ["data", "model", "label", "positive", "nll", "b", "seed", "format"])
    if isinstance(model, kernel_probe.SvcModel):
        if not args.label or args.positive is None:
            raise UsageError("evaluating a classifier requires --label and --positive")
        y = _binary_labels(ds, args.label, args.positive)
        dv = kernel_probe.decision_values(model, ds.vectors())
        pred = dv >= 0
        rep = audit.accuracy_ci(pred.tolist(), (y > 0).tolist(), b=args.b, seed=args.seed)
        payload = {"config": config, "kind": "svc", "accuracy": audit.accuracy_to_dict(rep)}
        figures.accuracy_comparison(
            ["probe"], {"probe": (rep.point, rep.ci_lo, rep.ci_hi)},
            out / "eval_accuracy.png", title="probe accuracy",
        )
        summary = f"accuracy {rep.point:.4f} [{rep.ci_lo:.4f}, {rep.ci_hi:.4f}]"
    else:
        conf = ds.confidences()
        if np.any(np.isnan(conf)):
            raise DataError("confidence missing on some records; svr eval needs it")
        if args.nll:
            conf = audit.nll_transform(conf)
        pred = kernel_probe.decision_values(model, ds.vectors())
        rep = audit.pearson_ci(pred, conf, b=args.b, seed=args.seed)
        payload = {"config": config, "kind": "svr", "pearson": audit.correlation_to_dict(rep)}
        figures.scatter_xy(
            pred, conf, out / "eval_scatter.png",
            xlabel="predicted confidence", ylabel="actual confidence",
            title=f"r = {rep.r:.3f}",
        )
        summary = f"pearson {rep.r:.4f} [{rep.ci_lo:.4f}, {rep.ci_hi:.4f}]"
    if args.format == "csv":
        with open(out / "eval_report.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            if payload["kind"] == "svc":
                w.writerow(["point", "ci_lo", "ci_hi", "n", "b", "seed"])
                w.writerow([repr(rep.point), repr(rep.ci_lo), repr(rep.ci_hi), rep.n, rep.b, rep.seed])
            else:
                w.writerow(["r", "ci_lo", "ci_hi", "n", "b", "seed"])
                w.writerow([repr(rep.r), repr(rep.ci_lo), repr(rep.ci_hi), rep.n, rep.b, rep.seed])
    _write_json(out / "eval_report.json", payload)
    print(f"probe-eval: {summary}")
    return EXIT_OK


def cmd_denoise(args) -> int:
    _require_b(args.b)
    out = _out_dir(args)
    train = _load_dataset(args.train)
    test = _load_dataset(args.test)
    clean = None
    if args.truth and args.clean_label:
        raise UsageError("--truth and --clean-label are mutually exclusive")
    if args.truth:
        truth = synth.load_truth(args.truth)
        if args.label not in truth.clean_labels:
            raise DataError(f"truth file has no clean labels for {args.label!r}")
        clean = truth.clean_labels[args.label]
    elif args.clean_label:
        clean = {}
        for rec in test.records:
            if args.clean_label in rec.labels:
                clean[rec.id] = rec.labels[args.clean_label]
    cfg = _train_config(args)
    res = audit.denoise_via_probe(
        train, test, args.label, args.positive, cfg,
        clean_labels=clean, b=args.b, seed=args.seed,
    )
    with open(out / "predictions.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "predicted_positive", "decision_value"])
        for rec_id in test.ids():
            w.writerow(
                [rec_id, int(res.predictions[rec_id]), repr(res.decision_values[rec_id])]
            )
    payload = {
        "config": {
            "train": args.train,
            "test": args.test,
            "label": args.label,
            "positive": args.positive,
            "truth": args.truth,
            "clean_label": args.clean_label,
            "c": args.c,
            "gamma": args.gamma,
            "tol": args.tol,
            "seed": args.seed,
            "b": args.b,
            "format": args.format,
        },
        "converged": res.model.converged,
        "n_train": len(train),
        "n_test": len(test),
        "probe_accuracy": audit.accuracy_to_dict(res.probe_accuracy) if res.probe_accuracy else None,
        "noisy_agreement": audit.accuracy_to_dict(res.noisy_agreement) if res.noisy_agreement else None,
    }
    _write_json(out / "denoise_report.json", payload)
    if res.probe_accuracy and res.noisy_agreement:
        figures.accuracy_comparison(
            ["noisy labels", "probe"],
            {
                "noisy labels": (
                    res.noisy_agreement.point,
                    res.noisy_agreement.ci_lo,
                    res.noisy_agreement.ci_hi,
                ),
                "probe": (
                    res.probe_accuracy.point,
                    res.probe_accuracy.ci_lo,
                    res.probe_accuracy.ci_hi,
                ),
            },
            out / "denoise_accuracy.png",
            title="label denoising",
        )
        print(
            f"denoise: probe {res.probe_accuracy.point:.4f} vs "
            f"noisy {res.noisy_agreement.point:.4f}"
        )
    else:
        print(f"denoise: predictions written for {len(test)} records (no clean reference)")
    return EXIT_OK if res.model.converged else EXIT_NONCONVERGED


def cmd_predict_perf(args) -> int:
    _require_b(args.b)
    out = _out_dir(args)
    il_tr = _load_dataset(args.israel_train)
    il_te = _load_dataset(args.israel_test)
    jp_tr = _load_dataset(args.japan_train)
    jp_te = _load_dataset(args.japan_test)
    cfg = _train_config(args)
    reports = audit.run_table5_scenarios(
        il_tr, il_te, jp_tr, jp_te, cfg, b=args.b, seed=args.seed, nll=args.nll
    )
    rows = [
        {"name": name, **audit.correlation_to_dict(rep)}
        for name, rep in zip(audit.SCENARIO_NAMES, reports)
    ]
    payload = {
        "config": {
            "israel_train": args.israel_train,
            "israel_test": args.israel_test,
            "japan_train": args.japan_train,
            "japan_test": args.japan_test,
            "c": args.c,
            "gamma": args.gamma,
            "epsilon": args.epsilon,
            "tol": args.tol,
            "nll": args.nll,
            "b": args.b,
            "seed": args.seed,
            "format": args.format,
        },
        "rows": rows,
    }
    _write_json(out / "table5_report.json", payload)
    if args.format == "csv":
        with open(out / "table5_rows.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["name", "r", "ci_lo", "ci_hi", "n", "b", "seed"])
            for row in rows:
                w.writerow(
                    [row["name"], repr(row["r"]), repr(row["ci"][0]), repr(row["ci"][1]),
                     row["n"], row["b"], row["seed"]]
                )
    figures.interval_plot(
        [r["name"] for r in rows],
        [r["r"] for r in rows],
        [tuple(r["ci"]) for r in rows],
        out / "table5_correlations.png",
        ylabel="Pearson r",
        title="detector-confidence prediction",
    )
    print(
        "predict-perf: "
        + ", ".join(f"{r['name']}={r['r']:.3f}" for r in rows)
    )
    return EXIT_OK


def cmd_accuracy(args) -> int:
    _require_b(args.b)
    out = _out_dir(args)
    ds = _load_dataset(args.data)
    store = audit.LabelStore(ds, log_path=args.actions)
    rep = audit.store_accuracy(store, args.label, args.reference, args.b, args.seed)
    payload = {
        "config": _config_echo(args, ["data", "label", "reference", "actions", "b", "seed", "format"]),
        "seq": store.seq,
        "accuracy": audit.accuracy_to_dict(rep),
    }
    _write_json(out / "accuracy_report.json", payload)
    figures.accuracy_comparison(
        [args.label],
        {args.label: (rep.point, rep.ci_lo, rep.ci_hi)},
        out / "accuracy.png",
        title=f"{args.label} vs {args.reference}",
    )
    print(f"accuracy: {rep.point:.6f} [{rep.ci_lo:.6f}, {rep.ci_hi:.6f}] over {rep.n} records")
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import server

    ds = _load_dataset(args.data)
    log_path = args.actions_log or (str(Path(args.data).with_suffix("")) + ".actions.ndjson")
    session = server.SessionState(dataset=ds, log_path=log_path)
    if args.projection:
        ids, coords = tsne.read_projection_csv(args.projection)
        session.add_projection(
            "main",
            tsne.Projection(
                ids=ids, coords=coords, final_kl=float("nan"), config=tsne.TsneConfig()
            ),
        )
    session.default_tsne = tsne.TsneConfig(
        perplexity=args.perplexity, iterations=args.iterations, seed=args.seed
    )
    frontend = None
    if args.frontend:
        frontend = Path(args.frontend)
        if not (frontend / "index.html").exists():
            raise DataError(f"no index.html under {frontend}")
    app = server.create_app(session, frontend_dir=frontend)
    import uvicorn

    print(f"serving {len(ds)} records on {args.host}:{args.port} (log: {log_path})")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser assembly


def _add_common(sp, with_b=True):
    sp.add_argument("--seed", type=int, default=0, help="PRNG seed (default 0)")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    if with_b:
        sp.add_argument("--b", type=int, default=1000, help="bootstrap resamples")


def _add_train_flags(sp):
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--gamma", default="scale")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--max-iter", type=int, default=None, dest="max_iter")


def build_parser() -> _Parser:
    parser = _Parser(prog="embshift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset from a spec file")
    sp.add_argument("--spec", required=True)
    sp.add_argument("--binary", action="store_true", help="also write the binary format")
    sp.add_argument("--seed", type=int, default=None, help="override the spec seed")
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_synth, name="synth")

    sp = sub.add_parser("frechet", help="pairwise shift reports against a reference cohort")
    sp.add_argument("--data", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--cohorts", required=True, help="comma-separated cohort names")
    sp.add_argument("--ridge-scale", type=float, default=frechet.DEFAULT_RIDGE_SCALE, dest="ridge_scale")
    sp.add_argument("--full", action="store_true", help="include boot arrays in the JSON")
    _add_common(sp)
    sp.set_defaults(func=cmd_frechet, name="frechet")

    sp = sub.add_parser("tsne", help="project embeddings to 2-d for inspection")
    sp.add_argument("--data", required=True)
    sp.add_argument("--cohorts", default=None)
    sp.add_argument("--perplexity", type=float, default=30.0)
    sp.add_argument("--iterations", type=int, default=1000)
    sp.add_argument("--exaggeration", type=float, default=12.0)
    sp.add_argument("--learning-rate", type=float, default=200.0, dest="learning_rate")
    _add_common(sp, with_b=False)
    sp.set_defaults(func=cmd_tsne, name="tsne")

    sp = sub.add_parser("probe-train", help="train an svc/svr probe on embeddings")
    sp.add_argument("--data", required=True)
    sp.add_argument("--task", choices=["svc", "svr"], required=True)
    sp.add_argument("--label", default=None)
    sp.add_argument("--positive", default=None)
    sp.add_argument("--nll", action="store_true",
                    help="regress -log(confidence) instead of raw confidence")
    _add_train_flags(sp)
    _add_common(sp, with_b=False)
    sp.set_defaults(func=cmd_probe_train, name="probe-train")

    sp = sub.add_parser("probe-eval", help="evaluate a saved probe on a dataset")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--label", default=None)
    sp.add_argument("--positive", default=None)
    sp.add_argument("--nll", action="store_true",
                    help="evaluate against -log(confidence) targets")
    _add_common(sp)
    sp.set_defaults(func=cmd_probe_eval, name="probe-eval")

    sp = sub.add_parser("denoise", help="train on noisy labels, report probe vs heuristic")
    sp.add_argument("--train", required=True)
    sp.add_argument("--test", required=True)
    sp.add_argument("--label", required=True)
    sp.add_argument("--positive", required=True)
    sp.add_argument("--truth", default=None, help="ground-truth JSON with clean labels")
    sp.add_argument("--clean-label", default=None, dest="clean_label",
                    help="label column on the test set holding clean values")
    _add_train_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_denoise, name="denoise")

    sp = sub.add_parser("predict-perf", help="three-scenario detector-confidence prediction")
    sp.add_argument("--israel-train", required=True, dest="israel_train")
    sp.add_argument("--israel-test", required=True, dest="israel_test")
    sp.add_argument("--japan-train", required=True, dest="japan_train")
    sp.add_argument("--japan-test", required=True, dest="japan_test")
    sp.add_argument("--nll", action="store_true",
                    help="regress -log(confidence) instead of raw confidence")
    _add_train_flags(sp)
    _add_common(sp)
    sp.set_defaults(func=cmd_predict_perf, name="predict-perf")

    sp = sub.add_parser("accuracy", help="label accuracy under the current action log")
    sp.add_argument("--data", required=True)
    sp.add_argument("--label", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--actions", default=None, help="newline-delimited JSON action log")
    _add_common(sp)
    sp.set_defaults(func=cmd_accuracy, name="accuracy")

    sp = sub.add_parser("serve", help="HTTP API for the inspector UI")
    sp.add_argument("--data", required=True)
    sp.add_argument("--actions-log", default=None, dest="actions_log")
    sp.add_argument("--projection", default=None, help="precomputed projection CSV")
    sp.add_argument("--perplexity", type=float, default=30.0)
    sp.add_argument("--iterations", type=int, default=500)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--frontend", default=None,
                    help="directory with the built inspector UI to serve at /")
    sp.set_defaults(func=cmd_serve, name="serve")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.time()
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"embshift {args.name}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"embshift {args.name}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"embshift {args.name}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if hasattr(args, "out"):
        _write_meta(Path(args.out), args.name, args, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
