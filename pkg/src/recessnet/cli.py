"""Command-line entry point: ingest, tune, run, evaluate, explain, report.

Every command reads a JSON config (``--config``) and/or flags; values in the
config file take precedence over flags. Exit codes: 0 success, 2 bad
configuration, 3 data problem, 4 numerical failure.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from types import SimpleNamespace

import numpy as np

from . import __version__
from .baselines import logistic_bytes, logistic_from_bytes
from .data.catalog import load_catalog
from .data.labels import build_realtime_labels, load_announcements
from .data.panel import build_panel
from .data.vintage import VintageArchive
from .errors import ConfigError, DataError, NumericalError, ParameterError, RecessnetError, StructuralError
from .evaluation import evaluate, pr_curve, roc_curve, write_curve, write_metrics, write_svg
from .explain import (
    aggregate_importance,
    explain_instances,
    flat_model,
    marginal_effects,
    sample_background,
    spearman_rank_corr,
    write_attributions,
    write_importance,
)
from .months import format_month, parse_month
from .nn import kernels
from .nn.serialize import network_bytes, network_from_bytes
from .pipeline import (
    BASELINE_KINDS,
    DEFAULT_TRIALS,
    MODEL_KINDS,
    FittedModel,
    derive_seed,
    random_search,
    read_forecasts,
    recursive_forecast,
    write_forecasts,
    write_trials,
)
from .tensors import Horizon, align_supervised, window
from .training import write_history

log = logging.getLogger("recessnet")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
FAR_FUTURE = 10**6


@dataclass
class RunConfig:
    vintages: str = None
    announcements: str = None
    catalog: str = None
    synthetic: dict = None
    models: list = field(default_factory=lambda: ["gru"])
    horizons: list = field(default_factory=lambda: ["Nowcast"])
    start: str = None
    end: str = None
    seed: int = 0
    trials: int = DEFAULT_TRIALS
    threshold: float = 0.5
    output: str = "results"
    workers: int = 1
    max_epochs: int = None
    explain: bool = True
    explain_instances: int = 12
    n_coalitions: int = 2048
    background_size: int = 100
    lime_samples: int = 5000
    lime_kept: int = 10

    def validate(self):
        for m in self.models:
            if m not in MODEL_KINDS:
                raise ParameterError(f"unknown model {m!r}; choose from {MODEL_KINDS}")
        self.horizons = [Horizon.parse(h).name for h in self.horizons]
        for name in ("start", "end"):
            v = getattr(self, name)
            if v is not None:
                try:
                    parse_month(v)
                except ValueError as exc:
                    raise ConfigError(f"{name}: {exc}") from None
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.vintages is None and self.synthetic is None:
            raise ConfigError("either a vintage directory or synthetic generator settings are required")
        return self

    def canonical(self):
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def load_config(args):
    """Flags first, then the config file on top."""
    values = {}
    for name in RunConfig.__dataclass_fields__:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    unknown = set(values) - set(RunConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    try:
        return RunConfig(**values).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_inputs(cfg):
    """``(catalog, archive, announcements)`` from disk or the synthetic generator."""
    if cfg.synthetic is not None:
        from .synthetic import generate

        eco = generate(**cfg.synthetic)
        return eco.catalog, eco.archive, eco.announcements
    catalog = load_catalog(cfg.catalog)
    anns = load_announcements(cfg.announcements)
    archive = VintageArchive.from_directory(cfg.vintages, catalog, anns)
    return catalog, archive, anns


def _default_window(cfg, archive):
    if cfg.start is None or cfg.end is None:
        raise ConfigError("out-of-sample start and end months are required")
    return parse_month(cfg.start), parse_month(cfg.end)


def _sha(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def model_bytes(fitted, extra=None):
    if fitted.kind in BASELINE_KINDS:
        return logistic_bytes(fitted.model, extra)
    return network_bytes(fitted.model, extra)


def load_model_bytes(data):
    from .nn.serialize import loads

    _, meta = loads(data)
    if meta.get("architecture") in BASELINE_KINDS:
        params, meta = logistic_from_bytes(data)
        return FittedModel(meta["architecture"], params), meta
    net, meta = network_from_bytes(data)
    return FittedModel(net.kind, net), meta


# -- commands ---------------------------------------------------------------


def cmd_ingest(cfg):
    catalog, archive, _ = load_inputs(cfg)
    out = os.path.join(cfg.output, "panels")
    os.makedirs(out, exist_ok=True)
    reports = []
    for v in archive.dates:
        panel = build_panel(archive.get(v), catalog)
        path = os.path.join(out, f"{format_month(v)}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(["month", *panel.names, "label"]) + "\n")
            for m, row, lab in zip(panel.months, panel.features, panel.labels):
                fh.write(",".join([format_month(m), *(repr(float(x)) for x in row), str(int(lab))]) + "\n")
        reports.append(panel.report)
    _write_json(os.path.join(cfg.output, "ingest_report.json"), {"vintages": reports})
    return {"vintages": len(reports)}


def cmd_tune(cfg):
    catalog, archive, _ = load_inputs(cfg)
    vintage = parse_month(cfg.start) if cfg.start else archive.dates[-1]
    panel = build_panel(archive.get(vintage), catalog)
    out = os.path.join(cfg.output, "tuning")
    os.makedirs(out, exist_ok=True)
    best = {}
    for kind in cfg.models:
        if kind in BASELINE_KINDS:
            continue
        for hname in cfg.horizons:
            seq, y = align_supervised(panel, hname)
            seed = derive_seed(cfg.seed, MODEL_KINDS.index(kind), Horizon[hname].value)
            res = random_search(kind, seq.data, y, cfg.trials, seed, n_jobs=cfg.workers,
                                max_epochs=cfg.max_epochs)
            write_trials(os.path.join(out, f"{kind}_{hname}.csv"), res)
            best[f"{kind}_{hname}"] = dict(res.best.as_dict(), trial=res.best_index, seed=seed)
    _write_json(os.path.join(out, "best.json"), best)
    return best


def _row_key(kind, hname):
    return Horizon[hname].value, MODEL_KINDS.index(kind)


def _job_seed(cfg, kind, hname):
    return derive_seed(cfg.seed, MODEL_KINDS.index(kind), Horizon[hname].value)


def _forecast_job(args):
    cfg, kind, hname = args
    catalog, archive, _ = load_inputs(cfg)
    start, end = _default_window(cfg, archive)
    seed = _job_seed(cfg, kind, hname)
    try:
        records, gens = recursive_forecast(
            archive, catalog, kind, hname, start, end, seed=seed, trials=cfg.trials,
            max_epochs=cfg.max_epochs, threshold=cfg.threshold,
            progress=lambda k, h, g, m: log.info("%s %s generation %d from %s", k, h, g, m),
        )
    except RecessnetError as exc:
        # keep the exception type (it selects the exit code), add job context
        exc.args = (f"[{kind}/{hname}] {exc}",) + exc.args[1:]
        raise
    return kind, hname, seed, records, gens


def _explain_generation(cfg, kind, hname, gen, names, out):
    """SHAP and LIME for the last generation's forecasts; returns importance."""
    n = min(cfg.explain_instances, len(gen.predict_x))
    inst = gen.predict_x[-n:]
    months = gen.predict_months[-n:]
    F = inst.shape[1]
    f = flat_model(gen.model.predict, F, inst.shape[2])
    bg = sample_background(gen.train_x, cfg.background_size, derive_seed(gen.seed, 7))
    shap = explain_instances(f, inst, bg, "SHAP", seed=derive_seed(gen.seed, 8) % 2**31,
                             n_coalitions=cfg.n_coalitions, months=months, names=names)
    train_rows = gen.train_x.reshape(len(gen.train_x), -1)
    lime = explain_instances(f, inst, train_rows, "LIME", seed=derive_seed(gen.seed, 9) % 2**31,
                             lime_kwargs={"n_samples": cfg.lime_samples, "n_kept": cfg.lime_kept},
                             months=months, names=names)
    tag = f"{kind}_{hname}"
    write_attributions(os.path.join(out, f"{tag}_shap.csv"), shap)
    write_attributions(os.path.join(out, f"{tag}_lime.csv"), lime)
    imp, rank = aggregate_importance(shap)
    write_importance(os.path.join(out, f"{tag}_shap_importance.csv"), names, imp, rank)
    limp, lrank = aggregate_importance(lime)
    write_importance(os.path.join(out, f"{tag}_lime_importance.csv"), names, limp, lrank)
    result = {"shap": imp}
    if kind == "ridge":
        _, collapsed = marginal_effects(gen.model.model, gen.predict_x, F)
        mrank = np.empty(F, dtype=int)
        mrank[np.argsort(-collapsed, kind="stable")] = np.arange(1, F + 1)
        write_importance(os.path.join(out, f"{tag}_marginal_effects.csv"), names, collapsed, mrank)
        result["marginal"] = collapsed
    return result


def cmd_run(cfg):
    catalog, archive, anns = load_inputs(cfg)
    start, end = _default_window(cfg, archive)
    names = tuple(s.abbreviation for s in catalog)
    root = cfg.output
    dirs = {d: os.path.join(root, d) for d in
            ("forecasts", "curves", "models", "trials", "history", "attributions")}
    for d in dirs.values():
        os.makedirs(d, exist_ok=True)

    jobs = [(cfg, k, h) for h in cfg.horizons for k in cfg.models]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_forecast_job, jobs))
    else:
        results = [_forecast_job(j) for j in jobs]

    manifest = {
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": json.loads(cfg.canonical()),
        "config_hash": cfg.digest(),
        "jobs": [],
        "files": {},
    }
    metric_rows = []
    all_records = []
    importances = {}
    for kind, hname, seed, records, gens in results:
        tag = f"{kind}_{hname}"
        all_records.extend(records)
        write_forecasts(os.path.join(dirs["forecasts"], f"{tag}.csv"), records)
        job = {"model": kind, "horizon": hname, "seed": seed, "generations": []}
        for g in gens:
            with open(os.path.join(dirs["models"], f"{tag}_gen{g.index:02d}.bin"), "wb") as fh:
                fh.write(model_bytes(g.model, {"generation": g.index, "seed": g.seed}))
            if g.search is not None:
                write_trials(os.path.join(dirs["trials"], f"{tag}_gen{g.index:02d}.csv"), g.search)
                write_history(os.path.join(dirs["history"], f"{tag}_gen{g.index:02d}.csv"), g.history)
                chosen = g.config.as_dict()
            else:
                chosen = {k: v for k, v in g.config.items() if k == "ridge_lambda"}
            job["generations"].append({
                "index": g.index, "reestimation_month": format_month(g.reestimation_month),
                "training_vintage": format_month(g.training_vintage), "seed": g.seed,
                "config": chosen,
            })
        manifest["jobs"].append(job)

        probs = np.array([r.probability for r in records])
        months = np.array([r.target_month for r in records])
        truth = build_realtime_labels(anns, FAR_FUTURE, months)
        row = evaluate(probs, truth, cfg.threshold)
        row.update(model=kind, horizon=hname)
        metric_rows.append(row)
        if 0 < truth.sum() < len(truth):
            write_curve(os.path.join(dirs["curves"], f"{tag}_roc.csv"), roc_curve(probs, truth))
            write_curve(os.path.join(dirs["curves"], f"{tag}_pr.csv"), pr_curve(probs, truth))
        if cfg.explain and gens:
            importances[(kind, hname)] = _explain_generation(
                cfg, kind, hname, gens[-1], names, dirs["attributions"]
            )

    write_forecasts(os.path.join(root, "forecasts.csv"), all_records)
    metric_rows.sort(key=lambda r: _row_key(r["model"], r["horizon"]))
    write_metrics(os.path.join(root, "metrics.csv"), metric_rows)
    for hname in cfg.horizons:
        panel = [r for r in metric_rows if r["horizon"] == hname]
        write_metrics(os.path.join(root, f"metrics_{hname}.csv"), panel)
        _write_panel_svgs(cfg, hname, all_records, anns, dirs["curves"])
    if importances:
        _write_rank_comparisons(os.path.join(root, "rank_correlations.csv"), importances)

    for dirpath, _, files in sorted(os.walk(root)):
        for fname in sorted(files):
            path = os.path.join(dirpath, fname)
            rel = os.path.relpath(path, root)
            if rel != "manifest.json":
                manifest["files"][rel] = _sha(path)
    _write_json(os.path.join(root, "manifest.json"), manifest)
    return {"records": len(all_records), "metrics": metric_rows}


def _write_panel_svgs(cfg, hname, records, anns, out):
    rocs, prs = [], []
    for kind in cfg.models:
        sel = [r for r in records if r.horizon == hname and r.model_kind == kind]
        if not sel:
            continue
        probs = np.array([r.probability for r in sel])
        truth = build_realtime_labels(anns, FAR_FUTURE, [r.target_month for r in sel])
        if 0 < truth.sum() < len(truth):
            rocs.append((kind, roc_curve(probs, truth)))
            prs.append((kind, pr_curve(probs, truth)))
    if rocs:
        write_svg(os.path.join(out, f"{hname}_roc.svg"), rocs, f"ROC, {hname}")
        write_svg(os.path.join(out, f"{hname}_pr.svg"), prs, f"Precision-recall, {hname}")


def _write_rank_comparisons(path, importances):
    rows = []
    keys = sorted(importances)
    for a in keys:
        for b in keys:
            if a[1] != b[1] or a >= b:
                continue
            try:
                rho = spearman_rank_corr(importances[a]["shap"], importances[b]["shap"])
            except RecessnetError:
                rho = float("nan")
            rows.append((a[1], a[0], b[0], "shap", rho))
    for (kind, hname), imp in sorted(importances.items()):
        if "marginal" not in imp:
            continue
        for (k2, h2), other in sorted(importances.items()):
            if h2 == hname and k2 != kind and k2 not in BASELINE_KINDS:
                try:
                    rho = spearman_rank_corr(other["shap"], imp["marginal"])
                except RecessnetError:
                    rho = float("nan")
                rows.append((hname, k2, kind, "shap_vs_marginal", rho))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("horizon,model_a,model_b,basis,spearman\n")
        for r in rows:
            fh.write(f"{r[0]},{r[1]},{r[2]},{r[3]},{r[4]!r}\n")


def cmd_evaluate(cfg, forecasts=None):
    _, _, anns = load_inputs(cfg)
    path = forecasts or os.path.join(cfg.output, "forecasts.csv")
    records = read_forecasts(path)
    out = os.path.join(cfg.output, "curves")
    os.makedirs(out, exist_ok=True)
    rows = []
    groups = {}
    for r in records:
        groups.setdefault((r.model_kind, r.horizon), []).append(r)
    for (kind, hname), sel in sorted(groups.items(), key=lambda kv: _row_key(*kv[0])):
        probs = np.array([r.probability for r in sel])
        truth = build_realtime_labels(anns, FAR_FUTURE, [r.target_month for r in sel])
        row = evaluate(probs, truth, cfg.threshold)
        row.update(model=kind, horizon=hname)
        rows.append(row)
        if 0 < truth.sum() < len(truth):
            write_curve(os.path.join(out, f"{kind}_{hname}_roc.csv"), roc_curve(probs, truth))
            write_curve(os.path.join(out, f"{kind}_{hname}_pr.csv"), pr_curve(probs, truth))
    write_metrics(os.path.join(cfg.output, "metrics.csv"), rows)
    return rows


def cmd_explain(cfg, model_path, vintage=None):
    """Attribute a saved model's forecasts from one vintage."""
    catalog, archive, _ = load_inputs(cfg)
    with open(model_path, "rb") as fh:
        fitted, meta = load_model_bytes(fh.read())
    names = tuple(s.abbreviation for s in catalog)
    v = parse_month(vintage) if vintage else archive.dates[-1]
    hname = cfg.horizons[0]
    panel = build_panel(archive.get(v), catalog)
    seq, _ = align_supervised(panel, hname)
    steps = Horizon[hname].steps_ahead
    n = cfg.explain_instances
    ends = list(range(len(panel.months) - n, len(panel.months)))
    inst = np.stack([window(panel.features, e) for e in ends])
    months = panel.months[ends] + steps

    gen = SimpleNamespace(model=fitted, predict_x=inst, predict_months=months, train_x=seq.data,
                          seed=int(meta.get("extra", {}).get("seed", cfg.seed)))
    out = os.path.join(cfg.output, "attributions")
    os.makedirs(out, exist_ok=True)
    res = _explain_generation(cfg, fitted.kind, hname, gen, names, out)
    return {k: v.tolist() for k, v in res.items()}


def cmd_report(cfg):
    path = os.path.join(cfg.output, "metrics.csv")
    if not os.path.exists(path):
        raise DataError(f"no metrics file at {path}; run 'evaluate' or 'run' first")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols = ["AUROC", "AUPRC", "BAcc", "MCC", "F1", "Sens", "Spec", "Prec"]
    keys = ["auroc", "auprc", "balanced_accuracy", "mcc", "f1", "sensitivity", "specificity", "precision"]
    lines = []
    for hname in [h.name for h in Horizon]:
        sel = [r for r in rows if r["horizon"] == hname]
        if not sel:
            continue
        lines.append(f"## {hname}\n")
        lines.append("| Model | " + " | ".join(cols) + " |")
        lines.append("|---" * (len(cols) + 1) + "|")
        for r in sel:
            lines.append(f"| {r['model']} | " + " | ".join(f"{float(r[k]):.3f}" for k in keys) + " |")
        lines.append("")
    text = "\n".join(lines)
    with open(os.path.join(cfg.output, "report.md"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return text


def cmd_synth(directory, n_months=600, seed=0, start="1970-01"):
    from .synthetic import generate, write_economy

    eco = generate(n_months=n_months, seed=seed, start=start)
    write_economy(directory, eco)
    return {"vintages": len(eco.archive.dates), "first": format_month(eco.archive.first),
            "last": format_month(eco.archive.last)}


# -- argument parsing -------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="JSON config; its values override flags")
    p.add_argument("--vintages", help="directory of YYYY-MM.csv vintage files")
    p.add_argument("--announcements", help="turning-point announcements CSV")
    p.add_argument("--catalog", help="series catalog CSV")
    p.add_argument("--models", nargs="+", choices=MODEL_KINDS)
    p.add_argument("--horizons", nargs="+")
    p.add_argument("--start", help="first out-of-sample month, YYYY-MM")
    p.add_argument("--end", help="last out-of-sample month, YYYY-MM")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--output", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)


def build_parser():
    parser = argparse.ArgumentParser(prog="recessnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("ingest", "build and persist standardized panels for every vintage"),
        ("tune", "random hyperparameter search on one vintage"),
        ("run", "quasi-recursive forecasts, metrics, curves and attributions"),
        ("evaluate", "metrics and curves for an existing forecast CSV"),
        ("explain", "SHAP and LIME attributions for a saved model"),
        ("report", "markdown tables from metrics.csv"),
    ]:
        p = sub.add_parser(name, help=help_)
        _common(p)
        if name == "evaluate":
            p.add_argument("--forecasts", help="forecast CSV (default: OUTPUT/forecasts.csv)")
        if name == "explain":
            p.add_argument("--model", required=True, help="saved model file")
            p.add_argument("--vintage", help="vintage month to explain (default: latest)")
    p = sub.add_parser("synth", help="write a synthetic two-regime dataset")
    p.add_argument("directory")
    p.add_argument("--months", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", default="1970-01")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "synth":
            out = cmd_synth(args.directory, args.months, args.seed, args.start)
        elif args.command == "report":
            out = cmd_report(_report_config(args))
        else:
            cfg = load_config(args)
            if args.command == "ingest":
                out = cmd_ingest(cfg)
            elif args.command == "tune":
                out = cmd_tune(cfg)
            elif args.command == "run":
                out = cmd_run(cfg)
                out = {"records": out["records"]}
            elif args.command == "evaluate":
                out = cmd_evaluate(cfg, args.forecasts)
            else:
                out = cmd_explain(cfg, args.model, args.vintage)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, StructuralError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if isinstance(out, str):
        print(out)
    else:
        print(json.dumps(out, indent=2, sort_keys=True, default=str))
    return EXIT_OK


def _report_config(args):
    output = args.output
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                output = json.load(fh).get("output", output)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    cfg = RunConfig(output=output or "results", synthetic={})
    return cfg


if __name__ == "__main__":
    sys.exit(main())
