"""Command-line interface: ``gmv {synth,learn,eval,run,sweep,inspect-model}``."""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import __version__
from .data import TemplateMatrix, gen_synthetic, load_descriptors, save_descriptors
from .errors import GMVError
from .experiment import (ExperimentConfig, StageError, _stage, build_model, dump_report,
                         evaluate_config, load_data, make_report, run_experiment)
from .model import METHODS, load_model, save_model
from .ternary import is_feasible, orthonormality_error

SWEEP_PARAMS = {"m": int, "s_ratio": float, "sigma": float}
SUMMARY_FIELDS = ("auc", "pfn_at_pfp", "pfn_step1", "p_epsilon", "dir",
                  "mse_privacy", "mse_security")

log = logging.getLogger("gmv")


def _add_data_flags(p):
    g = p.add_argument_group("data")
    g.add_argument("--d", type=int, default=128, help="template dimension (synthetic)")
    g.add_argument("--n", "-N", dest="N", type=int, default=512, help="enrolled individuals (synthetic)")
    g.add_argument("--sigma", type=float, default=0.48, help="genuine query noise level")
    g.add_argument("--impostors", type=int, default=None, help="impostor queries (default: N)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--templates", help="GMVD file of enrolled templates")
    g.add_argument("--queries", help="GMVD file of queries; unknown labels are impostors")


def _add_model_flags(p):
    g = p.add_argument_group("enrollment")
    g.add_argument("--method", choices=METHODS, default="aoe")
    g.add_argument("--m", type=int, default=4, help="group size")
    g.add_argument("--l-ratio", type=float, default=0.9, help="code length as a fraction of d")
    g.add_argument("--s-ratio", type=float, default=0.7, help="sparsity as a fraction of l")
    g.add_argument("--xi", type=float, default=1.0)
    g.add_argument("--gamma", type=float, default=1e4)
    g.add_argument("--eta", type=float, default=1.0)
    g.add_argument("--iters", type=int, default=100, help="maximum learning sweeps")
    g.add_argument("--rel-tol", type=float, default=1e-6)


def _add_eval_flags(p):
    g = p.add_argument_group("evaluation")
    g.add_argument("--epsilon", type=float, default=0.05, help="false positive level")
    g.add_argument("--easy-threshold", type=float, default=None)
    g.add_argument("--hard-threshold", type=float, default=None)
    g.add_argument("--timestamp", default=None, help="fixed report timestamp")


def _config(args, **overrides):
    fields = ExperimentConfig.__dataclass_fields__
    values = {k: v for k, v in vars(args).items() if k in fields}
    values.update(overrides)
    return ExperimentConfig(**values)


def cmd_synth(args):
    templates, queries = gen_synthetic(args.d, args.N, args.sigma,
                                       args.N if args.impostors is None else args.impostors,
                                       args.seed)
    save_descriptors(templates, args.templates_out)
    labels = queries.labels.copy()
    # impostors get fresh identity labels past the enrolled ones
    fake = labels < 0
    labels[fake] = templates.N + np.arange(np.count_nonzero(fake))
    save_descriptors(TemplateMatrix(queries.Y, labels), args.queries_out)
    print(f"wrote {templates.N} templates to {args.templates_out} and "
          f"{labels.size} queries to {args.queries_out}")


def cmd_learn(args):
    cfg = _config(args)
    _stage("config", cfg.validate)
    if cfg.templates:
        templates = _stage("data", load_descriptors, cfg.templates)
    else:
        templates, _ = _stage("data", gen_synthetic, cfg.d, cfg.N, cfg.sigma, 0, cfg.seed)
    cfg.d, cfg.N = templates.d, templates.N
    model = build_model(cfg, templates)
    _stage("save-model", save_model, model, args.model_out)
    report = make_report(cfg, model, {"sweeps": max(len(model.objective_trace) - 1, 0)},
                         args.timestamp)
    _write(report, args.report)


def cmd_eval(args):
    model = _stage("load-model", load_model, args.model)
    cfg = _config(args, method=model.method, m=int(model.partition.sizes.max()),
                  xi=model.xi, gamma=model.gamma, eta=model.eta)
    cfg.l_ratio = model.l / model.d
    cfg.s_ratio = model.S / model.l
    templates, queries = _stage("data", load_data, cfg)
    if templates.d != model.d or templates.N != model.partition.N:
        raise StageError("data", GMVError(
            f"templates are {templates.d} x {templates.N}, model expects "
            f"{model.d} x {model.partition.N}"))
    cfg.d, cfg.N = templates.d, templates.N
    metrics = evaluate_config(cfg, model, templates, queries)
    _write(make_report(cfg, model, metrics, args.timestamp), args.report)


def cmd_run(args):
    report = run_experiment(_config(args), model_path=args.model_out, timestamp=args.timestamp)
    _write(report, args.report)


def cmd_sweep(args):
    kind = SWEEP_PARAMS[args.param]
    values = [kind(v) for v in args.values.split(",")]
    methods = args.methods.split(",")
    os.makedirs(args.out_dir, exist_ok=True)
    rows = []
    for method in methods:
        for value in values:
            runs = []
            for seed in range(args.seed, args.seed + args.seeds):
                cfg = _config(args, method=method, seed=seed, **{args.param: value})
                report = run_experiment(cfg, timestamp=args.timestamp)
                name = f"report_{method}_{args.param}-{value}_seed-{seed}.json"
                dump_report(report, os.path.join(args.out_dir, name))
                runs.append(report)
            row = {"method": method, args.param: value, "seeds": len(runs)}
            row.update({k: float(np.mean([r[k] for r in runs])) for k in SUMMARY_FIELDS})
            rows.append(row)
            log.info("%s %s=%s pfn=%.4f dir=%.4f", method, args.param, value,
                     row["pfn_at_pfp"], row["dir"])
    summary = os.path.join(args.out_dir, "summary.tsv")
    with open(summary, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["method", args.param, "seeds", *SUMMARY_FIELDS],
                                delimiter="\t", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.10g}" if isinstance(v, float) else v) for k, v in row.items()})
    print(summary)


def cmd_inspect(args):
    model = _stage("load-model", load_model, args.model)
    nnz = np.count_nonzero(model.R, axis=0)
    info = {
        "method": model.method, "d": model.d, "l": model.l, "S": model.S, "M": model.M,
        "N": model.partition.N, "group_sizes": sorted(set(model.partition.sizes.tolist())),
        "xi": model.xi, "gamma": model.gamma, "eta": model.eta, "seed": model.seed,
        "orthonormality_error": orthonormality_error(model.W),
        "representations_feasible": is_feasible(model.R, model.S),
        "nonzeros_min": int(nnz.min()), "nonzeros_max": int(nnz.max()),
        "zero_representations": int(np.count_nonzero(nnz == 0)),
    }
    print(json.dumps(info, indent=1))
    model.check()


def _write(report, path):
    text = dump_report(report, path)
    if not path:
        sys.stdout.write(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="gmv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"gmv {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic templates and queries as GMVD files")
    _add_data_flags(p)
    p.add_argument("--templates-out", required=True)
    p.add_argument("--queries-out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("learn", help="enroll groups and write a GMVM model")
    _add_data_flags(p)
    _add_model_flags(p)
    p.add_argument("--model-out", required=True)
    p.add_argument("--report", help="report path (default: stdout)")
    p.add_argument("--timestamp", default=None)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("eval", help="evaluate a GMVM model on templates and queries")
    p.add_argument("--model", required=True)
    _add_data_flags(p)
    _add_eval_flags(p)
    p.add_argument("--report", help="report path (default: stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", help="generate or load data, enroll, evaluate")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_eval_flags(p)
    p.add_argument("--model-out", default=None)
    p.add_argument("--report", help="report path (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run one experiment per value of a parameter")
    _add_data_flags(p)
    _add_model_flags(p)
    _add_eval_flags(p)
    p.add_argument("--param", choices=sorted(SWEEP_PARAMS), required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--methods", default="aoe", help="comma-separated methods")
    p.add_argument("--seeds", type=int, default=1, help="replicates starting at --seed")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect-model", help="summarize and validate a GMVM model")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep":
        for method in args.methods.split(","):
            if method not in METHODS:
                parser.error(f"unknown method {method!r}")
    try:
        args.func(args)
    except GMVError as exc:
        print(f"gmv: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"gmv: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
