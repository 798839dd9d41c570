"""End-to-end pipeline: data, partition, enrollment, evaluation, report."""
from dataclasses import asdict, dataclass
import datetime
import json
import math

import numpy as np

from . import __version__
from .aoe import learn_aoe
from .baseline import baseline_aoe_enroll, baseline_eoa_enroll
from .data import (gen_synthetic, load_descriptors, partition_groups, queries_from_descriptors,
                   split_queries)
from .eoa import learn_eoa
from .errors import GMVError, ParameterError
from .evaluation import evaluate
from .model import METHODS, GroupModel, save_model

REPORT_SCHEMA = 1


@dataclass
class ExperimentConfig:
    method: str = "aoe"
    d: int = 128
    N: int = 512
    m: int = 4
    l_ratio: float = 0.9
    s_ratio: float = 0.7
    xi: float = 1.0
    gamma: float = 1e4
    eta: float = 1.0
    sigma: float = 0.48
    impostors: int = None
    epsilon: float = 0.05
    iters: int = 100
    rel_tol: float = 1e-6
    seed: int = 0
    easy_threshold: float = None
    hard_threshold: float = None
    templates: str = None
    queries: str = None

    @property
    def l(self):
        return int(round(self.l_ratio * self.d))

    @property
    def S(self):
        return int(round(self.s_ratio * self.l))

    def validate(self):
        if self.method not in METHODS:
            raise ParameterError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 1 <= self.l <= self.d:
            raise ParameterError(f"l = round({self.l_ratio} * {self.d}) = {self.l} outside [1, d]")
        if not 1 <= self.S <= self.l:
            raise ParameterError(f"S = round({self.s_ratio} * {self.l}) = {self.S} outside [1, l]")
        if not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon={self.epsilon} outside (0, 1)")
        if (self.easy_threshold is None) != (self.hard_threshold is None):
            raise ParameterError("easy and hard thresholds go together")
        return self


class StageError(GMVError):
    """Wraps a failure with the name of the pipeline stage it came from."""

    def __init__(self, stage, exc):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage


def enroll(method, X, partition, l, S, xi=1.0, gamma=1e4, eta=1.0,
           iters=100, rel_tol=1e-6, seed=0):
    """Build a :class:`GroupModel` with any of the four methods."""
    if method == "aoe":
        st = learn_aoe(X, partition, l, S, xi=xi, max_iters=iters, rel_tol=rel_tol, seed=seed)
        return GroupModel(W=st.W, R=st.R, partition=partition, method=method, S=S, xi=xi,
                          seed=seed, objective_trace=list(st.objective_trace))
    if method == "eoa":
        st = learn_eoa(X, partition, l, S, gamma=gamma, eta=eta, max_iters=iters,
                       rel_tol=rel_tol, seed=seed)
        return GroupModel(W=st.W, R=st.R, partition=partition, method=method, S=S,
                          gamma=gamma, eta=eta, seed=seed,
                          objective_trace=list(st.objective_trace))
    if method == "baseline-aoe":
        return baseline_aoe_enroll(X, partition, l, S, seed=seed)
    if method == "baseline-eoa":
        return baseline_eoa_enroll(X, partition, l, S, eta=eta, seed=seed)
    raise ParameterError(f"unknown method {method!r}")


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except GMVError as exc:
        raise StageError(name, exc) from exc
    except (ValueError, ArithmeticError, OSError) as exc:
        raise StageError(name, exc) from exc


def load_data(cfg):
    """Templates and queries from files, or synthetic ones from the config."""
    if cfg.templates:
        templates = load_descriptors(cfg.templates)
        if not cfg.queries:
            raise ParameterError("a query file is required with a template file")
        queries = queries_from_descriptors(load_descriptors(cfg.queries), templates)
        return templates, queries
    impostors = cfg.N if cfg.impostors is None else cfg.impostors
    return gen_synthetic(cfg.d, cfg.N, cfg.sigma, impostors, cfg.seed)


def build_model(cfg, templates):
    partition = _stage("partition", partition_groups, templates.N, cfg.m, cfg.seed)
    stage = "learn" if cfg.method in ("aoe", "eoa") else "enroll"
    model = _stage(stage, enroll, cfg.method, templates.X, partition, cfg.l, cfg.S,
                   xi=cfg.xi, gamma=cfg.gamma, eta=cfg.eta, iters=cfg.iters,
                   rel_tol=cfg.rel_tol, seed=cfg.seed)
    return _stage("check", model.check)


def evaluate_config(cfg, model, templates, queries):
    metrics = _stage("evaluate", evaluate, model, templates, queries, cfg.epsilon)
    if cfg.easy_threshold is not None:
        split = _stage("split", split_queries, queries, templates,
                       cfg.easy_threshold, cfg.hard_threshold)
        metrics["dropped_queries"] = split.dropped
        for level in ("easy", "hard"):
            sub = split.subset((split.difficulty == level) | ~split.genuine)
            if np.any(sub.genuine):
                part = _stage(f"evaluate-{level}", evaluate, model, templates, sub, cfg.epsilon)
                metrics[level] = {k: part[k] for k in
                                  ("auc", "pfn_at_pfp", "pfn_step1", "p_epsilon", "dir", "n_genuine")}
    return metrics


def make_report(cfg, model, metrics, timestamp=None):
    config = asdict(cfg)
    config.update(d=model.d, N=model.partition.N, l=model.l, S=model.S, M=model.M)
    report = {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "timestamp": timestamp or datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config,
        "objective_trace": [float(v) for v in model.objective_trace],
    }
    report.update(metrics)
    _check_finite(report)
    return report


def _check_finite(obj, path="report"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ParameterError(f"{path} is not finite")
    if isinstance(obj, dict):
        for k, v in obj.items():
            _check_finite(v, f"{path}.{k}")
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _check_finite(v, f"{path}[{i}]")


def run_experiment(cfg, model_path=None, timestamp=None):
    """Run the whole pipeline and return the report dictionary.

    Writes the learned model to ``model_path`` when given.
    """
    _stage("config", cfg.validate)
    templates, queries = _stage("data", load_data, cfg)
    if cfg.templates:
        cfg.d, cfg.N = templates.d, templates.N
    model = build_model(cfg, templates)
    if model_path:
        _stage("save-model", save_model, model, model_path)
    metrics = evaluate_config(cfg, model, templates, queries)
    return make_report(cfg, model, metrics, timestamp)


def dump_report(report, path=None):
    """Serialize a report as key-sorted, indented JSON (one field per line)."""
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text
