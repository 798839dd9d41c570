"""Verification, open-set identification and reconstruction metrics.

Scores are negated Euclidean distances between ternary codes, so a larger
score means a closer match and a claim is accepted when ``score > tau``.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCodeError, EvaluationError, ParameterError
from .ternary import embed, reconstruct_unit


@dataclass
class ScoreSet:
    genuine: np.ndarray
    impostor: np.ndarray
    genuine_groups: np.ndarray = None

    def __post_init__(self):
        self.genuine = np.asarray(self.genuine, dtype=float).ravel()
        self.impostor = np.asarray(self.impostor, dtype=float).ravel()


@dataclass
class VerificationReport:
    auc: float
    pfn_at_pfp: float
    epsilon: float
    threshold: float
    roc_points: list = field(repr=False, default_factory=list)


@dataclass
class IdentificationReport:
    pfn_step1: float
    p_epsilon: float
    dir: float
    accepted: int = 0
    threshold: float = 0.0


def score(query_code, r_g):
    q = np.asarray(query_code, dtype=float)
    r = np.asarray(r_g, dtype=float)
    if q.shape != r.shape:
        raise ParameterError(f"code lengths differ: {q.shape} vs {r.shape}")
    return -float(np.linalg.norm(q - r))


def code_distances(codes, R):
    """Euclidean distances between every column of ``codes`` and of ``R``.

    Computed in integer arithmetic, so the result is exact up to the final
    square root.
    """
    C = np.asarray(codes, dtype=np.int64)
    R = np.asarray(R, dtype=np.int64)
    if C.shape[0] != R.shape[0]:
        raise ParameterError(f"code lengths differ: {C.shape[0]} vs {R.shape[0]}")
    sq = (C * C).sum(axis=0)[:, None] + (R * R).sum(axis=0)[None, :] - 2 * (C.T @ R)
    return np.sqrt(sq.astype(float))


def verify_curve(scores, epsilon=0.05):
    """Empirical ROC, AUC and ``p_fn`` at ``p_fp = epsilon``.

    Thresholds sweep every distinct score plus minus infinity.
    ``p_fp(tau)`` is the fraction of impostor scores above ``tau`` and
    ``p_fn(tau)`` the fraction of genuine scores at or below it. The AUC is
    the trapezoid area under ``(p_fp, 1 - p_fn)``, which gives tied
    genuine/impostor pairs half credit. ``p_fn`` at ``epsilon`` is linearly
    interpolated between the two ROC points bracketing ``epsilon``;
    ``threshold`` is the left bracket's ``tau``.
    """
    gen = np.sort(scores.genuine)
    imp = np.sort(scores.impostor)
    if gen.size == 0 or imp.size == 0:
        raise ParameterError("both genuine and impostor scores are required")
    if not 0 < epsilon < 1:
        raise ParameterError(f"epsilon={epsilon} outside (0, 1)")
    taus = np.concatenate([np.unique(np.concatenate([gen, imp]))[::-1], [-np.inf]])
    pfp = (imp.size - np.searchsorted(imp, taus, side="right")) / imp.size
    pfn = np.searchsorted(gen, taus, side="right") / gen.size

    tpr = 1.0 - pfn
    auc = float(np.sum(np.diff(pfp) * (tpr[1:] + tpr[:-1])) / 2.0)

    left = int(np.searchsorted(pfp, epsilon, side="right")) - 1
    value = pfn[left]
    if pfp[left] < epsilon and left + 1 < pfp.size:
        x0, x1 = pfp[left], pfp[left + 1]
        value = pfn[left] + (epsilon - x0) / (x1 - x0) * (pfn[left + 1] - pfn[left])
    return VerificationReport(
        auc=auc, pfn_at_pfp=float(value), epsilon=float(epsilon),
        threshold=float(taus[left]),
        roc_points=[(float(a), float(b)) for a, b in zip(pfp, pfn)])


def identify_open_set(query_code, model, tau):
    """Open-set decision for one query.

    Accepted when the smallest distance to a group representation is below
    ``tau``; the group is then the argmin, lowest index on ties.
    Returns ``(accepted, group)`` with ``group=None`` when rejected.
    """
    dist = code_distances(np.asarray(query_code)[:, None], model.R)[0]
    g = int(np.argmin(dist))
    if dist[g] < tau:
        return True, g
    return False, None


def dir_metric(p_epsilon, pfn):
    for name, p in (("p_epsilon", p_epsilon), ("pfn", pfn)):
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"{name}={p} outside [0, 1]")
    return (1.0 - p_epsilon) * (1.0 - pfn)


def identification_report(genuine_scores, predicted, truth, impostor_scores, epsilon=0.05):
    """Two-step open-set identification metrics.

    Step one thresholds the best score (minus the smallest distance) at the
    level giving ``p_fp = epsilon``. The misidentification rate ``p_epsilon``
    is measured on the genuine queries accepted at that threshold; it is 0
    when none are accepted.
    """
    curve = verify_curve(ScoreSet(genuine_scores, impostor_scores), epsilon)
    accepted = np.asarray(genuine_scores) > curve.threshold
    n_acc = int(np.count_nonzero(accepted))
    wrong = np.asarray(predicted)[accepted] != np.asarray(truth)[accepted]
    p_eps = float(np.mean(wrong)) if n_acc else 0.0
    return IdentificationReport(
        pfn_step1=curve.pfn_at_pfp, p_epsilon=p_eps,
        dir=dir_metric(p_eps, curve.pfn_at_pfp), accepted=n_acc,
        threshold=curve.threshold)


def mse_privacy(Y, model):
    """Mean of ``||y - rec(e(y))||^2 / d`` over the query columns of ``Y``.

    Returns ``(mse, skipped)`` where ``skipped`` counts queries whose code is
    all zero and therefore cannot be reconstructed.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] == 0:
        raise ParameterError("at least one query is required")
    codes = embed(Y, model.W, model.S)
    errors, skipped = [], 0
    for k in range(Y.shape[1]):
        try:
            y_hat = reconstruct_unit(codes[:, k], model.W)
        except DegenerateCodeError:
            skipped += 1
            continue
        errors.append(np.sum((Y[:, k] - y_hat) ** 2))
    if not errors:
        raise EvaluationError("every query embedded to the all-zero code")
    return float(np.mean(errors) / Y.shape[0]), skipped


def mse_security(X, model):
    """``(dN)^-1 sum_g sum_{i in g} ||x_i - rec(r_g)||^2``.

    Groups with an all-zero representation are skipped and counted; ``N``
    then counts only the members of the remaining groups.
    Returns ``(mse, skipped_groups)``.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[1] != model.partition.N:
        raise ParameterError(f"X has {X.shape[1]} templates, model enrolls {model.partition.N}")
    total, count, skipped = 0.0, 0, 0
    for g, members in enumerate(model.partition.groups()):
        try:
            x_hat = reconstruct_unit(model.R[:, g], model.W)
        except DegenerateCodeError:
            skipped += 1
            continue
        total += float(np.sum((X[:, members] - x_hat[:, None]) ** 2))
        count += members.size
    if count == 0:
        raise EvaluationError("every group representation is the all-zero code")
    return total / (X.shape[0] * count), skipped


def evaluate(model, templates, queries, epsilon=0.05):
    """Verification, identification and reconstruction metrics for one model.

    Each genuine query is scored against the group of its identity; each
    impostor is scored against every group.
    """
    column = {int(i): k for k, i in enumerate(templates.ids)}
    genuine = queries.genuine
    if not np.any(genuine) or np.all(genuine):
        raise EvaluationError("need both genuine and impostor queries")
    try:
        truth = np.array([model.partition.assignments[column[int(i)]]
                          for i in queries.labels[genuine]], dtype=np.int64)
    except KeyError as exc:
        raise EvaluationError(f"genuine query with unknown identity {exc}") from None

    codes = embed(queries.Y, model.W, model.S)
    dist = code_distances(codes, model.R)
    gen_dist = dist[genuine]
    imp_dist = dist[~genuine]

    verification = verify_curve(
        ScoreSet(-gen_dist[np.arange(truth.size), truth], -imp_dist.ravel(), truth), epsilon)
    best = np.argmin(gen_dist, axis=1)
    identification = identification_report(
        -gen_dist.min(axis=1), best, truth, -imp_dist.min(axis=1), epsilon)
    mse_p, skipped_p = mse_privacy(queries.Y, model)
    mse_s, skipped_s = mse_security(templates.X, model)
    return {
        "auc": verification.auc,
        "pfn_at_pfp": verification.pfn_at_pfp,
        "epsilon": epsilon,
        "pfn_step1": identification.pfn_step1,
        "p_epsilon": identification.p_epsilon,
        "dir": identification.dir,
        "identification_accepted": identification.accepted,
        "mse_privacy": mse_p,
        "mse_privacy_skipped": skipped_p,
        "mse_security": mse_s,
        "mse_security_skipped": skipped_s,
        "n_genuine": int(truth.size),
        "n_impostor": int(np.count_nonzero(~genuine)),
        "roc_points": verification.roc_points,
    }
