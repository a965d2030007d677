"""Generative model over labeling-function votes.

Each LF j targets a single class k_j and either fires or abstains on a
document.  Conditioned on the document's latent class c, firing is a
Bernoulli event with logit theta_lab[j] + theta_acc[j] * 1{k_j == c}:
theta_lab captures how often the LF fires at all, theta_acc how much more
often it fires when its target class is correct.  Documents factorize over
LFs, so the per-class log-likelihood of a vote row is a sum of Bernoulli
terms, and the class posterior is a prior-weighted softmax over classes.

Parameters are fit by minimizing the negative log marginal likelihood of
the observed vote matrix with full-batch Adam.
"""

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, LoadError, TrainingError
from .lfgen import VoteMatrix
from .numerics import Adam, log_sigmoid, logsumexp, sigmoid, softmax


@dataclass(frozen=True)
class LabelModelParams:
    """Fitted parameters: per-LF logits, class prior, and LF target classes."""

    theta_acc: np.ndarray
    theta_lab: np.ndarray
    class_prior: np.ndarray
    lf_targets: np.ndarray

    def __post_init__(self):
        acc = np.asarray(self.theta_acc, dtype=np.float64)
        lab = np.asarray(self.theta_lab, dtype=np.float64)
        prior = np.asarray(self.class_prior, dtype=np.float64)
        targets = np.asarray(self.lf_targets, dtype=np.int64)
        object.__setattr__(self, "theta_acc", acc)
        object.__setattr__(self, "theta_lab", lab)
        object.__setattr__(self, "class_prior", prior)
        object.__setattr__(self, "lf_targets", targets)
        if acc.ndim != 1 or lab.shape != acc.shape or targets.shape != acc.shape:
            raise ValueError("theta_acc, theta_lab, lf_targets must share shape (m,)")
        if prior.ndim != 1 or prior.size == 0:
            raise ValueError("class_prior must be a non-empty 1-d array")
        if not (np.all(np.isfinite(acc)) and np.all(np.isfinite(lab))):
            raise ValueError("non-finite theta")
        if np.any(prior < 0) or not np.isclose(prior.sum(), 1.0, atol=1e-8):
            raise ValueError("class_prior must be a probability vector")
        if targets.size and (targets.min() < 0 or targets.max() >= prior.size):
            raise ValueError("lf_targets out of range for class_prior")

    @property
    def num_lfs(self):
        return self.theta_acc.shape[0]

    @property
    def num_classes(self):
        return self.class_prior.shape[0]


def _fire_logits(theta_acc, theta_lab, lf_targets, num_classes):
    """(m, c) logit of LF j firing given class c."""
    match = lf_targets[:, None] == np.arange(num_classes)[None, :]
    return theta_lab[:, None] + theta_acc[:, None] * match


def vote_likelihood(params, lf_index, voted, cls):
    """P(LF fires | class) if voted, else P(LF abstains | class)."""
    w = params.theta_lab[lf_index]
    if params.lf_targets[lf_index] == cls:
        w = w + params.theta_acc[lf_index]
    p = float(sigmoid(w))
    return p if voted else 1.0 - p


def _log_joint(params, votes):
    """(n, c) log prior + log P(vote row | class), abstains included."""
    voted = votes.voted().astype(np.float64)
    w = _fire_logits(
        params.theta_acc, params.theta_lab, params.lf_targets, params.num_classes
    )
    log_fire = log_sigmoid(w)
    log_abstain = log_sigmoid(-w)
    # (1 - V) @ log_abstain expanded to avoid materializing 1 - V
    loglik = voted @ (log_fire - log_abstain) + log_abstain.sum(axis=0)[None, :]
    with np.errstate(divide="ignore"):
        log_prior = np.log(params.class_prior)
    return loglik + log_prior[None, :]


def nll(params, votes):
    """Negative log marginal likelihood of the observed vote matrix."""
    _check_targets(params, votes)
    return float(-np.sum(logsumexp(_log_joint(params, votes), axis=1)))


def nll_grad(params, votes):
    """Gradient of nll w.r.t. concatenated (theta_acc, theta_lab)."""
    _check_targets(params, votes)
    voted = votes.voted().astype(np.float64)
    m = params.num_lfs
    w = _fire_logits(
        params.theta_acc, params.theta_lab, params.lf_targets, params.num_classes
    )
    sig = sigmoid(w)
    resp = softmax(_log_joint(params, votes), axis=1)
    # d loglik_i / d theta_lab_j = V_ij - sigma(W_j c); expectation under resp
    grad_lab = resp @ sig.T - voted
    # theta_acc only enters the target-class column of W
    resp_target = resp[:, params.lf_targets]
    sig_target = sig[np.arange(m), params.lf_targets]
    grad_acc = resp_target * sig_target[None, :] - resp_target * voted
    return np.concatenate([grad_acc.sum(axis=0), grad_lab.sum(axis=0)])


def posterior(params, votes):
    """(n, c) class posterior per document, rows summing to 1."""
    _check_targets(params, votes)
    return softmax(_log_joint(params, votes), axis=1)


def _check_targets(params, votes):
    if params.num_lfs != votes.num_lfs or not np.array_equal(
        params.lf_targets, votes.lf_targets
    ):
        raise ValueError("params.lf_targets disagree with the vote matrix")


def majority_vote(votes, num_classes):
    """(n, c) empirical vote shares; uniform row where every LF abstained."""
    voted = votes.voted().astype(np.float64)
    onehot = (
        votes.lf_targets[:, None] == np.arange(num_classes)[None, :]
    ).astype(np.float64)
    counts = voted @ onehot
    top = counts.max(axis=1, keepdims=True)
    winners = (counts == top) & (top > 0)
    out = np.full((votes.num_docs, num_classes), 1.0 / num_classes)
    any_vote = winners.any(axis=1)
    out[any_vote] = winners[any_vote] / winners[any_vote].sum(axis=1, keepdims=True)
    return out


def implied_accuracies(params):
    """Per-LF P(fire | target class) / P(fire | either firing context).

    Monotone in theta_acc at fixed theta_lab; used to compare fitted LF
    quality against empirical precision.
    """
    on = sigmoid(params.theta_lab + params.theta_acc)
    off = sigmoid(params.theta_lab)
    return on / (on + off)


def fit(
    votes,
    num_classes,
    seed,
    lr=0.01,
    steps=500,
    init_scale=0.01,
    prior="uniform",
):
    """Fit theta by full-batch Adam on the NLL, keeping the best iterate.

    prior is "uniform", "majority" (mean of the majority-vote distribution
    over documents), or an explicit probability vector.  The prior is held
    fixed during optimization.
    """
    if isinstance(prior, str):
        if prior == "uniform":
            class_prior = np.full(num_classes, 1.0 / num_classes)
        elif prior == "majority":
            class_prior = majority_vote(votes, num_classes).mean(axis=0)
        else:
            raise ValueError(f"unknown prior {prior!r}")
    else:
        class_prior = np.asarray(prior, dtype=np.float64)

    rng = np.random.default_rng(seed)
    m = votes.num_lfs
    theta = rng.normal(0.0, init_scale, size=2 * m)

    def params_of(vec):
        return LabelModelParams(
            theta_acc=vec[:m],
            theta_lab=vec[m:],
            class_prior=class_prior,
            lf_targets=votes.lf_targets,
        )

    best_theta = theta.copy()
    best_nll = nll(params_of(theta), votes)
    opt = Adam([theta], lr=lr)
    for step in range(steps):
        p = params_of(theta)
        value = nll(p, votes)
        grad = nll_grad(p, votes)
        if not (np.isfinite(value) and np.all(np.isfinite(grad))):
            raise TrainingError(f"non-finite objective at step {step}")
        if value < best_nll:
            best_nll = value
            best_theta = theta.copy()
        opt.step([grad])
    final = nll(params_of(theta), votes)
    if np.isfinite(final) and final < best_nll:
        best_nll = final
        best_theta = theta.copy()
    return _canonicalize(params_of(best_theta.copy()), best_nll, votes)


def _canonicalize(params, params_nll, votes):
    """Resolve the two-class label-flip ambiguity.

    With two classes, (theta_acc, theta_lab) -> (-theta_acc,
    theta_lab + theta_acc) describes the same joint distribution with the
    class identities swapped, so the optimizer lands on either mode
    depending on init noise.  LFs fire *because* a keyword indicates its
    target class, so the mode where they are on average better than chance
    is the intended one.  Never trades away likelihood: the flip is kept
    only if its nll is no worse (it is equal up to rounding under a
    uniform prior).
    """
    if params.num_classes != 2:
        return params
    if implied_accuracies(params).mean() >= 0.5:
        return params
    twin = LabelModelParams(
        theta_acc=-params.theta_acc,
        theta_lab=params.theta_lab + params.theta_acc,
        class_prior=params.class_prior,
        lf_targets=params.lf_targets,
    )
    if nll(twin, votes) <= params_nll + 1e-7 * (1.0 + abs(params_nll)):
        return twin
    return params


MAGIC = "KEYCLM1"


def save_label_model(params, path):
    """Text format: magic, "m,c", per-LF "j,theta_acc,theta_lab,target", prior."""
    lines = [MAGIC, f"{params.num_lfs},{params.num_classes}"]
    for j in range(params.num_lfs):
        lines.append(
            f"{j},{float(params.theta_acc[j])!r},{float(params.theta_lab[j])!r},"
            f"{int(params.lf_targets[j])}"
        )
    lines.append(",".join(repr(float(p)) for p in params.class_prior))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_label_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise FormatError(f"{path}: missing {MAGIC} header")
    try:
        m, c = (int(part) for part in lines[1].split(","))
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad dimension line") from exc
    if len(lines) != 2 + m + 1:
        raise FormatError(f"{path}: expected {2 + m + 1} lines, got {len(lines)}")
    theta_acc = np.empty(m)
    theta_lab = np.empty(m)
    targets = np.empty(m, dtype=np.int64)
    for j in range(m):
        parts = lines[2 + j].split(",")
        try:
            idx = int(parts[0])
            theta_acc[j] = float(parts[1])
            theta_lab[j] = float(parts[2])
            targets[j] = int(parts[3])
        except (IndexError, ValueError) as exc:
            raise FormatError(f"{path}: bad LF line {2 + j + 1}") from exc
        if idx != j:
            raise FormatError(f"{path}: LF lines out of order at {j}")
    try:
        prior = np.array([float(p) for p in lines[2 + m].split(",")])
    except ValueError as exc:
        raise FormatError(f"{path}: bad prior line") from exc
    if prior.size != c:
        raise FormatError(f"{path}: prior has {prior.size} entries, expected {c}")
    try:
        return LabelModelParams(
            theta_acc=theta_acc,
            theta_lab=theta_lab,
            class_prior=prior,
            lf_targets=targets,
        )
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc
