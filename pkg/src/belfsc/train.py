"""Two-stage training: CE pre-training on merged base classes, then episodic
meta-training with Bayesian evidence fusion (or the CE / label-smoothing
baselines), plus the test-time-only fusion predictor (SEF).

The pre-trained network is frozen during meta-training: it only produces
prior evidence, and gradients update the meta network alone.  The meta
network starts as a copy of the pre-trained one.  Optimization is SGD with
momentum and step decay; the checkpoint with the highest validation
accuracy is the one retained.
"""

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from belfsc.episodes import SplitDatasets, consistent_test_stream, sample_episode
from belfsc.evaluate import (
    EvidentialPredictor,
    PrototypeSoftmaxPredictor,
    average_ece_over_episodes,
    episode_accuracy,
    evaluate_stream,
)
from belfsc.losses import (
    LossConfig,
    bayes_risk_batch,
    bel_gradient_batch,
    kl_to_uniform_batch,
    log_softmax,
    softmax,
)
from belfsc.model import (
    EmbeddingNet,
    FewShotModel,
    LinearClassifier,
    MetricHead,
    evidence_backward,
)

STAGES = ("pretrain", "metatrain")
META_LOSSES = ("ce", "label_smooth", "bel")


class TrainingDivergedError(RuntimeError):
    """Raised when a loss stops being finite."""


@dataclass(frozen=True)
class TrainConfig:
    stage: str
    loss: str = "bel"
    epochs: int = 20
    batch_size: int = 128  # pretrain
    episodes_per_epoch: int = 100  # metatrain
    way: int = 5
    shot: int = 1
    query_count: int = 15
    lr: float = 0.05
    momentum: float = 0.9
    lr_decay_epochs: tuple = ()
    lr_decay_factor: float = 0.1
    prior_weight: float = 0.4  # eta, bel only
    kl_weight: float = 0.04  # lambda, bel only
    anneal_epochs: int = 0
    smoothing: float = 0.1  # epsilon, label_smooth only
    alpha_level_fusion: bool = False
    hidden_sizes: tuple = (64,)
    embed_dim: int = 64
    metric: str = "cosine"
    temperature: float = 10.0
    learn_temperature: bool = True
    val_episodes: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}")
        if self.loss not in META_LOSSES:
            raise ValueError(f"loss must be one of {META_LOSSES}")
        if self.lr <= 0.0:
            raise ValueError("lr must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.stage == "metatrain" and self.loss != "bel" and self.prior_weight != 0.0:
            raise ValueError(
                f"loss={self.loss!r} has no evidence fusion; prior_weight must be 0"
            )
        if not 0.0 <= self.smoothing < 1.0:
            raise ValueError("smoothing must be in [0, 1)")

    def loss_config(self):
        return LossConfig(kl_weight=self.kl_weight, anneal_epochs=self.anneal_epochs)


@dataclass
class RunRecord:
    stage: str
    config: dict
    epochs: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_accuracy: float = -1.0

    def log_epoch(self, **stats):
        self.epochs.append(stats)

    def write_jsonl(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.epochs:
                fh.write(json.dumps(row, sort_keys=True) + "\n")


@dataclass
class PretrainedModel:
    """Frozen product of the pre-training stage.

    The linear classifier is what pre-training optimizes; the prototype
    head (fixed temperature) is how the frozen network scores episodes
    when producing prior evidence later.
    """

    net: EmbeddingNet
    head: MetricHead
    classifier: LinearClassifier
    base_class_ids: np.ndarray


class SgdMomentum:
    """Classic momentum: v = mu*v + g, p -= lr*v (in place)."""

    def __init__(self, params, lr, momentum):
        self.params = list(params)
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity = [np.zeros_like(p) for p in self.params]

    def step(self, grads):
        for p, v, g in zip(self.params, self.velocity, grads):
            v *= self.momentum
            v += g
            p -= self.lr * v


def _rng_streams(seed):
    root = np.random.SeedSequence(seed)
    init_ss, data_ss, val_ss = root.spawn(3)
    return (
        np.random.Generator(np.random.PCG64(init_ss)),
        np.random.Generator(np.random.PCG64(data_ss)),
        val_ss,
    )


def _flatten_grads(grad_pairs):
    out = []
    for dw, db in grad_pairs:
        out.append(dw)
        out.append(db)
    return out


def _val_stats(predictor, val_stream):
    records = evaluate_stream(predictor, val_stream)
    acc, _ = episode_accuracy(records)
    return acc, average_ece_over_episodes(records)


def pretrain(splits: SplitDatasets, cfg: TrainConfig):
    """Standard CE classification over all base classes."""
    if cfg.stage != "pretrain":
        raise ValueError("config stage must be 'pretrain'")
    base = splits.base
    if base.num_samples == 0:
        raise ValueError("base split is empty")
    init_rng, data_rng, val_ss = _rng_streams(cfg.seed)

    class_ids = base.class_ids
    id_to_idx = {int(c): i for i, c in enumerate(class_ids)}
    targets = np.array([id_to_idx[int(l)] for l in base.labels], dtype=np.int64)
    features = base.features.astype(np.float64)

    net = EmbeddingNet((base.input_dim, *cfg.hidden_sizes, cfg.embed_dim), rng=init_rng)
    clf = LinearClassifier(cfg.embed_dim, class_ids.shape[0], rng=init_rng)
    head = MetricHead(cfg.metric, cfg.temperature, learn_temperature=False)
    opt = SgdMomentum(net.parameters() + clf.parameters(), cfg.lr, cfg.momentum)
    val_stream = consistent_test_stream(
        splits.val, cfg.way, cfg.shot, cfg.query_count, cfg.val_episodes, seed=val_ss
    )

    record = RunRecord(stage="pretrain", config=asdict(cfg))
    best = None
    n = features.shape[0]
    for epoch in range(cfg.epochs):
        if epoch in cfg.lr_decay_epochs:
            opt.lr *= cfg.lr_decay_factor
        order = data_rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for lo in range(0, n, cfg.batch_size):
            rows = order[lo : lo + cfg.batch_size]
            x, y = features[rows], targets[rows]
            emb = net.forward(x)
            logits = clf.forward(emb)
            logp = log_softmax(logits)
            loss = float(-logp[np.arange(rows.shape[0]), y].mean())
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"pretrain loss became {loss} at epoch {epoch}, batch {batches}"
                )
            grad_logits = softmax(logits)
            grad_logits[np.arange(rows.shape[0]), y] -= 1.0
            grad_logits /= rows.shape[0]
            clf_grads, grad_emb = clf.backward(grad_logits)
            net_grads = net.backward(grad_emb)
            opt.step(_flatten_grads(net_grads) + list(clf_grads))
            epoch_loss += loss
            batches += 1

        val_acc, val_ece = _val_stats(PrototypeSoftmaxPredictor(net, head), val_stream)
        record.log_epoch(
            epoch=epoch,
            train_loss=epoch_loss / max(batches, 1),
            val_accuracy=val_acc,
            val_ece=val_ece,
            lr=opt.lr,
        )
        if val_acc > record.best_val_accuracy:
            record.best_val_accuracy = val_acc
            record.best_epoch = epoch
            best = (
                [p.copy() for p in net.parameters()],
                clf.weight.copy(),
                clf.bias.copy(),
            )

    if best is not None:
        net.set_parameters(best[0])
        clf.weight, clf.bias = best[1], best[2]
    return PretrainedModel(net=net, head=head, classifier=clf, base_class_ids=class_ids), record


def _episode_gradient(cfg, fwd, prior_evidence, query_y, kl_weight):
    """Mean per-query loss and dL/dlogits for the configured meta loss."""
    q = query_y.shape[0]
    if cfg.loss == "bel":
        alpha = fwd.output.evidence + 1.0
        if prior_evidence is not None:
            alpha = alpha + cfg.prior_weight * prior_evidence
            if cfg.alpha_level_fusion:
                alpha = alpha + cfg.prior_weight
        risk = bayes_risk_batch(alpha, query_y)
        kl = kl_to_uniform_batch(alpha)
        loss = float((risk + kl_weight * kl).mean())
        grad_alpha = bel_gradient_batch(alpha, query_y, kl_weight) / q
        return loss, evidence_backward(grad_alpha, fwd.raw_logits)

    logits = fwd.raw_logits
    logp = log_softmax(logits)
    probs = softmax(logits)
    onehot = np.zeros_like(probs)
    onehot[np.arange(q), query_y] = 1.0
    if cfg.loss == "ce":
        loss = float(-logp[np.arange(q), query_y].mean())
        grad = (probs - onehot) / q
    else:  # label_smooth
        eps = cfg.smoothing
        k = probs.shape[1]
        ce_true = -logp[np.arange(q), query_y]
        ce_uniform = -logp.mean(axis=1)
        loss = float(((1.0 - eps) * ce_true + eps * ce_uniform).mean())
        grad = (probs - ((1.0 - eps) * onehot + eps / k)) / q
    return loss, grad


def metatrain(splits: SplitDatasets, pretrained: PretrainedModel, cfg: TrainConfig):
    """Episodic tuning of a copy of the pre-trained network.

    With loss='bel' the frozen pre-trained network contributes prior
    evidence weighted by prior_weight; gradients never flow into it.
    loss='ce' is the plain episodic-CE baseline, loss='label_smooth' its
    smoothed variant.
    """
    if cfg.stage != "metatrain":
        raise ValueError("config stage must be 'metatrain'")
    _, data_rng, val_ss = _rng_streams(cfg.seed)

    meta_net = pretrained.net.copy()
    meta_head = MetricHead(cfg.metric, cfg.temperature, cfg.learn_temperature)
    meta = FewShotModel(meta_net, meta_head)
    frozen = FewShotModel(pretrained.net, pretrained.head)
    use_prior = cfg.loss == "bel" and cfg.prior_weight > 0.0

    opt = SgdMomentum(meta_net.parameters(), cfg.lr, cfg.momentum)
    temp_velocity = 0.0
    loss_cfg = cfg.loss_config()
    val_stream = consistent_test_stream(
        splits.val, cfg.way, cfg.shot, cfg.query_count, cfg.val_episodes, seed=val_ss
    )

    def make_predictor():
        if cfg.loss == "bel":
            return EvidentialPredictor(
                meta_net,
                meta_head,
                prior_net=pretrained.net,
                prior_head=pretrained.head,
                prior_weight=cfg.prior_weight,
                alpha_level=cfg.alpha_level_fusion,
            )
        return PrototypeSoftmaxPredictor(meta_net, meta_head)

    record = RunRecord(stage="metatrain", config=asdict(cfg))
    best = None
    for epoch in range(cfg.epochs):
        if epoch in cfg.lr_decay_epochs:
            opt.lr *= cfg.lr_decay_factor
        kl_weight = loss_cfg.kl_weight_at(epoch)
        epoch_loss = 0.0
        for i in range(cfg.episodes_per_epoch):
            ep = sample_episode(splits.base, cfg.way, cfg.shot, cfg.query_count, data_rng)
            fwd = meta.episode_forward(ep.support_x, ep.support_y, ep.query_x, ep.way)
            prior_evidence = None
            if use_prior:
                prior_fwd = frozen.episode_forward(
                    ep.support_x, ep.support_y, ep.query_x, ep.way
                )
                prior_evidence = prior_fwd.output.evidence
            loss, grad_logits = _episode_gradient(
                cfg, fwd, prior_evidence, ep.query_y.astype(np.int64), kl_weight
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"metatrain loss became {loss} at epoch {epoch}, episode {i}"
                )
            net_grads, temp_grad = meta.episode_backward_logits(fwd, grad_logits)
            opt.step(_flatten_grads(net_grads))
            if meta_head.learn_temperature and meta_head.metric == "cosine":
                temp_velocity = cfg.momentum * temp_velocity + temp_grad
                meta_head.temperature = max(
                    meta_head.temperature - opt.lr * temp_velocity, 1e-3
                )
            epoch_loss += loss

        val_acc, val_ece = _val_stats(make_predictor(), val_stream)
        record.log_epoch(
            epoch=epoch,
            train_loss=epoch_loss / cfg.episodes_per_epoch,
            val_accuracy=val_acc,
            val_ece=val_ece,
            lr=opt.lr,
            temperature=meta_head.temperature,
        )
        if val_acc > record.best_val_accuracy:
            record.best_val_accuracy = val_acc
            record.best_epoch = epoch
            best = ([p.copy() for p in meta_net.parameters()], meta_head.temperature)

    if best is not None:
        meta_net.set_parameters(best[0])
        meta_head.temperature = best[1]
    return FewShotModel(meta_net, meta_head), record


def sef_inference_setup(pretrained: PretrainedModel, meta_model: FewShotModel, prior_weight):
    """Test-time-only evidence fusion (SEF).

    The meta model must have been trained without prior fusion (CE, LS, or
    bel with prior_weight 0); fusing only here isolates what fusion-aware
    meta-training adds.
    """
    return EvidentialPredictor(
        meta_model.net,
        meta_model.head,
        prior_net=pretrained.net,
        prior_head=pretrained.head,
        prior_weight=prior_weight,
    )
