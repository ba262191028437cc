"""Calibration-aware evaluation over consistent episode streams.

Accuracy is the mean of per-episode accuracies with a 95% confidence
interval (1.96 * sample std / sqrt(n)).  Calibration uses the binned
expected calibration error with half-open bins (i/M, (i+1)/M]; the
headline number averages per-episode ECE values, with the pooled variant
reported for diagnostics.  Confidence is the maximum predicted
probability: max softmax for CE-style predictors, max alpha/S for
evidential ones, which also report uncertainty u = K/S per query.
"""

import csv
import json
import math
import subprocess
from dataclasses import dataclass

import numpy as np

import belfsc
from belfsc.model import FewShotModel, evidence_from_logits, prototypes


@dataclass(frozen=True)
class EpisodeRecord:
    """Per-query predictions of one episode."""

    episode_id: int
    predicted: np.ndarray
    true: np.ndarray
    confidence: np.ndarray
    uncertainty: np.ndarray  # NaN for predictors without an evidence head

    @property
    def correct(self):
        return self.predicted == self.true

    @property
    def accuracy(self):
        return float(self.correct.mean())


def ece(confidence, correct, num_bins=15) -> float:
    """Binned |accuracy - confidence| gap, weighted by bin occupancy.

    Bin i covers (i/M, (i+1)/M]; a confidence exactly on an edge belongs
    to the lower bin.  Empty bins contribute nothing.
    """
    confidence = np.asarray(confidence, dtype=np.float64)
    correct = np.asarray(correct, dtype=np.float64)
    if confidence.size == 0:
        raise ValueError("ece requires at least one record")
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    edges = np.arange(num_bins + 1) / num_bins
    idx = np.digitize(confidence, edges, right=True) - 1
    idx = np.clip(idx, 0, num_bins - 1)
    total = confidence.shape[0]
    value = 0.0
    for b in range(num_bins):
        members = idx == b
        count = int(members.sum())
        if count == 0:
            continue
        gap = abs(correct[members].mean() - confidence[members].mean())
        value += (count / total) * gap
    return float(value)


def bin_table(confidence, correct, num_bins=15):
    """Per-bin (lo, hi, count, mean confidence, mean accuracy) rows."""
    confidence = np.asarray(confidence, dtype=np.float64)
    correct = np.asarray(correct, dtype=np.float64)
    edges = np.arange(num_bins + 1) / num_bins
    idx = np.clip(np.digitize(confidence, edges, right=True) - 1, 0, num_bins - 1)
    rows = []
    for b in range(num_bins):
        members = idx == b
        count = int(members.sum())
        rows.append(
            {
                "bin_lo": float(edges[b]),
                "bin_hi": float(edges[b + 1]),
                "count": count,
                "mean_confidence": float(confidence[members].mean()) if count else 0.0,
                "mean_accuracy": float(correct[members].mean()) if count else 0.0,
            }
        )
    return rows


def average_ece_over_episodes(records, num_bins=15) -> float:
    """Arithmetic mean of per-episode ECE values (the headline metric)."""
    if not records:
        raise ValueError("no episode records")
    return float(np.mean([ece(r.confidence, r.correct, num_bins) for r in records]))


def pooled_ece(records, num_bins=15) -> float:
    """ECE over all queries pooled into one record set (diagnostic)."""
    conf = np.concatenate([r.confidence for r in records])
    corr = np.concatenate([r.correct for r in records])
    return ece(conf, corr, num_bins)


def episode_accuracy(records):
    """Mean per-episode accuracy and its 95% confidence interval."""
    if len(records) < 2:
        raise ValueError("need at least 2 episodes for a confidence interval")
    accs = np.array([r.accuracy for r in records])
    mean = float(accs.mean())
    ci95 = float(1.96 * accs.std(ddof=1) / math.sqrt(accs.shape[0]))
    return mean, ci95


def wilcoxon_signed_rank(diffs):
    """One-sided Wilcoxon signed-rank test (H1: median difference > 0).

    Normal approximation with tie correction and zero-difference removal;
    intended for the hundreds of paired episodes used here.  Returns
    (z, one-sided p).
    """
    d = np.asarray(diffs, dtype=np.float64)
    d = d[d != 0.0]
    n = d.shape[0]
    if n < 10:
        raise ValueError("signed-rank normal approximation needs >= 10 nonzero pairs")
    order = np.argsort(np.abs(d), kind="stable")
    ranks = np.empty(n)
    ranks[order] = np.arange(1, n + 1)
    # average ranks over ties in |d|
    abs_sorted = np.abs(d)[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and abs_sorted[j + 1] == abs_sorted[i]:
            j += 1
        if j > i:
            ranks[order[i : j + 1]] = 0.5 * (i + 1 + j + 1)
        i = j + 1
    w_plus = float(ranks[d > 0].sum())
    mean_w = n * (n + 1) / 4.0
    var_w = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var_w -= (counts**3 - counts).sum() / 48.0
    z = (w_plus - mean_w) / math.sqrt(var_w)
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return z, p


def uncertainty_separation(records):
    """Do misclassified queries carry more uncertainty than correct ones?

    Pairs per-episode mean uncertainties (wrong minus correct, episodes
    holding both kinds) and runs the one-sided signed-rank test.
    """
    diffs = []
    for r in records:
        if np.all(np.isnan(r.uncertainty)):
            raise ValueError("predictor does not report uncertainty")
        wrong = r.uncertainty[~r.correct]
        right = r.uncertainty[r.correct]
        if wrong.size and right.size:
            diffs.append(float(wrong.mean() - right.mean()))
    z, p = wilcoxon_signed_rank(np.array(diffs))
    pooled_wrong = np.concatenate([r.uncertainty[~r.correct] for r in records])
    pooled_right = np.concatenate([r.uncertainty[r.correct] for r in records])
    return {
        "mean_uncertainty_wrong": float(pooled_wrong.mean()),
        "mean_uncertainty_correct": float(pooled_right.mean()),
        "paired_episodes": len(diffs),
        "signed_rank_z": z,
        "p_one_sided": p,
    }


# ---------------------------------------------------------------------------
# Predictors
# ---------------------------------------------------------------------------


class PrototypeSoftmaxPredictor:
    """Softmax over prototype-metric logits (CE / label-smoothing models)."""

    def __init__(self, net, head):
        self.net = net
        self.head = head

    def predict(self, episode):
        emb = self.net.forward(np.vstack([episode.support_x, episode.query_x]))
        ns = episode.support_x.shape[0]
        protos = prototypes(emb[:ns], episode.support_y, episode.way)
        logits = self.head.logits(emb[ns:], protos)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        probs = e / e.sum(axis=1, keepdims=True)
        return probs, np.full(probs.shape[0], np.nan)


class EvidentialPredictor:
    """Expected probabilities alpha/S from (optionally fused) evidence.

    With a prior model attached, evidence fuses as
    prior_weight * e^P + e^M before the +1 shift; uncertainty is K/S.
    Setting prior_weight to 0 at inference reproduces the prior-free
    ablation regardless of how the meta model was trained.
    """

    def __init__(
        self,
        meta_net,
        meta_head,
        prior_net=None,
        prior_head=None,
        prior_weight=0.0,
        alpha_level=False,
    ):
        if prior_weight < 0.0:
            raise ValueError("prior_weight must be >= 0")
        if prior_weight > 0.0 and (prior_net is None or prior_head is None):
            raise ValueError("prior fusion requested but no prior model given")
        self.meta = FewShotModel(meta_net, meta_head)
        self.prior = (
            FewShotModel(prior_net, prior_head) if prior_net is not None else None
        )
        self.prior_weight = float(prior_weight)
        self.alpha_level = bool(alpha_level)

    def _evidence(self, model, episode):
        fwd = model.episode_forward(
            episode.support_x, episode.support_y, episode.query_x, episode.way
        )
        return fwd.output.evidence

    def predict(self, episode):
        evidence = self._evidence(self.meta, episode)
        if self.prior is not None and self.prior_weight > 0.0:
            prior_ev = self._evidence(self.prior, episode)
            evidence = evidence + self.prior_weight * prior_ev
            if self.alpha_level:
                evidence = evidence + self.prior_weight
        alpha = evidence + 1.0
        strength = alpha.sum(axis=1, keepdims=True)
        probs = alpha / strength
        uncertainty = episode.way / strength[:, 0]
        return probs, uncertainty


def evaluate_stream(predictor, episodes, num_bins=15):
    """Run a predictor over an episode stream and collect per-query records."""
    records = []
    for i, ep in enumerate(episodes):
        probs, uncertainty = predictor.predict(ep)
        records.append(
            EpisodeRecord(
                episode_id=i,
                predicted=probs.argmax(axis=1),
                true=np.asarray(ep.query_y),
                confidence=probs.max(axis=1),
                uncertainty=np.asarray(uncertainty, dtype=np.float64),
            )
        )
    return records


def summarize(records, num_bins=15):
    mean_acc, ci95 = episode_accuracy(records)
    has_uncertainty = not np.all(np.isnan(records[0].uncertainty))
    summary = {
        "num_episodes": len(records),
        "num_queries": int(sum(r.true.shape[0] for r in records)),
        "ece_bins": num_bins,
        "mean_accuracy": mean_acc,
        "ci95": ci95,
        "avg_episode_ece": average_ece_over_episodes(records, num_bins),
        "pooled_ece": pooled_ece(records, num_bins),
        "mean_confidence": float(np.mean([r.confidence.mean() for r in records])),
        "mean_uncertainty": (
            float(np.mean([r.uncertainty.mean() for r in records]))
            if has_uncertainty
            else None
        ),
    }
    return summary


def code_version():
    """Package version plus the git commit when available."""
    version = belfsc.__version__
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        ).stdout.strip()
        return f"{version}+g{rev}"
    except Exception:
        return version


def emit_report(records, out_dir, num_bins=15, config=None, extra=None):
    """Write report.json (summary), report.csv (per-episode), and
    report_bins.csv (pooled reliability bins) into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(records, num_bins)
    doc = {
        "summary": summary,
        "config": config or {},
        "code_version": code_version(),
    }
    if extra:
        doc.update(extra)
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")

    with open(out_dir / "report.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["episode_id", "accuracy", "ece", "mean_confidence", "mean_uncertainty"]
        )
        for r in records:
            mean_u = float(np.nanmean(r.uncertainty)) if not np.all(np.isnan(r.uncertainty)) else ""
            writer.writerow(
                [
                    r.episode_id,
                    repr(r.accuracy),
                    repr(ece(r.confidence, r.correct, num_bins)),
                    repr(float(r.confidence.mean())),
                    repr(mean_u) if mean_u != "" else "",
                ]
            )

    conf = np.concatenate([r.confidence for r in records])
    corr = np.concatenate([r.correct for r in records])
    with open(out_dir / "report_bins.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count", "mean_confidence", "mean_accuracy"])
        for row in bin_table(conf, corr, num_bins):
            writer.writerow(
                [
                    repr(row["bin_lo"]),
                    repr(row["bin_hi"]),
                    row["count"],
                    repr(row["mean_confidence"]),
                    repr(row["mean_accuracy"]),
                ]
            )
    return summary
