"""Embedding network and prototype metric head with manual backprop.

A small fully connected net (affine layers with rectifier nonlinearities,
linear final layer) embeds feature vectors; class prototypes are support
means; query logits are either temperature-scaled cosine similarity or
negative squared euclidean distance to the prototypes.  Evidence is
exp(logits) with logits clamped to +/-LOGIT_CLAMP so evidence stays finite.

Everything here is float64 numpy with hand-written backward passes; the
end-to-end gradients are validated against central finite differences in
the test suite.
"""

import json
from dataclasses import dataclass

import numpy as np

LOGIT_CLAMP = 15.0
CHECKPOINT_FORMAT_VERSION = 1


class EmbeddingNet:
    """Fully connected embedding network.

    layer_sizes = (input_dim, hidden..., embed_dim); weights use scaled
    uniform fan-in init.  forward() caches activations for backward();
    a net instance is single-writer during training.
    """

    def __init__(self, layer_sizes, rng=None, init=True):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and embedding sizes")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            if init:
                if rng is None:
                    raise ValueError("rng required for initialization")
                bound = 1.0 / np.sqrt(fan_in)
                w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
                b = rng.uniform(-bound, bound, size=fan_out)
            else:
                w = np.zeros((fan_out, fan_in))
                b = np.zeros(fan_out)
            self.weights.append(w)
            self.biases.append(b)
        self._cache = None

    @property
    def input_dim(self):
        return self.layer_sizes[0]

    @property
    def embed_dim(self):
        return self.layer_sizes[-1]

    def forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.input_dim:
            raise ValueError(f"input has {x.shape[1]} features, expected {self.input_dim}")
        inputs = []
        preacts = []
        a = x
        for w, b in zip(self.weights, self.biases):
            inputs.append(a)
            z = a @ w.T + b
            preacts.append(z)
            a = np.maximum(z, 0.0)
        self._cache = (inputs, preacts)
        return a

    def backward(self, grad_out):
        """Parameter gradients for the cached forward pass.

        Returns a list of (dW, db) aligned with the layers.
        """
        if self._cache is None:
            raise RuntimeError("backward called before forward")
        inputs, preacts = self._cache
        grads = [None] * len(self.weights)
        g = np.asarray(grad_out, dtype=np.float64)
        for i in range(len(self.weights) - 1, -1, -1):
            g = g * (preacts[i] > 0.0)
            grads[i] = (g.T @ inputs[i], g.sum(axis=0))
            if i > 0:
                g = g @ self.weights[i]
        return grads

    def parameters(self):
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_parameters(self, params):
        flat = list(params)
        for i in range(len(self.weights)):
            self.weights[i] = np.array(flat[2 * i], dtype=np.float64)
            self.biases[i] = np.array(flat[2 * i + 1], dtype=np.float64)

    def copy(self):
        dup = EmbeddingNet(self.layer_sizes, init=False)
        dup.set_parameters(p.copy() for p in self.parameters())
        return dup


class LinearClassifier:
    """Plain linear head over embeddings, used in the pre-training stage."""

    def __init__(self, embed_dim, num_classes, rng=None, init=True):
        if init:
            bound = 1.0 / np.sqrt(embed_dim)
            self.weight = rng.uniform(-bound, bound, size=(num_classes, embed_dim))
            self.bias = rng.uniform(-bound, bound, size=num_classes)
        else:
            self.weight = np.zeros((num_classes, embed_dim))
            self.bias = np.zeros(num_classes)
        self._input = None

    def forward(self, emb):
        self._input = emb
        return emb @ self.weight.T + self.bias

    def backward(self, grad_logits):
        if self._input is None:
            raise RuntimeError("backward called before forward")
        dw = grad_logits.T @ self._input
        db = grad_logits.sum(axis=0)
        grad_emb = grad_logits @ self.weight
        return (dw, db), grad_emb

    def parameters(self):
        return [self.weight, self.bias]


def prototypes(embeddings, labels, way):
    """Class-mean prototypes from support embeddings with labels 0..way-1."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    protos = np.empty((way, embeddings.shape[1]))
    for k in range(way):
        members = embeddings[labels == k]
        if members.shape[0] == 0:
            raise ValueError(f"class {k} has no support embeddings")
        protos[k] = members.mean(axis=0)
    return protos


class MetricHead:
    """Prototype-distance logits.

    cosine: logits = temperature * cos(query, prototype), temperature
    optionally learnable.  sqeuclidean: logits = -||query - prototype||^2
    (no temperature scaling).
    """

    METRICS = ("cosine", "sqeuclidean")

    def __init__(self, metric="cosine", temperature=10.0, learn_temperature=True):
        if metric not in self.METRICS:
            raise ValueError(f"metric must be one of {self.METRICS}")
        if temperature <= 0.0:
            raise ValueError("temperature must be > 0")
        self.metric = metric
        self.temperature = float(temperature)
        self.learn_temperature = bool(learn_temperature)
        self._cache = None

    def logits(self, query, protos):
        query = np.atleast_2d(np.asarray(query, dtype=np.float64))
        protos = np.asarray(protos, dtype=np.float64)
        if query.shape[1] != protos.shape[1]:
            raise ValueError("query and prototype dimensions differ")
        if self.metric == "cosine":
            qn = np.linalg.norm(query, axis=1)
            pn = np.linalg.norm(protos, axis=1)
            if np.any(qn == 0.0) or np.any(pn == 0.0):
                raise ValueError("cosine metric undefined for zero-norm vectors")
            cos = (query @ protos.T) / (qn[:, None] * pn[None, :])
            self._cache = ("cosine", query, protos, qn, pn, cos)
            return self.temperature * cos
        diff = query[:, None, :] - protos[None, :, :]  # (Q, K, E)
        self._cache = ("sqeuclidean", diff)
        return -np.einsum("qke,qke->qk", diff, diff)

    def backward(self, grad_logits):
        """Gradients (d_query, d_protos, d_temperature) for the cached call."""
        if self._cache is None:
            raise RuntimeError("backward called before logits")
        grad_logits = np.asarray(grad_logits, dtype=np.float64)
        if self._cache[0] == "cosine":
            _, query, protos, qn, pn, cos = self._cache
            g = grad_logits * self.temperature  # d/d cos
            grad_temp = float((grad_logits * cos).sum()) if self.learn_temperature else 0.0
            inv_q = 1.0 / qn
            inv_p = 1.0 / pn
            grad_query = (g * inv_p[None, :]) @ protos * inv_q[:, None] - (
                (g * cos).sum(axis=1) * inv_q**2
            )[:, None] * query
            grad_protos = (g * inv_q[:, None]).T @ query * inv_p[:, None] - (
                (g * cos).sum(axis=0) * inv_p**2
            )[:, None] * protos
            return grad_query, grad_protos, grad_temp
        _, diff = self._cache
        scaled = -2.0 * grad_logits[:, :, None] * diff
        return scaled.sum(axis=1), -scaled.sum(axis=0), 0.0


@dataclass(frozen=True)
class EvidenceOutput:
    logits: np.ndarray  # clamped
    evidence: np.ndarray  # exp(clamped logits), strictly positive


def evidence_from_logits(raw_logits):
    clamped = np.clip(np.asarray(raw_logits, dtype=np.float64), -LOGIT_CLAMP, LOGIT_CLAMP)
    return EvidenceOutput(logits=clamped, evidence=np.exp(clamped))


def evidence_logits(head: MetricHead, query, protos) -> EvidenceOutput:
    """Metric logits for queries against prototypes, activated to evidence."""
    return evidence_from_logits(head.logits(query, protos))


def evidence_backward(grad_wrt_evidence, raw_logits):
    """d evidence / d logit = exp(logit) inside the clamp, 0 outside."""
    raw_logits = np.asarray(raw_logits, dtype=np.float64)
    inside = (raw_logits > -LOGIT_CLAMP) & (raw_logits < LOGIT_CLAMP)
    clamped = np.clip(raw_logits, -LOGIT_CLAMP, LOGIT_CLAMP)
    return np.asarray(grad_wrt_evidence, dtype=np.float64) * np.exp(clamped) * inside


@dataclass
class EpisodeForward:
    """Cached state of one episodic forward pass through net + head."""

    raw_logits: np.ndarray
    output: EvidenceOutput
    protos: np.ndarray
    support_labels: np.ndarray
    shot_counts: np.ndarray
    num_support: int
    way: int


class FewShotModel:
    """Embedding net plus metric head evaluated episodically.

    Forward embeds support and query in one batch, builds prototypes from
    the support part, and produces query evidence.  Backward takes
    dL/dalpha (alpha = evidence + 1, so dalpha/devidence = 1) and chains
    it through the activation, head, prototype averaging, and the net.
    """

    def __init__(self, net: EmbeddingNet, head: MetricHead):
        self.net = net
        self.head = head

    def episode_forward(self, support_x, support_y, query_x, way):
        support_x = np.asarray(support_x, dtype=np.float64)
        query_x = np.asarray(query_x, dtype=np.float64)
        support_y = np.asarray(support_y)
        batch = np.vstack([support_x, query_x])
        emb = self.net.forward(batch)
        ns = support_x.shape[0]
        protos = prototypes(emb[:ns], support_y, way)
        raw = self.head.logits(emb[ns:], protos)
        counts = np.bincount(support_y, minlength=way).astype(np.float64)
        return EpisodeForward(
            raw_logits=raw,
            output=evidence_from_logits(raw),
            protos=protos,
            support_labels=support_y,
            shot_counts=counts,
            num_support=ns,
            way=way,
        )

    def episode_backward(self, fwd: EpisodeForward, grad_wrt_alpha):
        """Chain dL/dalpha (alpha = evidence + 1) back to every parameter."""
        grad_logits = evidence_backward(grad_wrt_alpha, fwd.raw_logits)
        return self.episode_backward_logits(fwd, grad_logits)

    def episode_backward_logits(self, fwd: EpisodeForward, grad_logits):
        """Backward from dL/dlogits, bypassing the evidence activation."""
        grad_query, grad_protos, grad_temp = self.head.backward(grad_logits)
        grad_support = grad_protos[fwd.support_labels] / fwd.shot_counts[
            fwd.support_labels
        ][:, None]
        grad_emb = np.vstack([grad_support, grad_query])
        return self.net.backward(grad_emb), grad_temp

    def copy(self):
        head = MetricHead(self.head.metric, self.head.temperature, self.head.learn_temperature)
        return FewShotModel(self.net.copy(), head)


# ---------------------------------------------------------------------------
# Checkpoint serialization: JSON with an explicit shape header per array and
# a format-version field.  Float round-trip is exact (shortest repr).
# ---------------------------------------------------------------------------


def _array_entry(arr):
    arr = np.asarray(arr, dtype=np.float64)
    return {"shape": list(arr.shape), "data": arr.ravel().tolist()}


def _array_from_entry(entry):
    return np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])


def save_checkpoint(path, net, head, classifier=None, kind="meta", extra=None):
    arrays = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"net.w{i}"] = _array_entry(w)
        arrays[f"net.b{i}"] = _array_entry(b)
    if classifier is not None:
        arrays["classifier.weight"] = _array_entry(classifier.weight)
        arrays["classifier.bias"] = _array_entry(classifier.bias)
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "kind": kind,
        "layer_sizes": list(net.layer_sizes),
        "head": {
            "metric": head.metric,
            "temperature": head.temperature,
            "learn_temperature": head.learn_temperature,
        },
        "arrays": arrays,
        "extra": extra or {},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version: {version!r}")
    net = EmbeddingNet(doc["layer_sizes"], init=False)
    params = []
    for i in range(len(net.weights)):
        params.append(_array_from_entry(doc["arrays"][f"net.w{i}"]))
        params.append(_array_from_entry(doc["arrays"][f"net.b{i}"]))
    net.set_parameters(params)
    head = MetricHead(
        metric=doc["head"]["metric"],
        temperature=doc["head"]["temperature"],
        learn_temperature=doc["head"]["learn_temperature"],
    )
    classifier = None
    if "classifier.weight" in doc["arrays"]:
        w = _array_from_entry(doc["arrays"]["classifier.weight"])
        classifier = LinearClassifier(w.shape[1], w.shape[0], init=False)
        classifier.weight = w
        classifier.bias = _array_from_entry(doc["arrays"]["classifier.bias"])
    return {
        "kind": doc["kind"],
        "net": net,
        "head": head,
        "classifier": classifier,
        "extra": doc.get("extra", {}),
    }
