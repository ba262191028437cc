"""Datasets, synthetic Gaussian clusters, and N-way K-shot episode sampling.

Episode streams are deterministic: sampling uses numpy's PCG64 generator
(stream-stable across numpy versions and platforms for a fixed seed), so a
(dataset, parameters, seed) triple always yields the same ordered sequence
of test episodes and paired model comparisons are exact.

The feature-file container is bit-exact for cross-run reproducibility:

    magic b"BELF" | u32 version | u32 input_dim | u32 num_classes |
    u32 num_samples | num_classes x u8 split id (0 base, 1 val, 2 novel) |
    num_samples x i32 label | num_samples*input_dim x f32 features

All integers little-endian; features row-major float32.  A CSV import path
(``label,split,f0..fD-1`` with a header row) is provided for convenience.
"""

import csv
import hashlib
import struct
from dataclasses import dataclass

import numpy as np

SPLIT_NAMES = ("base", "val", "novel")
FILE_MAGIC = b"BELF"
FILE_VERSION = 1


class FeatureFileError(ValueError):
    """Malformed feature file (parse or invariant failure)."""


@dataclass(frozen=True)
class Dataset:
    """One split's feature matrix and global class labels."""

    features: np.ndarray  # (N, D) float32
    labels: np.ndarray  # (N,) int32
    split: str

    def __post_init__(self):
        if self.split not in SPLIT_NAMES:
            raise ValueError(f"split must be one of {SPLIT_NAMES}")
        feats = np.asarray(self.features, dtype=np.float32)
        labels = np.asarray(self.labels, dtype=np.int32)
        if feats.ndim != 2 or labels.ndim != 1 or feats.shape[0] != labels.shape[0]:
            raise ValueError("features must be (N, D) with matching (N,) labels")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if labels.size and labels.min() < 0:
            raise ValueError("labels must be non-negative class ids")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)

    @property
    def num_samples(self):
        return self.features.shape[0]

    @property
    def input_dim(self):
        return self.features.shape[1]

    @property
    def class_ids(self):
        return np.unique(self.labels)


@dataclass(frozen=True)
class SplitDatasets:
    """Base/val/novel splits with pairwise-disjoint class sets."""

    base: Dataset
    val: Dataset
    novel: Dataset

    def __post_init__(self):
        dims = {d.input_dim for d in (self.base, self.val, self.novel) if d.num_samples}
        if len(dims) > 1:
            raise ValueError("splits disagree on input_dim")
        sets = {name: set(getattr(self, name).class_ids.tolist()) for name in SPLIT_NAMES}
        for a in SPLIT_NAMES:
            for b in SPLIT_NAMES:
                if a < b and sets[a] & sets[b]:
                    raise ValueError(
                        f"class sets of splits {a!r} and {b!r} overlap: "
                        f"{sorted(sets[a] & sets[b])}"
                    )

    @property
    def input_dim(self):
        return self.base.input_dim

    def split(self, name):
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian-cluster stand-in for a few-shot benchmark at desk scale.

    All class means (base, val, and novel alike) lie on a sphere of radius
    inter_class_separation inside a shared signal_dim-dimensional subspace
    of the input space; the shared subspace is what makes base classes
    informative about novel ones.  Per-class spread is Gaussian with scale
    cluster_spread, inflated by nuisance_scale inside a separate shared
    nuisance subspace (disjoint from the signal one).  The nuisance block
    mirrors pose/lighting variation in image benchmarks: class-irrelevant
    but high-variance, so distance-based classification benefits from a
    representation that learns to suppress it.
    """

    num_base: int = 64
    num_val: int = 16
    num_novel: int = 20
    samples_per_class: int = 100
    input_dim: int = 64
    signal_dim: int = 16
    nuisance_dim: int = 16
    nuisance_scale: float = 3.0
    cluster_spread: float = 1.0
    inter_class_separation: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if min(self.num_base, self.num_val, self.num_novel) < 1:
            raise ValueError("every split needs at least one class")
        if self.samples_per_class < 2 or self.input_dim < 1:
            raise ValueError("need samples_per_class >= 2 and input_dim >= 1")
        if self.signal_dim < 1 or self.signal_dim + self.nuisance_dim > self.input_dim:
            raise ValueError("need signal_dim >= 1 and signal_dim + nuisance_dim <= input_dim")
        if self.nuisance_dim < 0 or self.nuisance_scale < 1.0:
            raise ValueError("need nuisance_dim >= 0 and nuisance_scale >= 1")
        if self.cluster_spread < 0 or self.inter_class_separation < 0:
            raise ValueError("spread and separation must be non-negative")


def generate_synthetic(spec: SyntheticSpec) -> SplitDatasets:
    """Class means on a sphere of radius inter_class_separation (within the
    shared signal subspace), isotropic per-class spread; deterministic for
    a fixed seed."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    total = spec.num_base + spec.num_val + spec.num_novel
    joint, _ = np.linalg.qr(
        rng.standard_normal((spec.input_dim, spec.signal_dim + spec.nuisance_dim))
    )
    signal_basis = joint[:, : spec.signal_dim]
    nuisance_basis = joint[:, spec.signal_dim :]
    directions = rng.standard_normal((total, spec.signal_dim))
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    means = spec.inter_class_separation * (directions / norms) @ signal_basis.T

    features = np.empty((total * spec.samples_per_class, spec.input_dim), dtype=np.float32)
    labels = np.empty(total * spec.samples_per_class, dtype=np.int32)
    for c in range(total):
        rows = slice(c * spec.samples_per_class, (c + 1) * spec.samples_per_class)
        noise = rng.standard_normal((spec.samples_per_class, spec.input_dim))
        if spec.nuisance_dim:
            noise = noise + (spec.nuisance_scale - 1.0) * (
                noise @ nuisance_basis
            ) @ nuisance_basis.T
        samples = means[c] + spec.cluster_spread * noise
        features[rows] = samples.astype(np.float32)
        labels[rows] = c

    def subset(lo, hi, name):
        mask = (labels >= lo) & (labels < hi)
        return Dataset(features[mask], labels[mask], name)

    nb, nv = spec.num_base, spec.num_val
    return SplitDatasets(
        base=subset(0, nb, "base"),
        val=subset(nb, nb + nv, "val"),
        novel=subset(nb + nv, total, "novel"),
    )


@dataclass(frozen=True)
class Episode:
    """One N-way K-shot task with labels remapped to 0..way-1."""

    way: int
    shot: int
    query_count: int
    support_x: np.ndarray
    support_y: np.ndarray
    query_x: np.ndarray
    query_y: np.ndarray
    class_ids: np.ndarray  # original ids; position defines the remap
    support_idx: np.ndarray  # dataset row indices (for hashing/replay)
    query_idx: np.ndarray


def sample_episode(d: Dataset, way, shot, query_count, rng) -> Episode:
    """Draw one episode; support and query rows are disjoint by construction."""
    class_ids = d.class_ids
    if class_ids.shape[0] < way:
        raise ValueError(f"dataset has {class_ids.shape[0]} classes, need way={way}")
    chosen = rng.choice(class_ids, size=way, replace=False)
    per_class = shot + query_count
    support_idx = np.empty(way * shot, dtype=np.int64)
    query_idx = np.empty(way * query_count, dtype=np.int64)
    for k, cid in enumerate(chosen):
        rows = np.flatnonzero(d.labels == cid)
        if rows.shape[0] < per_class:
            raise ValueError(
                f"class {int(cid)} has {rows.shape[0]} samples, need "
                f"shot+query={per_class}"
            )
        picked = rng.choice(rows, size=per_class, replace=False)
        support_idx[k * shot : (k + 1) * shot] = picked[:shot]
        query_idx[k * query_count : (k + 1) * query_count] = picked[shot:]
    return Episode(
        way=way,
        shot=shot,
        query_count=query_count,
        support_x=d.features[support_idx],
        support_y=np.repeat(np.arange(way), shot),
        query_x=d.features[query_idx],
        query_y=np.repeat(np.arange(way), query_count),
        class_ids=np.asarray(chosen),
        support_idx=support_idx,
        query_idx=query_idx,
    )


def consistent_test_stream(d: Dataset, way, shot, query_count, num_episodes, seed):
    """Ordered, reproducible episode sequence for paired model comparison."""
    rng = np.random.Generator(np.random.PCG64(seed))
    return [sample_episode(d, way, shot, query_count, rng) for _ in range(num_episodes)]


def stream_fingerprint(episodes) -> str:
    """SHA-256 over the serialized episode structure (indices and shapes)."""
    h = hashlib.sha256()
    for ep in episodes:
        h.update(struct.pack("<iii", ep.way, ep.shot, ep.query_count))
        h.update(np.asarray(ep.class_ids, dtype=np.int64).tobytes())
        h.update(ep.support_idx.astype(np.int64).tobytes())
        h.update(ep.query_idx.astype(np.int64).tobytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Feature file container
# ---------------------------------------------------------------------------


def write_feature_file(path, splits: SplitDatasets):
    datasets = [splits.base, splits.val, splits.novel]
    num_samples = sum(d.num_samples for d in datasets)
    input_dim = splits.input_dim
    all_ids = np.concatenate([d.class_ids for d in datasets])
    num_classes = int(all_ids.max()) + 1 if all_ids.size else 0
    split_table = np.full(num_classes, 255, dtype=np.uint8)
    for sid, d in enumerate(datasets):
        split_table[d.class_ids] = sid
    if np.any(split_table == 255):
        missing = np.flatnonzero(split_table == 255)
        raise FeatureFileError(f"class ids without samples: {missing.tolist()}")

    with open(path, "wb") as fh:
        fh.write(FILE_MAGIC)
        fh.write(struct.pack("<IIII", FILE_VERSION, input_dim, num_classes, num_samples))
        fh.write(split_table.tobytes())
        for d in datasets:
            fh.write(d.labels.astype("<i4").tobytes())
        for d in datasets:
            fh.write(d.features.astype("<f4").tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise FeatureFileError(
            f"truncated file: expected {n} bytes for {what} at offset {fh.tell() - len(buf)}"
        )
    return buf


def load_feature_file(path) -> SplitDatasets:
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != FILE_MAGIC:
            raise FeatureFileError(f"bad magic {magic!r}, expected {FILE_MAGIC!r}")
        version, input_dim, num_classes, num_samples = struct.unpack(
            "<IIII", _read_exact(fh, 16, "header")
        )
        if version != FILE_VERSION:
            raise FeatureFileError(f"unsupported file version {version}")
        split_table = np.frombuffer(
            _read_exact(fh, num_classes, "split table"), dtype=np.uint8
        )
        labels = np.frombuffer(
            _read_exact(fh, 4 * num_samples, "labels"), dtype="<i4"
        ).astype(np.int32)
        features = np.frombuffer(
            _read_exact(fh, 4 * num_samples * input_dim, "features"), dtype="<f4"
        ).astype(np.float32).reshape(num_samples, input_dim)
        if fh.read(1):
            raise FeatureFileError("trailing bytes after features block")

    bad_split = np.flatnonzero(split_table > 2)
    if bad_split.size:
        raise FeatureFileError(f"invalid split id for class {int(bad_split[0])}")
    if labels.size and labels.max() >= num_classes:
        raise FeatureFileError(
            f"label {int(labels.max())} out of range; header declares "
            f"{num_classes} classes"
        )
    counts = np.bincount(labels, minlength=num_classes)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise FeatureFileError(
            f"header declares class {int(empty[0])} but it has no samples"
        )

    def subset(sid, name):
        mask = split_table[labels] == sid
        return Dataset(features[mask], labels[mask], name)

    return SplitDatasets(base=subset(0, "base"), val=subset(1, "val"), novel=subset(2, "novel"))


def import_csv(path) -> SplitDatasets:
    """Rows of ``label,split,f0..fD-1`` under a header line."""
    split_ids = {name: i for i, name in enumerate(SPLIT_NAMES)}
    labels, splits, rows = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 3 or header[0] != "label":
            raise FeatureFileError(f"{path}: missing 'label,split,f0..' header")
        dim = len(header) - 2
        for lineno, row in enumerate(reader, start=2):
            if len(row) != dim + 2:
                raise FeatureFileError(
                    f"{path}:{lineno}: expected {dim + 2} columns, got {len(row)}"
                )
            try:
                labels.append(int(row[0]))
                splits.append(split_ids[row[1]])
                rows.append([float(v) for v in row[2:]])
            except (ValueError, KeyError) as exc:
                raise FeatureFileError(f"{path}:{lineno}: {exc}") from exc
    labels = np.asarray(labels, dtype=np.int32)
    splits = np.asarray(splits)
    features = np.asarray(rows, dtype=np.float32)

    out = []
    for sid, name in enumerate(SPLIT_NAMES):
        mask = splits == sid
        out.append(Dataset(features[mask], labels[mask], name))
    return SplitDatasets(*out)


def dataset_file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
