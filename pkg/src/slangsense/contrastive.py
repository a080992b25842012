"""Contrastive sense encoder: a small feed-forward map trained with a
max-margin triplet objective so slang definition embeddings land near the
conventional senses of their word and away from senses of other words.

The network is deliberately minimal: one hidden layer as wide as the
input, tanh nonlinearity, linear output. Forward, backward and the Adam
update are written out by hand so gradients can be checked against finite
differences and training stays bitwise reproducible for a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Dataset
from .embeddings import EmbeddingTable, euclidean_distance
from .errors import ConfigError, DataError, DivergenceError

PARAMS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Triplet:
    """Embedding ids: a slang definition, a conventional sense of the same
    word, and a sense of a different word."""

    anchor: str
    positive: str
    negative: str


@dataclass
class TrainConfig:
    margin: float = 1.0
    learning_rate: float = 2.0 ** -5
    epochs: int = 4
    batch_size: int = 64
    negatives_per_positive: int = 1
    seed: int = 13
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    output_dim: int = 768

    def validate(self) -> None:
        if self.margin <= 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.negatives_per_positive < 1:
            raise ConfigError("negatives_per_positive must be >= 1")
        if self.output_dim < 1:
            raise ConfigError("output_dim must be >= 1")


@dataclass
class EncoderParams:
    """Weights of the two-layer encoder; immutable once training finishes."""

    w1: np.ndarray  # (input_dim, hidden_dim)
    b1: np.ndarray  # (hidden_dim,)
    w2: np.ndarray  # (hidden_dim, output_dim)
    b2: np.ndarray  # (output_dim,)

    @property
    def input_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[1]

    def check_finite(self) -> None:
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                raise DivergenceError(f"non-finite values in parameter {name}")

    def arrays(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def copy(self) -> "EncoderParams":
        return EncoderParams(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())


def init_encoder(input_dim: int, output_dim: int = 768, seed: int = 0) -> EncoderParams:
    """Fan-in scaled symmetric uniform initialization; biases start at zero."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
    hidden_dim = input_dim
    s1 = 1.0 / np.sqrt(input_dim)
    s2 = 1.0 / np.sqrt(hidden_dim)
    return EncoderParams(
        w1=rng.uniform(-s1, s1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(-s2, s2, size=(hidden_dim, output_dim)),
        b2=np.zeros(output_dim),
    )


def encode_batch(params: EncoderParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DataError(f"expected vectors of width {params.input_dim}, got shape {x.shape}")
    hidden = np.tanh(x @ params.w1 + params.b1)
    return hidden @ params.w2 + params.b2


def encode(params: EncoderParams, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != params.input_dim:
        raise DataError(f"expected a vector of width {params.input_dim}, got shape {v.shape}")
    return encode_batch(params, v[None, :])[0]


def triplet_loss(a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float) -> float:
    """Hinge on the anchor-positive vs anchor-negative distance gap."""
    return max(0.0, euclidean_distance(a, p) - euclidean_distance(a, n) + margin)


def _rowwise_distance(diff: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(diff * diff, axis=1))


def _safe_unit(diff: np.ndarray, dist: np.ndarray) -> np.ndarray:
    # Zero subgradient where the distance vanishes.
    out = np.zeros_like(diff)
    nonzero = dist > 0
    out[nonzero] = diff[nonzero] / dist[nonzero, None]
    return out


def batch_loss(params: EncoderParams, a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float) -> float:
    """Mean triplet loss over encoded rows of ``a``, ``p``, ``n``.

    Overflow is not trapped here; the training loop's divergence guard
    checks the result for finiteness.
    """
    with np.errstate(over="ignore", invalid="ignore"):
        u, v, w = encode_batch(params, a), encode_batch(params, p), encode_batch(params, n)
        hinge = _rowwise_distance(u - v) - _rowwise_distance(u - w) + margin
        return float(np.mean(np.maximum(hinge, 0.0)))


def batch_loss_and_grads(
    params: EncoderParams, a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean triplet loss and its analytic gradients for every parameter.

    Triplets sitting exactly on the hinge contribute zero gradient.
    """
    a = np.asarray(a, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    count = a.shape[0]

    with np.errstate(over="ignore", invalid="ignore"):
        za, zp, zn = a @ params.w1 + params.b1, p @ params.w1 + params.b1, n @ params.w1 + params.b1
        ha, hp, hn = np.tanh(za), np.tanh(zp), np.tanh(zn)
        u, v, w = ha @ params.w2 + params.b2, hp @ params.w2 + params.b2, hn @ params.w2 + params.b2

        diff_ap = u - v
        diff_an = u - w
        d_ap = _rowwise_distance(diff_ap)
        d_an = _rowwise_distance(diff_an)
        hinge = d_ap - d_an + margin
        loss = float(np.mean(np.maximum(hinge, 0.0)))

        scale = (hinge > 0.0).astype(np.float64) / count
        unit_ap = _safe_unit(diff_ap, d_ap)
        unit_an = _safe_unit(diff_an, d_an)
        g_u = scale[:, None] * (unit_ap - unit_an)
        g_v = scale[:, None] * -unit_ap
        g_w = scale[:, None] * unit_an

        grads = {k: np.zeros_like(arr) for k, arr in params.arrays().items()}
        for x, hidden, g_out in ((a, ha, g_u), (p, hp, g_v), (n, hn, g_w)):
            grads["w2"] += hidden.T @ g_out
            grads["b2"] += g_out.sum(axis=0)
            g_hidden = (g_out @ params.w2.T) * (1.0 - hidden * hidden)
            grads["w1"] += x.T @ g_hidden
            grads["b1"] += g_hidden.sum(axis=0)
    return loss, grads


def build_triplets(
    dataset: Dataset,
    embeddings: EmbeddingTable,
    config: TrainConfig,
    *,
    split: str = "train",
    seed: int | None = None,
) -> list[Triplet]:
    """Enumerate (slang definition, conventional sense) pairs for one split and
    sample seeded negatives from senses of other words."""
    rng = np.random.default_rng(config.seed if seed is None else seed)

    definitions: list[tuple[str, str]] = []
    seen: set[str] = set()
    for entry in dataset.split(split):
        if entry.definition_id not in seen:
            seen.add(entry.definition_id)
            definitions.append((entry.definition_id, entry.word))

    pool_ids: list[str] = []
    pool_words: list[str] = []
    for word in dataset.inventory.words:
        for sense in dataset.inventory.senses(word):
            pool_ids.append(sense.sense_id)
            pool_words.append(word)
    distinct_pool_words = set(pool_words)

    triplets: list[Triplet] = []
    for definition_id, word in definitions:
        if word not in dataset.inventory:
            raise DataError(f"word {word!r} has no conventional senses (unfiltered dataset?)")
        if distinct_pool_words <= {word}:
            raise DataError(f"no negative pool: every inventory sense belongs to {word!r}")
        if definition_id not in embeddings:
            raise DataError(f"no embedding for slang definition {definition_id!r}")
        for sense in dataset.inventory.senses(word):
            if sense.sense_id not in embeddings:
                raise DataError(f"no embedding for sense {sense.sense_id!r}")
            for _ in range(config.negatives_per_positive):
                while True:
                    j = int(rng.integers(len(pool_ids)))
                    if pool_words[j] != word:
                        break
                if pool_ids[j] not in embeddings:
                    raise DataError(f"no embedding for sense {pool_ids[j]!r}")
                triplets.append(Triplet(definition_id, sense.sense_id, pool_ids[j]))
    return triplets


@dataclass
class TrainResult:
    params: EncoderParams
    train_losses: list[float] = field(default_factory=list)
    dev_losses: list[float] = field(default_factory=list)
    initial_train_loss: float = 0.0
    initial_dev_loss: float | None = None


class _Adam:
    def __init__(self, shapes: dict[str, np.ndarray], config: TrainConfig):
        self.m = {k: np.zeros_like(v) for k, v in shapes.items()}
        self.v = {k: np.zeros_like(v) for k, v in shapes.items()}
        self.t = 0
        self.config = config

    def step(self, params: EncoderParams, grads: dict[str, np.ndarray]) -> None:
        cfg = self.config
        self.t += 1
        arrays = params.arrays()
        for key, grad in grads.items():
            self.m[key] = cfg.adam_beta1 * self.m[key] + (1 - cfg.adam_beta1) * grad
            self.v[key] = cfg.adam_beta2 * self.v[key] + (1 - cfg.adam_beta2) * grad * grad
            m_hat = self.m[key] / (1 - cfg.adam_beta1 ** self.t)
            v_hat = self.v[key] / (1 - cfg.adam_beta2 ** self.t)
            arrays[key] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)


def _gather(embeddings: EmbeddingTable, triplets: list[Triplet]):
    a = np.stack([embeddings.lookup(t.anchor) for t in triplets])
    p = np.stack([embeddings.lookup(t.positive) for t in triplets])
    n = np.stack([embeddings.lookup(t.negative) for t in triplets])
    return a, p, n


def train_encoder(
    triplets: list[Triplet],
    embeddings: EmbeddingTable,
    config: TrainConfig,
    *,
    dev_triplets: list[Triplet] | None = None,
    resample=None,
    init: EncoderParams | None = None,
) -> TrainResult:
    """Mini-batch Adam on the mean triplet loss over encoded vectors.

    ``resample``, when given, is called with the epoch index and must return
    that epoch's triplet list (used by the pipeline to redraw negatives).
    Deterministic for a fixed seed; aborts if the loss turns non-finite.
    """
    config.validate()
    if not triplets:
        raise ConfigError("cannot train on an empty triplet list")
    params = (init or init_encoder(embeddings.dim, config.output_dim, config.seed)).copy()
    adam = _Adam(params.arrays(), config)

    dev_batch = _gather(embeddings, dev_triplets) if dev_triplets else None
    result = TrainResult(params=params)
    a0, p0, n0 = _gather(embeddings, triplets)
    result.initial_train_loss = batch_loss(params, a0, p0, n0, config.margin)
    if dev_batch is not None:
        result.initial_dev_loss = batch_loss(params, *dev_batch, config.margin)

    for epoch in range(config.epochs):
        epoch_triplets = resample(epoch) if resample is not None else triplets
        if not epoch_triplets:
            raise ConfigError(f"epoch {epoch}: empty triplet list")
        a, p, n = _gather(embeddings, epoch_triplets)
        order = np.random.default_rng(np.random.SeedSequence([config.seed, 1, epoch])).permutation(len(epoch_triplets))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = batch_loss_and_grads(params, a[idx], p[idx], n[idx], config.margin)
            if not np.isfinite(loss):
                raise DivergenceError(f"training loss became non-finite in epoch {epoch}")
            adam.step(params, grads)
            total += loss * len(idx)
        result.train_losses.append(total / len(order))
        if dev_batch is not None:
            result.dev_losses.append(batch_loss(params, *dev_batch, config.margin))
    params.check_finite()
    return result


def save_params(params: EncoderParams, path: str | Path) -> None:
    """Versioned flat text file; reload reproduces encode outputs bitwise."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"encoder-params\t{PARAMS_FORMAT_VERSION}\n")
        fh.write(f"dims\t{params.input_dim}\t{params.hidden_dim}\t{params.output_dim}\n")
        for name, arr in params.arrays().items():
            mat = arr if arr.ndim == 2 else arr[None, :]
            fh.write(f"{name}\t{mat.shape[0]}\t{mat.shape[1]}\n")
            for row in mat:
                fh.write("\t".join(format(x, ".17g") for x in row) + "\n")


def load_params(path: str | Path) -> EncoderParams:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("encoder-params\t"):
        raise DataError(f"{path}: not an encoder parameter file")
    version = lines[0].split("\t")[1]
    if int(version) != PARAMS_FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format version {version}")
    dims = lines[1].split("\t")
    if dims[0] != "dims" or len(dims) != 4:
        raise DataError(f"{path}: malformed dims line")
    arrays: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines):
        header = lines[i].split("\t")
        if len(header) != 3:
            raise DataError(f"{path}: malformed array header {lines[i]!r}")
        name, rows, cols = header[0], int(header[1]), int(header[2])
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise DataError(f"{path}: truncated array {name!r}")
        arrays[name] = np.array([[float(x) for x in row.split("\t")] for row in block])
        i += 1 + rows
    try:
        params = EncoderParams(
            w1=arrays["w1"], b1=arrays["b1"][0], w2=arrays["w2"], b2=arrays["b2"][0]
        )
    except KeyError as exc:
        raise DataError(f"{path}: missing array {exc}") from None
    expected = (int(dims[1]), int(dims[2]), int(dims[3]))
    actual = (params.input_dim, params.hidden_dim, params.output_dim)
    if expected != actual:
        raise DataError(f"{path}: dims line {expected} does not match arrays {actual}")
    params.check_finite()
    return params
