"""Feature-conditioned character decoder that inverts feature vectors.

Two parallel stacks of two dense layers map a normalized feature vector to
the initial hidden and cell state of a single LSTM layer, which then emits
a distribution over the 42 symbols (39 domain characters plus START, END and
PAD) at every step. Training uses teacher forcing and a focal loss;
inference feeds the argmax symbol back in (closed loop).

Forward and backward passes are written out in numpy so the gradients can
be checked against finite differences and every run is reproducible from
its seed.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import END, PAD, START, VOCAB_SIZE, decode_tokens, encode_domain
from .errors import DimensionMismatchError, DivergenceError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "fanci-privacy-decoder"
CHECKPOINT_VERSION = 1
PROB_FLOOR = 1e-12
BUCKET_BATCHES = 16


@dataclass
class ModelConfig:
    feature_dim: int = 45
    state_width: int = 200
    vocab: int = VOCAB_SIZE
    max_seq_len: int = 255
    focal_gamma: float = 2.0
    batch_size: int = 64
    max_epochs: int = 1000
    patience: int = 10
    learning_rate: float = 1e-3
    seed: int = 0
    dtype: str = "float64"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (int, float)) and not isinstance(v, bool) and f.name not in ("seed", "focal_gamma"):
                if v <= 0:
                    raise ValueError(f"{f.name} must be positive, got {v}")
        if self.focal_gamma < 0:
            raise ValueError("focal_gamma must be non-negative")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")


def parameter_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Canonical parameter names and shapes, in initialization order."""
    F, W, V = cfg.feature_dim, cfg.state_width, cfg.vocab
    shapes: dict[str, tuple[int, ...]] = {}
    for branch in ("h", "c"):
        shapes[f"{branch}_dense1.weight"] = (F, W)
        shapes[f"{branch}_dense1.bias"] = (W,)
        shapes[f"{branch}_dense2.weight"] = (W, W)
        shapes[f"{branch}_dense2.bias"] = (W,)
    # gate blocks along the last axis: input, forget, cell, output
    shapes["lstm.weight_input"] = (V, 4 * W)
    shapes["lstm.weight_recurrent"] = (W, 4 * W)
    shapes["lstm.bias"] = (4 * W,)
    shapes["output.weight"] = (W, V)
    shapes["output.bias"] = (V,)
    return shapes


def _fan_in(name: str, cfg: ModelConfig) -> int:
    if name.startswith(("h_dense1", "c_dense1")):
        return cfg.feature_dim
    if name.startswith("lstm"):
        return cfg.vocab + cfg.state_width
    return cfg.state_width


@dataclass
class DecoderModel:
    config: ModelConfig
    params: dict[str, np.ndarray]

    @property
    def dtype(self):
        return np.dtype(self.config.dtype)

    def num_parameters(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy(self) -> DecoderModel:
        return DecoderModel(self.config, {k: v.copy() for k, v in self.params.items()})


def build_model(cfg: ModelConfig | None = None) -> DecoderModel:
    """Allocate parameters, uniform in +-1/sqrt(fan_in), forget-gate bias 1."""
    cfg = cfg or ModelConfig()
    rng = np.random.default_rng(cfg.seed)
    params = {}
    for name, shape in parameter_shapes(cfg).items():
        bound = 1.0 / math.sqrt(_fan_in(name, cfg))
        params[name] = rng.uniform(-bound, bound, size=shape).astype(cfg.dtype)
    W = cfg.state_width
    params["lstm.bias"][W:2 * W] = 1.0
    return DecoderModel(cfg, params)


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_features(model: DecoderModel, features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=model.dtype)
    if features.ndim == 1:
        features = features[None, :]
    if features.ndim != 2 or features.shape[1] != model.config.feature_dim:
        raise DimensionMismatchError(
            f"expected feature vectors of width {model.config.feature_dim}, got shape {features.shape}")
    return features


def initial_states(model: DecoderModel, features: np.ndarray):
    """(h0, c0, cache) from the two dense branches."""
    p = model.params
    out = []
    cache = {}
    for branch in ("h", "c"):
        a1 = np.tanh(features @ p[f"{branch}_dense1.weight"] + p[f"{branch}_dense1.bias"])
        a2 = np.tanh(a1 @ p[f"{branch}_dense2.weight"] + p[f"{branch}_dense2.bias"])
        cache[branch] = (a1, a2)
        out.append(a2)
    return out[0], out[1], cache


def lstm_step(model: DecoderModel, tokens: np.ndarray, h: np.ndarray, c: np.ndarray):
    p = model.params
    W = model.config.state_width
    z = p["lstm.weight_input"][tokens] + h @ p["lstm.weight_recurrent"] + p["lstm.bias"]
    i = _sigmoid(z[:, :W])
    f = _sigmoid(z[:, W:2 * W])
    g = np.tanh(z[:, 2 * W:3 * W])
    o = _sigmoid(z[:, 3 * W:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    return h_new, c_new, (i, f, g, o, tc)


@dataclass
class ForwardCache:
    features: np.ndarray
    inputs: np.ndarray  # (B, T) token ids fed to the cell
    targets: np.ndarray  # (B, T) token ids to predict
    mask: np.ndarray  # (B, T) True where the target is not PAD
    branch: dict
    hs: np.ndarray  # (T+1, B, W), hs[0] = h0
    cs: np.ndarray  # (T+1, B, W)
    gates: list
    probs: np.ndarray  # (B, T, V)


def forward_teacher_forced(model: DecoderModel, features: np.ndarray, tokens: np.ndarray) -> ForwardCache:
    """Open-loop pass: the cell reads ``tokens[:, t]`` and predicts ``tokens[:, t+1]``."""
    features = _check_features(model, features)
    tokens = np.asarray(tokens, dtype=np.int64)
    if tokens.ndim == 1:
        tokens = tokens[None, :]
    if tokens.shape[0] != features.shape[0] or tokens.shape[1] < 2:
        raise DimensionMismatchError(
            f"{features.shape[0]} feature vectors vs token batch of shape {tokens.shape}")
    if tokens.min() < 0 or tokens.max() >= model.config.vocab:
        raise DimensionMismatchError("token id outside the vocabulary")
    inputs, targets = tokens[:, :-1], tokens[:, 1:]
    B, T = inputs.shape
    h, c, branch = initial_states(model, features)
    hs = np.empty((T + 1, B, model.config.state_width), dtype=model.dtype)
    cs = np.empty_like(hs)
    hs[0], cs[0] = h, c
    gates = []
    for t in range(T):
        h, c, g = lstm_step(model, inputs[:, t], h, c)
        hs[t + 1], cs[t + 1] = h, c
        gates.append(g)
    p = model.params
    logits = hs[1:] @ p["output.weight"] + p["output.bias"]
    probs = _softmax(logits).transpose(1, 0, 2)
    return ForwardCache(features, inputs, targets, targets != PAD, branch, hs, cs, gates, probs)


def focal_loss(probs: np.ndarray, targets: np.ndarray, gamma: float = 2.0,
               mask: np.ndarray | None = None) -> float:
    """Mean of -(1 - p_t)^gamma * ln(p_t) over non-PAD target positions."""
    probs = np.asarray(probs)
    targets = np.asarray(targets, dtype=np.int64)
    if mask is None:
        mask = targets != PAD
    pt = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    pt = np.clip(pt, PROB_FLOOR, 1.0)
    per_step = -((1.0 - pt) ** gamma) * np.log(pt)
    n = mask.sum()
    if n == 0:
        return 0.0
    return float(math.fsum(per_step[mask].tolist()) / n)


def _focal_logit_grad(probs, targets, mask, gamma):
    """d(mean focal loss)/d(logits), shape (B, T, V)."""
    pt = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    clipped = pt < PROB_FLOOR
    pt = np.clip(pt, PROB_FLOOR, 1.0)
    one_minus = 1.0 - pt
    log_pt = np.log(pt)
    # dL/dp_t for L = -(1-p)^g ln p
    if gamma == 0:
        dl_dp = -1.0 / pt
    else:
        dl_dp = gamma * one_minus ** (gamma - 1) * log_pt - one_minus ** gamma / pt
    dl_dp = np.where(mask & ~clipped, dl_dp, 0.0) / max(int(mask.sum()), 1)
    # dp_t/dz_k = p_t (delta_tk - s_k)
    grad = -probs * (dl_dp * pt)[..., None]
    np.put_along_axis(grad, targets[..., None],
                      np.take_along_axis(grad, targets[..., None], axis=-1) + (dl_dp * pt)[..., None],
                      axis=-1)
    return grad


def loss_and_grads(model: DecoderModel, features: np.ndarray, tokens: np.ndarray,
                   gamma: float | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Focal loss of a teacher-forced batch and its gradient for every parameter."""
    gamma = model.config.focal_gamma if gamma is None else gamma
    cache = forward_teacher_forced(model, features, tokens)
    loss = focal_loss(cache.probs, cache.targets, gamma, cache.mask)
    p = model.params
    W = model.config.state_width
    B, T = cache.inputs.shape
    grads = {k: np.zeros_like(v) for k, v in p.items()}

    dlogits = _focal_logit_grad(cache.probs, cache.targets, cache.mask, gamma).transpose(1, 0, 2)
    H = cache.hs[1:]
    grads["output.weight"] = H.reshape(-1, W).T @ dlogits.reshape(-1, model.config.vocab)
    grads["output.bias"] = dlogits.sum(axis=(0, 1))
    dH = dlogits @ p["output.weight"].T

    dZ = np.empty((T, B, 4 * W), dtype=model.dtype)
    dh_next = np.zeros((B, W), dtype=model.dtype)
    dc_next = np.zeros((B, W), dtype=model.dtype)
    w_rec_t = p["lstm.weight_recurrent"].T
    for t in range(T - 1, -1, -1):
        i, f, g, o, tc = cache.gates[t]
        dh = dH[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz = dZ[t]
        dz[:, :W] = dc * g * i * (1.0 - i)
        dz[:, W:2 * W] = dc * cache.cs[t] * f * (1.0 - f)
        dz[:, 2 * W:3 * W] = dc * i * (1.0 - g * g)
        dz[:, 3 * W:] = dh * tc * o * (1.0 - o)
        dh_next = dz @ w_rec_t
        dc_next = dc * f
    flat_dz = dZ.reshape(-1, 4 * W)
    grads["lstm.weight_recurrent"] = cache.hs[:-1].reshape(-1, W).T @ flat_dz
    grads["lstm.bias"] = flat_dz.sum(axis=0)
    onehot = np.zeros((flat_dz.shape[0], model.config.vocab), dtype=model.dtype)
    onehot[np.arange(flat_dz.shape[0]), cache.inputs.T.reshape(-1)] = 1.0
    grads["lstm.weight_input"] = onehot.T @ flat_dz

    for branch, d_out in (("h", dh_next), ("c", dc_next)):
        a1, a2 = cache.branch[branch]
        d2 = d_out * (1.0 - a2 * a2)
        grads[f"{branch}_dense2.weight"] = a1.T @ d2
        grads[f"{branch}_dense2.bias"] = d2.sum(axis=0)
        d1 = (d2 @ p[f"{branch}_dense2.weight"].T) * (1.0 - a1 * a1)
        grads[f"{branch}_dense1.weight"] = cache.features.T @ d1
        grads[f"{branch}_dense1.bias"] = d1.sum(axis=0)
    return loss, grads


# -- closed-loop sampling ------------------------------------------------------

def sample_closed_loop_tokens(model: DecoderModel, features: np.ndarray, max_len: int | None = None,
                              return_states: bool = False):
    """Greedy decoding; ties go to the lowest symbol index.

    Returns an (N, steps+1) token array starting with START. At most
    ``max_len - 2`` symbols are generated after START, so a decoded domain
    plus its markers always fits in ``max_len``.
    """
    features = _check_features(model, features)
    max_len = max_len or model.config.max_seq_len
    n = features.shape[0]
    h, c, _ = initial_states(model, features)
    tokens = np.full((n, 1), START, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    states = [h]
    p = model.params
    for _ in range(max(max_len - 2, 0)):
        h, c, _ = lstm_step(model, tokens[:, -1], h, c)
        states.append(h)
        logits = h @ p["output.weight"] + p["output.bias"]
        nxt = np.argmax(logits, axis=1)  # first maximum = lowest index
        nxt = np.where(done, PAD, nxt)
        tokens = np.concatenate([tokens, nxt[:, None]], axis=1)
        done |= nxt == END
        if done.all():
            break
    if return_states:
        return tokens, np.stack(states)
    return tokens


def sample_closed_loop(model: DecoderModel, features: np.ndarray, max_len: int | None = None) -> str:
    """Reconstruct one domain from one normalized feature vector."""
    return decode_tokens(sample_closed_loop_tokens(model, features, max_len)[0])


def reconstruct_many(model: DecoderModel, features: np.ndarray, max_len: int | None = None,
                     chunk: int = 512) -> list[str]:
    features = _check_features(model, features)
    out = []
    for start in range(0, features.shape[0], chunk):
        toks = sample_closed_loop_tokens(model, features[start:start + chunk], max_len)
        out.extend(decode_tokens(row) for row in toks)
    return out


# -- training ----------------------------------------------------------------------

@dataclass
class TrainingHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stop_reason: str = ""
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


class Adam:
    def __init__(self, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in params:
            g = grads[k]
            self.m[k] *= self.beta1
            self.m[k] += (1.0 - self.beta1) * g
            self.v[k] *= self.beta2
            self.v[k] += (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def encode_batch(domains: Sequence[str]) -> np.ndarray:
    """START/END-framed token rows, PAD-filled to the longest domain in the batch."""
    width = max(len(d) for d in domains) + 2
    return np.array([encode_domain(d, width) for d in domains], dtype=np.int64)


def epoch_batches(lengths: Sequence[int], batch_size: int, rng: np.random.Generator,
                  bucket: int = BUCKET_BATCHES) -> list[np.ndarray]:
    """Shuffled mini-batches of indices, grouped by length to limit padding.

    The data is permuted, cut into chunks of ``bucket`` batches, each chunk is
    sorted by length (stable) and split into batches, and the batch order is
    permuted again.
    """
    lengths = np.asarray(lengths)
    order = rng.permutation(len(lengths))
    batches = []
    span = batch_size * bucket
    for start in range(0, len(order), span):
        chunk = order[start:start + span]
        chunk = chunk[np.argsort(lengths[chunk], kind="stable")]
        batches.extend(chunk[i:i + batch_size] for i in range(0, len(chunk), batch_size))
    return [batches[i] for i in rng.permutation(len(batches))]


def dataset_loss(model: DecoderModel, features: np.ndarray, domains: Sequence[str],
                 batch_size: int | None = None) -> float:
    """Token-weighted mean focal loss over a whole set, teacher forced."""
    batch_size = batch_size or model.config.batch_size
    total, count = [], 0
    for start in range(0, len(domains), batch_size):
        toks = encode_batch(domains[start:start + batch_size])
        cache = forward_teacher_forced(model, features[start:start + batch_size], toks)
        n = int(cache.mask.sum())
        total.append(focal_loss(cache.probs, cache.targets, model.config.focal_gamma, cache.mask) * n)
        count += n
    return math.fsum(total) / count


def train(model: DecoderModel, train_features: np.ndarray, train_domains: Sequence[str],
          val_features: np.ndarray, val_domains: Sequence[str],
          cfg: ModelConfig | None = None) -> tuple[DecoderModel, TrainingHistory]:
    """Mini-batch Adam on the focal loss with early stopping on validation loss.

    Returns a copy of the model holding the weights of the best validation
    epoch; the input model is left untouched.
    """
    cfg = cfg or model.config
    if not len(train_domains) or not len(val_domains):
        raise ValueError("training and validation sets must be non-empty")
    train_features = _check_features(model, train_features)
    val_features = _check_features(model, val_features)
    if len(train_features) != len(train_domains) or len(val_features) != len(val_domains):
        raise DimensionMismatchError("feature rows and domains differ in number")
    for d in list(train_domains) + list(val_domains):
        if len(d) + 2 > cfg.max_seq_len:
            raise DimensionMismatchError(f"{d!r} does not fit max_seq_len {cfg.max_seq_len}")

    current = model.copy()
    opt = Adam(current.params, lr=cfg.learning_rate)
    history = TrainingHistory()
    best = current.copy()
    best_val = math.inf
    waited = 0
    started = time.perf_counter()
    lengths = [len(d) for d in train_domains]
    for epoch in range(cfg.max_epochs):
        rng = np.random.default_rng([cfg.seed, epoch])
        losses, counts = [], 0
        for b, idx in enumerate(epoch_batches(lengths, cfg.batch_size, rng)):
            toks = encode_batch([train_domains[i] for i in idx])
            loss, grads = loss_and_grads(current, train_features[idx], toks, cfg.focal_gamma)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}, batch {b}")
            k = int((toks[:, 1:] != PAD).sum())
            losses.append(loss * k)
            counts += k
            opt.step(current.params, grads)
        train_loss = math.fsum(losses) / counts
        val_loss = dataset_loss(current, val_features, val_domains, cfg.batch_size)
        if not math.isfinite(val_loss):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if val_loss < best_val:
            best_val, history.best_epoch, waited = val_loss, epoch, 0
            best = current.copy()
        else:
            waited += 1
            if waited >= cfg.patience:
                history.stop_reason = f"no validation improvement for {cfg.patience} epochs"
                break
    else:
        history.stop_reason = f"reached max_epochs={cfg.max_epochs}"
    history.seconds = time.perf_counter() - started
    return best, history


# -- checkpoints -------------------------------------------------------------------

def save_checkpoint(model: DecoderModel, path: str | Path, history: TrainingHistory | None = None) -> None:
    """Write a text (JSON) checkpoint; float64 values round-trip exactly."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": asdict(model.config),
        "seed": model.config.seed,
        "tensors": [
            {"name": name, "shape": list(model.params[name].shape),
             "values": model.params[name].astype(np.float64).ravel().tolist()}
            for name in parameter_shapes(model.config)
        ],
    }
    if history is not None:
        doc["history"] = history.to_dict()
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=1)


def load_checkpoint(path: str | Path) -> DecoderModel:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: not a version {CHECKPOINT_VERSION} decoder checkpoint")
    cfg = ModelConfig(**doc["config"])
    shapes = parameter_shapes(cfg)
    params = {}
    for t in doc["tensors"]:
        if tuple(t["shape"]) != shapes.get(t["name"]):
            raise DimensionMismatchError(f"tensor {t['name']} has shape {t['shape']}")
        params[t["name"]] = np.array(t["values"], dtype=cfg.dtype).reshape(t["shape"])
    missing = set(shapes) - set(params)
    if missing:
        raise ValueError(f"{path}: missing tensors {sorted(missing)}")
    return DecoderModel(cfg, params)
