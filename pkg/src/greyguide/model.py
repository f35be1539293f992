"""Gated hierarchical feature-fusion classifier.

Three stacked stages, each pairing a noisy self-attention sentence encoder
(SLFE) with a bank of five token-window convolutions (LLFE) fused through a
complementary gate (GAME). Stage outputs are tiled back onto the token axis so
the next stage convolves over an ever-wider feature map. A linear softmax head
maps the final fused vector to hazard levels for one theme.
"""

from __future__ import annotations

import json
import math
from collections import namedtuple
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import tensor as T
from .metrics import Metrics, compute_metrics
from .optim import Adam
from .tensor import Tensor

THEME_CLASSES = {"severity": 5, "possibility": 5, "risk": 4}
CHECKPOINT_VERSION = "hffnn-ckpt-v1"


@dataclass
class HffnnConfig:
    d_in: int = 0  # input feature width; filled from data when 0
    d_model: int = 8
    kernel_sizes: tuple = (2, 3, 4, 5, 6)
    filters_per_kernel: int = 2
    noise_std: float = 0.1
    tau_filter: float = 0.1
    tau_out: float = 0.5
    activation: str = "tanh"
    lr: float = 1e-5
    epochs: int = 50
    batch_size: int = 128
    seed: int = 0
    repeats: int = 5
    theme_classes: dict = field(default_factory=lambda: dict(THEME_CLASSES))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["kernel_sizes"] = list(self.kernel_sizes)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "HffnnConfig":
        data = dict(data)
        if "kernel_sizes" in data:
            data["kernel_sizes"] = tuple(data["kernel_sizes"])
        return cls(**data)


def slfe_forward(x: Tensor, noise_std: float, rng, training: bool) -> Tensor:
    """Noisy self-attention pooling of a p x d sequence into one d-vector.

    C = softmax_rows((X X^T + N) / sqrt(d)); each token's weight is the
    softmaxed complement of its attention self-score, v = softmax(1 - diag C);
    the pooled feature is v X. A 1-D input is returned unchanged (for p = 1
    these formulas collapse to the identity regardless of noise).
    """
    if x.data.ndim == 1:
        return x
    p, d = x.data.shape
    scores = T.matmul(x, T.transpose(x))
    if training and noise_std > 0.0:
        scores = T.add(scores, rng.normal(0.0, noise_std, (p, p)))
    attention = T.softmax(T.mul(scores, 1.0 / math.sqrt(d)))
    complement = T.add(1.0, T.mul(T.diag_part(attention), -1.0))
    weights = T.softmax(complement)
    return T.matmul(weights, x)


def llfe_forward(x: Tensor, params: dict, prefix: str, config: HffnnConfig) -> list[Tensor]:
    """Five convolution branches (window lengths 2..6), each globally max-pooled.

    Sequences shorter than a window are zero-padded at the tail so every
    branch stays defined.
    """
    activation = T.ACTIVATIONS[config.activation]
    features = []
    for h in config.kernel_sizes:
        padded = T.pad_rows(x, h)
        u = T.conv1d(padded, params[f"{prefix}.conv{h}.k"], params[f"{prefix}.conv{h}.b"],
                     activation)
        features.append(T.maxpool_columns(u))
    return features


GameResult = namedtuple("GameResult", ["phi", "q", "h", "gamma", "r_tilde"])


def game_forward(
    f_s: Tensor, f_locals: list[Tensor], params: dict, prefix: str, config: HffnnConfig
) -> GameResult:
    """Filter the local branches, fuse with the sentence feature, squash.

    Each branch passes a low-temperature sigmoid filter gate and a tanh
    transform; the concatenated branches are projected to model width, then a
    fusion gate Q blends sentence and local features as Q*f_s + (1-Q)*r with
    the complementary weight H = 1 - Q. Output is squashed by the
    tau=tau_out sigmoid.
    """
    w_f, b_f = params[f"{prefix}.filter.w"], params[f"{prefix}.filter.b"]
    w_r, b_r = params[f"{prefix}.local.w"], params[f"{prefix}.local.b"]
    # the 5 branches share weights, so they run batched as rows of a 5 x F block
    f_count = f_locals[0].data.shape[0]
    stacked = T.reshape(T.concat(f_locals), (len(f_locals), f_count))
    gate = T.sigmoid_tau(T.add(T.matmul(stacked, w_f), b_f), config.tau_filter)
    filtered = T.tanh(T.add(T.matmul(T.mul(gate, stacked), w_r), b_r))
    r = T.reshape(filtered, (len(f_locals) * f_count,))
    r_tilde = T.matmul(r, params[f"{prefix}.project.w"])
    pre = T.add(
        T.add(T.matmul(f_s, params[f"{prefix}.fuse.w"]), params[f"{prefix}.fuse.b"]),
        T.add(T.matmul(r_tilde, params[f"{prefix}.fuse.v"]), params[f"{prefix}.fuse.d"]),
    )
    q = T.sigmoid_tau(pre, 1.0)
    h = T.add(1.0, T.mul(q, -1.0))
    gamma = T.add(T.mul(q, f_s), T.mul(h, r_tilde))
    phi = T.sigmoid_tau(
        T.add(T.matmul(gamma, params[f"{prefix}.out.w"]), params[f"{prefix}.out.b"]),
        config.tau_out,
    )
    return GameResult(phi=phi, q=q, h=h, gamma=gamma, r_tilde=r_tilde)


def sdm_forward(x: Tensor, params: dict, config: HffnnConfig, rng, training: bool) -> Tensor:
    """Three superposed SLFE/LLFE/GAME stages with feature-wise concatenation."""
    p = x.data.shape[0]
    f_s = slfe_forward(x, config.noise_std, rng, training)
    phi = game_forward(f_s, llfe_forward(x, params, "s1", config), params, "s1", config).phi
    x2 = T.concat([x, T.tile_rows(phi, p)], axis=1)
    phi2 = game_forward(
        slfe_forward(phi, config.noise_std, rng, training),
        llfe_forward(x2, params, "s2", config), params, "s2", config,
    ).phi
    x3 = T.concat([x2, T.tile_rows(phi2, p)], axis=1)
    return game_forward(
        slfe_forward(phi2, config.noise_std, rng, training),
        llfe_forward(x3, params, "s3", config), params, "s3", config,
    ).phi


def classify(phi: Tensor, params: dict, theme: str, config: HffnnConfig) -> Tensor:
    """Softmax probabilities over the theme's level space."""
    if theme not in config.theme_classes:
        raise ValueError(f"unknown theme '{theme}'")
    return T.softmax(T.add(T.matmul(phi, params["head.w"]), params["head.b"]))


def _glorot(rng, shape, fan_in, fan_out) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, shape)


class HFFNN:
    """Full network: input projection, three SDM stages, linear head."""

    architecture = "hffnn"

    def __init__(self, config: HffnnConfig, theme: str, rng=None):
        if theme not in config.theme_classes:
            raise ValueError(f"unknown theme '{theme}'")
        if config.d_in < 1:
            raise ValueError("config.d_in must be set before building the model")
        self.config = config
        self.theme = theme
        self.params: dict[str, Tensor] = {}
        if rng is None:
            rng = np.random.default_rng(config.seed)
        d_m, f_count = config.d_model, config.filters_per_kernel
        self._add("input.w", rng, (config.d_in, d_m))
        self._zeros("input.b", (d_m,))
        for stage in (1, 2, 3):
            width = stage * d_m
            for h in config.kernel_sizes:
                self.params[f"s{stage}.conv{h}.k"] = Tensor(
                    _glorot(rng, (f_count, h, width), h * width, f_count),
                    requires_grad=True,
                )
                self._zeros(f"s{stage}.conv{h}.b", (f_count,))
            self._add(f"s{stage}.filter.w", rng, (f_count, f_count))
            self._zeros(f"s{stage}.filter.b", (f_count,))
            self._add(f"s{stage}.local.w", rng, (f_count, f_count))
            self._zeros(f"s{stage}.local.b", (f_count,))
            self._add(f"s{stage}.project.w", rng, (len(config.kernel_sizes) * f_count, d_m))
            self._add(f"s{stage}.fuse.w", rng, (d_m, d_m))
            self._zeros(f"s{stage}.fuse.b", (d_m,))
            self._add(f"s{stage}.fuse.v", rng, (d_m, d_m))
            self._zeros(f"s{stage}.fuse.d", (d_m,))
            self._add(f"s{stage}.out.w", rng, (d_m, d_m))
            self._zeros(f"s{stage}.out.b", (d_m,))
        k = config.theme_classes[theme]
        self._add("head.w", rng, (d_m, k))
        self._zeros("head.b", (k,))

    def _add(self, name, rng, shape):
        self.params[name] = Tensor(_glorot(rng, shape, shape[0], shape[-1]),
                                   requires_grad=True)

    def _zeros(self, name, shape):
        self.params[name] = Tensor(np.zeros(shape), requires_grad=True)

    def forward(self, x: Tensor, training: bool = False, rng=None) -> Tensor:
        """Logits over the theme's levels for one p x d_in sample."""
        projected = T.add(T.matmul(x, self.params["input.w"]), self.params["input.b"])
        phi = sdm_forward(projected, self.params, self.config, rng, training)
        return T.add(T.matmul(phi, self.params["head.w"]), self.params["head.b"])


class MeanPoolFC:
    """Ablation head: token-mean of the input fed straight to the linear head."""

    architecture = "fc"

    def __init__(self, config: HffnnConfig, theme: str, rng=None):
        if theme not in config.theme_classes:
            raise ValueError(f"unknown theme '{theme}'")
        if config.d_in < 1:
            raise ValueError("config.d_in must be set before building the model")
        self.config = config
        self.theme = theme
        if rng is None:
            rng = np.random.default_rng(config.seed)
        k = config.theme_classes[theme]
        self.params = {
            "head.w": Tensor(_glorot(rng, (config.d_in, k), config.d_in, k),
                             requires_grad=True),
            "head.b": Tensor(np.zeros(k), requires_grad=True),
        }

    def forward(self, x: Tensor, training: bool = False, rng=None) -> Tensor:
        return T.add(T.matmul(T.mean_rows(x), self.params["head.w"]), self.params["head.b"])


ARCHITECTURES = {"hffnn": HFFNN, "fc": MeanPoolFC}


def build_model(architecture: str, config: HffnnConfig, theme: str, rng=None):
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture '{architecture}'")
    return ARCHITECTURES[architecture](config, theme, rng)


def predict_proba(model, x: np.ndarray) -> np.ndarray:
    """Deterministic inference probabilities for one sample."""
    logits = model.forward(Tensor(x), training=False).data
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def predict_level(model, x: np.ndarray) -> int:
    return int(np.argmax(predict_proba(model, x))) + 1


def _training_f1(model, dataset, k: int) -> float:
    preds = [predict_level(model, x) for x, _ in dataset]
    return compute_metrics(preds, [label for _, label in dataset], k).macro_f1


def train(
    dataset,
    theme: str,
    config: HffnnConfig,
    architecture: str = "hffnn",
    stop_at_train_f1: float | None = None,
    check_every: int = 10,
) -> dict:
    """Minibatch cross-entropy training with Adam; returns a checkpoint dict.

    dataset is a list of (matrix, level) pairs with 1-based levels. Attention
    noise is active during training only. The run is fully determined by
    (seed, config, data order). stop_at_train_f1 optionally ends training once
    the training-set macro-F1 reaches the target (checked every check_every
    epochs).
    """
    if not dataset:
        raise ValueError("empty dataset")
    k = config.theme_classes.get(theme)
    if k is None:
        raise ValueError(f"unknown theme '{theme}'")
    widths = {x.shape[1] for x, _ in dataset}
    if len(widths) != 1:
        raise ValueError(f"inconsistent feature widths {sorted(widths)}")
    d_in = widths.pop()
    if config.d_in == 0:
        config = replace(config, d_in=d_in)
    elif config.d_in != d_in:
        raise ValueError(f"config.d_in={config.d_in} but data width is {d_in}")
    for _, label in dataset:
        if not 1 <= label <= k:
            raise ValueError(f"label {label} outside 1..{k} for theme '{theme}'")
    rng = np.random.default_rng(config.seed)
    model = build_model(architecture, config, theme, rng)
    optimizer = Adam(model.params, lr=config.lr)
    loss_history = []
    stopped_early = False
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(dataset))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            optimizer.zero_grad()
            for i in batch:
                x, label = dataset[i]
                loss = T.cross_entropy(model.forward(Tensor(x), True, rng), label - 1)
                loss.backward()
                epoch_loss += float(loss.data)
            grads = {
                name: (t.grad if t.grad is not None else np.zeros_like(t.data)) / len(batch)
                for name, t in model.params.items()
            }
            optimizer.step(grads)
        loss_history.append(epoch_loss / len(dataset))
        epochs_run = epoch
        if stop_at_train_f1 is not None and (epoch % check_every == 0 or epoch == config.epochs):
            if _training_f1(model, dataset, k) >= stop_at_train_f1:
                stopped_early = True
                break
    return make_checkpoint(model, loss_history, epochs_run, stopped_early)


def make_checkpoint(model, loss_history=None, epochs_run=0, stopped_early=False) -> dict:
    return {
        "version": CHECKPOINT_VERSION,
        "architecture": model.architecture,
        "theme": model.theme,
        "config": model.config.to_dict(),
        "seed": model.config.seed,
        "params": {
            name: {"shape": list(t.data.shape), "data": t.data.reshape(-1).tolist()}
            for name, t in model.params.items()
        },
        "metadata": {
            "epochs_run": epochs_run,
            "loss_history": list(loss_history or []),
            "stopped_early": stopped_early,
        },
        "pipeline": {},
    }


def model_from_checkpoint(ckpt: dict):
    if ckpt.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unrecognized checkpoint version {ckpt.get('version')!r}")
    config = HffnnConfig.from_dict(ckpt["config"])
    model = build_model(ckpt["architecture"], config, ckpt["theme"])
    stored = ckpt["params"]
    if set(stored) != set(model.params):
        raise ValueError("checkpoint parameter names do not match the architecture")
    for name, tensor in model.params.items():
        entry = stored[name]
        data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        if data.shape != tensor.data.shape:
            raise ValueError(
                f"checkpoint shape {data.shape} != expected {tensor.data.shape} ({name})"
            )
        tensor.data = data
    return model


def save_checkpoint(ckpt: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ckpt, fh, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        ckpt = json.load(fh)
    if ckpt.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unrecognized checkpoint version {ckpt.get('version')!r}")
    return ckpt


def evaluate_matrices(model, dataset, k: int | None = None) -> Metrics:
    """Metrics from argmax predictions over (matrix, level) pairs."""
    if k is None:
        k = model.config.theme_classes[model.theme]
    d_in = model.config.d_in
    for x, _ in dataset:
        if x.shape[1] != d_in:
            raise ValueError(f"feature width {x.shape[1]} != model width {d_in}")
    preds = [predict_level(model, x) for x, _ in dataset]
    return compute_metrics(preds, [label for _, label in dataset], k)
