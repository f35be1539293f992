"""End-to-end orchestration: splits, ablation variants, order sweep, eval.

The shuffle behind the 8:1:1 split is pinned to splitmix64 + Fisher-Yates so
any implementation of these commands reproduces byte-identical partitions
from the same seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .grey import extract_guidance
from .hts import append_features
from .metrics import Metrics
from .model import (
    HffnnConfig,
    evaluate_matrices,
    model_from_checkpoint,
    train,
)

VARIANTS = ("dlgm1", "dlgm2", "dlgm3", "dlgm4")
GUIDANCE_ORDER = 3

_MASK64 = (1 << 64) - 1


def _splitmix64(seed: int):
    """The splitmix64 stream; pinned so splits replicate across implementations."""
    state = seed & _MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & _MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        yield z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates over 0..n-1 driven by splitmix64, j = draw mod (i+1)."""
    idx = list(range(n))
    stream = _splitmix64(seed)
    for i in range(n - 1, 0, -1):
        j = next(stream) % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


@dataclass
class SplitSpec:
    seed: int
    train: list[int]
    test: list[int]
    val: list[int]

    @property
    def sizes(self) -> tuple[int, int, int]:
        return len(self.train), len(self.test), len(self.val)


def split_dataset(records, seed: int) -> SplitSpec:
    """8:1:1 partition: train gets floor(0.8 n); test takes the odd leftover."""
    n = len(records)
    if n < 10:
        raise ValueError(f"need at least 10 records to split, got {n}")
    order = shuffled_indices(n, seed)
    train_n = int(0.8 * n)
    rest = n - train_n
    test_n = rest - rest // 2
    return SplitSpec(
        seed=seed,
        train=order[:train_n],
        test=order[train_n : train_n + test_n],
        val=order[train_n + test_n :],
    )


@dataclass
class Scaler:
    """Per-feature affine normalization fitted on training rows.

    Raw guidance entries can sit orders of magnitude above embedding values
    (A0 = -a0/lambda grows as trends flatten), which saturates the gate
    sigmoids; standardizing the augmented matrices keeps training healthy.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, matrices) -> "Scaler":
        stacked = np.vstack(matrices)
        return cls(mean=stacked.mean(axis=0), std=np.maximum(stacked.std(axis=0), 1e-8))

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        return (matrix - self.mean) / self.std

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, data) -> "Scaler":
        return cls(mean=np.asarray(data["mean"]), std=np.asarray(data["std"]))


def guidance_settings(variant: str) -> dict | None:
    """Which grey model (if any) feeds a variant's guidance columns."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant '{variant}'")
    if variant == "dlgm1":
        return None
    model = "gm" if variant == "dlgm2" else "fsgm"
    return {"model": model, "order": GUIDANCE_ORDER}


def guidance_map(records, settings: dict | None, cache: dict | None = None) -> dict | None:
    """id -> guidance vector, honoring a prefilled cache when provided."""
    if settings is None:
        return None
    if cache is not None:
        missing = [r.id for r in records if r.id not in cache]
        if missing:
            raise ValueError(f"guidance cache is missing ids: {missing[:5]}")
        return {r.id: cache[r.id] for r in records}
    return extract_guidance(records, order=settings["order"], model=settings["model"])


def augmented_matrices(records, gg_map: dict | None) -> list[np.ndarray]:
    if gg_map is None:
        return [r.embedding for r in records]
    return [append_features(r.embedding, gg_map[r.id][0]) for r in records]


def labeled_pairs(matrices, records, theme: str) -> list[tuple]:
    return [(m, r.labels[theme]) for m, r in zip(matrices, records)]


def architecture_for(variant: str) -> str:
    return "fc" if variant == "dlgm3" else "hffnn"


@dataclass
class RunReport:
    variant: str
    theme: str
    repeats: int
    per_repeat: list[dict]  # eval-set name -> Metrics per repeat
    mean: dict  # eval-set name -> aggregate means over repeats
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "theme": self.theme,
            "repeats": self.repeats,
            "per_repeat": [
                {name: m.to_dict() for name, m in rep.items()} for rep in self.per_repeat
            ],
            "mean": self.mean,
            "config": self.config,
        }


def _mean_over_repeats(per_repeat: list[dict]) -> dict:
    out = {}
    for name in per_repeat[0]:
        out[name] = {
            "macro_f1": float(np.mean([rep[name].macro_f1 for rep in per_repeat])),
            "macro_precision": float(
                np.mean([rep[name].macro_precision for rep in per_repeat])
            ),
            "macro_recall": float(np.mean([rep[name].macro_recall for rep in per_repeat])),
            "weighted_f1": float(np.mean([rep[name].weighted_f1 for rep in per_repeat])),
        }
    return out


def run_variant(
    variant: str,
    theme: str,
    train_records,
    eval_sets: dict,
    config: HffnnConfig,
    gg_cache: dict | None = None,
    stop_at_train_f1: float | None = None,
) -> RunReport:
    """Train one ablation variant `repeats` times (seeds seed+0..r-1), average.

    dlgm1 drops the guidance columns, dlgm2 swaps in GM(1,1) guidance
    (Fourier slots zeroed), dlgm3 bypasses the network for a mean-pool linear
    head, dlgm4 is the full pipeline.
    """
    settings = guidance_settings(variant)
    all_records = list(train_records)
    for recs in eval_sets.values():
        all_records.extend(recs)
    gg = guidance_map(all_records, settings, gg_cache)
    train_mats = augmented_matrices(train_records, gg)
    scaler = Scaler.fit(train_mats)
    train_pairs = labeled_pairs([scaler.apply(m) for m in train_mats], train_records, theme)
    eval_pairs = {
        name: labeled_pairs(
            [scaler.apply(m) for m in augmented_matrices(recs, gg)], recs, theme
        )
        for name, recs in eval_sets.items()
    }
    width = train_pairs[0][0].shape[1]
    architecture = architecture_for(variant)
    per_repeat = []
    for r in range(config.repeats):
        run_config = replace(config, seed=config.seed + r, d_in=width)
        ckpt = train(train_pairs, theme, run_config, architecture,
                     stop_at_train_f1=stop_at_train_f1)
        model = model_from_checkpoint(ckpt)
        per_repeat.append(
            {name: evaluate_matrices(model, pairs) for name, pairs in eval_pairs.items()}
        )
    return RunReport(
        variant=variant,
        theme=theme,
        repeats=config.repeats,
        per_repeat=per_repeat,
        mean=_mean_over_repeats(per_repeat),
        config=config.to_dict(),
    )


def train_variant_checkpoint(
    records,
    theme: str,
    variant: str,
    config: HffnnConfig,
    stop_at_train_f1: float | None = None,
) -> dict:
    """Single training run over all given records; checkpoint carries the
    augmentation recipe and scaler so evaluation can rebuild its inputs."""
    settings = guidance_settings(variant)
    gg = guidance_map(records, settings)
    mats = augmented_matrices(records, gg)
    scaler = Scaler.fit(mats)
    pairs = labeled_pairs([scaler.apply(m) for m in mats], records, theme)
    run_config = replace(config, d_in=pairs[0][0].shape[1])
    ckpt = train(pairs, theme, run_config, architecture_for(variant),
                 stop_at_train_f1=stop_at_train_f1)
    ckpt["pipeline"] = {
        "variant": variant,
        "guidance": settings,
        "scaler": scaler.to_dict(),
    }
    return ckpt


def evaluate(ckpt: dict, records, theme: str) -> Metrics:
    """Evaluate a checkpoint on raw records, rebuilding its input pipeline."""
    if theme != ckpt["theme"]:
        raise ValueError(f"checkpoint was trained for theme '{ckpt['theme']}', not '{theme}'")
    pipeline_info = ckpt.get("pipeline") or {}
    gg = guidance_map(records, pipeline_info.get("guidance"))
    mats = augmented_matrices(records, gg)
    if pipeline_info.get("scaler"):
        scaler = Scaler.from_dict(pipeline_info["scaler"])
        mats = [scaler.apply(m) for m in mats]
    model = model_from_checkpoint(ckpt)
    width = mats[0].shape[1]
    if width != model.config.d_in:
        raise ValueError(f"feature width {width} != checkpoint width {model.config.d_in}")
    return evaluate_matrices(model, labeled_pairs(mats, records, theme))


def sweep_order(records, theme: str, n_min: int, n_max: int, config: HffnnConfig) -> list[dict]:
    """Refit guidance and retrain the linear probe for each Fourier order.

    Splits 8:1:1 with the config seed and reports mean test/validation macro-F1
    per order. The probe is the dlgm3-style mean-pool linear head, cheap enough
    to rerun across the whole order range.
    """
    if n_min < 0 or n_max < n_min:
        raise ValueError(f"bad order range {n_min}..{n_max}")
    need = 2 * n_max + 4
    for record in records:
        if record.p < need:
            raise ValueError(
                f"record '{record.id}' has {record.p} tokens; order {n_max} needs >= {need}"
            )
    split = split_dataset(records, config.seed)
    groups = {
        "train": [records[i] for i in split.train],
        "test": [records[i] for i in split.test],
        "val": [records[i] for i in split.val],
    }
    rows = []
    for order in range(n_min, n_max + 1):
        gg = extract_guidance(records, order=order, model="fsgm")
        width = 2 * order + 3
        mats = {
            name: augmented_matrices(recs, gg) for name, recs in groups.items()
        }
        scaler = Scaler.fit(mats["train"])
        pairs = {
            name: labeled_pairs([scaler.apply(m) for m in ms], groups[name], theme)
            for name, ms in mats.items()
        }
        test_f1, val_f1 = [], []
        for r in range(config.repeats):
            run_config = replace(
                config, seed=config.seed + r, d_in=pairs["train"][0][0].shape[1]
            )
            ckpt = train(pairs["train"], theme, run_config, architecture="fc")
            model = model_from_checkpoint(ckpt)
            test_f1.append(evaluate_matrices(model, pairs["test"]).macro_f1)
            val_f1.append(evaluate_matrices(model, pairs["val"]).macro_f1)
        rows.append(
            {
                "order": order,
                "guidance_width": width,
                "test_f1": float(np.mean(test_f1)),
                "val_f1": float(np.mean(val_f1)),
            }
        )
    return rows


def save_guidance_cache(gg_map: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rid, (values, degenerate) in gg_map.items():
            fh.write(
                json.dumps(
                    {"id": rid, "gg": np.asarray(values).tolist(), "degenerate": bool(degenerate)}
                )
                + "\n"
            )


def load_guidance_cache(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                raise ValueError(f"line {lineno}: blank line in guidance cache")
            obj = json.loads(line)
            out[obj["id"]] = (np.asarray(obj["gg"], dtype=np.float64), bool(obj["degenerate"]))
    return out
