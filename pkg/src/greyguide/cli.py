"""Command-line surface: synth, extract-gg, train, eval, sweep-n, split."""

from __future__ import annotations

import json
import sys

import click

from .grey import extract_guidance
from .hts import load_records, save_records
from .model import HffnnConfig, load_checkpoint, save_checkpoint
from .pipeline import (
    VARIANTS,
    evaluate,
    save_guidance_cache,
    split_dataset,
    sweep_order,
    train_variant_checkpoint,
)
from .synth import SynthSpec, generate

_INT_KEYS = {"epochs", "batch_size", "repeats", "d_model", "filters_per_kernel", "seed"}
_FLOAT_KEYS = {"lr", "noise_std", "tau_filter", "tau_out"}
_STR_KEYS = {"activation"}


def parse_config_file(path) -> dict:
    """Flat `key = value` lines; '#' starts a comment; unknown keys rejected."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _STR_KEYS:
                out[key] = value
            else:
                raise ValueError(f"line {lineno}: unknown config key '{key}'")
    return out


def config_from_file(path) -> HffnnConfig:
    return HffnnConfig(**parse_config_file(path)) if path else HffnnConfig()


@click.group()
def main():
    """Grey-guided hazard classification pipeline."""


@main.command()
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--seed", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
def synth(spec_path, seed, out_path):
    """Generate a synthetic NDJSON corpus from a JSON spec file."""
    records, _ = generate(SynthSpec.from_json(spec_path), seed)
    save_records(records, out_path)
    click.echo(f"wrote {len(records)} records to {out_path}")


@main.command("extract-gg")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--order", required=True, type=int)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--model", "grey_model", default="fsgm", type=click.Choice(["gm", "fsgm"]))
def extract_gg(input_path, order, out_path, grey_model):
    """Fit grey guidance for every record and write the NDJSON cache."""
    records = load_records(input_path)
    gg = extract_guidance(records, order=order, model=grey_model)
    save_guidance_cache(gg, out_path)
    flagged = sum(1 for _, degenerate in gg.values() if degenerate)
    click.echo(f"wrote guidance for {len(gg)} records to {out_path} "
               f"({flagged} flagged degenerate)")


@main.command("train")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--theme", required=True, type=click.Choice(["severity", "possibility", "risk"]))
@click.option("--variant", required=True, type=click.Choice(list(VARIANTS)))
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def train_cmd(input_path, theme, variant, config_path, out_path):
    """Train one variant on all records in the input file."""
    records = load_records(input_path)
    config = config_from_file(config_path)
    ckpt = train_variant_checkpoint(records, theme, variant, config)
    save_checkpoint(ckpt, out_path)
    losses = ckpt["metadata"]["loss_history"]
    click.echo(f"trained {variant}/{theme} for {ckpt['metadata']['epochs_run']} epochs "
               f"(final loss {losses[-1]:.4f}); checkpoint at {out_path}")


@main.command("eval")
@click.option("--ckpt", "ckpt_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--theme", required=True, type=click.Choice(["severity", "possibility", "risk"]))
@click.option("--report", "report_path", required=True, type=click.Path())
def eval_cmd(ckpt_path, input_path, theme, report_path):
    """Evaluate a checkpoint on a record file and write the metrics report."""
    ckpt = load_checkpoint(ckpt_path)
    records = load_records(input_path)
    metrics = evaluate(ckpt, records, theme)
    report = {
        "theme": theme,
        "variant": (ckpt.get("pipeline") or {}).get("variant"),
        "metrics": metrics.to_dict(),
        "config": ckpt["config"],
    }
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"macro F1 {metrics.macro_f1:.4f}, weighted F1 {metrics.weighted_f1:.4f}; "
               f"report at {report_path}")


@main.command("sweep-n")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--theme", required=True, type=click.Choice(["severity", "possibility", "risk"]))
@click.option("--min", "n_min", default=1, type=int)
@click.option("--max", "n_max", default=10, type=int)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, type=click.Path())
def sweep_n(input_path, theme, n_min, n_max, config_path, report_path):
    """Refit guidance and retrain the probe across a range of Fourier orders."""
    records = load_records(input_path)
    config = config_from_file(config_path)
    rows = sweep_order(records, theme, n_min, n_max, config)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump({"theme": theme, "rows": rows, "config": config.to_dict()}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(f"{'N':>3} {'width':>6} {'test F1':>9} {'val F1':>9}")
    for row in rows:
        click.echo(f"{row['order']:>3} {row['guidance_width']:>6} "
                   f"{row['test_f1']:>9.4f} {row['val_f1']:>9.4f}")


@main.command("split")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--seed", required=True, type=int)
@click.option("--out-prefix", "prefix", required=True, type=click.Path())
def split_cmd(input_path, seed, prefix):
    """Shuffle deterministically and write 8:1:1 train/test/val files."""
    records = load_records(input_path)
    split = split_dataset(records, seed)
    for name, index in (("train", split.train), ("test", split.test), ("val", split.val)):
        save_records([records[i] for i in index], f"{prefix}.{name}.ndjson")
    click.echo(f"split {len(records)} records into "
               f"{len(split.train)}/{len(split.test)}/{len(split.val)} at {prefix}.*.ndjson")


if __name__ == "__main__":
    sys.exit(main())
