"""Hazard records and the embedding-to-scalar-series squeeze.

A hazard arrives as a p x d_emb matrix of per-token embeddings plus three
graded labels. Everything downstream of the grey model works on the scalar
series obtained by mean-squeezing that matrix row by row.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

THEME_LEVELS = {"severity": 5, "possibility": 5, "risk": 4}
GUIDANCE_WIDTH = 9  # fixed Fourier order 3: (eta, lambda, A0, A1, B1, A2, B2, A3, B3)


class SchemaError(ValueError):
    """Raised when a record file violates the NDJSON record schema."""


@dataclass
class HazardRecord:
    id: str
    tokens: list[str]
    embedding: np.ndarray  # p x d_emb, float64
    labels: dict[str, int]

    @property
    def p(self) -> int:
        return self.embedding.shape[0]

    @property
    def d_emb(self) -> int:
        return self.embedding.shape[1]


@dataclass
class HTS:
    """Scalar hazard time series x(0)."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return len(self.values)


@dataclass
class CumulativeSeries:
    """Averaged first-order accumulation x(1), defined for t = 1..n-1."""

    values: np.ndarray


@dataclass
class PeriodEstimate:
    crossings: int  # strict sign changes between adjacent terms
    omega: float


def _validate_labels(labels: dict, lineno: int) -> dict[str, int]:
    out = {}
    for theme, top in THEME_LEVELS.items():
        if theme not in labels:
            raise SchemaError(f"line {lineno}: missing label '{theme}'")
        level = labels[theme]
        if not isinstance(level, int) or isinstance(level, bool) or not 1 <= level <= top:
            raise SchemaError(
                f"line {lineno}: label '{theme}'={level!r} outside 1..{top}"
            )
        out[theme] = level
    return out


def record_from_obj(obj: dict, lineno: int = 0) -> HazardRecord:
    """Build a validated HazardRecord from a decoded NDJSON object."""
    for key in ("id", "tokens", "embedding", "labels"):
        if key not in obj:
            raise SchemaError(f"line {lineno}: missing field '{key}'")
    if not isinstance(obj["id"], str):
        raise SchemaError(f"line {lineno}: 'id' must be a string")
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or any(not isinstance(t, str) for t in tokens):
        raise SchemaError(f"line {lineno}: 'tokens' must be a list of strings")
    rows = obj["embedding"]
    if not isinstance(rows, list) or len(rows) == 0:
        raise SchemaError(f"line {lineno}: 'embedding' must be a non-empty list of rows")
    width = None
    for row in rows:
        if not isinstance(row, list) or len(row) == 0:
            raise SchemaError(f"line {lineno}: embedding rows must be non-empty lists")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SchemaError(
                f"line {lineno}: ragged embedding rows ({len(row)} != {width})"
            )
    try:
        embedding = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"line {lineno}: non-numeric embedding value ({exc})") from exc
    if not np.all(np.isfinite(embedding)):
        raise SchemaError(f"line {lineno}: embedding contains non-finite values")
    labels = _validate_labels(obj["labels"], lineno)
    return HazardRecord(id=obj["id"], tokens=list(tokens), embedding=embedding, labels=labels)


def load_records(path) -> list[HazardRecord]:
    """Load an NDJSON record file, rejecting the whole file on any bad line."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip() == "":
                raise SchemaError(f"line {lineno}: blank line")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise SchemaError(f"line {lineno}: expected a JSON object")
            records.append(record_from_obj(obj, lineno))
    return records


def record_to_obj(record: HazardRecord) -> dict:
    return {
        "id": record.id,
        "tokens": record.tokens,
        "embedding": record.embedding.tolist(),
        "labels": dict(record.labels),
    }


def save_records(records, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_obj(record)) + "\n")


def squeeze(embedding: np.ndarray) -> HTS:
    """Mean-squeeze a p x d_emb matrix into a length-p scalar series."""
    embedding = np.asarray(embedding, dtype=np.float64)
    if embedding.ndim != 2 or embedding.shape[0] < 1 or embedding.shape[1] < 1:
        raise ValueError(f"expected a p x d matrix with p,d >= 1, got {embedding.shape}")
    return HTS(values=embedding.mean(axis=1))


def accumulate(hts: HTS) -> CumulativeSeries:
    """Averaged first-order accumulation.

    x1[t] = (sum_{k<=t} x0[k] + sum_{k<=t} x0[k+1]) / 2 for t = 1..n-1, so the
    first difference of x1 is exactly the mean of adjacent raw terms.
    """
    x = np.asarray(hts.values, dtype=np.float64)
    if len(x) < 2:
        raise ValueError(f"series too short to accumulate (n={len(x)}, need n >= 2)")
    lead = np.cumsum(x)[:-1]
    lag = np.cumsum(x[1:])
    return CumulativeSeries(values=(lead + lag) / 2.0)


def estimate_period(hts: HTS) -> PeriodEstimate:
    """Count strict sign changes; omega = 2*pi / count, or 2*pi / n if none.

    A pair whose product is zero (either value exactly zero) is not a
    crossing. Compared via signs rather than the literal product so that
    x_i * x_{i+1} underflowing to zero cannot hide a crossing. A series that
    never crosses zero gets one full period over the observed window.
    """
    x = np.asarray(hts.values, dtype=np.float64)
    n = len(x)
    if n < 2:
        raise ValueError(f"series too short for period estimation (n={n})")
    signs = np.sign(x)
    crossings = int(np.sum(signs[:-1] * signs[1:] < 0.0))
    omega = 2.0 * math.pi / crossings if crossings >= 1 else 2.0 * math.pi / n
    return PeriodEstimate(crossings=crossings, omega=omega)


def append_features(embedding: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Broadcast a feature vector onto every token row of an embedding matrix."""
    embedding = np.asarray(embedding, dtype=np.float64)
    features = np.asarray(features, dtype=np.float64).reshape(-1)
    tiled = np.tile(features, (embedding.shape[0], 1))
    return np.hstack([embedding, tiled])


def concat_guidance(record: HazardRecord, gg) -> np.ndarray:
    """Append the 9-element guidance vector to every token row of a record."""
    values = np.asarray(getattr(gg, "values", gg), dtype=np.float64).reshape(-1)
    if len(values) != GUIDANCE_WIDTH:
        raise ValueError(f"guidance length {len(values)} != {GUIDANCE_WIDTH}")
    return append_features(record.embedding, values)
