"""Synthetic hazard corpus generator.

Stands in for the confidential real-world reports: each record's token
embeddings carry a class-dependent exponential trend plus a class-dependent
periodic component in the row-mean direction (so grey guidance is informative
by construction) and optional class motifs in a channel block (so the
convolution branches are informative). Fully determined by (spec, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .hts import HazardRecord

MOTIF_PATTERNS = {
    1: (1.0, -1.0, 1.0),
    2: (-1.0, 1.0, 1.0),
    3: (1.0, 1.0, -1.0),
    4: (-1.0, -1.0, 1.0),
    5: (1.0, -1.0, -1.0),
}


@dataclass
class SynthSpec:
    n: int = 120
    classes: int = 3
    p: tuple = (12, 18)  # token-count range, inclusive; an int pins it
    d_emb: int = 16
    base: float = 6.0
    growth: object = 0.03  # scalar or one value per class
    amplitude: object = 2.0  # scalar or one value per class
    harmonics: list = field(default_factory=list)  # default 1..classes
    phase_jitter: bool = True
    growth_jitter: float = 0.002
    amplitude_jitter: float = 0.05
    noise_std: float = 0.5
    motif_strength: float = 0.0

    def __post_init__(self):
        if not 1 <= self.classes <= 5:
            raise ValueError("classes must be 1..5")
        if self.n < 1 or self.d_emb < 1:
            raise ValueError("n and d_emb must be >= 1")
        if isinstance(self.p, int):
            self.p = (self.p, self.p)
        else:
            self.p = tuple(self.p)
        if len(self.p) != 2 or self.p[0] < 1 or self.p[1] < self.p[0]:
            raise ValueError(f"bad token-count range {self.p}")
        if not self.harmonics:
            self.harmonics = list(range(1, self.classes + 1))
        if len(self.harmonics) != self.classes:
            raise ValueError("harmonics must list one value per class")

    def per_class(self, value) -> list[float]:
        if isinstance(value, (int, float)):
            return [float(value)] * self.classes
        value = [float(v) for v in value]
        if len(value) != self.classes:
            raise ValueError("per-class list must have one value per class")
        return value

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(**json.load(fh))


def generate(spec: SynthSpec, seed: int):
    """Build (records, truths); truths hold each record's generating parameters."""
    rng = np.random.default_rng(seed)
    growth = spec.per_class(spec.growth)
    amplitude = spec.per_class(spec.amplitude)
    records, truths = [], []
    for i in range(spec.n):
        cls = (i % spec.classes) + 1
        p = int(rng.integers(spec.p[0], spec.p[1] + 1))
        g = growth[cls - 1] + spec.growth_jitter * rng.standard_normal()
        a = amplitude[cls - 1] * (1.0 + spec.amplitude_jitter * rng.standard_normal())
        phase = rng.uniform(0.0, 2.0 * np.pi) if spec.phase_jitter else 0.0
        harmonic = spec.harmonics[cls - 1]
        t = np.arange(1, p + 1, dtype=np.float64)
        series = spec.base * np.exp(g * t) + a * np.cos(harmonic * 2.0 * np.pi / p * t + phase)
        embedding = series[:, None] + spec.noise_std * rng.standard_normal((p, spec.d_emb))
        if spec.motif_strength > 0.0 and p >= 3:
            pos = int(rng.integers(0, p - 2))
            cols = [(3 * (cls - 1) + j) % spec.d_emb for j in range(3)]
            pattern = np.array(MOTIF_PATTERNS[cls])
            embedding[pos : pos + 3, cols] += spec.motif_strength * pattern[:, None]
        records.append(
            HazardRecord(
                id=f"synth-{i:05d}",
                tokens=[f"tok{j}" for j in range(p)],
                embedding=embedding,
                labels={"severity": cls, "possibility": cls, "risk": min(cls, 4)},
            )
        )
        truths.append(
            {"class": cls, "growth": g, "amplitude": a, "harmonic": harmonic, "phase": phase}
        )
    return records, truths


def truth_features(truths) -> np.ndarray:
    """Per-record generating parameters as a feature matrix for the probe test."""
    return np.array(
        [
            [t["growth"], t["amplitude"], float(t["harmonic"]),
             np.cos(t["phase"]), np.sin(t["phase"])]
            for t in truths
        ]
    )
