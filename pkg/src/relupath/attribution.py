"""Per-pixel importance scoring, ranking, thresholding, and PPM overlays.

Scores come from the coefficients of the predicted label's logit, taken
from the concolic coefficient matrix. Three metrics: the signed coefficient
itself (co), coefficient times input value (coi), and absolute coefficient
(abs).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .symexec import CoefficientMatrix

METRICS = ("abs", "co", "coi")


@dataclass(frozen=True)
class ImportanceScore:
    pixel: int
    score: float
    metric: str


@dataclass(frozen=True)
class Ranking:
    """Scores sorted descending, ties broken by ascending pixel index."""

    entries: tuple[ImportanceScore, ...]
    label: int

    def pixels(self) -> list[int]:
        return [entry.pixel for entry in self.entries]


def score_pixels(coeffs: CoefficientMatrix, x: np.ndarray, label: int, metric: str) -> list[ImportanceScore]:
    """Score every pixel for the given output label under one metric."""
    n, m = coeffs.rows.shape
    if not 0 <= label < n:
        raise ValueError(f"label {label} out of range [0, {n})")
    if metric not in METRICS:
        raise ValueError(f"unknown metric '{metric}', expected one of {METRICS}")
    row = coeffs.rows[label]
    if metric == "co":
        values = row
    elif metric == "coi":
        values = row * np.asarray(x, dtype=np.float64)
    else:
        values = np.abs(row)
    return [ImportanceScore(pixel=j, score=float(values[j]), metric=metric) for j in range(m)]


def rank(scores: list[ImportanceScore], label: int = -1) -> Ranking:
    """Order scores descending; equal scores keep ascending pixel order."""
    entries = sorted(scores, key=lambda s: (-s.score, s.pixel))
    return Ranking(entries=tuple(entries), label=label)


def top_percent(ranking: Ranking, pct: float) -> list[int]:
    """First floor(m * pct / 100) pixels of the ranking, in rank order."""
    if not 0.0 < pct <= 100.0:
        raise ValueError(f"pct must be in (0, 100], got {pct}")
    m = len(ranking.entries)
    count = math.floor(m * pct / 100.0)
    return [entry.pixel for entry in ranking.entries[:count]]


def render_overlay(x: np.ndarray, highlight, color: str, path) -> None:
    """Write a plain-text P3 PPM: grayscale image, highlighted pixels in color.

    Grayscale byte = round(pixel * 255); highlighted pixels become pure
    green (0,255,0) or red (255,0,0). One "r g b" triple per line, row-major
    from the top-left.
    """
    x = np.asarray(x, dtype=np.float64)
    m = x.shape[0]
    side = math.isqrt(m)
    if side * side != m:
        raise ValueError(f"image length {m} is not a perfect square")
    if color not in ("green", "red"):
        raise ValueError(f"color must be 'green' or 'red', got '{color}'")
    marked = set(int(i) for i in highlight)
    rgb = "0 255 0" if color == "green" else "255 0 0"

    lines = [f"P3\n{side} {side}\n255"]
    for j in range(m):
        if j in marked:
            lines.append(rgb)
        else:
            g = int(round(x[j] * 255.0))
            lines.append(f"{g} {g} {g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
