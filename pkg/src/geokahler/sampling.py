"""Deterministic low-discrepancy sample points over coordinate boxes."""

from __future__ import annotations

from typing import Mapping

import numpy as np
from scipy.stats import qmc

from .fields import Chart


class EmptyBoxError(ValueError):
    pass


def normalize_box(chart: Chart, box: Mapping[str, tuple]) -> np.ndarray:
    """Return a ``(dim, 2)`` array of bounds ordered like the chart coordinates."""
    missing = [c for c in chart.coords if c not in box]
    if missing:
        raise EmptyBoxError(f"box has no interval for coordinate(s) {', '.join(missing)}")
    extra = [c for c in box if c not in chart.coords]
    if extra:
        raise EmptyBoxError(f"box names unknown coordinate(s) {', '.join(extra)}")
    bounds = np.array([box[c] for c in chart.coords], dtype=float)
    if np.any(~np.isfinite(bounds)) or np.any(bounds[:, 1] < bounds[:, 0]):
        raise EmptyBoxError("box has an empty or non-finite interval")
    return bounds


def halton_points(chart: Chart, box: Mapping[str, tuple], count: int, offset: int = 1,
                  max_draws: int | None = None) -> np.ndarray:
    """First ``count`` Halton points in ``box`` that satisfy the chart domain.

    The sequence is unscrambled and starts at index ``offset``, so the result
    depends only on (box, count, offset).
    """
    bounds = normalize_box(chart, box)
    if count <= 0:
        return np.zeros((0, chart.dim))
    gen = qmc.Halton(d=chart.dim, scramble=False)
    if offset:
        gen.fast_forward(offset)
    limit = max_draws or max(1000, 50 * count)
    width = bounds[:, 1] - bounds[:, 0]
    accepted = []
    drawn = 0
    while len(accepted) < count and drawn < limit:
        batch = gen.random(min(256, limit - drawn))
        drawn += len(batch)
        for u in batch:
            p = bounds[:, 0] + u * width
            if chart.contains(p):
                accepted.append(p)
                if len(accepted) == count:
                    break
    if not accepted:
        raise EmptyBoxError(f"no point of the box lies in the domain of chart '{chart.name}'")
    return np.array(accepted)
