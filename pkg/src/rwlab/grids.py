"""Graded radial grids clustered toward r = 1.

Grids store the complement ``t = 1 - r`` as the primary coordinate so that
nodes as close as 1e-8 (or closer) to the boundary are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class GradedGrid:
    """Nodes ``r = 1 - t`` with ``t`` geometric in two pieces.

    A coarse head covers ``t`` in [t_max, 1] (so r = 0 is a node) and the
    body has ``n`` nodes from ``t_max`` down to ``t_min``.  Refinement level
    ``l`` of ``levels`` keeps the nodes with ``t >= t_min * 100**(levels-1-l)``,
    so the levels are nested prefixes and each reaches a factor 1e-2 closer
    to the boundary than the previous one.
    """

    t_min: float = 1e-8
    t_max: float = 0.1
    n: int = 512
    n_head: int = 32
    levels: int = 3

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max < 1):
            raise ParameterError("grid needs 0 < t_min < t_max < 1")
        if self.n < 4 or self.n_head < 1 or self.levels < 1:
            raise ParameterError("grid sizes must be positive")
        if self.t_min * 100.0 ** (self.levels - 1) >= self.t_max:
            raise ParameterError("too many refinement levels for this t range")

    @property
    def t(self):
        head = np.geomspace(1.0, self.t_max, self.n_head + 1)[:-1]
        body = np.geomspace(self.t_max, self.t_min, self.n)
        out = np.concatenate([head, body])
        out[0] = 1.0
        out[-1] = self.t_min
        return out

    @property
    def radii(self):
        return 1.0 - self.t

    def level_cut(self, level):
        """Number of leading nodes in refinement level ``level`` (0-based)."""
        if not 0 <= level < self.levels:
            raise ParameterError("refinement level out of range")
        floor = self.t_min * 100.0 ** (self.levels - 1 - level)
        return int(np.count_nonzero(self.t >= floor * (1 - 1e-12)))

    def meta(self):
        return {
            "t_min": self.t_min, "t_max": self.t_max, "n": self.n,
            "n_head": self.n_head, "levels": self.levels,
            "grid_min": 1.0 - self.t_min,
        }


def grid_from_min(grid_min=None, refinements=3, n=512, t_min=None):
    """Grid whose innermost radius is ``grid_min`` (given as 1 - eps)."""
    if t_min is None:
        if grid_min is None:
            t_min = 1e-8
        else:
            if not 0 < grid_min < 1:
                raise ParameterError("--grid-min must lie in (0, 1)")
            t_min = 1.0 - float(grid_min)
    t_max = 0.1
    return GradedGrid(t_min=t_min, t_max=t_max, n=n, levels=refinements)


def operator_grid(n=256, t_min=1e-8):
    """Complements for operator discretization: ``t`` geometric from 1 to ``t_min``."""
    if n < 3:
        raise ParameterError("operator grid needs at least 3 nodes")
    if not 0 < t_min < 1:
        raise ParameterError("t_min must lie in (0, 1)")
    t = np.geomspace(1.0, t_min, n)
    t[0], t[-1] = 1.0, t_min
    return t


def dyadic_band(t, eps):
    """Mask of nodes with ``t`` in [eps, 2 eps]."""
    t = np.asarray(t)
    return (t >= eps * (1 - 1e-12)) & (t <= 2 * eps * (1 + 1e-12))


def log_spacing(t):
    t = np.asarray(t)
    return float(np.max(np.abs(np.diff(np.log(t))))) if t.size > 1 else math.inf
