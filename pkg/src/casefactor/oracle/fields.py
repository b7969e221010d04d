"""Exhaustive evaluation of a Markov random field over all configurations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..mrf import Mrf
from .semantics import TooLarge

MAX_CONFIGS = 10 ** 6


@dataclass
class FieldSummary:
    log_z: float
    min_energy: float
    argmins: list[tuple[int, ...]]
    marginals: dict[tuple[int, int], float]  # (variable, value index) -> P

    @property
    def z(self) -> float:
        return math.exp(self.log_z)


def energy_grid(mrf: Mrf) -> np.ndarray:
    """Total energy of every configuration, one axis per variable."""
    shape = tuple(len(d) for d in mrf.domains)
    if math.prod(shape) > MAX_CONFIGS:
        raise TooLarge(f"{math.prod(shape)} configurations exceeds {MAX_CONFIGS}")
    grid = np.full(shape, float(mrf.offset))
    for t in mrf.terms:
        # move the table's axes into the full grid's axis order
        order = np.argsort(t.scope)
        table = np.transpose(t.table, order) if len(order) else t.table
        idx = [slice(None) if y in t.scope else np.newaxis for y in range(len(shape))]
        grid = grid + table[tuple(idx)]
    return grid


def enumerate_mrf(mrf: Mrf) -> FieldSummary:
    grid = energy_grid(mrf)
    lo = grid.min()
    w = np.exp(-(grid - lo))
    total = w.sum()
    log_z = -lo + math.log(total)
    marginals = {}
    for y in range(grid.ndim):
        axes = tuple(a for a in range(grid.ndim) if a != y)
        p = w.sum(axis=axes) / total
        for v, pv in enumerate(p):
            marginals[y, v] = float(pv)
    argmins = [tuple(int(i) for i in ix) for ix in np.argwhere(grid == lo)]
    return FieldSummary(float(log_z), float(lo), argmins, marginals)
