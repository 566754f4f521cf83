"""Fixed-length feature vectors for learned demand prediction.

Per instance: raw open/capacity costs, seven per-client statistics of
the demand columns, and per-client dominance fractions (share of
scenarios where a scaled client demand is >= / <= every other client's
demand in the same scenario) at five scale factors. Length 19n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cflp import CflpInstance
from .errors import ModelError

DOMINANCE_FACTORS = (0.9, 1.0, 1.1, 1.2, 1.5)
STAT_NAMES = ("min", "max", "avg", "std", "med", "q75", "q25")


@dataclass(frozen=True)
class FeatureLayout:
    """Block structure of the feature vector: (name, start, length)."""

    n: int
    blocks: tuple[tuple[str, int, int], ...]

    @property
    def length(self) -> int:
        name, start, size = self.blocks[-1]
        return start + size


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    layout: FeatureLayout

    def block(self, name: str) -> np.ndarray:
        for block_name, start, size in self.layout.blocks:
            if block_name == name:
                return self.values[start:start + size]
        raise KeyError(name)


def feature_layout(n: int) -> FeatureLayout:
    blocks = []
    start = 0
    for name, size in (("c_f", n), ("c_v", n), ("stats", 7 * n),
                       ("dominance_ge", 5 * n), ("dominance_le", 5 * n)):
        blocks.append((name, start, size))
        start += size
    return FeatureLayout(n=n, blocks=tuple(blocks))


def feature_names(n: int) -> list[str]:
    """Column names in vector order (stats grouped per client)."""
    names = [f"c_f_{i}" for i in range(n)]
    names += [f"c_v_{i}" for i in range(n)]
    for i in range(n):
        names += [f"d_{stat}_{i}" for stat in STAT_NAMES]
    for kind in ("ge", "le"):
        for factor in DOMINANCE_FACTORS:
            tag = f"{int(round(factor * 100)):03d}"
            names += [f"dom_{kind}_c{tag}_{i}" for i in range(n)]
    return names


def _column_stats(demand: np.ndarray) -> np.ndarray:
    """Seven stats per column, client-major. Population std (divide by m).

    Columns are sorted first so the result is bit-identical under any
    permutation of the scenario rows (summation order is canonical).
    """
    demand = np.sort(demand, axis=0)
    stats = np.stack([
        demand[0],
        demand[-1],
        demand.mean(axis=0),
        demand.std(axis=0),
        np.median(demand, axis=0),
        np.quantile(demand, 0.75, axis=0),   # linear interpolation
        np.quantile(demand, 0.25, axis=0),
    ])
    return stats.T.ravel()


def _dominance(demand: np.ndarray, factor: float) -> tuple[np.ndarray, np.ndarray]:
    """Per client: fraction of scenarios where factor * own demand is
    >= (resp. <=) the demand of every other client in that scenario.
    Nonstrict comparisons; vacuous truth for n = 1."""
    m, n = demand.shape
    scaled = factor * demand[:, :, None]                # (m, i, j)
    others = demand[:, None, :]
    ge = scaled >= others
    le = scaled <= others
    eye = np.eye(n, dtype=bool)
    ge |= eye
    le |= eye
    return ge.all(axis=2).mean(axis=0), le.all(axis=2).mean(axis=0)


def extract_features(inst: CflpInstance) -> FeatureVector:
    """Deterministic 19n-vector; invariant to scenario-row permutations."""
    demand = inst.demand
    parts = [inst.c_f, inst.c_v, _column_stats(demand)]
    ge_parts, le_parts = [], []
    for factor in DOMINANCE_FACTORS:
        ge, le = _dominance(demand, factor)
        ge_parts.append(ge)
        le_parts.append(le)
    parts.extend(ge_parts)
    parts.extend(le_parts)
    values = np.concatenate(parts)
    layout = feature_layout(inst.n)
    if values.shape[0] != layout.length or not np.all(np.isfinite(values)):
        raise ModelError("feature extraction produced an invalid vector")
    return FeatureVector(values=values, layout=layout)
