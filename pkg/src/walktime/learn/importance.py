"""Feature importance: mean decrease in impurity for trees, coefficient shares for linear fits."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..dataset import feature_group
from ..errors import UndefinedStatisticError, UnsupportedModelError
from .ensemble import EnsembleModel
from .linear import LinearModel
from .tree import Tree


@dataclass(frozen=True)
class FeatureImportance:
    """Grouped importances sorted descending; ``method`` is ``mdi`` or ``coefficient_share``."""

    items: tuple[tuple[str, float], ...]
    method: str = "mdi"

    def as_dict(self) -> dict[str, float]:
        return dict(self.items)

    @property
    def labels(self) -> list[str]:
        return [k for k, _ in self.items]

    def to_csv(self) -> str:
        lines = ["feature,importance,method"]
        lines += [f"{k},{v!r},{self.method}" for k, v in self.items]
        return "\n".join(lines) + "\n"


def _grouped(raw: np.ndarray, column_names: Sequence[str], method: str) -> FeatureImportance:
    if len(raw) != len(column_names):
        raise ValueError(f"{len(raw)} importances for {len(column_names)} columns")
    totals: dict[str, list[float]] = {}
    for name, v in zip(column_names, raw):
        totals.setdefault(feature_group(name), []).append(float(v))
    sums = {k: math.fsum(v) for k, v in totals.items()}
    z = math.fsum(sums.values())
    if not z > 0:
        raise UndefinedStatisticError("model has no splits or no nonzero coefficients; importance undefined")
    shares = {k: v / z for k, v in sums.items()}
    # descending by share, label order breaks exact ties
    items = tuple(sorted(shares.items(), key=lambda kv: (-kv[1], kv[0])))
    return FeatureImportance(items, method)


def feature_importance(model, column_names: Sequence[str] | None = None,
                       coefficient_share: bool = False) -> FeatureImportance:
    """Normalized importance per reporting group.

    Trees and ensembles use MDI averaged over trees. Linear models are
    refused unless ``coefficient_share`` is set, in which case the shares of
    |coefficient| are returned (coefficients on the standardized scale).
    """
    if isinstance(model, LinearModel):
        if not coefficient_share:
            raise UnsupportedModelError(
                f"{model.family} is linear; pass the coefficient-share flag for |coefficient| shares"
            )
        names = column_names or model.column_names
        return _grouped(np.abs(model.coefficients), names, "coefficient_share")
    if isinstance(model, Tree):
        if column_names is None:
            raise ValueError("column_names is required for a bare tree")
        return _grouped(model.raw_importance(len(column_names)), column_names, "mdi")
    if isinstance(model, EnsembleModel):
        names = column_names or model.column_names
        p = len(names)
        raw = np.mean([t.raw_importance(p) for t in model.trees], axis=0)
        return _grouped(raw, names, "mdi")
    raise UnsupportedModelError(f"feature importance is not defined for {type(model).__name__}")
