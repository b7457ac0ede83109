"""Fitted pipelines (standardization + model), model files and personalized ETAs."""
from __future__ import annotations

import gzip
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from ..dataset import (
    DEFAULT_WEATHER_LEVELS, FeatureMatrix, FeatureMode, Standardization, column_names, encode_context,
    standardize,
)
from ..errors import SchemaError
from ..eta import EtaEstimate, WalkConfig, naive_eta
from .ensemble import EnsembleModel
from .families import fit_family, get_family
from .linear import LinearModel
from .tree import Tree

FORMAT_VERSION = 1


@dataclass(frozen=True)
class FittedModel:
    family_key: str
    model: "LinearModel | EnsembleModel"
    mode: FeatureMode
    column_names: tuple[str, ...]
    standardization: Standardization
    weather_levels: tuple[str, ...]
    hyperparams: dict
    seed: int

    @property
    def family(self) -> str:
        return get_family(self.family_key).name

    def predict_encoded(self, X) -> np.ndarray:
        """Predict from raw (unstandardized) encoded rows."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.column_names):
            raise SchemaError(f"expected {len(self.column_names)} columns, got {X.shape[1]}")
        return self.model.predict(self.standardization.apply(X))

    def predict(self, m: FeatureMatrix) -> np.ndarray:
        if tuple(m.column_names) != self.column_names:
            missing = sorted(set(self.column_names) - set(m.column_names))
            extra = sorted(set(m.column_names) - set(self.column_names))
            raise SchemaError(f"column mismatch: missing {missing}, unexpected {extra}")
        return self.predict_encoded(m.X)

    def predict_context(self, context: Mapping) -> float:
        row = encode_context(context, self.mode, self.weather_levels)
        return float(self.predict_encoded(row[None, :])[0])

    # -- serialization --------------------------------------------------

    def to_json(self) -> dict:
        header = {
            "format_version": FORMAT_VERSION,
            "family": self.family,
            "family_key": self.family_key,
            "feature_mode": self.mode.value,
            "column_names": list(self.column_names),
            "weather_levels": list(self.weather_levels),
            "standardization": self.standardization.to_json(),
            "hyperparams": _plain(self.hyperparams),
            "seed": self.seed,
        }
        return {"header": header, "body": _model_body(self.model)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, d: dict) -> "FittedModel":
        try:
            h = d["header"]
            version = h["format_version"]
        except (KeyError, TypeError):
            raise SchemaError("not a model file: missing header/format_version") from None
        if version != FORMAT_VERSION:
            raise SchemaError(f"unsupported model format_version {version}; expected {FORMAT_VERSION}")
        names = tuple(h["column_names"])
        return cls(
            family_key=h["family_key"],
            model=_model_from_body(d["body"], h["family"], names, h["hyperparams"], h["seed"]),
            mode=FeatureMode.parse(h["feature_mode"]),
            column_names=names,
            standardization=Standardization.from_json(h["standardization"]),
            weather_levels=tuple(h["weather_levels"]),
            hyperparams=dict(h["hyperparams"]),
            seed=int(h["seed"]),
        )

    def save(self, path) -> None:
        """Write the model JSON; a ``.gz`` suffix writes it gzip-compressed (mtime 0)."""
        data = self.dumps().encode()
        if str(path).endswith(".gz"):
            data = gzip.compress(data, compresslevel=6, mtime=0)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)

    @classmethod
    def load(cls, path) -> "FittedModel":
        raw = Path(path).read_bytes()
        try:
            if raw[:2] == b"\x1f\x8b":
                raw = gzip.decompress(raw)
            d = json.loads(raw.decode())
        except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
            raise SchemaError(f"{path}: not a valid model file ({e})") from None
        return cls.from_json(d)


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


def _model_body(model) -> dict:
    if isinstance(model, LinearModel):
        return {"kind": "linear", "intercept": model.intercept,
                "coefficients": [float(b) for b in model.coefficients],
                "model_hyperparams": _plain(model.hyperparams)}
    body = {"kind": "ensemble", "ensemble_family": model.family, "learning_rate": model.learning_rate,
            "init": model.init, "weights": None if model.weights is None else [float(w) for w in model.weights],
            "warning": model.warning, "model_hyperparams": _plain(model.hyperparams),
            "trees": [t.to_json() for t in model.trees]}
    return body


def _model_from_body(body, family, names, hyperparams, seed):
    if body["kind"] == "linear":
        return LinearModel(float(body["intercept"]), np.array(body["coefficients"], dtype=float), family,
                           names, hyperparams=body.get("model_hyperparams", {}))
    if body["kind"] == "ensemble":
        w = body["weights"]
        return EnsembleModel(
            body["ensemble_family"], tuple(Tree.from_json(t) for t in body["trees"]), names,
            weights=None if w is None else np.array(w, dtype=float), learning_rate=body["learning_rate"],
            init=body["init"], hyperparams=body.get("model_hyperparams", {}), seed=seed, warning=body["warning"],
        )
    raise SchemaError(f"unknown model body kind {body['kind']!r}")


def fit_pipeline(m: FeatureMatrix, family: str, hyperparams: dict, seed: int = 0) -> FittedModel:
    """Standardize on all rows of ``m`` and fit ``family`` with ``hyperparams``."""
    fam = get_family(family)
    ms = standardize(m, np.arange(m.n))
    model = fit_family(fam, ms, dict(hyperparams), seed)
    return FittedModel(fam.key, model, m.mode, tuple(m.column_names), ms.standardization,
                       tuple(m.weather_levels), dict(hyperparams), int(seed))


def personalized_eta(
    route_remaining_m: float,
    cfg: WalkConfig,
    model: FittedModel,
    context_features: Mapping,
    route_total_m: float | None = None,
) -> EtaEstimate:
    """Naive ETA plus the model's correction, scaled by the remaining share of the route.

    ``route_total_m`` defaults to the context's ``route_length_m``. The result
    is floored at 0 seconds.
    """
    naive = naive_eta(route_remaining_m, cfg).seconds
    correction = model.predict_context(context_features)
    total = route_total_m if route_total_m is not None else float(context_features["route_length_m"])
    if not total > 0:
        raise SchemaError("route_length_m must be > 0 to scale the correction")
    fraction = min(1.0, max(0.0, route_remaining_m / total))
    seconds = naive + correction * fraction
    return EtaEstimate.from_seconds(max(0.0, seconds))


def expected_columns(mode, weather_levels=DEFAULT_WEATHER_LEVELS) -> tuple[str, ...]:
    return tuple(column_names(mode, weather_levels))

