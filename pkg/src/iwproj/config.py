"""Run configuration: a JSON document validated against :data:`CONFIG_SCHEMA`.

Unknown keys are rejected so a mistyped budget never silently falls back to
a default. Cluster indices ``r_minus``/``r_plus`` in the file are 1-based,
matching the usual mathematical labelling; the Python API is 0-based.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import jsonschema

from .datagen import (
    ExperimentDesign,
    MCBudget,
    Prior,
    build_experiment1,
    build_experiment2,
)
from .errors import InvalidInputError
from .spectrum import ClusterSelection, SpectrumSpec

DEFAULT_N_GRID = (100, 300, 500, 1000, 2000, 3000)
FULL_BUDGET = MCBudget(3000, 50, 3000)
DESK_BUDGET = MCBudget(1000, 20, 1000)

_POS_INT = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "iwproj run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": ["exp1", "exp2", "custom"]},
        "custom": {
            "type": "object",
            "additionalProperties": False,
            "required": ["eigenvalues", "multiplicities", "laws", "r_minus", "r_plus"],
            "properties": {
                "eigenvalues": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                "multiplicities": {"type": "array", "items": _POS_INT, "minItems": 2},
                "laws": {
                    "type": "array",
                    "items": {"enum": ["gaussian", "uniform", "laplace", "discrete3"]},
                },
                "r_minus": _POS_INT,
                "r_plus": _POS_INT,
            },
        },
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "freq_reps": {"type": "integer", "minimum": 2},
        "realizations": {"type": "integer", "minimum": 4},
        "draws": {"type": "integer", "minimum": 10},
        "g_scale": {"type": "number", "exclusiveMinimum": 0},
        "b": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "workers": _POS_INT,
        "out": {"type": "string", "minLength": 1},
    },
    "allOf": [
        {
            "if": {"properties": {"experiment": {"const": "custom"}}, "required": ["experiment"]},
            "then": {"required": ["custom"]},
        }
    ],
}


@dataclass(frozen=True)
class CustomDesign:
    eigenvalues: tuple[float, ...]
    multiplicities: tuple[int, ...]
    laws: tuple[str, ...]
    r_minus: int
    r_plus: int


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "exp1"
    custom: CustomDesign | None = None
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    freq_reps: int = FULL_BUDGET.freq_reps
    realizations: int = FULL_BUDGET.realizations
    draws: int = FULL_BUDGET.draws
    g_scale: float = 1.0
    b: float = 1.0
    seed: int = 0
    workers: int = 1
    out: str = "results"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_grid"] = list(self.n_grid)
        if self.custom is None:
            del d["custom"]
        else:
            d["custom"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["custom"].items()}
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def with_budget(self, budget: MCBudget) -> "RunConfig":
        return replace(
            self, freq_reps=budget.freq_reps, realizations=budget.realizations, draws=budget.draws
        )

    def design(self) -> ExperimentDesign:
        kwargs = dict(
            n_grid=self.n_grid,
            mc=MCBudget(self.freq_reps, self.realizations, self.draws),
            prior=Prior(self.g_scale, self.b),
        )
        if self.experiment == "exp1":
            return build_experiment1(self.seed, **kwargs)
        if self.experiment == "exp2":
            return build_experiment2(self.seed, **kwargs)
        c = self.custom
        if c is None:
            raise InvalidInputError("custom experiment needs a 'custom' section")
        return ExperimentDesign(
            spectrum=SpectrumSpec(c.eigenvalues, c.multiplicities),
            laws=c.laws,
            selection=ClusterSelection(c.r_minus - 1, c.r_plus - 1),
            seed=self.seed,
            name="custom",
            **kwargs,
        )


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInputError(f"config error at {where}: {exc.message}") from exc


def from_dict(doc: dict) -> RunConfig:
    validate(doc)
    d = dict(doc)
    if "custom" in d:
        c = d["custom"]
        d["custom"] = CustomDesign(
            tuple(float(x) for x in c["eigenvalues"]),
            tuple(int(m) for m in c["multiplicities"]),
            tuple(c["laws"]),
            int(c["r_minus"]),
            int(c["r_plus"]),
        )
    if "n_grid" in d:
        d["n_grid"] = tuple(int(n) for n in d["n_grid"])
    cfg = RunConfig(**d)
    if cfg.experiment != "custom" and cfg.custom is not None:
        raise InvalidInputError("'custom' section given for a built-in experiment")
    return cfg


def loads(text: str) -> RunConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidInputError("config must be a JSON object")
    return from_dict(doc)


def load(path: str | Path) -> RunConfig:
    return loads(Path(path).read_text(encoding="utf-8"))
