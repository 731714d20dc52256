"""Experiment configuration: a JSON document checked against a published schema."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema

from .model import ModelParams, Policy, ValidationError, parse_state


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("config.schema.json").read_text())


@dataclass(frozen=True)
class SweepSpec:
    p_grid: tuple[float, ...]


@dataclass(frozen=True)
class SimSpec:
    seed: int = 0
    n_cycles: int | None = 200_000
    horizon: float | None = None
    accounting: str = "lump"


@dataclass(frozen=True)
class ValidateSpec:
    seed: int = 0
    n_pairs: int = 20
    n_derivative_points: int = 10
    mc_cycles: int = 200_000
    corrupt_generator: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams
    policy: Policy
    R_list: tuple[float, ...] | None = None
    sweep: SweepSpec = field(default_factory=lambda: SweepSpec(tuple(i / 20 for i in range(21))))
    simulate: SimSpec = field(default_factory=SimSpec)
    validate: ValidateSpec = field(default_factory=ValidateSpec)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def rewards(self) -> list[float]:
        """R values to evaluate; the model's own ``r_B + r_F`` when no list is given."""
        return list(self.R_list) if self.R_list is not None else [self.params.R]


def _schema_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"config error at {where}: {err.message}"


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(doc, schema())
    except jsonschema.ValidationError as err:
        raise ValidationError(_schema_error(err)) from None

    params = ModelParams(**{k: (float(v) if k != "m" else v) for k, v in doc["model"].items()})

    pol = doc.get("policy", {"p": 0.5})
    if "per_state" in pol:
        if "p" in pol:
            raise ValidationError("policy takes either p or per_state, not both")
        table = {parse_state(k): v for k, v in pol["per_state"].items()}
        policy = Policy(per_state=table, default=pol.get("default", 0.0))
    else:
        policy = Policy(p=pol.get("p", 0.5))

    if "R_list" in doc and "rewards" in doc:
        raise ValidationError("give either R_list or rewards, not both")
    R_list = None
    if "R_list" in doc:
        R_list = tuple(float(r) for r in doc["R_list"])
    elif "rewards" in doc:
        R_list = tuple(float(rb + rf) for rb, rf in doc["rewards"])
    if R_list is not None and any(r < 0 for r in R_list):
        raise ValidationError("every R must be ≥ 0")

    sw = doc.get("sweep", {})
    if "p_grid" in sw and "n_points" in sw:
        raise ValidationError("sweep takes either p_grid or n_points, not both")
    if "p_grid" in sw:
        grid = tuple(float(p) for p in sw["p_grid"])
    else:
        n = sw.get("n_points", 21)
        grid = tuple(i / (n - 1) for i in range(n))
    if any(not 0.0 <= p <= 1.0 for p in grid):
        raise ValidationError("sweep p_grid values must lie in [0, 1]")

    sim = doc.get("simulate", {})
    if "horizon" in sim and "n_cycles" in sim:
        raise ValidationError("simulate takes either n_cycles or horizon, not both")
    sim_spec = SimSpec(
        seed=sim.get("seed", 0),
        n_cycles=None if "horizon" in sim else sim.get("n_cycles", 200_000),
        horizon=sim.get("horizon"),
        accounting=sim.get("accounting", "lump"),
    )
    val_spec = ValidateSpec(**doc.get("validate", {}))
    return ExperimentConfig(params, policy, R_list, SweepSpec(grid), sim_spec, val_spec, raw=doc)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)
