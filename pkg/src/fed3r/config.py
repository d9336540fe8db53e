"""
Experiment configuration: a YAML document validated into frozen pydantic models.

Example::

    algorithm: fed3r
    seed: 7
    output_dir: runs/fed3r-alpha0.1
    data:
      synthetic: {classes: 10, d: 64, per_class_n: 500, separation: 3.0}
      partition: {scheme: dirichlet, alpha: 0.1}
    federation: {K: 50, kappa: 10, lambda: 0.01}

Any field can be overridden with ``dotted.key=value`` strings (values are parsed
as YAML scalars); overrides win over the file.
"""

from __future__ import annotations

import copy
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from src.base.config import ConfigInvalidValueError, ConfigValueMissingError
from src.fed3r.baselines import LPConfig
from src.fed3r.cost import FORWARD_MFLOPS_PRESETS, MOBILENETV2_FEATURE_PARAMS
from src.fed3r.data.partition import SCHEME_DIRICHLET, SCHEME_SINGLE_CLASS
from src.fed3r.federation import FederationConfig


class ConfigBase(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class Algorithm(str, Enum):
    FED3R = "fed3r"
    FED3R_RF = "fed3r_rf"
    FEDNCM = "fedncm"
    FEDAVG_LP = "fedavg_lp"
    FEDAVGM_LP = "fedavgm_lp"
    FED3R_FTLP = "fed3r_ftlp"


class PartitionSettings(ConfigBase):
    scheme: str = Field(default=SCHEME_DIRICHLET, pattern=f"^({SCHEME_DIRICHLET}|{SCHEME_SINGLE_CLASS})$")
    alpha: float = Field(default=0.1, ge=0, description="Dirichlet concentration; 0 means single_class")
    clients_per_class: int = Field(default=1, ge=1, description="single_class only")

    @property
    def resolved_scheme(self) -> str:
        return SCHEME_SINGLE_CLASS if self.alpha == 0 else self.scheme


class SyntheticData(ConfigBase):
    classes: int = Field(default=10, ge=2)
    d: int = Field(default=64, ge=2)
    per_class_n: int = Field(default=500, ge=1)
    separation: float = Field(default=3.0, ge=0)
    anisotropy: float = Field(default=1.0, ge=1)
    test_fraction: float = Field(default=0.2, ge=0, lt=1, description="0 evaluates on the training data")


class DatasetSource(ConfigBase):
    features_path: Optional[Path] = None
    manifest_path: Optional[Path] = Field(default=None, description="Partition generated from `partition` when unset")
    test_features_path: Optional[Path] = None
    synthetic: Optional[SyntheticData] = None
    partition: PartitionSettings = PartitionSettings()

    @model_validator(mode="after")
    def _one_source(self) -> "DatasetSource":
        if (self.features_path is None) == (self.synthetic is None):
            raise ValueError("exactly one of features_path and synthetic must be set")
        return self


class CostSettings(ConfigBase):
    preset: Optional[str] = Field(default=None, description="Forward FLOPs preset: landmarks, inaturalist or cifar100")
    F_phi: float = Field(default=332.9, gt=0)
    F_head: float = Field(default=2.6, gt=0)
    F_M: Optional[float] = Field(default=None, gt=0)
    b_fx: int = Field(default=MOBILENETV2_FEATURE_PARAMS, ge=0)
    bytes_per_value: int = Field(default=4, ge=1)
    include_rff_projection: bool = True
    include_bootstrap: bool = False
    ship_rff_map: bool = False

    @model_validator(mode="after")
    def _known_preset(self) -> "CostSettings":
        if self.preset is not None and self.preset not in FORWARD_MFLOPS_PRESETS:
            raise ValueError(f"unknown cost preset '{self.preset}'")
        return self

    def constants(self) -> dict[str, Any]:
        values = self.model_dump(exclude={"preset"})
        if self.preset is not None:
            values["F_phi"], values["F_head"], values["F_M"] = FORWARD_MFLOPS_PRESETS[self.preset]
        return values


class RunConfig(ConfigBase):
    algorithm: Algorithm = Algorithm.FED3R
    seed: int = 0
    output_dir: Path = Path("runs/default")
    threads: Optional[int] = Field(default=None, ge=1)
    data: DatasetSource
    federation: FederationConfig
    lp: LPConfig = LPConfig()
    cost: CostSettings = CostSettings()

    @model_validator(mode="before")
    @classmethod
    def _share_seed(cls, values: Any) -> Any:
        # the run seed is the only seed; the federation one always follows it
        if isinstance(values, Mapping) and isinstance(values.get("federation"), Mapping):
            values = {**values, "federation": {**values["federation"], "seed": values.get("seed", 0)}}
        return values

    @model_validator(mode="after")
    def _rff_matches_algorithm(self) -> "RunConfig":
        if self.algorithm == Algorithm.FED3R_RF and self.federation.rff is None:
            raise ValueError("algorithm fed3r_rf needs federation.rff")
        if self.algorithm not in (Algorithm.FED3R_RF, Algorithm.FED3R_FTLP) and self.federation.rff is not None:
            raise ValueError(f"algorithm {self.algorithm.value} does not use federation.rff; use fed3r_rf or fed3r_ftlp")
        if self.algorithm == Algorithm.FEDAVGM_LP and self.lp.server_momentum == 0:
            raise ValueError("algorithm fedavgm_lp needs lp.server_momentum > 0")
        if self.algorithm == Algorithm.FEDAVG_LP and self.lp.server_momentum != 0:
            raise ValueError("algorithm fedavg_lp needs lp.server_momentum = 0; use fedavgm_lp")
        return self


def apply_overrides(document: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Set ``dotted.key=value`` overrides on a nested mapping, creating levels as needed."""
    for override in overrides:
        key, separator, raw = override.partition("=")
        if not separator or not key:
            raise ConfigInvalidValueError(f"override must look like dotted.key=value: '{override}'")
        try:
            value = yaml.safe_load(raw) if raw else None
        except yaml.YAMLError as error:
            raise ConfigInvalidValueError(f"value of {key} is not valid YAML: '{raw}'") from error

        node = document
        *parents, leaf = key.split(".")
        for part in parents:
            child = node.get(part)
            if not isinstance(child, dict):
                child = node[part] = {}
            node = child
        node[leaf] = value
    return document


def _format_validation_error(error: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}" for item in error.errors()
    )


def parse_run_config(document: Optional[Mapping[str, Any]], overrides: Iterable[str] = ()) -> RunConfig:
    document = apply_overrides(copy.deepcopy(dict(document or {})), overrides)
    try:
        return RunConfig.model_validate(document)
    except ValidationError as error:
        raise ConfigInvalidValueError(f"invalid run config: {_format_validation_error(error)}") from error


def load_run_config(path: Path | str, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Read, override and validate a run configuration.

    :raises ConfigValueMissingError: if the file cannot be read
    :raises ConfigInvalidValueError: on YAML or validation errors
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise ConfigValueMissingError(f"config file {path} cannot be read: {error.strerror}") from error

    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as error:
        raise ConfigInvalidValueError(f"config file {path} is not valid YAML") from error
    if document is not None and not isinstance(document, dict):
        raise ConfigInvalidValueError(f"config file {path} must contain a mapping")

    return parse_run_config(document, overrides)
