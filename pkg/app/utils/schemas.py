"""Wire models of the JSON outputs; their JSON schemas are shipped with the package."""
import json
import os
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.utils.errors import InvalidInputError


class PartitionModel(BaseModel):

    """Stable partition with its strong representation."""

    model_config = ConfigDict(extra="forbid")

    m: List[int] = Field(..., description="block boundaries, strictly increasing, last equals n")
    nu: List[int] = Field(..., description="block sizes")
    f_block: List[float] = Field(..., description="block means, nondecreasing")
    m_prime: List[int] = Field(..., description="boundaries followed by a strictly larger block mean, and n")
    q: int = Field(..., ge=1)
    q_prime: int = Field(..., ge=1)
    k0: int = Field(..., ge=0)


class HModel(BaseModel):

    """Determinant prefactor h(x) by column."""

    model_config = ConfigDict(extra="forbid")

    drift: List[float]
    f: List[float]
    p: List[int]


class AsymptoticLawModel(BaseModel):

    """gamma, alpha as numerator/denominator, and h."""

    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(..., ge=0)
    alpha_num: int = Field(..., ge=0)
    alpha_den: int = Field(..., ge=1, le=2)
    h: HModel


class TailEstimateModel(BaseModel):

    """A survival probability with error bound and method tag."""

    model_config = ConfigDict(extra="forbid")

    value: float
    error: float = Field(..., ge=0)
    method: str = Field(..., pattern="^(km|exact|proposition|closed2|mc|asymptotic)$")
    t: float = Field(..., gt=0)
    n: int = Field(..., ge=1)


class FlagsModel(BaseModel):

    """Interpretation flags used by the direct constant."""

    model_config = ConfigDict(extra="forbid")

    a1_convention: str = Field(..., pattern="^(mean|sum)$")
    s_convention: str = Field(..., pattern="^(gram|printed)$")


class ConstantReportModel(BaseModel):

    """Direct and extracted constants with the fit diagnostics."""

    model_config = ConfigDict(extra="allow")

    a1: Optional[float] = None
    a2: Optional[float] = None
    a3: Optional[float] = None
    c_direct: Optional[float] = None
    c_extracted: Optional[float] = None
    fit_residual: float = Field(0.0, ge=0)
    t_grid: List[float] = Field(default_factory=list)
    flags: FlagsModel
    converging: Optional[bool] = None
    deviations: List[float] = Field(default_factory=list)
    oracle: Optional[str] = None
    drifts: List[float] = Field(default_factory=list)
    x: List[float] = Field(default_factory=list)


class RunManifestModel(BaseModel):

    """Command line, configuration, version, wall time and outputs of a run."""

    command: List[str]
    config: Dict[str, Any]
    version: str
    wall_time: float = Field(..., ge=0)
    outputs: Any


SCHEMAS = {
    "partition": PartitionModel,
    "law": AsymptoticLawModel,
    "tail": TailEstimateModel,
    "constant": ConstantReportModel,
    "manifest": RunManifestModel,
}


def get_model(name: str):
    """Model class by schema name."""
    try:
        return SCHEMAS[name]
    except KeyError:
        raise InvalidInputError("unknown schema {!r}; expected one of {}".format(name, sorted(SCHEMAS)))


def schema_for(name: str) -> Dict[str, Any]:
    """JSON schema of a wire model."""
    return get_model(name).model_json_schema()


def validate_payload(name: str, payload: Dict[str, Any]):
    """Validate a JSON payload against its model; raises pydantic.ValidationError on mismatch."""
    return get_model(name).model_validate(payload)


def write_schemas(directory: str):
    """Write every schema as ``<name>.schema.json``."""
    os.makedirs(directory, exist_ok=True)
    for name in SCHEMAS:
        with open(os.path.join(directory, name + ".schema.json"), "w", encoding="utf-8") as f:
            json.dump(schema_for(name), f, indent=2, sort_keys=True)
            f.write("\n")
