"""Pydantic models for graph documents and run configuration."""
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from .errors import ConfigurationError

STRATEGY_NAMES = (
    "perfect",
    "ugv-only",
    "kemeny",
    "k-shortest",
    "mpsp",
    "bidirectional",
    "multi-bidirectional",
)

# Column order of the summary tables.
STRATEGY_LABELS = {
    "perfect": "Perfect knowledge",
    "ugv-only": "UGV-only",
    "kemeny": "Kemeny",
    "k-shortest": "k-shortest paths",
    "mpsp": "MPSP",
    "bidirectional": "Bidirectional",
}

DEFAULT_UGV_SPEED = 20.0
DEFAULT_UAV_SPEED = 40.0
DEFAULT_RATIOS = ((20.0, 20.0), (20.0, 30.0), (20.0, 40.0))
DEFAULT_STRATEGIES = (
    "ugv-only",
    "kemeny",
    "k-shortest",
    "mpsp",
    "bidirectional",
    "multi-bidirectional:3",
    "multi-bidirectional:5",
    "multi-bidirectional:7",
)


class VertexRecord(BaseModel):
    id: int = Field(ge=0)
    x: float = Field(allow_inf_nan=False)
    y: float = Field(allow_inf_nan=False)


class EdgeRecord(BaseModel):
    u: int = Field(ge=0)
    v: int = Field(ge=0)
    length: float = Field(allow_inf_nan=False)


class GraphDocument(BaseModel):
    """On-disk road network: coordinates and lengths in meters."""

    vertices: List[VertexRecord]
    edges: List[EdgeRecord]


class SpeedConfig(BaseModel):
    v_g: float = Field(default=DEFAULT_UGV_SPEED, gt=0, allow_inf_nan=False)
    v_a: float = Field(default=DEFAULT_UAV_SPEED, gt=0, allow_inf_nan=False)

    @classmethod
    def parse(cls, ratio: str) -> "SpeedConfig":
        """Parse a 'v_g:v_a' ratio such as '20:40'."""
        parts = ratio.split(":")
        try:
            v_g, v_a = (float(part) for part in parts)
        except ValueError as e:
            raise ConfigurationError(f"Speed ratio '{ratio}' must look like 20:40") from e
        return cls(v_g=v_g, v_a=v_a)

    @property
    def ratio(self) -> str:
        return f"{self.v_g:g}:{self.v_a:g}"


class StrategyConfig(BaseModel):
    """Strategy name plus the parameters the strategies read."""

    name: str
    k: int = Field(default=5, ge=1)
    m: int = Field(default=20, ge=1)
    mc_runs: int = Field(default=1000, ge=1)
    uavs: int = Field(default=1, ge=1)
    weighting: Literal["uniform", "inverse-length"] = "uniform"

    @field_validator("name")
    @classmethod
    def _known_name(cls, value: str) -> str:
        if value not in STRATEGY_NAMES:
            raise ValueError(f"Unknown strategy '{value}'; expected one of {', '.join(STRATEGY_NAMES)}")
        return value

    @model_validator(mode="after")
    def _strategy_parameters(self) -> "StrategyConfig":
        if self.name == "k-shortest" and self.k < 2:
            raise ValueError("k-shortest needs k >= 2")
        return self

    @classmethod
    def parse(cls, text: str, **defaults) -> "StrategyConfig":
        """Parse 'name' or 'name:param' (uav count for multi-bidirectional, k for k-shortest)."""
        name, _, param = text.strip().partition(":")
        values = dict(defaults)
        values["name"] = name
        if param:
            field = {"multi-bidirectional": "uavs", "k-shortest": "k", "mpsp": "m"}.get(name)
            if field is None:
                raise ConfigurationError(f"Strategy '{name}' takes no parameter")
            try:
                values[field] = int(param)
            except ValueError as e:
                raise ConfigurationError(f"Strategy parameter '{param}' is not an integer") from e
        return cls(**values)

    @property
    def uav_count(self) -> int:
        if self.name in ("perfect", "ugv-only"):
            return 0
        if self.name == "multi-bidirectional":
            return self.uavs
        return 1

    @property
    def label(self) -> str:
        if self.name == "multi-bidirectional":
            return f"{self.uavs}-UAVs"
        return STRATEGY_LABELS[self.name]


class RunConfig(BaseModel):
    """One simulation: a graph, one instance (file or seed), one strategy."""

    graph: Path
    instance: Optional[Path] = None
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    strategy: StrategyConfig
    speeds: SpeedConfig = SpeedConfig()
    events_out: Optional[Path] = None
    criticality_cache: Optional[Path] = None

    @model_validator(mode="after")
    def _instance_source(self) -> "RunConfig":
        if self.instance is not None and self.seed is not None:
            raise ValueError("Give either an instance file or a seed, not both")
        if self.instance is None and self.seed is None:
            self.seed = 0
        return self


class BatchConfig(BaseModel):
    """Cross product of graphs, instances, strategies and speed ratios."""

    graphs: List[Path] = Field(min_length=1)
    seeds: List[int] = Field(default_factory=list)
    instance_dir: Optional[Path] = None
    strategies: List[StrategyConfig] = Field(min_length=1)
    ratios: List[SpeedConfig] = Field(min_length=1)
    jobs: int = Field(default=1, ge=1)
    out: Optional[Path] = None
    format: Literal["csv", "json"] = "csv"
    criticality_cache: Optional[Path] = None

    @model_validator(mode="after")
    def _instance_source(self) -> "BatchConfig":
        if self.instance_dir is not None and self.seeds:
            raise ValueError("Give either an instance directory or seeds, not both")
        return self


def parse_seeds(text: str) -> List[int]:
    """Parse '0..49', '0-49' or '0,1,5' into a list of seeds; '' gives []."""
    text = text.strip()
    if not text:
        return []
    seeds: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            for sep in ("..", "-"):
                if sep in part:
                    lo, hi = part.split(sep, 1)
                    seeds.extend(range(int(lo), int(hi) + 1))
                    break
            else:
                seeds.append(int(part))
    except ValueError as e:
        raise ConfigurationError(f"Seed range '{text}' must look like 0..49 or 0,1,5") from e
    return seeds
