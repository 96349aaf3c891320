import itertools
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import List, Optional, Tuple

from .Dynamics.infection_dag import DEFAULT_EPSILON
from .errors import ConfigurationError
from .Models.model_strategy import validate_model_parameters
from .Models.small_world_graph import Variant
from .utilities import default_output_dir, write_json

logger = logging.getLogger(__name__)

CONFIG_SCHEMA_VERSION = 1
DEFAULT_SEED = 42
DEFAULT_DELTA = 0.15
MAX_ROUNDS_FACTOR = 4
DIAGNOSTICS = ("dag", "census", "blocks", "trial")


@dataclass
class ExperimentSpec:
    """A sweep over (variant, gamma, L) points, each run for a number of seeded replicas."""

    variants: List[str] = field(default_factory=lambda: ["W"])
    L_values: List[int] = field(default_factory=lambda: [32, 64])
    m: int = 2
    k: int = 2
    gammas: List[float] = field(default_factory=lambda: [2.2])
    replicas: int = 10
    base_seed: int = DEFAULT_SEED
    max_rounds: Optional[int] = None
    max_rounds_factor: int = MAX_ROUNDS_FACTOR
    diagnostics: List[str] = field(default_factory=list)
    epsilon: float = DEFAULT_EPSILON
    delta: float = DEFAULT_DELTA
    trials: int = 20
    output_dir: str = field(default_factory=default_output_dir)
    n_jobs: int = 1

    def validate(self) -> "ExperimentSpec":
        if not self.variants or not self.L_values or not self.gammas:
            raise ConfigurationError("variants, L_values and gammas must all be non-empty")
        self.variants = [Variant.parse(v).value for v in self.variants]
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.m < self.k:
            raise ConfigurationError(f"m={self.m} must be >= k={self.k}")
        if self.replicas < 1:
            raise ConfigurationError(f"replicas must be >= 1, got {self.replicas}")
        for L, gamma in itertools.product(self.L_values, self.gammas):
            validate_model_parameters(L, self.m, gamma)
        unknown = set(self.diagnostics) - set(DIAGNOSTICS)
        if unknown:
            raise ConfigurationError(f"Unknown diagnostics {sorted(unknown)}, expected a subset of {DIAGNOSTICS}")
        if self.max_rounds is not None and self.max_rounds < 0:
            raise ConfigurationError(f"max_rounds must be >= 0, got {self.max_rounds}")
        if not 0 < self.epsilon < 0.5 or not 0 < self.delta < 0.5:
            raise ConfigurationError(f"epsilon and delta must lie in (0, 1/2), got {self.epsilon}, {self.delta}")
        return self

    def rounds_cap(self, L: int) -> int:
        return self.max_rounds if self.max_rounds is not None else self.max_rounds_factor * L

    def points(self) -> List[Tuple[str, int, float]]:
        """Grid points in their fixed order; a point's position is its index in derived seeds."""
        return [(v, L, g) for v, g, L in itertools.product(self.variants, self.gammas, self.L_values)]

    def with_overrides(self, **overrides) -> "ExperimentSpec":
        known = {f.name for f in fields(self)}
        updates = {key: value for key, value in overrides.items() if key in known and value is not None}
        return replace(self, **updates)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["schema_version"] = CONFIG_SCHEMA_VERSION
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        data = dict(data)
        version = data.pop("schema_version", None)
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigurationError(f"Unsupported config schema_version {version!r}, expected {CONFIG_SCHEMA_VERSION}")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown config keys {sorted(unknown)}")
        return cls(**data).validate()

    def save(self, path: str) -> None:
        write_json(self.to_dict(), path)

    @classmethod
    def load(cls, path: str) -> "ExperimentSpec":
        logger.info("Loading experiment config from %s", path)
        with open(path) as f:
            return cls.from_dict(json.load(f))
