"""
Configuration management using Pydantic Settings.

Two layers:
- Settings: process-level options (logging, threading) from the environment.
- RunConfig: one experiment's parameters, loaded from a TOML file with flat
  dotted keys such as ``gen.n = 128``.
"""
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource

from onebit_unfold.core.exceptions import ConfigurationError, DataIOError
from onebit_unfold.core.models import (
    ExperimentConfig,
    GenConfig,
    TrainingConfig,
    default_stage2_config,
)
from onebit_unfold.numerics.rng import offset_seed


def _default_threads() -> int:
    return os.cpu_count() or 1


class Settings(BaseSettings):
    """Process settings with environment variable support and validation."""

    model_config = SettingsConfigDict(
        env_prefix="ONEBIT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # ==========================================
    # Application Information
    # ==========================================
    app_name: str = Field(default="onebit-unfold")
    app_version: str = Field(default="0.1.0")
    environment: str = Field(default="development")

    # ==========================================
    # Execution
    # ==========================================
    threads: int = Field(default_factory=_default_threads, ge=1, le=512)
    deterministic: bool = Field(default=False)
    output_dir: str = Field(default="runs")

    # ==========================================
    # Logging Configuration
    # ==========================================
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="console")
    log_file: Optional[str] = Field(default=None)

    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Validate environment setting."""
        allowed = ["development", "production", "testing"]
        if v.lower() not in allowed:
            raise ValueError(f"Environment must be one of: {allowed}")
        return v.lower()

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Validate log level."""
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"Log level must be one of: {allowed}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Validate log format."""
        allowed = ["json", "text", "console"]
        if v.lower() not in allowed:
            raise ValueError(f"Log format must be one of: {allowed}")
        return v.lower()

    @property
    def is_testing(self) -> bool:
        return self.environment == "testing"


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def get_test_settings(**overrides: Any) -> Settings:
    """Get settings for testing with overrides."""
    test_env: Dict[str, Any] = {
        "environment": "testing",
        "log_level": "DEBUG",
        "threads": 1,
        "deterministic": True,
        **overrides,
    }
    return Settings(**test_env)


class RunConfig(BaseSettings):
    """
    Parameters of one run: data generation, both training stages and experiments.

    The top-level ``seed`` is the master seed; it is copied into every section,
    overriding any section-level seed.
    """

    model_config = SettingsConfigDict(
        env_prefix="ONEBIT_RUN_",
        env_nested_delimiter="__",
        extra="forbid",
        populate_by_name=True,
    )

    seed: int = Field(default=0, ge=0, le=2**64 - 1)
    output_dir: str = Field(default="runs")
    threads: Optional[int] = Field(default=None, ge=1, le=512)
    deterministic: bool = Field(default=False)

    gen: GenConfig = Field(default_factory=GenConfig)
    stage1: TrainingConfig = Field(default_factory=TrainingConfig)
    stage2: TrainingConfig = Field(default_factory=default_stage2_config)
    experiment: ExperimentConfig = Field(default_factory=ExperimentConfig)

    @model_validator(mode="after")
    def propagate_seed_and_check_stages(self) -> "RunConfig":
        """Copy the master seed into the sections and check stage depths agree."""
        self.gen = self.gen.model_copy(update={"seed": self.seed})
        self.stage1 = self.stage1.model_copy(update={"seed": self.seed, "stage": 1})
        self.stage2 = self.stage2.model_copy(update={"seed": self.seed, "stage": 2})
        depth_prime = self.stage2.effective_depth_prime(self.stage1.depth)
        if depth_prime > self.stage1.depth:
            raise ValueError(
                f"stage2 depth_prime ({depth_prime}) must not exceed stage1 depth "
                f"({self.stage1.depth})"
            )
        network_k = self.stage1.network_sparsity(self.gen.k)
        if network_k > self.gen.n:
            raise ValueError(f"network sparsity {network_k} exceeds signal length {self.gen.n}")
        return self

    # ==========================================
    # Loading
    # ==========================================

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        """Load and validate a TOML run configuration, reporting every invalid key."""
        config_path = Path(path)
        if not config_path.is_file():
            raise DataIOError(
                f"Config file not found: {config_path}", details={"path": str(config_path)}
            )
        try:
            data = TomlConfigSettingsSource(cls, toml_file=config_path)()
        except OSError as e:
            raise DataIOError(f"Failed to read config {config_path}: {e}")
        except ValueError as e:
            # tomllib.TOMLDecodeError is a ValueError
            raise ConfigurationError(f"Malformed config {config_path}: {e}")
        return cls.from_mapping(data, source=str(config_path))

    @classmethod
    def from_mapping(cls, data: Dict[str, Any], source: str = "<mapping>") -> "RunConfig":
        try:
            return cls(**data)
        except ValidationError as e:
            errors = [
                {"key": ".".join(str(part) for part in err["loc"]), "error": err["msg"]}
                for err in e.errors()
            ]
            keys = ", ".join(item["key"] or "<root>" for item in errors)
            raise ConfigurationError(
                f"Invalid config {source}: {len(errors)} invalid key(s): {keys}",
                details={"errors": errors},
            )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        output_dir: Optional[str] = None,
        threads: Optional[int] = None,
        deterministic: Optional[bool] = None,
    ) -> "RunConfig":
        """Apply command-line flag overrides and re-validate."""
        data = self.model_dump(by_alias=True)
        if seed is not None:
            data["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        if threads is not None:
            data["threads"] = threads
        if deterministic:
            data["deterministic"] = True
        return RunConfig.from_mapping(data, source="<overrides>")

    # ==========================================
    # Derived sections
    # ==========================================

    def resolved_threads(self) -> int:
        return self.threads or get_settings().threads

    def gen_for(self, realization: int = 0, k: Optional[int] = None) -> GenConfig:
        """Generation config of one realization (seed = master seed + realization, mod 2**64)."""
        update: Dict[str, Any] = {"seed": offset_seed(self.seed, realization)}
        if k is not None:
            update["k"] = k
        return self.gen.model_copy(update=update)

    def stage_for(
        self, stage: int, realization: int = 0, sparsity: Optional[int] = None
    ) -> TrainingConfig:
        """Training config of one stage and realization."""
        base = self.stage1 if stage == 1 else self.stage2
        update: Dict[str, Any] = {
            "seed": offset_seed(self.seed, realization),
            "deterministic_reduction": base.deterministic_reduction or self.deterministic,
            "threads": self.resolved_threads(),
        }
        if sparsity is not None:
            update["sparsity"] = sparsity
        if stage == 2:
            update["depth"] = self.stage1.depth
        return base.model_copy(update=update)

    def ensure_output_dir(self) -> Path:
        """Create the output directory if needed."""
        out = Path(self.output_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise DataIOError(f"Cannot create output directory {out}: {e}")
        return out
