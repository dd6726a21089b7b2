"""Configuration management for the Teethland evaluation toolkit."""

import logging
import os
import re
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationError

logger = logging.getLogger(__name__)


class EvaluationConfig(BaseSettings):
    """Metric computation settings."""

    tau_step: float = Field(default=0.1, gt=0, description="Threshold grid step in mm")
    tau_max: float = Field(default=3.0, gt=0, description="Largest threshold in mm")
    include_zero_threshold: bool = Field(
        default=False, description="Prepend tau = 0 to the threshold grid"
    )
    inclusive_hits: bool = Field(
        default=False, description="Count distance == tau as a hit (<= instead of <)"
    )
    restrict_assignment_to_threshold: bool = Field(
        default=False,
        description="Only assign a prediction to a reference lying within the threshold",
    )
    pooled_ap: bool = Field(
        default=False, description="Aggregate AP over the pooled dataset PR curve"
    )
    error_analysis_tau: float = Field(
        default=1.0, gt=0, description="Threshold used for the error breakdown"
    )
    pr_curve_taus: list[float] = Field(
        default=[1.0, 2.0, 3.0], description="Thresholds at which PR curves are emitted"
    )

    model_config = SettingsConfigDict(
        env_prefix="EVAL_",
        case_sensitive=False,
    )

    @model_validator(mode="after")
    def validate_grid(self) -> "EvaluationConfig":
        """The grid needs at least one step."""
        if self.tau_step > self.tau_max:
            raise ValueError("tau_step must not exceed tau_max")
        return self


class RankingConfig(BaseSettings):
    """Bootstrap ranking settings."""

    iterations: int = Field(default=100, ge=1, description="Bootstrap iterations")
    drop_fraction: float = Field(
        default=0.10, ge=0.0, lt=1.0, description="Fraction of scans removed per iteration"
    )
    p_threshold: float = Field(
        default=0.001, gt=0.0, lt=1.0, description="Significance level for a point"
    )
    streams: Literal["categories", "grand"] = Field(
        default="categories",
        description="'categories' = 4 categories x (AP, AR); 'grand' = mean AP and mean AR",
    )
    resample_mode: Literal["drop", "bootstrap"] = Field(
        default="drop",
        description="'drop' removes scans per iteration; 'bootstrap' resamples with replacement",
    )
    zero_method: Literal["wilcox", "pratt"] = Field(
        default="wilcox", description="Zero-difference handling of the signed-rank test"
    )
    exact_max_n: int = Field(
        default=25, ge=0, description="Largest non-zero pair count using the exact null"
    )
    seed: int = Field(default=0, ge=0, description="Master seed")

    model_config = SettingsConfigDict(
        env_prefix="RANK_",
        case_sensitive=False,
    )


class PostprocessConfig(BaseSettings):
    """Default parameters of the landmark extraction procedures."""

    d_thresh: float = Field(default=1.0, gt=0, description="Distance-field threshold in mm")
    eps: float = Field(default=1.0, gt=0, description="Clustering radius in mm")
    min_weight: float = Field(default=1.0, gt=0, description="Core-point weight sum")
    weight_mode: Literal["core", "average"] = Field(
        default="core", description="Use weights in the core criterion or only when averaging"
    )
    conf_thresh: float = Field(default=0.7, ge=0.0, le=1.0)
    nms_radius: float = Field(default=2.0, gt=0, description="Suppression radius in mm")
    vote_sigma: float = Field(default=0.5, gt=0, description="Gaussian vote bandwidth in mm")
    ctd_max_iters: int = Field(default=50, ge=1)

    model_config = SettingsConfigDict(
        env_prefix="POSTPROCESS_",
        case_sensitive=False,
    )


class DetectorConfig(BaseSettings):
    """Baseline heuristic detector parameters."""

    curvature_min: float = Field(
        default=0.2, description="Minimum mean curvature (1/mm) of a cusp candidate"
    )
    local_max_radius: float = Field(
        default=1.0, gt=0, description="Neighbourhood radius of the height-maximum test"
    )
    cusp_nms_radius: float = Field(default=1.5, gt=0)
    tooth_height_fraction: float = Field(
        default=0.35,
        gt=0,
        lt=1,
        description="Height fraction above the base separating teeth from gingiva",
    )
    segment_eps: float = Field(default=0.8, gt=0, description="Tooth segmentation radius")
    min_segment_vertices: int = Field(default=30, ge=1)
    facial_height: float = Field(default=0.8, gt=0, le=1)
    rim_height: float = Field(default=0.5, gt=0, le=1)
    contact_height: float = Field(default=0.6, gt=0, le=1)

    model_config = SettingsConfigDict(
        env_prefix="DETECT_",
        case_sensitive=False,
    )


class NoiseSpec(BaseModel):
    """Degradation applied to ground truth to produce a synthetic team."""

    sigma: float = Field(default=0.3, ge=0.0)
    drop_probability: float = Field(default=0.0, ge=0.0, le=1.0)
    spurious_rate: float = Field(default=0.0, ge=0.0)
    overlap: float = Field(default=0.2, ge=0.0, le=1.0)


class SynthConfig(BaseSettings):
    """Synthetic fixture generation."""

    scans: int = Field(default=10, ge=1)
    tooth_count: int = Field(default=14, ge=1)
    arch_radius: float = Field(default=30.0, gt=0)
    resolution: float = Field(default=0.3, gt=0, description="Mesh grid spacing in mm")
    seed: int = Field(default=0, ge=0)
    mesh_format: Literal["ply", "obj", "stl"] = "ply"
    teams: dict[str, NoiseSpec] = Field(
        default_factory=dict, description="Synthetic prediction sets to emit per team"
    )

    model_config = SettingsConfigDict(
        env_prefix="SYNTH_",
        case_sensitive=False,
    )


class ExecutionConfig(BaseSettings):
    """Worker pool configuration."""

    workers: int = Field(default=1, ge=1, le=256, description="Default worker count")

    model_config = SettingsConfigDict(
        env_prefix="TEETHLAND_",
        env_file=".env",
        extra="ignore",
        case_sensitive=False,
    )


class LoggingConfig(BaseSettings):
    """Logging configuration."""

    level: str = Field(
        default="INFO",
        description="Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)",
    )
    format: str = Field(
        default="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        description="Log format string",
    )

    @field_validator("level")
    @classmethod
    def validate_level(cls, v: str) -> str:
        """Validate log level."""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v_upper = v.upper()
        if v_upper not in valid_levels:
            raise ValueError(f"Log level must be one of: {', '.join(valid_levels)}")
        return v_upper

    model_config = SettingsConfigDict(
        env_prefix="LOG_",
        case_sensitive=False,
    )


class AppConfig(BaseSettings):
    """Main application configuration."""

    evaluation: EvaluationConfig = Field(default_factory=EvaluationConfig)
    ranking: RankingConfig = Field(default_factory=RankingConfig)
    postprocess: PostprocessConfig = Field(default_factory=PostprocessConfig)
    detector: DetectorConfig = Field(default_factory=DetectorConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    execution: ExecutionConfig = Field(default_factory=ExecutionConfig)
    logging: LoggingConfig = Field(default_factory=LoggingConfig)

    model_config = SettingsConfigDict(
        case_sensitive=False,
    )

    @classmethod
    def load_from_file(cls, config_path: Path | str) -> "AppConfig":
        """Load configuration from YAML file.

        Supports environment variable substitution in the format ${VAR_NAME}.

        Args:
            config_path: Path to YAML configuration file

        Returns:
            AppConfig instance

        Raises:
            ConfigurationError: If file doesn't exist or is invalid
        """
        config_path = Path(config_path)

        if not config_path.exists():
            raise ConfigurationError(f"Configuration file not found: {config_path}")

        try:
            raw_content = config_path.read_text()
            content = cls._substitute_env_vars(raw_content)
            data = yaml.safe_load(content)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in config file: {e}")

        if not data:
            raise ConfigurationError("Configuration file is empty")
        if not isinstance(data, dict):
            raise ConfigurationError("Configuration file must contain a mapping")

        try:
            return cls(**data)
        except Exception as e:
            raise ConfigurationError(f"Failed to load configuration: {e}")

    @classmethod
    def load_from_file_or_defaults(cls, config_path: Path | str | None = None) -> "AppConfig":
        """Load configuration from file if it exists, otherwise use defaults.

        Args:
            config_path: Optional path to YAML configuration file

        Returns:
            AppConfig instance
        """
        if config_path:
            config_path = Path(config_path)
            if config_path.exists():
                logger.info(f"Loading configuration from {config_path}")
                return cls.load_from_file(config_path)
            else:
                logger.warning(f"Configuration file not found: {config_path}. Using defaults.")

        logger.debug("Using default configuration")
        return cls()

    @staticmethod
    def _substitute_env_vars(content: str) -> str:
        """Replace ${VAR_NAME} or $VAR_NAME with environment variable values."""
        pattern = r"\$\{([^}]+)\}|\$([A-Z_][A-Z0-9_]*)"

        def replace_var(match: re.Match) -> str:
            var_name = match.group(1) or match.group(2)
            value = os.environ.get(var_name)

            if value is None:
                logger.warning(f"Environment variable '{var_name}' not found, leaving placeholder")
                return match.group(0)

            return value

        return re.sub(pattern, replace_var, content)

    def with_overrides(self, overrides: dict[str, dict[str, Any]]) -> "AppConfig":
        """Return a copy with section values replaced; None values are ignored.

        Args:
            overrides: Mapping section name -> {field: value}, typically from CLI flags

        Returns:
            New AppConfig with the overrides validated
        """
        data = self.model_dump()
        for section, values in overrides.items():
            for key, value in values.items():
                if value is not None:
                    data[section][key] = value
        try:
            return type(self)(**data)
        except Exception as e:
            raise ConfigurationError(f"Invalid override: {e}")

    def to_yaml(self) -> str:
        """Serialize the resolved configuration for echoing into output directories."""
        return yaml.safe_dump(self.model_dump(mode="json"), sort_keys=True)

    def setup_logging(self) -> None:
        """Configure Python logging based on settings."""
        logging.basicConfig(
            level=getattr(logging, self.logging.level),
            format=self.logging.format,
        )
        logger.debug(f"Logging configured at {self.logging.level} level")


def get_default_config_path() -> Path:
    """Get the default configuration file path.

    Returns:
        Path to ./teethland-eval.yaml in the working directory
    """
    return Path("teethland-eval.yaml")


def load_config(config_path: Path | str | None = None) -> AppConfig:
    """Load application configuration.

    Args:
        config_path: Optional path to configuration file.
                    If None, uses default path.

    Returns:
        AppConfig instance
    """
    if config_path is None:
        config_path = get_default_config_path()

    return AppConfig.load_from_file_or_defaults(config_path)
