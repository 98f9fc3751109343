import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Literal

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from app.core.errors import ConfigError

ENV_WORKERS = "PRK_WORKERS"
ENV_LOG_LEVEL = "PRK_LOG_LEVEL"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScaleRuleConfig(_Section):
    base_scale: float = Field(1.0, gt=0)
    # None keeps every person at base_scale
    horizon_offset: float | None = Field(None, gt=0)
    min_scale: float = Field(0.1, gt=0)


class MosaicConfig(_Section):
    count: int = Field(500, ge=1)
    feather_radius: int = Field(2, ge=0)
    scale_rule: ScaleRuleConfig = ScaleRuleConfig()
    pairing: Literal["random", "exhaustive"] = "random"
    flip_probability: float = Field(0.5, ge=0, le=1)
    default_region_top: float = Field(0.5, ge=0, lt=1)
    backgrounds_dir: Path = Path("assets/backgrounds")
    persons_dir: Path = Path("assets/persons")
    out_dir: Path = Path("out")


class LightingConfig(_Section):
    gain: tuple[float, float, float] = (1.0, 1.0, 1.0)
    offset: float = 0.0
    gamma: float = 1.0
    angle_deg: float = 0.0
    ramp_strength: float = 0.0


class RenderConfig(_Section):
    lighting: Literal["fixed", "random", "learned", "full"] = "fixed"
    fixed: LightingConfig = LightingConfig()
    angle_count: int = Field(15, ge=1)
    ramp_strength: float = Field(0.3, ge=0, le=1)
    write_depth: bool = True


class LightFitConfig(_Section):
    budget: int = Field(500, ge=1)
    loss_region: Literal["mask", "ring"] = "mask"
    ring_width: int = Field(4, ge=1)


class RestorerConfig(_Section):
    name: Literal["diffusion", "exemplar", "subprocess", "identity"] = "diffusion"
    diffusion_iters: int = Field(2000, ge=1)
    diffusion_tol: float = Field(1e-5, gt=0)
    patch_size: int = Field(9, ge=3)
    search_radius: int = Field(64, ge=3)
    command: list[str] = []


class RemovalConfig(_Section):
    mode: Literal["legacy_inpaint", "mask_guided"] = "mask_guided"
    restorer: RestorerConfig = RestorerConfig()
    refine_iters: int = Field(2, ge=1)
    mask_dilation: int = Field(1, ge=0)


class HarnessConfig(_Section):
    train_fraction: float = Field(0.7, gt=0, lt=1)
    pred_dir: str = "pred"


class Settings(_Section):
    seed: int = 0
    workers: int = Field(1, ge=1)
    mosaic: MosaicConfig = MosaicConfig()
    render: RenderConfig = RenderConfig()
    lightfit: LightFitConfig = LightFitConfig()
    removal: RemovalConfig = RemovalConfig()
    harness: HarnessConfig = HarnessConfig()


def load_settings(path: Path | None = None, overrides: dict | None = None) -> Settings:
    """
    Merges defaults, an optional TOML file, the environment and explicit
    overrides (CLI flags), later sources winning.
    """
    load_dotenv()
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"invalid TOML in {path}: {e}") from e

    env_workers = os.getenv(ENV_WORKERS)
    if env_workers:
        data["workers"] = env_workers

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        _set_dotted(data, dotted, value)

    try:
        return Settings.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        key = ".".join(str(p) for p in first["loc"])
        raise ConfigError(f"invalid config value for '{key}': {first['msg']}") from e


def _set_dotted(data: dict, dotted: str, value) -> None:
    node = data
    *parents, leaf = dotted.split(".")
    for part in parents:
        node = node.setdefault(part, {})
    node[leaf] = value


def config_hash(section: BaseModel) -> str:
    payload = json.dumps(section.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]
