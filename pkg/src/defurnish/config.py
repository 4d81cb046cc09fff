"""Pipeline configuration, TOML-serializable.

The config file has a flat [pipeline] table plus a [blend] table; every
field round-trips losslessly. The backend endpoint may also come from the
DEFURNISH_BACKEND_URL environment variable when not set explicitly.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from defurnish.blend import BlendConfig
from defurnish.errors import ValidationError
from defurnish.protocol import DEFAULT_NOISE_MIX, DEFAULT_NUM_STEPS, DEFAULT_PROMPT

ENDPOINT_ENV_VAR = "DEFURNISH_BACKEND_URL"


@dataclass
class PipelineConfig:
    working_height: int = 512
    pad: int = 256                      # per side, working-scale pixels
    superres_scale: int = 4
    prompt: str = DEFAULT_PROMPT
    num_steps: int = DEFAULT_NUM_STEPS
    noise_mix: float = DEFAULT_NOISE_MIX
    seed: int = 0
    baseline_mask_dilation: int = 0     # 10-20 px for baseline comparisons
    resample_filter: str = "lanczos3"
    class_set_path: str = ""            # empty -> packaged ADE20K furniture list
    inpaint_url: str = ""               # empty -> DEFURNISH_BACKEND_URL
    superres_url: str = ""              # empty -> inpaint endpoint
    timeout_ms: int = 60000
    retries: int = 2
    blend: BlendConfig = field(default_factory=BlendConfig)

    def __post_init__(self):
        if self.working_height < 1:
            raise ValidationError("working_height must be >= 1")
        if self.working_height % 64:
            raise ValidationError("working_height must be a multiple of 64")
        if self.superres_scale not in (2, 4):
            raise ValidationError("superres_scale must be 2 or 4")
        if self.baseline_mask_dilation < 0:
            raise ValidationError("baseline_mask_dilation must be >= 0")

    def resolve_inpaint_url(self) -> str:
        url = self.inpaint_url or os.environ.get(ENDPOINT_ENV_VAR, "")
        if not url:
            raise ValidationError(
                f"no inpainting endpoint configured (set inpaint_url or ${ENDPOINT_ENV_VAR})"
            )
        return url

    def resolve_superres_url(self) -> str:
        return self.superres_url or self.resolve_inpaint_url()


def _format_toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    raise ValidationError(f"cannot serialize {type(value).__name__} to TOML")


def to_toml(config: PipelineConfig) -> str:
    """Serialize; from_toml(to_toml(c)) == c."""
    lines = ["[pipeline]"]
    for f in dataclasses.fields(config):
        if f.name == "blend":
            continue
        lines.append(f"{f.name} = {_format_toml_value(getattr(config, f.name))}")
    lines.append("")
    lines.append("[blend]")
    for f in dataclasses.fields(config.blend):
        lines.append(f"{f.name} = {_format_toml_value(getattr(config.blend, f.name))}")
    lines.append("")
    return "\n".join(lines)


def from_toml(text: str) -> PipelineConfig:
    data = tomllib.loads(text)
    pipe = dict(data.get("pipeline", {}))
    blend_data = data.get("blend", {})
    known = {f.name for f in dataclasses.fields(PipelineConfig)} - {"blend"}
    unknown = set(pipe) - known
    if unknown:
        raise ValidationError(f"unknown pipeline config keys: {sorted(unknown)}")
    blend_known = {f.name for f in dataclasses.fields(BlendConfig)}
    blend_unknown = set(blend_data) - blend_known
    if blend_unknown:
        raise ValidationError(f"unknown blend config keys: {sorted(blend_unknown)}")
    return PipelineConfig(**pipe, blend=BlendConfig(**blend_data))


def load_config(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as f:
        return from_toml(f.read())


def save_config(path, config: PipelineConfig) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(to_toml(config))
