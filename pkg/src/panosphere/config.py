"""Pipeline configuration, prompt sets, and their JSON file format.

The config file is a single JSON object; every key is optional and falls back
to the defaults below (which reproduce the standard 89-view schedule):

    {
      "n": 2600,              // lattice size
      "channels": 4,
      "steps": 10,            // denoising steps T
      "fov_deg": 80.0,
      "overlap": 0.6,         // nominal view overlap realized by the rings
      "rings": [[-90.0, 4], [-77.5, 8], ...],   // [elevation_deg, view_count]
      "tau": 0.5,             // exponential kernel scale
      "seed": 0,
      "erp_height": 1024,
      "prompts": {"top": ..., "upper": ..., "middle": ..., "lower": ..., "bottom": ...},
      "foreground": [{"azimuth_deg": 0, "elevation_deg": 0, "prompt": "...", "b": -3.0}]
    }
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

# The standard schedule: ring elevations with their azimuth counts, listed
# from the upward pole (negative elevation) to the downward pole.
RING_LAYOUT: tuple[tuple[float, int], ...] = (
    (-90.0, 4),
    (-77.5, 8),
    (-45.0, 11),
    (-22.5, 14),
    (0.0, 15),
    (22.5, 14),
    (45.0, 11),
    (77.5, 8),
    (90.0, 4),
)

DEFAULT_PROMPTS = {
    "top": "clear sky overhead",
    "upper": "distant skyline above the horizon",
    "middle": "a wide open landscape",
    "lower": "ground details below the horizon",
    "bottom": "the ground directly underfoot",
}


@dataclass(frozen=True)
class ForegroundView:
    """An extra view with its own prompt and a flat-decay blending kernel."""

    azimuth_deg: float
    elevation_deg: float
    prompt: str
    b: float = -3.0


@dataclass(frozen=True)
class PromptSet:
    """Prompts for the five elevation slots, plus per-foreground-view prompts."""

    top: str = DEFAULT_PROMPTS["top"]
    upper: str = DEFAULT_PROMPTS["upper"]
    middle: str = DEFAULT_PROMPTS["middle"]
    lower: str = DEFAULT_PROMPTS["lower"]
    bottom: str = DEFAULT_PROMPTS["bottom"]
    foreground: tuple[str, ...] = ()

    def resolve(self, slot: str) -> str:
        """Map a prompt slot identifier to its text."""
        if slot.startswith("foreground:"):
            index = int(slot.split(":", 1)[1])
            if not 0 <= index < len(self.foreground):
                raise KeyError(f"no foreground prompt at index {index}")
            return self.foreground[index]
        if slot not in ("top", "upper", "middle", "lower", "bottom"):
            raise KeyError(f"unknown prompt slot {slot!r}")
        return getattr(self, slot)


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the pipeline needs besides prompts and a denoiser."""

    lattice_size: int = 2600
    channels: int = 4
    total_steps: int = 10
    fov_deg: float = 80.0
    overlap: float = 0.6
    rings: tuple[tuple[float, int], ...] = RING_LAYOUT
    tau: float = 0.5
    seed: int | None = 0
    erp_height: int = 1024
    foreground: tuple[ForegroundView, ...] = ()

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValueError("steps: need at least 1 denoising step")
        if self.lattice_size < 4:
            raise ValueError("n: need at least 4 latents")
        if self.channels < 1:
            raise ValueError("channels: need at least 1")
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("fov_deg: must be in (0, 180)")
        if self.tau <= 0.0:
            raise ValueError("tau: must be positive")
        if not self.rings:
            raise ValueError("rings: schedule must name at least one ring")
        for ring in self.rings:
            if len(ring) != 2 or not -90.0 <= ring[0] <= 90.0 or ring[1] < 1:
                raise ValueError(f"rings: bad ring entry {ring!r}")
        if self.erp_height < 1:
            raise ValueError("erp_height: must be positive")


_KEY_MAP = {
    "n": "lattice_size",
    "channels": "channels",
    "steps": "total_steps",
    "fov_deg": "fov_deg",
    "overlap": "overlap",
    "tau": "tau",
    "seed": "seed",
    "erp_height": "erp_height",
}


def config_from_dict(data: dict) -> tuple[PipelineConfig, PromptSet]:
    """Validate a parsed config object; errors name the offending key."""
    if not isinstance(data, dict):
        raise ValueError("config: top level must be a JSON object")
    kwargs = {}
    prompts_kwargs = {}
    for key, value in data.items():
        if key in _KEY_MAP:
            kwargs[_KEY_MAP[key]] = value
        elif key == "rings":
            try:
                kwargs["rings"] = tuple((float(e), int(c)) for e, c in value)
            except (TypeError, ValueError):
                raise ValueError("rings: expected [[elevation_deg, count], ...]") from None
        elif key == "prompts":
            if not isinstance(value, dict):
                raise ValueError("prompts: expected an object with the five slots")
            for slot, text in value.items():
                if slot not in DEFAULT_PROMPTS:
                    raise ValueError(f"prompts.{slot}: unknown slot")
                prompts_kwargs[slot] = str(text)
        elif key == "foreground":
            try:
                kwargs["foreground"] = tuple(
                    ForegroundView(
                        azimuth_deg=float(item["azimuth_deg"]),
                        elevation_deg=float(item["elevation_deg"]),
                        prompt=str(item["prompt"]),
                        b=float(item.get("b", -3.0)),
                    )
                    for item in value
                )
            except (TypeError, KeyError) as exc:
                raise ValueError(f"foreground: bad entry ({exc})") from None
        else:
            raise ValueError(f"{key}: unknown config key")
    try:
        cfg = PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ValueError(f"config: {exc}") from None
    prompts = PromptSet(
        foreground=tuple(v.prompt for v in cfg.foreground), **prompts_kwargs
    )
    return cfg, prompts


def config_to_dict(cfg: PipelineConfig, prompts: PromptSet) -> dict:
    return {
        "n": cfg.lattice_size,
        "channels": cfg.channels,
        "steps": cfg.total_steps,
        "fov_deg": cfg.fov_deg,
        "overlap": cfg.overlap,
        "rings": [list(ring) for ring in cfg.rings],
        "tau": cfg.tau,
        "seed": cfg.seed,
        "erp_height": cfg.erp_height,
        "prompts": {
            slot: prompts.resolve(slot)
            for slot in ("top", "upper", "middle", "lower", "bottom")
        },
        "foreground": [asdict(view) for view in cfg.foreground],
    }


def load_config(path) -> tuple[PipelineConfig, PromptSet]:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"config: invalid JSON ({exc})") from None
    return config_from_dict(data)


def save_config(path, cfg: PipelineConfig, prompts: PromptSet):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg, prompts), fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Copy a config with keyword overrides (None values are skipped)."""
    changes = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **changes) if changes else cfg
