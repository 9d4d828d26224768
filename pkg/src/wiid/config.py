"""Experiment presets: generation, network, training and evaluation settings in one JSON file."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

from .dataset import GenConfig
from .nn.model import reduced_config, table1_config



@dataclass
class TrainSettings:
    epochs: int = 200
    batch_size: int = 256
    lr: float = 0.001
    seed: int = 0

    def validate(self) -> "TrainSettings":
        if self.epochs < 0 or self.batch_size < 1 or not self.lr > 0:
            raise ValueError("training needs epochs >= 0, batch_size >= 1 and lr > 0")
        return self


@dataclass
class EvalSettings:
    threshold: float = 0.5
    comparison_thresholds: list[float] = field(default_factory=lambda: [0.3, 0.5, 0.7])
    scenario_per_count: int = 200
    heldout_seed_offset: int = 1

    def validate(self) -> "EvalSettings":
        for t in [self.threshold, *self.comparison_thresholds]:
            if not 0.0 < t < 1.0:
                raise ValueError(f"threshold must lie in (0, 1), got {t}")
        if self.scenario_per_count < 1:
            raise ValueError("scenario_per_count must be positive")
        return self


def network_config(spec: str | dict) -> dict:
    """Resolve a preset name, ``{"preset": name, ...options}``, or a full layer config."""
    if isinstance(spec, str):
        spec = {"preset": spec}
    if "layers" in spec:
        return dict(spec)
    opts = dict(spec)
    name = opts.pop("preset", None)
    if name == "table1":
        return table1_config(**opts)
    if name == "table1-strict":
        return table1_config(strict_caption=True, **opts)
    if name == "reduced":
        return reduced_config(**opts)
    raise ValueError(f"unknown network preset {name!r}")


@dataclass
class Experiment:
    name: str
    generation: GenConfig
    network: dict
    training: TrainSettings
    evaluation: EvalSettings

    @classmethod
    def from_dict(cls, data: dict) -> "Experiment":
        unknown = set(data) - {"name", "generation", "network", "training", "evaluation"}
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")
        try:
            return cls(
                name=str(data.get("name", "custom")),
                generation=GenConfig.from_dict(data.get("generation", {})),
                network=network_config(data.get("network", "reduced")),
                training=TrainSettings(**data.get("training", {})).validate(),
                evaluation=EvalSettings(**data.get("evaluation", {})).validate(),
            )
        except TypeError as e:
            raise ValueError(f"bad config: {e}") from None

    def to_dict(self) -> dict:
        return {"name": self.name, "generation": self.generation.to_dict(),
                "network": self.network, "training": asdict(self.training),
                "evaluation": asdict(self.evaluation)}


def preset_names() -> list[str]:
    root = resources.files("wiid") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_experiment(name_or_path: str | Path) -> Experiment:
    """Read a config file, or a bundled preset when given a bare name such as ``desk``."""
    path = Path(name_or_path)
    if path.suffix != ".json" and str(name_or_path) in preset_names():
        text = (resources.files("wiid") / "presets" / f"{name_or_path}.json").read_text("utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    return Experiment.from_dict(json.loads(text))
