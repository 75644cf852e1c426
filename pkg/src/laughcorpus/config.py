"""Pipeline configuration: one flat record of every tunable."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import LaughCorpusError
from .features import FrameParams
from .rater import TrainConfig


@dataclass
class PipelineConfig:
    threshold: float = 0.7
    min_duration_s: float = 0.1
    fade_ms: float = 10.0
    sample_rate: int = 22050
    frame_len: int = 2048
    hop: int = 512
    n_mels_spec: int = 12
    n_mfcc: int = 20
    n_mels_internal: int = 40
    log_floor: float = 1e-10
    max_frames: int = 8000
    train_fraction: float = 0.7
    split_seed: int = 0
    stratified: bool = True
    estimator: str = "population"
    lr: float = 0.1
    epochs: int = 2000
    l2: float = 1e-4
    train_seed: int = 0
    balanced: bool = False
    alpha_metric: str = "nominal"
    jobs: int = 0  # 0 = one worker per logical core

    def frame_params(self) -> FrameParams:
        return FrameParams(
            sample_rate=self.sample_rate, frame_len=self.frame_len,
            hop=self.hop, n_mels_spec=self.n_mels_spec, n_mfcc=self.n_mfcc,
            n_mels_internal=self.n_mels_internal, log_floor=self.log_floor,
            max_frames=self.max_frames)

    def train_config(self) -> TrainConfig:
        return TrainConfig(lr=self.lr, epochs=self.epochs, l2=self.l2,
                           seed=self.train_seed, balanced=self.balanced)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """New config with the non-None overrides applied."""
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise LaughCorpusError(f"unknown config keys: {sorted(unknown)}")
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)


def load_config(path: str | Path) -> PipelineConfig:
    """Read a config JSON file; unknown keys are rejected."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LaughCorpusError(f"{path}: cannot load config: {exc}") from exc
    if not isinstance(obj, dict):
        raise LaughCorpusError(f"{path}: config root must be an object")
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(obj) - known
    if unknown:
        raise LaughCorpusError(f"{path}: unknown config keys: {sorted(unknown)}")
    return PipelineConfig(**obj)


def save_config(config: PipelineConfig, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
