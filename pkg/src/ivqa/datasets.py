"""Dataset assembly: scene splits and subsampled QA annotation.

Full QA enumeration is deliberately thinned per scene so the annotation is
sparse; unannotated true facts are what make complementary beliefs
possible downstream.
"""

from __future__ import annotations

from .errors import ConfigError
from .language import QAPair, enumerate_qa
from .nn import Rng
from .scenes import Scene, WorldConfig, featurize, generate_scene


def generate_scenes(rng: Rng, cfg: WorldConfig, count: int, prefix: str) -> list[Scene]:
    """Deterministic list of scenes with sequential ids."""
    if count <= 0:
        raise ConfigError(f"scene count must be positive, got {count}")
    return [
        generate_scene(rng.derive("scene", i), cfg, scene_id=f"{prefix}-{i:05d}")
        for i in range(count)
    ]


def annotate_scenes(scenes, rng: Rng, subsample_rate: float,
                    include_unknown: bool = False) -> list[QAPair]:
    """Enumerate QA per scene, keeping an exact round(n * rate) subsample."""
    if not 0.0 < subsample_rate <= 1.0:
        raise ConfigError(f"subsample rate must be in (0, 1], got {subsample_rate}")
    pairs = []
    for scene in scenes:
        full = enumerate_qa(scene, include_unknown=include_unknown)
        keep = max(1, int(round(len(full) * subsample_rate)))
        if keep >= len(full):
            chosen = list(range(len(full)))
        else:
            idx = rng.derive("qa", scene.id).choice(len(full), size=keep, replace=False)
            chosen = sorted(int(i) for i in idx)
        pairs.extend(full[i] for i in chosen)
    return pairs


def feature_table(scenes) -> dict:
    return {scene.id: featurize(scene) for scene in scenes}
