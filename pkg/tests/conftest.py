"""Shared fixtures: a small deterministic world and models trained on it.

The heavy fixtures are session-scoped so the expensive training runs once
for the whole suite.
"""

from dataclasses import dataclass

import pytest

from ivqa.datasets import annotate_scenes, feature_table, generate_scenes
from ivqa.language import default_vocabulary
from ivqa.nn import Rng
from ivqa.scenes import WorldConfig
from ivqa.vqa import VqaConfig, train_vqa


@dataclass
class SmallWorld:
    vocab: object
    train_scenes: list
    test_scenes: list
    scenes_by_id: dict
    feats: dict
    train_pairs: list
    test_pairs: list


@pytest.fixture(scope="session")
def small_world():
    rng = Rng(20240)
    cfg = WorldConfig()
    train_scenes = generate_scenes(rng.derive("train"), cfg, 150, "train")
    test_scenes = generate_scenes(rng.derive("test"), cfg, 40, "test")
    scenes = {s.id: s for s in train_scenes + test_scenes}
    train_pairs = annotate_scenes(train_scenes, rng.derive("qa-train"), 0.3)
    test_pairs = annotate_scenes(test_scenes, rng.derive("qa-test"), 0.3)
    return SmallWorld(
        vocab=default_vocabulary(),
        train_scenes=train_scenes,
        test_scenes=test_scenes,
        scenes_by_id=scenes,
        feats=feature_table(train_scenes + test_scenes),
        train_pairs=train_pairs,
        test_pairs=test_pairs,
    )


@pytest.fixture(scope="session")
def trained_vqa(small_world):
    cfg = VqaConfig(epochs=45)
    model, curve = train_vqa(
        small_world.train_pairs, small_world.feats, cfg, Rng(11))
    return model, curve


@pytest.fixture(scope="session")
def trained_language_only(small_world):
    cfg = VqaConfig(epochs=45)
    model, curve = train_vqa(
        small_world.train_pairs, small_world.feats, cfg, Rng(11), language_only=True)
    return model, curve
