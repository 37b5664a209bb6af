"""Synthetic scene world: generation, fact closure, and feature vectors.

Scenes stand in for images. Each scene holds 1-5 objects with four
categorical attributes plus a time/weather ambiance. ``featurize`` maps a
scene to a fixed count vector that is injective up to object permutation,
so an exact answering oracle can be driven from features alone.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError
from .nn import Rng

SHAPES = ("cube", "ball", "cone", "block")
COLORS = ("red", "blue", "green", "black", "white", "yellow")
SIZES = ("small", "large")
POSITIONS = ("left", "right", "top", "bottom", "center")
TIMES = ("day", "night")
WEATHERS = ("sunny", "rainy")

# every realizable object attribute tuple, in a fixed global order
ATTRIBUTE_TUPLES = tuple(itertools.product(SHAPES, COLORS, SIZES, POSITIONS))
_TUPLE_INDEX = {t: i for i, t in enumerate(ATTRIBUTE_TUPLES)}

_N_TUPLES = len(ATTRIBUTE_TUPLES)
_ATTR_BLOCK = len(SHAPES) + len(COLORS) + len(SIZES) + len(POSITIONS)
FEATURE_DIM = _N_TUPLES + _ATTR_BLOCK + len(TIMES) + len(WEATHERS)


@dataclass(frozen=True)
class SceneObject:
    shape: str
    color: str
    size: str
    position: str

    def __post_init__(self):
        if (self.shape, self.color, self.size, self.position) not in _TUPLE_INDEX:
            raise ConfigError(f"invalid object attributes: {self}")

    def as_tuple(self):
        return (self.shape, self.color, self.size, self.position)


@dataclass
class Scene:
    id: str
    objects: tuple
    time: str
    weather: str

    def __post_init__(self):
        if not 1 <= len(self.objects) <= 5:
            raise ConfigError(f"scene must hold 1-5 objects, got {len(self.objects)}")
        if self.time not in TIMES or self.weather not in WEATHERS:
            raise ConfigError(f"invalid ambiance: {self.time}/{self.weather}")


@dataclass(frozen=True)
class Fact:
    """One grounded predicate: has_object(...), count(...), or ambiance(...)."""

    kind: str
    args: tuple


@dataclass
class WorldConfig:
    min_objects: int = 1
    max_objects: int = 5

    def __post_init__(self):
        if not 1 <= self.min_objects <= self.max_objects <= 5:
            raise ConfigError(
                f"object count range [{self.min_objects}, {self.max_objects}] invalid")


def generate_scene(rng: Rng, cfg: WorldConfig, scene_id: str | None = None) -> Scene:
    """Sample a scene with per-object attributes drawn independently.

    Objects are resampled on full-tuple collision so the fact closure is
    duplicate-free; marginal attribute distributions stay uniform.
    """
    n = int(rng.integers(cfg.min_objects, cfg.max_objects + 1))
    seen = set()
    objects = []
    while len(objects) < n:
        obj = SceneObject(
            shape=SHAPES[int(rng.integers(0, len(SHAPES)))],
            color=COLORS[int(rng.integers(0, len(COLORS)))],
            size=SIZES[int(rng.integers(0, len(SIZES)))],
            position=POSITIONS[int(rng.integers(0, len(POSITIONS)))],
        )
        if obj.as_tuple() in seen:
            continue
        seen.add(obj.as_tuple())
        objects.append(obj)
    time = TIMES[int(rng.integers(0, len(TIMES)))]
    weather = WEATHERS[int(rng.integers(0, len(WEATHERS)))]
    if scene_id is None:
        scene_id = f"scene-{int(rng.integers(0, 2**62)):016x}"
    return Scene(id=scene_id, objects=tuple(objects), time=time, weather=weather)


def enumerate_facts(scene: Scene) -> list[Fact]:
    """Complete, duplicate-free closure of the scene's contents.

    Zero counts are explicit so false-premise queries ground to a fact.
    """
    facts = []
    for tup in sorted(o.as_tuple() for o in scene.objects):
        facts.append(Fact("has_object", tup))
    for shape in SHAPES:
        facts.append(Fact("count", (shape, sum(1 for o in scene.objects if o.shape == shape))))
    for color in COLORS:
        facts.append(Fact("count", (color, sum(1 for o in scene.objects if o.color == color))))
    facts.append(Fact("ambiance", ("time", scene.time)))
    facts.append(Fact("ambiance", ("weather", scene.weather)))
    return facts


def featurize(scene: Scene) -> np.ndarray:
    """Deterministic count vector; permutation-invariant over objects."""
    values = np.zeros(FEATURE_DIM)
    for obj in scene.objects:
        values[_TUPLE_INDEX[obj.as_tuple()]] += 1.0
    base = _N_TUPLES
    for obj in scene.objects:
        values[base + SHAPES.index(obj.shape)] += 1.0
        values[base + len(SHAPES) + COLORS.index(obj.color)] += 1.0
        values[base + len(SHAPES) + len(COLORS) + SIZES.index(obj.size)] += 1.0
        values[base + len(SHAPES) + len(COLORS) + len(SIZES)
               + POSITIONS.index(obj.position)] += 1.0
    amb = base + _ATTR_BLOCK
    values[amb + TIMES.index(scene.time)] = 1.0
    values[amb + len(TIMES) + WEATHERS.index(scene.weather)] = 1.0
    return values


def scene_from_feature(values: np.ndarray, scene_id: str = "") -> Scene:
    """Invert featurize up to object order (used by the feature-driven oracle)."""
    if values.shape != (FEATURE_DIM,):
        raise FormatError(f"feature vector must have dimension {FEATURE_DIM}")
    objects = []
    for idx in np.nonzero(values[:_N_TUPLES])[0]:
        count = int(round(values[idx]))
        objects.extend([SceneObject(*ATTRIBUTE_TUPLES[idx])] * count)
    amb = _N_TUPLES + _ATTR_BLOCK
    time = TIMES[int(np.argmax(values[amb:amb + len(TIMES)]))]
    weather = WEATHERS[int(np.argmax(values[amb + len(TIMES):amb + len(TIMES) + len(WEATHERS)]))]
    return Scene(id=scene_id, objects=tuple(objects), time=time, weather=weather)


# -- jsonl persistence --------------------------------------------------------


def scene_to_json(scene: Scene) -> str:
    record = {
        "id": scene.id,
        "objects": [
            {"shape": o.shape, "color": o.color, "size": o.size, "position": o.position}
            for o in scene.objects
        ],
        "time": scene.time,
        "weather": scene.weather,
    }
    return json.dumps(record, ensure_ascii=False)

def scene_from_json(line: str) -> Scene:
    try:
        record = json.loads(line)
        objects = tuple(
            SceneObject(o["shape"], o["color"], o["size"], o["position"])
            for o in record["objects"]
        )
        return Scene(id=record["id"], objects=objects,
                     time=record["time"], weather=record["weather"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad scene record: {exc}") from exc


def save_scenes(path, scenes) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(scene_to_json(scene) + "\n")


def load_scenes(path) -> list[Scene]:
    with open(path, encoding="utf-8") as fh:
        return [scene_from_json(line) for line in fh if line.strip()]
