"""Closed question grammar, vocabulary, exact oracle, and legality check.

Questions are token sequences over a small fixed vocabulary, produced by
typed templates. Every grammatical question parses back to exactly one
(template, slot binding), which makes the answering oracle total and lets
the legality reward be decided exactly instead of learned.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

from .errors import FormatError, ParseError
from .scenes import COLORS, POSITIONS, SHAPES, SIZES, Scene

COUNT_WORDS = ("zero", "one", "two", "three", "four", "five")
ANSWER_TYPES = ("color", "shape", "count", "yesno", "position")

# closed answer set; index order fixes deterministic argmax tie-breaking
ANSWERS = COLORS + SHAPES + POSITIONS + COUNT_WORDS + ("yes", "no", "unknown")
ANSWER_INDEX = {a: i for i, a in enumerate(ANSWERS)}

PLURALS = {"cube": "cubes", "ball": "balls", "cone": "cones", "block": "blocks"}
SINGULARS = {p: s for s, p in PLURALS.items()}

SLOT_VALUES = {
    "color": COLORS,
    "shape": SHAPES,
    "shape_plural": tuple(PLURALS[s] for s in SHAPES),
    "size": SIZES,
    "position": POSITIONS,
    "ambiance": ("day", "night", "sunny", "rainy"),
    "group": tuple(PLURALS[s] for s in SHAPES) + ("objects",),
}


@dataclass(frozen=True)
class GrammarTemplate:
    """Token pattern with typed slots; '{type}' entries mark the slots."""

    template_id: str
    pattern: tuple
    answer_type: str
    paraphrase_class: str

    def slots(self):
        return tuple(tok[1:-1] for tok in self.pattern if tok.startswith("{"))

    def slot_positions(self):
        return tuple(i for i, tok in enumerate(self.pattern) if tok.startswith("{"))


TEMPLATES = (
    GrammarTemplate("color-of-shape",
                    ("what", "color", "is", "the", "{shape}", "?"),
                    "color", "color_of_shape"),
    GrammarTemplate("color-of-shape-alt",
                    ("what", "is", "the", "color", "of", "the", "{shape}", "?"),
                    "color", "color_of_shape"),
    GrammarTemplate("color-of-size-shape",
                    ("what", "color", "is", "the", "{size}", "{shape}", "?"),
                    "color", "color_of_size_shape"),
    GrammarTemplate("shape-of-color",
                    ("what", "shape", "is", "the", "{color}", "object", "?"),
                    "shape", "shape_of_color"),
    GrammarTemplate("shape-of-color-alt",
                    ("what", "is", "the", "shape", "of", "the", "{color}", "object", "?"),
                    "shape", "shape_of_color"),
    GrammarTemplate("shape-at-position",
                    ("what", "shape", "is", "at", "the", "{position}", "?"),
                    "shape", "shape_at_position"),
    GrammarTemplate("count-group",
                    ("how", "many", "{group}", "are", "there", "?"),
                    "count", "count_group"),
    GrammarTemplate("count-group-alt",
                    ("how", "many", "{group}", "are", "in", "the", "scene", "?"),
                    "count", "count_group"),
    GrammarTemplate("count-color",
                    ("how", "many", "{color}", "objects", "are", "there", "?"),
                    "count", "count_color"),
    GrammarTemplate("exists-color-shape",
                    ("is", "there", "a", "{color}", "{shape}", "?"),
                    "yesno", "exists_color_shape"),
    GrammarTemplate("exists-shape",
                    ("is", "there", "a", "{shape}", "?"),
                    "yesno", "exists_shape"),
    GrammarTemplate("exists-shape-plural",
                    ("are", "there", "any", "{shape_plural}", "?"),
                    "yesno", "exists_shape"),
    GrammarTemplate("ambiance-check",
                    ("is", "it", "{ambiance}", "?"),
                    "yesno", "ambiance_check"),
    GrammarTemplate("ambiance-check-alt",
                    ("is", "it", "{ambiance}", "outside", "?"),
                    "yesno", "ambiance_check"),
    GrammarTemplate("size-check",
                    ("is", "the", "{shape}", "{size}", "?"),
                    "yesno", "size_check"),
    GrammarTemplate("position-of-shape",
                    ("where", "is", "the", "{shape}", "?"),
                    "position", "position_of_shape"),
    GrammarTemplate("position-of-color-shape",
                    ("where", "is", "the", "{color}", "{shape}", "?"),
                    "position", "position_of_color_shape"),
)

TEMPLATE_BY_ID = {t.template_id: t for t in TEMPLATES}

L_MAX = 12  # longest realization is 10 tokens including <end>


class Vocabulary:
    """Contiguously indexed token set with the four special tokens first."""

    SPECIALS = ("<pad>", "<start>", "<end>", "<unk>")

    def __init__(self, words):
        self.tokens = self.SPECIALS + tuple(sorted(set(words)))
        if len(self.tokens) >= 300:
            raise FormatError("vocabulary too large")
        self.index = {t: i for i, t in enumerate(self.tokens)}
        self.pad = self.index["<pad>"]
        self.start = self.index["<start>"]
        self.end = self.index["<end>"]
        self.unk = self.index["<unk>"]

    def __len__(self):
        return len(self.tokens)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        if tuple(tokens[:4]) != cls.SPECIALS:
            raise FormatError(f"{path}: vocab file must start with the special tokens")
        vocab = cls(tokens[4:])
        if vocab.tokens != tuple(tokens):
            raise FormatError(f"{path}: vocab file is not in canonical order")
        return vocab


def _grammar_words():
    words = set()
    for t in TEMPLATES:
        for tok in t.pattern:
            if tok.startswith("{"):
                words.update(SLOT_VALUES[tok[1:-1]])
            else:
                words.add(tok)
    words.update(ANSWERS)
    return words


@lru_cache(maxsize=1)
def default_vocabulary() -> Vocabulary:
    return Vocabulary(_grammar_words())


# -- tokenization ---------------------------------------------------------


def tokenize(text: str, vocab: Vocabulary) -> tuple:
    """Whitespace-split lowercase text to indices; ends with <end>."""
    words = text.strip().split()
    if not words:
        raise ParseError("empty question text")
    return tuple(vocab.index.get(w, vocab.unk) for w in words) + (vocab.end,)


def detokenize(question, vocab: Vocabulary) -> str:
    words = []
    for idx in question:
        if idx == vocab.end:
            break
        words.append(vocab.tokens[idx])
    return " ".join(words)


@dataclass(frozen=True)
class ParsedQuestion:
    template: GrammarTemplate
    binding: tuple

    def fact_key(self):
        """Paraphrase-invariant identity of the queried fact."""
        normalized = tuple(SINGULARS.get(v, v) for v in self.binding)
        return (self.template.paraphrase_class, normalized)


def realize(template: GrammarTemplate, binding, vocab: Vocabulary) -> tuple:
    """Surface token sequence (ending in <end>) for a slot binding."""
    values = list(binding)
    words = []
    for tok in template.pattern:
        if tok.startswith("{"):
            value = values.pop(0)
            if value not in SLOT_VALUES[tok[1:-1]]:
                raise ParseError(f"value {value!r} invalid for slot {tok}")
            words.append(value)
        else:
            words.append(tok)
    return tuple(vocab.index[w] for w in words) + (vocab.end,)


def parse(question, vocab: Vocabulary):
    """Return the unique (template, binding) match, or None to reject."""
    if not question:
        return None
    if question[-1] != vocab.end:
        return None
    body = question[:-1]
    if any(not 0 <= idx < len(vocab) for idx in body):
        return None
    if vocab.pad in body or vocab.start in body or vocab.end in body or vocab.unk in body:
        return None
    words = [vocab.tokens[i] for i in body]
    match = None
    for template in TEMPLATES:
        if len(template.pattern) != len(words):
            continue
        binding = []
        ok = True
        for pat, word in zip(template.pattern, words):
            if pat.startswith("{"):
                if word in SLOT_VALUES[pat[1:-1]]:
                    binding.append(word)
                else:
                    ok = False
                    break
            elif pat != word:
                ok = False
                break
        if ok:
            if match is not None:
                return None  # ambiguous: not a grammar member
            match = ParsedQuestion(template, tuple(binding))
    return match


def legality_kappa(question, vocab: Vocabulary) -> int:
    """1 iff the token sequence is a member of the grammar."""
    return 1 if parse(question, vocab) is not None else 0


# -- oracle semantics -------------------------------------------------------


def _referent_value(referents, attr: str) -> str:
    """Shared attribute value of the referents, or 'unknown'."""
    values = {getattr(o, attr) for o in referents}
    if len(values) == 1:
        return values.pop()
    return "unknown"


def oracle_answer(scene: Scene, pq: ParsedQuestion) -> str:
    """Exact answer under the scene's fact closure.

    Attribute queries resolve their referents; zero referents or referents
    with conflicting values answer 'unknown'. Counting, existence, and
    ambiance queries are total.
    """
    cls = pq.template.paraphrase_class
    b = pq.binding
    objs = scene.objects
    if cls == "color_of_shape":
        return _referent_value([o for o in objs if o.shape == b[0]], "color")
    if cls == "color_of_size_shape":
        return _referent_value(
            [o for o in objs if o.size == b[0] and o.shape == b[1]], "color")
    if cls == "shape_of_color":
        return _referent_value([o for o in objs if o.color == b[0]], "shape")
    if cls == "shape_at_position":
        return _referent_value([o for o in objs if o.position == b[0]], "shape")
    if cls == "count_group":
        if b[0] == "objects":
            return COUNT_WORDS[len(objs)]
        return COUNT_WORDS[sum(1 for o in objs if o.shape == SINGULARS[b[0]])]
    if cls == "count_color":
        return COUNT_WORDS[sum(1 for o in objs if o.color == b[0])]
    if cls == "exists_color_shape":
        return "yes" if any(o.color == b[0] and o.shape == b[1] for o in objs) else "no"
    if cls == "exists_shape":
        shape = SINGULARS.get(b[0], b[0])
        return "yes" if any(o.shape == shape for o in objs) else "no"
    if cls == "ambiance_check":
        if b[0] in ("day", "night"):
            return "yes" if scene.time == b[0] else "no"
        return "yes" if scene.weather == b[0] else "no"
    if cls == "size_check":
        referents = [o for o in objs if o.shape == b[0]]
        value = _referent_value(referents, "size")
        if value == "unknown":
            return "unknown"
        return "yes" if value == b[1] else "no"
    if cls == "position_of_shape":
        return _referent_value([o for o in objs if o.shape == b[0]], "position")
    if cls == "position_of_color_shape":
        return _referent_value(
            [o for o in objs if o.color == b[0] and o.shape == b[1]], "position")
    raise ParseError(f"no semantics for paraphrase class {cls}")


# -- exhaustive enumeration ---------------------------------------------------


@dataclass(frozen=True)
class QAPair:
    scene_id: str
    question: tuple
    answer: str
    answer_type: str


def enumerate_bindings(template: GrammarTemplate):
    pools = [SLOT_VALUES[s] for s in template.slots()]
    return itertools.product(*pools)


@lru_cache(maxsize=1)
def all_grammar_questions():
    """Every (template, binding, question) the grammar can produce."""
    vocab = default_vocabulary()
    out = []
    for template in TEMPLATES:
        for binding in enumerate_bindings(template):
            out.append((template, binding, realize(template, binding, vocab)))
    return tuple(out)


def enumerate_qa(scene: Scene, include_unknown: bool = False) -> list[QAPair]:
    """All grammatical questions paired with their oracle answers."""
    pairs = []
    for template, binding, question in all_grammar_questions():
        answer = oracle_answer(scene, ParsedQuestion(template, binding))
        if answer == "unknown" and not include_unknown:
            continue
        pairs.append(QAPair(scene.id, question, answer, template.answer_type))
    return pairs


# -- jsonl persistence ---------------------------------------------------------


def qa_to_json(pair: QAPair, vocab: Vocabulary) -> str:
    record = {
        "scene_id": pair.scene_id,
        "question": detokenize(pair.question, vocab),
        "answer": pair.answer,
        "answer_type": pair.answer_type,
    }
    return json.dumps(record, ensure_ascii=False)


def qa_from_json(line: str, vocab: Vocabulary) -> QAPair:
    try:
        record = json.loads(line)
        return QAPair(
            scene_id=record["scene_id"],
            question=tokenize(record["question"], vocab),
            answer=record["answer"],
            answer_type=record["answer_type"],
        )
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad qa record: {exc}") from exc


def save_qa(path, pairs, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(qa_to_json(pair, vocab) + "\n")


def load_qa(path, vocab: Vocabulary) -> list[QAPair]:
    with open(path, encoding="utf-8") as fh:
        return [qa_from_json(line, vocab) for line in fh if line.strip()]
