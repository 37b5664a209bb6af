"""VQA models: the diagnosis subjects scoring phi(answer | features, question).

Three realizations share one scoring interface: an exact oracle driven by
the scene fact closure, a trainable neural answer classifier, and a
language-only variant whose visual pathway is zeroed and frozen (a
controlled bias subject).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .language import ANSWER_INDEX, ANSWERS, default_vocabulary, oracle_answer, parse
from .nn import (
    OptimState,
    ParamSet,
    Rng,
    Tensor,
    add_lstm_params,
    clip_global_norm,
    embedding,
    log_softmax,
    lstm_step,
    matmul,
    no_grad,
    optimizer_step,
    pick,
    tsum,
    uniform_init,
)
from .nn import autograd as ag
from .scenes import scene_from_feature


@dataclass
class VqaConfig:
    d_embed: int = 32
    d_hidden: int = 64
    lr: float = 3e-3
    epochs: int = 20
    batch_size: int = 32
    grad_clip: float = 5.0


class OracleVqa:
    """Probability 1 on the exact answer; unparseable questions answer 'unknown'."""

    kind = "oracle"

    def __init__(self):
        self._vocab = default_vocabulary()

    def score(self, feat: np.ndarray, question) -> np.ndarray:
        out = np.zeros(len(ANSWERS))
        pq = parse(tuple(question), self._vocab)
        if pq is None:
            out[ANSWER_INDEX["unknown"]] = 1.0
            return out
        scene = scene_from_feature(np.asarray(feat))
        out[ANSWER_INDEX[oracle_answer(scene, pq)]] = 1.0
        return out


def init_vqa_params(rng: Rng, cfg: VqaConfig, vocab_size: int, feat_dim: int,
                    language_only: bool = False) -> ParamSet:
    params = ParamSet()
    params.add("embed", uniform_init(rng.derive("embed"), (vocab_size, cfg.d_embed), cfg.d_embed))
    add_lstm_params(params, rng.derive("lstm"), cfg.d_embed, cfg.d_hidden, "lstm")
    if language_only:
        # visual pathway severed: zero projection, never trained
        params.add("w_feat", np.zeros((feat_dim, cfg.d_hidden)), trainable=False)
    else:
        params.add("w_feat", uniform_init(rng.derive("feat"), (feat_dim, cfg.d_hidden), feat_dim))
    params.add("w_out", uniform_init(rng.derive("out"), (cfg.d_hidden, len(ANSWERS)), cfg.d_hidden))
    params.add("b_out", np.zeros(len(ANSWERS)))
    return params


class NeuralVqa:
    """Question LSTM fused with projected scene features.

    Fusion is additive plus an elementwise gating term (h * proj) so the
    question can modulate how the feature vector is read; without the
    gating term the feature-to-answer map is question-independent and the
    model cannot fit the training set.
    """

    def __init__(self, params: ParamSet, kind: str = "neural"):
        if kind not in ("neural", "language_only"):
            raise ConfigError(f"unknown neural VQA kind: {kind}")
        self.kind = kind
        self.params = params
        self.d_hidden = params["lstm.w_h"].data.shape[0]

    def logits(self, feats, questions) -> Tensor:
        """Batched forward pass; `questions` are padded index rows."""
        p = self.params
        batch = feats.shape[0]
        h = Tensor(np.zeros((batch, self.d_hidden)))
        c = Tensor(np.zeros((batch, self.d_hidden)))
        vocab = default_vocabulary()
        for t in range(questions.shape[1]):
            tok = questions[:, t]
            mask = Tensor((tok != vocab.pad).astype(np.float64)[:, None])
            x = embedding(p["embed"], tok)
            h_next, c_next = lstm_step(x, h, c, p, "lstm")
            keep = 1.0 - mask
            h = h_next * mask + h * keep
            c = c_next * mask + c * keep
        proj = matmul(Tensor(feats), p["w_feat"])
        fused = h + proj + h * proj
        return matmul(fused, p["w_out"]) + p["b_out"]

    def score(self, feat: np.ndarray, question) -> np.ndarray:
        with no_grad():
            logits = self.logits(np.asarray(feat)[None, :], _rows([tuple(question)]))
            return ag.softmax(logits).data[0]


def _rows(questions, pad: int = 0) -> np.ndarray:
    width = max(len(q) for q in questions)
    out = np.full((len(questions), width), pad, dtype=np.int64)
    for i, q in enumerate(questions):
        out[i, :len(q)] = q
    return out


def vqa_score(model, feat, question) -> np.ndarray:
    return model.score(feat, question)


def vqa_predict(model, feat, question) -> str:
    """Most likely answer; ties resolve to the lowest answer index."""
    return ANSWERS[int(np.argmax(model.score(feat, question)))]


def train_vqa(pairs, scenes_by_id, cfg: VqaConfig, rng: Rng,
              language_only: bool = False):
    """Cross-entropy training; returns (model, per-step loss curve)."""
    if not pairs:
        raise ConfigError("empty training dataset")
    vocab = default_vocabulary()
    feats = {sid: np.asarray(f) for sid, f in scenes_by_id.items()}
    feat_dim = next(iter(feats.values())).shape[0]
    params = init_vqa_params(rng.derive("init"), cfg, len(vocab), feat_dim, language_only)
    model = NeuralVqa(params, "language_only" if language_only else "neural")
    state = OptimState(lr=cfg.lr)
    order = list(range(len(pairs)))
    curve = []
    for epoch in range(cfg.epochs):
        rng.derive("shuffle", epoch).shuffle(order)
        for lo in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[lo:lo + cfg.batch_size]]
            fmat = np.stack([feats[p.scene_id] for p in batch])
            qmat = _rows([p.question for p in batch], pad=vocab.pad)
            targets = np.array([ANSWER_INDEX[p.answer] for p in batch])
            params.zero_grad()
            logp = log_softmax(model.logits(fmat, qmat))
            loss = -tsum(pick(logp, targets)) * (1.0 / len(batch))
            loss.backward()
            clip_global_norm(params, cfg.grad_clip)
            optimizer_step(params, state)
            curve.append(loss.item())
    return model, curve


def vqa_accuracy(model, pairs, scenes_by_id) -> float:
    if not pairs:
        raise ConfigError("empty evaluation dataset")
    hits = sum(
        1 for p in pairs
        if vqa_predict(model, scenes_by_id[p.scene_id], p.question) == p.answer)
    return hits / len(pairs)


def majority_baseline(pairs) -> float:
    """Accuracy of always answering the most frequent label."""
    counts = {}
    for p in pairs:
        counts[p.answer] = counts.get(p.answer, 0) + 1
    return max(counts.values()) / len(pairs)
