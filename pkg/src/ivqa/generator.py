"""Variational question generator conditioned on (scene features, answer).

An LSTM encoder maps (features, question) to a diagonal Gaussian over a
latent code; an LSTM decoder reconstructs the question from the latent
code, the features, and an answer embedding fused into its initial state.
Training maximizes the evidence lower bound; inference samples latent
codes from the prior and decodes by beam search or ancestral sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .language import ANSWER_INDEX, ANSWERS, L_MAX, default_vocabulary
from .nn import (
    OptimState,
    ParamSet,
    Rng,
    Tensor,
    add_lstm_params,
    clip_global_norm,
    embedding,
    kl_standard_normal,
    log_softmax,
    lstm_step,
    matmul,
    no_grad,
    optimizer_step,
    pick,
    reparameterize,
    softplus,
    tsum,
    uniform_init,
)
from .nn import autograd as ag

CONDITION_MODES = ("full", "answer_only", "image_only")


@dataclass
class GeneratorConfig:
    d_embed: int = 32
    d_hidden: int = 64
    d_z: int = 16
    d_answer: int = 16
    l_max: int = L_MAX
    beta: float = 1.0
    kl_warmup_frac: float = 0.2
    lr: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    grad_clip: float = 5.0
    beam_width: int = 3
    condition_mode: str = "full"

    def __post_init__(self):
        if self.condition_mode not in CONDITION_MODES:
            raise ConfigError(f"condition_mode must be one of {CONDITION_MODES}")
        if self.l_max < 2:
            raise ConfigError("l_max too small to emit any question")


@dataclass
class DecodeTrace:
    """One decoded candidate: tokens plus per-step and total log-probability."""

    tokens: tuple
    step_logprobs: tuple
    total_logprob: float


def init_generator_params(rng: Rng, cfg: GeneratorConfig, vocab_size: int,
                          feat_dim: int) -> ParamSet:
    """Fresh parameters; ablation modes zero and freeze a conditioning path."""
    params = ParamSet()
    # word embeddings are shared by encoder and decoder inputs
    params.add("embed", uniform_init(rng.derive("embed"), (vocab_size, cfg.d_embed), cfg.d_embed))
    image_frozen = cfg.condition_mode == "answer_only"
    answer_frozen = cfg.condition_mode == "image_only"

    def proj(tag, shape, fan_in, frozen):
        if frozen:
            params.add(tag, np.zeros(shape), trainable=False)
        else:
            params.add(tag, uniform_init(rng.derive(tag), shape, fan_in))

    proj("enc.w_img", (feat_dim, cfg.d_hidden), feat_dim, image_frozen)
    add_lstm_params(params, rng.derive("enc.lstm"), cfg.d_embed, cfg.d_hidden, "enc.lstm")
    params.add("enc.w_mu", uniform_init(rng.derive("mu"), (cfg.d_hidden, cfg.d_z), cfg.d_hidden))
    params.add("enc.w_sigma", uniform_init(rng.derive("sigma"), (cfg.d_hidden, cfg.d_z), cfg.d_hidden))
    params.add("dec.w_z", uniform_init(rng.derive("z"), (cfg.d_z, cfg.d_hidden), cfg.d_z))
    proj("dec.w_img", (feat_dim, cfg.d_hidden), feat_dim, image_frozen)
    proj("dec.w_ans", (cfg.d_answer, cfg.d_hidden), cfg.d_answer, answer_frozen)
    params.add("ans_embed",
               uniform_init(rng.derive("ans"), (len(ANSWERS), cfg.d_answer), cfg.d_answer))
    add_lstm_params(params, rng.derive("dec.lstm"), cfg.d_embed, cfg.d_hidden, "dec.lstm")
    params.add("dec.w_out", uniform_init(rng.derive("out"), (cfg.d_hidden, vocab_size), cfg.d_hidden))
    params.add("dec.b_out", np.zeros(vocab_size))
    return params


def _dims(params: ParamSet):
    d_hidden = params["enc.lstm.w_h"].data.shape[0]
    d_z = params["enc.w_mu"].data.shape[1]
    return d_hidden, d_z


def _question_rows(questions, pad):
    width = max(len(q) for q in questions)
    rows = np.full((len(questions), width), pad, dtype=np.int64)
    for i, q in enumerate(questions):
        rows[i, :len(q)] = q
    return rows


def encode(params: ParamSet, feats: np.ndarray, questions) -> tuple:
    """Posterior parameters (mu, sigma) for a batch of questions.

    The encoder LSTM starts from projected scene features and consumes the
    question tokens; sigma goes through softplus so it stays positive.
    """
    vocab = default_vocabulary()
    single = feats.ndim == 1
    if single:
        feats = feats[None, :]
        questions = [questions]
    if any(len(q) > L_MAX for q in questions):
        raise DimensionError(f"question longer than L_MAX={L_MAX}")
    rows = _question_rows(questions, vocab.pad)
    d_hidden, _ = _dims(params)
    h = matmul(Tensor(feats), params["enc.w_img"])
    c = Tensor(np.zeros((feats.shape[0], d_hidden)))
    for t in range(rows.shape[1]):
        tok = rows[:, t]
        mask = Tensor((tok != vocab.pad).astype(np.float64)[:, None])
        x = embedding(params["embed"], tok)
        h_next, c_next = lstm_step(x, h, c, params, "enc.lstm")
        keep = 1.0 - mask
        h = h_next * mask + h * keep
        c = c_next * mask + c * keep
    mu = matmul(h, params["enc.w_mu"])
    sigma = softplus(matmul(h, params["enc.w_sigma"]))
    if single:
        mu = _squeeze_row(mu)
        sigma = _squeeze_row(sigma)
    return mu, sigma


def _squeeze_row(t: Tensor) -> Tensor:
    """View a (1, d) tensor as (d,) without leaving the graph."""
    out = Tensor(t.data[0])
    if t.requires_grad:
        out.requires_grad = True
        out._parents = (t,)
        out._grad_fn = lambda g: (g[None, :],)
    return out


def fuse_init(params: ParamSet, z, feats, answer_idx) -> Tensor:
    """Decoder start state: additive fusion of latent, features, answer."""
    z_t = z if isinstance(z, Tensor) else Tensor(z)
    f_t = feats if isinstance(feats, Tensor) else Tensor(feats)
    a = embedding(params["ans_embed"], answer_idx)
    return (matmul(z_t, params["dec.w_z"]) + matmul(f_t, params["dec.w_img"])
            + matmul(a, params["dec.w_ans"]))


def decode_logprob(params: ParamSet, z, feats, answer_idx, questions):
    """Teacher-forced log-probability of each question (ends with <end>).

    Accepts a batch (2-d feats, list of questions) or a single item; the
    return value is a Tensor of per-item totals, each <= 0.
    """
    vocab = default_vocabulary()
    single = np.asarray(feats).ndim == 1
    if single:
        feats = np.asarray(feats)[None, :]
        z = np.asarray(z)[None, :] if not isinstance(z, Tensor) else z
        questions = [questions]
        answer_idx = np.array([answer_idx])
    for q in questions:
        if not q or q[-1] != vocab.end:
            raise DimensionError("decode_logprob expects questions ending with <end>")
    rows = _question_rows(questions, vocab.pad)
    batch, width = rows.shape
    d_hidden, _ = _dims(params)
    h = fuse_init(params, z, feats, np.asarray(answer_idx))
    c = Tensor(np.zeros((batch, d_hidden)))
    prev = np.full(batch, vocab.start, dtype=np.int64)
    total = Tensor(np.zeros(batch))
    for t in range(width):
        target = rows[:, t]
        mask = Tensor((target != vocab.pad).astype(np.float64))
        x = embedding(params["embed"], prev)
        h_next, c_next = lstm_step(x, h, c, params, "dec.lstm")
        mask_col = Tensor((target != vocab.pad).astype(np.float64)[:, None])
        keep = 1.0 - mask_col
        h = h_next * mask_col + h * keep
        c = c_next * mask_col + c * keep
        logits = matmul(h, params["dec.w_out"]) + params["dec.b_out"]
        step_lp = pick(log_softmax(logits), np.where(target == vocab.pad, 0, target))
        total = total + step_lp * mask
        prev = np.where(target == vocab.pad, prev, target)
    if single:
        return _squeeze_scalar(total)
    return total


def _squeeze_scalar(t: Tensor) -> Tensor:
    out = Tensor(t.data[0])
    if t.requires_grad:
        out.requires_grad = True
        out._parents = (t,)
        out._grad_fn = lambda g: (np.asarray([g]).reshape(t.data.shape),)
    return out


def elbo_loss(params: ParamSet, feats, question, answer_idx, rng: Rng,
              beta: float = 1.0):
    """Single-sample negative ELBO: reconstruction NLL + beta * KL."""
    mu, sigma = encode(params, feats, question)
    z = reparameterize(mu, sigma, rng)
    nll = -decode_logprob(params, z, feats, answer_idx, question)
    kl = kl_standard_normal(mu, sigma)
    return nll + beta * kl


def _batch_elbo(params, feats, questions, answer_idx, rng, beta):
    """Mean ELBO over a batch; one latent sample per item."""
    mu, sigma = encode(params, feats, questions)
    z = reparameterize(mu, sigma, rng)
    nll = -decode_logprob(params, z, feats, answer_idx, questions)
    var = sigma * sigma
    kl = ag.tsum(mu * mu + var - 1.0 - ag.log(var), axis=-1) * 0.5
    per_item = nll + beta * kl
    return per_item.mean(), nll.mean().item(), kl.mean().item()


def train_supervised(pairs, scenes_feats, cfg: GeneratorConfig, rng: Rng):
    """ELBO training over (scene, question, answer) triples.

    Returns (params, curve) where each curve row logs the optimized loss
    (with KL warm-up weight) and the beta=1 ELBO used for monitoring.
    """
    if not pairs:
        raise ConfigError("empty training dataset")
    vocab = default_vocabulary()
    params = init_generator_params(rng.derive("init"), cfg, len(vocab),
                                   next(iter(scenes_feats.values())).shape[0])
    state = OptimState(lr=cfg.lr)
    order = list(range(len(pairs)))
    n_batches = (len(pairs) + cfg.batch_size - 1) // cfg.batch_size
    total_steps = cfg.epochs * n_batches
    warmup_steps = int(cfg.kl_warmup_frac * total_steps)
    curve = []
    step = 0
    for epoch in range(cfg.epochs):
        rng.derive("shuffle", epoch).shuffle(order)
        for lo in range(0, len(order), cfg.batch_size):
            batch = [pairs[i] for i in order[lo:lo + cfg.batch_size]]
            feats = np.stack([scenes_feats[p.scene_id] for p in batch])
            questions = [p.question for p in batch]
            answers = np.array([ANSWER_INDEX[p.answer] for p in batch])
            if warmup_steps > 0 and step < warmup_steps:
                beta = cfg.beta * (step + 1) / warmup_steps
            else:
                beta = cfg.beta
            params.zero_grad()
            loss, nll, kl = _batch_elbo(params, feats, questions, answers,
                                        rng.derive("z", step), beta)
            loss.backward()
            clip_global_norm(params, cfg.grad_clip)
            optimizer_step(params, state)
            curve.append({"step": step, "loss": loss.item(),
                          "elbo1": nll + kl, "nll": nll, "kl": kl, "beta": beta})
            step += 1
    return params, curve


def teacher_forced_accuracy(params: ParamSet, pairs, scenes_feats) -> float:
    """Fraction of target tokens the decoder ranks first, with z = posterior mean."""
    vocab = default_vocabulary()
    hits = 0
    total = 0
    with no_grad():
        for lo in range(0, len(pairs), 64):
            batch = pairs[lo:lo + 64]
            feats = np.stack([scenes_feats[p.scene_id] for p in batch])
            questions = [p.question for p in batch]
            answers = np.array([ANSWER_INDEX[p.answer] for p in batch])
            mu, _ = encode(params, feats, questions)
            rows = _question_rows(questions, vocab.pad)
            d_hidden, _ = _dims(params)
            h = fuse_init(params, mu, feats, answers)
            c = Tensor(np.zeros((len(batch), d_hidden)))
            prev = np.full(len(batch), vocab.start, dtype=np.int64)
            for t in range(rows.shape[1]):
                target = rows[:, t]
                live = target != vocab.pad
                x = embedding(params["embed"], prev)
                h_next, c_next = lstm_step(x, h, c, params, "dec.lstm")
                mask_col = Tensor(live.astype(np.float64)[:, None])
                keep = 1.0 - mask_col
                h = h_next * mask_col + h * keep
                c = c_next * mask_col + c * keep
                logits = (matmul(h, params["dec.w_out"]) + params["dec.b_out"]).data
                pred = logits.argmax(axis=1)
                hits += int(np.sum((pred == target) & live))
                total += int(np.sum(live))
                prev = np.where(live, target, prev)
    return hits / total if total else 0.0


# -- inference ------------------------------------------------------------------


def _step_logprobs(params, x_idx, h, c):
    """One no-grad decoder step; returns (logprob rows, h', c')."""
    x = embedding(params["embed"], x_idx)
    h2, c2 = lstm_step(x, h, c, params, "dec.lstm")
    logits = matmul(h2, params["dec.w_out"]) + params["dec.b_out"]
    return log_softmax(logits).data, h2, c2


def beam_decode(params: ParamSet, z, feats, answer_idx, beam_width: int,
                l_max: int = L_MAX) -> list[DecodeTrace]:
    """Beam search with raw log-probability scoring (no length normalization).

    Beams stop at <end> or after l_max tokens; results are sorted by total
    log-probability, best first, ties keeping insertion order.
    """
    if beam_width < 1:
        raise ConfigError("beam width must be >= 1")
    vocab = default_vocabulary()
    d_hidden, _ = _dims(params)
    with no_grad():
        h0 = fuse_init(params, np.asarray(z)[None, :], np.asarray(feats)[None, :],
                       np.asarray([answer_idx]))
        live = [(tuple(), tuple(), 0.0, h0.data[0], np.zeros(d_hidden))]
        finished = []
        for _ in range(l_max):
            if not live:
                break
            x_idx = np.array([vocab.start if not b[0] else b[0][-1] for b in live])
            h = Tensor(np.stack([b[3] for b in live]))
            c = Tensor(np.stack([b[4] for b in live]))
            lp, h2, c2 = _step_logprobs(params, x_idx, h, c)
            candidates = []
            for row, (tokens, steps, total, _, _) in enumerate(live):
                top = np.argsort(-lp[row], kind="stable")[:beam_width]
                for tok in top:
                    candidates.append((tokens + (int(tok),),
                                       steps + (float(lp[row, tok]),),
                                       total + float(lp[row, tok]),
                                       h2.data[row], c2.data[row]))
            candidates.sort(key=lambda b: -b[2])
            candidates = candidates[:beam_width]
            live = []
            for tokens, steps, total, hh, cc in candidates:
                if tokens[-1] == vocab.end:
                    finished.append(DecodeTrace(tokens, steps, total))
                else:
                    live.append((tokens, steps, total, hh, cc))
        finished.extend(DecodeTrace(t, s, total) for t, s, total, _, _ in live)
    finished.sort(key=lambda tr: -tr.total_logprob)
    return finished[:beam_width]


def sample_questions(params: ParamSet, zs: np.ndarray, feats, answer_idx,
                     rng: Rng, l_max: int = L_MAX):
    """Ancestral sampling of one question per latent row; batched.

    Returns a list of DecodeTrace whose totals are the sampled-token
    log-probabilities (the policy likelihoods s_i).
    """
    vocab = default_vocabulary()
    n = zs.shape[0]
    d_hidden, _ = _dims(params)
    with no_grad():
        feats_b = np.broadcast_to(np.asarray(feats), (n, np.asarray(feats).shape[-1]))
        h = fuse_init(params, zs, feats_b, np.full(n, answer_idx)).data
        c = np.zeros((n, d_hidden))
        tokens = [[] for _ in range(n)]
        steps = [[] for _ in range(n)]
        done = np.zeros(n, dtype=bool)
        prev = np.full(n, vocab.start, dtype=np.int64)
        for _ in range(l_max):
            lp, h2, c2 = _step_logprobs(params, prev, Tensor(h), Tensor(c))
            u = rng.random(n)
            cdf = np.cumsum(np.exp(lp), axis=1)
            cdf[:, -1] = 1.0  # guard rounding in the tail
            chosen = (u[:, None] < cdf).argmax(axis=1)
            for i in range(n):
                if done[i]:
                    continue
                tok = int(chosen[i])
                tokens[i].append(tok)
                steps[i].append(float(lp[i, tok]))
                if tok == vocab.end:
                    done[i] = True
            h = np.where(done[:, None], h, h2.data)
            c = np.where(done[:, None], c, c2.data)
            prev = np.where(done, prev, chosen)
            if done.all():
                break
    return [DecodeTrace(tuple(t), tuple(s), float(sum(s)))
            for t, s in zip(tokens, steps)]


@dataclass
class DiverseGeneration:
    question: tuple
    logprob: float
    z_index: int
    is_best: bool = False


def generate_diverse(params: ParamSet, feats, answer_idx, n: int,
                     beam_width: int, rng: Rng,
                     l_max: int = L_MAX) -> list[DiverseGeneration]:
    """Draw n prior latents, beam-decode each, flag the overall best trace."""
    if n < 1:
        raise ConfigError("need at least one latent draw")
    _, d_z = _dims(params)
    out = []
    for i in range(n):
        z = rng.normal(d_z)
        traces = beam_decode(params, z, feats, answer_idx, beam_width, l_max)
        best = traces[0]
        out.append(DiverseGeneration(best.tokens, best.total_logprob, i))
    best_idx = int(np.argmax([g.logprob for g in out]))
    out[best_idx].is_best = True
    return out
