"""Conditional generator / critic pair trained with a Wasserstein gradient penalty."""
from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import ndiff
from ..data.table import ColumnMeta, FeatureTable
from ..errors import DivergenceError, InputError
from ..ndiff import Adam, LayerSpec, Network, Tensor
from ..ndiff import tensor as T
from ..ndiff.optim import GAN_BETAS
from .layout import (ColumnCodec, RowLayout, build_layout, codecs_hash, inverse_transform,
                     transform)
from .sampling import RowIndex, condition_vectors, frequency_tables, sample_conditions

log = logging.getLogger(__name__)

LABEL_COLUMN = "label"


@dataclass(frozen=True)
class GanConfig:
    epochs: int = 300
    batch: int = 500
    noise_dim: int = 128
    hidden: tuple = (256, 256)
    critic_steps: int = 1
    gp_weight: float = 10.0
    lr: float = 2e-4
    tau: float = 0.2
    seed: int = 0
    steps_per_epoch: Optional[int] = None  # default: ceil(rows / batch)

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.batch < 2:
            raise InputError("GAN batch size must be at least 2")
        if self.epochs < 0 or self.noise_dim < 1 or self.critic_steps < 1 or self.tau <= 0:
            raise InputError("invalid GAN configuration")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class History:
    critic: list = field(default_factory=list)
    generator: list = field(default_factory=list)
    penalty: list = field(default_factory=list)

    def __len__(self):
        return len(self.critic)


@dataclass
class GanModel:
    generator: Network
    critic: Network
    layout: RowLayout
    codecs: list
    config: GanConfig
    columns: list = field(default_factory=list)  # ColumnMeta of the feature columns
    history: History = field(default_factory=History)
    freqs: Optional[object] = None

    @property
    def codec_hash(self) -> str:
        return codecs_hash(self.codecs)


def _generator_specs(cfg: GanConfig, width: int) -> list:
    specs = []
    for h in cfg.hidden:
        specs += [LayerSpec("dense", units=h), LayerSpec("batch_norm"), LayerSpec("relu")]
    return specs + [LayerSpec("dense", units=width)]


def _critic_specs(cfg: GanConfig) -> list:
    specs = []
    for h in cfg.hidden:
        specs += [LayerSpec("dense", units=h), LayerSpec("leaky_relu")]
    return specs + [LayerSpec("dense", units=1)]


def build_model(codecs: Sequence[ColumnCodec], config: GanConfig,
                columns: Sequence[ColumnMeta] = ()) -> GanModel:
    layout = build_layout(codecs)
    rng = np.random.default_rng(config.seed)
    gen = Network(_generator_specs(config, layout.width), (config.noise_dim + layout.cond_width,), rng)
    critic = Network(_critic_specs(config), (layout.width + layout.cond_width,), rng)
    return GanModel(gen, critic, layout, list(codecs), config, list(columns))


class _Heads:
    """Output activations: tanh on alpha slots, (Gumbel-)softmax on one-hot spans."""

    def __init__(self, layout: RowLayout):
        self.alpha = np.array([s.start for s in layout.continuous_spans], dtype=np.int64)
        self.onehots = [s.onehot for s in layout.spans]
        pieces = [self.alpha] + [np.arange(sl.start, sl.stop) for sl in self.onehots]
        order = np.concatenate(pieces)
        self.perm = np.argsort(order)  # assembled column -> layout position

    def __call__(self, logits: Tensor, rng, tau: float) -> Tensor:
        pieces = []
        if self.alpha.size:
            pieces.append(T.tanh(T.index(logits, (slice(None), self.alpha))))
        for sl in self.onehots:
            part = T.index(logits, (slice(None), sl))
            u = rng.random(part.shape)
            gumbel = -np.log(-np.log(np.clip(u, 1e-300, 1.0 - 1e-16)))
            pieces.append(T.softmax((part + Tensor(gumbel)) * (1.0 / tau), axis=1))
        return T.index(T.concat(pieces, axis=1), (slice(None), self.perm))


def _cond_loss(logits: Tensor, layout: RowLayout, cols: np.ndarray, cats: np.ndarray) -> Tensor:
    """Mean cross-entropy of each row's conditioned span against its condition."""
    total = None
    for j, s in enumerate(layout.discrete_spans):
        rows = np.flatnonzero(cols == j)
        if rows.size == 0:
            continue
        part = T.index(logits, (rows[:, None], np.arange(s.start, s.end)[None, :]))
        lp = T.log_softmax(part, axis=1)
        picked = T.sum_(T.index(lp, (np.arange(rows.size), cats[rows])))
        total = picked if total is None else total + picked
    return -total * (1.0 / cols.size)


def _check(value: float, what: str, epoch: int, batch: int) -> float:
    if not np.isfinite(value):
        raise DivergenceError(f"{what} loss is not finite", epoch=epoch, batch=batch)
    return value


def train_gan(transformed, layout: RowLayout, config: GanConfig, codecs=(), columns=(),
              model: Optional[GanModel] = None, callback=None) -> GanModel:
    """Adversarial training with training-by-sampling.

    ``transformed`` is the GAN-space table. One RNG stream (seeded by
    ``config.seed`` after weight initialisation) drives, per step and in this
    order: critic conditions, real rows, noise, Gumbel noise, interpolation
    weights; then generator conditions, noise, Gumbel noise.
    """
    data = np.asarray(transformed, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise InputError("training table is empty")
    if data.shape[1] != layout.width:
        raise InputError(f"training table width {data.shape[1]} != layout width {layout.width}")
    if model is None:
        model = build_model(codecs, config, columns)
    cfg = model.config
    model.freqs = frequency_tables(layout, data)
    index = RowIndex(layout, data)
    heads = _Heads(layout)
    rng = np.random.default_rng([cfg.seed, 1])
    g_opt = Adam(model.generator.parameters(), lr=cfg.lr, betas=GAN_BETAS)
    c_opt = Adam(model.critic.parameters(), lr=cfg.lr, betas=GAN_BETAS)
    steps = cfg.steps_per_epoch or max(1, -(-data.shape[0] // cfg.batch))
    b = cfg.batch

    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        for step in range(steps):
            for _ in range(cfg.critic_steps):
                cols, cats = sample_conditions(model.freqs, rng, b)
                cond = condition_vectors(layout, cols, cats)
                real = data[index.sample(cols, cats, rng)]
                z = rng.standard_normal((b, cfg.noise_dim))
                with ndiff.no_grad():
                    fake = heads(model.generator(np.hstack([z, cond]), training=True), rng, cfg.tau).data
                eps = rng.random((b, 1))
                c_opt.zero_grad()
                d_real = model.critic(np.hstack([real, cond]))
                d_fake = model.critic(np.hstack([fake, cond]))
                mix = Tensor(np.hstack([eps * real + (1 - eps) * fake, cond]), requires_grad=True)
                d_mix = model.critic(mix)
                (g_mix,) = T.grad(T.sum_(d_mix), [mix], create_graph=True)
                norms = T.sqrt(T.sum_(g_mix * g_mix, axis=1) + 1e-12)
                penalty = T.mean((norms - 1.0) ** 2) * cfg.gp_weight
                c_loss = T.mean(d_fake) - T.mean(d_real) + penalty
                c_val = _check(c_loss.item(), "critic", epoch, step)
                c_loss.backward()
                c_opt.step()

            cols, cats = sample_conditions(model.freqs, rng, b)
            cond = condition_vectors(layout, cols, cats)
            z = rng.standard_normal((b, cfg.noise_dim))
            g_opt.zero_grad()
            logits = model.generator(np.hstack([z, cond]), training=True)
            fake = heads(logits, rng, cfg.tau)
            d_fake = model.critic(T.concat([fake, Tensor(cond)], axis=1))
            g_loss = -T.mean(d_fake) + _cond_loss(logits, layout, cols, cats)
            g_val = _check(g_loss.item(), "generator", epoch, step)
            g_loss.backward()
            g_opt.step()
            model.critic.zero_grad()

        model.history.critic.append(c_val)
        model.history.generator.append(g_val)
        model.history.penalty.append(penalty.item())
        log.debug("epoch %d: critic %.4f generator %.4f (%.2fs)", epoch, c_val, g_val,
                  time.perf_counter() - t0)
        if callback is not None:
            callback(epoch, model)
    return model


def generate_vectors(model: GanModel, n: int, rng, condition: Optional[tuple] = None,
                     hard_condition: bool = True) -> np.ndarray:
    """Hardened GAN-space vectors from the frozen generator.

    ``condition`` is ``(column name, category value)``. Without one, each row
    gets a condition drawn from the empirical category frequencies.
    """
    layout, cfg = model.layout, model.config
    heads = _Heads(layout)
    if condition is not None:
        name, value = condition
        span = layout.span_of(name)
        if span.kind != "discrete":
            raise InputError(f"cannot condition on continuous column {name!r}")
        j = layout.discrete_spans.index(span)
        k = model.codecs[span.column].category_index(value)
        cols, cats = np.full(n, j), np.full(n, k)
    else:
        if model.freqs is None:
            raise InputError("unconditional generation needs the training frequencies")
        cols, cats = sample_conditions(model.freqs, rng, n, empirical=True)
    out = np.empty((n, layout.width))
    for lo in range(0, n, cfg.batch):
        hi = min(n, lo + cfg.batch)
        cond = condition_vectors(layout, cols[lo:hi], cats[lo:hi])
        z = rng.standard_normal((hi - lo, cfg.noise_dim))
        with ndiff.no_grad():
            soft = heads(model.generator(np.hstack([z, cond]), training=False), rng, cfg.tau).data
        hard = soft.copy()
        for sl in heads.onehots:
            k = np.argmax(soft[:, sl], axis=1)
            hard[:, sl] = 0.0
            hard[np.arange(hi - lo), sl.start + k] = 1.0
        if condition is not None and hard_condition:
            hard[:, span.start:span.end] = cond[:, span.cond]
        out[lo:hi] = hard
    return out


def generate(model: GanModel, n: int, rng=None, condition: Optional[tuple] = None,
             hard_condition: bool = True) -> FeatureTable:
    """``n`` synthetic rows as a table; the last codec column is the class label."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    if n < 0:
        raise InputError("n must be non-negative")
    vectors = generate_vectors(model, n, rng, condition, hard_condition)
    rows = inverse_transform(model.codecs, model.layout, vectors)
    names = [c.name for c in model.codecs]
    label_at = names.index(LABEL_COLUMN)
    feats = np.delete(rows, label_at, axis=1)
    columns = model.columns or [ColumnMeta(c.name, c.kind, {} if c.is_discrete else None)
                                for c in model.codecs if c.name != LABEL_COLUMN]
    return FeatureTable(list(columns), feats, rows[:, label_at].astype(np.int64))


# persistence

def _prefixed(state: dict, prefix: str) -> dict:
    return {f"{prefix}{k}": v for k, v in state.items()}


def model_to_bytes(model: GanModel) -> bytes:
    tensors = {**_prefixed(model.generator.state_dict(), "G."),
               **_prefixed(model.critic.state_dict(), "C.")}
    header = {
        "kind": "ctgan",
        "config": model.config.to_dict(),
        "layout": model.layout.to_dict(),
        "codecs": [c.to_dict() for c in model.codecs],
        "codec_hash": model.codec_hash,
        "columns": [c.to_dict() for c in model.columns],
        "history": asdict(model.history),
        "freqs": None if model.freqs is None else [list(map(float, c)) for c in model.freqs.counts],
    }
    return ndiff.checkpoint.dumps(tensors, header)


def model_from_bytes(buf: bytes) -> GanModel:
    from .sampling import FrequencyTables

    tensors, header = ndiff.checkpoint.loads(buf)
    if header.get("kind") != "ctgan":
        raise InputError("checkpoint does not hold a GAN model")
    cfg = header["config"]
    config = GanConfig(**{**cfg, "hidden": tuple(cfg["hidden"])})
    codecs = [ColumnCodec.from_dict(d) for d in header["codecs"]]
    columns = [ColumnMeta.from_dict(d) for d in header["columns"]]
    model = build_model(codecs, config, columns)
    if model.layout.to_dict() != header["layout"] or model.codec_hash != header["codec_hash"]:
        raise InputError("checkpoint layout does not match its codecs")
    model.generator.load_state_dict({k[2:]: v for k, v in tensors.items() if k.startswith("G.")})
    model.critic.load_state_dict({k[2:]: v for k, v in tensors.items() if k.startswith("C.")})
    model.history = History(**header["history"])
    if header.get("freqs") is not None:
        model.freqs = FrequencyTables(tuple(np.array(c) for c in header["freqs"]))
    return model


def save_model(model: GanModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path) -> GanModel:
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())


def table_matrix(table: FeatureTable) -> tuple:
    """Feature cells plus the label as a final discrete column: ``(matrix, names, discrete)``."""
    matrix = np.hstack([table.data, table.labels[:, None].astype(np.float64)])
    names = table.names + [LABEL_COLUMN]
    discrete = list(table.discrete_mask) + [True]
    return matrix, names, discrete


def fit_table_codecs(table: FeatureTable, max_modes: int = 10, seed: int = 0) -> list:
    from .layout import fit_codecs

    matrix, names, discrete = table_matrix(table)
    return fit_codecs(matrix, names, discrete, max_modes=max_modes, seed=seed)


def fit_ctgan(table: FeatureTable, config: GanConfig, codecs=None, max_modes: int = 10,
              callback=None) -> GanModel:
    """Fit codecs (unless given), transform ``table`` and train."""
    if codecs is None:
        codecs = fit_table_codecs(table, max_modes=max_modes, seed=config.seed)
    layout = build_layout(codecs)
    matrix, _, _ = table_matrix(table)
    transformed = transform(codecs, layout, matrix, np.random.default_rng([config.seed, 2]))
    return train_gan(transformed, layout, config, codecs=codecs, columns=table.columns,
                     callback=callback)

