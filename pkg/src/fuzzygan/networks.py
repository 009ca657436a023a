"""Conditional GAN for tabular regression, with optional fuzzy heads, plus
a fully connected DNN baseline.

The generator maps (x, noise) to a prediction in [0, 1]; the discriminator
scores (x, y) pairs as real or generated. Either head can be widened to N
columns and passed through the fuzzy pipeline (regression injection on the
generator, classification injection on the discriminator, or both).
Training follows the plain minimax game with alternating per-batch Adam
steps; no auxiliary regression loss term is ever added.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .fuzzy import FuzzyPartitionSpec, fuzzy_forward
from .optim import Adam
from .tensor import GradientTape, Tensor

__all__ = [
    "TrainingDivergenceError",
    "LayerSpec",
    "GanSpec",
    "DnnSpec",
    "GAN_HYPERPARAMS",
    "gan_spec_for",
    "Dense",
    "Stack",
    "TwoBranchNet",
    "build_generator",
    "build_discriminator",
    "build_dnn",
    "discriminator_loss",
    "generator_loss",
    "gan_losses",
    "train_cgan",
    "train_dnn",
    "predict",
    "save_checkpoint",
    "load_checkpoint",
    "restore_parameters",
]

SCORE_EPS = 1e-7  # log clamp keeping the game losses finite

ACTIVATIONS = {"elu": T.elu, "relu": T.relu, "sigmoid": T.sigmoid, "linear": None}


class TrainingDivergenceError(RuntimeError):
    """A loss or parameter went non-finite during training."""

    def __init__(self, message: str, epoch: int | None = None, batch: int | None = None):
        where = ""
        if epoch is not None:
            where = f" (epoch {epoch}" + (f", batch {batch})" if batch is not None else ")")
        super().__init__(message + where)
        self.epoch = epoch
        self.batch = batch


# ---------------------------------------------------------------------------
# layer and network specs


@dataclass(frozen=True)
class LayerSpec:
    in_width: int
    out_width: int
    activation: str = "linear"
    dropout: float = 0.0

    def __post_init__(self):
        if self.in_width < 1 or self.out_width < 1:
            raise ValueError(f"layer widths must be >= 1, got {self.in_width}x{self.out_width}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class GanSpec:
    """Architecture and training hyperparameters for one CGAN.

    Trunk tuples list the fully connected widths after the two input
    branches are concatenated; each branch is a single layer of
    ``branch_width``. The injection mode decides which heads widen to the
    fuzzy partition's N columns.
    """

    input_dim: int
    noise_dim: int = 1
    branch_width: int = 100
    gen_trunk: tuple[int, ...] = (50, 50, 50, 50, 50)
    disc_trunk: tuple[int, ...] = (50, 50, 50, 50)
    injection: str = "none"  # none | fri | fci | fdi
    partition: FuzzyPartitionSpec = field(default_factory=FuzzyPartitionSpec)
    activation: str = "elu"
    gen_head: str = "sigmoid"  # plain generator head: sigmoid or linear
    gen_lr: float = 0.001
    gen_decay: float = 0.001
    disc_lr: float = 0.001
    disc_decay: float = 0.0
    epochs: int = 500
    batch_size: int = 100
    saturating_g_loss: bool = False
    noise_draws: int = 1

    def __post_init__(self):
        if self.injection not in ("none", "fri", "fci", "fdi"):
            raise ValueError(f"unknown injection mode {self.injection!r}")
        if self.input_dim < 1 or self.noise_dim < 1 or self.branch_width < 1:
            raise ValueError("input, noise and branch widths must all be >= 1")
        if self.gen_head not in ("sigmoid", "linear"):
            raise ValueError(f"generator head must be sigmoid or linear, got {self.gen_head!r}")

    @property
    def fuzzy_generator(self) -> bool:
        return self.injection in ("fri", "fdi")

    @property
    def fuzzy_discriminator(self) -> bool:
        return self.injection in ("fci", "fdi")


@dataclass(frozen=True)
class DnnSpec:
    hidden: tuple[int, ...] = (500, 500, 500, 100, 100, 50)
    activation: str = "relu"
    dropout: float = 0.5
    lr: float = 0.001
    decay: float = 0.1
    epochs: int = 100
    batch_size: int = 100
    init_std: float = 0.05


# Per-dataset hyperparameters. Two trunk layouts cover the five datasets;
# learning rates and decays vary per dataset and per network.
_SMALL = dict(gen_trunk=(50,) * 5, disc_trunk=(50,) * 4)
_LARGE = dict(gen_trunk=(100, 75, 75, 75, 75, 50), disc_trunk=(50, 50, 50, 50, 25))
GAN_HYPERPARAMS: dict[str, dict] = {
    "abalone": dict(**_SMALL, gen_lr=0.001, gen_decay=0.001, disc_lr=0.001, disc_decay=0.0),
    "ailerons": dict(**_SMALL, gen_lr=0.0001, gen_decay=0.0, disc_lr=0.0005, disc_decay=0.0),
    "bank": dict(**_LARGE, gen_lr=0.001, gen_decay=0.001, disc_lr=0.001, disc_decay=0.0),
    "census": dict(**_SMALL, gen_lr=0.001, gen_decay=0.0001, disc_lr=0.001, disc_decay=0.0),
    "pumadyn": dict(**_LARGE, gen_lr=0.001, gen_decay=0.001, disc_lr=0.001, disc_decay=0.001),
}


def gan_spec_for(dataset: str, input_dim: int, injection: str = "none", **overrides) -> GanSpec:
    """The catalog spec for a named dataset, with optional overrides."""
    if dataset not in GAN_HYPERPARAMS:
        raise KeyError(f"no hyperparameters for dataset {dataset!r}")
    base = dict(GAN_HYPERPARAMS[dataset])
    base.update(overrides)
    return GanSpec(input_dim=input_dim, injection=injection, **base)


# ---------------------------------------------------------------------------
# parameter containers


class Dense:
    """One fully connected layer: activation(x @ w + b), optional dropout."""

    def __init__(self, spec: LayerSpec, rng: np.random.Generator, init: str = "he_normal",
                 init_std: float = 0.05):
        self.spec = spec
        if init == "he_normal":
            self.w = T.he_normal_init(spec.in_width, spec.out_width, rng)
        elif init == "normal":
            self.w = T.random_normal_init(spec.in_width, spec.out_width, init_std, rng)
        else:
            raise ValueError(f"unknown init {init!r}")
        self.b = T.zeros_init(1, spec.out_width)

    def forward(self, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        h = T.affine(x, self.w, self.b)
        act = ACTIVATIONS[self.spec.activation]
        if act is not None:
            h = act(h)
        if self.spec.dropout > 0.0:
            h = T.dropout_apply(h, self.spec.dropout, training, rng)
        return h

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class Stack:
    """A chain of Dense layers."""

    def __init__(self, layers: list[Dense]):
        self.layers = layers

    def forward(self, x: Tensor, training: bool = False,
                rng: np.random.Generator | None = None) -> Tensor:
        h = x
        for layer in self.layers:
            h = layer.forward(h, training, rng)
        return h

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def parameter_records(self, prefix: str) -> list[tuple[str, Tensor]]:
        records = []
        for i, layer in enumerate(self.layers):
            records.append((f"{prefix}.{i}.w", layer.w))
            records.append((f"{prefix}.{i}.b", layer.b))
        return records


class TwoBranchNet:
    """Two input branches, concatenated, a trunk, and a scoring head.

    Used for both players: the generator's branches take (x, noise) and the
    discriminator's take (x, y). head_mode picks the output map: "sigmoid"
    or "linear" on a scalar head, "fuzzy" on an N-wide head followed by the
    fuzzy pipeline. Every head output except "linear" lies in [0, 1] by
    construction.
    """

    def __init__(
        self,
        a_dim: int,
        b_dim: int,
        branch_width: int,
        trunk: tuple[int, ...],
        head_mode: str,
        partition: FuzzyPartitionSpec,
        activation: str,
        rng: np.random.Generator,
    ):
        if head_mode not in ("sigmoid", "linear", "fuzzy"):
            raise ValueError(f"unknown head mode {head_mode!r}")
        self.head_mode = head_mode
        self.partition = partition
        self.branch_a = Dense(LayerSpec(a_dim, branch_width, activation), rng)
        self.branch_b = Dense(LayerSpec(b_dim, branch_width, activation), rng)
        widths = [2 * branch_width, *trunk]
        self.trunk = Stack(
            [Dense(LayerSpec(w_in, w_out, activation), rng)
             for w_in, w_out in zip(widths[:-1], widths[1:])]
        )
        head_width = partition.n if head_mode == "fuzzy" else 1
        self.head = Dense(LayerSpec(widths[-1], head_width, "linear"), rng)

    def forward(self, a: Tensor, b: Tensor) -> Tensor:
        h = T.concat_cols(self.branch_a.forward(a), self.branch_b.forward(b))
        h = self.trunk.forward(h)
        raw = self.head.forward(h)
        if self.head_mode == "fuzzy":
            return fuzzy_forward(T.sigmoid(raw), self.partition)
        if self.head_mode == "sigmoid":
            return T.sigmoid(raw)
        return raw

    def parameters(self) -> list[Tensor]:
        return (
            self.branch_a.parameters()
            + self.branch_b.parameters()
            + self.trunk.parameters()
            + self.head.parameters()
        )

    def parameter_records(self) -> list[tuple[str, Tensor]]:
        return [
            ("branch_a.w", self.branch_a.w),
            ("branch_a.b", self.branch_a.b),
            ("branch_b.w", self.branch_b.w),
            ("branch_b.b", self.branch_b.b),
            *self.trunk.parameter_records("trunk"),
            ("head.w", self.head.w),
            ("head.b", self.head.b),
        ]


def build_generator(spec: GanSpec, rng: np.random.Generator) -> TwoBranchNet:
    """Generator: (x, noise) branches, trunk, regression head in [0, 1]."""
    head_mode = "fuzzy" if spec.fuzzy_generator else spec.gen_head
    return TwoBranchNet(
        spec.input_dim, spec.noise_dim, spec.branch_width, spec.gen_trunk,
        head_mode, spec.partition, spec.activation, rng,
    )


def build_discriminator(spec: GanSpec, rng: np.random.Generator) -> TwoBranchNet:
    """Discriminator: (x, y) branches, trunk, realness score in (0, 1)."""
    head_mode = "fuzzy" if spec.fuzzy_discriminator else "sigmoid"
    return TwoBranchNet(
        spec.input_dim, 1, spec.branch_width, spec.disc_trunk,
        head_mode, spec.partition, spec.activation, rng,
    )


def build_dnn(input_dim: int, spec: DnnSpec, rng: np.random.Generator) -> Stack:
    """Feed-forward baseline: ReLU + dropout after every hidden layer,
    linear scalar output, small random-normal weights."""
    widths = [input_dim, *spec.hidden]
    layers = [
        Dense(LayerSpec(w_in, w_out, spec.activation, spec.dropout), rng,
              init="normal", init_std=spec.init_std)
        for w_in, w_out in zip(widths[:-1], widths[1:])
    ]
    layers.append(Dense(LayerSpec(widths[-1], 1, "linear"), rng,
                        init="normal", init_std=spec.init_std))
    return Stack(layers)


# ---------------------------------------------------------------------------
# losses


def _clamped(scores: Tensor) -> Tensor:
    return T.clip(scores, SCORE_EPS, 1.0 - SCORE_EPS)


def discriminator_loss(real_scores: Tensor, fake_scores: Tensor) -> Tensor:
    """-mean log D(real) - mean log (1 - D(fake))."""
    real = _clamped(real_scores)
    fake = _clamped(fake_scores)
    return -(T.log(real).mean() + T.log(1.0 - fake).mean())


def generator_loss(fake_scores: Tensor, saturating: bool = False) -> Tensor:
    """Non-saturating -mean log D(fake); saturating form mean log(1 - D(fake))."""
    fake = _clamped(fake_scores)
    if saturating:
        return T.log(1.0 - fake).mean()
    return -T.log(fake).mean()


def gan_losses(real_scores: Tensor, fake_scores: Tensor,
               saturating: bool = False) -> tuple[Tensor, Tensor]:
    """Both players' losses from one pair of score batches.

    The formulas are identical whether the scores came from a scalar
    sigmoid head or from the fuzzy pipeline.
    """
    for name, s in (("real", real_scores), ("fake", fake_scores)):
        if not np.all(np.isfinite(s.data)):
            raise TrainingDivergenceError(f"non-finite {name} scores")
    return (
        discriminator_loss(real_scores, fake_scores),
        generator_loss(fake_scores, saturating),
    )


# ---------------------------------------------------------------------------
# training


def _check_finite_params(nets: list, epoch: int) -> None:
    for net in nets:
        for p in net.parameters():
            if not np.all(np.isfinite(p.data)):
                raise TrainingDivergenceError("non-finite network parameter", epoch=epoch)


def _nmae_on(net: TwoBranchNet, X: np.ndarray, Y: np.ndarray,
             rng: np.random.Generator, draws: int) -> float:
    pred = predict(net, Tensor(X), rng, draws=draws)
    return float(np.mean(np.abs(Y - pred.data)))


def train_cgan(dataset, spec: GanSpec, seed: int):
    """Adversarial training: per batch, one discriminator Adam step on the
    game loss, then one generator step on the non-saturating loss.

    `dataset` must be normalized and carry train/test splits. Returns
    (generator, discriminator, history) where history holds per-epoch mean
    d_loss, g_loss and the test-split NMAE. Everything is driven by `seed`,
    so equal seeds give bit-identical histories.
    """
    if not dataset.normalized or dataset.train_idx is None:
        raise ValueError("train_cgan needs a normalized dataset with splits")
    ss = np.random.SeedSequence(seed)
    rng_gen, rng_disc, rng_order, rng_noise, rng_eval = (
        np.random.default_rng(s) for s in ss.spawn(5)
    )

    gen = build_generator(spec, rng_gen)
    disc = build_discriminator(spec, rng_disc)
    opt_g = Adam(gen.parameters(), lr=spec.gen_lr, decay=spec.gen_decay)
    opt_d = Adam(disc.parameters(), lr=spec.disc_lr, decay=spec.disc_decay)

    X_train = dataset.X[dataset.train_idx]
    Y_train = dataset.Y[dataset.train_idx]
    X_test = dataset.X[dataset.test_idx]
    Y_test = dataset.Y[dataset.test_idx]
    n = X_train.shape[0]

    history = {"d_loss": [], "g_loss": [], "val_nmae": []}
    for epoch in range(spec.epochs):
        order = rng_order.permutation(n)
        d_losses, g_losses = [], []
        for batch_no, start in enumerate(range(0, n, spec.batch_size)):
            idx = order[start : start + spec.batch_size]
            xb = Tensor(X_train[idx])
            yb = Tensor(Y_train[idx])
            m = len(idx)

            # discriminator step; the generator runs untaped, so its
            # parameters stay out of this gradient sweep
            z = Tensor(rng_noise.uniform(0.0, 1.0, (m, spec.noise_dim)))
            y_fake = gen.forward(xb, z)
            with GradientTape() as tape:
                real_scores = disc.forward(xb, yb)
                fake_scores = disc.forward(xb, y_fake)
                d_loss, _ = gan_losses(real_scores, fake_scores)
            if not np.isfinite(d_loss.item()):
                raise TrainingDivergenceError("non-finite discriminator loss",
                                              epoch=epoch, batch=batch_no)
            tape.backward(d_loss)
            opt_d.step()
            opt_d.zero_grad()

            # generator step; discriminator gradients are computed but
            # discarded
            z = Tensor(rng_noise.uniform(0.0, 1.0, (m, spec.noise_dim)))
            with GradientTape() as tape:
                fake_scores = disc.forward(xb, gen.forward(xb, z))
                g_loss = generator_loss(fake_scores, spec.saturating_g_loss)
            if not np.isfinite(g_loss.item()):
                raise TrainingDivergenceError("non-finite generator loss",
                                              epoch=epoch, batch=batch_no)
            tape.backward(g_loss)
            opt_g.step()
            opt_g.zero_grad()
            opt_d.zero_grad()

            d_losses.append(d_loss.item())
            g_losses.append(g_loss.item())

        _check_finite_params([gen, disc], epoch)
        history["d_loss"].append(float(np.mean(d_losses)))
        history["g_loss"].append(float(np.mean(g_losses)))
        history["val_nmae"].append(
            _nmae_on(gen, X_test, Y_test, rng_eval, spec.noise_draws)
        )
    return gen, disc, history


def train_dnn(dataset, spec: DnnSpec, seed: int):
    """Minimize mean squared error with Adam on shuffled minibatches."""
    if not dataset.normalized or dataset.train_idx is None:
        raise ValueError("train_dnn needs a normalized dataset with splits")
    ss = np.random.SeedSequence(seed)
    rng_init, rng_order, rng_drop = (np.random.default_rng(s) for s in ss.spawn(3))

    net = build_dnn(dataset.X.shape[1], spec, rng_init)
    opt = Adam(net.parameters(), lr=spec.lr, decay=spec.decay)

    X_train = dataset.X[dataset.train_idx]
    Y_train = dataset.Y[dataset.train_idx]
    X_test = dataset.X[dataset.test_idx]
    Y_test = dataset.Y[dataset.test_idx]
    n = X_train.shape[0]

    history = {"loss": [], "val_nmae": []}
    for epoch in range(spec.epochs):
        order = rng_order.permutation(n)
        losses = []
        for batch_no, start in enumerate(range(0, n, spec.batch_size)):
            idx = order[start : start + spec.batch_size]
            xb = Tensor(X_train[idx])
            yb = Tensor(Y_train[idx])
            with GradientTape() as tape:
                diff = T.sub(net.forward(xb, training=True, rng=rng_drop), yb)
                loss = T.mul(diff, diff).mean()
            if not np.isfinite(loss.item()):
                raise TrainingDivergenceError("non-finite training loss",
                                              epoch=epoch, batch=batch_no)
            tape.backward(loss)
            opt.step()
            opt.zero_grad()
            losses.append(loss.item())

        _check_finite_params([net], epoch)
        history["loss"].append(float(np.mean(losses)))
        pred = net.forward(Tensor(X_test)).data
        history["val_nmae"].append(float(np.mean(np.abs(Y_test - pred))))
    return net, history


def predict(gen: TwoBranchNet, x: Tensor, rng: np.random.Generator, draws: int = 1) -> Tensor:
    """Generator prediction: the mean over `draws` fresh noise samples."""
    if draws < 1:
        raise ValueError(f"noise draws must be >= 1, got {draws}")
    acc = np.zeros((x.rows, 1))
    for _ in range(draws):
        z = Tensor(rng.uniform(0.0, 1.0, (x.rows, gen.branch_b.spec.in_width)))
        acc += gen.forward(x, z).data
    return Tensor(acc / draws)


# ---------------------------------------------------------------------------
# checkpoints: ordered (name, rows, cols, row-major values) records

CHECKPOINT_VERSION = 1


def save_checkpoint(net, path) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "records": [
            {"name": name, "rows": p.rows, "cols": p.cols, "values": p.data.ravel().tolist()}
            for name, p in net.parameter_records()
        ],
    }
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    with os.fdopen(fd, "w") as f:
        json.dump(payload, f)
    os.replace(tmp, path)


def load_checkpoint(path) -> list[dict]:
    with open(path) as f:
        payload = json.load(f)
    version = payload.get("format_version")
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version!r}")
    return payload["records"]


def restore_parameters(net, records: list[dict]) -> None:
    """Copy checkpoint records into a structurally identical network."""
    named = net.parameter_records()
    if len(named) != len(records):
        raise ValueError(f"checkpoint has {len(records)} records, network has {len(named)}")
    for (name, p), rec in zip(named, records):
        if rec["name"] != name or (rec["rows"], rec["cols"]) != p.shape:
            raise ValueError(
                f"checkpoint record {rec['name']!r} {rec['rows']}x{rec['cols']} does not "
                f"match parameter {name!r} {p.rows}x{p.cols}"
            )
        p.data = np.asarray(rec["values"], dtype=np.float64).reshape(p.shape)
