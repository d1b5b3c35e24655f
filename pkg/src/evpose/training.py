"""A deliberately small trainable predictor to exercise the loss end to end.

The model is affine: each input channel is average-pooled to a 32 x 32
grid, the pooled cells are flattened, and one weight matrix plus bias maps
them to a single stage of logit planes. That is enough capacity for the
synthetic tasks in this package while keeping training runs to seconds,
and it shares the exact loss and gradient code a real network would use.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import EmptyDatasetError, FormatError, ShapeMismatchError
from .geometry import MarginalHeatmaps, NdcPose
from .lifting import loss_gradients, total_loss

POOL = 32  # pooled grid edge; inputs must be at least this tall and wide


class TrainingSample(NamedTuple):
    input: np.ndarray  # (C, H, W) network input
    target: MarginalHeatmaps
    pose: NdcPose


def average_pool(x: np.ndarray, out: int = POOL) -> np.ndarray:
    """Mean-pool (C, H, W) to (C, out, out) with near-even cell spans."""
    c, h, w = x.shape
    if h < out or w < out:
        raise ShapeMismatchError(f"input {h}x{w} smaller than pooled grid {out}x{out}")
    rb = (np.arange(out) * h) // out
    cb = (np.arange(out) * w) // out
    sums = np.add.reduceat(np.add.reduceat(x, rb, axis=1), cb, axis=2)
    rn = np.diff(np.append(rb, h)).astype(np.float64)
    cn = np.diff(np.append(cb, w)).astype(np.float64)
    return sums / (rn[:, None] * cn[None, :])


@dataclass
class ToyPredictor:
    in_channels: int
    joints: int
    res: int
    weights: np.ndarray  # (joints * 3 * res * res, in_channels * POOL * POOL)
    bias: np.ndarray  # (joints * 3 * res * res,)

    @classmethod
    def zeros(cls, in_channels: int, joints: int, res: int) -> "ToyPredictor":
        out_dim = joints * 3 * res * res
        feat_dim = in_channels * POOL * POOL
        return cls(
            in_channels,
            joints,
            res,
            np.zeros((out_dim, feat_dim), dtype=np.float64),
            np.zeros(out_dim, dtype=np.float64),
        )

    def features(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 3 or x.shape[0] != self.in_channels:
            raise ShapeMismatchError(
                f"expected ({self.in_channels}, H, W) input, got {x.shape}"
            )
        return average_pool(x).ravel()

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Logit planes (1, joints, 3, res, res) for one input tensor."""
        z = self.weights @ self.features(x) + self.bias
        return z.reshape(1, self.joints, 3, self.res, self.res)

    def forward_batch(self, feats: np.ndarray) -> np.ndarray:
        """Logits (B, 1, joints, 3, res, res) from stacked features (B, F)."""
        z = feats @ self.weights.T + self.bias
        return z.reshape(feats.shape[0], 1, self.joints, 3, self.res, self.res)


class Adam:
    """Standard Adam with bias correction; state is per parameter array."""

    def __init__(self, params: Sequence[np.ndarray], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * (g * g)
            mhat = self.m[i] / (1.0 - self.beta1**self.t)
            vhat = self.v[i] / (1.0 - self.beta2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


class EpochStats(NamedTuple):
    epoch: int
    total: float
    geometric: float
    divergence: float


def evaluate_loss(
    model: ToyPredictor,
    samples: Sequence[TrainingSample],
    temperature: float = 1.0,
    epsilon: float = 1e-8,
) -> EpochStats:
    """Mean loss terms over a sample set, no gradient work."""
    if not samples:
        raise EmptyDatasetError("no samples")
    tot = geo = div = 0.0
    for sample in samples:
        breakdown, _ = _sample_loss(model, sample, temperature, epsilon, False)
        st = breakdown.stages[-1]
        tot += breakdown.total
        geo += st.geometric
        div += st.div_xy + st.div_xz + st.div_zy
    n = len(samples)
    return EpochStats(0, tot / n, geo / n, div / n)


def _sample_loss(model, sample, temperature, epsilon, need_grad):
    logits = model.forward(sample.input)
    if need_grad:
        return loss_gradients(logits, sample.target, sample.pose, temperature, epsilon)
    return total_loss(logits, sample.target, sample.pose, temperature, epsilon), None


def train_toy(
    samples: Sequence[TrainingSample],
    epochs: int = 40,
    batch_size: int = 32,
    lr: float = 3e-4,
    seed: int = 0,
    temperature: float = 1.0,
    epsilon: float = 1e-8,
) -> tuple[ToyPredictor, list[EpochStats]]:
    """Fit the affine predictor with Adam; returns the model and loss curve.

    Each epoch shuffles with a seeded generator, walks full minibatches
    (a short trailing batch is still used), averages gradients across the
    batch, and takes one Adam step per batch. The recorded stats are
    running means over that epoch's samples.
    """
    samples = list(samples)
    if not samples:
        raise EmptyDatasetError("no training samples")
    first = samples[0]
    model = ToyPredictor.zeros(
        first.input.shape[0], len(first.pose), first.target.res
    )
    opt = Adam([model.weights, model.bias], lr=lr)
    rng = np.random.default_rng(seed)
    feats = np.stack([model.features(s.input) for s in samples])
    curve = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(samples))
        tot = geo = div = 0.0
        for start in range(0, len(order), batch_size):
            batch = order[start : start + batch_size]
            logits = model.forward_batch(feats[batch])
            gw = np.zeros_like(model.weights)
            gb = np.zeros_like(model.bias)
            for bi, si in enumerate(batch):
                sample = samples[si]
                breakdown, dz = loss_gradients(
                    logits[bi], sample.target, sample.pose, temperature, epsilon
                )
                g = dz.ravel()
                gw += np.outer(g, feats[si])
                gb += g
                st = breakdown.stages[-1]
                tot += breakdown.total
                geo += st.geometric
                div += st.div_xy + st.div_xz + st.div_zy
            inv = 1.0 / len(batch)
            opt.step([model.weights, model.bias], [gw * inv, gb * inv])
        n = len(samples)
        curve.append(EpochStats(epoch, tot / n, geo / n, div / n))
    return model, curve


# ---------------------------------------------------------------------------
# checkpoints: flat float64 payload plus a text sidecar with the dims


def save_checkpoint(model: ToyPredictor, path: str | Path) -> None:
    path = Path(path)
    payload = np.concatenate([model.weights.ravel(), model.bias.ravel()])
    path.write_bytes(payload.astype("<f8").tobytes())
    sidecar = (
        f"in_channels = {model.in_channels}\n"
        f"joints = {model.joints}\n"
        f"res = {model.res}\n"
        f"pool = {POOL}\n"
    )
    path.with_suffix(".meta").write_text(sidecar)


def load_checkpoint(path: str | Path) -> ToyPredictor:
    path = Path(path)
    meta_path = path.with_suffix(".meta")
    if not meta_path.is_file():
        raise FormatError("missing sidecar", path=meta_path)
    fields = {}
    for lineno, raw in enumerate(meta_path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, rhs = line.partition("=")
        if not sep:
            raise FormatError("expected 'key = value'", path=meta_path, line=lineno)
        try:
            fields[key.strip()] = int(rhs)
        except ValueError:
            raise FormatError("non-integer value", path=meta_path, line=lineno) from None
    try:
        if fields["pool"] != POOL:
            raise FormatError(f"unsupported pool size {fields['pool']}", path=meta_path)
        model = ToyPredictor.zeros(fields["in_channels"], fields["joints"], fields["res"])
    except KeyError as err:
        raise FormatError(f"missing field {err}", path=meta_path) from None
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    expected = model.weights.size + model.bias.size
    if data.size != expected:
        raise FormatError(
            f"payload holds {data.size} values, dims imply {expected}", path=path
        )
    model.weights = data[: model.weights.size].reshape(model.weights.shape).copy()
    model.bias = data[model.weights.size :].copy()
    return model
