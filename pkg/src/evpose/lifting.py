"""Lifting marginal heatmaps to 3D poses, with losses and exact gradients.

A predictor emits logit planes shaped (stages, J, 3, res, res), one plane
per joint and cube face. Each plane becomes a probability map through a
tempered softmax; a soft-argmax turns the map into continuous face
coordinates; the three faces fuse into one cube point (x and y from the xy
face, z averaged from the xz and zy faces).

Training loss per stage = geometric + div_xy + div_xz + div_zy, summed over
stages. The geometric term is the mean Euclidean distance over valid
joints. Each divergence term is the mean (over valid joints) symmetrized
KL between the target plane and the predicted map, both smoothed by adding
epsilon to every cell and renormalizing.

Gradients are derived by hand rather than taped. The softmax, smoothing,
soft-argmax, and norm chains each have closed forms, and the finite
difference suite in the tests holds them to tight relative error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AllMaskedError, OutOfRangeError, ShapeMismatchError
from .geometry import FACE_AXES, FACE_NAMES, MarginalHeatmaps, NdcPose, ndc_to_pixel, render_plane

_TINY = 1e-300  # floor before log; keeps oracle logits finite


def softmax_plane(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Tempered softmax over the trailing two axes."""
    if temperature <= 0:
        raise OutOfRangeError("temperature must be positive")
    m = logits.max(axis=(-2, -1), keepdims=True)
    e = np.exp((logits - m) / temperature)
    return e / e.sum(axis=(-2, -1), keepdims=True)


def _grids(res: int) -> tuple[np.ndarray, np.ndarray]:
    # cell centers in cube units, endpoints exactly -1 and 1
    g = 2.0 * np.arange(res, dtype=np.float64) / (res - 1) - 1.0
    return g, g


def soft_argmax(probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expected (u, v) of probability planes, in cube units.

    Accepts (..., res, res); returns two (...) arrays: u over columns,
    v over rows.
    """
    res = probs.shape[-1]
    gu, gv = _grids(res)
    u = probs.sum(axis=-2) @ gu
    v = probs.sum(axis=-1) @ gv
    return u, v


class FusedPose(NamedTuple):
    """Fused cube prediction plus the per-face coordinates that built it."""

    xyz: np.ndarray  # (J, 3)
    x_xy: np.ndarray  # (J,) x from the xy face
    y_xy: np.ndarray  # (J,) y from the xy face
    z_xz: np.ndarray  # (J,) z from the xz face
    z_zy: np.ndarray  # (J,) z from the zy face


def fuse_faces(u: np.ndarray, v: np.ndarray) -> FusedPose:
    """Combine per-face soft-argmax coordinates, shapes (J, 3) each.

    Column order follows FACE_NAMES. x and y come from the xy face; the two
    independent z readings (xz vertical, zy horizontal) are averaged.
    """
    x = u[:, 0]
    y = v[:, 0]
    z_xz = v[:, 1]
    z_zy = u[:, 2]
    z = (z_xz + z_zy) / 2.0
    return FusedPose(np.stack([x, y, z], axis=1), x, y, z_xz, z_zy)


def predict_pose(logits: np.ndarray, temperature: float = 1.0) -> FusedPose:
    """Decode logits to a fused pose; multi-stage input uses the last stage."""
    if logits.ndim == 5:
        logits = logits[-1]
    if logits.ndim != 4 or logits.shape[1] != 3 or logits.shape[2] != logits.shape[3]:
        raise ShapeMismatchError(f"expected (J, 3, res, res) logits, got {logits.shape}")
    q = softmax_plane(logits, temperature)
    u, v = soft_argmax(q)
    return fuse_faces(u, v)


def sym_kl(h: np.ndarray, q: np.ndarray, epsilon: float) -> float:
    """Symmetrized KL between two planes after epsilon smoothing."""
    if h.shape != q.shape:
        raise ShapeMismatchError(f"plane shapes differ: {h.shape} vs {q.shape}")
    if epsilon <= 0:
        raise OutOfRangeError("epsilon must be positive")
    hs = h + epsilon
    qs = q + epsilon
    hp = hs / hs.sum()
    qp = qs / qs.sum()
    ratio = np.log(hp / qp)
    return float(0.5 * (hp * ratio).sum() - 0.5 * (qp * ratio).sum())


def geometric_loss(pred_xyz: np.ndarray, gt_xyz: np.ndarray, valid: np.ndarray) -> float:
    """Mean Euclidean distance over valid joints, in cube units."""
    if pred_xyz.shape != gt_xyz.shape:
        raise ShapeMismatchError(f"pose shapes differ: {pred_xyz.shape} vs {gt_xyz.shape}")
    if not valid.any():
        raise AllMaskedError("no valid joints")
    d = np.linalg.norm(pred_xyz - gt_xyz, axis=1)
    return float(d[valid].mean())


class StageLoss(NamedTuple):
    geometric: float
    div_xy: float
    div_xz: float
    div_zy: float

    @property
    def total(self) -> float:
        return self.geometric + self.div_xy + self.div_xz + self.div_zy


@dataclass(frozen=True)
class LossBreakdown:
    stages: tuple[StageLoss, ...]

    @property
    def total(self) -> float:
        return float(sum(s.total for s in self.stages))


def _check_inputs(logits: np.ndarray, target: MarginalHeatmaps, gt_pose: NdcPose):
    if logits.ndim != 5 or logits.shape[2] != 3 or logits.shape[3] != logits.shape[4]:
        raise ShapeMismatchError(
            f"expected (stages, J, 3, res, res) logits, got {logits.shape}"
        )
    j, res = logits.shape[1], logits.shape[3]
    if target.planes.shape != (j, 3, res, res):
        raise ShapeMismatchError(
            f"target planes {target.planes.shape} do not match logits {logits.shape}"
        )
    if len(gt_pose) != j:
        raise ShapeMismatchError(f"gt pose has {len(gt_pose)} joints, logits have {j}")


def _forward_backward(
    logits: np.ndarray,
    target: MarginalHeatmaps,
    gt_pose: NdcPose,
    temperature: float,
    epsilon: float,
    need_grad: bool,
) -> tuple[LossBreakdown, np.ndarray | None]:
    _check_inputs(logits, target, gt_pose)
    if epsilon <= 0:
        raise OutOfRangeError("epsilon must be positive")
    valid = target.valid & gt_pose.valid
    nv = int(valid.sum())
    if nv == 0:
        raise AllMaskedError("no valid joints")

    s, j, _, res, _ = logits.shape
    q = softmax_plane(logits, temperature)
    u, v = soft_argmax(q)  # (s, j, 3)

    # smoothed targets are stage independent
    hs = target.planes + epsilon
    dh = hs.sum(axis=(-2, -1), keepdims=True)
    hp = hs / dh

    qs = q + epsilon
    dq_norm = qs.sum(axis=(-2, -1), keepdims=True)
    qp = qs / dq_norm

    gu, gv = _grids(res)
    dq = np.zeros_like(q) if need_grad else None
    stages = []
    for si in range(s):
        fused = fuse_faces(u[si], v[si])
        diff = fused.xyz - gt_pose.coords
        norms = np.linalg.norm(diff, axis=1)
        geo = float(norms[valid].mean())

        ratio = np.log(hp / qp[si])
        per_plane = 0.5 * (hp * ratio).sum(axis=(-2, -1)) - 0.5 * (qp[si] * ratio).sum(
            axis=(-2, -1)
        )
        divs = [float(per_plane[valid, f].mean()) for f in range(3)]
        stages.append(StageLoss(geo, *divs))

        if not need_grad:
            continue

        # geometric path: d geo / d xyz, then into each face's (u, v)
        safe = np.where(norms > 0.0, norms, 1.0)
        dxyz = np.where(
            (valid & (norms > 0.0))[:, None], diff / (safe[:, None] * nv), 0.0
        )
        du = np.zeros((j, 3))
        dv = np.zeros((j, 3))
        du[:, 0] = dxyz[:, 0]
        dv[:, 0] = dxyz[:, 1]
        dv[:, 1] = dxyz[:, 2] * 0.5
        du[:, 2] = dxyz[:, 2] * 0.5
        dq[si] += du[..., None, None] * gu[None, None, None, :]
        dq[si] += dv[..., None, None] * gv[None, None, :, None]

        # divergence path through the smoothing renormalization
        dpsi_dqp = 0.5 * (-hp / qp[si] + np.log(qp[si] / hp) + 1.0)
        inner = (dpsi_dqp * qp[si]).sum(axis=(-2, -1), keepdims=True)
        dpsi_dq = (dpsi_dqp - inner) / dq_norm[si]
        dq[si] += np.where(valid[:, None, None, None], dpsi_dq / nv, 0.0)

    breakdown = LossBreakdown(tuple(stages))
    if not need_grad:
        return breakdown, None

    # softmax backward, tempered
    inner = (dq * q).sum(axis=(-2, -1), keepdims=True)
    dz = q * (dq - inner) / temperature
    return breakdown, dz


def total_loss(
    logits: np.ndarray,
    target: MarginalHeatmaps,
    gt_pose: NdcPose,
    temperature: float = 1.0,
    epsilon: float = 1e-8,
) -> LossBreakdown:
    breakdown, _ = _forward_backward(logits, target, gt_pose, temperature, epsilon, False)
    return breakdown


def loss_gradients(
    logits: np.ndarray,
    target: MarginalHeatmaps,
    gt_pose: NdcPose,
    temperature: float = 1.0,
    epsilon: float = 1e-8,
) -> tuple[LossBreakdown, np.ndarray]:
    """Loss plus d(total)/d(logits), same shape as ``logits``."""
    breakdown, dz = _forward_backward(logits, target, gt_pose, temperature, epsilon, True)
    return breakdown, dz


def oracle_predict(
    pose: NdcPose,
    res: int,
    sigma: float,
    noise_std: float = 0.0,
    rng: np.random.Generator | None = None,
    stages: int = 1,
) -> np.ndarray:
    """Logits whose decoded pose is the ground truth plus controlled jitter.

    Draws one 3D offset per joint (standard deviation ``noise_std`` in cube
    units) and renders each face's plane at the shifted center, so all three
    faces stay consistent with a single perturbed 3D point. With zero noise
    the decoded pose differs from the input only by the soft-argmax's
    truncation bias. Invalid joints get flat planes.
    """
    if noise_std < 0:
        raise OutOfRangeError("noise_std must be non-negative")
    if noise_std > 0 and rng is None:
        raise OutOfRangeError("noise requires an rng")
    j = len(pose)
    logits = np.zeros((stages, j, 3, res, res), dtype=np.float64)
    for ji in range(j):
        if not pose.valid[ji]:
            continue
        delta = rng.normal(0.0, noise_std, 3) if noise_std > 0 else np.zeros(3)
        coords = pose.coords[ji] + delta
        for fi, face in enumerate(FACE_NAMES):
            au, av = FACE_AXES[face]
            plane = render_plane(
                ndc_to_pixel(coords[au], res), ndc_to_pixel(coords[av], res), res, sigma
            )
            logits[:, ji, fi] = np.log(np.maximum(plane, _TINY))
    return logits
