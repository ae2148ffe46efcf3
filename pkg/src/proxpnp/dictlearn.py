"""Supervised dictionary training through the unrolled denoisers.

The forward pass is the exact denoiser computation (cold start, shared
dictionary across layers); the loss is the batch-mean squared error
0.5*||G(0) - clean||^2 against the clean signals. Gradients are reverse-mode
through the L layers: the soft-threshold passes gradient where the input
exceeds the threshold, the clip passes it strictly inside the radius, and
because the dictionary appears in every layer and in the output map all
bilinear contributions are summed.

Inner step sizes are recomputed from the current dictionary by power
iteration on every forward pass but treated as constants in the backward
pass (no gradient through the spectral norm).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linops import DenseOperator, FilterBank2D, LinearOperator
from .prox import L1, Regularizer, prox, prox_conjugate_scaled
from .rng import stream

KINK_TOL = 1e-9


@dataclass
class TrainConfig:
    """Training protocol knobs (all defaults are desk scale)."""

    mode: str = "synthesis"  # "analysis" or "synthesis"
    layers: int = 1
    lam: float = 0.01
    epochs: int = 100
    step_size: float = 0.003
    batch: int = 16
    seed: int = 0
    filter_count: int = 8
    kernel_size: int = 5
    epsilon: float = 0.05
    step_factor: float = 1.8
    g: Regularizer = field(default=L1, repr=False)

    def __post_init__(self):
        if self.mode not in ("analysis", "synthesis"):
            raise ValueError(f"unknown mode: {self.mode!r}")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")


@dataclass
class DictParams:
    """Learnable dictionary: dense matrix or filter-bank kernels.

    ``array`` is (S, N) for dense analysis, (N, S) for dense synthesis, or
    (F, k, k) kernels with ``image_shape`` set for filter banks. The
    operator built from the parameters is the mode's forward map: signals
    to coefficients for analysis, codes to signals for synthesis.
    """

    mode: str
    array: np.ndarray
    image_shape: Optional[tuple] = None

    @property
    def kind(self) -> str:
        return "filter_bank" if self.array.ndim == 3 else "dense"

    def build(self) -> LinearOperator:
        if self.kind == "dense":
            return DenseOperator(self.array)
        return FilterBank2D(self.array, self.image_shape, direction=self.mode)

    def param_grad(self, out_vec: np.ndarray, in_vec: np.ndarray) -> np.ndarray:
        """Gradient w.r.t. the parameters of <out_vec, Op(in_vec)>."""
        if self.kind == "dense":
            return np.outer(out_vec, in_vec)
        if self.mode == "analysis":
            # <planes, Gamma(img)>
            return _kernel_bilinear_grad(out_vec, in_vec, self.array.shape,
                                         self.image_shape)
        # synthesis: <img, D(planes)> = <Gamma(img), planes>
        return _kernel_bilinear_grad(in_vec, out_vec, self.array.shape,
                                     self.image_shape)


def _kernel_bilinear_grad(planes_vec, img_vec, kshape, image_shape):
    """d/dK of sum_f <planes_f, correlate(img, K_f)> for all taps."""
    f, kh, kw = kshape
    h, w = image_shape
    planes = np.asarray(planes_vec).reshape(f, h, w)
    img = np.asarray(img_vec).reshape(h, w)
    ch, cw = (kh - 1) // 2, (kw - 1) // 2
    grad = np.zeros(kshape)
    for a in range(kh):
        for b in range(kw):
            shifted = np.roll(img, (-(a - ch), -(b - cw)), axis=(0, 1))
            grad[:, a, b] = np.tensordot(planes, shifted, axes=([1, 2], [0, 1]))
    return grad


def _inner_step(op: LinearOperator, cfg: TrainConfig) -> float:
    # a loose norm estimate is fine here: the 1.8 factor leaves 10%
    # headroom below the 2/||.||^2 stability bound
    return cfg.step_factor / op.spectral_norm(tol=1e-6, max_iter=400) ** 2


def _forward_analysis(op, cfg, step, v):
    """Unrolled dual-FB forward from zero state, keeping pre-activations."""
    u = np.zeros(op.out_dim)
    pre, states = [], [u]
    for _ in range(cfg.layers):
        w = u - step * op.apply(op.apply_adjoint(u) - v)
        u = prox_conjugate_scaled(cfg.g, step, cfg.lam, w)
        pre.append(w)
        states.append(u)
    x_hat = v - op.apply_adjoint(u)
    return x_hat, pre, states


def _forward_synthesis(op, cfg, step, v):
    z = np.zeros(op.in_dim)
    pre, states = [], [z]
    for _ in range(cfg.layers):
        w = z - step * op.apply_adjoint(op.apply(z) - v)
        z = prox(cfg.g, step * cfg.lam, w)
        pre.append(w)
        states.append(z)
    x_hat = op.apply(z)
    return x_hat, pre, states


def _backward_analysis(params, op, cfg, step, v, pre, states, dx):
    """Reverse-mode gradient of <dx, x_hat> w.r.t. the dictionary."""
    grad = np.zeros_like(params.array)
    masks = []
    # output map x_hat = v - Gamma^* u_L
    grad -= params.param_grad(states[-1], dx)
    du = -op.apply(dx)
    for ell in range(cfg.layers - 1, -1, -1):
        w, u_prev = pre[ell], states[ell]
        mask = np.abs(w) < cfg.lam - KINK_TOL
        masks.append(mask)
        dw = mask * du
        q = op.apply_adjoint(u_prev) - v
        grad -= step * (params.param_grad(dw, q)
                        + params.param_grad(u_prev, op.apply_adjoint(dw)))
        du = dw - step * op.apply(op.apply_adjoint(dw))
    masks.reverse()
    return grad, masks


def _backward_synthesis(params, op, cfg, step, v, pre, states, dx):
    grad = np.zeros_like(params.array)
    masks = []
    # output map x_hat = D z_L
    grad += params.param_grad(dx, states[-1])
    dz = op.apply_adjoint(dx)
    thresh = step * cfg.lam
    for ell in range(cfg.layers - 1, -1, -1):
        w, z_prev = pre[ell], states[ell]
        mask = np.abs(w) > thresh + KINK_TOL
        masks.append(mask)
        dw = mask * dz
        r = op.apply(z_prev) - v
        grad -= step * (params.param_grad(r, dw)
                        + params.param_grad(op.apply(dw), z_prev))
        dz = dw - step * op.apply_adjoint(op.apply(dw))
    masks.reverse()
    return grad, masks


def denoise_loss(params: DictParams, pairs, cfg: TrainConfig,
                 step: Optional[float] = None) -> float:
    """Batch-mean 0.5*||denoiser(v) - clean||^2 with cold-started state.

    ``step`` overrides the power-iteration step size (used by the
    finite-difference checks, which must hold it fixed while perturbing
    the dictionary).
    """
    op = params.build()
    if step is None:
        step = _inner_step(op, cfg)
    forward = _forward_analysis if params.mode == "analysis" else _forward_synthesis
    total = 0.0
    for x_bar, v in pairs:
        x_bar = np.asarray(x_bar, dtype=float).ravel()
        v = np.asarray(v, dtype=float).ravel()
        x_hat, _, _ = forward(op, cfg, step, v)
        r = x_hat - x_bar
        total += 0.5 * float(r @ r)
    return total / len(pairs)


def denoise_loss_grad(params: DictParams, pairs, cfg: TrainConfig,
                      step: Optional[float] = None, return_details: bool = False):
    """Loss and its analytic gradient w.r.t. the dictionary parameters.

    Returns ``(loss, grad)``, or ``(loss, grad, details)`` with per-sample
    layer masks and states when ``return_details`` is set (used to check
    that backward masks equal the forward activity pattern).
    """
    op = params.build()
    if step is None:
        step = _inner_step(op, cfg)
    if params.mode == "analysis":
        forward, backward = _forward_analysis, _backward_analysis
    else:
        forward, backward = _forward_synthesis, _backward_synthesis
    total = 0.0
    grad = np.zeros_like(params.array)
    details = []
    scale = 1.0 / len(pairs)
    for x_bar, v in pairs:
        x_bar = np.asarray(x_bar, dtype=float).ravel()
        v = np.asarray(v, dtype=float).ravel()
        x_hat, pre, states = forward(op, cfg, step, v)
        r = x_hat - x_bar
        total += 0.5 * float(r @ r)
        g_sample, masks = backward(params, op, cfg, step, v, pre, states,
                                   scale * r)
        grad += g_sample
        if return_details:
            details.append({"pre": pre, "states": states, "masks": masks})
    loss = total * scale
    if return_details:
        return loss, grad, details
    return loss, grad


def init_params(cfg: TrainConfig, signal_dim: Optional[int] = None,
                image_shape: Optional[tuple] = None,
                coef_dim: Optional[int] = None) -> DictParams:
    """Seeded Gaussian dictionary initialization.

    Dense when ``signal_dim``/``coef_dim`` are given, filter bank when
    ``image_shape`` is given. Kernel entries are scaled by 1/kernel_size
    so the initial spectral norm is of order one.
    """
    gen = stream(cfg.seed, "dict-init")
    if image_shape is not None:
        kernels = gen.normal(
            cfg.filter_count * cfg.kernel_size ** 2
        ).reshape(cfg.filter_count, cfg.kernel_size, cfg.kernel_size)
        return DictParams(cfg.mode, kernels / cfg.kernel_size, image_shape)
    if signal_dim is None or coef_dim is None:
        raise ValueError("need image_shape, or signal_dim and coef_dim")
    if cfg.mode == "analysis":
        m = gen.normal_matrix(coef_dim, signal_dim)
    else:
        m = gen.normal_matrix(signal_dim, coef_dim)
    return DictParams(cfg.mode, m / np.sqrt(coef_dim))


def make_pairs(patches, cfg: TrainConfig):
    """Clean/noisy training pairs with a seeded noise stream."""
    noise = stream(cfg.seed, "train-noise")
    pairs = []
    for patch in patches:
        clean = np.asarray(patch, dtype=float).ravel()
        pairs.append((clean, clean + cfg.epsilon * noise.normal(clean.size)))
    return pairs


@dataclass
class TrainResult:
    params: DictParams
    losses: np.ndarray


def train_dictionary(patches, cfg: TrainConfig,
                     init: Optional[DictParams] = None) -> TrainResult:
    """Plain fixed-step gradient descent on the denoising loss.

    ``patches`` is a sequence of clean patches (2-D arrays for filter
    banks, 1-D for dense dictionaries); noisy inputs are synthesized once
    with the seeded stream. Minibatches are taken in fixed order so runs
    are deterministic. The returned history holds one pre-update loss per
    epoch (exact for full-batch runs, streaming mean otherwise) plus the
    final full-batch loss. Raises ArithmeticError on a non-finite loss.
    """
    patches = [np.asarray(p, dtype=float) for p in patches]
    if not patches:
        raise ValueError("empty training set")
    if init is not None:
        params = DictParams(cfg.mode, init.array.copy(), init.image_shape)
    elif patches[0].ndim == 2:
        params = init_params(cfg, image_shape=patches[0].shape)
    else:
        raise ValueError("dense training needs an explicit init")
    pairs = make_pairs(patches, cfg)
    n = len(pairs)
    batch = max(1, min(cfg.batch, n))
    losses = []
    for epoch in range(cfg.epochs):
        # pre-update loss accumulated from the minibatch forwards, so a
        # full-batch run costs one pass per epoch
        epoch_loss = 0.0
        for start in range(0, n, batch):
            chunk = pairs[start:start + batch]
            chunk_loss, grad = denoise_loss_grad(params, chunk, cfg)
            epoch_loss += chunk_loss * len(chunk)
            params.array = params.array - cfg.step_size * grad
        losses.append(epoch_loss / n)
        if not np.isfinite(losses[-1]):
            raise ArithmeticError(
                f"non-finite loss {losses[-1]} at epoch {epoch}; "
                f"reduce step_size={cfg.step_size}"
            )
    losses.append(denoise_loss(params, pairs, cfg))
    if not np.isfinite(losses[-1]):
        raise ArithmeticError(f"non-finite final loss {losses[-1]}")
    return TrainResult(params=params, losses=np.array(losses))
