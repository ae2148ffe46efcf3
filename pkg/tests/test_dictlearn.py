import numpy as np
import pytest

from proxpnp.dictlearn import (
    DictParams,
    TrainConfig,
    denoise_loss,
    denoise_loss_grad,
    init_params,
    make_pairs,
    train_dictionary,
)
from proxpnp.rng import stream


def frozen_step(params, cfg):
    op = params.build()
    return cfg.step_factor / op.spectral_norm() ** 2


def fd_gradcheck(params, pairs, cfg, n_coords=10, h=1e-6, seed=3):
    """Central finite differences on random coordinates, frozen step size."""
    step = frozen_step(params, cfg)
    _, grad = denoise_loss_grad(params, pairs, cfg, step=step)
    flat = params.array.ravel()
    gen = stream(seed, "coords")
    idx = (gen.uniform(n_coords) * flat.size).astype(int)
    worst = 0.0
    for i in idx:
        orig = flat[i]
        flat[i] = orig + h
        lp = denoise_loss(params, pairs, cfg, step=step)
        flat[i] = orig - h
        lm = denoise_loss(params, pairs, cfg, step=step)
        flat[i] = orig
        fd = (lp - lm) / (2 * h)
        an = grad.ravel()[i]
        worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-12))
    return worst


def dense_setup(mode, layers, lam=0.08, seed=5, n=12, s=18, batch=4):
    cfg = TrainConfig(mode=mode, layers=layers, lam=lam, seed=seed)
    params = init_params(cfg, signal_dim=n, coef_dim=s)
    gen = stream(11, "data")
    pairs = make_pairs([gen.uniform(n) for _ in range(batch)], cfg)
    return cfg, params, pairs


def bank_setup(mode, layers, lam=0.05, seed=6, shape=(8, 8), batch=3):
    cfg = TrainConfig(mode=mode, layers=layers, lam=lam, seed=seed,
                      filter_count=3, kernel_size=3)
    params = init_params(cfg, image_shape=shape)
    gen = stream(12, "data")
    pairs = make_pairs(
        [gen.uniform(shape[0] * shape[1]).reshape(shape) for _ in range(batch)],
        cfg)
    return cfg, params, pairs


# ---------------------------------------------------------------------------
# gradients


@pytest.mark.parametrize("mode", ["analysis", "synthesis"])
@pytest.mark.parametrize("layers", [1, 3])
def test_gradcheck_dense(mode, layers):
    cfg, params, pairs = dense_setup(mode, layers)
    assert fd_gradcheck(params, pairs, cfg) <= 1e-4


@pytest.mark.parametrize("mode", ["analysis", "synthesis"])
@pytest.mark.parametrize("layers", [1, 3])
def test_gradcheck_filter_bank(mode, layers):
    cfg, params, pairs = bank_setup(mode, layers)
    assert fd_gradcheck(params, pairs, cfg) <= 1e-4


def test_zero_batch_zero_gradient():
    cfg = TrainConfig(mode="synthesis", layers=2, lam=0.1, seed=1)
    params = init_params(cfg, signal_dim=6, coef_dim=9)
    pairs = [(np.zeros(6), np.zeros(6))]
    loss, grad = denoise_loss_grad(params, pairs, cfg)
    assert loss == 0.0
    assert np.array_equal(grad, np.zeros_like(params.array))


def test_smooth_special_case_matches_quadratic_gradient():
    # lam = 0 and one layer make the synthesis loss a smooth quadratic in D;
    # the backprop must match the closed-form gradient of that quadratic
    cfg = TrainConfig(mode="synthesis", layers=1, lam=0.0, seed=7)
    params = init_params(cfg, signal_dim=10, coef_dim=10)
    gen = stream(13, "data")
    pairs = make_pairs([gen.uniform(10) for _ in range(3)], cfg)
    step = frozen_step(params, cfg)
    _, grad = denoise_loss_grad(params, pairs, cfg, step=step)
    D = params.array
    want = np.zeros_like(D)
    for x_bar, v in pairs:
        z1 = step * (D.T @ v)
        r = (D @ z1 - x_bar) / len(pairs)
        want += np.outer(r, z1) + step * np.outer(v, D.T @ r)
    assert np.max(np.abs(grad - want)) <= 1e-10


def test_saturated_synthesis_loss():
    # a huge weight kills every code, so the output is 0 and the loss is
    # the mean energy of the clean signals
    cfg = TrainConfig(mode="synthesis", layers=3, lam=1e9, seed=2)
    params = init_params(cfg, signal_dim=7, coef_dim=11)
    gen = stream(14, "data")
    clean = [gen.uniform(7) for _ in range(5)]
    pairs = [(c, c.copy()) for c in clean]
    loss = denoise_loss(params, pairs, cfg)
    want = np.mean([0.5 * float(c @ c) for c in clean])
    assert loss == pytest.approx(want, rel=1e-15)


def test_identity_limit_loss_vanishes_with_lam():
    # orthogonal dictionary, clean inputs: the denoiser is the prox of a
    # tiny l1 weight, so the loss is O(lam^2)
    q, _ = np.linalg.qr(stream(15, "orth").normal_matrix(9, 9))
    gen = stream(16, "data")
    clean = [gen.uniform(9) for _ in range(4)]
    pairs = [(c, c.copy()) for c in clean]
    losses = []
    for lam in (1e-3, 1e-4):
        cfg = TrainConfig(mode="synthesis", layers=1, lam=lam, seed=3)
        params = DictParams("synthesis", q.copy())
        losses.append(denoise_loss(params, pairs, cfg, step=1.0))
    # quadratic decay in lam (factor 100 per decade)
    assert losses[0] <= 9.0 * 9 * 1e-6
    assert losses[1] <= losses[0] / 50.0


def test_duplicate_forward_oracle():
    # straight-line reimplementation of the synthesis forward pass
    cfg, params, pairs = dense_setup("synthesis", 3, lam=0.1, seed=9)
    step = frozen_step(params, cfg)
    loss = denoise_loss(params, pairs, cfg, step=step)
    D = params.array
    total = 0.0
    for x_bar, v in pairs:
        z = np.zeros(D.shape[1])
        for _ in range(cfg.layers):
            w = z - step * (D.T @ (D @ z - v))
            z = np.sign(w) * np.maximum(np.abs(w) - step * cfg.lam, 0.0)
        r = D @ z - x_bar
        total += 0.5 * float(r @ r)
    assert loss == total / len(pairs)

    # analysis twin, with the clip activation
    cfg_a, params_a, pairs_a = dense_setup("analysis", 2, lam=0.1, seed=10)
    step_a = frozen_step(params_a, cfg_a)
    loss_a = denoise_loss(params_a, pairs_a, cfg_a, step=step_a)
    G = params_a.array
    total_a = 0.0
    for x_bar, v in pairs_a:
        u = np.zeros(G.shape[0])
        for _ in range(cfg_a.layers):
            w = u - step_a * (G @ (G.T @ u - v))
            u = w - np.sign(w) * np.maximum(np.abs(w) - cfg_a.lam, 0.0)
        r = (v - G.T @ u) - x_bar
        total_a += 0.5 * float(r @ r)
    assert loss_a == total_a / len(pairs_a)


def test_backward_masks_match_forward_activity():
    for mode in ("analysis", "synthesis"):
        cfg, params, pairs = dense_setup(mode, 3, lam=0.12, seed=8)
        step = frozen_step(params, cfg)
        _, _, details = denoise_loss_grad(params, pairs, cfg, step=step,
                                          return_details=True)
        for det in details:
            for ell, mask in enumerate(det["masks"]):
                state_next = det["states"][ell + 1]
                if mode == "synthesis":
                    active = state_next != 0.0
                else:
                    active = np.abs(state_next) < cfg.lam
                assert np.array_equal(mask, active)


def test_forward_determinism():
    cfg, params, pairs = bank_setup("analysis", 2)
    l1 = denoise_loss(params, pairs, cfg)
    l2 = denoise_loss(params, pairs, cfg)
    assert l1 == l2


# ---------------------------------------------------------------------------
# training loop


def test_step_zero_leaves_dictionary_unchanged():
    cfg = TrainConfig(mode="synthesis", layers=1, lam=0.05, epochs=1,
                      step_size=0.0, seed=4, filter_count=2, kernel_size=3)
    gen = stream(17, "data")
    patches = [gen.uniform(36).reshape(6, 6) for _ in range(3)]
    init = init_params(cfg, image_shape=(6, 6))
    before = init.array.copy()
    result = train_dictionary(patches, cfg, init=init)
    assert np.array_equal(result.params.array, before)
    assert np.array_equal(init.array, before)  # input untouched


def make_blocky_patch(gen, size=8):
    base = gen.uniform(1)[0]
    patch = np.full((size, size), base)
    r, c = int(gen.uniform(1)[0] * (size - 2)), int(gen.uniform(1)[0] * (size - 2))
    patch[r:r + 2, c:c + 2] += 0.4
    return np.clip(patch, 0.0, 1.0)


def test_toy_training_decreases_loss():
    cfg = TrainConfig(mode="synthesis", layers=1, lam=0.02, epochs=60,
                      step_size=3e-3, seed=5, filter_count=4, kernel_size=3,
                      epsilon=0.05, batch=12)
    gen = stream(18, "data")
    patches = [make_blocky_patch(gen) for _ in range(12)]
    result = train_dictionary(patches, cfg)
    assert result.losses[-1] < result.losses[0]
    assert np.all(np.isfinite(result.losses))


def test_trained_beats_random_on_heldout():
    cfg = TrainConfig(mode="synthesis", layers=1, lam=0.02, epochs=60,
                      step_size=3e-3, seed=5, filter_count=4, kernel_size=3,
                      epsilon=0.05, batch=12)
    gen = stream(19, "data")
    train_patches = [make_blocky_patch(gen) for _ in range(12)]
    held_out = [make_blocky_patch(gen) for _ in range(8)]
    result = train_dictionary(train_patches, cfg)
    random_params = init_params(cfg, image_shape=(8, 8))
    heldout_pairs = make_pairs(held_out, cfg)
    loss_trained = denoise_loss(result.params, heldout_pairs, cfg)
    loss_random = denoise_loss(random_params, heldout_pairs, cfg)
    assert loss_trained < loss_random


def test_nonfinite_loss_aborts():
    # corrupt data is the realistic way to blow up the loss: the rescaled
    # inner steps make the forward pass robust to huge dictionary steps
    cfg = TrainConfig(mode="synthesis", layers=1, lam=0.05, epochs=5,
                      step_size=3e-3, seed=6, filter_count=2, kernel_size=3)
    gen = stream(20, "data")
    patches = [gen.uniform(36).reshape(6, 6) for _ in range(2)]
    patches[1][0, 0] = np.inf
    with np.errstate(invalid="ignore", over="ignore"):
        with pytest.raises(ArithmeticError, match="non-finite"):
            train_dictionary(patches, cfg)


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(mode="wavelet")
    with pytest.raises(ValueError):
        TrainConfig(layers=0)
