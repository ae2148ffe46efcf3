"""Linear operators with exact adjoints and power-iteration spectral norms.

Every operator maps flat float64 vectors (row-major image flattening) and
exposes the pair ``apply`` / ``apply_adjoint``. Step-size rules throughout
the solvers consume ``spectral_norm()``, which runs power iteration on
``op* o op`` (or ``op o op*``, whichever acts on the smaller space) from a
seeded start and caches the result on the operator.

Two-dimensional convolutions use circular (periodic) boundaries and direct
summation over kernel taps; no FFT, no sparse formats.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .rng import stream


class DimensionMismatchError(ValueError):
    """Vector length does not match the operator's expected dimension."""


def _check_len(v, expected: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).ravel()
    if v.size != expected:
        raise DimensionMismatchError(
            f"{what}: expected length {expected}, got {v.size}"
        )
    return v


class LinearOperator:
    """Base class: a forward/adjoint pair between flat real vectors."""

    in_dim: int
    out_dim: int

    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self._spectral_norm: float | None = None

    def _apply(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _apply_adjoint(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply(self, v) -> np.ndarray:
        return self._apply(_check_len(v, self.in_dim, "apply"))

    def apply_adjoint(self, u) -> np.ndarray:
        return self._apply_adjoint(_check_len(u, self.out_dim, "apply_adjoint"))

    def spectral_norm(self, tol: float = 1e-8, max_iter: int = 1000,
                      seed: int = 0) -> float:
        """Largest singular value; computed once and cached.

        Operators are meant to be effectively immutable: fill this cache
        before sharing an operator across threads.
        """
        if self._spectral_norm is None:
            est = power_iteration(self, tol=tol, max_iter=max_iter, seed=seed)
            self._spectral_norm = est.value
        return self._spectral_norm

    def set_spectral_norm(self, value: float) -> None:
        self._spectral_norm = float(value)


class DenseOperator(LinearOperator):
    """Dense matrix operator (out_dim x in_dim, row-major)."""

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("dense operator needs a 2-D matrix")
        super().__init__(in_dim=m.shape[1], out_dim=m.shape[0])
        self.matrix = m

    def _apply(self, v):
        return self.matrix @ v

    def _apply_adjoint(self, u):
        return self.matrix.T @ u


def identity(n: int) -> DenseOperator:
    return DenseOperator(np.eye(n))


def _kernel_taps(kernel: np.ndarray):
    """Nonzero taps of a 2-D kernel as (row shift, col shift, weight).

    Shifts are relative to the kernel center ((k-1)//2 per axis), so a
    [[1]] kernel is the identity and odd kernels are centered.
    """
    kernel = np.asarray(kernel, dtype=float)
    if kernel.ndim != 2:
        raise ValueError("kernel must be 2-D")
    ch = (kernel.shape[0] - 1) // 2
    cw = (kernel.shape[1] - 1) // 2
    taps = []
    for a in range(kernel.shape[0]):
        for b in range(kernel.shape[1]):
            w = kernel[a, b]
            if w != 0.0:
                taps.append((a - ch, b - cw, w))
    return taps


def _conv_taps(img: np.ndarray, taps) -> np.ndarray:
    """Circular convolution: out[i,j] = sum_t w_t * img[i - dy_t, j - dx_t]."""
    out = np.zeros_like(img)
    for dy, dx, w in taps:
        out += w * np.roll(img, (dy, dx), axis=(0, 1))
    return out


def _corr_taps(img: np.ndarray, taps) -> np.ndarray:
    """Circular cross-correlation (adjoint of `_conv_taps` with same taps)."""
    out = np.zeros_like(img)
    for dy, dx, w in taps:
        out += w * np.roll(img, (-dy, -dx), axis=(0, 1))
    return out


class CircularConv2D(LinearOperator):
    """Circular 2-D convolution with a small kernel on a fixed image shape."""

    def __init__(self, kernel, image_shape):
        h, w = int(image_shape[0]), int(image_shape[1])
        super().__init__(in_dim=h * w, out_dim=h * w)
        self.kernel = np.asarray(kernel, dtype=float)
        self.image_shape = (h, w)
        self._taps = _kernel_taps(self.kernel)

    def _apply(self, v):
        img = v.reshape(self.image_shape)
        return _conv_taps(img, self._taps).ravel()

    def _apply_adjoint(self, u):
        img = u.reshape(self.image_shape)
        return _corr_taps(img, self._taps).ravel()


class FilterBank2D(LinearOperator):
    """Bank of F small 2-D filters mapping image <-> F coefficient planes.

    direction="analysis": apply correlates the image with each filter and
    stacks F planes (in: H*W, out: F*H*W); the adjoint sums per-plane
    convolutions back to an image.
    direction="synthesis": the transposed map, apply takes F planes to an
    image (in: F*H*W, out: H*W). Both directions share the same kernels,
    so a synthesis bank is exactly the adjoint of the analysis bank.
    """

    def __init__(self, kernels, image_shape, direction: str = "analysis"):
        kernels = np.asarray(kernels, dtype=float)
        if kernels.ndim != 3:
            raise ValueError("kernels must have shape (F, k, k)")
        if direction not in ("analysis", "synthesis"):
            raise ValueError(f"unknown direction: {direction!r}")
        h, w = int(image_shape[0]), int(image_shape[1])
        n, s = h * w, kernels.shape[0] * h * w
        if direction == "analysis":
            super().__init__(in_dim=n, out_dim=s)
        else:
            super().__init__(in_dim=s, out_dim=n)
        self.kernels = kernels
        self.image_shape = (h, w)
        self.direction = direction
        self.filter_count = kernels.shape[0]
        self._taps = [_kernel_taps(k) for k in kernels]

    def _image_to_planes(self, v):
        img = v.reshape(self.image_shape)
        return np.stack([_corr_taps(img, t) for t in self._taps]).ravel()

    def _planes_to_image(self, u):
        planes = u.reshape((self.filter_count,) + self.image_shape)
        out = np.zeros(self.image_shape)
        for plane, taps in zip(planes, self._taps):
            out += _conv_taps(plane, taps)
        return out.ravel()

    def _apply(self, v):
        if self.direction == "analysis":
            return self._image_to_planes(v)
        return self._planes_to_image(v)

    def _apply_adjoint(self, u):
        if self.direction == "analysis":
            return self._planes_to_image(u)
        return self._image_to_planes(u)


class AdjointOperator(LinearOperator):
    """Adjoint view: apply/apply_adjoint of the wrapped operator, swapped."""

    def __init__(self, op: LinearOperator):
        super().__init__(in_dim=op.out_dim, out_dim=op.in_dim)
        self.op = op

    def _apply(self, v):
        return self.op.apply_adjoint(v)

    def _apply_adjoint(self, u):
        return self.op.apply(u)


class ComposedOperator(LinearOperator):
    """Composition outer o inner; adjoint applies the adjoints reversed."""

    def __init__(self, outer: LinearOperator, inner: LinearOperator):
        if inner.out_dim != outer.in_dim:
            raise DimensionMismatchError(
                f"composition: inner out_dim {inner.out_dim} != outer in_dim "
                f"{outer.in_dim}"
            )
        super().__init__(in_dim=inner.in_dim, out_dim=outer.out_dim)
        self.outer = outer
        self.inner = inner

    def _apply(self, v):
        return self.outer.apply(self.inner.apply(v))

    def _apply_adjoint(self, u):
        return self.inner.apply_adjoint(self.outer.apply_adjoint(u))


class SpectralEstimate(NamedTuple):
    value: float
    converged: bool
    iterations: int


def power_iteration(op: LinearOperator, tol: float = 1e-8,
                    max_iter: int = 1000, seed: int = 0) -> SpectralEstimate:
    """Spectral norm of ``op`` by power iteration on the Gram operator.

    Iterates on op*op or op op*, whichever lives in the smaller space, from
    a seeded Gaussian start; stops when successive square-rooted Rayleigh
    quotients agree to relative ``tol``. When ``max_iter`` is exhausted the
    current estimate is returned with ``converged=False``.
    """
    if op.in_dim <= op.out_dim:
        dim = op.in_dim
        gram = lambda b: op.apply_adjoint(op.apply(b))
    else:
        dim = op.out_dim
        gram = lambda b: op.apply(op.apply_adjoint(b))

    b = stream(seed, "power-iteration").normal(dim)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return SpectralEstimate(0.0, True, 0)
    b /= nb
    est = 0.0
    for it in range(1, max_iter + 1):
        gb = gram(b)
        rayleigh = float(b @ gb)
        new_est = np.sqrt(max(rayleigh, 0.0))
        ngb = np.linalg.norm(gb)
        if ngb == 0.0:
            return SpectralEstimate(0.0, True, it)
        if it > 1 and abs(new_est - est) <= tol * max(new_est, 1e-300):
            return SpectralEstimate(new_est, True, it)
        est = new_est
        b = gb / ngb
    return SpectralEstimate(est, False, max_iter)


def spectral_norm(op: LinearOperator, tol: float = 1e-8, max_iter: int = 1000,
                  seed: int = 0) -> SpectralEstimate:
    """Power-iteration estimate of ||op||_S; fills the operator's cache."""
    est = power_iteration(op, tol=tol, max_iter=max_iter, seed=seed)
    op.set_spectral_norm(est.value)
    return est


def dot_test(op: LinearOperator, n_pairs: int = 100, seed: int = 0) -> float:
    """Max normalized adjoint-consistency residual over random pairs.

    Returns max |<Av, u> - <v, A*u>| / (1 + ||v|| ||u||); exact adjoints
    keep this at the level of float64 rounding.
    """
    gen = stream(seed, "dot-test")
    worst = 0.0
    for _ in range(n_pairs):
        v = gen.normal(op.in_dim)
        u = gen.normal(op.out_dim)
        lhs = float(op.apply(v) @ u)
        rhs = float(v @ op.apply_adjoint(u))
        worst = max(worst, abs(lhs - rhs) / (1.0 + np.linalg.norm(v) * np.linalg.norm(u)))
    return worst


def save_dense_csv(path, matrix) -> None:
    """Write a dense matrix as CSV: header line "rows,cols", then rows."""
    m = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as f:
        f.write(f"{m.shape[0]},{m.shape[1]}\n")
        for row in m:
            f.write(",".join(repr(float(x)) for x in row) + "\n")


def load_dense_csv(path) -> np.ndarray:
    """Read a dense matrix from the "rows,cols"-headed CSV format."""
    with open(path) as f:
        header = f.readline().strip()
        try:
            rows, cols = (int(t) for t in header.split(","))
        except ValueError as exc:
            raise ValueError(f"bad dense CSV header {header!r}") from exc
        data = []
        for line in f:
            line = line.strip()
            if line:
                data.extend(float(t) for t in line.split(","))
    m = np.array(data, dtype=float)
    if m.size != rows * cols:
        raise ValueError(
            f"dense CSV: header promises {rows}x{cols}={rows*cols} values, "
            f"found {m.size}"
        )
    return m.reshape(rows, cols)


def save_kernels_csv(path, kernels) -> None:
    """Write filter-bank kernels as CSV: header "filters,ksize", then F*k rows."""
    k = np.asarray(kernels, dtype=float)
    if k.ndim == 2:
        k = k[None]
    with open(path, "w", newline="") as f:
        f.write(f"{k.shape[0]},{k.shape[1]}\n")
        for filt in k:
            for row in filt:
                f.write(",".join(repr(float(x)) for x in row) + "\n")


def load_kernels_csv(path) -> np.ndarray:
    """Read filter-bank kernels (F, k, k) from the kernel-list CSV format."""
    with open(path) as f:
        header = f.readline().strip()
        try:
            count, size = (int(t) for t in header.split(","))
        except ValueError as exc:
            raise ValueError(f"bad kernel CSV header {header!r}") from exc
        data = []
        for line in f:
            line = line.strip()
            if line:
                data.append([float(t) for t in line.split(",")])
    arr = np.array(data, dtype=float)
    if arr.shape != (count * size, size):
        raise ValueError(
            f"kernel CSV: header promises {count} kernels of {size}x{size}, "
            f"found shape {arr.shape}"
        )
    return arr.reshape(count, size, size)


def load_kernel_csv(path) -> np.ndarray:
    """Read a single 2-D kernel from a plain CSV grid (no header)."""
    with open(path) as f:
        rows = []
        for line in f:
            line = line.strip()
            if line:
                rows.append([float(t) for t in line.split(",")])
    if not rows:
        raise ValueError("empty kernel CSV")
    return np.array(rows, dtype=float)
