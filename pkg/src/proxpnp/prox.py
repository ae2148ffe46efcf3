"""Proximity operators, conjugate proxes, and Moreau envelopes.

A :class:`Regularizer` is a separable convex function with an evaluable
value and a closed-form prox. Conjugate proxes are always derived through
the Moreau decomposition ``v = prox_{gamma g}(v) + prox_{(gamma g)*}(v)``
so the identity holds bit-for-bit, and the analysis/synthesis denoiser
layers share one code path.

Scaling conventions: the regularization weight lambda is never stored on
the regularizer. Callers fold their effective weight into ``gamma`` (the
solvers use tau*lambda, the envelopes lambda/mu), which keeps the four
distinct re-scalings used by the outer schemes in one visible place.
"""

from __future__ import annotations

import numpy as np


class Regularizer:
    """Separable convex function with closed-form prox."""

    #: True when the function is a norm, so that sigma * (lambda g)^* is
    #: independent of sigma > 0 (the conjugate is a ball indicator).
    is_norm = False

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, gamma: float, v: np.ndarray) -> np.ndarray:
        """argmin_x gamma*g(x) + 0.5*||x - v||^2."""
        raise NotImplementedError


class L1Norm(Regularizer):
    """g(x) = ||x||_1; prox is componentwise soft-thresholding."""

    is_norm = True

    def value(self, x) -> float:
        return float(np.sum(np.abs(x)))

    def prox(self, gamma: float, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.sign(v) * np.maximum(np.abs(v) - gamma, 0.0)


class LinfBallIndicator(Regularizer):
    """g(x) = 0 if ||x||_inf <= radius else +inf; prox is the projection."""

    def __init__(self, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)

    def value(self, x) -> float:
        return 0.0 if np.max(np.abs(x), initial=0.0) <= self.radius else np.inf

    def prox(self, gamma: float, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return np.clip(v, -self.radius, self.radius)


#: Shared stateless instance; the l1 norm is the regularizer used by every
#: experiment in this package.
L1 = L1Norm()


def prox(g: Regularizer, gamma: float, v) -> np.ndarray:
    """prox_{gamma g}(v) = argmin_x gamma*g(x) + 0.5*||x - v||^2.

    gamma = 0 is allowed and gives the prox of the zero function (the
    identity for norms), which the training code uses for its smooth
    special case.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return g.prox(gamma, np.asarray(v, dtype=float))


def prox_conjugate(g: Regularizer, gamma: float, v) -> np.ndarray:
    """prox of (gamma g)^*, via Moreau: v - prox_{gamma g}(v).

    For g = ||.||_1 with the weight folded into gamma, this is the exact
    projection onto the l-infinity ball of radius gamma.
    """
    v = np.asarray(v, dtype=float)
    return v - prox(g, gamma, v)


def prox_conjugate_scaled(g: Regularizer, sigma: float, lam: float, w) -> np.ndarray:
    """prox of sigma * (lam g)^*.

    For norms the sigma scaling is vacuous (the conjugate is an indicator)
    and the plain Moreau complement is returned; otherwise the scaled
    Moreau identity prox_{sigma h*}(w) = w - sigma*prox_{h/sigma}(w/sigma)
    with h = lam*g is used.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    w = np.asarray(w, dtype=float)
    if g.is_norm:
        return prox_conjugate(g, lam, w)
    return w - sigma * prox(g, lam / sigma, w / sigma)


def moreau_envelope_value(g: Regularizer, lam: float, mu: float, x) -> float:
    """Moreau-Yosida envelope of lam*g with parameter mu, at x.

    min_u lam*g(u) + (mu/2)*||x - u||^2, evaluated at the minimizer
    u = prox_{(lam/mu) g}(x). For the l1 norm this is the Huber function.
    """
    if lam <= 0 or mu <= 0:
        raise ValueError("lam and mu must be positive")
    x = np.asarray(x, dtype=float)
    p = prox(g, lam / mu, x)
    diff = x - p
    return lam * g.value(p) + 0.5 * mu * float(diff @ diff)


def moreau_envelope_grad(g: Regularizer, lam: float, mu: float, x) -> np.ndarray:
    """Gradient of the envelope: mu * (x - prox_{(lam/mu) g}(x)).

    mu-Lipschitz everywhere, which is what makes the smoothed outer
    problem solvable by plain gradient descent.
    """
    if lam <= 0 or mu <= 0:
        raise ValueError("lam and mu must be positive")
    x = np.asarray(x, dtype=float)
    return mu * (x - prox(g, lam / mu, x))


def huber_value(lam: float, mu: float, x) -> float:
    """Closed-form Huber oracle for the l1 envelope (test reference).

    Componentwise: mu*t^2/2 when |t| <= lam/mu, else lam*|t| - lam^2/(2 mu).
    """
    x = np.asarray(x, dtype=float)
    cut = lam / mu
    a = np.abs(x)
    quad = 0.5 * mu * x * x
    lin = lam * a - lam * lam / (2.0 * mu)
    return float(np.sum(np.where(a <= cut, quad, lin)))


def huber_grad(lam: float, mu: float, x) -> np.ndarray:
    """Closed-form gradient of the componentwise Huber oracle."""
    x = np.asarray(x, dtype=float)
    cut = lam / mu
    return np.where(np.abs(x) <= cut, mu * x, lam * np.sign(x))
