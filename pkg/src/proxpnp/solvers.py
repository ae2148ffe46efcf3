"""Outer iterations: FB plug-and-play solvers, references, smoothed schemes.

The two plug-and-play solvers interleave a gradient step on the data term
with an unrolled denoiser whose inner state is warm-restarted across outer
iterations. The effective regularization weight handed to the denoiser is
``tau * lam``; this single rescaling (dual clip radius tau*lam for the
analysis denoiser, soft threshold zeta*tau*lam for the synthesis one) is
what makes the one-layer solvers coincide with the classical primal-dual
and forward-backward reference iterations implemented alongside.

Step-size guards raise :class:`ConfigurationError` before iterating:

* analysis PnP:    tau < 2/||A||^2
* synthesis PnP:   tau < 2/||A||^2, and for one layer tau*zeta < 2/||AD||^2
* Loris-Verhoeven: tau < 2/||A||^2 and sigma < 1/||Gamma||^2 (the tighter
  of the two dual bounds stated for this scheme)
* direct synthesis FB: gamma < 2/||AD||^2
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .denoisers import (
    AnalysisDenoiser,
    SynthesisDenoiser,
    WarmState,
    ad_apply,
    sd_apply,
)
from .linops import ComposedOperator, LinearOperator
from .prox import (
    L1,
    Regularizer,
    moreau_envelope_grad,
    moreau_envelope_value,
    prox,
    prox_conjugate_scaled,
)


class ConfigurationError(ValueError):
    """A solver configuration violates a convergence condition."""


# ---------------------------------------------------------------------------
# Traces


@dataclass
class TraceRecord:
    k: int
    dx_ref: Optional[float] = None
    dcoef_ref: Optional[float] = None
    objective: Optional[float] = None
    psnr: Optional[float] = None
    wall_s: float = 0.0
    step_norm: Optional[float] = None


class SolverTrace:
    """Per-outer-iteration record of a solver run.

    CSV schema (header mandatory): ``k,dx_ref,dcoef_ref,objective,psnr,
    wall_s`` with empty fields where a column does not apply. Wall time is
    always recorded in memory but can be omitted from the CSV so that
    fixed-seed runs serialize byte-identically.
    """

    def __init__(self):
        self.records: list[TraceRecord] = []

    def add(self, record: TraceRecord) -> None:
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("trace iteration indices must strictly increase")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        vals = [getattr(r, name) for r in self.records]
        return np.array([np.nan if v is None else v for v in vals], dtype=float)

    def to_csv(self, path, include_wall: bool = True,
               steps_as_dx: bool = False) -> None:
        def fmt(v) -> str:
            return "" if v is None else repr(float(v))

        with open(path, "w", newline="") as f:
            f.write("k,dx_ref,dcoef_ref,objective,psnr,wall_s\n")
            for r in self.records:
                dx = r.step_norm if steps_as_dx else r.dx_ref
                wall = fmt(r.wall_s) if include_wall else ""
                f.write(
                    f"{r.k},{fmt(dx)},{fmt(r.dcoef_ref)},{fmt(r.objective)},"
                    f"{fmt(r.psnr)},{wall}\n"
                )


def psnr(x, x_ref, peak: float = 1.0) -> float:
    """10*log10(peak^2 * n / ||x - x_ref||^2), capped at 99 dB when equal."""
    x = np.asarray(x, dtype=float).ravel()
    x_ref = np.asarray(x_ref, dtype=float).ravel()
    err = float(np.sum((x - x_ref) ** 2))
    if err == 0.0:
        return 99.0
    value = 10.0 * np.log10(peak * peak * x.size / err)
    return float(min(value, 99.0))


# ---------------------------------------------------------------------------
# Objectives and optimality measures


def objective_analysis(A: LinearOperator, y, gamma_op: LinearOperator,
                       lam: float, x, g: Regularizer = L1) -> float:
    """0.5*||A x - y||^2 + lam * g(Gamma x)."""
    r = A.apply(x) - np.asarray(y, dtype=float)
    return 0.5 * float(r @ r) + lam * g.value(gamma_op.apply(x))


def objective_synthesis(A: LinearOperator, dict_op: LinearOperator, y,
                        lam: float, z, g: Regularizer = L1) -> float:
    """0.5*||A D z - y||^2 + lam * g(z)."""
    r = A.apply(dict_op.apply(z)) - np.asarray(y, dtype=float)
    return 0.5 * float(r @ r) + lam * g.value(z)


def kkt_residual_lasso(z, A: LinearOperator, dict_op: LinearOperator, y,
                       lam: float) -> float:
    """Sup-norm violation of the l1 synthesis optimality conditions.

    With r = D^*A^*(A D z - y): off-support entries must satisfy
    |r_i| <= lam, on-support entries r_i = -lam*sign(z_i).
    """
    z = np.asarray(z, dtype=float)
    r = dict_op.apply_adjoint(A.apply_adjoint(A.apply(dict_op.apply(z)) - y))
    on = z != 0.0
    res = 0.0
    if np.any(~on):
        res = max(res, float(np.max(np.maximum(np.abs(r[~on]) - lam, 0.0))))
    if np.any(on):
        res = max(res, float(np.max(np.abs(r[on] + lam * np.sign(z[on])))))
    return res


# ---------------------------------------------------------------------------
# FB-PnP solvers


@dataclass
class SolverConfig:
    """Outer-loop configuration shared by the PnP solvers.

    ``layers`` overrides the denoiser's layer count when given. ``stop_tol``
    0 disables early stopping (fixed iteration count, as in the studies).
    """

    tau: float
    max_outer: int
    layers: Optional[int] = None
    warm_start: bool = True
    stop_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigurationError("tau must be positive")
        if self.max_outer < 0:
            raise ConfigurationError("max_outer must be >= 0")
        if self.record_every < 1:
            raise ConfigurationError("record_every must be >= 1")


@dataclass
class PnPResult:
    x: np.ndarray
    state: WarmState
    trace: SolverTrace


def _forward_bound(A: LinearOperator) -> float:
    return 2.0 / A.spectral_norm() ** 2


def _record(trace, k, t0, x, coef, x_ref, coef_ref, obj_fn, truth, peak,
            step_norm, record_every, last_k):
    if k % record_every != 0 and k != last_k:
        return
    trace.add(TraceRecord(
        k=k,
        dx_ref=None if x_ref is None else float(np.linalg.norm(x - x_ref)),
        dcoef_ref=None if coef_ref is None
        else float(np.linalg.norm(coef - coef_ref)),
        objective=None if obj_fn is None else obj_fn(x, coef),
        psnr=None if truth is None else psnr(x, truth, peak),
        wall_s=time.perf_counter() - t0,
        step_norm=step_norm,
    ))


def fb_pnp_analysis(A: LinearOperator, y, d: AnalysisDenoiser,
                    cfg: SolverConfig, x0=None, u0: Optional[WarmState] = None,
                    *, x_ref=None, coef_ref=None, truth=None, peak: float = 1.0,
                    inner_tol: float = 0.0, with_objective: bool = True,
                    callback: Optional[Callable] = None) -> PnPResult:
    """FB-PnP with the unrolled analysis denoiser and warm restart.

    Each outer iteration takes the gradient step
    ``v = x - tau*A^*(A x - y)``, runs the denoiser with effective weight
    ``tau*lam`` warm-started from the previous dual vector, and sets
    ``x = v - Gamma^* u``. With one layer this is exactly a primal-dual
    iteration; with many layers it approaches proximal gradient descent on
    the analysis objective. ``inner_tol`` > 0 lets the inner loop exit
    once its iterates stagnate, which turns the run into the capped
    high-accuracy reference scheme.
    """
    y = np.asarray(y, dtype=float)
    bound = _forward_bound(A)
    if not cfg.tau < bound:
        raise ConfigurationError(
            f"tau={cfg.tau:.6g} violates the forward step bound "
            f"2/||A||_S^2 = {bound:.6g}"
        )
    d_eff = d.with_lam(cfg.tau * d.lam)
    if cfg.layers is not None:
        d_eff = AnalysisDenoiser(d_eff.gamma_op, d_eff.lam, d_eff.sigma,
                                 cfg.layers, d_eff.g)
    x = np.zeros(A.in_dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    state = WarmState.zeros(d.coef_dim) if u0 is None else u0
    trace = SolverTrace()
    obj_fn = None
    if with_objective:
        obj_fn = lambda xx, cc: objective_analysis(A, y, d.gamma_op, d.lam, xx, d.g)
    t0 = time.perf_counter()
    for k in range(1, cfg.max_outer + 1):
        v = x - cfg.tau * A.apply_adjoint(A.apply(x) - y)
        if not cfg.warm_start:
            state = WarmState.zeros(d.coef_dim)
        x_next, state = ad_apply(d_eff, state, v, stop_tol=inner_tol)
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        if callback is not None:
            callback(k, x, state.vec)
        _record(trace, k, t0, x, state.vec, x_ref, coef_ref, obj_fn, truth,
                peak, step, cfg.record_every, cfg.max_outer)
        if cfg.stop_tol > 0.0 and step <= cfg.stop_tol:
            break
    return PnPResult(x=x, state=state, trace=trace)


def fb_pnp_synthesis(A: LinearOperator, y, d: SynthesisDenoiser,
                     cfg: SolverConfig, x0=None, z0: Optional[WarmState] = None,
                     *, x_ref=None, coef_ref=None, truth=None, peak: float = 1.0,
                     inner_tol: float = 0.0, with_objective: bool = True,
                     callback: Optional[Callable] = None) -> PnPResult:
    """FB-PnP with the unrolled synthesis denoiser and warm restart.

    Per outer iteration: gradient step, L code-space FB layers with
    effective soft threshold ``zeta*tau*lam`` warm-started from the
    previous code, then ``x = D z``. With one layer the code iterates are
    exactly ISTA with step ``tau*zeta`` on the full synthesis objective.
    """
    y = np.asarray(y, dtype=float)
    layers = d.layers if cfg.layers is None else cfg.layers
    if layers == 1:
        comp = ComposedOperator(A, d.dict_op)
        prod_bound = 2.0 / comp.spectral_norm() ** 2
        if not cfg.tau * d.zeta < prod_bound:
            raise ConfigurationError(
                f"tau*zeta={cfg.tau * d.zeta:.6g} violates the one-layer "
                f"product bound 2/||AD||_S^2 = {prod_bound:.6g}"
            )
    else:
        bound = _forward_bound(A)
        if not cfg.tau < bound:
            raise ConfigurationError(
                f"tau={cfg.tau:.6g} violates the forward step bound "
                f"2/||A||_S^2 = {bound:.6g}"
            )
    d_eff = d.with_lam(cfg.tau * d.lam)
    if cfg.layers is not None:
        d_eff = SynthesisDenoiser(d_eff.dict_op, d_eff.lam, d_eff.zeta,
                                  cfg.layers, d_eff.g)
    x = np.zeros(A.in_dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    state = WarmState.zeros(d.coef_dim) if z0 is None else z0
    trace = SolverTrace()
    obj_fn = None
    if with_objective:
        obj_fn = lambda xx, zz: objective_synthesis(A, d.dict_op, y, d.lam, zz, d.g)
    t0 = time.perf_counter()
    for k in range(1, cfg.max_outer + 1):
        v = x - cfg.tau * A.apply_adjoint(A.apply(x) - y)
        if not cfg.warm_start:
            state = WarmState.zeros(d.coef_dim)
        x_next, state = sd_apply(d_eff, state, v, stop_tol=inner_tol)
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        if callback is not None:
            callback(k, x, state.vec)
        _record(trace, k, t0, x, state.vec, x_ref, coef_ref, obj_fn, truth,
                peak, step, cfg.record_every, cfg.max_outer)
        if cfg.stop_tol > 0.0 and step <= cfg.stop_tol:
            break
    return PnPResult(x=x, state=state, trace=trace)


# ---------------------------------------------------------------------------
# Reference solvers


@dataclass
class LVResult:
    x: np.ndarray
    u_tilde: np.ndarray
    trace: SolverTrace


def loris_verhoeven(A: LinearOperator, y, gamma_op: LinearOperator,
                    g: Regularizer, lam: float, tau: float, sigma: float,
                    K: int, x0=None, u0=None, *, x_ref=None, coef_ref=None,
                    with_objective: bool = True,
                    callback: Optional[Callable] = None) -> LVResult:
    """Scaled primal-dual iterations for the analysis problem.

    The three-line scheme

        xt    = x - tau*A^*(A x - y) - tau*Gamma^* ut
        ut    = prox_{(sigma/tau)(lam g)^*}( ut + (sigma/tau)*Gamma xt )
        x     = x - tau*A^*(A x - y) - tau*Gamma^* ut

    serves as the independent reference: the analysis PnP solver with one
    layer reproduces its primal iterates with dual scaling u = tau*ut.
    """
    y = np.asarray(y, dtype=float)
    bound_tau = _forward_bound(A)
    if not tau < bound_tau:
        raise ConfigurationError(
            f"tau={tau:.6g} violates the forward step bound 2/||A||_S^2 = "
            f"{bound_tau:.6g}"
        )
    bound_sigma = 1.0 / gamma_op.spectral_norm() ** 2
    if not sigma < bound_sigma:
        raise ConfigurationError(
            f"sigma={sigma:.6g} violates the dual step bound 1/||Gamma||_S^2 "
            f"= {bound_sigma:.6g}"
        )
    x = np.zeros(A.in_dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    ut = (np.zeros(gamma_op.out_dim) if u0 is None
          else np.asarray(u0, dtype=float).copy())
    ratio = sigma / tau
    trace = SolverTrace()
    obj_fn = None
    if with_objective:
        obj_fn = lambda xx, uu: objective_analysis(A, y, gamma_op, lam, xx, g)
    t0 = time.perf_counter()
    for k in range(1, K + 1):
        grad_step = x - tau * A.apply_adjoint(A.apply(x) - y)
        xt = grad_step - tau * gamma_op.apply_adjoint(ut)
        ut = prox_conjugate_scaled(g, ratio, lam, ut + ratio * gamma_op.apply(xt))
        x_next = grad_step - tau * gamma_op.apply_adjoint(ut)
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        if callback is not None:
            callback(k, x, ut)
        _record(trace, k, t0, x, ut, x_ref, coef_ref, obj_fn, None, 1.0,
                step, 1, K)
    return LVResult(x=x, u_tilde=ut, trace=trace)


@dataclass
class SynthesisDirectResult:
    z: np.ndarray
    x: np.ndarray
    trace: SolverTrace


def fb_synthesis_direct(A: LinearOperator, dict_op: LinearOperator, y,
                        g: Regularizer, lam: float, gamma_step: float, K: int,
                        z0=None, *, coef_ref=None, with_objective: bool = True,
                        callback: Optional[Callable] = None,
                        stop_tol: float = 0.0) -> SynthesisDirectResult:
    """Classical ISTA on codes for the full synthesis objective.

    z <- prox_{gamma lam g}( z - gamma*D^*A^*(A D z - y) ); returns z and
    the synthesized signal x = D z.
    """
    y = np.asarray(y, dtype=float)
    comp = ComposedOperator(A, dict_op)
    bound = 2.0 / comp.spectral_norm() ** 2
    if not gamma_step < bound:
        raise ConfigurationError(
            f"gamma={gamma_step:.6g} violates the synthesis step bound "
            f"2/||AD||_S^2 = {bound:.6g}"
        )
    z = (np.zeros(dict_op.in_dim) if z0 is None
         else np.asarray(z0, dtype=float).copy())
    trace = SolverTrace()
    obj_fn = None
    if with_objective:
        obj_fn = lambda xx, zz: objective_synthesis(A, dict_op, y, lam, zz, g)
    t0 = time.perf_counter()
    for k in range(1, K + 1):
        grad = comp.apply_adjoint(comp.apply(z) - y)
        z_next = prox(g, gamma_step * lam, z - gamma_step * grad)
        step = float(np.linalg.norm(z_next - z))
        z = z_next
        if callback is not None:
            callback(k, dict_op.apply(z), z)
        _record(trace, k, t0, None, z, None, coef_ref, obj_fn, None, 1.0,
                step, 1, K)
        if stop_tol > 0.0 and step <= stop_tol:
            break
    return SynthesisDirectResult(z=z, x=dict_op.apply(z), trace=trace)


# ---------------------------------------------------------------------------
# Moreau-smoothed schemes


@dataclass
class SmoothedResult:
    x: np.ndarray
    u: np.ndarray
    trace: SolverTrace
    grad_norms: np.ndarray
    lyapunov: Optional[np.ndarray] = None


def gd_moreau(grad_f: Callable, g: Regularizer, lam: float, mu: float,
              tau: float, K: int, x0, *, beta_tilde: float, u0=None,
              f_value: Optional[Callable] = None) -> SmoothedResult:
    """Exact gradient descent on f + (Moreau envelope of lam*g).

    Alternates ``x <- x - tau*(grad_f(x) + mu*(x - u))`` with the exact
    prox update ``u <- prox_{(lam/mu) g}(x)``; converges to the smoothed
    minimizer for tau < 2/(beta_tilde + mu). ``u0`` defaults to the exact
    prox of x0 so that every step is a true gradient step on the smoothed
    objective.
    """
    bound = 2.0 / (beta_tilde + mu)
    if not tau < bound:
        raise ConfigurationError(
            f"tau={tau:.6g} violates the smoothed gradient bound "
            f"2/(beta+mu) = {bound:.6g}"
        )
    x = np.asarray(x0, dtype=float).copy()
    u = prox(g, lam / mu, x) if u0 is None else np.asarray(u0, dtype=float).copy()
    trace = SolverTrace()
    grad_norms = []
    t0 = time.perf_counter()
    for k in range(1, K + 1):
        x_next = x - tau * (np.asarray(grad_f(x)) + mu * (x - u))
        u = prox(g, lam / mu, x_next)
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        gh = np.asarray(grad_f(x)) + moreau_envelope_grad(g, lam, mu, x)
        grad_norms.append(float(np.linalg.norm(gh)))
        obj = None
        if f_value is not None:
            obj = float(f_value(x)) + moreau_envelope_value(g, lam, mu, x)
        trace.add(TraceRecord(k=k, objective=obj,
                              wall_s=time.perf_counter() - t0, step_norm=step))
    return SmoothedResult(x=x, u=u, trace=trace,
                          grad_norms=np.array(grad_norms))


def bilevel_phi_root(alpha_l: float, beta_tilde: float, mu: float) -> float:
    """Positive root of 8a^2(1-2a^2) phi^2 + 2(b+mu)(1-2a^2) phi - mu^2.

    Computed with the cancellation-free quadratic formula
    phi = 2c / (b + sqrt(b^2 + 4ac)); as alpha_l -> 0 the quadratic term
    vanishes and the root tends to mu^2 / (2(beta+mu)).
    """
    if not 0.0 < alpha_l < 1.0 / np.sqrt(2.0):
        raise ValueError("alpha_l must lie in (0, 1/sqrt(2))")
    if mu <= 0:
        raise ValueError("mu must be positive")
    one_minus = 1.0 - 2.0 * alpha_l ** 2
    a = 8.0 * alpha_l ** 2 * one_minus
    b = 2.0 * (beta_tilde + mu) * one_minus
    c = mu * mu
    return 2.0 * c / (b + np.sqrt(b * b + 4.0 * a * c))


def bilevel_step_bound(alpha_l: float, beta_tilde: float, mu: float) -> float:
    """Largest admissible outer step for the inexact smoothed scheme.

    Returns 2*phi*(1 - 2 alpha_l^2)/mu^2 with phi the positive polynomial
    root; tends to 1/(beta + mu) as alpha_l -> 0.
    """
    phi = bilevel_phi_root(alpha_l, beta_tilde, mu)
    return 2.0 * phi * (1.0 - 2.0 * alpha_l ** 2) / (mu * mu)


@dataclass
class BilevelConfig:
    """Configuration of the inexact warm-restarted smoothed scheme.

    When ``alpha_l`` (the inner contraction factor) is known, the step must
    satisfy tau <= bilevel_step_bound(alpha_l, beta_tilde, mu) and the
    Lyapunov weight is the polynomial root; otherwise the fallback bound
    tau < min(2/mu^2, 1/(beta+mu)) applies with weight 1.
    """

    mu: float
    lam: float
    tau: float
    inner_l: int
    max_outer: int
    beta_tilde: float
    alpha_l: Optional[float] = None

    def __post_init__(self):
        if min(self.mu, self.lam, self.tau) <= 0:
            raise ConfigurationError("mu, lam, tau must be positive")
        if self.alpha_l is not None:
            if not 0.0 < self.alpha_l < 1.0 / np.sqrt(2.0):
                raise ConfigurationError("alpha_l must lie in (0, 1/sqrt(2))")
            bound = bilevel_step_bound(self.alpha_l, self.beta_tilde, self.mu)
            if self.tau > bound * (1.0 + 1e-12):
                raise ConfigurationError(
                    f"tau={self.tau:.6g} exceeds the certified step bound "
                    f"{bound:.6g} for alpha_l={self.alpha_l:.6g}"
                )
        else:
            bound = min(2.0 / self.mu ** 2,
                        1.0 / (self.beta_tilde + self.mu))
            if not self.tau < bound:
                raise ConfigurationError(
                    f"tau={self.tau:.6g} violates the fallback bound "
                    f"min(2/mu^2, 1/(beta+mu)) = {bound:.6g}"
                )

    @property
    def lyapunov_weight(self) -> float:
        if self.alpha_l is None:
            return 1.0
        return bilevel_phi_root(self.alpha_l, self.beta_tilde, self.mu)


def bilevel_inexact(grad_f: Callable, g: Regularizer, cfg: BilevelConfig,
                    inner: Callable, x0, u0, *,
                    f_value: Optional[Callable] = None) -> SmoothedResult:
    """Inexact smoothed scheme with a warm-restarted prox approximator.

    ``inner(x_target, u_start) -> u`` approximates prox_{(lam/mu) g} at
    ``x_target`` starting its sub-iterations at ``u_start``. When the inner
    map contracts toward the exact prox with factor alpha_l < 1/sqrt(2)
    and the step obeys the certified bound, the Lyapunov sequence
    h(x_k) + phi*||u_k - p(x_k)||^2 is non-increasing and ||grad h|| -> 0.

    Lyapunov values are recorded when ``f_value`` is provided (h needs the
    value of the smooth term, not just its gradient).
    """
    x = np.asarray(x0, dtype=float).copy()
    u = np.asarray(u0, dtype=float).copy()
    phi = cfg.lyapunov_weight
    trace = SolverTrace()
    grad_norms = []
    lyap = [] if f_value is not None else None

    def h_and_gap(x_cur, u_cur):
        p = prox(g, cfg.lam / cfg.mu, x_cur)
        gap = float(np.linalg.norm(u_cur - p))
        h = float(f_value(x_cur)) + moreau_envelope_value(g, cfg.lam, cfg.mu, x_cur)
        return h + phi * gap * gap

    if lyap is not None:
        lyap.append(h_and_gap(x, u))
    t0 = time.perf_counter()
    for k in range(1, cfg.max_outer + 1):
        x_next = x - cfg.tau * (np.asarray(grad_f(x)) + cfg.mu * (x - u))
        u = np.asarray(inner(x_next, u), dtype=float)
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        gh = np.asarray(grad_f(x)) + moreau_envelope_grad(g, cfg.lam, cfg.mu, x)
        grad_norms.append(float(np.linalg.norm(gh)))
        obj = None
        if lyap is not None:
            obj = h_and_gap(x, u)
            lyap.append(obj)
        trace.add(TraceRecord(k=k, objective=obj,
                              wall_s=time.perf_counter() - t0, step_norm=step))
    return SmoothedResult(
        x=x, u=u, trace=trace, grad_norms=np.array(grad_norms),
        lyapunov=None if lyap is None else np.array(lyap),
    )


def fb_prox_inner(g: Regularizer, lam: float, mu: float, steps: int,
                  eta: Optional[float] = None, tol: float = 0.0) -> Callable:
    """Inner prox approximator: FB sub-iterations on the prox subproblem.

    Runs ``steps`` iterations of ``u <- prox_{eta lam g}(u - eta*mu*(u-x))``
    for the 1-strongly-convex subproblem min_u lam*g(u)+(mu/2)||u-x||^2,
    warm-started at the given u. The map contracts toward the exact prox
    with factor |1 - eta*mu| per step; eta defaults to 1/mu, which lands on
    the exact prox in a single step. A positive ``tol`` stops early on
    stagnation, emulating an exact inner solve.
    """
    if eta is None:
        eta = 1.0 / mu
    if not 0.0 < eta < 2.0 / mu:
        raise ConfigurationError("inner step eta must lie in (0, 2/mu)")

    def inner(x_target, u_start):
        u = np.asarray(u_start, dtype=float).copy()
        x_target = np.asarray(x_target, dtype=float)
        for _ in range(steps):
            u_next = prox(g, eta * lam, u - eta * mu * (u - x_target))
            if tol > 0.0 and np.max(np.abs(u_next - u), initial=0.0) <= tol:
                return u_next
            u = u_next
        return u

    return inner


def estimate_alpha(inner: Callable, g: Regularizer, lam: float, mu: float,
                   dim: int, samples: int, seed: int) -> float:
    """Empirical upper bound on the inner map's contraction factor.

    Over seeded Gaussian pairs (x, u) it measures
    ||inner(x, u) - p(x)|| / ||u - p(x)|| against the exact prox oracle
    p(x) = prox_{(lam/mu) g}(x) and returns the worst ratio; pairs whose
    denominator is below 1e-12 are skipped.
    """
    from .rng import stream

    gen = stream(seed, "alpha-estimate")
    worst = None
    for _ in range(samples):
        x = gen.normal(dim)
        u = gen.normal(dim)
        p = prox(g, lam / mu, x)
        denom = float(np.linalg.norm(u - p))
        if denom < 1e-12:
            continue
        ratio = float(np.linalg.norm(np.asarray(inner(x, u)) - p)) / denom
        worst = ratio if worst is None else max(worst, ratio)
    if worst is None:
        raise ValueError("all sampled pairs were degenerate")
    return worst
