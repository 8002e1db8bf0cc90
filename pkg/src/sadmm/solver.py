"""Stochastic linearized ADMM iteration, runner and parameter validator.

One iteration performs, in order: the splitting-variable prox step, a
stochastic gradient estimate at the current point, the linearized primal
step, and the relaxed dual ascent step:

    z_{t+1} = prox_F( A x_t + u_t / beta, beta )
    x_{t+1} = x_t - (1/tau) ( g_t + A^T ( u_t + beta (A x_t - z_{t+1}) ) )
    u_{t+1} = u_t + sigma beta ( A x_{t+1} - z_{t+1} )

``validate_params`` evaluates the descent coefficient eta_tilde whose
positivity certifies that the stability function decreases in
expectation, together with the feasibility checks on (beta, tau, sigma).
The solver itself never enforces those checks; it runs on warnings and
aborts only on structural errors.
"""

import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .diagnostics import (
    DiagnosticsRecord,
    augmented_lagrangian,
    stability_constants,
    stability_psi,
)
from .estimators import (
    EstimatorSpec,
    VarianceConstants,
    init_estimator,
    theoretical_constants,
)
from .exceptions import (
    DivergenceError,
    NoCertifiedConstantsError,
    ParameterError,
    ShapeError,
    SpectralEstimationError,
)
from .linops import estimate_spectral
from .rng import DOMAIN_OUTPUT, substream

__all__ = [
    "SolverConfig",
    "SolverState",
    "IterationRecord",
    "RunResult",
    "ParamReport",
    "z_update",
    "x_update",
    "u_update",
    "step",
    "run",
    "validate_params",
    "descent_coefficient",
    "ETA_GRID",
]

OUTPUT_RULES = ("final", "uniform_random")

# Grid over which the free constant eta is maximized when evaluating the
# descent coefficient.
ETA_GRID = tuple(2.0**k for k in range(-20, 21))


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters: penalty beta, step tau, dual relaxation sigma."""

    beta: float
    tau: float
    sigma: float = 0.95
    estimator: EstimatorSpec = field(default_factory=lambda: EstimatorSpec("full"))
    max_epochs: int = 10
    residual_tol: float = 0.0
    diag_every: int = 0
    seed: int = 0
    output_rule: str = "final"

    def __post_init__(self):
        if self.beta <= 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.tau <= 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if not 0 < self.sigma <= 1:
            raise ParameterError(f"sigma must lie in (0, 1], got {self.sigma}")
        if self.max_epochs < 1:
            raise ParameterError("max_epochs must be at least 1")
        if self.residual_tol < 0:
            raise ParameterError("residual_tol must be nonnegative")
        if self.diag_every < 0:
            raise ParameterError("diag_every must be nonnegative")
        if self.output_rule not in OUTPUT_RULES:
            raise ParameterError(f"unknown output_rule {self.output_rule!r}")


@dataclass
class SolverState:
    """Current and lagged iterates; ``t`` counts completed iterations."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    x_prev: np.ndarray
    u_prev: np.ndarray
    t: int = 0


@dataclass
class IterationRecord:
    iter: int
    epoch: float
    objective: float
    primal_residual: float
    wall_ms: float
    diag: Optional[DiagnosticsRecord] = None


@dataclass
class RunResult:
    trace: List[IterationRecord]
    output: Tuple[np.ndarray, np.ndarray]
    state: SolverState


def z_update(x, u, op, reg, beta):
    """Prox step: minimize F(z) + <u, Ax - z> + (beta/2)||Ax - z||^2 over z.

    Completing the square turns this into the prox of F at A x + u / beta
    with weight beta, which is solved exactly.
    """
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    u = np.asarray(u, dtype=float)
    if u.shape != (op.out_dim,):
        raise ShapeError(f"u must have length {op.out_dim}, got shape {u.shape}")
    return reg.prox(op.apply(x) + u / beta, beta)


def x_update(x, z_next, u, g_tilde, op, tau, beta):
    """Linearized primal step; one apply and one adjoint."""
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    x = np.asarray(x, dtype=float)
    z_next = np.asarray(z_next, dtype=float)
    u = np.asarray(u, dtype=float)
    g_tilde = np.asarray(g_tilde, dtype=float)
    if g_tilde.shape != x.shape:
        raise ShapeError("gradient estimate and x must have the same shape")
    if u.shape != (op.out_dim,) or z_next.shape != (op.out_dim,):
        raise ShapeError(f"u and z must have length {op.out_dim}")
    direction = g_tilde + op.adjoint(u + beta * (op.apply(x) - z_next))
    return x - direction / tau


def u_update(u, x_next, z_next, op, sigma, beta):
    """Relaxed dual ascent on the residual A x_{t+1} - z_{t+1}."""
    u = np.asarray(u, dtype=float)
    z_next = np.asarray(z_next, dtype=float)
    if u.shape != (op.out_dim,) or z_next.shape != (op.out_dim,):
        raise ShapeError(f"u and z must have length {op.out_dim}")
    return u + sigma * beta * (op.apply(x_next) - z_next)


@dataclass
class _DiagContext:
    consts: object  # StabilityConstants or None when psi is undefined
    rho: float


def step(state, problem, config, estimator, diag_ctx=None):
    """Advance one iteration; returns (new_state, record).

    The estimator is updated in place. When ``diag_ctx`` is given the
    record carries a DiagnosticsRecord computed for the new state (cost
    O(n * dim)).
    """
    op, reg, loss = problem.op, problem.reg, problem.loss
    beta, tau, sigma = config.beta, config.tau, config.sigma
    t0 = time.perf_counter()
    z_next = z_update(state.x, state.u, op, reg, beta)
    g = estimator.estimate(state.x)
    x_next = x_update(state.x, z_next, state.u, g, op, tau, beta)
    u_next = u_update(state.u, x_next, z_next, op, sigma, beta)
    new_state = SolverState(
        x=x_next, z=z_next, u=u_next, x_prev=state.x, u_prev=state.u, t=state.t + 1
    )
    resid_vec = op.apply(x_next) - z_next
    residual = float(np.linalg.norm(resid_vec))
    objective = loss.full_value(x_next) + reg.value(z_next)
    diag = None
    if diag_ctx is not None:
        err = g - loss.full_gradient(state.x)
        grad_err_sq_prev = float(err @ err)
        upsilon, gamma = estimator.upsilon_gamma(x_next)
        aug = augmented_lagrangian(problem, x_next, z_next, u_next, beta)
        psi = None
        if diag_ctx.consts is not None:
            psi = stability_psi(
                problem,
                new_state,
                diag_ctx.consts,
                upsilon,
                grad_err_sq_prev,
                beta,
                sigma,
                diag_ctx.rho,
            )
        diag = DiagnosticsRecord(aug, psi, residual, upsilon, gamma, grad_err_sq_prev)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    record = IterationRecord(
        iter=new_state.t,
        epoch=estimator.evals / loss.n,
        objective=objective,
        primal_residual=residual,
        wall_ms=wall_ms,
        diag=diag,
    )
    return new_state, record


def _variance_constants(spec, L, n):
    """Certified constants, or conservative defaults flagged uncertified."""
    try:
        return theoretical_constants(spec, L, n), True
    except NoCertifiedConstantsError:
        b = n if spec.kind == "full" else spec.batch_size
        return VarianceConstants(0.0, 0.0, L.L**2, b / n), False


def _make_diag_context(problem, config):
    loss = problem.loss
    L = loss.lipschitz_bound()
    vc, _ = _variance_constants(config.estimator, L, loss.n)
    consts = None
    try:
        spectral = estimate_spectral(problem.op, seed=config.seed)
    except SpectralEstimationError as exc:
        spectral = exc.best
    if spectral is not None and spectral.lambda_min_aat > 0:
        report = validate_params(problem, config, spectral, L)
        consts = stability_constants(
            config.sigma,
            config.beta,
            config.tau,
            L.L,
            spectral.lambda_min_aat,
            report.eta_used,
            report.c2_used,
            vc.v1,
            vc.v_upsilon,
            vc.rho,
        )
    return _DiagContext(consts=consts, rho=vc.rho)


def run(problem, config, x0=None):
    """Run the iteration for ``max_epochs`` worth of estimator calls.

    Starts from x0 (zeros when omitted), z0 = A x0, u0 = 0. One epoch is
    ceil(n / b) estimator calls (one call for the full backend). With a
    finite ``residual_tol`` the run stops early once both the primal
    residual and the relative x-stagnation fall below it; the default 0
    and an infinite tolerance both exhaust the budget. The reported
    iterate follows ``output_rule``: the last state, or one drawn
    uniformly from the trace.
    """
    loss, op = problem.loss, problem.op
    if x0 is None:
        x0 = np.zeros(loss.dim)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (loss.dim,):
        raise ShapeError(f"x0 must have length {loss.dim}, got shape {x0.shape}")
    estimator = init_estimator(config.estimator, loss, x0)
    b_eff = loss.n if config.estimator.kind == "full" else config.estimator.batch_size
    total_iters = config.max_epochs * math.ceil(loss.n / b_eff)
    state = SolverState(
        x=x0.copy(),
        z=op.apply(x0),
        u=np.zeros(op.out_dim),
        x_prev=x0.copy(),
        u_prev=np.zeros(op.out_dim),
        t=0,
    )
    diag_ctx = _make_diag_context(problem, config) if config.diag_every > 0 else None
    keep_iterates = config.output_rule == "uniform_random"
    trace = []
    iterates = []
    for _ in range(total_iters):
        sampled = (
            diag_ctx is not None
            and config.diag_every > 0
            and state.t % config.diag_every == 0
        )
        new_state, record = step(
            state, problem, config, estimator, diag_ctx if sampled else None
        )
        if not (
            np.isfinite(new_state.x).all()
            and np.isfinite(new_state.z).all()
            and np.isfinite(new_state.u).all()
        ):
            raise DivergenceError(new_state.t)
        trace.append(record)
        if keep_iterates:
            iterates.append((new_state.x, new_state.z))
        stalled = False
        if math.isfinite(config.residual_tol):
            dx = float(np.linalg.norm(new_state.x - state.x))
            stalled = (
                record.primal_residual <= config.residual_tol
                and dx
                <= config.residual_tol * (1.0 + float(np.linalg.norm(new_state.x)))
            )
        state = new_state
        if stalled:
            break
    if config.output_rule == "uniform_random" and iterates:
        k = int(substream(config.seed, DOMAIN_OUTPUT, 0).integers(0, len(iterates)))
        output = iterates[k]
    else:
        output = (state.x, state.z)
    return RunResult(trace=trace, output=output, state=state)


def descent_coefficient(
    tau, beta, sigma, op_norm_sq, lambda_m, L, eta, c2, v1, v_upsilon, rho
):
    """The coefficient multiplying ||x_{t+1} - x_t||^2 in the descent test.

    Positive values certify that the stability function decreases in
    expectation. Requires lambda_m > 0.
    """
    denom = sigma * beta * lambda_m
    v = v1 + v_upsilon / rho
    return (
        tau
        - (L + beta * op_norm_sq) / 2.0
        - 4.0 * sigma * tau**2 / (beta * lambda_m)
        - 8.0 * (sigma * tau + L) ** 2 / denom
        - 1.0 / (2.0 * eta)
        - (64.0 / denom + eta) * v
        - c2
    )


@dataclass
class ParamReport:
    """Outcome of the parameter feasibility checks.

    ``checks`` is a list of (name, status, detail) with status one of
    "pass", "warn", "fail". ``eta_tilde`` is NaN when lambda_min(AA^T) = 0
    leaves the descent coefficient undefined.
    """

    eta_tilde: float
    eta_used: float
    c2_used: float
    checks: List[Tuple[str, str, str]]
    certified: bool
    constants: VarianceConstants
    lipschitz: float
    op_norm_sq: float
    lambda_min_aat: float
    kappa: float

    def all_pass(self):
        return all(status == "pass" for _, status, _ in self.checks)


def validate_params(problem, config, spectral, L):
    """Evaluate the feasibility checks and the descent coefficient.

    The free constant eta is chosen by maximizing the descent coefficient
    over ETA_GRID, and c2 is pinned to 1e-6 * tau. Reports, never raises.
    """
    beta, tau, sigma = config.beta, config.tau, config.sigma
    vc, certified = _variance_constants(config.estimator, L, problem.loss.n)
    c2 = 1e-6 * tau
    lam = spectral.lambda_min_aat
    checks = []

    ok = 2.0 * tau >= beta * spectral.op_norm_sq
    checks.append(
        (
            "tau_vs_beta_norm",
            "pass" if ok else "fail",
            f"2*tau = {2.0 * tau:g} vs beta*||A||^2 = {beta * spectral.op_norm_sq:g}",
        )
    )

    bound = 0.0 if math.isinf(spectral.condition_kappa) else 1.0 / (
        24.0 * spectral.condition_kappa
    )
    ok = sigma < bound
    checks.append(
        (
            "sigma_vs_kappa",
            "pass" if ok else "fail",
            f"sigma = {sigma:g} vs 1/(24*kappa) = {bound:g}",
        )
    )

    checks.append(
        (
            "lambda_min_positive",
            "pass" if lam > 0 else "warn",
            f"lambda_min(AA^T) = {lam:g}"
            + ("" if lam > 0 else " (A not surjective; descent theory unavailable)"),
        )
    )

    if lam > 0:
        best_eta, best_val = None, -math.inf
        for eta in ETA_GRID:
            val = descent_coefficient(
                tau,
                beta,
                sigma,
                spectral.op_norm_sq,
                lam,
                L.L,
                eta,
                c2,
                vc.v1,
                vc.v_upsilon,
                vc.rho,
            )
            if val > best_val:
                best_eta, best_val = eta, val
        eta_used, eta_tilde = best_eta, best_val
        checks.append(
            (
                "eta_tilde_positive",
                "pass" if eta_tilde > 0 else "fail",
                f"eta_tilde = {eta_tilde:g} at eta = {eta_used:g}",
            )
        )
    else:
        eta_used, eta_tilde = 1.0, float("nan")
        checks.append(
            (
                "eta_tilde_positive",
                "warn",
                "undefined (division by lambda_min(AA^T) = 0)",
            )
        )

    checks.append(
        (
            "certified_constants",
            "pass" if certified else "warn",
            "certified"
            if certified
            else f"uncertified: conservative defaults for {config.estimator.kind!r}",
        )
    )

    return ParamReport(
        eta_tilde=eta_tilde,
        eta_used=eta_used,
        c2_used=c2,
        checks=checks,
        certified=certified,
        constants=vc,
        lipschitz=L.L,
        op_norm_sq=spectral.op_norm_sq,
        lambda_min_aat=lam,
        kappa=spectral.condition_kappa,
    )
