"""Controller synthesis: LTI and sampled-LPV baselines, Galerkin (pcLPV) and
stochastic-collocation (scLPV) polynomial chaos designs.

Every design searches ``Y(delta) > 0`` and ``W(delta)`` and returns the gain
``K(delta) = W(delta) Y(delta)^-1``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_continuous_are

from . import sdp
from .galerkin import GalerkinTensors, build_tensors, lift
from .orthopoly import (
    LagrangeBasis,
    OrthoBasis,
    ParameterDistribution,
    QuadratureRule,
    default_rule,
    eval_basis,
    make_basis,
    make_lagrange,
)
from .plant import UncertainLinearSystem, constant_system
from .sdp import Affine, SdpBuilder

__all__ = [
    "SynthesisError",
    "SingularityError",
    "SynthesisOptions",
    "SynthesisResult",
    "StaticGain",
    "AffineGain",
    "PcGain",
    "ScGain",
    "eval_gain",
    "synth_lti",
    "synth_lpv_sampled",
    "synth_pclpv",
    "synth_sclpv",
    "add_worst_case",
    "expected_decay_residual",
    "spectral_abscissa",
    "sample_grid",
    "variable_scale",
    "ybar_free_parameters",
    "gain_to_dict",
    "gain_from_dict",
]

log = logging.getLogger(__name__)

COND_LIMIT = 1e10


class SynthesisError(RuntimeError):
    """The SDP behind a synthesis did not return an optimal point."""

    def __init__(self, status: str, message: str):
        super().__init__(message)
        self.status = status


class SingularityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SynthesisOptions:
    epsilon_psd: float = 1e-6
    epsilon_stab: float = 1e-6
    wc_points: tuple | None = None
    quadrature_order: int | None = None
    variable_scale: float | None = None
    solver: sdp.SolverSettings = field(default_factory=sdp.SolverSettings)


def variable_scale(A, B, Q, R, options: SynthesisOptions) -> float:
    """Factor ``s`` with ``Y = s Yhat``, ``W = s What`` used inside the SDP.

    Substituting and dividing the LQR inequality by ``s`` gives the same LMI
    with weights ``sQ``, ``sR`` and margins ``epsilon / s``, so the solver
    works on variables of order one.  By default ``s`` is the power of two
    nearest to the mean eigenvalue of ``P^-1`` from the Riccati equation at
    the nominal plant, which keeps the rescaling exact in floating point.
    """
    if options.variable_scale is not None:
        if not options.variable_scale > 0:
            raise ValueError("variable_scale must be positive")
        return float(options.variable_scale)
    try:
        P = solve_continuous_are(A, B, Q, R)
        lam = np.linalg.eigvalsh(0.5 * (P + P.T))
        if lam.min() <= 0 or not np.all(np.isfinite(lam)):
            return 1.0
        return float(2.0 ** round(np.log2(np.mean(1.0 / lam))))
    except (np.linalg.LinAlgError, ValueError):
        return 1.0


def _system_scale(system: UncertainLinearSystem, Q, R, options: SynthesisOptions) -> float:
    a, b = system.evaluate(float(system.distribution.from_standard(0.0)))
    return variable_scale(a, b, Q, R, options)


def _sym_sqrt(M) -> np.ndarray:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lam, U = np.linalg.eigh(0.5 * (M + M.T))
    return (U * np.sqrt(np.clip(lam, 0.0, None))) @ U.T


def _solve_yw(Y: np.ndarray, W: np.ndarray, where: str) -> np.ndarray:
    cond = np.linalg.cond(Y)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(f"Y is singular or ill-conditioned (cond={cond:.3e}) at {where}")
    return np.linalg.solve(Y.T, W.T).T


def _fast_solve(Y: np.ndarray, W: np.ndarray, delta: float) -> np.ndarray:
    """``W Y^{-1}`` with a 1-norm condition estimate; simulation hot path."""
    try:
        Yi = np.linalg.inv(Y)
    except np.linalg.LinAlgError:
        raise SingularityError(f"Y is singular at delta={delta:.6g}") from None
    cond = np.abs(Y).sum(axis=0).max() * np.abs(Yi).sum(axis=0).max()
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularityError(f"Y is singular or ill-conditioned (cond={cond:.3e}) at delta={delta:.6g}")
    return W @ Yi


def _scalar_basis(basis: OrthoBasis, delta: float) -> np.ndarray:
    t = float(basis.distribution.to_standard(delta))
    vals = [1.0, t][: basis.degree + 1]
    uniform = basis.distribution.family == "uniform"
    for k in range(1, basis.degree):
        if uniform:
            vals.append(((2 * k + 1) * t * vals[k] - k * vals[k - 1]) / (k + 1))
        else:
            vals.append(t * vals[k] - k * vals[k - 1])
    return np.array(vals)


class _Gain:
    kind = "gain"

    def scheduler(self) -> Callable[[float], np.ndarray]:
        """Scalar ``delta -> K`` closure without support checks, for in-support callers."""
        return self.evaluate

    def Y(self, delta) -> np.ndarray:
        raise NotImplementedError

    def W(self, delta) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, delta) -> np.ndarray:
        return _solve_yw(self.Y(delta), self.W(delta), f"delta={float(delta):.6g}")

    __call__ = evaluate


@dataclass(frozen=True)
class StaticGain(_Gain):
    K: np.ndarray
    Ymat: np.ndarray | None = None
    Wmat: np.ndarray | None = None
    kind = "lti"

    def Y(self, delta):
        return self.Ymat

    def W(self, delta):
        return self.Wmat

    def evaluate(self, delta):
        return self.K

    __call__ = evaluate

    def scheduler(self):
        K = self.K
        return lambda delta: K


@dataclass(frozen=True)
class AffineGain(_Gain):
    Y0: np.ndarray
    Y1: np.ndarray
    W0: np.ndarray
    W1: np.ndarray
    kind = "lpv"

    def Y(self, delta):
        return self.Y0 + float(delta) * self.Y1

    def W(self, delta):
        return self.W0 + float(delta) * self.W1

    __call__ = _Gain.evaluate

    def scheduler(self):
        Y0, Y1, W0, W1 = self.Y0, self.Y1, self.W0, self.W1
        return lambda d: _fast_solve(Y0 + d * Y1, W0 + d * W1, d)


@dataclass(frozen=True)
class PcGain(_Gain):
    """Galerkin gain: ``Y = Phi_n^T Ybar Phi_n`` and ``W = sum_i W_i phi_i``."""

    basis: OrthoBasis
    Ybar: np.ndarray
    Ws: np.ndarray
    kind = "pclpv"

    @property
    def n(self) -> int:
        return self.Ws.shape[2]

    def Y(self, delta):
        Pn = lift(eval_basis(self.basis, delta), self.n)
        return Pn.T @ self.Ybar @ Pn

    def W(self, delta):
        return np.tensordot(eval_basis(self.basis, delta), self.Ws, axes=1)

    __call__ = _Gain.evaluate

    def scheduler(self):
        size, n = self.basis.size, self.n
        # Y = sum_ij phi_i phi_j Ybar[i-block, j-block]
        Yb = self.Ybar.reshape(size, n, size, n).transpose(0, 2, 1, 3).reshape(size * size, n * n)
        Wb = self.Ws.reshape(size, -1)
        shape = self.Ws.shape[1:]

        def K(d):
            phi = _scalar_basis(self.basis, d)
            Y = (np.outer(phi, phi).ravel() @ Yb).reshape(n, n)
            return _fast_solve(Y, (phi @ Wb).reshape(shape), d)

        return K


@dataclass(frozen=True)
class ScGain(_Gain):
    """Collocation gain: ``Y = sum_i l_i^2 Ytil_ii`` and ``W = sum_i l_i Wtil_i``."""

    lagrange: LagrangeBasis
    Ys: np.ndarray
    Ws: np.ndarray
    kind = "sclpv"

    def Y(self, delta):
        l = self.lagrange.evaluate(delta)
        return np.tensordot(l**2, self.Ys, axes=1)

    def W(self, delta):
        return np.tensordot(self.lagrange.evaluate(delta), self.Ws, axes=1)

    __call__ = _Gain.evaluate

    def scheduler(self):
        size = self.lagrange.size
        Yb = self.Ys.reshape(size, -1)
        Wb = self.Ws.reshape(size, -1)
        ys, ws = self.Ys.shape[1:], self.Ws.shape[1:]

        def K(d):
            l = self.lagrange.evaluate(d)
            return _fast_solve(((l * l) @ Yb).reshape(ys), (l @ Wb).reshape(ws), d)

        return K


def eval_gain(gain, delta) -> np.ndarray:
    return gain.evaluate(delta)


@dataclass
class SynthesisResult:
    method: str
    gain: _Gain
    objective: float
    problem: sdp.SdpProblem
    solution: sdp.SdpSolution
    sdp_residual: float
    decay_residual: float
    seconds: float
    label: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def nvars(self) -> int:
        return self.problem.nvars


def _run(builder: SdpBuilder, options: SynthesisOptions, what: str):
    problem = builder.build()
    solution = sdp.solve(problem, options.solver)
    if solution.status != sdp.OPTIMAL:
        raise SynthesisError(solution.status, f"{what}: solver returned {solution.status} ({solution.info.get('solver_status')})")
    return problem, solution, sdp.residual(problem, solution)


def _lqr_block(Y: Affine, W: Affine, A, B, sqrtQ, sqrtR, weight: float = 1.0) -> Affine:
    """Schur form of ``sym(Y A^T + W^T B^T) w + Y (wQ) Y + W^T (wR) W <= 0``.

    ``sqrtQ``/``sqrtR`` are square roots of the already weighted ``Q``/``R``.
    """
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    M11 = (weight * (Y @ A.T) + weight * (W.T @ B.T)).sym()
    return sdp.schur_wrap(M11, [(Y, sqrtQ), (W, sqrtR)])


def add_worst_case(
    builder: SdpBuilder,
    system: UncertainLinearSystem,
    Y_of: Callable[[float], Affine],
    W_of: Callable[[float], Affine],
    points: Sequence[float],
    epsilon: float,
) -> SdpBuilder:
    """Append ``sym(A(d) Y(d) + B(d) W(d)) <= -epsilon I`` for each point ``d``."""
    for d in points:
        a, b = system.evaluate(d)
        expr = (a @ Y_of(d) + b @ W_of(d)).sym() + epsilon * np.eye(system.n)
        builder.add_lmi(expr, "<=", name=f"worst_case[{float(d):.6g}]")
    return builder


def _wc_points(system: UncertainLinearSystem, options: SynthesisOptions) -> tuple:
    if options.wc_points is not None:
        return tuple(float(p) for p in options.wc_points)
    if system.distribution.bounded:
        return system.distribution.support
    return ()


def synth_lti(A, B, Q, R, options: SynthesisOptions | None = None) -> SynthesisResult:
    """Static gain maximizing ``tr Y`` under the LQR-bound LMI."""
    options = options or SynthesisOptions()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    m = B.shape[1]
    s = variable_scale(A, B, Q, R, options)
    sqrtQ, sqrtR = _sym_sqrt(s * np.asarray(Q, dtype=float)), _sym_sqrt(s * np.asarray(R, dtype=float))
    bld = SdpBuilder()
    Y = bld.symmetric("Y", n)
    W = bld.matrix("W", m, n)
    bld.maximize(Y.trace())
    bld.add_lmi(Y - options.epsilon_psd / s * np.eye(n), ">=", name="Y_pos")
    bld.add_lmi(_lqr_block(Y, W, A, B, sqrtQ, sqrtR), "<=", name="lqr")
    t0 = time.perf_counter()
    try:
        problem, sol, res = _run(bld, options, "LTI synthesis")
    except SynthesisError as exc:
        if exc.status in (sdp.INFEASIBLE, sdp.NUMERICAL_FAILURE):
            raise SynthesisError(exc.status, f"LTI synthesis failed ({exc.status}); (A, B) may not be stabilizable") from None
        raise
    Yv, Wv = s * Y.evaluate(sol.x), s * W.evaluate(sol.x)
    gain = StaticGain(_solve_yw(Yv, Wv, "LTI design point"), Yv, Wv)
    point = ParameterDistribution.uniform(-1.0, 1.0)
    decay = expected_decay_residual(
        gain, constant_system(A, B, point), Q, R, make_basis(point, 0), QuadratureRule([0.0], [1.0])
    )
    return SynthesisResult(
        "lti", gain, s * sol.objective, problem, sol, res, decay, time.perf_counter() - t0, "LTI", {"scale": s}
    )


def sample_grid(distribution: ParameterDistribution, count: int) -> np.ndarray:
    """Endpoint-inclusive uniform grid over the support."""
    lo, hi = distribution.support
    return np.linspace(lo, hi, int(count))


def synth_lpv_sampled(
    system: UncertainLinearSystem, Q, R, samples, options: SynthesisOptions | None = None
) -> SynthesisResult:
    """Affine ``Y0 + rho Y1`` / ``W0 + rho W1`` design enforced at sample points."""
    options = options or SynthesisOptions()
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < 2:
        raise ValueError("sampled LPV synthesis needs at least two samples")
    if np.unique(samples).size != samples.size:
        raise ValueError("duplicate LPV samples")
    system.distribution.check(samples)
    n, m = system.n, system.m
    s = _system_scale(system, Q, R, options)
    sqrtQ, sqrtR = _sym_sqrt(s * np.asarray(Q, dtype=float)), _sym_sqrt(s * np.asarray(R, dtype=float))
    bld = SdpBuilder()
    Y0, Y1 = bld.symmetric("Y0", n), bld.symmetric("Y1", n)
    W0, W1 = bld.matrix("W0", m, n), bld.matrix("W1", m, n)
    bld.maximize((Y0 + Y1).trace())
    for rho in samples:
        Y = Y0 + rho * Y1
        W = W0 + rho * W1
        a, b = system.evaluate(rho)
        bld.add_lmi(Y - options.epsilon_psd / s * np.eye(n), ">=", name=f"Y_pos[{rho:.6g}]")
        bld.add_lmi(_lqr_block(Y, W, a, b, sqrtQ, sqrtR), "<=", name=f"lqr[{rho:.6g}]")
    t0 = time.perf_counter()
    problem, sol, res = _run(bld, options, f"LPV synthesis ({samples.size} samples)")
    x = sol.x
    gain = AffineGain(*(s * v.evaluate(x) for v in (Y0, Y1, W0, W1)))
    unit = make_basis(system.distribution, 0)
    decay = max(
        expected_decay_residual(gain, system, Q, R, unit, QuadratureRule([rho], [1.0])) for rho in samples
    )
    return SynthesisResult(
        "lpv", gain, s * sol.objective, problem, sol, res, decay, time.perf_counter() - t0,
        f"LPV ({samples.size} samples)", {"samples": samples.tolist(), "scale": s},
    )


def ybar_free_parameters(n: int, N: int) -> int:
    """Scalar count of the symmetric blocks ``Ybar_ij`` (i >= j)."""
    bld = SdpBuilder()
    for i, j in ((i, j) for j in range(N + 1) for i in range(j, N + 1)):
        bld.symmetric(f"Ybar[{i},{j}]", n)
    return bld.nvars


def _assemble_ybar(blocks: list[Affine], tensors: GalerkinTensors) -> Affine:
    N, pos = tensors.dims.N, tensors.ordering.position
    rows = []
    for i in range(N + 1):
        rows.append([blocks[pos[(i, j)]] for j in range(N + 1)])
    return Affine.block(rows)


def synth_pclpv(
    system: UncertainLinearSystem,
    Q,
    R,
    basis: OrthoBasis,
    options: SynthesisOptions | None = None,
    tensors: GalerkinTensors | None = None,
) -> SynthesisResult:
    """Galerkin-projection design: one LMI built from the tensors M1..M4."""
    options = options or SynthesisOptions()
    n, m, N = system.n, system.m, basis.degree
    rule = default_rule(system.distribution, N, options.quadrature_order)
    t0 = time.perf_counter()
    if tensors is None:
        tensors = build_tensors(system, basis, Q, R, rule)
    ordering = tensors.ordering
    s = _system_scale(system, Q, R, options)
    root_s = np.sqrt(s)

    bld = SdpBuilder()
    yblocks = [bld.symmetric(f"Ybar[{i},{j}]", n) for i, j in ordering.pairs]
    wblocks = [bld.matrix(f"W[{i}]", m, n) for i in range(N + 1)]
    V_Y = Affine.vstack(yblocks)
    V_W = Affine.vstack(wblocks)
    VV_Y = V_Y.kron_eye(N + 1)
    VV_W = V_W.kron_eye(N + 1)

    objective = Affine(np.zeros((1, 1)))
    for i in range(N + 1):
        objective = objective + basis.norms[i] * yblocks[ordering.position[(i, i)]].trace()
    bld.maximize(objective)

    M11 = (VV_Y.T @ tensors.M1 + VV_W.T @ tensors.M2).sym()
    bld.add_lmi(
        sdp.schur_wrap(M11, [(VV_Y, root_s * tensors.sqrtM3), (VV_W, root_s * tensors.sqrtM4)]), "<=", name="galerkin"
    )
    Ybar = _assemble_ybar(yblocks, tensors)
    bld.add_lmi(Ybar - options.epsilon_psd / s * np.eye(n * (N + 1)), ">=", name="Ybar_pos")

    def Y_of(d):
        return lift(ordering.psi(eval_basis(basis, d)), n).T @ V_Y

    def W_of(d):
        return lift(eval_basis(basis, d), m).T @ V_W

    add_worst_case(bld, system, Y_of, W_of, _wc_points(system, options), options.epsilon_stab / s)
    problem, sol, res = _run(bld, options, f"pcLPV synthesis (N={N})")
    x = sol.x
    gain = PcGain(basis, s * Ybar.evaluate(x), s * np.stack([w.evaluate(x) for w in wblocks]))
    decay = expected_decay_residual(gain, system, Q, R, basis, rule)
    return SynthesisResult(
        "pclpv", gain, s * sol.objective, problem, sol, res, decay, time.perf_counter() - t0,
        f"pcLPV (N={N})", {"order": N, "scale": s},
    )


def synth_sclpv(
    system: UncertainLinearSystem,
    Q,
    R,
    lagrange: LagrangeBasis,
    options: SynthesisOptions | None = None,
) -> SynthesisResult:
    """Stochastic-collocation design: one LQR-type LMI per collocation node."""
    options = options or SynthesisOptions()
    n, m = system.n, system.m
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    nodes, weights = lagrange.nodes, lagrange.node_expectations
    s = _system_scale(system, Q, R, options)

    def build(indices, with_wc):
        bld = SdpBuilder()
        Ys = {i: bld.symmetric(f"Ytil[{i}]", n) for i in indices}
        Ws = {i: bld.matrix(f"Wtil[{i}]", m, n) for i in indices}
        objective = Affine(np.zeros((1, 1)))
        for i in indices:
            objective = objective + weights[i] * Ys[i].trace()
        bld.maximize(objective)
        for i in indices:
            a, b = system.evaluate(nodes[i])
            w = weights[i]
            bld.add_lmi(Ys[i] - options.epsilon_psd / s * np.eye(n), ">=", name=f"Ytil_pos[{i}]")
            bld.add_lmi(
                _lqr_block(Ys[i], Ws[i], a, b, _sym_sqrt(s * w * Q), _sym_sqrt(s * w * R), weight=w),
                "<=",
                name=f"collocation[{i}]",
            )
        if with_wc:
            def Y_of(d):
                l = lagrange.evaluate(d)
                return sum((l[i] ** 2 * Ys[i] for i in range(lagrange.size)), Affine(np.zeros((n, n))))

            def W_of(d):
                l = lagrange.evaluate(d)
                return sum((l[i] * Ws[i] for i in range(lagrange.size)), Affine(np.zeros((m, n))))

            add_worst_case(bld, system, Y_of, W_of, _wc_points(system, options), options.epsilon_stab / s)
        return bld, Ys, Ws

    t0 = time.perf_counter()
    bld, Ys, Ws = build(range(lagrange.size), True)
    try:
        problem, sol, res = _run(bld, options, f"scLPV synthesis (N={lagrange.degree})")
    except SynthesisError as exc:
        for i in range(lagrange.size):
            single, _, _ = build([i], False)
            if sdp.solve(single.build(), options.solver).status == sdp.INFEASIBLE:
                raise SynthesisError(exc.status, f"{exc}; node {i} (delta={nodes[i]:.6g}) is infeasible") from None
        raise
    x = sol.x
    gain = ScGain(
        lagrange, s * np.stack([Ys[i].evaluate(x) for i in range(lagrange.size)]),
        s * np.stack([Ws[i].evaluate(x) for i in range(lagrange.size)]),
    )
    node_rule = QuadratureRule(nodes, weights)
    decay = expected_decay_residual(gain, system, Q, R, lagrange, node_rule)
    return SynthesisResult(
        "sclpv", gain, s * sol.objective, problem, sol, res, decay, time.perf_counter() - t0,
        f"scLPV (N={lagrange.degree})", {"order": lagrange.degree, "scale": s},
    )


def expected_decay_residual(gain, system: UncertainLinearSystem, Q, R, basis, rule: QuadratureRule) -> float:
    """Largest eigenvalue of the projected decay condition.

    With ``P = Y^-1`` and ``x = Y z``, the integrand
    ``Y (sym((A+BK)^T P) + Q + K^T R K) Y`` is projected onto the span of
    ``basis`` by ``rule``; a nonpositive result certifies the expected-cost
    decay bound on that subspace.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n = system.n
    size = len(np.atleast_1d(basis(rule.nodes[0])))
    acc = np.zeros((n * size, n * size))
    for d, w in zip(rule.nodes, rule.weights):
        a, b = system.evaluate(d)
        Y = gain.Y(d)
        if Y is None:
            raise ValueError("gain carries no Lyapunov certificate")
        K = gain.evaluate(d)
        P = np.linalg.inv(Y)
        acl = a + b @ K
        H = acl.T @ P + P @ acl + Q + K.T @ R @ K
        G = Y @ H @ Y
        Pn = lift(basis(d), n)
        acc += w * (Pn @ (0.5 * (G + G.T)) @ Pn.T)
    return float(np.linalg.eigvalsh(0.5 * (acc + acc.T)).max())


def spectral_abscissa(system: UncertainLinearSystem, gain, delta: float) -> float:
    a, b = system.evaluate(delta)
    return float(np.linalg.eigvals(a + b @ gain.evaluate(delta)).real.max())


def _arr(x) -> list:
    return np.asarray(x, dtype=float).tolist()


def gain_to_dict(gain) -> dict:
    if isinstance(gain, StaticGain):
        d = {"type": "lti", "K": _arr(gain.K)}
        if gain.Ymat is not None:
            d.update(Y=_arr(gain.Ymat), W=_arr(gain.Wmat))
        return d
    if isinstance(gain, AffineGain):
        return {"type": "lpv", "Y0": _arr(gain.Y0), "Y1": _arr(gain.Y1), "W0": _arr(gain.W0), "W1": _arr(gain.W1)}
    if isinstance(gain, PcGain):
        return {"type": "pclpv", "basis": gain.basis.to_dict(), "Ybar": _arr(gain.Ybar), "W": _arr(gain.Ws)}
    if isinstance(gain, ScGain):
        return {"type": "sclpv", "lagrange": gain.lagrange.to_dict(), "Y": _arr(gain.Ys), "W": _arr(gain.Ws)}
    raise TypeError(f"unknown gain type {type(gain).__name__}")


def gain_from_dict(d: dict):
    a = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
    kind = d["type"]
    if kind == "lti":
        return StaticGain(a("K"), a("Y") if "Y" in d else None, a("W") if "W" in d else None)
    if kind == "lpv":
        return AffineGain(a("Y0"), a("Y1"), a("W0"), a("W1"))
    if kind == "pclpv":
        spec = d["basis"]
        basis = make_basis(ParameterDistribution.from_dict(spec["distribution"]), int(spec["order"]))
        return PcGain(basis, a("Ybar"), a("W"))
    if kind == "sclpv":
        spec = d["lagrange"]
        basis = make_basis(ParameterDistribution.from_dict(spec["distribution"]), int(spec["order"]))
        return ScGain(make_lagrange(basis), a("Y"), a("W"))
    raise ValueError(f"unknown gain type {kind!r}")


def gain_dims(gain) -> tuple[int, int]:
    """``(m, n)`` of the gain matrix."""
    if isinstance(gain, StaticGain):
        return gain.K.shape
    if isinstance(gain, AffineGain):
        return gain.W0.shape
    return gain.Ws.shape[1:]

