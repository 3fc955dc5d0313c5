"""Property suites behind ``pclpv validate``.

Each suite returns a :class:`SuiteResult` with its worst residual against the
tolerance it is judged by.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_continuous_are

from .galerkin import kron_identity_check
from .orthopoly import ParameterDistribution, gauss_rule, make_basis, make_lagrange, lemma1_check
from .plant import UncertainLinearSystem
from .simulate import validate_galerkin
from .synthesis import synth_lti, ybar_free_parameters

__all__ = ["SuiteResult", "SUITES", "run_suites", "monomial_exactness"]

UNIT = ParameterDistribution.uniform(-1.0, 1.0)


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name:<14} residual={self.residual:.3e} tol={self.tolerance:.0e} {self.detail}".rstrip()


def _result(name, residual, tol, detail=""):
    return SuiteResult(name, bool(residual <= tol), float(residual), tol, detail)


def orthogonality(seed: int = 0, norm_perturbation: float = 0.0) -> SuiteResult:
    """Quadrature Gram matrices against the stored norms, N <= 12, both families."""
    worst = 0.0
    for dist in (UNIT, ParameterDistribution.gaussian()):
        basis = make_basis(dist, 12)
        if norm_perturbation:
            basis = dataclasses.replace(basis, norms=basis.norms * (1.0 + norm_perturbation))
        rule = gauss_rule(dist, 20)
        phi = basis(rule.nodes)
        G = (phi * rule.weights) @ phi.T
        worst = max(worst, np.abs(G - np.diag(basis.norms)).max() / max(1.0, np.abs(basis.norms).max()))
    legendre = make_basis(UNIT, 12).norms
    worst = max(worst, np.abs(legendre - 1.0 / (2 * np.arange(13) + 1)).max())
    worst = max(worst, monomial_exactness())
    return _result("orthogonality", worst, 1e-10, "N<=12 uniform+gaussian, monomials")


def monomial_exactness(max_nodes: int = 13) -> float:
    """Worst relative error of n-node rules on t^k, k <= 2n - 1, both families."""
    worst = 0.0
    for n in range(1, max_nodes + 1):
        for dist, moment in ((UNIT, _uniform_moment), (ParameterDistribution.gaussian(), _gaussian_moment)):
            rule = gauss_rule(dist, n)
            for k in range(2 * n):
                exact = moment(k)
                terms = rule.weights * rule.nodes**k
                # odd moments vanish by cancellation; judge against sum |w x^k|
                scale = max(1.0, abs(exact), float(np.abs(terms).sum()))
                worst = max(worst, abs(float(terms.sum()) - exact) / scale)
    return worst


def _uniform_moment(k: int) -> float:
    return 0.0 if k % 2 else 1.0 / (k + 1)


def _gaussian_moment(k: int) -> float:
    # (k - 1)!! for even k
    return 0.0 if k % 2 else float(np.prod(np.arange(k - 1, 0, -2), dtype=float))


def lemma1(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for N in range(1, 10):
        lag = make_lagrange(make_basis(UNIT, N))
        worst = max(worst, np.abs(lag.node_expectations - gauss_rule(UNIT, N + 1).weights).max())
        # E[l_i l_j g] for all pairs at once, with a rule exact in degree 2N + 1
        rule = gauss_rule(UNIT, N + 2)
        L = lag.evaluate(rule.nodes)
        for c0, c1 in rng.normal(size=(100, 2)):
            g = c0 + c1 * rule.nodes
            E = (L * (rule.weights * g)) @ L.T
            want = np.diag(lag.node_expectations * (c0 + c1 * lag.nodes))
            worst = max(worst, np.abs(E - want).max())
        worst = max(worst, abs(lemma1_check(lag, lambda d: 1.0 + d, 0, 0) - lag.node_expectations[0] * (1 + lag.nodes[0])))
    return _result("lemma1", worst, 1e-9, "N=1..9, 100 affine g")


def proposition1(seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(100):
        m, n, N = (int(k) for k in rng.integers(1, 5, size=3))
        if not kron_identity_check(rng.normal(size=(m, n)), rng.normal(size=N + 1)):
            failures += 1
    return _result("proposition1", failures, 0, "100 random instances")


def corollary1(seed: int = 0) -> SuiteResult:
    bad = [
        (n, N)
        for n in (1, 2, 3)
        for N in range(6)
        if ybar_free_parameters(n, N) != n * (n + 1) * (N + 1) * (N + 2) // 4
    ]
    return _result("corollary1", len(bad), 0, f"mismatches={bad}" if bad else "n<=3, N<=5")


def riccati(seed: int = 0) -> SuiteResult:
    cases = [
        (np.array([[-1.0]]), np.array([[1.0]]), np.eye(1), np.eye(1)),
        (np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]), np.eye(2), np.eye(1)),
    ]
    worst = 0.0
    for A, B, Q, R in cases:
        P = solve_continuous_are(A, B, Q, R)
        K = -np.linalg.solve(R, B.T @ P)
        got = synth_lti(A, B, Q, R).gain.K
        worst = max(worst, np.abs(got - K).max() / np.abs(K).max())
    return _result("riccati", worst, 1e-3, "scalar + double integrator")


def galerkin_mc(seed: int = 0) -> SuiteResult:
    system = UncertainLinearSystem(
        1, 1, lambda d: np.array([[-(1.0 + 0.5 * d)]]), lambda d: np.zeros((1, 1)), UNIT
    )
    rep = validate_galerkin(system, make_basis(UNIT, 3), [1.0], 1.0, 100_000, seed=seed)
    return _result(
        "galerkin_mc", max(rep.mean_error, rep.variance_error), 1e-2,
        f"mean_err={rep.mean_error:.2e} var_err={rep.variance_error:.2e}",
    )


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "orthogonality": orthogonality,
    "lemma1": lemma1,
    "proposition1": proposition1,
    "corollary1": corollary1,
    "riccati": riccati,
    "galerkin_mc": galerkin_mc,
}


def run_suites(names=None, seed: int = 0, norm_perturbation: float = 0.0) -> list[SuiteResult]:
    names = list(SUITES) if not names else list(names)
    out = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}")
        if name == "orthogonality":
            out.append(SUITES[name](seed, norm_perturbation))
        else:
            out.append(SUITES[name](seed))
    return out
