"""Orthogonal polynomial bases, probabilistic Gauss rules and Lagrange interpolants.

Polynomials are classically normalized (Legendre ``P_i(1) = 1``, probabilists'
Hermite ``He_i``) and live on a standard variable ``t``; every object carries
the affine map from the raw parameter ``delta`` to ``t`` so callers always pass
raw values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "ConfigurationError",
    "DomainError",
    "ParameterDistribution",
    "OrthoBasis",
    "QuadratureRule",
    "LagrangeBasis",
    "make_basis",
    "eval_basis",
    "gauss_rule",
    "composite_rule",
    "default_rule",
    "default_quadrature_order",
    "expect",
    "make_lagrange",
    "lemma1_check",
]

_SUPPORT_TOL = 1e-12


class ConfigurationError(ValueError):
    """Unsupported or malformed configuration."""


class DomainError(ValueError):
    """A parameter value lies outside the support of its distribution."""


@dataclass(frozen=True)
class ParameterDistribution:
    """Distribution of the scalar scheduling parameter.

    ``family`` is ``"uniform"`` (uses ``lo``/``hi``) or ``"gaussian"``
    (uses ``mean``/``stddev``).
    """

    family: str
    lo: float = -1.0
    hi: float = 1.0
    mean: float = 0.0
    stddev: float = 1.0

    def __post_init__(self):
        if self.family == "uniform":
            if not self.lo < self.hi:
                raise ConfigurationError(f"uniform support needs lo < hi, got [{self.lo}, {self.hi}]")
        elif self.family == "gaussian":
            if not self.stddev > 0:
                raise ConfigurationError(f"gaussian stddev must be positive, got {self.stddev}")
        else:
            raise ConfigurationError(f"unsupported distribution family {self.family!r}")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "ParameterDistribution":
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def gaussian(cls, mean: float = 0.0, stddev: float = 1.0) -> "ParameterDistribution":
        return cls("gaussian", mean=float(mean), stddev=float(stddev))

    @property
    def bounded(self) -> bool:
        return self.family == "uniform"

    @property
    def support(self) -> tuple[float, float]:
        if self.bounded:
            return (self.lo, self.hi)
        return (-math.inf, math.inf)

    def to_standard(self, delta):
        """Affine map from raw parameter values to the standard variable."""
        delta = np.asarray(delta, dtype=float)
        if self.bounded:
            return (2.0 * delta - (self.lo + self.hi)) / (self.hi - self.lo)
        return (delta - self.mean) / self.stddev

    def from_standard(self, t):
        t = np.asarray(t, dtype=float)
        if self.bounded:
            return 0.5 * (self.hi - self.lo) * t + 0.5 * (self.lo + self.hi)
        return self.stddev * t + self.mean

    def check(self, delta) -> None:
        if not self.bounded:
            return
        d = np.asarray(delta, dtype=float)
        span = self.hi - self.lo
        if np.any(d < self.lo - _SUPPORT_TOL * span) or np.any(d > self.hi + _SUPPORT_TOL * span):
            raise DomainError(f"parameter value(s) {d} outside support [{self.lo}, {self.hi}]")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.bounded:
            return rng.uniform(self.lo, self.hi, size)
        return rng.normal(self.mean, self.stddev, size)

    def to_dict(self) -> dict:
        if self.bounded:
            return {"family": "uniform", "range": [self.lo, self.hi]}
        return {"family": "gaussian", "mean": self.mean, "stddev": self.stddev}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterDistribution":
        family = d.get("family", d.get("distribution"))
        if family == "uniform":
            lo, hi = d["range"]
            return cls.uniform(lo, hi)
        if family == "gaussian":
            return cls.gaussian(d.get("mean", 0.0), d.get("stddev", 1.0))
        raise ConfigurationError(f"unsupported distribution family {family!r}")


def _recurrence(family: str, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Monic three-term recurrence coefficients (alpha_k, beta_k), k < n.

    p_{k+1}(t) = (t - alpha_k) p_k(t) - beta_k p_{k-1}(t); beta_0 is the total
    mass, which is 1 for both probability measures.
    """
    k = np.arange(n, dtype=float)
    alpha = np.zeros(n)
    if family == "uniform":
        beta = np.where(k == 0, 1.0, k**2 / np.maximum(4.0 * k**2 - 1.0, 1.0))
    elif family == "gaussian":
        beta = np.where(k == 0, 1.0, k)
    else:
        raise ConfigurationError(f"unsupported distribution family {family!r}")
    return alpha, beta


def _standard_values(family: str, degree: int, t: np.ndarray) -> np.ndarray:
    """Rows ``phi_0(t) .. phi_degree(t)`` in classical normalization."""
    t = np.asarray(t, dtype=float)
    out = np.empty((degree + 1,) + t.shape)
    out[0] = 1.0
    if degree >= 1:
        out[1] = t
    for k in range(1, degree):
        if family == "uniform":
            out[k + 1] = ((2 * k + 1) * t * out[k] - k * out[k - 1]) / (k + 1)
        else:
            out[k + 1] = t * out[k] - k * out[k - 1]
    return out


def _standard_norms(family: str, degree: int) -> np.ndarray:
    i = np.arange(degree + 1)
    if family == "uniform":
        return 1.0 / (2.0 * i + 1.0)
    return np.array([float(math.factorial(k)) for k in i])


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and probabilistic weights (weights sum to one)."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if nodes.shape != weights.shape or nodes.size == 0:
            raise ValueError("quadrature rule needs matching, non-empty node/weight arrays")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size


@dataclass(frozen=True)
class OrthoBasis:
    """Polynomial chaos basis ``phi_0 .. phi_N`` for one scalar parameter."""

    distribution: ParameterDistribution
    degree: int
    norms: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.degree + 1

    def __call__(self, delta):
        return eval_basis(self, delta)

    def to_dict(self) -> dict:
        return {"distribution": self.distribution.to_dict(), "order": self.degree}


def make_basis(distribution: ParameterDistribution, N: int) -> OrthoBasis:
    if N < 0:
        raise ValueError(f"basis degree must be nonnegative, got {N}")
    if distribution.family not in ("uniform", "gaussian"):
        raise ConfigurationError(f"unsupported distribution family {distribution.family!r}")
    norms = _standard_norms(distribution.family, N)
    norms.setflags(write=False)
    return OrthoBasis(distribution, int(N), norms)


def eval_basis(basis: OrthoBasis, delta) -> np.ndarray:
    """``[phi_0(delta), ..., phi_N(delta)]``; vectorized over trailing axes."""
    basis.distribution.check(delta)
    t = basis.distribution.to_standard(delta)
    return _standard_values(basis.distribution.family, basis.degree, t)


def _golub_welsch(family: str, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    alpha, beta = _recurrence(family, n_nodes)
    t, vecs = eigh_tridiagonal(alpha, np.sqrt(beta[1:]))
    w = beta[0] * vecs[0] ** 2
    return t, w / w.sum()


def gauss_rule(distribution: ParameterDistribution, n_nodes: int) -> QuadratureRule:
    """Gauss rule with ``n_nodes`` points whose weights are relative to the density."""
    if n_nodes < 1:
        raise ValueError(f"need at least one node, got {n_nodes}")
    t, w = _golub_welsch(distribution.family, n_nodes)
    return QuadratureRule(distribution.from_standard(t), w)


def composite_rule(
    distribution: ParameterDistribution, n_per_panel: int, breakpoints: Sequence[float] = (0.0,)
) -> QuadratureRule:
    """Gauss-Legendre panels split at ``breakpoints`` (uniform family only).

    Integrands with kinks (``|delta|``) at a breakpoint keep spectral accuracy.
    """
    if not distribution.bounded:
        return gauss_rule(distribution, n_per_panel)
    lo, hi = distribution.lo, distribution.hi
    edges = [lo] + sorted(b for b in breakpoints if lo < b < hi) + [hi]
    t, w = _golub_welsch("uniform", n_per_panel)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * t + 0.5 * (a + b))
        weights.append(w * (b - a) / (hi - lo))
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights))


def default_quadrature_order(N: int) -> int:
    return max(20, 2 * N + 10)


def default_rule(distribution: ParameterDistribution, N: int, order: int | None = None) -> QuadratureRule:
    """Rule used for tensor assembly: split at zero when zero is interior."""
    order = default_quadrature_order(N) if order is None else order
    return composite_rule(distribution, order, (0.0,))


def expect(rule: QuadratureRule, g: Callable) -> float:
    """Quadrature expectation ``sum_k w_k g(delta_k)``."""
    vals = np.array([g(d) for d in rule.nodes], dtype=float)
    return float(np.dot(rule.weights, vals))


@dataclass(frozen=True)
class LagrangeBasis:
    """Lagrange interpolants through the roots of ``phi_{N+1}``."""

    distribution: ParameterDistribution
    nodes: np.ndarray
    node_expectations: np.ndarray

    @property
    def degree(self) -> int:
        return self.nodes.size - 1

    @property
    def size(self) -> int:
        return self.nodes.size

    def __call__(self, delta):
        return self.evaluate(delta)

    def __post_init__(self):
        gap = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(gap, 1.0)
        object.__setattr__(self, "_inv_denom", 1.0 / gap.prod(axis=1))

    def evaluate(self, delta) -> np.ndarray:
        """Rows ``l_0(delta) .. l_N(delta)``."""
        self.distribution.check(delta)
        d = np.asarray(delta, dtype=float)
        x = self.nodes
        if d.ndim == 0:
            # scalar hot path (gain scheduling): first barycentric form
            diff = float(d) - x
            hit = np.flatnonzero(diff == 0.0)
            if hit.size:
                out = np.zeros(x.size)
                out[hit[0]] = 1.0
                return out
            return self._inv_denom * (diff.prod() / diff)
        out = np.ones((x.size,) + d.shape)
        for i in range(x.size):
            for j in range(x.size):
                if j != i:
                    out[i] = out[i] * (d - x[j]) / (x[i] - x[j])
        return out

    def to_dict(self) -> dict:
        return {"distribution": self.distribution.to_dict(), "order": self.degree}


def make_lagrange(basis: OrthoBasis) -> LagrangeBasis:
    rule = gauss_rule(basis.distribution, basis.degree + 1)
    nodes = np.array(rule.nodes)
    if np.any(~np.isfinite(nodes)) or np.unique(nodes).size != nodes.size:
        raise ArithmeticError("root finding for the Lagrange nodes failed")
    nodes.setflags(write=False)
    return LagrangeBasis(basis.distribution, nodes, rule.weights)


def lemma1_check(lagrange: LagrangeBasis, g: Callable, i: int, j: int) -> float:
    """``E[l_i l_j g]`` by a Gauss rule exact for the product when ``g`` is affine."""
    rule = gauss_rule(lagrange.distribution, lagrange.size + 2)
    l = lagrange.evaluate(rule.nodes)
    g_vals = np.array([g(d) for d in rule.nodes], dtype=float)
    return float(np.sum(rule.weights * l[i] * l[j] * g_vals))
