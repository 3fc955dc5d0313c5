"""Uncertain linear systems and the quasi-LPV pitch-axis missile model."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np

from .orthopoly import ParameterDistribution

__all__ = [
    "UncertainLinearSystem",
    "MissileConfig",
    "CostWeights",
    "aero_coeffs",
    "missile_dynamics",
    "missile_quasi_lpv",
    "linearize_origin",
    "constant_system",
]


@dataclass(frozen=True)
class UncertainLinearSystem:
    """``xdot = A(delta) x + B(delta) u`` with ``delta`` drawn from ``distribution``."""

    n: int
    m: int
    A: Callable[[float], np.ndarray]
    B: Callable[[float], np.ndarray]
    distribution: ParameterDistribution

    def evaluate(self, delta: float) -> tuple[np.ndarray, np.ndarray]:
        a = np.asarray(self.A(delta), dtype=float).reshape(self.n, self.n)
        b = np.asarray(self.B(delta), dtype=float).reshape(self.n, self.m)
        return a, b


def constant_system(A, B, distribution: ParameterDistribution) -> UncertainLinearSystem:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    return UncertainLinearSystem(A.shape[0], B.shape[1], lambda d: A, lambda d: B, distribution)


@dataclass(frozen=True)
class MissileConfig:
    """Aerodynamic and mass data of the pitch-axis missile.

    Angles are in degrees throughout; coefficients are per-degree powers.
    """

    mach: float
    K_alpha: float
    K_q: float
    a_n: float
    b_n: float
    c_n: float
    d_n: float
    a_m: float
    b_m: float
    c_m: float
    d_m: float
    alpha_range: tuple[float, float] = (-20.0, 20.0)

    @classmethod
    def from_dict(cls, model: dict, alpha_range=(-20.0, 20.0)) -> "MissileConfig":
        keys = ("mach", "K_alpha", "K_q", "a_n", "b_n", "c_n", "d_n", "a_m", "b_m", "c_m", "d_m")
        return cls(**{k: float(model[k]) for k in keys}, alpha_range=tuple(float(v) for v in alpha_range))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("alpha_range")
        return d

    @property
    def normal_trim(self) -> float:
        return self.c_n * (2.0 - self.mach / 3.0)

    @property
    def moment_trim(self) -> float:
        return self.c_m * (-7.0 + 8.0 * self.mach / 3.0)


@dataclass(frozen=True)
class CostWeights:
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if not np.allclose(Q, Q.T) or not np.allclose(R, R.T):
            raise ValueError("cost weights must be symmetric")
        if np.linalg.eigvalsh(Q).min() < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0:
            raise ValueError("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)


def aero_coeffs(config: MissileConfig, alpha, delta_fin):
    """Normal-force and pitching-moment coefficients ``(C_n, C_m)``."""
    alpha = np.asarray(alpha, dtype=float)
    a = np.abs(alpha)
    c_n = alpha * (config.a_n * a**2 + config.b_n * a + config.normal_trim) + config.d_n * delta_fin
    c_m = alpha * (config.a_m * a**2 + config.b_m * a + config.moment_trim) + config.d_m * delta_fin
    return c_n, c_m


def missile_dynamics(config: MissileConfig, x, delta_fin) -> np.ndarray:
    """Nonlinear right-hand side ``(alpha_dot, q_dot)`` in deg/s and deg/s^2."""
    alpha, q = x[0], x[1]
    c_n, c_m = aero_coeffs(config, alpha, delta_fin)
    M = config.mach
    return np.array(
        [config.K_alpha * M * c_n * np.cos(np.radians(alpha)) + q, config.K_q * M**2 * c_m]
    )


def missile_quasi_lpv(config: MissileConfig) -> UncertainLinearSystem:
    """Exact quasi-LPV rewrite with the angle of attack as scheduling parameter."""
    M = config.mach
    ka = config.K_alpha * M
    kq = config.K_q * M**2

    def A(rho):
        r = abs(rho)
        return np.array(
            [
                [ka * (config.a_n * r**2 + config.b_n * r + config.normal_trim) * np.cos(np.radians(rho)), 1.0],
                [kq * (config.a_m * r**2 + config.b_m * r + config.moment_trim), 0.0],
            ]
        )

    def B(rho):
        return np.array([[ka * config.d_n * np.cos(np.radians(rho))], [kq * config.d_m]])

    lo, hi = config.alpha_range
    return UncertainLinearSystem(2, 1, A, B, ParameterDistribution.uniform(lo, hi))


def linearize_origin(config: MissileConfig) -> tuple[np.ndarray, np.ndarray]:
    system = missile_quasi_lpv(config)
    return system.evaluate(0.0)
