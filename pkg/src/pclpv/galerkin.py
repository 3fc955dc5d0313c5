"""Kronecker utilities, Galerkin-projected dynamics and the expectation tensors
of the Galerkin LMI."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .orthopoly import OrthoBasis, QuadratureRule, eval_basis
from .plant import UncertainLinearSystem

__all__ = [
    "KronIndex",
    "PsiOrdering",
    "GalerkinTensors",
    "TensorError",
    "lift",
    "kron_identity_check",
    "gram",
    "project_dynamics",
    "psd_sqrt",
    "build_tensors",
]

CLAMP_TOL = 1e-10
ABORT_TOL = 1e-8


class TensorError(ArithmeticError):
    """An expectation tensor that should be PSD has a clearly negative eigenvalue."""


@dataclass(frozen=True)
class KronIndex:
    N: int
    n: int
    m: int

    def __post_init__(self):
        if self.N < 0 or self.n < 1 or self.m < 1:
            raise ValueError(f"invalid dimensions {self}")

    @property
    def terms(self) -> int:
        return self.N + 1


def lift(v, k: int) -> np.ndarray:
    """``v`` (vector or column) Kronecker-multiplied with ``I_k``."""
    v = np.asarray(v, dtype=float).reshape(-1, 1)
    return np.kron(v, np.eye(k))


@dataclass(frozen=True)
class PsiOrdering:
    """Enumeration of the distinct blocks ``Ybar_ij`` (i >= j).

    Column-major over the lower triangle: ``(0,0), (1,0), ..., (N,0), (1,1),
    ..., (N,N-1), (N,N)``. Off-diagonal pairs carry a factor 2 in ``psi``.
    """

    N: int
    pairs: tuple = field(init=False)
    scale: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pairs = tuple((i, j) for j in range(self.N + 1) for i in range(j, self.N + 1))
        scale = np.array([1.0 if i == j else 2.0 for i, j in pairs])
        scale.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "scale", scale)

    def __len__(self) -> int:
        return len(self.pairs)

    @cached_property
    def position(self) -> dict:
        pos = {}
        for k, (i, j) in enumerate(self.pairs):
            pos[(i, j)] = k
            pos[(j, i)] = k
        return pos

    def psi(self, phi: np.ndarray) -> np.ndarray:
        """``psi`` from the basis values ``phi``."""
        phi = np.asarray(phi, dtype=float)
        i = np.array([p[0] for p in self.pairs])
        j = np.array([p[1] for p in self.pairs])
        return self.scale * phi[i] * phi[j]

    def reconstruct(self, blocks, phi) -> np.ndarray:
        """``sum_k psi_k Ybar_k`` for blocks listed in this ordering."""
        psi = self.psi(phi)
        return np.tensordot(psi, np.asarray(blocks, dtype=float), axes=1)


def kron_identity_check(M, v, tol: float = 1e-12) -> bool:
    """Check ``M (v^T kron I_n) == (v^T kron I_m)(I_{N+1} kron M)``."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    v = np.asarray(v, dtype=float).ravel()
    m, n = M.shape
    lhs = M @ np.kron(v[None, :], np.eye(n))
    rhs = np.kron(v[None, :], np.eye(m)) @ np.kron(np.eye(v.size), M)
    scale = max(1.0, np.abs(M).max() * max(1.0, np.abs(v).max()))
    return bool(np.max(np.abs(lhs - rhs), initial=0.0) <= tol * scale)


def gram(basis: OrthoBasis, n: int) -> np.ndarray:
    """``E[Phi_n Phi_n^T]``, block diagonal by orthogonality."""
    return np.kron(np.diag(basis.norms), np.eye(n))


def project_dynamics(system: UncertainLinearSystem, basis: OrthoBasis, rule: QuadratureRule, gain=None) -> np.ndarray:
    """Galerkin system matrix ``A_pc = E[Phi_n Phi_n^T]^-1 E[Phi_n A_cl Phi_n^T]``.

    ``gain`` (anything with ``evaluate(delta)``) closes the loop; otherwise the
    open-loop ``A(delta)`` is projected.
    """
    n = system.n
    acc = np.zeros((n * basis.size, n * basis.size))
    for d, w in zip(rule.nodes, rule.weights):
        a, b = system.evaluate(d)
        if gain is not None:
            a = a + b @ gain.evaluate(d)
        Pn = lift(eval_basis(basis, d), n)
        acc += w * (Pn @ a @ Pn.T)
    inv_norms = np.repeat(1.0 / basis.norms, n)
    return inv_norms[:, None] * acc


def psd_sqrt(M: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Principal square root of a symmetric PSD matrix with eigenvalue clamping."""
    M = 0.5 * (M + M.T)
    lam, U = np.linalg.eigh(M)
    scale = max(1.0, float(np.abs(lam).max(initial=0.0)))
    if lam.size and lam.min() < -ABORT_TOL * scale:
        raise TensorError(f"{name} has eigenvalue {lam.min():.3e}; not PSD")
    lam = np.where(lam < 0.0, 0.0, lam)
    S = (U * np.sqrt(lam)) @ U.T
    return 0.5 * (S + S.T)


@dataclass(frozen=True)
class GalerkinTensors:
    dims: KronIndex
    ordering: PsiOrdering
    gram: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    M3: np.ndarray
    M4: np.ndarray
    sqrtM3: np.ndarray
    sqrtM4: np.ndarray


def build_tensors(
    system: UncertainLinearSystem, basis: OrthoBasis, Q, R, rule: QuadratureRule
) -> GalerkinTensors:
    """Assemble M1..M4 by quadrature over the parameter."""
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if not np.allclose(R, R.T) or np.linalg.eigvalsh(R).min() <= 0:
        raise ValueError("R must be symmetric positive definite")
    if not np.allclose(Q, Q.T):
        raise ValueError("Q must be symmetric")
    n, m, N = system.n, system.m, basis.degree
    dims = KronIndex(N, n, m)
    ordering = PsiOrdering(N)
    L = len(ordering)
    eye_terms = np.eye(N + 1)

    M1 = np.zeros(((N + 1) * n * L, (N + 1) * n))
    M2 = np.zeros(((N + 1) ** 2 * m, (N + 1) * n))
    M3 = np.zeros(((N + 1) * n * L,) * 2)
    M4 = np.zeros(((N + 1) ** 2 * m,) * 2)
    for d, w in zip(rule.nodes, rule.weights):
        a, b = system.evaluate(d)
        phi = eval_basis(basis, d)
        Pn, Pm = lift(phi, n), lift(phi, m)
        Gn = np.kron(eye_terms, lift(ordering.psi(phi), n)) @ Pn
        Gm = np.kron(eye_terms, Pm) @ Pm
        M1 += w * (Gn @ a.T @ Pn.T)
        M2 += w * (Gm @ b.T @ Pn.T)
        M3 += w * (Gn @ Q @ Gn.T)
        M4 += w * (Gm @ R @ Gm.T)
    M3 = 0.5 * (M3 + M3.T)
    M4 = 0.5 * (M4 + M4.T)
    return GalerkinTensors(
        dims=dims,
        ordering=ordering,
        gram=gram(basis, n),
        M1=M1,
        M2=M2,
        M3=M3,
        M4=M4,
        sqrtM3=psd_sqrt(M3, "M3"),
        sqrtM4=psd_sqrt(M4, "M4"),
    )
