"""Solver-agnostic semidefinite programs built from affine matrix expressions.

Every constraint is stored normalized as ``F0 + sum_k x_k F_k <= 0`` (negative
semidefinite) over the scalar decision vector ``x``; the objective is a linear
functional to maximize.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Affine",
    "LmiBlock",
    "SdpProblem",
    "SdpBuilder",
    "SdpSolution",
    "SolverSettings",
    "CvxoptAdapter",
    "schur_wrap",
    "solve",
    "residual",
    "block_residuals",
    "write_sdpa",
    "read_sdpa",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "NUMERICAL_FAILURE",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical-failure"

SYM_TOL = 1e-9


class Affine:
    """Matrix ``const + sum_k x_k coef[k]`` affine in the decision vector.

    Expressions created against a growing variable list are padded with zero
    coefficients when combined.
    """

    __array_priority__ = 100

    def __init__(self, const, coef=None):
        const = np.atleast_2d(np.asarray(const, dtype=float))
        if coef is None:
            coef = np.zeros((0,) + const.shape)
        coef = np.asarray(coef, dtype=float)
        if coef.shape[1:] != const.shape:
            raise ValueError(f"coefficient shape {coef.shape} does not match constant {const.shape}")
        self.const = const
        self.coef = coef

    @property
    def shape(self) -> tuple[int, int]:
        return self.const.shape

    @property
    def nvars(self) -> int:
        return self.coef.shape[0]

    def padded(self, nvars: int) -> np.ndarray:
        if self.nvars == nvars:
            return self.coef
        out = np.zeros((nvars,) + self.shape)
        out[: self.nvars] = self.coef
        return out

    @staticmethod
    def lift(x) -> "Affine":
        return x if isinstance(x, Affine) else Affine(x)

    def __add__(self, other):
        other = Affine.lift(other)
        k = max(self.nvars, other.nvars)
        return Affine(self.const + other.const, self.padded(k) + other.padded(k))

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, -self.coef)

    def __sub__(self, other):
        return self + (-Affine.lift(other))

    def __rsub__(self, other):
        return Affine.lift(other) - self

    def __mul__(self, scalar):
        s = float(scalar)
        return Affine(s * self.const, s * self.coef)

    __rmul__ = __mul__

    def __matmul__(self, M):
        if isinstance(M, Affine):
            raise TypeError("product of two affine expressions is not affine")
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Affine(self.const @ M, self.coef @ M)

    def __rmatmul__(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return Affine(M @ self.const, M @ self.coef)

    @property
    def T(self) -> "Affine":
        return Affine(self.const.T, np.swapaxes(self.coef, 1, 2))

    def sym(self) -> "Affine":
        """``X + X^T``."""
        return self + self.T

    def trace(self) -> "Affine":
        return Affine([[np.trace(self.const)]], np.trace(self.coef, axis1=1, axis2=2)[:, None, None])

    def kron_eye(self, k: int) -> "Affine":
        """Block-diagonal ``I_k kron X``."""
        eye = np.eye(k)
        coef = np.stack([np.kron(eye, c) for c in self.coef]) if self.nvars else None
        out = Affine(np.kron(eye, self.const), coef if coef is not None else np.zeros((0, k * self.shape[0], k * self.shape[1])))
        return out

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.const + np.tensordot(x[: self.nvars], self.coef, axes=1)

    @staticmethod
    def block(rows: Sequence[Sequence]) -> "Affine":
        """Assemble like :func:`numpy.block`; plain arrays are constants."""
        items = [[Affine.lift(b) for b in row] for row in rows]
        k = max(b.nvars for row in items for b in row)
        const = np.block([[b.const for b in row] for row in items])
        coef = np.block([[b.padded(k) for b in row] for row in items]) if k else None
        return Affine(const, coef)

    @staticmethod
    def vstack(items: Sequence) -> "Affine":
        return Affine.block([[b] for b in items])

    @staticmethod
    def hstack(items: Sequence) -> "Affine":
        return Affine.block([list(items)])


@dataclass(frozen=True)
class LmiBlock:
    """``const + sum_k x_k coef[k] <= 0`` with symmetric coefficient matrices."""

    name: str
    const: np.ndarray
    coef: np.ndarray

    @property
    def size(self) -> int:
        return self.const.shape[0]

    def value(self, x) -> np.ndarray:
        return self.const + np.tensordot(np.asarray(x, dtype=float), self.coef, axes=1)


@dataclass(frozen=True)
class SdpProblem:
    variables: tuple
    objective: np.ndarray
    blocks: tuple
    offset: float = 0.0

    @property
    def nvars(self) -> int:
        return len(self.variables)

    def objective_value(self, x) -> float:
        return float(np.dot(self.objective, x) + self.offset)

    def equals(self, other: "SdpProblem") -> bool:
        """Bit-exact comparison of variables, objective and all coefficients."""
        if self.variables != other.variables or len(self.blocks) != len(other.blocks):
            return False
        if not np.array_equal(self.objective, other.objective) or self.offset != other.offset:
            return False
        for a, b in zip(self.blocks, other.blocks):
            if a.name != b.name or not np.array_equal(a.const, b.const) or not np.array_equal(a.coef, b.coef):
                return False
        return True


class SdpBuilder:
    """Incrementally declares variables and constraints, then freezes a problem."""

    def __init__(self):
        self._names: list[str] = []
        self._blocks: list[tuple[str, Affine]] = []
        self._objective: Affine | None = None

    @property
    def nvars(self) -> int:
        return len(self._names)

    def _new(self, name: str) -> int:
        if name in self._names:
            raise ValueError(f"duplicate variable name {name!r}")
        self._names.append(name)
        return len(self._names) - 1

    def scalar(self, name: str) -> Affine:
        k = self._new(name)
        coef = np.zeros((self.nvars, 1, 1))
        coef[k, 0, 0] = 1.0
        return Affine(np.zeros((1, 1)), coef)

    def matrix(self, name: str, rows: int, cols: int) -> Affine:
        idx = [[self._new(f"{name}[{r},{c}]") for c in range(cols)] for r in range(rows)]
        coef = np.zeros((self.nvars, rows, cols))
        for r in range(rows):
            for c in range(cols):
                coef[idx[r][c], r, c] = 1.0
        return Affine(np.zeros((rows, cols)), coef)

    def symmetric(self, name: str, n: int) -> Affine:
        """Symmetric matrix variable stored as its lower triangle, row by row."""
        idx = {}
        for r in range(n):
            for c in range(r + 1):
                idx[(r, c)] = self._new(f"{name}[{r},{c}]")
        coef = np.zeros((self.nvars, n, n))
        for (r, c), k in idx.items():
            coef[k, r, c] = 1.0
            coef[k, c, r] = 1.0
        return Affine(np.zeros((n, n)), coef)

    def maximize(self, expr: Affine) -> None:
        expr = Affine.lift(expr)
        if expr.shape != (1, 1):
            raise ValueError("objective must be scalar")
        self._objective = expr

    def add_lmi(self, expr: Affine, sense: str = "<=", name: str | None = None) -> None:
        """Require ``expr <= 0`` (``sense='<='``) or ``expr >= 0`` (``'>='``)."""
        expr = Affine.lift(expr)
        if expr.shape[0] != expr.shape[1]:
            raise ValueError(f"LMI block must be square, got {expr.shape}")
        if sense == ">=":
            expr = -expr
        elif sense != "<=":
            raise ValueError(f"unknown sense {sense!r}")
        self._blocks.append((name or f"lmi{len(self._blocks)}", expr))

    def build(self) -> SdpProblem:
        k = self.nvars
        blocks = []
        for name, expr in self._blocks:
            const, coef = expr.const, expr.padded(k)
            scale = max(1.0, np.abs(const).max(initial=0.0), np.abs(coef).max(initial=0.0))
            asym = max(
                np.abs(const - const.T).max(initial=0.0),
                np.abs(coef - np.swapaxes(coef, 1, 2)).max(initial=0.0),
            )
            if asym > SYM_TOL * scale:
                raise ValueError(f"LMI block {name!r} is not symmetric (asymmetry {asym:.3e})")
            const = 0.5 * (const + const.T)
            coef = 0.5 * (coef + np.swapaxes(coef, 1, 2))
            const.setflags(write=False)
            coef.setflags(write=False)
            blocks.append(LmiBlock(name, const, coef))
        if self._objective is None:
            objective, offset = np.zeros(k), 0.0
        else:
            objective = self._objective.padded(k)[:, 0, 0].copy()
            offset = float(self._objective.const[0, 0])
        objective.setflags(write=False)
        return SdpProblem(tuple(self._names), objective, tuple(blocks), offset)


def schur_wrap(M11: Affine, factors: Iterable[tuple]) -> Affine:
    """LMI block equivalent to ``M11 + sum_k B_k^T S_k^2 B_k <= 0``.

    ``factors`` holds pairs ``(B_k, S_k)`` with ``B_k`` affine and ``S_k`` a
    constant symmetric square root.
    """
    M11 = Affine.lift(M11)
    factors = [(Affine.lift(B), np.atleast_2d(np.asarray(S, dtype=float))) for B, S in factors]
    n = M11.shape[0]
    for B, S in factors:
        if B.shape[1] != n or S.shape[0] != S.shape[1] or S.shape[1] != B.shape[0]:
            raise ValueError(f"Schur factor shapes B{B.shape}, S{S.shape} incompatible with M11{M11.shape}")
    SB = [S @ B for B, S in factors]
    sizes = [s.shape[0] for s in SB]
    rows = [[M11] + [s.T for s in SB]]
    for i, s in enumerate(SB):
        row = [s]
        for j, size in enumerate(sizes):
            row.append(-np.eye(size) if i == j else np.zeros((sizes[i], size)))
        rows.append(row)
    return Affine.block(rows)


@dataclass(frozen=True)
class SolverSettings:
    """Interior-point tolerances and the deterministic retry ladder.

    The first attempt uses ``abstol``/``reltol``/``feastol``; attempts that
    end without a certificate are retried at each of ``fallback_tolerances``
    in turn.  Tolerances tighter than ``loose_start`` are only tried on
    problems with at most ``tight_max_vars`` scalar variables, where they
    converge reliably and sharpen the recovered gains.
    """

    abstol: float = 1e-10
    reltol: float = 1e-10
    feastol: float = 1e-10
    max_iters: int = 100
    refinement: int = 1
    fallback_tolerances: tuple = (1e-9, 1e-8, 1e-7, 1e-6)
    tight_max_vars: int = 32
    loose_start: float = 1e-8

    def ladder(self, nvars: int) -> list[tuple[float, float, float]]:
        steps = [(self.abstol, self.reltol, self.feastol)] + [(t, t, t) for t in self.fallback_tolerances]
        if nvars > self.tight_max_vars:
            kept = [st for st in steps if min(st) >= self.loose_start]
            steps = kept or [tuple(max(t, self.loose_start) for t in steps[0])]
        return steps


@dataclass(frozen=True)
class SdpSolution:
    status: str
    values: dict | None
    x: np.ndarray | None
    objective: float | None
    seconds: float
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.status == OPTIMAL) != (self.x is not None):
            raise ValueError("values are present iff the status is optimal")


class CvxoptAdapter:
    """Primal-dual interior-point solve with cvxopt's conic SDP solver."""

    def __init__(self, settings: SolverSettings | None = None):
        self.settings = settings or SolverSettings()

    def solve(self, problem: SdpProblem) -> SdpSolution:
        elapsed = 0.0
        result = None
        for abstol, reltol, feastol in self.settings.ladder(problem.nvars):
            result = self._solve_once(problem, abstol, reltol, feastol)
            elapsed += result.seconds
            result.info["tolerance"] = max(abstol, reltol, feastol)
            if result.status != NUMERICAL_FAILURE:
                break
        return SdpSolution(result.status, result.values, result.x, result.objective, elapsed, result.info)

    def _solve_once(self, problem: SdpProblem, abstol: float, reltol: float, feastol: float) -> SdpSolution:
        from cvxopt import matrix, solvers

        options = {
            "show_progress": False,
            "abstol": abstol,
            "reltol": reltol,
            "feastol": feastol,
            "maxiters": self.settings.max_iters,
            "refinement": self.settings.refinement,
        }
        k = problem.nvars
        c = matrix(-np.asarray(problem.objective, dtype=float))
        Gs = [matrix(b.coef.reshape(k, -1).T.copy()) for b in problem.blocks]
        hs = [matrix(-b.const) for b in problem.blocks]
        t0 = time.perf_counter()
        try:
            res = solvers.sdp(c, Gs=Gs, hs=hs, options=options)
        except (ArithmeticError, ValueError) as exc:
            return SdpSolution(NUMERICAL_FAILURE, None, None, None, time.perf_counter() - t0, {"error": str(exc)})
        seconds = time.perf_counter() - t0
        info = {
            "solver_status": res["status"],
            "iterations": res.get("iterations"),
            "gap": res.get("gap"),
            "relative_gap": res.get("relative gap"),
            "primal_infeasibility": res.get("primal infeasibility"),
            "dual_infeasibility": res.get("dual infeasibility"),
        }
        status = res["status"]
        if status == "optimal":
            x = np.array(res["x"]).ravel()
            values = dict(zip(problem.variables, x.tolist()))
            return SdpSolution(OPTIMAL, values, x, problem.objective_value(x), seconds, info)
        mapped = {"primal infeasible": INFEASIBLE, "dual infeasible": UNBOUNDED}.get(status, NUMERICAL_FAILURE)
        return SdpSolution(mapped, None, None, None, seconds, info)


def solve(problem: SdpProblem, settings: SolverSettings | None = None, adapter=None) -> SdpSolution:
    adapter = adapter or CvxoptAdapter(settings)
    return adapter.solve(problem)


def block_residuals(problem: SdpProblem, x) -> list[float]:
    return [float(np.linalg.eigvalsh(b.value(x)).max()) for b in problem.blocks]


def residual(problem: SdpProblem, solution: SdpSolution | np.ndarray) -> float:
    """Largest signed eigenvalue over all blocks; ``-inf`` without constraints."""
    x = solution.x if isinstance(solution, SdpSolution) else np.asarray(solution, dtype=float)
    if x is None:
        raise ValueError("solution carries no values")
    return max(block_residuals(problem, x), default=-math.inf)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_sdpa(problem: SdpProblem, path) -> None:
    """Write the SDPA sparse format (``.dat-s``).

    SDPA minimizes ``c^T x`` subject to ``sum_k F_k x_k - F_0 >= 0``; with
    ``F_0 = const``, ``F_k = -coef[k]`` and ``c = -objective`` this is the
    stored problem. Names and the objective offset ride along as comments.
    """
    lines = ['"pclpv semidefinite program']
    lines.append(f"* offset {_fmt(problem.offset)}")
    for i, name in enumerate(problem.variables):
        lines.append(f"* var {i + 1} {name}")
    for i, b in enumerate(problem.blocks):
        lines.append(f"* block {i + 1} {b.name}")
    lines.append(str(problem.nvars))
    lines.append(str(len(problem.blocks)))
    lines.append(" ".join(str(b.size) for b in problem.blocks) if problem.blocks else "")
    lines.append(" ".join(_fmt(-v) for v in problem.objective))
    for bi, b in enumerate(problem.blocks, start=1):
        mats = [b.const] + [-c for c in b.coef]
        for mi, F in enumerate(mats):
            rows, cols = np.nonzero(np.triu(F != 0))
            for r, c in zip(rows, cols):
                lines.append(f"{mi} {bi} {r + 1} {c + 1} {_fmt(F[r, c])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sdpa(path) -> SdpProblem:
    names, block_names, offset = {}, {}, 0.0
    data = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith('"'):
                continue
            if line.startswith("*"):
                parts = line[1:].split(maxsplit=2)
                if parts and parts[0] == "offset":
                    offset = float(parts[1])
                elif parts and parts[0] == "var":
                    names[int(parts[1])] = parts[2]
                elif parts and parts[0] == "block":
                    block_names[int(parts[1])] = parts[2]
                continue
            data.append(line)
    k = int(data[0].split()[0])
    nblocks = int(data[1].split()[0])
    sizes = [abs(int(s)) for s in data[2].replace(",", " ").split()] if nblocks else []
    objective = -np.array([float(v) for v in data[3].replace(",", " ").split()][:k])
    consts = [np.zeros((s, s)) for s in sizes]
    coefs = [np.zeros((k, s, s)) for s in sizes]
    for line in data[4:]:
        if not line:
            continue
        mi, bi, r, c, v = line.split()
        mi, bi, r, c, v = int(mi), int(bi) - 1, int(r) - 1, int(c) - 1, float(v)
        if mi == 0:
            consts[bi][r, c] = consts[bi][c, r] = v
        else:
            coefs[bi][mi - 1, r, c] = coefs[bi][mi - 1, c, r] = -v
    blocks = []
    for i in range(nblocks):
        consts[i].setflags(write=False)
        coefs[i].setflags(write=False)
        blocks.append(LmiBlock(block_names.get(i + 1, f"lmi{i}"), consts[i], coefs[i]))
    variables = tuple(names.get(i + 1, f"x{i}") for i in range(k))
    objective.setflags(write=False)
    return SdpProblem(variables, objective, tuple(blocks), offset)
