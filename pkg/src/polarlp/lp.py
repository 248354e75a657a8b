"""Linear programs for decoding: constraint generation, the plain LP decoder
of the factor-graph polytope, and channel LLR mapping.

Every parity check of degree d contributes the 2^(d-1) odd-subset
inequalities

    sum_{i in V} x_i - sum_{i in S\\V} x_i <= |V| - 1,   V subset of S, |V| odd,

whose intersection over all checks, together with [0,1] box bounds and the
frozen-bit equalities, is the decoding polytope.  An integral optimum of the
resulting LP restricted to the codeword coordinates is the ML codeword.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .factor_graph import FactorGraph

#: Default feasibility tolerance for LP solutions.
TAU_FEAS = 1e-7
#: Default integrality tolerance for decoded coordinates.
TAU_INT = 1e-5
#: Default threshold above which a violated constraint counts as a cut.
EPS_CUT = 1e-6

#: Degree limit for odd-subset enumeration (2^(d-1) constraints per check).
MAX_ENUM_SUPPORT = 31


@dataclass(frozen=True)
class LinearConstraint:
    """A sparse <= or = constraint: sum_i w_i x_i (sense) bound."""

    coefficients: tuple[tuple[int, float], ...]
    bound: float
    sense: str = "<="

    def __post_init__(self):
        if not self.coefficients:
            raise ValueError("constraint has no coefficients")
        idx = [i for i, _ in self.coefficients]
        if len(set(idx)) != len(idx):
            raise ValueError("constraint has repeated variable indices")
        if self.sense not in ("<=", "="):
            raise ValueError(f"unsupported sense {self.sense!r}")

    def signature(self) -> tuple:
        return (self.sense, float(self.bound), tuple(sorted(self.coefficients)))

    def evaluate(self, x: np.ndarray) -> float:
        return float(sum(w * x[i] for i, w in self.coefficients))

    def violation(self, x: np.ndarray) -> float:
        lhs = self.evaluate(x)
        return abs(lhs - self.bound) if self.sense == "=" else lhs - self.bound


class LinearProgram:
    """min objective @ x subject to constraints and per-variable bounds.

    Bounds default to the [0,1] box; callers may widen them (the
    hard-decision initial LP of the adaptive decoder uses half-open boxes).
    Constraints are deduplicated by normalized coefficient signature.
    """

    def __init__(self, num_vars: int, objective: Sequence[float] | None = None) -> None:
        self.num_vars = int(num_vars)
        self.objective = np.zeros(self.num_vars)
        if objective is not None:
            self.set_objective(objective)
        self.lower = np.zeros(self.num_vars)
        self.upper = np.ones(self.num_vars)
        self.constraints: list[LinearConstraint] = []
        self._signatures: set[tuple] = set()

    def set_objective(self, objective: Sequence[float]) -> None:
        obj = np.asarray(objective, dtype=float)
        if obj.shape != (self.num_vars,):
            raise ValueError(f"objective shape {obj.shape} != ({self.num_vars},)")
        if not np.all(np.isfinite(obj)):
            raise ValueError("objective must be finite")
        self.objective = obj.copy()

    def set_bounds(self, i: int, lo: float, hi: float) -> None:
        if lo > hi:
            raise ValueError(f"empty bound interval [{lo}, {hi}] for variable {i}")
        self.lower[i] = lo
        self.upper[i] = hi

    def add_constraint(self, c: LinearConstraint) -> bool:
        """Add unless an identical constraint is already present."""
        sig = c.signature()
        if sig in self._signatures:
            return False
        self._signatures.add(sig)
        self.constraints.append(c)
        return True

    def add_constraints(self, cs: Iterable[LinearConstraint]) -> int:
        return sum(self.add_constraint(c) for c in cs)

    def remove_constraint(self, index: int) -> LinearConstraint:
        c = self.constraints.pop(index)
        self._signatures.discard(c.signature())
        return c

    def copy(self) -> "LinearProgram":
        other = LinearProgram(self.num_vars, self.objective)
        other.lower = self.lower.copy()
        other.upper = self.upper.copy()
        other.constraints = list(self.constraints)
        other._signatures = set(self._signatures)
        return other


@dataclass
class LpSolution:
    """Solver verdict; ``point`` is a vertex of the feasible polyhedron when
    the status is optimal (which optimal vertex is returned is unspecified)."""

    status: str  # optimal | infeasible | iteration_limit | unbounded
    point: np.ndarray | None = None
    objective_value: float | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class DecodeOutcome:
    """Result of one LP-based decode.

    ``codeword_estimate`` holds hard bits when the solution was integral on
    the codeword coordinates and the fractional coordinates otherwise.
    ``ml_certificate`` implies ``integral``.
    """

    codeword_estimate: np.ndarray
    integral: bool
    ml_certificate: bool
    iterations: int = 1
    cuts_added: int = 0
    lp_solves: int = 1
    wall_time: float = 0.0
    status: str = "optimal"
    objective_value: float | None = None

    def __post_init__(self):
        if self.ml_certificate and not self.integral:
            raise ValueError("ML certificate requires an integral solution")


def forbidden_set_constraints(
    check_support: Sequence[int], limit: int = MAX_ENUM_SUPPORT
) -> list[LinearConstraint]:
    """All odd-subset inequalities of one parity check.

    Raises
    ------
    ValueError
        If the support exceeds ``limit`` (the count grows as 2^(d-1)).
    """
    support = sorted(int(i) for i in check_support)
    if not support:
        raise ValueError("empty check support")
    if len(support) > limit:
        raise ValueError(
            f"check degree {len(support)} exceeds enumeration limit {limit}"
        )
    out = []
    for r in range(1, len(support) + 1, 2):
        for v_set in combinations(support, r):
            in_v = set(v_set)
            coeffs = tuple(
                (i, 1.0 if i in in_v else -1.0) for i in support
            )
            out.append(LinearConstraint(coeffs, float(r - 1)))
    return out


def build_polytope_P(graph: FactorGraph) -> LinearProgram:
    """LP skeleton of a factor graph: odd-subset constraints for every check,
    [0,1] bounds everywhere, and x = 0 for every frozen variable.

    The objective is left at zero for the caller to fill in.
    """
    lp = LinearProgram(graph.var_count)
    for check in graph.checks:
        lp.add_constraints(forbidden_set_constraints(check))
    for v in sorted(graph.frozen_vars):
        lp.add_constraint(LinearConstraint(((v, 1.0),), 0.0, "="))
    return lp


def codeword_objective(graph: FactorGraph, llr: Sequence[float]) -> np.ndarray:
    """Objective with LLR weights on codeword variables, 0 on auxiliaries.

    Codeword bits merged into one representative accumulate their weights.
    """
    llr = np.asarray(llr, dtype=float)
    n = len(graph.codeword_vars)
    if llr.shape != (n,):
        raise ValueError(f"expected {n} llr values, got {llr.shape}")
    obj = np.zeros(graph.var_count)
    for j, v in enumerate(graph.codeword_vars):
        obj[v] += llr[j]
    return obj


def project(point: Sequence[float], var_indices: Sequence[int]) -> np.ndarray:
    """Coordinate selection in the given index order."""
    return np.asarray(point, dtype=float)[list(var_indices)]


def llr_from_channel(received: Sequence[float], noise_sigma: float) -> np.ndarray:
    """LLRs of BAWGN observations under BPSK mapping 0 -> +1, 1 -> -1."""
    if noise_sigma <= 0:
        raise ValueError(f"noise_sigma must be positive, got {noise_sigma}")
    return 2.0 * np.asarray(received, dtype=float) / (noise_sigma**2)


def decode_lp(
    graph: FactorGraph,
    llr: Sequence[float],
    solver=None,
    tau_int: float = TAU_INT,
) -> DecodeOutcome:
    """Single-shot LP decoding over the factor-graph polytope.

    The outcome is integral iff every codeword coordinate of the optimum is
    within ``tau_int`` of a bit value, in which case it carries the ML
    certificate.
    """
    from .solvers import lp_solve

    llr = np.asarray(llr, dtype=float)
    if not np.all(np.isfinite(llr)):
        raise ValueError("llr values must be finite")
    start = time.perf_counter()
    lp = build_polytope_P(graph)
    lp.set_objective(codeword_objective(graph, llr))
    sol = lp_solve(lp, solver)
    elapsed = time.perf_counter() - start
    if not sol.optimal:
        return DecodeOutcome(
            codeword_estimate=np.full(len(graph.codeword_vars), 0.5),
            integral=False,
            ml_certificate=False,
            wall_time=elapsed,
            status=sol.status,
        )
    cw = project(sol.point, graph.codeword_vars)
    integral = bool(np.all(np.abs(cw - np.round(cw)) <= tau_int))
    return DecodeOutcome(
        codeword_estimate=np.round(cw).astype(np.uint8) if integral else cw,
        integral=integral,
        ml_certificate=integral,
        wall_time=elapsed,
        objective_value=sol.objective_value,
    )


def write_lp_format(lp: LinearProgram, name: str = "polarlp") -> str:
    """Render in the CPLEX-LP interchange text format for external solvers."""

    def term(i: int, w: float, first: bool) -> str:
        sign = "-" if w < 0 else ("" if first else "+")
        mag = abs(w)
        coeff = "" if mag == 1.0 else f"{mag:.12g} "
        return f"{sign} {coeff}x{i}".strip() if not first or sign else f"{sign}{coeff}x{i}"

    lines = [f"\\ {name}", "Minimize", " obj:"]
    obj_terms = [
        term(i, w, not k)
        for k, (i, w) in enumerate(
            (i, w) for i, w in enumerate(lp.objective) if w != 0.0
        )
    ]
    lines[-1] += " " + (" ".join(obj_terms) if obj_terms else "0 x0")
    lines.append("Subject To")
    for ci, c in enumerate(lp.constraints):
        parts = [term(i, w, not k) for k, (i, w) in enumerate(c.coefficients)]
        op = "=" if c.sense == "=" else "<="
        lines.append(f" c{ci}: " + " ".join(parts) + f" {op} {c.bound:.12g}")
    lines.append("Bounds")
    for i in range(lp.num_vars):
        lo, hi = lp.lower[i], lp.upper[i]
        lo_s = "-infinity" if np.isinf(lo) else f"{lo:.12g}"
        hi_s = "+infinity" if np.isinf(hi) else f"{hi:.12g}"
        lines.append(f" {lo_s} <= x{i} <= {hi_s}")
    lines.append("End")
    return "\n".join(lines) + "\n"
