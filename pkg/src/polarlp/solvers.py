"""LP solvers behind a common vertex-returning contract.

``SimplexSolver`` is the default: a dense bounded-variable revised simplex
with Dantzig pricing, falling back to Bland's rule after a degenerate stall,
with periodic basis refactorization.  ``ExactSimplexSolver`` re-solves tiny
programs in exact rational arithmetic and serves as a test oracle.
``HighsSolver`` delegates to scipy's HiGHS dual simplex for large instances;
all three return an optimal basic feasible solution, so callers may rely on
the optimal value and feasibility but not on which optimal vertex comes back.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .lp import TAU_FEAS, LinearProgram, LpSolution

_BASIC, _AT_LOWER, _AT_UPPER, _FREE = 0, 1, 2, 3

_TOL_DUAL = 1e-9
_TOL_PIVOT = 1e-10
_TOL_TIE = 1e-9
_STALL_LIMIT = 50
_REFACTOR_EVERY = 128


class SimplexError(RuntimeError):
    """Unrecoverable numerical failure inside the simplex."""


class _Presolved:
    """Rows after substituting fixed variables and folding singleton rows
    into bounds.  Keeps the map back to original variable indices."""

    def __init__(self, lp: LinearProgram) -> None:
        self.infeasible = False
        n = lp.num_vars
        lower = lp.lower.astype(float).copy()
        upper = lp.upper.astype(float).copy()
        rows = [
            [dict(c.coefficients), float(c.bound), c.sense == "="]
            for c in lp.constraints
        ]
        fixed = np.zeros(n, dtype=bool)
        value = np.zeros(n)

        def fix(j: int, val: float) -> bool:
            if val < lower[j] - TAU_FEAS or val > upper[j] + TAU_FEAS:
                return False
            fixed[j] = True
            value[j] = val
            return True

        changed = True
        while changed and not self.infeasible:
            changed = False
            newly = np.nonzero(~fixed & (upper - lower <= 1e-12))[0]
            for j in newly:
                if not fix(j, 0.5 * (lower[j] + upper[j])):
                    self.infeasible = True
                changed = True
            if np.any(lower > upper + TAU_FEAS):
                self.infeasible = True
                break
            keep = []
            for coeffs, bound, is_eq in rows:
                for j in [j for j in coeffs if fixed[j]]:
                    bound -= coeffs.pop(j) * value[j]
                    changed = True
                if not coeffs:
                    bad = abs(bound) > TAU_FEAS if is_eq else bound < -TAU_FEAS
                    if bad:
                        self.infeasible = True
                    changed = True
                    continue
                if len(coeffs) == 1:
                    ((j, w),) = coeffs.items()
                    target = bound / w
                    if is_eq:
                        if not fix(j, target):
                            self.infeasible = True
                    elif w > 0:
                        upper[j] = min(upper[j], target)
                    else:
                        lower[j] = max(lower[j], target)
                    changed = True
                    continue
                keep.append([coeffs, bound, is_eq])
            rows = keep

        self.fixed = fixed
        self.value = value
        self.cols = np.nonzero(~fixed)[0]
        self.col_pos = {int(j): k for k, j in enumerate(self.cols)}
        self.lower = lower[self.cols]
        self.upper = upper[self.cols]
        self.rows = rows

    def matrix(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m, n = len(self.rows), len(self.cols)
        a = np.zeros((m, n))
        b = np.zeros(m)
        eq = np.zeros(m, dtype=bool)
        for i, (coeffs, bound, is_eq) in enumerate(self.rows):
            for j, w in coeffs.items():
                a[i, self.col_pos[j]] = w
            b[i] = bound
            eq[i] = is_eq
        return a, b, eq

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        full = self.value.copy()
        full[self.cols] = x_free
        return full


def _bound_value(status: int, lo: float, hi: float) -> float:
    if status == _AT_LOWER:
        return lo
    if status == _AT_UPPER:
        return hi
    return 0.0


class SimplexSolver:
    """Dense bounded-variable revised simplex returning vertex solutions."""

    name = "simplex"

    def __init__(self, tol_feas: float = TAU_FEAS, max_iterations: int | None = None):
        self.tol_feas = tol_feas
        self.max_iterations = max_iterations

    def solve(self, lp: LinearProgram) -> LpSolution:
        pre = _Presolved(lp)
        if pre.infeasible:
            return LpSolution("infeasible")
        if not pre.rows:
            return self._bounds_only(lp, pre)
        a, b, eq = pre.matrix()
        m, n = a.shape
        c_struct = lp.objective[pre.cols]

        ncols = n + m
        a_ext = np.hstack([a, np.eye(m)])
        lo = np.concatenate([pre.lower, np.zeros(m)])
        hi = np.concatenate([pre.upper, np.where(eq, 0.0, np.inf)])

        status = np.empty(ncols, dtype=np.int8)
        for j in range(n):
            if np.isfinite(lo[j]):
                status[j] = _AT_LOWER
            elif np.isfinite(hi[j]):
                status[j] = _AT_UPPER
            else:
                status[j] = _FREE
        status[n:] = _BASIC
        basis = np.arange(n, ncols)

        xn = self._nonbasic_values(status, lo, hi)
        beta = b - a_ext @ xn
        binv = np.eye(m)

        it_cap = self.max_iterations or max(20000, 200 * (m + n))
        total_iters = 0

        bad = (beta < lo[basis] - self.tol_feas) | (beta > hi[basis] + self.tol_feas)
        if np.any(bad):
            # Phase 1: artificial columns absorb infeasible residuals.
            bad_rows = np.nonzero(bad)[0]
            n_art = len(bad_rows)
            art = np.zeros((m, n_art))
            status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
            for k, i in enumerate(bad_rows):
                old = basis[i]
                # The slack leaves to its violated bound; the artificial,
                # signed to come out nonnegative, takes its basis slot.
                if beta[i] < lo[old]:
                    status[old] = _AT_LOWER
                    resid = beta[i] - lo[old]
                else:
                    status[old] = _AT_UPPER
                    resid = beta[i] - hi[old]
                art[i, k] = 1.0 if resid > 0 else -1.0
                basis[i] = ncols + k
            a_ext = np.hstack([a_ext, art])
            lo = np.concatenate([lo, np.zeros(n_art)])
            hi = np.concatenate([hi, np.full(n_art, np.inf)])
            ncols += n_art
            binv = self._refactor(a_ext, basis)

            c1 = np.zeros(ncols)
            c1[ncols - n_art :] = 1.0
            code, iters = self._iterate(
                a_ext, b, c1, lo, hi, basis, binv, status, it_cap
            )
            total_iters += iters
            if code != "optimal":
                return LpSolution(code, iterations=total_iters)
            x_all = self._all_values(a_ext, b, basis, binv, status, lo, hi)
            if float(c1 @ x_all) > 1e-6:
                return LpSolution("infeasible", iterations=total_iters)
            hi[ncols - n_art :] = 0.0  # artificials may never re-enter
            lo[ncols - n_art :] = 0.0

        c_full = np.zeros(ncols)
        c_full[:n] = c_struct
        code, iters = self._iterate(
            a_ext, b, c_full, lo, hi, basis, binv, status, it_cap
        )
        total_iters += iters
        if code != "optimal":
            return LpSolution(code, iterations=total_iters)

        x_all = self._all_values(a_ext, b, basis, binv, status, lo, hi)
        x = pre.expand(x_all[:n])
        self._verify(lp, x)
        return LpSolution(
            "optimal",
            point=x,
            objective_value=float(lp.objective @ x),
            iterations=total_iters,
        )

    # -- pieces --------------------------------------------------------------

    @staticmethod
    def _nonbasic_values(status, lo, hi) -> np.ndarray:
        # Basic and free slots fall through to 0; an infinite bound is never
        # selected because statuses are only assigned toward finite bounds.
        return np.where(status == _AT_LOWER, lo, np.where(status == _AT_UPPER, hi, 0.0))

    def _nonbasic_residual(self, a_ext, basis, status, lo, hi) -> np.ndarray:
        xn = self._nonbasic_values(status, lo, hi)
        xn[basis] = 0.0
        return a_ext @ xn

    def _all_values(self, a_ext, b, basis, binv, status, lo, hi) -> np.ndarray:
        x = self._nonbasic_values(status, lo, hi)
        x[basis] = 0.0
        x[basis] = binv @ (b - a_ext @ x)
        return x

    def _verify(self, lp: LinearProgram, x: np.ndarray) -> None:
        tol = 10 * self.tol_feas
        if np.any(x < lp.lower - tol) or np.any(x > lp.upper + tol):
            raise SimplexError("solution violates variable bounds")
        for c in lp.constraints:
            if c.violation(x) > tol:
                raise SimplexError(f"solution violates constraint by {c.violation(x):.2e}")

    def _iterate(self, a_ext, b, c, lo, hi, basis, binv, status, it_cap):
        m = len(basis)
        fixed = hi - lo <= 1e-14
        bland = False
        stall = 0
        since_refactor = 0
        verify_rounds = 0
        beta = binv @ (b - self._nonbasic_residual(a_ext, basis, status, lo, hi))

        for it in range(it_cap):
            y = c[basis] @ binv
            d = c - y @ a_ext
            viol = np.where(
                status == _AT_LOWER,
                -d,
                np.where(
                    status == _AT_UPPER, d, np.where(status == _FREE, np.abs(d), -np.inf)
                ),
            )
            viol[status == _BASIC] = -np.inf
            viol[fixed] = -np.inf

            if bland:
                cand = np.nonzero(viol > _TOL_DUAL)[0]
                e = int(cand[0]) if cand.size else -1
            else:
                e = int(np.argmax(viol))
                if viol[e] <= _TOL_DUAL:
                    e = -1
            if e < 0:
                # Recompute from scratch before accepting optimality.
                binv[:] = self._refactor(a_ext, basis)
                beta = binv @ (b - self._nonbasic_residual(a_ext, basis, status, lo, hi))
                verify_rounds += 1
                y = c[basis] @ binv
                d = c - y @ a_ext
                viol = np.where(
                    status == _AT_LOWER,
                    -d,
                    np.where(
                        status == _AT_UPPER,
                        d,
                        np.where(status == _FREE, np.abs(d), -np.inf),
                    ),
                )
                viol[status == _BASIC] = -np.inf
                viol[fixed] = -np.inf
                if np.max(viol, initial=-np.inf) <= _TOL_DUAL or verify_rounds > 3:
                    return "optimal", it
                continue

            sigma = 1.0
            if status[e] == _AT_UPPER:
                sigma = -1.0
            elif status[e] == _FREE:
                sigma = -np.sign(d[e]) or 1.0

            w = binv @ a_ext[:, e]
            delta = sigma * w

            lbas = lo[basis]
            ubas = hi[basis]
            t_rows = np.full(m, np.inf)
            pos = delta > _TOL_PIVOT
            neg = delta < -_TOL_PIVOT
            with np.errstate(invalid="ignore"):
                t_rows[pos] = (beta[pos] - lbas[pos]) / delta[pos]
                t_rows[neg] = (beta[neg] - ubas[neg]) / delta[neg]
            t_rows[np.isnan(t_rows)] = np.inf
            np.clip(t_rows, 0.0, None, out=t_rows)

            span = hi[e] - lo[e]
            t_min_rows = float(t_rows.min(initial=np.inf))
            t = min(t_min_rows, span)
            if not np.isfinite(t):
                return "unbounded", it

            if np.isfinite(span) and span <= t_min_rows:
                # Bound flip: the entering variable crosses to its other bound.
                beta -= delta * span
                status[e] = _AT_UPPER if status[e] == _AT_LOWER else _AT_LOWER
                stall = 0
                bland = False
                continue

            ties = np.nonzero(t_rows <= t + _TOL_TIE)[0]
            if bland:
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(delta[ties]))])

            x_e_new = _bound_value(status[e], lo[e], hi[e]) + sigma * t
            leave = basis[r]
            status[leave] = _AT_LOWER if delta[r] > 0 else _AT_UPPER
            beta -= delta * t
            basis[r] = e
            status[e] = _BASIC
            beta[r] = x_e_new

            piv = w[r]
            if abs(piv) < _TOL_PIVOT:
                raise SimplexError("vanishing pivot element")
            binv_r = binv[r] / piv
            binv -= np.outer(w, binv_r)
            binv[r] = binv_r

            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                binv[:] = self._refactor(a_ext, basis)
                beta = binv @ (
                    b - self._nonbasic_residual(a_ext, basis, status, lo, hi)
                )
                since_refactor = 0

            if t <= 1e-12:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
            else:
                stall = 0
                bland = False
        return "iteration_limit", it_cap

    @staticmethod
    def _refactor(a_ext, basis) -> np.ndarray:
        try:
            return np.linalg.inv(a_ext[:, basis])
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis during refactorization") from exc

    def _bounds_only(self, lp: LinearProgram, pre: _Presolved) -> LpSolution:
        c = lp.objective[pre.cols]
        x = np.zeros(len(pre.cols))
        for j in range(len(pre.cols)):
            if c[j] > 0:
                if not np.isfinite(pre.lower[j]):
                    return LpSolution("unbounded")
                x[j] = pre.lower[j]
            elif c[j] < 0:
                if not np.isfinite(pre.upper[j]):
                    return LpSolution("unbounded")
                x[j] = pre.upper[j]
            else:
                if np.isfinite(pre.lower[j]):
                    x[j] = pre.lower[j]
                elif np.isfinite(pre.upper[j]):
                    x[j] = pre.upper[j]
        full = pre.expand(x)
        return LpSolution("optimal", point=full, objective_value=float(lp.objective @ full))


class ExactSimplexSolver:
    """Rational-arithmetic tableau simplex with Bland's rule.

    Requires finite bounds; intended as an oracle for tiny programs, so no
    attention is paid to speed.
    """

    name = "exact"

    def solve(self, lp: LinearProgram) -> LpSolution:
        if not (np.all(np.isfinite(lp.lower)) and np.all(np.isfinite(lp.upper))):
            raise ValueError("exact solver requires finite bounds")
        n = lp.num_vars
        lo = [Fraction(float(v)) for v in lp.lower]
        hi = [Fraction(float(v)) for v in lp.upper]
        c = [Fraction(float(v)) for v in lp.objective]

        # Shift to y = x - lo >= 0 and express everything as G y <= h.
        rows: list[tuple[list[Fraction], Fraction]] = []
        for cons in lp.constraints:
            g = [Fraction(0)] * n
            shift = Fraction(0)
            for j, w in cons.coefficients:
                g[j] = Fraction(float(w))
                shift += g[j] * lo[j]
            rhs = Fraction(float(cons.bound)) - shift
            rows.append((g, rhs))
            if cons.sense == "=":
                rows.append(([-v for v in g], -rhs))
        for j in range(n):
            span = hi[j] - lo[j]
            g = [Fraction(0)] * n
            g[j] = Fraction(1)
            rows.append((g, span))

        point = self._solve_standard(c, rows, n)
        if point is None:
            return LpSolution("infeasible")
        x = np.array([float(lo[j] + point[j]) for j in range(n)])
        return LpSolution("optimal", point=x, objective_value=float(lp.objective @ x))

    def _solve_standard(self, c, rows, n):
        # min c y  s.t.  G y <= h, y >= 0, via a dense two-phase tableau.
        m = len(rows)
        n_art = sum(1 for _, h in rows if h < 0)
        width = n + m + n_art + 1
        t = [[Fraction(0)] * width for _ in range(m)]
        basis = [0] * m
        art_cols = []
        k = 0
        for i, (g, h) in enumerate(rows):
            neg = h < 0
            sgn = -1 if neg else 1
            for j in range(n):
                t[i][j] = sgn * g[j]
            t[i][n + i] = Fraction(sgn)
            t[i][-1] = sgn * h
            if neg:
                col = n + m + k
                t[i][col] = Fraction(1)
                basis[i] = col
                art_cols.append(col)
                k += 1
            else:
                basis[i] = n + i

        allowed = set(range(n + m))
        if art_cols:
            obj = [Fraction(0)] * width
            for col in art_cols:
                obj[col] = Fraction(1)
            obj = self._price_out(obj, t, basis)
            if not self._pivot_loop(obj, t, basis, set(range(width - 1))):
                return None
            if -obj[-1] != 0:
                return None
            # Degenerate-pivot leftover artificials out of the basis so they
            # cannot drift positive in phase 2; an all-zero row is redundant
            # and pins its artificial at 0 regardless.
            art_set = set(art_cols)
            for i in range(m):
                if basis[i] in art_set:
                    col = next((j for j in range(n + m) if t[i][j] != 0), None)
                    if col is not None:
                        self._pivot(t, basis, i, col)

        obj = [Fraction(0)] * width
        for j in range(n):
            obj[j] = c[j]
        obj = self._price_out(obj, t, basis)
        if not self._pivot_loop(obj, t, basis, allowed):
            raise SimplexError("exact solver: unbounded program")
        y = [Fraction(0)] * n
        for i, b in enumerate(basis):
            if b < n:
                y[b] = t[i][-1]
        return y

    @staticmethod
    def _price_out(obj, t, basis):
        out = list(obj)
        for i, b in enumerate(basis):
            coef = out[b]
            if coef != 0:
                row = t[i]
                for j in range(len(out)):
                    out[j] -= coef * row[j]
        return out

    @staticmethod
    def _pivot(t, basis, r, e, obj=None) -> None:
        piv = t[r][e]
        t[r] = [v / piv for v in t[r]]
        for i in range(len(t)):
            if i != r and t[i][e] != 0:
                f = t[i][e]
                t[i] = [a - f * b for a, b in zip(t[i], t[r])]
        if obj is not None and obj[e] != 0:
            f = obj[e]
            obj[:] = [a - f * b for a, b in zip(obj, t[r])]
        basis[r] = e

    @classmethod
    def _pivot_loop(cls, obj, t, basis, allowed) -> bool:
        m = len(t)
        width = len(obj)
        while True:
            e = next(
                (j for j in range(width - 1) if j in allowed and obj[j] < 0), None
            )
            if e is None:
                return True
            best = None
            for i in range(m):
                if t[i][e] > 0:
                    ratio = t[i][-1] / t[i][e]
                    if best is None or ratio < best[0] or (
                        ratio == best[0] and basis[i] < basis[best[1]]
                    ):
                        best = (ratio, i)
            if best is None:
                return False
            cls._pivot(t, basis, best[1], e, obj)


class HighsSolver:
    """scipy/HiGHS dual simplex backend for large programs."""

    name = "highs"

    def __init__(self, tolerance: float = 1e-9):
        self.tolerance = tolerance

    def solve(self, lp: LinearProgram) -> LpSolution:
        from scipy.optimize import linprog

        n = lp.num_vars
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for c in lp.constraints:
            row = np.zeros(n)
            for j, w in c.coefficients:
                row[j] = w
            if c.sense == "=":
                a_eq.append(row)
                b_eq.append(c.bound)
            else:
                a_ub.append(row)
                b_ub.append(c.bound)
        res = linprog(
            lp.objective,
            A_ub=np.array(a_ub) if a_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(a_eq) if a_eq else None,
            b_eq=np.array(b_eq) if b_eq else None,
            bounds=list(zip(lp.lower, lp.upper)),
            method="highs-ds",
            options={
                "primal_feasibility_tolerance": self.tolerance,
                "dual_feasibility_tolerance": self.tolerance,
            },
        )
        status = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}.get(
            res.status, "iteration_limit"
        )
        if status != "optimal":
            return LpSolution(status, iterations=int(res.nit or 0))
        return LpSolution(
            "optimal",
            point=np.asarray(res.x, dtype=float),
            objective_value=float(res.fun),
            iterations=int(res.nit or 0),
        )


_SOLVERS = {
    "simplex": SimplexSolver,
    "exact": ExactSimplexSolver,
    "highs": HighsSolver,
}
_default_solver = SimplexSolver()


def get_solver(spec):
    """Resolve a solver name or pass an instance through."""
    if spec is None:
        return _default_solver
    if isinstance(spec, str):
        try:
            return _SOLVERS[spec]()
        except KeyError:
            raise ValueError(f"unknown solver {spec!r}; choose from {sorted(_SOLVERS)}")
    return spec


def lp_solve(lp: LinearProgram, solver=None) -> LpSolution:
    """Solve with the given backend (default: the built-in simplex)."""
    return get_solver(solver).solve(lp)
