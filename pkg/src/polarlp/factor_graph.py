"""Sparse factor graphs of polar codes and their reduction.

The staged graph has m+1 columns of N variable nodes; column 0 holds the
codeword bits and column m the (bit-reversal-ordered) input bits.  Each of
the N*m check nodes realizes one stage butterfly, so every check has degree
2 or 3.  ``reduce_graph`` folds the frozen-bit information into the graph and
eliminates redundant degree-2 structure, producing a smaller graph with only
degree-3 checks that represents the same LP polytope after projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .gf2 import Gf2Matrix
from .polar import PolarCode, bit_reverse


class FactorGraph:
    """Bipartite variable/check graph with frozen and codeword markers.

    Attributes
    ----------
    var_count : int
    checks : tuple of tuples
        Sorted variable ids per check.
    codeword_vars : tuple of int, length N
        Variable id carrying each codeword bit x_0..x_{N-1}.  Distinct bits
        may share a variable after reduction merges them.
    frozen_vars : frozenset of int
        Variables pinned to 0 (empty after reduction of a sensible code).
    labels : tuple of (stage, position) or None
        Column/row tags for staged graphs; reduced graphs keep the tag of
        each surviving representative.
    merged_from : tuple of tuples
        Per variable, the ids this variable represents in the graph it was
        reduced from; identity classes for unreduced graphs.
    """

    def __init__(
        self,
        var_count: int,
        checks: Iterable[Iterable[int]],
        codeword_vars: Sequence[int],
        frozen_vars: Iterable[int] = (),
        labels: Sequence[tuple[int, int]] | None = None,
        merged_from: Sequence[Sequence[int]] | None = None,
    ) -> None:
        self.var_count = int(var_count)
        self.checks = tuple(tuple(sorted(int(v) for v in c)) for c in checks)
        self.codeword_vars = tuple(int(v) for v in codeword_vars)
        self.frozen_vars = frozenset(int(v) for v in frozen_vars)
        self.labels = None if labels is None else tuple(tuple(t) for t in labels)
        if merged_from is None:
            self.merged_from = tuple((i,) for i in range(self.var_count))
        else:
            self.merged_from = tuple(tuple(sorted(c)) for c in merged_from)
        for c in self.checks:
            for v in c:
                if not 0 <= v < self.var_count:
                    raise ValueError(f"check references unknown variable {v}")

    @property
    def check_count(self) -> int:
        return len(self.checks)

    def check_degrees(self) -> list[int]:
        return [len(c) for c in self.checks]

    def var_degrees(self) -> np.ndarray:
        deg = np.zeros(self.var_count, dtype=np.int64)
        for c in self.checks:
            for v in c:
                deg[v] += 1
        return deg

    def __repr__(self) -> str:
        return f"FactorGraph(vars={self.var_count}, checks={self.check_count})"


@dataclass(frozen=True)
class ZStructure:
    """The interlocked degree-3/degree-2 check pair of one stage butterfly."""

    deg3_check: int
    deg2_check: int
    left_top_var: int
    left_bottom_var: int
    right_top_var: int
    right_bottom_var: int


def build_sparse_graph(code: PolarCode) -> FactorGraph:
    """The staged factor graph of ``code`` with frozen markers.

    Variables are numbered column-major, v(t, y) = t*N + y for columns
    t = 0..m (column 0 = codeword bits), checks c(t, y) = t*N + y for stages
    t = 0..m-1.  The stage-t check at position y joins v(t+1, y) and v(t, y),
    plus v(t+1, y + 2^t) when bit t of y is clear, which makes exactly N/2
    degree-3 and N/2 degree-2 checks per stage.
    """
    m, n = code.m, code.N
    checks = []
    for t in range(m):
        for y in range(n):
            left = (t + 1) * n + y
            right = t * n + y
            if y & (1 << t):
                checks.append((left, right))
            else:
                checks.append((left, (t + 1) * n + y + (1 << t), right))
    frozen_u = set(code.frozen)
    frozen_vars = [m * n + y for y in range(n) if bit_reverse(y, m) in frozen_u]
    labels = [(t, y) for t in range(m + 1) for y in range(n)]
    return FactorGraph(
        var_count=n * (m + 1),
        checks=checks,
        codeword_vars=range(n),
        frozen_vars=frozen_vars,
        labels=labels,
    )


def z_structures(graph: FactorGraph, stage: int | None = None) -> list[ZStructure]:
    """Enumerate the Z-structures of a staged graph, optionally per stage."""
    n = len(graph.codeword_vars)
    m = graph.var_count // n - 1
    if graph.labels is None or graph.var_count != n * (m + 1):
        raise ValueError("Z-structures are defined on staged polar graphs")
    out = []
    stages = range(m) if stage is None else [stage]
    for t in stages:
        for y in range(n):
            if y & (1 << t):
                continue
            out.append(
                ZStructure(
                    deg3_check=t * n + y,
                    deg2_check=t * n + y + (1 << t),
                    left_top_var=(t + 1) * n + y,
                    left_bottom_var=(t + 1) * n + y + (1 << t),
                    right_top_var=t * n + y,
                    right_bottom_var=t * n + y + (1 << t),
                )
            )
    return out


def lift_codeword(code: PolarCode, u: Sequence[int]) -> np.ndarray:
    """Assignment of every staged-graph variable consistent with input ``u``.

    Column m takes u in bit-reversed order and each stage butterfly fixes the
    column to its right; the first N entries are the codeword.
    """
    u = np.asarray(u, dtype=np.uint8) & 1
    m, n = code.m, code.N
    if u.shape != (n,):
        raise ValueError(f"expected a length-{n} input vector, got {u.shape}")
    values = np.zeros(n * (m + 1), dtype=np.uint8)
    for y in range(n):
        values[m * n + y] = u[bit_reverse(y, m)]
    for t in range(m - 1, -1, -1):
        for y in range(n):
            v = values[(t + 1) * n + y]
            if not y & (1 << t):
                v ^= values[(t + 1) * n + y + (1 << t)]
            values[t * n + y] = v
    return values


def graph_to_parity_matrix(graph: FactorGraph) -> Gf2Matrix:
    """check_count x var_count binary adjacency matrix."""
    arr = np.zeros((graph.check_count, graph.var_count), dtype=np.uint8)
    for i, c in enumerate(graph.checks):
        arr[i, list(c)] = 1
    return Gf2Matrix(arr)


class _Reduction:
    """Mutable working state for reduce_graph: supports, adjacency, merges."""

    def __init__(self, graph: FactorGraph) -> None:
        self.support: dict[int, set[int]] = {
            i: set(c) for i, c in enumerate(graph.checks)
        }
        self.var_alive = np.ones(graph.var_count, dtype=bool)
        self.var_checks: list[set[int]] = [set() for _ in range(graph.var_count)]
        for i, c in enumerate(graph.checks):
            for v in c:
                self.var_checks[v].add(i)
        self.frozen = set(graph.frozen_vars)
        self.parent = list(range(graph.var_count))
        self.next_check = len(graph.checks)

    def find(self, v: int) -> int:
        while self.parent[v] != v:
            self.parent[v] = self.parent[self.parent[v]]
            v = self.parent[v]
        return v

    def kill_var(self, v: int) -> None:
        self.var_alive[v] = False
        self.frozen.discard(v)

    def kill_check(self, c: int) -> None:
        for v in self.support.pop(c):
            self.var_checks[v].discard(c)

    def add_check(self, vars_: set[int]) -> int:
        c = self.next_check
        self.next_check += 1
        self.support[c] = set(vars_)
        for v in vars_:
            self.var_checks[v].add(c)
        return c

    def strip_frozen(self, v: int) -> None:
        # Remove a variable pinned to 0 from every check it touches; a check
        # left with a single neighbor pins that neighbor to 0 in turn.  The
        # variable stays alive and frozen so codeword bits remain observable.
        self.frozen.add(v)
        for c in list(self.var_checks[v]):
            self.support[c].discard(v)
            self.var_checks[v].discard(c)
            self._handle_degenerate(c)

    def merge(self, dead: int, rep: int) -> None:
        # dead and rep are constrained equal; rewire dead's edges onto rep
        # with mod-2 cancellation.
        self.parent[dead] = rep
        self.var_alive[dead] = False
        for c in list(self.var_checks[dead]):
            sup = self.support[c]
            sup.discard(dead)
            if rep in sup:
                sup.discard(rep)
                self.var_checks[rep].discard(c)
            else:
                sup.add(rep)
                self.var_checks[rep].add(c)
            self._handle_degenerate(c)
        self.var_checks[dead].clear()

    def _handle_degenerate(self, c: int) -> None:
        # Cannot occur for valid polar graphs; guarded so reduction stays
        # total on arbitrary inputs.
        sup = self.support.get(c)
        if sup is None:
            return
        if len(sup) == 0:
            self.kill_check(c)
        elif len(sup) == 1:
            (v,) = sup
            self.kill_check(c)
            self.strip_frozen(v)


def reduce_graph(graph: FactorGraph) -> FactorGraph:
    """Reduce a staged polar graph to its degree-3-only form.

    The frozen markers are consumed in the process: Z-structures whose two
    left variables are both frozen propagate the zeros right and disappear;
    Z-structures with a single frozen (top-left) variable collapse to one
    degree-2 check joining their right variables; every remaining degree-2
    check merges its two variables (keeping the lower index, so codeword
    bits survive as representatives); finally degree-1 auxiliary variables
    and their checks are deleted iteratively.

    Returns a graph whose variables carry the original ids they represent,
    so LP solutions lift back to codeword bits deterministically.

    Raises
    ------
    ValueError
        If the input is not a staged polar graph or has a check of degree
        other than 2 or 3.
    """
    n = len(graph.codeword_vars)
    if graph.labels is None or n == 0 or graph.var_count % n != 0:
        raise ValueError("reduce_graph requires the staged polar sparse graph")
    m = graph.var_count // n - 1
    if graph.var_count != n * (m + 1) or graph.check_count != n * m:
        raise ValueError("reduce_graph requires the staged polar sparse graph")
    for c in graph.checks:
        if len(c) not in (2, 3):
            raise ValueError(f"malformed graph: check of degree {len(c)}")

    st = _Reduction(graph)

    # Steps 1 and 2: sweep stages from the input side toward the codeword
    # side; propagation only ever freezes variables of later-processed stages.
    for z in [z for t in range(m - 1, -1, -1) for z in z_structures(graph, t)]:
        a, b = z.left_top_var, z.left_bottom_var
        p, q = z.right_top_var, z.right_bottom_var
        fa, fb = a in st.frozen, b in st.frozen
        if fa and fb:
            st.kill_check(z.deg3_check)
            st.kill_check(z.deg2_check)
            st.kill_var(a)
            st.kill_var(b)
            st.frozen.update((p, q))
        elif fa:
            st.kill_check(z.deg3_check)
            st.kill_check(z.deg2_check)
            st.kill_var(a)
            st.add_check({p, q})
            st.merge(b, p)
        elif fb:
            # Not reachable from a polarization-consistent frozen set, where
            # a lone frozen variable is always the top-left one; handled so
            # arbitrary frozen sets still reduce correctly.
            st.kill_check(z.deg2_check)
            st.support[z.deg3_check].discard(b)
            st.var_checks[b].discard(z.deg3_check)
            st.kill_var(b)
            st.frozen.add(q)
            st._handle_degenerate(z.deg3_check)

    # Step 3: merge across degree-2 checks, codeword side first.
    while True:
        pending = sorted(c for c, sup in st.support.items() if len(sup) == 2)
        if not pending:
            break
        for c in pending:
            sup = st.support.get(c)
            if sup is None or len(sup) != 2:
                continue
            v1, v2 = sorted(sup)
            st.kill_check(c)
            st.merge(v2, v1)

    # Step 4: delete degree-1 auxiliary variables with their checks.  A
    # variable is auxiliary when its merge class contains no codeword bit,
    # i.e. its representative id is >= N.
    changed = True
    while changed:
        changed = False
        for v in range(n, graph.var_count):
            if not st.var_alive[v] or v in st.frozen or len(st.var_checks[v]) != 1:
                continue
            (c,) = st.var_checks[v]
            st.kill_check(c)
            st.kill_var(v)
            changed = True
    # Auxiliary variables left with no checks (or pinned to 0 by the
    # degeneracy guard) constrain nothing and carry no objective weight.
    for v in range(n, graph.var_count):
        if st.var_alive[v] and not st.var_checks[v]:
            st.kill_var(v)

    # Compact to new ids in ascending original-id order.
    classes: dict[int, list[int]] = {}
    for v in range(graph.var_count):
        if st.var_alive[st.find(v)]:
            classes.setdefault(st.find(v), []).append(v)
    survivors = sorted(np.nonzero(st.var_alive)[0].tolist())
    new_id = {v: i for i, v in enumerate(survivors)}
    checks = [
        tuple(sorted(new_id[v] for v in st.support[c])) for c in sorted(st.support)
    ]
    merged_from = [tuple(classes.get(v, [v])) for v in survivors]
    labels = None
    if graph.labels is not None:
        labels = [graph.labels[v] for v in survivors]
    return FactorGraph(
        var_count=len(survivors),
        checks=checks,
        codeword_vars=[new_id[st.find(j)] for j in range(n)],
        frozen_vars=[new_id[v] for v in st.frozen if st.var_alive[v]],
        labels=labels,
        merged_from=merged_from,
    )


# -- text serialization ------------------------------------------------------


def graph_to_text(graph: FactorGraph) -> str:
    """Serialize: header ``vars checks``, one line per check, a C line with
    the codeword variable ids, and one M line per variable's merge class."""
    lines = [f"{graph.var_count} {graph.check_count}"]
    lines.extend(" ".join(str(v) for v in c) for c in graph.checks)
    lines.append("C " + " ".join(str(v) for v in graph.codeword_vars))
    for v, cls in enumerate(graph.merged_from):
        lines.append(f"M {v} " + " ".join(str(o) for o in cls))
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> FactorGraph:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    var_count, check_count = map(int, lines[0].split())
    checks = [tuple(map(int, ln.split())) for ln in lines[1 : 1 + check_count]]
    codeword_vars: list[int] = []
    merged: dict[int, tuple[int, ...]] = {}
    for ln in lines[1 + check_count :]:
        parts = ln.split()
        if parts[0] == "C":
            codeword_vars.extend(int(v) for v in parts[1:])
        elif parts[0] == "M":
            merged[int(parts[1])] = tuple(int(v) for v in parts[2:])
        else:
            raise ValueError(f"unrecognized graph line: {ln!r}")
    merged_from = [merged.get(v, (v,)) for v in range(var_count)]
    return FactorGraph(
        var_count=var_count,
        checks=checks,
        codeword_vars=codeword_vars,
        merged_from=merged_from,
    )
