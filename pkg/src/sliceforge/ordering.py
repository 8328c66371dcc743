"""Assembly-order optimization.

The order of hinge stitching is a constrained permutation: every hinge gets
a distinct position, the backbone goes first, each cut-through precedes its
neighboring up-down hinges, and the objective prefers stitching near the
volume center early (sum of center-distance weights times positions).

The big-M integer-program formulation is kept for LP export; the solver
itself is a branch and bound over positions, which satisfies the pairwise
order inequalities structurally and is exact for small hinge counts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import InfeasibleError, ValidationError
from .hinges import Hinge, PrecedenceTriple
from .octree import Slice

EXACT_THRESHOLD = 16


@dataclass(frozen=True)
class OrderProblem:
    hinge_ids: tuple[int, ...]
    backbone: int
    triples: tuple[PrecedenceTriple, ...]
    w_distance: dict[int, float]

    def __post_init__(self):
        ids = set(self.hinge_ids)
        if len(ids) != len(self.hinge_ids):
            raise ValidationError("duplicate hinge ids in order problem")
        if self.backbone not in ids:
            raise ValidationError(f"backbone {self.backbone} not among hinges")
        for t in self.triples:
            for h in (t.i, t.j, t.k):
                if h not in ids:
                    raise ValidationError(f"triple references unknown hinge {h}")
        for h, w in self.w_distance.items():
            if not math.isfinite(w) or w < 0:
                raise ValidationError(f"w_distance[{h}] = {w} must be finite and >= 0")

    @property
    def n(self) -> int:
        return len(self.hinge_ids)

    @property
    def big_m(self) -> int:
        return self.n + 1


@dataclass(frozen=True)
class AssemblyPlan:
    hinge_order: tuple[int, ...]  # hinge ids by assembly position
    slice_order: tuple[int, ...]
    objective: float
    exact: bool

    def position(self, hinge_id: int) -> int:
        return self.hinge_order.index(hinge_id)


def hinge_midpoint_weight(
    hinge: Hinge, slices_by_id: dict[int, Slice], dims: tuple[int, int, int], axes: tuple[int, int, int]
) -> float:
    """Euclidean distance of the segment midpoint to the volume center,
    in coordinates normalized to [-1, 1] per axis."""
    ax_a, ax_b, ax_up = axes
    coords = [0.0, 0.0, 0.0]
    coords[ax_a] = slices_by_id[hinge.slice_a].plane_coord
    coords[ax_b] = slices_by_id[hinge.slice_b].plane_coord
    coords[ax_up] = (hinge.v0 + hinge.v1) / 2.0
    normed = [2.0 * c / dims[i] - 1.0 for i, c in enumerate(coords)]
    return math.sqrt(sum(c * c for c in normed))


def build_order_problem(
    hinges: list[Hinge],
    slices: list[Slice],
    backbone: int,
    triples: list[PrecedenceTriple],
    dims: tuple[int, int, int],
    axes: tuple[int, int, int],
) -> OrderProblem:
    by_id = {s.id: s for s in slices}
    w = {h.id: hinge_midpoint_weight(h, by_id, dims, axes) for h in hinges}
    return OrderProblem(
        hinge_ids=tuple(h.id for h in hinges),
        backbone=backbone,
        triples=tuple(triples),
        w_distance=w,
    )


def _predecessors(problem: OrderProblem) -> dict[int, set[int]]:
    preds: dict[int, set[int]] = {h: set() for h in problem.hinge_ids}
    for t in problem.triples:
        preds[t.i].add(t.j)
        preds[t.k].add(t.j)
    return preds


def _find_cycle(preds: dict[int, set[int]]) -> list[int] | None:
    """Kahn peel; returns some ids on a cycle if the precedence DAG is cyclic."""
    remaining = {h: set(p) for h, p in preds.items()}
    ready = [h for h, p in remaining.items() if not p]
    while ready:
        h = ready.pop()
        del remaining[h]
        for other, p in remaining.items():
            if h in p:
                p.discard(h)
                if not p:
                    ready.append(other)
    return sorted(remaining) if remaining else None


def solve_order(problem: OrderProblem, exact_threshold: int = EXACT_THRESHOLD) -> AssemblyPlan:
    """Minimize sum(w * position) subject to the hard ordering constraints.

    Exact branch and bound up to exact_threshold hinges; above that, a
    precedence-respecting greedy order is returned and flagged.
    Ties between equal-objective optima resolve to the lexicographically
    smallest hinge-id sequence.
    """
    preds = _predecessors(problem)
    cycle = _find_cycle(preds)
    if cycle is not None:
        raise InfeasibleError(f"cyclic cut-through precedence among hinges {cycle}")
    if preds[problem.backbone]:
        raise InfeasibleError(
            f"backbone hinge {problem.backbone} cannot be first: "
            f"hinges {sorted(preds[problem.backbone])} must precede it"
        )

    ids = sorted(problem.hinge_ids)
    n = len(ids)
    w = problem.w_distance

    if n > exact_threshold:
        order = _greedy_order(problem, preds)
        return AssemblyPlan(
            hinge_order=tuple(order),
            slice_order=(),
            objective=_objective(order, w),
            exact=False,
        )

    succs: dict[int, set[int]] = {h: set() for h in ids}
    for h, ps in preds.items():
        for p in ps:
            succs[p].add(h)

    best_order: list[int] | None = None
    best_obj = math.inf
    order: list[int] = [problem.backbone]
    placed = {problem.backbone}
    cost0 = w[problem.backbone] * 0

    def lower_bound(cost: float, pos: int) -> float:
        # remaining hinges in decreasing weight onto the earliest open
        # positions: a relaxation that ignores precedence
        rest = sorted((w[h] for h in ids if h not in placed), reverse=True)
        return cost + sum(wi * (pos + i) for i, wi in enumerate(rest))

    def dfs(pos: int, cost: float) -> None:
        nonlocal best_order, best_obj
        if pos == n:
            if cost < best_obj:
                best_obj = cost
                best_order = list(order)
            return
        if lower_bound(cost, pos) >= best_obj:
            return  # DFS visits sequences in lex order, so ties keep the incumbent
        for h in ids:
            if h in placed or any(p not in placed for p in preds[h]):
                continue
            placed.add(h)
            order.append(h)
            dfs(pos + 1, cost + w[h] * pos)
            order.pop()
            placed.discard(h)

    dfs(1, cost0)
    if best_order is None:
        raise InfeasibleError("no feasible assembly order exists")
    return AssemblyPlan(
        hinge_order=tuple(best_order),
        slice_order=(),
        objective=_objective(best_order, w),
        exact=True,
    )


def _greedy_order(problem: OrderProblem, preds: dict[int, set[int]]) -> list[int]:
    order = [problem.backbone]
    placed = {problem.backbone}
    remaining = set(problem.hinge_ids) - placed
    while remaining:
        ready = [h for h in remaining if preds[h] <= placed]
        pick = min(ready, key=lambda h: (problem.w_distance[h], h))
        order.append(pick)
        placed.add(pick)
        remaining.discard(pick)
    return order


def _objective(order: list[int] | tuple[int, ...], w: dict[int, float]) -> float:
    return float(sum(w[h] * pos for pos, h in enumerate(order)))


def derive_slice_order(plan: AssemblyPlan, hinges: list[Hinge], slices: list[Slice]) -> tuple[int, ...]:
    """Slices in first-hinge-appearance order; hingeless slices go last."""
    by_id = {h.id: h for h in hinges}
    seen: list[int] = []
    for hid in plan.hinge_order:
        h = by_id[hid]
        for sid in (h.slice_a, h.slice_b):
            if sid not in seen:
                seen.append(sid)
    floating = [s.id for s in slices if s.id not in seen]
    if floating:
        warnings.warn(f"slices {floating} touch no hinge; appended at the end")
        seen.extend(floating)
    return tuple(seen)


@dataclass
class VerificationReport:
    o1_violations: list = field(default_factory=list)
    o3_violations: list = field(default_factory=list)
    triple_violations: list = field(default_factory=list)
    objective: float = 0.0

    @property
    def passed(self) -> bool:
        return not (self.o1_violations or self.o3_violations or self.triple_violations)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "o1_violations": self.o1_violations,
            "o3_violations": self.o3_violations,
            "triple_violations": self.triple_violations,
            "objective": self.objective,
        }


def verify_plan(plan: AssemblyPlan, problem: OrderProblem) -> VerificationReport:
    """Report-only check of O1 (bijection), O3 (backbone first), and every
    cut-through precedence triple; recomputes the objective."""
    report = VerificationReport()
    expected = set(problem.hinge_ids)
    got = list(plan.hinge_order)
    if sorted(got) != sorted(expected):
        report.o1_violations.append(
            {"missing": sorted(expected - set(got)), "extra": sorted(set(got) - expected),
             "duplicates": sorted({h for h in got if got.count(h) > 1})}
        )
    pos = {h: i for i, h in enumerate(got)}
    if pos.get(problem.backbone, -1) != 0:
        report.o3_violations.append(
            {"backbone": problem.backbone, "position": pos.get(problem.backbone)}
        )
    for t in problem.triples:
        if t.i in pos and t.j in pos and t.k in pos:
            if not (pos[t.j] < pos[t.i] and pos[t.j] < pos[t.k]):
                report.triple_violations.append({"i": t.i, "j": t.j, "k": t.k})
        else:
            report.triple_violations.append({"i": t.i, "j": t.j, "k": t.k, "missing": True})
    if not report.o1_violations:
        report.objective = _objective(got, problem.w_distance)
    return report


def export_lp(problem: OrderProblem) -> str:
    """The equivalent big-M MILP in LP text format, for external cross-checks.

    One binary per unordered hinge pair realizes the order disjunction;
    precedence triples and the backbone pin are plain linear rows.
    """
    ids = sorted(problem.hinge_ids)
    n = len(ids)
    m = problem.big_m
    lines = ["Minimize"]
    terms = " + ".join(f"{problem.w_distance[h]:.9g} x_{h}" for h in ids)
    lines.append(f" obj: {terms}")
    lines.append("Subject To")
    for ai in range(n):
        for bi in range(ai + 1, n):
            i, j = ids[ai], ids[bi]
            # x_i + 1 <= x_j + M a_ij ; x_j + 1 <= x_i + M (1 - a_ij)
            lines.append(f" ord_{i}_{j}_a: x_{i} - x_{j} - {m} a_{i}_{j} <= -1")
            lines.append(f" ord_{i}_{j}_b: x_{j} - x_{i} + {m} a_{i}_{j} <= {m - 1}")
    for t_idx, t in enumerate(problem.triples):
        lines.append(f" ct_{t_idx}_i: x_{t.j} - x_{t.i} <= -1")
        lines.append(f" ct_{t_idx}_k: x_{t.j} - x_{t.k} <= -1")
    lines.append(f" backbone: x_{problem.backbone} = 0")
    lines.append("Bounds")
    for h in ids:
        lines.append(f" 0 <= x_{h} <= {n - 1}")
    lines.append("General")
    lines.append(" " + " ".join(f"x_{h}" for h in ids))
    lines.append("Binary")
    pair_names = [f"a_{ids[ai]}_{ids[bi]}" for ai in range(n) for bi in range(ai + 1, n)]
    if pair_names:
        lines.append(" " + " ".join(pair_names))
    lines.append("End")
    return "\n".join(lines) + "\n"
