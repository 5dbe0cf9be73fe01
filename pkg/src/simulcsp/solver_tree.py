"""Tree algorithm for simultaneous Max-w-Conj-SAT_q (and Max-2-AND as q = w = 2).

Each node carries a partial assignment.  A living leaf solves its LP; if the
LP is infeasible the leaf dies, otherwise the smoothed LP solution gives a
product distribution whose exact mean and variance decide, per instance,
whether rounding already concentrates.  A high-variance instance with budget
left picks a tuple of influential variables and the node branches on all
q^|tuple| values of that tuple.  Leaves where no instance is eligible are
exhausted; each is rounded once and every assignment to its S is tried.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Instance,
    MultiInstance,
    PartialAssignment,
    active_degrees,
    val_partial,
)
from .enumeration import DEFAULT_BUDGET, Enumerator, assignments
from .errors import InputError, InvariantViolation, ResourceError
from .estimators import Params, ProductDistribution, high_variance, meancalc, varcalc
from .lp import build_ll1, build_ll2, complete_z, round_sample, smooth_qary, solve_feasibility
from .solvers_set import SolveReport, _check_eps, make_report, resolve_params

NODE_BUDGET = 10 ** 6
LIVING, DEAD, EXHAUSTED = "living", "dead", "exhausted"


def default_params_conj(k: int, eps: float, q: int, w: int) -> Params:
    _check_eps(eps)
    if k < 1 or q < 2 or w < 1:
        raise InputError("need k >= 1, q >= 2, w >= 1")
    delta0 = 1 / (10 * (k + 1))
    eps0 = eps
    gamma = eps0 ** 2 * delta0 / (w ** 2 * (q * w) ** w)
    t = math.ceil(20 * w ** 2 * k ** 2 / gamma * math.log(10 * k / gamma))
    return Params(delta0, eps0, gamma, t)


@dataclass
class TreeNode:
    id: str
    path: tuple
    rho: PartialAssignment
    cnt: np.ndarray
    depth: int = 0
    parent: int | None = None
    status: str = LIVING
    tuple: tuple = ()
    inst: int | None = None
    p: ProductDistribution | None = None
    t: np.ndarray | None = None
    children: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"id": self.id, "status": self.status, "inst": self.inst, "tuple": list(self.tuple),
                "cnt": self.cnt.tolist(), "S": list(self.rho.S)}


@dataclass
class Tree:
    nodes: list
    params: Params
    threshold_factor: float

    def leaves(self, status: str | None = None) -> list[TreeNode]:
        return [nd for nd in self.nodes if not nd.children and (status is None or nd.status == status)]

    def dump(self) -> list[dict]:
        return [nd.summary() for nd in self.nodes]


def tuple_selection(rho: PartialAssignment, W: Instance, q: int, w: int, t_eff: int, k: int) -> tuple:
    """Greedy influential tuple: argmax-degree variable, then extend while the joint degree stays large."""
    deg = active_degrees(rho, W)
    hv = rho.as_array(W.n)
    free = hv < 0
    if deg[free].sum() <= 0:
        raise InputError("tuple selection needs positive active degree")
    first = int(np.argmax(np.where(free, deg, -np.inf)))
    D = [first]
    factor = float(4 * q * w * t_eff * k) ** w
    arr = W.arrays
    active, _, free_slots = arr.status(hv)
    while len(D) < w:
        holds = active.copy()
        for v in D:
            holds &= (arr.vars == v).any(axis=1)
        cur = float(W.weights[holds].sum())
        joint = np.zeros(W.n)
        rows, cols = np.nonzero(free_slots & holds[:, None])
        np.add.at(joint, arr.vars[rows, cols], W.weights[rows])
        joint[D] = 0.0
        ok = np.nonzero(free & (joint > 0) & (joint >= cur / factor))[0]
        if not len(ok):
            break
        D.append(int(ok[0]))
    return tuple(D)


def _node_rng(seed, node: TreeNode):
    return np.random.default_rng([seed, node.depth, *[int(x) for x in node.path]])


def _path_index(values, q: int) -> int:
    idx = 0
    for a in values:
        idx = idx * q + int(a)
    return idx


def grow_tree(multi: MultiInstance, params: Params, node_budget: int = NODE_BUDGET,
              check: bool = True) -> Tree:
    if multi.kind != "conj":
        raise InputError(f"expected a conj multi-instance, got {multi.kind}")
    k, q, w, t = multi.k, multi.q, multi.w, params.t
    root = TreeNode("r", (), PartialAssignment(), np.zeros(k, dtype=np.int64))
    nodes = [root]
    queue = deque([0])
    while queue:
        idx = queue.popleft()
        nd = nodes[idx]
        system = build_ll2(build_ll1(nd.rho, "conj", multi), multi)
        hints = None
        if nd.parent is not None and nodes[nd.parent].t is not None:
            t0 = nodes[nd.parent].t.copy()
            for v, a in nd.rho.h.items():
                t0[v] = 0.0
                t0[v, a] = 1.0
            hints = [complete_z(system, t0)]
        sol = solve_feasibility(system, hint=hints)
        if sol is None:
            nd.status = DEAD
            continue
        nd.t = np.clip(sol.t, 0.0, 1.0)
        nd.p = smooth_qary(sol, q, w)
        flags = []
        for W in multi.instances:
            mean = meancalc(nd.rho, nd.p, W)
            var = varcalc(nd.rho, nd.p, W)
            flags.append(high_variance(var, mean, params))
        eligible = [l for l in range(k) if flags[l] and nd.cnt[l] < t]
        if not eligible:
            nd.status = EXHAUSTED
            if check:
                _check_exhausted(nd, multi, sol)
            continue
        l = eligible[0]
        W = multi.instances[l]
        T = tuple_selection(nd.rho, W, q, w, t, k)
        if check:
            deg = active_degrees(nd.rho, W)
            if deg[T[0]] < params.gamma * deg.sum() * (1 - 1e-12):
                raise InvariantViolation(
                    f"node {nd.id}: tuple head {T[0]} has degree {deg[T[0]]:.3e} < gamma*total")
        nd.tuple, nd.inst = T, l
        cnt = nd.cnt.copy()
        cnt[l] += 1
        for b in assignments(q, len(T)):
            if len(nodes) >= node_budget:
                raise ResourceError(f"tree exceeded the node budget of {node_budget}",
                                    partial=[x.summary() for x in nodes])
            child = TreeNode(
                f"{nd.id}/{''.join(str(int(x)) for x in b)}",
                nd.path + (_path_index(b, q),),
                nd.rho.extend(T, b.tolist()),
                cnt,
                nd.depth + 1,
                idx,
            )
            if check and (child.depth > k * t or len(child.rho) > w * k * t):
                raise InvariantViolation(f"node {child.id} exceeds depth k*t or |S| <= w*k*t")
            nd.children.append(len(nodes))
            queue.append(len(nodes))
            nodes.append(child)
    return Tree(nodes, params, float(4 * q * w * t * k) ** w)


def _check_exhausted(nd: TreeNode, multi: MultiInstance, sol) -> None:
    q, w = multi.q, multi.w
    free = nd.rho.as_array(multi.n) < 0
    if free.any() and nd.p.min_prob(np.nonzero(free)[0]) < (w - 1) / (q * w) - 1e-12:
        raise InvariantViolation(f"leaf {nd.id}: rounding distribution is not smooth")
    for l, W in enumerate(multi.instances):
        expect = val_partial(nd.rho, W) + meancalc(nd.rho, nd.p, W)
        if expect < multi.targets[l] / q ** (w - 1) - 1e-7:
            raise InvariantViolation(
                f"leaf {nd.id}: expected value {expect:.6f} below c/q^(w-1) for instance {l}")


def leaf_consistent_with(tree: Tree, f) -> TreeNode:
    """Follow the branch of the tree that agrees with the full assignment f."""
    f = np.asarray(f)
    nd = tree.nodes[0]
    while nd.children:
        want = "".join(str(int(f[v])) for v in nd.tuple)
        nd = next(tree.nodes[c] for c in nd.children if tree.nodes[c].id.rsplit("/", 1)[1] == want)
    return nd


def solve_conj(multi: MultiInstance, eps: float = 0.3, params_override=None, seed: int | None = 0,
               budget: int = DEFAULT_BUDGET, node_budget: int = NODE_BUDGET) -> SolveReport:
    if multi.kind != "conj":
        raise InputError(f"expected a conj multi-instance, got {multi.kind}")
    params = resolve_params(lambda: default_params_conj(multi.k, eps, multi.q, multi.w), params_override)
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % 2 ** 63)
    tree = grow_tree(multi, params, node_budget)
    exhausted = tree.leaves(EXHAUSTED)
    statuses = {s: len(tree.leaves(s)) for s in (DEAD, EXHAUSTED)}
    trace = {
        "nodes": len(tree.nodes),
        "leaves": statuses,
        "max_depth": max(nd.depth for nd in tree.nodes),
        "max_S": max(len(nd.rho) for nd in tree.nodes),
        "tuple_threshold_factor": tree.threshold_factor,
        "expansions": sum(1 for nd in tree.nodes if nd.children),
    }
    flags = {}
    if not exhausted:
        # every leaf dead: no LP certificate for the targets anywhere
        flags["targets_infeasible"] = True
        rng = np.random.default_rng(seed)
        g = rng.integers(0, multi.q, size=multi.n)
        best = Enumerator(multi, []).best([g])
        trace["enumerated"] = 1
        return make_report("conj", multi, best.assignment, params, eps, seed, flags, trace)

    completions = [round_sample(nd.p, _node_rng(seed, nd), nd.rho) for nd in exhausted]
    groups: dict[tuple, list[int]] = {}
    for i, nd in enumerate(exhausted):
        groups.setdefault(nd.rho.S, []).append(i)
    leaf_h = np.zeros(len(exhausted), dtype=np.int64)
    leaf_o = np.zeros(len(exhausted))
    enums = {}
    evaluated = 0
    for S, members in groups.items():
        enum = Enumerator(multi, S, budget)
        hs, os_, _ = enum.per_completion([completions[i] for i in members])
        leaf_h[members] = hs
        leaf_o[members] = os_
        enums[S] = enum
        evaluated += enum.size * len(members)
    i = int(np.argmax(leaf_o))  # first leaf in breadth-first order wins ties
    nd = exhausted[i]
    best = enums[nd.rho.S].finish(completions[i], int(leaf_h[i]))
    trace.update(enumerated=evaluated, best_leaf=nd.id)
    return make_report("conj", multi, best.assignment, params, eps, seed, flags, trace)


def solve_max2and(multi: MultiInstance, eps: float = 0.3, params_override=None, seed: int | None = 0,
                  **kw) -> SolveReport:
    if multi.kind != "conj" or multi.q != 2 or multi.w > 2:
        raise InputError("Max-2-AND expects Boolean terms with at most two bindings")
    report = solve_conj(multi, eps, params_override, seed, **kw)
    report.algorithm = "max2and"
    return report

