"""Embedded MILP solver: LP oracle plus branch and bound over binaries.

The search is deterministic for fixed options: branching picks the most
fractional binary (ties to the lowest variable index), node selection is
best-bound with deeper nodes first, and all remaining ties fall back to
node creation order.  Child LPs warm-start from the parent basis, so a
node re-solve is a handful of dual simplex pivots instead of a full solve.

Quadratic epigraph rows are not solved directly; `outer_approx_misoc`
replaces each y >= x^2 with tangent cuts and solves the resulting MILP,
which yields a valid lower bound of the conic optimum.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .optmodel import OptModel, Solution, relax_integrality
from .simplex import BasisState, SimplexOptions, solve_lp_arrays


@dataclass(frozen=True)
class SolveOptions:
    time_limit: float = 1000.0
    abs_gap: float = 1e-9
    rel_gap: float = 1e-9
    feas_tol: float = 1e-9
    int_tol: float = 1e-6
    max_nodes: int = 200000
    seed: int = 0
    oa_points: int = 16  # tangent cuts per cone row in the outer approximation

    def __post_init__(self):
        for name in ("abs_gap", "rel_gap", "feas_tol", "int_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _simplex_options(options: SolveOptions) -> SimplexOptions:
    return SimplexOptions(feas_tol=options.feas_tol, opt_tol=options.feas_tol)


def solve_lp(model: OptModel, options: SolveOptions | None = None) -> Solution:
    """Solve a pure LP (no binaries, no cone rows).

    The result carries row duals and reduced costs in `stats`; optimality
    means primal feasibility within the tolerance and sign-correct reduced
    costs certified by the simplex.
    """
    options = options or SolveOptions()
    if model.cones:
        raise ValueError("LP solve cannot handle cone rows")
    if model.binary_indices():
        raise ValueError("model has binaries; use solve_milp or relax_integrality")
    data = model.to_arrays()
    t0 = time.perf_counter()
    res = solve_lp_arrays(data.c, data.A, data.sense, data.b, data.lb, data.ub,
                          options=_simplex_options(options))
    elapsed = time.perf_counter() - t0
    stats = {"iterations": res.iterations, "time": elapsed, "message": res.message}
    if res.y is not None:
        stats["duals"] = res.y.tolist()
    if res.reduced_costs is not None:
        stats["reduced_costs"] = res.reduced_costs.tolist()
    if res.ray is not None:
        stats["ray"] = res.ray.tolist()
    if res.status == "optimal":
        values = {name: float(v) for name, v in zip(data.names, res.x)}
        return Solution("optimal", float(res.obj), values, float(res.obj), stats)
    return Solution(res.status, None, {}, None, stats)


def solve_milp(model: OptModel, options: SolveOptions | None = None) -> Solution:
    """Branch and bound for models whose integer variables are binary."""
    options = options or SolveOptions()
    if model.cones:
        raise ValueError("MILP solve cannot handle cone rows; use outer_approx_misoc")
    data = model.to_arrays()
    binaries = np.flatnonzero(data.binary)
    sopts = _simplex_options(options)
    t0 = time.perf_counter()
    deadline = t0 + options.time_limit

    root_lb = data.lb.copy()
    root_ub = data.ub.copy()
    root_lb[binaries] = np.maximum(0.0, root_lb[binaries])
    root_ub[binaries] = np.minimum(1.0, root_ub[binaries])

    def stats(extra=None):
        base = {"nodes": nodes_explored, "time": time.perf_counter() - t0,
                "seed": options.seed}
        if extra:
            base.update(extra)
        return base

    nodes_explored = 0
    root = solve_lp_arrays(data.c, data.A, data.sense, data.b, root_lb, root_ub,
                           options=sopts)
    if root.status in ("infeasible", "unbounded", "error"):
        return Solution(root.status, None, {}, None,
                        stats({"message": root.message}))

    incumbent = None
    incumbent_obj = math.inf
    bound_history: list[float] = [root.obj]
    heap: list[tuple[tuple[float, int, int], dict]] = []
    order = 0

    def push(bound, depth, lbv, ubv, basis):
        nonlocal order
        heapq.heappush(heap, ((bound, -depth, order),
                              {"lb": lbv, "ub": ubv, "basis": basis, "depth": depth,
                               "bound": bound}))
        order += 1

    def frac_scores(x):
        xb = x[binaries]
        return np.abs(xb - np.round(xb))

    def accept(x, obj):
        nonlocal incumbent, incumbent_obj
        if obj < incumbent_obj - 1e-12:
            vals = x.copy()
            vals[binaries] = np.round(vals[binaries])
            incumbent = vals
            incumbent_obj = obj

    fr = frac_scores(root.x)
    if binaries.size == 0 or fr.max(initial=0.0) <= options.int_tol:
        accept(root.x, root.obj)
        values = {n: float(v) for n, v in zip(data.names, incumbent)}
        return Solution("optimal", float(incumbent_obj), values,
                        float(root.obj), stats({"iterations": root.iterations}))

    push(root.obj, 0, root_lb, root_ub, root.basis)

    timed_out = False
    while heap:
        if time.perf_counter() > deadline or nodes_explored >= options.max_nodes:
            timed_out = True
            break
        (bound, _, _), node = heapq.heappop(heap)
        bound_history.append(bound)  # best-bound order makes this non-decreasing
        if bound >= incumbent_obj - options.abs_gap:
            continue  # pruned by the incumbent
        res = solve_lp_arrays(data.c, data.A, data.sense, data.b,
                              node["lb"], node["ub"], options=sopts,
                              warm=node["basis"])
        nodes_explored += 1
        if res.status == "error":
            res = solve_lp_arrays(data.c, data.A, data.sense, data.b,
                                  node["lb"], node["ub"], options=sopts)
        if res.status == "infeasible":
            continue
        if res.status != "optimal":
            return Solution("error", None, {}, None,
                            stats({"message": f"node LP returned {res.status}"}))
        if res.obj >= incumbent_obj - options.abs_gap:
            continue
        fr = frac_scores(res.x)
        j = int(np.argmax(fr))
        if fr[j] <= options.int_tol:
            accept(res.x, res.obj)
            continue
        var = int(binaries[j])
        depth = node["depth"] + 1
        lo_lb, lo_ub = node["lb"].copy(), node["ub"].copy()
        lo_ub[var] = 0.0
        hi_lb, hi_ub = node["lb"].copy(), node["ub"].copy()
        hi_lb[var] = 1.0
        push(res.obj, depth, lo_lb, lo_ub, res.basis)
        push(res.obj, depth, hi_lb, hi_ub, res.basis)

    open_bounds = [key[0] for key, _ in heap]
    if incumbent is not None:
        open_bounds.append(incumbent_obj)
    bound_val = min(open_bounds) if open_bounds else bound_history[-1]

    if timed_out:
        values = ({n: float(v) for n, v in zip(data.names, incumbent)}
                  if incumbent is not None else {})
        obj = float(incumbent_obj) if incumbent is not None else None
        return Solution("time-limit", obj, values, float(bound_val),
                        stats({"bound_history": bound_history}))
    if incumbent is None:
        return Solution("infeasible", None, {}, None,
                        stats({"bound_history": bound_history}))
    values = {n: float(v) for n, v in zip(data.names, incumbent)}
    return Solution("optimal", float(incumbent_obj), values,
                    float(min(bound_val, incumbent_obj)),
                    stats({"bound_history": bound_history}))


def outer_approx_misoc(model: OptModel, options: SolveOptions | None = None) -> Solution:
    """Lower-bound a cone-bearing model through tangent outer approximation.

    Every row y >= x^2 is replaced by `oa_points` tangent cuts
    y >= 2 t x - t^2 at abscissas t spread uniformly over the bounds of x.
    The cuts underestimate the parabola, so the MILP optimum is a valid
    lower bound on the mixed-integer conic optimum.
    """
    options = options or SolveOptions()
    if not model.cones:
        raise ValueError("model has no cone rows; use solve_milp")
    k = max(2, options.oa_points)
    cut = model.copy()
    cut.frozen = False
    cones, cut.cones = cut.cones, []
    for cone in cones:
        xv = cut.variables[cone.x]
        lo = xv.lower if math.isfinite(xv.lower) else -1e3
        hi = xv.upper if math.isfinite(xv.upper) else 1e3
        for i, t in enumerate(np.linspace(lo, hi, k)):
            cut.add_constraint({cone.y: 1.0, cone.x: -2.0 * t}, ">=", -t * t,
                               name=f"{cone.name}_cut{i}", tag=cone.tag or "cone.cut")
    cut.freeze()
    sol = solve_milp(cut, options)
    sol.stats["oa_points"] = k
    return sol


__all__ = ["SolveOptions", "solve_lp", "solve_milp", "outer_approx_misoc"]
