"""Independent reference machinery used by the test suite.

Nothing here reuses the solver's branch-and-bound or the model builder's
relaxation rows: MILP references come from exhaustive enumeration over
binary assignments, and physics-feasible points come from first-principles
flow/pressure construction (balance null space on a flow grid, exact
potential propagation, loop closure by bisection).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ogf.optmodel import OptModel
from ogf.simplex import solve_lp_arrays


# -- exhaustive MILP reference ---------------------------------------------


def brute_force_milp(model: OptModel) -> tuple[str, float | None, dict | None]:
    """Optimal value by enumerating every binary assignment + one LP each."""
    data = model.to_arrays()
    binaries = np.flatnonzero(data.binary)
    best_obj, best_vals = math.inf, None
    for bits in itertools.product((0.0, 1.0), repeat=len(binaries)):
        lb, ub = data.lb.copy(), data.ub.copy()
        ok = True
        for j, v in zip(binaries, bits):
            if v < lb[j] - 1e-12 or v > ub[j] + 1e-12:
                ok = False
                break
            lb[j] = ub[j] = v
        if not ok:
            continue
        res = solve_lp_arrays(data.c, data.A, data.sense, data.b, lb, ub)
        if res.status == "optimal" and res.obj < best_obj - 1e-12:
            best_obj = res.obj
            best_vals = {n: float(v) for n, v in zip(data.names, res.x)}
    if best_vals is None:
        return "infeasible", None, None
    return "optimal", best_obj, best_vals


# -- first-principles feasible-point sampler --------------------------------


@dataclass
class ModeCombo:
    """One joint discrete state: per-arc mode plus a group mode choice."""

    arc_mode: dict[str, str]  # compressor/cv: closed|bypass|active; valve: open|closed
    lr_sign: dict[str, int]  # loss resistor direction (+1 forward)
    group_choice: dict[str, int]  # group id -> chosen mode index

    def binaries(self, network) -> dict[str, float]:
        out: dict[str, float] = {}
        for c in network.compressors:
            m = self.arc_mode[c.id]
            out[f"x[{c.id}]"] = 0.0 if m == "closed" else 1.0
            out[f"xac[{c.id}]"] = 1.0 if m == "active" else 0.0
            out[f"xbp[{c.id}]"] = 1.0 if m == "bypass" else 0.0
        for v in network.valves:
            out[f"x[{v.id}]"] = 1.0 if self.arc_mode[v.id] == "open" else 0.0
        for cv in network.control_valves:
            m = self.arc_mode[cv.id]
            out[f"x[{cv.id}]"] = 0.0 if m == "closed" else 1.0
            out[f"xac[{cv.id}]"] = 1.0 if m == "active" else 0.0
            out[f"xbp[{cv.id}]"] = 1.0 if m == "bypass" else 0.0
        for lr in network.loss_resistors:
            if lr.id in self.lr_sign:
                out[f"xdir[{lr.id}]"] = 1.0 if self.lr_sign[lr.id] > 0 else 0.0
        for g in network.decision_groups:
            picked = self.group_choice[g.id]
            for k in range(len(g.modes)):
                out[f"sm[{g.id}:{k}]"] = 1.0 if k == picked else 0.0
        return out


def _mode_options(network):
    ids, choices = [], []
    for c in network.compressors:
        ids.append(c.id)
        choices.append(("closed", "bypass", "active"))
    for v in network.valves:
        ids.append(v.id)
        choices.append(("open", "closed"))
    for cv in network.control_valves:
        ids.append(cv.id)
        choices.append(("closed", "bypass", "active"))
    return ids, choices


def _group_consistent(network, arc_mode):
    """Group mode indices compatible with a joint arc state, per group."""
    out = {}
    for g in network.decision_groups:
        matches = []
        for k, m in enumerate(g.modes):
            ok = True
            for a in g.arcs:
                want_open = m.status.get(a) == "open"
                is_open = arc_mode.get(a, "open") != "closed"
                if want_open != is_open:
                    ok = False
                    break
                sub = m.sub_mode.get(a)
                if sub and arc_mode.get(a) != sub:
                    ok = False
                    break
            if ok:
                matches.append(k)
        if not matches:
            return None
        out[g.id] = matches
    return out


def enumerate_mode_combos(network) -> list[ModeCombo]:
    ids, choices = _mode_options(network)
    lrs = [lr.id for lr in network.loss_resistors]
    combos = []
    for assign in itertools.product(*choices):
        arc_mode = dict(zip(ids, assign))
        groups = _group_consistent(network, arc_mode)
        if groups is None:
            continue
        for signs in itertools.product((1, -1), repeat=len(lrs)):
            lr_sign = dict(zip(lrs, signs))
            for picks in itertools.product(*(groups[g.id] for g in network.decision_groups)):
                group_choice = {g.id: k for g, k in zip(network.decision_groups, picks)}
                combos.append(ModeCombo(arc_mode, lr_sign, group_choice))
    return combos if combos else [ModeCombo({}, {}, {})]


def _arc_flow_box(network, arc, combo: ModeCombo):
    lo, hi = network.flow_bounds(arc)
    mode = combo.arc_mode.get(arc.id)
    if mode == "closed":
        return 0.0, 0.0
    if mode == "active":
        lo = max(lo, 0.0)
    if arc.kind == "loss_resistor":
        if combo.lr_sign.get(arc.id, 1) > 0:
            lo = max(lo, 0.0)
        else:
            hi = min(hi, 0.0)
    for g in network.decision_groups:
        m = g.modes[combo.group_choice[g.id]]
        d = m.direction.get(arc.id, 0)
        if d > 0:
            lo = max(lo, 0.0)
        elif d < 0:
            hi = min(hi, 0.0)
    return lo, hi


def _balance_solutions(network, combo: ModeCombo, step: float, max_points: int):
    """Flow+injection vectors meeting nodal balance on a step grid.

    Returns (names, list of vectors, loop_mismatch_hook) where vectors fix
    every arc flow and injection rate.  Requires at most one degree of
    freedom; the caller refines loop-closure roots on top of the grid.
    """
    arcs = list(network.arcs())
    names = [a.id for a in arcs] + [s.id for s in network.injections]
    node_ix = {n.id: k for k, n in enumerate(network.nodes)}
    m = len(network.nodes)
    M = np.zeros((m, len(names)))
    for j, a in enumerate(arcs):
        M[node_ix[a.to_node], j] += 1.0
        M[node_ix[a.from_node], j] -= 1.0
    for j, s in enumerate(network.injections):
        M[node_ix[s.node], len(arcs) + j] = 1.0
    d = np.zeros(m)
    for w in network.withdrawals:
        d[node_ix[w.node]] += w.d

    lo = np.empty(len(names))
    hi = np.empty(len(names))
    for j, a in enumerate(arcs):
        lo[j], hi[j] = _arc_flow_box(network, a, combo)
    for j, s in enumerate(network.injections):
        lo[len(arcs) + j], hi[len(arcs) + j] = 0.0, s.s_max

    x0, *_ = np.linalg.lstsq(M, d, rcond=None)
    if np.abs(M @ x0 - d).max() > 1e-9:
        return names, [], None
    _, sv, vt = np.linalg.svd(M)
    null = vt[np.sum(sv > 1e-12):].T
    if null.shape[1] == 0:
        if np.all(x0 >= lo - 1e-12) and np.all(x0 <= hi + 1e-12):
            return names, [np.clip(x0, lo, hi)], None
        return names, [], None
    if null.shape[1] > 1:
        raise RuntimeError("sampler supports at most one free flow dimension")
    z = null[:, 0]
    # center x0 into the interior before ranging t
    t_lo, t_hi = -math.inf, math.inf
    for k in range(len(names)):
        if abs(z[k]) < 1e-14:
            if not (lo[k] - 1e-12 <= x0[k] <= hi[k] + 1e-12):
                return names, [], None
            continue
        a, b = (lo[k] - x0[k]) / z[k], (hi[k] - x0[k]) / z[k]
        t_lo, t_hi = max(t_lo, min(a, b)), min(t_hi, max(a, b))
    if t_lo > t_hi:
        return names, [], None
    ts = np.arange(0.0, t_hi - t_lo + step / 2, step) + t_lo
    if len(ts) > max_points:
        keep = np.unique(np.linspace(0, len(ts) - 1, max_points).astype(int))
        ts = ts[keep]
    return names, [np.clip(x0 + t * z, lo, hi) for t in ts], (x0, z, (t_lo, t_hi))


_PI_EDGE_KINDS = ("pipe", "short_pipe", "resistor")


def _pi_coeff(network, ctx, arc) -> float:
    from ogf import eos
    if arc.kind == "pipe":
        return eos.pipe_resistance(arc, ctx)
    if arc.kind == "resistor":
        return eos.resistor_coefficient(arc, ctx)
    return 0.0


def _island_graph(network, ctx, combo: ModeCombo, flows: dict[str, float]):
    """Potential-preserving components and the cross links between them.

    Within an island every node's potential is the island base plus an
    exact offset; valves and bypass arcs join islands with zero offset.
    Returns (island index per node, offsets, cross edges, mismatch) where
    mismatch is the worst in-island loop inconsistency.
    """
    adj: dict[str, list[tuple[str, float]]] = {n.id: [] for n in network.nodes}
    cross = []
    for arc in network.arcs():
        mode = combo.arc_mode.get(arc.id)
        f = flows[arc.id]
        if mode == "closed":
            continue
        if arc.kind in _PI_EDGE_KINDS:
            drop = _pi_coeff(network, ctx, arc) * f * abs(f)
            adj[arc.from_node].append((arc.to_node, -drop))
            adj[arc.to_node].append((arc.from_node, drop))
        elif arc.kind == "valve" or mode == "bypass":
            adj[arc.from_node].append((arc.to_node, 0.0))
            adj[arc.to_node].append((arc.from_node, 0.0))
        else:
            cross.append(arc)
    island = {}
    offset = {}
    mismatch = 0.0  # signed, worst in-island loop inconsistency
    next_island = 0
    for root in adj:
        if root in island:
            continue
        island[root] = next_island
        offset[root] = 0.0
        next_island += 1
        stack = [root]
        while stack:
            u = stack.pop()
            for v, dlt in adj[u]:
                if v in island:
                    gap = offset[u] + dlt - offset[v]
                    if abs(gap) > abs(mismatch):
                        mismatch = gap
                else:
                    island[v] = island[u]
                    offset[v] = offset[u] + dlt
                    stack.append(v)
    return island, offset, cross, mismatch


def sample_feasible_points(network, ctx, step: float = 1e-3,
                           max_flow_points: int = 400,
                           theta_grid: int = 9, slack_grid: int = 5):
    """Points satisfying the full nonlinear model, built from scratch.

    Works for the hand fixtures: ideal equation of state, at most one free
    flow dimension per discrete mode, island graphs whose cross links form
    at most one cycle.  Every returned dict holds a complete variable
    assignment (pressures, potentials, flows, injections, binaries).
    """
    assert ctx.b2n == 0.0, "sampler assumes the ideal equation of state"
    points = []
    for combo in enumerate_mode_combos(network):
        names, vecs, hook = _balance_solutions(network, combo, step, max_flow_points)
        vecs = list(vecs)
        if hook is not None:
            vecs.extend(_loop_roots(network, ctx, combo, names, hook))
        for vec in vecs:
            flows = {nm: float(v) for nm, v in zip(names, vec)}
            for pt in _pressure_solutions(network, ctx, combo, flows,
                                          theta_grid, slack_grid):
                values = dict(pt)
                for a in network.arcs():
                    values[f"f[{a.id}]"] = flows[a.id]
                for s in network.injections:
                    values[f"s[{s.id}]"] = flows[s.id]
                values.update(combo.binaries(network))
                points.append(values)
    return points


def _loop_roots(network, ctx, combo, names, hook):
    """Loop-closure flows: bisect the in-island mismatch sign changes."""
    x0, z, (t_lo, t_hi) = hook

    def signed(t):
        vec = x0 + t * z
        flows = {nm: float(v) for nm, v in zip(names, vec)}
        *_, mis = _island_graph(network, ctx, combo, flows)
        return mis

    ts = np.linspace(t_lo, t_hi, 257)
    gaps = np.array([signed(t) for t in ts])
    roots = []
    for a, b, ga, gb in zip(ts, ts[1:], gaps, gaps[1:]):
        if not (np.isfinite(ga) and np.isfinite(gb)):
            continue
        if ga == 0.0:
            roots.append(a)
        elif ga * gb < 0:
            lo_t, hi_t = a, b
            for _ in range(200):
                mid = 0.5 * (lo_t + hi_t)
                gm = signed(mid)
                if gm == 0.0 or hi_t - lo_t < 1e-15:
                    break
                if gm * signed(lo_t) < 0:
                    hi_t = mid
                else:
                    lo_t = mid
            roots.append(0.5 * (lo_t + hi_t))
    out = []
    for t in roots:
        if abs(signed(t)) < 1e-10:
            out.append(x0 + t * z)
    return out


def _pressure_solutions(network, ctx, combo, flows, theta_grid, slack_grid):
    """Node pressure assignments compatible with one flow vector."""
    island, offset, cross, mismatch = _island_graph(network, ctx, combo, flows)
    if abs(mismatch) > 1e-10:
        return []
    n_isl = len(set(island.values()))
    pot_lo = {n.id: 0.5 * ctx.b1n * ctx.nd_pressure(n.p_min) ** 2 for n in network.nodes}
    pot_hi = {n.id: 0.5 * ctx.b1n * ctx.nd_pressure(n.p_max) ** 2 for n in network.nodes}
    theta_rng = []
    for k in range(n_isl):
        lo = max(pot_lo[nid] - offset[nid] for nid in island if island[nid] == k)
        hi = min(pot_hi[nid] - offset[nid] for nid in island if island[nid] == k)
        theta_rng.append((lo, hi))

    def pressure(theta, nid):
        val = theta[island[nid]] + offset[nid]
        return math.sqrt(max(2.0 * val / ctx.b1n, 0.0))

    # spanning structure over islands: equality-like edges first
    def edge_relation(arc, theta):
        """Implied target-island base from the source island, or interval."""
        i, j = arc.from_node, arc.to_node
        pi = pressure(theta, i)
        if arc.kind == "loss_resistor":
            s = combo.lr_sign.get(arc.id, 1)
            pj = pi - ctx.nd_pressure(arc.delta_p) * s
            if pj < 0:
                return None
            return ("fix", j, 0.5 * ctx.b1n * pj * pj - offset[j])
        if arc.kind == "compressor":
            return ("range", j, [0.5 * ctx.b1n * (arc.alpha_min * pi) ** 2 - offset[j],
                                 0.5 * ctx.b1n * (arc.alpha_max * pi) ** 2 - offset[j]])
        if arc.kind == "control_valve":
            lo_p = pi - ctx.nd_pressure(arc.delta_p_max)
            hi_p = pi - ctx.nd_pressure(arc.delta_p_min)
            if hi_p < 0:
                return None
            lo_p = max(lo_p, 0.0)
            return ("range", j, [0.5 * ctx.b1n * lo_p ** 2 - offset[j],
                                 0.5 * ctx.b1n * hi_p ** 2 - offset[j]])
        raise RuntimeError(f"unexpected cross edge {arc.kind}")

    results = []
    lo0, hi0 = theta_rng[0]
    if lo0 > hi0 + 1e-12:
        return []
    fixed_edges = [a for a in cross if a.kind == "loss_resistor"]
    slack_edges = [a for a in cross if a.kind != "loss_resistor"]

    for th0 in np.linspace(lo0, max(hi0, lo0), theta_grid):
        theta = [None] * n_isl
        theta[0] = float(th0)
        # propagate fixed edges until no change
        changed = True
        guard = 0
        consistent = True
        while changed and guard < 10:
            changed = False
            guard += 1
            for arc in fixed_edges:
                ki, kj = island[arc.from_node], island[arc.to_node]
                if theta[ki] is None:
                    continue
                rel = edge_relation(arc, theta)
                if rel is None:
                    consistent = False
                    break
                _, node, val = rel
                kj = island[node]
                if theta[kj] is None:
                    theta[kj] = float(val)
                    changed = True
                elif abs(theta[kj] - val) > 1e-10:
                    consistent = False
                    break
            if not consistent:
                break
        if not consistent:
            continue
        # remaining islands connect through ranged edges; grid their slack
        pending = [k for k in range(n_isl) if theta[k] is None]
        slack_sets = []
        ok = True
        for k in pending:
            feeder = None
            for arc in slack_edges:
                if island[arc.to_node] == k and theta[island[arc.from_node]] is not None:
                    feeder = arc
                    break
            if feeder is None:
                # disconnected island: roam its own feasible base range
                lo_k, hi_k = theta_rng[k]
                if lo_k > hi_k + 1e-12:
                    ok = False
                    break
                slack_sets.append((k, np.linspace(lo_k, max(hi_k, lo_k), slack_grid)))
                continue
            rel = edge_relation(feeder, theta)
            if rel is None or rel[0] != "range":
                ok = False
                break
            lo_k = max(rel[2][0], theta_rng[k][0])
            hi_k = min(rel[2][1], theta_rng[k][1])
            if lo_k > hi_k + 1e-12:
                ok = False
                break
            slack_sets.append((k, np.linspace(lo_k, max(hi_k, lo_k), slack_grid)))
        if not ok:
            continue
        for combo_vals in itertools.product(*(vals for _, vals in slack_sets)):
            th = list(theta)
            for (k, _), v in zip(slack_sets, combo_vals):
                th[k] = float(v)
            if any(v is None for v in th):
                continue
            if not _theta_feasible(network, ctx, combo, island, offset, th,
                                   theta_rng, cross, edge_relation):
                continue
            values = {}
            for n in network.nodes:
                pv = pressure(th, n.id)
                values[f"p[{n.id}]"] = pv
                values[f"pot[{n.id}]"] = 0.5 * ctx.b1n * pv * pv
            results.append(values)
    return results


def _theta_feasible(network, ctx, combo, island, offset, theta, theta_rng,
                    cross, edge_relation) -> bool:
    for k, (lo, hi) in enumerate(theta_rng):
        if not (lo - 1e-9 <= theta[k] <= hi + 1e-9):
            return False
    for arc in cross:
        rel = edge_relation(arc, theta)
        if rel is None:
            return False
        kind, node, val = rel
        actual = theta[island[node]]
        if kind == "fix":
            if abs(actual - val) > 1e-9:
                return False
        else:
            if not (val[0] - 1e-9 <= actual <= val[1] + 1e-9):
                return False
    return True


# -- relaxation row check ----------------------------------------------------


def hull_facet_slack(vertices: list, point: tuple[float, float]) -> float:
    """Signed distance of a point to the hull of 2-D vertices (<= 0 inside)."""
    import scipy.spatial
    pts = np.asarray(vertices, dtype=float)
    q = np.asarray(point, dtype=float)
    uniq = np.unique(pts, axis=0)
    if len(uniq) == 1:
        return float(np.abs(q - uniq[0]).max())
    if len(uniq) == 2 or _collinear(uniq):
        a, b = uniq[np.argmin(uniq[:, 0])], uniq[np.argmax(uniq[:, 0])]
        seg = b - a
        L2 = float(seg @ seg)
        t = 0.0 if L2 == 0 else float(np.clip((q - a) @ seg / L2, 0.0, 1.0))
        return float(np.linalg.norm(q - (a + t * seg)))
    hull = scipy.spatial.ConvexHull(uniq)
    return float((hull.equations[:, :2] @ q + hull.equations[:, 2]).max())


def _collinear(pts: np.ndarray) -> bool:
    if len(pts) < 3:
        return True
    a, b = pts[0], pts[-1]
    cross = (pts[:, 0] - a[0]) * (b[1] - a[1]) - (pts[:, 1] - a[1]) * (b[0] - a[0])
    return bool(np.abs(cross).max() < 1e-12)


def relaxation_row_violation(model: OptModel, values: dict[str, float]) -> float:
    """Worst violation of the model's rows at a lifted point.

    Hull-block rows are checked through membership of (x, y) in the block's
    vertex hull (which proves a lambda assignment exists); every other row
    is evaluated directly.  Cone rows check y >= x^2.
    """
    worst = 0.0
    lam_rows = set()
    blocks = model.meta.get("lambda_blocks", {})
    for key, blk in blocks.items():
        q = (values[blk["x_var"]], values[blk["y_var"]])
        worst = max(worst, hull_facet_slack(blk["vertices"], q))
        for var in blk["lambda_vars"]:
            lam_rows.add(model.var_index(var))
    for con in model.constraints:
        if any(j in lam_rows for j in con.coeffs):
            continue
        lhs = sum(v * values[model.variables[j].name] for j, v in con.coeffs.items())
        scale = max(1.0, abs(con.rhs))
        if con.sense == "<=":
            worst = max(worst, (lhs - con.rhs) / scale)
        elif con.sense == ">=":
            worst = max(worst, (con.rhs - lhs) / scale)
        else:
            worst = max(worst, abs(lhs - con.rhs) / scale)
    for cone in model.cones:
        y = values[model.variables[cone.y].name]
        x = values[model.variables[cone.x].name]
        worst = max(worst, x * x - y)
    return worst


def lift_point(network, ctx, point: dict[str, float], relaxation: str) -> dict[str, float]:
    """Add the auxiliary variables a relaxation expects at a physics point."""
    out = dict(point)
    for arc in list(network.pipes) + list(network.resistors):
        f = point[f"f[{arc.id}]"]
        if relaxation == "lr":
            out[f"F[{arc.id}]"] = f * abs(f)
        elif relaxation == "misoc":
            out[f"fsq[{arc.id}]"] = f * f
            out[f"gamma[{arc.id}]"] = f * abs(f)
            out[f"xdir[{arc.id}]"] = 1.0 if f >= 0 else 0.0
    return out
