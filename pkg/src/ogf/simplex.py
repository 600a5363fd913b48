"""Bounded-variable simplex with a dense basis inverse and sparse columns.

Rows are converted to equalities with one slack per row; a two-phase
primal method with artificial columns establishes feasibility, and a dual
method re-solves cheaply after bound changes (used by branch and bound,
where child problems only tighten variable bounds).  Dantzig pricing on
incrementally maintained reduced costs is the default; a degeneracy
counter switches to Bland's rule to break stalls.  Ties resolve to the
lowest index, so runs are deterministic.

The constraint matrix is stored column-compressed in plain numpy arrays
(model matrices here are far below 1% dense), while the basis inverse
stays dense and is refreshed periodically.  This targets desk-size models
up to a few thousand rows; no attempt is made at sparse LU factors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from scipy.linalg.blas import dger as _dger
except ImportError:  # pragma: no cover - scipy is a hard dependency in practice
    _dger = None

BASIC, AT_LB, AT_UB = 0, 1, 2


@dataclass
class SimplexOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    pivot_tol: float = 1e-9
    max_iter: int = 200000
    refactor_every: int = 400
    bland_after: int = 300  # consecutive degenerate pivots before Bland's rule


@dataclass
class BasisState:
    basis: np.ndarray  # row -> column index
    status: np.ndarray  # column -> BASIC/AT_LB/AT_UB


@dataclass
class LPResult:
    status: str  # optimal | infeasible | unbounded | error
    x: np.ndarray | None = None
    obj: float | None = None
    y: np.ndarray | None = None  # row duals
    reduced_costs: np.ndarray | None = None
    ray: np.ndarray | None = None  # Farkas row multipliers when infeasible
    basis: BasisState | None = None
    iterations: int = 0
    message: str = ""


class _NumericalTrouble(RuntimeError):
    pass


class _Columns:
    """Column-compressed matrix with the few products the solver needs."""

    def __init__(self, A_dense: np.ndarray, m: int):
        A = np.asarray(A_dense, dtype=float)
        n = A.shape[1]
        self.m = m
        self.N = n + 2 * m
        rows_l, cols_l, vals_l = [], [], []
        if A.size:
            r, c = np.nonzero(A)
            rows_l.append(r)
            cols_l.append(c)
            vals_l.append(A[r, c])
        rng = np.arange(m)
        rows_l.append(rng)          # slack block
        cols_l.append(n + rng)
        vals_l.append(np.ones(m))
        rows_l.append(rng)          # artificial block, signs set later
        cols_l.append(n + m + rng)
        vals_l.append(np.ones(m))
        rows = np.concatenate(rows_l)
        cols = np.concatenate(cols_l)
        vals = np.concatenate(vals_l)
        order = np.lexsort((rows, cols))
        self.rows = rows[order].astype(np.int64)
        self.cols = cols[order].astype(np.int64)
        self.vals = vals[order]
        self.indptr = np.searchsorted(self.cols, np.arange(self.N + 1))
        # artificial entries sit one per column at the very end of the order
        self.art_slots = self.indptr[n + m:self.N][:m] if m else np.empty(0, np.int64)

    def set_artificial_signs(self, signs: np.ndarray):
        self.vals[self.art_slots] = signs

    def col(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        s = slice(self.indptr[j], self.indptr[j + 1])
        return self.rows[s], self.vals[s]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return np.bincount(self.rows, weights=self.vals * x[self.cols],
                           minlength=self.m)

    def row_product(self, y: np.ndarray) -> np.ndarray:
        """y @ A for a dense row vector y."""
        return np.bincount(self.cols, weights=self.vals * y[self.rows],
                           minlength=self.N)

    def gather(self, js: np.ndarray) -> np.ndarray:
        out = np.zeros((self.m, len(js)))
        for k, j in enumerate(js):
            r, v = self.col(int(j))
            out[r, k] = v
        return out


class _Simplex:
    """One solver instance; column layout is [structural | slack | artificial]."""

    def __init__(self, c, A, sense, b, lb, ub, opts: SimplexOptions):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m = A.shape[0] if A.size else len(b)
        n = A.shape[1]
        self.m, self.n = m, n
        self.N = n + 2 * m
        self.opts = opts
        self.cost = np.concatenate([np.asarray(c, dtype=float), np.zeros(2 * m)])
        self.b = np.asarray(b, dtype=float)
        self.cols = _Columns(A, m)
        sense = np.asarray(sense)

        self.lb = np.empty(self.N)
        self.ub = np.empty(self.N)
        self.lb[:n] = lb
        self.ub[:n] = ub
        # slack bounds encode the row sense of A x {<=,=,>=} b
        self.lb[n:n + m] = np.where(sense <= 0, 0.0, -np.inf)
        self.ub[n:n + m] = np.where(sense >= 0, 0.0, np.inf)
        self.art0 = n + m
        self.lb[self.art0:] = 0.0
        self.ub[self.art0:] = 0.0  # opened to [0, inf) only during phase 1

        if not (np.isfinite(self.lb[:n]) | np.isfinite(self.ub[:n])).all():
            raise ValueError("every structural variable needs a finite bound")

        self.status = np.empty(self.N, dtype=np.int8)
        self.basis = np.empty(m, dtype=np.int64)
        self.Binv = np.empty((m, m))
        self.x = np.zeros(self.N)
        self.d = np.zeros(self.N)  # reduced costs for the active cost vector
        self.iterations = 0
        self._degen_run = 0
        self._since_refactor = 0
        self._active_cost = self.cost

    # -- state helpers ---------------------------------------------------

    def _nonbasic_to_bounds(self):
        at_lb = self.status == AT_LB
        at_ub = self.status == AT_UB
        self.x[at_lb] = self.lb[at_lb]
        self.x[at_ub] = self.ub[at_ub]

    def _default_status(self, j: int) -> int:
        lo, hi = self.lb[j], self.ub[j]
        if np.isfinite(lo) and (not np.isfinite(hi) or abs(lo) <= abs(hi)):
            return AT_LB
        return AT_UB

    def _recompute_basics(self):
        self._nonbasic_to_bounds()
        xnb = self.x.copy()
        xnb[self.basis] = 0.0
        self.x[self.basis] = self.Binv @ (self.b - self.cols.matvec(xnb))

    def _dual_row(self) -> np.ndarray:
        return self._active_cost[self.basis] @ self.Binv

    def _recompute_d(self):
        y = self._dual_row()
        self.d = self._active_cost - self.cols.row_product(y)
        self.d[self.basis] = 0.0

    def _set_cost(self, cost: np.ndarray):
        self._active_cost = cost
        self._recompute_d()

    def _refactor(self):
        B = self.cols.gather(self.basis)
        try:
            # Fortran order lets the rank-1 pivot update run in place via BLAS
            self.Binv = np.asfortranarray(np.linalg.inv(B))
        except np.linalg.LinAlgError as exc:
            raise _NumericalTrouble(f"singular basis: {exc}") from exc
        self._recompute_basics()
        self._recompute_d()
        self._since_refactor = 0

    def cold_start(self):
        """Artificial basis absorbing the residual of bound-valued columns."""
        for j in range(self.art0):
            self.status[j] = self._default_status(j)
        self.status[self.art0:] = AT_LB
        self._nonbasic_to_bounds()
        self.x[self.art0:] = 0.0
        r = self.b - self.cols.matvec(self.x)
        signs = np.where(r >= 0, 1.0, -1.0)
        self.cols.set_artificial_signs(signs)
        self.ub[self.art0:] = np.inf
        self.basis = self.art0 + np.arange(self.m, dtype=np.int64)
        self.status[self.basis] = BASIC
        self.Binv = np.asfortranarray(np.diag(signs))
        self.x[self.basis] = np.abs(r)

    def load_basis(self, warm: BasisState):
        if warm.basis.shape != (self.m,) or warm.status.shape != (self.N,):
            raise _NumericalTrouble("warm basis shape mismatch")
        self.basis = warm.basis.astype(np.int64).copy()
        self.status = warm.status.astype(np.int8).copy()
        self.cols.set_artificial_signs(np.ones(self.m))
        self._refactor()

    # -- pivoting ----------------------------------------------------------

    def _pivot(self, r: int, q: int, w: np.ndarray, t: float, sigma: float,
               leaving_status: int):
        out = self.basis[r]
        self.x[self.basis] -= sigma * t * w
        self.x[q] = (self.lb[q] if sigma > 0 else self.ub[q]) + sigma * t
        self.x[out] = self.lb[out] if leaving_status == AT_LB else self.ub[out]
        self.status[out] = leaving_status
        self.status[q] = BASIC
        self.basis[r] = q
        piv = w[r]
        pr = self.Binv[r] / piv
        if _dger is not None and self.Binv.flags.f_contiguous:
            self.Binv = _dger(-1.0, w, pr, a=self.Binv, overwrite_a=1)
        else:
            self.Binv -= np.outer(w, pr)
        self.Binv[r] = pr
        # maintained reduced costs: d <- d - d_q * (new row r of Binv) A
        dq = self.d[q]
        if dq != 0.0:
            self.d -= dq * self.cols.row_product(pr)
        self.d[q] = 0.0
        self._since_refactor += 1
        if self._since_refactor >= self.opts.refactor_every:
            self._refactor()

    def primal(self, allow_artificial: bool) -> str:
        """Bounded primal simplex on the active cost vector.

        Returns "optimal" or "unbounded"; raises on iteration exhaustion.
        """
        opts = self.opts
        fixed = self.lb == self.ub
        banned = np.zeros(self.N, dtype=bool)
        if not allow_artificial:
            banned[self.art0:] = True
        bland = False
        score = np.empty(self.N)
        while True:
            if self.iterations >= opts.max_iter:
                raise _NumericalTrouble("iteration limit exceeded")
            self.iterations += 1
            d = self.d
            score.fill(-np.inf)
            at_lb = (self.status == AT_LB) & ~fixed & ~banned
            at_ub = (self.status == AT_UB) & ~fixed & ~banned
            score[at_lb] = -d[at_lb]
            score[at_ub] = d[at_ub]
            if bland:
                cand = np.flatnonzero(score > opts.opt_tol)
                if cand.size == 0:
                    return "optimal"
                q = int(cand[0])
            else:
                q = int(np.argmax(score))
                if score[q] <= opts.opt_tol:
                    return "optimal"
            sigma = 1.0 if self.status[q] == AT_LB else -1.0
            rq, vq = self.cols.col(q)
            w = self.Binv[:, rq] @ vq
            step = sigma * w
            xb = self.x[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(step > opts.pivot_tol,
                                  (xb - self.lb[self.basis]) / step, np.inf)
                dec = step < -opts.pivot_tol
                ratios[dec] = ((xb - self.ub[self.basis]) / step)[dec]
            ratios = np.maximum(ratios, 0.0)  # clip tiny negative slack
            t_flip = self.ub[q] - self.lb[q]
            if ratios.size:
                r = int(np.argmin(ratios))
                t_block = float(ratios[r])
            else:
                r, t_block = -1, np.inf
            if np.isfinite(t_block):
                near = np.flatnonzero(ratios <= t_block + 1e-12)
                if bland:
                    r = int(near[np.argmin(self.basis[near])])
                else:
                    r = int(near[np.argmax(np.abs(step[near]))])
                t_block = float(ratios[r])
            if not np.isfinite(t_block) and not np.isfinite(t_flip):
                return "unbounded"
            if t_flip <= t_block:
                # entering variable runs to its opposite bound; basis unchanged
                self.x[self.basis] -= sigma * t_flip * w
                self.status[q] = AT_UB if self.status[q] == AT_LB else AT_LB
                self.x[q] = self.ub[q] if self.status[q] == AT_UB else self.lb[q]
                self._degen_run = 0
                continue
            leaving_status = AT_LB if step[r] > 0 else AT_UB
            self._pivot(r, q, w, t_block, sigma, leaving_status)
            if t_block <= opts.pivot_tol:
                self._degen_run += 1
                if self._degen_run >= opts.bland_after:
                    bland = True
            else:
                self._degen_run = 0
                bland = False

    def dual(self) -> str:
        """Bounded dual simplex; requires a dual-feasible starting basis.

        Returns "optimal" (primal feasibility restored) or "infeasible".
        """
        opts = self.opts
        fixed = self.lb == self.ub
        guard = 0
        while True:
            if self.iterations >= opts.max_iter:
                raise _NumericalTrouble("iteration limit exceeded")
            self.iterations += 1
            guard += 1
            if guard > 4 * (self.m + self.n) + 1000:
                raise _NumericalTrouble("dual simplex stall")
            xb = self.x[self.basis]
            below = self.lb[self.basis] - xb
            above = xb - self.ub[self.basis]
            viol = np.maximum(below, above)
            r = int(np.argmax(viol))
            if viol[r] <= opts.feas_tol * (1.0 + abs(float(xb[r]))):
                return "optimal"
            s = 1.0 if above[r] > below[r] else -1.0  # +1: leaves at upper bound
            alpha = s * self.cols.row_product(self.Binv[r])
            d = self.d
            eligible_lb = (self.status == AT_LB) & ~fixed & (alpha > opts.pivot_tol)
            eligible_ub = (self.status == AT_UB) & ~fixed & (alpha < -opts.pivot_tol)
            eligible = eligible_lb | eligible_ub
            if not eligible.any():
                self._farkas = self._certify(s * self.Binv[r])
                return "infeasible"
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(eligible, d / alpha, np.inf)
            ratio = np.maximum(ratio, 0.0)
            q = int(np.argmin(ratio))
            near = np.flatnonzero(ratio <= ratio[q] + 1e-12)
            q = int(near[np.argmax(np.abs(alpha[near]))])
            sigma = 1.0 if self.status[q] == AT_LB else -1.0
            rq, vq = self.cols.col(q)
            w = self.Binv[:, rq] @ vq
            target = self.ub[self.basis[r]] if s > 0 else self.lb[self.basis[r]]
            denom = sigma * w[r]
            if abs(denom) <= opts.pivot_tol:
                raise _NumericalTrouble("degenerate dual pivot")
            t = float((xb[r] - target) / denom)
            if t < 0:
                raise _NumericalTrouble("negative dual step")
            self._pivot(r, q, w, t, sigma, AT_UB if s > 0 else AT_LB)

    def _certify(self, y: np.ndarray) -> np.ndarray | None:
        """Validate a Farkas candidate: sup of y.Ax over the box < y.b."""
        lo, hi = self.lb[:self.art0], self.ub[:self.art0]
        for cand in (y, -y):
            z = self.cols.row_product(cand)[:self.art0]
            pos, neg = z > 1e-12, z < -1e-12
            if np.any(pos & ~np.isfinite(hi)) or np.any(neg & ~np.isfinite(lo)):
                continue  # supremum unbounded with this sign
            cap = float((z[pos] * hi[pos]).sum() + (z[neg] * lo[neg]).sum())
            if cap < float(cand @ self.b) - 1e-7 * (1.0 + abs(cap)):
                return cand.copy()
        return None

    # -- drivers ----------------------------------------------------------

    def solve_two_phase(self) -> LPResult:
        self.cold_start()
        phase1 = np.zeros(self.N)
        phase1[self.art0:] = 1.0
        self._set_cost(phase1)
        status = self.primal(allow_artificial=True)
        if status == "unbounded":  # cannot happen: phase-1 objective >= 0
            return self._finish("error", message="phase-1 unbounded")
        infeas = float(self.x[self.art0:].sum())
        tol = self.opts.feas_tol * (1.0 + float(np.abs(self.b).max(initial=0.0)))
        if infeas > 1e3 * tol:
            y = phase1[self.basis] @ self.Binv
            return self._finish("infeasible", ray=self._certify(np.asarray(y)))
        self.ub[self.art0:] = 0.0
        self.x[self.art0:][self.status[self.art0:] != BASIC] = 0.0
        self._set_cost(self.cost)
        return self._phase2()

    def solve_warm(self, warm: BasisState) -> LPResult:
        self.load_basis(warm)
        status = self.dual()
        if status == "infeasible":
            return self._finish("infeasible", ray=getattr(self, "_farkas", None))
        return self._phase2()

    def _phase2(self) -> LPResult:
        status = self.primal(allow_artificial=False)
        if status == "unbounded":
            return self._finish("unbounded")
        # independent feasibility audit before declaring optimality
        self._refactor()
        resid = float(np.abs(self.cols.matvec(self.x) - self.b).max(initial=0.0))
        viol = float(np.maximum(self.lb - self.x, self.x - self.ub).max(initial=0.0))
        tol = 1e-6 * (1.0 + float(np.abs(self.b).max(initial=0.0)))
        if resid > tol or viol > tol:
            raise _NumericalTrouble(
                f"solution failed the audit (residual {resid:.2e}, bounds {viol:.2e})")
        return self._finish("optimal")

    def _finish(self, status: str, ray=None, message: str = "") -> LPResult:
        y = self.cost[self.basis] @ self.Binv
        d = self.cost - self.cols.row_product(y)
        return LPResult(
            status=status,
            x=self.x[:self.n].copy(),
            obj=float(self.cost[:self.n] @ self.x[:self.n]) if status == "optimal" else None,
            y=np.asarray(y, dtype=float).copy(),
            reduced_costs=d[:self.n].copy(),
            ray=None if ray is None else np.asarray(ray, dtype=float).copy(),
            basis=BasisState(self.basis.copy(), self.status.copy()),
            iterations=self.iterations,
            message=message,
        )


def solve_lp_arrays(c, A, sense, b, lb, ub, options: SimplexOptions | None = None,
                    warm: BasisState | None = None) -> LPResult:
    """Solve min c.x subject to A x {<=,=,>=} b and lb <= x <= ub.

    `sense` maps rows to -1 (<=), 0 (=), +1 (>=).  With `warm`, the basis
    of a previous solve of the same rows is reused through dual simplex
    iterations, falling back to a cold start on numerical trouble.
    """
    opts = options or SimplexOptions()
    if warm is not None:
        try:
            eng = _Simplex(c, A, sense, b, lb, ub, opts)
            return eng.solve_warm(warm)
        except _NumericalTrouble:
            pass  # fall through to a cold start
    try:
        eng = _Simplex(c, A, sense, b, lb, ub, opts)
        return eng.solve_two_phase()
    except _NumericalTrouble as exc:
        return LPResult(status="error", message=str(exc))


__all__ = ["SimplexOptions", "BasisState", "LPResult", "solve_lp_arrays",
           "BASIC", "AT_LB", "AT_UB"]
