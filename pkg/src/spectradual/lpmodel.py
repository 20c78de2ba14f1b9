"""Small dense linear programs: incremental models, feasibility, exact pivoting.

Everything in this package that needs a polytope membership test, a
constrained minimization of a polyhedral function, or a support-function
value funnels through :class:`LPModel`. Problems are desk scale (tens of
variables), so models are assembled dense and solved with HiGHS. A compact
simplex over ``fractions.Fraction`` provides an exact escalation path for
borderline feasibility decisions on rational data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

INF = float("inf")


class NotPolyhedral(Exception):
    """Raised when an expression has no finite linear-programming encoding."""


class LPError(Exception):
    """Raised when a solver fails unexpectedly (numerical trouble, not infeasibility)."""


@dataclass
class LPResult:
    status: str                 # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    fun: float | None
    eq_marginals: np.ndarray | None = None

    @property
    def optimal(self):
        return self.status == "optimal"


class LPModel:
    """Incremental dense LP builder over scalar variables."""

    def __init__(self):
        self.lb = []
        self.ub = []
        self.eq_rows = []      # (idx array, coef array, rhs)
        self.le_rows = []

    @property
    def nvar(self):
        return len(self.lb)

    def add_vars(self, k, lb=-INF, ub=INF):
        start = self.nvar
        self.lb.extend([lb] * k)
        self.ub.extend([ub] * k)
        return list(range(start, start + k))

    def set_bounds(self, i, lb=None, ub=None):
        if lb is not None:
            self.lb[i] = max(self.lb[i], lb)
        if ub is not None:
            self.ub[i] = min(self.ub[i], ub)

    def add_eq(self, idx, coef, rhs):
        self.eq_rows.append((np.asarray(idx, dtype=int),
                             np.asarray(coef, dtype=float), float(rhs)))

    def add_le(self, idx, coef, rhs):
        self.le_rows.append((np.asarray(idx, dtype=int),
                             np.asarray(coef, dtype=float), float(rhs)))

    def _assemble(self, rows):
        if not rows:
            return None, None
        mat = np.zeros((len(rows), self.nvar))
        rhs = np.zeros(len(rows))
        for r, (idx, coef, b) in enumerate(rows):
            mat[r, idx] = coef
            rhs[r] = b
        return mat, rhs

    def minimize(self, cost=None):
        """Minimize a linear cost (dict var->coef, or None for pure feasibility)."""
        c = np.zeros(self.nvar)
        if cost:
            for i, v in cost.items():
                c[i] = v
        a_eq, b_eq = self._assemble(self.eq_rows)
        a_ub, b_ub = self._assemble(self.le_rows)
        bounds = [(lb if lb > -INF else None, ub if ub < INF else None)
                  for lb, ub in zip(self.lb, self.ub)]
        res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                      bounds=bounds, method="highs",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        if res.status == 0:
            marg = None
            if a_eq is not None and res.eqlin is not None:
                marg = np.asarray(res.eqlin.marginals, dtype=float)
            return LPResult("optimal", np.asarray(res.x, dtype=float),
                            float(res.fun), marg)
        if res.status == 2:
            return LPResult("infeasible", None, None)
        if res.status == 3:
            return LPResult("unbounded", None, None)
        raise LPError(f"linprog failed with status {res.status}: {res.message}")

    def maximize(self, cost):
        res = self.minimize({i: -v for i, v in cost.items()})
        if res.optimal:
            res.fun = -res.fun
        return res


# ---------------------------------------------------------------------------
# Exact rational simplex (phase 1 + phase 2, Bland's rule)
# ---------------------------------------------------------------------------

class RationalLP:
    """Dense LP with Fraction data: min c.x  s.t.  Aeq x = beq, Aub x <= bub, lb<=x<=ub.

    Bounds are Fractions or None (unbounded). Solved by conversion to
    standard form and a two-phase simplex with Bland's anti-cycling rule.
    Intended for small certificate confirmations, not performance.
    """

    def __init__(self, nvar):
        self.nvar = nvar
        self.lb = [None] * nvar
        self.ub = [None] * nvar
        self.eq = []   # (list[(i, Fraction)], rhs)
        self.le = []

    def set_bounds(self, i, lb=None, ub=None):
        if lb is not None:
            lb = Fraction(lb)
            self.lb[i] = lb if self.lb[i] is None else max(self.lb[i], lb)
        if ub is not None:
            ub = Fraction(ub)
            self.ub[i] = ub if self.ub[i] is None else min(self.ub[i], ub)

    def add_vars(self, k, lb=None, ub=None):
        start = self.nvar
        self.nvar += k
        self.lb.extend([None if lb is None else Fraction(lb)] * k)
        self.ub.extend([None if ub is None else Fraction(ub)] * k)
        return list(range(start, start + k))

    def add_eq(self, terms, rhs):
        self.eq.append(([(i, Fraction(c)) for i, c in terms], Fraction(rhs)))

    def add_le(self, terms, rhs):
        self.le.append(([(i, Fraction(c)) for i, c in terms], Fraction(rhs)))

    # -- standard form conversion ------------------------------------------

    def _standardize(self, cost):
        """Rewrite with nonnegative variables and equality rows only."""
        # Each original var becomes x = sum of parts: shifted nonneg var,
        # or split pair for free vars. Upper bounds become slack rows.
        col_of = []        # per original var: list of (new index, sign, shift)
        ncols = 0
        for i in range(self.nvar):
            lb, ub = self.lb[i], self.ub[i]
            if lb is not None:
                col_of.append([(ncols, Fraction(1), lb)])
                ncols += 1
            elif ub is not None:
                # x <= ub, no lower bound: x = ub - y, y >= 0
                col_of.append([(ncols, Fraction(-1), ub)])
                ncols += 1
            else:
                col_of.append([(ncols, Fraction(1), Fraction(0)),
                               (ncols + 1, Fraction(-1), Fraction(0))])
                ncols += 2

        rows = []
        rhs = []

        def expand(terms, b):
            row = {}
            for i, c in terms:
                for j, sign, shift in col_of[i]:
                    row[j] = row.get(j, Fraction(0)) + c * sign
                b = b - c * shift
            return row, b

        for terms, b in self.eq:
            row, b2 = expand(terms, b)
            rows.append(row)
            rhs.append(b2)

        slack = []
        for terms, b in self.le:
            row, b2 = expand(terms, b)
            slack.append((row, b2))

        # double-bounded vars: shifted var has ub - lb cap -> slack row
        for i in range(self.nvar):
            lb, ub = self.lb[i], self.ub[i]
            if lb is not None and ub is not None:
                j, sign, shift = col_of[i][0]
                slack.append(({j: Fraction(1)}, ub - lb))

        for row, b2 in slack:
            row = dict(row)
            row[ncols] = Fraction(1)
            ncols += 1
            rows.append(row)
            rhs.append(b2)

        c_std = [Fraction(0)] * ncols
        shift_cost = Fraction(0)
        for i, c in (cost or []):
            for j, sign, shift in col_of[i]:
                c_std[j] += Fraction(c) * sign
            shift_cost += Fraction(c) * shift
        return rows, rhs, ncols, c_std, shift_cost, col_of

    @staticmethod
    def _simplex(tab, basis, ncols):
        """In-place simplex on a dense Fraction tableau; objective in last row."""
        m = len(tab) - 1
        while True:
            obj = tab[-1]
            enter = -1
            for j in range(ncols):
                if obj[j] < 0:
                    enter = j
                    break
            if enter < 0:
                return
            leave = -1
            best = None
            for i in range(m):
                if tab[i][enter] > 0:
                    ratio = tab[i][-1] / tab[i][enter]
                    if best is None or ratio < best or (
                            ratio == best and basis[i] < basis[leave]):
                        best = ratio
                        leave = i
            if leave < 0:
                raise LPError("unbounded rational LP")
            piv = tab[leave][enter]
            tab[leave] = [v / piv for v in tab[leave]]
            for i in range(m + 1):
                if i != leave and tab[i][enter] != 0:
                    f = tab[i][enter]
                    tab[i] = [vi - f * vl for vi, vl in zip(tab[i], tab[leave])]
            basis[leave] = enter

    def solve(self, cost=None):
        """Return (status, objective, x) with exact Fractions.

        status is "optimal" or "infeasible"; x is the original-variable vector.
        """
        rows, rhs, ncols, c_std, shift_cost, col_of = self._standardize(cost)
        m = len(rows)
        # Phase 1 tableau with artificials.
        width = ncols + m + 1
        tab = []
        for i in range(m):
            row = [Fraction(0)] * width
            sign = Fraction(1) if rhs[i] >= 0 else Fraction(-1)
            for j, v in rows[i].items():
                row[j] = v * sign
            row[ncols + i] = Fraction(1)
            row[-1] = rhs[i] * sign
            tab.append(row)
        obj = [Fraction(0)] * width
        for i in range(m):
            for j in range(width):
                obj[j] -= tab[i][j]
            obj[ncols + i] += Fraction(1)
        tab.append(obj)
        basis = [ncols + i for i in range(m)]
        self._simplex(tab, basis, ncols + m)
        if tab[-1][-1] != 0:
            return "infeasible", None, None

        # Drive remaining artificials out of the basis where possible.
        for i in range(m):
            if basis[i] >= ncols:
                enter = next((j for j in range(ncols) if tab[i][j] != 0), None)
                if enter is None:
                    continue
                piv = tab[i][enter]
                tab[i] = [v / piv for v in tab[i]]
                for k in range(m + 1):
                    if k != i and tab[k][enter] != 0:
                        f = tab[k][enter]
                        tab[k] = [vk - f * vi for vk, vi in zip(tab[k], tab[i])]
                basis[i] = enter

        # Phase 2.
        obj = [Fraction(0)] * width
        for j in range(ncols):
            obj[j] = c_std[j]
        tab[-1] = obj
        for i in range(m):
            if basis[i] < ncols and tab[-1][basis[i]] != 0:
                f = tab[-1][basis[i]]
                tab[-1] = [vo - f * vi for vo, vi in zip(tab[-1], tab[i])]
        # Forbid artificials from re-entering by zero-ing is not enough; mask them.
        for i in range(m):
            for j in range(ncols, ncols + m):
                tab[i][j] = Fraction(0) if basis[i] != j else tab[i][j]
        self._simplex(tab, basis, ncols)

        xstd = [Fraction(0)] * ncols
        for i in range(m):
            if basis[i] < ncols:
                xstd[basis[i]] = tab[i][-1]
        x = []
        for i in range(self.nvar):
            val = Fraction(0)
            parts = col_of[i]
            shift = parts[0][2]
            for j, sign, _ in parts:
                val += sign * xstd[j]
            x.append(val + shift)
        objective = -tab[-1][-1] + shift_cost
        return "optimal", objective, x

    def feasible(self):
        status, _, _ = self.solve(cost=None)
        return status == "optimal"
