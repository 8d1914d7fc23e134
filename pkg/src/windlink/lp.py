"""A small named-variable LP container solved with HiGHS through scipy."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog


class LPError(RuntimeError):
    pass


class LPInfeasible(LPError):
    pass


class LPUnbounded(LPError):
    pass


@dataclass
class LinearProgram:
    """Maximisation problem ``max c.x`` subject to row ranges and variable bounds."""

    names: list[str] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    cost: list[float] = field(default_factory=list)
    rows: list[tuple[str, dict[int, float], str, float]] = field(default_factory=list)
    _index: dict[str, int] = field(default_factory=dict)

    def var(self, name: str, lb: float = 0.0, ub: float = np.inf, cost: float = 0.0) -> int:
        if name in self._index:
            raise KeyError(f"duplicate variable {name}")
        if ub < lb:
            raise ValueError(f"{name}: upper bound {ub} below lower bound {lb}")
        self._index[name] = len(self.names)
        self.names.append(name)
        self.lower.append(float(lb))
        self.upper.append(float(ub))
        self.cost.append(float(cost))
        return self._index[name]

    def index(self, name: str) -> int:
        return self._index[name]

    def has(self, name: str) -> bool:
        return name in self._index

    def add_cost(self, j: int, amount: float) -> None:
        self.cost[j] += amount

    def constrain(self, name: str, coeffs: dict[int, float], sense: str, rhs: float) -> None:
        if sense not in ("<=", ">=", "=="):
            raise ValueError(sense)
        self.rows.append((name, {j: float(a) for j, a in coeffs.items() if a != 0.0}, sense, float(rhs)))

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def block(self, prefix: str) -> list[str]:
        return [n for n in self.names if n.startswith(prefix)]

    def _matrices(self):
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for _, coeffs, sense, rhs in self.rows:
            if sense == "==":
                eq_rows.append(coeffs)
                eq_rhs.append(rhs)
            elif sense == "<=":
                ub_rows.append(coeffs)
                ub_rhs.append(rhs)
            else:
                ub_rows.append({j: -a for j, a in coeffs.items()})
                ub_rhs.append(-rhs)

        def assemble(rows):
            if not rows:
                return None
            data, ri, ci = [], [], []
            for r, coeffs in enumerate(rows):
                for j in sorted(coeffs):
                    ri.append(r)
                    ci.append(j)
                    data.append(coeffs[j])
            return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), self.n_vars))

        return assemble(ub_rows), (np.array(ub_rhs) if ub_rows else None), \
            assemble(eq_rows), (np.array(eq_rhs) if eq_rows else None)

    def solve(self) -> tuple[np.ndarray, float]:
        """Return the optimal point and objective value (of the maximisation)."""
        a_ub, b_ub, a_eq, b_eq = self._matrices()
        bounds = list(zip(self.lower, [None if np.isinf(u) else u for u in self.upper]))
        res = linprog(-np.asarray(self.cost), A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                      bounds=bounds, method="highs",
                      options={"presolve": True, "primal_feasibility_tolerance": 1e-9,
                               "dual_feasibility_tolerance": 1e-9})
        if res.status == 2:
            raise LPInfeasible(res.message)
        if res.status == 3:
            raise LPUnbounded(res.message)
        if res.status != 0:
            raise LPError(res.message)
        return res.x, -res.fun

    def to_lp_format(self) -> str:
        """CPLEX LP text, for debugging dumps."""

        def term(a: float, j: int, first: bool) -> str:
            sign = "-" if a < 0 else ("" if first else "+")
            return f"{sign} {abs(a):.12g} {self.names[j]}".strip()

        def expr(coeffs: dict[int, float]) -> str:
            parts = [term(a, j, i == 0) for i, (j, a) in enumerate(sorted(coeffs.items()))]
            return " ".join(parts) if parts else "0"

        out = ["\\ windlink dispatch LP", "Maximize", " obj: " + expr(
            {j: c for j, c in enumerate(self.cost) if c != 0.0}), "Subject To"]
        for name, coeffs, sense, rhs in self.rows:
            op = {"<=": "<=", ">=": ">=", "==": "="}[sense]
            out.append(f" {name}: {expr(coeffs)} {op} {rhs:.12g}")
        out.append("Bounds")
        for j, n in enumerate(self.names):
            hi = "+inf" if np.isinf(self.upper[j]) else f"{self.upper[j]:.12g}"
            out.append(f" {self.lower[j]:.12g} <= {n} <= {hi}")
        out.append("End")
        return "\n".join(out) + "\n"
