"""The coefficient-to-roots map and its fixed-point systems.

A vector ``c`` is sent to the coefficient vector of ``prod (x - c_n)``.
Its fixed points are the monic polynomials whose coefficients coincide
with their zeros.  Two square systems describe them: FULL uses
``alpha_j = e_j(c) - (-1)**j c_j`` for every j, TILDE replaces the last
equation by ``e_{N-1}(c_1..c_{N-1}) - (-1)**N`` which drops the
``c_N = 0`` branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .poly_core import MonicPoly, as_cvec, elem_sym_all, eval_poly, poly_from_roots

ZERO_TOL = 1e-8
POLISH_TOL = 1e-12
IDENTITY_TOL = 1e-8


class ResidualSystem(enum.Enum):
    FULL = "full"
    TILDE = "tilde"

    def degrees(self, n: int) -> list[int]:
        """Degrees of the component polynomials (total-degree bookkeeping)."""
        if self is ResidualSystem.FULL:
            return list(range(1, n + 1))
        if n < 2:
            raise ValueError("TILDE system needs N >= 2")
        return list(range(1, n)) + [n - 1]

    def bezout_number(self, n: int) -> int:
        return int(np.prod(self.degrees(n)))


class SingularJacobian(ArithmeticError):
    """Newton hit a (numerically) singular Jacobian."""


class MaxIterations(RuntimeError):
    """Newton did not meet its tolerance within the iteration cap."""


class OrbitEscape(OverflowError):
    """An orbit of the map left every bounded region we care about."""


@dataclass(frozen=True)
class FixedPointRecord:
    point: np.ndarray
    residual: float
    cluster_size: int = 1
    zero_tail: int = 0
    is_real: bool = False

    @classmethod
    def from_point(cls, point, residual: float, cluster_size: int = 1,
                   zero_tol: float = ZERO_TOL) -> "FixedPointRecord":
        point = as_cvec(point).copy()
        point.setflags(write=False)
        return cls(point=point, residual=float(residual), cluster_size=int(cluster_size),
                   zero_tail=zero_tail(point, zero_tol),
                   is_real=bool(np.all(np.abs(point.imag) < zero_tol)))

    @property
    def n(self) -> int:
        return len(self.point)

    def has_distinct_entries(self, tol: float = ZERO_TOL) -> bool:
        return min_pairwise_gap(self.point) > tol

    def all_nonzero(self, tol: float = ZERO_TOL) -> bool:
        return bool(np.all(np.abs(self.point) > tol))


def zero_tail(point, tol: float = ZERO_TOL) -> int:
    """Number of trailing entries with modulus below ``tol``."""
    count = 0
    for v in reversed(np.asarray(point)):
        if abs(v) >= tol:
            break
        count += 1
    return count


def min_pairwise_gap(v) -> float:
    v = np.asarray(v)
    if len(v) < 2:
        return np.inf
    d = np.abs(v[:, None] - v[None, :])
    d[np.diag_indices(len(v))] = np.inf
    return float(d.min())


def ulam_map(c) -> np.ndarray:
    """Coefficients of the monic polynomial whose roots are the entries of ``c``."""
    return poly_from_roots(c).coeffs.copy()


def _signs(n):
    return (-1.0) ** np.arange(1, n + 1)


def residual(c, sys: ResidualSystem = ResidualSystem.FULL) -> np.ndarray:
    c = as_cvec(c)
    n = len(c)
    out = elem_sym_all(c)[1:] - _signs(n) * c
    if sys is ResidualSystem.TILDE:
        if n < 2:
            raise ValueError("TILDE system needs N >= 2")
        out[n - 1] = elem_sym_all(c[:n - 1])[n - 1] - (-1.0) ** n
    return out


def _esym_without(c, i):
    return elem_sym_all(np.delete(c, i))


def jacobian(c, sys: ResidualSystem = ResidualSystem.FULL) -> np.ndarray:
    """Analytic Jacobian; d e_j / d c_i is e_{j-1} of ``c`` with entry i removed."""
    c = as_cvec(c)
    n = len(c)
    jac = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        jac[:, i] = _esym_without(c, i)[:n]
    jac -= np.diag(_signs(n))
    if sys is ResidualSystem.TILDE:
        if n < 2:
            raise ValueError("TILDE system needs N >= 2")
        head = c[:n - 1]
        jac[n - 1, :] = 0.0
        for i in range(n - 1):
            jac[n - 1, i] = _esym_without(head, i)[n - 2]
    return jac


def newton_polish(c0, sys: ResidualSystem = ResidualSystem.FULL, tol: float = POLISH_TOL,
                  max_iter: int = 50, cond_max: float = 1e10) -> FixedPointRecord:
    """Refine an approximate solution of ``residual(c, sys) = 0``.

    Stops once the residual max-norm is at most ``tol`` and the last
    Newton step is below ``1e-10 * (1 + |c|)``; the step condition keeps
    a slowly (linearly) converging multiple root from being reported
    early.

    Raises:
        SingularJacobian: condition number above ``cond_max``, which is
            what a solution of multiplicity > 1 looks like.
        MaxIterations: tolerance not met in ``max_iter`` steps.
    """
    c = as_cvec(c0).copy()
    f = residual(c, sys)
    if np.max(np.abs(f), initial=0.0) == 0.0:
        return FixedPointRecord.from_point(c, 0.0)
    for _ in range(max_iter):
        jac = jacobian(c, sys)
        if np.linalg.cond(jac) > cond_max:
            raise SingularJacobian(f"Jacobian condition number exceeds {cond_max:g}")
        step = np.linalg.solve(jac, -f)
        c = c + step
        f = residual(c, sys)
        res = float(np.max(np.abs(f)))
        if res <= tol and np.max(np.abs(step)) <= 1e-10 * (1.0 + np.max(np.abs(c))):
            return FixedPointRecord.from_point(c, res)
    raise MaxIterations(f"Newton polish did not reach {tol:g} in {max_iter} iterations")


@dataclass
class IdentityReport:
    """Largest absolute defect of each identity over n = 1..N."""

    rel1: float
    rel2: float | None
    rel3: float | None
    rel4: float
    skipped: list[str] = field(default_factory=list)

    def max_defect(self) -> float:
        vals = [v for v in (self.rel1, self.rel2, self.rel3, self.rel4) if v is not None]
        return max(vals)

    def passed(self, tol: float = IDENTITY_TOL) -> bool:
        return self.max_defect() <= tol

    def to_dict(self) -> dict:
        return {"rel1": self.rel1, "rel2": self.rel2, "rel3": self.rel3,
                "rel4": self.rel4, "skipped": list(self.skipped)}


def verify_identities(gamma, tol: float = IDENTITY_TOL) -> IdentityReport:
    """Evaluate the four root/coefficient identities at every zero of a fixed point.

    1. the polynomial vanishes at each entry;
    2. its first derivative equals the product of differences;
    3. its second derivative equals twice the sum of partial products;
    4. same as 1 with coefficients rebuilt from symmetric polynomials.

    Checks 2 and 3 need pairwise-distinct entries and are skipped
    (recorded in ``skipped``) otherwise.
    """
    g = as_cvec(gamma)
    n = len(g)
    p = MonicPoly(g)
    rel1 = float(np.max(np.abs(eval_poly(p, g))))
    rebuilt = MonicPoly(_signs(n) * elem_sym_all(g)[1:])
    rel4 = float(np.max(np.abs(eval_poly(rebuilt, g))))

    skipped = []
    rel2 = rel3 = None
    if min_pairwise_gap(g) <= ZERO_TOL:
        skipped = ["rel2", "rel3"]
    else:
        d2 = d3 = 0.0
        for k in range(n):
            x = g[k]
            lhs2 = n * x ** (n - 1) + sum((n - m) * g[m - 1] * x ** (n - m - 1)
                                          for m in range(1, n))
            others = np.delete(g, k)
            rhs2 = np.prod(x - others)
            d2 = max(d2, abs(lhs2 - rhs2))
            if n >= 2:
                lhs3 = n * (n - 1) * x ** (n - 2) + sum(
                    (n - m) * (n - m - 1) * g[m - 1] * x ** (n - m - 2) for m in range(1, n - 1))
                rhs3 = 2 * sum(np.prod(x - np.delete(others, j)) for j in range(n - 1))
                d3 = max(d3, abs(lhs3 - rhs3))
        rel2, rel3 = float(d2), float(d3)
    return IdentityReport(rel1=rel1, rel2=rel2, rel3=rel3, rel4=rel4, skipped=skipped)


def _q(c, t):
    return eval_poly(MonicPoly(c), t)


def _r(c, t):
    return np.prod(np.asarray(t)[..., None] - c, axis=-1)


def _dq(c, t):
    n = len(c)
    t = np.asarray(t, dtype=np.complex128)
    out = n * t ** (n - 1)
    for m in range(1, n):
        out = out + (n - m) * c[m - 1] * t ** (n - m - 1)
    return out


def _dr(c, t):
    t = np.asarray(t, dtype=np.complex128)
    n = len(c)
    total = np.zeros_like(t)
    for k in range(n):
        total = total + np.prod(t[..., None] - np.delete(c, k), axis=-1)
    return total


def verify_equivalent_system(c, t, variant: int, tol: float = IDENTITY_TOL) -> bool:
    """Check the interpolation form of the fixed-point equations at nodes ``t``.

    Variant 1 compares ``x**N + sum c_m x**(N-m)`` with ``prod (x - c_m)``
    at all N nodes.  Variant 2 compares them at ``t_1`` and compares
    their first derivatives at ``t_2..t_N``.
    """
    c = as_cvec(c)
    t = as_cvec(t)
    n = len(c)
    if len(t) != n:
        raise ValueError("need exactly N interpolation nodes")
    if variant == 1:
        if min_pairwise_gap(t) == 0.0:
            raise ValueError("variant 1 needs pairwise distinct nodes")
        defect = np.abs(_q(c, t) - _r(c, t))
    elif variant == 2:
        if min_pairwise_gap(t[1:]) == 0.0:
            raise ValueError("variant 2 needs t_2..t_N pairwise distinct")
        first = abs(_q(c, t[0]) - _r(c, t[:1])[0])
        rest = np.abs(_dq(c, t[1:]) - _dr(c, t[1:]))
        defect = np.concatenate(([first], rest))
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return bool(np.max(defect) <= tol)


def pad_check(gamma, n: int, tol: float = 1e-9) -> bool:
    """Padding by ``n`` zeros stays a fixed point, and zeros only trail."""
    g = as_cvec(gamma)
    padded = np.concatenate((g, np.zeros(n, dtype=np.complex128)))
    padded_ok = float(np.max(np.abs(residual(padded)))) <= tol
    return padded_ok and zero_tail_ok(g)


def zero_tail_ok(point, tol: float = ZERO_TOL) -> bool:
    """Once an entry vanishes, every later entry vanishes too."""
    small = np.abs(np.asarray(point)) < tol
    if not small.any():
        return True
    first = int(np.argmax(small))
    return bool(small[first:].all())


@dataclass
class Orbit:
    points: list[np.ndarray]
    cycle_start: int | None = None
    period: int | None = None


def iterate_map(c0, steps: int, revisit_tol: float = 1e-9, escape: float = 1e12) -> Orbit:
    """Orbit ``c0, psi(c0), psi(psi(c0)), ...`` with first-revisit detection."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    c = as_cvec(c0).copy()
    orbit = Orbit(points=[c])
    for _ in range(steps):
        c = ulam_map(c)
        if not np.all(np.isfinite(c)) or np.max(np.abs(c), initial=0.0) > escape:
            raise OrbitEscape(f"orbit escaped after {len(orbit.points)} steps")
        if orbit.period is None:
            for j, prev in enumerate(orbit.points):
                if np.max(np.abs(c - prev), initial=0.0) <= revisit_tol:
                    orbit.cycle_start = j
                    orbit.period = len(orbit.points) - j
                    break
        orbit.points.append(c)
    return orbit
