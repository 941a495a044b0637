"""Polynomial eigenfunctions of hypergeometric-type operators.

The operator is ``p(x) y'' + q(x) y'`` with ``p = alpha x^2 + beta x + delta``
and ``q = -(x + a1)``.  Its monic degree-N eigenpolynomial has eigenvalue
``lambda_N = N - N(N-1) alpha`` and coefficients fixed by a three-term
recurrence.  The rigidity check confirms numerically that asking the
degree-2 and degree-3 eigenpolynomials to be fixed points of the
coefficient-to-roots map forces ``beta = delta = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .ulam_map import ResidualSystem, residual

DEGENERACY_TOL = 1e-12


class DegenerateEigenvalues(ZeroDivisionError):
    """Two eigenvalues in the recurrence coincide."""


@dataclass(frozen=True)
class HyperParams:
    alpha: complex
    beta: complex = 0.0
    delta: complex = 0.0
    a1: complex = 0.0

    def eigenvalue(self, n: int) -> complex:
        return n - n * (n - 1) * self.alpha

    def eigenvalues_injective(self, n_max: int, tol: float = DEGENERACY_TOL) -> bool:
        lam = [self.eigenvalue(k) for k in range(n_max + 1)]
        return all(abs(lam[i] - lam[j]) >= tol
                   for i in range(n_max + 1) for j in range(i))


@dataclass(frozen=True)
class EigenPoly:
    n: int
    coeffs: np.ndarray
    lam: complex

    def full_coeffs(self) -> np.ndarray:
        return np.concatenate(([1.0 + 0j], self.coeffs))


def recurrence_coeffs(params: HyperParams, n: int) -> EigenPoly:
    """Coefficients ``C_1..C_N`` of the monic eigenpolynomial of degree N.

    Raises:
        DegenerateEigenvalues: if some ``lambda_N - lambda_{N-j}`` vanishes.
    """
    if n < 0:
        raise ValueError("degree must be >= 0")
    a1, beta, delta = params.a1, params.beta, params.delta
    lam = params.eigenvalue
    lam_n = lam(n)
    c = [1.0 + 0j]  # C_0
    for j in range(1, n + 1):
        gap = lam_n - lam(n - j)
        if abs(gap) < DEGENERACY_TOL:
            raise DegenerateEigenvalues(f"lambda_{n} == lambda_{n - j} for alpha={params.alpha}")
        if j == 1:
            cj = (n * a1 - n * (n - 1) * beta) / gap
        else:
            cj = ((n - j + 1) * (a1 - (n - j) * beta) / gap * c[j - 1]
                  - (n - j + 2) * (n - j + 1) * delta / gap * c[j - 2])
        c.append(complex(cj))
    return EigenPoly(n=n, coeffs=np.array(c[1:], dtype=np.complex128), lam=complex(lam_n))


def eigen_residual(poly: EigenPoly, params: HyperParams, samples) -> float:
    """Max modulus of ``p y'' + q y' + lambda y`` over the sample points."""
    x = np.asarray(samples, dtype=np.complex128)
    y = np.polynomial.polynomial.Polynomial(poly.full_coeffs()[::-1])
    p = params.alpha * x ** 2 + params.beta * x + params.delta
    q = -(x + params.a1)
    vals = p * y.deriv(2)(x) + q * y.deriv(1)(x) + poly.lam * y(x)
    return float(np.max(np.abs(vals)))


def degree2_closed_form(alpha, beta, delta) -> np.ndarray:
    """``(gamma_1, gamma_2)`` of the degree-2 eigenpolynomial when a1 = 0."""
    return np.array([-2 * beta / (1 - 2 * alpha), delta / (alpha - 1)], dtype=np.complex128)


def degree3_closed_form(alpha, beta, delta) -> np.ndarray:
    """``(gamma_1, gamma_2, gamma_3)`` of the degree-3 eigenpolynomial when a1 = 0."""
    g1 = -6 * beta / (1 - 4 * alpha)
    g2 = 3 * (2 * beta ** 2 + delta * (4 * alpha - 1)) / ((1 - 3 * alpha) * (1 - 4 * alpha))
    g3 = 4 * beta * delta / ((1 - 2 * alpha) * (1 - 4 * alpha))
    return np.array([g1, g2, g3], dtype=np.complex128)


def ulam_constraints(alpha, beta, delta) -> np.ndarray:
    """The five fixed-point conditions on the degree-2 and degree-3 eigenpolynomials."""
    g1, g2 = degree2_closed_form(alpha, beta, delta)
    h1, h2, h3 = degree3_closed_form(alpha, beta, delta)
    return np.array([
        2 * g1 + g2,
        g2 - g1 * g2,
        2 * h1 + h2 + h3,
        h2 - h1 * h2 - h2 * h3 - h1 * h3,
        h3 + h1 * h2 * h3,
    ], dtype=np.complex128)


_POLES = (0.5, 1.0 / 3.0, 0.25, 1.0)


@dataclass
class RigidityGrid:
    alphas: tuple = (-1.0, -0.5, 0.0, 0.1, 0.2, 0.35, 0.6, 0.75, 2.0, 5.0)
    beta_values: tuple = (0.0, 1.0, -2.0, 1.5j, -1.0 + 1.0j)
    delta_values: tuple = (0.0, -1.0, 2.0, -1.5j, 1.0 - 1.0j)
    n_starts: int = 20
    start_radius: float = 2.0
    seed: int = 0

    @classmethod
    def preset(cls, name: str) -> "RigidityGrid":
        if name == "default":
            return cls()
        if name == "wide":
            vals = (0.0, 3.0, -5.0, 4.0j, -3.0 + 3.0j, 2.5 - 4.0j, 0.5)
            return cls(alphas=(-10.0, -3.0, -1.0, 0.0, 0.15, 0.3, 0.45, 0.7, 3.0, 10.0),
                       beta_values=vals, delta_values=vals, n_starts=30, start_radius=5.0)
        if name == "fine":
            ring = tuple(0.25 * k * np.exp(0.7j * k) for k in range(1, 9))
            return cls(alphas=(-1.0, -0.8, -0.6, -0.45, -0.3, -0.15, -0.05, 0.05, 0.15, 0.29,
                               0.4, 0.55, 0.8, 1.3),
                       beta_values=(0.0,) + ring, delta_values=(0.0,) + ring,
                       n_starts=20, start_radius=1.0)
        raise ValueError(f"unknown grid preset {name!r}")

    def check(self):
        for a in self.alphas:
            if any(abs(a - p) < 1e-6 for p in _POLES):
                raise ValueError(f"alpha={a} sits on a pole of the closed forms")


@dataclass
class Minimizer:
    alpha: float
    beta: complex
    delta: complex
    residual: float

    def distance_to_origin(self) -> float:
        return float(max(abs(self.beta), abs(self.delta)))


@dataclass
class RigidityReport:
    tol: float
    zero_tol: float
    minimizers: list[Minimizer] = field(default_factory=list)
    spot_checks: list[dict] = field(default_factory=list)
    higher_degree: list[dict] = field(default_factory=list)

    def zero_minimizers(self) -> list[Minimizer]:
        return [m for m in self.minimizers if m.residual <= self.zero_tol]

    def unexpected_zeros(self, radius: float = 1e-6) -> list[Minimizer]:
        return [m for m in self.zero_minimizers() if m.distance_to_origin() > radius]

    def origin_found_for_every_alpha(self, radius: float = 1e-6) -> bool:
        alphas = {m.alpha for m in self.minimizers}
        hit = {m.alpha for m in self.zero_minimizers() if m.distance_to_origin() <= radius}
        return alphas == hit

    def spot_failures(self) -> list[dict]:
        return [s for s in self.spot_checks if not s["violated"]]

    @property
    def passed(self) -> bool:
        return (not self.unexpected_zeros() and self.origin_found_for_every_alpha()
                and not self.spot_failures())

    def to_dict(self) -> dict:
        def cpair(z):
            return [float(np.real(z)), float(np.imag(z))]
        return {
            "tol": self.tol,
            "zero_tol": self.zero_tol,
            "passed": self.passed,
            "unexpected_zero_count": len(self.unexpected_zeros()),
            "minimizers": [{"alpha": m.alpha, "beta": cpair(m.beta), "delta": cpair(m.delta),
                            "residual": m.residual} for m in self.minimizers],
            "spot_checks": [{"alpha": s["alpha"], "beta": cpair(s["beta"]),
                             "delta": cpair(s["delta"]), "max_residual": s["max_residual"],
                             "violated": s["violated"]} for s in self.spot_checks],
            "higher_degree": self.higher_degree,
        }


def _split(v):
    return np.concatenate((v.real, v.imag))


def _minimize_constraints(alpha, x0):
    def fun(x):
        return _split(ulam_constraints(alpha, x[0] + 1j * x[1], x[2] + 1j * x[3]))
    sol = least_squares(fun, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
    beta = complex(sol.x[0], sol.x[1])
    delta = complex(sol.x[2], sol.x[3])
    res = float(np.max(np.abs(ulam_constraints(alpha, beta, delta))))
    return beta, delta, res


def ulam_rigidity_check(grid: RigidityGrid | None = None, tol: float = 1e-8,
                        zero_tol: float = 1e-10) -> RigidityReport:
    """Search for parameters whose degree-2 and -3 eigenpolynomials are Ulam polynomials.

    For each alpha, multistart Levenberg-Marquardt on ``(beta, delta)``
    records every local minimum of the five constraints; the only ones
    with residual ``<= zero_tol`` should sit at the origin.  Every
    nonzero grid pair must violate some constraint by more than ``tol``.
    Minimizers at zero residual are also pushed through the recurrence
    for degrees 4 and 5 to confirm those eigenpolynomials are fixed
    points too.
    """
    grid = grid or RigidityGrid()
    grid.check()
    rng = np.random.default_rng(grid.seed)
    report = RigidityReport(tol=tol, zero_tol=zero_tol)
    for alpha in grid.alphas:
        alpha = float(alpha)
        for _ in range(grid.n_starts):
            x0 = rng.uniform(-grid.start_radius, grid.start_radius, 4)
            beta, delta, res = _minimize_constraints(alpha, x0)
            report.minimizers.append(Minimizer(alpha, beta, delta, res))
        for beta in grid.beta_values:
            for delta in grid.delta_values:
                if beta == 0 and delta == 0:
                    continue
                r = float(np.max(np.abs(ulam_constraints(alpha, beta, delta))))
                report.spot_checks.append({"alpha": alpha, "beta": complex(beta),
                                           "delta": complex(delta), "max_residual": r,
                                           "violated": r > tol})
        best = min((m for m in report.minimizers if m.alpha == alpha), key=lambda m: m.residual)
        if best.residual <= zero_tol:
            for n in (4, 5):
                entry = {"alpha": alpha, "n": n}
                try:
                    poly = recurrence_coeffs(HyperParams(alpha, best.beta, best.delta, 0.0), n)
                except DegenerateEigenvalues:
                    entry["degenerate"] = True
                else:
                    entry["degenerate"] = False
                    entry["ulam_residual"] = float(np.max(np.abs(residual(poly.coeffs,
                                                                          ResidualSystem.FULL))))
                report.higher_degree.append(entry)
    return report
