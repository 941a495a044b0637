"""A solvable flow whose equilibria are the zeros of an Ulam polynomial.

The zeros ``zeta_n(t)`` of

    z**N + sum_m (gamma_m + b_m e**-t) z**(N-m)

obey ``zeta_n' = -p(zeta_n) / prod_{l != n} (zeta_n - zeta_l)`` where
``p`` has coefficients ``gamma``.  When ``gamma`` is a fixed point with
distinct entries, ``gamma`` itself (and every permutation of it) is an
equilibrium with Jacobian ``-I``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .poly_core import MonicPoly, all_roots, as_cvec, derivative, eval_poly, poly_from_roots
from .ulam_map import ResidualSystem, min_pairwise_gap, residual

GAP_TOL = 1e-10
EQUILIBRIUM_TOL = 1e-9


class Collision(ArithmeticError):
    """Two zeros coincide (up to the gap tolerance); the flow is singular there."""


class InadmissibleEquilibrium(ValueError):
    """The coefficient vector is not a distinct-entry fixed point."""


@dataclass(frozen=True)
class FlowParams:
    """Constants of the time-dependent polynomial; ``a`` is pinned to 0."""

    b: np.ndarray
    a: complex = 0.0

    @classmethod
    def from_initial(cls, zeta0, gamma) -> "FlowParams":
        c0 = poly_from_roots(zeta0).coeffs
        return cls(b=c0 - as_cvec(gamma))

    def coefficients(self, gamma, t: float) -> np.ndarray:
        return as_cvec(gamma) + self.b * np.exp(-t)


@dataclass
class FlowTrajectory:
    times: np.ndarray
    states: np.ndarray
    gamma: np.ndarray
    collision_flag: bool = False

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def state_at(self, t: float) -> np.ndarray:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"t={t} is not on the recorded grid")
        return self.states[k]

    def to_csv(self, fh=None) -> str | None:
        """Columns ``t, re_1, im_1, ..., re_N, im_N``."""
        own = fh is None
        fh = fh or io.StringIO()
        n = self.states.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"{part}_{k}" for k in range(1, n + 1) for part in ("re", "im")])
        for t, row in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(v)) for z in row for v in (z.real, z.imag)])
        return fh.getvalue() if own else None

    def to_dict(self) -> dict:
        return {
            "gamma": [[float(z.real), float(z.imag)] for z in self.gamma],
            "collision_flag": self.collision_flag,
            "times": [float(t) for t in self.times],
            "states": [[[float(z.real), float(z.imag)] for z in row] for row in self.states],
        }


def check_admissible(gamma, tol: float = EQUILIBRIUM_TOL) -> np.ndarray:
    g = as_cvec(gamma)
    if min_pairwise_gap(g) <= GAP_TOL:
        raise InadmissibleEquilibrium("entries are not pairwise distinct")
    res = float(np.max(np.abs(residual(g, ResidualSystem.FULL))))
    if res > tol:
        raise InadmissibleEquilibrium(f"not a fixed point (residual {res:.3g})")
    return g


def flow_rhs(zeta, gamma) -> np.ndarray:
    z = as_cvec(zeta)
    if min_pairwise_gap(z) <= GAP_TOL:
        raise Collision("zeros closer than the gap tolerance")
    p = eval_poly(MonicPoly(gamma), z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    return -p / np.prod(diff, axis=1)


def flow_jacobian(zeta, gamma) -> np.ndarray:
    """Analytic Jacobian of :func:`flow_rhs` (the flow is holomorphic in zeta)."""
    z = as_cvec(zeta)
    if min_pairwise_gap(z) <= GAP_TOL:
        raise Collision("zeros closer than the gap tolerance")
    poly = MonicPoly(gamma)
    p = eval_poly(poly, z)
    dp = np.polyval(derivative(poly), z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    den = np.prod(diff, axis=1)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    jac = -(p / den)[:, None] * inv
    jac[np.diag_indices(len(z))] = -dp / den + p / den * inv.sum(axis=1)
    return jac


def jacobian_at_equilibrium(gamma, zeta=None) -> np.ndarray:
    """Jacobian of the flow at ``zeta`` (default ``gamma``), a permutation of ``gamma``."""
    g = check_admissible(gamma)
    z = g if zeta is None else as_cvec(zeta)
    if not np.allclose(np.sort_complex(z), np.sort_complex(g), atol=EQUILIBRIUM_TOL):
        raise InadmissibleEquilibrium("zeta is not a permutation of gamma")
    return flow_jacobian(z, g)


def deviation_from_minus_identity(jac) -> float:
    jac = np.asarray(jac)
    return float(np.max(np.abs(jac + np.eye(len(jac)))))


def integrate(zeta0, gamma, T: float = 25.0, dt: float = 1e-3,
              record_every: int = 1) -> FlowTrajectory:
    """Fixed-step classical RK4 from 0 to T.

    Stops early with ``collision_flag`` set if two zeros come within
    ``GAP_TOL`` of each other.
    """
    g = check_admissible(gamma)
    z0 = as_cvec(zeta0)
    if len(z0) != len(g):
        raise ValueError("zeta0 and gamma differ in length")
    if min_pairwise_gap(z0) <= GAP_TOL:
        raise Collision("initial zeros are not pairwise distinct")
    nsteps = int(round(T / dt))
    states, n_valid = kernels.rk4_flow(z0[None, :], g, dt, nsteps, record_every, GAP_TOL)
    keep = int(n_valid[0])
    times = np.arange(states.shape[1]) * dt * record_every
    return FlowTrajectory(times=times[:keep], states=states[0, :keep].copy(), gamma=g,
                          collision_flag=keep < states.shape[1])


def match_roots(prev, candidates, ambiguity_tol: float = 1e-12):
    """Greedy nearest-neighbour pairing; returns the reordered candidates and ambiguity count."""
    prev = np.asarray(prev)
    cand = np.asarray(candidates)
    n = len(prev)
    dist = np.abs(prev[:, None] - cand[None, :])
    out = np.empty(n, dtype=np.complex128)
    used_p = np.zeros(n, dtype=bool)
    used_c = np.zeros(n, dtype=bool)
    ambiguous = 0
    # stable sort keeps index order when distances tie
    for flat in np.argsort(dist, axis=None, kind="stable"):
        i, j = divmod(int(flat), n)
        if used_p[i] or used_c[j]:
            continue
        rest = dist[i, ~used_c]
        if np.sum(rest - dist[i, j] < ambiguity_tol) > 1:
            ambiguous += 1
        out[i] = cand[j]
        used_p[i] = used_c[j] = True
    return out, ambiguous


@dataclass
class OracleResult:
    times: np.ndarray
    states: np.ndarray
    ambiguities: int = 0


def oracle_path(zeta0, gamma, times, substeps: int = 200) -> OracleResult:
    """Zeros of the closed-form coefficient flow, labelled continuously.

    Coefficients are ``gamma + b e**-t`` with ``b`` set by ``zeta0``; the
    roots are recomputed on a grid uniform in ``e**-t`` and matched to
    the previous grid point.
    """
    g = as_cvec(gamma)
    z0 = as_cvec(zeta0)
    params = FlowParams.from_initial(z0, g)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0) or (len(times) and times[0] < 0):
        raise ValueError("times must be non-negative and sorted")
    cur = z0.copy()
    u_cur = 1.0
    ambiguities = 0
    out = np.empty((len(times), len(z0)), dtype=np.complex128)
    for k, t in enumerate(times):
        u_end = np.exp(-t)
        for u in np.linspace(u_cur, u_end, substeps + 1)[1:] if u_end != u_cur else []:
            roots = all_roots(MonicPoly(g + params.b * u))
            cur, amb = match_roots(cur, roots)
            ambiguities += amb
        u_cur = u_end
        out[k] = cur
    return OracleResult(times=times, states=out, ambiguities=ambiguities)


def oracle(zeta0, gamma, t: float, substeps: int = 200) -> np.ndarray:
    return oracle_path(zeta0, gamma, [t], substeps).states[0]


@dataclass
class StabilityReport:
    gamma: np.ndarray
    radius: float
    trials: int
    converged: int
    collisions: int
    max_final_error: float
    tol: float
    final_errors: list[float] = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.converged / self.trials if self.trials else 1.0

    def to_dict(self) -> dict:
        return {
            "gamma": [[float(z.real), float(z.imag)] for z in self.gamma],
            "radius": self.radius, "trials": self.trials, "converged": self.converged,
            "fraction": self.fraction, "collisions": self.collisions,
            "max_final_error": self.max_final_error, "tol": self.tol,
            "final_errors": self.final_errors,
        }


def random_perturbations(n: int, radius: float, trials: int, seed: int) -> np.ndarray:
    """Entrywise perturbations drawn uniformly from the disc of the given radius."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(size=(trials, n)))
    phi = rng.uniform(0, 2 * np.pi, size=(trials, n))
    return r * np.exp(1j * phi)


def stability_probe(gamma, radius: float, trials: int = 20, seed: int = 0, T: float = 25.0,
                    dt: float = 1e-3, tol: float = 1e-6) -> StabilityReport:
    """Integrate from random nearby starts and count how many return to ``gamma``.

    Convergence is entrywise, with no relabelling: small perturbations
    stay in the basin of the same ordering.
    """
    g = check_admissible(gamma)
    starts = g[None, :] + random_perturbations(len(g), radius, trials, seed)
    nsteps = int(round(T / dt))
    states, n_valid = kernels.rk4_flow(starts, g, dt, nsteps, nsteps, GAP_TOL)
    n_rec = states.shape[1]
    errors = np.max(np.abs(states[:, -1, :] - g[None, :]), axis=1)
    collided = n_valid < n_rec
    ok = (~collided) & (errors <= tol)
    return StabilityReport(gamma=g, radius=float(radius), trials=int(trials),
                           converged=int(ok.sum()), collisions=int(collided.sum()),
                           max_final_error=float(errors.max()) if trials else 0.0, tol=tol,
                           final_errors=[float(e) for e in errors])
