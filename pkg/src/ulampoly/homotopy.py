"""Total-degree homotopy continuation for the fixed-point systems.

Every solution of the FULL or TILDE system is reached by deforming the
decoupled start system ``x_j**d_j = r_j`` with the gamma trick.  The
endpoints are polished, clustered, and turned into
:class:`~ulampoly.ulam_map.FixedPointRecord` objects.  Clusters of more
than one endpoint mark solutions of multiplicity > 1.
"""

from __future__ import annotations

import enum
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ._backend import kernels
from .ulam_map import (
    POLISH_TOL,
    ZERO_TOL,
    FixedPointRecord,
    MaxIterations,
    ResidualSystem,
    SingularJacobian,
    newton_polish,
    residual,
)

log = logging.getLogger(__name__)

CLUSTER_RADIUS = 1e-6
MAX_N = 8


class PathStatus(enum.Enum):
    CONVERGED = "converged"
    AT_INFINITY = "at_infinity"
    FAILED = "failed"


_STATUS = {kernels.CONVERGED: PathStatus.CONVERGED,
           kernels.AT_INFINITY: PathStatus.AT_INFINITY,
           kernels.FAILED: PathStatus.FAILED}

_KIND = {ResidualSystem.FULL: kernels.FULL, ResidualSystem.TILDE: kernels.TILDE}


class TrackingError(RuntimeError):
    """Some paths still failed after the retry with smaller steps."""

    def __init__(self, message, solution_set=None):
        super().__init__(message)
        self.solution_set = solution_set


@dataclass(frozen=True)
class TrackerOptions:
    h_init: float = 0.05
    h_max: float = 0.1
    h_min: float = 1e-14
    max_steps: int = 10_000
    escape_norm: float = 1e8
    corr_tol: float = 1e-9

    def halved(self) -> "TrackerOptions":
        return replace(self, h_init=self.h_init / 2, h_max=self.h_max / 2)


@dataclass
class PathResult:
    start: np.ndarray
    endpoint: np.ndarray
    status: PathStatus
    steps: int
    min_step: float


@dataclass
class SolutionSet:
    n: int
    system: ResidualSystem
    seed: int
    records: list[FixedPointRecord]
    path_count: int
    at_infinity_count: int = 0
    failed_count: int = 0
    paths: list[PathResult] = field(default_factory=list, repr=False)

    def __len__(self):
        return len(self.records)

    @property
    def multiplicity_pattern(self) -> list[int]:
        """Sizes of clusters holding more than one endpoint, largest first."""
        return sorted((r.cluster_size for r in self.records if r.cluster_size > 1), reverse=True)

    def accounted_paths(self) -> int:
        return sum(r.cluster_size for r in self.records) + self.at_infinity_count + self.failed_count

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "system": self.system.value,
            "seed": self.seed,
            "path_count": self.path_count,
            "at_infinity_count": self.at_infinity_count,
            "failed_count": self.failed_count,
            "record_count": len(self.records),
            "multiplicity_pattern": self.multiplicity_pattern,
            "records": [record_to_dict(r) for r in self.records],
        }


def record_to_dict(r: FixedPointRecord) -> dict:
    return {
        "point": [[float(z.real), float(z.imag)] for z in r.point],
        "residual": float(r.residual),
        "cluster_size": int(r.cluster_size),
        "zero_tail": int(r.zero_tail),
        "is_real": bool(r.is_real),
    }


def _rngs(seed: int):
    base = np.random.SeedSequence(seed)
    const_seq, gamma_seq = base.spawn(2)
    return np.random.default_rng(const_seq), np.random.default_rng(gamma_seq)


def start_constants(n: int, seed: int) -> np.ndarray:
    """Unit-modulus constants ``r_j`` of the start system for this seed."""
    rng, _ = _rngs(seed)
    return np.exp(2j * np.pi * rng.uniform(size=n))


def gamma_constant(seed: int) -> complex:
    """``exp(i theta)`` with theta bounded away from multiples of pi."""
    _, rng = _rngs(seed)
    theta = rng.uniform(0.05, np.pi - 0.05)
    if rng.uniform() < 0.5:
        theta = -theta
    return complex(np.exp(1j * theta))


def start_system(degrees, seed: int = 0) -> list[np.ndarray]:
    """All ``prod(degrees)`` solutions of ``x_j**d_j = r_j``, in lexicographic root order."""
    degrees = [int(d) for d in degrees]
    if any(d < 1 for d in degrees):
        raise ValueError("start-system degrees must be >= 1")
    consts = start_constants(len(degrees), seed)
    per_var = []
    for r, d in zip(consts, degrees):
        base = abs(r) ** (1.0 / d) * np.exp(1j * np.angle(r) / d)
        per_var.append(base * np.exp(2j * np.pi * np.arange(d) / d))
    return [np.array(p, dtype=np.complex128) for p in itertools.product(*per_var)]


def track_path(start, sys: ResidualSystem, gamma: complex, constants,
               opts: TrackerOptions | None = None) -> PathResult:
    """Follow one path of ``gamma*t*S(x) + (1-t)*F(x)`` from t=1 down to t=0."""
    opts = opts or TrackerOptions()
    start = np.asarray(start, dtype=np.complex128)
    degrees = np.asarray(sys.degrees(len(start)), dtype=np.int_)
    end, status, steps, min_step = kernels.track_path(
        start, _KIND[sys], degrees, np.asarray(constants, dtype=np.complex128), gamma,
        h_init=opts.h_init, h_max=opts.h_max, h_min=opts.h_min,
        max_steps=opts.max_steps, escape_norm=opts.escape_norm, corr_tol=opts.corr_tol)
    return PathResult(start=start, endpoint=np.asarray(end), status=_STATUS[int(status)],
                      steps=int(steps), min_step=float(min_step))


def _track_all(starts, sys, gamma, consts, opts, workers):
    def one(s):
        return track_path(s, sys, gamma, consts, opts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, starts))
    return [one(s) for s in starts]


def _sort_key(point, digits=8):
    return tuple(v for z in point for v in (round(float(z.real), digits) + 0.0,
                                            round(float(z.imag), digits) + 0.0))


def _polish(endpoint, sys):
    try:
        rec = newton_polish(endpoint, sys, tol=POLISH_TOL)
    except (SingularJacobian, MaxIterations, np.linalg.LinAlgError):
        return np.asarray(endpoint), False
    return rec.point, True


def cluster_endpoints(points, radius: float = CLUSTER_RADIUS) -> list[list[int]]:
    """Single-linkage groups of points closer than ``radius`` in max-norm."""
    order = sorted(range(len(points)), key=lambda i: _sort_key(points[i]))
    parent = list(range(len(points)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a_pos, a in enumerate(order):
        for b in order[a_pos + 1:]:
            if np.max(np.abs(points[a] - points[b])) < radius:
                parent[find(b)] = find(a)
    groups: dict[int, list[int]] = {}
    for i in order:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def solve_system(n: int, sys: ResidualSystem = ResidualSystem.FULL, seed: int = 0,
                 opts: TrackerOptions | None = None, cluster_radius: float = CLUSTER_RADIUS,
                 workers: int = 1) -> SolutionSet:
    """Track every total-degree path and collect the distinct solutions.

    Paths that fail or escape are retried once with halved step bounds.

    Raises:
        TrackingError: if any path still fails after the retry.
    """
    if not 1 <= n <= MAX_N:
        raise ValueError(f"N must be in 1..{MAX_N}, got {n}")
    opts = opts or TrackerOptions()
    degrees = sys.degrees(n)
    consts = start_constants(n, seed)
    gamma = gamma_constant(seed)
    starts = start_system(degrees, seed)

    results = _track_all(starts, sys, gamma, consts, opts, workers)
    redo = [i for i, r in enumerate(results) if r.status is not PathStatus.CONVERGED]
    if redo:
        log.info("retrying %d of %d paths with halved steps", len(redo), len(results))
        again = _track_all([starts[i] for i in redo], sys, gamma, consts, opts.halved(), workers)
        for i, r in zip(redo, again):
            results[i] = r

    converged = [r for r in results if r.status is PathStatus.CONVERGED]
    points = [_polish(r.endpoint, sys)[0] for r in converged]

    records = []
    for group in cluster_endpoints(points, cluster_radius):
        if len(group) == 1:
            pt = points[group[0]]
        else:
            pt = np.mean([points[i] for i in group], axis=0)
        res = float(np.max(np.abs(residual(pt, sys))))
        records.append(FixedPointRecord.from_point(pt, res, cluster_size=len(group)))
    records.sort(key=lambda r: _sort_key(r.point))

    out = SolutionSet(
        n=n, system=sys, seed=seed, records=records, path_count=len(starts),
        at_infinity_count=sum(r.status is PathStatus.AT_INFINITY for r in results),
        failed_count=sum(r.status is PathStatus.FAILED for r in results),
        paths=results,
    )
    if out.failed_count:
        raise TrackingError(f"{out.failed_count} of {out.path_count} paths failed "
                            f"for N={n} {sys.value}", out)
    return out


@dataclass
class UlamCounts:
    n: int
    u_n: int
    v_tilde: int | None
    v_zero: int | None
    intersection: int | None
    direct_full: int | None = None

    @property
    def consistent(self) -> bool:
        """Inclusion-exclusion total agrees with direct enumeration (when run)."""
        if self.v_tilde is not None and self.u_n != self.v_zero + self.v_tilde - self.intersection:
            return False
        return self.direct_full is None or self.direct_full == self.u_n

    def to_dict(self) -> dict:
        return {"n": self.n, "u_n": self.u_n, "v_tilde": self.v_tilde, "v_zero": self.v_zero,
                "intersection": self.intersection, "direct_full": self.direct_full,
                "consistent": self.consistent}


def intersection_records(tilde: SolutionSet, zero_tol: float = ZERO_TOL) -> list[FixedPointRecord]:
    """TILDE solutions that also have ``c_N = 0``."""
    return [r for r in tilde.records if abs(r.point[-1]) < zero_tol]


def count_ulam(n: int, seed: int = 0, cross_check: bool = True, workers: int = 1,
               opts: TrackerOptions | None = None) -> UlamCounts:
    """|U_N| assembled as |U_{N-1}| + |V(tilde I_N)| - |intersection|.

    The recursion bottoms out at |U_1| = 1.  With ``cross_check`` the
    FULL system is solved as well and its record count stored in
    ``direct_full``.
    """
    if n < 1:
        raise ValueError("N must be >= 1")
    direct = None
    if cross_check:
        direct = len(solve_system(n, ResidualSystem.FULL, seed, opts=opts, workers=workers))
    if n == 1:
        return UlamCounts(n=1, u_n=1, v_tilde=None, v_zero=None, intersection=None,
                          direct_full=direct)
    u_prev = 1
    for k in range(2, n + 1):
        tilde = solve_system(k, ResidualSystem.TILDE, seed, opts=opts, workers=workers)
        inter = len(intersection_records(tilde))
        v_zero = u_prev
        u_prev = v_zero + len(tilde) - inter
    return UlamCounts(n=n, u_n=u_prev, v_tilde=len(tilde), v_zero=v_zero, intersection=inter,
                      direct_full=direct)


def nontrivial_existence_check(n: int, seed: int = 0, zero_tol: float = ZERO_TOL) -> bool:
    """Is there a solution with every entry nonzero in degree N or N-1?"""
    if n < 2:
        raise ValueError("N must be >= 2")
    for k in (n, n - 1):
        if k < 2:
            continue
        sols = solve_system(k, ResidualSystem.TILDE, seed)
        if any(r.all_nonzero(zero_tol) for r in sols.records):
            return True
    return False

