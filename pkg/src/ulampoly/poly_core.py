"""Complex polynomial arithmetic on coefficient vectors.

Monic polynomials of degree N are stored by their N non-leading
coefficients ``c_1..c_N`` where ``c_j`` multiplies ``x**(N - j)``; the
leading 1 is implicit.  Everything here is double-precision complex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MonicPoly",
    "RootFindingError",
    "as_cvec",
    "elem_sym",
    "elem_sym_all",
    "poly_from_roots",
    "eval_poly",
    "derivative",
    "all_roots",
]

_EPS = np.finfo(float).eps


class RootFindingError(RuntimeError):
    """Simultaneous root iteration hit its iteration cap."""


def as_cvec(values) -> np.ndarray:
    """Coerce to a 1-D complex128 array, rejecting NaN/Inf."""
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class MonicPoly:
    """Monic polynomial ``x**N + sum_m coeffs[m-1] * x**(N-m)``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = as_cvec(self.coeffs)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def full_coeffs(self) -> np.ndarray:
        """Coefficients including the leading 1, highest power first."""
        return np.concatenate(([1.0 + 0j], self.coeffs))

    def __call__(self, z):
        return eval_poly(self, z)

    def __eq__(self, other):
        if not isinstance(other, MonicPoly):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


def elem_sym_all(c) -> np.ndarray:
    """Return ``[e_0, e_1, ..., e_N]`` of the entries of ``c``.

    Built by multiplying out ``prod (1 + c_n x)`` one factor at a time,
    which is the Vieta recurrence without sign bookkeeping.
    """
    c = np.asarray(c, dtype=np.complex128)
    e = np.zeros(len(c) + 1, dtype=np.complex128)
    e[0] = 1.0
    for k, cn in enumerate(c, start=1):
        # update in place from the top so e[j-1] is still the old value
        e[1:k + 1] = e[1:k + 1] + cn * e[0:k]
    return e


def elem_sym(c, j: int) -> complex:
    """Elementary symmetric polynomial ``e_j`` over strictly increasing index tuples."""
    c = as_cvec(c)
    if not 0 <= j <= len(c):
        raise IndexError(f"elem_sym index {j} out of range for length {len(c)}")
    return complex(elem_sym_all(c)[j])


def poly_from_roots(roots) -> MonicPoly:
    """Monic polynomial ``prod (x - r_n)``."""
    r = as_cvec(roots)
    e = elem_sym_all(r)[1:]
    signs = (-1.0) ** np.arange(1, len(r) + 1)
    return MonicPoly(signs * e)


def eval_poly(p: MonicPoly, z):
    """Horner evaluation; ``z`` may be a scalar or an array."""
    z = np.asarray(z, dtype=np.complex128)
    acc = np.ones_like(z)
    for cm in p.coeffs:
        acc = acc * z + cm
    return complex(acc) if acc.ndim == 0 else acc


def derivative(p: MonicPoly) -> np.ndarray:
    """Coefficients of ``p'`` highest power first (leading entry is N)."""
    n = p.degree
    if n < 1:
        raise ValueError("derivative needs degree >= 1")
    full = p.full_coeffs()
    powers = np.arange(n, 0, -1)
    return full[:-1] * powers


def _horner_with_derivative(full: np.ndarray, z: np.ndarray):
    b = np.full_like(z, full[0])
    d = np.zeros_like(z)
    for a in full[1:]:
        d = d * z + b
        b = b * z + a
    return b, d


def all_roots(p: MonicPoly, tol: float = 1e-13, max_iter: int = 500,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """All N roots of ``p`` by Aberth-Ehrlich simultaneous iteration.

    Starting points are roots of unity scaled by the Cauchy bound
    ``1 + max|c_j|`` with a small angular perturbation; pass ``rng`` to
    choose the perturbation, otherwise a fixed default is used.  A root
    is frozen once its backward error ``|p(z)| / sum |c_k| |z|**(N-k)``
    drops below ``tol`` or its correction falls to rounding level.
    Multiple roots come back as clusters of nearly equal values.

    Raises:
        RootFindingError: if some root has not settled after ``max_iter``
            sweeps.
    """
    n = p.degree
    if n < 1:
        raise ValueError("all_roots needs degree >= 1")
    full = p.full_coeffs()
    if n == 1:
        return np.array([-full[1]])
    abs_full = np.abs(full)
    radius = 1.0 + float(np.max(abs_full[1:]))
    if rng is None:
        phase = 0.4
        jitter = np.linspace(0.0, 0.1, n)
    else:
        phase = rng.uniform(0.0, 2 * np.pi)
        jitter = rng.uniform(0.0, 0.1, n)
    z = radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + phase + jitter))
    active = np.ones(n, dtype=bool)
    abs_floor = 4 * _EPS * radius

    for _ in range(max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return z
        pz, dpz = _horner_with_derivative(full, z[idx])
        scale = _horner_with_derivative(abs_full, np.abs(z[idx]).astype(np.complex128))[0].real
        done = np.abs(pz) <= tol * scale
        safe = np.where(dpz == 0, 1.0, dpz)
        ratio = np.where(dpz == 0, 0.0, pz / safe)
        diff = z[idx, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        recip = 1.0 / diff
        recip[np.arange(idx.size), idx] = 0.0
        denom = 1.0 - ratio * recip.sum(axis=1)
        w = np.where(denom == 0, ratio, ratio / np.where(denom == 0, 1.0, denom))
        step = np.where(done, 0.0, w)
        z[idx] = z[idx] - step
        done |= np.abs(w) <= abs_floor
        active[idx[done]] = False
    if np.any(active):
        raise RootFindingError(
            f"Aberth iteration did not settle {int(active.sum())} of {n} roots "
            f"in {max_iter} sweeps")
    return z
