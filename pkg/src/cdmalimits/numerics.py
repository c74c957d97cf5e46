"""Shared numeric kernel: Hermitian solves, quadrature, fixed points, bisection.

Matrices and vectors are plain ``numpy`` arrays throughout the package;
complex Hermitian positive-definite solves go through LAPACK's Cholesky
factorization (scipy).  Frequency grids over the normalized band
``(-pi, pi]`` store midpoints so that integrands that are discontinuous at
the band edges are never sampled exactly on a jump.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


class NotPositiveDefiniteError(ValueError):
    """Raised when a Cholesky pivot fails on a supposedly PD matrix."""


class DivergenceError(RuntimeError):
    """Raised when a fixed-point iteration produces non-finite state."""


class BracketError(ValueError):
    """Raised when a root bracket does not contain a sign change."""


@dataclass(frozen=True)
class FixedPointReport:
    """Outcome of a damped fixed-point iteration."""

    iterations: int
    final_residual: float
    converged: bool
    damping_used: float


def hermitian_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` for Hermitian positive-definite ``matrix``.

    Parameters
    ----------
    matrix : (n, n) array_like
        Hermitian positive definite.  Only one triangle is referenced.
    rhs : (n,) or (n, m) array_like
        Right-hand side vector(s).

    Returns
    -------
    numpy.ndarray
        Solution with the same trailing shape as ``rhs``.

    Raises
    ------
    NotPositiveDefiniteError
        If a Cholesky pivot is non-positive ("not positive definite").
    """
    a = np.asarray(matrix)
    b = np.asarray(rhs)
    try:
        factor = scipy.linalg.cho_factor(a, lower=False, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("not positive definite") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def integrate_uniform(samples, spacing: float):
    """Trapezoidal integral of uniformly spaced samples.

    Exact for affine integrands; the grid is assumed to include both
    endpoints of the integration interval.

    Raises
    ------
    ValueError
        If fewer than two samples are supplied ("empty grid").
    """
    y = np.asarray(samples)
    if y.size < 2:
        raise ValueError("empty grid")
    return np.trapezoid(y, dx=spacing)


def fixed_point(step, init, tol: float = 1e-10, max_iter: int = 10000,
                damping: float = 1.0):
    """Damped fixed-point iteration ``x <- (1-d)*x + d*step(x)``.

    The residual is the sup norm of ``step(x) - x`` (the undamped equation
    residual, independent of the damping factor).  When the residual
    increases from one iteration to the next the damping is halved, which
    only matters for maps that are not contractive out of the box.

    Parameters
    ----------
    step : callable
        Self-map on the state (scalar or ndarray).
    init : array_like or scalar
        Starting state.
    tol, max_iter, damping : float, int, float
        Sup-norm tolerance, iteration cap, initial damping in (0, 1].

    Returns
    -------
    (state, FixedPointReport)

    Raises
    ------
    DivergenceError
        If the state stops being finite ("divergence").
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    x = np.asarray(init, dtype=np.result_type(np.asarray(init), np.float64))
    prev_residual = np.inf
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        fx = np.asarray(step(x))
        if not np.all(np.isfinite(fx)):
            raise DivergenceError("divergence")
        residual = float(np.max(np.abs(fx - x))) if fx.size else 0.0
        if residual > prev_residual and damping > 2.0 ** -20:
            damping *= 0.5
        prev_residual = residual
        x = (1.0 - damping) * x + damping * fx
        if residual <= tol:
            break
    report = FixedPointReport(iterations=iterations,
                              final_residual=residual,
                              converged=residual <= tol,
                              damping_used=damping)
    if x.ndim == 0:
        return x[()], report
    return x, report


def bisect(fn, lo: float, hi: float, tol: float = 1e-12,
           max_iter: int = 200) -> float:
    """Bracketed bisection root of a scalar function.

    Requires ``fn(lo)`` and ``fn(hi)`` to have opposite signs (or one of
    them to vanish); raises a "bracket" error otherwise.
    """
    if not lo < hi:
        raise ValueError("bracket endpoints must satisfy lo < hi")
    f_lo = fn(lo)
    f_hi = fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise BracketError("bracket")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = fn(mid)
        if f_mid == 0.0:
            return mid
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Midpoint grid over the normalized frequency band ``(-pi, pi]``.

    Points are ``-pi + (m + 1/2) * spacing`` for ``m = 0..count-1`` with
    ``spacing = 2*pi/count``, so the band edges and zero are never sampled.
    """

    points: np.ndarray
    spacing: float

    @classmethod
    def midpoints(cls, count: int = 512) -> "FrequencyGrid":
        if count < 2 or count % 2 != 0:
            raise ValueError("grid size must be a positive even integer")
        spacing = 2.0 * np.pi / count
        points = -np.pi + (np.arange(count) + 0.5) * spacing
        points.setflags(write=False)
        return cls(points=points, spacing=spacing)

    @property
    def count(self) -> int:
        return len(self.points)

    def integrate(self, samples):
        """Midpoint-rule integral over the full periodic band.

        Equal-weight ``spacing * sum`` — exact for trigonometric
        polynomials of degree below ``count``, which is the right rule for
        integrals of periodic functions over one full period.
        """
        y = np.asarray(samples)
        if y.size == 0:
            raise ValueError("empty grid")
        return self.spacing * y.sum(axis=-1)
