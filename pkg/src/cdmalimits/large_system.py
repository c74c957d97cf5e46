"""Large-system (K, N -> infinity at fixed load) performance formulas.

Implements the two solver routes for the limiting MMSE performance of
asynchronous code-division multiple access with random spreading:

* the matrix route — a frequency-dependent ``r x r`` positive-definite
  field ``Upsilon(Omega)`` solving a fixed-point matrix equation, from
  which every (power, delay) user class gets its SINR as a quadratic-form
  integral over the normalized band;
* the scalar route — valid when delays are uniform and independent of the
  powers (or when the pulse fits inside ``1/(2*T_c)`` of bandwidth), where
  a single scalar multiuser efficiency solves a one-dimensional fixed
  point and carries a per-frequency efficiency density.

Plus the closed sinc-bandwidth family, the synchronous baseline it
degenerates to, and the effective interference spectral density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import FixedPointReport, FrequencyGrid, bisect, fixed_point
from .waveforms import ChipWaveform, _check_oversampling, _delta_components

TWO_PI = 2.0 * np.pi


class ZeroPowerError(ValueError):
    """Raised when a multiuser efficiency is requested for zero power."""


class HypothesisViolationError(ValueError):
    """Raised when the scalar solver's validity conditions fail."""


@dataclass(frozen=True, eq=False)
class PowerDelayLaw:
    """Discrete joint law of received power and sub-chip delay.

    Atoms are parallel arrays ``(powers, delays, weights)`` with weights
    summing to one.  ``powers_delays_independent`` and ``delays_uniform``
    describe structural facts about the law that the scalar solver needs.
    """

    powers: np.ndarray
    delays: np.ndarray
    weights: np.ndarray
    powers_delays_independent: bool = True
    delays_uniform: bool = True

    def __post_init__(self):
        powers = np.asarray(self.powers, dtype=float)
        delays = np.asarray(self.delays, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if not (powers.shape == delays.shape == weights.shape):
            raise ValueError("law atom arrays must share one shape")
        if powers.ndim != 1 or powers.size == 0:
            raise ValueError("law needs at least one atom")
        if np.any(powers < 0):
            raise ValueError("powers must be nonnegative")
        if np.any(delays < 0):
            raise ValueError("delays must be nonnegative")
        if np.any(weights <= 0):
            raise ValueError("weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to one")
        for name, arr in (("powers", powers), ("delays", delays),
                          ("weights", weights)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_atoms(self) -> int:
        return self.powers.size

    def power_marginal(self):
        """Distinct power values and their total weights (delays summed out).

        Atoms sharing a power level are merged, so laws built as a power
        law crossed with a dense delay grid cost the scalar solvers one
        term per power level instead of one per atom.
        """
        unique, inverse = np.unique(self.powers, return_inverse=True)
        weights = np.bincount(inverse, weights=self.weights,
                              minlength=unique.size)
        return unique, weights

    def mean_power(self) -> float:
        return float(np.dot(self.weights, self.powers))


def uniform_delay_grid(n_delays: int, chip_interval: float) -> np.ndarray:
    """Equally spaced delay atoms ``i * T_c / n`` on ``[0, T_c)``."""
    if n_delays < 1:
        raise ValueError("need at least one delay atom")
    return np.arange(n_delays) * chip_interval / n_delays


def equal_power_uniform_delays(n_delays: int = 64, power: float = 1.0,
                               chip_interval: float = 1.0) -> PowerDelayLaw:
    """Unit-weight power atom crossed with a uniform delay grid."""
    delays = uniform_delay_grid(n_delays, chip_interval)
    return PowerDelayLaw(
        powers=np.full(n_delays, float(power)),
        delays=delays,
        weights=np.full(n_delays, 1.0 / n_delays),
        powers_delays_independent=True,
        delays_uniform=True,
    )


def product_law(powers, power_weights, n_delays: int = 64,
                chip_interval: float = 1.0) -> PowerDelayLaw:
    """Independent product of a discrete power law and uniform delays."""
    powers = np.asarray(powers, dtype=float)
    pw = np.asarray(power_weights, dtype=float)
    delays = uniform_delay_grid(n_delays, chip_interval)
    grid_p, grid_t = np.meshgrid(powers, delays, indexing="ij")
    grid_w = np.repeat(pw / n_delays, n_delays)
    return PowerDelayLaw(
        powers=grid_p.ravel(),
        delays=grid_t.ravel(),
        weights=grid_w,
        powers_delays_independent=True,
        delays_uniform=True,
    )


def synchronous_law(powers=(1.0,), power_weights=(1.0,),
                    delay: float = 0.0) -> PowerDelayLaw:
    """All users at one common delay (chip-synchronous when zero)."""
    powers = np.asarray(powers, dtype=float)
    pw = np.asarray(power_weights, dtype=float)
    return PowerDelayLaw(
        powers=powers,
        delays=np.full(powers.shape, float(delay)),
        weights=pw,
        powers_delays_independent=True,
        delays_uniform=False,
    )


@dataclass(frozen=True, eq=False)
class SystemLaw:
    """Asymptotic system description.

    Attributes
    ----------
    load : float
        Users per chip ``beta = K/N``.
    noise_density : float
        One-sided white-noise level ``N_0`` (watts/hertz).
    oversampling : int
        Receiver samples per chip ``r``.
    waveform : ChipWaveform
    law : PowerDelayLaw
    """

    load: float
    noise_density: float
    oversampling: int
    waveform: ChipWaveform
    law: PowerDelayLaw

    def __post_init__(self):
        if self.load < 0:
            raise ValueError("load must be nonnegative")
        if self.noise_density <= 0:
            raise ValueError("noise density must be positive")
        _check_oversampling(self.waveform, self.oversampling)
        tc = self.waveform.chip_interval
        if np.any(self.law.delays >= tc):
            raise ValueError("law delays must lie in [0, T_c)")

    @property
    def noise_variance(self) -> float:
        """Discrete-time noise variance ``r * N_0 / T_c``."""
        return self.oversampling * self.noise_density / \
            self.waveform.chip_interval

    @property
    def snr(self) -> float:
        """Per-chip signal-to-noise ratio ``E / N_0`` at unit power."""
        return self.waveform.energy / self.noise_density


@dataclass(frozen=True, eq=False)
class UpsilonField:
    """The positive-definite matrix field of the matrix solver on a grid."""

    grid: FrequencyGrid
    matrices: np.ndarray  # (grid.count, r, r)


def _quadratic_forms(deltas: np.ndarray, field: np.ndarray) -> np.ndarray:
    """``delta^H Upsilon delta`` for each (atom, frequency): shape (A, M)."""
    return np.real(np.einsum("ams,msk,amk->am", np.conj(deltas), field,
                             deltas, optimize=True))


def solve_upsilon(sys: SystemLaw, grid: FrequencyGrid | None = None,
                  tol: float = 1e-10, max_iter: int = 10000,
                  damping: float = 1.0):
    """Solve the matrix fixed point for the field ``Upsilon(Omega)``.

    The field satisfies, at every grid frequency,
    ``inv(Upsilon) = sigma^2 I + beta * sum_atoms w * lam * delta delta^H
    / (1 + SINR_atom)`` where ``SINR_atom = (lam/2pi) * integral
    delta^H Upsilon delta`` and ``sigma^2 = r N_0 / T_c``.

    Returns ``(UpsilonField, FixedPointReport)``; a non-converged run is
    reported, never silent.
    """
    if grid is None:
        grid = FrequencyGrid.midpoints(512)
    r = sys.oversampling
    law = sys.law
    sigma2 = sys.noise_variance
    deltas = _delta_components(sys.waveform, r, grid.points, law.delays)
    eye = np.eye(r, dtype=complex)
    init = np.broadcast_to(eye / sigma2,
                           (grid.count, r, r)).copy()

    quad_scale = grid.spacing / TWO_PI

    def step(field: np.ndarray) -> np.ndarray:
        forms = _quadratic_forms(deltas, field)  # (A, M)
        sinr = law.powers * quad_scale * forms.sum(axis=1)  # (A,)
        coeff = sys.load * law.weights * law.powers / (1.0 + sinr)
        interference = np.einsum("a,ams,amk->msk", coeff, deltas,
                                 np.conj(deltas), optimize=True)
        return np.linalg.inv(sigma2 * eye[None, :, :] + interference)

    state, report = fixed_point(step, init, tol=tol, max_iter=max_iter,
                                damping=damping)
    return UpsilonField(grid=grid, matrices=state), report


def sinr_user(field: UpsilonField, sys: SystemLaw, power: float,
              delay: float) -> float:
    """Limiting MMSE SINR of a user class with the given power and delay.

    ``SINR = (power/2pi) * integral delta^H(Omega, delay) Upsilon(Omega)
    delta(Omega, delay) dOmega`` over the solved grid.  Delays outside
    ``[0, T_c)`` are reduced modulo the chip (a whole-chip shift only
    rotates the phase of the delay vector and cancels in the form).
    """
    tc = sys.waveform.chip_interval
    tau = float(delay) % tc
    deltas = _delta_components(sys.waveform, sys.oversampling,
                               field.grid.points, np.array([tau]))
    forms = _quadratic_forms(deltas, field.matrices)
    return float(power) * field.grid.spacing / TWO_PI * \
        float(np.real(forms.sum()))


def efficiency_of_user(sinr: float, power: float, sys: SystemLaw) -> float:
    """Multiuser efficiency: SINR over the single-user matched-filter SNR.

    ``eta = sinr * N_0 / (power * E)``; raises "zero power" for
    ``power <= 0``.
    """
    if power <= 0:
        raise ZeroPowerError("zero power")
    return float(sinr) * sys.noise_density / (float(power) *
                                              sys.waveform.energy)


@dataclass(frozen=True, eq=False)
class EfficiencySpectrum:
    """Per-frequency multiuser efficiency density and its integral."""

    frequencies: np.ndarray  # rad/s over the pulse support
    density: np.ndarray     # eta(omega), dimensionless
    scalar: float           # eta = (1/2pi) * integral density


def _scalar_hypotheses_ok(sys: SystemLaw) -> bool:
    law = sys.law
    narrow = sys.waveform.bandwidth <= 1.0 / (
        2.0 * sys.waveform.chip_interval) + 1e-12
    return (law.delays_uniform and law.powers_delays_independent) or narrow


def _support_grid(waveform: ChipWaveform, n_points: int) -> np.ndarray:
    """Midpoint grid over the (symmetric) pulse support in rad/s."""
    edge = TWO_PI * waveform.bandwidth
    spacing = 2.0 * edge / n_points
    return -edge + (np.arange(n_points) + 0.5) * spacing


def _efficiency_density(power_gain: np.ndarray, interference: float,
                        energy: float) -> np.ndarray:
    """Closed-form density: ``1/eta(w) = E/|Phi|^2 + interference``."""
    out = np.zeros_like(power_gain)
    positive = power_gain > 0
    out[positive] = 1.0 / (energy / power_gain[positive] + interference)
    return out


def solve_efficiency_scalar(sys: SystemLaw, n_points: int = 2048,
                            tol: float = 1e-12) -> EfficiencySpectrum:
    """Scalar-route multiuser efficiency with its spectral density.

    Valid when the law has uniform delays independent of powers, or when
    the pulse occupies at most ``1/(2*T_c)`` of one-sided bandwidth;
    otherwise raises "corollary hypotheses violated".  The density obeys
    ``1/eta(w) = E/|Phi(w)|^2 + (beta/T_c) * sum_atoms w*lam /
    (N_0/E + lam*eta)`` with ``eta = (1/2pi) * integral eta(w) dw``; the
    scalar is found by bisection on ``(0, 1]``, where the map is monotone.
    """
    if not _scalar_hypotheses_ok(sys):
        raise HypothesisViolationError("corollary hypotheses violated")
    waveform = sys.waveform
    energy = waveform.energy
    tc = waveform.chip_interval
    omegas = _support_grid(waveform, n_points)
    spacing = omegas[1] - omegas[0]
    gain = waveform.power_spectrum(omegas)
    powers, weights = sys.law.power_marginal()
    noise_over_energy = sys.noise_density / energy

    def integrated(eta: float) -> float:
        interference = sys.load / tc * float(
            np.sum(weights * powers / (noise_over_energy + powers * eta)))
        density = _efficiency_density(gain, interference, energy)
        return float(density.sum()) * spacing / TWO_PI

    residual = lambda eta: eta - integrated(eta)
    if sys.load == 0 or residual(1.0) <= 0.0:
        # eta = 1 is exact here; don't launder it through the quadrature.
        interference = sys.load / tc * float(
            np.sum(weights * powers / (noise_over_energy + powers)))
        density = _efficiency_density(gain, interference, energy)
        return EfficiencySpectrum(frequencies=omegas, density=density,
                                  scalar=1.0)
    scalar = bisect(residual, 1e-15, 1.0, tol=tol)
    interference = sys.load / tc * float(
        np.sum(weights * powers / (noise_over_energy + powers * scalar)))
    density = _efficiency_density(gain, interference, energy)
    scalar = float(density.sum()) * spacing / TWO_PI
    return EfficiencySpectrum(frequencies=omegas, density=density,
                              scalar=scalar)


def _scalar_root(load: float, bandwidth_scale: float, powers, weights,
                 noise_density: float, tol: float = 1e-13) -> float:
    """Positive root of ``1/eta = 1 + (beta/alpha) sum w*lam/(N0+lam*eta)``."""
    powers = np.asarray(powers, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if load == 0:
        return 1.0

    def residual(eta: float) -> float:
        s = float(np.sum(weights * powers /
                         (noise_density + powers * eta)))
        return 1.0 + (load / bandwidth_scale) * s - 1.0 / eta

    if residual(1.0) == 0.0:
        return 1.0
    return bisect(residual, 1e-300, 1.0, tol=tol)


def solve_efficiency_sinc(load: float, relative_bandwidth: float, powers,
                          weights, noise_density: float) -> float:
    """Multiuser efficiency of the flat bandlimited pulse family.

    Solves ``1/eta = 1 + (beta/alpha) * sum w*lam/(N0 + lam*eta)`` by
    bisection on ``(0, 1]``; the bandwidth enters only through the
    effective load ``beta/alpha``.
    """
    if relative_bandwidth <= 0:
        raise ValueError("relative bandwidth must be positive")
    if load < 0:
        raise ValueError("load must be nonnegative")
    return _scalar_root(load, relative_bandwidth, powers, weights,
                        noise_density)


def solve_efficiency_sync(load: float, powers, weights,
                          noise_density: float) -> float:
    """Synchronous-system multiuser efficiency (unit-bandwidth case)."""
    if load < 0:
        raise ValueError("load must be nonnegative")
    return _scalar_root(load, 1.0, powers, weights, noise_density)


def effective_interference_density(p_self: float, p_other: float,
                                   sinr: float) -> float:
    """Per-frequency effective interference between two power densities.

    ``p_self * p_other / (p_self + p_other * sinr)``, by convention zero
    when either density vanishes.
    """
    if p_self < 0 or p_other < 0 or sinr < 0:
        raise ValueError("densities and sinr must be nonnegative")
    if p_self == 0.0 or p_other == 0.0:
        return 0.0
    return p_self * p_other / (p_self + p_other * sinr)


def received_power_density(waveform: ChipWaveform, omega: float,
                           power: float) -> float:
    """Received power spectral density ``power * |Phi(omega)|^2 / T_c``."""
    return float(power) * float(waveform.power_spectrum(omega)) / \
        waveform.chip_interval
