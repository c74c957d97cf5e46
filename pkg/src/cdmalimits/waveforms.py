"""Chip-pulse spectra and the frequency/delay objects built from them.

A :class:`ChipWaveform` models the spectrum ``Phi(omega)`` of the received
chip pulse (transmit pulse convolved with the receive filter).  Energy uses
the convention ``E = (1/2pi) * integral |Phi(omega)|^2 domega`` so that the
built-in unit-energy pulses integrate to one, and ``bandwidth`` is one-sided
in hertz: the spectrum vanishes for ``|omega| > 2*pi*bandwidth``.

From the spectrum the module builds, for an oversampling factor ``r`` and a
sub-chip delay ``tau``:

* ``sampled_spectrum`` — the 2*pi-periodic spectrum ``phi(Omega, tau)`` of
  the pulse sampled at rate ``r/T_c``, i.e. the alias sum
  ``(1/T_c) * sum_nu exp(j*(tau/T_c)*(Omega+2*pi*nu)) * conj(Phi((Omega+2*pi*nu)/T_c))``
  where only aliases inside the pulse support contribute;
* ``delta_vector`` — the r-vector stacking the r sub-chip sampling phases;
* ``q_split`` — the rank-one matrix ``delta * delta^H`` split into its
  delay-averaged part and a zero-trace oscillating remainder;
* ``q_eigendecomposition`` — the closed-form eigendecomposition of the
  delay-averaged part.

Alias terms that land exactly on a jump of ``|Phi|`` (the band edge of an
ideally bandlimited flat pulse) are weighted by 1/2 — the Fourier-series
midpoint value of the underlying sample sequence's transform.  This only
matters on a measure-zero set of frequencies, but that set contains DFT grid
points used by the finite-size matrix models, where the halved weight is
what reproduces the exact discrete-time behaviour.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

#: Relative slack used to decide whether an alias sits exactly on the
#: support edge (and gets the midpoint 1/2 weight) or just outside.
_EDGE_RTOL = 1e-9


class TabulatedRangeError(ValueError):
    """Raised when a tabulated spectrum is queried beyond its samples."""


class UndersampledError(ValueError):
    """Raised when the oversampling factor cannot capture the bandwidth."""


@dataclass(frozen=True, eq=False)
class ChipWaveform:
    """Spectrum of the received chip pulse.

    Attributes
    ----------
    kind : str
        One of ``"sinc"``, ``"root_raised_cosine"``, ``"tabulated"``.
    chip_interval : float
        Chip duration ``T_c`` in seconds.
    bandwidth : float
        One-sided bandwidth in hertz; ``Phi`` vanishes beyond
        ``2*pi*bandwidth`` rad/s.
    energy : float
        Pulse energy ``(1/2pi) * integral |Phi|^2``.
    relative_bandwidth : float or None
        For ``"sinc"``: the bandwidth in units of ``1/(2*T_c)``.
    roll_off : float or None
        For ``"root_raised_cosine"``: the excess-bandwidth fraction.
    table_omega, table_value : ndarray or None
        For ``"tabulated"``: sample frequencies (rad/s, increasing) and
        complex spectrum values, linearly interpolated.
    """

    kind: str
    chip_interval: float
    bandwidth: float
    energy: float
    relative_bandwidth: float | None = None
    roll_off: float | None = None
    table_omega: np.ndarray | None = None
    table_value: np.ndarray | None = None

    # -- evaluation ------------------------------------------------------

    def spectrum(self, omega):
        """Evaluate ``Phi(omega)`` (vectorized; zero outside the support).

        Raises
        ------
        TabulatedRangeError
            For tabulated pulses queried beyond the sampled range
            ("out of tabulated range").
        """
        w = np.asarray(omega, dtype=float)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        if self.kind == "sinc":
            tc = self.chip_interval
            alpha = self.relative_bandwidth
            out = np.where(np.abs(w) <= np.pi * alpha / tc + 0.0,
                           math.sqrt(tc / alpha), 0.0).astype(complex)
        elif self.kind == "root_raised_cosine":
            out = np.sqrt(self._rrc_power(w)).astype(complex)
        elif self.kind == "tabulated":
            lo = self.table_omega[0]
            hi = self.table_omega[-1]
            if np.any(w < lo) or np.any(w > hi):
                raise TabulatedRangeError("out of tabulated range")
            out = (np.interp(w, self.table_omega, self.table_value.real)
                   + 1j * np.interp(w, self.table_omega,
                                    self.table_value.imag))
        else:  # pragma: no cover - constructors control the kind
            raise ValueError(f"unknown waveform kind {self.kind!r}")
        return out[0] if scalar else out

    def power_spectrum(self, omega):
        """``|Phi(omega)|^2`` with the same conventions as ``spectrum``."""
        if self.kind == "root_raised_cosine":
            w = np.asarray(omega, dtype=float)
            scalar = w.ndim == 0
            out = self._rrc_power(np.atleast_1d(w))
            return out[0] if scalar else out
        return np.abs(self.spectrum(omega)) ** 2

    def _rrc_power(self, w: np.ndarray) -> np.ndarray:
        tc = self.chip_interval
        rho = self.roll_off
        aw = np.abs(w)
        flat_edge = (1.0 - rho) * np.pi / tc
        outer_edge = (1.0 + rho) * np.pi / tc
        out = np.zeros_like(aw)
        out[aw <= flat_edge] = tc
        if rho > 0:
            band = (aw > flat_edge) & (aw <= outer_edge)
            out[band] = (tc / 2.0) * (
                1.0 + np.cos((tc / (2.0 * rho)) * (aw[band] - flat_edge)))
        return out

    # -- derived quantities ----------------------------------------------

    @property
    def min_oversampling(self) -> int:
        """Smallest ``r`` capturing the full bandwidth (``ceil(2*B*T_c)``)."""
        product = 2.0 * self.bandwidth * self.chip_interval
        r = math.ceil(product - 1e-12)
        return max(r, 1)

    def _support_limit(self) -> float:
        """Support edge of ``Phi`` in normalized units: ``2*pi*B*T_c``."""
        return TWO_PI * self.bandwidth * self.chip_interval

    def _amplitude_at(self, omega: np.ndarray) -> np.ndarray:
        """``Phi`` evaluated with out-of-support queries clamped/zeroed.

        Internal helper for alias sums: frequencies that overshoot the
        support edge by a floating-point hair are clamped onto it; anything
        genuinely outside evaluates to zero (never an error, even for
        tabulated pulses).
        """
        edge = TWO_PI * self.bandwidth
        tol = _EDGE_RTOL * max(1.0, edge)
        w = np.clip(omega, -edge, edge)
        out = np.zeros(w.shape, dtype=complex)
        inside = np.abs(omega) <= edge + tol
        if self.kind == "tabulated":
            lo, hi = self.table_omega[0], self.table_omega[-1]
            inside &= (w >= lo - tol) & (w <= hi + tol)
            w = np.clip(w, lo, hi)
        if np.any(inside):
            out[inside] = self.spectrum(w[inside])
        return out


def sinc_waveform(relative_bandwidth: float,
                  chip_interval: float = 1.0) -> ChipWaveform:
    """Ideal bandlimited pulse, flat over ``|omega| <= pi*alpha/T_c``.

    ``|Phi|^2 = T_c/alpha`` on the support, giving unit energy for every
    ``alpha``; the one-sided bandwidth is ``alpha/(2*T_c)`` hertz.
    """
    if relative_bandwidth <= 0:
        raise ValueError("relative bandwidth must be positive")
    if chip_interval <= 0:
        raise ValueError("chip interval must be positive")
    return ChipWaveform(
        kind="sinc",
        chip_interval=chip_interval,
        bandwidth=relative_bandwidth / (2.0 * chip_interval),
        energy=1.0,
        relative_bandwidth=relative_bandwidth,
    )


def root_raised_cosine_waveform(roll_off: float,
                                chip_interval: float = 1.0) -> ChipWaveform:
    """Square-root raised-cosine pulse with zero phase and unit energy.

    ``|Phi|^2`` is flat at ``T_c`` up to ``(1-rho)*pi/T_c``, falls as a
    raised cosine up to ``(1+rho)*pi/T_c`` and vanishes beyond; the
    one-sided bandwidth is ``(1+rho)/(2*T_c)`` hertz.
    """
    if not 0.0 <= roll_off <= 1.0:
        raise ValueError("roll-off must lie in [0, 1]")
    if chip_interval <= 0:
        raise ValueError("chip interval must be positive")
    return ChipWaveform(
        kind="root_raised_cosine",
        chip_interval=chip_interval,
        bandwidth=(1.0 + roll_off) / (2.0 * chip_interval),
        energy=1.0,
        roll_off=roll_off,
    )


def tabulated_waveform(omega, values,
                       chip_interval: float = 1.0) -> ChipWaveform:
    """Pulse defined by linear interpolation of spectrum samples.

    Parameters
    ----------
    omega : array_like
        Strictly increasing sample frequencies in rad/s.
    values : array_like
        Complex spectrum samples ``Phi(omega)``.
    chip_interval : float
        Chip duration in seconds.

    The bandwidth is the largest sampled ``|omega|/(2*pi)`` and the energy
    is the trapezoidal ``(1/2pi) * integral |Phi|^2`` over the table.
    """
    om = np.asarray(omega, dtype=float)
    val = np.asarray(values, dtype=complex)
    if om.ndim != 1 or om.size < 2:
        raise ValueError("tabulated waveform needs at least two samples")
    if val.shape != om.shape:
        raise ValueError("frequency and value tables must match in length")
    if np.any(np.diff(om) <= 0):
        raise ValueError("tabulated frequencies must be strictly increasing")
    if chip_interval <= 0:
        raise ValueError("chip interval must be positive")
    om = om.copy()
    val = val.copy()
    om.setflags(write=False)
    val.setflags(write=False)
    energy = float(np.trapezoid(np.abs(val) ** 2, om) / TWO_PI)
    return ChipWaveform(
        kind="tabulated",
        chip_interval=chip_interval,
        bandwidth=float(np.max(np.abs(om)) / TWO_PI),
        energy=energy,
        table_omega=om,
        table_value=val,
    )


def load_tabulated_waveform(path, chip_interval: float = 1.0) -> ChipWaveform:
    """Load a tabulated spectrum from CSV.

    The file must have a header row and two or three columns: frequency in
    rad/s, real part, and optionally imaginary part of ``Phi``.
    """
    omegas: list[float] = []
    values: list[complex] = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ValueError("tabulated waveform CSV is empty")
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) not in (2, 3):
                raise ValueError(
                    "tabulated waveform CSV needs 2 or 3 columns "
                    f"(got {len(row)})")
            omegas.append(float(row[0]))
            imag = float(row[2]) if len(row) == 3 else 0.0
            values.append(complex(float(row[1]), imag))
    return tabulated_waveform(omegas, values, chip_interval=chip_interval)


# ---------------------------------------------------------------------------
# Alias machinery
# ---------------------------------------------------------------------------

def _alias_table(waveform: ChipWaveform, omegas: np.ndarray):
    """Alias frequencies and weighted amplitudes for each grid frequency.

    For each normalized frequency ``Omega`` in ``omegas`` the contributing
    aliases are the integers ``nu`` with ``|Omega + 2*pi*nu|`` inside the
    support ``[-2*pi*B*T_c, 2*pi*B*T_c]``.  Returns ``(args, amps)`` of
    shape ``(len(omegas), n_alias)`` where ``args`` holds
    ``Omega + 2*pi*nu`` and ``amps`` holds
    ``weight * conj(Phi(arg / T_c))`` with the midpoint weight 1/2 applied
    exactly on the support edge; padding entries are zero.
    """
    om = np.atleast_1d(np.asarray(omegas, dtype=float))
    limit = waveform._support_limit()
    tol = _EDGE_RTOL * max(1.0, limit)
    nu_lo = math.floor((-limit - float(np.max(om))) / TWO_PI - 1e-9)
    nu_hi = math.ceil((limit - float(np.min(om))) / TWO_PI + 1e-9)
    nus = np.arange(nu_lo, nu_hi + 1)
    args = om[:, None] + TWO_PI * nus[None, :]
    inside = np.abs(args) <= limit + tol
    on_edge = np.abs(np.abs(args) - limit) <= tol
    weights = np.where(on_edge, 0.5, 1.0) * inside
    amps = np.zeros(args.shape, dtype=complex)
    if np.any(inside):
        amps[inside] = np.conj(
            waveform._amplitude_at(args[inside] / waveform.chip_interval))
    amps *= weights
    return args, amps


def _check_oversampling(waveform: ChipWaveform, r: int) -> None:
    if r < 1:
        raise ValueError("oversampling factor must be a positive integer")
    if r < waveform.min_oversampling:
        raise UndersampledError("undersampled configuration")


def sampled_spectrum(waveform: ChipWaveform, r: int, omega: float,
                     tau: float) -> complex:
    """Spectrum ``phi(Omega, tau)`` of the delayed pulse sampled at ``1/T_c``.

    ``(1/T_c) * sum_nu exp(j*(tau/T_c)*(Omega+2*pi*nu)) * conj(Phi(...))``
    over the aliases inside the pulse support.  The value does not depend
    on ``r``; the factor is validated because downstream consumers sample
    at rate ``r/T_c`` and need ``r >= ceil(2*B*T_c)`` for the alias sum to
    capture the whole support ("undersampled configuration" otherwise).
    """
    _check_oversampling(waveform, r)
    args, amps = _alias_table(waveform, np.array([float(omega)]))
    tc = waveform.chip_interval
    phases = np.exp(1j * (tau / tc) * args[0])
    return complex(np.sum(phases * amps[0]) / tc)


@dataclass(frozen=True, eq=False)
class DelayVector:
    """The r sub-chip sampling phases of a delayed pulse at one frequency.

    Component ``s`` (1-based) equals ``phi(Omega, tau - (s-1)*T_c/r)``.
    """

    oversampling: int
    frequency: float
    delay: float
    components: np.ndarray


def _delta_components(waveform: ChipWaveform, r: int, omegas: np.ndarray,
                      taus: np.ndarray) -> np.ndarray:
    """Vectorized delay vectors: shape ``(len(taus), len(omegas), r)``."""
    args, amps = _alias_table(waveform, omegas)  # (M, V)
    tc = waveform.chip_interval
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    shifts = (taus[:, None] - np.arange(r)[None, :] * tc / r) / tc  # (A, r)
    phases = np.exp(1j * shifts[:, :, None, None] * args[None, None, :, :])
    return np.einsum("asmv,mv->ams", phases, amps) / tc


def delta_vector(waveform: ChipWaveform, r: int, omega: float,
                 tau: float) -> DelayVector:
    """Build the r-vector of sub-chip sampled spectra at one frequency."""
    _check_oversampling(waveform, r)
    comps = _delta_components(waveform, r, np.array([float(omega)]),
                              np.array([float(tau)]))[0, 0]
    return DelayVector(oversampling=r, frequency=float(omega),
                       delay=float(tau), components=comps)


@dataclass(frozen=True, eq=False)
class QSplit:
    """Rank-one outer product split into delay-averaged + oscillating parts.

    ``full = delay_free + oscillating`` entrywise; ``delay_free`` is the
    exact average of ``full`` over a uniform delay in ``[0, T_c)`` and
    ``oscillating`` has zero trace (away from the measure-zero fold
    frequencies where two support-edge aliases collide modulo ``r``).
    """

    full: np.ndarray
    delay_free: np.ndarray
    oscillating: np.ndarray


def _delay_free_q(waveform: ChipWaveform, r: int, omega: float) -> np.ndarray:
    """Delay-averaged matrix: entries
    ``(1/T_c^2) * sum_nu w_nu^2 |Phi|^2 * exp(-j*(k-l)/r*(Omega+2*pi*nu))``.
    """
    args, amps = _alias_table(waveform, np.array([float(omega)]))
    tc = waveform.chip_interval
    power = np.abs(amps[0]) ** 2  # includes squared edge weights
    idx = np.arange(r)
    diff = idx[:, None] - idx[None, :]  # k - l, 0-based == 1-based diff
    phase = np.exp(-1j * diff[:, :, None] * args[0][None, None, :] / r)
    return np.einsum("v,klv->kl", power, phase) / tc ** 2


def q_split(waveform: ChipWaveform, r: int, omega: float,
            tau: float) -> QSplit:
    """Split ``delta*delta^H`` into delay-averaged and oscillating parts."""
    _check_oversampling(waveform, r)
    delta = _delta_components(waveform, r, np.array([float(omega)]),
                              np.array([float(tau)]))[0, 0]
    full = np.outer(delta, np.conj(delta))
    delay_free = _delay_free_q(waveform, r, omega)
    return QSplit(full=full, delay_free=delay_free,
                  oscillating=full - delay_free)


def q_eigendecomposition(waveform: ChipWaveform, r: int, omega: float):
    """Closed-form eigendecomposition of the delay-averaged matrix.

    Returns ``(U, D)`` with unitary ``U`` whose column ``j`` is the phase
    vector ``(1/sqrt(r)) * (1, exp(-j*x/r), ..., exp(-j*(r-1)*x/r))`` at
    ``x = Omega + 2*pi*j`` — the vector depends on ``j`` only modulo ``r``
    — and nonnegative diagonal ``D`` collecting
    ``(r/T_c^2) * sum |Phi((Omega+2*pi*nu)/T_c)|^2`` over the contributing
    aliases ``nu`` congruent to ``j`` modulo ``r``.  Satisfies
    ``U @ D @ U^H == delay_free`` to machine precision.
    """
    _check_oversampling(waveform, r)
    args, amps = _alias_table(waveform, np.array([float(omega)]))
    tc = waveform.chip_interval
    power = np.abs(amps[0]) ** 2
    nus = np.round((args[0] - float(omega)) / TWO_PI).astype(int)
    diag = np.zeros(r)
    for nu, p in zip(nus, power):
        diag[nu % r] += p
    diag *= r / tc ** 2
    cols = np.arange(r)
    rows = np.arange(r)
    x = float(omega) + TWO_PI * cols
    u = np.exp(-1j * rows[:, None] * x[None, :] / r) / math.sqrt(r)
    return u, np.diag(diag)


def phase_twisted_circulant(coefficients, omega: float) -> np.ndarray:
    """Matrix with entries ``exp(j*(k-l)*Omega/r) * c[(k-l) mod r]``.

    This is the structured family closed under multiplication by the
    delay-averaged matrix and annihilated (in trace) by the oscillating
    part; used by verification suites and property tests.
    """
    c = np.asarray(coefficients, dtype=complex)
    r = c.size
    idx = np.arange(r)
    diff = idx[:, None] - idx[None, :]  # entry (k, l) uses k - l
    return np.exp(1j * diff * omega / r) * c[np.mod(diff, r)]
