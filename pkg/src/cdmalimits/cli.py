"""Command line front end: reproducible CSV experiments and verification.

Subcommands
-----------
``efficiency``
    Multiuser-efficiency spectral density and scalar efficiency for one
    system; optional synchronous baseline and matrix-solver cross-check.
``capacity``
    Pulse-constrained capacity and spectral efficiency over a load grid.
``figure2``
    Spectral efficiency versus normalized bandwidth for the flat
    bandlimited pulse family at fixed Eb/N0, with the synchronous curve.
``figure3``
    Asynchronous versus synchronous spectral efficiency over a load grid
    for an excess-bandwidth pulse, with the relative gap.
``montecarlo``
    Finite-size MMSE SINR trials with the asymptotic prediction column.
``theorem3``
    Paired windowed/reduced harness showing whole-chip delay invariance.
``verify``
    Property-suite report (structure identities, solver identities, round
    trips) with measured residuals; non-zero exit on any failure.

Conventions
-----------
Configuration is a flat ``key = value`` text file plus command-line
overrides (flags beat the file, the file beats built-in defaults);
``--dump-config`` prints the resolved configuration and exits.  Every CSV
starts with a ``#``-commented header carrying the resolved configuration
and seed, so a run can be reproduced byte-identically; no timestamps are
embedded.  Exit codes: 0 success, 1 failed verification property,
2 invalid configuration or violated model hypothesis, 3 numerical
non-convergence.  The chip interval is fixed to 1 second; frequencies in
output are rad/s and delays are in chips.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .capacity import (
    ZeroBandwidthError,
    capacity_constrained,
    capacity_penalty_term,
    capacity_sync_closed_form,
    decibels_to_linear,
    linear_to_decibels,
    snr_for_ebn0,
    spectral_efficiency,
)
from .large_system import (
    HypothesisViolationError,
    SystemLaw,
    ZeroPowerError,
    efficiency_of_user,
    equal_power_uniform_delays,
    sinr_user,
    solve_efficiency_scalar,
    solve_efficiency_sinc,
    solve_efficiency_sync,
    solve_upsilon,
    synchronous_law,
)
from .montecarlo import (
    PulseTooLongError,
    finite_system,
    run_trials,
    theorem3_harness,
)
from .numerics import (
    BracketError,
    DivergenceError,
    FrequencyGrid,
    NotPositiveDefiniteError,
)
from .waveforms import (
    ChipWaveform,
    TabulatedRangeError,
    UndersampledError,
    _delay_free_q,
    _delta_components,
    load_tabulated_waveform,
    phase_twisted_circulant,
    q_eigendecomposition,
    root_raised_cosine_waveform,
    sinc_waveform,
)


class ConfigError(ValueError):
    """Invalid configuration (maps to exit code 2)."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped without converging (exit code 3)."""


_DEFAULTS: dict[str, dict[str, str]] = {
    "efficiency": {
        "waveform": "rrc:0.22",
        "beta": "1",
        "n0": "0.1",
        "r": "2",
        "grid": "512",
        "density_points": "2048",
        "delays": "uniform",
        "n_delays": "64",
        "sync_baseline": "false",
        "cross_check": "false",
        "seed": "12345",
        "out": "-",
    },
    "capacity": {
        "waveform": "rrc:0.22",
        "beta": "1",
        "n0": "0.1",
        "ebn0_db": "",
        "snr": "",
        "r": "2",
        "density_points": "2048",
        "seed": "12345",
        "out": "-",
    },
    "figure2": {
        "alpha": "0.25:2:8",
        "beta": "1",
        "ebn0_db": "10",
        "density_points": "2048",
        "seed": "12345",
        "out": "-",
    },
    "figure3": {
        "waveform": "rrc:0.22",
        "beta": "0.25:8:10",
        "ebn0_db": "10",
        "r": "2",
        "density_points": "2048",
        "seed": "12345",
        "out": "-",
    },
    "montecarlo": {
        "waveform": "rrc:0.22",
        "beta": "0.5",
        "n0": "0.1",
        "r": "2",
        "n": "128",
        "trials": "200",
        "delays": "uniform",
        "n_delays": "64",
        "matrix_kind": "block_circulant",
        "grid": "512",
        "seed": "12345",
        "out": "-",
    },
    "theorem3": {
        "waveform": "rrc:0.22",
        "beta": "0.5",
        "n0": "0.1",
        "r": "2",
        "n": "64",
        "trials": "100",
        "window": "3",
        "seed": "12345",
        "out": "-",
    },
    "verify": {
        "instances": "1000",
        "negative_control": "false",
        "seed": "12345",
        "out": "-",
    },
}


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------

def parse_waveform(text: str) -> ChipWaveform:
    """Build a chip waveform from ``sinc:<a>``, ``rrc:<rho>``, ``table:<csv>``."""
    kind, sep, arg = text.partition(":")
    if not sep or not arg:
        raise ConfigError(f"waveform argument {text!r} needs kind:parameter")
    try:
        if kind == "sinc":
            return sinc_waveform(float(arg))
        if kind == "rrc":
            return root_raised_cosine_waveform(float(arg))
        if kind == "table":
            return load_tabulated_waveform(arg)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad waveform argument {text!r}: {exc}") from exc
    raise ConfigError(f"unknown waveform kind {kind!r}")


def parse_value_grid(text: str, name: str) -> tuple[float, ...]:
    """Parse ``<f>`` or ``<lo:hi:count>`` into a tuple of floats."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return (float(parts[0]),)
        if len(parts) == 3:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 2 or hi <= lo:
                raise ValueError
            return tuple(float(x) for x in np.linspace(lo, hi, count))
    except ValueError:
        pass
    raise ConfigError(
        f"{name} must be a number or lo:hi:count range (got {text!r})")


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key} must be true or false (got {value!r})")


def _parse_int(value: str, key: str, minimum: int) -> int:
    try:
        out = int(value, 0)
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer (got {value!r})") \
            from exc
    if out < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return out


def _parse_float(value: str, key: str, positive: bool = True) -> float:
    try:
        out = float(value)
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number (got {value!r})") from exc
    if not math.isfinite(out):
        raise ConfigError(f"{key} must be finite")
    if positive and out <= 0:
        raise ConfigError(f"{key} must be positive")
    return out


def load_config_file(path: str, command: str) -> dict[str, str]:
    """Read a flat ``key = value`` file, validating keys for the command."""
    allowed = _DEFAULTS[command]
    values: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                key, sep, value = stripped.partition("=")
                if not sep:
                    raise ConfigError(
                        f"{path}:{lineno}: expected key = value")
                key = key.strip()
                if key not in allowed:
                    raise ConfigError(
                        f"{path}:{lineno}: unknown key {key!r} for "
                        f"{command}")
                values[key] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved, validated parameters of one CLI invocation.

    ``raw`` holds the merged string form (defaults, then config file, then
    flags) in a stable key order; it is what ``--dump-config`` prints and
    what every CSV header embeds.
    """

    command: str
    raw: dict[str, str]
    waveform: ChipWaveform | None = None
    betas: tuple[float, ...] = ()
    alphas: tuple[float, ...] = ()
    ebn0: float | None = None  # linear, converted from dB at parse time
    n0: float | None = None
    snr: float | None = None
    oversampling: int = 1
    spreading_factor: int = 0
    trials: int = 0
    grid: int = 0
    density_points: int = 0
    n_delays: int = 0
    delays_kind: str = "uniform"
    window: int = 0
    matrix_kind: str = "block_circulant"
    instances: int = 0
    sync_baseline: bool = False
    cross_check: bool = False
    negative_control: bool = False
    seed: int = 0
    out: str = "-"


def resolve_config(command: str, file_values: dict[str, str],
                   overrides: dict[str, str]) -> ExperimentConfig:
    """Merge defaults, config file, and flags into a typed configuration."""
    raw = dict(_DEFAULTS[command])
    raw.update(file_values)
    for key, value in overrides.items():
        if key not in raw:
            raise ConfigError(f"unknown key {key!r} for {command}")
        raw[key] = value

    kwargs: dict[str, object] = {}
    if "waveform" in raw:
        kwargs["waveform"] = parse_waveform(raw["waveform"])
    if "beta" in raw:
        betas = parse_value_grid(raw["beta"], "beta")
        if any(b < 0 for b in betas):
            raise ConfigError("beta must be nonnegative")
        kwargs["betas"] = betas
    if "alpha" in raw:
        alphas = parse_value_grid(raw["alpha"], "alpha")
        if any(a <= 0 for a in alphas):
            raise ConfigError("alpha must be positive")
        kwargs["alphas"] = alphas
    if "ebn0_db" in raw and raw["ebn0_db"] != "":
        kwargs["ebn0"] = decibels_to_linear(
            _parse_float(raw["ebn0_db"], "ebn0_db", positive=False))
    if "snr" in raw and raw["snr"] != "":
        kwargs["snr"] = _parse_float(raw["snr"], "snr")
    if "n0" in raw:
        kwargs["n0"] = _parse_float(raw["n0"], "n0")
    if "r" in raw:
        kwargs["oversampling"] = _parse_int(raw["r"], "r", 1)
    if "n" in raw:
        kwargs["spreading_factor"] = _parse_int(raw["n"], "n", 1)
    if "trials" in raw:
        kwargs["trials"] = _parse_int(raw["trials"], "trials", 1)
    if "grid" in raw:
        grid = _parse_int(raw["grid"], "grid", 2)
        if grid % 2:
            raise ConfigError("grid must be even")
        kwargs["grid"] = grid
    if "density_points" in raw:
        kwargs["density_points"] = _parse_int(raw["density_points"],
                                              "density_points", 2)
    if "n_delays" in raw:
        kwargs["n_delays"] = _parse_int(raw["n_delays"], "n_delays", 1)
    if "delays" in raw:
        if raw["delays"] not in ("uniform", "zero"):
            raise ConfigError("delays must be 'uniform' or 'zero'")
        kwargs["delays_kind"] = raw["delays"]
    if "window" in raw:
        kwargs["window"] = _parse_int(raw["window"], "window", 2)
    if "matrix_kind" in raw:
        if raw["matrix_kind"] not in ("block_circulant", "block_toeplitz"):
            raise ConfigError(
                "matrix_kind must be block_circulant or block_toeplitz")
        kwargs["matrix_kind"] = raw["matrix_kind"]
    if "instances" in raw:
        kwargs["instances"] = _parse_int(raw["instances"], "instances", 1)
    for key in ("sync_baseline", "cross_check", "negative_control"):
        if key in raw:
            kwargs[key] = _parse_bool(raw[key], key)
    kwargs["seed"] = _parse_int(raw["seed"], "seed", 0)
    kwargs["out"] = raw["out"]
    return ExperimentConfig(command=command, raw=raw, **kwargs)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    """Format a cell: full-precision floats, empty string for missing."""
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def render_csv(cfg: ExperimentConfig, columns: list[str], rows: list[tuple],
               extra_header: list[tuple[str, str]] | None = None) -> str:
    """CSV text with the resolved-config comment block on top."""
    buffer = io.StringIO()
    buffer.write(f"# command = {cfg.command}\n")
    for key, value in cfg.raw.items():
        buffer.write(f"# {key} = {value}\n")
    for key, value in extra_header or ():
        buffer.write(f"# {key} = {value}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(cell) for cell in row])
    return buffer.getvalue()


def write_output(cfg: ExperimentConfig, text: str) -> None:
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        with open(cfg.out, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


# ---------------------------------------------------------------------------
# Shared experiment plumbing
# ---------------------------------------------------------------------------

def _make_system(cfg: ExperimentConfig, load: float) -> SystemLaw:
    if cfg.delays_kind == "zero":
        law = synchronous_law()
    else:
        law = equal_power_uniform_delays(cfg.n_delays)
    return SystemLaw(load=load, noise_density=cfg.n0,
                     oversampling=cfg.oversampling, waveform=cfg.waveform,
                     law=law)


def _single_beta(cfg: ExperimentConfig) -> float:
    if len(cfg.betas) != 1:
        raise ConfigError(
            f"{cfg.command} takes a single beta, not a range")
    return cfg.betas[0]


def _solved_field(sys: SystemLaw, grid_size: int):
    field, report = solve_upsilon(sys, FrequencyGrid.midpoints(grid_size))
    if not report.converged:
        raise ConvergenceError(
            f"matrix fixed point stopped after {report.iterations} "
            f"iterations at residual {report.final_residual:.3e}")
    return field


def _ebn0_solved_point(ebn0: float, load: float,
                       capacity_fn: Callable[[float], float]):
    """(snr, capacity) meeting an Eb/N0 target, or None on bracket failure."""
    try:
        snr = snr_for_ebn0(ebn0, load, capacity_fn)
    except BracketError as exc:
        _warn(f"load {load:g}: {exc}")
        return None
    return snr, capacity_fn(snr)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_efficiency(cfg: ExperimentConfig) -> int:
    beta = _single_beta(cfg)
    sys_law = _make_system(cfg, beta)
    spectrum = solve_efficiency_scalar(sys_law,
                                       n_points=cfg.density_points)
    columns = ["record", "omega", "delay_chips", "power", "value"]
    rows: list[tuple] = [
        ("density", w, "", "", d)
        for w, d in zip(spectrum.frequencies, spectrum.density)
    ]
    rows.append(("scalar", "", "", "", spectrum.scalar))
    if cfg.sync_baseline:
        powers, weights = sys_law.law.power_marginal()
        eta_sync = solve_efficiency_sync(beta, powers, weights, cfg.n0)
        rows.append(("sync_baseline", "", "", "", eta_sync))
    if cfg.cross_check:
        field = _solved_field(sys_law, cfg.grid)
        law = sys_law.law
        mean = 0.0
        for power, delay, weight in zip(law.powers, law.delays, law.weights):
            sinr = sinr_user(field, sys_law, power, delay)
            eta = efficiency_of_user(sinr, power, sys_law)
            mean += weight * eta
            rows.append(("user_efficiency", "", delay, power, eta))
        rows.append(("matrix_mean", "", "", "", mean))
    write_output(cfg, render_csv(cfg, columns, rows))
    return 0


def cmd_capacity(cfg: ExperimentConfig) -> int:
    columns = ["beta", "snr", "ebn0_db", "capacity_per_chip",
               "spectral_efficiency"]
    rows: list[tuple] = []
    for beta in cfg.betas:
        if beta == 0.0:
            rows.append((beta, "", "", 0.0, 0.0))
            continue
        sys_law = _make_system(replace(cfg, delays_kind="uniform",
                                       n_delays=64), beta)

        def cap(s: float) -> float:
            return capacity_constrained(sys_law, snr=s,
                                        density_points=cfg.density_points)

        if cfg.snr is not None:
            snr = cfg.snr
        elif cfg.ebn0 is not None:
            snr = snr_for_ebn0(cfg.ebn0, beta, cap)
        else:
            snr = sys_law.snr
        value = cap(snr)
        gamma = spectral_efficiency(value, cfg.waveform)
        ebn0_db = (linear_to_decibels(beta * snr / value)
                   if value > 0 else "")
        rows.append((beta, snr, ebn0_db, value, gamma))
    write_output(cfg, render_csv(cfg, columns, rows))
    return 0


def cmd_figure2(cfg: ExperimentConfig) -> int:
    beta = _single_beta(cfg)
    if cfg.ebn0 is None:
        raise ConfigError("figure2 needs ebn0_db")
    sync_point = _ebn0_solved_point(
        cfg.ebn0, beta, lambda s: capacity_sync_closed_form(beta, s))
    columns = ["alpha", "gamma_async_sinc", "gamma_sync"]
    rows: list[tuple] = []
    for alpha in cfg.alphas:
        waveform = sinc_waveform(alpha)
        sys_law = SystemLaw(load=beta, noise_density=1.0,
                            oversampling=waveform.min_oversampling,
                            waveform=waveform,
                            law=equal_power_uniform_delays(64))

        def cap(s: float) -> float:
            return capacity_constrained(sys_law, snr=s,
                                        density_points=cfg.density_points)

        async_point = _ebn0_solved_point(cfg.ebn0, beta, cap)
        gamma_async = (spectral_efficiency(async_point[1], waveform)
                       if async_point else "")
        gamma_sync = (sync_point[1] / (alpha / 2.0) if sync_point else "")
        rows.append((alpha, gamma_async, gamma_sync))
    write_output(cfg, render_csv(cfg, columns, rows))
    return 0


def cmd_figure3(cfg: ExperimentConfig) -> int:
    if cfg.ebn0 is None:
        raise ConfigError("figure3 needs ebn0_db")
    waveform = cfg.waveform
    product = waveform.chip_interval * waveform.bandwidth
    columns = ["beta", "gamma_async", "gamma_sync", "relative_gap"]
    rows: list[tuple] = []
    for beta in cfg.betas:
        sys_law = SystemLaw(load=beta, noise_density=1.0,
                            oversampling=cfg.oversampling,
                            waveform=waveform,
                            law=equal_power_uniform_delays(64))

        def cap(s: float) -> float:
            return capacity_constrained(sys_law, snr=s,
                                        density_points=cfg.density_points)

        async_point = _ebn0_solved_point(cfg.ebn0, beta, cap)
        sync_point = _ebn0_solved_point(
            cfg.ebn0, beta, lambda s: capacity_sync_closed_form(beta, s))
        if async_point and sync_point:
            gamma_async = async_point[1] / product
            gamma_sync = sync_point[1] / product
            gap = (gamma_async - gamma_sync) / gamma_sync
            rows.append((beta, gamma_async, gamma_sync, gap))
        else:
            rows.append((beta,
                         async_point[1] / product if async_point else "",
                         sync_point[1] / product if sync_point else "",
                         ""))
    write_output(cfg, render_csv(cfg, columns, rows))
    return 0


def cmd_montecarlo(cfg: ExperimentConfig) -> int:
    beta = _single_beta(cfg)
    sys_law = _make_system(cfg, beta)
    system = finite_system(sys_law, cfg.spreading_factor, cfg.seed,
                           cfg.matrix_kind)
    realized = replace(sys_law,
                       load=system.n_users / cfg.spreading_factor)
    field = _solved_field(realized, cfg.grid)
    predictions: dict[tuple[float, float], float] = {}
    predicted = np.empty(system.n_users)
    for k in range(system.n_users):
        power = float(np.abs(system.amplitudes[k]) ** 2)
        delay = float(system.delays[k])
        key = (power, delay)
        if key not in predictions:
            sinr = sinr_user(field, realized, power, delay)
            predictions[key] = efficiency_of_user(sinr, power, realized)
        predicted[k] = predictions[key]

    samples, summary = run_trials(system, cfg.trials)
    tc = system.chip_interval
    columns = ["trial", "user", "delay_chips", "power", "sinr",
               "efficiency", "predicted_efficiency"]
    rows: list[tuple] = []
    for index, sample in enumerate(samples):
        trial = index // system.n_users
        k = sample.user
        rows.append((trial, k, float(system.delays[k]) / tc,
                     float(np.abs(system.amplitudes[k]) ** 2),
                     sample.sinr, sample.efficiency, predicted[k]))
    extra = [
        ("n_users", str(system.n_users)),
        ("empirical_mean_efficiency", _fmt(summary.mean_efficiency)),
        ("predicted_mean_efficiency", _fmt(float(predicted.mean()))),
        ("standard_error", _fmt(summary.standard_error)),
    ]
    write_output(cfg, render_csv(cfg, columns, rows, extra_header=extra))
    return 0


def cmd_theorem3(cfg: ExperimentConfig) -> int:
    beta = _single_beta(cfg)
    n_users = int(round(beta * cfg.spreading_factor))
    if n_users < 1:
        raise ConfigError("beta too small: no users at this n")
    symbol = cfg.spreading_factor * cfg.waveform.chip_interval
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    delays = rng.uniform(0.0, symbol, n_users)
    result = theorem3_harness(cfg.waveform, cfg.spreading_factor,
                              cfg.oversampling, n_users, delays, cfg.n0,
                              window=cfg.window, trials=cfg.trials,
                              seed=cfg.seed)
    columns = ["record", "mean_sinr", "sinr_standard_error",
               "mean_efficiency", "efficiency_standard_error", "trials"]
    win, red = result.windowed, result.reduced
    combined_sinr = math.hypot(win.mean_sinr_standard_error,
                               red.mean_sinr_standard_error)
    combined_eff = math.hypot(win.standard_error, red.standard_error)
    rows = [
        ("windowed", win.mean_sinr, win.mean_sinr_standard_error,
         win.mean_efficiency, win.standard_error, win.trials),
        ("reduced", red.mean_sinr, red.mean_sinr_standard_error,
         red.mean_efficiency, red.standard_error, red.trials),
        ("difference", win.mean_sinr - red.mean_sinr, combined_sinr,
         win.mean_efficiency - red.mean_efficiency, combined_eff,
         win.trials),
    ]
    write_output(cfg, render_csv(cfg, columns, rows))
    return 0


# ---------------------------------------------------------------------------
# Verification suite
# ---------------------------------------------------------------------------

def _random_waveform(rng: np.random.Generator) -> ChipWaveform:
    if rng.uniform() < 0.5:
        return sinc_waveform(float(rng.uniform(0.25, 3.0)))
    return root_raised_cosine_waveform(float(rng.uniform(0.0, 1.0)))


def _structure_residuals(rng: np.random.Generator, instances: int,
                         perturb: bool):
    """Worst residuals of the trace-annihilation and factorization checks.

    Each instance draws a random waveform, frequency, twisted-circulant
    member, and a random anchor delay; the oscillating part is averaged
    over a uniform 256-point delay grid starting at that anchor (the
    average is a trigonometric polynomial in the delay, so any anchored
    uniform grid integrates it exactly).
    """
    worst_trace = 0.0
    worst_factor = 0.0
    for _ in range(instances):
        waveform = _random_waveform(rng)
        r = int(waveform.min_oversampling + rng.integers(0, 2))
        omega = float(rng.uniform(-np.pi, np.pi))
        taus_unit = (np.arange(256) + 256.0 * rng.random()) / 256.0
        deltas = _delta_components(waveform, r,
                                   np.array([omega]),
                                   taus_unit * waveform.chip_interval)
        deltas = deltas[:, 0, :]  # (taus, r)
        mean_full = np.einsum("as,ak->sk", deltas, np.conj(deltas)) \
            / deltas.shape[0]
        delay_free = _delay_free_q(waveform, r, omega)
        oscillating = mean_full - delay_free
        if perturb:
            bump = 1e-3 * np.linalg.norm(mean_full) * np.eye(r)
            oscillating = oscillating + bump
        coeffs = (rng.standard_normal(r) + 1j * rng.standard_normal(r))
        member = phase_twisted_circulant(coeffs, omega)
        scale = (np.linalg.norm(member) * np.linalg.norm(mean_full)
                 + 1e-300)
        worst_trace = max(worst_trace,
                          abs(np.trace(member @ oscillating)) / scale)
        u, d = q_eigendecomposition(waveform, r, omega)
        rebuilt = u @ d @ u.conj().T
        factor_scale = np.linalg.norm(delay_free) + 1e-300
        worst_factor = max(worst_factor,
                           float(np.linalg.norm(rebuilt - delay_free))
                           / factor_scale)
    return worst_trace, worst_factor


def _delay_independence_residual() -> float:
    waveform = sinc_waveform(1.0)
    grid = FrequencyGrid.midpoints(64)
    etas = []
    for law in (synchronous_law(), equal_power_uniform_delays(16)):
        sys_law = SystemLaw(load=1.0, noise_density=0.1, oversampling=1,
                            waveform=waveform, law=law)
        field = _solved_field(sys_law, grid.count)
        sinr = sinr_user(field, sys_law, 1.0, 0.0)
        etas.append(efficiency_of_user(sinr, 1.0, sys_law))
    return abs(etas[0] - etas[1]) / etas[0]


def _scaling_identity_residual(density_points: int) -> float:
    waveform = sinc_waveform(2.0)
    sys_law = SystemLaw(load=1.0, noise_density=1.0, oversampling=2,
                        waveform=waveform, law=equal_power_uniform_delays(64))
    async_value = capacity_constrained(sys_law, snr=10.0,
                                       density_points=density_points)
    reference = 2.0 * capacity_sync_closed_form(0.5, 10.0)
    return abs(async_value - reference) / reference


def _alpha_one_equality_residual() -> float:
    worst = 0.0
    for load in (0.5, 1.0, 2.0):
        for n0 in (0.1, 1.0):
            a = solve_efficiency_sinc(load, 1.0, [1.0], [1.0], n0)
            b = solve_efficiency_sync(load, [1.0], [1.0], n0)
            worst = max(worst, abs(a - b))
    return worst


def _equal_power_root_residual() -> float:
    load, n0 = 1.0, 0.1
    solved = solve_efficiency_sync(load, [1.0], [1.0], n0)
    b = n0 + load - 1.0
    root = (-b + math.sqrt(b * b + 4.0 * n0)) / 2.0
    return abs(solved - root)


def _db_round_trip_residual() -> float:
    values = np.logspace(-6.0, 6.0, 25)
    back = np.array([decibels_to_linear(linear_to_decibels(v))
                     for v in values])
    return float(np.max(np.abs(back - values) / values))


def _penalty_floor_residual() -> float:
    # closed-form sanity: the penalty term vanishes with the load
    return abs(capacity_penalty_term(10.0, 0.0))


def cmd_verify(cfg: ExperimentConfig) -> int:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    trace, factor = _structure_residuals(rng, cfg.instances,
                                         cfg.negative_control)
    checks = [
        ("trace_annihilation", trace, 1e-10),
        ("delay_average_factorization", factor, 1e-10),
        ("delay_independence_flat_pulse", _delay_independence_residual(),
         1e-6),
        ("sinc_capacity_scaling", _scaling_identity_residual(2048), 1e-4),
        ("alpha_one_matches_synchronous", _alpha_one_equality_residual(),
         1e-12),
        ("equal_power_quadratic_root", _equal_power_root_residual(), 1e-10),
        ("penalty_term_zero_load", _penalty_floor_residual(), 1e-12),
        ("db_round_trip", _db_round_trip_residual(), 1e-12),
    ]
    columns = ["check", "residual", "tolerance", "status"]
    rows = []
    failed = False
    for name, residual, tolerance in checks:
        ok = residual <= tolerance
        failed = failed or not ok
        rows.append((name, residual, tolerance, "pass" if ok else "fail"))
    write_output(cfg, render_csv(cfg, columns, rows))
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

_COMMANDS: dict[str, Callable[[ExperimentConfig], int]] = {
    "efficiency": cmd_efficiency,
    "capacity": cmd_capacity,
    "figure2": cmd_figure2,
    "figure3": cmd_figure3,
    "montecarlo": cmd_montecarlo,
    "theorem3": cmd_theorem3,
    "verify": cmd_verify,
}

_FLAG_KEYS = {
    "waveform": "waveform",
    "beta": "beta",
    "alpha": "alpha",
    "ebn0_db": "ebn0_db",
    "snr": "snr",
    "n0": "n0",
    "r": "r",
    "n": "n",
    "trials": "trials",
    "grid": "grid",
    "density_points": "density_points",
    "n_delays": "n_delays",
    "delays": "delays",
    "window": "window",
    "matrix_kind": "matrix_kind",
    "instances": "instances",
    "sync_baseline": "sync_baseline",
    "cross_check": "cross_check",
    "negative_control": "negative_control",
    "seed": "seed",
    "out": "out",
}

_BOOL_FLAGS = ("sync_baseline", "cross_check", "negative_control")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdmalimits",
        description="Asynchronous-CDMA large-system experiments "
                    "(reproducible CSV output).")
    sub = parser.add_subparsers(dest="command")

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved config and exit")
        p.add_argument("--seed", help="master 64-bit seed")
        p.add_argument("--out", help="output path ('-' for stdout)")
        for key in _DEFAULTS[name]:
            if key in ("seed", "out"):
                continue
            flag = "--" + key.replace("_", "-")
            if key in _BOOL_FLAGS:
                p.add_argument(flag, dest=key, action="store_const",
                               const="true", default=None)
            else:
                p.add_argument(flag, dest=key, default=None)
        return p

    add("efficiency",
        "multiuser-efficiency density and scalar for one system")
    add("capacity", "constrained capacity over a load grid")
    add("figure2", "spectral efficiency vs normalized bandwidth (flat pulse)")
    add("figure3", "async vs sync spectral efficiency over load")
    add("montecarlo", "finite-size MMSE SINR trials vs prediction")
    add("theorem3", "whole-chip delay invariance harness")
    add("verify", "run the property suites and report residuals")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        file_values = (load_config_file(args.config, args.command)
                       if args.config else {})
        overrides = {}
        for attr, key in _FLAG_KEYS.items():
            value = getattr(args, attr, None)
            if value is not None:
                overrides[key] = value
        cfg = resolve_config(args.command, file_values, overrides)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        for key, value in cfg.raw.items():
            sys.stdout.write(f"{key} = {value}\n")
        return 0
    try:
        return _COMMANDS[cfg.command](cfg)
    except HypothesisViolationError as exc:
        print(f"error: {exc}: the delay law must be uniform on [0, T_c) "
              "and independent of the powers, or the one-sided bandwidth "
              "must stay within 1/(2*T_c)", file=sys.stderr)
        return 2
    except (DivergenceError, ConvergenceError, BracketError,
            NotPositiveDefiniteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, UndersampledError, TabulatedRangeError,
            PulseTooLongError, ZeroPowerError, ZeroBandwidthError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
