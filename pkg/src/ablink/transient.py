"""Periodic steady-state waveforms of DAB and TAB AC links.

The two-port link has an exact four-segment piecewise-linear solution;
the three-port star network is integrated with fixed-step trapezoidal
cycles until periodic.  Time origin is the port-1 rising edge; phase
shifts delay the other ports; positive average power flows out of the
leading port.  Link currents carry no DC component.
"""

import math
from dataclasses import dataclass

import numpy as np

from .aclink import PortNetwork


class SteadyStateError(RuntimeError):
    """TAB integration failed to reach a periodic solution."""


@dataclass(frozen=True)
class WaveformTrace:
    """One switching period of sampled voltages, currents and core flux.

    v and i have one column per port (actual port quantities, not
    referred); b_core is the center-leg flux density when the winding
    turns and core area are known, zeros otherwise.  avg_port_powers
    are powers delivered by each port into the link (they sum to zero
    for the lossless link).
    """

    period: float
    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    b_core: np.ndarray
    rms_currents: tuple[float, ...]
    peak_currents: tuple[float, ...]
    avg_port_powers: tuple[float, ...]

    def __post_init__(self):
        for column, rms in enumerate(self.rms_currents):
            if abs(float(np.mean(self.i[:, column]))) > 1e-6 * max(rms, 1e-12):
                raise ValueError(f"port {column + 1} current has a DC component")


def _square_wave(amplitude: float, t: np.ndarray, period: float, delay: float) -> np.ndarray:
    """50% square wave of the given amplitude, rising edge at ``delay``."""
    phase = np.mod(t - delay, period)
    return np.where(phase < period / 2, amplitude, -amplitude)


def _segments_dab(v1: float, v2r: float, period: float, t_phi: float):
    """Breakpoints and (v1, v2_referred) levels of the four-segment cycle."""
    quarter_points = sorted({0.0, period / 2,
                             t_phi % period, (t_phi + period / 2) % period})
    breaks = [t for t in quarter_points if t < period] + [period]
    levels = []
    for start, stop in zip(breaks, breaks[1:]):
        mid = (start + stop) / 2
        level_1 = v1 if mid < period / 2 else -v1
        level_2 = v2r if (mid - t_phi) % period < period / 2 else -v2r
        levels.append((level_1, level_2))
    return breaks, levels


def simulate_dab(
    v1: float,
    v2: float,
    n: float,
    inductance: float,
    fs: float,
    phi: float,
    samples_per_period: int = 512,
    n1_turns: int | None = None,
    core_area_cm2: float | None = None,
) -> WaveformTrace:
    """Exact steady-state of a two-port link with series inductance.

    The link current is piecewise linear over four segments; periodicity
    holds automatically (square waves average to zero) and the free DC
    level is fixed by the zero-mean condition.  RMS, peak and average
    power come from the closed form, not from the samples.

    Args:
        v1, v2: square-wave amplitudes of the two bridges (V).
        n: turns ratio N1/N2 referring port 2 to port 1.
        inductance: total link inductance referred to port 1 (H).
        fs: switching frequency (Hz).
        phi: phase shift delaying port 2 (rad).
        samples_per_period: trace resolution (>= 8).
        n1_turns, core_area_cm2: optional; enable the core flux trace.
    """
    if inductance <= 0:
        raise ValueError("inductance must be positive")
    if samples_per_period < 8:
        raise ValueError("samples_per_period must be at least 8")
    period = 1.0 / fs
    t_phi = phi / (2 * math.pi) * period
    breaks, levels = _segments_dab(v1, n * v2, period, t_phi)

    durations = np.diff(breaks)
    slopes = np.array([(lv1 - lv2) / inductance for lv1, lv2 in levels])
    # Current at the breakpoints for i(0) = 0, then shift to zero mean.
    i_break = np.concatenate(([0.0], np.cumsum(slopes * durations)))
    assert abs(i_break[-1]) <= 1e-9 * (np.max(np.abs(i_break)) + 1e-30)
    mean_i = float(np.sum(durations * (i_break[:-1] + i_break[1:]) / 2) / period)
    i_break -= mean_i

    # Closed-form quantities.
    i_start, i_end = i_break[:-1], i_break[1:]
    ms = float(np.sum(durations * (i_start**2 + i_start * i_end + i_end**2) / 3) / period)
    rms_link = math.sqrt(ms)
    peak_link = float(np.max(np.abs(i_break)))
    p1 = float(sum(
        level[0] * duration * (ia + ib) / 2
        for level, duration, ia, ib in zip(levels, durations, i_start, i_end)
    ) / period)
    p2_absorbed = float(sum(
        level[1] * duration * (ia + ib) / 2
        for level, duration, ia, ib in zip(levels, durations, i_start, i_end)
    ) / period)

    t = np.arange(samples_per_period) * (period / samples_per_period)
    segment = np.searchsorted(breaks, t, side="right") - 1
    i_link = i_break[segment] + slopes[segment] * (t - np.asarray(breaks)[segment])
    v = np.column_stack([_square_wave(v1, t, period, 0.0),
                         _square_wave(v2, t, period, t_phi)])
    i = np.column_stack([i_link, -n * i_link])

    b_core = _flux_from_volts(v[:, 0], t, period, n1_turns, core_area_cm2)
    return WaveformTrace(
        period=period, t=t, v=v, i=i, b_core=b_core,
        rms_currents=(rms_link, n * rms_link),
        peak_currents=(peak_link, n * peak_link),
        avg_port_powers=(p1, -p2_absorbed),
    )


def _flux_from_volts(v_wave, t, period, n_turns, area_cm2) -> np.ndarray:
    """Integrate a port voltage into a zero-mean flux-density trace."""
    if not n_turns or not area_cm2:
        return np.zeros_like(t)
    dt = period / len(t)
    flux = np.cumsum(v_wave) * dt
    flux -= np.mean(flux)
    return flux / (n_turns * area_cm2 * 1e-4)


def simulate_tab(
    network: PortNetwork,
    turns: tuple[int, int, int],
    voltages: tuple[float, float, float],
    fs: float,
    phi2: float,
    phi3: float,
    steps_per_period: int = 4096,
    magnetizing_inductance: float | None = None,
    core_area_cm2: float | None = None,
    max_cycles: int = 200,
) -> WaveformTrace:
    """Trapezoidal steady-state of the three-port star network.

    The star legs (referred to port 1) hang off a common node; the node
    potential follows from the zero current sum, optionally through a
    finite magnetizing inductance.  Cycles repeat until the
    cycle-to-cycle RMS change falls below 1e-6 relative; the DC level of
    each leg current is projected out after every cycle.

    Args:
        network: star/delta network referred to port 1.
        turns: winding turns (N1, N2, N3) for referral back to the ports.
        voltages: actual port square-wave amplitudes (V).
        fs: switching frequency (Hz).
        phi2, phi3: delays of ports 2 and 3 (rad).
        steps_per_period: fixed trapezoidal step count.
        magnetizing_inductance: optional finite magnetizing branch (H),
            infinite (ideal) when None.
    """
    star = np.asarray(network.star, dtype=float)
    if len(star) != 3:
        raise ValueError("simulate_tab requires a three-port star network")
    if np.any(star <= 0):
        raise ValueError("star leakages must be positive")
    n1 = turns[0]
    ratios = np.array([1.0, n1 / turns[1], n1 / turns[2]])
    v_amp_ref = np.asarray(voltages) * ratios
    period = 1.0 / fs
    delays = np.array([0.0, phi2 / (2 * math.pi) * period, phi3 / (2 * math.pi) * period])

    h = period / steps_per_period
    t = np.arange(steps_per_period) * h
    t_closed = np.append(t, period)
    v_ref = np.column_stack([
        _square_wave(v_amp_ref[k], t_closed, period, delays[k]) for k in range(3)
    ])

    inv_l = 1.0 / star
    inv_lm = 0.0 if magnetizing_inductance is None else 1.0 / magnetizing_inductance
    # The common-node potential is algebraic in the sources: the leg
    # current derivatives must sum to the magnetizing branch's u/Lm.
    u_node = (v_ref @ inv_l) / (inv_lm + np.sum(inv_l))

    i = np.zeros((steps_per_period + 1, 3))
    previous_rms = None
    for cycle in range(max_cycles):
        i[0] = i[-1]
        drive = (v_ref - u_node[:, None]) * inv_l
        di = 0.5 * h * (drive[:-1] + drive[1:])
        i[1:] = i[0] + np.cumsum(di, axis=0)
        i -= np.mean(i[:-1], axis=0)  # transformer passes no DC
        rms = np.sqrt(np.mean(i[:-1] ** 2, axis=0))
        if previous_rms is not None:
            change = np.max(np.abs(rms - previous_rms)) / max(np.max(rms), 1e-30)
            if change < 1e-6:
                break
        previous_rms = rms
    else:
        raise SteadyStateError(
            f"no steady state after {max_cycles} cycles at {steps_per_period} steps/period"
        )

    i_ref = i[:-1]
    powers_ref = np.mean(v_ref[:-1] * i_ref, axis=0)
    i_ports = i_ref * ratios  # referred current times N1/Nk is the port current
    v_ports = v_ref[:-1] / ratios
    b_core = _flux_from_volts(u_node[:-1], t, period, n1, core_area_cm2)

    rms_ports = tuple(float(x) for x in np.sqrt(np.mean(i_ports**2, axis=0)))
    peak_ports = tuple(float(x) for x in np.max(np.abs(i_ports), axis=0))
    return WaveformTrace(
        period=period, t=t, v=v_ports, i=i_ports, b_core=b_core,
        rms_currents=rms_ports, peak_currents=peak_ports,
        avg_port_powers=tuple(float(p) for p in powers_ref),
    )


@dataclass(frozen=True)
class FluxDensityTrace:
    peak_b: float
    t: np.ndarray
    b: np.ndarray


def flux_density_trace(
    v1: float,
    n1_turns: int,
    core_area_cm2: float,
    fs: float,
    duty: float = 0.5,
    samples_per_period: int = 512,
) -> FluxDensityTrace:
    """Core flux density under a square-wave drive.

    B(t) integrates the applied winding voltage over N1*Ac; for a 50%
    square wave the peak is V1/(4*fs*N1*Ac).  For other duty cycles the
    negative portion is scaled to keep the volt-second balance, so the
    peak generalizes to V1*duty/(2*fs*N1*Ac).
    """
    if min(v1, 0) < 0 or n1_turns <= 0 or core_area_cm2 <= 0 or fs <= 0:
        raise ValueError("all arguments must be positive")
    if not 0 < duty < 1:
        raise ValueError("duty must lie in (0, 1)")
    period = 1.0 / fs
    t = np.arange(samples_per_period) * (period / samples_per_period)
    negative_level = -v1 * duty / (1 - duty)
    v_wave = np.where(t < duty * period, v1, negative_level)
    b = _flux_from_volts(v_wave, t, period, n1_turns, core_area_cm2)
    peak_b = v1 * duty / (2 * fs * n1_turns * core_area_cm2 * 1e-4)
    return FluxDensityTrace(peak_b=peak_b, t=t, b=b)


@dataclass(frozen=True)
class SaturationCheck:
    passed: bool
    margin: float
    peak_b: float
    b_sat: float


def saturation_check(peak_b: float, material) -> SaturationCheck:
    """Strict peak-below-saturation check with the relative margin."""
    if peak_b < 0:
        raise ValueError("peak flux density must be non-negative")
    b_sat = material.Bsat
    return SaturationCheck(
        passed=peak_b < b_sat,
        margin=(b_sat - peak_b) / b_sat,
        peak_b=peak_b,
        b_sat=b_sat,
    )


def write_trace_csv(trace: WaveformTrace, path) -> None:
    """Dump a trace as ``t_s,v1_v,v2_v[,v3_v],i1_a,i2_a[,i3_a],b_t``."""
    ports = trace.v.shape[1]
    header = (
        ["t_s"]
        + [f"v{k}_v" for k in range(1, ports + 1)]
        + [f"i{k}_a" for k in range(1, ports + 1)]
        + ["b_t"]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(len(trace.t)):
            cells = [trace.t[row], *trace.v[row], *trace.i[row], trace.b_core[row]]
            fh.write(",".join(f"{cell:.12g}" for cell in cells) + "\n")
