"""Core-geometrical-constant transformer design pipeline.

Implements the optimum-flux-density design method of Erickson &
Maksimovic ("Fundamentals of Power Electronics", ch. 15): size the core
by the Kgfe constant, place the flux density at the copper/iron loss
optimum, then derive turns, window allocation and wire gauges.  The
method generalizes to K windings (K = 2 or 3) so the same pipeline
serves two-port and three-port links.

Mixed cm-based units throughout: areas cm^2, lengths cm, volt-seconds
V*s, flux density T, resistivity ohm*cm; the 1e4/1e8 unit factors are
kept explicit.
"""

import math
from dataclasses import dataclass, field

from .aclink import LinkParams, solve_phase_shift
from .catalog import Catalog, CoreRecord, MaterialRecord, WireGauge
from .transient import simulate_dab

COPPER_RESISTIVITY_OHM_CM = 1.724e-6


class DesignError(RuntimeError):
    """A design stage failed; the message is prefixed with the stage name."""


class InfeasibleDesignError(DesignError):
    """No cataloged core or flux level satisfies the requirements."""


@dataclass(frozen=True)
class DesignSpec:
    """Converter-side inputs of one transformer design.

    port_voltages are square-wave amplitudes with port 1 the primary;
    duty is the fraction of the period the positive portion lasts;
    loss_fraction bounds total dissipation as a fraction of the power
    rating; target_link_inductance is the total AC-link inductance
    referred to port 1 (for three ports, the balanced delta value).
    port_rms_currents may be given explicitly; otherwise they are taken
    from the steady-state simulation at rated power.
    """

    power_rating: float
    port_voltages: tuple[float, ...]
    switching_frequency: float
    duty: float
    loss_fraction: float
    fill_factor: float
    target_link_inductance: float
    port_rms_currents: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "port_voltages", tuple(self.port_voltages))
        if len(self.port_voltages) not in (2, 3):
            raise ValueError("the pipeline supports 2 or 3 windings")
        if min(self.port_voltages) <= 0:
            raise ValueError("port voltages must be positive")
        if self.power_rating <= 0 or self.switching_frequency <= 0:
            raise ValueError("power rating and switching frequency must be positive")
        if not 0 < self.duty < 1:
            raise ValueError("duty must lie in (0, 1)")
        if not 0 < self.fill_factor <= 1:
            raise ValueError("fill factor must lie in (0, 1]")
        if self.loss_fraction <= 0:
            raise ValueError("loss fraction must be positive")
        if self.target_link_inductance <= 0:
            raise ValueError("target link inductance must be positive")
        if self.port_rms_currents is not None:
            currents = tuple(self.port_rms_currents)
            if len(currents) != len(self.port_voltages):
                raise ValueError("one RMS current per port required")
            object.__setattr__(self, "port_rms_currents", currents)

    @property
    def K(self) -> int:
        return len(self.port_voltages)

    @property
    def voltage_ratios(self) -> tuple[float, ...]:
        """n_1k = V1/Vk, the turns-ratio targets."""
        v1 = self.port_voltages[0]
        return tuple(v1 / vk for vk in self.port_voltages)


@dataclass(frozen=True)
class DesignResult:
    """Designed transformer: chosen core, flux level, turns, window split,
    wire gauges, plus the intermediate design quantities."""

    core: CoreRecord
    material: MaterialRecord
    Bmax: float                      # operating peak flux density with integer turns
    bmax_optimal: float              # loss-optimal flux density before rounding
    turns: tuple[int, ...]
    window_fractions: tuple[float, ...]
    wires: tuple[WireGauge, ...]
    turns_ratios: tuple[float, ...]
    kgfe_required: float
    total_referred_rms: float
    volt_seconds: float
    port_rms_currents: tuple[float, ...]
    warnings: tuple[str, ...] = field(default_factory=tuple)


def compute_volt_seconds(spec: DesignSpec) -> float:
    """Volt-seconds across the primary during the positive portion:
    lambda = V1 * duty / fs."""
    return spec.port_voltages[0] * spec.duty / spec.switching_frequency


def total_referred_rms(spec: DesignSpec) -> float:
    """Total RMS current referred to the primary, I_rmsT = sum (Nk/N1)*Ik.

    Turns are not known yet at this stage, so voltage ratios stand in
    for the turns ratios.
    """
    if spec.port_rms_currents is None:
        raise DesignError("referred-rms: port RMS currents are not populated")
    return sum(
        current * vk / spec.port_voltages[0]
        for current, vk in zip(spec.port_rms_currents, spec.port_voltages)
    )


def required_kgfe(
    spec: DesignSpec,
    volt_seconds: float,
    irms_total: float,
    material: MaterialRecord,
    rho_wire: float = COPPER_RESISTIVITY_OHM_CM,
) -> float:
    """Minimum core geometrical constant for the allowed dissipation.

    Kgfe >= rho * lambda^2 * IrmsT^2 * Kfe^(2/beta)
            / (4 * Ku * P_loss^((beta+2)/beta)) * 1e8
    """
    p_loss = spec.loss_fraction * spec.power_rating
    if p_loss <= 0:
        raise DesignError("core-constant: allowed power dissipation must be positive")
    beta = material.beta
    return (
        rho_wire * volt_seconds**2 * irms_total**2 * material.Kfe ** (2 / beta)
        / (4 * spec.fill_factor * p_loss ** ((beta + 2) / beta))
        * 1e8
    )


def core_geometrical_constant(core: CoreRecord, beta: float) -> float:
    """Kgfe of a core evaluated at a given loss exponent (Erickson convention)."""
    half_beta = beta / 2
    bracket = (
        half_beta ** (-beta / (beta + 2)) + half_beta ** (2 / (beta + 2))
    ) ** (-(beta + 2) / beta)
    return (
        core.WA * core.Ac ** (2 * (beta - 1) / beta)
        / (core.MLT * core.lm ** (2 / beta))
        * bracket
    )


def select_core(kgfe_min: float, catalog: Catalog) -> CoreRecord:
    """Smallest-Kgfe cataloged core meeting the bound.

    Ties break toward smaller cross-section, then lexicographic name.
    """
    if not catalog.cores:
        raise InfeasibleDesignError("core-selection: catalog is empty")
    candidates = [core for core in catalog.cores.values() if core.Kgfe >= kgfe_min]
    if not candidates:
        raise InfeasibleDesignError(
            f"core-selection: no core satisfies the bound Kgfe >= {kgfe_min:g}"
        )
    return min(candidates, key=lambda core: (core.Kgfe, core.Ac, core.name))


def copper_loss_w(
    bmax: float, volt_seconds: float, irms_total: float, core: CoreRecord,
    ku: float, rho_wire: float = COPPER_RESISTIVITY_OHM_CM,
) -> float:
    """Winding loss at a given peak flux density (optimally allocated window)."""
    return (
        rho_wire * volt_seconds**2 * irms_total**2 * core.MLT * 1e8
        / (4 * ku * core.WA * core.Ac**2 * bmax**2)
    )


def core_loss_w(bmax: float, core: CoreRecord, material: MaterialRecord) -> float:
    """Ferrite loss Kfe * B^beta * Ac * lm at the operating flux swing."""
    return material.Kfe * bmax**material.beta * core.Ac * core.lm


def optimal_bmax(
    volt_seconds: float,
    irms_total: float,
    core: CoreRecord,
    material: MaterialRecord,
    ku: float,
    rho_wire: float = COPPER_RESISTIVITY_OHM_CM,
) -> float:
    """Peak flux density minimizing copper plus core loss.

    B = [1e8 * rho * lambda^2 * IrmsT^2 * MLT
         / (2 * Ku * WA * Ac^3 * lm * beta * Kfe)]^(1/(beta+2))

    Zero referred current has no loss optimum and is rejected; a result
    at or above the saturation limit makes the core infeasible.
    """
    if irms_total <= 0:
        raise ValueError("flux-density: total referred RMS current must be positive")
    beta = material.beta
    bmax = (
        1e8 * rho_wire * volt_seconds**2 * irms_total**2 * core.MLT
        / (2 * ku * core.WA * core.Ac**3 * core.lm * beta * material.Kfe)
    ) ** (1 / (beta + 2))
    if bmax >= material.Bsat:
        raise InfeasibleDesignError(
            f"flux-density: optimum {bmax:.4g} T reaches saturation "
            f"({material.Bsat:g} T); design infeasible at core {core.name!r}"
        )
    return bmax


def compute_turns(
    volt_seconds: float,
    bmax: float,
    core: CoreRecord,
    voltage_ratios: tuple[float, ...],
    exact_ratios: bool = True,
) -> tuple[int, ...]:
    """Integer turns per winding from N1 = lambda/(2*Bmax*Ac) * 1e4.

    N1 is ceiled (at least one turn), then the secondaries follow the
    voltage ratios Nk = N1/n_1k.  With exact_ratios (the default) N1 is
    raised to the nearest value making every Nk an integer; otherwise
    each Nk rounds independently.
    """
    if bmax <= 0:
        n1 = 1
    else:
        raw = volt_seconds * 1e4 / (2 * bmax * core.Ac)
        n1 = max(1, math.ceil(raw - 1e-9))

    def integral(value: float) -> bool:
        return abs(value - round(value)) <= 1e-9 * max(1.0, abs(value))

    if exact_ratios:
        limit = max(10 * n1, n1 + 1000)
        candidate = n1
        while candidate <= limit:
            if all(integral(candidate / ratio) for ratio in voltage_ratios):
                break
            candidate += 1
        else:
            raise DesignError(
                "turns: no integer turn set matches the voltage ratios exactly; "
                "allow independent rounding (allow_ratio_error)"
            )
        n1 = candidate
        return tuple(round(n1 / ratio) for ratio in voltage_ratios)
    return tuple(max(1, round(n1 / ratio)) for ratio in voltage_ratios)


def allocate_window(
    turns: tuple[int, ...], port_rms_currents: tuple[float, ...]
) -> tuple[float, ...]:
    """Window-area fractions alpha_k = Nk*Ik / sum_j(Nj*Ij).

    This is the allocation minimizing total copper loss; the fractions
    sum to one.
    """
    if port_rms_currents is None or len(port_rms_currents) != len(turns):
        raise DesignError("window-allocation: port RMS currents are not populated")
    ampere_turns = [n * i for n, i in zip(turns, port_rms_currents)]
    total = sum(ampere_turns)
    if total <= 0:
        raise DesignError("window-allocation: all port currents are zero")
    return tuple(at / total for at in ampere_turns)


def size_wires(
    alphas: tuple[float, ...],
    ku: float,
    core: CoreRecord,
    turns: tuple[int, ...],
    catalog: Catalog,
) -> tuple[tuple[WireGauge, ...], tuple[str, ...]]:
    """Largest gauge per winding within Awk <= alpha_k*Ku*WA/Nk.

    A bound above the largest cataloged wire clamps to that wire with a
    warning; a bound below the finest wire propagates as an error.
    """
    wires = []
    warnings = []
    for port, (alpha, n) in enumerate(zip(alphas, turns), start=1):
        bound = alpha * ku * core.WA / n
        largest = catalog.largest_wire()
        if bound >= largest.area:
            if bound > largest.area:
                warnings.append(
                    f"port {port}: wire bound {bound:.4g} cm^2 exceeds the largest "
                    f"cataloged gauge (AWG {largest.awg}); clamped"
                )
            wires.append(largest)
        else:
            wires.append(catalog.smallest_wire_at_most(bound))
    return tuple(wires), tuple(warnings)


def rated_rms_currents(spec: DesignSpec) -> tuple[float, ...]:
    """Steady-state port RMS currents at rated power and target inductance.

    Two ports: the rated-power phase shift of the single link.  Three
    ports: a balanced delta of the target inductance with ports 2 and 3
    equally loaded; both reduce to the exact piecewise-linear link
    solution.
    """
    v = spec.port_voltages
    fs = spec.switching_frequency
    target = spec.target_link_inductance
    if spec.K == 2:
        link = LinkParams(V1=v[0], V2=v[1], n=v[0] / v[1], fs=fs, L=target)
        phi = solve_phase_shift(spec.power_rating, link)
        trace = simulate_dab(v[0], v[1], v[0] / v[1], target, fs, phi)
        return trace.rms_currents
    # Matched referred branches 1-2 and 1-3 each carry half the rating;
    # branch 2-3 idles, so port currents follow one branch solution.
    branch = LinkParams(V1=v[0], V2=v[0], n=1.0, fs=fs, L=target)
    phi = solve_phase_shift(spec.power_rating / 2, branch)
    trace = simulate_dab(v[0], v[0], 1.0, target, fs, phi)
    r = trace.rms_currents[0]
    return (2 * r, r * v[0] / v[1], r * v[0] / v[2])


def _material_for(spec: DesignSpec, catalog: Catalog) -> MaterialRecord:
    if len(catalog.materials) != 1:
        raise DesignError(
            "core-constant: catalog has multiple materials; a single ferrite "
            "material is required for core sizing"
        )
    return next(iter(catalog.materials.values()))


def design_transformer(
    spec: DesignSpec, catalog: Catalog, exact_ratios: bool = True
) -> DesignResult:
    """Run the full design pipeline for a spec against a core catalog."""

    def stage(name: str, func, *args, **kwargs):
        try:
            return func(*args, **kwargs)
        except DesignError:
            raise
        except Exception as exc:
            raise DesignError(f"{name}: {exc}") from exc

    currents = spec.port_rms_currents
    if currents is None:
        currents = stage("rms-currents", rated_rms_currents, spec)
        spec = DesignSpec(
            power_rating=spec.power_rating,
            port_voltages=spec.port_voltages,
            switching_frequency=spec.switching_frequency,
            duty=spec.duty,
            loss_fraction=spec.loss_fraction,
            fill_factor=spec.fill_factor,
            target_link_inductance=spec.target_link_inductance,
            port_rms_currents=currents,
        )

    material = _material_for(spec, catalog)
    lam = stage("volt-seconds", compute_volt_seconds, spec)
    irms_total = stage("referred-rms", total_referred_rms, spec)
    kgfe_min = stage(
        "core-constant", required_kgfe, spec, lam, irms_total, material, catalog.rho_wire
    )
    # The Kgfe bound assumes the flux optimum is attainable; when a core's
    # optimum collides with saturation, step up to the next larger core.
    candidates = sorted(
        (core for core in catalog.cores.values() if core.Kgfe >= kgfe_min),
        key=lambda core: (core.Kgfe, core.Ac, core.name),
    )
    stage("core-selection", select_core, kgfe_min, catalog)
    core = bmax_opt = None
    last_error: DesignError | None = None
    for candidate in candidates:
        try:
            bmax_opt = stage(
                "flux-density", optimal_bmax, lam, irms_total, candidate, material,
                spec.fill_factor, catalog.rho_wire,
            )
        except InfeasibleDesignError as exc:
            last_error = exc
            continue
        core = candidate
        break
    if core is None:
        raise last_error if last_error is not None else InfeasibleDesignError(
            "flux-density: no feasible core"
        )
    turns = stage("turns", compute_turns, lam, bmax_opt, core, spec.voltage_ratios,
                  exact_ratios)
    alphas = stage("window-allocation", allocate_window, turns, currents)
    wires, warnings = stage("wire-sizing", size_wires, alphas, spec.fill_factor,
                            core, turns, catalog)

    bmax_actual = lam * 1e4 / (2 * turns[0] * core.Ac)
    if bmax_actual >= material.Bsat:
        raise InfeasibleDesignError(
            f"flux-density: operating peak {bmax_actual:.4g} T reaches saturation"
        )
    result = DesignResult(
        core=core,
        material=material,
        Bmax=bmax_actual,
        bmax_optimal=bmax_opt,
        turns=turns,
        window_fractions=alphas,
        wires=wires,
        turns_ratios=tuple(turns[0] / nk for nk in turns),
        kgfe_required=kgfe_min,
        total_referred_rms=irms_total,
        volt_seconds=lam,
        port_rms_currents=currents,
        warnings=warnings,
    )
    _validate_result(result, spec)
    return result


def _validate_result(result: DesignResult, spec: DesignSpec) -> None:
    if sum(result.window_fractions) > 1 + 1e-9:
        raise DesignError("result: window fractions exceed the full window")
    if any(n < 1 for n in result.turns):
        raise DesignError("result: every winding needs at least one turn")
    for ratio, target in zip(result.turns_ratios, spec.voltage_ratios):
        if abs(ratio - target) > 0.5 * max(1.0, target):
            raise DesignError(
                f"result: turns ratio {ratio:g} strays from voltage ratio {target:g}"
            )
