"""Nonlinear reluctance network of an EE core with placeable windings.

A magnetostatic stand-in for finite-element analysis: the core legs and
yokes become saturable ferrite branches, each winding window becomes an
nx-by-ny grid of air branches, and winding ampere-turns enter as branch
MMF sources.  The nodal magnetic-potential equations are solved by
damped Newton-Raphson; incremental inductance matrices follow from
central differences of the flux linkages.

The winding sources use a cut construction: per window, cell
ampere-turns are spread onto the dual faces of the grid and each face's
current is routed out through the branches below it.  Every closed loop
of the graph then picks up exactly the ampere-turns it encircles, and
the same incidence array turns branch fluxes back into flux linkages,
which keeps the extracted matrices reciprocal.

Geometry units are cm at the interface (matching the core catalog) and
SI internally.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import CoreRecord, MaterialRecord

MU0 = 4e-7 * math.pi


class PlacementError(ValueError):
    """Winding region falls outside the window or overlaps another region."""


class ConvergenceError(RuntimeError):
    """Newton iteration failed (non-convergence or singular Jacobian)."""


@dataclass(frozen=True)
class WindingRegion:
    """Rectangular conductor region wound on one leg.

    axial span (y0, y1) is measured in cm from the window bottom; radial
    span (r0, r1) in cm outward from the wound leg's surface.
    orientation +1 magnetizes the leg upward for positive current.
    """

    leg: str  # center | outer-left | outer-right
    axial: tuple[float, float]
    radial: tuple[float, float]
    orientation: int = 1

    def __post_init__(self):
        if self.leg not in ("center", "outer-left", "outer-right"):
            raise PlacementError(f"unknown leg {self.leg!r}")
        if self.orientation not in (-1, 1):
            raise PlacementError("orientation must be +1 or -1")


@dataclass(frozen=True)
class WindingPlacement:
    """Turn counts plus one wound region per winding."""

    turns: tuple[int, ...]
    regions: tuple[WindingRegion, ...]

    def __post_init__(self):
        if len(self.turns) != len(self.regions):
            raise PlacementError("one region per winding required")

    @property
    def K(self) -> int:
        return len(self.turns)


def concentric_placement(core: CoreRecord, turns: tuple[int, ...]) -> WindingPlacement:
    """Both windings on the center leg, nested radially (strong coupling)."""
    if len(turns) != 2:
        raise PlacementError("concentric layout is defined for 2 windings")
    ww, wh = core.window_width, core.window_height
    span = (0.05 * wh, 0.95 * wh)
    return WindingPlacement(
        turns=tuple(turns),
        regions=(
            WindingRegion("center", span, (0.06 * ww, 0.44 * ww)),
            WindingRegion("center", span, (0.56 * ww, 0.94 * ww)),
        ),
    )


def center_stacked_placement(core: CoreRecord, turns: tuple[int, ...]) -> WindingPlacement:
    """Windings in a row along the center leg, separated axially.

    Coil blocks sit against the window ends with double-width gaps
    between neighbors (span wh/(3K-2), gaps 2*wh/(3K-2)), maximizing the
    axial separation that sets the leakage.
    """
    k = len(turns)
    ww, wh = core.window_width, core.window_height
    unit = wh / (3 * k - 2)
    radial = (0.06 * ww, 0.94 * ww)
    regions = tuple(
        WindingRegion("center", (3 * index * unit, (3 * index + 1) * unit), radial)
        for index in range(k)
    )
    return WindingPlacement(turns=tuple(turns), regions=regions)


def outer_legs_placement(core: CoreRecord, turns: tuple[int, ...]) -> WindingPlacement:
    """Windings on opposite outer legs (weakest coupling).

    Orientations follow the series-aiding dot convention around the
    outer loop so the mutual inductance stays positive.
    """
    if len(turns) != 2:
        raise PlacementError("outer-legs layout is defined for 2 windings")
    ww, wh = core.window_width, core.window_height
    span = (wh / 3, 2 * wh / 3)
    radial = (0.05 * ww, 0.45 * ww)
    return WindingPlacement(
        turns=tuple(turns),
        regions=(
            WindingRegion("outer-left", span, radial, orientation=1),
            WindingRegion("outer-right", span, radial, orientation=-1),
        ),
    )


LAYOUT_BUILDERS = {
    "concentric": concentric_placement,
    "center-stacked": center_stacked_placement,
    "outer-legs": outer_legs_placement,
}


def placement_for_layout(layout: str, core: CoreRecord, turns) -> WindingPlacement:
    try:
        builder = LAYOUT_BUILDERS[layout]
    except KeyError:
        raise PlacementError(
            f"unknown layout {layout!r}; expected one of {sorted(LAYOUT_BUILDERS)}"
        ) from None
    return builder(core, tuple(turns))


@dataclass(frozen=True)
class OperatingPoint:
    """Excitation for one magnetostatic solve.

    primary-only: the first winding carries winding_currents[0], the
    rest are open.  balanced-mmf: the first winding carries the given
    current and the counter-ampere-turns split equally over the other
    windings, nulling the net magnetizing MMF.  explicit: the list is
    used verbatim.
    """

    winding_currents: tuple[float, ...]
    excitation_mode: str = "balanced-mmf"

    def __post_init__(self):
        if self.excitation_mode not in ("primary-only", "balanced-mmf", "explicit"):
            raise ValueError(f"unknown excitation mode {self.excitation_mode!r}")
        if not all(math.isfinite(i) for i in self.winding_currents):
            raise ValueError("winding currents must be finite")

    def resolve(self, turns: tuple[int, ...]) -> np.ndarray:
        """Per-winding currents for the network's windings."""
        k = len(turns)
        currents = np.zeros(k)
        given = list(self.winding_currents)
        if self.excitation_mode == "explicit":
            if len(given) != k:
                raise ValueError("explicit mode needs one current per winding")
            return np.asarray(given, dtype=float)
        currents[0] = given[0]
        if self.excitation_mode == "balanced-mmf" and k > 1:
            counter = -turns[0] * currents[0] / (k - 1)
            for index in range(1, k):
                currents[index] = counter / turns[index]
        return currents


class MagneticNetwork:
    """Branch list of a lumped magnetic circuit with winding incidence.

    Branches connect magnetic-potential nodes; each has geometry, a
    medium (fixed-permeability or saturable ferrite) and may carry MMF
    from the windings via the incidence array ``T`` (effective turns per
    branch, sign following the branch orientation).
    """

    def __init__(self, turns: tuple[int, ...] = ()):
        self.turns = tuple(turns)
        self.node_count = 0
        self.node_i: list[int] = []
        self.node_j: list[int] = []
        self.length: list[float] = []   # m
        self.area: list[float] = []     # m^2
        self.mu_r: list[float] = []     # fixed-permeability branches
        self.is_ferrite: list[bool] = []
        self.labels: list[str] = []
        self.material: MaterialRecord | None = None
        self._incidence: dict[tuple[int, int], float] = {}

    def add_node(self) -> int:
        self.node_count += 1
        return self.node_count - 1

    def add_nodes(self, count: int) -> list[int]:
        return [self.add_node() for _ in range(count)]

    def add_branch(self, i: int, j: int, length_m: float, area_m2: float,
                   medium: str = "air", mu_r: float = 1.0, label: str = "") -> int:
        if length_m <= 0 or area_m2 <= 0:
            raise ValueError("branch length and area must be positive")
        if medium == "ferrite" and self.material is None:
            raise ValueError("set the network material before adding ferrite branches")
        self.node_i.append(i)
        self.node_j.append(j)
        self.length.append(length_m)
        self.area.append(area_m2)
        self.mu_r.append(mu_r)
        self.is_ferrite.append(medium == "ferrite")
        self.labels.append(label)
        return len(self.node_i) - 1

    def add_turns(self, winding: int, branch: int, effective_turns: float) -> None:
        key = (winding, branch)
        self._incidence[key] = self._incidence.get(key, 0.0) + effective_turns

    @property
    def n_branches(self) -> int:
        return len(self.node_i)

    def incidence_matrix(self) -> np.ndarray:
        t = np.zeros((len(self.turns), self.n_branches))
        for (winding, branch), value in self._incidence.items():
            t[winding, branch] = value
        return t

    def validate(self) -> None:
        if self.node_count < 2 or not self.node_i:
            raise ValueError("network needs at least two nodes and one branch")
        # connectivity by union-find
        parent = list(range(self.node_count))
        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a
        for i, j in zip(self.node_i, self.node_j):
            parent[find(i)] = find(j)
        roots = {find(n) for n in range(self.node_count)}
        if len(roots) > 1:
            raise ValueError("network is not connected")


def _bh_curve(h: np.ndarray, material: MaterialRecord):
    """Anhysteretic B(H) and dB/dH: mu0*H plus an arctan saturation term."""
    slope = math.pi * (material.mu_r_initial - 1) * MU0 / (2 * material.Bsat)
    arg = slope * h
    b = MU0 * h + (2 * material.Bsat / math.pi) * np.arctan(arg)
    db = MU0 + (material.mu_r_initial - 1) * MU0 / (1 + arg**2)
    return b, db


@dataclass
class SolveResult:
    potentials: np.ndarray     # per node, A
    branch_flux: np.ndarray    # per branch, Wb
    branch_h: np.ndarray       # per branch, A/m
    iterations: int
    residual: float


def solve_nonlinear(
    net: MagneticNetwork,
    op: OperatingPoint,
    max_iterations: int = 100,
    tolerance: float = 1e-9,
    initial_potentials: np.ndarray | None = None,
) -> SolveResult:
    """Damped Newton solve of the nodal flux-balance equations.

    Converged when the largest flux update and the largest nodal flux
    imbalance both fall below ``tolerance`` relative to the largest
    branch flux.  The initial guess is the linear solution at initial
    permeability unless a warm start is given.
    """
    net.validate()
    currents = op.resolve(net.turns)
    t_matrix = net.incidence_matrix()
    mmf = t_matrix.T @ currents if len(net.turns) else np.zeros(net.n_branches)

    node_i = np.asarray(net.node_i)
    node_j = np.asarray(net.node_j)
    length = np.asarray(net.length)
    area = np.asarray(net.area)
    mu_fixed = np.asarray(net.mu_r) * MU0
    ferrite = np.asarray(net.is_ferrite)
    n_nodes = net.node_count

    def branch_state(u):
        h = (u[node_i] - u[node_j] + mmf) / length
        b = mu_fixed * h
        db = mu_fixed.copy()
        if ferrite.any():
            b_f, db_f = _bh_curve(h[ferrite], net.material)
            b[ferrite] = b_f
            db[ferrite] = db_f
        return h, b * area, db * area / length

    def residual_vector(flux):
        r = np.zeros(n_nodes)
        np.add.at(r, node_i, flux)
        np.add.at(r, node_j, -flux)
        return r[1:]  # node 0 grounded

    if not np.any(mmf):
        u = np.zeros(n_nodes)
        h, flux, _ = branch_state(u)
        return SolveResult(u, flux, h, iterations=0, residual=0.0)

    if initial_potentials is not None:
        u = initial_potentials.copy()
    else:
        # Linear solution at initial permeability.
        mu_init = mu_fixed.copy()
        if ferrite.any():
            mu_init[ferrite] = net.material.mu_r_initial * MU0
        g = mu_init * area / length
        u = np.zeros(n_nodes)
        u[1:] = _linear_solve(g, node_i, node_j, mmf, n_nodes)

    h, flux, gradient = branch_state(u)
    r = residual_vector(flux)
    flux_scale = max(float(np.max(np.abs(flux))), 1e-30)

    for iteration in range(1, max_iterations + 1):
        jac = np.zeros((n_nodes, n_nodes))
        np.add.at(jac, (node_i, node_i), gradient)
        np.add.at(jac, (node_j, node_j), gradient)
        np.add.at(jac, (node_i, node_j), -gradient)
        np.add.at(jac, (node_j, node_i), -gradient)
        try:
            step = np.linalg.solve(jac[1:, 1:], -r)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular Jacobian at iteration {iteration}") from exc

        # Step halving whenever the residual norm would grow.
        r_norm = np.linalg.norm(r)
        scale = 1.0
        for _ in range(21):
            u_trial = u.copy()
            u_trial[1:] += scale * step
            h_trial, flux_trial, gradient_trial = branch_state(u_trial)
            r_trial = residual_vector(flux_trial)
            if np.linalg.norm(r_trial) <= r_norm or scale < 1e-6:
                break
            scale *= 0.5

        flux_change = float(np.max(np.abs(flux_trial - flux)))
        u, h, gradient, r = u_trial, h_trial, gradient_trial, r_trial
        flux = flux_trial
        flux_scale = max(float(np.max(np.abs(flux))), 1e-30)
        residual = float(np.max(np.abs(r)))
        if flux_change < tolerance * flux_scale and residual < tolerance * flux_scale:
            return SolveResult(u, flux, h, iterations=iteration,
                               residual=residual / flux_scale)

    raise ConvergenceError(
        f"no convergence after {max_iterations} iterations; "
        f"last residual {float(np.max(np.abs(r))) / flux_scale:.3e} (relative)"
    )


def _linear_solve(g, node_i, node_j, mmf, n_nodes):
    jac = np.zeros((n_nodes, n_nodes))
    np.add.at(jac, (node_i, node_i), g)
    np.add.at(jac, (node_j, node_j), g)
    np.add.at(jac, (node_i, node_j), -g)
    np.add.at(jac, (node_j, node_i), -g)
    rhs = np.zeros(n_nodes)
    source = g * mmf
    np.add.at(rhs, node_i, -source)
    np.add.at(rhs, node_j, source)
    try:
        return np.linalg.solve(jac[1:, 1:], rhs[1:])
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError("singular Jacobian in the linear initial solve") from exc


def build_ee_network(
    core: CoreRecord,
    material: MaterialRecord,
    placement: WindingPlacement,
    mesh: tuple[int, int] = (8, 12),
) -> MagneticNetwork:
    """Discretize an EE core and its two winding windows.

    Legs and yokes become chains of ferrite branches; each window an
    nx-by-ny air grid joined to the legs and yokes.  Winding regions are
    spread over the window cells they overlap and their ampere-turns are
    injected through the cut construction described in the module
    docstring.
    """
    nx, ny = mesh
    if nx < 1 or ny < 1:
        raise ValueError("mesh must be at least 1x1")
    cm = 1e-2
    ww, wh = core.window_width * cm, core.window_height * cm
    wc, wo = core.center_leg_width * cm, core.outer_leg_width * cm
    hy, depth = core.yoke_height * cm, core.depth * cm
    dx, dy = ww / nx, wh / ny

    for region in placement.regions:
        r0, r1 = region.radial
        y0, y1 = region.axial
        if not (0 <= r0 < r1 <= core.window_width + 1e-9):
            raise PlacementError(
                f"radial span {region.radial} outside the window width "
                f"{core.window_width} cm"
            )
        if not (0 <= y0 < y1 <= core.window_height + 1e-9):
            raise PlacementError(
                f"axial span {region.axial} outside the window height "
                f"{core.window_height} cm"
            )
    _check_region_overlap(placement, ww)

    net = MagneticNetwork(turns=placement.turns)
    net.material = material

    center = net.add_nodes(ny + 2)           # rows 0..ny+1, bottom yoke to top yoke
    outer = {"L": net.add_nodes(ny + 2), "R": net.add_nodes(ny + 2)}
    cells = {
        side: [[net.add_node() for _ in range(ny)] for _ in range(nx)]
        for side in ("L", "R")
    }
    yoke = {
        (side, pos): net.add_nodes(nx)
        for side in ("L", "R")
        for pos in ("bottom", "top")
    }

    def leg_lengths(row):
        return hy / 2 + dy / 2 if row in (0, ny) else dy

    for row in range(ny + 1):
        net.add_branch(center[row], center[row + 1], leg_lengths(row), wc * depth,
                       "ferrite", label=f"center-leg r{row}")
        for side in ("L", "R"):
            net.add_branch(outer[side][row], outer[side][row + 1], leg_lengths(row),
                           wo * depth, "ferrite", label=f"outer-{side} r{row}")

    # Yoke chains; left window runs outer -> center, right window center -> outer,
    # so strip s always goes from the window's left rail to its right rail.
    yoke_branches: dict[tuple[str, str], list[int]] = {}
    for side in ("L", "R"):
        for pos in ("bottom", "top"):
            rail_row = 0 if pos == "bottom" else ny + 1
            left_rail = outer["L"][rail_row] if side == "L" else center[rail_row]
            right_rail = center[rail_row] if side == "L" else outer["R"][rail_row]
            left_half = wo / 2 if side == "L" else wc / 2
            right_half = wc / 2 if side == "L" else wo / 2
            chain = yoke[(side, pos)]
            branches = [net.add_branch(left_rail, chain[0], left_half + dx / 2,
                                       hy * depth, "ferrite", label=f"yoke {side}{pos} s0")]
            for col in range(nx - 1):
                branches.append(net.add_branch(chain[col], chain[col + 1], dx,
                                               hy * depth, "ferrite",
                                               label=f"yoke {side}{pos} s{col + 1}"))
            branches.append(net.add_branch(chain[nx - 1], right_rail,
                                           dx / 2 + right_half, hy * depth, "ferrite",
                                           label=f"yoke {side}{pos} s{nx}"))
            yoke_branches[(side, pos)] = branches

    # Window air branches.  horizontal[side][s][r-1] is the strip-s branch in row r.
    horizontal: dict[str, list[list[int]]] = {"L": [], "R": []}
    for side in ("L", "R"):
        left_rail = outer["L"] if side == "L" else center
        right_rail = center if side == "L" else outer["R"]
        for strip in range(nx + 1):
            column: list[int] = []
            for row in range(1, ny + 1):
                if strip == 0:
                    i, j, length = left_rail[row], cells[side][0][row - 1], dx / 2
                elif strip == nx:
                    i, j, length = cells[side][nx - 1][row - 1], right_rail[row], dx / 2
                else:
                    i = cells[side][strip - 1][row - 1]
                    j = cells[side][strip][row - 1]
                    length = dx
                column.append(net.add_branch(i, j, length, dy * depth, "air",
                                             label=f"win-{side} h s{strip} r{row}"))
            horizontal[side].append(column)
        for col in range(nx):
            net.add_branch(yoke[(side, "bottom")][col], cells[side][col][0], dy / 2,
                           dx * depth, "air", label=f"win-{side} v c{col + 1} r0")
            for row in range(ny - 1):
                net.add_branch(cells[side][col][row], cells[side][col][row + 1], dy,
                               dx * depth, "air", label=f"win-{side} v c{col + 1} r{row + 1}")
            net.add_branch(cells[side][col][ny - 1], yoke[(side, "top")][col], dy / 2,
                           dx * depth, "air", label=f"win-{side} v c{col + 1} r{ny}")

    # Winding ampere-turn injection.
    for winding, (turns, region) in enumerate(zip(placement.turns, placement.regions)):
        for side, sign in _region_sides(region):
            x0, x1 = _region_x_range(region, side, ww)
            cell_turns = _cell_overlap_turns(
                x0, x1, region.axial[0] * cm, region.axial[1] * cm,
                nx, ny, dx, dy, turns * region.orientation * sign,
            )
            _inject_cut_sources(net, winding, cell_turns, horizontal[side],
                                yoke_branches[(side, "bottom")], nx, ny)

    return net


def _region_sides(region: WindingRegion):
    """Window sides a region's conductors occupy, with the +z sign of the
    conductor current for positive winding current (z out of the page)."""
    if region.leg == "center":
        return (("L", 1), ("R", -1))
    if region.leg == "outer-left":
        return (("L", -1),)
    return (("R", 1),)


def _region_x_range(region: WindingRegion, side: str, ww: float):
    """Map a radial span (from the wound leg surface) to window x (left rail = 0)."""
    cm = 1e-2
    r0, r1 = region.radial[0] * cm, region.radial[1] * cm
    from_left = (region.leg == "outer-left" and side == "L") or (
        region.leg == "center" and side == "R"
    )
    if from_left:
        return r0, r1
    return ww - r1, ww - r0


def _cell_overlap_turns(x0, x1, y0, y1, nx, ny, dx, dy, signed_turns):
    """Distribute turns over window cells by rectangle-overlap fraction."""
    area = (x1 - x0) * (y1 - y0)
    cell_turns = np.zeros((nx, ny))
    for col in range(nx):
        overlap_x = max(0.0, min(x1, (col + 1) * dx) - max(x0, col * dx))
        if overlap_x <= 0:
            continue
        for row in range(ny):
            overlap_y = max(0.0, min(y1, (row + 1) * dy) - max(y0, row * dy))
            if overlap_y > 0:
                cell_turns[col, row] = signed_turns * overlap_x * overlap_y / area
    return cell_turns


def _inject_cut_sources(net, winding, cell_turns, horizontal, yoke_bottom, nx, ny):
    """Spread cell turns onto dual faces, then cut downward through the yoke."""
    faces = np.zeros((nx + 1, ny + 1))
    for col in range(nx):        # cell (col+1, row+1) in 1-based node columns/rows
        for row in range(ny):
            quarter = cell_turns[col, row] / 4
            for strip in (col, col + 1):
                for face_row in (row, row + 1):
                    faces[strip, face_row] += quarter
    for strip in range(nx + 1):
        # Faces at or above row r contribute to the row-r horizontal branch.
        suffix = np.cumsum(faces[strip, ::-1])[::-1]  # suffix[q] = sum_{>=q}
        for row in range(1, ny + 1):
            if suffix[row]:
                net.add_turns(winding, horizontal[strip][row - 1], suffix[row])
        if suffix[0]:
            net.add_turns(winding, yoke_bottom[strip], suffix[0])


def _check_region_overlap(placement: WindingPlacement, ww_m: float) -> None:
    cm = 1e-2
    boxes: list[tuple[int, str, float, float, float, float]] = []
    for index, region in enumerate(placement.regions):
        for side, _sign in _region_sides(region):
            x0, x1 = _region_x_range(region, side, ww_m)
            boxes.append((index, side, x0, x1,
                          region.axial[0] * cm, region.axial[1] * cm))
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            ia, sa, ax0, ax1, ay0, ay1 = boxes[a]
            ib, sb, bx0, bx1, by0, by1 = boxes[b]
            if ia == ib or sa != sb:
                continue
            if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                raise PlacementError(
                    f"regions of windings {ia + 1} and {ib + 1} overlap in window {sa}"
                )


def flux_linkages(net: MagneticNetwork, solution: SolveResult) -> np.ndarray:
    """Per-winding flux linkage: incidence times branch flux."""
    return net.incidence_matrix() @ solution.branch_flux


def inductance_matrix(
    net: MagneticNetwork,
    op: OperatingPoint,
    extraction: str = "apparent",
    max_iterations: int = 100,
) -> "InductanceMatrix":
    """Inductance matrix at an operating point by central differences.

    L[j, k] = d(lambda_j)/d(i_k) with delta_i = max(1e-3 * |i_k|, 1e-3 A),
    symmetrized by averaging.  ``apparent`` (the default) differences the
    network with every ferrite branch frozen at its operating secant
    permeability B/H, matching the matrix output of magnetostatic field
    solvers; ``differential`` differences the full nonlinear solution,
    yielding the small-signal (tangent) matrix.  The two coincide
    wherever the core is not saturated.
    """
    from .aclink import InductanceMatrix

    if extraction not in ("apparent", "differential"):
        raise ValueError(f"unknown extraction {extraction!r}")
    base_currents = op.resolve(net.turns)
    base = solve_nonlinear(net, op, max_iterations=max_iterations)
    t_matrix = net.incidence_matrix()
    k = len(net.turns)

    if extraction == "apparent":
        area = np.asarray(net.area)
        length = np.asarray(net.length)
        ferrite = np.asarray(net.is_ferrite)
        mu = np.asarray(net.mu_r) * MU0
        if ferrite.any():
            h = base.branch_h
            b = base.branch_flux / area
            safe_h = np.where(np.abs(h) > 1e-12, h, 1.0)
            mu_apparent = np.where(np.abs(h) > 1e-12, b / safe_h,
                                   net.material.mu_r_initial * MU0)
            mu = np.where(ferrite, mu_apparent, mu)
        g = mu * area / length
        node_i = np.asarray(net.node_i)
        node_j = np.asarray(net.node_j)

        def linkages_at(currents):
            mmf = t_matrix.T @ currents
            u = np.zeros(net.node_count)
            u[1:] = _linear_solve(g, node_i, node_j, mmf, net.node_count)
            return t_matrix @ (g * (u[node_i] - u[node_j] + mmf))
    else:
        def linkages_at(currents):
            solution = solve_nonlinear(net, OperatingPoint(tuple(currents), "explicit"),
                                       max_iterations=max_iterations,
                                       initial_potentials=base.potentials)
            return t_matrix @ solution.branch_flux

    matrix = np.zeros((k, k))
    for winding in range(k):
        delta = max(1e-3 * abs(base_currents[winding]), 1e-3)
        plus = base_currents.copy()
        plus[winding] += delta
        minus = base_currents.copy()
        minus[winding] -= delta
        matrix[:, winding] = (linkages_at(plus) - linkages_at(minus)) / (2 * delta)
    matrix = (matrix + matrix.T) / 2
    return InductanceMatrix(L=matrix, turns=net.turns)


@dataclass(frozen=True)
class SweepRow:
    i_rms: float
    llt: float
    lm: float
    converged: bool


def sweep_rms(
    core: CoreRecord,
    material: MaterialRecord,
    placement: WindingPlacement,
    current_grid,
    excitation_mode: str = "balanced-mmf",
    mesh: tuple[int, int] = (8, 12),
    extraction: str = "apparent",
) -> list[SweepRow]:
    """Leakage and magnetizing inductance versus excitation current.

    For each grid current the operating point is set per the excitation
    mode, the incremental matrix extracted, and the two-winding leakage
    total plus Lm = (N1/N2)*L12 recorded.  Non-converged points are
    flagged and the sweep continues.
    """
    from .aclink import leakage_two_winding

    if placement.K != 2:
        raise ValueError("sweep_rms is defined for two-winding placements")
    grid = [float(i) for i in current_grid]
    if not grid or min(grid) <= 0:
        raise ValueError("current grid must be non-empty and positive")

    net = build_ee_network(core, material, placement, mesh=mesh)
    n1, n2 = placement.turns
    rows = []
    for current in grid:
        op = OperatingPoint((current,), excitation_mode)
        try:
            matrix = inductance_matrix(net, op, extraction=extraction)
        except ConvergenceError:
            rows.append(SweepRow(current, math.nan, math.nan, converged=False))
            continue
        _, _, llt = leakage_two_winding(matrix)
        rows.append(SweepRow(current, llt, (n1 / n2) * matrix.L[0, 1], converged=True))
    return rows


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("i_rms_a,llt_h,lm_h,converged\n")
        for row in rows:
            fh.write(
                f"{row.i_rms:.12g},{row.llt:.12g},{row.lm:.12g},"
                f"{'true' if row.converged else 'false'}\n"
            )
