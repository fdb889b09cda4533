"""Closed-form AC-link algebra for dual and triple active bridges.

Phase-shift power flow between square-wave bridges, inversion of the
power equation, leakage extraction from self/mutual inductance
matrices, and the star/delta three-port equivalents referred to port 1.

Sign conventions: port-k square waves are delayed by phi_k relative to
port 1, and positive transferred power P_jk flows from the leading port
j to the lagging port k.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class NonPhysicalMatrixError(ValueError):
    """Inductance matrix yields a negative star leakage beyond tolerance."""


class PowerLimitError(ValueError):
    """Requested transfer exceeds the link's maximum power."""

    def __init__(self, p_target: float, p_max: float):
        super().__init__(
            f"requested {p_target:g} W exceeds the link maximum {p_max:g} W"
        )
        self.p_max = p_max


def normalize_phase(phi: float) -> float:
    """Wrap a phase shift into (-pi, pi]."""
    phi = math.fmod(phi, 2 * math.pi)
    if phi > math.pi:
        phi -= 2 * math.pi
    elif phi <= -math.pi:
        phi += 2 * math.pi
    return phi


@dataclass(frozen=True)
class LinkParams:
    """Two-port AC link: square-wave amplitudes, turns ratio n = N1/N2,
    switching frequency, total inductance referred to port 1, phase shift."""

    V1: float
    V2: float
    n: float
    fs: float
    L: float
    phi: float = 0.0

    def __post_init__(self):
        if self.L <= 0 or self.fs <= 0:
            raise ValueError("L and fs must be positive")
        if abs(self.phi) > math.pi:
            raise ValueError("phi must lie in [-pi, pi]")


def power_transfer(p: LinkParams) -> float:
    """Average power from port 1 to port 2 of a phase-shifted DAB link.

    P = n*V1*V2/(2*pi*fs*L) * phi*(1 - |phi|/pi); odd in phi, maximum at
    phi = pi/2.
    """
    phi = normalize_phase(p.phi)
    gain = p.n * p.V1 * p.V2 / (2 * math.pi * p.fs * p.L)
    return gain * phi * (1 - abs(phi) / math.pi)


def max_power(p: LinkParams) -> float:
    """Transfer capability at phi = pi/2: n*V1*V2/(8*fs*L)."""
    return p.n * p.V1 * p.V2 / (8 * p.fs * p.L)


def solve_phase_shift(p_target: float, p: LinkParams) -> float:
    """Phase shift on the |phi| <= pi/2 branch that transfers p_target watts.

    Inverts the power equation: phi = sign(P)*(pi - sqrt(pi^2 - 4*pi*|P|/K))/2
    with K = n*V1*V2/(2*pi*fs*L).  Raises PowerLimitError (reporting the
    limit) when |p_target| exceeds the phi = pi/2 capability.
    """
    p_max = max_power(p)
    if abs(p_target) > p_max * (1 + 1e-12):
        raise PowerLimitError(p_target, p_max)
    gain = p.n * p.V1 * p.V2 / (2 * math.pi * p.fs * p.L)
    discriminant = max(math.pi**2 - 4 * math.pi * abs(p_target) / gain, 0.0)
    phi = (math.pi - math.sqrt(discriminant)) / 2
    return math.copysign(phi, p_target) if p_target else 0.0


@dataclass(frozen=True)
class InductanceMatrix:
    """Symmetric K x K self/mutual matrix (H) with per-winding turns."""

    L: np.ndarray
    turns: tuple[int, ...]
    rel_tol: float = 1e-9

    def __post_init__(self):
        matrix = np.asarray(self.L, dtype=float)
        object.__setattr__(self, "L", matrix)
        object.__setattr__(self, "turns", tuple(int(t) for t in self.turns))
        k = len(self.turns)
        if matrix.shape != (k, k):
            raise ValueError(f"matrix shape {matrix.shape} does not match {k} windings")
        scale = float(np.max(np.abs(matrix))) or 1.0
        if np.max(np.abs(matrix - matrix.T)) > self.rel_tol * scale:
            raise ValueError("inductance matrix is not symmetric")
        if np.any(np.diag(matrix) <= 0):
            raise ValueError("self-inductances must be positive")
        for i in range(k):
            for j in range(i + 1, k):
                minor = matrix[i, i] * matrix[j, j] - matrix[i, j] ** 2
                if minor < -self.rel_tol * scale**2:
                    raise ValueError(
                        f"principal minor ({i + 1},{j + 1}) negative: coupling exceeds 1"
                    )

    @property
    def K(self) -> int:
        return len(self.turns)


def leakage_two_winding(m: InductanceMatrix) -> tuple[float, float, float]:
    """Primary/secondary leakage split and the total referred to port 1.

    Ll1 = L11 - (N1/N2)*L12, Ll2 = L22 - (N2/N1)*L12,
    LlT = Ll1 + Ll2*(N1/N2)^2.
    """
    if m.K != 2:
        raise ValueError("leakage_two_winding requires a 2-winding matrix")
    n12 = m.turns[0] / m.turns[1]
    ll1 = m.L[0, 0] - n12 * m.L[0, 1]
    ll2 = m.L[1, 1] - m.L[0, 1] / n12
    return ll1, ll2, ll1 + ll2 * n12**2


def star_from_matrix(m: InductanceMatrix) -> tuple[float, float, float]:
    """Star (T-equivalent) leakages of a 3-winding matrix, referred to port 1.

    Each winding's leakage is computed in its own frame against its
    mutual with the other branch of the star (L11 - (N1/N2)*L12,
    L22 - (N2/N1)*L12, L33 - (N3/N1)*L13), then ports 2 and 3 are
    referred to port 1 by (N1/Nk)^2.  For two windings this reduces to
    the leakage_two_winding split of the total.
    """
    if m.K != 3:
        raise ValueError("star_from_matrix requires a 3-winding matrix")
    n1, n2, n3 = m.turns
    own = (
        m.L[0, 0] - (n1 / n2) * m.L[0, 1],
        m.L[1, 1] - (n2 / n1) * m.L[0, 1],
        m.L[2, 2] - (n3 / n1) * m.L[0, 2],
    )
    referred = (own[0], own[1] * (n1 / n2) ** 2, own[2] * (n1 / n3) ** 2)
    floor = -1e-12 * m.L[0, 0]
    for port, value in enumerate(referred, start=1):
        if value < floor:
            raise NonPhysicalMatrixError(
                f"star leakage of port {port} is negative ({value:g} H)"
            )
    return tuple(max(value, 0.0) for value in referred)


def delta_from_star(star: tuple[float, float, float]) -> tuple[float, float, float]:
    """Star-to-delta transform: Ljk = S / L_other with
    S = L1*L2' + L1*L3' + L2'*L3'.

    A zero star leg makes the opposite delta branch an explicit open
    branch (math.inf), through which no power flows.
    """
    l1, l2, l3 = star
    if min(star) < 0:
        raise ValueError("star leakages must be non-negative")
    if sum(1 for leg in star if leg > 0) < 2:
        raise ValueError("at least two star legs must be nonzero")
    s = l1 * l2 + l1 * l3 + l2 * l3
    def branch(denominator: float) -> float:
        return s / denominator if denominator > 0 else math.inf
    return branch(l3), branch(l2), branch(l1)


def star_from_delta(delta: tuple[float, float, float]) -> tuple[float, float, float]:
    """Inverse transform: L1 = L12*L13/D, L2' = L12*L23/D, L3' = L13*L23/D
    with D = L12 + L13 + L23."""
    l12, l13, l23 = delta
    total = l12 + l13 + l23
    return l12 * l13 / total, l12 * l23 / total, l13 * l23 / total


@dataclass(frozen=True)
class PortNetwork:
    """Star leakages and delta inductances of an AC link, referred to port 1.

    For three ports the delta is (L12, L13, L23); open branches are
    represented as math.inf.  For two ports the "delta" is the single
    series total (LlT,).
    """

    star: tuple[float, ...]
    delta: tuple[float, ...]

    def __post_init__(self):
        if any(entry < 0 for entry in self.star + self.delta):
            raise ValueError("port network entries must be non-negative")
        if len(self.star) == 3 and len(self.delta) == 3 and all(map(math.isfinite, self.delta)):
            expected = delta_from_star(self.star)
            for got, want in zip(self.delta, expected):
                if abs(got - want) > 1e-9 * max(want, 1e-30):
                    raise ValueError("delta entries do not match the star network")

    @classmethod
    def from_star(cls, star: tuple[float, float, float]) -> "PortNetwork":
        return cls(star=tuple(star), delta=delta_from_star(star))

    @classmethod
    def from_matrix(cls, m: InductanceMatrix) -> "PortNetwork":
        if m.K == 3:
            return cls.from_star(star_from_matrix(m))
        ll1, ll2, llt = leakage_two_winding(m)
        n12 = m.turns[0] / m.turns[1]
        return cls(star=(ll1, ll2 * n12**2), delta=(llt,))


def tab_power_flows(
    network: PortNetwork,
    voltages: tuple[float, float, float],
    fs: float,
    phi2: float,
    phi3: float,
) -> tuple[float, float, float]:
    """Pairwise powers (P12, P13, P23) of a three-port delta network.

    voltages are the square-wave amplitudes already referred to port 1;
    phi2/phi3 delay ports 2 and 3 relative to port 1.  Each finite delta
    branch obeys the two-port power equation with the pairwise phase
    difference; an open branch carries zero power.  Port powers
    P1 = P12 + P13, P2 = -P12 + P23, P3 = -P13 - P23 sum to zero.
    """
    if len(network.delta) != 3:
        raise ValueError("tab_power_flows requires a three-port delta")
    v1, v2, v3 = voltages
    pairs = (
        (v1, v2, network.delta[0], phi2),          # 1 -> 2
        (v1, v3, network.delta[1], phi3),          # 1 -> 3
        (v2, v3, network.delta[2], phi3 - phi2),   # 2 -> 3
    )
    powers = []
    for va, vb, inductance, phase in pairs:
        if math.isinf(inductance):
            powers.append(0.0)
            continue
        link = LinkParams(V1=va, V2=vb, n=1.0, fs=fs, L=inductance,
                          phi=normalize_phase(phase))
        powers.append(power_transfer(link))
    return tuple(powers)


@dataclass(frozen=True)
class BalanceReport:
    balanced: bool
    spread: float
    tolerance: float


def check_balance(network: PortNetwork, tol: float = 0.1) -> BalanceReport:
    """Relative spread (max-min)/mean of the delta branches vs a tolerance."""
    delta = network.delta
    if not all(map(math.isfinite, delta)):
        return BalanceReport(balanced=False, spread=math.inf, tolerance=tol)
    mean = sum(delta) / len(delta)
    spread = (max(delta) - min(delta)) / mean if mean else 0.0
    return BalanceReport(balanced=spread <= tol, spread=spread, tolerance=tol)
