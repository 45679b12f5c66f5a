"""Far-field geometric channel for a fluid-antenna ISAC link.

Positions are 2-D coordinates in meters. Angles are (elevation, azimuth) pairs
in [0, pi]. Response matrices are laid out paths x antennas, and the BS->UT
channel is a length-N complex row vector ``f = conj(f_rx(q)) @ Sigma @ E(p)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError, NumericalPSDError

# relative slack on the pairwise-spacing test so that exact lambda/2 grids pass
SPACING_RTOL = 1e-12
IMAG_RTOL = 1e-9


@dataclass(frozen=True)
class Region:
    half_width: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.half_width > 0:
            raise ConfigurationError(f"region half_width must be positive, got {self.half_width}")

    @property
    def lower(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + self.half_width

    def contains(self, position) -> bool:
        p = np.asarray(position, dtype=float)
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))

    def clip(self, positions) -> np.ndarray:
        return np.clip(np.asarray(positions, dtype=float), self.lower, self.upper)


@dataclass
class AntennaLayout:
    bs_positions: np.ndarray  # (N, 2)
    ut_position: np.ndarray  # (2,)

    def __post_init__(self):
        self.bs_positions = np.ascontiguousarray(self.bs_positions, dtype=np.float64).reshape(-1, 2)
        self.ut_position = np.ascontiguousarray(self.ut_position, dtype=np.float64).reshape(2)

    @property
    def num_antennas(self) -> int:
        return self.bs_positions.shape[0]

    def copy(self) -> "AntennaLayout":
        return AntennaLayout(self.bs_positions.copy(), self.ut_position.copy())

    def as_vector(self) -> np.ndarray:
        """(x1, y1, ..., xN, yN, x_r, y_r)"""
        return np.concatenate([self.bs_positions.ravel(), self.ut_position])

    @classmethod
    def from_vector(cls, vec) -> "AntennaLayout":
        vec = np.asarray(vec, dtype=float)
        return cls(vec[:-2].reshape(-1, 2), vec[-2:])


@dataclass(frozen=True)
class PathAngles:
    elevation: np.ndarray
    azimuth: np.ndarray

    def __post_init__(self):
        el = np.ascontiguousarray(self.elevation, dtype=np.float64).ravel()
        az = np.ascontiguousarray(self.azimuth, dtype=np.float64).ravel()
        if el.shape != az.shape:
            raise ConfigurationError("elevation and azimuth lists differ in length")
        if np.any(el < 0) or np.any(el > np.pi) or np.any(az < 0) or np.any(az > np.pi):
            raise ConfigurationError("path angles must lie in [0, pi]")
        object.__setattr__(self, "elevation", el)
        object.__setattr__(self, "azimuth", az)

    def __len__(self) -> int:
        return self.elevation.shape[0]


@dataclass(frozen=True)
class Scenario:
    tx_angles: PathAngles
    rx_angles: PathAngles
    target_angles: tuple[PathAngles, ...]
    sigma_matrix: np.ndarray  # (I, D)
    wavelength: float
    noise_power: float
    p_max: float
    gamma: float
    d_s: float
    region_bs: Region
    region_ut: Region

    def __post_init__(self):
        sigma = np.ascontiguousarray(self.sigma_matrix, dtype=np.complex128)
        object.__setattr__(self, "sigma_matrix", sigma)
        object.__setattr__(self, "target_angles", tuple(self.target_angles))
        for name in ("wavelength", "noise_power", "p_max", "d_s"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"{name} must be positive")
        if self.gamma < 0:
            raise ConfigurationError("gamma must be nonnegative")
        if sigma.shape != (len(self.rx_angles), len(self.tx_angles)):
            raise ConfigurationError(
                f"sigma_matrix is {sigma.shape}, expected (I, D) = "
                f"({len(self.rx_angles)}, {len(self.tx_angles)})")

    @property
    def num_targets(self) -> int:
        return len(self.target_angles)

    @property
    def action_bound(self) -> float:
        # region side A = 2 * half_width; per-step bound A/4
        return self.region_bs.half_width / 2.0

    def replace(self, **changes) -> "Scenario":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class ScenarioConfig:
    num_tx_paths: int = 3
    num_rx_paths: int = 3
    num_targets: int = 2
    target_paths: int = 3
    rician_tau: float = 1.0
    wavelength: float = 1.0
    noise_power: float = 0.01
    p_max: float = 1.0
    gamma: float = 2.4
    d_s: float | None = None  # default wavelength / 2
    region_size: float | None = None  # side A, default 4 * wavelength
    ut_region_size: float | None = None  # default: same as region_size
    diagonal_sigma: bool = True
    extra: dict = field(default_factory=dict)


def propagation_delta(position, elevation: float, azimuth: float) -> float:
    x, y = position
    return x * np.sin(elevation) * np.cos(azimuth) + y * np.cos(elevation)


def _positions(positions) -> np.ndarray:
    p = np.ascontiguousarray(positions, dtype=np.float64)
    if p.ndim == 1:
        p = p.reshape(1, 2)
    if p.shape[0] == 0:
        raise ConfigurationError("need at least one position")
    return p


def response_vector(position, angles: PathAngles, wavelength: float) -> np.ndarray:
    return response_matrix(np.reshape(position, (1, 2)), angles, wavelength)[:, 0]


def response_matrix(positions, angles: PathAngles, wavelength: float) -> np.ndarray:
    """Columns are per-antenna response vectors; shape (paths, antennas)."""
    return kernels.response_matrix(_positions(positions), angles.elevation, angles.azimuth,
                                   float(wavelength))


def rx_response(ut_position, scenario: Scenario) -> np.ndarray:
    return response_vector(ut_position, scenario.rx_angles, scenario.wavelength)


def channel_vector(layout: AntennaLayout, scenario: Scenario) -> np.ndarray:
    sigma = scenario.sigma_matrix
    if sigma.shape != (len(scenario.rx_angles), len(scenario.tx_angles)):
        raise ConfigurationError("sigma_matrix does not match (I, D)")
    return kernels.channel_row(
        layout.bs_positions, layout.ut_position,
        scenario.tx_angles.elevation, scenario.tx_angles.azimuth,
        scenario.rx_angles.elevation, scenario.rx_angles.azimuth,
        sigma, float(scenario.wavelength))


def target_matrices(layout: AntennaLayout, scenario: Scenario) -> list[np.ndarray]:
    """One (P_k, N) response matrix per sensing target, all at the BS positions."""
    return [response_matrix(layout.bs_positions, ang, scenario.wavelength)
            for ang in scenario.target_angles]


def _as_matrix(covariance) -> np.ndarray:
    U = getattr(covariance, "matrix", covariance)
    return np.ascontiguousarray(U, dtype=np.complex128)


def snr_term(channel, covariance) -> float:
    """f U f^H, real and clamped at zero."""
    f = np.ascontiguousarray(channel, dtype=np.complex128).ravel()
    U = _as_matrix(covariance)
    if U.shape != (f.shape[0], f.shape[0]):
        raise ConfigurationError(f"channel length {f.shape[0]} incompatible with covariance {U.shape}")
    q = kernels.quad_form(f, U)
    # roundoff floor for forms that cancel to ~0
    floor = 1e-13 * float(np.vdot(f, f).real) * float(np.abs(U).max(initial=0.0))
    if abs(q.imag) > IMAG_RTOL * abs(q) + floor:
        raise NumericalPSDError(f"quadratic form has imaginary part {q.imag:.3e}")
    # (U + U^H)/2 contributes exactly Re(f U f^H)
    val = q.real
    if val < 0:
        if val < -(1e-9 * abs(q) + floor):
            raise NumericalPSDError(f"negative quadratic form {val:.3e}")
        val = 0.0
    return val


def communication_rate(channel, covariance, noise_power: float) -> float:
    """log2(1 + f U f^H / noise_power) in bits/s/Hz."""
    if not noise_power > 0:
        raise ConfigurationError("noise_power must be positive")
    return float(np.log2(1.0 + snr_term(channel, covariance) / noise_power))


def sensing_gain(target_matrix, covariance) -> float:
    """Tr(E U E^H), clamped at zero."""
    E = np.ascontiguousarray(target_matrix, dtype=np.complex128)
    U = _as_matrix(covariance)
    if E.ndim != 2 or U.shape != (E.shape[1], E.shape[1]):
        raise ConfigurationError(f"target matrix {E.shape} incompatible with covariance {U.shape}")
    val = kernels.trace_sandwich(E, U).real
    if val < 0:
        if val < -1e-9 * max(1.0, float(np.abs(U).max())):
            raise NumericalPSDError(f"negative sensing gain {val:.3e}")
        val = 0.0
    return float(val)


def min_distance_ok(layout: AntennaLayout, d_s: float) -> bool:
    return bool(kernels.min_pairwise_distance(layout.bs_positions) >= d_s * (1.0 - SPACING_RTOL))


def layout_valid(layout: AntennaLayout, scenario: Scenario) -> bool:
    """Constraints on positions: both regions and BS spacing."""
    return (all(scenario.region_bs.contains(p) for p in layout.bs_positions)
            and scenario.region_ut.contains(layout.ut_position)
            and min_distance_ok(layout, scenario.d_s))


def _complex_normal(rng: np.random.Generator, variance, size=None):
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def sigma_variances(num_paths: int, rician_tau: float) -> np.ndarray:
    """Diagonal path-power profile: LoS share tau/(tau+1), NLoS split evenly."""
    if num_paths < 2:
        raise ConfigurationError("Rician split needs at least two paths (divides by D - 1)")
    if not rician_tau > 0:
        raise ConfigurationError("rician_tau must be positive")
    var = np.full(num_paths, 1.0 / ((rician_tau + 1.0) * (num_paths - 1)))
    var[0] = rician_tau / (rician_tau + 1.0)
    return var


def _uniform_angles(rng: np.random.Generator, n: int) -> PathAngles:
    el = rng.uniform(0.0, np.pi, n)
    az = rng.uniform(0.0, np.pi, n)
    return PathAngles(el, az)


def scenario_sample(rng: np.random.Generator, config: ScenarioConfig) -> Scenario:
    """Draw one problem instance.

    Draw order is tx angles, rx angles, Sigma, then targets one at a time, so a
    scenario with K targets shares its first K-1 targets (and everything else)
    with the K-1 scenario drawn from the same seed.
    """
    D, I, K = config.num_tx_paths, config.num_rx_paths, config.num_targets
    if K < 0:
        raise ConfigurationError("num_targets must be >= 0")
    if config.diagonal_sigma and D != I:
        raise ConfigurationError(f"diagonal Sigma requires D == I (got D={D}, I={I})")
    var = sigma_variances(D, config.rician_tau)
    tx = _uniform_angles(rng, D)
    rx = _uniform_angles(rng, I)
    if config.diagonal_sigma:
        sigma = np.diag(_complex_normal(rng, var))
    else:
        sigma = _complex_normal(rng, np.broadcast_to(var, (I, D)), (I, D))
    targets = tuple(_uniform_angles(rng, config.target_paths) for _ in range(K))
    lam = config.wavelength
    side = config.region_size if config.region_size is not None else 4.0 * lam
    ut_side = config.ut_region_size if config.ut_region_size is not None else side
    return Scenario(
        tx_angles=tx, rx_angles=rx, target_angles=targets, sigma_matrix=sigma,
        wavelength=lam, noise_power=config.noise_power, p_max=config.p_max,
        gamma=config.gamma, d_s=config.d_s if config.d_s is not None else lam / 2.0,
        region_bs=Region(side / 2.0), region_ut=Region(ut_side / 2.0))
