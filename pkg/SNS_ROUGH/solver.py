"""Split-step integration of the regularized stochastic Navier-Stokes equation and its energy diagnostics.

The state is split as v = z + u where z is the Ornstein-Uhlenbeck convolution driven by G_n(v) dw and u
solves the deterministic equation du/dt + nu A u = -B(v, v) + f.

"""

from bisect import bisect_right
from dataclasses import dataclass
from dataclasses import field as dataclass_field
from enum import Enum
import hashlib
import logging
import math
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import numpy as np
from pydantic import BaseModel
from pydantic import root_validator
from pydantic import validator
from scipy.integrate import cumulative_trapezoid

from SNS_ROUGH import config as settings
from SNS_ROUGH.exceptions import NumericalAbort
from SNS_ROUGH.exceptions import ValidationFailure
from SNS_ROUGH.noise import NoiseSpec
from SNS_ROUGH.noise import WienerPath
from SNS_ROUGH.noise import active_modes
from SNS_ROUGH.noise import apply_Gn
from SNS_ROUGH.noise import mode_field
from SNS_ROUGH.noise import mode_yosida
from SNS_ROUGH.noise import sample_wiener
from SNS_ROUGH.noise import sigma_values
from SNS_ROUGH.noise import synthesize
from SNS_ROUGH.ou import ou_weights
from SNS_ROUGH.spectral import SpectralField
from SNS_ROUGH.spectral import TorusGrid
from SNS_ROUGH.spectral import bilinear_B
from SNS_ROUGH.spectral import dealias
from SNS_ROUGH.spectral import gradient_norm
from SNS_ROUGH.spectral import grid_arrays
from SNS_ROUGH.spectral import hs_norm
from SNS_ROUGH.spectral import l2_pairing
from SNS_ROUGH.spectral import leray_project
from SNS_ROUGH.spectral import lp_quadrature
from SNS_ROUGH.spectral import random_field
from SNS_ROUGH.spectral import shear_mode


logger = logging.getLogger(__name__)


class ForcingKind(str, Enum):
    ZERO = "zero"
    FIELD = "field"
    SERIES = "series"


class ForcingSpec(BaseModel):
    """Deterministic forcing f(t) = amplitude(t) * e_m with e_m the unit cos mode of wavevector m.

    kind "field" keeps the amplitude constant, kind "series" holds amplitudes[i] on [times[i], times[i+1]).

    """

    kind: ForcingKind = ForcingKind.ZERO
    amplitude: float = 1.0
    mode: Optional[Tuple[int, ...]] = None
    times: Tuple[float, ...] = ()
    amplitudes: Tuple[float, ...] = ()

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def check_series(cls, values):
        if values["kind"] == ForcingKind.SERIES:
            times, amplitudes = values["times"], values["amplitudes"]
            if not times or len(times) != len(amplitudes):
                raise ValueError("a forcing series needs as many amplitudes as times")
            if times[0] != 0 or any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("forcing times must start at 0 and increase strictly")
        return values

    def amplitude_at(self, t: float) -> float:
        if self.kind == ForcingKind.ZERO:
            return 0.0
        if self.kind == ForcingKind.FIELD:
            return self.amplitude
        return self.amplitudes[bisect_right(self.times, t) - 1]

    def profile(self, grid: TorusGrid) -> Optional[SpectralField]:
        if self.kind == ForcingKind.ZERO:
            return None
        mode = self.mode if self.mode is not None else (1, 1) + (0,) * (grid.d - 2)
        if len(mode) != grid.d:
            raise ValidationFailure(f"forcing wavevector {mode} does not match dimension {grid.d}")
        return mode_field(grid, mode)


class InitialKind(str, Enum):
    ZERO = "zero"
    SHEAR = "shear"
    RANDOM = "random"
    FILE = "file"


class InitialSpec(BaseModel):
    """Source of the initial velocity v0."""

    kind: InitialKind = InitialKind.SHEAR
    amplitude: float = 1.0
    slope: float = -2.0
    seed: Optional[int] = None
    path: Optional[str] = None

    class Config:
        frozen = True

    @root_validator(skip_on_failure=True)
    def check_path(cls, values):
        if values["kind"] == InitialKind.FILE and not values.get("path"):
            raise ValueError("initial data of kind 'file' needs a path")
        return values


def build_initial(spec: InitialSpec, grid: TorusGrid, master_seed: int = 0) -> SpectralField:
    """Create the solenoidal, mean-free, dealiased initial field."""
    if spec.kind == InitialKind.ZERO:
        return SpectralField.zeros(grid)
    if spec.kind == InitialKind.SHEAR:
        return shear_mode(grid, spec.amplitude)
    if spec.kind == InitialKind.RANDOM:
        seed = master_seed if spec.seed is None else spec.seed
        return random_field(grid, np.random.default_rng(seed), slope=spec.slope) * spec.amplitude

    from SNS_ROUGH.storage import load_field

    field, _ = load_field(spec.path)
    if field.grid != grid:
        raise ValidationFailure(f"initial field in {spec.path} lives on {field.grid}, expected {grid}")
    return leray_project(dealias(field))


class SolverConfig(BaseModel):
    """Everything that determines one trajectory."""

    d: int = 2
    N: int = 64
    L: float = 2 * math.pi
    dealias_fraction: float = 2.0 / 3.0
    nu: float = 1.0
    T: float = 1.0
    dt: float = 2.0 ** -10
    n: Optional[int] = None
    noise: NoiseSpec = NoiseSpec()
    forcing: ForcingSpec = ForcingSpec()
    initial: InitialSpec = InitialSpec()
    seed: int = 0
    record_stride: int = settings.DEFAULT_RECORD_STRIDE
    gn_constant: Optional[float] = None

    class Config:
        frozen = True

    @validator("nu", "T", "dt")
    def check_positive(cls, value, field):
        if value <= 0:
            raise ValueError(f"{field.name} must be positive")
        return value

    @validator("n")
    def check_level(cls, n):
        if n is not None and n < 1:
            raise ValueError("Yosida level must be a positive integer")
        return n

    @validator("record_stride")
    def check_stride(cls, stride):
        if stride < 1:
            raise ValueError("record stride must be positive")
        return stride

    @root_validator(skip_on_failure=True)
    def check_consistency(cls, values):
        TorusGrid(d=values["d"], N=values["N"], L=values["L"], dealias_fraction=values["dealias_fraction"])
        if values["d"] == 3 and values["N"] > 64:
            raise ValueError("three-dimensional runs are limited to N <= 64")
        if values["dt"] > values["T"]:
            raise ValueError("time step exceeds the horizon")
        steps = values["T"] / values["dt"]
        if abs(steps - round(steps)) > 1e-9 * steps:
            raise ValueError("the horizon must be a whole number of time steps")
        noise = values["noise"]
        if noise.J is None and not noise.summable_in(values["d"]):
            raise ValueError(f"alpha + g must exceed d/2 = {values['d'] / 2} for the full basis")
        return values

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(d=self.d, N=self.N, L=self.L, dealias_fraction=self.dealias_fraction)

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def wiener_seed(self) -> int:
        return self.seed if self.noise.seed is None else self.noise.seed

    def with_level(self, n: Optional[int]) -> "SolverConfig":
        return self.copy(update={"n": n})


def phi1(x: np.ndarray) -> np.ndarray:
    """(e^x - 1) / x with the removable singularity phi1(0) = 1."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    nonzero = x != 0
    out[nonzero] = np.expm1(x[nonzero]) / x[nonzero]
    return out


def dissipation_quadrature(grid: TorusGrid, nu: float, dt: float) -> np.ndarray:
    """Weights w_k with integral_0^dt ||grad e^{-s nu A} u||^2 ds = sum_k w_k |u_k|^2."""
    k2 = grid_arrays(grid).k2
    weights = np.zeros_like(k2)
    positive = k2 > 0
    weights[positive] = -np.expm1(-2.0 * nu * k2[positive] * dt) / (2.0 * nu)
    return grid.volume * weights


def step_u(
        u: SpectralField,
        z: SpectralField,
        f_t: Optional[SpectralField],
        dt: float,
        nu: float,
        nonlinear: Optional[SpectralField] = None
) -> SpectralField:
    """One exponential-integrator step of du/dt + nu A u = -B(v, v) + f with v = u + z.

    Args:
        u: Current deterministic part
        z: Current stochastic convolution
        f_t: Forcing held over the step, or None
        dt: Time step
        nu: Viscosity
        nonlinear: B(u + z, u + z) when already known

    Returns:
        u at the next time

    """
    u.check_grid(z)
    if nonlinear is None:
        v = u + z
        nonlinear = bilinear_B(v, v)
    k2 = grid_arrays(u.grid).k2
    rhs = -nonlinear
    if f_t is not None:
        rhs = rhs + f_t
    coeffs = np.exp(-nu * dt * k2) * u.coeffs + dt * phi1(-nu * dt * k2) * rhs.coeffs
    return SpectralField.wrap(u.grid, coeffs, solenoidal=True)


def step_v_direct(
        spec: NoiseSpec,
        v: SpectralField,
        f_t: Optional[SpectralField],
        dW: np.ndarray,
        dt: float,
        nu: float,
        n: Optional[int] = None
) -> SpectralField:
    """One step of the unsplit scheme: exponential integrator on A, explicit B, Euler-Maruyama noise."""
    k2 = grid_arrays(v.grid).k2
    drift = -bilinear_B(v, v)
    if f_t is not None:
        drift = drift + f_t
    noise = apply_Gn(spec, n, v, dW)
    coeffs = np.exp(-nu * dt * k2) * v.coeffs + dt * phi1(-nu * dt * k2) * drift.coeffs + noise.coeffs
    return SpectralField.wrap(v.grid, coeffs, solenoidal=True)


DIAGNOSTIC_COLUMNS = (
    "t", "E_u", "D_u", "z_L4", "f_Hm1_sq", "B_vv_v", "B_vv_u", "f_u", "dissipation", "quadrature_bound"
)


class SplitStepper:
    """State machine advancing (z, u) one step at a time.

    Several steppers can be advanced in lockstep on one Wiener path; each keeps a running SHA-256 of the
    increments it consumed. With ou_only the deterministic part is frozen and only z evolves, which is
    exact for additive noise.

    """

    def __init__(self, config: SolverConfig, v0: SpectralField, ou_only: bool = False):
        """Prepare multipliers and the initial state.

        Args:
            config: Solver configuration
            v0: Initial velocity
            ou_only: Whether to skip the deterministic part

        """
        self.config = config
        self.grid = config.grid
        if v0.grid != self.grid:
            raise ValidationFailure(f"initial field lives on {v0.grid}, expected {self.grid}")

        self.ou_only = ou_only
        self.modes = active_modes(config.noise, self.grid)

        k2 = grid_arrays(self.grid).k2
        self.decay = np.exp(-config.nu * config.dt * k2)
        self.dissipation_weights = dissipation_quadrature(self.grid, config.nu, config.dt)
        # |e^{-nu A dt} gain - dt| and gain^2 bound the gap to the left-point rule for <f - B(v, v), u>
        gain = config.dt * phi1(-config.nu * config.dt * k2)
        self.lag_weights = 2.0 * self.grid.volume * np.abs(self.decay * gain - config.dt)
        self.gain_weights = self.grid.volume * gain ** 2
        self.noise_scale = mode_yosida(self.modes, config.n) * ou_weights(self.modes, config.nu, config.dt)
        self.forcing_profile = config.forcing.profile(self.grid)
        self.forcing_resolution = (
            hs_norm(self.forcing_profile, -1.0) ** 2 if self.forcing_profile is not None else 0.0
        )

        self.u = v0.copy()
        self.z = SpectralField.zeros(self.grid)
        self.step_index = 0
        self._nonlinear = None
        self._hasher = hashlib.sha256()

    @property
    def t(self) -> float:
        return self.step_index * self.config.dt

    @property
    def v(self) -> SpectralField:
        return self.u + self.z

    def forcing(self) -> Optional[SpectralField]:
        if self.forcing_profile is None:
            return None
        return self.forcing_profile * self.config.forcing.amplitude_at(self.t)

    def nonlinear_term(self) -> SpectralField:
        """B(v, v) at the current state (cached until the next step)."""
        if self._nonlinear is None:
            v = self.v
            self._nonlinear = bilinear_B(v, v)
        return self._nonlinear

    def observe(self, final: bool = False) -> Dict[str, float]:
        """Diagnostics of the current state.

        Args:
            final: Whether this is the last time (no dissipation over a following step)

        Returns:
            One row keyed by DIAGNOSTIC_COLUMNS

        """
        row = dict.fromkeys(DIAGNOSTIC_COLUMNS, 0.0)
        row["t"] = self.t
        row["z_L4"] = lp_quadrature(self.z.to_physical(), self.grid, 4)

        amplitude = self.config.forcing.amplitude_at(self.t) if self.forcing_profile is not None else 0.0
        row["f_Hm1_sq"] = amplitude ** 2 * self.forcing_resolution

        if self.ou_only:
            return row

        row["E_u"] = hs_norm(self.u) ** 2
        row["D_u"] = gradient_norm(self.u) ** 2
        nonlinear = self.nonlinear_term()
        row["B_vv_v"] = l2_pairing(nonlinear, self.v)
        row["B_vv_u"] = l2_pairing(nonlinear, self.u)
        forcing = self.forcing()
        if forcing is not None:
            row["f_u"] = l2_pairing(forcing, self.u)
        if not final:
            u_sq = np.sum(np.abs(self.u.coeffs) ** 2, axis=0)
            row["dissipation"] = float(np.sum(self.dissipation_weights * u_sq))
            rhs = -nonlinear if forcing is None else forcing - nonlinear
            r_abs = np.sqrt(np.sum(np.abs(rhs.coeffs) ** 2, axis=0))
            row["quadrature_bound"] = float(
                np.sum(self.lag_weights * np.sqrt(u_sq) * r_abs + self.gain_weights * r_abs ** 2)
            )
        return row

    def advance(self, dW: np.ndarray):
        """Consume one row of Brownian increments and move to the next time.

        Raises:
            NumericalAbort: if the new state is not finite or overflows

        """
        dW = np.asarray(dW, dtype=float)
        if dW.shape != (self.modes.count,):
            raise ValidationFailure(f"increment slice has length {dW.size}, expected {self.modes.count}")
        self._hasher.update(np.ascontiguousarray(dW, dtype="<f8").tobytes())

        v = self.v
        sigma = sigma_values(self.config.noise, v, self.modes)

        if not self.ou_only:
            self.u = step_u(
                self.u, self.z, self.forcing(), self.config.dt, self.config.nu, nonlinear=self.nonlinear_term()
            )

        noise = synthesize(self.grid, self.modes, sigma * self.noise_scale * dW)
        self.z = SpectralField.wrap(self.grid, self.decay * self.z.coeffs + noise.coeffs, True)

        self.step_index += 1
        self._nonlinear = None
        self._check_state()

    def _check_state(self):
        for name, state in (("u_H", self.u), ("z_H", self.z)):
            value = hs_norm(state) if state.is_finite() else math.nan
            if not math.isfinite(value) or value > settings.OVERFLOW_THRESHOLD:
                raise NumericalAbort(self.step_index, name, value)

    def consumed_digest(self) -> str:
        return self._hasher.hexdigest()


@dataclass(eq=False)
class TrajectorySample:
    """Recorded fields (every record_stride steps) and per-step diagnostics of one run."""

    config: SolverConfig
    times: np.ndarray
    v: List[SpectralField]
    z: List[SpectralField]
    u: List[SpectralField]
    wiener: Optional[WienerPath]
    diagnostics: Dict[str, np.ndarray] = dataclass_field(default_factory=dict)
    digest: str = ""

    @property
    def complete(self) -> bool:
        return len(self.diagnostics.get("t", ())) == self.config.steps + 1


def _assemble(config, times, v, z, u, wiener, rows, digest) -> TrajectorySample:
    diagnostics = {name: np.asarray([row[name] for row in rows]) for name in DIAGNOSTIC_COLUMNS}
    return TrajectorySample(
        config=config, times=np.asarray(times), v=v, z=z, u=u, wiener=wiener, diagnostics=diagnostics, digest=digest
    )


def default_wiener(config: SolverConfig, seed: Optional[int] = None) -> WienerPath:
    modes = active_modes(config.noise, config.grid)
    seed = config.wiener_seed if seed is None else seed
    return sample_wiener(config.noise, config.dt, config.steps, seed=seed, modes=modes.count)


def _check_wiener(config: SolverConfig, wiener: WienerPath):
    modes = active_modes(config.noise, config.grid)
    if wiener.modes != modes.count or wiener.steps < config.steps or not math.isclose(wiener.dt, config.dt):
        raise ValidationFailure(
            f"Wiener path ({wiener.steps} steps of {wiener.dt}, {wiener.modes} modes) does not fit the configuration"
        )


def simulate(
        config: SolverConfig,
        wiener: Optional[WienerPath] = None,
        v0: Optional[SpectralField] = None,
        ou_only: bool = False
) -> TrajectorySample:
    """Integrate the split scheme over [0, T].

    Args:
        config: Solver configuration
        wiener: Driving path; drawn from the configured seed when omitted
        v0: Initial field; built from config.initial when omitted
        ou_only: Whether to evolve z only

    Returns:
        Trajectory sample

    Raises:
        NumericalAbort: carrying the partial trajectory as its partial attribute

    """
    wiener = wiener if wiener is not None else default_wiener(config)
    _check_wiener(config, wiener)
    v0 = v0 if v0 is not None else build_initial(config.initial, config.grid, config.seed)

    stepper = SplitStepper(config, v0, ou_only=ou_only)
    times, v, z, u = [0.0], [stepper.v], [stepper.z], [stepper.u]
    rows = []

    logger.debug("simulating %d steps at N=%d, n=%s", config.steps, config.N, config.n)
    try:
        for step in range(config.steps):
            rows.append(stepper.observe())
            stepper.advance(wiener.increments[step])
            if stepper.step_index % config.record_stride == 0:
                times.append(stepper.t)
                v.append(stepper.v)
                z.append(stepper.z)
                u.append(stepper.u)
        rows.append(stepper.observe(final=True))
    except NumericalAbort as abort:
        logger.warning("run aborted: %s", abort)
        abort.partial = _assemble(config, times, v, z, u, wiener, rows, stepper.consumed_digest())
        raise

    return _assemble(config, times, v, z, u, wiener, rows, stepper.consumed_digest())


def simulate_direct(
        config: SolverConfig, wiener: Optional[WienerPath] = None, v0: Optional[SpectralField] = None
) -> Tuple[np.ndarray, List[SpectralField]]:
    """Integrate the unsplit scheme, recording v every record_stride steps."""
    wiener = wiener if wiener is not None else default_wiener(config)
    _check_wiener(config, wiener)
    v = v0 if v0 is not None else build_initial(config.initial, config.grid, config.seed)
    forcing = config.forcing.profile(config.grid)

    times, states = [0.0], [v]
    for step in range(config.steps):
        t = step * config.dt
        f_t = forcing * config.forcing.amplitude_at(t) if forcing is not None else None
        v = step_v_direct(config.noise, v, f_t, wiener.increments[step], config.dt, config.nu, config.n)
        if not v.is_finite():
            raise NumericalAbort(step + 1, "v_H", math.nan)
        if (step + 1) % config.record_stride == 0:
            times.append((step + 1) * config.dt)
            states.append(v)

    return np.asarray(times), states


def splitting_error(
        config: SolverConfig, wiener: Optional[WienerPath] = None, v0: Optional[SpectralField] = None
) -> float:
    """||v_split - v_direct||_{L^2(0, T; H)} for the two schemes driven by one Wiener path."""
    wiener = wiener if wiener is not None else default_wiener(config)
    _check_wiener(config, wiener)
    v0 = v0 if v0 is not None else build_initial(config.initial, config.grid, config.seed)
    forcing = config.forcing.profile(config.grid)

    stepper = SplitStepper(config, v0)
    direct = v0.copy()
    squared = 0.0
    for step in range(config.steps):
        t = step * config.dt
        f_t = forcing * config.forcing.amplitude_at(t) if forcing is not None else None
        dW = wiener.increments[step]
        direct = step_v_direct(config.noise, direct, f_t, dW, config.dt, config.nu, config.n)
        stepper.advance(dW)
        squared += config.dt * hs_norm(stepper.v - direct) ** 2

    return math.sqrt(squared)


def gronwall_constant(d: int, nu: float, gn_constant: float) -> float:
    """Constant C of the differential energy inequality.

    Young's inequality with exponents p = 8 / (4 + d), q = 8 / (4 - d) and epsilon = nu / 4 turns the
    trilinear bound into K ||u||^2 ||z||_{L^4}^q with K = (epsilon p)^{-q/p} C_GN^q / q; the remaining
    terms carry 1 / nu.

    """
    p = 8.0 / (4 + d)
    q = 8.0 / (4 - d)
    epsilon = nu / 4.0
    young = (epsilon * p) ** (-q / p) / q * gn_constant ** q
    return max(young, 1.0 / nu)


@dataclass(eq=False)
class EnergyReport:
    """Energy chain of one trajectory: phi, psi, the Gronwall majorant and the dissipation check."""

    t: np.ndarray
    E_u: np.ndarray
    D_u: np.ndarray
    z_L4: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    gronwall_majorant: np.ndarray
    dissipation_integral: np.ndarray
    dissipation_bound: np.ndarray
    energy_residual: np.ndarray
    quadrature_bound: np.ndarray
    C: float
    nu: float

    COLUMNS = ("t", "E_u", "D_u", "z_L4", "phi", "psi", "gronwall_majorant")

    @property
    def majorant_holds(self) -> bool:
        return bool(np.all(self.E_u <= self.gronwall_majorant * (1 + 1e-12)))

    @property
    def dissipation_holds(self) -> bool:
        return bool(np.all(0.5 * self.nu * self.dissipation_integral <= self.dissipation_bound * (1 + 1e-12)))

    @property
    def residual_holds(self) -> bool:
        """Each step's balance residual is within the quadrature error bound up to rounding."""
        slack = settings.ENERGY_RESIDUAL_TOLERANCE * (np.max(self.E_u) + self.quadrature_bound)
        return bool(np.all(np.abs(self.energy_residual) <= self.quadrature_bound + slack))

    @property
    def sup_energy(self) -> float:
        return float(np.max(self.E_u))

    def rows(self) -> List[Dict[str, float]]:
        return [
            {column: float(getattr(self, column)[i]) for column in self.COLUMNS}
            for i in range(len(self.t))
        ]


def energy_report(traj: TrajectorySample, gn_constant: Optional[float] = None) -> EnergyReport:
    """Evaluate the energy inequality chain on recorded diagnostics.

    Args:
        traj: Complete trajectory
        gn_constant: Calibrated Gagliardo-Nirenberg constant (defaults to the one in the configuration)

    Returns:
        Energy report

    """
    config = traj.config
    gn_constant = gn_constant if gn_constant is not None else config.gn_constant
    if gn_constant is None:
        raise ValidationFailure("a calibrated Gagliardo-Nirenberg constant is required for the energy report")
    if not traj.complete:
        raise ValidationFailure("energy report needs a complete trajectory")

    diagnostics = traj.diagnostics
    t = diagnostics["t"]
    E_u = diagnostics["E_u"]
    z_L4 = diagnostics["z_L4"]
    C = gronwall_constant(config.d, config.nu, gn_constant)

    phi = 0.5 * config.nu + 2.0 * C * z_L4 ** (8.0 / (4 - config.d))
    psi = 2.0 * C * z_L4 ** 4 + 2.0 * C * diagnostics["f_Hm1_sq"]

    Phi = cumulative_trapezoid(phi, t, initial=0.0)
    Psi = cumulative_trapezoid(psi, t, initial=0.0)
    majorant = np.exp(Phi) * (E_u[0] + Psi)

    dissipation_integral = np.concatenate([[0.0], np.cumsum(diagnostics["dissipation"][:-1])])
    dissipation_bound = E_u[0] + cumulative_trapezoid(phi * E_u + psi, t, initial=0.0)

    # discrete residual of d/dt ||u||^2 + 2 nu ||grad u||^2 = 2 (<f, u> - <B(v, v), u>)
    source = 2.0 * config.dt * (diagnostics["f_u"] - diagnostics["B_vv_u"])
    energy_residual = np.diff(E_u) + 2.0 * config.nu * diagnostics["dissipation"][:-1] - source[:-1]

    return EnergyReport(
        t=t,
        E_u=E_u,
        D_u=diagnostics["D_u"],
        z_L4=z_L4,
        phi=phi,
        psi=psi,
        gronwall_majorant=majorant,
        dissipation_integral=dissipation_integral,
        dissipation_bound=dissipation_bound,
        energy_residual=energy_residual,
        quadrature_bound=diagnostics["quadrature_bound"][:-1],
        C=C,
        nu=config.nu
    )


def psi_weight(v1: SpectralField, v2: SpectralField, L_g: float, C_bar: float, g: float) -> float:
    """Uniqueness weight 1 + L_g^2 + 2 C_bar (||v1||^q + ||v2||^q) in H^{(1-g)/2}, q = 4 / (1 - g)."""
    if not 0 < g < 1:
        raise ValidationFailure(f"roughness g must lie in (0, 1), got {g}")
    s = (1.0 - g) / 2.0
    q = 4.0 / (1.0 - g)
    return 1.0 + L_g ** 2 + 2.0 * C_bar * (hs_norm(v1, s) ** q + hs_norm(v2, s) ** q)
