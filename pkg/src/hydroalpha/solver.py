"""
Time integration of the Galerkin system

    d_t u~_k = -lambda_k u~_k + <J_n R(J_n u^n), e~_k>_{L^2_z}

per horizontal wavenumber, co-integrated with the analytic-band ODE
theta' = ||d_z^2 u_phi||_{B^{1/2}}.

The stiff diagonal part is advanced by Crank-Nicolson, the nonlinear part by
Adams-Bashforth 2.  The first step uses a half-step bootstrap: an explicit
predictor to t + dt/2 supplies a midpoint evaluation of R.

The Galerkin system alone does not conserve int u dz exactly, because the
basis profiles have nonzero means.  Each step therefore adds a z-constant
pressure correction c(x) chosen so that the vertical mean of every
wavenumber is carried over unchanged.  A z-constant forcing does no work on
fields with zero vertical mean, so the energy law is untouched.  Disabling
the nonlinear term also disables this correction, leaving the bare linear
decay u~_k ~ exp(-lambda_k t).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import AnalyticBandExhausted, ParameterError, PreconditionError
from .field import Field, Grid, d_z, z_integral
from .littlewood_paley import (
    AnalyticWeightParams,
    DyadicProfile,
    analytic_weight,
    besov_norm,
    build_profile,
)
from .model import ModelParams, jn_cutoff, rhs_R
from .zbasis import ZBasis, analyze, project_Pn

__all__ = [
    "RUNNING",
    "COMPLETED",
    "TSTAR_REACHED",
    "DIVERGED",
    "SolverState",
    "Trajectory",
    "choose_lambda",
    "init_state",
    "step",
    "run",
    "linear_rates_oracle",
]

RUNNING = "running"
COMPLETED = "completed"
TSTAR_REACHED = "tstar_reached"
DIVERGED = "diverged"

COMPATIBILITY_TOL = 1e-8


@dataclass
class SolverState:
    """Galerkin amplitudes u~_k(k_x), theta and the multistep history.

    ``amplitudes`` has shape (Nx, n) in FFT order along axis 0.
    ``history`` holds the projected nonlinear term, theta' and the step size
    of the previous step, or None before the first step.
    """

    t: float
    amplitudes: np.ndarray
    theta: float
    params: ModelParams
    lam: float
    basis: ZBasis
    grid: Grid
    profile: DyadicProfile
    n_cut: int
    history: tuple[np.ndarray, float, float] | None = None
    status: str = RUNNING
    steps: int = 0
    dissipated: float = 0.0
    disable_nonlinear: bool = False
    forcing: Callable[[float], Field] | None = dc_field(default=None, repr=False)
    theta_rate: float = 0.0
    tstar: float | None = None
    message: str = ""

    @property
    def a_over_lambda(self) -> float:
        return self.params.a / self.lam

    def field(self) -> Field:
        return Field(self.grid, self.amplitudes @ self.basis.e_tilde)

    def energy(self) -> float:
        """||u||^2 + a1^2 ||u_z||^2, which is Lx sum |u~|^2 in this basis."""
        return self.grid.Lx * float(np.sum(np.abs(self.amplitudes) ** 2))

    def dissipation(self) -> float:
        """||u_z||^2 + a1^2 ||u_zz||^2 = Lx sum lambda_k |u~_k|^2."""
        return self.grid.Lx * float(np.sum(self.basis.lambdas * np.abs(self.amplitudes) ** 2))

    def copy(self) -> "SolverState":
        new = copy.copy(self)
        new.amplitudes = self.amplitudes.copy()
        return new


@dataclass
class Trajectory:
    """Snapshots (t, u, theta) on the configured stride."""

    times: list = dc_field(default_factory=list)
    fields: list = dc_field(default_factory=list)
    thetas: list = dc_field(default_factory=list)
    amplitudes: list = dc_field(default_factory=list)

    def append(self, state: SolverState) -> None:
        self.times.append(state.t)
        self.fields.append(state.field())
        self.thetas.append(state.theta)
        self.amplitudes.append(state.amplitudes.copy())

    def pairs(self) -> list:
        return list(zip(self.times, self.fields))

    def __len__(self) -> int:
        return len(self.times)


def _weighted_besov(u: Field, a: float, s: float, profile: DyadicProfile) -> float:
    w = analytic_weight(u, AnalyticWeightParams(a=a, lam=1.0, theta=0.0))
    return besov_norm(w, s, profile).value + besov_norm(d_z(w, 1), s, profile).value


def choose_lambda(u0: Field, params: ModelParams, profile: DyadicProfile | None = None) -> float:
    """lambda = C3^2 (1 + C3 (||e^{a|D|} u0||_{B^{3/2}} + ||e^{a|D|} d_z u0||_{B^{3/2}}))."""
    if profile is None:
        profile = build_profile(u0.grid)
    C3 = params.C3
    return C3**2 * (1.0 + C3 * _weighted_besov(u0, params.a, 1.5, profile))


def linear_rates_oracle(basis: ZBasis, n: int | None = None) -> np.ndarray:
    """Decay rates lambda_1..lambda_n of the linear part."""
    n = basis.n if n is None else n
    if n < 1 or n > basis.n:
        raise ParameterError(f"n must lie in 1..{basis.n}, got {n}")
    return np.array(basis.lambdas[:n], dtype=float)


def init_state(
    grid: Grid,
    basis: ZBasis,
    params: ModelParams,
    u0: Field,
    *,
    enforce_compatibility: bool = True,
    disable_nonlinear: bool = False,
    forcing: Callable[[float], Field] | None = None,
    t0: float = 0.0,
) -> SolverState:
    """Amplitudes of P_n J_n u0 and theta = 0.

    With ``enforce_compatibility`` the data must satisfy |int u0 dz| <= 1e-8,
    and the O(projection error) mean left by P_n J_n is removed along the
    direction of the basis means.  Turning it off admits offset data for
    negative controls.

    Raises
    ------
    PreconditionError
        If the compatibility condition int u0 dz = 0 is violated.
    """
    if not grid.same_as(u0.grid) or basis.grid is not grid and not basis.grid.same_as(grid):
        raise ParameterError("u0, basis and grid must share one grid")
    if basis.n != params.n_modes:
        raise ParameterError(f"basis has {basis.n} modes, params ask for {params.n_modes}")
    if not u0.is_real(1e-10):
        raise ParameterError("initial data must be a real field")
    mean = np.abs(z_integral(u0)).max()
    if enforce_compatibility and mean > COMPATIBILITY_TOL:
        raise PreconditionError(
            f"compatibility condition int_0^1 u0 dz = 0 violated: max |mean| = {mean:.3e}"
        )
    n_cut = params.cutoff(grid.Nx)
    profile = build_profile(grid)
    un = jn_cutoff(u0, n_cut)
    amps = analyze(project_Pn(un.coeffs, basis), basis)
    if enforce_compatibility:
        m = basis.means
        amps = amps - np.outer(amps @ m, m) / (m @ m)
    lam = params.lam if params.lam is not None else choose_lambda(u0, params, profile)
    return SolverState(
        t=float(t0),
        amplitudes=np.ascontiguousarray(amps, dtype=complex),
        theta=0.0,
        params=params,
        lam=float(lam),
        basis=basis,
        grid=grid,
        profile=profile,
        n_cut=n_cut,
        disable_nonlinear=disable_nonlinear,
        forcing=forcing,
    )


def _nonlinear(state: SolverState, amps: np.ndarray, t: float) -> np.ndarray:
    """<J_n R(J_n u) + forcing, e~_k>_{L^2_z} per wavenumber, shape (Nx, n)."""
    g = state.grid
    u = Field(g, amps @ state.basis.e_tilde)
    forcing = state.forcing(t) if state.forcing is not None else None
    if state.disable_nonlinear:
        if forcing is None:
            return np.zeros_like(amps)
        r = forcing
    else:
        r = rhs_R(u, state.params, forcing)
    r = jn_cutoff(r, state.n_cut)
    return (r.coeffs * g.z_weights) @ state.basis.e_tilde.T


def nonlinear_work(state: SolverState):
    """Work functional (u, t) -> Lx Re sum conj(u~) <J_n R(u) + f, e~_k>.

    This is the Galerkin image of <R(u) + f, u>; it vanishes for the exact
    equations without forcing and is spectrally small on the grid.
    """

    def work(u: Field, t: float) -> float:
        amps = analyze(u.coeffs, state.basis)
        N = _nonlinear(state, amps, t)
        return state.grid.Lx * float(np.real(np.sum(np.conj(amps) * N)))

    return work


def _theta_rate(state: SolverState, amps: np.ndarray, theta: float) -> float:
    """||d_z^2 u_phi||_{B^{1/2}} with u_phi weighted at band a - lambda*theta."""
    u = Field(state.grid, amps @ state.basis.e_tilde)
    w = AnalyticWeightParams(a=state.params.a, lam=state.lam, theta=theta)
    uphi = analytic_weight(u, w)
    return besov_norm(d_z(uphi, 2), 0.5, state.profile).value


def _cn_step(state: SolverState, amps: np.ndarray, N: np.ndarray, dt: float) -> np.ndarray:
    """Crank-Nicolson on -lambda with explicit N and the mean-preserving correction.

    The correction belongs to the pressure, which is part of R, so it is
    skipped when the nonlinear term is disabled.
    """
    lam = state.basis.lambdas
    m = state.basis.means
    A_inv = 1.0 / (1.0 + 0.5 * dt * lam)
    star = A_inv * ((1.0 - 0.5 * dt * lam) * amps + dt * N)
    if state.disable_nonlinear:
        return star
    target = amps @ m
    mu = (star @ m - target) / np.sum(m * A_inv * m)
    return star - np.outer(mu, A_inv * m)


def step(state: SolverState, dt: float) -> SolverState:
    """Advance one step of size dt; returns a new state.

    Non-finite amplitudes give status ``diverged`` with the last good
    amplitudes kept.  theta >= a/lambda gives ``tstar_reached``.
    """
    if state.status != RUNNING:
        raise ParameterError(f"cannot step a state with status {state.status!r}")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    new = state.copy()
    a_lam = state.a_over_lambda
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            N0 = _nonlinear(state, state.amplitudes, state.t)
            rate0 = _theta_rate(state, state.amplitudes, state.theta)
            if state.history is None:
                half = _cn_step(state, state.amplitudes, N0, 0.5 * dt)
                theta_half = state.theta + 0.5 * dt * rate0
                N_eff = _nonlinear(state, half, state.t + 0.5 * dt)
                rate_eff = (
                    _theta_rate(state, half, theta_half) if theta_half < a_lam else rate0
                )
            else:
                # variable-step AB2; r = 1 gives the usual 3/2, -1/2 weights
                N_prev, rate_prev, dt_prev = state.history
                r = dt / dt_prev
                N_eff = (1.0 + 0.5 * r) * N0 - 0.5 * r * N_prev
                rate_eff = (1.0 + 0.5 * r) * rate0 - 0.5 * r * rate_prev
            amps = _cn_step(state, state.amplitudes, N_eff, dt)
    except AnalyticBandExhausted as exc:
        new.status = TSTAR_REACHED
        new.tstar = state.t
        new.message = str(exc)
        return new
    if not (np.all(np.isfinite(amps)) and np.isfinite(rate0) and np.isfinite(rate_eff)):
        new.status = DIVERGED
        new.message = f"non-finite values at t = {state.t:.6g}"
        return new
    mid = 0.5 * (state.amplitudes + amps)
    new.dissipated = state.dissipated + 2.0 * dt * state.grid.Lx * float(
        np.sum(state.basis.lambdas * np.abs(mid) ** 2)
    )
    new.amplitudes = amps
    new.theta = state.theta + dt * max(rate_eff, 0.0)
    new.theta_rate = rate0
    new.history = (N0, rate0, dt)
    new.t = state.t + dt
    new.steps = state.steps + 1
    if new.theta >= a_lam:
        new.status = TSTAR_REACHED
        new.tstar = new.t
        new.message = f"theta reached a/lambda = {a_lam:.6g} at t = {new.t:.6g}"
    return new


def run(
    state: SolverState,
    T_final: float,
    dt: float,
    observers: Sequence[Callable[[SolverState], None]] = (),
    *,
    observer_stride: int = 1,
    snapshot_stride: int = 1,
) -> tuple[Trajectory, SolverState]:
    """Step until t >= T_final or the status leaves ``running``.

    Observers see the initial state and every ``observer_stride``-th state,
    plus the final one; the trajectory stores snapshots likewise on
    ``snapshot_stride``.  The step count is fixed up front as
    ceil(T_final/dt) (to rounding) so runs are reproducible.
    """
    if observer_stride < 1 or snapshot_stride < 1:
        raise ParameterError("strides must be >= 1")
    if T_final < 0:
        raise ParameterError(f"T_final must be non-negative, got {T_final}")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    traj = Trajectory()
    traj.append(state)
    for obs in observers:
        obs(state)
    nsteps = max(0, math.ceil(T_final / dt - 1e-9))
    if nsteps == 0:
        if state.status == RUNNING:
            state = replace(state, status=COMPLETED)
        return traj, state
    t0 = state.t
    for i in range(1, nsteps + 1):
        # last step lands on T_final exactly
        h = (t0 + T_final) - state.t if i == nsteps else dt
        state = step(state, h)
        if i == nsteps and state.status == RUNNING:
            state.status = COMPLETED
        last = i == nsteps or state.status != RUNNING
        if last or i % snapshot_stride == 0:
            traj.append(state)
        if last or i % observer_stride == 0:
            for obs in observers:
                obs(state)
        if state.status != RUNNING:
            break
    return traj, state
