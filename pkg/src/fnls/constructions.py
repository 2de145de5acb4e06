"""Explicit objects used by the verification experiments: resonant
counterexample boxes, modulated wavepackets, NLS-based approximate solutions
of the fractional equation, amplitude/scale rescaling, and the nearly-equal
data pair driving the separation experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ResolutionError, ValidationError, WrapAroundError
from .spectral import Field, Grid, spectral_values, tail_fraction, spectral_tail_fraction
from .symbols import envelope_scale, group_velocity
from .norms import SpaceTimeField, sobolev_norm
from .evolution import SimConfig, Trajectory, TAIL_MASS_LIMIT

INTERP_LOSS_LIMIT = 1e-8


def _is_power_of_two(x: float) -> bool:
    m, e = math.frexp(x)
    return m == 0.5


@dataclass(frozen=True)
class BoxSpec:
    """A resonant box: frequencies in [N, N + N^((2-alpha)/2)] (or the mirror
    band starting at -N when conjugate), within unit distance of the
    dispersion surface.  The width is exactly the one that keeps the box
    inside an O(1) strip of the surface."""

    n: float
    alpha: float
    xi_samples_per_box: int = 16
    tau_samples_per_unit: int = 8
    conjugate: bool = False

    def __post_init__(self):
        if self.n < 16 or not _is_power_of_two(self.n):
            raise ValidationError(f"n must be a dyadic value >= 16, got {self.n}")
        if not (1.0 < self.alpha < 2.0):
            raise ValidationError(f"alpha must lie in (1, 2), got {self.alpha}")
        if self.xi_samples_per_box < 8:
            raise ValidationError("need >= 8 frequency samples across the box")
        if self.tau_samples_per_unit < 4:
            raise ValidationError("need >= 4 tau samples per unit")

    @property
    def width(self) -> float:
        return self.n ** ((2.0 - self.alpha) / 2.0)


def box_data(spec: BoxSpec) -> SpaceTimeField:
    """Indicator of the box on a midpoint-sampled (tau, xi) lattice."""
    dxi = spec.width / spec.xi_samples_per_box
    dtau = 1.0 / spec.tau_samples_per_unit
    start = -spec.n if spec.conjugate else spec.n
    xi = start + (np.arange(spec.xi_samples_per_box) + 0.5) * dxi

    disp = np.abs(xi) ** spec.alpha
    line = -disp if spec.conjugate else disp
    lo, hi = line.min() - 1.0, line.max() + 1.0
    n_tau = int(np.ceil((hi - lo) / dtau)) + 1
    tau = lo + (np.arange(n_tau) + 0.5) * dtau
    if n_tau < 2 * spec.tau_samples_per_unit:
        raise ResolutionError("tau lattice too coarse for the unit strip")

    values = (np.abs(tau[:, None] - line[None, :]) <= 1.0).astype(np.complex128)
    return SpaceTimeField(tau, xi, values)


def trilinear_convolution(
    f1: SpaceTimeField, f2bar: SpaceTimeField, f3: SpaceTimeField
) -> SpaceTimeField:
    """Double space-time convolution with Riemann weights.

    The output lattice covers the Minkowski sum of the three supports; the
    factor lattices must share spacings (offsets are free and simply add).
    """
    fields = (f1, f2bar, f3)
    dtau, dxi = f1.dtau, f1.dxi
    for f in fields[1:]:
        if abs(f.dtau - dtau) > 1e-9 * dtau or abs(f.dxi - dxi) > 1e-9 * dxi:
            raise ValidationError("lattice spacings do not match")
    vals = fftconvolve(f1.values, f2bar.values, mode="full")
    vals = fftconvolve(vals, f3.values, mode="full")
    vals = vals * (dtau * dxi) ** 2

    tau0 = f1.tau[0] + f2bar.tau[0] + f3.tau[0]
    xi0 = f1.xi[0] + f2bar.xi[0] + f3.xi[0]
    tau = tau0 + dtau * np.arange(vals.shape[0])
    xi = xi0 + dxi * np.arange(vals.shape[1])
    return SpaceTimeField(tau, xi, vals)


def change_of_variables(t: float, x, n_carrier: float, alpha: float):
    """Wavepacket frame (s, y) = (t, (x + alpha N^(alpha-1) t) / beta)."""
    if n_carrier < 4:
        raise ValidationError("carrier frequency must be >= 4")
    beta = envelope_scale(alpha, n_carrier)
    vel = group_velocity(alpha, n_carrier)
    return t, (np.asarray(x, dtype=float) + vel * t) / beta


def container_config(
    grid: Grid, alpha: float, dt: float, t_final: float,
    gamma: float = 1.0, record_every: int = 1, frame_velocity: float = 0.0,
) -> SimConfig:
    """SimConfig used as trajectory metadata for constructed (not integrated)
    trajectories; the accuracy guard is widened to whatever the stored dt
    implies since no stepping happens at that dt."""
    peak = float(np.max(np.abs(grid.k) ** alpha))
    needed = abs(dt) * peak / (2.0 * np.pi)
    return SimConfig(
        alpha=alpha,
        gamma=gamma,
        dt=dt,
        t_final=t_final,
        grid=grid,
        record_every=record_every,
        cfl_factor=max(1.0, needed * (1.0 + 1e-9)),
        frame_velocity=frame_velocity,
    )


def _carrier_mode_index(n_carrier: float, grid: Grid) -> int:
    m = n_carrier * grid.length / (2.0 * np.pi)
    m_int = int(round(m))
    if abs(m - m_int) > 1e-9 * max(1.0, abs(m)):
        raise ValidationError(
            f"carrier frequency {n_carrier} is not on the grid lattice "
            f"(needs N*L/2pi integer, got {m})"
        )
    return m_int


def approximate_solution(
    v_traj: Trajectory,
    n_carrier: float,
    alpha: float,
    target_grid: Grid,
    frame_velocity: float = 0.0,
) -> Trajectory:
    """Modulated image V(t, x) = e^(iNx) e^(iN^alpha t) v(s, y) of an NLS
    trajectory v under the wavepacket change of variables.

    The v grid must tile the target torus exactly: beta * L_v = L_target.
    Sampling onto the target grid is band-limited (exact for the stored
    band): each v mode m lands on target mode m_N + m with a time-dependent
    translation phase.  With frame_velocity = -group_velocity the image is
    evaluated in the frame where the packet rests.
    """
    beta = envelope_scale(alpha, n_carrier)
    vel = group_velocity(alpha, n_carrier)
    v_grid = v_traj.grid
    if abs(beta * v_grid.length - target_grid.length) > 1e-9 * target_grid.length:
        raise ValidationError(
            "envelope grid does not tile the target torus: need "
            f"beta*L_v = L_target (beta*L_v = {beta * v_grid.length:.6g}, "
            f"L_target = {target_grid.length:.6g})"
        )
    m_n = _carrier_mode_index(n_carrier, target_grid)
    half_v, half_t = v_grid.nx // 2, target_grid.nx // 2
    if m_n + half_v > half_t or m_n - half_v < -half_t:
        raise ResolutionError(
            "target grid cannot hold the modulated band: "
            f"carrier mode {m_n} +- {half_v} exceeds +-{half_t}"
        )

    k_v = v_grid.k
    idx = (m_n + np.round(k_v / v_grid.dk).astype(int)) % target_grid.nx

    drift = (vel + frame_velocity) / beta  # y-translation rate of the sampling
    phase_rate = n_carrier**alpha + n_carrier * frame_velocity

    states = []
    for t, state in zip(v_traj.times, v_traj.states):
        vhat = spectral_values(state)
        if spectral_tail_fraction(state) > INTERP_LOSS_LIMIT:
            raise ResolutionError(
                f"envelope solution under-resolved at t={t:.6g}: outer-band "
                f"mass fraction {spectral_tail_fraction(state):.3g}"
            )
        out = np.zeros(target_grid.nx, dtype=np.complex128)
        out[idx] = beta * vhat * np.exp(1j * k_v * drift * t)
        out *= np.exp(1j * phase_rate * t)
        field = Field.spectral(target_grid, out)
        # only a localized envelope makes a wrap-around claim to enforce
        if tail_fraction(state) <= TAIL_MASS_LIMIT < tail_fraction(field):
            raise WrapAroundError(
                f"modulated packet too close to the boundary at t={t:.6g}"
            )
        states.append(field)

    dt = v_traj.config.dt
    cfg = container_config(
        target_grid, alpha, dt, v_traj.config.t_final,
        gamma=v_traj.config.gamma, record_every=v_traj.config.record_every,
        frame_velocity=frame_velocity,
    )
    return Trajectory(v_traj.times.copy(), states, cfg)


ENVELOPES = {
    "gaussian": lambda y: np.exp(-0.5 * y**2),
    "bump": lambda y: np.where(
        np.abs(y) < 1.0, np.exp(1.0 - 1.0 / np.maximum(1.0 - y**2, 1e-300)), 0.0
    ),
}


@dataclass(frozen=True)
class WavepacketSpec:
    """Modulated envelope A e^(iMx) w((x - x0)/tau_scale).

    The hypotheses of the norm-scaling bounds are enforced: M*tau >= 1 for
    s >= 0, and tau * M^(1 + s/smoothness) >= 1 with smoothness >= |s| for
    s < 0.
    """

    amplitude: float
    carrier: float
    tau_scale: float
    x0: float
    s: float = 0.0
    profile: str = "gaussian"
    smoothness: float = 1.0

    def __post_init__(self):
        if self.carrier < 1.0:
            raise ValidationError("carrier frequency must be >= 1")
        if self.tau_scale <= 0.0:
            raise ValidationError("tau_scale must be positive")
        if self.profile not in ENVELOPES:
            raise ValidationError(f"unknown profile {self.profile!r}")
        if self.s >= 0.0:
            if self.carrier * self.tau_scale < 1.0:
                raise ValidationError(
                    "scaling hypothesis M*tau >= 1 violated for s >= 0"
                )
        else:
            if self.smoothness < abs(self.s):
                raise ValidationError("envelope smoothness must be >= |s|")
            if self.tau_scale * self.carrier ** (1.0 + self.s / self.smoothness) < 1.0:
                raise ValidationError(
                    "scaling hypothesis tau*M^(1+s/sigma) >= 1 violated for s < 0"
                )


def modulated_wavepacket(spec: WavepacketSpec, grid: Grid) -> Field:
    """Sample the modulated envelope on the grid (wrap-around checked)."""
    w = ENVELOPES[spec.profile]((grid.x - spec.x0) / spec.tau_scale)
    values = spec.amplitude * np.exp(1j * spec.carrier * grid.x) * w
    field = Field.physical(grid, values)
    if tail_fraction(field) > TAIL_MASS_LIMIT:
        raise WrapAroundError(
            "envelope does not fit the grid: tail mass fraction "
            f"{tail_fraction(field):.3g}"
        )
    return field


def rescale_solution(
    traj: Trajectory, lam: float, alpha: float, target_grid: Grid
) -> Trajectory:
    """Amplitude/space/time rescaling u -> lam * u(lam^alpha t, lam x).

    The spectral coefficients carry over unchanged: the amplitude factor lam
    is absorbed exactly by the lam-times finer Riemann sum, which is also how
    mass(rescaled) = lam * mass(original) arises.  Coefficients are padded or
    truncated to the target band; truncation must lose < 1e-8 of the norm.
    Recorded times shrink by lam^(-alpha).
    """
    if lam < 1.0:
        raise ValidationError(f"lambda must be >= 1, got {lam}")
    src = traj.grid
    if abs(target_grid.length - src.length / lam) > 1e-9 * target_grid.length:
        raise ValidationError(
            "target grid length must be the source length divided by lambda"
        )
    nx_s, nx_t = src.nx, target_grid.nx
    states = []
    for state in traj.states:
        uhat = spectral_values(state)
        if nx_t >= nx_s:
            half = nx_s // 2
            out = np.zeros(nx_t, dtype=np.complex128)
            out[:half] = uhat[:half]
            out[-half:] = uhat[half:]
        else:
            half = nx_t // 2
            out = np.concatenate([uhat[:half], uhat[nx_s - half :]])
            total = float(np.sum(np.abs(uhat) ** 2))
            kept = float(np.sum(np.abs(out) ** 2))
            if total > 0 and np.sqrt(max(total - kept, 0.0) / total) > INTERP_LOSS_LIMIT:
                raise ResolutionError(
                    "rescaling would truncate "
                    f"{np.sqrt((total - kept) / total):.3g} of the state"
                )
        states.append(Field.spectral(target_grid, out))

    scale_t = lam ** (-alpha)
    cfg = container_config(
        target_grid, alpha, traj.config.dt * scale_t, traj.config.t_final * scale_t,
        gamma=traj.config.gamma, record_every=traj.config.record_every,
    )
    return Trajectory(traj.times * scale_t, states, cfg)


def lambda_for(s: float, alpha: float, n_carrier: float) -> float:
    """Zoom factor N^(((2-alpha)/4 - s)/(s + 1/2)) equalizing data norms."""
    if s <= -0.5:
        raise ValidationError(f"s must exceed -1/2, got {s}")
    if not (1.0 < alpha <= 2.0):
        raise ValidationError(f"alpha must lie in (1, 2], got {alpha}")
    exponent = ((2.0 - alpha) / 4.0 - s) / (s + 0.5)
    return float(n_carrier**exponent)


def nls_pair(
    epsilon: float,
    delta: float,
    grid: Grid,
    sigma: float,
    s: float = 0.0,
    profile: str = "gaussian",
    x0: float | None = None,
) -> tuple[Field, Field]:
    """Two proportional wide-envelope data sets for the reference NLS run.

    phi_j = a_j w(x/sigma) with a_2 = a_1 (1 + delta/epsilon) and a_1 chosen
    so that |phi_j|_{H^s} is epsilon (up to the delta-size excess on phi_2);
    the relative separation is then delta/epsilon exactly by construction.
    Their alpha = 2 evolutions decohere through the amplitude-dependent
    nonlinear phase, which is what the separation experiment measures.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValidationError("epsilon must lie in (0, 1)")
    if not (0.0 <= delta <= 0.5 * epsilon):
        raise ValidationError("delta must satisfy 0 <= delta << epsilon")
    if profile not in ENVELOPES:
        raise ValidationError(f"unknown profile {profile!r}")
    center = 0.5 * grid.length if x0 is None else x0
    env = ENVELOPES[profile]((grid.x - center) / sigma)
    base = Field.physical(grid, env.astype(np.complex128))
    if tail_fraction(base) > TAIL_MASS_LIMIT:
        raise WrapAroundError("envelope does not fit the grid")
    a1 = epsilon / sobolev_norm(base, s)
    a2 = a1 * (1.0 + delta / epsilon)
    return (
        Field.physical(grid, a1 * env),
        Field.physical(grid, a2 * env),
    )
