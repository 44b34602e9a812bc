"""Controllers and planners operating entirely in action-implied units.

Feedback laws written over ./b state estimates cancel the hidden input gain
in closed loop, so one set of gains works for every plant strength. The
jump planner combines the projectile solve with a minimum-total-variation
launch program expressed through the identified actuator kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateAngle,
    Infeasible,
    MissingHull,
    NoEstimate,
    StaleEstimate,
    UnstableGains,
)
from .estimators import EmbodiedEstimate, EmbodiedReport
from .qp import QpProblem, solve_qp
from .signals import TimeSeries, convolve, cumulative_double_integral

__all__ = [
    "ApproachConfig",
    "ApproachController",
    "BodyHull",
    "JumpPlan",
    "clearing_decision",
    "safe_speed_from_target",
    "safe_speed_from_force",
    "solve_launch",
    "plan_jump_control",
    "simulate_characteristic_tracking",
]


@dataclass(frozen=True)
class ApproachConfig:
    """Constant-speed approach with lateral centering.

    Gains are dimensionless over embodied error; stability of the embodied
    closed loop (which is gain-cancelled, so effectively b = 1) requires
    every gain positive, i.e. a Hurwitz characteristic polynomial.
    """

    v_s: float = 0.3               # embodied approach speed, action units/s
    k_v: float = 5.0               # axial velocity gain
    k_lat_p: float = 1.0           # lateral position gain
    k_lat_d: float = 2.0           # lateral damping gain
    stop_distance: float | None = None  # embodied; None = drive to contact
    max_estimate_age: float = 30.0

    def __post_init__(self):
        if self.v_s <= 0.0:
            raise ValueError("approach speed must be positive")
        if self.k_v <= 0.0 or self.k_lat_p <= 0.0 or self.k_lat_d <= 0.0:
            raise UnstableGains("all gains must be positive for a Hurwitz "
                                "embodied closed loop")


class ApproachController:
    """Drives the embodied closing speed to v_s while centering laterally.

    Position feedback is Phi_W * (d/b); the embodied velocity is estimated
    by differencing that signal between frames.
    """

    def __init__(self, cfg: ApproachConfig):
        self.cfg = cfg
        self._prev: tuple[float, float] | None = None  # (time, z_emb)
        self._prev_lat: tuple[float, float] | None = None

    def reset(self):
        self._prev = None
        self._prev_lat = None

    def step(self, estimate: EmbodiedEstimate, live_phi: float, t: float,
             lateral_phi: float = 0.0) -> np.ndarray:
        """One control sample: returns (lateral, 0, axial) acceleration."""
        if not math.isfinite(estimate.d_over_b):
            raise NoEstimate("approach requires a finite d/b estimate")
        if t - estimate.window_end > self.cfg.max_estimate_age:
            raise StaleEstimate(
                f"estimate window ended {t - estimate.window_end:.2f} s ago")
        z_emb = live_phi * estimate.d_over_b
        if self._prev is None:
            v_emb = -self.cfg.v_s  # assume on-profile until a second frame
        else:
            t_prev, z_prev = self._prev
            v_emb = (z_emb - z_prev) / (t - t_prev) if t > t_prev else -self.cfg.v_s
        self._prev = (t, z_emb)

        u_axial = self.cfg.k_v * (-self.cfg.v_s - v_emb)

        lat_emb = lateral_phi * estimate.d_over_b
        if self._prev_lat is None:
            lat_rate = 0.0
        else:
            t_prev, lat_prev = self._prev_lat
            lat_rate = (lat_emb - lat_prev) / (t - t_prev) if t > t_prev else 0.0
        self._prev_lat = (t, lat_emb)
        u_lat = self.cfg.k_lat_p * lat_emb + self.cfg.k_lat_d * lat_rate

        return np.array([u_lat, 0.0, u_axial])

    def should_stop(self, estimate: EmbodiedEstimate, live_phi: float) -> bool:
        if self.cfg.stop_distance is None:
            return False
        return live_phi * estimate.d_over_b <= self.cfg.stop_distance


@dataclass
class BodyHull:
    """Embodied camera-to-contact offsets, keyed by approach direction."""

    offsets: dict[str, float] = field(default_factory=dict)

    def add(self, direction: str, offset_emb: float):
        if offset_emb < 0.0:
            raise ValueError("contact offsets cannot be negative")
        self.offsets[direction] = offset_emb

    def width(self) -> float:
        if "left" not in self.offsets or "right" not in self.offsets:
            raise MissingHull("need: touched left and right sides")
        return self.offsets["left"] + self.offsets["right"]


def clearing_decision(hull: BodyHull, xl_over_b: np.ndarray,
                      xr_over_b: np.ndarray) -> tuple[bool, float]:
    """Strict fit test: body width < opening width, both in action units.

    Returns (fits, margin); equality counts as not fitting.
    """
    w = hull.width()
    opening = float(np.linalg.norm(np.asarray(xl_over_b, dtype=float)
                                   - np.asarray(xr_over_b, dtype=float)))
    if not (math.isfinite(w) and math.isfinite(opening)):
        raise ValueError("non-finite widths in clearing decision")
    return w < opening, opening - w


def safe_speed_from_target(multiple: float, estimate: EmbodiedEstimate) -> float:
    """Speed as d-multiples per second, converted through the d/b estimate."""
    if multiple < 0.0:
        raise ValueError("speed multiple cannot be negative")
    if estimate is None or not math.isfinite(estimate.d_over_b):
        raise NoEstimate("no scale estimate to convert the speed with")
    return multiple * estimate.d_over_b


def safe_speed_from_force(alpha_frac: float, t_decel: float,
                          u_max: float) -> float:
    """Speed from a contact-force budget: v_s = alpha * T * u_max."""
    if alpha_frac <= 0.0 or t_decel <= 0.0 or u_max <= 0.0:
        raise ValueError("force fraction, time, and max input must be positive")
    return alpha_frac * t_decel * u_max


def solve_launch(d_emb: float, g_emb: float,
                 theta_l: float) -> tuple[float, float]:
    """Projectile solve: launch speed and landing time for a flat gap.

    0 = t sin(theta) v - t^2 g / 2 and d = t cos(theta) v give
    v = sqrt(g d / sin(2 theta)), t_f = d / (v cos(theta)).
    """
    if d_emb <= 0.0 or g_emb <= 0.0:
        raise ValueError("gap and gravity must be positive")
    if not (0.0 < theta_l < math.pi / 2.0):
        raise DegenerateAngle(f"launch angle {theta_l} rad out of (0, pi/2)")
    v_l = math.sqrt(g_emb * d_emb / math.sin(2.0 * theta_l))
    t_f = d_emb / (v_l * math.cos(theta_l))
    return v_l, t_f


@dataclass
class JumpPlan:
    theta_l: float                 # launch angle, rad
    v_l: float                     # embodied launch speed
    t_f: float                     # landing time, s
    d_m: float                     # embodied run-up distance
    u_j: TimeSeries                # launch control, gravity offset excluded
    gravity_offset: float          # embodied input held against gravity
    active_set: list[int] = field(default_factory=list)

    def commanded(self) -> TimeSeries:
        """Launch signal as emitted: plan plus the gravity offset."""
        return TimeSeries(self.u_j.t0, self.u_j.dt,
                          self.u_j.values + self.gravity_offset)


def plan_jump_control(v_l: float, d_m: float, kernel_emb: TimeSeries,
                      gravity_offset: float = 0.0, t_j: float = 0.25,
                      theta_l: float = math.radians(20.0),
                      t_f: float = float("nan")) -> JumpPlan:
    """Minimum-total-variation launch signal reaching v_l over d_m.

    ``kernel_emb`` is the identified impulse response in embodied units
    (unit DC gain). Discretized on the control grid over [0, t_j] with
    pinned endpoints and u >= 0; the two integral constraints fix the
    terminal velocity and the distance covered. The emitted signal adds the
    gravity offset; actuators are commanded to zero afterward.
    """
    if v_l < 0.0 or d_m < 0.0:
        raise ValueError("launch speed and run-up must be nonnegative")
    dt = kernel_emb.dt
    n = int(round(t_j / dt)) + 1
    if v_l == 0.0 and d_m == 0.0:
        u = TimeSeries(0.0, dt, np.zeros(n))
        return JumpPlan(theta_l, 0.0, 0.0, 0.0, u, gravity_offset)

    # constraint rows by pushing unit impulses through the response maps
    row_v = np.empty(n)
    row_d = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        resp = convolve(kernel_emb, TimeSeries(0.0, dt, e))
        row_v[i] = resp.values.sum() * dt
        row_d[i] = cumulative_double_integral(resp).values[-1]

    # total variation: sum((u_{k+1}-u_k)/dt)^2 * dt
    diff = (np.eye(n - 1, n, 1) - np.eye(n - 1, n)) / dt
    h = 2.0 * dt * diff.T @ diff
    pin0 = np.zeros(n)
    pin0[0] = 1.0
    pin1 = np.zeros(n)
    pin1[-1] = 1.0
    a_eq = np.vstack([row_v, row_d, pin0, pin1])
    b_eq = np.array([v_l, d_m, 0.0, 0.0])
    prob = QpProblem(h=h, f=np.zeros(n), a_eq=a_eq, b_eq=b_eq,
                     a_in=-np.eye(n), b_in=np.zeros(n))
    try:
        u_vals, active = solve_qp(prob)
    except Infeasible as exc:
        raise Infeasible(
            f"no nonnegative launch signal reaches v_l={v_l:.3g} over "
            f"d_m={d_m:.3g} within {t_j} s; the distance constraint is the "
            "usual limiter (needs 0 < d_m < t_j * v_l, shrunk by actuator lag)"
        ) from exc
    u_vals = np.maximum(u_vals, 0.0)
    u_vals[0] = 0.0   # pinned by equality; clear solver round-off
    u_vals[-1] = 0.0
    u = TimeSeries(0.0, dt, u_vals)
    return JumpPlan(theta_l, v_l, t_f, d_m, u, gravity_offset, active)


def simulate_characteristic_tracking(alpha: float, beta: float, d: float,
                                     k_p: float, k_d: float, ref: TimeSeries,
                                     dt: float = 0.001) -> dict:
    """Reference tracking through kernel-inverse compensation.

    The plant is first order (pole alpha, gain beta) into a double
    integrator. The control filters the feedback error through the scaled
    kernel inverse d G^{-1}; plant and inverse cancel, leaving the ideal
    loop xdd = K (d ref - x). Returns both the tracked trajectory and the
    ideal closed-loop response for comparison.
    """
    if k_p <= 0.0 or k_d <= 0.0:
        raise UnstableGains("ideal loop s^2 + kd s + kp needs positive gains")
    if alpha <= 0.0 or beta == 0.0:
        raise ValueError("kernel must be minimum-phase first order")
    n = len(ref)
    x = np.zeros(n)
    v = np.zeros(n)
    x_act = 0.0
    z_prev = 0.0  # differencing from zero keeps the initial derivative kick
    rise = -math.expm1(-alpha * dt)
    for k in range(1, n):
        r = float(ref.values[k - 1])
        # feedback over the characteristic-scale state x/d; the kernel and
        # its scaled inverse cancel, leaving xdd = K (d ref - x)
        z = k_p * (r - x[k - 1] / d) + k_d * (0.0 - v[k - 1] / d)
        z_dot = (z - z_prev) / dt
        z_prev = z
        u = (d / (beta * alpha)) * (z_dot + alpha * z)
        x_act = x_act + rise * (u - x_act)
        accel = beta * x_act
        v[k] = v[k - 1] + accel * dt
        x[k] = x[k - 1] + v[k] * dt

    xi = np.zeros(n)
    vi = np.zeros(n)
    for k in range(1, n):
        r = float(ref.values[k - 1])
        accel = k_p * (d * r - xi[k - 1]) + k_d * (0.0 - vi[k - 1])
        vi[k] = vi[k - 1] + accel * dt
        xi[k] = xi[k - 1] + vi[k] * dt
    return {
        "tracked": TimeSeries(ref.t0, dt, x),
        "ideal": TimeSeries(ref.t0, dt, xi),
    }
