"""Numerical integration of the unicycle closed loop and its variants.

This module is the independent oracle for every closed-form claim: a
classical fixed-step RK4 (default, step 1e-3) and an adaptive
Dormand-Prince RK45 for long-horizon runs.  It also provides the
offset-point kinematics, the gain-switching strategy, and a specialized
propagator for the regime where the attitude is deliberately destabilized
and the closed loop rotates exponentially fast.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .core import VectorFieldSet, as_state
from .errors import DivergenceError, SwitchTimeoutError

DIVERGENCE_FACTOR = 1e6
CSV_HEADER = "t,x_c,y_c,theta,energy"


@dataclass(frozen=True)
class GainConfig:
    """Feedback gains; equal gains reproduce the single-constant law."""

    rho_pos: float
    rho_theta: float
    switch_enabled: bool = False
    switch_radius: float = 0.0
    rho_theta_after_switch: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.rho_pos) and math.isfinite(self.rho_theta)):
            raise ValueError("gains must be finite")
        if self.switch_enabled and not self.switch_radius > 0.0:
            raise ValueError("switch_radius must be positive when switching is enabled")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"  # "rk4" (fixed step) or "rk45" (adaptive)
    step: float = 1e-3
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    t_end: float = 10.0

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.step > 0.0:
            raise ValueError("step must be positive")
        if not (self.abs_tol > 0.0 and self.rel_tol > 0.0):
            raise ValueError("tolerances must be positive")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")


def unicycle_field(q, gains: GainConfig) -> np.ndarray:
    """Closed-loop unicycle derivative (x_c', y_c', theta')."""
    x, y, th = float(q[0]), float(q[1]), float(q[2])
    c, s = math.cos(th), math.sin(th)
    forward = gains.rho_pos * (c * x + s * y)
    return np.array([c * forward, s * forward, gains.rho_theta * th])


def unicycle_field_set() -> VectorFieldSet:
    """Control vector fields of the unicycle (unit forward and turn columns)."""

    def evaluate(q: np.ndarray) -> np.ndarray:
        th = q[2]
        return np.array([[math.cos(th), 0.0], [math.sin(th), 0.0], [0.0, 1.0]])

    return VectorFieldSet(n=3, k=2, evaluate=evaluate)


def offset_field(q, a: float, u) -> np.ndarray:
    """Kinematics of a point at distance ``a`` ahead of the wheel baseline.

    x' = u1 cos(th) - a u2 sin(th), y' = u1 sin(th) + a u2 cos(th),
    th' = u2; reduces to the plain unicycle at a = 0.
    """
    if a < 0.0:
        raise ValueError("offset distance a must be nonnegative")
    th = float(q[2])
    u1, u2 = float(u[0]), float(u[1])
    c, s = math.cos(th), math.sin(th)
    return np.array([u1 * c - a * u2 * s, u1 * s + a * u2 * c, u2])


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped states with the accumulated squared-speed integral."""

    times: np.ndarray
    states: np.ndarray
    energy: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.states) == len(self.energy)):
            raise ValueError("times/states/energy length mismatch")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @staticmethod
    def from_samples(times, states, rates) -> "Trajectory":
        times = np.asarray(times, float)
        states = np.asarray(states, float)
        rates = np.asarray(rates, float)
        energy = np.zeros(len(times))
        if len(times) > 1:
            dt = np.diff(times)
            energy[1:] = np.cumsum(0.5 * (rates[:-1] + rates[1:]) * dt)
        return Trajectory(times, states, energy)

    def to_csv(self, path: str) -> None:
        """Write the fixed (t, x_c, y_c, theta, energy) schema, 17 sig digits."""
        if self.states.shape[1] != 3:
            raise ValueError("CSV schema is defined for 3-state trajectories")
        lines = [CSV_HEADER]
        for t, q, e in zip(self.times, self.states, self.energy):
            lines.append(
                ",".join(format(v, ".17g") for v in (t, q[0], q[1], q[2], e))
            )
        _atomic_write(path, "\n".join(lines) + "\n")

    def to_json(self, path: str, meta: dict | None = None) -> None:
        payload = {
            "meta": {"tool_version": __version__, **(meta or {})},
            "columns": ["t", "x_c", "y_c", "theta", "energy"],
            "rows": [
                [t, q[0], q[1], q[2], e]
                for t, q, e in zip(
                    self.times.tolist(), self.states.tolist(), self.energy.tolist()
                )
            ],
        }
        _atomic_write(path, json.dumps(payload, indent=2) + "\n")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rk4_step(f, t, q, h):
    k1 = f(t, q)
    k2 = f(t + 0.5 * h, q + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, q + 0.5 * h * k2)
    k4 = f(t + h, q + h * k3)
    return q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4) tableau
_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)


def _dp45_step(f, t, q, h):
    ks = []
    for i in range(7):
        qi = q.copy()
        for aij, kj in zip(_DP_A[i], ks):
            qi += h * aij * kj
        ks.append(f(t + _DP_C[i] * h, qi))
    q5 = q + h * sum(b * k for b, k in zip(_DP_B5, ks))
    q4 = q + h * sum(b * k for b, k in zip(_DP_B4, ks))
    return q5, q5 - q4


def _step_stream(f, q0, cfg: IntegratorConfig, t0: float = 0.0):
    """Yield (t, q) at accepted integration nodes, starting after t0.

    Raises DivergenceError (with the offending partial state list attached
    by the caller) when the state norm explodes or the adaptive step
    collapses.
    """
    guard = DIVERGENCE_FACTOR * max(1.0, float(np.linalg.norm(q0)))
    t, q = t0, q0.astype(float)
    if cfg.method == "rk4":
        n_steps = max(1, int(round((cfg.t_end - t0) / cfg.step)))
        h = (cfg.t_end - t0) / n_steps
        for i in range(1, n_steps + 1):
            q = _rk4_step(f, t, q, h)
            t = t0 + i * h
            if np.linalg.norm(q) > guard:
                raise DivergenceError(f"state norm exceeded guard at t={t:.6g}")
            yield t, q
        return
    # adaptive rk45
    h = min(1e-2, (cfg.t_end - t0) / 10.0)
    h_floor = 1e-12 * (cfg.t_end - t0)
    while t < cfg.t_end:
        h = min(h, cfg.t_end - t)
        q_new, err_vec = _dp45_step(f, t, q, h)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(q), np.abs(q_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if err <= 1.0:
            t, q = t + h, q_new
            if np.linalg.norm(q) > guard:
                raise DivergenceError(f"state norm exceeded guard at t={t:.6g}")
            yield t, q
        factor = 0.9 * (err ** -0.2) if err > 0.0 else 5.0
        h *= min(5.0, max(0.2, factor))
        if h < h_floor:
            raise DivergenceError(f"adaptive step collapsed below floor at t={t:.6g}")


def integrate(field_fn: Callable, q0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate q' = field_fn(q) from q0 over [0, t_end].

    ``field_fn`` takes the state vector only (autonomous closed loops).
    """
    q0 = as_state(q0)
    f = lambda t, q: np.asarray(field_fn(q), float)
    times, states = [0.0], [q0]
    try:
        for t, q in _step_stream(f, q0, cfg):
            times.append(t)
            states.append(q)
    except DivergenceError as exc:
        rates = [float(np.dot(f(0.0, q), f(0.0, q))) for q in states]
        exc.trajectory = Trajectory.from_samples(times, states, rates)
        raise
    rates = [float(np.dot(f(0.0, q), f(0.0, q))) for q in states]
    return Trajectory.from_samples(times, states, rates)


def integrate_unicycle(q0, gains: GainConfig, cfg: IntegratorConfig) -> Trajectory:
    """Fixed-step RK4 specialized to the unicycle closed loop.

    Scalar arithmetic throughout; roughly an order of magnitude faster than
    the generic path, which matters for the oracle batteries.
    """
    if cfg.method != "rk4":
        return integrate(lambda q: unicycle_field(q, gains), q0, cfg)
    q0 = as_state(q0)
    if q0.shape != (3,):
        raise ValueError("unicycle state must have 3 entries")
    rp, rt = gains.rho_pos, gains.rho_theta
    cos, sin = math.cos, math.sin

    def rhs(x, y, th):
        c, s = cos(th), sin(th)
        fwd = rp * (c * x + s * y)
        return c * fwd, s * fwd, rt * th

    n_steps = max(1, int(round(cfg.t_end / cfg.step)))
    h = cfg.t_end / n_steps
    guard = DIVERGENCE_FACTOR * max(1.0, math.sqrt(float(q0 @ q0)))
    x, y, th = float(q0[0]), float(q0[1]), float(q0[2])
    times = [0.0]
    states = [(x, y, th)]
    d = rhs(x, y, th)
    rates = [d[0] * d[0] + d[1] * d[1] + d[2] * d[2]]
    for i in range(1, n_steps + 1):
        ax, ay, at = rhs(x, y, th)
        bx, by, bt = rhs(x + 0.5 * h * ax, y + 0.5 * h * ay, th + 0.5 * h * at)
        cx, cy, ct = rhs(x + 0.5 * h * bx, y + 0.5 * h * by, th + 0.5 * h * bt)
        dx, dy, dt_ = rhs(x + h * cx, y + h * cy, th + h * ct)
        x += (h / 6.0) * (ax + 2.0 * bx + 2.0 * cx + dx)
        y += (h / 6.0) * (ay + 2.0 * by + 2.0 * cy + dy)
        th += (h / 6.0) * (at + 2.0 * bt + 2.0 * ct + dt_)
        if x * x + y * y + th * th > guard * guard:
            raise DivergenceError(
                f"state norm exceeded guard at t={i * h:.6g}",
                Trajectory.from_samples(times, states, rates),
            )
        times.append(i * h)
        states.append((x, y, th))
        d = rhs(x, y, th)
        rates.append(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    return Trajectory.from_samples(times, states, rates)


@dataclass(frozen=True)
class SwitchResult:
    trajectory: Trajectory
    switch_time: float


def run_switching(q0, gains: GainConfig, cfg: IntegratorConfig) -> SwitchResult:
    """Destabilize the attitude until the position is inside the switch
    radius, then flip the attitude gain to its stabilizing value.

    The crossing instant is located by linear interpolation between the
    bracketing integration nodes, so the switch time does not inherit the
    step size.
    """
    if not gains.switch_enabled:
        raise ValueError("switching requires switch_enabled")
    if not (gains.rho_theta > 0.0 and gains.rho_theta_after_switch < 0.0):
        raise ValueError("expect rho_theta > 0 before and < 0 after the switch")
    if not gains.rho_pos < 0.0:
        raise ValueError("rho_pos must be negative")
    q0 = as_state(q0)
    eps = gains.switch_radius

    pre = GainConfig(gains.rho_pos, gains.rho_theta)
    post = GainConfig(gains.rho_pos, gains.rho_theta_after_switch)
    f_pre = lambda t, q: unicycle_field(q, pre)
    f_post = lambda t, q: unicycle_field(q, post)

    times, states = [0.0], [q0]
    if math.hypot(q0[0], q0[1]) <= eps:
        switch_time, q_switch = 0.0, q0
    else:
        switch_time = None
        for t, q in _step_stream(f_pre, q0, cfg):
            g_prev = math.hypot(states[-1][0], states[-1][1]) - eps
            g_now = math.hypot(q[0], q[1]) - eps
            if g_now <= 0.0:
                alpha = g_prev / (g_prev - g_now) if g_prev != g_now else 1.0
                switch_time = times[-1] + alpha * (t - times[-1])
                q_switch = states[-1] + alpha * (q - states[-1])
                if switch_time > times[-1]:
                    times.append(switch_time)
                    states.append(q_switch)
                break
            times.append(t)
            states.append(q)
        if switch_time is None:
            rates = [float(np.dot(f_pre(0, q), f_pre(0, q))) for q in states]
            raise SwitchTimeoutError(
                f"position never entered radius {eps} before t={cfg.t_end}",
                Trajectory.from_samples(times, states, rates),
            )
    n_pre = len(times)
    if switch_time < cfg.t_end:
        for t, q in _step_stream(f_post, q_switch, cfg, t0=switch_time):
            times.append(t)
            states.append(q)
    # integrand per segment; the field (hence the rate) jumps at the switch
    rates = [float(np.dot(d, d)) for d in (f_pre(0, q) for q in states[:n_pre])]
    rates += [float(np.dot(d, d)) for d in (f_post(0, q) for q in states[n_pre:])]
    return SwitchResult(Trajectory.from_samples(times, states, rates), switch_time)


def _ordered_product(mats: np.ndarray) -> np.ndarray:
    """Product mats[m-1] @ ... @ mats[0] by pairwise reduction."""
    while mats.shape[0] > 1:
        m = mats.shape[0]
        paired = np.matmul(mats[1 : m - (m % 2) : 2], mats[0 : m - (m % 2) : 2])
        if m % 2:
            paired = np.concatenate([paired, mats[-1:]], axis=0)
        mats = paired
    return mats[0]


def _mm(a, b):
    """Componentwise 2x2 product for stacked matrices held as 4 arrays."""
    a11, a12, a21, a22 = a
    b11, b12, b21, b22 = b
    return (
        a11 * b11 + a12 * b21,
        a11 * b12 + a12 * b22,
        a21 * b11 + a22 * b21,
        a21 * b12 + a22 * b22,
    )


def _rotation_chunk_propagator(
    s_lo: float, s_hi: float, n_steps: int, a: float, sign: float
) -> np.ndarray:
    """One-shot propagator of dX/ds = (a/s) v(s) v(s)' X over [s_lo, s_hi].

    ``s`` is the (positive) attitude magnitude used as the clock, so the
    rotation has unit frequency regardless of how fast the attitude grows
    in real time.  Builds the per-step RK4 transition matrices in vectorized
    form and reduces them with an ordered pairwise product.
    """
    h = (s_hi - s_lo) / n_steps
    base = s_lo + h * np.arange(n_steps)

    def coeff(sv):
        c = np.cos(sv)
        sn = np.sin(sv)
        f = a / sv
        return (f * c * c, f * sign * c * sn, f * sign * c * sn, f * sn * sn)

    a1 = coeff(base)
    a2 = coeff(base + 0.5 * h)
    a3 = coeff(base + h)

    def plus_scaled(k, scale):
        # I + scale * K
        return (1.0 + scale * k[0], scale * k[1], scale * k[2], 1.0 + scale * k[3])

    k1 = a1
    k2 = _mm(a2, plus_scaled(k1, 0.5 * h))
    k3 = _mm(a2, plus_scaled(k2, 0.5 * h))
    k4 = _mm(a3, plus_scaled(k3, h))
    h6 = h / 6.0
    t11 = 1.0 + h6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    t12 = h6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    t21 = h6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    t22 = 1.0 + h6 * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
    mats = np.empty((n_steps, 2, 2))
    mats[:, 0, 0] = t11
    mats[:, 0, 1] = t12
    mats[:, 1, 0] = t21
    mats[:, 1, 1] = t22
    return _ordered_product(mats)


def propagate_fast_attitude(
    X0,
    theta0: float,
    rho_pos: float,
    rho_theta: float,
    t_end: float,
    n_checkpoints: int = 16,
    split: float = 50.0,
    step_t: float = 1e-3,
    step_s: float = 0.2,
):
    """Position trajectory when the attitude gain is destabilizing.

    theta(t) = theta0 exp(rho_theta t) is exact, so the position subsystem
    is linear time-varying.  Direct time stepping is used while the
    rotation is slow (|theta| < ``split``); beyond that the integration
    switches to the attitude clock, where the oscillation frequency is
    constant and a fixed step resolves it at any horizon.

    Returns (times, positions) sampled at ~n_checkpoints points including
    both endpoints.
    """
    if not rho_theta > 0.0:
        raise ValueError("this propagator is for growing attitude (rho_theta > 0)")
    X = np.asarray(X0, float).copy()
    out_t, out_X = [0.0], [X.copy()]

    s0 = abs(theta0)
    sign = 1.0 if theta0 >= 0.0 else -1.0
    t1 = t_end if s0 == 0.0 or s0 >= split else min(
        t_end, math.log(split / s0) / rho_theta
    )
    if s0 >= split:
        t1 = 0.0

    if t1 > 0.0:
        n_steps = max(1, int(math.ceil(t1 / step_t)))
        h = t1 / n_steps
        sample_every = max(1, n_steps // max(1, n_checkpoints // 2))

        def rhs(t, Xv):
            th = theta0 * math.exp(rho_theta * t)
            c, s = math.cos(th), math.sin(th)
            fwd = rho_pos * (c * Xv[0] + s * Xv[1])
            return np.array([c * fwd, s * fwd])

        t = 0.0
        for i in range(1, n_steps + 1):
            X = _rk4_step(rhs, t, X, h)
            t = i * h
            if i % sample_every == 0 or i == n_steps:
                out_t.append(t)
                out_X.append(X.copy())
    if t1 >= t_end:
        return np.array(out_t), np.array(out_X)

    # attitude-clock phase
    a = rho_pos / rho_theta
    s_start = s0 * math.exp(rho_theta * t1)
    s_end = s0 * math.exp(rho_theta * t_end)
    n_seg = max(1, n_checkpoints // 2)
    seg_bounds = np.exp(np.linspace(math.log(s_start), math.log(s_end), n_seg + 1))
    max_chunk = 200_000
    for lo, hi in zip(seg_bounds[:-1], seg_bounds[1:]):
        n_total = max(1, int(math.ceil((hi - lo) / step_s)))
        done = 0
        s_lo = lo
        while done < n_total:
            n = min(max_chunk, n_total - done)
            s_hi = lo + (hi - lo) * (done + n) / n_total
            M = _rotation_chunk_propagator(s_lo, s_hi, n, a, sign)
            X = M @ X
            s_lo = s_hi
            done += n
        out_t.append(math.log(hi / s0) / rho_theta)
        out_X.append(X.copy())
    return np.array(out_t), np.array(out_X)
