"""Runge-Kutta integration of the vector fields and simulation drivers."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .dynamics import (
    ProjectedState,
    hamiltonian,
    primary_body_states,
    system,
    velocity_to_momentum,
)
from .equilibria import PolygonConfig
from .errors import (
    AntipodalError,
    CollisionError,
    ConvergenceError,
    CurvedRNBPError,
    DomainError,
    SingularityError,
    StepUnderflow,
)
from .geometry import SpaceSign, geodesic_distance
from .regularization import (
    Chart,
    ChartKind,
    RegularizedState,
    chart_derivative,
    chart_map,
    chart_policy,
    default_delta_in,
    energy_constant,
    energy_from_hhat,
    from_chart,
    momentum_map,
    physical_energy,
    to_chart,
)

log = logging.getLogger(__name__)


class Method(str, enum.Enum):
    RK4_FIXED = "rk4_fixed"
    RK45_ADAPTIVE = "rk45_adaptive"


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    COLLISION_ERROR = "collision_error"
    ANTIPODAL_ERROR = "antipodal_error"
    STEP_UNDERFLOW = "step_underflow"
    MAX_STEPS = "max_steps"
    DOMAIN_EXIT = "domain_exit"
    # internal: a step callback asked to stop
    INTERRUPTED = "interrupted"

    @property
    def singular(self) -> bool:
        return self in (Termination.COLLISION_ERROR, Termination.ANTIPODAL_ERROR, Termination.STEP_UNDERFLOW)


_ERROR_FOR = {
    Termination.COLLISION_ERROR: CollisionError,
    Termination.ANTIPODAL_ERROR: AntipodalError,
    Termination.STEP_UNDERFLOW: StepUnderflow,
    Termination.DOMAIN_EXIT: DomainError,
}


def _termination_for(exc: Exception) -> Termination:
    if isinstance(exc, AntipodalError):
        return Termination.ANTIPODAL_ERROR
    if isinstance(exc, CollisionError):
        return Termination.COLLISION_ERROR
    if isinstance(exc, StepUnderflow):
        return Termination.STEP_UNDERFLOW
    return Termination.DOMAIN_EXIT


@dataclass(frozen=True)
class IntegratorSettings:
    method: Method = Method.RK45_ADAPTIVE
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    h_init: float = 1e-3
    h_min: float = 1e-11
    h_max: float = 0.05
    max_steps: int = 2_000_000

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (0.0 < self.h_min <= self.h_init <= self.h_max):
            raise DomainError("need 0 < h_min <= h_init <= h_max")
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise DomainError("tolerances must be positive")
        if self.max_steps < 1:
            raise DomainError("max_steps must be positive")

    def with_tol(self, tol: float) -> "IntegratorSettings":
        return replace(self, abs_tol=tol, rel_tol=tol)


@dataclass(frozen=True)
class Sample:
    t: float
    s: float
    chart: Optional[Chart]
    state: Any
    H: Optional[float] = None
    Hhat: Optional[float] = None


@dataclass(frozen=True)
class ChartSwitch:
    t: float
    s: float
    before: Chart
    after: Chart
    mismatch: float
    H_jump: float


@dataclass
class Trajectory:
    samples: list[Sample]
    termination: Termination = Termination.COMPLETED
    message: str = ""
    switches: list[ChartSwitch] = field(default_factory=list)
    C: Optional[float] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([smp.t for smp in self.samples])

    @property
    def fictitious_times(self) -> np.ndarray:
        return np.array([smp.s for smp in self.samples])

    @property
    def states(self) -> np.ndarray:
        return np.array([np.asarray(_as_vector(smp.state), float) for smp in self.samples])

    @property
    def final(self) -> Sample:
        return self.samples[-1]

    def raise_for_termination(self) -> None:
        exc = _ERROR_FOR.get(self.termination)
        if exc is not None:
            raise exc(self.message or self.termination.value)

    def energy_drift(self) -> float:
        hs = [smp.H for smp in self.samples if smp.H is not None and math.isfinite(smp.H)]
        if not hs:
            return math.nan
        return max(abs(h - hs[0]) for h in hs)

    def check_monotone(self) -> None:
        """Assert the clock invariants; raises ``AssertionError``."""
        ts = self.times
        assert np.all(np.diff(ts) > 0.0), "physical time must increase strictly"
        ss = self.fictitious_times
        assert np.all(np.diff(ss) > 0.0), "fictitious time must increase strictly"


def _as_vector(state):
    if isinstance(state, RegularizedState):
        return [state.w_c.real, state.w_c.imag, state.W_c.real, state.W_c.imag]
    return state


# ----------------------------------------------------------------------------
# steppers

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600,
    0.0,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)


def dopri_step(f, x, y, h, k1=None):
    """One Dormand-Prince step; returns ``(y_new, err_vector, k_last)``.

    ``k_last`` is the field at ``y_new`` (first-same-as-last).
    """
    ks = [f(x, y) if k1 is None else k1]
    for i in range(1, 7):
        a = _A[i]
        yi = y.copy()
        for j, aij in enumerate(a):
            if aij != 0.0:
                yi += (h * aij) * ks[j]
        ks.append(f(x + _C[i] * h, yi))
    y_new = y.copy()
    for j in range(6):
        if _B[j] != 0.0:
            y_new += (h * _B[j]) * ks[j]
    # ks[6] was evaluated at y + h * sum(A[6] k) which equals y_new
    err = np.zeros_like(y)
    for j in range(7):
        if _E[j] != 0.0:
            err += (h * _E[j]) * ks[j]
    return y_new, err, ks[6]


def rk4_step(f, x, y, h):
    k1 = f(x, y)
    k2 = f(x + h / 2, y + (h / 2) * k1)
    k3 = f(x + h / 2, y + (h / 2) * k2)
    k4 = f(x + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def _err_norm(err, y, y_new, settings):
    scale = settings.abs_tol + settings.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
    return math.sqrt(float(np.mean((err / scale) ** 2)))


@dataclass
class RawSolution:
    xs: list[float]
    ys: list[np.ndarray]
    termination: Termination
    message: str = ""

    def to_trajectory(self) -> Trajectory:
        return Trajectory(
            [Sample(x, x, None, y) for x, y in zip(self.xs, self.ys)],
            self.termination,
            self.message,
        )


def _solve(
    f: Callable,
    y0,
    x0: float,
    x1: float,
    settings: IntegratorSettings,
    *,
    stop: Optional[tuple[int, float]] = None,
    on_step: Optional[Callable[[float, np.ndarray], bool]] = None,
) -> RawSolution:
    """Core loop shared by all drivers.

    ``stop = (index, target)`` ends the run when component ``index`` (which
    must be nondecreasing) reaches ``target``; the last step is shortened so
    that it lands on ``target``. ``on_step`` is called after every accepted
    step and may return True to interrupt.
    """
    y = np.array(y0, dtype=float)
    x = float(x0)
    xs = [x]
    ys = [y.copy()]
    try:
        fy = f(x, y)
    except (SingularityError, DomainError) as exc:
        return RawSolution(xs, ys, _termination_for(exc), str(exc))
    if stop is not None and y[stop[0]] >= stop[1]:
        return RawSolution(xs, ys, Termination.COMPLETED)
    if settings.method is Method.RK4_FIXED:
        return _solve_fixed(f, y, x, x1, settings, xs, ys, stop, on_step)

    h = min(settings.h_init, settings.h_max)
    err_prev = 1e-4
    steps = 0
    while True:
        if x >= x1:
            return RawSolution(xs, ys, Termination.COMPLETED)
        if steps >= settings.max_steps:
            return RawSolution(xs, ys, Termination.MAX_STEPS, f"max_steps={settings.max_steps} reached")
        last = False
        if x + h >= x1:
            h = x1 - x
            last = True
        try:
            y_new, err, f_new = dopri_step(f, x, y, h, fy)
            en = _err_norm(err, y, y_new, settings)
            if not np.all(np.isfinite(y_new)):
                en = math.inf
        except (SingularityError, DomainError) as exc:
            # trial stage entered a singular set: retry with a smaller step
            h *= 0.25
            if h < settings.h_min:
                return RawSolution(xs, ys, _termination_for(exc), str(exc))
            continue
        if en > 1.0:
            h *= max(0.2, 0.9 * en**-0.2)
            if h < settings.h_min:
                return RawSolution(
                    xs, ys, Termination.STEP_UNDERFLOW, f"required step below h_min={settings.h_min} at x={x}"
                )
            continue
        if stop is not None and y_new[stop[0]] > stop[1]:
            y_new, f_new, h = _land(f, x, y, fy, h, stop)
            last = True
        x = x1 if last and stop is None else x + h
        y = y_new
        fy = f_new
        xs.append(x)
        ys.append(y.copy())
        steps += 1
        if last:
            return RawSolution(xs, ys, Termination.COMPLETED)
        if on_step is not None and on_step(x, y):
            return RawSolution(xs, ys, Termination.INTERRUPTED)
        fac = 0.9 * max(en, 1e-10) ** -0.17 * err_prev**0.04
        h = min(settings.h_max, h * min(10.0, max(0.2, fac)))
        err_prev = max(en, 1e-4)


def _land(f, x, y, fy, h, stop):
    """Shorten a step so that component ``stop[0]`` hits ``stop[1]``."""
    idx, target = stop
    g0 = y[idx] - target

    def resid(hh):
        return dopri_step(f, x, y, hh, fy)[0][idx] - target

    if g0 >= 0.0:
        hh = 0.0
    else:
        hh = brentq(resid, 0.0, h, xtol=1e-15 * max(1.0, h), rtol=4 * np.finfo(float).eps, maxiter=200)
    y_new, _, f_new = dopri_step(f, x, y, hh, fy)
    y_new[idx] = target
    return y_new, f_new, hh


def _solve_fixed(f, y, x, x1, settings, xs, ys, stop, on_step):
    h = settings.h_init
    nsteps = int(math.ceil((x1 - x) / h - 1e-12)) if math.isfinite(x1) else settings.max_steps
    if nsteps > settings.max_steps:
        nsteps = settings.max_steps
    x0 = x
    for i in range(1, nsteps + 1):
        xn = min(x1, x0 + i * h)
        try:
            y = rk4_step(f, x, y, xn - x)
        except (SingularityError, DomainError) as exc:
            return RawSolution(xs, ys, _termination_for(exc), str(exc))
        x = xn
        xs.append(x)
        ys.append(y.copy())
        if stop is not None and y[stop[0]] >= stop[1]:
            return RawSolution(xs, ys, Termination.COMPLETED)
        if on_step is not None and on_step(x, y):
            return RawSolution(xs, ys, Termination.INTERRUPTED)
    if x < x1:
        return RawSolution(xs, ys, Termination.MAX_STEPS)
    return RawSolution(xs, ys, Termination.COMPLETED)


def integrate(
    field: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: Sequence[float],
    settings: Optional[IntegratorSettings] = None,
    **kwargs,
) -> Trajectory:
    """Integrate ``y' = field(x, y)`` over ``span``, recording every accepted step.

    Field errors never propagate as exceptions; they end the run with the
    matching ``Trajectory.termination``.
    """
    settings = settings or IntegratorSettings()
    t0, t1 = span
    return _solve(field, y0, t0, t1, settings, **kwargs).to_trajectory()


# ----------------------------------------------------------------------------
# primaries


def primaries_initial_vector(config: PolygonConfig) -> np.ndarray:
    states = primary_body_states(config, 0.0)
    n = config.n
    y = np.empty(6 * n)
    for i, st in enumerate(states):
        y[3 * i : 3 * i + 3] = st.q
        y[3 * n + 3 * i : 3 * n + 3 * i + 3] = st.qdot
    return y


def simulate_primaries(
    config: PolygonConfig,
    t_max: float,
    settings: Optional[IntegratorSettings] = None,
) -> Trajectory:
    """Integrate the full n-body system from the relative-equilibrium data."""
    settings = settings or IntegratorSettings()
    sigma = config.sigma
    n = config.n
    deriv = kernels.nbody_deriv

    def f(t, y):
        return deriv(sigma, n, y)

    return integrate(f, primaries_initial_vector(config), (0.0, t_max), settings)


def mutual_distances(space, y: np.ndarray, n: int) -> np.ndarray:
    space = SpaceSign.parse(space)
    qs = [y[3 * i : 3 * i + 3] for i in range(n)]
    return np.array([geodesic_distance(space, qs[i], qs[j]) for i in range(n) for j in range(i + 1, n)])


def rigidity_deviation(config: PolygonConfig, traj: Trajectory) -> float:
    """Largest change of any mutual geodesic distance along ``traj``."""
    d0 = mutual_distances(config.space, traj.samples[0].state, config.n)
    return max(
        float(np.max(np.abs(mutual_distances(config.space, smp.state, config.n) - d0))) for smp in traj.samples
    )


# ----------------------------------------------------------------------------
# restricted particle


def _identity_field(config):
    f = system(config).ham_field

    def field(t, y):
        return f(y)

    return field


def _chart_field(config, chart, C):
    kind, k = chart.kernel_args
    f = system(config).reg_field

    def field(s, y):
        return f(kind, k, y, C)

    return field


def _z_of(chart: Chart, y) -> complex:
    if chart.kind is ChartKind.IDENTITY:
        return complex(y[0], y[1])
    return chart_map(chart, complex(y[0], y[1]))


def _physical_Z(chart: Chart, y) -> complex:
    if chart.kind is ChartKind.IDENTITY:
        return complex(y[2], y[3])
    return momentum_map(chart, complex(y[0], y[1]), complex(y[2], y[3]))


def _make_sample(config, chart, C, s, y, t=None) -> Sample:
    if chart.kind is ChartKind.IDENTITY:
        st = ProjectedState(*map(float, y[:4]))
        t = s if t is None else t
        return Sample(float(t), float(s), chart, st, hamiltonian(config, st), None)
    rs = RegularizedState(complex(y[0], y[1]), complex(y[2], y[3]), C, float(s), float(y[4]))
    kind, k = chart.kernel_args
    hhat = system(config).reg_value(kind, k, y, C)
    j2 = abs(chart_derivative(chart, rs.w_c)) ** 2
    H = energy_from_hhat(C, hhat, j2)
    return Sample(float(y[4]), float(s), chart, rs, H, hhat)


def sample_physical_state(smp: Sample) -> ProjectedState:
    """Projected ``(u, v, p_u, p_v)`` of any recorded sample."""
    if isinstance(smp.state, RegularizedState):
        return from_chart(smp.chart, smp.state)
    return smp.state


def sample_position(smp: Sample) -> complex:
    if isinstance(smp.state, RegularizedState):
        return chart_map(smp.chart, smp.state.w_c)
    return complex(smp.state.u, smp.state.v)


class _Restricted:
    """Segmented integration of the restricted particle with chart switching."""

    def __init__(self, config, settings, auto, delta_in):
        self.config = config
        self.settings = settings
        self.auto = auto
        self.delta_in = default_delta_in(config) if delta_in is None else delta_in
        self.hints: dict[str, complex] = {}

    def run(self, chart, C, state_phys, t0, s0, t_target, samples, switches, first_rs=None):
        """Advance from time ``t0`` to ``t_target``; returns (termination, msg, chart, rs_or_state)."""
        cfg = self.config
        t, s = t0, s0
        cur = chart
        phys = state_phys
        rs = first_rs
        while True:
            if cur.kind is ChartKind.IDENTITY:
                y0 = np.array(phys, dtype=float)
                field = _identity_field(cfg)
                on_step = self._watch(cur, cfg) if self.auto else None
                sol = _solve(field, y0, t, t_target, self.settings, on_step=on_step)
                for x, y in zip(sol.xs[1:], sol.ys[1:]):
                    smp = _make_sample(cfg, cur, C, s + (x - t), y, x)
                    samples.append(smp)
                if len(sol.xs) > 1:
                    s = s + (sol.xs[-1] - t)
                    t = sol.xs[-1]
                y_last = sol.ys[-1]
                phys = ProjectedState(*map(float, y_last[:4]))
                end_rs = None
            else:
                if rs is None:
                    rs = to_chart(cfg, cur, phys, C, s=s, t=t, branch_hint=self.hints.get(cur.label))
                y0 = rs.vector()
                field = _chart_field(cfg, cur, C)
                on_step = self._watch(cur, cfg) if self.auto else None
                sol = _solve(field, y0, s, math.inf, self.settings, stop=(4, t_target), on_step=on_step)
                for x, y in zip(sol.xs[1:], sol.ys[1:]):
                    samples.append(_make_sample(cfg, cur, C, x, y))
                y_last = sol.ys[-1]
                s = sol.xs[-1]
                t = float(y_last[4])
                end_rs = RegularizedState(complex(y_last[0], y_last[1]), complex(y_last[2], y_last[3]), C, s, t)
                self.hints[cur.label] = end_rs.w_c
                rs = None
            if sol.termination is not Termination.INTERRUPTED:
                return sol.termination, sol.message, cur, (end_rs if end_rs is not None else phys)
            # chart switch at the last accepted step
            z = _z_of(cur, y_last)
            new = chart_policy(cfg, z, cur, self.delta_in)
            Z = _physical_Z(cur, y_last)
            phys = ProjectedState(z.real, z.imag, Z.real, Z.imag)
            H_old = samples[-1].H if samples else math.nan
            if new.kind is ChartKind.IDENTITY:
                back = phys
                rs = None
                H_new = hamiltonian(cfg, phys)
            else:
                rs = to_chart(cfg, new, phys, C, s=s, t=t, branch_hint=self.hints.get(new.label))
                back = from_chart(new, rs)
                H_new = physical_energy(cfg, new, rs)
            mismatch = abs(complex(back[0], back[1]) - z) + abs(complex(back[2], back[3]) - Z)
            switches.append(ChartSwitch(t, s, cur, new, mismatch, abs(H_new - H_old)))
            log.debug("chart switch %s -> %s at t=%.6g", cur.label, new.label, t)
            cur = new

    def _watch(self, chart, cfg):
        delta_in = self.delta_in

        def on_step(x, y):
            z = _z_of(chart, y)
            return chart_policy(cfg, z, chart, delta_in) != chart

        return on_step


def _start_chart(config, policy, z0, delta_in):
    if isinstance(policy, Chart):
        return policy, False
    if policy == "auto":
        return chart_policy(config, z0, Chart.identity(), delta_in), True
    if isinstance(policy, str):
        return Chart.parse(config, policy), False
    raise DomainError(f"unknown chart policy {policy!r}")


def simulate_restricted(
    config: PolygonConfig,
    s0,
    t_max: float,
    policy: Any = "auto",
    settings: Optional[IntegratorSettings] = None,
    *,
    checkpoints: Optional[Sequence[float]] = None,
    delta_in: Optional[float] = None,
    branch_hint: Optional[complex] = None,
) -> Trajectory:
    """Integrate the massless particle from ``s0`` up to physical time ``t_max``.

    ``policy`` is ``"auto"`` (identity chart with local charts near the
    primaries), a chart label (``"identity"``, ``"local:K"``, ``"global"``)
    or a :class:`Chart`. Every time in ``checkpoints`` is hit exactly by a
    sample.
    """
    settings = settings or IntegratorSettings()
    s0 = ProjectedState(*map(float, s0))
    C = energy_constant(config, s0)
    runner = _Restricted(config, settings, False, delta_in)
    chart, auto = _start_chart(config, policy, complex(s0.u, s0.v), runner.delta_in)
    runner.auto = auto
    if branch_hint is not None:
        runner.hints[chart.label] = branch_hint
    samples: list[Sample] = []
    switches: list[ChartSwitch] = []
    rs = None
    if chart.regularizing:
        rs = to_chart(config, chart, s0, C, branch_hint=branch_hint)
        samples.append(_make_sample(config, chart, C, 0.0, rs.vector()))
    else:
        samples.append(_make_sample(config, chart, C, 0.0, np.array(s0)))
    targets = sorted(set(float(c) for c in (checkpoints or ()) if 0.0 < c < t_max)) + [float(t_max)]
    phys = s0
    term = Termination.COMPLETED
    msg = ""
    for target in targets:
        last = samples[-1]
        term, msg, chart, end = runner.run(chart, C, phys, last.t, last.s, target, samples, switches, rs)
        if isinstance(end, RegularizedState):
            rs = end
            phys = None
        else:
            rs = None
            phys = end
        if term is not Termination.COMPLETED:
            break
    return Trajectory(samples, term, msg, switches, C)


# ----------------------------------------------------------------------------
# collision experiment


def locate_minimum(field, x, y, h, fn, tol=1e-15):
    """Refine a sign change of ``fn(y, field(y))`` inside one accepted step.

    Returns ``(x*, y*)``; the sub-steps are single Dormand-Prince steps from
    ``(x, y)``, which are at least as accurate as the accepted step.
    """

    def g(hh):
        yy = dopri_step(field, x, y, hh)[0]
        return fn(yy, field(x + hh, yy))

    g0 = g(0.0)
    g1 = g(h)
    if g0 == 0.0:
        return x, y.copy()
    if g0 * g1 > 0.0:
        raise ConvergenceError("no sign change inside the step")
    hh = brentq(g, 0.0, h, xtol=tol * max(1.0, h), maxiter=200)
    return x + hh, dopri_step(field, x, y, hh)[0]


def _radial(c):
    def fn(y, dy):
        w = complex(y[0], y[1]) - c
        dw = complex(dy[0], dy[1])
        return (w.conjugate() * dw).real

    return fn


def _impact(c, y, dy):
    w = complex(y[0], y[1]) - c
    dw = complex(dy[0], dy[1])
    return (w.conjugate() * dw).imag / abs(dw)


def closest_approach(config, traj: Trajectory, chart: Chart, c: complex, settings=None):
    """Exact closest approach to the chart point ``c`` within the samples in ``chart``.

    Returns ``(sample_index, s*, y*, field(y*))`` or ``None``.
    """
    fld = _chart_field(config, chart, traj.C)
    fn = _radial(c)
    best = None
    for i in range(len(traj.samples) - 1):
        a, b = traj.samples[i], traj.samples[i + 1]
        if a.chart != chart or b.chart != chart:
            continue
        ya = np.array([*_as_vector(a.state), a.t])
        yb = np.array([*_as_vector(b.state), b.t])
        fa = fn(ya, fld(a.s, ya))
        fb = fn(yb, fld(b.s, yb))
        if fa < 0.0 <= fb:
            xs, ys = locate_minimum(fld, a.s, ya, b.s - a.s, fn)
            best = (i, xs, ys, fld(xs, ys))
            break
    return best


@dataclass
class CollisionReport:
    space: str
    n: int
    r: float
    k: int
    offset: float
    speed: float
    chart: str
    tangential: float
    aimed: bool
    traversed: bool
    min_chart_distance: float
    dt_ds_at_collision: float
    time_of_collision: float
    max_field_norm: float
    H_before: float
    H_after: float
    H_continuity_error: float
    Hhat_max: float
    switch_count: int
    max_switch_mismatch: float
    regularized_termination: str
    control_termination: str
    control_min_distance: float
    final_state_gap: float
    success: bool
    regularized: Optional[Trajectory] = field(default=None, repr=False)
    control: Optional[Trajectory] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {}
        for key, value in self.__dict__.items():
            if key in ("regularized", "control"):
                continue
            out[key] = value
        return out


def _aim_state(config, k, offset, speed, tangential):
    wk = config.primaries.w[k - 1]
    e = wk / abs(wk)
    p = wk + offset * e
    vel = -speed * e + tangential * 1j * e
    return velocity_to_momentum(config, (p.real, p.imag), vel.real, vel.imag)


def _shoot(config, k, offset, speed, settings):
    """Tangential velocity that turns the aimed orbit into an exact collision."""
    chart = Chart.local(config, k)
    fld_cache = {}

    def impact(tau):
        s0 = _aim_state(config, k, offset, speed, tau)
        C = energy_constant(config, s0)
        rs = to_chart(config, chart, s0, C)
        fld = _chart_field(config, chart, C)
        fn = _radial(0j)
        stopped = {}

        def on_step(x, y):
            if fn(y, fld(x, y)) >= 0.0:
                stopped["hit"] = True
                return True
            return False

        sol = _solve(fld, rs.vector(), 0.0, 1e3, settings, on_step=on_step)
        if "hit" not in stopped or len(sol.xs) < 2:
            raise ConvergenceError(f"aimed orbit never approached primary {k} (tau={tau})")
        xa, ya = sol.xs[-2], sol.ys[-2]
        xs, ys = locate_minimum(fld, xa, ya, sol.xs[-1] - xa, fn)
        b = _impact(0j, ys, fld(xs, ys))
        fld_cache[tau] = (float(ys[4]), b)
        return b

    tau = 0.25 * max(speed, 0.1)
    lo, hi = -tau, tau
    blo, bhi = impact(lo), impact(hi)
    for _ in range(30):
        if blo * bhi <= 0.0:
            break
        lo, hi = 2 * lo, 2 * hi
        blo, bhi = impact(lo), impact(hi)
    else:
        raise ConvergenceError("could not bracket a collision orbit")
    root = brentq(impact, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    t_col = fld_cache.get(root, (None,))[0]
    if t_col is None:
        impact(root)
        t_col = fld_cache[root][0]
    return root, t_col


TRAVERSAL_TOL = 1e-8
FROZEN_CLOCK_TOL = 1e-12


def collision_experiment(
    config: PolygonConfig,
    k: int = 1,
    offset: float = 0.1,
    speed: float = 1.0,
    settings: Optional[IntegratorSettings] = None,
    *,
    chart: Any = "auto",
    tangential: float = 0.0,
    aim: bool = True,
    t_max: Optional[float] = None,
) -> CollisionReport:
    """Send the particle into primary ``k`` and compare regularized vs direct runs.

    The particle starts at ``w_k + offset e`` (``e`` the outward unit vector
    through ``w_k``) with velocity ``-speed e + tau i e``. With ``aim`` the
    tangential component ``tau`` is solved for so that the orbit hits the
    primary exactly; otherwise ``tau = tangential``.
    """
    settings = settings or IntegratorSettings()
    if not 1 <= k <= config.n:
        raise DomainError(f"primary index must be in 1..{config.n}")
    delta_in = default_delta_in(config)
    if not 0.0 < offset < 10.0 * delta_in:
        raise DomainError(f"offset must lie in (0, {10 * delta_in:.4g})")
    if speed < 0.0:
        raise DomainError("speed must be nonnegative")
    if aim:
        tau, t_col = _shoot(config, k, offset, speed, settings)
    else:
        tau, t_col = tangential, None
    s0 = _aim_state(config, k, offset, speed, tau)
    if t_max is None:
        t_max = 2.5 * t_col if t_col else 1.0

    reg = simulate_restricted(config, s0, t_max, chart, settings, delta_in=delta_in)
    ctrl = simulate_restricted(config, s0, t_max, "identity", settings)
    wk = config.primaries.w[k - 1]

    traversed = False
    min_chart = math.inf
    dtds = math.nan
    t_hit = math.nan
    max_field = 0.0
    reg_charts = []
    for smp in reg.samples:
        if smp.chart.regularizing and smp.chart not in reg_charts:
            reg_charts.append(smp.chart)
    for ch in reg_charts:
        c = 0j if ch.kind is ChartKind.LOCAL else wk
        if ch.kind is ChartKind.LOCAL and ch.k != k:
            continue
        found = closest_approach(config, reg, ch, c)
        fld = _chart_field(config, ch, reg.C)
        for smp in reg.samples:
            if smp.chart == ch:
                y = np.array([*_as_vector(smp.state), smp.t])
                max_field = max(max_field, float(np.linalg.norm(fld(smp.s, y)[:4])))
        if found is None:
            continue
        _, xs, ys, dys = found
        d = abs(complex(ys[0], ys[1]) - c)
        if d < min_chart:
            min_chart = d
            dtds = float(dys[4])
            t_hit = float(ys[4])
            max_field = max(max_field, float(np.linalg.norm(dys[:4])))
    after = [smp for smp in reg.samples if smp.t > t_hit] if math.isfinite(t_hit) else []
    traversed = (
        min_chart < TRAVERSAL_TOL
        and dtds < FROZEN_CLOCK_TOL
        and len(after) > 0
        and reg.termination is Termination.COMPLETED
    )
    H_before = hamiltonian(config, sample_physical_state(reg.samples[0]))
    H_after = hamiltonian(config, sample_physical_state(reg.samples[-1]))
    hhat = [abs(smp.Hhat) for smp in reg.samples if smp.Hhat is not None]
    ctrl_min = min(abs(sample_position(smp) - wk) for smp in ctrl.samples)
    H_err = abs(H_after - H_before)
    gap = math.nan
    if reg.termination is Termination.COMPLETED and ctrl.termination is Termination.COMPLETED:
        a = np.array(sample_physical_state(reg.final))
        gap = float(np.max(np.abs(a - np.array(ctrl.final.state))))
    success = (
        traversed
        and ctrl.termination is Termination.STEP_UNDERFLOW
        and ctrl_min > 1e-6
        and H_err < 1e-6
    )
    label = chart.label if isinstance(chart, Chart) else str(chart)
    return CollisionReport(
        space=config.space.label,
        n=config.n,
        r=config.r,
        k=k,
        offset=offset,
        speed=speed,
        chart=label,
        tangential=tau,
        aimed=aim,
        traversed=traversed,
        min_chart_distance=min_chart,
        dt_ds_at_collision=dtds,
        time_of_collision=t_hit,
        max_field_norm=max_field,
        H_before=H_before,
        H_after=H_after,
        H_continuity_error=H_err,
        Hhat_max=max(hhat) if hhat else 0.0,
        switch_count=len(reg.switches),
        max_switch_mismatch=max((sw.mismatch for sw in reg.switches), default=0.0),
        regularized_termination=reg.termination.value,
        control_termination=ctrl.termination.value,
        control_min_distance=ctrl_min,
        final_state_gap=gap,
        success=success,
        regularized=reg,
        control=ctrl,
    )
