"""Vector fields and energies of the restricted problem.

The massless particle is described either in the inertial ambient frame
(``BodyState``) or by canonical stereographic coordinates in the frame
co-rotating with the primaries (``ProjectedState``). The potential ``U`` is
the force function ``sum_i cotn(d(q, Q_i))``; the Hamiltonian is

    H = (1 + sigma rho^2)^2 / 8 |p|^2 + omega (v p_u - u p_v) - U(u, v).

The complex Hamiltonian ``H_c`` uses ``z = u + iv``, ``Z = p_u + i p_v`` and
equals ``2 H``.
"""

from __future__ import annotations

import functools
import math
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .equilibria import PolygonConfig, primary_trajectory
from .errors import AntipodalError, CollisionError, DomainError
from .geometry import PlanePoint, SpaceSign, conformal_factor, dot, unproject, unproject_jacobian


class ProjectedState(NamedTuple):
    u: float
    v: float
    p_u: float
    p_v: float

    def to_complex(self) -> "ComplexState":
        return ComplexState(complex(self.u, self.v), complex(self.p_u, self.p_v))

    @property
    def position(self) -> PlanePoint:
        return PlanePoint(self.u, self.v)


class ComplexState(NamedTuple):
    z_c: complex
    Z_c: complex

    def to_real(self) -> ProjectedState:
        return ProjectedState(self.z_c.real, self.z_c.imag, self.Z_c.real, self.Z_c.imag)


class BodyState(NamedTuple):
    q: tuple[float, float, float]
    qdot: tuple[float, float, float]


@functools.lru_cache(maxsize=64)
def system(config: PolygonConfig) -> "kernels.System":
    """Kernel object for ``config`` (cached; configs are immutable)."""
    return kernels.System(config.sigma, config.omega, config.zeta, config.r, config.centers)


# ----------------------------------------------------------------------------
# ambient n-body equations


def nbody_field(space, states: Sequence[BodyState]) -> list[np.ndarray]:
    """Accelerations of unit-mass bodies on the model surface."""
    space = SpaceSign.parse(space)
    nb = len(states)
    y = np.empty(6 * nb)
    for i, st in enumerate(states):
        y[3 * i : 3 * i + 3] = st.q
        y[3 * nb + 3 * i : 3 * nb + 3 * i + 3] = st.qdot
    d = kernels.nbody_deriv(space.sigma, nb, y)
    return [np.asarray(d[3 * nb + 3 * i : 3 * nb + 3 * i + 3]) for i in range(nb)]


def restricted_field(config: PolygonConfig, state: BodyState, t: float = 0.0) -> np.ndarray:
    """Inertial acceleration of the massless particle at time ``t``."""
    y = np.concatenate([np.asarray(state.q, float), np.asarray(state.qdot, float)])
    return system(config).restricted_deriv(t, y)[3:]


# ----------------------------------------------------------------------------
# projected rotating-frame Hamiltonian


def pullback_potential(config: PolygonConfig, p) -> float:
    """``U(u, v)``: cotangent potential of the primaries at ``unproject(p)``."""
    return system(config).potential(float(p[0]), float(p[1]))


def centrifugal_potential(config: PolygonConfig, p) -> float:
    u, v = p
    rho2 = u * u + v * v
    denom = 1.0 + config.sigma * rho2
    if denom <= 0.0:
        raise DomainError("outside the Poincare disk")
    return 2.0 * config.omega**2 * rho2 / denom**2


def effective_potential(config: PolygonConfig, p) -> float:
    """Centrifugal term plus gravitational potential in the rotating frame."""
    return centrifugal_potential(config, p) + pullback_potential(config, p)


def hamiltonian(config: PolygonConfig, s) -> float:
    return system(config).ham_value(s)


def hamiltonian_field(config: PolygonConfig, s) -> np.ndarray:
    """``(du/dt, dv/dt, dp_u/dt, dp_v/dt)`` from the analytic gradient of ``H``."""
    return system(config).ham_field(s)


def velocity_to_momentum(config: PolygonConfig, p, udot: float, vdot: float) -> ProjectedState:
    u, v = float(p[0]), float(p[1])
    lam = conformal_factor(config.space, (u, v))
    om = config.omega
    return ProjectedState(u, v, lam * (udot - om * v), lam * (vdot + om * u))


def momentum_to_velocity(config: PolygonConfig, s) -> tuple[float, float]:
    u, v, pu, pv = s
    lam = conformal_factor(config.space, (u, v))
    om = config.omega
    return pu / lam + om * v, pv / lam - om * u


# ----------------------------------------------------------------------------
# complex form


def potential_closed_form(config: PolygonConfig, z_c: complex) -> float:
    """``U`` written with the factored denominators ``r |z - w_j| |z - w_hat_j|``."""
    s = config.sigma
    z_c = complex(z_c)
    rho2 = abs(z_c) ** 2
    if s < 0 and rho2 >= 1.0:
        raise DomainError("outside the Poincare disk")
    prim = config.primaries
    total = 0.0
    for j, cj in enumerate(config.centers):
        a = abs(z_c - prim.w[j])
        b = abs(z_c - prim.w_hat[j])
        if (config.r * a * b / (1.0 + s * rho2)) ** 2 <= kernels.EPS_SING:
            if b < a:
                raise AntipodalError(f"antipodal to primary {j + 1}")
            raise CollisionError(f"collision with primary {j + 1}")
        num = (cj.real * (z_c + z_c.conjugate()) - 1j * cj.imag * (z_c - z_c.conjugate())).real
        num += s * config.zeta * (1.0 - s * rho2)
        total += s * num / (config.r * a * b)
    return total


def complex_hamiltonian(config: PolygonConfig, cs: ComplexState) -> float:
    z_c, Z_c = complex(cs[0]), complex(cs[1])
    a = 1.0 + config.sigma * abs(z_c) ** 2
    rot = 2.0 * config.omega * (z_c * Z_c.conjugate()).imag
    return a * a / 4.0 * abs(Z_c) ** 2 + rot - 2.0 * potential_closed_form(config, z_c)


# ----------------------------------------------------------------------------
# frame conversions


def projected_to_inertial(config: PolygonConfig, s, t: float = 0.0) -> BodyState:
    """Ambient inertial position/velocity of a rotating-frame projected state."""
    u, v = s[0], s[1]
    udot, vdot = momentum_to_velocity(config, s)
    q = unproject(config.space, (u, v))
    du, dv = unproject_jacobian(config.space, (u, v))
    qd_rot = [du[a] * udot + dv[a] * vdot for a in range(3)]
    om = config.omega
    qd = (qd_rot[0] - om * q[1], qd_rot[1] + om * q[0], qd_rot[2])
    ca, sa = math.cos(om * t), math.sin(om * t)
    qi = (ca * q[0] - sa * q[1], sa * q[0] + ca * q[1], q[2])
    qdi = (ca * qd[0] - sa * qd[1], sa * qd[0] + ca * qd[1], qd[2])
    return BodyState(qi, qdi)


def inertial_to_rotating_position(config: PolygonConfig, q, t: float) -> tuple[float, float, float]:
    om = config.omega
    ca, sa = math.cos(om * t), math.sin(om * t)
    return (ca * q[0] + sa * q[1], -sa * q[0] + ca * q[1], q[2])


def tangency_residuals(space, state: BodyState) -> tuple[float, float]:
    """``(|q.q - sigma|, |q.qdot|)`` for a body state."""
    space = SpaceSign.parse(space)
    return abs(dot(space, state.q, state.q) - space.sigma), abs(dot(space, state.q, state.qdot))


def primary_body_states(config: PolygonConfig, t: float = 0.0) -> list[BodyState]:
    om = config.omega
    return [BodyState(tuple(q), (-om * q[1], om * q[0], 0.0)) for q in primary_trajectory(config, t)]
