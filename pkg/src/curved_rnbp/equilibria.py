"""Regular-polygon relative equilibria of n unit masses.

The primaries sit on a circle of Euclidean radius ``r`` at common height
``zeta`` and rotate rigidly about the z-axis with angular velocity ``omega``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

from .errors import DomainError
from .geometry import AmbientPoint, SpaceSign, dot

_TWO_PI = 2.0 * math.pi


def _check_radius(space: SpaceSign, r: float) -> None:
    if not math.isfinite(r) or r <= 0.0:
        raise DomainError(f"ring radius must be positive, got {r!r}")
    if space is SpaceSign.SPHERE and r >= 1.0:
        raise DomainError(
            f"ring radius on s2 must satisfy 0 < r < 1, got {r!r} "
            "(the equator r = 1 is built by equator_omega)"
        )


def height(space, r: float) -> float:
    space = SpaceSign.parse(space)
    return math.sqrt(1.0 - r * r) if space is SpaceSign.SPHERE else math.sqrt(1.0 + r * r)


def omega_squared(space, n: int, r: float) -> float:
    """Squared angular velocity of the n-gon relative equilibrium.

    Sums over the pairs ``(i, i +- j)`` of the polygon; for even ``n`` the
    diametrically opposite body contributes the closed-form extra term.
    """
    space = SpaceSign.parse(space)
    if int(n) != n or n < 2:
        raise DomainError(f"need at least two primaries, got n={n!r}")
    n = int(n)
    _check_radius(space, r)
    r2 = r * r
    total = 0.0
    for j in range(1, (n + 1) // 2):
        c = math.cos(_TWO_PI * j / n)
        if space is SpaceSign.SPHERE:
            base = 1.0 - (r2 * c + 1.0 - r2) ** 2
        else:
            base = -1.0 + (r2 * c - 1.0 - r2) ** 2
        total += (1.0 - c) / base**1.5
    total *= 2.0
    if n % 2 == 0:
        if space is SpaceSign.SPHERE:
            total += 1.0 / (4.0 * r**3 * (1.0 - r2) ** 1.5)
        else:
            total += 1.0 / (4.0 * r**3 * (1.0 + r2) ** 1.5)
    return total


@dataclass(frozen=True)
class ProjectedPrimaries:
    """Stereographic images of the primaries and of their exterior partners."""

    w: tuple[complex, ...]
    w_hat: tuple[complex, ...]


@dataclass(frozen=True)
class PolygonConfig:
    """Immutable description of the primary system.

    Build instances with :func:`polygon` or :func:`equator_omega`; the
    constructor validates but does not compute ``omega``.
    """

    space: SpaceSign
    n: int
    r: float
    zeta: float
    omega: float
    equator: bool = False
    _primaries: ProjectedPrimaries = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "space", SpaceSign.parse(self.space))
        s = self.space
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"need at least two primaries, got n={self.n!r}")
        if self.equator:
            if s is not SpaceSign.SPHERE or self.n % 2 == 0:
                raise DomainError("equatorial polygons exist only on s2 with odd n")
            if abs(self.r - 1.0) > 1e-12 or abs(self.zeta) > 1e-12:
                raise DomainError("equatorial polygon requires r = 1 and zeta = 0")
        else:
            _check_radius(s, self.r)
            if s is SpaceSign.SPHERE:
                resid = self.r**2 + self.zeta**2 - 1.0
            else:
                resid = self.zeta**2 - self.r**2 - 1.0
            if abs(resid) > 1e-12 or self.zeta <= 0.0:
                raise DomainError(f"height {self.zeta!r} inconsistent with r={self.r!r}")
        object.__setattr__(self, "_primaries", _build_primaries(self))

    @property
    def sigma(self) -> int:
        return self.space.sigma

    @property
    def centers(self) -> tuple[complex, ...]:
        """``k_i + i h_i``: unprojected ring positions as complex numbers."""
        return tuple(self.r * cmath.exp(1j * _TWO_PI * i / self.n) for i in range(self.n))

    @property
    def primaries(self) -> ProjectedPrimaries:
        return self._primaries

    def with_omega(self, omega: float) -> "PolygonConfig":
        return PolygonConfig(self.space, self.n, self.r, self.zeta, omega, self.equator)

    @property
    def period(self) -> float:
        return _TWO_PI / abs(self.omega) if self.omega else math.inf


def _build_primaries(cfg: PolygonConfig) -> ProjectedPrimaries:
    zeta = cfg.zeta
    w = []
    w_hat = []
    for c in cfg.centers:
        w.append(c / (1.0 + zeta))
        w_hat.append(-c / (1.0 - zeta))
    return ProjectedPrimaries(tuple(w), tuple(w_hat))


def polygon(space, n: int, r: float, omega_sign: int = 1) -> PolygonConfig:
    """Relative equilibrium with ``omega = +-sqrt(omega_squared)``."""
    space = SpaceSign.parse(space)
    if omega_sign not in (1, -1):
        raise DomainError(f"omega_sign must be +1 or -1, got {omega_sign!r}")
    om = omega_sign * math.sqrt(omega_squared(space, n, r))
    return PolygonConfig(space, int(n), float(r), height(space, r), om)


def equator_omega(n: int, omega: float) -> PolygonConfig:
    """Equatorial n-gon on the sphere; any angular velocity works for odd n."""
    if int(n) != n or n < 3 or n % 2 == 0:
        raise DomainError(
            f"equatorial polygon needs odd n >= 3, got {n!r} "
            "(even n places antipodal primaries)"
        )
    return PolygonConfig(SpaceSign.SPHERE, int(n), 1.0, 0.0, float(omega), equator=True)


def primary_positions(config: PolygonConfig) -> list[AmbientPoint]:
    """Primaries in the rotating frame."""
    return [AmbientPoint(c.real, c.imag, config.zeta) for c in config.centers]


def primary_trajectory(config: PolygonConfig, t: float) -> list[AmbientPoint]:
    """Primaries in the inertial frame at time ``t``."""
    rot = cmath.exp(1j * config.omega * t)
    return [AmbientPoint((c * rot).real, (c * rot).imag, config.zeta) for c in config.centers]


def primary_velocities(config: PolygonConfig, t: float = 0.0) -> list[tuple[float, float, float]]:
    om = config.omega
    return [(-om * q.y, om * q.x, 0.0) for q in primary_trajectory(config, t)]


def projected_primaries(config: PolygonConfig) -> ProjectedPrimaries:
    return config.primaries


def residual_check(config: PolygonConfig) -> float:
    """Max norm of ``q''_i - F_i(q, q')`` for the rigid-rotation ansatz at t=0."""
    space = config.space
    s = space.sigma
    qs = primary_trajectory(config, 0.0)
    vs = primary_velocities(config, 0.0)
    om2 = config.omega**2
    worst = 0.0
    for i, qi in enumerate(qs):
        vv = dot(space, vs[i], vs[i])
        rhs = [-s * vv * qi[a] for a in range(3)]
        for j, qj in enumerate(qs):
            if j == i:
                continue
            c = dot(space, qi, qj)
            denom = (s - s * c * c) ** 1.5
            for a in range(3):
                rhs[a] += (qj[a] - s * c * qi[a]) / denom
        acc = (-om2 * qi.x, -om2 * qi.y, 0.0)
        worst = max(worst, math.sqrt(sum((acc[a] - rhs[a]) ** 2 for a in range(3))))
    return worst
