"""Model surfaces of curvature +1 and -1 and their stereographic charts.

The sphere S^2 is the unit sphere of R^3 with the Euclidean product; the
hyperbolic plane H^2 is the upper sheet of ``x^2 + y^2 - z^2 = -1`` with the
Lorentzian product. Both are projected from ``(0, 0, -1)`` onto the plane
(S^2) or the open unit disk (H^2, Poincare model).
"""

from __future__ import annotations

import enum
import numbers
import math
from typing import NamedTuple

from .errors import DomainError, SingularityError

#: Surface-membership tolerance for ``q . q = sigma``.
SURFACE_TOL = 1e-12
#: Slack allowed when clamping inner products before ``arccos``/``arccosh``.
CLAMP_TOL = 1e-9


class SpaceSign(enum.IntEnum):
    """Curvature selector: ``+1`` for the sphere, ``-1`` for the hyperbolic plane."""

    SPHERE = 1
    HYPERBOLIC = -1

    @property
    def sigma(self) -> int:
        return int(self)

    @classmethod
    def parse(cls, value) -> "SpaceSign":
        """Accept ``'s2'``/``'h2'``, ``+1``/``-1`` or an existing member."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("s2", "sphere", "+1", "1"):
                return cls.SPHERE
            if key in ("h2", "hyperbolic", "-1"):
                return cls.HYPERBOLIC
            raise DomainError(f"unknown space {value!r}; expected 's2' or 'h2'")
        if isinstance(value, numbers.Real) and not isinstance(value, bool) and value in (1, -1):
            return cls(int(value))
        raise DomainError(f"curvature sign must be +1 or -1, got {value!r}")

    @property
    def label(self) -> str:
        return "s2" if self is SpaceSign.SPHERE else "h2"


class AmbientPoint(NamedTuple):
    x: float
    y: float
    z: float


class PlanePoint(NamedTuple):
    u: float
    v: float

    @property
    def complex(self) -> complex:
        return complex(self.u, self.v)

    @classmethod
    def from_complex(cls, zc: complex) -> "PlanePoint":
        return cls(zc.real, zc.imag)


def dot(space, a, b) -> float:
    """Euclidean (sphere) or Lorentzian (hyperbolic) inner product of 3-vectors."""
    sigma = SpaceSign.parse(space).sigma
    return a[0] * b[0] + a[1] * b[1] + sigma * a[2] * b[2]


def on_surface(space, q, tol: float = SURFACE_TOL) -> bool:
    space = SpaceSign.parse(space)
    if abs(dot(space, q, q) - space.sigma) > tol:
        return False
    return space is SpaceSign.SPHERE or q[2] > 0.0


def ambient_point(space, x: float, y: float, z: float) -> AmbientPoint:
    """Validated constructor; lower-sheet hyperbolic data is rejected."""
    space = SpaceSign.parse(space)
    q = AmbientPoint(float(x), float(y), float(z))
    if not on_surface(space, q, tol=1e-9):
        raise DomainError(f"{q} is not on the {space.label} model surface")
    return q


def geodesic_distance(space, a, b) -> float:
    """Intrinsic distance between two points of the model surface.

    Raises
    ------
    DomainError
        On H^2 when ``-a . b`` is below 1 by more than the clamp tolerance,
        which means the inputs are not on the upper sheet.
    """
    space = SpaceSign.parse(space)
    c = dot(space, a, b)
    if space is SpaceSign.SPHERE:
        return math.acos(min(1.0, max(-1.0, c)))
    if -c < 1.0 - CLAMP_TOL:
        raise DomainError(f"points off the hyperbolic sheet (a.b = {c!r})")
    return math.acosh(max(1.0, -c))


def cotn(space, d: float) -> float:
    """cot on the sphere, coth on the hyperbolic plane."""
    space = SpaceSign.parse(space)
    if d <= 0.0:
        raise SingularityError("cotn is singular at zero distance")
    if space is SpaceSign.SPHERE:
        if d >= math.pi:
            raise SingularityError("cot is singular at distance pi (antipodes)")
        return math.cos(d) / math.sin(d)
    return 1.0 / math.tanh(d)


def project(space, q) -> PlanePoint:
    """Stereographic projection from ``(0, 0, -1)``."""
    space = SpaceSign.parse(space)
    denom = 1.0 + q[2]
    if denom == 0.0:
        raise SingularityError("the south pole has no stereographic image")
    return PlanePoint(q[0] / denom, q[1] / denom)


def _check_disk(space: SpaceSign, rho2: float) -> None:
    if space is SpaceSign.HYPERBOLIC and rho2 >= 1.0:
        raise DomainError(f"point outside the Poincare disk (|p|^2 = {rho2!r})")


def unproject(space, p) -> AmbientPoint:
    """Inverse stereographic projection."""
    space = SpaceSign.parse(space)
    u, v = p
    rho2 = u * u + v * v
    _check_disk(space, rho2)
    s = space.sigma
    denom = 1.0 + s * rho2
    return AmbientPoint(2.0 * u / denom, 2.0 * v / denom, (1.0 - s * rho2) / denom)


def conformal_factor(space, p) -> float:
    """Metric factor ``lambda`` with ``ds^2 = lambda (du^2 + dv^2)``."""
    space = SpaceSign.parse(space)
    u, v = p
    rho2 = u * u + v * v
    _check_disk(space, rho2)
    return 4.0 / (1.0 + space.sigma * rho2) ** 2


def unproject_jacobian(space, p):
    """Columns ``dQ/du`` and ``dQ/dv`` of the inverse projection."""
    space = SpaceSign.parse(space)
    s = space.sigma
    u, v = p
    rho2 = u * u + v * v
    _check_disk(space, rho2)
    d = 1.0 + s * rho2
    d2 = d * d
    du = (2.0 * (d - 2.0 * s * u * u) / d2, -4.0 * s * u * v / d2, -4.0 * s * u / d2)
    dv = (-4.0 * s * u * v / d2, 2.0 * (d - 2.0 * s * v * v) / d2, -4.0 * s * v / d2)
    return du, dv
