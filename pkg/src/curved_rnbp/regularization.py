"""Regularizing charts for binary collisions with the primaries.

A chart is a holomorphic map ``z = g(w)`` of the projected plane together
with the canonical momentum lift ``Z = W / conj(g'(w))`` and the fictitious
time ``dt/ds = |g'(w)|^2``. On the energy level ``H = -C/2`` the flow of

    Hhat(w, W) = |g'(w)|^2 (H(g(w), W / conj(g'(w))) + C/2)

at ``Hhat = 0`` reparametrizes the physical flow and stays regular where
``g'`` vanishes.

Charts
------
identity
    ``g(w) = w``; no regularization.
local(k)
    ``g(w) = w^2 + w_k``; removes the collision with primary ``k``.
global
    ``g(w) = alpha w + beta / w^(n-1)`` with ``alpha = (n-1)/n`` and
    ``beta = w_1^n / n``; fixes every ``w_i`` and removes all n collisions.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .dynamics import ProjectedState, hamiltonian, system
from .equilibria import PolygonConfig
from .errors import AmbiguityError, ConvergenceError, DomainError, SingularityError

AMBIGUITY_TOL = 1e-12


class ChartKind(str, enum.Enum):
    IDENTITY = "identity"
    LOCAL = "local"
    GLOBAL = "global"


@dataclass(frozen=True)
class Chart:
    """A coordinate chart of the projected plane.

    ``k`` is the 1-based index of the regularized primary for local charts,
    ``center`` its projected position. ``parent`` is the chart the policy
    falls back to when the particle leaves a local chart.
    """

    kind: ChartKind
    k: Optional[int] = None
    center: complex = 0j
    n: int = 0
    alpha: float = 0.0
    beta: complex = 0j
    parent: Optional["Chart"] = None

    @classmethod
    def identity(cls) -> "Chart":
        return cls(ChartKind.IDENTITY)

    @classmethod
    def local(cls, config: PolygonConfig, k: int, parent: Optional["Chart"] = None) -> "Chart":
        if not 1 <= k <= config.n:
            raise DomainError(f"primary index must be in 1..{config.n}, got {k!r}")
        return cls(ChartKind.LOCAL, k=int(k), center=config.primaries.w[k - 1], n=config.n, parent=parent)

    @classmethod
    def global_(cls, config: PolygonConfig) -> "Chart":
        n = config.n
        w1 = config.primaries.w[0]
        return cls(ChartKind.GLOBAL, n=n, alpha=(n - 1) / n, beta=w1**n / n)

    @classmethod
    def parse(cls, config: PolygonConfig, text: str) -> "Chart":
        """Parse ``identity``, ``global`` or ``local:K``."""
        text = text.strip().lower()
        if text == "identity":
            return cls.identity()
        if text == "global":
            return cls.global_(config)
        if text.startswith("local:"):
            try:
                k = int(text.split(":", 1)[1])
            except ValueError:
                raise DomainError(f"bad chart {text!r}") from None
            return cls.local(config, k)
        raise DomainError(f"unknown chart {text!r}")

    @property
    def label(self) -> str:
        if self.kind is ChartKind.LOCAL:
            return f"local:{self.k}"
        return self.kind.value

    @property
    def regularizing(self) -> bool:
        return self.kind is not ChartKind.IDENTITY

    @property
    def kernel_args(self) -> tuple[int, int]:
        if self.kind is ChartKind.IDENTITY:
            return kernels.IDENTITY, 0
        if self.kind is ChartKind.LOCAL:
            return kernels.LOCAL, self.k - 1
        return kernels.GLOBAL, 0

    def collision_points(self, config: PolygonConfig) -> tuple[complex, ...]:
        """Chart coordinates where ``g'`` vanishes."""
        if self.kind is ChartKind.LOCAL:
            return (0j,)
        if self.kind is ChartKind.GLOBAL:
            return tuple(config.primaries.w)
        return ()

    def without_parent(self) -> "Chart":
        return Chart(self.kind, self.k, self.center, self.n, self.alpha, self.beta)


@dataclass(frozen=True)
class RegularizedState:
    w_c: complex
    W_c: complex
    C: float
    s: float = 0.0
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.w_c.real, self.w_c.imag, self.W_c.real, self.W_c.imag, self.t])


# ----------------------------------------------------------------------------
# the maps


def chart_map(chart: Chart, w_c: complex) -> complex:
    w_c = complex(w_c)
    if chart.kind is ChartKind.IDENTITY:
        return w_c
    if chart.kind is ChartKind.LOCAL:
        return w_c * w_c + chart.center
    if w_c == 0:
        raise DomainError("w = 0 is the point at infinity of the global chart")
    return chart.alpha * w_c + chart.beta / w_c ** (chart.n - 1)


def chart_derivative(chart: Chart, w_c: complex) -> complex:
    w_c = complex(w_c)
    if chart.kind is ChartKind.IDENTITY:
        return 1.0 + 0j
    if chart.kind is ChartKind.LOCAL:
        return 2.0 * w_c
    if w_c == 0:
        raise DomainError("w = 0 is the point at infinity of the global chart")
    n = chart.n
    return chart.alpha - chart.beta * (n - 1) / w_c**n


def _global_preimages(chart: Chart, z_c: complex) -> np.ndarray:
    n = chart.n
    # n w^(n-1) (g(w) - z) = (n-1) w^n - n z w^(n-1) + n beta
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = n * chart.alpha
    coeffs[1] = -n * z_c
    coeffs[-1] = n * chart.beta
    roots = np.roots(coeffs)
    polished = []
    for w in roots:
        for _ in range(50):
            if w == 0:
                break
            f = chart_map(chart, w) - z_c
            d = chart_derivative(chart, w)
            if d == 0 or abs(f) <= 1e-15 * max(1.0, abs(z_c)):
                break
            step = f / d
            w = w - step
            if abs(step) <= 1e-16 * abs(w):
                break
        polished.append(w)
    return np.array(polished)


def chart_preimages(chart: Chart, z_c: complex) -> list[complex]:
    z_c = complex(z_c)
    if chart.kind is ChartKind.IDENTITY:
        return [z_c]
    if chart.kind is ChartKind.LOCAL:
        r = cmath.sqrt(z_c - chart.center)
        return [r, -r]
    return [complex(w) for w in _global_preimages(chart, z_c)]


def chart_inverse(chart: Chart, z_c: complex, branch_hint: Optional[complex] = None) -> complex:
    """Preimage of ``z_c`` closest to ``branch_hint``.

    Without a hint the local chart returns the principal square root and the
    global chart uses ``z / alpha``, the asymptotic inverse for large ``|z|``.
    """
    z_c = complex(z_c)
    cands = chart_preimages(chart, z_c)
    if chart.kind is ChartKind.IDENTITY:
        return cands[0]
    if branch_hint is None:
        if chart.kind is ChartKind.LOCAL:
            return cands[0]
        branch_hint = z_c / chart.alpha
    dists = sorted((abs(w - branch_hint), i) for i, w in enumerate(cands))
    best = cands[dists[0][1]]
    if len(dists) > 1:
        second = cands[dists[1][1]]
        if abs(best - second) > AMBIGUITY_TOL and dists[1][0] - dists[0][0] <= AMBIGUITY_TOL:
            raise AmbiguityError(f"preimages {best} and {second} equidistant from hint {branch_hint}")
    scale = max(1.0, abs(z_c))
    if abs(chart_map(chart, best) - z_c) > 1e-10 * scale:
        raise ConvergenceError(f"chart inversion residual too large at z={z_c}")
    return best


def momentum_map(chart: Chart, w_c: complex, W_c: complex) -> complex:
    """Physical momentum ``Z = W / conj(g'(w))``."""
    d = chart_derivative(chart, w_c)
    if d == 0:
        raise SingularityError("momentum is undefined at a chart collision point")
    return complex(W_c) / d.conjugate()


def momentum_lift(chart: Chart, w_c: complex, Z_c: complex) -> complex:
    """Chart momentum ``W = Z conj(g'(w))``."""
    return complex(Z_c) * chart_derivative(chart, w_c).conjugate()


def G_polynomial(n: int, w_i: complex, w_c: complex) -> complex:
    """Cofactor in ``g(w) - w_i = (w - w_i)^2 G(w) / w^(n-1)``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    total = 0j
    for k in range(n - 1):
        total += (n - k - 1) / n * w_c ** (n - 2 - k) * w_i**k
    return total


# ----------------------------------------------------------------------------
# shifted Hamiltonian


def energy_constant(config: PolygonConfig, s0) -> float:
    """``C`` with ``H(s0) = -C/2``."""
    return -2.0 * hamiltonian(config, s0)


def regularized_potential(config: PolygonConfig, chart: Chart, w_c: complex) -> float:
    """``|g'(w)|^2 U(g(w))`` with the collision factors cancelled analytically."""
    kind, k = chart.kernel_args
    return system(config).reg_potential(kind, k, complex(w_c))


def _rs_vector(rs) -> tuple[np.ndarray, float]:
    if isinstance(rs, RegularizedState):
        return rs.vector(), rs.C
    raise TypeError("expected a RegularizedState")


def regularized_hamiltonian(config: PolygonConfig, chart: Chart, rs: RegularizedState) -> float:
    kind, k = chart.kernel_args
    y, C = _rs_vector(rs)
    return system(config).reg_value(kind, k, y, C)


def regularized_field(config: PolygonConfig, chart: Chart, rs: RegularizedState):
    """``(dw/ds, dW/ds, dt/ds)``."""
    kind, k = chart.kernel_args
    y, C = _rs_vector(rs)
    d = system(config).reg_field(kind, k, y, C)
    return complex(d[0], d[1]), complex(d[2], d[3]), float(d[4])


def to_chart(
    config: PolygonConfig,
    chart: Chart,
    state,
    C: float,
    *,
    s: float = 0.0,
    t: float = 0.0,
    branch_hint: Optional[complex] = None,
) -> RegularizedState:
    """Express a projected state in ``chart``."""
    z_c = complex(state[0], state[1])
    Z_c = complex(state[2], state[3])
    w_c = chart_inverse(chart, z_c, branch_hint)
    return RegularizedState(w_c, momentum_lift(chart, w_c, Z_c), C, s, t)


def from_chart(chart: Chart, rs: RegularizedState) -> ProjectedState:
    z_c = chart_map(chart, rs.w_c)
    Z_c = momentum_map(chart, rs.w_c, rs.W_c)
    return ProjectedState(z_c.real, z_c.imag, Z_c.real, Z_c.imag)


def energy_from_hhat(C: float, hhat: float, j2: float) -> float:
    """``-C/2 + Hhat / |g'|^2``, or nan once ``|g'|`` drops below ``kernels.W_MIN``.

    Below that floor the quotient only amplifies rounding in ``Hhat``.
    """
    if j2 < kernels.W_MIN**2:
        return math.nan
    return -C / 2.0 + hhat / j2


def physical_energy(config: PolygonConfig, chart: Chart, rs: RegularizedState) -> float:
    """Physical ``H`` of a chart state (nan at a collision point)."""
    j2 = abs(chart_derivative(chart, rs.w_c)) ** 2
    return energy_from_hhat(rs.C, regularized_hamiltonian(config, chart, rs), j2)


# ----------------------------------------------------------------------------
# switching policy


def default_delta_in(config: PolygonConfig) -> float:
    w = config.primaries.w
    dmin = min(abs(w[i] - w[j]) for i in range(len(w)) for j in range(i + 1, len(w)))
    return 0.05 * dmin


def chart_policy(
    config: PolygonConfig,
    z_c: complex,
    current: Chart,
    delta_in: Optional[float] = None,
) -> Chart:
    """Hysteresis rule for entering and leaving local charts.

    Enter ``local(k)`` when ``|z - w_k| < delta_in``; leave it for its parent
    once ``|z - w_k| > 2 delta_in``.
    """
    if delta_in is None:
        delta_in = default_delta_in(config)
    delta_out = 2.0 * delta_in
    w = config.primaries.w
    if current.kind is ChartKind.LOCAL:
        if abs(z_c - w[current.k - 1]) > delta_out:
            return current.parent if current.parent is not None else Chart.identity()
        return current
    for k, wk in enumerate(w, start=1):
        if abs(z_c - wk) < delta_in:
            return Chart.local(config, k, parent=current)
    return current
