"""Pure-Python vector-field kernels.

This module and ``_kernels.pyx`` implement the same functions with the same
operation order; :mod:`curved_rnbp.kernels` picks one at import time.

Complex numbers encode planar gradients: for a real function ``f(x + iy)``
the value ``df/dx + i df/dy`` is returned.
"""

import math

import numpy as np

from .errors import AntipodalError, CollisionError, DomainError, SingularityError

IDENTITY = 0
LOCAL = 1
GLOBAL = 2

EPS_SING = 1e-12
W_MIN = 1e-12

BACKEND = "python"


def _conj(a):
    return a.conjugate()


def _cpow(w, n):
    out = 1.0 + 0.0j
    for _ in range(n):
        out = out * w
    return out


class System:
    """Primary system packed for fast field evaluation."""

    def __init__(self, sigma, omega, zeta, r, centers):
        self.sigma = int(sigma)
        self.omega = float(omega)
        self.zeta = float(zeta)
        self.r = float(r)
        self.n = len(centers)
        self.c = [complex(c) for c in centers]
        self.w = [c / (1.0 + self.zeta) for c in self.c]
        self.wh = [-c / (1.0 - self.zeta) for c in self.c]
        n = self.n
        self.alpha = (n - 1.0) / n
        self.w1n = _cpow(self.w[0], n)
        self.beta = self.w1n / n

    # ------------------------------------------------------------------
    # projected real coordinates (u, v, p_u, p_v)

    def _classify(self, j, zc):
        if abs(zc - self.w[j]) <= abs(zc - self.wh[j]):
            raise CollisionError(f"collision with primary {j + 1}")
        raise AntipodalError(f"antipodal to primary {j + 1}")

    def potential(self, u, v):
        """Cotangent potential pulled back to the projected plane."""
        s = self.sigma
        rho2 = u * u + v * v
        a = 1.0 + s * rho2
        if a <= 0.0:
            raise DomainError("outside the Poincare disk")
        a2 = a * a
        zeta = self.zeta
        total = 0.0
        for j in range(self.n):
            cj = self.c[j]
            num = 2.0 * (cj.real * u + cj.imag * v) + s * zeta * (1.0 - s * rho2)
            s2 = s * (a2 - num * num)
            if s2 <= EPS_SING * a2:
                self._classify(j, complex(u, v))
            total += s * num / math.sqrt(s2)
        return total

    def potential_grad(self, u, v):
        s = self.sigma
        rho2 = u * u + v * v
        a = 1.0 + s * rho2
        if a <= 0.0:
            raise DomainError("outside the Poincare disk")
        a2 = a * a
        zeta = self.zeta
        dax = 2.0 * s * u
        day = 2.0 * s * v
        gu = 0.0
        gv = 0.0
        for j in range(self.n):
            cj = self.c[j]
            num = 2.0 * (cj.real * u + cj.imag * v) + s * zeta * (1.0 - s * rho2)
            s2 = s * (a2 - num * num)
            if s2 <= EPS_SING * a2:
                self._classify(j, complex(u, v))
            f = a / (s2 * math.sqrt(s2))
            dnx = 2.0 * cj.real - 2.0 * zeta * u
            dny = 2.0 * cj.imag - 2.0 * zeta * v
            gu += f * (a * dnx - num * dax)
            gv += f * (a * dny - num * day)
        return gu, gv

    def ham_value(self, y):
        u, v, pu, pv = y[0], y[1], y[2], y[3]
        a = 1.0 + self.sigma * (u * u + v * v)
        return (
            a * a / 8.0 * (pu * pu + pv * pv)
            + self.omega * (v * pu - u * pv)
            - self.potential(u, v)
        )

    def ham_field(self, y):
        u, v, pu, pv = y[0], y[1], y[2], y[3]
        s = self.sigma
        om = self.omega
        a = 1.0 + s * (u * u + v * v)
        p2 = pu * pu + pv * pv
        gu, gv = self.potential_grad(u, v)
        k = a * a / 4.0
        return np.array(
            [
                k * pu + om * v,
                k * pv - om * u,
                -(a * s * u * p2 / 2.0 - om * pv - gu),
                -(a * s * v * p2 / 2.0 + om * pu - gv),
            ]
        )

    # ------------------------------------------------------------------
    # regularizing charts; state (Re w, Im w, Re W, Im W[, t])

    def chart_g(self, kind, k, w):
        """Return ``(g, g', g'')`` at ``w``."""
        if kind == IDENTITY:
            return w, 1.0 + 0.0j, 0.0j
        if kind == LOCAL:
            return w * w + self.w[k], 2.0 * w, 2.0 + 0.0j
        if abs(w) < W_MIN:
            raise SingularityError("w = 0 is the point at infinity of the global chart")
        n = self.n
        wn = _cpow(w, n)
        return (
            self.alpha * w + self.beta * w / wn,
            self.alpha - self.beta * (n - 1) / wn,
            self.beta * n * (n - 1) / (wn * w),
        )

    def _hG(self, j, w):
        """``h_j, h_j', G_j, G_j'`` for the global chart."""
        n = self.n
        wj = self.w[j]
        # Horner over coefficients wj^k of w^(n-1-k)
        h = 0.0j
        dh = 0.0j
        p = 1.0 + 0.0j
        coeffs = []
        for _ in range(n):
            coeffs.append(p)
            p = p * wj
        for cf in coeffs:
            dh = dh * w + h
            h = h * w + cf
        h = h * self.alpha
        dh = dh * self.alpha
        G = 0.0j
        dG = 0.0j
        for kk in range(n - 1):
            cf = (n - kk - 1.0) / n * coeffs[kk]
            dG = dG * w + G
            G = G * w + cf
        return h, dh, G, dG

    def _ratio(self, kind, k, j, w, z, g1, want_grad):
        """``R_j = |g'|^2 / |z - w_j|`` in cancellation-free form (and its gradient)."""
        if kind == IDENTITY:
            d = w - self.w[j]
            a = abs(d)
            if want_grad:
                return 1.0 / a, -d / (a * a * a)
            return 1.0 / a, 0.0j
        if kind == LOCAL:
            if j == k:
                return 4.0, 0.0j
            d = z - self.w[j]
            a = abs(d)
            ww = (w * _conj(w)).real
            if want_grad:
                return 4.0 * ww / a, 8.0 * w / a - 4.0 * ww * d * _conj(g1) / (a * a * a)
            return 4.0 * ww / a, 0.0j
        n = self.n
        h, dh, G, dG = self._hG(j, w)
        aG = abs(G)
        if aG <= EPS_SING * max(1.0, abs(w)) ** (n - 2):
            raise CollisionError(f"collision with primary {j + 1} on a secondary sheet")
        aw = abs(w)
        awn1 = aw ** (n + 1)
        hh = (h * _conj(h)).real
        R = hh / (awn1 * aG)
        if not want_grad:
            return R, 0.0j
        grad = (
            2.0 * h * _conj(dh) / (awn1 * aG)
            - (n + 1.0) * hh * w / (awn1 * aw * aw * aG)
            - hh * G * _conj(dG) / (awn1 * aG * aG * aG)
        )
        return R, grad

    def _guard(self, kind, k, j, z, a1):
        # a1 = 1 + sigma |z|^2
        a = abs(z - self.w[j])
        b = abs(z - self.wh[j])
        m = self.r * a * b / a1
        if m * m > EPS_SING:
            return b
        regularized = kind == GLOBAL or (kind == LOCAL and j == k)
        if b < a:
            raise AntipodalError(f"antipodal to primary {j + 1}")
        if not regularized:
            raise CollisionError(f"collision with primary {j + 1}")
        return b

    def reg_potential(self, kind, k, w):
        """``|g'(w)|^2 U(g(w))`` evaluated without a 0 * inf product."""
        g, g1, g2 = self.chart_g(kind, k, w)
        s = self.sigma
        zeta = self.zeta
        rho2 = (g * _conj(g)).real
        a1 = 1.0 + s * rho2
        if a1 <= 0.0:
            raise DomainError("outside the Poincare disk")
        total = 0.0
        for j in range(self.n):
            b = self._guard(kind, k, j, g, a1)
            cj = self.c[j]
            num = 2.0 * (cj.real * g.real + cj.imag * g.imag) + s * zeta * (1.0 - s * rho2)
            R, _ = self._ratio(kind, k, j, w, g, g1, False)
            total += R * s * num / (self.r * b)
        return total

    def reg_value(self, kind, k, y, C):
        w = complex(y[0], y[1])
        W = complex(y[2], y[3])
        g, g1, g2 = self.chart_g(kind, k, w)
        a1 = 1.0 + self.sigma * (g * _conj(g)).real
        j2 = (g1 * _conj(g1)).real
        ww = (W * _conj(W)).real
        kin = a1 * a1 * ww / 8.0
        rot = self.omega * (g * _conj(g1) * _conj(W)).imag
        return kin + rot - self.reg_potential(kind, k, w) + j2 * C / 2.0

    def reg_field(self, kind, k, y, C):
        w = complex(y[0], y[1])
        W = complex(y[2], y[3])
        s = self.sigma
        om = self.omega
        zeta = self.zeta
        r = self.r
        g, g1, g2 = self.chart_g(kind, k, w)
        rho2 = (g * _conj(g)).real
        a1 = 1.0 + s * rho2
        if a1 <= 0.0:
            raise DomainError("outside the Poincare disk")
        j2 = (g1 * _conj(g1)).real
        ww = (W * _conj(W)).real
        gcg1 = g * _conj(g1)
        dW = a1 * a1 * W / 4.0 - 1j * om * gcg1
        gw = a1 * ww * s * gcg1 / 2.0
        gw += 1j * om * (j2 * W - g * _conj(g2) * _conj(W))
        gw += C * g1 * _conj(g2)
        cg1 = _conj(g1)
        gp = 0.0j
        for j in range(self.n):
            b = self._guard(kind, k, j, g, a1)
            cj = self.c[j]
            num = 2.0 * (cj.real * g.real + cj.imag * g.imag) + s * zeta * (1.0 - s * rho2)
            dnum = 2.0 * (cj - zeta * g)
            e = g - self.wh[j]
            S = s * num / (r * b)
            dS = s / r * (dnum / b - num * e / (b * b * b))
            R, dR = self._ratio(kind, k, j, w, g, g1, True)
            gp += dR * S + R * cg1 * dS
        gw -= gp
        return np.array([dW.real, dW.imag, -gw.real, -gw.imag, j2])

    # ------------------------------------------------------------------
    # inertial frame, massless particle; y = (q, qdot)

    def restricted_deriv(self, t, y):
        s = self.sigma
        q0, q1, q2 = y[0], y[1], y[2]
        v0, v1, v2 = y[3], y[4], y[5]
        vv = v0 * v0 + v1 * v1 + s * v2 * v2
        acc0 = -s * vv * q0
        acc1 = -s * vv * q1
        acc2 = -s * vv * q2
        ang = self.omega * t
        ca = math.cos(ang)
        sa = math.sin(ang)
        zeta = self.zeta
        for j in range(self.n):
            cj = self.c[j]
            x = cj.real * ca - cj.imag * sa
            yy = cj.real * sa + cj.imag * ca
            c = x * q0 + yy * q1 + s * zeta * q2
            den = s - s * c * c
            if den <= EPS_SING:
                if s > 0 and c < 0:
                    raise AntipodalError(f"antipodal to primary {j + 1}")
                raise CollisionError(f"collision with primary {j + 1}")
            f = 1.0 / (den * math.sqrt(den))
            acc0 += (x - s * c * q0) * f
            acc1 += (yy - s * c * q1) * f
            acc2 += (zeta - s * c * q2) * f
        return np.array([v0, v1, v2, acc0, acc1, acc2])


def nbody_deriv(sigma, nb, y):
    """Time derivative of ``(q_1..q_n, qdot_1..qdot_n)`` for unit masses."""
    s = int(sigma)
    off = 3 * nb
    out = [0.0] * (6 * nb)
    for i in range(nb):
        qi0, qi1, qi2 = y[3 * i], y[3 * i + 1], y[3 * i + 2]
        v0, v1, v2 = y[off + 3 * i], y[off + 3 * i + 1], y[off + 3 * i + 2]
        out[3 * i] = v0
        out[3 * i + 1] = v1
        out[3 * i + 2] = v2
        vv = v0 * v0 + v1 * v1 + s * v2 * v2
        a0 = -s * vv * qi0
        a1 = -s * vv * qi1
        a2 = -s * vv * qi2
        for j in range(nb):
            if j == i:
                continue
            qj0, qj1, qj2 = y[3 * j], y[3 * j + 1], y[3 * j + 2]
            c = qi0 * qj0 + qi1 * qj1 + s * qi2 * qj2
            den = s - s * c * c
            if den <= EPS_SING:
                if s > 0 and c < 0:
                    raise AntipodalError(f"bodies {i + 1} and {j + 1} are antipodal")
                raise CollisionError(f"bodies {i + 1} and {j + 1} collided")
            f = 1.0 / (den * math.sqrt(den))
            a0 += (qj0 - s * c * qi0) * f
            a1 += (qj1 - s * c * qi1) * f
            a2 += (qj2 - s * c * qi2) * f
        out[off + 3 * i] = a0
        out[off + 3 * i + 1] = a1
        out[off + 3 * i + 2] = a2
    return np.array(out)
