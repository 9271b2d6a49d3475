# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled vector-field kernels; mirror of ``_kernels_py``."""

import numpy as np

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.math cimport cos, sin, sqrt, pow

from .errors import AntipodalError, CollisionError, DomainError, SingularityError

cdef extern from "complex.h" nogil:
    double cabs(double complex)
    double complex conj(double complex)
    double creal(double complex)
    double cimag(double complex)

cdef enum:
    _IDENTITY = 0
    _LOCAL = 1
    _GLOBAL = 2

IDENTITY = _IDENTITY
LOCAL = _LOCAL
GLOBAL = _GLOBAL

cdef double _EPS_SING = 1e-12
cdef double _W_MIN = 1e-12
EPS_SING = _EPS_SING
W_MIN = _W_MIN

BACKEND = "cython"

cdef double complex _I = 1j


cdef inline double complex _cpow(double complex w, int n):
    cdef double complex out = 1.0
    cdef int i
    for i in range(n):
        out = out * w
    return out


cdef class System:
    """Primary system packed for fast field evaluation."""

    cdef public int sigma
    cdef public double omega, zeta, r
    cdef public int n
    cdef public double alpha
    cdef public double complex w1n, beta
    cdef double complex* _c
    cdef double complex* _w
    cdef double complex* _wh
    cdef double complex* _coef

    def __cinit__(self, sigma, omega, zeta, r, centers):
        cdef int n = len(centers)
        self.n = n
        self._c = <double complex*> PyMem_Malloc(n * sizeof(double complex))
        self._w = <double complex*> PyMem_Malloc(n * sizeof(double complex))
        self._wh = <double complex*> PyMem_Malloc(n * sizeof(double complex))
        self._coef = <double complex*> PyMem_Malloc(n * sizeof(double complex))
        if not self._c or not self._w or not self._wh or not self._coef:
            raise MemoryError()

    def __init__(self, sigma, omega, zeta, r, centers):
        cdef int j
        self.sigma = int(sigma)
        self.omega = float(omega)
        self.zeta = float(zeta)
        self.r = float(r)
        for j in range(self.n):
            self._c[j] = complex(centers[j])
            self._w[j] = self._c[j] / (1.0 + self.zeta)
            self._wh[j] = -self._c[j] / (1.0 - self.zeta)
        self.alpha = (self.n - 1.0) / self.n
        self.w1n = _cpow(self._w[0], self.n)
        self.beta = self.w1n / self.n

    def __dealloc__(self):
        PyMem_Free(self._c)
        PyMem_Free(self._w)
        PyMem_Free(self._wh)
        PyMem_Free(self._coef)

    @property
    def c(self):
        return [self._c[j] for j in range(self.n)]

    @property
    def w(self):
        return [self._w[j] for j in range(self.n)]

    @property
    def wh(self):
        return [self._wh[j] for j in range(self.n)]

    # ------------------------------------------------------------------
    # projected real coordinates

    cdef int _classify(self, int j, double complex zc) except -1:
        if cabs(zc - self._w[j]) <= cabs(zc - self._wh[j]):
            raise CollisionError(f"collision with primary {j + 1}")
        raise AntipodalError(f"antipodal to primary {j + 1}")

    cpdef double potential(self, double u, double v) except? -1e300:
        cdef int s = self.sigma
        cdef double rho2 = u * u + v * v
        cdef double a = 1.0 + s * rho2
        cdef double a2, num, s2, total = 0.0
        cdef double complex cj
        cdef int j
        if a <= 0.0:
            raise DomainError("outside the Poincare disk")
        a2 = a * a
        for j in range(self.n):
            cj = self._c[j]
            num = 2.0 * (creal(cj) * u + cimag(cj) * v) + s * self.zeta * (1.0 - s * rho2)
            s2 = s * (a2 - num * num)
            if s2 <= _EPS_SING * a2:
                self._classify(j, u + _I * v)
            total += s * num / sqrt(s2)
        return total

    cdef int _potential_grad(self, double u, double v, double* gu, double* gv) except -1:
        cdef int s = self.sigma
        cdef double rho2 = u * u + v * v
        cdef double a = 1.0 + s * rho2
        cdef double a2, num, s2, f, dnx, dny
        cdef double dax = 2.0 * s * u
        cdef double day = 2.0 * s * v
        cdef double complex cj
        cdef int j
        if a <= 0.0:
            raise DomainError("outside the Poincare disk")
        a2 = a * a
        gu[0] = 0.0
        gv[0] = 0.0
        for j in range(self.n):
            cj = self._c[j]
            num = 2.0 * (creal(cj) * u + cimag(cj) * v) + s * self.zeta * (1.0 - s * rho2)
            s2 = s * (a2 - num * num)
            if s2 <= _EPS_SING * a2:
                self._classify(j, u + _I * v)
            f = a / (s2 * sqrt(s2))
            dnx = 2.0 * creal(cj) - 2.0 * self.zeta * u
            dny = 2.0 * cimag(cj) - 2.0 * self.zeta * v
            gu[0] += f * (a * dnx - num * dax)
            gv[0] += f * (a * dny - num * day)
        return 0

    def potential_grad(self, double u, double v):
        cdef double gu, gv
        self._potential_grad(u, v, &gu, &gv)
        return gu, gv

    def ham_value(self, y):
        cdef double u = y[0], v = y[1], pu = y[2], pv = y[3]
        cdef double a = 1.0 + self.sigma * (u * u + v * v)
        return (a * a / 8.0 * (pu * pu + pv * pv)
                + self.omega * (v * pu - u * pv)
                - self.potential(u, v))

    def ham_field(self, y):
        cdef double u = y[0], v = y[1], pu = y[2], pv = y[3]
        cdef int s = self.sigma
        cdef double om = self.omega
        cdef double a = 1.0 + s * (u * u + v * v)
        cdef double p2 = pu * pu + pv * pv
        cdef double gu, gv, k
        self._potential_grad(u, v, &gu, &gv)
        k = a * a / 4.0
        out = np.empty(4)
        cdef double[::1] o = out
        o[0] = k * pu + om * v
        o[1] = k * pv - om * u
        o[2] = -(a * s * u * p2 / 2.0 - om * pv - gu)
        o[3] = -(a * s * v * p2 / 2.0 + om * pu - gv)
        return out

    # ------------------------------------------------------------------
    # regularizing charts

    cdef int _chart(self, int kind, int k, double complex w, double complex* g,
                    double complex* g1, double complex* g2) except -1:
        cdef double complex wn
        cdef int n = self.n
        if kind == _IDENTITY:
            g[0] = w
            g1[0] = 1.0
            g2[0] = 0.0
            return 0
        if kind == _LOCAL:
            g[0] = w * w + self._w[k]
            g1[0] = 2.0 * w
            g2[0] = 2.0
            return 0
        if cabs(w) < _W_MIN:
            raise SingularityError("w = 0 is the point at infinity of the global chart")
        wn = _cpow(w, n)
        g[0] = self.alpha * w + self.beta * w / wn
        g1[0] = self.alpha - self.beta * (n - 1) / wn
        g2[0] = self.beta * n * (n - 1) / (wn * w)
        return 0

    def chart_g(self, int kind, int k, w):
        cdef double complex g, g1, g2
        self._chart(kind, k, complex(w), &g, &g1, &g2)
        return g, g1, g2

    cdef void _hG(self, int j, double complex w, double complex* h, double complex* dh,
                  double complex* G, double complex* dG) noexcept:
        cdef int n = self.n
        cdef double complex wj = self._w[j]
        cdef double complex p = 1.0
        cdef double complex cf
        cdef int kk
        for kk in range(n):
            self._coef[kk] = p
            p = p * wj
        h[0] = 0.0
        dh[0] = 0.0
        for kk in range(n):
            dh[0] = dh[0] * w + h[0]
            h[0] = h[0] * w + self._coef[kk]
        h[0] = h[0] * self.alpha
        dh[0] = dh[0] * self.alpha
        G[0] = 0.0
        dG[0] = 0.0
        for kk in range(n - 1):
            cf = (n - kk - 1.0) / n * self._coef[kk]
            dG[0] = dG[0] * w + G[0]
            G[0] = G[0] * w + cf

    cdef int _ratio(self, int kind, int k, int j, double complex w, double complex z,
                    double complex g1, bint want_grad, double* R,
                    double complex* dR) except -1:
        cdef double complex d, h, dh, G, dG
        cdef double a, ww, aG, aw, awn1, hh
        cdef int n = self.n
        cdef double scale
        if kind == _IDENTITY:
            d = w - self._w[j]
            a = cabs(d)
            R[0] = 1.0 / a
            dR[0] = -d / (a * a * a) if want_grad else 0.0
            return 0
        if kind == _LOCAL:
            if j == k:
                R[0] = 4.0
                dR[0] = 0.0
                return 0
            d = z - self._w[j]
            a = cabs(d)
            ww = creal(w * conj(w))
            R[0] = 4.0 * ww / a
            if want_grad:
                dR[0] = 8.0 * w / a - 4.0 * ww * d * conj(g1) / (a * a * a)
            else:
                dR[0] = 0.0
            return 0
        self._hG(j, w, &h, &dh, &G, &dG)
        aG = cabs(G)
        scale = cabs(w)
        if scale < 1.0:
            scale = 1.0
        if aG <= _EPS_SING * pow(scale, n - 2):
            raise CollisionError(f"collision with primary {j + 1} on a secondary sheet")
        aw = cabs(w)
        awn1 = pow(aw, n + 1)
        hh = creal(h * conj(h))
        R[0] = hh / (awn1 * aG)
        if want_grad:
            dR[0] = (2.0 * h * conj(dh) / (awn1 * aG)
                     - (n + 1.0) * hh * w / (awn1 * aw * aw * aG)
                     - hh * G * conj(dG) / (awn1 * aG * aG * aG))
        else:
            dR[0] = 0.0
        return 0

    cdef double _guard(self, int kind, int k, int j, double complex z, double a1) except -1.0:
        cdef double a = cabs(z - self._w[j])
        cdef double b = cabs(z - self._wh[j])
        cdef double m = self.r * a * b / a1
        cdef bint regularized
        if m * m > _EPS_SING:
            return b
        regularized = kind == _GLOBAL or (kind == _LOCAL and j == k)
        if b < a:
            raise AntipodalError(f"antipodal to primary {j + 1}")
        if not regularized:
            raise CollisionError(f"collision with primary {j + 1}")
        return b

    cpdef double reg_potential(self, int kind, int k, double complex w) except? -1e300:
        cdef double complex g, g1, g2, cj
        cdef int s = self.sigma
        cdef double rho2, a1, b, num, R, total = 0.0
        cdef double complex dR
        cdef int j
        self._chart(kind, k, w, &g, &g1, &g2)
        rho2 = creal(g * conj(g))
        a1 = 1.0 + s * rho2
        if a1 <= 0.0:
            raise DomainError("outside the Poincare disk")
        for j in range(self.n):
            b = self._guard(kind, k, j, g, a1)
            cj = self._c[j]
            num = 2.0 * (creal(cj) * creal(g) + cimag(cj) * cimag(g)) + s * self.zeta * (1.0 - s * rho2)
            self._ratio(kind, k, j, w, g, g1, False, &R, &dR)
            total += R * s * num / (self.r * b)
        return total

    def reg_value(self, int kind, int k, y, double C):
        cdef double y0 = y[0], y1 = y[1], y2 = y[2], y3 = y[3]
        cdef double complex w = y0 + _I * y1
        cdef double complex W = y2 + _I * y3
        cdef double complex g, g1, g2
        self._chart(kind, k, w, &g, &g1, &g2)
        cdef double a1 = 1.0 + self.sigma * creal(g * conj(g))
        cdef double j2 = creal(g1 * conj(g1))
        cdef double ww = creal(W * conj(W))
        cdef double kin = a1 * a1 * ww / 8.0
        cdef double rot = self.omega * cimag(g * conj(g1) * conj(W))
        return kin + rot - self.reg_potential(kind, k, w) + j2 * C / 2.0

    def reg_field(self, int kind, int k, y, double C):
        cdef double y0 = y[0], y1 = y[1], y2 = y[2], y3 = y[3]
        cdef double complex w = y0 + _I * y1
        cdef double complex W = y2 + _I * y3
        cdef int s = self.sigma
        cdef double om = self.omega
        cdef double zeta = self.zeta
        cdef double r = self.r
        cdef double complex g, g1, g2, gcg1, dW, gw, cg1, gp, cj, dnum, e, dS, dR
        cdef double rho2, a1, j2, ww, b, num, S, R
        cdef int j
        self._chart(kind, k, w, &g, &g1, &g2)
        rho2 = creal(g * conj(g))
        a1 = 1.0 + s * rho2
        if a1 <= 0.0:
            raise DomainError("outside the Poincare disk")
        j2 = creal(g1 * conj(g1))
        ww = creal(W * conj(W))
        gcg1 = g * conj(g1)
        dW = a1 * a1 * W / 4.0 - _I * om * gcg1
        gw = a1 * ww * s * gcg1 / 2.0
        gw = gw + _I * om * (j2 * W - g * conj(g2) * conj(W))
        gw = gw + C * g1 * conj(g2)
        cg1 = conj(g1)
        gp = 0.0
        for j in range(self.n):
            b = self._guard(kind, k, j, g, a1)
            cj = self._c[j]
            num = 2.0 * (creal(cj) * creal(g) + cimag(cj) * cimag(g)) + s * zeta * (1.0 - s * rho2)
            dnum = 2.0 * (cj - zeta * g)
            e = g - self._wh[j]
            S = s * num / (r * b)
            dS = s / r * (dnum / b - num * e / (b * b * b))
            self._ratio(kind, k, j, w, g, g1, True, &R, &dR)
            gp = gp + dR * S + R * cg1 * dS
        gw = gw - gp
        out = np.empty(5)
        cdef double[::1] o = out
        o[0] = creal(dW)
        o[1] = cimag(dW)
        o[2] = -creal(gw)
        o[3] = -cimag(gw)
        o[4] = j2
        return out

    # ------------------------------------------------------------------
    # inertial frame, massless particle

    def restricted_deriv(self, double t, y):
        cdef int s = self.sigma
        cdef double q0 = y[0], q1 = y[1], q2 = y[2]
        cdef double v0 = y[3], v1 = y[4], v2 = y[5]
        cdef double vv = v0 * v0 + v1 * v1 + s * v2 * v2
        cdef double acc0 = -s * vv * q0
        cdef double acc1 = -s * vv * q1
        cdef double acc2 = -s * vv * q2
        cdef double ang = self.omega * t
        cdef double ca = cos(ang), sa = sin(ang)
        cdef double x, yy, c, den, f
        cdef double complex cj
        cdef int j
        for j in range(self.n):
            cj = self._c[j]
            x = creal(cj) * ca - cimag(cj) * sa
            yy = creal(cj) * sa + cimag(cj) * ca
            c = x * q0 + yy * q1 + s * self.zeta * q2
            den = s - s * c * c
            if den <= _EPS_SING:
                if s > 0 and c < 0:
                    raise AntipodalError(f"antipodal to primary {j + 1}")
                raise CollisionError(f"collision with primary {j + 1}")
            f = 1.0 / (den * sqrt(den))
            acc0 += (x - s * c * q0) * f
            acc1 += (yy - s * c * q1) * f
            acc2 += (self.zeta - s * c * q2) * f
        out = np.empty(6)
        cdef double[::1] o = out
        o[0] = v0
        o[1] = v1
        o[2] = v2
        o[3] = acc0
        o[4] = acc1
        o[5] = acc2
        return out


def nbody_deriv(int sigma, int nb, y):
    """Time derivative of ``(q_1..q_n, qdot_1..qdot_n)`` for unit masses."""
    cdef double[::1] yy = np.ascontiguousarray(y, dtype=np.float64)
    cdef int s = sigma
    cdef int off = 3 * nb
    out = np.empty(6 * nb)
    cdef double[::1] o = out
    cdef int i, j
    cdef double qi0, qi1, qi2, v0, v1, v2, vv, a0, a1, a2, qj0, qj1, qj2, c, den, f
    for i in range(nb):
        qi0 = yy[3 * i]
        qi1 = yy[3 * i + 1]
        qi2 = yy[3 * i + 2]
        v0 = yy[off + 3 * i]
        v1 = yy[off + 3 * i + 1]
        v2 = yy[off + 3 * i + 2]
        o[3 * i] = v0
        o[3 * i + 1] = v1
        o[3 * i + 2] = v2
        vv = v0 * v0 + v1 * v1 + s * v2 * v2
        a0 = -s * vv * qi0
        a1 = -s * vv * qi1
        a2 = -s * vv * qi2
        for j in range(nb):
            if j == i:
                continue
            qj0 = yy[3 * j]
            qj1 = yy[3 * j + 1]
            qj2 = yy[3 * j + 2]
            c = qi0 * qj0 + qi1 * qj1 + s * qi2 * qj2
            den = s - s * c * c
            if den <= _EPS_SING:
                if s > 0 and c < 0:
                    raise AntipodalError(f"bodies {i + 1} and {j + 1} are antipodal")
                raise CollisionError(f"bodies {i + 1} and {j + 1} collided")
            f = 1.0 / (den * sqrt(den))
            a0 += (qj0 - s * c * qi0) * f
            a1 += (qj1 - s * c * qi1) * f
            a2 += (qj2 - s * c * qi2) * f
        o[off + 3 * i] = a0
        o[off + 3 * i + 1] = a1
        o[off + 3 * i + 2] = a2
    return out
