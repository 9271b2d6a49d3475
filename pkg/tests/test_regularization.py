import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from curved_rnbp import (
    AmbiguityError,
    Chart,
    ChartKind,
    DomainError,
    G_polynomial,
    ProjectedState,
    RegularizedState,
    chart_derivative,
    chart_inverse,
    chart_map,
    chart_policy,
    energy_constant,
    hamiltonian,
    hamiltonian_field,
    momentum_map,
    polygon,
    pullback_potential,
    regularized_field,
    regularized_hamiltonian,
)
from curved_rnbp.regularization import (
    chart_preimages,
    default_delta_in,
    from_chart,
    momentum_lift,
    physical_energy,
    regularized_potential,
    to_chart,
)

cplx = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)
NS = [2, 3, 5, 8]


def _charts(cfg):
    return [Chart.identity(), Chart.local(cfg, 1), Chart.local(cfg, cfg.n), Chart.global_(cfg)]


def _naive_potential(cfg, z):
    # factored distances without any collision guard: |g'|^2 times this is the naive product
    s = cfg.sigma
    rho2 = abs(z) ** 2
    total = 0.0
    for c, w, wh in zip(cfg.centers, cfg.primaries.w, cfg.primaries.w_hat):
        num = 2 * (c.real * z.real + c.imag * z.imag) + s * cfg.zeta * (1 - s * rho2)
        total += s * num / (cfg.r * abs(z - w) * abs(z - wh))
    return total


def _regular(cfg, z, margin=0.05):
    if cfg.sigma < 0 and abs(z) >= 0.9:
        return False
    bad = list(cfg.primaries.w) + list(cfg.primaries.w_hat)
    return min(abs(z - b) for b in bad) > margin


class TestCharts:
    def test_parse_and_label(self, s2_triangle):
        for text in ("identity", "global", "local:1", "local:3"):
            assert Chart.parse(s2_triangle, text).label == text
        for bad in ("local:0", "local:4", "local:x", "polar"):
            with pytest.raises(DomainError):
                Chart.parse(s2_triangle, bad)

    def test_local_values(self, triangle):
        ch = Chart.local(triangle, 2)
        assert chart_map(ch, 0) == triangle.primaries.w[1]
        assert chart_derivative(ch, 0) == 0
        assert chart_map(ch, 0.1j) == pytest.approx(triangle.primaries.w[1] - 0.01)

    @pytest.mark.parametrize("space", ["s2", "h2"])
    @pytest.mark.parametrize("n", NS)
    def test_global_coefficients(self, space, n):
        cfg = polygon(space, n, 0.5)
        ch = Chart.global_(cfg)
        w = cfg.primaries.w
        assert ch.alpha == pytest.approx((n - 1) / n)
        assert ch.beta / ch.alpha == pytest.approx(w[0] ** n / (n - 1), rel=1e-14)
        for wi in w:
            assert abs(chart_map(ch, wi) - wi) < 1e-12 * max(1, abs(wi))
            assert abs(chart_derivative(ch, wi)) < 1e-12

    @pytest.mark.parametrize("n", NS)
    def test_vieta(self, n):
        w = np.array(polygon("h2", n, 0.7).primaries.w)
        c = np.poly(w)
        assert np.max(np.abs(c[1:-1])) < 1e-12
        assert c[-1] == pytest.approx((-1) ** n * np.prod(w), abs=1e-14)
        assert c[-1] == pytest.approx(-(w[0] ** n), abs=1e-14)

    def test_global_origin_rejected(self, s2_triangle):
        ch = Chart.global_(s2_triangle)
        with pytest.raises(DomainError):
            chart_map(ch, 0)
        with pytest.raises(DomainError):
            chart_derivative(ch, 0)

    @pytest.mark.parametrize("n", NS)
    @given(z=cplx)
    def test_derivative_polynomial(self, n, z):
        assume(abs(z) > 0.05)
        cfg = polygon("s2", n, 0.5)
        ch = Chart.global_(cfg)
        lhs = z**n * chart_derivative(ch, z) / ch.alpha
        assert abs(lhs - (z**n - cfg.primaries.w[0] ** n)) <= 1e-12 * max(1, abs(z) ** n)

    @pytest.mark.parametrize("n", NS)
    @given(z=cplx, i=st.integers(0, 7))
    def test_G_factorization(self, n, z, i):
        assume(abs(z) > 0.05)
        cfg = polygon("h2", n, 0.6)
        ch = Chart.global_(cfg)
        wi = cfg.primaries.w[i % n]
        lhs = (z - wi) ** 2 * G_polynomial(n, wi, z) / z ** (n - 1)
        rhs = chart_map(ch, z) - wi
        assert abs(lhs - rhs) <= 1e-12 * max(1, abs(z), abs(rhs))

    def test_G_examples(self):
        assert G_polynomial(2, 0.3, 5.0) == pytest.approx(0.5)
        assert G_polynomial(3, 0.3, 2.0) == pytest.approx(2 / 3 * 2.0 + 1 / 3 * 0.3)
        assert G_polynomial(4, 1j, 0.0) == pytest.approx(0.25 * (1j) ** 2)
        with pytest.raises(DomainError):
            G_polynomial(1, 0.3, 1.0)


class TestInverse:
    @pytest.mark.parametrize("space", ["s2", "h2"])
    @given(z=cplx)
    def test_round_trip(self, space, z):
        cfg = polygon(space, 3, 0.5)
        for ch in _charts(cfg):
            for w in chart_preimages(ch, z):
                if ch.kind is ChartKind.GLOBAL and abs(w) < 1e-3:
                    continue
                assert abs(chart_map(ch, w) - z) <= 1e-11 * max(1, abs(z))

    def test_preimage_count(self, s2_triangle):
        assert len(chart_preimages(Chart.local(s2_triangle, 1), 0.4 + 0.2j)) == 2
        assert len(chart_preimages(Chart.global_(s2_triangle), 0.4 + 0.2j)) == 3

    def test_hint_selects_branch(self, s2_triangle):
        ch = Chart.local(s2_triangle, 1)
        z = s2_triangle.primaries.w[0] + 0.04j
        a = chart_inverse(ch, z, branch_hint=0.1 + 0.1j)
        b = chart_inverse(ch, z, branch_hint=-0.1 - 0.1j)
        assert a == pytest.approx(-b)
        assert a.real > 0 and b.real < 0

    def test_ambiguous_hint(self, s2_triangle):
        ch = Chart.local(s2_triangle, 1)
        with pytest.raises(AmbiguityError):
            chart_inverse(ch, s2_triangle.primaries.w[0] + 0.01, branch_hint=0j)

    def test_global_default_branch_far_away(self, h2_triangle):
        ch = Chart.global_(h2_triangle)
        z = 0.85 + 0.1j
        w = chart_inverse(ch, z)
        assert abs(w - z / ch.alpha) < 0.2


class TestMomenta:
    @given(w=cplx, W=cplx)
    def test_round_trip(self, w, W):
        assume(abs(w) > 0.05)
        cfg = polygon("s2", 4, 0.5)
        for ch in _charts(cfg):
            assume(abs(chart_derivative(ch, w)) > 1e-3)
            Z = momentum_map(ch, w, W)
            assert abs(momentum_lift(ch, w, Z) - W) <= 1e-12 * max(1, abs(W))

    def test_undefined_at_collision(self, s2_triangle):
        from curved_rnbp import SingularityError

        with pytest.raises(SingularityError):
            momentum_map(Chart.local(s2_triangle, 1), 0, 1.0)

    def test_state_round_trip(self, triangle):
        s = ProjectedState(0.05, -0.1, 0.3, 0.7)
        C = energy_constant(triangle, s)
        for ch in _charts(triangle):
            back = from_chart(ch, to_chart(triangle, ch, s, C))
            assert np.allclose(back, s, atol=1e-12)


class TestShiftedHamiltonian:
    @pytest.mark.parametrize("space", ["s2", "h2"])
    @given(w=cplx, W=cplx, C=st.floats(-5, 5))
    def test_identity(self, space, w, W, C):
        cfg = polygon(space, 3, 0.5)
        for ch in _charts(cfg):
            if ch.kind is ChartKind.GLOBAL and abs(w) < 0.2:
                continue
            z = chart_map(ch, w)
            d = chart_derivative(ch, w)
            if not _regular(cfg, z) or abs(d) < 1e-2:
                continue
            Z = W / d.conjugate()
            ref = abs(d) ** 2 * (hamiltonian(cfg, (z.real, z.imag, Z.real, Z.imag)) + C / 2)
            val = regularized_hamiltonian(cfg, ch, RegularizedState(w, W, C))
            assert abs(val - ref) <= 1e-10 * max(1.0, abs(ref), abs(d) ** 2 * abs(C))

    @pytest.mark.parametrize("space,n", [("s2", 3), ("h2", 3), ("s2", 6), ("h2", 5)])
    def test_cancelled_matches_naive(self, space, n):
        cfg = polygon(space, n, 0.5)
        k = n - 1
        cases = ((Chart.local(cfg, k + 1), 0j), (Chart.global_(cfg), cfg.primaries.w[k]))
        for ch, base in cases:
            for mag in np.logspace(-4, -1, 13):
                for ang in np.linspace(0, 2 * np.pi, 5, endpoint=False):
                    w = base + mag * cmath.exp(1j * ang)
                    z = chart_map(ch, w)
                    naive = abs(chart_derivative(ch, w)) ** 2 * _naive_potential(cfg, z)
                    assert regularized_potential(cfg, ch, w) == pytest.approx(naive, rel=1e-8)

    def test_limit_is_finite(self, s2_triangle):
        ch = Chart.local(s2_triangle, 1)
        vals = [regularized_potential(s2_triangle, ch, 10.0**-e) for e in range(3, 12)]
        assert np.all(np.isfinite(vals))
        assert vals[-1] == pytest.approx(regularized_potential(s2_triangle, ch, 0j), rel=1e-10)

    @pytest.mark.parametrize("space", ["s2", "h2"])
    def test_finite_at_collision(self, space):
        cfg = polygon(space, 5, 0.5)
        for ch, w in ((Chart.local(cfg, 2), 0j), (Chart.global_(cfg), cfg.primaries.w[3])):
            assert math.isfinite(regularized_potential(cfg, ch, w))
            assert regularized_potential(cfg, ch, w) > 0
            rs = RegularizedState(w, 0.3 + 0.1j, 2.0)
            dw, dW, dt = regularized_field(cfg, ch, rs)
            # exact zero for the local chart; the global g'(w_i) is zero up to rounding of w_i
            assert dt == 0.0 if ch.kind is ChartKind.LOCAL else dt < 1e-28
            assert all(math.isfinite(x) for x in (dw.real, dw.imag, dW.real, dW.imag))
            assert math.isfinite(regularized_hamiltonian(cfg, ch, rs))
            assert math.isnan(physical_energy(cfg, ch, rs))

    @pytest.mark.parametrize("chart", ["identity", "local:1", "global"])
    def test_field_reparametrizes_physical_flow(self, triangle, chart):
        ch = Chart.parse(triangle, chart)
        s = ProjectedState(*(np.array(triangle.primaries.w[0].real + 0.08, ndmin=1).tolist() + [0.05, 0.4, -0.3]))
        C = energy_constant(triangle, s)
        rs = to_chart(triangle, ch, s, C, branch_hint=0.2 + 0.2j)
        dw, dW, dt = regularized_field(triangle, ch, rs)
        assert dt == pytest.approx(abs(chart_derivative(ch, rs.w_c)) ** 2, rel=1e-14)
        f = hamiltonian_field(triangle, s)
        dz = chart_derivative(ch, rs.w_c) * dw / dt
        assert dz.real == pytest.approx(f[0], rel=1e-10, abs=1e-12)
        assert dz.imag == pytest.approx(f[1], rel=1e-10, abs=1e-12)
        assert physical_energy(triangle, ch, rs) == pytest.approx(hamiltonian(triangle, s), abs=1e-12)
        assert abs(regularized_hamiltonian(triangle, ch, rs)) < 1e-12


class TestPolicy:
    def test_hysteresis(self, s2_triangle):
        cfg = s2_triangle
        d = default_delta_in(cfg)
        w1 = cfg.primaries.w[0]
        ident = Chart.identity()
        assert chart_policy(cfg, w1 + 1.5 * d, ident) is ident
        ch = chart_policy(cfg, w1 + 0.9 * d, ident)
        assert ch.label == "local:1" and ch.parent == ident
        assert chart_policy(cfg, w1 + 1.5 * d, ch) is ch
        assert chart_policy(cfg, w1 + 2.1 * d, ch) == ident

    def test_global_parent(self, h2_triangle):
        glob = Chart.global_(h2_triangle)
        w3 = h2_triangle.primaries.w[2]
        ch = chart_policy(h2_triangle, w3 + 1e-3, glob, delta_in=0.01)
        assert ch.k == 3 and ch.parent == glob
        assert chart_policy(h2_triangle, w3 + 0.03, ch, delta_in=0.01) == glob

    def test_default_delta(self, s2_triangle):
        w = s2_triangle.primaries.w
        assert default_delta_in(s2_triangle) == pytest.approx(0.05 * abs(w[0] - w[1]))
