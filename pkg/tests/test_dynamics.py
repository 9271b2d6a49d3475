import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curved_rnbp import (
    AntipodalError,
    BodyState,
    CollisionError,
    ComplexState,
    DomainError,
    ProjectedState,
    complex_hamiltonian,
    effective_potential,
    hamiltonian,
    hamiltonian_field,
    momentum_to_velocity,
    nbody_field,
    polygon,
    potential_closed_form,
    pullback_potential,
    restricted_field,
    simulate_restricted,
    velocity_to_momentum,
)
from curved_rnbp.dynamics import primary_body_states, projected_to_inertial, tangency_residuals
from curved_rnbp.validation import (
    EXTERIOR_ORBITS,
    cotangent_potential_oracle,
    exterior_orbit,
    finite_difference_field,
    inertial_consistency,
    random_plane_points,
    random_states,
)

coord = st.floats(-0.85, 0.85)
mom = st.floats(-3.0, 3.0)


def _usable(cfg, u, v, margin=0.05):
    z = complex(u, v)
    if cfg.sigma < 0 and abs(z) >= 0.9:
        return False
    bad = list(cfg.primaries.w) + list(cfg.primaries.w_hat)
    return min(abs(z - b) for b in bad) > margin


class TestPotential:
    def test_origin_value(self, s2_triangle, h2_triangle):
        # at the pole every primary sits at the same distance
        for cfg in (s2_triangle, h2_triangle):
            d = math.atan2(cfg.r, cfg.zeta) if cfg.sigma > 0 else math.asinh(cfg.r)
            ref = 3 * (1 / math.tan(d) if cfg.sigma > 0 else 1 / math.tanh(d))
            assert pullback_potential(cfg, (0.0, 0.0)) == pytest.approx(ref, rel=1e-14)

    def test_oracle_sample(self, triangle, rng):
        for p in random_plane_points(triangle, rng, 300):
            ref = cotangent_potential_oracle(triangle, p)
            assert pullback_potential(triangle, p) == pytest.approx(ref, rel=1e-10)
            assert potential_closed_form(triangle, complex(*p)) == pytest.approx(ref, rel=1e-10)

    def test_hyperbolic_sign(self, h2_triangle):
        # coth > 1: the hyperbolic force function is positive everywhere
        for p in [(0.0, 0.0), (0.5, 0.3), (-0.8, 0.1)]:
            assert pullback_potential(h2_triangle, p) > 3.0

    def test_collision(self, triangle):
        w = triangle.primaries.w[1]
        with pytest.raises(CollisionError):
            pullback_potential(triangle, (w.real, w.imag))
        with pytest.raises(CollisionError):
            potential_closed_form(triangle, w)

    def test_antipode(self, s2_triangle):
        wh = s2_triangle.primaries.w_hat[0]
        with pytest.raises(AntipodalError):
            pullback_potential(s2_triangle, (wh.real, wh.imag))
        with pytest.raises(AntipodalError):
            potential_closed_form(s2_triangle, wh)

    def test_outside_disk(self, h2_triangle):
        with pytest.raises(DomainError):
            pullback_potential(h2_triangle, (1.0, 0.2))
        with pytest.raises(DomainError):
            effective_potential(h2_triangle, (0.0, 1.0))

    def test_effective_potential_centrifugal(self, s2_triangle):
        p = (0.1, -0.2)
        rho2 = 0.05
        cen = 2 * s2_triangle.omega**2 * rho2 / (1 + rho2) ** 2
        assert effective_potential(s2_triangle, p) == pytest.approx(cen + pullback_potential(s2_triangle, p))


class TestHamiltonian:
    def test_value_at_origin(self, triangle):
        s = ProjectedState(0.0, 0.0, 0.3, -0.4)
        assert hamiltonian(triangle, s) == pytest.approx(0.25 / 8 - pullback_potential(triangle, (0, 0)), rel=1e-14)

    def test_origin_is_critical(self, triangle):
        f = hamiltonian_field(triangle, ProjectedState(0.0, 0.0, 0.0, 0.0))
        assert np.max(np.abs(f)) < 1e-12

    def test_rotation_term(self, s2_triangle):
        cfg = s2_triangle
        a = ProjectedState(0.2, 0.1, 0.0, 0.0)
        b = ProjectedState(0.2, 0.1, 0.5, 0.0)
        kin = (1 + 0.05) ** 2 / 8 * 0.25
        assert hamiltonian(cfg, b) - hamiltonian(cfg, a) == pytest.approx(kin + cfg.omega * 0.1 * 0.5, rel=1e-13)

    @pytest.mark.parametrize("space", ["s2", "h2"])
    @given(u=coord, v=coord, pu=mom, pv=mom)
    def test_complex_form_is_twice(self, space, u, v, pu, pv):
        cfg = polygon(space, 3, 0.5)
        if not _usable(cfg, u, v):
            return
        s = ProjectedState(u, v, pu, pv)
        h = hamiltonian(cfg, s)
        hc = complex_hamiltonian(cfg, ComplexState(complex(u, v), complex(pu, pv)))
        assert abs(hc - 2 * h) <= 1e-12 * max(1.0, abs(hc))

    def test_field_vs_finite_difference(self, triangle, rng):
        for s in random_states(triangle, rng, 60, margin=0.1):
            an = hamiltonian_field(triangle, s)
            fd = finite_difference_field(triangle, s)
            assert np.linalg.norm(an - fd) <= 1e-5 * np.linalg.norm(an)

    @pytest.mark.parametrize("space", ["s2", "h2"])
    @given(u=coord, v=coord, pu=mom, pv=mom)
    def test_time_reversal(self, space, u, v, pu, pv):
        # (u, v, p_u, p_v, t, omega) -> (u, -v, -p_u, p_v, -t, omega) is a symmetry
        cfg = polygon(space, 3, 0.5)
        if not _usable(cfg, u, v) or not _usable(cfg, u, -v):
            return
        f = hamiltonian_field(cfg, ProjectedState(u, v, pu, pv))
        g = hamiltonian_field(cfg, ProjectedState(u, -v, -pu, pv))
        assert np.allclose(g, [-f[0], f[1], f[2], -f[3]], rtol=1e-10, atol=1e-10)


class TestVelocity:
    @pytest.mark.parametrize("space", ["s2", "h2"])
    @given(u=coord, v=coord, a=mom, b=mom)
    def test_round_trip(self, space, u, v, a, b):
        cfg = polygon(space, 3, 0.5)
        if cfg.sigma < 0 and u * u + v * v >= 0.81:
            return
        s = velocity_to_momentum(cfg, (u, v), a, b)
        ud, vd = momentum_to_velocity(cfg, s)
        assert abs(ud - a) < 1e-12 and abs(vd - b) < 1e-12

    def test_matches_field(self, triangle):
        s = velocity_to_momentum(triangle, (0.1, 0.3), 0.7, -0.2)
        f = hamiltonian_field(triangle, s)
        assert f[0] == pytest.approx(0.7, rel=1e-13)
        assert f[1] == pytest.approx(-0.2, rel=1e-13)


class TestAmbient:
    def test_single_body_is_geodesic(self):
        # a lone body on S^2 follows a great circle: acceleration -|qdot|^2 q
        q, qd = (1.0, 0.0, 0.0), (0.0, 0.6, 0.8)
        (acc,) = nbody_field("s2", [BodyState(q, qd)])
        assert np.allclose(acc, [-1.0, 0.0, 0.0], atol=1e-15)
        (acc,) = nbody_field("h2", [BodyState((0.0, 0.0, 1.0), (0.5, 0.0, 0.0))])
        assert np.allclose(acc, [0.0, 0.0, 0.25], atol=1e-15)

    def test_polygon_accel_is_centripetal(self, triangle):
        states = primary_body_states(triangle)
        acc = nbody_field(triangle.space, states)
        om2 = triangle.omega**2
        for s, a in zip(states, acc):
            assert np.allclose(a, [-om2 * s.q[0], -om2 * s.q[1], 0.0], atol=1e-10)

    def test_two_body_collision(self):
        with pytest.raises(CollisionError):
            nbody_field("s2", [BodyState((0, 0, 1), (0, 0, 0)), BodyState((0, 0, 1), (0, 0, 0))])

    def test_two_body_antipode(self):
        with pytest.raises(AntipodalError):
            nbody_field("s2", [BodyState((0, 0, 1), (0, 0, 0)), BodyState((0, 0, -1), (0, 0, 0))])

    def test_restricted_is_massless_limit(self, triangle):
        # a fourth body of tiny mass feels the same acceleration as the particle
        st0 = projected_to_inertial(triangle, velocity_to_momentum(triangle, (0.05, -0.02), 0.1, 0.2))
        a_r = restricted_field(triangle, st0, 0.0)
        a_n = nbody_field(triangle.space, primary_body_states(triangle) + [st0])[-1]
        assert np.allclose(a_r, a_n, atol=1e-12)

    def test_inertial_state_tangent(self, triangle):
        st0 = projected_to_inertial(triangle, ProjectedState(0.3, 0.2, 0.5, -1.0), t=0.7)
        c, t = tangency_residuals(triangle.space, st0)
        assert c < 1e-14 and t < 1e-14

    def test_restricted_collision(self, triangle):
        c0 = triangle.centers[0]
        with pytest.raises(CollisionError):
            restricted_field(triangle, BodyState((c0.real, c0.imag, triangle.zeta), (0, 0, 0)))


@pytest.mark.parametrize("space", ["s2", "h2"])
def test_energy_drift_exterior_orbit(space):
    cfg = polygon(space, 3, 0.5)
    tr = simulate_restricted(cfg, exterior_orbit(cfg, *EXTERIOR_ORBITS[space]), 10.0, "identity")
    assert tr.termination.value == "completed"
    assert tr.energy_drift() < 1e-8


@pytest.mark.parametrize("space", ["s2", "h2"])
def test_rotating_matches_inertial(space):
    cfg = polygon(space, 3, 0.5)
    tr = simulate_restricted(cfg, exterior_orbit(cfg, *EXTERIOR_ORBITS[space]), 1.0, "identity")
    assert inertial_consistency(cfg, tr) < 1e-6
