"""Vector fields and mechanical observables: frozen pointwise examples, the
reaction-force sign convention, and the reduced model as the gravity-scaled
limit of the surface model."""

from __future__ import annotations

import math

import numpy as np
import pytest

from hbft import (
    CapabilityError,
    ContactLossWarning,
    DimensionMismatchError,
    MechanicalParams,
    PhaseState,
    dissipation_rate,
    energy,
    full_surface_field,
    hbft_field,
    reaction_force,
)
from hbft.friction import constant, oscillating, power_decay
from hbft.potentials import Potential, double_well, flat, quadratic


def state(t: float, x, v) -> PhaseState:
    return PhaseState(t=t, x=np.asarray(x, float), v=np.asarray(v, float))


def test_reduced_field_at_rest():
    dx, dv = hbft_field(quadratic(dim=2), constant(1.0), state(0.0, [1.0, 0.0], [0.0, 0.0]))
    assert np.all(dx == 0.0)
    assert dv == pytest.approx([-1.0, 0.0])


def test_reduced_field_with_oscillating_damping():
    # lambda(0) = 2, gradient = x: dv = -2*(1,1) - (0,1)
    s = oscillating(base=2.0, amplitude=1.0, angular_frequency=1.0)
    dx, dv = hbft_field(quadratic(dim=2), s, state(0.0, [0.0, 1.0], [1.0, 1.0]))
    assert dx == pytest.approx([1.0, 1.0])
    assert dv == pytest.approx([-2.0, -3.0])


def test_reduced_field_vanishes_at_equilibrium():
    dx, dv = hbft_field(double_well(), constant(1.0), state(3.0, [1.0], [0.0]))
    assert np.all(dx == 0.0) and np.all(dv == 0.0)


def test_surface_field_at_rest_halves_unit_gradient():
    # |grad| = 1 so the normal correction divides the pull by 1 + 1
    mp = MechanicalParams(mass=1.0, gravity=1.0)
    dx, dv = full_surface_field(quadratic(dim=2), constant(0.0), mp, state(0.0, [1.0, 0.0], [0.0, 0.0]))
    assert dv == pytest.approx([-0.5, 0.0])


def test_surface_field_mass_scales_damping_only():
    mp1 = MechanicalParams(mass=1.0, gravity=1.0)
    mp2 = MechanicalParams(mass=2.0, gravity=1.0)
    st0 = state(0.0, [1.0, 0.0], [0.2, 0.0])
    _, dv1 = full_surface_field(quadratic(dim=2), constant(1.0), mp1, st0)
    _, dv2 = full_surface_field(quadratic(dim=2), constant(1.0), mp2, st0)
    # halving lambda/m changes only the damping term
    gap = dv1 - dv2
    assert gap == pytest.approx([-0.5 * 0.2, 0.0])


def test_surface_field_requires_curvature_data():
    bare = Potential(name="bare", dim=1, value_fn=lambda x: 0.0, gradient_fn=lambda x: np.zeros(1))
    mp = MechanicalParams()
    with pytest.raises(CapabilityError):
        full_surface_field(bare, constant(1.0), mp, state(0.0, [0.0], [1.0]))


def test_reaction_force_flat_surface_carries_weight():
    mp = MechanicalParams(mass=1.0, gravity=9.81)
    assert reaction_force(flat(dim=2), mp, state(0.0, [3.0, -1.0], [5.0, 0.0])) == pytest.approx(9.81)


def test_reaction_force_on_slope():
    # m(g + v'Hv)/sqrt(1+|grad|^2) = 2*1/sqrt(2) at rest on unit slope
    mp = MechanicalParams(mass=2.0, gravity=1.0)
    r = reaction_force(quadratic(dim=1), mp, state(0.0, [1.0], [0.0]))
    assert r == pytest.approx(2.0 / math.sqrt(2.0))


def test_reaction_force_negative_warns_contact_loss():
    # concave hilltop crossed fast: v'Hv = 4*(-1) dominates gravity
    mp = MechanicalParams(mass=1.0, gravity=1.0)
    with pytest.warns(ContactLossWarning):
        r = reaction_force(double_well(), mp, state(0.0, [0.0], [2.0]))
    assert r == pytest.approx(-3.0)


def test_energy_examples():
    assert energy(quadratic(dim=2), state(0.0, [1.0, 0.0], [0.0, 1.0])) == pytest.approx(1.0)
    assert energy(double_well(), state(0.0, [1.0], [0.0])) == pytest.approx(-0.25)
    assert energy(flat(dim=1), state(0.0, [9.0], [2.0])) == pytest.approx(2.0)


def test_dissipation_rate_examples():
    at_rest = dissipation_rate(constant(5.0), state(1.0, [1.0], [0.0]))
    assert at_rest == 0.0
    # exact zero, not negative zero, so CSV cells stay clean
    assert math.copysign(1.0, at_rest) == 1.0
    assert dissipation_rate(constant(2.0), state(0.0, [0.0, 0.0], [1.0, 1.0])) == pytest.approx(-4.0)
    assert dissipation_rate(power_decay(1.0, 1.0), state(3.0, [0.0, 0.0], [2.0, 0.0])) == pytest.approx(-1.0)


def test_dissipation_never_positive_for_nonnegative_schedule():
    rng = np.random.default_rng(0)
    s = oscillating(2.0, 1.0, 1.3)
    for _ in range(50):
        st0 = state(rng.uniform(0, 10), rng.normal(size=2), rng.normal(size=2))
        assert dissipation_rate(s, st0) <= 0.0


def test_reduced_model_is_gravity_scaled_surface_limit():
    # With the landscape scaled by eps and damping rescaled by 1/(m g), the
    # surface acceleration divided by g approaches the reduced field; the
    # residual shrinks monotonically in eps.
    mp = MechanicalParams(mass=2.0, gravity=3.0)
    lam = oscillating(base=2.0, amplitude=1.0, angular_frequency=1.0)
    st0 = state(0.7, [1.0, 0.5], [0.3, -0.2])
    discrepancies = []
    for eps in (1e-1, 1e-2, 1e-3):
        scaled = quadratic(dim=2, scale=eps)
        reduced_lam = oscillating(base=2.0 / (mp.mass * mp.gravity),
                                  amplitude=1.0 / (mp.mass * mp.gravity),
                                  angular_frequency=1.0)
        _, dv_full = full_surface_field(scaled, lam, mp, st0)
        _, dv_red = hbft_field(scaled, reduced_lam, st0)
        gap = np.linalg.norm(dv_full / mp.gravity - dv_red)
        discrepancies.append(gap / max(np.linalg.norm(dv_red), 1e-30))
    assert discrepancies[0] > discrepancies[1] > discrepancies[2]
    assert discrepancies[2] <= 2e-3


def test_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatchError):
        hbft_field(quadratic(dim=2), constant(1.0), state(0.0, [1.0], [0.0]))
    with pytest.raises(ValueError):
        PhaseState(t=0.0, x=np.array([1.0, 2.0]), v=np.array([1.0]))


def test_phase_state_basics():
    st0 = state(0.0, [1.0, 2.0], [0.0, 0.0])
    assert st0.dim == 2
    assert st0.is_finite()
    bad = state(0.0, [np.inf, 0.0], [0.0, 0.0])
    assert not bad.is_finite()


def test_mechanical_params_validated():
    with pytest.raises(ValueError):
        MechanicalParams(mass=0.0)
    with pytest.raises(ValueError):
        MechanicalParams(gravity=-9.81)
