"""Phase-space vector fields and mechanical observables.

Two models share one phase space (position x, velocity v):

- The reduced model: ẍ + λ(t) ẋ + ∇Φ(x) = 0, written first-order as
  ẋ = v, v̇ = −λ(t) v − ∇Φ(x).
- The full surface model for a bead of mass m on the graph of Φ under
  gravity g, with the reaction force eliminated:
  v̇ = −(λ(t)/m) v − (g + vᵀ∇²Φ(x)v) / (1 + |∇Φ(x)|²) · ∇Φ(x).

The reduced model is the g-normalized shallow-slope limit of the full one:
scale the landscape down and the bracketed factor tends to g, so
(1/g) · v̇_full tends to the reduced field with schedule λ/(m·g).

Observables: mechanical energy E = ½|v|² + Φ(x), its dissipation rate
Ė = −λ(t)|v|², and the normal reaction force
R = m (g + vᵀ∇²Φ(x)v) / √(1 + |∇Φ(x)|²), whose sign certifies contact
(R ≤ 0 means the bead would have to be pulled onto the surface).
"""

from __future__ import annotations

import dataclasses
import math
import warnings

import numpy as np

from .errors import ContactLossWarning, DivergenceError
from .friction import FrictionSchedule, lambda_at
from .potentials import Potential, Vector, gradient, hessian_quadform, value


@dataclasses.dataclass(frozen=True)
class PhaseState:
    """A point (t, x, v) of the extended phase space."""

    t: float
    x: Vector
    v: Vector

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "v", np.atleast_1d(np.asarray(self.v, dtype=float)))
        if self.x.shape != self.v.shape:
            raise ValueError(f"x and v must have the same shape, got {self.x.shape} and {self.v.shape}")

    @property
    def dim(self) -> int:
        return self.x.size

    def is_finite(self) -> bool:
        return (
            math.isfinite(self.t)
            and bool(np.all(np.isfinite(self.x)))
            and bool(np.all(np.isfinite(self.v)))
        )


@dataclasses.dataclass(frozen=True)
class MechanicalParams:
    """Mass and gravity for the full surface model."""

    mass: float = 1.0
    gravity: float = 9.81

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive and finite, got {self.mass}")
        if not (self.gravity > 0 and math.isfinite(self.gravity)):
            raise ValueError(f"gravity must be positive and finite, got {self.gravity}")


def _require_finite(state: PhaseState, context: str) -> None:
    if not state.is_finite():
        raise DivergenceError(f"non-finite state passed to {context} at t={state.t}")


def hbft_field(p: Potential, s: FrictionSchedule, state: PhaseState) -> tuple[Vector, Vector]:
    """Right-hand side of the reduced model: (ẋ, v̇) = (v, −λ(t)v − ∇Φ(x))."""
    _require_finite(state, "hbft_field")
    lam = lambda_at(s, state.t)
    return state.v, -lam * state.v - gradient(p, state.x)


def full_surface_field(
    p: Potential, s: FrictionSchedule, mp: MechanicalParams, state: PhaseState
) -> tuple[Vector, Vector]:
    """Right-hand side of the bead-on-surface model.

    Requires a potential with a Hessian quadratic form (the curvature term
    vᵀ∇²Φ v enters the constraint elimination).

    Raises:
        CapabilityError: if the potential has no Hessian quadratic form.
        DivergenceError: if the state is non-finite.
    """
    _require_finite(state, "full_surface_field")
    lam = lambda_at(s, state.t)
    g = gradient(p, state.x)
    quad = hessian_quadform(p, state.x, state.v)
    factor = (mp.gravity + quad) / (1.0 + float(g @ g))
    dv = -(lam / mp.mass) * state.v - factor * g
    return state.v, dv


def _reaction_value(p: Potential, mp: MechanicalParams, state: PhaseState) -> float:
    g = gradient(p, state.x)
    quad = hessian_quadform(p, state.x, state.v)
    return mp.mass * (mp.gravity + quad) / math.sqrt(1.0 + float(g @ g))


def reaction_force(p: Potential, mp: MechanicalParams, state: PhaseState) -> float:
    """Normal reaction force R = m (g + vᵀ∇²Φv) / √(1 + |∇Φ|²).

    Issues a :class:`ContactLossWarning` when R ≤ 0: the surface can only
    push, so a non-positive reaction means the bead leaves the surface and
    the model stops being meaningful there.
    """
    _require_finite(state, "reaction_force")
    r = _reaction_value(p, mp, state)
    if r <= 0.0:
        warnings.warn(
            f"reaction force {r:.6g} <= 0 at t={state.t}: contact assumption violated",
            ContactLossWarning,
            stacklevel=2,
        )
    return r


def energy(p: Potential, state: PhaseState) -> float:
    """Mechanical energy E = ½|v|² + Φ(x)."""
    return 0.5 * float(state.v @ state.v) + value(p, state.x)


def dissipation_rate(s: FrictionSchedule, state: PhaseState) -> float:
    """Instantaneous energy drain Ė = −λ(t)|v|² along the reduced flow."""
    # + 0.0 normalizes the v = 0 case to plain zero instead of -0.0
    return -lambda_at(s, state.t) * float(state.v @ state.v) + 0.0
