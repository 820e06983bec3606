"""Potential landscapes Φ: ℝⁿ → ℝ and their sampled hypothesis checks.

A :class:`Potential` bundles the value, the gradient, and (optionally) the
Hessian quadratic form of a landscape, together with whatever structural
facts are known about it: a global lower bound, known critical points, and
whether the landscape is unbounded below. The simulation layer only ever
calls the three evaluation functions; the diagnostics layer consumes the
structural facts.

Builtin catalogue (see :func:`builtin_potentials` / :func:`make_potential`):

- ``quadratic``: Φ(x) = scale · ½|x|², the isotropic bowl.
- ``anisotropic_quadratic``: Φ(x) = ½ Σ dᵢ xᵢ², a bowl with per-axis
  curvatures dᵢ > 0.
- ``rosenbrock``: Φ(x, y) = (a − x)² + b (y − x²)², the classic curved
  valley.
- ``double_well``: Φ(x) = x⁴/4 − x²/2, two basins at x = ±1 and a saddle
  at 0.
- ``eggcrate``: Φ(x) = ½|x|² + A Σ sin² xᵢ, a bowl with periodic ripples.
- ``flat``: Φ ≡ 0.
- ``tilted_plane``: Φ(x) = s·x, unbounded below; kept in the catalogue so
  the refusal path for unbounded landscapes can be exercised.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Optional

import numpy as np

from .errors import CapabilityError, DimensionMismatchError

Vector = np.ndarray


@dataclasses.dataclass(frozen=True, eq=False)
class Potential:
    """A landscape with value, gradient, and optional curvature information.

    Attributes:
        name: Human-readable identifier, used in reports and error messages.
        dim: Dimension n of the domain ℝⁿ.
        value_fn: x ↦ Φ(x).
        gradient_fn: x ↦ ∇Φ(x), shape (n,).
        hessian_quadform_fn: (x, v) ↦ vᵀ∇²Φ(x)v, or None when the landscape
            does not provide second derivatives. The full surface model and
            the reaction force need this; the reduced model does not.
        lower_bound: A number L with Φ(x) ≥ L for all x, or None when no
            bound is known.
        known_critical_points: Points where ∇Φ vanishes exactly, if any are
            known in closed form. Used by the hypothesis checks.
        unbounded_below: True when the landscape is known to have no lower
            bound. Such landscapes can be simulated but never certified.
    """

    name: str
    dim: int
    value_fn: Callable[[Vector], float] = dataclasses.field(repr=False)
    gradient_fn: Callable[[Vector], Vector] = dataclasses.field(repr=False)
    hessian_quadform_fn: Optional[Callable[[Vector, Vector], float]] = dataclasses.field(
        default=None, repr=False
    )
    lower_bound: Optional[float] = None
    known_critical_points: tuple = ()
    unbounded_below: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"potential dim must be >= 1, got {self.dim}")
        if self.unbounded_below and self.lower_bound is not None:
            raise ValueError("a potential cannot both declare a lower bound and be unbounded below")


def _as_point(p: Potential, x, name: str = "x") -> Vector:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.shape != (p.dim,):
        raise DimensionMismatchError(
            f"{name} has shape {arr.shape}, expected ({p.dim},) for potential '{p.name}'"
        )
    return arr


def value(p: Potential, x) -> float:
    """Evaluate Φ(x)."""
    return float(p.value_fn(_as_point(p, x)))


def gradient(p: Potential, x) -> Vector:
    """Evaluate ∇Φ(x) as a float array of shape (dim,)."""
    g = np.asarray(p.gradient_fn(_as_point(p, x)), dtype=float)
    if g.shape != (p.dim,):
        raise DimensionMismatchError(
            f"gradient of '{p.name}' returned shape {g.shape}, expected ({p.dim},)"
        )
    return g


def hessian_quadform(p: Potential, x, v) -> float:
    """Evaluate vᵀ∇²Φ(x)v.

    Raises:
        CapabilityError: if the potential carries no second-derivative
            information.
    """
    if p.hessian_quadform_fn is None:
        raise CapabilityError(
            f"potential '{p.name}' has no Hessian quadratic form; "
            "fall back to a central second difference of value() along v"
        )
    xa = _as_point(p, x)
    va = _as_point(p, v, name="v")
    return float(p.hessian_quadform_fn(xa, va))


def validate_gradient(p: Potential, x, h: float = 1e-5) -> float:
    """Compare the analytic gradient against central differences at x.

    Each coordinate of ∇Φ is checked against (Φ(x+h eᵢ) − Φ(x−h eᵢ)) / 2h.

    Args:
        p: Potential under test.
        x: Point where the comparison happens.
        h: Difference step. The default balances O(h²) truncation against
            rounding for landscapes with values of order one.

    Returns:
        The largest absolute per-coordinate discrepancy.
    """
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    xa = _as_point(p, x)
    g = gradient(p, xa)
    worst = 0.0
    for i in range(p.dim):
        step = np.zeros(p.dim)
        step[i] = h
        fd = (value(p, xa + step) - value(p, xa - step)) / (2.0 * h)
        worst = max(worst, abs(fd - g[i]))
    return worst


def estimate_gradient_lipschitz(
    p: Potential,
    center,
    radius: float,
    n_pairs: int = 200,
    seed: int = 0,
) -> float:
    """Estimate the Lipschitz constant of ∇Φ on a ball by random pairs.

    Draws ``n_pairs`` point pairs uniformly from the ball of the given
    radius around ``center`` and returns the largest observed ratio
    |∇Φ(a) − ∇Φ(b)| / |a − b|. A sampled lower estimate of the true local
    constant; pairs closer than 1e-9 are skipped to avoid 0/0.
    """
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    c = _as_point(p, center, name="center")
    rng = np.random.default_rng(seed)

    def draw() -> Vector:
        # Uniform in the ball: gaussian direction, radius ~ U^(1/dim).
        d = rng.normal(size=p.dim)
        d /= max(np.linalg.norm(d), 1e-300)
        r = radius * rng.uniform() ** (1.0 / p.dim)
        return c + r * d

    best = 0.0
    for _ in range(n_pairs):
        a, b = draw(), draw()
        sep = float(np.linalg.norm(a - b))
        if sep < 1e-9:
            continue
        ratio = float(np.linalg.norm(gradient(p, a) - gradient(p, b))) / sep
        best = max(best, ratio)
    return best


@dataclasses.dataclass(frozen=True)
class PotentialHypothesesReport:
    """Sampled evidence for the structural assumptions on a landscape.

    The checks are sampled surrogates, not proofs: ``gradient_consistent``
    certifies agreement with finite differences at the sample points only,
    and ``gradient_lipschitz_estimate`` is a lower estimate of the local
    Lipschitz constant of ∇Φ.
    """

    potential_name: str
    n_points: int
    box_halfwidth: float
    max_gradient_residual: float
    gradient_consistent: bool
    gradient_lipschitz_estimate: float
    min_sampled_value: float
    lower_bound: Optional[float]
    lower_bound_violations: int
    critical_point_max_grad_norm: Optional[float]
    unbounded_below: bool

    @property
    def satisfied(self) -> bool:
        """True when every sampled surrogate passed and a lower bound exists."""
        cp_ok = (
            self.critical_point_max_grad_norm is None
            or self.critical_point_max_grad_norm <= 1e-10
        )
        return (
            self.gradient_consistent
            and not self.unbounded_below
            and self.lower_bound_violations == 0
            and cp_ok
        )


def verify_potential_hypotheses(
    p: Potential,
    box_halfwidth: float = 2.0,
    n_points: int = 100,
    h: float = 1e-5,
    grad_tol: float = 1e-4,
    seed: int = 0,
) -> PotentialHypothesesReport:
    """Check the landscape assumptions on a sampled box.

    Samples ``n_points`` uniform points in [−box_halfwidth, box_halfwidth]ⁿ
    and gathers: the worst finite-difference gradient residual, the number
    of sampled values below the declared lower bound, the gradient norm at
    every known critical point, and a random-pair Lipschitz estimate for
    the gradient.
    """
    if box_halfwidth <= 0:
        raise ValueError(f"box_halfwidth must be positive, got {box_halfwidth}")
    if n_points < 1:
        raise ValueError(f"n_points must be >= 1, got {n_points}")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-box_halfwidth, box_halfwidth, size=(n_points, p.dim))

    worst_resid = 0.0
    min_val = math.inf
    violations = 0
    for row in pts:
        worst_resid = max(worst_resid, validate_gradient(p, row, h=h))
        val = value(p, row)
        min_val = min(min_val, val)
        if p.lower_bound is not None and val < p.lower_bound - 1e-12 * (1.0 + abs(p.lower_bound)):
            violations += 1

    cp_norm: Optional[float] = None
    if p.known_critical_points:
        cp_norm = max(
            float(np.linalg.norm(gradient(p, cp))) for cp in p.known_critical_points
        )

    lip = estimate_gradient_lipschitz(
        p, np.zeros(p.dim), radius=box_halfwidth * math.sqrt(p.dim), seed=seed + 1
    )

    return PotentialHypothesesReport(
        potential_name=p.name,
        n_points=n_points,
        box_halfwidth=box_halfwidth,
        max_gradient_residual=worst_resid,
        gradient_consistent=worst_resid <= grad_tol,
        gradient_lipschitz_estimate=lip,
        min_sampled_value=min_val,
        lower_bound=p.lower_bound,
        lower_bound_violations=violations,
        critical_point_max_grad_norm=cp_norm,
        unbounded_below=p.unbounded_below,
    )


# --- builtin catalogue -----------------------------------------------------


def quadratic(dim: int = 1, scale: float = 1.0) -> Potential:
    """Isotropic bowl Φ(x) = scale · ½|x|²."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"quadratic: dim must be >= 1, got {dim}")
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError(f"quadratic: scale must be positive and finite, got {scale}")
    return Potential(
        name=f"quadratic(dim={dim}, scale={scale:g})",
        dim=dim,
        value_fn=lambda x: 0.5 * scale * float(x @ x),
        gradient_fn=lambda x: scale * x,
        hessian_quadform_fn=lambda x, v: scale * float(v @ v),
        lower_bound=0.0,
        known_critical_points=(np.zeros(dim),),
    )


def anisotropic_quadratic(diag=(1.0, 4.0)) -> Potential:
    """Axis-aligned bowl Φ(x) = ½ Σ dᵢ xᵢ² with curvatures dᵢ > 0."""
    d = np.atleast_1d(np.asarray(diag, dtype=float))
    if d.ndim != 1 or d.size < 1:
        raise ValueError("anisotropic_quadratic: diag must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(d)) or np.any(d <= 0):
        raise ValueError(f"anisotropic_quadratic: all diag entries must be positive and finite, got {d.tolist()}")
    dim = d.size
    return Potential(
        name=f"anisotropic_quadratic(diag={d.tolist()})",
        dim=dim,
        value_fn=lambda x: 0.5 * float(d @ (x * x)),
        gradient_fn=lambda x: d * x,
        hessian_quadform_fn=lambda x, v: float(d @ (v * v)),
        lower_bound=0.0,
        known_critical_points=(np.zeros(dim),),
    )


def rosenbrock(a: float = 1.0, b: float = 100.0) -> Potential:
    """Curved valley Φ(x, y) = (a − x)² + b (y − x²)², minimum at (a, a²)."""
    if not (math.isfinite(a) and math.isfinite(b) and b > 0):
        raise ValueError(f"rosenbrock: need finite a and b > 0, got a={a}, b={b}")

    def val(x: Vector) -> float:
        return (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2

    def grad(x: Vector) -> Vector:
        gap = x[1] - x[0] ** 2
        return np.array([-2.0 * (a - x[0]) - 4.0 * b * x[0] * gap, 2.0 * b * gap])

    def quad(x: Vector, v: Vector) -> float:
        # Hessian entries: Φ_xx = 2 + 12 b x² − 4 b y, Φ_xy = −4 b x, Φ_yy = 2 b.
        pxx = 2.0 + 12.0 * b * x[0] ** 2 - 4.0 * b * x[1]
        pxy = -4.0 * b * x[0]
        pyy = 2.0 * b
        return pxx * v[0] ** 2 + 2.0 * pxy * v[0] * v[1] + pyy * v[1] ** 2

    return Potential(
        name=f"rosenbrock(a={a:g}, b={b:g})",
        dim=2,
        value_fn=val,
        gradient_fn=grad,
        hessian_quadform_fn=quad,
        lower_bound=0.0,
        known_critical_points=(np.array([a, a * a]),),
    )


def double_well() -> Potential:
    """Two-basin landscape Φ(x) = x⁴/4 − x²/2: minima at ±1, saddle at 0."""
    return Potential(
        name="double_well",
        dim=1,
        value_fn=lambda x: 0.25 * x[0] ** 4 - 0.5 * x[0] ** 2,
        gradient_fn=lambda x: np.array([x[0] ** 3 - x[0]]),
        hessian_quadform_fn=lambda x, v: (3.0 * x[0] ** 2 - 1.0) * v[0] ** 2,
        lower_bound=-0.25,
        known_critical_points=(np.array([-1.0]), np.array([0.0]), np.array([1.0])),
    )


def eggcrate(dim: int = 2, amplitude: float = 1.0) -> Potential:
    """Rippled bowl Φ(x) = ½|x|² + A Σ sin² xᵢ with A ≥ 0."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"eggcrate: dim must be >= 1, got {dim}")
    if not (amplitude >= 0 and math.isfinite(amplitude)):
        raise ValueError(f"eggcrate: amplitude must be >= 0 and finite, got {amplitude}")
    amp = float(amplitude)
    return Potential(
        name=f"eggcrate(dim={dim}, amplitude={amp:g})",
        dim=dim,
        value_fn=lambda x: 0.5 * float(x @ x) + amp * float(np.sum(np.sin(x) ** 2)),
        gradient_fn=lambda x: x + amp * np.sin(2.0 * x),
        hessian_quadform_fn=lambda x, v: float(np.sum((1.0 + 2.0 * amp * np.cos(2.0 * x)) * v * v)),
        lower_bound=0.0,
        known_critical_points=(np.zeros(dim),),
    )


def flat(dim: int = 1) -> Potential:
    """The trivial landscape Φ ≡ 0 (free motion under friction alone)."""
    dim = int(dim)
    if dim < 1:
        raise ValueError(f"flat: dim must be >= 1, got {dim}")
    return Potential(
        name=f"flat(dim={dim})",
        dim=dim,
        value_fn=lambda x: 0.0,
        gradient_fn=lambda x: np.zeros(dim),
        hessian_quadform_fn=lambda x, v: 0.0,
        lower_bound=0.0,
        known_critical_points=(np.zeros(dim),),
    )


def tilted_plane(slope=(1.0,)) -> Potential:
    """Linear landscape Φ(x) = s·x, unbounded below.

    Simulation is allowed, certification is not: there is no lower bound,
    so the energy-based guarantees have nothing to anchor to.
    """
    s = np.atleast_1d(np.asarray(slope, dtype=float))
    if s.ndim != 1 or s.size < 1:
        raise ValueError("tilted_plane: slope must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(s)):
        raise ValueError(f"tilted_plane: slope entries must be finite, got {s.tolist()}")
    if np.linalg.norm(s) == 0.0:
        raise ValueError("tilted_plane: slope must be nonzero (use 'flat' for a level landscape)")
    dim = s.size
    return Potential(
        name=f"tilted_plane(slope={s.tolist()})",
        dim=dim,
        value_fn=lambda x: float(s @ x),
        gradient_fn=lambda x: s.copy(),
        hessian_quadform_fn=lambda x, v: 0.0,
        lower_bound=None,
        known_critical_points=(),
        unbounded_below=True,
    )


_BUILTINS: dict[str, tuple[Callable[..., Potential], str]] = {
    "quadratic": (quadratic, "isotropic bowl scale*0.5*|x|^2 (params: dim, scale)"),
    "anisotropic_quadratic": (
        anisotropic_quadratic,
        "axis-aligned bowl 0.5*sum(d_i x_i^2) (params: diag)",
    ),
    "rosenbrock": (rosenbrock, "curved valley (a-x)^2 + b(y-x^2)^2 (params: a, b)"),
    "double_well": (double_well, "x^4/4 - x^2/2, minima at +-1 (no params)"),
    "eggcrate": (eggcrate, "0.5*|x|^2 + A*sum(sin^2 x_i) (params: dim, amplitude)"),
    "flat": (flat, "zero landscape (params: dim)"),
    "tilted_plane": (
        tilted_plane,
        "linear s.x, unbounded below, simulation only (params: slope)",
    ),
}


def builtin_potentials() -> list[tuple[str, str]]:
    """List (name, description) for every builtin landscape, sorted by name."""
    return sorted((name, desc) for name, (_, desc) in _BUILTINS.items())


def make_potential(name: str, **params) -> Potential:
    """Construct a builtin landscape by name.

    Raises:
        ValueError: for an unknown name (the message lists the catalogue) or
            for parameters the factory rejects.
    """
    if name not in _BUILTINS:
        known = ", ".join(sorted(_BUILTINS))
        raise ValueError(f"unknown potential '{name}'; builtin potentials: {known}")
    factory, _ = _BUILTINS[name]
    try:
        return factory(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for potential '{name}': {exc}") from None
