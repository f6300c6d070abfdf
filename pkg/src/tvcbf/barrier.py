"""Backstepping barrier chains over integrator dynamics.

Level 1 is a user barrier on the state (positive inside the safe set).
Each further level adds the gain-scaled previous level, its rate of
change along the drift, and - in the robust construction - subtracts a
smooth margin that dominates the worst-case disturbance action:

    level[i] = gain[i-1] * g(t)**(e*(i-1)) * level[i-1]
               + d(level[i-1])/dx . (A x)
               - margin[i-1]                  (robust only)

Values, spatial gradients and explicit time partials are produced by
lifted arithmetic: the recursion re-lifts its inputs at every level, so
the gradient of level i-1 is available as differentiable quantities
when level i is formed.  No finite differencing, no symbolic algebra.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff
from .autodiff import FirstOrderNumber, SecondOrderNumber, unwrap
from .chain import IntegratorChain
from .errors import DimensionError, ParameterError, UnsafeInitializationError
from .gains import (
    GainSchedule,
    initial_gain_perturbed,
    initial_gain_unperturbed,
)

__all__ = [
    "CircularObstacle",
    "HalfPlane",
    "PolynomialBarrier",
    "BarrierEvaluation",
    "ChainEvaluation",
    "BarrierChain",
    "robust_margin",
    "auto_gains",
]

DEFAULT_SMOOTHING = 0.2


# -- barrier oracles ----------------------------------------------------


@dataclass(frozen=True)
class CircularObstacle:
    """Positive outside a ball around ``center`` in the level-1 block.

    h(x) = 0.5 * (|p - center|^2 - radius^2) where p holds the first
    len(center) state entries.
    """

    center: tuple[float, ...]
    radius: float

    smoothness_order = None  # polynomial, differentiable to any order

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.center:
            raise ParameterError("obstacle center must have at least one coordinate")
        if self.radius <= 0.0:
            raise ParameterError(f"obstacle radius must be positive, got {self.radius}")

    def __call__(self, x):
        acc = 0.0
        for j, c in enumerate(self.center):
            dj = x[j] - c
            acc = acc + dj * dj
        return 0.5 * (acc - self.radius * self.radius)


@dataclass(frozen=True)
class HalfPlane:
    """h(x) = normal . x - offset over the leading state entries."""

    normal: tuple[float, ...]
    offset: float = 0.0

    smoothness_order = None

    def __post_init__(self):
        object.__setattr__(self, "normal", tuple(float(a) for a in self.normal))
        if not any(self.normal):
            raise ParameterError("half-plane normal must be nonzero")

    def __call__(self, x):
        acc = 0.0
        for j, a in enumerate(self.normal):
            if a != 0.0:
                acc = acc + a * x[j]
        return acc - self.offset


@dataclass(frozen=True)
class PolynomialBarrier:
    """Sum of monomials: terms are (coefficient, ((state index, power), ...))."""

    terms: tuple[tuple[float, tuple[tuple[int, int], ...]], ...]

    smoothness_order = None

    def __post_init__(self):
        canon = tuple(
            (float(c), tuple((int(j), int(p)) for j, p in factors))
            for c, factors in self.terms
        )
        object.__setattr__(self, "terms", canon)
        if not canon:
            raise ParameterError("polynomial barrier needs at least one term")
        for _, factors in canon:
            if any(p < 1 or j < 0 for j, p in factors):
                raise ParameterError(f"bad monomial factors {factors}")

    def __call__(self, x):
        acc = 0.0
        for coeff, factors in self.terms:
            term = coeff
            for j, p in factors:
                term = term * (x[j] ** p if p > 1 else x[j])
            acc = acc + term
        return acc


# -- evaluation records -------------------------------------------------


@dataclass(frozen=True)
class BarrierEvaluation:
    """One chain level at one (state, time) point."""

    level: int
    value: float
    gradient: np.ndarray  # spatial only, length order*axes
    time_partial: float


@dataclass(frozen=True)
class ChainEvaluation:
    """All level values plus the top level's derivatives, in one pass."""

    values: np.ndarray  # h_1 .. h_n
    gradient: np.ndarray  # spatial gradient of the top level
    time_partial: float  # time partial of the top level
    drift_rate: float  # gradient . (A x) of the top level
    level1_gradient_norm: float


def robust_margin(gradient, mu: float, theta: float) -> float:
    """Smooth upper bound on the worst-case disturbance action.

    (1/(4 mu)) |g|^2 + mu theta^2 >= |g| theta for every mu > 0, with
    equality exactly at |g| = 2 mu theta.
    """
    if mu <= 0.0:
        raise ParameterError(f"smoothing constant must be positive, got {mu}")
    if theta < 0.0:
        raise ParameterError(f"disturbance bound must be nonnegative, got {theta}")
    g = np.asarray(gradient, dtype=float)
    return float(g @ g) / (4.0 * mu) + mu * theta * theta


class _LevelSink:
    """Collects per-level values (and the level-1 gradient) during a pass."""

    __slots__ = ("values", "grad1_sq")

    def __init__(self):
        self.values = {}
        self.grad1_sq = None


class BarrierChain:
    """Immutable barrier chain over an integrator system.

    ``smoothing`` lists one positive constant per level; level i's
    constant shapes the margin subtracted when forming level i+1, and
    the last one shapes the filter constraint's margin.  The robust
    flag comes from the gain schedule; the unperturbed construction
    ignores ``disturbance_bound`` (it must be 0 there).
    """

    def __init__(
        self,
        system: IntegratorChain,
        oracle,
        schedule: GainSchedule,
        smoothing=None,
        disturbance_bound: float = 0.0,
        include_time_partial: bool = True,
    ):
        n = system.order
        if len(schedule.levels) != n:
            raise ParameterError(
                f"schedule has {len(schedule.levels)} levels, system order is {n}"
            )
        if smoothing is None:
            smoothing = (DEFAULT_SMOOTHING,) * n
        smoothing = tuple(float(v) for v in smoothing)
        if len(smoothing) != n:
            raise ParameterError(
                f"need one smoothing constant per level ({n}), got {len(smoothing)}"
            )
        if any(v <= 0.0 for v in smoothing):
            raise ParameterError(f"smoothing constants must be positive: {smoothing}")
        if disturbance_bound < 0.0:
            raise ParameterError(
                f"disturbance bound must be nonnegative, got {disturbance_bound}"
            )
        if not schedule.robust and disturbance_bound != 0.0:
            raise ParameterError(
                "unperturbed construction takes no disturbance bound; "
                "use a robust schedule or bound 0"
            )
        declared = getattr(oracle, "smoothness_order", None)
        if declared is not None and declared < n:
            raise ParameterError(
                f"barrier oracle is only C^{declared}; chain of order {n} "
                f"needs at least C^{n}"
            )
        self.system = system
        self.oracle = oracle
        self.schedule = schedule
        self.smoothing = smoothing
        self.disturbance_bound = float(disturbance_bound)
        self.include_time_partial = bool(include_time_partial)
        self._bound_sq = self.disturbance_bound**2
        # exponent on the gain value when scaling level i, index i-1
        self._exponents = tuple(schedule.level_exponent(i) for i in range(1, n + 1))

    @property
    def order(self) -> int:
        return self.system.order

    @property
    def axes(self) -> int:
        return self.system.axes

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def robust(self) -> bool:
        return self.schedule.robust

    @property
    def gain_function(self):
        return self.schedule.function

    def with_levels(self, levels) -> "BarrierChain":
        """Copy of this chain with replaced per-level gain constants."""
        return BarrierChain(
            self.system,
            self.oracle,
            replace(self.schedule, levels=tuple(levels)),
            self.smoothing,
            self.disturbance_bound,
            self.include_time_partial,
        )

    # -- recursive lifted evaluation ----------------------------------

    def _eval_scalar(self, i, xt, sink):
        """Level-i value in duck arithmetic; xt = state entries plus time.

        Gradients of the lower level are obtained by re-lifting the
        inputs, so the returned object keeps the ambient lift depth of
        ``xt`` and carries exact derivatives at that depth.
        """
        dim = self.system.dim
        if i == 1:
            val = self.oracle(xt)
            if sink is not None:
                sink.values[1] = unwrap(val)
                if isinstance(val, (SecondOrderNumber, FirstOrderNumber)):
                    sink.grad1_sq = math.fsum(
                        unwrap(g) ** 2 for g in val.grad[:dim]
                    )
            return val
        seeds = autodiff.lift_first(xt)
        prev = self._eval_scalar(i - 1, seeds, sink)
        g = prev.grad
        m = self.system.axes
        lf = 0.0
        for j in range(dim - m):
            lf = lf + g[j] * xt[j + m]
        scale = self.schedule.levels[i - 2] * (
            self.gain_function.value(xt[dim]) ** self._exponents[i - 2]
        )
        val = scale * prev.value + lf
        if self.schedule.robust:
            sq = 0.0
            for j in range(dim):
                sq = sq + g[j] * g[j]
            mu = self.smoothing[i - 2]
            val = val - (sq / (4.0 * mu) + mu * self._bound_sq)
        if sink is not None:
            sink.values[i] = unwrap(val)
        return val

    def _assemble(self, i, x, t, sink=None):
        """Level-i evaluation with spatial gradient and time partial.

        The level below is evaluated once under a joint (x, t) lift;
        level i's derivatives then follow from the product and chain
        rules, which stays one lift shallower than differentiating
        level i directly.
        """
        x = np.asarray(x, dtype=float)
        dim = self.system.dim
        m = self.system.axes
        if x.shape != (dim,):
            raise DimensionError(f"state must have length {dim}, got {x.shape}")
        t = float(t)
        xt = tuple(x) + (t,)
        seeds = autodiff.lift(xt)

        if i == 1:
            y = self._eval_scalar(1, seeds, sink)
            value = unwrap(y.value)
            grad = np.array([unwrap(gj) for gj in y.grad[:dim]])
            tp = unwrap(y.grad[dim])
            if sink is not None:
                sink.values[1] = value
        else:
            prev = self._eval_scalar(i - 1, seeds, sink)
            v = unwrap(prev.value)
            g = np.array([unwrap(gj) for gj in prev.grad])
            hess = np.array([[unwrap(e) for e in row] for row in prev.hess])
            g_x = g[:dim]
            g_t = g[dim]
            h_xx = hess[:dim, :dim]
            h_tx = hess[dim, :dim]
            ax = self.system.drift(x)

            rho = self.schedule.levels[i - 2]
            exponent = self._exponents[i - 2]
            theta_val, theta_dot = self.gain_function.power_jet(exponent, t)

            value = rho * theta_val * v + float(g_x @ ax)
            grad = rho * theta_val * g_x + h_xx @ ax
            grad[m:] += g_x[: dim - m]  # shift: gradient of the drift term in x
            tp = rho * (theta_dot * v + theta_val * g_t) + float(h_tx @ ax)
            if self.schedule.robust:
                mu = self.smoothing[i - 2]
                value -= float(g_x @ g_x) / (4.0 * mu) + mu * self._bound_sq
                grad -= h_xx @ g_x / (2.0 * mu)
                tp -= float(h_tx @ g_x) / (2.0 * mu)
            if sink is not None:
                sink.values[i] = value

        return BarrierEvaluation(i, float(value), grad, float(tp))

    # -- public API -----------------------------------------------------

    def eval_level(self, i: int, x, t) -> BarrierEvaluation:
        """Evaluate chain level i at (x, t)."""
        if not 1 <= i <= self.order:
            raise ParameterError(
                f"level index must be in 1..{self.order}, got {i}"
            )
        return self._assemble(i, x, t)

    def evaluate(self, x, t) -> ChainEvaluation:
        """All level values plus top-level derivatives in a single pass."""
        sink = _LevelSink()
        top = self._assemble(self.order, x, t, sink)
        values = np.array([sink.values[i] for i in range(1, self.order + 1)])
        ax = self.system.drift(np.asarray(x, dtype=float))
        grad1_norm = math.sqrt(sink.grad1_sq) if sink.grad1_sq is not None else float(
            np.linalg.norm(top.gradient)
        )
        return ChainEvaluation(
            values=values,
            gradient=top.gradient,
            time_partial=top.time_partial,
            drift_rate=float(top.gradient @ ax),
            level1_gradient_norm=grad1_norm,
        )

    def validate_initialization(self, x0, t0):
        """(level, value, positive?) for every level at the start point."""
        ev = self.evaluate(x0, t0)
        return [(i + 1, float(v), bool(v > 0.0)) for i, v in enumerate(ev.values)]


def auto_gains(
    template: BarrierChain, x0, t0, margin: float = 0.1, last_gain: float = 1.0
) -> GainSchedule:
    """Pick per-level gain constants that make every level start positive.

    Walks the chain bottom-up: each level is evaluated with the gains
    chosen so far, and the next constant comes from the initial-gain
    rule (robust or not, matching the template).  The top-level constant
    is not pinned by initialization and is set to ``last_gain``.
    """
    if last_gain <= 0.0:
        raise ParameterError(f"last_gain must be positive, got {last_gain}")
    n = template.order
    working = [1.0] * n
    chain = template.with_levels(working)
    first = chain.eval_level(1, x0, t0)
    if first.value <= 0.0:
        raise UnsafeInitializationError(
            f"start state is not strictly inside the safe set: "
            f"level-1 value {first.value}"
        )
    x0 = np.asarray(x0, dtype=float)
    for i in range(2, n + 1):
        chain = template.with_levels(working)
        ev = chain.eval_level(i - 1, x0, t0)
        if ev.value <= 0.0:
            raise UnsafeInitializationError(
                f"level {i - 1} is non-positive ({ev.value}) despite the gain rule"
            )
        lf = float(ev.gradient @ template.system.drift(x0))
        ups0 = template.gain_function.value(float(t0)) ** (
            template.schedule.level_exponent(i - 1)
        )
        if template.robust:
            lam = robust_margin(
                ev.gradient, template.smoothing[i - 2], template.disturbance_bound
            )
            working[i - 2] = initial_gain_perturbed(ev.value, lf, lam, ups0, margin)
        else:
            working[i - 2] = initial_gain_unperturbed(ev.value, lf, ups0, margin)
    working[n - 1] = float(last_gain)
    return replace(template.schedule, levels=tuple(working))
