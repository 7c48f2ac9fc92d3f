"""Exact analysis of the undiscounted scalar linear-quadratic problem.

The plant is x[k+1] = a x[k] + b u[k] with stage cost q x[k]^2 + r u[k]^2
(b != 0, q > 0, r > 0, no discounting).  Quadratic value functions K x^2
turn the Bellman equation into a one-dimensional Riccati fixed-point
equation

    K = F(K) = a^2 r K / (r + b^2 K) + q,

and linear policies u = L x turn the policy equation into the affine map

    F_L(K) = (a + b L)^2 K + q + r L^2.

F is concave and increasing, F_L is the tangent line of F at the point
where L is the greedy gain, and the cost of a stable linear policy is the
fixed point of its F_L.  One greedy step from a quadratic guess therefore
lands exactly on the Newton iterate for solving K = F(K); rollout, lookahead
and policy iteration are all built out of that one move.

Everything here is closed form in double precision.  An unstable closed
loop has infinite cost, represented by math.inf and kept out of arithmetic
that could produce NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ScalarLQProblem",
    "LinearGain",
    "NewtonStepResult",
    "StabilityRegion",
    "riccati_operator",
    "riccati_derivative",
    "policy_operator",
    "solve_riccati",
    "greedy_gain",
    "policy_cost",
    "value_iterate",
    "newton_step",
    "lookahead_step",
    "stability_region",
    "rollout",
    "policy_iteration",
    "double_newton",
]


@dataclass(frozen=True)
class ScalarLQProblem:
    """Coefficients (a, b, q, r) of a scalar LQ problem."""

    a: float
    b: float
    q: float
    r: float

    def __post_init__(self):
        for name in ("a", "b", "q", "r"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ValueError(f"{name} must be a finite real, got {v!r}")
        if self.b == 0:
            raise ValueError("b must be nonzero (the control must act on the state)")
        if self.q <= 0:
            raise ValueError("q must be positive")
        if self.r <= 0:
            raise ValueError("r must be positive")


@dataclass(frozen=True)
class LinearGain:
    """Linear feedback u = gain * x together with its closed-loop coefficient.

    closed_loop is a + b*gain for the problem the gain was built against.
    Stability is strict: |closed_loop| = 1 accumulates infinite cost and
    counts as unstable.
    """

    gain: float
    closed_loop: float

    @property
    def stable(self) -> bool:
        return abs(self.closed_loop) < 1.0

    @classmethod
    def from_gain(cls, problem: ScalarLQProblem, gain: float) -> "LinearGain":
        g = float(gain)
        if not math.isfinite(g):
            raise ValueError(f"gain must be finite, got {g!r}")
        return cls(g, problem.a + problem.b * g)


@dataclass(frozen=True)
class NewtonStepResult:
    """Outcome of one greedy linearization: where it started, what it chose.

    effective_start is the quadratic coefficient the greedy minimization was
    taken at, gain the resulting policy, cost its exact infinite-horizon
    coefficient (math.inf when the closed loop is not strictly stable).
    """

    effective_start: float
    gain: LinearGain
    cost: float


@dataclass(frozen=True)
class StabilityRegion:
    """Set of quadratic coefficients whose greedy policy is stable.

    When open is True the region is the open interval (threshold, inf);
    otherwise every K >= 0 qualifies (and threshold is 0).
    """

    threshold: float
    open: bool

    def contains(self, coefficient: float) -> bool:
        if self.open:
            return coefficient > self.threshold
        return coefficient >= 0.0


def _check_coefficient(K: float) -> float:
    K = float(K)
    if math.isnan(K) or K < 0.0:
        raise ValueError(f"quadratic coefficient must be nonnegative, got {K!r}")
    return K


def _check_finite_coefficient(K: float) -> float:
    K = _check_coefficient(K)
    if math.isinf(K):
        raise ValueError("quadratic coefficient must be finite here")
    return K


def riccati_operator(problem: ScalarLQProblem, K: float) -> float:
    """One exact value-iteration sweep: F(K) = a^2 r K / (r + b^2 K) + q.

    K = +inf is accepted and returns the finite limit a^2 r / b^2 + q,
    which is what an infinitely pessimistic terminal estimate contracts to
    after a single sweep.
    """
    K = _check_coefficient(K)
    p = problem
    if math.isinf(K):
        return p.a * p.a * p.r / (p.b * p.b) + p.q
    return p.a * p.a * p.r * K / (p.r + p.b * p.b * K) + p.q


def riccati_derivative(problem: ScalarLQProblem, K: float) -> float:
    """Slope of F at K: F'(K) = a^2 r^2 / (r + b^2 K)^2, in (0, a^2]."""
    K = _check_finite_coefficient(K)
    p = problem
    s = p.r + p.b * p.b * K
    return (p.a * p.r / s) ** 2


def policy_operator(problem: ScalarLQProblem, gain: LinearGain, K: float) -> float:
    """One sweep for a fixed linear policy: F_L(K) = (a+bL)^2 K + q + r L^2."""
    K = _check_finite_coefficient(K)
    p = problem
    return gain.closed_loop ** 2 * K + p.q + p.r * gain.gain ** 2


def solve_riccati(problem: ScalarLQProblem, tol: float = 1e-12) -> float:
    """Unique positive fixed point of F.

    Eliminating the denominator turns K = F(K) into the quadratic
    b^2 K^2 + (r - a^2 r - q b^2) K - q r = 0, whose constant term is
    negative, so exactly one root is positive.  The root is taken in the
    cancellation-free branch of the quadratic formula and then polished
    with a couple of Newton steps on K - F(K), which pins the result to
    the same fixed point the step operators converge to.
    """
    p = problem
    A = p.b * p.b
    B = p.r - p.a * p.a * p.r - p.q * A
    C = -p.q * p.r
    disc = math.sqrt(B * B - 4.0 * A * C)
    if B > 0.0:
        K = 2.0 * C / (-B - disc)
    else:
        K = (disc - B) / (2.0 * A)
    for _ in range(3):
        residual = riccati_operator(p, K) - K
        slope = riccati_derivative(p, K)
        refined = K + residual / (1.0 - slope)
        if not math.isfinite(refined) or refined <= 0.0 or refined == K:
            break
        K = refined
    if abs(riccati_operator(p, K) - K) > tol * max(1.0, K):
        raise ArithmeticError(f"Riccati solve left residual above {tol} at K={K!r}")
    return K


def greedy_gain(problem: ScalarLQProblem, K: float) -> LinearGain:
    """Minimizing gain against the quadratic estimate K x^2.

    L = -a b K / (r + b^2 K), with closed loop a + b L = a r / (r + b^2 K)
    computed in that product form to dodge the cancellation in a + bL.
    At K = +inf the finite limit -a/b (deadbeat, closed loop 0) is returned.
    """
    K = _check_coefficient(K)
    p = problem
    if math.isinf(K):
        return LinearGain(-p.a / p.b, 0.0)
    s = p.r + p.b * p.b * K
    return LinearGain(-p.a * p.b * K / s, p.a * p.r / s)


def policy_cost(problem: ScalarLQProblem, gain: LinearGain) -> float:
    """Exact cost coefficient of a linear policy.

    The fixed point of F_L: (q + r L^2) / (1 - (a+bL)^2) when the closed
    loop is strictly stable, math.inf otherwise (|a+bL| = 1 included).
    """
    if not gain.stable:
        return math.inf
    p = problem
    return (p.q + p.r * gain.gain ** 2) / (1.0 - gain.closed_loop ** 2)


def value_iterate(problem: ScalarLQProblem, K0: float, steps: int) -> list[float]:
    """Iterates [K0, F(K0), ..., F^steps(K0)].

    The sequence is monotone (direction set by the sign of K0 - K*) and
    converges to the fixed point at the geometric rate F'(K*).
    """
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    K = _check_finite_coefficient(K0)
    out = [K]
    for _ in range(steps):
        out.append(riccati_operator(problem, out[-1]))
    return out


def newton_step(problem: ScalarLQProblem, K: float) -> NewtonStepResult:
    """Greedy gain at K and its exact cost.

    Because F_L for the greedy L is the tangent of F at K, the returned
    cost solves the linearized fixed-point equation
    K' = F(K) + F'(K) (K' - K): this is literally the Newton iterate for
    K = F(K), infinite when K sits outside the stability region.
    """
    K = _check_finite_coefficient(K)
    gain = greedy_gain(problem, K)
    return NewtonStepResult(K, gain, policy_cost(problem, gain))


def lookahead_step(
    problem: ScalarLQProblem,
    K_terminal: float,
    depth: int = 1,
    rollout_steps: int = 0,
    base: LinearGain | None = None,
) -> NewtonStepResult:
    """Multistep lookahead with an optional truncated-rollout tail.

    The terminal estimate is first pushed through rollout_steps sweeps of
    the base policy's F_L, then depth-1 sweeps of F; the greedy step is
    taken at the resulting effective start, so the whole construction is a
    Newton step from F^(depth-1)(F_base^rollout_steps(K_terminal)).
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if rollout_steps < 0:
        raise ValueError("rollout_steps must be nonnegative")
    K = _check_finite_coefficient(K_terminal)
    if rollout_steps > 0:
        if base is None:
            raise ValueError("a base policy is required when rollout_steps > 0")
        if not base.stable:
            raise ValueError(
                "truncated rollout needs a stable base policy "
                f"(closed loop {base.closed_loop!r})"
            )
        for _ in range(rollout_steps):
            K = policy_operator(problem, base, K)
    for _ in range(depth - 1):
        K = riccati_operator(problem, K)
    gain = greedy_gain(problem, K)
    return NewtonStepResult(K, gain, policy_cost(problem, gain))


def stability_region(problem: ScalarLQProblem) -> StabilityRegion:
    """Coefficients whose greedy policy is strictly stable.

    The greedy closed loop is a r / (r + b^2 K), so |a| < 1 makes every
    K >= 0 safe, while |a| >= 1 requires K strictly above
    K_S = r (|a| - 1) / b^2 (the point where F'(K_S) = 1; the boundary
    itself has closed loop on the unit circle and is excluded).
    """
    p = problem
    if abs(p.a) < 1.0:
        return StabilityRegion(0.0, False)
    return StabilityRegion(max(0.0, p.r * (abs(p.a) - 1.0) / (p.b * p.b)), True)


def rollout(problem: ScalarLQProblem, base: LinearGain) -> NewtonStepResult:
    """Greedy one-step improvement of a stable linear policy.

    Evaluates the base exactly and takes the Newton step from its cost;
    the result can never cost more than the base.  An unstable base has no
    finite evaluation and is rejected.
    """
    if not base.stable:
        raise ValueError(
            f"rollout requires a stable base policy (closed loop {base.closed_loop!r})"
        )
    return newton_step(problem, policy_cost(problem, base))


def policy_iteration(
    problem: ScalarLQProblem,
    start: LinearGain,
    tol: float = 1e-12,
    max_iters: int = 100,
) -> list[tuple[LinearGain, float]]:
    """Exact policy iteration from a stable linear policy.

    Alternates exact evaluation with the greedy step and returns the list
    of (gain, cost) pairs up to and including the first iterate whose cost
    is within tol of the optimal coefficient and whose gain is within tol
    of the optimal gain.  Each step is a Newton step at the previous cost,
    so the error is squared down and the loop ends after a handful of
    rounds (the gain trails the cost by one squaring, hence the second
    condition).
    """
    if not start.stable:
        raise ValueError("policy iteration must start from a stable policy")
    K_opt = solve_riccati(problem)
    L_opt = greedy_gain(problem, K_opt)
    gain = start
    iterates: list[tuple[LinearGain, float]] = []
    for _ in range(max_iters):
        cost = policy_cost(problem, gain)
        iterates.append((gain, cost))
        if abs(cost - K_opt) <= tol and abs(gain.gain - L_opt.gain) <= tol:
            return iterates
        gain = greedy_gain(problem, cost)
    raise ArithmeticError(
        f"policy iteration failed to reach tol={tol} within {max_iters} rounds"
    )


def double_newton(problem: ScalarLQProblem, K: float) -> NewtonStepResult:
    """Two chained Newton steps: greedy at K, then rollout of that gain.

    Requires K inside the stability region so the first greedy gain has a
    finite evaluation; the second step can only improve on the first, and
    the pair dominates plain two-step lookahead from the same terminal
    estimate.
    """
    K = _check_finite_coefficient(K)
    first = greedy_gain(problem, K)
    if not first.stable:
        raise ValueError(
            "double Newton step needs a start inside the stability region "
            f"(greedy closed loop {first.closed_loop!r})"
        )
    return rollout(problem, first)
