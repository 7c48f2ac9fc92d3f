"""Shared builders and independent oracle helpers for the test suite.

Oracle helpers intentionally re-derive quantities from raw formulas instead
of calling into the package, so the tests cross-check the implementation
rather than echo it.
"""

import math

from dpnewton.mdp import FiniteMDP


def lq_riccati_oracle(a, b, q, r, K):
    """F(K) straight from the defining expression."""
    return a * a * r * K / (r + b * b * K) + q


def lq_derivative_oracle(a, b, q, r, K):
    """F'(K) straight from the defining expression."""
    return a * a * r * r / (r + b * b * K) ** 2


def lq_newton_oracle(a, b, q, r, K):
    """Solve the linearized fixed-point equation K' = F(K) + F'(K)(K' - K)."""
    f = lq_riccati_oracle(a, b, q, r, K)
    d = lq_derivative_oracle(a, b, q, r, K)
    return (f - d * K) / (1.0 - d)


def lq_policy_cost_oracle(a, b, q, r, L):
    """Cost coefficient of u = Lx by summing the geometric series."""
    closed = a + b * L
    if abs(closed) >= 1.0:
        return math.inf
    return (q + r * L * L) / (1.0 - closed * closed)


def two_state_mdp(alpha=0.5, stay_cost=1.0, quit_cost=3.0):
    """Termination state 0 plus one state with a cheap self-loop and an exit.

    Control 0 at state 1 stays put for stay_cost, control 1 moves to the
    termination state for quit_cost.
    """
    return FiniteMDP(
        alpha,
        [
            [[(1.0, 0, 0.0)]],
            [[(1.0, 1, stay_cost)], [(1.0, 0, quit_cost)]],
        ],
    )


def uniform_tree_mdp(alpha=0.9, n_states=3, n_controls=2, n_outcomes=3, seed=1234):
    """Every nonterminal state has the same control/outcome fan-out and the
    termination state is never entered, so lookahead trees have an exactly
    predictable leaf count."""
    import numpy as np

    rng = np.random.default_rng(seed)
    transitions = [[[(1.0, 0, 0.0)]]]
    for _ in range(1, n_states):
        per_control = []
        for _ in range(n_controls):
            succ = rng.integers(1, n_states, size=n_outcomes)
            weights = rng.random(n_outcomes) + 0.1
            probs = weights / weights.sum()
            costs = rng.integers(0, 101, size=n_outcomes) * 0.1
            per_control.append(
                [(float(p), int(s), float(c)) for p, s, c in zip(probs, succ, costs)]
            )
        transitions.append(per_control)
    return FiniteMDP(alpha, transitions)
