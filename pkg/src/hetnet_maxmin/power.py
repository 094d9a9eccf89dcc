"""Max-min power allocation for a fixed association.

The solver iterates a normalized fixed-point map: compute, for every user,
the power its serving BS would need for that user to hit SINR 1 against the
current interference, then rescale the whole vector so the most loaded BS
sits exactly at its budget.  The iteration converges geometrically to the
global max-min solution, where all per-user SINRs are equal.

A separate monotone iteration answers the dual question "is SINR target
gamma feasible, and at what minimal power" and serves as an independent
oracle for the solver in tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Network,
    SolveResult,
    check_association,
    check_power,
    downlink_sinr,
)

__all__ = [
    "FixedPointOptions",
    "unit_sinr_power",
    "load_norm",
    "solve_power",
    "min_power_for_target",
    "TargetPowerResult",
]


@dataclass(frozen=True)
class FixedPointOptions:
    """Stopping controls shared by the fixed-point solvers.

    ``tol`` bounds the per-step residual relative to the iteration's power
    scale (budget max, or the sum budget for sum-power solvers).  The
    default initial power is a strictly positive uniform spread, which makes
    runs reproducible; set ``random_init_seed`` to start from a seeded
    random positive vector instead.
    """

    tol: float = 1e-10
    max_iter: int = 100_000
    initial_power: np.ndarray | None = None
    random_init_seed: int | None = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.initial_power is not None:
            p0 = np.asarray(self.initial_power, dtype=float)
            if np.any(p0 <= 0) or not np.all(np.isfinite(p0)):
                raise ValueError("initial_power must be strictly positive and finite")
            object.__setattr__(self, "initial_power", p0)


def unit_sinr_power(net: Network, assoc, power) -> np.ndarray:
    """Per-user power its serving BS needs for SINR 1 at fixed interference.

    Entry k equals (noise_dl[k] + interference at k) / gain[a_k, k]; the
    current SINR of user k is power[k] divided by this entry.
    """
    a = check_association(net, assoc)
    p = check_power(net, power)
    gains_at_users = net.gain[a, :]
    received = p[:, None] * gains_at_users
    own = np.diagonal(received)
    interference = received.sum(axis=0) - own
    direct = net.gain[a, np.arange(net.n_users)]
    return (net.noise_dl + interference) / direct


def load_norm(power, assoc, budget) -> float:
    """Budget-weighted BS load: max_n (power served by BS n) / budget[n].

    A power vector is feasible for the per-BS constraints iff this is <= 1.
    BSs serving nobody contribute a zero term and so never dominate.
    """
    budget = np.asarray(budget, dtype=float)
    sums = np.bincount(np.asarray(assoc, dtype=int), weights=power, minlength=len(budget))
    return float(np.max(sums / budget))


def _initial_power(net: Network, assoc: np.ndarray, opts: FixedPointOptions) -> np.ndarray:
    if opts.initial_power is not None:
        p0 = check_power(net, opts.initial_power)
        if np.any(p0 <= 0):
            raise ValueError("initial_power must be strictly positive")
        return p0
    if opts.random_init_seed is not None:
        rng = np.random.default_rng(opts.random_init_seed)
        # 1 - random() lies in (0, 1], keeping the start strictly positive
        return (1.0 - rng.random(net.n_users)) * net.budget[assoc] / net.n_users
    return net.budget[assoc] / net.n_users


def solve_power(net: Network, assoc, opts: FixedPointOptions | None = None) -> SolveResult:
    """Globally solve max-min SINR power allocation at a fixed association.

    Iterates p <- U(p) / load_norm(U(p)) where U is :func:`unit_sinr_power`.
    At the fixed point all per-user SINRs are equal and the most loaded BS
    is exactly at its budget.  The reported residual is the last per-step
    change divided by max(budget); convergence means residual <= tol.

    A run that exhausts ``max_iter`` is returned with ``converged=False``,
    never silently wrong.
    """
    opts = opts or FixedPointOptions()
    a = check_association(net, assoc)
    p = _initial_power(net, a, opts)
    scale = float(np.max(net.budget))
    residuals = np.empty(opts.max_iter)
    converged = False
    iterations = 0
    res = np.inf
    for it in range(opts.max_iter):
        m = unit_sinr_power(net, a, p)
        omega = load_norm(m, a, net.budget)
        p_new = m / omega
        res = float(np.max(np.abs(p_new - p))) / scale
        residuals[it] = res
        p = p_new
        iterations = it + 1
        if res <= opts.tol:
            converged = True
            break
    sinr = downlink_sinr(net, a, p)
    return SolveResult(
        association=a,
        power=p,
        sinr=sinr,
        min_sinr=float(np.min(sinr)),
        iterations=iterations,
        converged=converged,
        residual=res,
        residuals=residuals[:iterations].copy(),
    )


@dataclass(frozen=True)
class TargetPowerResult:
    """Feasibility verdict for a fixed SINR target, with the minimal power."""

    feasible: bool
    power: np.ndarray
    iterations: int
    converged: bool


def min_power_for_target(
    net: Network,
    assoc,
    gamma: float,
    opts: FixedPointOptions | None = None,
) -> TargetPowerResult:
    """Minimal power meeting SINR >= gamma for every user, if one exists.

    Runs the monotone iteration p <- gamma * U(p) from p = 0, which grows
    towards the minimal power profile achieving the target.  Because the
    iterates increase monotonically, the target is declared infeasible as
    soon as any BS exceeds its budget (the limit could only be larger), or
    when the iteration cap is hit while the norm is still growing.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    opts = opts or FixedPointOptions()
    a = check_association(net, assoc)
    p = np.zeros(net.n_users)
    norms = []
    for it in range(opts.max_iter):
        p_new = gamma * unit_sinr_power(net, a, p)
        if load_norm(p_new, a, net.budget) > 1.0 + 1e-12:
            return TargetPowerResult(False, p_new, it + 1, converged=False)
        res = float(np.max(np.abs(p_new - p)))
        p = p_new
        norms.append(float(np.max(p)))
        if res <= opts.tol * max(norms[-1], 1e-300):
            return TargetPowerResult(True, p, it + 1, converged=True)
    # Iteration cap: still growing means divergence towards infeasibility.
    growing = len(norms) > 100 and norms[-1] > norms[-101] * (1.0 + 1e-12)
    return TargetPowerResult(not growing, p, opts.max_iter, converged=False)
