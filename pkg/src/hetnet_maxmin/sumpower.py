"""Sum-power relaxation: uplink fixed point, duality, and bounds.

Pooling the per-BS budgets into one sum constraint makes the joint
association + power problem tractable: in the uplink, each user's best BS
at the current powers is simply the one needing the least power for SINR 1,
and the resulting normalized fixed-point iteration converges to the unique
optimum.  With equal uplink/downlink noise, the optimal value and
association transfer to the downlink sum-power problem, giving a cheap
upper bound for the per-BS-constrained problem.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .model import Network, SolveResult, check_association, check_power, downlink_sinr
from .power import FixedPointOptions, unit_sinr_power

__all__ = [
    "UplinkUnitPower",
    "uplink_unit_sinr_power",
    "UlsumResult",
    "ulsum",
    "dl_sumpower_power",
    "upper_bound_sum",
    "convergence_rate_bound",
]


class UplinkUnitPower(NamedTuple):
    """Per-user uplink powers needed for SINR 1, for every candidate BS.

    ``per_bs[n, k]`` is the power user k needs if served by BS n (+inf when
    there is no link), ``best[k]`` the minimum over BSs and ``best_bs[k]``
    the argmin, ties broken to the lowest BS index.
    """

    per_bs: np.ndarray
    best: np.ndarray
    best_bs: np.ndarray


def uplink_unit_sinr_power(net: Network, power) -> UplinkUnitPower:
    """Evaluate the uplink unit-SINR power map at the given user powers."""
    p = check_power(net, power)
    totals = net.gain @ p
    interference = totals[:, None] - net.gain * p[None, :]
    with np.errstate(divide="ignore"):
        per_bs = np.where(
            net.gain > 0,
            (net.noise_ul[:, None] + interference) / np.where(net.gain > 0, net.gain, 1.0),
            np.inf,
        )
    best = per_bs.min(axis=0)
    best_bs = per_bs.argmin(axis=0).astype(int)
    return UplinkUnitPower(per_bs=per_bs, best=best, best_bs=best_bs)


@dataclass(frozen=True)
class UlsumResult:
    """Solution of the uplink max-min problem under a sum power budget.

    At the optimum the full sum budget is spent, all per-user uplink SINRs
    equal ``gamma_sum``, and ``assoc`` is the final (optimal after finitely
    many iterations) association.  ``last_assoc_change`` records the last
    iteration at which the association vector changed.
    """

    power_ul: np.ndarray
    assoc: np.ndarray
    gamma_sum: float
    iterations: int
    converged: bool
    residual: float
    residuals: np.ndarray
    last_assoc_change: int


def ulsum(
    net: Network,
    sum_budget: float | None = None,
    opts: FixedPointOptions | None = None,
) -> UlsumResult:
    """Fixed-point solver for joint association + power, sum-power uplink.

    Each iteration re-picks every user's cheapest BS and renormalizes the
    unit-SINR powers to spend the whole sum budget.  Converges to the unique
    optimal power vector; the reported ``gamma_sum`` is
    sum_budget / sum(best-power map at the final iterate), which needs one
    fewer rounding step than the min of the final SINRs.

    ``sum_budget`` defaults to the sum of the per-BS budgets.  The residual
    is normalized by ``sum_budget``.
    """
    opts = opts or FixedPointOptions()
    budget = float(np.sum(net.budget)) if sum_budget is None else float(sum_budget)
    if not budget > 0:
        raise ValueError("sum_budget must be positive")
    if opts.initial_power is not None:
        p = check_power(net, opts.initial_power)
        if np.any(p <= 0):
            raise ValueError("initial_power must be strictly positive")
    elif opts.random_init_seed is not None:
        rng = np.random.default_rng(opts.random_init_seed)
        p = (1.0 - rng.random(net.n_users)) * budget / net.n_users
    else:
        p = np.full(net.n_users, budget / net.n_users)

    assoc = np.full(net.n_users, -1)
    last_change = 0
    residuals = np.empty(opts.max_iter)
    converged = False
    iterations = 0
    res = np.inf
    for it in range(opts.max_iter):
        maps = uplink_unit_sinr_power(net, p)
        if not np.array_equal(maps.best_bs, assoc):
            last_change = it
        assoc = maps.best_bs
        p_new = maps.best * (budget / float(maps.best.sum()))
        res = float(np.max(np.abs(p_new - p))) / budget
        residuals[it] = res
        p = p_new
        iterations = it + 1
        if res <= opts.tol:
            converged = True
            break

    final = uplink_unit_sinr_power(net, p)
    return UlsumResult(
        power_ul=p,
        assoc=final.best_bs,
        gamma_sum=budget / float(final.best.sum()),
        iterations=iterations,
        converged=converged,
        residual=res,
        residuals=residuals[:iterations].copy(),
        last_assoc_change=last_change,
    )


def dl_sumpower_power(
    net: Network,
    assoc,
    sum_budget: float | None = None,
    opts: FixedPointOptions | None = None,
) -> SolveResult:
    """Downlink max-min power under a sum power budget, fixed association.

    Same normalized fixed point as :func:`hetnet_maxmin.power.solve_power`
    but rescaling by the total spent power instead of per-BS loads.  With
    equal uplink and downlink noise its optimal value at the association
    returned by :func:`ulsum` matches ``gamma_sum``.  The returned power
    satisfies sum(power) == sum_budget; the residual is normalized by
    ``sum_budget``.
    """
    opts = opts or FixedPointOptions()
    budget = float(np.sum(net.budget)) if sum_budget is None else float(sum_budget)
    if not budget > 0:
        raise ValueError("sum_budget must be positive")
    a = check_association(net, assoc)
    if opts.initial_power is not None:
        p = check_power(net, opts.initial_power)
    elif opts.random_init_seed is not None:
        rng = np.random.default_rng(opts.random_init_seed)
        p = (1.0 - rng.random(net.n_users)) * budget / net.n_users
    else:
        p = np.full(net.n_users, budget / net.n_users)

    residuals = np.empty(opts.max_iter)
    converged = False
    iterations = 0
    res = np.inf
    for it in range(opts.max_iter):
        m = unit_sinr_power(net, a, p)
        p_new = m * (budget / float(m.sum()))
        res = float(np.max(np.abs(p_new - p))) / budget
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


def upper_bound_sum(net: Network, opts: FixedPointOptions | None = None) -> float:
    """Upper bound on the per-BS-constrained optimum via the sum relaxation.

    Any allocation respecting the per-BS budgets also respects their sum,
    so the sum-power optimum dominates the true optimum.
    """
    return ulsum(net, float(np.sum(net.budget)), opts).gamma_sum


def convergence_rate_bound(net: Network, sum_budget: float | None = None) -> float:
    """Upper bound in (0, 1) on the geometric contraction factor of ulsum.

    Computed from per-user bounds on the unit-SINR power map over the
    sum-budget sphere: the zero-interference floor min_n noise_ul[n]/gain[n,k]
    and the all-interference ceiling with every user at the sum budget.
    Diagnostic only; observed decay is usually much faster.
    """
    budget = float(np.sum(net.budget)) if sum_budget is None else float(sum_budget)
    if not budget > 0:
        raise ValueError("sum_budget must be positive")
    with np.errstate(divide="ignore"):
        linked = net.gain > 0
        safe_gain = np.where(linked, net.gain, 1.0)
        floor = np.where(linked, net.noise_ul[:, None] / safe_gain, np.inf)
        ceil = np.where(
            linked,
            (net.noise_ul + budget * net.gain.max(axis=1))[:, None] / safe_gain,
            np.inf,
        )
    a_k = floor.min(axis=0)
    b_k = ceil.min(axis=0)
    return float(1.0 - np.min(a_k / b_k))
