"""One-to-one association via assignment on log channel gains.

When users and BSs are equally many and every user must clear SINR 1, at
most one association can be feasible, and it is the maximum-total-log-gain
perfect matching.  That turns the joint problem into: solve an assignment
problem on log gains (Hungarian, or a distributed auction), then run the
per-BS max-min power fixed point at the matched association.  A final
min-SINR >= 1 certifies global optimality; below 1 the one-to-one problem
with the SINR floor is infeasible and the matched solution is returned as a
plain heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import Network, SolveResult, ValidationError
from .power import FixedPointOptions, solve_power

__all__ = [
    "FORBIDDEN",
    "InfeasibleMatchingError",
    "AssignmentProblem",
    "log_gain_matrix",
    "hungarian",
    "AuctionState",
    "auction",
    "auction_eps_scaling",
    "default_eps",
    "default_eps_schedule",
    "OneToOneResult",
    "solve_p1prime",
    "aufp",
]

# Sentinel for "no link" entries in dense assignment matrices.  Any matching
# that selects a sentinel edge is reported as infeasible.
FORBIDDEN = -1e18
_FINITE_CUTOFF = FORBIDDEN / 2


class InfeasibleMatchingError(RuntimeError):
    """No perfect matching avoids forbidden entries."""


@dataclass(frozen=True)
class AssignmentProblem:
    """Square maximum-total-gain assignment data.

    ``gain[i, k]`` is the benefit of giving object (BS) i to person (user)
    k; entries equal to :data:`FORBIDDEN` mark disallowed pairs.  Every row
    and every column must keep at least one allowed entry.
    """

    gain: np.ndarray

    def __post_init__(self):
        g = np.array(self.gain, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValidationError(f"assignment gain must be square, got {g.shape}")
        allowed = g > _FINITE_CUTOFF
        if not np.all(allowed.any(axis=0)):
            raise ValidationError("some user has no allowed BS")
        if not np.all(allowed.any(axis=1)):
            raise ValidationError("some BS has no allowed user")
        g.setflags(write=False)
        object.__setattr__(self, "gain", g)

    @property
    def k(self) -> int:
        return self.gain.shape[0]


def log_gain_matrix(net: Network) -> AssignmentProblem:
    """Log channel gains as assignment benefits; zero links become forbidden."""
    if net.n_bs != net.n_users:
        raise ValidationError(
            f"one-to-one matching needs as many BSs as users, got {net.n_bs} vs {net.n_users}"
        )
    with np.errstate(divide="ignore"):
        g = np.where(net.gain > 0, np.log(np.where(net.gain > 0, net.gain, 1.0)), FORBIDDEN)
    return AssignmentProblem(gain=g)


def hungarian(prob: AssignmentProblem) -> tuple[np.ndarray, float]:
    """Maximum-total-gain perfect matching.

    Returns ``(assignment, total_gain)`` with ``assignment[k]`` the BS of
    user k.  Deterministic for deterministic input.  Backed by SciPy's
    rectangular assignment solver; a matching forced through a forbidden
    entry raises :class:`InfeasibleMatchingError`.
    """
    rows, cols = linear_sum_assignment(prob.gain, maximize=True)
    assignment = np.empty(prob.k, dtype=int)
    assignment[cols] = rows
    chosen = prob.gain[assignment, np.arange(prob.k)]
    if np.any(chosen <= _FINITE_CUTOFF):
        raise InfeasibleMatchingError("no perfect matching avoids forbidden pairs")
    return assignment, float(chosen.sum())


@dataclass(frozen=True)
class AuctionState:
    """Final auction state plus round telemetry.

    Prices only ever increase (each update adds at least eps); the
    assignment map is injective throughout.  ``total_gain`` is within
    k * eps of the optimum on termination.
    """

    assignment: np.ndarray
    total_gain: float
    prices: np.ndarray
    eps: float
    rounds: int
    bids: int
    reassignments: int
    min_increment: float
    price_history: tuple[np.ndarray, ...] | None = None


def default_eps(prob: AssignmentProblem) -> float:
    """1e-6 times the spread of allowed gains (1e-6 if the spread is zero)."""
    finite = prob.gain[prob.gain > _FINITE_CUTOFF]
    spread = float(finite.max() - finite.min())
    return 1e-6 * spread if spread > 0 else 1e-6


def default_eps_schedule(prob: AssignmentProblem) -> list[float]:
    """Decreasing eps values: spread/10 down by factors of 10 to spread*1e-6."""
    finite = prob.gain[prob.gain > _FINITE_CUTOFF]
    spread = float(finite.max() - finite.min())
    if spread <= 0:
        return [1e-6]
    return [spread * 10.0**-i for i in range(1, 7)]


def _auction_rounds(
    gain: np.ndarray,
    eps: float,
    prices: np.ndarray,
    assignment: np.ndarray,
    owner: np.ndarray,
    max_rounds: int,
    record_history: bool,
) -> tuple[int, int, int, float, list[np.ndarray]]:
    """Run Jacobi bidding rounds until everyone is assigned (in place)."""
    k = gain.shape[0]
    finite = gain > _FINITE_CUTOFF
    finite_vals = gain[finite]
    # Bid increment when a user has no allowed alternative (including k = 1).
    solo_gap = float(finite_vals.max() - finite_vals.min()) + eps
    rounds = bids = reassignments = 0
    min_increment = np.inf
    history: list[np.ndarray] = []
    while np.any(assignment < 0):
        rounds += 1
        if rounds > max_rounds:
            raise InfeasibleMatchingError(
                f"auction exceeded {max_rounds} rounds; "
                "no perfect matching avoids forbidden pairs"
            )
        # Bidding phase: every unassigned user picks its best BS and bids the
        # margin over its second-best allowed alternative.
        offers: dict[int, tuple[int, float]] = {}
        for user in np.flatnonzero(assignment < 0):
            values = gain[:, user] - prices
            best = int(np.argmax(values))
            others = values[finite[:, user]]
            if others.size > 1:
                best_val = values[best]
                runner_up = float(np.partition(others, -2)[-2])
                gamma = float(best_val - runner_up)
            else:
                gamma = solo_gap
            bids += 1
            held = offers.get(best)
            # Highest bidder wins; user-index order breaks exact ties.
            if held is None or gamma > held[1]:
                offers[best] = (int(user), gamma)
        # Assignment phase: each BS keeps its highest bidder and raises its price.
        for bs in sorted(offers):
            user, gamma = offers[bs]
            if owner[bs] >= 0:
                assignment[owner[bs]] = -1
                reassignments += 1
            owner[bs] = user
            assignment[user] = bs
            increment = gamma + eps
            prices[bs] += increment
            min_increment = min(min_increment, increment)
        if record_history:
            history.append(prices.copy())
    return rounds, bids, reassignments, float(min_increment), history


def auction(
    prob: AssignmentProblem,
    eps: float,
    initial_prices: np.ndarray | None = None,
    max_rounds: int | None = None,
    record_history: bool = False,
) -> AuctionState:
    """Jacobi auction for the assignment problem.

    All unassigned users bid simultaneously each round; every BS receiving
    bids keeps the highest bidder and raises its price by the winning margin
    plus eps.  With zero initial prices the number of rounds is bounded by
    the largest absolute allowed gain over eps, and the final total gain is
    within k * eps of the optimum.

    ``initial_prices`` supports the distributed variant that starts from
    -log(budget) per BS.  Exceeding the round cap signals that forbidden
    pairs leave no perfect matching.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    gain = prob.gain
    k = prob.k
    prices = np.zeros(k) if initial_prices is None else np.array(initial_prices, dtype=float)
    if prices.shape != (k,):
        raise ValidationError(f"initial_prices must have shape ({k},)")
    if max_rounds is None:
        finite_max = float(np.abs(gain[gain > _FINITE_CUTOFF]).max())
        max_rounds = k * (int(np.ceil(finite_max / eps)) + k + 16)
    assignment = np.full(k, -1)
    owner = np.full(k, -1)
    rounds, bids, reassignments, min_inc, history = _auction_rounds(
        gain, eps, prices, assignment, owner, max_rounds, record_history
    )
    chosen = gain[assignment, np.arange(k)]
    if np.any(chosen <= _FINITE_CUTOFF):
        raise InfeasibleMatchingError("auction settled on a forbidden pair")
    return AuctionState(
        assignment=assignment,
        total_gain=float(chosen.sum()),
        prices=prices,
        eps=eps,
        rounds=rounds,
        bids=bids,
        reassignments=reassignments,
        min_increment=min_inc,
        price_history=tuple(history) if record_history else None,
    )


def auction_eps_scaling(
    prob: AssignmentProblem,
    schedule: list[float] | None = None,
    max_rounds: int | None = None,
) -> AuctionState:
    """Run the auction over a decreasing eps schedule, warm-starting prices.

    Each phase restarts the assignment but keeps the prices of the previous
    phase, so late (small-eps) phases start nearly price-consistent and need
    few bids.  The final state satisfies the auction contract at the last
    eps of the schedule.
    """
    if schedule is None:
        schedule = default_eps_schedule(prob)
    if not schedule:
        raise ValueError("eps schedule must be non-empty")
    if any(e <= 0 for e in schedule):
        raise ValueError("eps schedule must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("eps schedule must be strictly decreasing")

    gain = prob.gain
    k = prob.k
    prices = np.zeros(k)
    total_bids = total_rounds = total_reassign = 0
    min_inc = np.inf
    state: AuctionState | None = None
    for eps in schedule:
        if max_rounds is None:
            finite_max = float(np.abs(gain[gain > _FINITE_CUTOFF]).max())
            cap = k * (int(np.ceil(finite_max / eps)) + k + 16)
        else:
            cap = max_rounds
        assignment = np.full(k, -1)
        owner = np.full(k, -1)
        rounds, bids, reassignments, inc, _ = _auction_rounds(
            gain, eps, prices, assignment, owner, cap, record_history=False
        )
        total_rounds += rounds
        total_bids += bids
        total_reassign += reassignments
        min_inc = min(min_inc, inc)
        chosen = gain[assignment, np.arange(k)]
        if np.any(chosen <= _FINITE_CUTOFF):
            raise InfeasibleMatchingError("auction settled on a forbidden pair")
        state = AuctionState(
            assignment=assignment,
            total_gain=float(chosen.sum()),
            prices=prices,
            eps=eps,
            rounds=total_rounds,
            bids=total_bids,
            reassignments=total_reassign,
            min_increment=min_inc,
        )
    assert state is not None
    return state


@dataclass(frozen=True)
class OneToOneResult:
    """Outcome of a matched-association solve.

    ``status`` is "optimal" when the matched association clears min-SINR 1
    (then the solution is globally optimal for the one-to-one problem, with
    or without the SINR floor, and for the general problem too);
    "infeasible" means no association can give every user SINR >= 1, and
    ``result`` then carries the matched solution as a heuristic.
    """

    status: str
    result: SolveResult
    total_gain: float
    auction: AuctionState | None = None


def solve_p1prime(net: Network, opts: FixedPointOptions | None = None) -> OneToOneResult:
    """Hungarian matching on log gains, then max-min power at the match."""
    prob = log_gain_matrix(net)
    assignment, total_gain = hungarian(prob)
    result = solve_power(net, assignment, opts)
    status = "optimal" if result.min_sinr >= 1.0 else "infeasible"
    return OneToOneResult(status=status, result=result, total_gain=total_gain)


def aufp(
    net: Network,
    eps: float | None = None,
    opts: FixedPointOptions | None = None,
) -> OneToOneResult:
    """Auction matching on log gains, then max-min power at the match.

    The distributed counterpart of :func:`solve_p1prime`: for small enough
    eps the auction reaches the same matching whenever the assignment
    optimum is unique, and a final min-SINR >= 1 certifies the globally
    optimal value.
    """
    prob = log_gain_matrix(net)
    state = auction(prob, default_eps(prob) if eps is None else eps)
    result = solve_power(net, state.assignment, opts)
    status = "optimal" if result.min_sinr >= 1.0 else "infeasible"
    return OneToOneResult(
        status=status, result=result, total_gain=state.total_gain, auction=state
    )
