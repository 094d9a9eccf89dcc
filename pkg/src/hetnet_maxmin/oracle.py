"""Ground-truth engines: exhaustive optima, the 3-SAT network gadget, and
closed-form constants for the two-cell variable block.

The brute-force solver enumerates every association that avoids zero-gain
links (or every permutation in one-to-one mode), solves the power problem at
each, and keeps the best.  It is the reference every other algorithm is
checked against at desk scale.

The gadget encodes a 3-SAT formula as a network whose achievable min-SINR
hits the threshold (sqrt(7) - 1) / 3 exactly when the formula is
satisfiable: one BS/user pair per clause, and a two-BS/two-user block per
variable whose two "split" associations represent true/false.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import Network, SolveResult, ValidationError
from .power import FixedPointOptions, solve_power

__all__ = [
    "SAT_GAMMA",
    "CLAUSE_GAIN",
    "CnfFormula",
    "cnf_from_dimacs",
    "satisfiable",
    "PairValues",
    "gadget_pair_values",
    "GadgetNetwork",
    "build_3sat_gadget",
    "EquivalenceReport",
    "verify_sat_equivalence",
    "brute_force_optimum",
]

# Min-SINR threshold separating satisfiable from unsatisfiable gadgets.
SAT_GAMMA = (math.sqrt(7.0) - 1.0) / 3.0
# Direct gain of each clause BS to its clause user.
CLAUSE_GAIN = (2.0 * math.sqrt(7.0) + 1.0) / 3.0
# Power of the "true" BS in a variable block at the block optimum.
TRUE_POWER = (math.sqrt(7.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CnfFormula:
    """A 3-SAT formula: clauses are triples of signed 1-based variable ids.

    Literals may repeat inside a clause (repeats raise the gadget's
    interference weight accordingly), so small unsatisfiable instances such
    as (x1|x1|x1) & (~x1|~x1|~x1) are expressible.
    """

    n_vars: int
    clauses: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        if self.n_vars < 1:
            raise ValidationError("formula needs at least one variable")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        if not clauses:
            raise ValidationError("formula needs at least one clause")
        for c in clauses:
            if len(c) != 3:
                raise ValidationError(f"clause {c} must have exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise ValidationError(f"literal {lit} out of range 1..{self.n_vars}")
        object.__setattr__(self, "clauses", clauses)

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)


def cnf_from_dimacs(text: str) -> CnfFormula:
    """Parse DIMACS CNF text; every clause must have exactly 3 literals."""
    n_vars = None
    clauses: list[tuple[int, int, int]] = []
    pending: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValidationError(f"bad DIMACS header: {line!r}")
            n_vars = int(parts[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                if len(pending) != 3:
                    raise ValidationError(
                        f"clause {pending} has {len(pending)} literals; exactly 3 required"
                    )
                clauses.append((pending[0], pending[1], pending[2]))
                pending = []
            else:
                pending.append(lit)
    if pending:
        raise ValidationError("unterminated clause at end of DIMACS input")
    if n_vars is None:
        raise ValidationError("missing DIMACS 'p cnf' header")
    return CnfFormula(n_vars=n_vars, clauses=tuple(clauses))


def satisfiable(formula: CnfFormula) -> bool:
    """Decide satisfiability with a tiny DPLL (unit propagation + split)."""

    def assign(clauses: list[frozenset[int]], lit: int) -> list[frozenset[int]] | None:
        out = []
        for c in clauses:
            if lit in c:
                continue
            reduced = c - {-lit}
            if not reduced:
                return None
            out.append(reduced)
        return out

    def solve(clauses: list[frozenset[int]]) -> bool:
        while True:
            unit = next((c for c in clauses if len(c) == 1), None)
            if unit is None:
                break
            clauses = assign(clauses, next(iter(unit)))
            if clauses is None:
                return False
        if not clauses:
            return True
        lit = next(iter(clauses[0]))
        branch = assign(clauses, lit)
        if branch is not None and solve(branch):
            return True
        branch = assign(clauses, -lit)
        return branch is not None and solve(branch)

    return solve([frozenset(c) for c in formula.clauses])


@dataclass(frozen=True)
class PairValues:
    """Closed-form optima of a two-BS / two-user variable block.

    With receiver gains f (at the first user, from either BS) and g (at the
    second user), the two split associations both achieve
    2 / (1/g + sqrt(1/g^2 + 4 (1 + 1/f))) with powers
    (1/value - 1/g, 1); the two shared associations (one BS serving both
    users from a common budget) achieve 1 / (1/f + 1/g + 1).
    """

    values: tuple[float, float, float, float]
    split_powers: tuple[float, float]


def gadget_pair_values(f: float, g: float) -> PairValues:
    """Per-configuration optima for the variable block; requires f >= g > 0."""
    if not (f >= g > 0):
        raise ValidationError("need f >= g > 0")
    split = 2.0 / (1.0 / g + math.sqrt(1.0 / g**2 + 4.0 * (1.0 + 1.0 / f)))
    shared = 1.0 / (1.0 / f + 1.0 / g + 1.0)
    return PairValues(
        values=(split, split, shared, shared),
        split_powers=(1.0 / split - 1.0 / g, 1.0),
    )


@dataclass(frozen=True)
class GadgetNetwork:
    """The network encoding of a formula plus its index maps.

    BSs and users share the layout: clause blocks first (index m for clause
    m), then for variable t the positive BS/user at ``pos_of(t)`` and the
    negated one right after it.  Budgets and both noise vectors are all 1.
    """

    network: Network
    formula: CnfFormula
    clause_index: tuple[int, ...]
    pos_index: tuple[int, ...]
    neg_index: tuple[int, ...]


def build_3sat_gadget(formula: CnfFormula, receiver_gains: bool = True) -> GadgetNetwork:
    """Build the network whose optimum encodes satisfiability.

    Gains: each clause BS reaches only its own clause user (gain
    CLAUSE_GAIN); each literal occurrence adds gain 1 from that literal's BS
    to the clause user; variable blocks are internally connected and fully
    separated from other blocks.

    ``receiver_gains=True`` (default) gives the variant where the block's
    internal gain depends on the receiving user (first user hears 2 from
    both block BSs, second hears 1 from both), which is the variant whose
    split-configuration optimum matches :func:`gadget_pair_values` and makes
    the end-to-end reduction arithmetic close.  ``False`` selects the
    transmitter-indexed variant (direct gain 2, cross gain 1) for
    documentation; its blocks behave differently and it is not used by
    :func:`verify_sat_equivalence`.
    """
    m = formula.n_clauses
    t = formula.n_vars
    size = m + 2 * t
    gain = np.zeros((size, size))

    clause_index = tuple(range(m))
    pos_index = tuple(m + 2 * i for i in range(t))
    neg_index = tuple(m + 2 * i + 1 for i in range(t))

    for cm in range(m):
        gain[cm, cm] = CLAUSE_GAIN
        for lit in formula.clauses[cm]:
            bs = pos_index[abs(lit) - 1] if lit > 0 else neg_index[abs(lit) - 1]
            gain[bs, cm] += 1.0

    for i in range(t):
        pos, neg = pos_index[i], neg_index[i]
        if receiver_gains:
            gain[pos, pos] = gain[neg, pos] = 2.0
            gain[pos, neg] = gain[neg, neg] = 1.0
        else:
            gain[pos, pos] = gain[neg, neg] = 2.0
            gain[pos, neg] = gain[neg, pos] = 1.0

    ones_users = np.ones(size)
    net = Network(gain=gain, budget=np.ones(size), noise_dl=ones_users, noise_ul=np.ones(size))
    return GadgetNetwork(
        network=net,
        formula=formula,
        clause_index=clause_index,
        pos_index=pos_index,
        neg_index=neg_index,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    """Outcome of the reduction check for one formula."""

    sat_by_solver: bool
    network_opt: float
    agrees: bool
    threshold: float


def verify_sat_equivalence(
    formula: CnfFormula,
    tol: float = 1e-6,
    opts: FixedPointOptions | None = None,
    max_candidates: int = 1_000_000,
) -> EquivalenceReport:
    """Check SAT(formula) <=> gadget optimum >= SAT_GAMMA - tol.

    The left side comes from :func:`satisfiable`; the right side from the
    constrained brute force over the gadget (clause users have at most four
    candidate BSs, variable users two, so the zero-link-skipping enumeration
    is exactly the constrained search).
    """
    gadget = build_3sat_gadget(formula)
    opts = opts or FixedPointOptions(tol=1e-9, max_iter=20_000)
    best = brute_force_optimum(gadget.network, opts=opts, max_candidates=max_candidates)
    sat = satisfiable(formula)
    achieves = best.min_sinr >= SAT_GAMMA - tol
    return EquivalenceReport(
        sat_by_solver=sat,
        network_opt=best.min_sinr,
        agrees=(sat == achieves),
        threshold=SAT_GAMMA,
    )


def _candidate_count(net: Network, one_to_one: bool) -> int:
    if one_to_one:
        return math.factorial(net.n_users)
    counts = (net.gain > 0).sum(axis=0)
    return int(np.prod(counts.astype(object)))


def _candidate_associations(net: Network, one_to_one: bool):
    if one_to_one:
        if net.n_bs != net.n_users:
            raise ValidationError("one-to-one enumeration needs n_bs == n_users")
        direct_ok = net.gain > 0
        for perm in itertools.permutations(range(net.n_bs)):
            if all(direct_ok[perm[k], k] for k in range(net.n_users)):
                yield perm
    else:
        choices = [np.flatnonzero(net.gain[:, k] > 0) for k in range(net.n_users)]
        yield from itertools.product(*[c.tolist() for c in choices])


def _batch_values(
    net: Network, batch: np.ndarray, tol: float, max_iter: int
) -> tuple[np.ndarray, np.ndarray]:
    """Min-SINR of the max-min power solve for a whole batch of associations.

    Vectorizes the normalized fixed-point update across associations; every
    slice performs the same update as :func:`hetnet_maxmin.power.solve_power`.
    """
    n_assoc, k = batch.shape
    direct = net.gain[batch, np.arange(k)]                    # (B, K)
    gains_at_users = net.gain[batch]                          # (B, K, K): [b, i, k]
    onehot = (batch[:, :, None] == np.arange(net.n_bs)).astype(float)
    p = net.budget[batch] / k
    scale = float(np.max(net.budget))
    last_res = np.full(n_assoc, np.inf)
    for _ in range(max_iter):
        totals = np.einsum("bi,bik->bk", p, gains_at_users)
        m = (net.noise_dl[None, :] + totals - p * direct) / direct
        loads = np.einsum("bk,bkn->bn", m, onehot) / net.budget[None, :]
        p_new = m / loads.max(axis=1)[:, None]
        last_res = np.abs(p_new - p).max(axis=1) / scale
        p = p_new
        if last_res.max() <= tol:
            break
    totals = np.einsum("bi,bik->bk", p, gains_at_users)
    own = p * direct
    sinr = own / (net.noise_dl[None, :] + totals - own)
    return sinr.min(axis=1), last_res <= tol


def brute_force_optimum(
    net: Network,
    restrict_one_to_one: bool = False,
    opts: FixedPointOptions | None = None,
    max_candidates: int = 1_000_000,
    batch_size: int = 2048,
) -> SolveResult:
    """Global optimum by exhausting associations (or permutations).

    Associations never cross zero-gain links.  Ties on the optimal value
    resolve to the first candidate in lexicographic enumeration order.  The
    returned result is the direct per-association solve at the winning
    association, so its telemetry matches a plain
    :func:`hetnet_maxmin.power.solve_power` call.

    Refuses instances whose candidate count exceeds ``max_candidates``.
    """
    # default matches the per-association solver's tolerance, so the winner's
    # value is never looser than a direct solve_power call
    opts = opts or FixedPointOptions(max_iter=20_000)
    count = _candidate_count(net, restrict_one_to_one)
    if count > max_candidates:
        raise ValueError(
            f"{count} candidate associations exceed the cap of {max_candidates}"
        )
    best_value = -np.inf
    best_assoc: np.ndarray | None = None
    candidates = _candidate_associations(net, restrict_one_to_one)
    while True:
        chunk = list(itertools.islice(candidates, batch_size))
        if not chunk:
            break
        batch = np.array(chunk, dtype=int)
        values, _ = _batch_values(net, batch, opts.tol, opts.max_iter)
        idx = int(np.argmax(values))
        if values[idx] > best_value:
            best_value = float(values[idx])
            best_assoc = batch[idx]
    if best_assoc is None:
        raise ValidationError("no association avoids zero-gain links")
    return solve_power(net, best_assoc, opts)
