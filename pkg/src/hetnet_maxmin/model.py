"""Network data model and SINR evaluation for downlink and uplink.

Gains, powers and noise are stored linear (not dB); dB shows up only at the
CLI/scenario boundary. A zero channel gain encodes "no link": associating a
user across a zero link is a validation error rather than SINR = 0, so that
matching algorithms on log-gains have a consistent forbidden convention.

All types are immutable after construction and all operations are pure, so
networks can be shared freely across parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ValidationError",
    "Network",
    "SolveResult",
    "serving_sets",
    "check_association",
    "check_power",
    "downlink_sinr",
    "uplink_sinr",
    "max_snr_association",
    "network_to_json",
    "network_from_json",
]


class ValidationError(ValueError):
    """An input violates a structural contract (shape, sign, or link)."""


def _vector(x, n: int, name: str, positive: bool = False) -> np.ndarray:
    v = np.array(x, dtype=float)
    if v.shape != (n,):
        raise ValidationError(f"{name} must have shape ({n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} must be finite")
    if positive and not np.all(v > 0):
        raise ValidationError(f"{name} must be strictly positive")
    return v


@dataclass(frozen=True)
class Network:
    """A cellular network snapshot.

    gain[n, k] is the linear channel power gain between BS n and user k
    (zero means no link), budget[n] the per-BS maximum transmit power,
    noise_dl[k] the receive noise power at user k, and noise_ul[n] the
    receive noise power at BS n.  Downlink and uplink noise are kept
    separate so that duality experiments can set them equal explicitly.
    """

    gain: np.ndarray
    budget: np.ndarray
    noise_dl: np.ndarray
    noise_ul: np.ndarray

    def __post_init__(self):
        g = np.array(self.gain, dtype=float)
        if g.ndim != 2:
            raise ValidationError(f"gain must be 2-D (n_bs, n_users), got shape {g.shape}")
        n, k = g.shape
        if n < 1 or k < 1:
            raise ValidationError("network needs at least one BS and one user")
        if not np.all(np.isfinite(g)) or np.any(g < 0):
            raise ValidationError("gains must be finite and non-negative")
        unreachable = np.flatnonzero(g.max(axis=0) <= 0)
        if unreachable.size:
            raise ValidationError(
                f"users {unreachable.tolist()} have no BS with positive gain"
            )
        object.__setattr__(self, "gain", g)
        object.__setattr__(self, "budget", _vector(self.budget, n, "budget", positive=True))
        object.__setattr__(self, "noise_dl", _vector(self.noise_dl, k, "noise_dl", positive=True))
        object.__setattr__(self, "noise_ul", _vector(self.noise_ul, n, "noise_ul", positive=True))
        for name in ("gain", "budget", "noise_dl", "noise_ul"):
            getattr(self, name).setflags(write=False)

    @property
    def n_bs(self) -> int:
        return self.gain.shape[0]

    @property
    def n_users(self) -> int:
        return self.gain.shape[1]


@dataclass(frozen=True)
class SolveResult:
    """Outcome of a power-allocation solve.

    ``min_sinr`` is exactly ``min(sinr)``.  ``residual`` is the final
    fixed-point residual, normalized by the scale the producing algorithm
    iterates on (see that algorithm's docstring).  ``residuals`` keeps the
    whole residual trace for convergence diagnostics.
    """

    association: np.ndarray
    power: np.ndarray
    sinr: np.ndarray
    min_sinr: float
    iterations: int
    converged: bool
    residual: float
    residuals: np.ndarray | None = None


def serving_sets(assoc, n_bs: int) -> list[np.ndarray]:
    """User-index sets served by each BS; disjoint and covering all users."""
    a = np.asarray(assoc, dtype=int)
    return [np.flatnonzero(a == n) for n in range(n_bs)]


def check_association(net: Network, assoc) -> np.ndarray:
    """Validate an association vector against a network.

    Requires one serving BS index per user, in range, with a strictly
    positive direct gain.  Returns the validated int array.
    """
    a = np.asarray(assoc)
    if a.shape != (net.n_users,):
        raise ValidationError(
            f"association must have shape ({net.n_users},), got {a.shape}"
        )
    if not np.issubdtype(a.dtype, np.integer):
        if not np.all(a == np.floor(a)):
            raise ValidationError("association entries must be integers")
        a = a.astype(int)
    if np.any((a < 0) | (a >= net.n_bs)):
        raise ValidationError("association entries must be valid BS indices")
    direct = net.gain[a, np.arange(net.n_users)]
    if np.any(direct <= 0):
        bad = np.flatnonzero(direct <= 0)
        raise ValidationError(f"users {bad.tolist()} are associated across a zero-gain link")
    return a.astype(int, copy=False)


def check_power(net: Network, power) -> np.ndarray:
    """Validate a per-user power vector: finite, non-negative, length K."""
    p = np.asarray(power, dtype=float)
    if p.shape != (net.n_users,):
        raise ValidationError(f"power must have shape ({net.n_users},), got {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise ValidationError("power must be finite and non-negative")
    return p


def downlink_sinr(net: Network, assoc, power) -> np.ndarray:
    """Per-user downlink SINR.

    User k receives its signal from BS a_k with power power[k]; every other
    user's transmission i != k interferes through gain[a_i, k], including
    co-served users of the same BS.  A zero-power user gets SINR 0.
    """
    a = check_association(net, assoc)
    p = check_power(net, power)
    gains_at_users = net.gain[a, :]              # [i, k] = gain of i's serving BS at user k
    received = p[:, None] * gains_at_users
    total = received.sum(axis=0)
    own = np.diagonal(received)
    return own / (net.noise_dl + total - own)


def uplink_sinr(net: Network, assoc, power) -> np.ndarray:
    """Per-user uplink SINR at the serving BS.

    User k transmits with power[k] to BS a_k; all other users j != k
    interfere through gain[a_k, j]; noise is the serving BS's noise_ul.
    """
    a = check_association(net, assoc)
    p = check_power(net, power)
    rows = net.gain[a, :]                        # [k, j] = gain of k's serving BS at user j
    received = rows * p[None, :]
    total = received.sum(axis=1)
    own = np.diagonal(received)
    return own / (net.noise_ul[a] + total - own)


def max_snr_association(net: Network) -> np.ndarray:
    """Greedy association: each user picks argmax_n gain[n, k] * budget[n].

    Ties break to the lowest BS index.
    """
    score = net.gain * net.budget[:, None]
    return np.argmax(score, axis=0).astype(int)


def network_to_json(net: Network) -> dict:
    """JSON document with the fixed cross-tool field names."""
    return {
        "n_bs": net.n_bs,
        "n_users": net.n_users,
        "gain": net.gain.tolist(),
        "budget": net.budget.tolist(),
        "noise_dl": net.noise_dl.tolist(),
        "noise_ul": net.noise_ul.tolist(),
    }


def network_from_json(doc: dict) -> Network:
    """Inverse of :func:`network_to_json`; validates declared dimensions."""
    try:
        n_bs = int(doc["n_bs"])
        n_users = int(doc["n_users"])
        gain = np.array(doc["gain"], dtype=float)
        net = Network(
            gain=gain,
            budget=doc["budget"],
            noise_dl=doc["noise_dl"],
            noise_ul=doc["noise_ul"],
        )
    except KeyError as exc:
        raise ValidationError(f"network document is missing field {exc}") from exc
    if net.n_bs != n_bs or net.n_users != n_users:
        raise ValidationError(
            f"declared dimensions ({n_bs}, {n_users}) do not match gain shape {net.gain.shape}"
        )
    return net
