"""Random HetNet instance generation.

Macro BSs sit on a triangular grid with fixed spacing (their Voronoi cells
are the hexagonal macro cells); each macro cell additionally hosts a number
of randomly placed pico BSs kept away from the cell center.  Channel gains
combine a power-law path loss referenced at 200 m with i.i.d. log-normal
shadowing.  Two user layouts are supported: "congested" piles floor(sqrt(K))
users into one macro cell, "uni_in_cell" cycles users through a random
permutation of all cells (cell = Voronoi region of a BS, macro or pico,
clipped to the network area).

Generation is a pure function of (config, seed): identical inputs produce a
bit-identical network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict, replace

import numpy as np

from .model import Network, ValidationError

__all__ = [
    "ScenarioConfig",
    "Geometry",
    "HetnetInstance",
    "generate_hetnet",
    "place_users",
    "scenario_from_json",
    "scenario_to_json",
    "geometry_to_json",
]

_SQRT3 = math.sqrt(3.0)
# Half-plane normals of the hexagonal Voronoi cell of the triangular grid.
_HEX_AXES = np.array(
    [
        [1.0, 0.0],
        [0.5, _SQRT3 / 2.0],
        [-0.5, _SQRT3 / 2.0],
    ]
)
_MAX_REJECTION_TRIES = 200_000


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, power and user-layout knobs for one random HetNet draw.

    ``snr_db`` fixes the pico budget via SNR = 10 log10(P_pico) against the
    unit noise floor; macro budgets sit ``macro_power_gap_db`` above it.
    """

    n_macro: int = 9
    picos_per_macro: int = 1
    n_users: int = 18
    snr_db: float = 15.0
    macro_power_gap_db: float = 16.0
    macro_spacing_m: float = 1000.0
    pico_min_dist_m: float = 250.0
    pathloss_ref_m: float = 200.0
    pathloss_exp: float = 3.7
    shadow_std_db: float = 8.0
    noise: float = 1.0
    user_dist: str = "uni_in_cell"
    seed: int = 0
    congested_cell: int | None = None
    wrap_around: bool = False

    def __post_init__(self):
        if self.n_macro < 1 or self.n_users < 1 or self.picos_per_macro < 0:
            raise ValidationError("counts must be positive (picos_per_macro may be 0)")
        for name in ("macro_spacing_m", "pico_min_dist_m", "pathloss_ref_m", "noise"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.shadow_std_db < 0:
            raise ValidationError("shadow_std_db must be non-negative")
        if self.user_dist not in ("congested", "uni_in_cell"):
            raise ValidationError(f"unknown user_dist {self.user_dist!r}")

    @property
    def n_bs(self) -> int:
        return (self.picos_per_macro + 1) * self.n_macro

    @property
    def pico_power(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def macro_power(self) -> float:
        return self.pico_power * 10.0 ** (self.macro_power_gap_db / 10.0)


@dataclass(frozen=True)
class Geometry:
    """BS and user coordinates of one generated instance.

    ``bs_parent_macro[n]`` is the macro-cell index a pico belongs to (or the
    macro's own cell index for macro BSs); ``user_cell[k]`` is the index of
    the nearest BS, which for uni_in_cell placement equals the cell the user
    was drawn in.
    """

    bs_positions: np.ndarray
    bs_is_macro: np.ndarray
    bs_parent_macro: np.ndarray
    user_positions: np.ndarray
    user_cell: np.ndarray


@dataclass(frozen=True)
class HetnetInstance:
    network: Network
    geometry: Geometry


def _macro_grid(config: ScenarioConfig) -> np.ndarray:
    """Near-square triangular grid of macro centers, 1000 m to all neighbors."""
    n = config.n_macro
    s = config.macro_spacing_m
    rows = max(1, int(math.floor(math.sqrt(n))))
    cols = math.ceil(n / rows)
    centers = []
    for i in range(rows):
        for j in range(cols):
            if len(centers) == n:
                break
            centers.append([j * s + (i % 2) * s / 2.0, i * s * _SQRT3 / 2.0])
    return np.array(centers)


def _in_hex(points: np.ndarray, center: np.ndarray, spacing: float) -> np.ndarray:
    rel = np.atleast_2d(points) - center
    return np.all(np.abs(rel @ _HEX_AXES.T) <= spacing / 2.0 + 1e-9, axis=1)


def _sample_in_hex(rng: np.random.Generator, center: np.ndarray, spacing: float) -> np.ndarray:
    half = spacing / 2.0
    radius = spacing / _SQRT3
    for _ in range(_MAX_REJECTION_TRIES):
        p = center + np.array(
            [rng.uniform(-half, half), rng.uniform(-radius, radius)]
        )
        if _in_hex(p, center, spacing)[0]:
            return p
    raise ValidationError("hexagon sampling failed; geometry unsatisfiable")


def _sample_in_area(
    rng: np.random.Generator, macro_centers: np.ndarray, spacing: float
) -> np.ndarray:
    cell = int(rng.integers(len(macro_centers)))
    return _sample_in_hex(rng, macro_centers[cell], spacing)


def _wrap_deltas(deltas: np.ndarray, span: np.ndarray) -> np.ndarray:
    return deltas - span * np.round(deltas / span)


def _distances(
    config: ScenarioConfig, bs_pos: np.ndarray, user_pos: np.ndarray
) -> np.ndarray:
    deltas = bs_pos[:, None, :] - user_pos[None, :, :]
    if config.wrap_around:
        lo = bs_pos.min(axis=0) - config.macro_spacing_m / _SQRT3
        hi = bs_pos.max(axis=0) + config.macro_spacing_m / _SQRT3
        span = np.maximum(hi - lo, 1e-9)
        deltas = _wrap_deltas(deltas, span)
    return np.sqrt((deltas**2).sum(axis=-1))


def _congested_cell_index(config: ScenarioConfig, macro_centers: np.ndarray) -> int:
    if config.congested_cell is not None:
        if not 0 <= config.congested_cell < config.n_macro:
            raise ValidationError("congested_cell out of range")
        return config.congested_cell
    centroid = macro_centers.mean(axis=0)
    return int(np.argmin(((macro_centers - centroid) ** 2).sum(axis=1)))


def place_users(
    config: ScenarioConfig, geometry: Geometry, rng: np.random.Generator
) -> np.ndarray:
    """Draw user coordinates according to the configured layout.

    congested: floor(sqrt(K)) users uniform in the congested macro cell, the
    rest uniform over the whole network area.  uni_in_cell: user k lands
    uniformly in the Voronoi cell of BS perm[k mod N] for a seeded random
    permutation perm of the BSs.
    """
    s = config.macro_spacing_m
    macro_centers = geometry.bs_positions[geometry.bs_is_macro]
    positions = np.zeros((config.n_users, 2))
    if config.user_dist == "congested":
        hot = _congested_cell_index(config, macro_centers)
        n_hot = int(math.floor(math.sqrt(config.n_users)))
        for k in range(config.n_users):
            if k < n_hot:
                positions[k] = _sample_in_hex(rng, macro_centers[hot], s)
            else:
                positions[k] = _sample_in_area(rng, macro_centers, s)
        return positions

    perm = rng.permutation(geometry.bs_positions.shape[0])
    for k in range(config.n_users):
        target = int(perm[k % len(perm)])
        for _ in range(_MAX_REJECTION_TRIES):
            p = _sample_in_area(rng, macro_centers, s)
            if int(np.argmin(((geometry.bs_positions - p) ** 2).sum(axis=1))) == target:
                positions[k] = p
                break
        else:
            raise ValidationError(
                f"could not place a user in the Voronoi cell of BS {target}"
            )
    return positions


def generate_hetnet(config: ScenarioConfig) -> HetnetInstance:
    """Generate one network draw; deterministic given (config, seed)."""
    rng = np.random.default_rng(config.seed)
    s = config.macro_spacing_m
    macro_centers = _macro_grid(config)

    pico_positions = []
    pico_parent = []
    for m, center in enumerate(macro_centers):
        for _ in range(config.picos_per_macro):
            for _ in range(_MAX_REJECTION_TRIES):
                p = _sample_in_hex(rng, center, s)
                if np.linalg.norm(p - center) >= config.pico_min_dist_m:
                    break
            else:
                raise ValidationError(
                    "pico placement unsatisfiable: pico_min_dist_m too large for the cell"
                )
            pico_positions.append(p)
            pico_parent.append(m)

    n_macro = len(macro_centers)
    if pico_positions:
        bs_positions = np.vstack([macro_centers, np.array(pico_positions)])
    else:
        bs_positions = macro_centers.copy()
    bs_is_macro = np.arange(len(bs_positions)) < n_macro
    bs_parent = np.concatenate(
        [np.arange(n_macro), np.array(pico_parent, dtype=int)]
        if pico_positions
        else [np.arange(n_macro)]
    )

    skeleton = Geometry(
        bs_positions=bs_positions,
        bs_is_macro=bs_is_macro,
        bs_parent_macro=bs_parent,
        user_positions=np.zeros((0, 2)),
        user_cell=np.zeros(0, dtype=int),
    )
    user_positions = place_users(config, skeleton, rng)

    dist = _distances(config, bs_positions, user_positions)
    dist = np.maximum(dist, 1.0)  # 1 m floor keeps gains finite
    shadow_db = rng.standard_normal(dist.shape) * config.shadow_std_db
    gain = 10.0 ** (shadow_db / 10.0) * (config.pathloss_ref_m / dist) ** config.pathloss_exp

    budget = np.where(bs_is_macro, config.macro_power, config.pico_power)
    network = Network(
        gain=gain,
        budget=budget,
        noise_dl=np.full(config.n_users, config.noise),
        noise_ul=np.full(len(bs_positions), config.noise),
    )
    user_cell = np.argmin(
        ((bs_positions[:, None, :] - user_positions[None, :, :]) ** 2).sum(axis=-1), axis=0
    ).astype(int)
    geometry = Geometry(
        bs_positions=bs_positions,
        bs_is_macro=bs_is_macro,
        bs_parent_macro=bs_parent,
        user_positions=user_positions,
        user_cell=user_cell,
    )
    return HetnetInstance(network=network, geometry=geometry)


def scenario_to_json(config: ScenarioConfig) -> dict:
    return asdict(config)


def scenario_from_json(doc: dict, **overrides) -> ScenarioConfig:
    """Build a config from a JSON document, with keyword overrides on top."""
    known = {f for f in ScenarioConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown scenario fields: {sorted(unknown)}")
    cfg = ScenarioConfig(**doc)
    return replace(cfg, **overrides) if overrides else cfg


def geometry_to_json(geometry: Geometry) -> dict:
    return {
        "bs_positions": geometry.bs_positions.tolist(),
        "bs_is_macro": geometry.bs_is_macro.astype(bool).tolist(),
        "bs_parent_macro": geometry.bs_parent_macro.tolist(),
        "user_positions": geometry.user_positions.tolist(),
        "user_cell": geometry.user_cell.tolist(),
    }
