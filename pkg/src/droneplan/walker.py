"""Biased random walk route generator.

A walk proposes a uniformly random feasible neighbor, scores it with
f = p_road(proposed) + gamma(d) * p_home(proposed) and accepts when a
uniform draw falls below f. Road attraction is a softmax over the decayed
importance sensed through the K-nearest-neighbor stencil; home attraction
is a softmax over negated distances to the origin. Acceptance decays the
importance around the accepted cell in a walk-private overlay, so revisits
lose appeal without mutating the shared field.

Termination scenarios: "trapped" (no feasible neighbor), "exhausted"
(path budget spent or the proposal cap hit), "home" (back on the origin
cell within budget).
"""

import csv
import json
import math
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .field import MOORE_OFFSETS, cell_distance_m, stencil_offsets
from .coverage import road_coverage

SQRT2 = math.sqrt(2.0)
SCENARIO_TRAPPED = "trapped"
SCENARIO_EXHAUSTED = "exhausted"
SCENARIO_HOME = "home"


@dataclass(frozen=True)
class WalkParams:
    mfd_m: float
    alpha: float = 0.2
    beta: float = 0.3
    knn_rule: int = 8
    decay: float = 0.5
    max_proposals: int | None = None    # default: 10 * mfd_m / cell_size
    max_climb_m: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mfd_m <= 0:
            raise ConfigError(f"mfd_m must be positive, got {self.mfd_m}")
        if self.knn_rule not in (4, 8, 12):
            raise ConfigError(f"knn_rule must be 4, 8 or 12, got {self.knn_rule}")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError(f"decay must be in (0, 1], got {self.decay}")

    def proposal_cap(self, cell_size_m):
        if self.max_proposals is not None:
            return self.max_proposals
        return max(1, int(10.0 * self.mfd_m / cell_size_m))


@dataclass
class RouteResult:
    cells: np.ndarray | None     # (n, 2) int32 rows of (row, col), repeats kept
    distance_m: float
    scenario: str
    alpha: float
    beta: float
    seed: str
    coverage: float
    index: int = 0


def gamma(d_m, params):
    """Relative weight of home attraction at cumulative path length d_m."""
    return params.alpha * (d_m / params.mfd_m - params.beta) ** 3


def feasible_neighbors(fld, overlay, cell, params=None):
    """8-connected neighbors that are in bounds, not NODATA and climbable."""
    row, col = cell
    max_climb = params.max_climb_m if params is not None else None
    here_alt = fld.altitude[row, col] if fld.in_bounds(row, col) else None
    out = []
    for dr, dc in MOORE_OFFSETS:
        r, c = row + dr, col + dc
        if not fld.feasible(r, c):
            continue
        if max_climb is not None and abs(fld.altitude[r, c] - here_alt) > max_climb:
            continue
        out.append((r, c))
    return out


class Overlay:
    """Walk-private multiplicative importance decay with incremental sensing.

    Tracks a multiplier per touched cell and keeps stencil sums updated so
    sensing stays O(1) per query. The base field is never mutated.
    """

    def __init__(self, fld, knn_rule, bonus=None):
        self.field = fld
        self.knn_rule = int(knn_rule)
        self._n_cols = fld.meta.n_cols
        eff = fld.importance if bonus is None else fld.importance + bonus
        self._eff = eff.ravel().tolist()
        base = fld.stencil_sums(self.knn_rule) if bonus is None else _stencil_sums(eff, self.knn_rule)
        self._base_sense = base.ravel().tolist()
        self.mult = {}           # flat index -> multiplier in (0, 1]
        self.sense_delta = {}    # flat index -> correction to the base stencil sum

    def multiplier(self, row, col):
        return self.mult.get(row * self._n_cols + col, 1.0)

    def decayed_importance(self, row, col):
        flat = row * self._n_cols + col
        return self._eff[flat] * self.mult.get(flat, 1.0)

    def sense(self, row, col):
        flat = row * self._n_cols + col
        return self._base_sense[flat] + self.sense_delta.get(flat, 0.0)

    def decay_around(self, row, col, factor, targets_table=None):
        """Multiply the cell's and its 8 neighbors' importance by factor."""
        fld = self.field
        n_cols = self._n_cols
        for dr, dc in ((0, 0),) + MOORE_OFFSETS:
            r, c = row + dr, col + dc
            if not (0 <= r < fld.meta.n_rows and 0 <= c < n_cols):
                continue
            flat = r * n_cols + c
            old = self.mult.get(flat, 1.0)
            new = old * factor
            self.mult[flat] = new
            eff = self._eff[flat]
            if eff != 0.0:
                delta = eff * (new - old)
                targets = targets_table[flat] if targets_table is not None \
                    else _inbounds_stencil(fld.meta, r, c, self.knn_rule)
                sd = self.sense_delta
                for t in targets:
                    sd[t] = sd.get(t, 0.0) + delta


def _stencil_sums(layer, rule):
    from .field import _shifted
    acc = np.zeros_like(layer)
    for dr, dc in stencil_offsets(rule):
        acc += _shifted(layer, dr, dc)
    return acc


def _inbounds_stencil(meta, row, col, rule):
    out = []
    for dr, dc in stencil_offsets(rule):
        r, c = row + dr, col + dc
        if 0 <= r < meta.n_rows and 0 <= c < meta.n_cols:
            out.append(r * meta.n_cols + c)
    return tuple(out)


def sense_road(fld, overlay, cell, knn_rule):
    """Decayed importance summed over the knn_rule stencil at `cell`."""
    if overlay is not None:
        if overlay.knn_rule != int(knn_rule):
            raise ConfigError(f"overlay built for rule {overlay.knn_rule}, asked for {knn_rule}")
        return overlay.sense(*cell)
    return float(fld.stencil_sums(knn_rule)[cell[0], cell[1]])


def _road_probs(road_values):
    exps = [math.exp(v) for v in road_values]
    total = sum(exps)
    return [e / total for e in exps]


def _home_probs(home_scores):
    m = max(home_scores)
    exps = [math.exp(s - m) for s in home_scores]
    total = sum(exps)
    return [e / total for e in exps]


def neighbor_probs(fld, overlay, neighbors, origin, params):
    """(p_road, p_home) softmax vectors over a feasible neighbor set."""
    if not neighbors:
        raise InputError("neighbor set is empty")
    road = [sense_road(fld, overlay, n, params.knn_rule) for n in neighbors]
    cell = fld.meta.cell_size_m
    home = [-cell_distance_m(fld.meta, n, origin) / cell for n in neighbors]
    return _road_probs(road), _home_probs(home)


def objective(fld, overlay, neighbors, proposed, origin, d_m, params):
    """Acceptance probability f in [0, 1] for the proposed neighbor."""
    if proposed not in neighbors:
        raise InputError(f"proposed cell {proposed} not among the neighbors")
    p_road, p_home = neighbor_probs(fld, overlay, neighbors, origin, params)
    j = neighbors.index(proposed)
    f = p_road[j] + gamma(d_m, params) * p_home[j]
    return min(1.0, max(0.0, f))


# ---------------------------------------------------------------------------
# Fast walk machinery


class _WalkContext:
    """Shared read-only tables for a batch of walks from one origin."""

    def __init__(self, fld, origin, params, bonus=None):
        meta = fld.meta
        if not fld.feasible(*origin):
            raise InputError(f"origin {origin} is not a feasible cell")
        self.field = fld
        self.origin = origin
        self.params = params
        self.bonus = bonus
        n_rows, n_cols = meta.n_rows, meta.n_cols
        self.n_cols = n_cols
        self.cell_size = meta.cell_size_m
        self.cap = params.proposal_cap(meta.cell_size_m)

        eff = fld.importance if bonus is None else fld.importance + bonus
        self.eff = eff
        self.base_sense = (fld.stencil_sums(params.knn_rule) if bonus is None
                           else _stencil_sums(eff, params.knn_rule)).ravel().tolist()

        ok = ~fld.nodata_mask
        max_climb = params.max_climb_m
        alt = fld.altitude
        nbrs = []
        steps = []
        for r in range(n_rows):
            for c in range(n_cols):
                cell_nbrs = []
                cell_steps = []
                if ok[r, c]:
                    for dr, dc in MOORE_OFFSETS:
                        rr, cc = r + dr, c + dc
                        if not (0 <= rr < n_rows and 0 <= cc < n_cols) or not ok[rr, cc]:
                            continue
                        if max_climb is not None and abs(alt[rr, cc] - alt[r, c]) > max_climb:
                            continue
                        cell_nbrs.append(rr * n_cols + cc)
                        cell_steps.append(self.cell_size * (SQRT2 if dr and dc else 1.0))
                nbrs.append(tuple(cell_nbrs))
                steps.append(tuple(cell_steps))
        self.nbrs = nbrs
        self.steps = steps

        # Home-attraction softmax per cell over its neighbor list. Distances
        # are to the origin center, rescaled by the cell size before the
        # (max-shifted) exponentiation.
        origin_lat, origin_lon = _cell_latlon_grid(meta)
        olat = origin_lat[origin[0], origin[1]]
        olon = origin_lon[origin[0], origin[1]]
        dist = _haversine_grid(origin_lat, origin_lon, olat, olon).ravel()
        score = (-dist / self.cell_size).tolist()
        home_p = []
        for flat, cell_nbrs in enumerate(nbrs):
            if cell_nbrs:
                home_p.append(tuple(_home_probs([score[n] for n in cell_nbrs])))
            else:
                home_p.append(())
        self.home_p = home_p

        self.stencil_targets = [
            _inbounds_stencil(meta, flat // n_cols, flat % n_cols, params.knn_rule)
            for flat in range(n_rows * n_cols)
        ]
        self.moore_self = [
            tuple(
                (flat // n_cols + dr) * n_cols + (flat % n_cols + dc)
                for dr, dc in ((0, 0),) + MOORE_OFFSETS
                if 0 <= flat // n_cols + dr < n_rows and 0 <= flat % n_cols + dc < n_cols
            )
            for flat in range(n_rows * n_cols)
        ]


def _cell_latlon_grid(meta):
    from .geo import METERS_PER_DEG_LAT, meters_per_deg_lon

    rows = np.arange(meta.n_rows)[:, None]
    cols = np.arange(meta.n_cols)[None, :]
    rfb = (meta.n_rows - 1 - rows).astype(np.float64)
    lat = meta.origin_lat + rfb * meta.cell_size_m / METERS_PER_DEG_LAT
    lon = meta.origin_lon + cols * meta.cell_size_m / meters_per_deg_lon(meta.origin_lat)
    lat = np.broadcast_to(lat, (meta.n_rows, meta.n_cols)).copy()
    lon = np.broadcast_to(lon, (meta.n_rows, meta.n_cols)).copy()
    return lat, lon


def _haversine_grid(lat_grid, lon_grid, lat0, lon0):
    from .geo import EARTH_RADIUS_M

    phi = np.radians(lat_grid)
    phi0 = math.radians(lat0)
    dphi = np.radians(lat_grid - lat0)
    dlam = np.radians(lon_grid - lon0)
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi) * math.cos(phi0) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(a))


@dataclass
class WalkProbe:
    """Snapshot handed to a probe callback on every proposal."""
    position: tuple
    proposed: tuple
    p_road: list
    p_home: list
    f: float
    accepted: bool
    distance_m: float
    proposals_used: int


def _run_walk(ctx, seed_str, alpha, beta, probe=None, keep_cells=True):
    params = ctx.params
    rng = random.Random(seed_str)
    rand = rng.random
    randrange = rng.randrange

    nbrs = ctx.nbrs
    steps = ctx.steps
    home_p = ctx.home_p
    base_sense = ctx.base_sense
    stencil_targets = ctx.stencil_targets
    moore_self = ctx.moore_self
    eff = ctx.eff.ravel().tolist()
    n_cols = ctx.n_cols
    exp = math.exp

    mfd = params.mfd_m
    decay = params.decay
    cap = ctx.cap
    origin_flat = ctx.origin[0] * n_cols + ctx.origin[1]

    mult = {}
    sense_delta = {}
    pos = origin_flat
    d = 0.0
    path = [origin_flat]
    proposals = 0
    scenario = None

    while True:
        cell_nbrs = nbrs[pos]
        if not cell_nbrs:
            scenario = SCENARIO_TRAPPED
            break
        if proposals >= cap:
            scenario = SCENARIO_EXHAUSTED
            break
        j = randrange(len(cell_nbrs))
        proposed = cell_nbrs[j]

        # p_road over the neighbor set, raw exponentials of decayed sensing
        total = 0.0
        pj = 0.0
        for idx, n in enumerate(cell_nbrs):
            e = exp(base_sense[n] + sense_delta.get(n, 0.0))
            total += e
            if idx == j:
                pj = e
        g = alpha * (d / mfd - beta) ** 3
        f = pj / total + g * home_p[pos][j]
        if f < 0.0:
            f = 0.0
        elif f > 1.0:
            f = 1.0

        u = rand()
        accepted = u < f
        proposals += 1
        if probe is not None:
            road_probs = []
            for n in cell_nbrs:
                road_probs.append(exp(base_sense[n] + sense_delta.get(n, 0.0)) / total)
            probe(WalkProbe(position=divmod(pos, n_cols), proposed=divmod(proposed, n_cols),
                            p_road=road_probs, p_home=list(home_p[pos]), f=f,
                            accepted=accepted, distance_m=d, proposals_used=proposals))
        if not accepted:
            continue

        # decay the accepted cell and its 8 neighbors, update stencil sums
        for cell in moore_self[proposed]:
            old = mult.get(cell, 1.0)
            new = old * decay
            mult[cell] = new
            e_cell = eff[cell]
            if e_cell != 0.0:
                delta = e_cell * (new - old)
                for t in stencil_targets[cell]:
                    sense_delta[t] = sense_delta.get(t, 0.0) + delta

        d += steps[pos][j]
        pos = proposed
        path.append(pos)
        if d > mfd:
            scenario = SCENARIO_EXHAUSTED
            break
        if pos == origin_flat:
            scenario = SCENARIO_HOME
            break

    cells = np.array([divmod(p, n_cols) for p in path], dtype=np.int32)
    coverage = road_coverage(cells, ctx.field)
    return RouteResult(cells=cells if keep_cells else None, distance_m=d, scenario=scenario,
                       alpha=alpha, beta=beta, seed=str(seed_str), coverage=coverage)


def walk(fld, origin, params, bonus=None, probe=None):
    """Run one seeded walk from `origin`; deterministic for fixed inputs."""
    ctx = _WalkContext(fld, tuple(origin), params, bonus=bonus)
    return _run_walk(ctx, f"{params.seed}:0", params.alpha, params.beta, probe=probe)


# Module-level worker state for process pools (fork-safe, read-only).
_WORKER_CTX = None


def _init_worker(fld, origin, params, bonus):
    global _WORKER_CTX
    _WORKER_CTX = _WalkContext(fld, origin, params, bonus=bonus)


def _worker_run(args):
    master_seed, indices, alphas, betas, keep_cells = args
    out = []
    for i in indices:
        alpha = alphas[i] if alphas is not None else _WORKER_CTX.params.alpha
        beta = betas[i] if betas is not None else _WORKER_CTX.params.beta
        route = _run_walk(_WORKER_CTX, f"{master_seed}:{i}", alpha, beta, keep_cells=keep_cells)
        route.index = i
        out.append(route)
    return out


def run_batch(fld, origin, params, n, master_seed, jobs=1, alphas=None, betas=None,
              bonus=None, keep_cells=True):
    """Run n independent walks; walk i is seeded from (master_seed, i).

    Results come back sorted by index regardless of worker scheduling, so a
    given (field, origin, params, master_seed, n) is fully reproducible.
    """
    if n < 1:
        raise InputError(f"batch size must be >= 1, got {n}")
    origin = tuple(origin)
    if jobs <= 1:
        ctx = _WalkContext(fld, origin, params, bonus=bonus)
        out = []
        for i in range(n):
            alpha = alphas[i] if alphas is not None else params.alpha
            beta = betas[i] if betas is not None else params.beta
            route = _run_walk(ctx, f"{master_seed}:{i}", alpha, beta, keep_cells=keep_cells)
            route.index = i
            out.append(route)
        return out

    chunks = [list(range(start, n, jobs)) for start in range(jobs)]
    results = [None] * n
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(fld, origin, params, bonus)) as pool:
        args = [(master_seed, chunk, alphas, betas, keep_cells) for chunk in chunks if chunk]
        for batch in pool.map(_worker_run, args):
            for route in batch:
                results[route.index] = route
    return results


def experience_bonus(routes, fld, cap_factor=0.5, top_fraction=0.5):
    """Additive importance overlay built from well-performing past routes.

    Visit counts over the top-coverage half of the given home routes are
    scaled so the largest bonus equals cap_factor times the maximum road
    class weight.
    """
    from .field import CLASS_WEIGHTS

    bonus = np.zeros(fld.meta.shape, dtype=np.float64)
    if not routes:
        return bonus
    for route in routes:
        if route.scenario != SCENARIO_HOME:
            raise InputError("experience bonus expects scenario-home routes only")
        if route.cells is None:
            raise InputError("experience bonus needs routes with cells retained")
    ranked = sorted(routes, key=lambda r: -r.coverage)
    keep = max(1, int(len(ranked) * top_fraction))
    for route in ranked[:keep]:
        for r, c in route.cells:
            bonus[r, c] += 1.0
    peak = bonus.max()
    if peak > 0:
        bonus *= (cap_factor * max(CLASS_WEIGHTS.values())) / peak
    return bonus


# ---------------------------------------------------------------------------
# Route IO


def write_route_csv(route, path, cell_size_m):
    """Per-route CSV: step,row,col,cum_dist_m."""
    if route.cells is None:
        raise InputError("route has no retained cells")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "row", "col", "cum_dist_m"])
        d = 0.0
        prev = None
        for step, (r, c) in enumerate(route.cells):
            if prev is not None:
                dr, dc = abs(int(r) - prev[0]), abs(int(c) - prev[1])
                d += (SQRT2 if dr and dc else 1.0) * cell_size_m
            writer.writerow([step, int(r), int(c), f"{d:.3f}"])
            prev = (int(r), int(c))
    return str(Path(path))


def write_route_summary(route, path):
    Path(path).write_text(json.dumps({
        "scenario": route.scenario,
        "distance_m": route.distance_m,
        "alpha": route.alpha,
        "beta": route.beta,
        "seed": route.seed,
        "coverage": route.coverage,
    }, indent=2))
    return str(Path(path))


def read_route_csv(path):
    cells = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            cells.append((int(row["row"]), int(row["col"])))
    return np.array(cells, dtype=np.int32)


def write_results_csv(routes, path):
    """Batch results table: seed,alpha,beta,scenario,distance_m,coverage."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "alpha", "beta", "scenario", "distance_m", "coverage"])
        for route in routes:
            writer.writerow([route.seed, repr(route.alpha), repr(route.beta),
                             route.scenario, f"{route.distance_m:.3f}", repr(route.coverage)])
    return str(Path(path))
