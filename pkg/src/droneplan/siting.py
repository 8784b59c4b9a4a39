"""Base siting: oversampled weighted k-means over destinations and road samples.

Clustering runs on equirectangular-projected coordinates (longitude scaled
by the cosine of the mean latitude) so squared Euclidean distance tracks
geodesics at island scale; the final reachability checks use haversine.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ConfigError, InputError, PlanningError
from .fleet import max_reach_km
from .geo import haversine_km

DEFAULT_WEIGHT_STEP = 1.25
DEFAULT_WEIGHT_CAP_FACTOR = 1e6


@dataclass(frozen=True)
class WeightedPoint:
    lat: float
    lon: float
    weight: float
    tag: str = "road-sample"     # "destination" | "road-sample"

    def __post_init__(self):
        if self.weight <= 0:
            raise ConfigError(f"point weight must be positive, got {self.weight}")


@dataclass
class KMeansResult:
    centroids: list              # [(lat, lon), ...]
    labels: np.ndarray
    objective_history: list      # weighted within-cluster sum of squares per iteration
    n_iter: int


@dataclass
class BasePlan:
    k: int
    centroids: list              # [(lat, lon), ...]
    partition: dict              # destination name -> cluster index
    oversample_weight: float
    drones: dict = dc_field(default_factory=dict)   # cluster index -> {model: count}
    delivery_drone: dict = dc_field(default_factory=dict)  # cluster index -> model
    warnings: list = dc_field(default_factory=list)

    def to_dict(self):
        return {
            "k": self.k,
            "centroids": [{"lat": lat, "lon": lon} for lat, lon in self.centroids],
            "partition": dict(self.partition),
            "oversample_weight": self.oversample_weight,
            "drones": {str(c): dict(models) for c, models in self.drones.items()},
            "delivery_drone": {str(c): m for c, m in self.delivery_drone.items()},
            "warnings": list(self.warnings),
        }


def _project(points):
    mean_lat = sum(p.lat for p in points) / len(points)
    scale = math.cos(math.radians(mean_lat))
    xy = np.array([[p.lon * scale, p.lat] for p in points], dtype=np.float64)
    w = np.array([p.weight for p in points], dtype=np.float64)
    return xy, w, scale


def _plus_plus_init(xy, w, k, rng):
    """Weighted k-means++ seeding."""
    n = xy.shape[0]
    centers = np.empty((k, 2))
    first = rng.choice(n, p=w / w.sum())
    centers[0] = xy[first]
    closest = ((xy - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        potential = closest * w
        total = potential.sum()
        if total <= 0:
            idx = rng.choice(n, p=w / w.sum())
        else:
            idx = rng.choice(n, p=potential / total)
        centers[c] = xy[idx]
        closest = np.minimum(closest, ((xy - centers[c]) ** 2).sum(axis=1))
    return centers


def kmeans(points, k, seed=0, max_iter=100, tol=1e-6):
    """Weighted Lloyd iterations; terminates on centroid shift < tol (degrees).

    Empty clusters are re-seeded at the point farthest from its centroid.
    Deterministic for a fixed seed.
    """
    distinct = {(p.lat, p.lon) for p in points}
    if k > len(distinct):
        raise InputError(f"k={k} exceeds the {len(distinct)} distinct points")
    xy, w, scale = _project(points)
    rng = np.random.default_rng(seed)
    centers = _plus_plus_init(xy, w, k, rng)

    history = []
    labels = None
    for iteration in range(1, max_iter + 1):
        d2 = ((xy[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new_centers = centers.copy()
        for c in range(k):
            member = labels == c
            total = w[member].sum()
            if total > 0:
                new_centers[c] = (xy[member] * w[member, None]).sum(axis=0) / total
            else:
                farthest = d2.min(axis=1).argmax()
                new_centers[c] = xy[farthest]
        d2_new = ((xy[:, None, :] - new_centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2_new.argmin(axis=1)
        history.append(float((d2_new.min(axis=1) * w).sum()))
        shift = float(np.abs(new_centers - centers).max())
        centers = new_centers
        if shift < tol:
            break

    centroids = [(float(y), float(x / scale)) for x, y in centers]
    return KMeansResult(centroids=centroids, labels=labels,
                        objective_history=history, n_iter=len(history))


def road_sample_points(fld, n_destinations, ratio=10):
    """Every Nth road cell center, N chosen to yield ~ratio x destinations."""
    from .field import cell_to_latlon

    road_cells = np.argwhere(fld.importance > 0)
    if len(road_cells) == 0:
        return []
    target = max(1, ratio * max(1, n_destinations))
    step = max(1, len(road_cells) // target)
    pts = []
    for r, c in road_cells[::step]:
        lat, lon = cell_to_latlon(fld.meta, int(r), int(c))
        pts.append(WeightedPoint(lat=lat, lon=lon, weight=1.0, tag="road-sample"))
    return pts


@dataclass
class OversampleResult:
    feasible: bool
    plan: BasePlan | None
    k: int
    weight: float


def oversample_until_feasible(dests, road_points, plan_table, k, seed=0,
                              weight_step=DEFAULT_WEIGHT_STEP,
                              weight_cap_factor=DEFAULT_WEIGHT_CAP_FACTOR):
    """Raise destination weights geometrically until every destination lies
    within its best plan's reach of its cluster centroid.

    The initial weight equalizes total destination weight with total road
    weight. Returns the first feasible weight, or an infeasible result once
    the cap (weight_cap_factor x initial) is exceeded.
    """
    if not dests:
        raise InputError("no destinations")
    reach = {}
    for d in dests:
        row = plan_table.best(d.name)
        if row is None:
            raise PlanningError(f"destination {d.name} has no feasible (drone, plan)")
        reach[d.name] = row.reach_km

    road_total = sum(p.weight for p in road_points)
    initial = road_total / len(dests) if road_total > 0 else 1.0
    weight = initial
    cap = initial * weight_cap_factor
    while weight <= cap:
        points = [WeightedPoint(d.lat, d.lon, weight, "destination") for d in dests]
        points.extend(road_points)
        result = kmeans(points, k, seed=seed)
        ok = True
        partition = {}
        for i, d in enumerate(dests):
            cluster = int(result.labels[i])
            partition[d.name] = cluster
            lat, lon = result.centroids[cluster]
            if haversine_km(d.lat, d.lon, lat, lon) > reach[d.name]:
                ok = False
                break
        if ok:
            plan = BasePlan(k=k, centroids=result.centroids, partition=partition,
                            oversample_weight=weight)
            return OversampleResult(feasible=True, plan=plan, k=k, weight=weight)
        weight *= weight_step
    return OversampleResult(feasible=False, plan=None, k=k, weight=weight)


def select_k(dests, road_points, plan_table, seed=0, k_max=3,
             weight_step=DEFAULT_WEIGHT_STEP, weight_cap_factor=DEFAULT_WEIGHT_CAP_FACTOR):
    """Try k = 1, 2, ... k_max in order; return the first feasible BasePlan."""
    for k in range(1, k_max + 1):
        result = oversample_until_feasible(dests, road_points, plan_table, k, seed=seed,
                                           weight_step=weight_step,
                                           weight_cap_factor=weight_cap_factor)
        if result.feasible:
            return result.plan
    raise PlanningError(f"no feasible base plan with k <= {k_max}")


def transfer_feasible(base_a, base_b, spec, range_model, load_lb):
    """Can `spec` fly from base_a to base_b carrying load_lb?"""
    distance = haversine_km(base_a[0], base_a[1], base_b[0], base_b[1])
    return distance <= max_reach_km(spec, range_model, load_lb)


def assign_drones(base_plan, plan_table, catalog):
    """Pick delivery drones per cluster and fill in the fleet counts.

    The delivery drone minimizes the sum of per-destination ranks (Borda)
    among drones feasible for every destination in the cluster; counts are
    doubled as spares. Clusters whose delivery drone cannot film get a pair
    of the longest-range video drone, and every base gets two of each
    non-cargo support drone.
    """
    by_model = {s.model: s for s in catalog}
    video_specs = [s for s in catalog if s.video and s.is_cargo]
    recon = max(video_specs, key=lambda s: s.speed_kmh * s.flight_time_min) if video_specs else None
    support = [s.model for s in catalog if not s.is_cargo]

    clusters = {}
    for name, cluster in base_plan.partition.items():
        clusters.setdefault(cluster, []).append(name)

    for cluster in range(base_plan.k):
        names = clusters.get(cluster, [])
        if not names:
            base_plan.drones[cluster] = {}
            continue
        counts = {}
        common = None
        for name in names:
            models = {row.drone for row in plan_table.for_destination(name)}
            common = models if common is None else common & models
        if common:
            scored = sorted((sum(plan_table.rank_of(n, m) for n in names), m) for m in common)
            delivery = [scored[0][1]]
        else:
            delivery = sorted({plan_table.best(n).drone for n in names})
            base_plan.warnings.append(
                f"cluster {cluster}: no common feasible drone, using per-destination drones")
        for model in delivery:
            counts[model] = counts.get(model, 0) + 2
        base_plan.delivery_drone[cluster] = delivery[0] if len(delivery) == 1 else "+".join(delivery)
        if recon is not None and not all(by_model[m].video for m in delivery):
            counts[recon.model] = counts.get(recon.model, 0) + 2
        for model in support:
            counts[model] = counts.get(model, 0) + 2
        base_plan.drones[cluster] = counts
    return base_plan.drones
