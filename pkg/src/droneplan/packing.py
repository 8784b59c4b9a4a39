"""Cargo packing: GA 3-D bin packing for drone bays and container filling.

The GA evolves a box permutation plus a per-box orientation gene; a
deepest-bottom-left decoder with an extreme-point list turns a chromosome
into a placement. Fitness is the packed-volume fraction, so 1.0 means
every box was placed and the instance is feasible. Infeasibility is only
reported once the full generation budget is exhausted.
"""

import csv
import itertools
import random
from dataclasses import dataclass, field as dc_field

from .errors import ConfigError, InputError, ParseError, PayloadError
from .fleet import max_reach_km, mdc_lb

MED_KINDS = ("MED1", "MED2", "MED3")


@dataclass(frozen=True)
class Box:
    kind: str
    dims: tuple          # (l, w, h)
    weight_lb: float = 0.0

    def __post_init__(self):
        if len(self.dims) != 3 or any(d <= 0 for d in self.dims):
            raise ConfigError(f"box {self.kind}: dims must be 3 positive numbers, got {self.dims}")
        if self.weight_lb < 0:
            raise ConfigError(f"box {self.kind}: weight must be >= 0")

    @property
    def volume(self):
        l, w, h = self.dims
        return l * w * h


# Shipped medical package defaults; dimensions in inches, weights in lb.
DEFAULT_PACKAGES = {
    "MED1": Box("MED1", (14.0, 7.0, 5.0), 2.0),
    "MED2": Box("MED2", (5.0, 8.0, 5.0), 2.0),
    "MED3": Box("MED3", (12.0, 7.0, 4.0), 3.0),
}

# Shipping crate footprints for the default drones when stacked in a container.
DEFAULT_CRATES = {
    "B": Box("B", (34.0, 32.0, 24.0), 25.0),
    "C": Box("C", (48.0, 36.0, 30.0), 40.0),
    "F": Box("F", (40.0, 36.0, 26.0), 35.0),
    "H": Box("H", (22.0, 22.0, 10.0), 5.0),
}


@dataclass(frozen=True)
class PackagePlan:
    destination: str
    counts: tuple        # (n_med1, n_med2, n_med3)
    total_weight_lb: float

    @classmethod
    def from_counts(cls, destination, counts, packages=None):
        packages = packages or DEFAULT_PACKAGES
        if len(counts) != 3 or any(c < 0 for c in counts) or sum(counts) == 0:
            raise ConfigError(f"plan counts must be 3 non-negative ints, not all zero: {counts}")
        weight = sum(c * packages[k].weight_lb for c, k in zip(counts, MED_KINDS))
        return cls(destination=destination, counts=tuple(counts), total_weight_lb=weight)

    def boxes(self, packages=None):
        packages = packages or DEFAULT_PACKAGES
        out = []
        for count, kind in zip(self.counts, MED_KINDS):
            out.extend([packages[kind]] * count)
        return out


@dataclass(frozen=True)
class Placement:
    box_index: int
    kind: str
    position: tuple      # (x, y, z)
    size: tuple          # oriented (dx, dy, dz)


@dataclass
class PackingResult:
    feasible: bool
    placements: list
    fill_fraction: float
    generations_used: int
    evaluations: int


@dataclass(frozen=True)
class GAConfig:
    population: int = 50
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    tournament: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise ConfigError("GA population must be >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"GA {name} must be in [0, 1], got {rate}")


def orientations(dims):
    """Distinct axis-aligned orientations of a cuboid (up to 6)."""
    seen = []
    for perm in itertools.permutations(dims):
        if perm not in seen:
            seen.append(perm)
    return seen


def validate_placement(bay_dims, placements):
    """Direct geometric check: every box inside the bay, no pairwise overlap."""
    for p in placements:
        for axis in range(3):
            if p.position[axis] < -1e-9 or p.position[axis] + p.size[axis] > bay_dims[axis] + 1e-9:
                return False
    for a, b in itertools.combinations(placements, 2):
        overlap = all(
            a.position[axis] < b.position[axis] + b.size[axis] - 1e-9
            and b.position[axis] < a.position[axis] + a.size[axis] - 1e-9
            for axis in range(3)
        )
        if overlap:
            return False
    return True


def _decode(bay_dims, boxes, order, orients, orient_tables):
    """Place boxes following the chromosome; deepest-bottom-left-first.

    Extreme points are tried in (z, y, x) order and the box lands on the
    first point where it fits. Returns (placements, placed_volume).
    """
    placements = []
    placed_volume = 0.0
    eps = [(0.0, 0.0, 0.0)]
    for slot, box_i in enumerate(order):
        table = orient_tables[box_i]
        size = table[orients[slot] % len(table)]
        chosen = None
        for ep in eps:
            x, y, z = ep
            if x + size[0] > bay_dims[0] + 1e-9:
                continue
            if y + size[1] > bay_dims[1] + 1e-9:
                continue
            if z + size[2] > bay_dims[2] + 1e-9:
                continue
            ok = True
            for p in placements:
                if (x < p.position[0] + p.size[0] - 1e-9 and p.position[0] < x + size[0] - 1e-9
                        and y < p.position[1] + p.size[1] - 1e-9 and p.position[1] < y + size[1] - 1e-9
                        and z < p.position[2] + p.size[2] - 1e-9 and p.position[2] < z + size[2] - 1e-9):
                    ok = False
                    break
            if ok:
                chosen = ep
                break
        if chosen is None:
            continue
        x, y, z = chosen
        placements.append(Placement(box_index=box_i, kind=boxes[box_i].kind,
                                    position=chosen, size=size))
        placed_volume += size[0] * size[1] * size[2]
        eps.remove(chosen)
        eps.extend(((x + size[0], y, z), (x, y + size[1], z), (x, y, z + size[2])))
        eps.sort(key=lambda p: (p[2], p[1], p[0]))
    return placements, placed_volume


def pack_feasible(bay_dims, boxes, ga=None):
    """GA feasibility test for packing `boxes` into a bay of `bay_dims`.

    Deterministic for a fixed GAConfig seed. A returned witness always
    satisfies validate_placement; infeasibility means the GA budget ran out
    without a full packing (after the cheap impossibility bounds below).
    """
    if any(d <= 0 for d in bay_dims):
        raise ConfigError(f"bay dims must be positive, got {bay_dims}")
    if not boxes:
        raise InputError("no boxes to pack")
    ga = ga or GAConfig()

    total_volume = sum(b.volume for b in boxes)
    bay_volume = bay_dims[0] * bay_dims[1] * bay_dims[2]
    orient_tables = [orientations(b.dims) for b in boxes]
    for table in orient_tables:
        if not any(all(s <= d + 1e-9 for s, d in zip(size, bay_dims)) for size in table):
            return PackingResult(False, [], 0.0, 0, 0)
    if total_volume > bay_volume + 1e-9:
        return PackingResult(False, [], 0.0, 0, 0)

    rng = random.Random(ga.seed)
    n = len(boxes)
    base = list(range(n))
    by_volume = sorted(base, key=lambda i: -boxes[i].volume)

    def random_individual():
        order = base[:]
        rng.shuffle(order)
        return order, [rng.randrange(6) for _ in range(n)]

    population = [(by_volume[:], [0] * n), (base[:], [0] * n), (by_volume[::-1], [0] * n)]
    if n <= 4:
        # Tiny instances: seed every permutation so the search cannot miss
        # an ordering; orientation genes still evolve.
        population = [(list(p), [0] * n) for p in itertools.permutations(base)]
    while len(population) < ga.population:
        population.append(random_individual())
    population = population[:ga.population]

    evaluations = 0
    best = (None, -1.0)

    def fitness(ind):
        nonlocal evaluations
        evaluations += 1
        placements, vol = _decode(bay_dims, boxes, ind[0], ind[1], orient_tables)
        return vol / total_volume, placements

    scored = []
    for ind in population:
        fit, placements = fitness(ind)
        scored.append((fit, ind))
        if fit > best[1]:
            best = ((ind, placements), fit)
        if fit >= 1.0:
            return PackingResult(True, placements, 1.0, 0, evaluations)

    def tournament():
        picks = [scored[rng.randrange(len(scored))] for _ in range(ga.tournament)]
        return max(picks, key=lambda s: s[0])[1]

    def order_crossover(p1, p2):
        a, b = sorted(rng.sample(range(n), 2)) if n > 1 else (0, 0)
        child = [None] * n
        child[a:b + 1] = p1[a:b + 1]
        fill = [g for g in p2 if g not in child[a:b + 1]]
        j = 0
        for i in range(n):
            if child[i] is None:
                child[i] = fill[j]
                j += 1
        return child

    for gen in range(1, ga.generations + 1):
        elite = max(scored, key=lambda s: s[0])[1]
        next_pop = [(elite[0][:], elite[1][:])]
        while len(next_pop) < ga.population:
            p1, p2 = tournament(), tournament()
            if rng.random() < ga.crossover_rate and n > 1:
                order = order_crossover(p1[0], p2[0])
                orients = [g1 if rng.random() < 0.5 else g2 for g1, g2 in zip(p1[1], p2[1])]
            else:
                order, orients = p1[0][:], p1[1][:]
            if rng.random() < ga.mutation_rate and n > 1:
                i, j = rng.sample(range(n), 2)
                order[i], order[j] = order[j], order[i]
            if rng.random() < ga.mutation_rate:
                orients[rng.randrange(n)] = rng.randrange(6)
            next_pop.append((order, orients))
        scored = []
        for ind in next_pop:
            fit, placements = fitness(ind)
            scored.append((fit, ind))
            if fit > best[1]:
                best = ((ind, placements), fit)
            if fit >= 1.0:
                return PackingResult(True, placements, 1.0, gen, evaluations)

    (_, placements), fit = best
    return PackingResult(False, placements, fit, ga.generations, evaluations)


# ---------------------------------------------------------------------------
# Plan enumeration


@dataclass(frozen=True)
class PlanRow:
    destination: str
    drone: str
    counts: tuple
    weight_lb: float
    reach_km: float
    rank: int            # 1 = longest reach for this destination


@dataclass
class PlanTable:
    rows: list
    unservable: list     # destination names with no feasible (drone, plan)

    def for_destination(self, name):
        return [r for r in self.rows if r.destination == name]

    def best(self, name):
        rows = self.for_destination(name)
        return rows[0] if rows else None

    def rank_of(self, name, drone):
        for r in self.for_destination(name):
            if r.drone == drone:
                return r.rank
        return None


def enumerate_plans(destinations, catalog, range_model, packages=None, ga=None):
    """Test every (destination, cargo drone) pair and rank by reach.

    A pair is kept when the daily package plan packs into the drone bay and
    the plan weight stays below the drivable limit. Rows are ranked per
    destination by max_reach_km descending.
    """
    packages = packages or DEFAULT_PACKAGES
    ga = ga or GAConfig()
    rows = []
    unservable = []
    for dest in destinations:
        plan = PackagePlan.from_counts(dest.name, dest.demand, packages)
        candidates = []
        for pair_index, spec in enumerate(catalog):
            if not spec.is_cargo:
                continue
            if plan.total_weight_lb >= mdc_lb(spec, range_model):
                continue
            run_cfg = GAConfig(population=ga.population, generations=ga.generations,
                               crossover_rate=ga.crossover_rate, mutation_rate=ga.mutation_rate,
                               tournament=ga.tournament, seed=ga.seed * 10007 + pair_index)
            result = pack_feasible(spec.bay, plan.boxes(packages), run_cfg)
            if not result.feasible:
                continue
            reach = max_reach_km(spec, range_model, plan.total_weight_lb)
            candidates.append((reach, spec.model))
        candidates.sort(key=lambda t: (-t[0], t[1]))
        if not candidates:
            unservable.append(dest.name)
            continue
        for rank, (reach, model) in enumerate(candidates, start=1):
            rows.append(PlanRow(destination=dest.name, drone=model, counts=plan.counts,
                                weight_lb=plan.total_weight_lb, reach_km=reach, rank=rank))
    return PlanTable(rows=rows, unservable=unservable)


# ---------------------------------------------------------------------------
# Container configuration

# ISO 20-foot container interior, inches.
DEFAULT_CONTAINER_DIMS = (232.0, 92.0, 94.0)


@dataclass
class ContainerConfig:
    drone_counts: dict
    med_counts: tuple
    supporting_days: int
    drone_volume: float
    med_volume: float
    free_volume: float


def configure_container(container_dims, drone_crates, med_demand_ratio, daily_demand,
                        packages=None):
    """Fill a container: drones first, then medical stock in a fixed ratio.

    drone_crates: list of Box (one per drone placed in the container).
    med_demand_ratio: relative (med1, med2, med3) mix to stock.
    daily_demand: absolute daily consumption used for supporting_days.
    Stock is the largest integer multiple of the ratio that fits the
    remaining volume; supporting_days = floor(min stock_i / demand_i) over
    medicines with nonzero demand.
    """
    packages = packages or DEFAULT_PACKAGES
    if any(d <= 0 for d in container_dims):
        raise ConfigError(f"container dims must be positive, got {container_dims}")
    if len(med_demand_ratio) != 3 or any(r < 0 for r in med_demand_ratio):
        raise ConfigError(f"demand ratio must be 3 non-negative numbers, got {med_demand_ratio}")
    container_volume = container_dims[0] * container_dims[1] * container_dims[2]
    drone_volume = sum(c.volume for c in drone_crates)
    if drone_volume > container_volume + 1e-9:
        raise ConfigError(
            f"drones alone need {drone_volume} cu in, container holds {container_volume}")

    remaining = container_volume - drone_volume
    unit_volumes = [packages[k].volume for k in MED_KINDS]
    group_volume = sum(r * v for r, v in zip(med_demand_ratio, unit_volumes))
    if group_volume <= 0:
        med_counts = (0, 0, 0)
    else:
        multiplier = int(remaining / group_volume + 1e-9)
        med_counts = tuple(int(round(multiplier * r)) for r in med_demand_ratio)
    med_volume = sum(c * v for c, v in zip(med_counts, unit_volumes))

    days = 0
    active = [(stock, need) for stock, need in zip(med_counts, daily_demand) if need > 0]
    if active:
        days = min(int(stock // need) for stock, need in active)

    counts = {}
    for crate in drone_crates:
        counts[crate.kind] = counts.get(crate.kind, 0) + 1
    return ContainerConfig(drone_counts=counts, med_counts=med_counts, supporting_days=days,
                           drone_volume=drone_volume, med_volume=med_volume,
                           free_volume=remaining - med_volume)


# ---------------------------------------------------------------------------
# Package catalog and witness IO


def load_packages(path):
    """Package catalog CSV `kind,l,w,h,weight_lb` (MED kinds plus drone crates)."""
    boxes = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"kind", "l", "w", "h", "weight_lb"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ParseError(f"package catalog must have columns {sorted(required)}")
        for i, row in enumerate(reader):
            try:
                kind = row["kind"].strip()
                boxes[kind] = Box(kind, (float(row["l"]), float(row["w"]), float(row["h"])),
                                  float(row["weight_lb"]))
            except (ValueError, AttributeError):
                raise ParseError("bad package catalog row", line=i + 2)
    for kind in MED_KINDS:
        if kind not in boxes:
            raise ParseError(f"package catalog is missing {kind}")
    return boxes


def write_witness_csv(placements, path):
    """Packing witness CSV: box_id,kind,x,y,z,orient."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["box_id", "kind", "x", "y", "z", "orient"])
        for p in placements:
            writer.writerow([p.box_index, p.kind, *p.position, "x".join(str(s) for s in p.size)])
