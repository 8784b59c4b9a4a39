"""End-to-end operations over files: the service endpoints and the CLI both
drive these. Inputs are paths, outputs are written under an output
directory and echoed back as plain dicts.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import coverage as cov
from . import field as field_mod
from . import fleet, packing, sensitivity, siting, walker
from .errors import ConfigError, InputError, PlanningError


def _require_file(path, what):
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def build_field_bundle(altitude_grid, roads, out_dir, buffer_m=50.0):
    """Parse inputs, rasterize roads, write the three-file field bundle."""
    alt_path = _require_file(altitude_grid, "altitude grid")
    roads_path = _require_file(roads, "roads file")
    altitude, mask, meta = field_mod.parse_grid(alt_path.read_text())
    polylines = field_mod.read_roads(roads_path)
    fld = field_mod.build_field(meta, altitude, mask, polylines, buffer_m=buffer_m)
    files = field_mod.save_field_bundle(fld, out_dir)
    return {
        "out_dir": str(out_dir),
        "files": files,
        "n_rows": meta.n_rows,
        "n_cols": meta.n_cols,
        "cell_size_m": meta.cell_size_m,
        "road_cells": int((fld.importance > 0).sum()),
    }


def _load_catalogs(drone_catalog, package_catalog):
    catalog = fleet.load_catalog(_require_file(drone_catalog, "drone catalog")) \
        if drone_catalog else fleet.DEFAULT_CATALOG
    packages = packing.load_packages(_require_file(package_catalog, "package catalog")) \
        if package_catalog else {**packing.DEFAULT_PACKAGES, **packing.DEFAULT_CRATES}
    return catalog, packages


def plan_bases(field_dir, destinations, out_dir, seed, drone_catalog=None, package_catalog=None,
               range_k=1.3, k_max=3, container_dims=None, road_ratio=10):
    """enumerate_plans -> select_k -> assign_drones -> configure_container."""
    fld = field_mod.load_field_bundle(field_dir)
    dests = field_mod.read_destinations(_require_file(destinations, "destinations CSV"))
    catalog, packages = _load_catalogs(drone_catalog, package_catalog)
    container_dims = tuple(container_dims) if container_dims else packing.DEFAULT_CONTAINER_DIMS
    range_model = fleet.RangeModel(k=range_k)

    table = packing.enumerate_plans(dests, catalog, range_model, packages,
                                    packing.GAConfig(seed=seed))
    if table.unservable:
        raise PlanningError(f"unservable destinations: {', '.join(table.unservable)}")

    road_points = siting.road_sample_points(fld, len(dests), ratio=road_ratio)
    plan = siting.select_k(dests, road_points, table, seed=seed, k_max=k_max)
    siting.assign_drones(plan, table, catalog)

    by_name = {d.name: d for d in dests}
    containers = {}
    for cluster in range(plan.k):
        names = [n for n, c in plan.partition.items() if c == cluster]
        demand = tuple(sum(by_name[n].demand[i] for n in names) for i in range(3))
        crates = []
        for model, count in sorted(plan.drones.get(cluster, {}).items()):
            crate = packages.get(model)
            if crate is None:
                raise ConfigError(f"package catalog has no crate dims for drone {model}")
            crates.extend([crate] * count)
        cfg = packing.configure_container(container_dims, crates, demand, demand, packages)
        containers[str(cluster)] = {
            "destinations": sorted(names),
            "daily_demand": list(demand),
            "drone_counts": cfg.drone_counts,
            "med_counts": list(cfg.med_counts),
            "supporting_days": cfg.supporting_days,
            "free_volume": cfg.free_volume,
        }

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plan_file = out / "base_plan.json"
    payload = {
        "plan": plan.to_dict(),
        "containers": containers,
        "plan_table": [
            {"destination": r.destination, "drone": r.drone, "counts": list(r.counts),
             "weight_lb": r.weight_lb, "reach_km": r.reach_km, "rank": r.rank}
            for r in table.rows
        ],
    }
    plan_file.write_text(json.dumps(payload, indent=2))
    return {"out_dir": str(out), "plan_file": str(plan_file), **payload}


def _resolve_origin(fld, origin_row=None, origin_col=None, origin_lat=None, origin_lon=None,
                    plan_file=None, base_index=None):
    if origin_row is not None and origin_col is not None:
        return int(origin_row), int(origin_col)
    if origin_lat is not None and origin_lon is not None:
        return field_mod.latlon_to_cell(fld.meta, origin_lat, origin_lon)
    if plan_file is not None:
        payload = json.loads(_require_file(plan_file, "base plan").read_text())
        centroids = payload["plan"]["centroids"]
        idx = int(base_index or 0)
        if not 0 <= idx < len(centroids):
            raise ConfigError(f"base_index {idx} out of range for {len(centroids)} bases")
        c = centroids[idx]
        return field_mod.latlon_to_cell(fld.meta, c["lat"], c["lon"])
    raise ConfigError("no origin: give origin_row/origin_col, origin_lat/origin_lon, "
                      "or plan_file with base_index")


def _walk_params(cfg, fld):
    mfd = cfg.get("mfd_m")
    if mfd is None:
        mfd = fleet.mfd_m(fleet.DEFAULT_CATALOG[0])
    return walker.WalkParams(
        mfd_m=float(mfd),
        alpha=float(cfg.get("alpha", 0.2)),
        beta=float(cfg.get("beta", 0.3)),
        knn_rule=int(cfg.get("knn_rule", 8)),
        decay=float(cfg.get("decay", 0.5)),
        max_proposals=cfg.get("max_proposals"),
        max_climb_m=cfg.get("max_climb_m"),
    )


def walk_batch(field_dir, out_dir, master_seed, batch=10000, jobs=1, top_n=5,
               params=None, **origin_kwargs):
    """Run a seeded batch, rank by coverage, export the table and top routes."""
    fld = field_mod.load_field_bundle(field_dir)
    origin = _resolve_origin(fld, **origin_kwargs)
    wp = _walk_params(params or {}, fld)
    routes = walker.run_batch(fld, origin, wp, batch, master_seed, jobs=jobs)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_csv = walker.write_results_csv(routes, out / "results.csv")

    ranked = sorted(routes, key=lambda r: (-r.coverage, r.index))
    exported = []
    for rank, route in enumerate(ranked[:top_n]):
        stem = out / f"route_{rank:02d}"
        walker.write_route_csv(route, stem.with_suffix(".csv"), fld.meta.cell_size_m)
        walker.write_route_summary(route, stem.with_suffix(".json"))
        cov.render_routes_pgm(fld, [route], stem.with_suffix(".pgm"), wp.knn_rule)
        exported.append(str(stem.with_suffix(".csv")))

    n_home = sum(1 for r in routes if r.scenario == walker.SCENARIO_HOME)
    best = ranked[0]
    return {
        "out_dir": str(out),
        "results_csv": results_csv,
        "route_files": exported,
        "batch": batch,
        "n_home": n_home,
        "origin": list(origin),
        "best": {"index": best.index, "coverage": best.coverage,
                 "scenario": best.scenario, "distance_m": best.distance_m},
    }


@dataclass
class _LoadedRoute:
    cells: np.ndarray
    distance_m: float
    name: str


def _load_routes(routes_dir):
    routes = []
    for csv_path in sorted(Path(routes_dir).glob("route_*.csv")):
        cells = walker.read_route_csv(csv_path)
        distance = 0.0
        summary = csv_path.with_suffix(".json")
        if summary.exists():
            distance = json.loads(summary.read_text()).get("distance_m", 0.0)
        routes.append(_LoadedRoute(cells=cells, distance_m=distance, name=csv_path.stem))
    return routes


def pair_routes(field_dir, routes_dir, out_dir, knn_rule=8, area="road"):
    """Pick the route pair with the highest combinatorial coverage rate."""
    fld = field_mod.load_field_bundle(field_dir)
    _require_file(routes_dir, "routes directory")
    routes = _load_routes(routes_dir)
    if len(routes) < 2:
        raise InputError(f"need at least 2 exported routes in {routes_dir}, found {len(routes)}")
    report = cov.best_pair(routes, fld, knn_rule=knn_rule, area=area)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_file = cov.write_coverage_report(report, out / "pair_report.json")
    i, j = report.route_ids
    overlay_file = cov.render_routes_pgm(fld, [routes[i], routes[j]],
                                         out / "pair_overlay.pgm", knn_rule)
    return {
        "out_dir": str(out),
        "report_file": report_file,
        "overlay_file": overlay_file,
        "pair": [routes[i].name, routes[j].name],
        "report": report.to_dict(),
    }


def _fit_or_none(values):
    try:
        return sensitivity.fit_lognormal(values).to_dict()
    except InputError as exc:
        return {"error": str(exc), "sample_n": len(values)}


def sensitivity_run(field_dir, out_dir, master_seed, batch=1000, jobs=1,
                    threshold=None, dist=None, n_per_rule=50, params=None, **origin_kwargs):
    """Sample (alpha, beta), walk, filter, refit, regress, compare rules."""
    fld = field_mod.load_field_bundle(field_dir)
    origin = _resolve_origin(fld, **origin_kwargs)
    wp = _walk_params(params or {}, fld)
    dist = dist or sensitivity.ParamDist()

    alphas, betas = sensitivity.sample_params(dist, batch, master_seed)
    routes = walker.run_batch(fld, origin, wp, batch, master_seed, jobs=jobs,
                              alphas=alphas.tolist(), betas=betas.tolist(), keep_cells=False)

    home = [r for r in routes if r.scenario == walker.SCENARIO_HOME]
    if threshold is None:
        threshold = float(np.median([r.coverage for r in home])) if home else 0.0
    kept = sensitivity.filter_by_coverage(routes, threshold)

    fit_report = {
        "threshold": threshold,
        "n_total": len(routes),
        "n_home": len(home),
        "n_filtered": len(kept),
        "alpha": {
            "sampled": _fit_or_none(list(alphas)),
            "filtered": _fit_or_none([r.alpha for r in kept]),
        },
        "beta": {
            "sampled": _fit_or_none(list(betas)),
            "filtered": _fit_or_none([r.beta for r in kept]),
        },
    }

    regression_report = {}
    if len(home) >= 3:
        for name, getter in (("alpha", lambda r: r.alpha), ("beta", lambda r: r.beta)):
            try:
                reg = sensitivity.regress([getter(r) for r in home], [r.coverage for r in home])
                regression_report[name] = reg.to_dict()
            except InputError as exc:
                regression_report[name] = {"error": str(exc)}
    else:
        regression_report = {"error": f"only {len(home)} home routes, need >= 3"}

    knn_report = [s.to_dict() for s in
                  sensitivity.knn_rule_comparison(fld, origin, wp, n_per_rule, master_seed,
                                                  jobs=jobs)]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results_csv = walker.write_results_csv(routes, out / "results.csv")
    files = {"results_csv": results_csv}
    for name, payload in (("fit_report", fit_report),
                          ("regression_report", regression_report),
                          ("knn_report", knn_report)):
        path = out / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2))
        files[name] = str(path)
    return {"out_dir": str(out), "origin": list(origin), **files,
            "fit": fit_report, "regression": regression_report, "knn": knn_report}
