"""Route scoring by road coverage and combinatorial coverage of route pairs.

Coverage always reads the original field importance, never a walk's
decayed overlay. The combinatorial coverage rate of two routes is
covered-road-cells over road-cells-of-the-bounding-box; the covered set is
clipped to the same bounding box so the rate stays in [0, 1].
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .field import stencil_offsets, write_pgm


@dataclass
class CoverageReport:
    route_ids: tuple
    net_coverage: int
    bbox_road_cells: int
    ccr: float | None            # None when the bbox holds no road cells

    def to_dict(self):
        return {
            "route_ids": list(self.route_ids),
            "net_coverage": self.net_coverage,
            "bbox_road_cells": self.bbox_road_cells,
            "ccr": self.ccr,
        }


def _as_cells(route):
    cells = route.cells if hasattr(route, "cells") else route
    if cells is None:
        raise InputError("route has no retained cells")
    return np.asarray(cells, dtype=np.int64).reshape(-1, 2)


def road_coverage(route, fld):
    """Sum of original importance over the distinct cells of the route."""
    cells = _as_cells(route)
    if len(cells) == 0:
        return 0.0
    distinct = np.unique(cells, axis=0)
    return float(fld.importance[distinct[:, 0], distinct[:, 1]].sum())


def covered_cells(route, fld, knn_rule=8):
    """Road cells filmed from the route: stencil union intersected with roads."""
    cells = _as_cells(route)
    n_rows, n_cols = fld.meta.shape
    importance = fld.importance
    seen = set()
    offsets = stencil_offsets(knn_rule)
    for r, c in np.unique(cells, axis=0):
        for dr, dc in offsets:
            rr, cc = r + dr, c + dc
            if 0 <= rr < n_rows and 0 <= cc < n_cols and importance[rr, cc] > 0:
                seen.add((int(rr), int(cc)))
    return seen


def _bbox(cells_a, cells_b):
    both = np.vstack([cells_a, cells_b])
    return (int(both[:, 0].min()), int(both[:, 0].max()),
            int(both[:, 1].min()), int(both[:, 1].max()))


def ccr(route_a, route_b, fld, knn_rule=8, area="road", ids=(0, 1)):
    """Combinatorial coverage rate of a route pair.

    NC counts distinct covered road cells of the union, clipped to the
    minimal bounding box of both routes; A counts the road cells (or, with
    area="all", every cell) of that box. A box without road cells yields
    ccr None, which is distinct from 0.
    """
    if area not in ("road", "all"):
        raise ConfigError(f"area must be 'road' or 'all', got {area!r}")
    cells_a = _as_cells(route_a)
    cells_b = _as_cells(route_b)
    r0, r1, c0, c1 = _bbox(cells_a, cells_b)
    window = fld.importance[r0:r1 + 1, c0:c1 + 1]
    if area == "road":
        denom = int((window > 0).sum())
    else:
        denom = int(window.size)

    union = covered_cells(cells_a, fld, knn_rule) | covered_cells(cells_b, fld, knn_rule)
    clipped = {cell for cell in union if r0 <= cell[0] <= r1 and c0 <= cell[1] <= c1}
    net = len(clipped)
    rate = net / denom if denom > 0 else None
    return CoverageReport(route_ids=tuple(ids), net_coverage=net,
                          bbox_road_cells=denom, ccr=rate)


def best_pair(routes, fld, knn_rule=8, area="road"):
    """Exhaustive argmax of ccr over route pairs.

    Ties break toward the smaller summed route distance, then the
    lexicographically smallest id pair. Needs at least two routes.
    """
    if len(routes) < 2:
        raise InputError(f"need at least 2 routes, got {len(routes)}")
    best = None
    for i in range(len(routes)):
        for j in range(i + 1, len(routes)):
            report = ccr(routes[i], routes[j], fld, knn_rule, area, ids=(i, j))
            rate = report.ccr if report.ccr is not None else -1.0
            dist = getattr(routes[i], "distance_m", 0.0) + getattr(routes[j], "distance_m", 0.0)
            key = (-rate, dist, (i, j))
            if best is None or key < best[0]:
                best = (key, report)
    return best[1]


def write_coverage_report(report, path):
    Path(path).write_text(json.dumps(report.to_dict(), indent=2))
    return str(Path(path))


def render_routes_pgm(fld, routes, path, knn_rule=8):
    """Grayscale overlay: roads dim, filmed cells brighter, routes brightest."""
    levels = np.zeros(fld.meta.shape, dtype=np.int64)
    levels[fld.importance > 0] = 80
    for route in routes:
        for r, c in covered_cells(route, fld, knn_rule):
            levels[r, c] = max(levels[r, c], 160)
    for route in routes:
        cells = _as_cells(route)
        levels[cells[:, 0], cells[:, 1]] = 255
    write_pgm(levels, path)
    return str(Path(path))
