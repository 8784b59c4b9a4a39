"""Independent brute-force oracles used by the test suite.

These deliberately avoid the library's search machinery: feasibility comes
from exhaustive enumeration over canonical (normal-pattern) positions, and
geometry checks are re-derived from scratch.
"""

import itertools

import numpy as np


def unique_orientations(dims):
    return sorted(set(itertools.permutations(dims)))


def exhaustive_pack_feasible(bay, dims_list):
    """Exact feasibility of packing axis-aligned boxes into a bay.

    For every orientation assignment, boxes are placed depth-first with
    coordinates drawn from the normal-pattern sets (sums of subsets of the
    other boxes' dims per axis). Any feasible packing can be shifted onto
    those coordinates, so the search is complete.
    """
    n = len(dims_list)
    if n == 0:
        return True
    total = sum(l * w * h for l, w, h in dims_list)
    if total > bay[0] * bay[1] * bay[2] + 1e-9:
        return False
    tables = [unique_orientations(d) for d in dims_list]
    if any(not any(all(s <= b + 1e-9 for s, b in zip(o, bay)) for o in t) for t in tables):
        return False

    for combo in itertools.product(*tables):
        candidates = []
        feasible_combo = True
        for i in range(n):
            per_axis = []
            for axis in range(3):
                sums = {0.0}
                others = [combo[j][axis] for j in range(n) if j != i]
                for size in range(1, len(others) + 1):
                    for subset in itertools.combinations(others, size):
                        sums.add(sum(subset))
                limit = bay[axis] - combo[i][axis] + 1e-9
                per_axis.append(sorted(s for s in sums if s <= limit))
            if any(not axis_c for axis_c in per_axis):
                feasible_combo = False
                break
            candidates.append([p for p in itertools.product(*per_axis)])
        if not feasible_combo:
            continue

        placed = []

        def overlaps(pos, size):
            for (qpos, qsize) in placed:
                if all(pos[a] < qpos[a] + qsize[a] - 1e-9 and qpos[a] < pos[a] + size[a] - 1e-9
                       for a in range(3)):
                    return True
            return False

        def dfs(i):
            if i == n:
                return True
            for pos in candidates[i]:
                if not overlaps(pos, combo[i]):
                    placed.append((pos, combo[i]))
                    if dfs(i + 1):
                        return True
                    placed.pop()
            return False

        if dfs(0):
            return True
    return False


def brute_force_weighted_kmeans(points_xy, weights, k):
    """Optimal weighted k-means partition by enumerating all assignments.

    Returns (best_labels, best_wcss). Only sensible for tiny inputs.
    """
    n = len(points_xy)
    xy = np.asarray(points_xy, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    best = (None, np.inf)
    for labels in itertools.product(range(k), repeat=n):
        labels = np.array(labels)
        if labels[0] != 0:
            continue  # fix the first point's cluster to kill label symmetry
        wcss = 0.0
        ok = True
        for c in range(k):
            member = labels == c
            if not member.any():
                ok = False
                break
            total = w[member].sum()
            center = (xy[member] * w[member, None]).sum(axis=0) / total
            wcss += float((((xy[member] - center) ** 2).sum(axis=1) * w[member]).sum())
        if ok and wcss < best[1]:
            best = (labels.copy(), wcss)
    return best


def segment_cells_within(meta_shape, cell_size, p0, p1, buffer_m):
    """Cells whose center is within buffer_m of segment p0-p1, local meters.

    Independent scalar re-derivation of the rasterization rule: checks every
    cell of the grid, no windowing.
    """
    import math

    n_rows, n_cols = meta_shape
    (ax, ay), (bx, by) = p0, p1
    hits = set()
    for rb in range(n_rows):
        for c in range(n_cols):
            px, py = c * cell_size, rb * cell_size
            abx, aby = bx - ax, by - ay
            denom = abx * abx + aby * aby
            if denom == 0:
                d = math.hypot(px - ax, py - ay)
            else:
                t = max(0.0, min(1.0, ((px - ax) * abx + (py - ay) * aby) / denom))
                d = math.hypot(px - (ax + t * abx), py - (ay + t * aby))
            if d <= buffer_m:
                hits.add((n_rows - 1 - rb, c))
    return hits
