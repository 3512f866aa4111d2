"""
Marching squares for the zero level set of a masked Field2D.

Only cells whose four corners are all present in the mask are traced, so cells touching a
masked singular node or the outside of the disk contribute nothing. Crossings are placed by
linear interpolation along cell edges and shared edges produce the same point, which lets
the segments be stitched into polylines.
"""

from collections import defaultdict
from typing import Dict, List, Tuple

import numpy as np

from .fields import Field2D

Node = Tuple[int, int]
EdgeKey = Tuple[Node, Node]
Polyline = List[List[float]]


def _edge_key(a: Node, b: Node) -> EdgeKey:
    return (a, b) if a <= b else (b, a)


def _crossing(field: Field2D, key: EdgeKey) -> List[float]:
    (i0, j0), (i1, j1) = key
    v0, v1 = field.values[i0, j0], field.values[i1, j1]
    t = v0 / (v0 - v1)
    s = field.s_grid[i0] + t * (field.s_grid[i1] - field.s_grid[i0])
    r = field.r_grid[j0] + t * (field.r_grid[j1] - field.r_grid[j0])
    return [float(s), float(r)]


def zero_segments(field: Field2D) -> List[Tuple[EdgeKey, EdgeKey]]:
    """Segments of the zero set, each given by the two cell edges it joins."""
    positive = field.values > 0
    segments = []
    n_s, n_r = field.shape
    for i in range(n_s - 1):
        for j in range(n_r - 1):
            corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            if not all(field.mask[c] for c in corners):
                continue
            signs = [positive[c] for c in corners]
            edges = [_edge_key(corners[k], corners[(k + 1) % 4]) for k in range(4)]
            crossed = [k for k in range(4) if signs[k] != signs[(k + 1) % 4]]
            if len(crossed) == 2:
                segments.append((edges[crossed[0]], edges[crossed[1]]))
            elif len(crossed) == 4:
                # saddle cell: the center value decides which diagonal is connected
                center_positive = np.mean([field.values[c] for c in corners]) > 0
                if center_positive == signs[0]:
                    segments.append((edges[0], edges[1]))
                    segments.append((edges[2], edges[3]))
                else:
                    segments.append((edges[3], edges[0]))
                    segments.append((edges[1], edges[2]))
    return segments


def zero_contours(field: Field2D) -> List[Polyline]:
    """Stitch the zero-set segments into polylines of [s, r] pairs."""
    neighbours: Dict[EdgeKey, List[EdgeKey]] = defaultdict(list)
    for a, b in zero_segments(field):
        neighbours[a].append(b)
        neighbours[b].append(a)

    visited = set()
    polylines = []

    def walk(start: EdgeKey) -> List[EdgeKey]:
        chain = [start]
        visited.add(start)
        current = start
        while True:
            nxt = [n for n in neighbours[current] if n not in visited]
            if not nxt:
                break
            current = nxt[0]
            visited.add(current)
            chain.append(current)
        return chain

    # open chains first (they end on the mask boundary), then closed loops
    ends = sorted(key for key, adj in neighbours.items() if len(adj) == 1)
    for key in ends + sorted(neighbours):
        if key in visited:
            continue
        chain = walk(key)
        if len(chain) > 1:
            polylines.append([_crossing(field, k) for k in chain])
    return polylines
