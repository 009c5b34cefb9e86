"""Plot data for region boundaries: interval endpoints in 1D, marching-squares contours in 2D."""

import csv

import numpy as np
from skimage import measure


def interval_parts(gridset):
    """``[(left,), (right,)]`` per maximal run of the mask on a 1D grid."""
    mask = gridset.mask.astype(np.int8)
    x = gridset.grid.axes[0]
    edges = np.diff(np.concatenate([[0], mask, [0]]))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1) - 1
    return [[(float(x[a]),), (float(x[b]),)] for a, b in zip(starts, stops)]


def contour_parts(gridset):
    """Closed contours at level 1/2 of the mask on a 2D grid, in domain coordinates."""
    grid = gridset.grid
    # padding closes contours that run into the domain edge
    padded = np.pad(gridset.as_array().astype(float), 1)
    parts = []
    for contour in measure.find_contours(padded, 0.5):
        index = contour - 1
        coords = []
        for axis, ((lo, hi), h) in enumerate(zip(grid.extents, grid.spacing)):
            coords.append(np.clip(lo + index[:, axis] * h, lo, hi))
        parts.append([tuple(float(c) for c in point) for point in zip(*coords)])
    return parts


def boundary_parts(gridset):
    if gridset.grid.dimension == 1:
        return interval_parts(gridset)
    return contour_parts(gridset)


def write_boundary_csv(path, region, gridset):
    axes = ['x', 'y'][:gridset.grid.dimension]
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(['region', 'part'] + axes)
        for part, points in enumerate(boundary_parts(gridset)):
            for point in points:
                writer.writerow([region, part] + [repr(c) for c in point])
    return path
