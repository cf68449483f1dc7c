"""Finite metric spaces and set-level geometry.

A space is a tuple of point labels together with a dense distance matrix.
Validation enforces the metric axioms (symmetry, zero exactly on the
diagonal, positivity off the diagonal, triangle inequality) and reports
the first violation with witness indices.  On top of that the module
offers subset diameters, directed distances and Hausdorff distances, a
small family of generators for totally disconnected spaces, max-metric
products, and a JSON file format.

Distances produced by the ``harmonic`` and ``cantor`` generators are
computed with exact rational arithmetic and rounded to float64 once, so
identities such as ``d(1/2, 1/3) == 1/6`` survive the conversion.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DendritesError

#: Relative tolerance used by the metric-axiom checks.
REL_TOL = 1e-9


class MetricError(DendritesError):
    """A distance matrix failed one of the metric axioms."""


class Asymmetry(MetricError):
    def __init__(self, i: int, j: int):
        super().__init__(f"matrix is not symmetric at ({i}, {j})")
        self.indices = (i, j)


class NonzeroDiagonal(MetricError):
    def __init__(self, i: int):
        super().__init__(f"nonzero diagonal entry at index {i}")
        self.indices = (i,)


class ZeroOffDiagonal(MetricError):
    def __init__(self, i: int, j: int):
        super().__init__(f"distinct points {i} and {j} are at distance zero")
        self.indices = (i, j)


class TriangleViolation(MetricError):
    def __init__(self, i: int, j: int, k: int):
        super().__init__(f"d({i},{j}) > d({i},{k}) + d({k},{j})")
        self.indices = (i, j, k)


class BadParams(DendritesError):
    """Malformed input: shapes, labels, generator parameters, file contents."""


class EmptySubset(DendritesError):
    """Subset operations require at least one member."""


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A validated finite metric space.

    ``matrix`` is a read-only float64 array; ``labels[i]`` names point ``i``.
    Instances are created through :func:`validate_metric` (directly or via a
    generator), which is the single gate enforcing the metric axioms.
    """

    labels: tuple[str, ...]
    matrix: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    def label_index(self, label: str) -> int:
        index = getattr(self, "_label_cache", None)
        if index is None:
            index = {lab: i for i, lab in enumerate(self.labels)}
            object.__setattr__(self, "_label_cache", index)
        if label not in index:
            raise BadParams(f"unknown point label {label!r}")
        return index[label]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MetricSpace):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.matrix, other.matrix)

    def __repr__(self) -> str:
        return f"MetricSpace({self.size} points)"


@dataclass(frozen=True)
class SubsetGeometry:
    """Diameter and directed/Hausdorff distances for an ordered subset pair."""

    diam_a: float
    dist_ab: float
    dist_ba: float
    hausdorff: float


def _first_triangle_violation(m: np.ndarray) -> tuple[int, int, int] | None:
    """Return the lexicographically first (i, j, k) with d(i,j) > d(i,k) + d(k,j)."""
    n = m.shape[0]
    for i in range(n):
        # sums[k, j] = d(i, k) + d(k, j)
        sums = m[i, :][:, None] + m
        slack = m[i, :][None, :] - sums
        tol = REL_TOL * np.maximum(np.abs(m[i, :])[None, :], np.abs(sums))
        viol = slack > tol
        if viol.any():
            # first by j, then by k
            j_idx, k_idx = np.nonzero(viol.T)
            return (i, int(j_idx[0]), int(k_idx[0]))
    return None


def validate_metric(labels: Sequence[str], matrix) -> MetricSpace:
    """Check the metric axioms and return a :class:`MetricSpace`.

    Raises :class:`Asymmetry`, :class:`NonzeroDiagonal`,
    :class:`ZeroOffDiagonal` or :class:`TriangleViolation` for the first
    violated axiom (checked in that order), or :class:`BadParams` for
    malformed input.  Stored distances are kept exactly as supplied.
    """
    labels = tuple(str(lab) for lab in labels)
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise BadParams(f"matrix must be square, got shape {m.shape}")
    n = m.shape[0]
    if n != len(labels):
        raise BadParams(f"{len(labels)} labels for a {n}x{n} matrix")
    if len(set(labels)) != len(labels):
        raise BadParams("labels must be unique")
    if not np.isfinite(m).all():
        raise BadParams("matrix entries must be finite")
    if (m < 0).any():
        raise BadParams("matrix entries must be nonnegative")

    asym = np.abs(m - m.T) > REL_TOL * np.maximum(np.abs(m), np.abs(m.T))
    if asym.any():
        i, j = map(int, np.argwhere(asym)[0])
        raise Asymmetry(min(i, j), max(i, j))
    diag = np.diagonal(m)
    if (diag != 0).any():
        raise NonzeroDiagonal(int(np.nonzero(diag != 0)[0][0]))
    zero_off = (m == 0) & ~np.eye(n, dtype=bool)
    if zero_off.any():
        i, j = map(int, np.argwhere(zero_off)[0])
        raise ZeroOffDiagonal(i, j)
    witness = _first_triangle_violation(m)
    if witness is not None:
        raise TriangleViolation(*witness)

    m = m.copy()
    m.flags.writeable = False
    return MetricSpace(labels, m)


def _as_indices(space: MetricSpace, members: Iterable[int]) -> np.ndarray:
    idx = sorted(set(int(i) for i in members))
    if not idx:
        raise EmptySubset("subset must contain at least one point")
    if idx[0] < 0 or idx[-1] >= space.size:
        raise BadParams(f"subset index out of range for {space.size} points")
    return np.array(idx, dtype=np.intp)


def diameter(space: MetricSpace, a: Iterable[int]) -> float:
    ia = _as_indices(space, a)
    return float(space.matrix[np.ix_(ia, ia)].max())


def directed_distance(space: MetricSpace, a: Iterable[int], b: Iterable[int]) -> float:
    """sup over a of inf over b of d(a, b)."""
    ia, ib = _as_indices(space, a), _as_indices(space, b)
    return float(space.matrix[np.ix_(ia, ib)].min(axis=1).max())


def hausdorff_distance(space: MetricSpace, a: Iterable[int], b: Iterable[int]) -> float:
    ia, ib = _as_indices(space, a), _as_indices(space, b)
    sub = space.matrix[np.ix_(ia, ib)]
    return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


def subset_geometry(space: MetricSpace, a: Iterable[int], b: Iterable[int]) -> SubsetGeometry:
    """Diameter of ``a`` plus directed and Hausdorff distances to ``b``."""
    ia, ib = _as_indices(space, a), _as_indices(space, b)
    sub = space.matrix[np.ix_(ia, ib)]
    dist_ab = float(sub.min(axis=1).max())
    dist_ba = float(sub.min(axis=0).max())
    return SubsetGeometry(
        diam_a=float(space.matrix[np.ix_(ia, ia)].max()),
        dist_ab=dist_ab,
        dist_ba=dist_ba,
        hausdorff=max(dist_ab, dist_ba),
    )


def _space_from_fractions(labels: Sequence[str], points: Sequence[Fraction]) -> MetricSpace:
    n = len(points)
    m = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = float(abs(points[i] - points[j]))
    return validate_metric(labels, m)


def harmonic_space(k: int) -> MetricSpace:
    """The k+1 points 1, 1/2, ..., 1/k, 0 on the line."""
    if k < 1:
        raise BadParams("harmonic space needs k >= 1")
    points = [Fraction(1, i) for i in range(1, k + 1)] + [Fraction(0)]
    labels = ["1"] + [f"1/{i}" for i in range(2, k + 1)] + ["0"]
    return _space_from_fractions(labels, points)


def cantor_space(depth: int) -> MetricSpace:
    """The 2**depth left endpoints of the depth-th Cantor set stage.

    Points are sums of b_i * 2/3**i for bit choices b; labels spell the
    ternary expansion (digits 0 and 2).
    """
    if depth < 0:
        raise BadParams("cantor space needs depth >= 0")
    points: list[Fraction] = []
    labels: list[str] = []
    for bits in itertools.product((0, 1), repeat=depth):
        points.append(sum((Fraction(2 * b, 3**i) for i, b in enumerate(bits, start=1)), Fraction(0)))
        labels.append("0." + "".join(str(2 * b) for b in bits) if depth else "0")
    return _space_from_fractions(labels, points)


def fiber_c_space(n_max: int, params=None) -> MetricSpace:
    """Both halves of the planar fiber comb through column ``n_max``.

    Points are the comb points P(0..T) and their x-axis mirror images
    Q(0..T), where T is the top index of column ``n_max``, under the
    max-coordinate metric.  Labels are ``p{t}`` and ``q{t}``.
    """
    from . import odometer

    if n_max < 1:
        raise BadParams("fiber_c space needs n_max >= 1")
    if params is None:
        params = odometer.SequenceParams.default()
    top = odometer.top_time(n_max)
    xs: list[float] = []
    ys: list[float] = []
    labels: list[str] = []
    for t in range(top + 1):
        info = odometer.fiber_point(t, params)
        xs.append(info.coords[0])
        ys.append(info.coords[1])
        labels.append(f"p{t}")
    for t in range(top + 1):
        labels.append(f"q{t}")
    x = np.array(xs + xs)
    y = np.array(ys + [-v for v in ys])
    m = np.maximum(np.abs(x[:, None] - x[None, :]), np.abs(y[:, None] - y[None, :]))
    return validate_metric(labels, m)


def product_space(spaces: Sequence[MetricSpace]) -> MetricSpace:
    """Cartesian product under the max-combined metric.

    Labels of component points are joined with ``|``; the first factor
    varies slowest.
    """
    if not spaces:
        raise BadParams("product needs at least one factor")
    labels = ["|".join(parts) for parts in itertools.product(*(s.labels for s in spaces))]
    m = np.zeros((1, 1))
    for s in spaces:
        k = s.size
        m = np.maximum(np.repeat(np.repeat(m, k, axis=0), k, axis=1),
                       np.tile(s.matrix, m.shape))
    return validate_metric(labels, m)


def generate_space(kind: str, **params) -> MetricSpace:
    """Dispatch to a named generator.

    Kinds: ``harmonic(k)``, ``cantor(depth)``, ``fiber_c(n_max)``,
    ``product(spaces)``, ``from_file(path)``.
    """
    if kind == "harmonic":
        return harmonic_space(**params)
    if kind == "cantor":
        return cantor_space(**params)
    if kind == "fiber_c":
        return fiber_c_space(**params)
    if kind == "product":
        return product_space(**params)
    if kind == "from_file":
        return space_from_file(**params)
    raise BadParams(f"unknown space kind {kind!r}")


def _coords_matrix(coords: np.ndarray, metric: str) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    if metric == "euclidean":
        return np.sqrt((diff * diff).sum(axis=-1))
    if metric == "max":
        return np.abs(diff).max(axis=-1)
    raise BadParams(f"unknown coordinate metric {metric!r}")


def space_from_json(data: Mapping) -> MetricSpace:
    """Build a space from parsed JSON (see :func:`space_to_json`)."""
    if not isinstance(data, Mapping) or "labels" not in data:
        raise BadParams("space file must be an object with a 'labels' array")
    labels = data["labels"]
    has_matrix = "matrix" in data
    has_coords = "coords" in data
    if has_matrix == has_coords:
        raise BadParams("space file needs exactly one of 'matrix' or 'coords'")
    if has_matrix:
        return validate_metric(labels, data["matrix"])
    coords = np.asarray(data["coords"], dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    metric = data.get("metric")
    if metric is None:
        raise BadParams("coordinate space files need a 'metric' field")
    return validate_metric(labels, _coords_matrix(coords, metric))


def space_from_file(path) -> MetricSpace:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise BadParams(f"{path}: not valid JSON ({exc})") from exc
    return space_from_json(data)


def space_to_json(space: MetricSpace) -> dict:
    return {"labels": list(space.labels), "matrix": space.matrix.tolist()}
