"""Finitely supported probability measures on R^d.

Measures are stored in a canonical form: support rows sorted
lexicographically, near-duplicate atoms merged, negligible weights pruned,
weights summing to 1. Construction goes through `validate_measure`, which is
idempotent, so a canonical measure passed in again comes back bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    EmptyMeasure,
    InvalidWeight,
    MapRangeError,
    NotNormalized,
)

MERGE_TOL = 1e-12    # support points closer than this are one atom
PRUNE_TOL = 1e-15    # weights below this are dropped
SUM_FIX_TOL = 1e-9   # weight sums off by more than this are rejected
SUM_KEEP_TOL = 1e-12  # weight sums within this of 1 are left untouched


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure sum_i weights[i] * delta_{support[i]}.

    Immutable; build instances with `validate_measure`, `dirac`, or
    `DiscreteMeasure.from_json_dict`.
    """

    support: np.ndarray  # (n, d), lexicographically sorted rows
    weights: np.ndarray  # (n,), positive, sums to 1 within 1e-12

    @property
    def n_atoms(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    def translate(self, v) -> "DiscreteMeasure":
        """Rigid translation by the vector v (exact on coordinates)."""
        vec = np.asarray(v, dtype=float).reshape(-1)
        if vec.shape[0] != self.dim:
            raise DimensionError(f"translation vector dim {vec.shape[0]} vs {self.dim}")
        return validate_measure(self.support + vec, self.weights)

    def cache_key(self) -> bytes:
        return self.support.tobytes() + b"|" + self.weights.tobytes()

    def to_json_dict(self) -> dict:
        return {
            "dim": int(self.dim),
            "support": [[float(c) for c in row] for row in self.support],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DiscreteMeasure":
        support = np.asarray(obj["support"], dtype=float)
        if support.ndim == 1:
            support = support.reshape(-1, 1)
        if "dim" in obj and support.shape[1] != int(obj["dim"]):
            raise DimensionError(
                f"declared dim {obj['dim']} does not match support dim {support.shape[1]}"
            )
        return validate_measure(support, np.asarray(obj["weights"], dtype=float))

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={self.n_atoms}, dim={self.dim})"


def _canonical_support(support) -> np.ndarray:
    pts = np.asarray(support, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DimensionError(f"support must be an (n, d) array, got shape {pts.shape}")
    return pts


def validate_measure(support, weights) -> DiscreteMeasure:
    """Normalize, merge, and prune raw support/weights into a valid measure.

    Weight sums within SUM_FIX_TOL of 1 are renormalized; anything farther is
    rejected. Atoms within MERGE_TOL of each other are merged (weights summed,
    lexicographically first point kept) and weights below PRUNE_TOL dropped.
    """
    pts = _canonical_support(support)
    if pts.shape[0] == 0:
        raise EmptyMeasure("measure needs at least one atom")
    if not np.all(np.isfinite(pts)):
        raise DomainError("support has non-finite coordinates")
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape[0] != pts.shape[0]:
        raise InvalidWeight(f"{pts.shape[0]} atoms but {w.shape[0]} weights")
    if not np.all(np.isfinite(w)):
        raise InvalidWeight("weights must be finite")
    if np.any(w < 0.0):
        raise InvalidWeight(f"negative weight {float(w.min())}")
    total = float(w.sum())
    # the 1e-15 grace keeps decimal inputs sitting exactly on the boundary
    # (e.g. a sum printed as 0.999999999) on the repairable side
    if abs(total - 1.0) > SUM_FIX_TOL + 1e-15:
        raise NotNormalized(f"weight sum {total} differs from 1 by more than {SUM_FIX_TOL}")
    if abs(total - 1.0) > SUM_KEEP_TOL:
        w = w / total

    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    w = w[order]

    rep_rows: list[np.ndarray] = []
    rep_weights: list[float] = []
    for row, wt in zip(pts, w):
        if rep_rows and np.max(np.abs(row - rep_rows[-1])) <= MERGE_TOL:
            rep_weights[-1] += wt
        else:
            rep_rows.append(row)
            rep_weights.append(wt)
    pts = np.array(rep_rows)
    w = np.array(rep_weights)

    keep = w >= PRUNE_TOL
    pts, w = pts[keep], w[keep]
    if pts.shape[0] == 0:
        raise EmptyMeasure("all atoms pruned; measure has no mass")
    total = float(w.sum())
    if abs(total - 1.0) > SUM_KEEP_TOL:
        w = w / total

    pts = np.ascontiguousarray(pts)
    w = np.ascontiguousarray(w)
    pts.setflags(write=False)
    w.setflags(write=False)
    return DiscreteMeasure(pts, w)


def dirac(x) -> DiscreteMeasure:
    """Unit mass at a single point."""
    pts = np.asarray(x, dtype=float).reshape(1, -1)
    return validate_measure(pts, np.ones(1))


def p_moment(m: DiscreteMeasure, p: float, x0) -> float:
    """sum_i w_i |x_i - x0|^p; finite for every discrete measure."""
    if p < 1.0:
        raise DomainError(f"moment order p={p} must be at least 1")
    ref = np.asarray(x0, dtype=float).reshape(-1)
    if ref.shape[0] != m.dim:
        raise DimensionError(f"reference point dim {ref.shape[0]} vs measure dim {m.dim}")
    dists = np.linalg.norm(m.support - ref, axis=1)
    return float(np.dot(m.weights, dists**p))


def push_forward(m: DiscreteMeasure, f: Callable[[np.ndarray], np.ndarray]) -> DiscreteMeasure:
    """Image measure under a point map; atoms mapped, weights carried over."""
    rows = []
    for x in m.support:
        y = np.asarray(f(x), dtype=float).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise MapRangeError(f"map produced non-finite image for atom {x}")
        rows.append(y)
    dims = {r.shape[0] for r in rows}
    if len(dims) != 1:
        raise MapRangeError(f"map produced inconsistent image dimensions {sorted(dims)}")
    return validate_measure(np.array(rows), m.weights)


def translate(m: DiscreteMeasure, v) -> DiscreteMeasure:
    """Rigid translation; see DiscreteMeasure.translate."""
    return m.translate(v)


def random_measure(rng: np.random.Generator, max_atoms: int, dim: int,
                   box: float = 10.0, min_atoms: int = 1) -> DiscreteMeasure:
    """Seeded test-instance generator: uniform atoms in a box, random weights."""
    n = int(rng.integers(min_atoms, max_atoms + 1))
    pts = rng.uniform(-box, box, size=(n, dim))
    w = rng.random(n) + 0.05
    return validate_measure(pts, w / w.sum())


@dataclass(frozen=True)
class MeasureSetSequence:
    """Indexed family of finite measure sets H_n with scalar shifts c_n.

    `generator(n)` returns the finite list H_n and `shifts(n)` the shift c_n.
    Generation is lazy so limit probes can reach arbitrarily large n.
    """

    generator: Callable[[int], Sequence[DiscreteMeasure]]
    shifts: Callable[[int], float]
