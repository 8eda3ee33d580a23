"""Flat 2D torii and generator sets living on them."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import minimal_image as _minimal_image
from ._kernels import reduce_points as _reduce_points


class TorusKind(str, enum.Enum):
    SQUARE = "square"
    HEXAGONAL = "hexagonal"



@dataclass(frozen=True, eq=False)
class TorusDomain:
    """A flat torus R^2 / (Z u + Z v).

    The fundamental domain is the parallelogram spanned by ``lattice_u`` and
    ``lattice_v``. For the hexagonal torus the two vectors have equal length at
    60 degrees; the quotient is the same as the regular-hexagon torus.
    """

    lattice_u: np.ndarray
    lattice_v: np.ndarray
    kind: TorusKind
    _basis: np.ndarray = field(init=False, repr=False)
    _inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        u = np.asarray(self.lattice_u, dtype=float).reshape(2)
        v = np.asarray(self.lattice_v, dtype=float).reshape(2)
        basis = np.array([u, v])
        det = float(np.linalg.det(basis))
        if not abs(det) > 0.0:
            raise ValueError("lattice vectors must be linearly independent")
        kind = TorusKind(self.kind)
        lu, lv = np.hypot(*u), np.hypot(*v)
        cosang = float(u @ v) / (lu * lv)
        if not math.isclose(lu, lv, rel_tol=1e-12):
            raise ValueError(f"{kind.value} torus needs equal-length lattice vectors")
        want = 0.0 if kind is TorusKind.SQUARE else 0.5
        if abs(cosang - want) > 1e-12:
            raise ValueError(f"lattice vectors do not span a {kind.value} torus")
        basis.setflags(write=False)
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "lattice_u", u)
        object.__setattr__(self, "lattice_v", v)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "_basis", basis)
        inv = np.linalg.inv(basis)
        inv.setflags(write=False)
        object.__setattr__(self, "_inverse", inv)

    @classmethod
    def square(cls, side: float = 1.0) -> "TorusDomain":
        return cls(np.array([side, 0.0]), np.array([0.0, side]), TorusKind.SQUARE)

    @classmethod
    def hexagonal(cls, area: float = 1.0) -> "TorusDomain":
        side = math.sqrt(2.0 * area / math.sqrt(3.0))
        return cls(
            np.array([side, 0.0]),
            np.array([0.5 * side, 0.5 * math.sqrt(3.0) * side]),
            TorusKind.HEXAGONAL,
        )

    @classmethod
    def from_kind(cls, kind: str | TorusKind, area: float = 1.0) -> "TorusDomain":
        kind = TorusKind(kind)
        if kind is TorusKind.SQUARE:
            return cls.square(math.sqrt(area))
        return cls.hexagonal(area)

    def __eq__(self, other):
        if not isinstance(other, TorusDomain):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self._basis, other._basis)

    def __hash__(self):
        return hash((self.kind, self._basis.tobytes()))

    @property
    def basis(self) -> np.ndarray:
        """2x2 array whose rows are the lattice vectors."""
        return self._basis

    @property
    def area(self) -> float:
        return abs(float(np.linalg.det(self._basis)))

    def scaled(self, factor: float) -> "TorusDomain":
        return TorusDomain(self.lattice_u * factor, self.lattice_v * factor, self.kind)

    def to_lattice(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self._inverse

    def from_lattice(self, coords) -> np.ndarray:
        return np.asarray(coords, dtype=float) @ self._basis

    def reduce(self, points) -> np.ndarray:
        """Map points into the half-open fundamental parallelogram."""
        pts = np.asarray(points, dtype=float)
        flat = np.ascontiguousarray(pts.reshape(-1, 2))
        # lattice coordinate 1 - tiny can round up to 1.0; the kernel maps it to 0
        return _reduce_points(flat, self._basis, self._inverse).reshape(pts.shape)

    def minimal_image(self, vectors) -> np.ndarray:
        """Shortest representative of each displacement modulo the lattice."""
        vec = np.asarray(vectors, dtype=float)
        flat = np.ascontiguousarray(vec.reshape(-1, 2))
        return _minimal_image(flat, self._basis, self._inverse).reshape(vec.shape)

    def distance(self, a, b) -> np.ndarray | float:
        d = self.minimal_image(np.asarray(b, dtype=float) - np.asarray(a, dtype=float))
        out = np.hypot(d[..., 0], d[..., 1])
        return float(out) if out.ndim == 0 else out

    def spacing(self, n: int) -> float:
        """Linear length scale sqrt(|Omega| / N)."""
        return math.sqrt(self.area / n)

    def random_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform, uncorrelated sample of ``n`` points in the fundamental domain."""
        return self.from_lattice(rng.random((n, 2)))


def torus_distance(domain: TorusDomain, a, b) -> float:
    """Torus distance: the shortest Euclidean distance among the nearest images."""
    return domain.distance(a, b)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """N generator positions reduced into the fundamental domain."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or len(pos) < 1:
            raise ValueError("positions must be a non-empty (N, 2) array")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @classmethod
    def on(cls, domain: TorusDomain, points) -> "GeneratorSet":
        return cls(domain.reduce(points))

    def __len__(self) -> int:
        return len(self.positions)

    def __eq__(self, other):
        if not isinstance(other, GeneratorSet):
            return NotImplemented
        return np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())


def admissible_hex_pairs(n: int) -> list[tuple[int, int]]:
    """All (a, b) with a >= b >= 0 and a^2 + ab + b^2 == n."""
    pairs = []
    a = 0
    while a * a <= n:
        for b in range(a + 1):
            if a * a + a * b + b * b == n:
                pairs.append((a, b))
        a += 1
    return pairs


def honeycomb(domain: TorusDomain, a: int, b: int = 0) -> GeneratorSet:
    """Triangular-lattice generators whose Voronoi cells are regular hexagons.

    Produces N = a^2 + ab + b^2 sites on the hexagonal torus: the torus lattice
    vector ``u`` is the lattice combination ``a e1 + b e2`` of the generator
    lattice (e1, e2 at 60 degrees).
    """
    if domain.kind is not TorusKind.HEXAGONAL:
        raise ValueError("a perfect honeycomb only exists on the hexagonal torus")
    n = a * a + a * b + b * b
    if n < 1:
        raise ValueError("need a^2 + ab + b^2 >= 1")
    # u = a e1 + b e2 and v = -b e1 + (a + b) e2; inverting that integer matrix
    # gives e1, e2 in (u, v) coordinates with common denominator n
    e1 = np.array([a + b, -b], dtype=np.int64)
    e2 = np.array([b, a], dtype=np.int64)
    idx = np.arange(n, dtype=np.int64)
    cand = (idx[:, None, None] * e1 + idx[None, :, None] * e2).reshape(-1, 2)
    residues = np.unique(np.mod(cand, n), axis=0)
    if len(residues) != n:  # pragma: no cover - arithmetic identity
        raise RuntimeError("honeycomb enumeration failed")
    return GeneratorSet(domain.from_lattice(residues / n))
