"""Integer lattices: construction, normal forms, containment, quotients.

Conventions used package-wide:
  * generator columns are basis vectors (a point is G @ b, b integer),
  * the cached triangular form is the lower-triangular Hermite normal form
    with positive diagonal and off-diagonals reduced into [0, diag),
  * all lattice algebra is exact (Python ints / Fractions); floats appear
    only as a verified shortcut inside is_sublattice.

Lattice objects are immutable and safe to share across threads.
"""

from __future__ import annotations

import math
import re

import numpy as np

from . import golay
from .intmat import (
    IntMatrix,
    hnf_from_spanning,
    hnf_lower_triangular,
    integer_solve_lower_triangular,
    _is_reduced_lower_triangular,
)


class Lattice:
    """Full-rank integer lattice with a cached triangular generator."""

    __slots__ = (
        "dim",
        "generator",
        "triangular_generator",
        "volume",
        "structure",
        "cov_sq",
        "name",
        "_float_gen",
        "_float_tri",
    )

    def __init__(self, generator: IntMatrix, *, structure=None, cov_sq=None, name=None,
                 _triangular: IntMatrix | None = None):
        if not isinstance(generator, IntMatrix):
            generator = IntMatrix(generator)
        if not generator.is_square:
            raise ValueError("generator must be square")
        if _triangular is not None and not _is_reduced_lower_triangular(_triangular):
            raise ValueError("bad precomputed triangular form")
        tri = _triangular if _triangular is not None else hnf_lower_triangular(generator)
        vol = 1
        for i in range(tri.rows):
            vol *= tri[i, i]
        if vol == 0:
            raise ValueError("degenerate lattice")
        object.__setattr__(self, "dim", generator.rows)
        object.__setattr__(self, "generator", generator)
        object.__setattr__(self, "triangular_generator", tri)
        object.__setattr__(self, "volume", vol)
        object.__setattr__(self, "structure", structure)
        object.__setattr__(self, "cov_sq", cov_sq)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_float_gen", None)
        object.__setattr__(self, "_float_tri", None)

    def __setattr__(self, attr, value):
        raise AttributeError("Lattice is immutable")

    def float_generator(self) -> np.ndarray:
        if self._float_gen is None:
            object.__setattr__(self, "_float_gen", self.generator.to_float())
        return self._float_gen

    def float_triangular(self) -> np.ndarray:
        if self._float_tri is None:
            object.__setattr__(self, "_float_tri", self.triangular_generator.to_float())
        return self._float_tri

    def diag(self) -> tuple:
        t = self.triangular_generator
        return tuple(t[i, i] for i in range(self.dim))

    def scaled(self, k: int) -> "Lattice":
        """The lattice k * self (every point multiplied by the integer k)."""
        k = int(k)
        if k <= 0:
            raise ValueError("scale must be positive")
        if k == 1:
            return self
        return Lattice(
            self.generator.scale(k),
            structure=None if self.structure is None else ("scaled", k, self),
            cov_sq=None if self.cov_sq is None else k * k * self.cov_sq,
            name=None if self.name is None else f"{k}*{self.name}",
            _triangular=self.triangular_generator.scale(k),
        )

    def contains_point(self, x) -> bool:
        """Exact membership test for an integer vector."""
        rhs = IntMatrix([[int(v)] for v in x])
        return integer_solve_lower_triangular(self.triangular_generator, rhs) is not None

    def __repr__(self):
        label = self.name or f"{self.dim}-dim"
        return f"Lattice({label}, volume={self.volume})"


class DiagonalScale:
    """Diagonal integer matrix K with positive entries (kept as a tuple)."""

    __slots__ = ("dim", "entries")

    def __init__(self, entries):
        e = tuple(int(x) for x in entries)
        if not e or any(x <= 0 for x in e):
            raise ValueError("diagonal entries must be positive")
        object.__setattr__(self, "dim", len(e))
        object.__setattr__(self, "entries", e)

    def __setattr__(self, attr, value):
        raise AttributeError("DiagonalScale is immutable")

    @classmethod
    def uniform(cls, dim: int, k: int) -> "DiagonalScale":
        return cls((k,) * dim)

    def to_lattice(self) -> Lattice:
        m = IntMatrix.diagonal(self.entries)
        return Lattice(m, _triangular=m)

    def __eq__(self, other):
        return isinstance(other, DiagonalScale) and self.entries == other.entries

    def __repr__(self):
        return f"DiagonalScale({list(self.entries)})"


# ---------------------------------------------------------------------------
# standard lattices


def _zn(n: int) -> Lattice:
    m = IntMatrix.identity(n)
    return Lattice(m, structure=("Zn",), cov_sq=n / 4.0, name=f"Zn({n})", _triangular=m)


def _dn(n: int) -> Lattice:
    if n < 2:
        raise ValueError("Dn needs n >= 2")
    cols = []
    for i in range(n - 1):
        c = [0] * n
        c[i], c[i + 1] = 1, -1
        cols.append(c)
    c = [0] * n
    c[n - 2] = c[n - 1] = 1
    cols.append(c)
    gen = IntMatrix(list(zip(*cols)))
    return Lattice(gen, structure=("Dn",), cov_sq=max(1.0, n / 4.0), name=f"Dn({n})")


def _e8_int() -> Lattice:
    # Twice the even-coordinate-system Gosset lattice: all coordinates share
    # one parity and the coordinate sum is divisible by 4. Basis rows below
    # are the doubled standard basis (the half-integer glue row becomes ones).
    rows = [
        [4, 0, 0, 0, 0, 0, 0, 0],
        [-2, 2, 0, 0, 0, 0, 0, 0],
        [0, -2, 2, 0, 0, 0, 0, 0],
        [0, 0, -2, 2, 0, 0, 0, 0],
        [0, 0, 0, -2, 2, 0, 0, 0],
        [0, 0, 0, 0, -2, 2, 0, 0],
        [0, 0, 0, 0, 0, -2, 2, 0],
        [1, 1, 1, 1, 1, 1, 1, 1],
    ]
    gen = IntMatrix(rows).transpose()  # basis vectors as columns
    lat = Lattice(gen, structure=("E8_int",), cov_sq=4.0, name="E8_int")
    if lat.volume != 256:
        raise AssertionError("E8_int construction failed self-check")
    return lat


def _leech_int() -> Lattice:
    """Leech lattice scaled so all coordinates are integers (volume 2^36).

    Spanned by 4*(D24 basis), twice the Golay generators, and one odd-class
    vector (-3, 1, ..., 1).
    """
    cols = []
    for i in range(23):
        c = [0] * 24
        c[i], c[i + 1] = 4, -4
        cols.append(c)
    c = [0] * 24
    c[22] = c[23] = 4
    cols.append(c)
    for row in golay.generator_matrix():
        cols.append([2 * int(b) for b in row])
    cols.append([-3] + [1] * 23)
    tri = hnf_from_spanning(cols)
    lat = Lattice(tri, structure=("Leech_int",), cov_sq=16.0, name="Leech_int",
                  _triangular=tri)
    if lat.volume != 2**36:
        raise AssertionError("Leech_int construction failed self-check")
    return lat


_ZOO_CACHE: dict[str, Lattice] = {}


def standard_lattice(name: str) -> Lattice:
    """Named lattice zoo: Zn(n), Dn(n), E8_int, Leech_int."""
    key = name.strip()
    if key in _ZOO_CACHE:
        return _ZOO_CACHE[key]
    m = re.fullmatch(r"(Zn|Dn)\((\d+)\)", key)
    if m:
        n = int(m.group(2))
        if n < 1:
            raise ValueError(f"bad dimension in {name!r}")
        lat = _zn(n) if m.group(1) == "Zn" else _dn(n)
    elif key == "E8_int":
        lat = _e8_int()
    elif key == "Leech_int":
        lat = _leech_int()
    else:
        raise ValueError(f"unknown lattice name {name!r}")
    _ZOO_CACHE[key] = lat
    return lat


def direct_sum(base: Lattice, copies: int, alpha: int = 1) -> Lattice:
    """Direct sum of `copies` blocks of alpha * base."""
    copies = int(copies)
    alpha = int(alpha)
    if copies < 1 or alpha < 1:
        raise ValueError("copies and alpha must be positive")
    block = base.scaled(alpha)
    if copies == 1:
        return block
    gen = IntMatrix.block_diagonal([block.generator] * copies)
    tri = IntMatrix.block_diagonal([block.triangular_generator] * copies)
    cov = None if block.cov_sq is None else copies * block.cov_sq
    name = None if base.name is None else f"{copies}x({alpha}*{base.name})"
    structure = None if block.structure is None else ("blocks", copies, block)
    return Lattice(gen, structure=structure, cov_sq=cov, name=name, _triangular=tri)


# ---------------------------------------------------------------------------
# containment and quotients


def _verify_int64_product(sup_t: IntMatrix, sub_t: IntMatrix) -> bool | None:
    """Float-solve + exact integer verification. None means 'cannot decide'."""
    try:
        a = sup_t.to_int64()
        b = sub_t.to_int64()
    except OverflowError:
        return None
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    try:
        x = np.linalg.solve(af, bf)
    except np.linalg.LinAlgError:
        return None
    xr = np.rint(x)
    if not np.all(np.abs(x - xr) < 0.25):
        # Far from integral: either not a sublattice or numerically unsafe.
        return False if np.all(np.abs(x - xr) > 1e-6) else None
    xi = xr.astype(np.int64)
    bound = np.abs(a).sum(axis=1).max() * np.abs(xi).max() if xi.size else 0
    if bound >= 2**62:
        return None
    return bool(np.array_equal(a @ xi, b))


def is_sublattice(sub: Lattice, sup: Lattice) -> bool:
    """Exact test that every point of `sub` lies in `sup`."""
    if sub.dim != sup.dim:
        raise ValueError("dimension mismatch")
    if sub.volume % sup.volume != 0:
        return False
    fast = _verify_int64_product(sup.triangular_generator, sub.triangular_generator)
    if fast is True:
        return True
    sol = integer_solve_lower_triangular(sup.triangular_generator, sub.triangular_generator)
    return sol is not None


def quotient_order(coding: Lattice, shaping: Lattice) -> int:
    """Number of shaping-lattice cosets inside the coding lattice (exact)."""
    if not is_sublattice(shaping, coding):
        raise ValueError("shaping lattice is not a sublattice of the coding lattice")
    if shaping.volume % coding.volume != 0:
        raise AssertionError("volume ratio not integral despite containment")
    return shaping.volume // coding.volume


# ---------------------------------------------------------------------------
# matrix text files: header "n n", then n rows of n integers, '#' comments,
# columns are basis vectors


def parse_matrix_text(text: str) -> IntMatrix:
    tokens: list[str] = []
    for line in text.splitlines():
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend(body.split())
    if len(tokens) < 2:
        raise ValueError("matrix file: missing size header")
    try:
        rows, cols = int(tokens[0]), int(tokens[1])
    except ValueError as exc:
        raise ValueError("matrix file: bad size header") from exc
    need = rows * cols
    vals = tokens[2:]
    if len(vals) != need:
        raise ValueError(f"matrix file: expected {need} entries, got {len(vals)}")
    try:
        nums = [int(v) for v in vals]
    except ValueError as exc:
        raise ValueError("matrix file: non-integer entry") from exc
    return IntMatrix([nums[i * cols : (i + 1) * cols] for i in range(rows)])


def format_matrix_text(m: IntMatrix, comment: str | None = None) -> str:
    lines = []
    if comment:
        lines.extend("# " + c for c in comment.splitlines())
    lines.append(f"{m.rows} {m.cols}")
    width = max(len(str(x)) for row in m.tolist() for x in row)
    for row in m.tolist():
        lines.append(" ".join(str(x).rjust(width) for x in row))
    return "\n".join(lines) + "\n"


def load_lattice(path) -> Lattice:
    with open(path, "r", encoding="utf-8") as fh:
        return Lattice(parse_matrix_text(fh.read()))


def save_lattice(lat: Lattice, path, comment: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_matrix_text(lat.generator, comment))


def log2_volume(lat: Lattice) -> float:
    """log2 of the fundamental volume, exact for powers of two."""
    v = lat.volume
    if v & (v - 1) == 0:
        return float(v.bit_length() - 1)
    return math.log2(v)
