"""Voronoi constellations: multilevel coding lattice, shaping lattice, and the
box-indexed bijection between messages and constellation points.

A constellation is the set of coding-lattice points inside the Voronoi region
of the shaping lattice. Messages are tuples (one symbol block per code level
plus a shaping vector s drawn from an integer box); the representative
x = sum_i q^i c_i + q^a s of a message lives in a hyperrectangle, and folding
it modulo the shaping lattice gives the transmitted point. Indexing inverts
that without any search: peel the base-q digits level by level, then reduce
the leftover integer vector back into the box.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass

import numpy as np

from .codes import (
    BUILTIN_CHAINS,
    CodeChain,
    builtin_chain,
    load_chain,
    nested_basis,
    ordinals_to_symbols,
    verify_carry_closure,
)
from .intmat import IntMatrix, hnf_from_spanning
from .lattice import (
    DiagonalScale,
    Lattice,
    direct_sum,
    is_sublattice,
    load_lattice,
    quotient_order,
    standard_lattice,
)
from .quantize import (
    fold_batch,
    fold_mod_parallelotope_batch,
    make_quantizer,
)

_ENUM_LIMIT = 1 << 20
_INT64_SAFE_MODULUS = 1 << 20  # q^a beyond this falls back to exact arithmetic


def construction_d_lattice(chain: CodeChain) -> Lattice:
    """Coding lattice sum_i q^i C_i + q^a Z^n from a chain of nested codes.

    The generator columns are q^level * b for each nested-basis row b plus
    q^a * e_m for the non-pivot positions m; reducing them to Hermite form
    can stay modulo q^a because q^a Z^n is inside the lattice, which keeps
    every intermediate value small enough for vectorized integer arithmetic.
    """
    q, a, n = chain.q, chain.a, chain.n
    rows, levels, pivots = nested_basis(chain)
    qa = q**a
    expected_log = a * n - sum(chain.dims())
    triangular = None
    if qa <= _INT64_SAFE_MODULUS and _pivot_columns_are_triangular(rows, pivots):
        m = np.zeros((n, n), dtype=np.int64)
        d = np.full(n, qa, dtype=np.int64)
        pivot_set = set(pivots)
        for row, level, piv in zip(rows, levels, pivots):
            m[:, piv] = np.array(row, dtype=np.int64) * q**level
            d[piv] = q**level
        for m_idx in range(n):
            if m_idx not in pivot_set:
                m[m_idx, m_idx] = qa
        for i in range(1, n):
            qf = m[i, :i] // d[i]
            if np.any(qf):
                m[i:, :i] -= np.outer(m[i:, i], qf)
                m[i + 1 :, :i] %= qa
        triangular = IntMatrix(m.tolist())
    else:
        cols = []
        for row, level in zip(rows, levels):
            cols.append([v * q**level for v in row])
        for m_idx in range(n):
            e = [0] * n
            e[m_idx] = qa
            cols.append(e)
        triangular = hnf_from_spanning(cols)
    lat = Lattice(triangular, _triangular=triangular, name=f"multilevel({chain!r})")
    if lat.volume != q**expected_log:
        raise AssertionError("coding lattice volume does not match the chain")
    return lat


def _pivot_columns_are_triangular(rows, pivots) -> bool:
    """True when every nested-basis row vanishes strictly before its pivot."""
    for row, piv in zip(rows, pivots):
        if any(row[j] for j in range(piv)):
            return False
    return True


@dataclass(frozen=True)
class Message:
    """One symbol block per code level plus the shaping box vector s."""

    symbols: tuple
    s: tuple


class VoronoiCodeSpec:
    """A Voronoi constellation built from a code chain and a shaping base.

    The shaping lattice is q^a * (direct sum of `copies` blocks of
    alpha * base); its quotient by the coding lattice enumerates exactly
    message_count points. `offset` translates every representative before
    folding (integer entries keep all arithmetic exact).
    """

    def __init__(self, chain: CodeChain, base: Lattice, *, alpha: int = 1,
                 copies: int = 1, offset=None, name: str | None = None):
        if chain.a > 1:
            # multilevel carries must stay inside the chain; proven for q = 2
            verify_carry_closure(chain)
        n = chain.n
        if base.dim * copies != n:
            raise ValueError(
                f"chain length {n} does not match shaping dimension "
                f"{base.dim} x {copies} copies"
            )
        self.chain = chain
        self.base = base
        self.alpha = int(alpha)
        self.copies = int(copies)
        self.name = name
        self.q = chain.q
        self.a = chain.a
        self.n = n
        self.qa = chain.q**chain.a
        self.coding = construction_d_lattice(chain)
        self.shaping_prime = direct_sum(base, copies, alpha)
        self.shaping = self.shaping_prime.scaled(self.qa)
        self.scale_k = DiagonalScale.uniform(n, self.qa)
        self.s_box = self.shaping_prime.diag()
        if offset is None:
            offset = (0,) * n
        self.offset = tuple(int(v) for v in offset)
        if len(self.offset) != n:
            raise ValueError("offset length does not match dimension")
        if not is_sublattice(self.shaping, self.coding):
            raise ValueError("shaping lattice is not nested in the coding lattice")
        self.message_count = quotient_order(self.coding, self.shaping)
        box_points = self.shaping_prime.volume
        code_points = self.q ** sum(chain.dims())
        if self.message_count != box_points * code_points:
            raise AssertionError("message count does not factor into box x codes")
        self._quantizer = make_quantizer(self.shaping)
        self._rate = self._compute_rate()
        self._offset_np = np.array(self.offset, dtype=np.int64)
        self._box_np = np.array(self.s_box, dtype=np.int64)
        self._shaping_prime_tri = self.shaping_prime.triangular_generator

    # -- rate ---------------------------------------------------------------

    def rate_terms(self) -> tuple:
        """(bits per dimension from shaping, bits per dimension from coding)."""
        base_bits = math.log2(self.base.volume) / self.base.dim
        shaping_term = math.log2(self.alpha) + base_bits
        coding_term = sum(self.chain.dims()) / self.n * math.log2(self.q)
        return shaping_term, coding_term

    def _compute_rate(self) -> float:
        formula = sum(self.rate_terms())
        exact = math.log2(self.message_count) / self.n
        if abs(formula - exact) > 1e-12:
            raise AssertionError(
                f"rate formula {formula!r} disagrees with log2(M)/n {exact!r}"
            )
        return formula

    def rate(self) -> float:
        """Bits per dimension; equals log2(message_count)/n to 1e-12."""
        return self._rate

    # -- message bookkeeping --------------------------------------------------

    def message_from_ordinal(self, ordinal: int) -> Message:
        if not 0 <= ordinal < self.message_count:
            raise ValueError("ordinal out of range")
        ks = self.chain.dims()
        rem = int(ordinal)
        symbols = []
        for k in ks:
            rem, level_ord = divmod(rem, self.q**k)
            symbols.append(tuple(ordinals_to_symbols([level_ord], k, self.q)[0]))
        s = [0] * self.n
        for i in range(self.n - 1, -1, -1):
            rem, s[i] = divmod(rem, int(self.s_box[i]))
        return Message(symbols=tuple(symbols), s=tuple(s))

    def ordinal_from_message(self, message: Message) -> int:
        ks = self.chain.dims()
        if len(message.symbols) != self.a or len(message.s) != self.n:
            raise ValueError("message shape does not match the spec")
        value = 0
        for i in range(self.n):
            si = int(message.s[i])
            if not 0 <= si < self.s_box[i]:
                raise ValueError("shaping vector outside its box")
            value = value * int(self.s_box[i]) + si
        for k, block in zip(reversed(ks), reversed(message.symbols)):
            if len(block) != k or any(not 0 <= v < self.q for v in block):
                raise ValueError("code symbols outside their range")
            ord_k = 0
            for v in block:
                ord_k = ord_k * self.q + int(v)
            value = value * self.q**k + ord_k
        return value

    def random_message(self, rng: np.random.Generator) -> Message:
        return self.message_from_ordinal(
            int(rng.integers(0, self.message_count, dtype=np.int64))
        )

    def all_ordinals(self) -> np.ndarray:
        if self.message_count > _ENUM_LIMIT:
            raise ValueError(
                f"constellation has {self.message_count} points, "
                f"more than the enumeration bound {_ENUM_LIMIT}"
            )
        return np.arange(self.message_count, dtype=np.int64)

    # -- encoding -------------------------------------------------------------

    def representative_batch(self, ordinals) -> np.ndarray:
        """Box representatives x = sum q^i c_i + q^a s + offset, unfolded."""
        ords = np.asarray(ordinals, dtype=np.int64)
        rem = ords.copy()
        x = np.zeros((len(ords), self.n), dtype=np.int64)
        for level, code in enumerate(self.chain.codes):
            count = self.q**code.k
            rem, level_ords = np.divmod(rem, count)
            msgs = ordinals_to_symbols(level_ords, code.k, self.q)
            x += self.q**level * code.encode_batch(msgs)
        s = np.empty((len(ords), self.n), dtype=np.int64)
        for i in range(self.n - 1, -1, -1):
            rem, s[:, i] = np.divmod(rem, int(self.s_box[i]))
        x += self.qa * s
        return x + self._offset_np

    def representative(self, message: Message) -> np.ndarray:
        return self.representative_batch([self.ordinal_from_message(message)])[0]

    def representative_box(self) -> tuple:
        """Exclusive upper corner of the hyperrectangle holding representatives."""
        return tuple(self.qa * int(d) + o for d, o in zip(self.s_box, self.offset))

    def encode_batch(self, ordinals) -> np.ndarray:
        """Constellation points for message ordinals (int64 rows)."""
        return fold_batch(self._quantizer, self.representative_batch(ordinals))

    def encode(self, message: Message) -> np.ndarray:
        return self.encode_batch([self.ordinal_from_message(message)])[0]

    # -- indexing ---------------------------------------------------------------

    def index_batch(self, points) -> np.ndarray:
        """Message ordinals of coding-lattice points (inverse of encode)."""
        x = np.asarray(points)
        if np.issubdtype(x.dtype, np.floating):
            xi = np.rint(x).astype(np.int64)
            if not np.all(np.abs(x - xi) < 1e-9):
                raise ValueError("not a constellation point: non-integer input")
            x = xi
        x = x.astype(np.int64) - self._offset_np
        if x.ndim != 2 or x.shape[1] != self.n:
            raise ValueError(f"points must be rows of length {self.n}")
        t = x.copy()
        ords = np.zeros(len(x), dtype=np.int64)
        radix = np.int64(1)
        for code in self.chain.codes:
            digits = t % self.q
            msgs = digits[:, np.array(code.pivots, dtype=np.int64)]
            if not np.array_equal(code.encode_batch(msgs), digits):
                raise ValueError(
                    "not a constellation point: level digits leave the code"
                )
            level_ords = msgs @ (self.q ** np.arange(code.k - 1, -1, -1, dtype=np.int64))
            ords += radix * level_ords
            radix *= self.q**code.k
            t = (t - digits) // self.q
        s = fold_mod_parallelotope_batch(self._shaping_prime_tri, t)
        weights = np.empty(self.n, dtype=np.int64)
        w = np.int64(1)
        for i in range(self.n - 1, -1, -1):
            weights[i] = w
            w *= int(self.s_box[i])
        ords += radix * (s @ weights)
        return ords

    def index(self, point) -> Message:
        ordinal = int(self.index_batch(np.asarray(point)[None, :])[0])
        return self.message_from_ordinal(ordinal)

    # -- enumeration ------------------------------------------------------------

    def enumerate_constellation(self) -> np.ndarray:
        """Every constellation point, ordered by message ordinal."""
        return self.encode_batch(self.all_ordinals())

    def __repr__(self):
        label = self.name or f"{self.chain!r}+{self.base!r}"
        return f"VoronoiCodeSpec({label}, M={self.message_count})"


# ---------------------------------------------------------------------------
# brute-force references (small systems only)


def enumerate_constellation_oracle(spec: VoronoiCodeSpec) -> set:
    """Coding-lattice points in the shaping Voronoi region, by direct search.

    Independent of the box indexing: scans an integer cube that provably
    covers the Voronoi region and keeps the points that belong to the coding
    lattice and fold to themselves. Requires a covering radius bound.
    """
    if spec.shaping.cov_sq is None:
        raise ValueError("no covering bound available for the shaping lattice")
    bound = int(math.isqrt(int(math.ceil(spec.shaping.cov_sq)))) + 1
    count = (2 * bound + 1) ** spec.n
    if count > 4_000_000:
        raise ValueError("search cube too large for the brute-force oracle")
    pts = np.array(
        list(itertools.product(range(-bound, bound + 1), repeat=spec.n)),
        dtype=np.int64,
    )
    folded = fold_batch(spec._quantizer, pts)
    keep = np.all(folded == pts, axis=1)
    out = set()
    for p in pts[keep]:
        if spec.coding.contains_point([int(v) for v in p - spec._offset_np]):
            out.add(tuple(int(v) for v in p))
    return out


def box_coset_representatives(coding: Lattice, shaping: Lattice) -> list:
    """Coding-lattice points in the digit box of the shaping lattice.

    Brute force over the box spanned by the triangular diagonal of `shaping`;
    the result is one representative per coset, so its length equals the
    quotient order. Only intended for small toy systems.
    """
    diag = shaping.diag()
    total = 1
    for d in diag:
        total *= int(d)
    if total > _ENUM_LIMIT:
        raise ValueError("shaping box too large for brute-force enumeration")
    reps = [
        pt
        for pt in itertools.product(*(range(int(d)) for d in diag))
        if coding.contains_point(pt)
    ]
    if len(reps) != quotient_order(coding, shaping):
        raise AssertionError("box enumeration missed cosets")
    return reps


# ---------------------------------------------------------------------------
# stock constellations and spec files


BUILTIN_SPECS = ("pair2", "desk8-e8", "desk8-cube", "desk8-ham", "leech24")


def builtin_spec(name: str) -> VoronoiCodeSpec:
    if name == "pair2":
        return VoronoiCodeSpec(
            builtin_chain("rep2"), standard_lattice("Zn(2)"), alpha=2, name=name
        )
    if name == "desk8-e8":
        return VoronoiCodeSpec(
            builtin_chain("rep8-spc8"), standard_lattice("E8_int"), name=name
        )
    if name == "desk8-cube":
        return VoronoiCodeSpec(
            builtin_chain("rep8-spc8"), standard_lattice("Zn(8)"), alpha=2, name=name
        )
    if name == "desk8-ham":
        return VoronoiCodeSpec(
            builtin_chain("rep8-ham8-spc8"), standard_lattice("Zn(8)"), alpha=2,
            name=name,
        )
    if name == "leech24":
        return VoronoiCodeSpec(
            builtin_chain("rep24-spc24"), standard_lattice("Leech_int"), name=name
        )
    raise ValueError(f"unknown constellation {name!r}")


def load_spec(path) -> VoronoiCodeSpec:
    """Read a key = value spec file describing a constellation.

    Keys: chain (stock chain name or chain file path), base (stock lattice
    name or matrix file path), alpha, copies (positive integers, default 1).
    Relative paths resolve against the spec file's directory.
    """
    base_dir = os.path.dirname(os.path.abspath(path))
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"spec file line {line_no}: expected key = value")
            key, _, value = body.partition("=")
            key, value = key.strip(), value.strip()
            if key in values:
                raise ValueError(f"spec file line {line_no}: duplicate key {key!r}")
            values[key] = value
    unknown = set(values) - {"chain", "base", "alpha", "copies", "name"}
    if unknown:
        raise ValueError(f"spec file: unknown keys {sorted(unknown)}")
    for required in ("chain", "base"):
        if required not in values:
            raise ValueError(f"spec file: missing required key {required!r}")
    chain = _resolve_chain(values["chain"], base_dir)
    base = _resolve_base(values["base"], base_dir)
    alpha = _positive_int(values.get("alpha", "1"), "alpha")
    copies = _positive_int(values.get("copies", "1"), "copies")
    return VoronoiCodeSpec(
        chain, base, alpha=alpha, copies=copies, name=values.get("name")
    )


def _positive_int(text: str, key: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise ValueError(f"spec file: {key} must be an integer") from exc
    if value < 1:
        raise ValueError(f"spec file: {key} must be positive")
    return value


def _resolve_chain(value: str, base_dir: str) -> CodeChain:
    if value in BUILTIN_CHAINS:
        return builtin_chain(value)
    path = value if os.path.isabs(value) else os.path.join(base_dir, value)
    if os.path.exists(path):
        return load_chain(path)
    raise ValueError(f"spec file: chain {value!r} is neither stock nor a readable file")


def _resolve_base(value: str, base_dir: str) -> Lattice:
    try:
        return standard_lattice(value)
    except ValueError:
        pass
    path = value if os.path.isabs(value) else os.path.join(base_dir, value)
    if os.path.exists(path):
        return load_lattice(path)
    raise ValueError(f"spec file: base {value!r} is neither stock nor a readable file")


def get_spec(name_or_path: str) -> VoronoiCodeSpec:
    """Stock constellation by name, or a spec file by path."""
    if name_or_path in BUILTIN_SPECS:
        return builtin_spec(name_or_path)
    if os.path.exists(name_or_path):
        return load_spec(name_or_path)
    raise ValueError(
        f"{name_or_path!r} is not a stock constellation or a readable spec file; "
        f"stock names: {', '.join(BUILTIN_SPECS)}"
    )
