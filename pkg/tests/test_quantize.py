"""Tests for nearest-point search, folding, and second-moment estimation."""

import numpy as np
import pytest

from vorlat.intmat import IntMatrix
from vorlat.lattice import Lattice, direct_sum, standard_lattice
from vorlat.quantize import (
    TIE_EPS,
    EnumerationQuantizer,
    fold_batch,
    fold_mod_lattice,
    fold_mod_parallelotope,
    fold_mod_parallelotope_batch,
    make_quantizer,
    quantize,
    quantize_direct_sum,
    quantize_scaled,
    round_half_up,
    second_moment_mc,
    short_vectors,
)

from oracles import in_span


# ---------------------------------------------------------------------------
# componentwise rounding and the integer-coordinate decoders


def test_round_half_up_breaks_ties_upward():
    y = np.array([0.5, -0.5, 1.5, -1.5, 0.49, -0.49])
    assert round_half_up(y).tolist() == [1, 0, 2, -1, 0, 0]


def test_zn_quantizer_example():
    q = make_quantizer(standard_lattice("Zn(3)"))
    assert quantize(q, [0.4, -1.2, 2.5]).tolist() == [0, -1, 3]


def test_dn_quantizer_example():
    q = make_quantizer(standard_lattice("Dn(4)"))
    assert quantize(q, [0.6, 0.6, 0.1, 0.1]).tolist() == [1, 1, 0, 0]


def test_dn_quantizer_parity_repair():
    q = make_quantizer(standard_lattice("Dn(4)"))
    # naive rounding gives odd sum; the worst coordinate is re-rounded the
    # other way, which here lands on the origin
    assert quantize(q, [0.6, 0.0, 0.0, 0.0]).tolist() == [0, 0, 0, 0]
    # exact odd-parity integer input: lowest-index coordinate moves down
    assert quantize(q, [1.0, 0.0, 0.0, 0.0]).tolist() == [0, 0, 0, 0]


def test_scaled_quantizer_example():
    inner = make_quantizer(standard_lattice("Zn(2)"))
    assert quantize_scaled(inner, 4, [3.0, 3.0]).tolist() == [4, 4]


def test_direct_sum_quantizer_example():
    inner = make_quantizer(standard_lattice("Zn(2)"))
    got = quantize_direct_sum(inner, 2, [0.4, -1.2, 2.5, 0.6])
    assert got.tolist() == [0, -1, 3, 1]


def test_direct_sum_quantizer_matches_blockwise():
    e8 = standard_lattice("E8_int")
    lat = direct_sum(e8, copies=3, alpha=2)
    q = make_quantizer(lat)
    inner = make_quantizer(e8.scaled(2))
    rng = np.random.default_rng(42)
    ys = rng.uniform(-6, 6, size=(20, 24))
    got = q.quantize_batch(ys)
    for row, y in zip(got, ys):
        parts = [inner.quantize(y[8 * b : 8 * (b + 1)]) for b in range(3)]
        assert row.tolist() == np.concatenate(parts).tolist()


# ---------------------------------------------------------------------------
# sphere enumeration: ties and agreement with the fast decoders


def test_enumeration_tie_is_lexicographically_smallest():
    lat = standard_lattice("Zn(2)").scaled(2)
    q = EnumerationQuantizer(lat)
    assert quantize(q, [1.0, 1.0]).tolist() == [0, 0]
    assert quantize(q, [-1.0, -1.0]).tolist() == [-2, -2]
    assert quantize(q, [1.0, -1.0]).tolist() == [0, -2]


def test_enumeration_matches_zn_and_dn():
    rng = np.random.default_rng(0)
    for name in ("Zn(3)", "Dn(4)"):
        lat = standard_lattice(name)
        fast = make_quantizer(lat)
        enum = EnumerationQuantizer(lat)
        ys = rng.uniform(-4, 4, size=(60, lat.dim))
        pf = fast.quantize_batch(ys)
        pe = enum.quantize_batch(ys)
        df = ((ys - pf) ** 2).sum(axis=1)
        de = ((ys - pe) ** 2).sum(axis=1)
        assert np.all(np.abs(df - de) < 1e-9)


def test_e8_fast_matches_enumeration_distances():
    lat = standard_lattice("E8_int")
    fast = make_quantizer(lat, method="e8_fast")
    enum = make_quantizer(lat, method="exact_enumeration")
    rng = np.random.default_rng(1)
    ys = rng.uniform(-8, 8, size=(150, 8))
    df = ((ys - fast.quantize_batch(ys)) ** 2).sum(axis=1)
    de = ((ys - enum.quantize_batch(ys)) ** 2).sum(axis=1)
    assert np.all(np.abs(df - de) < 1e-9)


def test_e8_fast_tie_agrees_in_distance_only():
    # (1,1,0,...,0) is equidistant from the origin and from (2,2,0,...,0);
    # the two decoders may pick different representatives of the tie
    lat = standard_lattice("E8_int")
    fast = make_quantizer(lat, method="e8_fast")
    enum = make_quantizer(lat, method="exact_enumeration")
    y = np.array([1.0, 1.0, 0, 0, 0, 0, 0, 0])
    pf = quantize(fast, y)
    pe = quantize(enum, y)
    assert pe.tolist() == [0] * 8
    assert abs(((y - pf) ** 2).sum() - 2.0) < 1e-12
    assert abs(((y - pe) ** 2).sum() - 2.0) < 1e-12


def test_e8_fast_outputs_are_optimal_voronoi_points():
    """Self-contained optimality proof for each decoded point.

    For e = y - Q(y), the point Q(y) is a true nearest neighbour iff
    2<e, v> <= ||v||^2 for every lattice vector v. Vectors with
    ||v|| > 2||e|| satisfy that automatically (Cauchy-Schwarz), and the
    covering radius bound ||e||^2 <= 4 means checking every vector of
    squared norm <= 16 is a complete certificate.
    """
    lat = standard_lattice("E8_int")
    fast = make_quantizer(lat, method="e8_fast")
    vecs = np.array(short_vectors(lat, 16), dtype=np.float64)
    assert len(vecs) == 2400
    norms = (vecs**2).sum(axis=1)
    rng = np.random.default_rng(2)
    ys = rng.uniform(-10, 10, size=(300, 8))
    errs = ys - fast.quantize_batch(ys)
    err_norms = (errs**2).sum(axis=1)
    assert np.all(err_norms <= 4.0 + 1e-9)
    assert np.all(2.0 * errs @ vecs.T <= norms[None, :] + 1e-9)


def test_leech_fast_matches_enumeration_distances():
    lat = standard_lattice("Leech_int")
    fast = make_quantizer(lat, method="leech_fast")
    enum = make_quantizer(lat, method="leech_enum")
    rng = np.random.default_rng(3)
    ys = rng.uniform(-8, 8, size=(6, 24))
    pf = fast.quantize_batch(ys)
    for y, f in zip(ys, pf):
        e = quantize(enum, y)
        df = ((y - f) ** 2).sum()
        de = ((y - e) ** 2).sum()
        assert abs(df - de) < 1e-9


def test_leech_fast_fixed_points():
    lat = standard_lattice("Leech_int")
    fast = make_quantizer(lat)
    pts = np.zeros((3, 24))
    pts[1, 0] = pts[1, 1] = 4.0
    pts[2, :] = 1.0
    pts[2, 0] = -3.0
    got = fast.quantize_batch(pts)
    assert got[0].tolist() == [0] * 24
    assert got[1].tolist() == pts[1].tolist()
    assert got[2].tolist() == pts[2].tolist()


def test_quantizer_idempotent_on_lattice_points():
    for name in ("Zn(4)", "Dn(4)", "E8_int"):
        lat = standard_lattice(name)
        q = make_quantizer(lat)
        rng = np.random.default_rng(4)
        gen = np.array(lat.generator.tolist(), dtype=np.float64)
        coeffs = rng.integers(-3, 4, size=(20, lat.dim))
        pts = coeffs @ gen.T
        assert np.array_equal(q.quantize_batch(pts), pts)


# ---------------------------------------------------------------------------
# make_quantizer validation


def test_make_quantizer_method_validation():
    z4 = standard_lattice("Zn(4)")
    with pytest.raises(ValueError, match="e8_fast"):
        make_quantizer(z4, method="e8_fast")
    with pytest.raises(ValueError, match="leech_fast"):
        make_quantizer(z4, method="leech_fast")
    with pytest.raises(ValueError, match="unknown quantizer method"):
        make_quantizer(z4, method="fancy")


def test_make_quantizer_auto_falls_back_to_enumeration():
    lat = Lattice(IntMatrix([[2, 0], [1, 3]]))
    q = make_quantizer(lat)
    assert isinstance(q, EnumerationQuantizer)
    # columns (2,1) and (0,3): nearest point to (2.1, 2.9) is (2,1)+(0,3)
    assert quantize(q, [2.1, 2.9]).tolist() == [2, 4]


# ---------------------------------------------------------------------------
# folding into the Voronoi region and into the digit box


def test_fold_mod_lattice_example():
    lat = standard_lattice("Zn(2)").scaled(4)
    q = make_quantizer(lat)
    out = fold_mod_lattice(q, [3, 3])
    assert out.tolist() == [-1, -1]
    assert np.issubdtype(out.dtype, np.integer)


def test_fold_mod_lattice_properties():
    lat = standard_lattice("E8_int")
    q = make_quantizer(lat)
    rng = np.random.default_rng(5)
    xs = rng.integers(-20, 21, size=(40, 8))
    folded = fold_batch(q, xs)
    assert np.issubdtype(folded.dtype, np.integer)
    # folding is idempotent and lands in the Voronoi region (quantizes to 0)
    assert np.array_equal(fold_batch(q, folded), folded)
    assert np.all(q.quantize_batch(folded.astype(np.float64)) == 0)
    # x and fold(x) differ by a lattice point
    for x, f in zip(xs, folded):
        assert lat.contains_point([int(v) for v in (x - f)])


def test_fold_mod_parallelotope_example():
    tri = IntMatrix([[1, 0], [1, 2]])
    assert fold_mod_parallelotope(tri, (3, 4)) == (0, 1)


def test_fold_mod_parallelotope_is_exact_residue_map():
    tri = IntMatrix([[2, 0], [1, 4]])
    seen = set()
    rng = np.random.default_rng(6)
    for _ in range(60):
        r = [int(v) for v in rng.integers(-15, 16, size=2)]
        out = fold_mod_parallelotope(tri, r)
        assert 0 <= out[0] < 2 and 0 <= out[1] < 4
        diff = [r[0] - out[0], r[1] - out[1]]
        # exact congruence checked against an independent rational solver
        assert in_span(tri.tolist(), diff)
        assert Lattice(tri).contains_point(diff)
        seen.add(out)
    # full residue system: folding the box itself is the identity
    for a in range(2):
        for b in range(4):
            assert fold_mod_parallelotope(tri, (a, b)) == (a, b)
    assert len(seen) == 8


def test_fold_mod_parallelotope_batch_matches_scalar():
    tri = standard_lattice("E8_int").triangular_generator
    rng = np.random.default_rng(7)
    rs = rng.integers(-50, 51, size=(30, 8))
    batch = fold_mod_parallelotope_batch(tri, rs)
    for r, out in zip(rs, batch):
        assert tuple(out.tolist()) == fold_mod_parallelotope(tri, [int(v) for v in r])


# ---------------------------------------------------------------------------
# short vector enumeration


def test_short_vector_counts():
    assert len(short_vectors(standard_lattice("Zn(2)"), 1)) == 4
    assert len(short_vectors(standard_lattice("Dn(3)"), 2)) == 12
    roots = short_vectors(standard_lattice("E8_int"), 8)
    assert len(roots) == 240
    assert all(sum(v * v for v in r) == 8 for r in roots)


def test_short_vectors_excludes_origin():
    vs = short_vectors(standard_lattice("Zn(2)"), 2)
    assert (0, 0) not in vs
    assert len(vs) == 8  # four at norm 1, four at norm 2


# ---------------------------------------------------------------------------
# Monte Carlo second moment


def test_second_moment_zn_matches_uniform_box():
    q = make_quantizer(standard_lattice("Zn(4)"))
    est = second_moment_mc(q, samples=20000, seed=11)
    assert est.samples == 20000
    assert est.stderr > 0
    assert abs(est.nsm - 1.0 / 12.0) < 4 * est.stderr
    assert abs(est.gain_db()) < 0.05


def test_second_moment_seed_determinism():
    q = make_quantizer(standard_lattice("Dn(4)"))
    a = second_moment_mc(q, samples=5000, seed=3)
    b = second_moment_mc(q, samples=5000, seed=3)
    c = second_moment_mc(q, samples=5000, seed=4)
    assert a == b
    assert a.nsm != c.nsm


def test_second_moment_e8_gain():
    q = make_quantizer(standard_lattice("E8_int"))
    est = second_moment_mc(q, samples=30000, seed=0)
    assert 0.60 < est.gain_db() < 0.71
    assert est.gain_stderr_db() < 0.03
