"""Constellation construction, indexing, and spec files."""

import math

import numpy as np
import pytest

from vorlat.codes import CodeChain, LinearCode, builtin_chain, make_rep_spc_chain
from vorlat.intmat import hnf_from_spanning
from vorlat.lattice import Lattice, quotient_order, standard_lattice
from vorlat.quantize import fold_batch, make_quantizer
from vorlat.shaping import (
    BUILTIN_SPECS,
    Message,
    VoronoiCodeSpec,
    box_coset_representatives,
    builtin_spec,
    construction_d_lattice,
    enumerate_constellation_oracle,
    get_spec,
    load_spec,
)

# hand-checked: the 8 coding-lattice points inside the Voronoi region of 4Z^2
# for the two-symbol repetition system (ties resolved toward smaller points)
PAIR2_POINTS = {
    (-2, -2), (-2, 0), (-1, -1), (-1, 1), (0, -2), (0, 0), (1, -1), (1, 1),
}


def test_construction_d_volumes_and_diagonals():
    lat2 = construction_d_lattice(builtin_chain("rep2"))
    assert lat2.diag() == (1, 2)
    assert lat2.volume == 2

    lat8 = construction_d_lattice(builtin_chain("rep8-spc8"))
    assert lat8.volume == 256
    assert lat8.diag() == (1, 2, 2, 2, 2, 2, 2, 4)

    lat_ham = construction_d_lattice(builtin_chain("rep8-ham8-spc8"))
    assert lat_ham.volume == 4096

    lat24 = construction_d_lattice(builtin_chain("rep24-spc24"))
    assert lat24.volume == 2**24


def test_construction_d_matches_generic_hnf():
    # same lattice via the generic spanning-set reduction, column by column
    from vorlat.codes import nested_basis

    for name in ("rep2", "rep8-spc8", "rep8-ham8-spc8"):
        chain = builtin_chain(name)
        rows, levels, _ = nested_basis(chain)
        cols = [[v * chain.q**lvl for v in row] for row, lvl in zip(rows, levels)]
        qa = chain.q**chain.a
        for m in range(chain.n):
            e = [0] * chain.n
            e[m] = qa
            cols.append(e)
        reference = hnf_from_spanning(cols)
        built = construction_d_lattice(chain)
        assert built.triangular_generator.tolist() == reference.tolist()


def test_construction_d_contains_scaled_codewords():
    chain = builtin_chain("rep8-spc8")
    lat = construction_d_lattice(chain)
    rng = np.random.default_rng(7)
    for _ in range(20):
        parts = np.zeros(8, dtype=np.int64)
        for level, code in enumerate(chain.codes):
            msg = rng.integers(0, 2, code.k)
            parts += 2**level * code.encode(msg)
        parts += 4 * rng.integers(-3, 4, 8)
        assert lat.contains_point(parts)


def test_pair2_basic_facts():
    spec = builtin_spec("pair2")
    assert spec.message_count == 8
    assert spec.rate() == pytest.approx(1.5)
    assert spec.s_box == (2, 2)
    pts = spec.enumerate_constellation()
    assert {tuple(map(int, p)) for p in pts} == PAIR2_POINTS
    assert len({tuple(p) for p in pts.tolist()}) == 8


def test_pair2_matches_brute_force_oracle():
    spec = builtin_spec("pair2")
    oracle = enumerate_constellation_oracle(spec)
    image = {tuple(map(int, p)) for p in spec.enumerate_constellation()}
    assert image == oracle


def test_pair2_index_inverts_encode():
    spec = builtin_spec("pair2")
    ords = spec.all_ordinals()
    pts = spec.encode_batch(ords)
    assert np.array_equal(spec.index_batch(pts), ords)
    # float input with tiny perturbation is accepted
    assert np.array_equal(spec.index_batch(pts + 1e-12), ords)


def test_representatives_fill_the_box():
    spec = builtin_spec("pair2")
    reps = spec.representative_batch(spec.all_ordinals())
    hi = spec.representative_box()
    assert reps.min() >= 0
    assert all(reps[:, j].max() < hi[j] for j in range(spec.n))
    assert len({tuple(r) for r in reps.tolist()}) == spec.message_count


def test_general_shaping_sublattice_cosets():
    """Indexing works for any nested pair, not only scaled copies."""
    coding = standard_lattice("Zn(2)")
    shaping = Lattice([[1, 0], [1, 2]])  # even-coordinate-sum sublattice of Z^2
    assert quotient_order(coding, shaping) == 2
    reps = box_coset_representatives(coding, shaping)
    assert reps == [(0, 0), (0, 1)]
    folded = fold_batch(make_quantizer(shaping), np.array(reps, dtype=np.int64))
    assert {tuple(map(int, p)) for p in folded} == {(0, 0), (1, 0)}


def test_desk8_e8_counts_and_rate():
    spec = builtin_spec("desk8-e8")
    assert spec.message_count == 65536
    assert spec.rate_terms() == pytest.approx((1.0, 1.0))
    assert spec.rate() == pytest.approx(2.0)


def test_desk8_e8_round_trip_subset():
    spec = builtin_spec("desk8-e8")
    rng = np.random.default_rng(21)
    ords = rng.integers(0, spec.message_count, 512, dtype=np.int64)
    pts = spec.encode_batch(ords)
    assert np.array_equal(spec.index_batch(pts), ords)
    for o in ords[:8]:
        msg = spec.message_from_ordinal(int(o))
        point = spec.encode(msg)
        assert spec.ordinal_from_message(spec.index(point)) == int(o)


def test_stock_spec_rates():
    expected = {
        "pair2": (1.0, 0.5),
        "desk8-e8": (1.0, 1.0),
        "desk8-cube": (1.0, 1.0),
        "desk8-ham": (1.0, 1.5),
        "leech24": (1.5, 1.0),
    }
    for name in BUILTIN_SPECS:
        spec = builtin_spec(name)
        assert spec.rate_terms() == pytest.approx(expected[name])
        # the identity behind the terms, to full double precision
        assert sum(spec.rate_terms()) == pytest.approx(
            math.log2(spec.message_count) / spec.n, abs=1e-12
        )


def test_leech24_message_count():
    spec = builtin_spec("leech24")
    assert spec.message_count == 2**60
    assert spec.rate() == pytest.approx(2.5)


def test_message_ordinal_round_trip():
    spec = builtin_spec("desk8-cube")
    rng = np.random.default_rng(3)
    for _ in range(50):
        o = int(rng.integers(0, spec.message_count))
        msg = spec.message_from_ordinal(o)
        assert spec.ordinal_from_message(msg) == o
    msg = spec.random_message(np.random.default_rng(0))
    assert spec.ordinal_from_message(msg) < spec.message_count


def test_message_validation():
    spec = builtin_spec("pair2")
    with pytest.raises(ValueError, match="ordinal out of range"):
        spec.message_from_ordinal(8)
    with pytest.raises(ValueError, match="ordinal out of range"):
        spec.message_from_ordinal(-1)
    with pytest.raises(ValueError, match="message shape"):
        spec.ordinal_from_message(Message(symbols=((0,), (0,)), s=(0, 0)))
    with pytest.raises(ValueError, match="outside its box"):
        spec.ordinal_from_message(Message(symbols=((0,),), s=(2, 0)))
    with pytest.raises(ValueError, match="outside their range"):
        spec.ordinal_from_message(Message(symbols=((2,),), s=(0, 0)))


def test_index_rejects_foreign_points():
    spec = builtin_spec("pair2")
    with pytest.raises(ValueError, match="non-integer input"):
        spec.index_batch(np.array([[0.4, 0.0]]))
    with pytest.raises(ValueError, match="leave the code"):
        spec.index_batch(np.array([[1, 0]]))


def test_offset_translates_the_constellation():
    plain = builtin_spec("pair2")
    spec = VoronoiCodeSpec(
        builtin_chain("rep2"), standard_lattice("Zn(2)"), alpha=2, offset=(1, 1)
    )
    assert spec.message_count == plain.message_count
    ords = spec.all_ordinals()
    pts = spec.encode_batch(ords)
    assert np.array_equal(spec.index_batch(pts), ords)
    # every point is congruent to the offset modulo the coding lattice
    for p in pts:
        assert spec.coding.contains_point([int(v) for v in p - np.array([1, 1])])
    assert {tuple(map(int, p)) for p in pts} == enumerate_constellation_oracle(spec)


def test_offset_length_checked():
    with pytest.raises(ValueError, match="offset length"):
        VoronoiCodeSpec(
            builtin_chain("rep2"), standard_lattice("Zn(2)"), alpha=2, offset=(1,)
        )


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError, match="does not match shaping dimension"):
        VoronoiCodeSpec(builtin_chain("rep8-spc8"), standard_lattice("Zn(4)"))


def test_carry_closure_enforced_for_multilevel_chains():
    inner = LinearCode([[1, 1, 0, 0], [0, 1, 1, 0]])
    chain = CodeChain([inner, inner])
    with pytest.raises(ValueError, match="carry words from level 0"):
        VoronoiCodeSpec(chain, standard_lattice("Zn(4)"), alpha=2)


def test_copies_build_block_systems():
    spec = VoronoiCodeSpec(
        make_rep_spc_chain(16), standard_lattice("E8_int"), copies=2
    )
    assert spec.n == 16
    assert spec.message_count == 65536**2
    assert spec.rate() == pytest.approx(2.0)
    rng = np.random.default_rng(5)
    ords = rng.integers(0, 1 << 30, 64, dtype=np.int64)
    assert np.array_equal(spec.index_batch(spec.encode_batch(ords)), ords)


def test_enumeration_guard():
    spec = builtin_spec("leech24")
    with pytest.raises(ValueError, match="more than the enumeration bound"):
        spec.all_ordinals()


def test_builtin_spec_unknown_name():
    with pytest.raises(ValueError, match="unknown constellation"):
        builtin_spec("desk9")


def test_spec_file_round_trip(tmp_path):
    path = tmp_path / "toy.vspec"
    path.write_text(
        "# comment line\n"
        "chain = rep8-spc8\n"
        "base = E8_int\n"
        "name = mine\n"
    )
    spec = load_spec(path)
    assert spec.name == "mine"
    assert spec.message_count == 65536
    stock = builtin_spec("desk8-e8")
    assert np.array_equal(
        spec.encode_batch(range(100)), stock.encode_batch(range(100))
    )


def test_spec_file_with_file_references(tmp_path):
    (tmp_path / "c.chain").write_text("2 1 2\n2\n1 0\n0 1\n")
    (tmp_path / "b.mat").write_text("2 2\n1 0\n0 1\n")
    (tmp_path / "sys.vspec").write_text("chain = c.chain\nbase = b.mat\n")
    spec = load_spec(tmp_path / "sys.vspec")
    # trivial full code: constellation is Z^2 inside the Voronoi region of 2Z^2
    assert spec.message_count == 4
    pts = {tuple(map(int, p)) for p in spec.enumerate_constellation()}
    assert pts == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_spec_file_errors(tmp_path):
    cases = [
        ("chain rep2\n", "expected key = value"),
        ("chain = rep2\nchain = rep2\n", "duplicate key"),
        ("chain = rep2\nbase = Zn\\(2\\)\nwhat = 1\n", "unknown keys"),
        ("base = Zn\\(2\\)\n", "missing required key 'chain'"),
        ("chain = rep2\nbase = Zn\\(2\\)\nalpha = x\n", "alpha must be an integer"),
        ("chain = rep2\nbase = Zn\\(2\\)\ncopies = 0\n", "copies must be positive"),
        ("chain = nope\nbase = Zn\\(2\\)\n", "neither stock nor a readable file"),
        ("chain = rep2\nbase = nope.mat\n", "neither stock nor a readable file"),
    ]
    for i, (text, message) in enumerate(cases):
        path = tmp_path / f"bad{i}.vspec"
        path.write_text(text.replace("\\(", "(").replace("\\)", ")"))
        with pytest.raises(ValueError, match=message):
            load_spec(path)


def test_get_spec_stock_and_path(tmp_path):
    assert get_spec("pair2").message_count == 8
    path = tmp_path / "x.vspec"
    path.write_text("chain = rep2\nbase = Zn(2)\nalpha = 2\n")
    assert get_spec(str(path)).message_count == 8
    with pytest.raises(ValueError, match="not a stock constellation"):
        get_spec("missing-system")
