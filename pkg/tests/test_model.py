import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abfold import model
from abfold.errors import DataError, DimensionError, InvalidResidueError
from abfold.model import (Conformation, Sequence, builtin_sequences,
                          compute_positions, energy, get_sequence,
                          interaction, kd_transform, reported_energy)
from conftest import naive_energy, random_conformation


class TestKdTransform:
    def test_mixed(self):
        assert kd_transform("GIDE") == "AABB"

    def test_all_hydrophobic(self):
        assert kd_transform("IVPLCMAG") == "AAAAAAAA"

    def test_single_letter_ok_here(self):
        # length is only enforced at Sequence construction
        assert kd_transform("W") == "B"
        with pytest.raises(InvalidResidueError):
            Sequence("B")

    def test_unknown_code_names_offender(self):
        with pytest.raises(InvalidResidueError) as err:
            kd_transform("GIXDE")
        assert "'X'" in str(err.value) and "2" in str(err.value)

    def test_partition_covers_20_codes(self):
        assert len(model.HYDROPHOBIC | model.HYDROPHILIC) == 20
        assert not (model.HYDROPHOBIC & model.HYDROPHILIC)


class TestInteraction:
    def test_pairs(self):
        assert interaction("A", "A") == 1.0
        assert interaction("B", "B") == 0.5
        assert interaction("A", "B") == -0.5
        assert interaction("B", "A") == -0.5

    def test_matrix_matches_scalar(self, rng):
        seq = get_sequence("1BXL")
        cmat = seq.interaction_matrix()
        for i in range(len(seq)):
            for j in range(len(seq)):
                assert cmat[i, j] == interaction(seq.residues[i], seq.residues[j])


class TestPositions:
    def test_three_monomers_zero_angle(self):
        pos = compute_positions(Conformation([0.0], []))
        assert np.allclose(pos, [(0, 0, 0), (0, 1, 0), (1, 1, 0)], atol=0)

    def test_three_monomers_quarter_turn(self):
        pos = compute_positions(Conformation([math.pi / 2], []))
        assert np.allclose(pos, [(0, 0, 0), (0, 1, 0), (0, 2, 0)], atol=1e-15)

    def test_four_monomers_vertical_step(self):
        pos = compute_positions(Conformation([0.0, 0.0], [math.pi / 2]))
        assert np.allclose(pos[3], (1, 1, 1), atol=1e-15)

    def test_anchor_frame(self, rng):
        for _ in range(20):
            pos = compute_positions(random_conformation(rng, 13))
            assert np.all(pos[0] == 0.0)
            assert np.allclose(pos[1], (0, 1, 0), atol=0)
            assert pos[2, 2] == 0.0

    def test_unit_bonds(self, rng):
        for length in (5, 13, 25):
            for _ in range(30):
                pos = compute_positions(random_conformation(rng, length))
                norms = np.linalg.norm(np.diff(pos, axis=0), axis=1)
                assert np.max(np.abs(norms - 1.0)) <= 1e-9

    @given(st.lists(st.floats(-math.pi, math.pi), min_size=9, max_size=9))
    @settings(max_examples=50, deadline=None)
    def test_unit_bonds_property(self, angles):
        conf = Conformation(angles[:5], angles[5:])
        pos = compute_positions(conf)
        norms = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-9


class TestEnergy:
    def test_aaa_zero_angle(self):
        # d13 = sqrt(2): 4 * (2**-6 - 2**-3) = -0.4375
        assert energy(Sequence("AAA"), Conformation([0.0], [])) == pytest.approx(
            -0.4375, abs=1e-15)

    def test_abb_zero_angle(self):
        assert energy(Sequence("ABB"), Conformation([0.0], [])) == pytest.approx(
            0.3125, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            energy(Sequence("AAAA"), Conformation([0.0], []))

    def test_clash_is_positive_infinity(self):
        # theta = -pi/2 folds the third monomer back onto the first
        e = energy(Sequence("AAA"), Conformation([-math.pi / 2], []))
        assert e == math.inf

    def test_matches_naive_oracle(self, rng):
        for length in (5, 13, 25):
            seq = Sequence("".join(rng.choice(["A", "B"], length)))
            for _ in range(100):
                conf = random_conformation(rng, length)
                ours = energy(seq, conf)
                ref = naive_energy(seq, conf)
                assert ours == pytest.approx(ref, rel=1e-12)

    def test_mirror_invariance(self, rng):
        seq = get_sequence("F13")
        for _ in range(100):
            conf = random_conformation(rng, 13)
            flipped = Conformation(conf.theta, -conf.beta)
            a, b = energy(seq, conf), energy(seq, flipped)
            assert abs(a - b) <= 1e-12 * max(1.0, abs(a))

    def test_depends_only_on_angles(self, rng):
        # same angle vector, fresh arrays: identical energy
        seq = get_sequence("F13")
        conf = random_conformation(rng, 13)
        again = Conformation(conf.theta.copy(), conf.beta.copy())
        assert energy(seq, conf) == energy(seq, again)


class TestReportedEnergy:
    def test_values(self):
        assert reported_energy(-0.4375) == 0.4375
        assert reported_energy(0.0) == 0.0
        assert reported_energy(-6.9961) == 6.9961


class TestBuiltinSequences:
    def test_corpus_size(self):
        assert len(builtin_sequences()) == 23

    def test_lookup_rows(self):
        s = get_sequence("1BXP")
        assert (len(s), s.dimension, s.residues) == (13, 21, "ABBBBBBABBBAB")
        assert get_sequence("F34").dimension == 63
        s = get_sequence("2EWH")
        assert (len(s), s.dimension) == (98, 191)

    def test_1pch_uses_printed_string(self):
        # the published string and solution vector agree at L=87; the
        # stated 88/171 row entry is the inconsistent one (fixture notes)
        s = get_sequence("1PCH")
        assert (len(s), s.dimension) == (87, 169)

    def test_alphabet_and_dimensions(self):
        for s in builtin_sequences():
            assert set(s.residues) <= {"A", "B"}
            assert s.dimension == 2 * len(s) - 5

    def test_fibonacci_strings_match_construction(self):
        # S0 = A, S1 = B, S_{i+1} = S_{i-1} + S_i
        fib = ["A", "B"]
        while len(fib[-1]) < 89:
            fib.append(fib[-2] + fib[-1])
        by_len = {len(s): s for s in fib}
        for label in ("F13", "F21", "F34", "F55", "F89"):
            s = get_sequence(label)
            assert s.residues == by_len[len(s)]

    def test_unknown_label(self):
        with pytest.raises(DataError):
            get_sequence("9XYZ")


class TestConformation:
    def test_dimension(self):
        conf = Conformation(np.zeros(11), np.zeros(10))
        assert conf.dimension == 21 and conf.length == 13

    def test_vector_round_trip(self, rng):
        conf = random_conformation(rng, 13)
        again = Conformation.from_vector(conf.as_vector())
        assert np.array_equal(again.theta, conf.theta)
        assert np.array_equal(again.beta, conf.beta)

    def test_bad_shapes(self):
        with pytest.raises(DimensionError):
            Conformation(np.zeros(5), np.zeros(5))
        with pytest.raises(DimensionError):
            Conformation.from_vector(np.zeros(4))
        with pytest.raises(DimensionError):
            Conformation([0.0, math.nan], [0.0])
        with pytest.raises(DimensionError):
            Conformation([0.0, 7.0], [0.0])

    def test_degrees_round_trip(self):
        conf = Conformation.from_degrees([30.0, -60.0, 45.0])
        assert conf.theta == pytest.approx([math.radians(30), math.radians(-60)])
        assert np.allclose(conf.to_degrees(), [30.0, -60.0, 45.0])


class TestFileFormats:
    def test_conformation_round_trip(self, tmp_path, rng):
        conf = random_conformation(rng, 13)
        path = tmp_path / "c.conf"
        model.write_conformation(path, "X1", conf)
        label, back = model.read_conformation(path)
        assert label == "X1"
        assert np.allclose(back.as_vector(), conf.as_vector(), atol=1e-12)

    def test_parser_accepts_published_comma_layout(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("T\n1.0, -2.0, 3.0\n")
        _, conf = model.read_conformation(path, degrees=False)
        assert np.allclose(conf.as_vector(), [1.0, -2.0, 3.0])

    def test_wrong_angle_count_reports_dimension(self, tmp_path):
        path = tmp_path / "c.conf"
        path.write_text("T\n1.0 2.0\n")
        with pytest.raises(DataError):
            model.read_conformation(path)

    def test_sequence_file(self, tmp_path):
        path = tmp_path / "s.fa"
        path.write_text(">one\nABAB\nBA\n>two\nAAB\n")
        seqs = model.read_sequences(path)
        assert [(s.label, s.residues) for s in seqs] == [("one", "ABABBA"),
                                                         ("two", "AAB")]

    def test_sequence_file_kd(self, tmp_path):
        path = tmp_path / "s.fa"
        path.write_text(">pep\nGIDE\n")
        seqs = model.read_sequences(path, kd=True)
        assert seqs[0].residues == "AABB"

    def test_sequence_file_rejects_codes_without_kd(self, tmp_path):
        path = tmp_path / "s.fa"
        path.write_text(">pep\nGIDE\n")
        with pytest.raises(InvalidResidueError):
            model.read_sequences(path)
