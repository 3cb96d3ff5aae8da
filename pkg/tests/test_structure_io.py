import numpy as np
import pytest

from metamorph.errors import EnsembleMismatchError, ParseError
from metamorph.structure_io import (
    AlignmentDepthRecord,
    Ensemble,
    Structure,
    count_alignment_depth,
    load_ensemble,
    parse_structure_file,
    write_ensemble,
    write_structure,
)

from conftest import atom_line, helix_coords, make_structure, pdb_text


class TestParse:
    def test_single_model_106_residues(self):
        structs = parse_structure_file(pdb_text(helix_coords(106)))
        assert len(structs) == 1
        assert structs[0].residue_count == 106

    def test_three_models_equal_length(self):
        block = pdb_text(helix_coords(8)).replace("END\n", "")
        text = "".join(f"MODEL     {i}\n{block}ENDMDL\n" for i in (1, 2, 3)) + "END\n"
        structs = parse_structure_file(text)
        assert len(structs) == 3
        assert all(s.residue_count == 8 for s in structs)

    def test_bfactor_column_becomes_plddt(self):
        text = pdb_text([[0, 0, 0], [3.8, 0, 0]], bfactors=[90.0, 70.0])
        (struct,) = parse_structure_file(text)
        assert struct.plddt.tolist() == [90.0, 70.0]

    def test_order_follows_residue_number(self):
        coords = [[0, 0, 0], [3.8, 0, 0], [7.6, 0, 0]]
        text = pdb_text(coords, res_seqs=[7, 2, 5])
        (struct,) = parse_structure_file(text)
        # residues sort to 2, 5, 7 -> original rows 1, 2, 0
        assert np.allclose(struct.ca_coords, np.array(coords)[[1, 2, 0]])

    def test_alternate_locations_other_than_a_skipped(self):
        lines = [
            atom_line(1, 1, 0.0, 0.0, 0.0, 80.0, alt_loc="A"),
            atom_line(2, 2, 3.8, 0.0, 0.0, 81.0, alt_loc="B"),
            atom_line(3, 3, 7.6, 0.0, 0.0, 82.0),
        ]
        (struct,) = parse_structure_file("\n".join(lines))
        assert struct.residue_count == 2
        assert struct.plddt.tolist() == [80.0, 82.0]

    def test_duplicate_ca_first_wins_with_warning(self):
        lines = [
            atom_line(1, 1, 0.0, 0.0, 0.0, 80.0),
            atom_line(2, 1, 9.9, 9.9, 9.9, 11.0),
            atom_line(3, 2, 3.8, 0.0, 0.0, 82.0),
        ]
        with pytest.warns(UserWarning, match="duplicate"):
            (struct,) = parse_structure_file("\n".join(lines))
        assert struct.plddt[0] == 80.0
        assert struct.ca_coords[0].tolist() == [0.0, 0.0, 0.0]

    def test_malformed_coordinate_reports_line_number(self):
        good = atom_line(1, 1, 0.0, 0.0, 0.0, 80.0)
        bad = good[:30] + "  xx.xxx" + good[38:]
        with pytest.raises(ParseError, match="line 3"):
            parse_structure_file("REMARK\n" + good + "\n" + bad)

    def test_no_ca_atoms_errors(self):
        with pytest.raises(ParseError, match="no C-alpha"):
            parse_structure_file("REMARK nothing here\n")
        with pytest.raises(ParseError):
            parse_structure_file("")

    def test_non_ca_and_hetatm_ignored(self):
        lines = [
            atom_line(1, 1, 0.0, 0.0, 0.0, 80.0),
            atom_line(2, 1, 1.0, 1.0, 1.0, 80.0, name="CB"),
            "HETATM    3 CA    CA A   9      1.000   1.000   1.000  1.00  0.00",
            atom_line(4, 2, 3.8, 0.0, 0.0, 82.0),
        ]
        (struct,) = parse_structure_file("\n".join(lines))
        assert struct.residue_count == 2

    def test_blank_bfactor_reads_as_zero(self):
        line = atom_line(1, 1, 0.0, 0.0, 0.0, 0.0)[:60] + "      "
        (struct,) = parse_structure_file(line + "\n" + atom_line(2, 2, 3.8, 0.0, 0.0, 55.0))
        assert struct.plddt[0] == 0.0

    def test_out_of_range_bfactor_clamped(self):
        text = pdb_text([[0, 0, 0], [3.8, 0, 0]], bfactors=[150.0, -3.0])
        (struct,) = parse_structure_file(text)
        assert struct.plddt.tolist() == [100.0, 0.0]


class TestRoundTrip:
    def test_write_parse_reproduces_at_format_precision(self, rng):
        coords = helix_coords(24) + rng.normal(0, 0.2, (24, 3))
        plddt = rng.uniform(40, 99, 24)
        original = make_structure(coords, plddt, sequence="ACDEFGHIKLMNPQRSTVWYACDE")
        (parsed,) = parse_structure_file(write_structure(original))
        assert np.abs(parsed.ca_coords - original.ca_coords).max() <= 0.5e-3
        assert np.abs(parsed.plddt - original.plddt).max() <= 0.5e-2
        assert parsed.sequence == original.sequence

    def test_multi_model_roundtrip(self, rng):
        members = tuple(
            make_structure(helix_coords(10) + rng.normal(0, 0.1, (10, 3)), sid=f"m{i}")
            for i in range(4)
        )
        ensemble = Ensemble(protein_id="p", members=members)
        parsed = parse_structure_file(write_ensemble(ensemble))
        assert len(parsed) == 4
        for got, want in zip(parsed, members):
            assert np.abs(got.ca_coords - want.ca_coords).max() <= 0.5e-3


class TestLoadEnsemble:
    def test_many_single_model_files(self, tmp_path, rng):
        for i in range(5):
            coords = helix_coords(12) + rng.normal(0, 0.1, (12, 3))
            (tmp_path / f"m{i}.pdb").write_text(pdb_text(coords))
        ensemble = load_ensemble(sorted(tmp_path.glob("*.pdb")))
        assert len(ensemble) == 5
        assert ensemble.residue_count == 12

    def test_multi_model_file_with_402_models(self, tmp_path):
        block = pdb_text(helix_coords(5)).replace("END\n", "")
        text = "".join(f"MODEL     {i}\n{block}ENDMDL\n" for i in range(1, 403))
        path = tmp_path / "kaib_like.pdb"
        path.write_text(text)
        ensemble = load_ensemble([path])
        assert len(ensemble) == 402

    def test_length_mismatch_names_offending_file(self, tmp_path):
        (tmp_path / "a.pdb").write_text(pdb_text(helix_coords(10)))
        (tmp_path / "b.pdb").write_text(pdb_text(helix_coords(7)))
        with pytest.raises(EnsembleMismatchError, match="b.pdb"):
            load_ensemble([tmp_path / "a.pdb", tmp_path / "b.pdb"])

    def test_concatenation_order(self, tmp_path, rng):
        paths = []
        for i in range(4):
            p = tmp_path / f"m{i}.pdb"
            p.write_text(pdb_text(helix_coords(8) + rng.normal(0, 0.1, (8, 3))))
            paths.append(p)
        whole = load_ensemble(paths)
        first = load_ensemble(paths[:2])
        second = load_ensemble(paths[2:])
        again = first.members + second.members
        assert len(whole.members) == len(again)
        for a, b in zip(whole.members, again):
            assert np.array_equal(a.ca_coords, b.ca_coords)


class TestAlignmentDepth:
    def test_deep_alignment(self):
        text = "\n".join(f">seq{i}\nACDEFG" for i in range(4096))
        record = count_alignment_depth(text, format="fasta")
        assert record.depth == 4095
        assert record.query_length == 6

    def test_single_record(self):
        record = count_alignment_depth(">only\nACD-EF\n", format="fasta")
        assert record.depth == 0
        assert record.query_length == 5  # gap ignored

    def test_boundary_twenty_one_headers(self):
        text = "\n".join(f">s{i}\nACDEF" for i in range(21))
        assert count_alignment_depth(text, format="fasta").depth == 20

    def test_a3m_lowercase_insertions_ignored(self):
        record = count_alignment_depth(">q\nACdefGH-I\n>h\nACxxxGHAI\n", format="a3m")
        assert record.query_length == 5  # drops the def insertion and the gap

    def test_fasta_keeps_lowercase(self):
        record = count_alignment_depth(">q\nACdefGH\n", format="fasta")
        assert record.query_length == 7

    def test_no_headers_errors(self):
        with pytest.raises(ParseError):
            count_alignment_depth("ACDEF\n", format="fasta")

    def test_negative_depth_rejected(self):
        with pytest.raises(ValueError):
            AlignmentDepthRecord(protein_id="x", depth=-1, query_length=5)


class TestInvariants:
    def test_structure_validation(self):
        with pytest.raises(ValueError):
            make_structure([[0, 0, 0]])  # single residue
        with pytest.raises(ValueError):
            make_structure([[0, 0, 0], [np.inf, 0, 0]])
        with pytest.raises(ValueError):
            make_structure([[0, 0, 0], [1, 0, 0]], plddt=[50.0, 150.0])
        with pytest.raises(ValueError):
            make_structure([[0, 0, 0], [1, 0, 0]], plddt=[50.0])

    def test_ensemble_rejects_mixed_lengths(self):
        with pytest.raises(EnsembleMismatchError):
            Ensemble(
                protein_id="p",
                members=(make_structure(helix_coords(5)), make_structure(helix_coords(6))),
            )

    def test_ensemble_rejects_empty(self):
        with pytest.raises(ValueError):
            Ensemble(protein_id="p", members=())
