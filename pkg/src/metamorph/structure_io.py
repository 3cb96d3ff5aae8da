"""Read and write coordinate files and sequence alignments.

Structures are reduced to their C-alpha trace at parse time: every
similarity metric downstream (RMSD, TMscore, RMSF, contact maps) is
defined over residue-level positions, so side-chain atoms carry no
feature-relevant information. Per-residue confidence (pLDDT) is read
from the B-factor column, the convention used by AlphaFold-style
predictors; files without meaningful B-factors flow through as
low-confidence structures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EnsembleMismatchError, ParseError

THREE_TO_ONE = {
    "ALA": "A", "ARG": "R", "ASN": "N", "ASP": "D", "CYS": "C",
    "GLN": "Q", "GLU": "E", "GLY": "G", "HIS": "H", "ILE": "I",
    "LEU": "L", "LYS": "K", "MET": "M", "PHE": "F", "PRO": "P",
    "SER": "S", "THR": "T", "TRP": "W", "TYR": "Y", "VAL": "V",
}
ONE_TO_THREE = {one: three for three, one in THREE_TO_ONE.items()}


@dataclass(frozen=True)
class Structure:
    """One conformation: an ordered C-alpha trace with per-residue confidence.

    Attributes:
        id: identifier (e.g. file stem plus model number).
        ca_coords: (L, 3) float array of C-alpha positions in Angstroms.
        plddt: (L,) float array of per-residue confidence in [0, 100].
        sequence: optional one-letter amino-acid string of length L.
    """

    id: str
    ca_coords: np.ndarray
    plddt: np.ndarray
    sequence: Optional[str] = None

    def __post_init__(self):
        coords = np.asarray(self.ca_coords, dtype=float)
        plddt = np.asarray(self.plddt, dtype=float)
        if coords.ndim != 2 or coords.shape[1] != 3:
            raise ValueError(f"ca_coords must be (L, 3), got {coords.shape}")
        if coords.shape[0] < 2:
            raise ValueError("a structure needs at least 2 residues")
        if plddt.shape != (coords.shape[0],):
            raise ValueError("plddt length must match residue count")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        if np.any(plddt < 0.0) or np.any(plddt > 100.0):
            raise ValueError("plddt values must lie in [0, 100]")
        if self.sequence is not None and len(self.sequence) != coords.shape[0]:
            raise ValueError("sequence length must match residue count")
        coords.setflags(write=False)
        plddt.setflags(write=False)
        object.__setattr__(self, "ca_coords", coords)
        object.__setattr__(self, "plddt", plddt)

    @property
    def residue_count(self) -> int:
        return self.ca_coords.shape[0]

    @property
    def mean_plddt(self) -> float:
        return float(self.plddt.mean())


@dataclass(frozen=True)
class Ensemble:
    """A set of same-length conformations of one protein.

    Residue correspondence across members is positional: all members
    come from one predictor run on one sequence.
    """

    protein_id: str
    members: tuple[Structure, ...] = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("an ensemble needs at least one member")
        length = members[0].residue_count
        for m in members[1:]:
            if m.residue_count != length:
                raise EnsembleMismatchError(
                    f"{self.protein_id}: member {m.id!r} has {m.residue_count} "
                    f"residues, expected {length}"
                )
        object.__setattr__(self, "members", members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def residue_count(self) -> int:
        return self.members[0].residue_count

    def coords_array(self) -> np.ndarray:
        """Stack member coordinates into an (n_members, L, 3) array."""
        return np.stack([m.ca_coords for m in self.members])


@dataclass(frozen=True)
class AlignmentDepthRecord:
    """Summary of a multiple sequence alignment: its depth and query length."""

    protein_id: str
    depth: int
    query_length: int

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("alignment depth cannot be negative")
        if self.query_length < 1:
            raise ValueError("query length must be positive")


def _parse_float(text: str, line_number: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"malformed {what} field {text.strip()!r}", line_number) from None


def parse_structure_file(text: str | bytes, id_prefix: str = "structure") -> list[Structure]:
    """Parse fixed-column PDB text into one Structure per MODEL block.

    Only C-alpha ATOM records are kept, ordered by residue sequence
    number; the first occurrence wins when a residue carries duplicate
    C-alpha records (a warning is emitted). Alternate-location
    indicators other than blank or 'A' are skipped. The B-factor column
    is stored as pLDDT, clamped into [0, 100]; a blank B-factor reads
    as 0 (lowest confidence).

    Raises:
        ParseError: on a malformed numeric field (with its line number)
            or when a model contains no C-alpha atoms.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")

    structures: list[Structure] = []
    # residue seq number -> (coords, bfactor, resname); insertion order irrelevant
    residues: dict[int, tuple[tuple[float, float, float], float, str]] = {}
    saw_model = False
    model_label = ""

    def flush(line_number: int):
        if not residues:
            raise ParseError(
                f"no C-alpha atoms found in {id_prefix}{model_label}", line_number
            )
        order = sorted(residues)
        coords = np.array([residues[r][0] for r in order], dtype=float)
        plddt = np.clip(np.array([residues[r][1] for r in order], dtype=float), 0.0, 100.0)
        seq = "".join(THREE_TO_ONE.get(residues[r][2], "X") for r in order)
        structures.append(
            Structure(id=f"{id_prefix}{model_label}", ca_coords=coords, plddt=plddt, sequence=seq)
        )
        residues.clear()

    last_line = 0
    for line_number, line in enumerate(text.splitlines(), start=1):
        last_line = line_number
        record = line[:6]
        if record.startswith("MODEL"):
            saw_model = True
            if residues:
                flush(line_number)
            model_label = f"/model{line[10:14].strip() or len(structures) + 1}"
        elif record == "ENDMDL":
            flush(line_number)
        elif record == "ATOM  ":
            name = line[12:16].strip()
            if name != "CA":
                continue
            alt_loc = line[16:17]
            if alt_loc not in (" ", "", "A"):
                continue
            try:
                res_seq = int(line[22:26])
            except ValueError:
                raise ParseError(
                    f"malformed residue number field {line[22:26].strip()!r}", line_number
                ) from None
            x = _parse_float(line[30:38], line_number, "x coordinate")
            y = _parse_float(line[38:46], line_number, "y coordinate")
            z = _parse_float(line[46:54], line_number, "z coordinate")
            b_text = line[60:66]
            bfactor = 0.0 if not b_text.strip() else _parse_float(b_text, line_number, "B-factor")
            if res_seq in residues:
                warnings.warn(
                    f"{id_prefix}: duplicate C-alpha for residue {res_seq} on line "
                    f"{line_number}; keeping the first",
                    stacklevel=2,
                )
                continue
            residues[res_seq] = ((x, y, z), bfactor, line[17:20].strip())

    if residues or not structures:
        if not saw_model:
            model_label = ""
        flush(last_line)
    return structures


def parse_structure_path(path: str | Path) -> list[Structure]:
    """Parse a coordinate file from disk, naming structures after the file stem."""
    path = Path(path)
    return parse_structure_file(path.read_text(), id_prefix=path.stem)


def write_structure(struct: Structure) -> str:
    """Render a Structure as fixed-column PDB ATOM records.

    Coordinates keep 3 decimal places and pLDDT (B-factor column) 2,
    the precision of the format; a write/parse round trip reproduces
    them at that precision.
    """
    lines = []
    for i in range(struct.residue_count):
        res_name = "UNK"
        if struct.sequence is not None:
            res_name = ONE_TO_THREE.get(struct.sequence[i], "UNK")
        x, y, z = struct.ca_coords[i]
        lines.append(
            f"ATOM  {i + 1:>5}  CA  {res_name:>3} A{i + 1:>4}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{struct.plddt[i]:6.2f}"
        )
    return "\n".join(lines) + "\n"


def write_ensemble(ensemble: Ensemble) -> str:
    """Render an Ensemble as a multi-model fixed-column PDB document."""
    blocks = []
    for i, member in enumerate(ensemble.members, start=1):
        blocks.append(f"MODEL     {i:>4}\n{write_structure(member)}ENDMDL")
    return "\n".join(blocks) + "\nEND\n"


def load_ensemble(paths: Sequence[str | Path], protein_id: Optional[str] = None) -> Ensemble:
    """Assemble an Ensemble from coordinate files, concatenated in input order.

    Multi-model files contribute all their models. Every structure must
    share the same residue count.

    Raises:
        EnsembleMismatchError: naming the offending file on a length mismatch.
    """
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValueError("no input files given")
    if protein_id is None:
        protein_id = paths[0].stem
    members: list[Structure] = []
    length: Optional[int] = None
    for path in paths:
        for struct in parse_structure_path(path):
            if length is None:
                length = struct.residue_count
            elif struct.residue_count != length:
                raise EnsembleMismatchError(
                    f"{path}: structure {struct.id!r} has {struct.residue_count} "
                    f"residues, expected {length}"
                )
            members.append(struct)
    return Ensemble(protein_id=protein_id, members=tuple(members))


def load_ensemble_dir(directory: str | Path, protein_id: Optional[str] = None) -> Ensemble:
    """Load every coordinate file in a directory (sorted by name) as one ensemble."""
    directory = Path(directory)
    paths = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in (".pdb", ".ent", ".txt")
    )
    if not paths:
        raise ParseError(f"no coordinate files found in {directory}")
    return load_ensemble(paths, protein_id=protein_id or directory.name)


def count_alignment_depth(
    text: str | bytes, format: str = "fasta", protein_id: str = "query"
) -> AlignmentDepthRecord:
    """Count homologs in a FASTA or A3M alignment.

    Depth is the number of non-query records (headers minus one). The
    query length comes from the first sequence, ignoring gap characters
    and, for A3M, lowercase insertion columns.

    Raises:
        ParseError: when the file holds no '>' headers.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    fmt = format.lower()
    if fmt not in ("fasta", "a3m"):
        raise ValueError(f"unknown alignment format {format!r}")

    n_headers = 0
    query_chunks: list[str] = []
    for line in text.splitlines():
        if line.startswith(">"):
            n_headers += 1
            continue
        if n_headers == 1:
            query_chunks.append(line.strip())
    if n_headers == 0:
        raise ParseError("no sequence headers found in alignment")

    query = "".join(query_chunks)
    query = query.replace("-", "").replace(".", "")
    if fmt == "a3m":
        query = "".join(c for c in query if not c.islower())
    if not query:
        raise ParseError("query sequence is empty")
    return AlignmentDepthRecord(protein_id=protein_id, depth=n_headers - 1, query_length=len(query))


def alignment_format_for(path: str | Path) -> str:
    """Infer alignment format from a file extension (.a3m vs FASTA)."""
    return "a3m" if Path(path).suffix.lower() == ".a3m" else "fasta"


def iter_ensemble_entries(directory: str | Path) -> Iterable[tuple[str, Path]]:
    """Yield (protein_id, path) for each ensemble entry in a directory.

    A coordinate file is one protein (all its models); a subdirectory is
    one protein built from every coordinate file inside it.
    """
    directory = Path(directory)
    for entry in sorted(directory.iterdir()):
        if entry.is_dir():
            yield entry.name, entry
        elif entry.suffix.lower() in (".pdb", ".ent"):
            yield entry.stem, entry


def load_ensemble_entry(entry: Path, protein_id: str) -> Ensemble:
    """Load one directory entry (file or subdirectory) as an ensemble."""
    if entry.is_dir():
        return load_ensemble_dir(entry, protein_id=protein_id)
    return load_ensemble([entry], protein_id=protein_id)
