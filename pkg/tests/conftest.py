"""Shared test helpers: archetype builders and hand-rolled PDB text."""

from __future__ import annotations

import numpy as np
import pytest

from metamorph.structure_io import Structure


def helix_coords(length, handed=1.0):
    angles = handed * np.deg2rad(100.0) * np.arange(length)
    return np.column_stack(
        [2.3 * np.cos(angles), 2.3 * np.sin(angles), 1.5 * np.arange(length)]
    )


def strand_coords(length):
    return np.column_stack(
        [3.8 * np.arange(length), np.zeros(length), np.zeros(length)]
    )


def rotation_z(degrees):
    r = np.deg2rad(degrees)
    return np.array(
        [[np.cos(r), -np.sin(r), 0.0], [np.sin(r), np.cos(r), 0.0], [0.0, 0.0, 1.0]]
    )


def rotation_general(a, b, c):
    rz = rotation_z(np.rad2deg(a))
    ry = np.array(
        [[np.cos(b), 0.0, np.sin(b)], [0.0, 1.0, 0.0], [-np.sin(b), 0.0, np.cos(b)]]
    )
    return rz @ ry @ rotation_z(np.rad2deg(c))


def make_structure(coords, plddt=None, sid="s", sequence=None):
    coords = np.asarray(coords, float)
    if plddt is None:
        plddt = np.full(len(coords), 90.0)
    return Structure(id=sid, ca_coords=coords, plddt=np.asarray(plddt, float), sequence=sequence)


def atom_line(serial, res_seq, x, y, z, bfactor, name="CA", alt_loc=" ", res_name="ALA"):
    """One fixed-column ATOM record built by hand (independent of the writer)."""
    return (
        f"ATOM  {serial:>5} {name:^4}{alt_loc}{res_name:>3} A{res_seq:>4}    "
        f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{bfactor:6.2f}"
    )


def pdb_text(coords, bfactors=None, res_seqs=None):
    coords = np.asarray(coords, float)
    if bfactors is None:
        bfactors = [90.0] * len(coords)
    if res_seqs is None:
        res_seqs = range(1, len(coords) + 1)
    lines = [
        atom_line(i + 1, rs, *coords[i], bfactors[i]) for i, rs in enumerate(res_seqs)
    ]
    return "\n".join(lines) + "\nEND\n"


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
