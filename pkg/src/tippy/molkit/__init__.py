"""SMILES parsing, molecular properties, name lookup, rendering, and
property-guided generation."""

from .parser import Atom, Bond, Molecule, parse_smiles, to_smiles
from .properties import MoleculeInfo, molecule_info, molecule_info_from_smiles
from .names import smiles_from_molecule_name
from .svg import generate_smiles_image
from .generate import ScoreSpec, molmim_generate

__all__ = [
    "Atom", "Bond", "Molecule", "parse_smiles", "to_smiles",
    "MoleculeInfo", "molecule_info", "molecule_info_from_smiles",
    "smiles_from_molecule_name", "generate_smiles_image",
    "ScoreSpec", "molmim_generate",
]
