#!/usr/bin/env python3
"""Regenerate the FCIDUMP fixtures shipped in ``src/punn/data``.

Needs PySCF, which is *not* a runtime dependency of the package::

    pip install pyscf
    python scripts/make_fixtures.py

Each fixture gets a JSON sidecar with the geometry, basis, frozen orbitals and
the SCF/FCI energies computed here.
"""
import json
from pathlib import Path

import numpy as np
from pyscf import ao2mo, fci, gto, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "punn" / "data"


def chain(n, d):
    return [("H", (0.0, 0.0, i * d)) for i in range(n)]


def cube(d):
    return [("H", (x * d, y * d, z * d)) for x in (0, 1) for y in (0, 1) for z in (0, 1)]


FIXTURES = {
    "h4_chain_1.0": dict(atom=chain(4, 1.0), charge=0, d=1.0, shape="linear chain"),
    "h6_chain_1.0": dict(atom=chain(6, 1.0), charge=0, d=1.0, shape="linear chain"),
    "h8_cube_2.5": dict(atom=cube(2.5), charge=0, d=2.5, shape="cube"),
}


def run_scf(mol):
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-12
    mf.max_cycle = 500
    mf.kernel()
    if not mf.converged:
        mf = mf.newton()
        mf.kernel()
    # second-order polish removes saddle points the DIIS run may land on
    mo1 = mf.stability()[0]
    if not np.allclose(mo1, mf.mo_coeff):
        dm = mf.make_rdm1(mo1, mf.mo_occ)
        mf.kernel(dm)
    assert mf.converged, "SCF did not converge"
    return mf


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, geom in FIXTURES.items():
        mol = gto.M(atom=geom["atom"], basis="sto-3g", charge=geom["charge"],
                    unit="Angstrom", verbose=0, symmetry=False)
        mf = run_scf(mol)
        c = mf.mo_coeff
        norb = c.shape[1]
        h1 = c.T @ mf.get_hcore() @ c
        eri = ao2mo.restore(1, ao2mo.kernel(mol, c), norb)
        nelec = mol.nelectron
        path = OUT / f"{name}.fcidump"
        fcidump.from_integrals(str(path), h1, eri, norb, nelec,
                               nuc=mol.energy_nuc(), ms=0, tol=1e-15)
        cis = fci.direct_spin1.FCI()
        cis.conv_tol = 1e-13
        cis.max_cycle = 300
        cis.max_space = 40
        # single-root Davidson can settle on an excited root for symmetric geometries
        roots, _ = cis.kernel(h1, eri, norb, nelec, ecore=mol.energy_nuc(), nroots=6)
        e_fci = min(roots)
        sidecar = {
            "name": name,
            "geometry_angstrom": [[a, list(xyz)] for a, xyz in geom["atom"]],
            "shape": geom["shape"],
            "bond_length_angstrom": geom["d"],
            "charge": geom["charge"],
            "basis": "sto-3g",
            "frozen_orbitals": [],
            "n_orb": norb,
            "n_elec": nelec,
            "scf_energy": float(mf.e_tot),
            "fci_energy": float(e_fci),
            "generator": "pyscf",
        }
        (OUT / f"{name}.json").write_text(json.dumps(sidecar, indent=2) + "\n")
        print(f"{name}: norb={norb} E_scf={mf.e_tot:.10f} E_fci={e_fci:.10f}")


if __name__ == "__main__":
    main()
