import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from punn.data import FIXTURES, fixture_path, load_fixture, load_sidecar
from punn.integrals import (
    FCIDUMPError,
    IntegralSet,
    emit_fcidump,
    hf_reference_energy,
    parse_fcidump,
    read_fcidump,
    write_fcidump,
)

HEADER = "&FCI NORB={norb},NELEC={nelec},MS2={ms2},\n ORBSYM={sym}\n ISYM=1,\n&END\n"


def fcidump_text(body, norb=1, nelec=2, ms2=0):
    return HEADER.format(norb=norb, nelec=nelec, ms2=ms2, sym=",".join(["1"] * norb)) + body


def single_orbital(h11, g1111, e_nuc):
    return parse_fcidump(fcidump_text(f"{g1111} 1 1 1 1\n{h11} 1 1 0 0\n{e_nuc} 0 0 0 0\n"))


def test_single_orbital_field_mapping():
    ints = parse_fcidump(fcidump_text("0.5 1 1 0 0\n0.3 1 1 1 1\n1.0 0 0 0 0\n"))
    assert ints.n_orb == 1
    assert ints.one_body[0, 0] == 0.5
    assert ints.two_body[0, 0, 0, 0] == 0.3
    assert ints.e_nuc == 1.0
    assert (ints.n_elec_alpha, ints.n_elec_beta) == (1, 1)


def test_one_body_symmetry_completion():
    ints = parse_fcidump(fcidump_text("0.2 1 2 0 0\n", norb=2))
    assert ints.one_body[0, 1] == 0.2
    assert ints.one_body[1, 0] == 0.2


def test_two_body_eightfold_completion():
    ints = parse_fcidump(fcidump_text("0.125 1 2 3 4\n", norb=4, nelec=4))
    g = ints.two_body
    for p, q, r, s in [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]:
        assert g[p, q, r, s] == 0.125
    assert np.count_nonzero(g) == 8


def test_accepts_text_stream():
    text = fcidump_text("0.5 1 1 0 0\n")
    assert parse_fcidump(io.StringIO(text)).one_body[0, 0] == 0.5


@pytest.mark.parametrize(
    ("h11", "g", "e_nuc", "expected"),
    [(-1.0, 0.5, 0.7, -0.8), (0.0, 0.0, 2.0, 2.0), (-0.25, 0.0, 0.0, -0.5)],
)
def test_hf_energy_single_orbital(h11, g, e_nuc, expected):
    assert hf_reference_energy(single_orbital(h11, g, e_nuc)) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("name", FIXTURES)
def test_hf_energy_matches_sidecar_scf(name):
    assert hf_reference_energy(load_fixture(name)) == pytest.approx(load_sidecar(name)["scf_energy"], abs=1e-8)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_round_trip_is_bit_exact(name):
    ints = load_fixture(name)
    again = parse_fcidump(emit_fcidump(ints))
    assert again.n_orb == ints.n_orb
    assert again.e_nuc == ints.e_nuc
    assert np.array_equal(again.one_body, ints.one_body)
    assert np.array_equal(again.two_body, ints.two_body)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_invariants(name):
    ints = load_fixture(name)
    h, g = ints.one_body, ints.two_body
    assert np.abs(h - h.T).max() <= 1e-12
    for perm in [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]:
        assert np.abs(g - g.transpose(perm)).max() <= 1e-12
    assert ints.n_elec <= 2 * ints.n_orb
    assert ints.is_closed_shell


def test_write_and_read_file(tmp_path, h4):
    path = tmp_path / "h4.fcidump"
    write_fcidump(h4, path)
    again = read_fcidump(path)
    assert np.array_equal(again.two_body, h4.two_body)


def test_hf_energy_invariant_under_line_order():
    text = fixture_path("h4_chain_1.0").read_text()
    head, body = text.split("&END\n", 1)
    lines = body.strip().splitlines()
    rng = np.random.default_rng(7)
    shuffled = head + "&END\n" + "\n".join(lines[i] for i in rng.permutation(len(lines))) + "\n"
    assert hf_reference_energy(parse_fcidump(shuffled)) == pytest.approx(
        hf_reference_energy(parse_fcidump(text)), abs=1e-12)


@given(
    h=st.lists(st.floats(-2, 2), min_size=3, max_size=3),
    g=st.lists(st.floats(-1, 1), min_size=6, max_size=6),
    e_nuc=st.floats(-5, 5),
)
def test_parse_emit_parse_identity(h, g, e_nuc):
    body = [f"{e_nuc!r} 0 0 0 0", f"{h[0]!r} 1 1 0 0", f"{h[1]!r} 2 1 0 0", f"{h[2]!r} 2 2 0 0"]
    quads = [(1, 1, 1, 1), (2, 2, 2, 2), (1, 1, 2, 2), (2, 1, 2, 1), (2, 1, 1, 1), (2, 2, 2, 1)]
    body += [f"{v!r} {a} {b} {c} {d}" for v, (a, b, c, d) in zip(g, quads)]
    first = parse_fcidump(fcidump_text("\n".join(body) + "\n", norb=2))
    second = parse_fcidump(emit_fcidump(first))
    assert np.array_equal(first.one_body, second.one_body)
    assert np.array_equal(first.two_body, second.two_body)
    assert first.e_nuc == second.e_nuc


@pytest.mark.parametrize(
    ("text", "line"),
    [
        (fcidump_text("0.5 1 1 0\n"), 5),
        (fcidump_text("0.5 1 1 0 0\nabc 1 1 0 0\n"), 6),
        (fcidump_text("0.5 3 1 0 0\n"), 5),
        ("&FCI NORB=1,NELEC=2\n", 1),
        ("NORB=1\n&END\n", 1),
    ],
)
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(FCIDUMPError) as err:
        parse_fcidump(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_integral_set_rejects_asymmetric_one_body():
    with pytest.raises(ValueError, match="symmetric"):
        IntegralSet(2, 1, 1, 0.0, np.array([[0.0, 1.0], [0.0, 0.0]]), np.zeros((2, 2, 2, 2)))


def test_open_shell_has_no_hf_reference():
    ints = parse_fcidump(fcidump_text("0.5 1 1 0 0\n", norb=2, nelec=1, ms2=1))
    with pytest.raises(ValueError, match="open-shell"):
        hf_reference_energy(ints)
