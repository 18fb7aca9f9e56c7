import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqweak import circuitio
from seqweak.circuitio import (CircuitDocument, ParseError, builtin_document_path,
                               format_complex, format_float, load, parse,
                               parse_complex, serialize)
from seqweak.circuitmodel import builtin_double_interferometer

BASIC = """\
wseq 1
dim 2
state 1+0i 0+0i
unitary H
0.70710678118654746+0i 0.70710678118654746+0i
0.70710678118654746+0i -0.70710678118654746+0i
observe Z
1+0i 0+0i
0+0i -1+0i
postselect 0+0i 1+0i
"""


def test_parse_basic_document():
    doc = parse(BASIC)
    assert doc.dim == 2
    c = doc.to_circuit()
    assert c.n == 1
    assert np.allclose(c.observable(1), np.diag([1.0, -1.0]))
    # trailing observe implies an identity final evolution
    assert np.allclose(c.u_final, np.eye(2))


def test_serialize_parse_fixpoint():
    doc = parse(BASIC)
    text = serialize(doc)
    assert serialize(parse(text)) == text
    assert parse(text) == doc


def test_comments_and_blank_lines_ignored():
    text = BASIC.replace("dim 2", "# a comment\n\ndim 2  # trailing")
    assert parse(text) == parse(BASIC)


def test_proj_sugar():
    text = BASIC.replace("observe Z\n1+0i 0+0i\n0+0i -1+0i", "observe Z\nproj 0")
    doc = parse(text)
    st_obs = doc.stanzas[-1]
    assert st_obs.proj == (0,)
    assert np.allclose(st_obs.matrix, np.diag([1.0, 0.0]))
    # proj form survives serialization
    assert "proj 0" in serialize(doc)


def test_full_directive_set(tmp_path):
    q = np.linspace(-12, 12, 512)
    phi = np.exp(-q**2 / 4)
    lines = [f"{qi} {p} 0.0" for qi, p in zip(q, phi)]
    (tmp_path / "prof.dat").write_text("\n".join(lines) + "\n")
    proj_doc = BASIC.replace("observe Z\n1+0i 0+0i\n0+0i -1+0i",
                             "observe P0\nproj 0")
    text = proj_doc + "pointer tabulated prof.dat\ng 0.05\ninsert P0\n"
    doc = parse(text, base_dir=tmp_path)
    assert doc.pointer.kind == "tabulated"
    assert doc.g == 0.05
    assert doc.insertions == ("P0",)
    ins = doc.insertion_set()
    assert ins.sites == (1,)


def test_gaussian_pointer_roundtrip():
    text = BASIC + "pointer gaussian sigma=0.5 qoffset=0.25\n"
    doc = parse(text)
    assert doc.pointer.sigma == 0.5
    assert doc.pointer.q_offset == 0.25
    out = serialize(doc)
    assert "pointer gaussian sigma=0.5 qoffset=0.25" in out
    assert serialize(parse(out)) == out
    # zero offsets are canonicalized away
    doc2 = parse(BASIC + "pointer gaussian sigma=1 qoffset=0\n")
    assert "qoffset" not in serialize(doc2)


@pytest.mark.parametrize("mutation,kind", [
    (("state 1+0i 0+0i", "state 1+0i"), "DimMismatch"),
    (("state 1+0i 0+0i", "state 1+0i zebra"), "BadComplexLiteral"),
    (("0.70710678118654746+0i -0.70710678118654746+0i",
      "0.9+0i -0.9+0i"), "NonUnitary"),
    (("observe Z\n1+0i 0+0i\n0+0i -1+0i",
      "observe Z\n0+0i 1+0i\n0+0i 0+0i"), "NonHermitian"),
    (("observe Z", "frobnicate Z"), "UnknownDirective"),
    (("observe Z", "observe Y\nproj 1\nobserve Z"),
     "DuplicateObserveAtBoundary"),
])
def test_diagnostics(mutation, kind):
    old, new = mutation
    with pytest.raises(ParseError) as err:
        parse(BASIC.replace(old, new))
    assert err.value.kind == kind
    assert err.value.line > 0


def test_error_requires_dim_first():
    with pytest.raises(ParseError):
        parse("wseq 1\nstate 1+0i 0+0i\n")


def test_error_observe_before_unitary():
    with pytest.raises(ParseError) as err:
        parse("wseq 1\ndim 2\nstate 1+0i 0+0i\nobserve Z\nproj 0\n"
              "postselect 0+0i 1+0i\n")
    assert err.value.kind == "UnknownDirective"


def test_error_unknown_insert_name():
    with pytest.raises(ParseError, match="unknown observe"):
        parse(BASIC + "insert Q\n")


def test_error_missing_sections():
    with pytest.raises(ParseError):
        parse("wseq 1\ndim 2\nstate 1+0i 0+0i\n")


def test_error_bad_version():
    with pytest.raises(ParseError):
        parse("wseq 9\n" + BASIC.split("\n", 1)[1])


def test_parse_complex_forms():
    assert parse_complex("1.5", 1) == 1.5
    assert parse_complex("-2e-3+0.5i", 1) == complex(-2e-3, 0.5)
    assert parse_complex("1-1i", 1) == complex(1, -1)
    for bad in ("1 + 2i", "i", "1+i", "2i", "abc"):
        with pytest.raises(ParseError):
            parse_complex(bad, 1)


@given(st.complex_numbers(allow_nan=False, allow_infinity=False,
                          max_magnitude=1e12))
@settings(max_examples=200, deadline=None)
def test_complex_formatting_roundtrips_exactly(z):
    assert parse_complex(format_complex(z), 0) == z


@given(st.floats(allow_nan=False, allow_infinity=False))
@settings(max_examples=200, deadline=None)
def test_float_formatting_roundtrips_exactly(x):
    assert float(format_float(x)) == x


def test_shipped_document_matches_builtin():
    doc = load(builtin_document_path())
    builtin = builtin_double_interferometer()
    c = doc.to_circuit()
    assert c.dim == builtin.dim and c.n == builtin.n
    assert np.array_equal(c.psi_i, builtin.psi_i)
    assert np.array_equal(c.psi_f, builtin.psi_f)
    assert np.array_equal(c.u_final, builtin.u_final)
    for (u1, a1), (u2, a2) in zip(c.stages, builtin.stages):
        assert np.array_equal(u1, u2)
        assert np.array_equal(a1, a2)
    assert doc.insertion_set().sites == (1, 2)
    assert doc.g == 0.001
    assert doc.pointer.sigma == 1.0


def test_shipped_document_roundtrip_fixpoint():
    path = builtin_document_path()
    text = path.read_text()
    assert serialize(parse(text, base_dir=path.parent)) == text
