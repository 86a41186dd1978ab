import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlist_cases import HEADER, MALFORMED, random_document
from portsolve.circuit import Inverse, Leaf, Sum, effective_relation_linear
from portsolve.netlist import (
    ArityError,
    ConstDrive,
    CsvDrive,
    GainDef,
    MixedTopology,
    NetlistDocument,
    NetlistError,
    Ref,
    SinDrive,
    SolverSettings,
    Space,
    build_config,
    build_drive,
    build_mixed,
    build_tree,
    element_roles,
    load,
    parse,
    print_document,
)
from portsolve.operators import Gain, Lti, Negated, cubic
from portsolve.signal import Signal, write_csv
from portsolve.splitting import Sinusoid

THREE_ELEMENT = """space N=4 T=1
solver alpha=0.1 eps=1e-6 maxiter=1000
element m1: gain 1
element m2: gain 1
element m3: gain 1
tree series(m1, parallel(m2, m3))
drive const 3
"""

VDP = """# van der Pol oscillator
space N=5000 T=7.0963   # period from the ODE
solver alpha=0.05 eps=0.01 maxiter=10000
element a1: tf num=1,0,1 den=1,0
element a2: cubic 1.5
element g: gain 1.5
element b: neg g
mixed a1=a1 a2=a2 b=b
drive zero
"""


class TestParse:
    def test_three_element(self):
        doc = parse(THREE_ELEMENT)
        assert doc.space == Space(4, 1.0)
        assert doc.solver == SolverSettings((0.1,), 1e-6, 1000)
        assert doc.drive == ConstDrive(3.0)
        expected = Sum((Leaf(Gain(1.0)), Inverse(Sum((Inverse(Leaf(Gain(1.0))), Inverse(Leaf(Gain(1.0))))))))
        assert build_tree(doc) == expected

    def test_single_leaf(self):
        doc = parse(HEADER + "element a: gain 2\ntree a\ndrive zero\n")
        assert doc.topology == Ref("a")
        assert build_tree(doc) == Leaf(Gain(2.0))

    def test_series_of_one(self):
        with pytest.raises(ArityError):
            parse(HEADER + "element m1: gain 1\ntree series(m1)\ndrive zero\n")

    def test_vdp(self):
        doc = parse(VDP)
        assert doc.topology == MixedTopology("a1", "a2", "b")
        p = build_mixed(doc)
        assert p.a1 == Lti((1, 0, 1), (1, 0))
        assert p.b == Gain(1.5)
        assert p.a2.label == cubic(1.5).label
        assert p.grid == (5000, 7.0963)
        assert parse(print_document(doc)) == doc

    def test_multiple_alphas(self):
        doc = parse("space N=4 T=1\nsolver alpha=0.1 alpha=0.2 eps=1e-6 maxiter=3\n"
                    "element a: gain 1\ntree a\ndrive zero\n")
        assert doc.solver.alphas == (0.1, 0.2)
        assert build_config(doc).alphas == (0.1, 0.2)

    def test_parallel_resistor_algebra(self):
        doc = parse(HEADER + "element a: gain 2\nelement b: gain 3\ntree parallel(a, b)\ndrive zero\n")
        assert effective_relation_linear(build_tree(doc)) == pytest.approx(2 * 3 / (2 + 3))

    def test_csv_path_forms(self):
        doc = parse(HEADER + 'element a: gain 1\ntree a\ndrive csv "my dir/x.csv"\n')
        assert doc.drive == CsvDrive("my dir/x.csv")
        doc = parse(HEADER + "element a: gain 1\ntree a\ndrive csv data/x.csv\n")
        assert doc.drive == CsvDrive("data/x.csv")

    @pytest.mark.parametrize("text,cls,line,col", MALFORMED, ids=[f"case{i}" for i in range(len(MALFORMED))])
    def test_malformed_positioned(self, text, cls, line, col):
        with pytest.raises(cls) as info:
            parse(text)
        err = info.value
        assert (err.line, err.column) == (line, col)
        lines = text.split("\n")
        assert 1 <= err.line <= max(len(lines), 1)
        assert f"line {line}, column {col}" in str(err)

    def test_undefined_diagnostic_names_identifier(self):
        with pytest.raises(NetlistError, match="'zz'"):
            parse(HEADER + "element a: gain 1\ntree series(a, zz)\ndrive zero\n")


class TestRoundTrip:
    def test_three_element(self):
        doc = parse(THREE_ELEMENT)
        assert parse(print_document(doc)) == doc

    def test_print_is_canonical(self):
        text = print_document(parse(THREE_ELEMENT))
        assert print_document(parse(text)) == text

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_random_documents(self, seed):
        doc = random_document(np.random.default_rng(seed))
        assert parse(print_document(doc)) == doc

    def test_construction_rejects_bad_documents(self):
        sp, so = Space(4, 1.0), SolverSettings((0.1,), 1e-3, 10)
        with pytest.raises(ArityError):
            NetlistDocument(sp, so, (), Ref("a"), ConstDrive(1.0))
        with pytest.raises(NetlistError):
            NetlistDocument(sp, so, (("tree", GainDef(1.0)),), Ref("tree"), ConstDrive(1.0))
        with pytest.raises(NetlistError):
            NetlistDocument(sp, so, (("a", GainDef(1.0)),), Ref("b"), ConstDrive(1.0))


class TestBuilders:
    def test_drives(self, tmp_path):
        doc = parse(HEADER.replace("N=4", "N=8") + "element a: gain 1\ntree a\ndrive sin 2 3\n")
        d = build_drive(doc)
        np.testing.assert_allclose(d.samples, 2 * np.sin(2 * np.pi * 3 * np.arange(8) / 8), atol=1e-15)
        assert doc.drive == SinDrive(2.0, 3.0)
        write_csv(tmp_path / "in.csv", Signal(np.arange(4.0), 1.0))
        doc = parse(HEADER + "element a: gain 1\ntree a\ndrive csv in.csv\n")
        np.testing.assert_array_equal(build_drive(doc, tmp_path).samples, np.arange(4.0))

    def test_csv_grid_mismatch(self, tmp_path):
        write_csv(tmp_path / "in.csv", Signal(np.arange(5.0), 1.0))
        doc = parse(HEADER + "element a: gain 1\ntree a\ndrive csv in.csv\n")
        with pytest.raises(NetlistError):
            build_drive(doc, tmp_path)

    def test_config_defaults(self):
        assert build_config(parse(THREE_ELEMENT)).init == "zero"
        assert build_config(parse(VDP)).init == Sinusoid(2.0)

    def test_roles(self):
        assert element_roles(parse(VDP)) == {"a1": "monotone", "a2": "monotone", "g": "unused",
                                             "b": "anti-monotone"}
        assert set(element_roles(parse(THREE_ELEMENT)).values()) == {"monotone"}

    def test_neg_tree_leaf(self):
        doc = parse(HEADER + "element g: gain 1\nelement n: neg g\ntree series(g, n)\ndrive zero\n")
        assert build_tree(doc) == Sum((Leaf(Gain(1.0)), Leaf(Negated(Gain(1.0)))))

    def test_load(self, tmp_path):
        p = tmp_path / "c.msn"
        p.write_text(THREE_ELEMENT)
        assert load(p) == parse(THREE_ELEMENT)
