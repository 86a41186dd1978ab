"""Plain-text netlists (``.msn`` files) for port circuits and mixed problems.

Example::

    space N=4 T=1
    solver alpha=0.1 eps=1e-6 maxiter=1000
    element m1: gain 1
    element m2: gain 1
    element m3: gain 1
    tree series(m1, parallel(m2, m3))
    drive const 3

``series`` is a sum of impedances and ``parallel(x, y, ...)`` is
``Inverse(Sum[Inverse(x), Inverse(y), ...])``.  A ``mixed a1=.. a2=.. b=..``
topology names the two monotone paths and the anti-monotone path of a
parallel mixed-monotone circuit; the solver subtracts ``B = -b``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from portsolve import circuit as ckt
from portsolve import operators as ops
from portsolve.errors import PortsolveError
from portsolve.signal import Signal, read_csv
from portsolve.splitting import Sinusoid, SolverConfig

__all__ = [
    "NetlistError",
    "NetlistSyntaxError",
    "UndefinedName",
    "DuplicateName",
    "ArityError",
    "GainDef",
    "CubicDef",
    "TfDef",
    "NegDef",
    "Ref",
    "Series",
    "Parallel",
    "MixedTopology",
    "ZeroDrive",
    "ConstDrive",
    "SinDrive",
    "CsvDrive",
    "Space",
    "SolverSettings",
    "NetlistDocument",
    "parse",
    "load",
    "print_document",
    "build_operator",
    "build_tree",
    "build_mixed",
    "build_drive",
    "build_config",
    "element_roles",
]

RESERVED = frozenset({"space", "solver", "element", "tree", "mixed", "drive", "series", "parallel"})
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class NetlistError(PortsolveError, ValueError):
    """A netlist problem, positioned at ``line``/``column`` (1-based) when known."""

    def __init__(self, message, line=None, column=None, expected=()):
        self.message = message
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class NetlistSyntaxError(NetlistError):
    pass


class UndefinedName(NetlistError):
    pass


class DuplicateName(NetlistError):
    pass


class ArityError(NetlistError):
    pass


# document model

@dataclass(frozen=True)
class GainDef:
    value: float


@dataclass(frozen=True)
class CubicDef:
    mu: float


@dataclass(frozen=True)
class TfDef:
    num: tuple
    den: tuple


@dataclass(frozen=True)
class NegDef:
    ref: str


ElementDef = Union[GainDef, CubicDef, TfDef, NegDef]


@dataclass(frozen=True)
class Ref:
    name: str


@dataclass(frozen=True)
class Series:
    children: tuple


@dataclass(frozen=True)
class Parallel:
    children: tuple


TreeExpr = Union[Ref, Series, Parallel]


@dataclass(frozen=True)
class MixedTopology:
    a1: str
    a2: str
    b: str


@dataclass(frozen=True)
class ZeroDrive:
    pass


@dataclass(frozen=True)
class ConstDrive:
    value: float


@dataclass(frozen=True)
class SinDrive:
    amplitude: float
    frequency: float


@dataclass(frozen=True)
class CsvDrive:
    path: str


DriveSpec = Union[ZeroDrive, ConstDrive, SinDrive, CsvDrive]


@dataclass(frozen=True)
class Space:
    n: int
    period_T: float


@dataclass(frozen=True)
class SolverSettings:
    alphas: tuple
    eps: float
    maxiter: int


@dataclass(frozen=True)
class NetlistDocument:
    """A parsed netlist.  ``elements`` is a tuple of ``(name, ElementDef)`` pairs."""

    space: Space
    solver: SolverSettings
    elements: tuple
    topology: Union[TreeExpr, MixedTopology]
    drive: DriveSpec

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple((str(k), v) for k, v in self.elements))
        if not self.elements:
            raise ArityError("a netlist needs at least one element")
        if self.space.n < 2:
            raise NetlistError(f"N must be at least 2, got {self.space.n}")
        if not self.space.period_T > 0:
            raise NetlistError(f"T must be positive, got {self.space.period_T!r}")
        s = self.solver
        if not s.alphas or not all(a > 0 for a in s.alphas):
            raise NetlistError("alpha must be positive")
        if not s.eps > 0:
            raise NetlistError(f"eps must be positive, got {s.eps!r}")
        if s.maxiter < 1:
            raise NetlistError(f"maxiter must be at least 1, got {s.maxiter!r}")
        seen = set()
        for name, d in self.elements:
            if not _NAME_RE.fullmatch(name) or name in RESERVED:
                raise NetlistError(f"{name!r} cannot be used as an element name")
            if name in seen:
                raise DuplicateName(f"element {name!r} defined twice")
            if isinstance(d, NegDef) and d.ref not in seen:
                raise UndefinedName(f"element {name!r} negates undefined element {d.ref!r}")
            seen.add(name)
        for name in _topology_names(self.topology):
            if name not in seen:
                raise UndefinedName(f"undefined element {name!r}")
        _check_arity(self.topology)

    def element(self, name: str) -> ElementDef:
        for k, v in self.elements:
            if k == name:
                return v
        raise UndefinedName(f"undefined element {name!r}")

    @property
    def names(self):
        return [k for k, _ in self.elements]


def _topology_names(top):
    if isinstance(top, Ref):
        yield top.name
    elif isinstance(top, (Series, Parallel)):
        for c in top.children:
            yield from _topology_names(c)
    elif isinstance(top, MixedTopology):
        yield from (top.a1, top.a2, top.b)


def _check_arity(top):
    if isinstance(top, (Series, Parallel)):
        if len(top.children) < 2:
            kind = "series" if isinstance(top, Series) else "parallel"
            raise ArityError(f"{kind}(...) needs at least 2 operands, got {len(top.children)}")
        for c in top.children:
            _check_arity(c)


# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<punct>[=:(),])
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?![^\s=:(),#])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)(?![^\s=:(),#])
  | (?P<word>[^\s=:(),#"]+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise NetlistSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - line_start + 1))
    return toks


def _eof_position(text: str):
    lines = text.split("\n")
    if len(lines) > 1 and lines[-1] == "":
        lines.pop()
    return len(lines), len(lines[-1]) + 1


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        eof_line, eof_col = _eof_position(text)
        self.toks[-1] = _Tok("eof", "", eof_line, eof_col)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _describe(self, t: _Tok) -> str:
        return "end of input" if t.kind == "eof" else repr(t.text)

    def fail(self, expected, t: Optional[_Tok] = None, cls=NetlistSyntaxError):
        t = t or self.tok
        expected = (expected,) if isinstance(expected, str) else tuple(expected)
        raise cls(f"expected {' or '.join(expected)}, found {self._describe(t)}", t.line, t.col, expected)

    def keyword(self, *words) -> _Tok:
        t = self.tok
        if t.kind == "name" and t.text in words:
            self.i += 1
            return t
        self.fail([repr(w) for w in words])

    def at_keyword(self, word) -> bool:
        return self.tok.kind == "name" and self.tok.text == word

    def punct(self, p) -> _Tok:
        t = self.tok
        if t.kind == "punct" and t.text == p:
            self.i += 1
            return t
        self.fail(repr(p))

    def at_punct(self, p) -> bool:
        return self.tok.kind == "punct" and self.tok.text == p

    def number(self) -> float:
        t = self.tok
        if t.kind != "num":
            self.fail("a number")
        self.i += 1
        return float(t.text)

    def integer(self) -> int:
        t = self.tok
        if t.kind != "num" or not re.fullmatch(r"[+-]?\d+", t.text):
            self.fail("an integer")
        self.i += 1
        return int(t.text)

    def positive(self, what) -> float:
        t = self.tok
        v = self.number()
        if not v > 0:
            raise NetlistSyntaxError(f"{what} must be positive, got {t.text}", t.line, t.col, (f"positive {what}",))
        return v

    def name(self) -> _Tok:
        t = self.tok
        if t.kind != "name" or t.text in RESERVED:
            self.fail("an element name")
        self.i += 1
        return t

    def floatlist(self) -> tuple:
        vals = [self.number()]
        while self.at_punct(","):
            self.i += 1
            vals.append(self.number())
        return tuple(vals)

    # grammar

    def document(self) -> NetlistDocument:
        self.keyword("space")
        self.keyword("N")
        self.punct("=")
        t = self.tok
        n = self.integer()
        if n < 2:
            raise NetlistSyntaxError(f"N must be at least 2, got {n}", t.line, t.col, ("N >= 2",))
        self.keyword("T")
        self.punct("=")
        period = self.positive("T")

        self.keyword("solver")
        alphas = []
        self.keyword("alpha")
        while True:
            self.punct("=")
            alphas.append(self.positive("alpha"))
            if self.at_keyword("alpha"):
                self.i += 1
                continue
            break
        self.keyword("eps")
        self.punct("=")
        eps = self.positive("eps")
        self.keyword("maxiter")
        self.punct("=")
        t = self.tok
        maxiter = self.integer()
        if maxiter < 1:
            raise NetlistSyntaxError(f"maxiter must be at least 1, got {maxiter}", t.line, t.col, ("maxiter >= 1",))

        elements = []
        defined = {}
        self.keyword("element")
        while True:
            nt = self.name()
            if nt.text in defined:
                raise DuplicateName(f"element {nt.text!r} already defined on line {defined[nt.text]}",
                                    nt.line, nt.col)
            self.punct(":")
            elements.append((nt.text, self.kind(defined)))
            defined[nt.text] = nt.line
            if self.at_keyword("element"):
                self.i += 1
                continue
            break

        if self.at_keyword("tree"):
            self.i += 1
            topology = self.tree_expr(defined)
        elif self.at_keyword("mixed"):
            self.i += 1
            slots = []
            for slot in ("a1", "a2", "b"):
                self.keyword(slot)
                self.punct("=")
                slots.append(self.ref(defined).name)
            topology = MixedTopology(*slots)
        else:
            self.fail(["'element'", "'tree'", "'mixed'"])

        self.keyword("drive")
        drive = self.drive()
        if self.tok.kind != "eof":
            self.fail("end of input")
        return NetlistDocument(Space(n, period), SolverSettings(tuple(alphas), eps, maxiter),
                               tuple(elements), topology, drive)

    def kind(self, defined) -> ElementDef:
        t = self.keyword("gain", "cubic", "tf", "neg")
        if t.text == "gain":
            return GainDef(self.number())
        if t.text == "cubic":
            return CubicDef(self.number())
        if t.text == "tf":
            self.keyword("num")
            self.punct("=")
            num = self.floatlist()
            self.keyword("den")
            self.punct("=")
            dt = self.tok
            den = self.floatlist()
            if not any(den):
                raise NetlistSyntaxError("denominator cannot be the zero polynomial", dt.line, dt.col,
                                         ("a nonzero denominator",))
            return TfDef(num, den)
        return NegDef(self.ref(defined).name)

    def ref(self, defined) -> Ref:
        t = self.name()
        if t.text not in defined:
            raise UndefinedName(f"undefined element {t.text!r}", t.line, t.col)
        return Ref(t.text)

    def tree_expr(self, defined) -> TreeExpr:
        t = self.tok
        if t.kind == "name" and t.text in ("series", "parallel"):
            self.i += 1
            self.punct("(")
            children = [self.tree_expr(defined)]
            while self.at_punct(","):
                self.i += 1
                children.append(self.tree_expr(defined))
            self.punct(")")
            if len(children) < 2:
                raise ArityError(f"{t.text}(...) needs at least 2 operands, got {len(children)}",
                                 t.line, t.col, ("','",))
            return (Series if t.text == "series" else Parallel)(tuple(children))
        if t.kind == "name" and t.text not in RESERVED:
            return self.ref(defined)
        self.fail(["an element name", "'series'", "'parallel'"])

    def drive(self) -> DriveSpec:
        t = self.keyword("zero", "const", "sin", "csv")
        if t.text == "zero":
            return ZeroDrive()
        if t.text == "const":
            return ConstDrive(self.number())
        if t.text == "sin":
            amp = self.number()
            return SinDrive(amp, self.number())
        p = self.tok
        if p.kind == "string":
            self.i += 1
            return CsvDrive(json.loads(p.text))
        if p.kind in ("word", "name", "num"):
            self.i += 1
            return CsvDrive(p.text)
        self.fail("a file path")


def parse(text: str) -> NetlistDocument:
    """Parse netlist text.

    Raises
    ------
    NetlistError
        :class:`NetlistSyntaxError`, :class:`UndefinedName`,
        :class:`DuplicateName` or :class:`ArityError`, always with
        ``line`` and ``column`` set.
    """
    return _Parser(text).document()


def load(path) -> NetlistDocument:
    return parse(Path(path).read_text(encoding="utf-8"))


# printer

def _f(x: float) -> str:
    return repr(float(x))


def _tree_text(t: TreeExpr) -> str:
    if isinstance(t, Ref):
        return t.name
    kw = "series" if isinstance(t, Series) else "parallel"
    return f"{kw}({', '.join(_tree_text(c) for c in t.children)})"


def _element_text(d: ElementDef) -> str:
    if isinstance(d, GainDef):
        return f"gain {_f(d.value)}"
    if isinstance(d, CubicDef):
        return f"cubic {_f(d.mu)}"
    if isinstance(d, TfDef):
        return f"tf num={','.join(map(_f, d.num))} den={','.join(map(_f, d.den))}"
    return f"neg {d.ref}"


def print_document(doc: NetlistDocument) -> str:
    """Canonical text of ``doc``; ``parse(print_document(doc)) == doc``."""
    s = doc.solver
    lines = [
        f"space N={doc.space.n} T={_f(doc.space.period_T)}",
        "solver " + " ".join(f"alpha={_f(a)}" for a in s.alphas) + f" eps={_f(s.eps)} maxiter={s.maxiter}",
    ]
    lines += [f"element {name}: {_element_text(d)}" for name, d in doc.elements]
    top = doc.topology
    if isinstance(top, MixedTopology):
        lines.append(f"mixed a1={top.a1} a2={top.a2} b={top.b}")
    else:
        lines.append(f"tree {_tree_text(top)}")
    d = doc.drive
    if isinstance(d, ZeroDrive):
        lines.append("drive zero")
    elif isinstance(d, ConstDrive):
        lines.append(f"drive const {_f(d.value)}")
    elif isinstance(d, SinDrive):
        lines.append(f"drive sin {_f(d.amplitude)} {_f(d.frequency)}")
    else:
        lines.append(f"drive csv {json.dumps(d.path)}")
    return "\n".join(lines) + "\n"


# builders

def build_operator(doc: NetlistDocument, name: str) -> ops.OperatorSpec:
    d = doc.element(name)
    if isinstance(d, GainDef):
        return ops.Gain(d.value)
    if isinstance(d, CubicDef):
        return ops.cubic(d.mu)
    if isinstance(d, TfDef):
        return ops.Lti(d.num, d.den)
    return ops.Negated(build_operator(doc, d.ref))


def _build_tree(doc, t: TreeExpr) -> ckt.CircuitTree:
    if isinstance(t, Ref):
        return ckt.Leaf(build_operator(doc, t.name))
    kids = tuple(_build_tree(doc, c) for c in t.children)
    if isinstance(t, Series):
        return ckt.Sum(kids)
    return ckt.Inverse(ckt.Sum(tuple(ckt.Inverse(k) for k in kids)))


def build_tree(doc: NetlistDocument) -> ckt.CircuitTree:
    if isinstance(doc.topology, MixedTopology):
        raise NetlistError("document has a mixed topology, not a tree")
    return _build_tree(doc, doc.topology)


def _negate(op):
    return op.inner if isinstance(op, ops.Negated) else ops.Negated(op)


def build_mixed(doc: NetlistDocument, base_dir=None):
    """MixedProblem for a ``mixed`` topology; ``B`` is the negation of element ``b``."""
    from portsolve.mixed import MixedProblem

    top = doc.topology
    if not isinstance(top, MixedTopology):
        raise NetlistError("document has a tree topology, not a mixed one")
    return MixedProblem(
        a1=build_operator(doc, top.a1),
        a2=build_operator(doc, top.a2),
        b=_negate(build_operator(doc, top.b)),
        drive=build_drive(doc, base_dir),
    )


def build_drive(doc: NetlistDocument, base_dir=None) -> Signal:
    n, T = doc.space.n, doc.space.period_T
    d = doc.drive
    if isinstance(d, ZeroDrive):
        return Signal.zeros(n, T)
    if isinstance(d, ConstDrive):
        return Signal.constant(d.value, n, T)
    if isinstance(d, SinDrive):
        return Signal.from_function(lambda t: d.amplitude * np.sin(2 * np.pi * d.frequency * t), n, T)
    path = Path(d.path)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    sig = read_csv(path)
    if sig.n != n or abs(sig.period_T - T) > 1e-9 * T:
        raise NetlistError(f"drive file {d.path!r} has N={sig.n}, T={sig.period_T}; expected N={n}, T={T}")
    return Signal(sig.samples, T)


def build_config(doc: NetlistDocument, init=None) -> SolverConfig:
    s = doc.solver
    if init is None:
        init = Sinusoid(2.0) if isinstance(doc.topology, MixedTopology) else "zero"
    return SolverConfig(alpha=s.alphas, epsilon=s.eps, max_iter=s.maxiter, init=init)


def element_roles(doc: NetlistDocument) -> dict:
    """Declared role of every element: ``monotone``, ``anti-monotone`` or ``unused``.

    Tree leaves and the ``a1``/``a2`` slots are declared monotone; the ``b``
    slot of a mixed topology is declared anti-monotone.  Elements only
    referenced through ``neg`` are ``unused``.
    """
    roles = {name: "unused" for name in doc.names}
    top = doc.topology
    if isinstance(top, MixedTopology):
        roles[top.a1] = roles[top.a2] = "monotone"
        roles[top.b] = "anti-monotone"
    else:
        for name in _topology_names(top):
            roles[name] = "monotone"
    return roles
