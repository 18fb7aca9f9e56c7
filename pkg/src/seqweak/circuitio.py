"""Line-oriented text format for circuits (.wseq), parser and serializer.

Grammar (whitespace-separated tokens, '#' starts a comment):

    wseq 1
    dim <d>
    labels <name>...
    state <c>...                  # d complex entries
    unitary <name>                # followed by d rows of d complex entries
    observe <name>                # followed by `proj <basis-index>...`
                                  # or d matrix rows
    postselect <c>...
    pointer gaussian sigma=<r> [qoffset=<r>] [poffset=<r>]
    pointer tabulated <file>
    g <r>
    insert <observe-name>

Complex literals are `<float>` or `<float>+<float>i` / `<float>-<float>i`
with no interior spaces.  Observables bind to the most recent unitary; a
trailing observe after the last unitary implies an identity final
evolution.  Serialization is canonical: 17 significant digits, one stanza
per parse-order entry, so serialize(parse(serialize(x))) == serialize(x).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import algebra
from .circuitmodel import Circuit
from .counterfactual import InsertionSet
from .errors import SeqWeakError
from .pointer import PointerProfile


class ParseError(SeqWeakError):
    def __init__(self, kind: str, line: int, token: str, message: str):
        self.kind = kind
        self.line = line
        self.token = token
        super().__init__(f"line {line}: {kind}: {message} (at {token!r})")


_FLOAT_RE = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^({_FLOAT_RE})(?:([+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)i)?$")


def parse_complex(tok: str, line: int) -> complex:
    m = _COMPLEX_RE.match(tok)
    if not m:
        raise ParseError("BadComplexLiteral", line, tok, "not a complex literal")
    re_part = float(m.group(1))
    im_part = float(m.group(2)) if m.group(2) is not None else 0.0
    return complex(re_part, im_part)


def format_float(x: float) -> str:
    return f"{x:.17g}"


def format_complex(z: complex) -> str:
    im = z.imag
    sign = "-" if (im < 0 or (im == 0 and math.copysign(1.0, im) < 0)) else "+"
    return f"{format_float(z.real)}{sign}{format_float(abs(im))}i"


@dataclass(frozen=True)
class UnitaryStanza:
    name: str
    matrix: np.ndarray


@dataclass(frozen=True)
class ObserveStanza:
    name: str
    matrix: np.ndarray
    proj: tuple[int, ...] | None  # basis indices when the proj sugar was used


@dataclass(frozen=True)
class CircuitDocument:
    dim: int
    psi_i: np.ndarray
    psi_f: np.ndarray
    stanzas: tuple[UnitaryStanza | ObserveStanza, ...]
    labels: tuple[str, ...] | None = None
    pointer: PointerProfile | None = None
    pointer_source: str | None = None  # original `pointer ...` argument text
    g: float | None = None
    insertions: tuple[str, ...] = ()

    def __eq__(self, other) -> bool:
        if not isinstance(other, CircuitDocument):
            return NotImplemented
        if (self.dim, self.labels, self.pointer_source, self.g,
                self.insertions) != (other.dim, other.labels,
                                     other.pointer_source, other.g,
                                     other.insertions):
            return False
        if not (np.array_equal(self.psi_i, other.psi_i)
                and np.array_equal(self.psi_f, other.psi_f)):
            return False
        if len(self.stanzas) != len(other.stanzas):
            return False
        for a, b in zip(self.stanzas, other.stanzas):
            if type(a) is not type(b) or a.name != b.name:
                return False
            if not np.array_equal(a.matrix, b.matrix):
                return False
            if isinstance(a, ObserveStanza) and a.proj != b.proj:
                return False
        return True

    def to_circuit(self) -> Circuit:
        unitaries: list[np.ndarray] = []
        observes: list[np.ndarray | None] = []
        for st in self.stanzas:
            if isinstance(st, UnitaryStanza):
                unitaries.append(st.matrix)
                observes.append(None)
            else:
                observes[-1] = st.matrix
        eye = np.eye(self.dim, dtype=complex)
        if not unitaries or (observes and observes[-1] is not None):
            # no evolution at all, or a trailing measurement: the final
            # evolution is the identity
            unitaries.append(eye)
            observes.append(None)
        stages = tuple(
            (u, a if a is not None else eye)
            for u, a in zip(unitaries[:-1], observes[:-1]))
        return Circuit(psi_i=self.psi_i, stages=stages, u_final=unitaries[-1],
                       psi_f=self.psi_f, labels=self.labels)

    def insertion_set(self) -> InsertionSet:
        by_name: dict[str, tuple[int, np.ndarray]] = {}
        boundary = 0
        for st in self.stanzas:
            if isinstance(st, UnitaryStanza):
                boundary += 1
            else:
                by_name[st.name] = (boundary, st.matrix)
        sites, projectors = [], []
        for name in self.insertions:
            site, matrix = by_name[name]
            sites.append(site)
            projectors.append(matrix)
        order = np.argsort(sites)
        return InsertionSet(tuple(sites[i] for i in order),
                            tuple(projectors[i] for i in order))


class _Lines:
    def __init__(self, text: str):
        self.rows: list[tuple[int, list[str]]] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            body = raw.split("#", 1)[0].strip()
            if body:
                self.rows.append((lineno, body.split()))
        self.pos = 0

    def peek(self):
        return self.rows[self.pos] if self.pos < len(self.rows) else None

    def next(self):
        row = self.rows[self.pos]
        self.pos += 1
        return row


def _parse_vector(tokens: list[str], dim: int, line: int, what: str) -> np.ndarray:
    if len(tokens) != dim:
        raise ParseError("DimMismatch", line, tokens[0] if tokens else what,
                         f"{what} needs {dim} entries, got {len(tokens)}")
    return np.array([parse_complex(t, line) for t in tokens], dtype=complex)


def _parse_matrix(lines: _Lines, dim: int, name: str) -> np.ndarray:
    rows = []
    for _ in range(dim):
        row = lines.peek()
        if row is None:
            raise ParseError("DimMismatch", lines.rows[-1][0] if lines.rows else 0,
                             name, f"matrix {name} is missing rows")
        lineno, tokens = lines.next()
        rows.append(_parse_vector(tokens, dim, lineno, f"matrix {name} row"))
    return np.array(rows, dtype=complex)


def parse(text: str, base_dir: str | Path | None = None) -> CircuitDocument:
    lines = _Lines(text)
    dim: int | None = None
    labels = None
    psi_i = psi_f = None
    stanzas: list[UnitaryStanza | ObserveStanza] = []
    pointer = None
    pointer_source = None
    g_val = None
    insertions: list[str] = []
    observe_names: dict[str, int] = {}
    last_boundary_observed = -1
    n_unitaries = 0

    def need_dim(lineno: int, tok: str) -> int:
        if dim is None:
            raise ParseError("DimMismatch", lineno, tok, "`dim` must come first")
        return dim

    while lines.peek() is not None:
        lineno, tokens = lines.next()
        head, rest = tokens[0], tokens[1:]
        if head == "wseq":
            if rest != ["1"]:
                raise ParseError("UnknownDirective", lineno, " ".join(rest),
                                 "unsupported format version")
        elif head == "dim":
            try:
                dim = int(rest[0])
            except (IndexError, ValueError):
                raise ParseError("DimMismatch", lineno, head, "bad dimension")
            if dim < 1:
                raise ParseError("DimMismatch", lineno, rest[0],
                                 "dimension must be positive")
        elif head == "labels":
            labels = tuple(rest)
        elif head == "state":
            psi_i = _parse_vector(rest, need_dim(lineno, head), lineno, "state")
        elif head == "postselect":
            psi_f = _parse_vector(rest, need_dim(lineno, head), lineno, "postselect")
        elif head == "unitary":
            d = need_dim(lineno, head)
            name = rest[0] if rest else f"U{n_unitaries + 1}"
            m = _parse_matrix(lines, d, name)
            if not algebra.is_unitary(m, 1e-9):
                dev = float(np.max(np.abs(m.conj().T @ m - np.eye(d))))
                raise ParseError("NonUnitary", lineno, name,
                                 f"max deviation {dev:.3e}")
            stanzas.append(UnitaryStanza(name, m))
            n_unitaries += 1
        elif head == "observe":
            d = need_dim(lineno, head)
            if n_unitaries == 0:
                raise ParseError("UnknownDirective", lineno, head,
                                 "observe before any unitary")
            if last_boundary_observed == n_unitaries:
                raise ParseError("DuplicateObserveAtBoundary", lineno,
                                 rest[0] if rest else head,
                                 "a boundary holds at most one measurement")
            name = rest[0] if rest else f"A{len(observe_names) + 1}"
            nxt = lines.peek()
            if nxt is not None and nxt[1][0] == "proj":
                plineno, ptokens = lines.next()
                try:
                    idx = tuple(int(t) for t in ptokens[1:])
                except ValueError:
                    raise ParseError("DimMismatch", plineno, " ".join(ptokens[1:]),
                                     "bad basis index")
                if not idx or any(i < 0 or i >= d for i in idx):
                    raise ParseError("DimMismatch", plineno, " ".join(ptokens[1:]),
                                     "basis index out of range")
                m = np.zeros((d, d), dtype=complex)
                for i in idx:
                    m[i, i] = 1.0
                stanzas.append(ObserveStanza(name, m, idx))
            else:
                m = _parse_matrix(lines, d, name)
                if not algebra.is_hermitian(m, 1e-9):
                    raise ParseError("NonHermitian", lineno, name,
                                     "observable must be Hermitian")
                stanzas.append(ObserveStanza(name, m, None))
            observe_names[name] = lineno
            last_boundary_observed = n_unitaries
        elif head == "pointer":
            if not rest:
                raise ParseError("UnknownDirective", lineno, head, "missing pointer kind")
            pointer_source = " ".join(rest)
            if rest[0] == "gaussian":
                kwargs = {"sigma": None, "qoffset": 0.0, "poffset": 0.0}
                for tok in rest[1:]:
                    key, _, val = tok.partition("=")
                    if key not in kwargs or not val:
                        raise ParseError("UnknownDirective", lineno, tok,
                                         "bad pointer parameter")
                    kwargs[key] = float(val)
                if kwargs["sigma"] is None or kwargs["sigma"] <= 0:
                    raise ParseError("UnknownDirective", lineno, pointer_source,
                                     "gaussian pointer needs sigma > 0")
                pointer = PointerProfile.gaussian(kwargs["sigma"], kwargs["qoffset"],
                                                  kwargs["poffset"])
                # canonical form: omit zero offsets
                pointer_source = f"gaussian sigma={format_float(pointer.sigma)}"
                if pointer.q_offset != 0.0:
                    pointer_source += f" qoffset={format_float(pointer.q_offset)}"
                if pointer.p_offset != 0.0:
                    pointer_source += f" poffset={format_float(pointer.p_offset)}"
            elif rest[0] == "tabulated":
                if len(rest) != 2:
                    raise ParseError("UnknownDirective", lineno, pointer_source,
                                     "tabulated pointer needs a file")
                path = Path(rest[1])
                if base_dir is not None and not path.is_absolute():
                    path = Path(base_dir) / path
                pointer = load_tabulated_profile(path)
            else:
                raise ParseError("UnknownDirective", lineno, rest[0],
                                 "unknown pointer kind")
        elif head == "g":
            try:
                g_val = float(rest[0])
            except (IndexError, ValueError):
                raise ParseError("UnknownDirective", lineno, head, "bad coupling")
        elif head == "insert":
            if not rest:
                raise ParseError("UnknownDirective", lineno, head,
                                 "insert needs an observe name")
            insertions.append(rest[0])
        else:
            raise ParseError("UnknownDirective", lineno, head, "unknown directive")

    if dim is None or psi_i is None or psi_f is None:
        raise ParseError("DimMismatch", lines.rows[-1][0] if lines.rows else 0,
                         "EOF", "document needs dim, state and postselect")
    for name in insertions:
        if name not in observe_names:
            raise ParseError("UnknownDirective", 0, name,
                             "insert references an unknown observe")
    doc = CircuitDocument(
        dim=dim, psi_i=psi_i, psi_f=psi_f, stanzas=tuple(stanzas),
        labels=labels, pointer=pointer, pointer_source=pointer_source,
        g=g_val, insertions=tuple(insertions))
    doc.to_circuit()  # all circuit invariants checked on load
    return doc


def load_tabulated_profile(path: str | Path) -> PointerProfile:
    """Profile from rows of `q re(phi) im(phi)` with uniform spacing."""
    qs, vals = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 3:
            raise ParseError("DimMismatch", lineno, body,
                             "profile rows are `q re im`")
        qs.append(float(parts[0]))
        vals.append(complex(float(parts[1]), float(parts[2])))
    q = np.asarray(qs)
    steps = np.diff(q)
    if len(q) < 2 or np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]):
        raise ParseError("DimMismatch", 0, str(path),
                         "profile grid must be uniformly spaced")
    return PointerProfile.tabulated(q[0], float(steps[0]), vals)


def serialize(doc: CircuitDocument) -> str:
    out = ["wseq 1", f"dim {doc.dim}"]
    if doc.labels is not None:
        out.append("labels " + " ".join(doc.labels))
    out.append("state " + " ".join(format_complex(z) for z in doc.psi_i))
    for st in doc.stanzas:
        if isinstance(st, UnitaryStanza):
            out.append(f"unitary {st.name}")
            for row in st.matrix:
                out.append(" ".join(format_complex(z) for z in row))
        else:
            out.append(f"observe {st.name}")
            if st.proj is not None:
                out.append("proj " + " ".join(str(i) for i in st.proj))
            else:
                for row in st.matrix:
                    out.append(" ".join(format_complex(z) for z in row))
    out.append("postselect " + " ".join(format_complex(z) for z in doc.psi_f))
    if doc.pointer_source is not None:
        out.append(f"pointer {doc.pointer_source}")
    if doc.g is not None:
        out.append(f"g {format_float(doc.g)}")
    for name in doc.insertions:
        out.append(f"insert {name}")
    return "\n".join(out) + "\n"


def load(path: str | Path) -> CircuitDocument:
    p = Path(path)
    return parse(p.read_text(), base_dir=p.parent)


def builtin_document_path(name: str = "double_interferometer") -> Path:
    return Path(__file__).parent / "data" / f"{name}.wseq"
