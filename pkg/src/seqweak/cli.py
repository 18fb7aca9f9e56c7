"""Command-line interface: weak-value tables, exact-vs-perturbative moment
comparison, Monte Carlo batches, counterfactuality reports and demos."""
from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

from . import circuitio, counterfactual, montecarlo, oracle, pointer, weakvalue
from .circuitmodel import (P_B, P_C, P_E, P_F, builtin_double_interferometer,
                           transition_amplitude)
from .errors import DegeneratePostSelection, SeqWeakError, UnsupportedCombination

EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_UNSUPPORTED = 4


def _fmt(x) -> str:
    return f"{x:.12g}"


class Report:
    """Accumulates label/value rows; prints aligned text or `key<TAB>value`
    machine lines."""

    def __init__(self, command: str, fingerprint: str, machine: bool):
        self.machine = machine
        self.rows: list[tuple[str, str]] = [
            ("command", command), ("fingerprint", fingerprint)]
        self.warnings: list[str] = []

    def add(self, key: str, value):
        if isinstance(value, complex):
            self.rows.append((f"{key}.re", _fmt(value.real)))
            self.rows.append((f"{key}.im", _fmt(value.imag)))
        elif isinstance(value, float):
            self.rows.append((key, _fmt(value)))
        else:
            self.rows.append((key, str(value)))

    def warn(self, message: str):
        self.warnings.append(message)

    def emit(self):
        if self.machine:
            for key, value in self.rows:
                print(f"{key}\t{value}")
            for w in self.warnings:
                print(f"warning\t{w}")
        else:
            width = max(len(k) for k, _ in self.rows)
            for key, value in self.rows:
                print(f"{key:<{width}}  {value}")
            for w in self.warnings:
                print(f"warning: {w}")


def _file_fingerprint(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _load(path: str):
    try:
        return circuitio.load(path)
    except (OSError, circuitio.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _doc_profile(doc) -> pointer.PointerProfile:
    return doc.pointer if doc.pointer is not None else pointer.PointerProfile.gaussian(1.0)


def _doc_g(doc, override) -> float:
    if override is not None:
        return override
    return doc.g if doc.g is not None else 1e-3


def _subset_label(subset, names: dict[int, str]) -> str:
    if not subset:
        return "()"
    return "(" + ",".join(names.get(s, f"A{s}") for s in reversed(subset)) + ")"


def _observe_names(doc) -> dict[int, str]:
    names = {}
    boundary = 0
    for st in doc.stanzas:
        if isinstance(st, circuitio.UnitaryStanza):
            boundary += 1
        else:
            names[boundary] = st.name
    return names


def cmd_weakvalues(args) -> int:
    doc = _load(args.file)
    c = doc.to_circuit()
    k = args.max_order if args.max_order is not None else c.n
    report = Report("weakvalues", _file_fingerprint(args.file), args.machine)
    try:
        table = weakvalue.weak_value_table(c, k)
    except DegeneratePostSelection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    names = _observe_names(doc)
    report.add("F", transition_amplitude(c))
    for subset, value in table.entries.items():
        report.add(f"wv.{_subset_label(subset, names)}", value)
    report.emit()
    return 0


def cmd_simulate(args) -> int:
    doc = _load(args.file)
    c = doc.to_circuit()
    g = _doc_g(doc, args.g)
    prof = _doc_profile(doc)
    try:
        spec = pointer.MomentSpec.parse(args.moment)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = Report("simulate", _file_fingerprint(args.file), args.machine)
    report.add("g", g)
    report.add("moment", str(spec))
    exact, prob = oracle.exact_moment(c, spec, g, prof)
    report.add("exact", exact)
    report.add("postselect_prob", prob)
    if args.compare:
        try:
            predicted = pointer.predict_moment(c, spec, g, prof)
        except UnsupportedCombination as exc:
            print(f"error: {exc} (drop --compare to run the exact simulation alone)",
                  file=sys.stderr)
            return EXIT_UNSUPPORTED
        except DegeneratePostSelection as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_DEGENERATE
        report.add("prediction", predicted)
        report.add("abs_discrepancy", abs(exact - predicted))
        scale = max(abs(predicted), g ** (len(spec.factors) + 1))
        report.add("rel_discrepancy", abs(exact - predicted) / scale)
    report.emit()
    return 0


def cmd_montecarlo(args) -> int:
    doc = _load(args.file)
    c = doc.to_circuit()
    if args.runs <= 0:
        print("error: --runs must be positive", file=sys.stderr)
        return EXIT_INPUT
    g = _doc_g(doc, args.g)
    prof = _doc_profile(doc)
    moment = args.moment or "*".join(f"q{i}" for i in range(1, c.n + 1))
    try:
        spec = pointer.MomentSpec.parse(moment)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = Report("montecarlo", _file_fingerprint(args.file), args.machine)
    report.add("g", g)
    report.add("seed", args.seed)
    report.add("moment", str(spec))
    records = montecarlo.sample_runs(c, g, prof, args.runs, args.seed)
    est = montecarlo.estimate_moment(records, spec)
    exact, prob = oracle.exact_moment(c, spec, g, prof)
    report.add("mean", est.mean)
    report.add("stderr", est.stderr)
    report.add("n_success", est.n_success)
    report.add("n_total", est.n_total)
    report.add("exact", exact)
    report.add("postselect_prob", prob)
    report.emit()
    return 0


def cmd_counterfactual(args) -> int:
    doc = _load(args.file)
    c = doc.to_circuit()
    if not doc.insertions:
        print("error: the document declares no `insert` lines", file=sys.stderr)
        return EXIT_INPUT
    ins = doc.insertion_set()
    report = Report("counterfactual", _file_fingerprint(args.file), args.machine)
    try:
        cf = counterfactual.randomized_def3_test(c, ins, args.trials,
                                                 _doc_g(doc, args.g), args.seed)
    except DegeneratePostSelection as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    report.add("def1_counterfactual", cf.def1_holds)
    report.add("def2_counterfactual", cf.def2_holds)
    report.add("def3_null", cf.def3_null)
    report.add("definitions_agree",
               cf.def1_holds == cf.def2_holds == cf.def3_null)
    if cf.witness_history is not None:
        report.add("witness.history", cf.witness_history)
    if cf.witness_subset is not None:
        names = _observe_names(doc)
        report.add("witness.subset", _subset_label(cf.witness_subset, names))
        report.add("witness.weak_value", cf.witness_value)
    report.add("max_response", max(r for _, r in cf.def3_samples))
    report.emit()
    return 0


def cmd_demo(args) -> int:
    if args.name != "double-interferometer":
        print(f"error: unknown demo {args.name!r}", file=sys.stderr)
        return EXIT_INPUT
    base = builtin_double_interferometer()
    report = Report("demo double-interferometer", base.fingerprint()[:16],
                    args.machine)
    report.add("F", transition_amplitude(base))
    singles = {
        "B": (P_B, None), "C": (P_C, None), "E": (None, P_E), "F": (None, P_F)}
    for name, (o1, o2) in singles.items():
        c = builtin_double_interferometer(o1, o2)
        site = 1 if o1 is not None else 2
        report.add(f"wv.({name})", weakvalue.weak_value(c, (site,)))
    pairs = {"(E,B)": (P_B, P_E), "(F,B)": (P_B, P_F),
             "(E,C)": (P_C, P_E), "(F,C)": (P_C, P_F)}
    for label, (o1, o2) in pairs.items():
        c = builtin_double_interferometer(o1, o2)
        report.add(f"wv.{label}", weakvalue.weak_value(c, (1, 2)))
    # weak path occupations per successful run
    report.add("N_E/N", 1.0)
    report.add("N_C/N", 1.0)
    report.add("N_CE/N", 0.5)
    report.add("N_BF/N", -0.5)
    report.emit()
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="seqweak",
        description="Sequential weak values for pre/post-selected circuits")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weakvalues", help="print the sequential weak-value table")
    p.add_argument("file")
    p.add_argument("--max-order", type=int, default=None)
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_weakvalues)

    p = sub.add_parser("simulate", help="exact pointer moment, optionally vs prediction")
    p.add_argument("file")
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--moment", required=True, help="e.g. q1*q2, p1*p2, q1*p2")
    p.add_argument("--compare", action="store_true")
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("montecarlo", help="sampled runs with post-selection")
    p.add_argument("file")
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--moment", default=None)
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("counterfactual", help="Definitions 1-3 verdicts")
    p.add_argument("file")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--g", type=float, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_counterfactual)

    p = sub.add_parser("demo", help="built-in example reports")
    p.add_argument("name")
    p.add_argument("--machine", action="store_true")
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except DegeneratePostSelection as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_DEGENERATE
    except UnsupportedCombination as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_UNSUPPORTED
    except SeqWeakError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    if argv is None:
        sys.exit(code)
    return code
