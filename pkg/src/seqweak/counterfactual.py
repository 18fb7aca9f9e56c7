"""Counterfactuality of post-selected outcomes, three equivalent ways.

An outcome is counterfactual by histories when every on/off insertion
history containing an "on" projector has zero amplitude; by weak values
when every sequential weak value of the on-projectors vanishes; by general
weak interactions when every weak coupling restricted to the on-projectors
yields a null result.  The three verdicts must always agree.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from .circuitmodel import Circuit, transition_amplitude, valid_subset
from .errors import BothZero, DegeneratePostSelection, EquivalenceViolation, NotProjector
from .oracle import joint_response
from .weakvalue import weak_value, weak_value_numerator

ZERO_TOL = 1e-10


@dataclass(frozen=True)
class InsertionSet:
    sites: tuple[int, ...]
    on_projectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        projectors = tuple(algebra.as_operator(p) for p in self.on_projectors)
        if len(projectors) != len(self.sites):
            raise ValueError("one projector per insertion site")
        for p in projectors:
            if not algebra.is_projector(p, 1e-10):
                raise NotProjector("insertion must be a Hermitian idempotent")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        object.__setattr__(self, "on_projectors", projectors)

    def __len__(self) -> int:
        return len(self.sites)


@dataclass(frozen=True)
class CounterfactualReport:
    def1_holds: bool
    def2_holds: bool
    witness_history: str | None
    witness_subset: tuple[int, ...] | None
    witness_value: complex | None
    def3_samples: tuple[tuple[str, float], ...] = ()
    def3_null: bool | None = None


def _circuit_with_insertions(c: Circuit, ins: InsertionSet,
                             symbols: str) -> Circuit:
    obs = {}
    for site, proj, sym in zip(ins.sites, ins.on_projectors, symbols):
        obs[site] = proj if sym == "N" else np.eye(c.dim) - proj
    return c.with_observables(obs)


def history_amplitude(c: Circuit, ins: InsertionSet, history: str) -> complex:
    """Amplitude with the on-projector (N) or its complement (F) inserted at
    each insertion site per the history string, identity elsewhere."""
    valid_subset(ins.sites, c.n)
    if len(history) != len(ins):
        raise ValueError("history length must match the insertion set")
    if any(s not in "FN" for s in history):
        raise ValueError("history symbols must be F or N")
    inserted = _circuit_with_insertions(c, ins, history)
    return weak_value_numerator(inserted, ins.sites)


def all_histories(k: int):
    """All length-k histories in lexicographic order with F < N."""
    return ["".join(h) for h in itertools.product("FN", repeat=k)]


def is_counterfactual_histories(c: Circuit, ins: InsertionSet,
                                tol: float = ZERO_TOL):
    """Definition by histories; witness is the first N-containing history
    (lexicographic, F < N) with nonvanishing amplitude."""
    for h in all_histories(len(ins)):
        if "N" not in h:
            continue
        if abs(history_amplitude(c, ins, h)) > tol:
            return False, h
    return True, None


def _on_circuit(c: Circuit, ins: InsertionSet) -> Circuit:
    return c.with_observables(dict(zip(ins.sites, ins.on_projectors)))


def insertion_subsets(ins: InsertionSet):
    """Nonempty subsets of insertion sites, by size then lexicographic."""
    for r in range(1, len(ins) + 1):
        yield from itertools.combinations(ins.sites, r)


def is_counterfactual_weakvalues(c: Circuit, ins: InsertionSet,
                                 tol: float = ZERO_TOL):
    """Definition by weak values; witness is the first subset of insertion
    sites whose sequential weak value of the on-projectors is nonzero."""
    if abs(transition_amplitude(c)) <= 1e-12:
        raise DegeneratePostSelection("post-selection orthogonal to the evolution")
    on = _on_circuit(c, ins)
    for subset in insertion_subsets(ins):
        wv = weak_value(on, subset)
        if abs(wv) > tol:
            return False, (subset, wv)
    return True, None


def check_equivalence_def1_def2(c: Circuit, ins: InsertionSet) -> bool:
    """Definition-1 and Definition-2 verdicts computed independently must
    agree; also verifies the F = I - N expansion of each history amplitude
    into signed subset numerators."""
    d1, _ = is_counterfactual_histories(c, ins)
    d2, _ = is_counterfactual_weakvalues(c, ins)
    if d1 != d2:
        raise EquivalenceViolation(
            f"histories says {d1}, weak values says {d2}")

    on = _on_circuit(c, ins)
    for h in all_histories(len(ins)):
        n_sites = tuple(s for s, sym in zip(ins.sites, h) if sym == "N")
        f_sites = tuple(s for s, sym in zip(ins.sites, h) if sym == "F")
        total = 0.0 + 0.0j
        for extra in itertools.chain.from_iterable(
                itertools.combinations(f_sites, r) for r in range(len(f_sites) + 1)):
            subset = tuple(sorted(n_sites + extra))
            total += (-1) ** len(extra) * weak_value_numerator(on, subset)
        if abs(total - history_amplitude(c, ins, h)) > 1e-10:
            raise EquivalenceViolation(
                f"history {h} amplitude does not match its subset expansion")
    return d1


def determines_output(c_out0: Circuit, c_out1: Circuit) -> bool:
    """True iff the post-selected outcome occurs for exactly one of the two
    computer programmings."""
    p0 = abs(transition_amplitude(c_out0)) ** 2
    p1 = abs(transition_amplitude(c_out1)) ** 2
    if p0 <= 1e-20 and p1 <= 1e-20:
        raise BothZero("the outcome never occurs in either variant")
    return (p0 > 1e-20) != (p1 > 1e-20)


def _random_hermitian(rng, dim: int) -> np.ndarray:
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (m + m.conj().T) / 2


def randomized_def3_test(c: Circuit, ins: InsertionSet, trials: int, g: float,
                         seed: int, anc_dim: int = 2) -> CounterfactualReport:
    """Probe Definition 3 with random weak interactions restricted to the
    on-projectors: random ancilla Hamiltonians, observables and states,
    coupled via a shared ancilla at every nonempty subset of insertion
    sites.  Null responses (within tolerance) are required exactly when the
    weak-value definition holds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    d1, wit1 = is_counterfactual_histories(c, ins)
    d2, wit2 = is_counterfactual_weakvalues(c, ins)
    if d1 != d2:
        raise EquivalenceViolation(f"histories says {d1}, weak values says {d2}")

    f = transition_amplitude(c)
    tol3 = 1e-8 * (1.0 + 1.0 / abs(f)) * g**2
    rng = np.random.default_rng(seed)
    samples = []
    proj_by_site = dict(zip(ins.sites, ins.on_projectors))
    null = True
    for trial in range(trials):
        for subset in insertion_subsets(ins):
            couplings = {site: (proj_by_site[site], _random_hermitian(rng, anc_dim))
                         for site in subset}
            obs = _random_hermitian(rng, anc_dim)
            state = rng.standard_normal(anc_dim) + 1j * rng.standard_normal(anc_dim)
            state = state / np.linalg.norm(state)
            resp = joint_response(c, couplings, obs, state, g)
            samples.append((f"trial={trial} subset={subset}", abs(resp)))
            if abs(resp) > tol3:
                null = False

    return CounterfactualReport(
        def1_holds=d1,
        def2_holds=d2,
        witness_history=wit1,
        witness_subset=None if wit2 is None else wit2[0],
        witness_value=None if wit2 is None else wit2[1],
        def3_samples=tuple(samples),
        def3_null=null,
    )
