"""Pointer profiles, their moments, and the perturbative moment formulas.

Gaussian convention: phi(q) = (2 pi sigma^2)^(-1/4) exp(-(q - q0)^2 / (4 sigma^2))
times a momentum-offset phase, so Var(q) = sigma^2 and Var(p) = 1/(4 sigma^2).
Momentum is p = -i d/dq with hbar = 1.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass

import numpy as np

from .circuitmodel import Circuit, valid_subset
from .errors import AssumptionAViolated, GridTooCoarse, UnsupportedCombination
from .weakvalue import weak_value


@dataclass(frozen=True)
class PointerProfile:
    kind: str  # "gaussian" | "tabulated"
    sigma: float = 1.0
    q_offset: float = 0.0
    p_offset: float = 0.0
    grid_min: float = 0.0
    grid_step: float = 0.0
    values: tuple[complex, ...] = ()

    @classmethod
    def gaussian(cls, sigma: float, q_offset: float = 0.0, p_offset: float = 0.0):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(kind="gaussian", sigma=float(sigma), q_offset=float(q_offset),
                   p_offset=float(p_offset))

    @classmethod
    def tabulated(cls, grid_min: float, grid_step: float, values):
        vals = np.asarray(values, dtype=complex)
        if vals.size < 256:
            raise ValueError("tabulated profile needs at least 256 points")
        if grid_step <= 0:
            raise ValueError("grid step must be positive")
        peak = float(np.max(np.abs(vals)))
        if peak == 0.0:
            raise ValueError("profile is identically zero")
        if abs(vals[0]) > 1e-8 * peak or abs(vals[-1]) > 1e-8 * peak:
            raise ValueError("profile does not decay at the grid ends")
        vals = vals / np.sqrt(grid_step * np.sum(np.abs(vals) ** 2))
        return cls(kind="tabulated", grid_min=float(grid_min),
                   grid_step=float(grid_step), values=tuple(vals.tolist()))

    @property
    def grid(self) -> np.ndarray:
        return self.grid_min + self.grid_step * np.arange(len(self.values))

    @property
    def is_assumption_a(self) -> bool:
        if self.kind == "gaussian":
            return self.q_offset == 0.0 and self.p_offset == 0.0
        vals = np.asarray(self.values)
        if np.max(np.abs(vals.imag)) > 1e-9 * np.max(np.abs(vals)):
            return False
        q = self.grid
        mu = self.grid_step * float(np.sum(q * np.abs(vals) ** 2))
        return abs(mu) <= 1e-9

    def eval(self, q) -> np.ndarray:
        """phi evaluated at arbitrary positions (0 outside a tabulated grid)."""
        q = np.asarray(q, dtype=float)
        if self.kind == "gaussian":
            s2 = self.sigma**2
            env = (2 * np.pi * s2) ** -0.25 * np.exp(-((q - self.q_offset) ** 2) / (4 * s2))
            return env * np.exp(1j * self.p_offset * q)
        vals = np.asarray(self.values)
        re = np.interp(q, self.grid, vals.real, left=0.0, right=0.0)
        im = np.interp(q, self.grid, vals.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass(frozen=True)
class PointerMoments:
    mu: float   # mean position
    nu: float   # mean momentum
    v: float    # momentum variance
    y: float    # <pq + qp> - 2 mu nu


def _tabulated_moments(q: np.ndarray, step: float, vals: np.ndarray) -> PointerMoments:
    norm = step * np.sum(np.abs(vals) ** 2)
    dens = np.abs(vals) ** 2 / np.sum(np.abs(vals) ** 2)
    mu = float(np.sum(q * dens))

    ft = np.fft.fft(vals)
    p = 2 * np.pi * np.fft.fftfreq(len(vals), d=step)
    pw = np.abs(ft) ** 2
    pw = pw / np.sum(pw)
    nu = float(np.sum(p * pw))
    v = float(np.sum((p - nu) ** 2 * pw))

    dphi = np.fft.ifft(1j * p * ft)
    qp = step * np.sum(np.conj(vals) * q * (-1j) * dphi) / norm
    y = float(2 * qp.real - 2 * mu * nu)
    return PointerMoments(mu=mu, nu=nu, v=v, y=y)


def moments(prof: PointerProfile) -> PointerMoments:
    if prof.kind == "gaussian":
        return PointerMoments(mu=prof.q_offset, nu=prof.p_offset,
                              v=1.0 / (4.0 * prof.sigma**2), y=0.0)
    q = prof.grid
    vals = np.asarray(prof.values)
    full = _tabulated_moments(q, prof.grid_step, vals)
    # Self-estimate: recompute on the decimated grid and compare.
    coarse = _tabulated_moments(q[::2], 2 * prof.grid_step, vals[::2])
    err = max(abs(full.mu - coarse.mu), abs(full.nu - coarse.nu),
              abs(full.v - coarse.v), abs(full.y - coarse.y))
    if err > 1e-7:
        raise GridTooCoarse(f"quadrature self-estimate error {err:.3e}")
    return full


_FACTOR_RE = re.compile(r"([qp])(\d+)$")


@dataclass(frozen=True)
class MomentSpec:
    factors: tuple[tuple[int, str], ...]  # (site, "q"|"p"), sites increasing

    def __post_init__(self):
        if not self.factors:
            raise ValueError("moment spec must be nonempty")
        sites = [s for s, _ in self.factors]
        if any(sites[i] >= sites[i + 1] for i in range(len(sites) - 1)):
            raise ValueError("sites must be strictly increasing")
        if any(k not in ("q", "p") for _, k in self.factors):
            raise ValueError("factor kind must be 'q' or 'p'")

    @classmethod
    def parse(cls, text: str) -> "MomentSpec":
        factors = []
        for tok in text.split("*"):
            m = _FACTOR_RE.match(tok.strip())
            if not m:
                raise ValueError(f"bad moment factor {tok!r}")
            factors.append((int(m.group(2)), m.group(1)))
        return cls(tuple(factors))

    def __str__(self) -> str:
        return "*".join(f"{k}{s}" for s, k in self.factors)


def parity_part(spec: MomentSpec) -> str:
    """'real' for an even number of p factors, 'imag' for an odd number."""
    n_p = sum(1 for _, k in spec.factors if k == "p")
    return "real" if n_p % 2 == 0 else "imag"


def ordered_index_partitions(m: int):
    """Ordered pairs (i, j) of complementary increasing index tuples of
    {1..m} with len(i) >= len(j), ties kept only when 1 is in i."""
    out = []
    universe = tuple(range(1, m + 1))
    for r in range(m, -1, -1):
        for i in itertools.combinations(universe, r):
            j = tuple(x for x in universe if x not in i)
            s = len(j)
            if r > s or (r == s and r > 0 and i[0] == 1):
                out.append((i, j))
    return out


def _require_assumption_a(prof: PointerProfile):
    if not prof.is_assumption_a:
        raise AssumptionAViolated(
            "this moment formula needs a real zero-mean pointer profile")


def predict_moment(c: Circuit, spec: MomentSpec, g: float, prof: PointerProfile) -> float:
    """Leading-order prediction for the product of pointer readouts named by
    ``spec``, one weakly coupled pointer per listed site."""
    if g < 0:
        raise ValueError("coupling must be nonnegative")
    sites = [s for s, _ in spec.factors]
    kinds = [k for _, k in spec.factors]
    valid_subset(sites, c.n)
    m = len(spec.factors)

    def wv(positions) -> complex:
        # positions index into spec.factors (1-based); empty tuple -> 1
        return weak_value(c, tuple(sites[p - 1] for p in positions)) if positions else 1.0 + 0.0j

    if all(k == "q" for k in kinds):
        if m == 1:
            mom = moments(prof)
            w = wv((1,))
            return mom.mu + g * (w.real + mom.y * w.imag)
        _require_assumption_a(prof)
        total = sum(wv(i) * np.conj(wv(j)) for i, j in ordered_index_partitions(m))
        return g**m / 2 ** (m - 1) * float(np.real(total))

    if all(k == "p" for k in kinds):
        _require_assumption_a(prof)
        v = moments(prof).v
        total = sum((-1) ** len(i) * wv(i) * np.conj(wv(j))
                    for i, j in ordered_index_partitions(m))
        half = m // 2
        if m % 2 == 0:
            return 2 * (-1) ** half * (g * v) ** m * float(np.real(total))
        return 2 * (-1) ** (half + 1) * (g * v) ** m * float(np.imag(total))

    if kinds == ["q", "p"]:
        # expanding phi(q1 - g A1) and the p2 phase factor to second order
        # gives + g^2 v Im[...]; the sign is pinned by the exact simulator
        _require_assumption_a(prof)
        v = moments(prof).v
        val = wv((1, 2)) + np.conj(wv((1,))) * wv((2,))
        return g**2 * v * float(np.imag(val))

    raise UnsupportedCombination(
        f"no closed-form prediction for {spec}; use the exact oracle instead")
