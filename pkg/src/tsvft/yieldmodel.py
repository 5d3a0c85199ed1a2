"""Group, TSV and chip yield under independent per-TSV faults."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from itertools import combinations
from typing import Sequence

import numpy as np

from .relgraph import RelGraph
from .structure import ToleranceStructure, _RepairNetwork

EXACT, BINOMIAL, MONTE_CARLO = "exact", "binomial", "montecarlo"
MODES = (EXACT, BINOMIAL, MONTE_CARLO)


class YieldError(ValueError):
    pass


@dataclass(frozen=True)
class YieldParams:
    p: float = 0.001
    mode: str = BINOMIAL
    samples: int = 100_000
    seed: int = 0
    exact_budget: int = 20  # max TSVs in a group for exhaustive enumeration
    assume_k_tolerant: bool = False

    def __post_init__(self):
        if not 0 <= self.p < 1:
            raise YieldError(f"defect probability {self.p} outside [0, 1)")
        if self.mode not in MODES:
            raise YieldError(f"unknown yield mode {self.mode!r}")

    def with_mode(self, mode: str, **kw) -> "YieldParams":
        d = dict(self.__dict__, mode=mode)
        d.update(kw)
        return YieldParams(**d)


@dataclass(frozen=True)
class YieldEstimate:
    value: float
    stderr: float = 0.0
    samples: int = 0


def _group_tsvs(g: RelGraph, st: ToleranceStructure) -> tuple[list[str], list[str]]:
    spares = [s for s in g.s_tsvs if s in set(st.used_spares)]
    return list(g.f_tsvs), spares


def binomial_yield(num_tsvs: int, k: int, p: float) -> float:
    """P(at most k of num_tsvs independent TSVs fail)."""
    return math.fsum(math.comb(num_tsvs, i) * p**i * (1 - p) ** (num_tsvs - i) for i in range(0, min(k, num_tsvs) + 1))


def exact_yield(g: RelGraph, st: ToleranceStructure, p: float, budget: int = 20) -> float:
    """Sum of probabilities of all repairable fault patterns.

    Patterns without faulty f-TSVs need no repair; patterns with more
    faulty f-TSVs than healthy spares cannot be repaired.  Every other
    pattern is decided by a flow check.
    """
    fs, spares = _group_tsvs(g, st)
    total = len(fs) + len(spares)
    if total > budget:
        raise YieldError(f"exact enumeration over {total} TSVs exceeds budget {budget}")
    if p == 0:
        return 1.0
    rn = _RepairNetwork(st, g)
    q = 1 - p
    terms = [q ** len(fs)]  # no faulty f-TSV: spares may fail freely
    u = len(spares)
    for nf in range(1, min(len(fs), u) + 1):
        for fset in combinations(fs, nf):
            for ns in range(0, u - nf + 1):
                for sset in combinations(spares, ns):
                    if rn.solve(fset + sset).ok:
                        nfail = nf + ns
                        terms.append(p**nfail * q ** (total - nfail))
    return math.fsum(terms)


def monte_carlo_yield(g: RelGraph, st: ToleranceStructure, p: float, samples: int, seed: int = 0,
                      assume_k_tolerant: bool = False, chunk: int = 1 << 16) -> YieldEstimate:
    """Sampled group yield with a numpy PCG64 stream; distinct patterns are checked once.

    With ``assume_k_tolerant`` patterns with at most k failing TSVs are
    counted as repairable without a flow check; only meant for structures
    that pass verify.
    """
    if samples <= 0:
        raise YieldError("samples must be positive")
    fs, spares = _group_tsvs(g, st)
    names = fs + spares
    T = len(names)
    m = len(fs)
    if p == 0 or T == 0:
        return YieldEstimate(1.0, 0.0, samples)
    rng = np.random.Generator(np.random.PCG64(seed))
    rn = _RepairNetwork(st, g)
    cache: dict[bytes, bool] = {}
    ok = 0
    left = samples
    while left:
        size = min(chunk, left)
        left -= size
        faults = rng.random((size, T)) < p
        any_f = faults[:, :m].any(axis=1)
        ok += int(size - any_f.sum())
        if not any_f.any():
            continue
        rows = faults[any_f]
        if assume_k_tolerant:
            small = rows.sum(axis=1) <= st.k
            ok += int(small.sum())
            rows = rows[~small]
        if len(rows) == 0:
            continue
        uniq, counts = np.unique(np.packbits(rows, axis=1), axis=0, return_counts=True)
        for packed, cnt in zip(uniq, counts):
            key = packed.tobytes()
            res = cache.get(key)
            if res is None:
                bits = np.unpackbits(packed)[:T].astype(bool)
                res = rn.solve([names[i] for i in np.nonzero(bits)[0]]).ok
                cache[key] = res
            if res:
                ok += int(cnt)
    y = ok / samples
    return YieldEstimate(y, math.sqrt(max(y * (1 - y), 0.0) / samples), samples)


def group_yield(g: RelGraph, st: ToleranceStructure, params: YieldParams) -> float:
    if params.p == 0:
        return 1.0
    if params.mode == EXACT:
        return exact_yield(g, st, params.p, params.exact_budget)
    if params.mode == BINOMIAL:
        M = g.m + len(st.used_spares)
        return binomial_yield(M, st.k, params.p)
    return monte_carlo_yield(g, st, params.p, params.samples, params.seed, params.assume_k_tolerant).value


def _dec(x) -> Decimal:
    return Decimal(repr(float(x)))


def _check_prob(x, what):
    if not 0 <= x <= 1:
        raise YieldError(f"{what} {x} outside [0, 1]")


def tsv_yield(group_yields: Sequence[float]) -> float:
    """Product of group yields, computed in decimal to avoid binary rounding drift."""
    prod = Decimal(1)
    for y in group_yields:
        _check_prob(y, "group yield")
        prod *= _dec(y)
    return float(prod)


@dataclass(frozen=True)
class ChipYieldInputs:
    die_yields: tuple[float, ...]
    bonding_yields: tuple[float, ...]
    tsv_yields: tuple[float, ...]


def chip_yield(inputs: ChipYieldInputs) -> float:
    layers = len(inputs.die_yields)
    if layers < 2:
        raise YieldError("a 3D stack needs at least two dies")
    if len(inputs.bonding_yields) != layers - 1 or len(inputs.tsv_yields) != layers - 1:
        raise YieldError(
            f"{layers} dies need {layers - 1} bonding and TSV yields, got "
            f"{len(inputs.bonding_yields)} and {len(inputs.tsv_yields)}"
        )
    prod = Decimal(1)
    for y in inputs.die_yields:
        _check_prob(y, "die yield")
        prod *= _dec(y)
    for b, t in zip(inputs.bonding_yields, inputs.tsv_yields):
        _check_prob(b, "bonding yield")
        _check_prob(t, "TSV yield")
        prod *= _dec(b) * _dec(t)
    return float(prod)
