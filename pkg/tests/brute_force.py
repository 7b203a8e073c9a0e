"""Symbolic reference for the Bell circuit.

Creation operators commute, so a multi-photon state is a polynomial in the
creation operators acting on the vacuum.  Every element is a linear
substitution of those variables; sympy expands the products directly.  The
circuit, its elements and the normalization are written out here from
scratch and share no code with ``ecpsim``; only the final relabelling into
``OccupationConfig`` touches the package so the two results can be compared.
"""

from __future__ import annotations

import math
from functools import lru_cache

import sympy as sp

from ecpsim.fock import ModeLabel, OccupationConfig, Polarization, TimeBin

RAILS = ["A", "B", "A'", "B'", "D1", "D2", "D3", "D4"]
POLS = ["H", "V"]
BINS = ["u", "t0", "t1"]

alpha, beta = sp.symbols("alpha beta")
r2 = sp.sqrt(2)


def _sym(rail, pol, tb):
    return sp.Symbol(f"a_{rail.replace(chr(39), 'p')}_{pol}_{tb}")


SYM = {(r, p, t): _sym(r, p, t) for r in RAILS for p in POLS for t in BINS}
LABEL = {
    s: ModeLabel(r, Polarization[p], {"u": TimeBin.UNTAGGED, "t0": TimeBin.T0, "t1": TimeBin.T1}[t])
    for (r, p, t), s in SYM.items()
}


def x(rail, pol, tb="u"):
    return SYM[(rail, pol, tb)]


def substitute(poly, rules):
    return sp.expand(poly.subs(rules, simultaneous=True))


def bs_rules(a, b):
    rules = {}
    for p in POLS:
        for t in BINS:
            rules[x(a, p, t)] = (x(a, p, t) + x(b, p, t)) / r2
            rules[x(b, p, t)] = (-x(a, p, t) + x(b, p, t)) / r2
    return rules


def decay_rules(rails):
    rules = {}
    for r in rails:
        rules[x(r, "H")] = alpha * r2 * x(r, "H")
        rules[x(r, "V")] = beta * r2 * x(r, "V")
    return rules


def flip_rules(rail):
    return {x(rail, "H"): x(rail, "V"), x(rail, "V"): x(rail, "H")}


def delay_rules(rail):
    return {x(rail, "H"): x(rail, "H", "t0"), x(rail, "V"): x(rail, "V", "t1")}


def hadamard_rules(rail):
    rules = {}
    for t in BINS:
        h, v = x(rail, "H", t), x(rail, "V", t)
        rules[h] = (h + v) / r2
        rules[v] = (h - v) / r2
    return rules


def pbs_rules(rail, h_det, v_det):
    rules = {}
    for t in BINS:
        rules[x(rail, "H", t)] = x(h_det, "H", t)
        rules[x(rail, "V", t)] = x(v_det, "V", t)
    return rules


@lru_cache(maxsize=None)
def bell_premeasurement_polynomial():
    """Polynomial P with state = P(a^dagger)|0>, alpha and beta symbolic."""
    src = (x("A", "H") * x("B", "H") + x("A", "V") * x("B", "V")) / r2
    src2 = (x("A'", "H") * x("B'", "H") + x("A'", "V") * x("B'", "V")) / r2
    poly = sp.expand(src * src2)
    for rules in (
        bs_rules("A", "B'"),
        decay_rules(["B", "A'"]),
        flip_rules("A'"),
        delay_rules("A"),
        delay_rules("B'"),
        hadamard_rules("A"),
        hadamard_rules("B'"),
        pbs_rules("A", "D1", "D2"),
        pbs_rules("B'", "D3", "D4"),
    ):
        poly = substitute(poly, rules)
    return poly


@lru_cache(maxsize=None)
def _monomials():
    poly = sp.Poly(bell_premeasurement_polynomial(), *SYM.values())
    gens = poly.gens
    out = []
    for exps, coeff in poly.terms():
        occ = {LABEL[g]: e for g, e in zip(gens, exps) if e}
        weight = math.prod(math.factorial(e) for e in occ.values())
        # (a^dagger)^n |0> = sqrt(n!) |n>
        out.append((OccupationConfig(occ), sp.lambdify((alpha, beta), coeff * sp.sqrt(weight), "math")))
    return out


def bell_premeasurement(a: float) -> dict[OccupationConfig, complex]:
    """Normalized-basis amplitudes of the Bell premeasurement state at real alpha."""
    b = math.sqrt(1 - a * a)
    amps = {}
    for cfg, f in _monomials():
        v = complex(f(a, b))
        if v != 0:
            amps[cfg] = amps.get(cfg, 0) + v
    return amps
