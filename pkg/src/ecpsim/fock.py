"""Sparse second-quantized photonic states.

A state is a superposition of occupation configurations.  Each configuration
lists how many photons sit in each optical mode, where a mode is the triple
(spatial rail, polarization, time bin).  Linear optical elements are described
by their action on creation operators and applied with exact bosonic
bookkeeping: a config with occupations n_m stands for
prod_m (a_m^dagger)^{n_m} / sqrt(n_m!) |0>.
"""

from __future__ import annotations

import cmath
import itertools
import math
from collections.abc import Iterable, Mapping
from enum import IntEnum
from types import MappingProxyType
from typing import NamedTuple

import numpy as np

DEFAULT_PRUNE_EPSILON = 1e-14
UNITARY_ATOL = 1e-12


class Polarization(IntEnum):
    H = 0
    V = 1


class TimeBin(IntEnum):
    UNTAGGED = 0
    T0 = 1
    T1 = 2


class ModeLabel(NamedTuple):
    """One optical mode; tuple ordering gives the canonical mode order."""

    rail: str
    polarization: Polarization = Polarization.H
    timebin: TimeBin = TimeBin.UNTAGGED

    def __repr__(self):
        tb = TimeBin(self.timebin)
        tag = "" if tb is TimeBin.UNTAGGED else f"@{tb.name.lower()}"
        return f"{Polarization(self.polarization).name}{tag}[{self.rail}]"


def mode(rail: str, pol: str | Polarization = "H", timebin: TimeBin = TimeBin.UNTAGGED) -> ModeLabel:
    if isinstance(pol, str):
        pol = Polarization[pol]
    return ModeLabel(rail, Polarization(pol), TimeBin(timebin))


class OccupationConfig(tuple):
    """Canonical occupation-number basis state.

    Stored as a sorted tuple of ``(ModeLabel, count)`` pairs with every count
    positive, so equal configurations are equal tuples.
    """

    __slots__ = ()

    def __new__(cls, occupations: Mapping[ModeLabel, int] | Iterable[tuple[ModeLabel, int]] = ()):
        items = occupations.items() if isinstance(occupations, Mapping) else occupations
        merged: dict[ModeLabel, int] = {}
        for m, n in items:
            if not isinstance(m, ModeLabel):
                m = ModeLabel(*m)
            n = int(n)
            if n < 0:
                raise ValueError(f"negative occupation {n} for mode {m!r}")
            merged[m] = merged.get(m, 0) + n
        return super().__new__(cls, sorted((m, n) for m, n in merged.items() if n > 0))

    @classmethod
    def _canonical(cls, items) -> OccupationConfig:
        # trusted fast path: items already sorted, merged and positive
        return tuple.__new__(cls, items)

    @classmethod
    def of(cls, *modes: ModeLabel) -> OccupationConfig:
        """Config with one photon per listed mode (repeats stack)."""
        counts: dict[ModeLabel, int] = {}
        for m in modes:
            counts[m] = counts.get(m, 0) + 1
        return cls._canonical(sorted(counts.items()))

    @property
    def total(self) -> int:
        return sum(n for _, n in self)

    @property
    def occupations(self) -> dict[ModeLabel, int]:
        return dict(self)

    @property
    def rails(self) -> frozenset[str]:
        return frozenset(m.rail for m, _ in self)

    def split(self, rails: Iterable[str]) -> tuple[OccupationConfig, OccupationConfig]:
        """Return (part on ``rails``, remainder)."""
        rails = set(rails)
        inside = [(m, n) for m, n in self if m.rail in rails]
        outside = [(m, n) for m, n in self if m.rail not in rails]
        return OccupationConfig._canonical(inside), OccupationConfig._canonical(outside)

    def __add__(self, other):
        merged = dict(self)
        for m, n in other:
            merged[m] = merged.get(m, 0) + n
        return OccupationConfig._canonical(sorted(merged.items()))

    def __repr__(self):
        if not self:
            return "|vac>"
        return "|" + ", ".join(f"{n}{m!r}" if n > 1 else repr(m) for m, n in self) + ">"


def _bosonic_weight(config: OccupationConfig) -> float:
    return math.prod(math.factorial(n) for _, n in config)


class PhotonicState:
    """Immutable sparse superposition over occupation configurations.

    Parameters
    ----------
    terms : mapping or iterable of (OccupationConfig, amplitude)
        Repeated configs are summed.
    prune_epsilon : float
        Amplitudes with modulus below this are dropped.
    """

    __slots__ = ("_terms", "prune_epsilon", "_total")

    def __init__(self, terms=(), prune_epsilon: float = DEFAULT_PRUNE_EPSILON):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[OccupationConfig, complex] = {}
        for cfg, amp in items:
            if not isinstance(cfg, OccupationConfig):
                cfg = OccupationConfig(cfg)
            amp = complex(amp)
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"non-finite amplitude on {cfg!r}")
            acc[cfg] = acc.get(cfg, 0j) + amp
        kept = {c: a for c, a in sorted(acc.items()) if abs(a) >= prune_epsilon}
        totals = {c.total for c in kept}
        if len(totals) > 1:
            raise ValueError(f"mixed photon numbers in one state: {sorted(totals)}")
        self._terms = MappingProxyType(kept)
        self._total = totals.pop() if totals else None
        self.prune_epsilon = prune_epsilon

    @classmethod
    def vacuum(cls) -> PhotonicState:
        return cls({OccupationConfig(): 1.0})

    @classmethod
    def from_modes(cls, *modes: ModeLabel, amplitude: complex = 1.0) -> PhotonicState:
        """Normalized product state a_1^dagger a_2^dagger ... |0>."""
        cfg = OccupationConfig.of(*modes)
        return cls({cfg: amplitude})

    @property
    def terms(self) -> Mapping[OccupationConfig, complex]:
        return self._terms

    @property
    def total(self) -> int | None:
        """Photon number shared by all terms; None for the zero vector."""
        return self._total

    @property
    def rails(self) -> frozenset[str]:
        out: set[str] = set()
        for cfg in self._terms:
            out |= cfg.rails
        return frozenset(out)

    @property
    def modes(self) -> frozenset[ModeLabel]:
        return frozenset(m for cfg in self._terms for m, _ in cfg)

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def __bool__(self):
        return bool(self._terms)

    def amplitude(self, config: OccupationConfig) -> complex:
        return self._terms.get(config, 0j)

    def _with(self, terms) -> PhotonicState:
        return PhotonicState(terms, prune_epsilon=self.prune_epsilon)

    def __add__(self, other: PhotonicState) -> PhotonicState:
        return self._with(itertools.chain(self, other))

    def __sub__(self, other: PhotonicState) -> PhotonicState:
        return self + (-1) * other

    def __mul__(self, scalar) -> PhotonicState:
        return self._with((c, scalar * a) for c, a in self)

    __rmul__ = __mul__

    def __neg__(self):
        return -1 * self

    def __truediv__(self, scalar) -> PhotonicState:
        return self * (1 / scalar)

    def norm(self) -> float:
        return norm(self)

    def normalized(self) -> PhotonicState:
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return self / n

    def apply(self, transform: ModeTransform) -> PhotonicState:
        return apply_transform(self, transform)

    def __repr__(self):
        if not self._terms:
            return "PhotonicState(0)"
        body = " + ".join(f"({a:.6g}){c!r}" for c, a in self)
        return f"PhotonicState({body})"


class ModeTransform:
    """Linear map on creation operators.

    ``columns[m]`` lists ``(output_mode, coefficient)`` pairs giving the image
    of a_m^dagger.  Modes not listed pass through unchanged.  ``vacant`` names
    modes that must be empty in any input state, which is what keeps
    relabelling maps such as a time delay injective.
    """

    __slots__ = ("columns", "unitary", "vacant", "name")

    def __init__(self, columns, unitary: bool = True, vacant: Iterable[ModeLabel] = (), name: str = ""):
        cols: dict[ModeLabel, tuple[tuple[ModeLabel, complex], ...]] = {}
        for m_in, image in dict(columns).items():
            acc: dict[ModeLabel, complex] = {}
            for m_out, c in image:
                c = complex(c)
                if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                    raise ValueError(f"non-finite coefficient in image of {m_in!r}")
                acc[m_out] = acc.get(m_out, 0j) + c
            cols[m_in] = tuple(sorted((m, c) for m, c in acc.items() if c != 0))
        self.columns = MappingProxyType(cols)
        self.unitary = bool(unitary)
        self.vacant = frozenset(vacant)
        self.name = name
        if self.unitary and not self.is_isometry():
            raise ValueError(f"transform {name or ''} flagged unitary but columns are not orthonormal")

    @classmethod
    def identity(cls) -> ModeTransform:
        return cls({}, name="identity")

    @property
    def support(self) -> list[ModeLabel]:
        out = set(self.columns)
        for image in self.columns.values():
            out.update(m for m, _ in image)
        return sorted(out)

    @property
    def rails(self) -> frozenset[str]:
        return frozenset(m.rail for m in self.support)

    def matrix(self) -> tuple[np.ndarray, list[ModeLabel], list[ModeLabel]]:
        """Dense coefficient matrix (rows: support, cols: listed inputs)."""
        rows = self.support
        cols = sorted(self.columns)
        index = {m: i for i, m in enumerate(rows)}
        mat = np.zeros((len(rows), len(cols)), dtype=complex)
        for j, m_in in enumerate(cols):
            for m_out, c in self.columns[m_in]:
                mat[index[m_out], j] = c
        return mat, rows, cols

    def is_isometry(self, atol: float = UNITARY_ATOL) -> bool:
        mat, _, cols = self.matrix()
        if not cols:
            return True
        gram = mat.conj().T @ mat
        return bool(np.allclose(gram, np.eye(len(cols)), atol=atol, rtol=0))

    def image(self, m: ModeLabel) -> tuple[tuple[ModeLabel, complex], ...]:
        return self.columns.get(m, ((m, 1 + 0j),))

    def then(self, other: ModeTransform) -> ModeTransform:
        """Composite transform: apply ``self`` first, then ``other``."""
        inputs = set(self.columns) | set(other.columns)
        cols = {}
        for m_in in inputs:
            acc: dict[ModeLabel, complex] = {}
            for mid, c1 in self.image(m_in):
                for m_out, c2 in other.image(mid):
                    acc[m_out] = acc.get(m_out, 0j) + c1 * c2
            cols[m_in] = list(acc.items())
        vacant = self.vacant | (other.vacant - {m for m in self.columns})
        return ModeTransform(
            cols,
            unitary=self.unitary and other.unitary,
            vacant=vacant,
            name=f"{self.name}>{other.name}",
        )

    def __repr__(self):
        flag = "unitary" if self.unitary else "non-unitary"
        return f"ModeTransform({self.name or '?'}, {len(self.columns)} modes, {flag})"


def _expand_power(image, n: int) -> dict[tuple[ModeLabel, ...], complex]:
    """(sum_i c_i b_i^dagger)^n as {sorted output-mode multiset: coefficient}."""
    out: dict[tuple[ModeLabel, ...], complex] = {}
    n_fact = math.factorial(n)
    for combo in itertools.combinations_with_replacement(range(len(image)), n):
        coeff = complex(n_fact)
        for idx, k in itertools.groupby(combo):
            k = len(list(k))
            coeff *= image[idx][1] ** k / math.factorial(k)
        key = tuple(image[i][0] for i in combo)
        out[key] = out.get(key, 0j) + coeff
    return out


def _transform_config(config: OccupationConfig, t: ModeTransform) -> dict[OccupationConfig, complex]:
    """Image of one normalized basis config, as normalized configs."""
    poly: dict[tuple[ModeLabel, ...], complex] = {(): 1 + 0j}
    for m, n in config:
        factor = _expand_power(t.image(m), n)
        nxt: dict[tuple[ModeLabel, ...], complex] = {}
        for k1, c1 in poly.items():
            for k2, c2 in factor.items():
                key = tuple(sorted(k1 + k2))
                nxt[key] = nxt.get(key, 0j) + c1 * c2
        poly = nxt
    scale = 1 / math.sqrt(_bosonic_weight(config))
    result: dict[OccupationConfig, complex] = {}
    for key, c in poly.items():
        out_cfg = OccupationConfig.of(*key)
        result[out_cfg] = result.get(out_cfg, 0j) + c * scale * math.sqrt(_bosonic_weight(out_cfg))
    return result


def apply_transform(state: PhotonicState, t: ModeTransform) -> PhotonicState:
    """Substitute every creation operator by its image under ``t`` and expand."""
    touched = set(t.columns)
    occupied_vacant = t.vacant & state.modes
    if occupied_vacant:
        raise ValueError(f"{t.name or 'transform'} requires empty modes {sorted(occupied_vacant)}")
    cache: dict[OccupationConfig, dict[OccupationConfig, complex]] = {}
    out: dict[OccupationConfig, complex] = {}
    for cfg, amp in state:
        active = OccupationConfig._canonical([(m, n) for m, n in cfg if m in touched])
        passive = OccupationConfig._canonical([(m, n) for m, n in cfg if m not in touched])
        if active not in cache:
            cache[active] = _transform_config(active, t)
        for img, c in cache[active].items():
            key = img + passive
            out[key] = out.get(key, 0j) + amp * c
    return PhotonicState(out, prune_epsilon=state.prune_epsilon)


def tensor(s1: PhotonicState, s2: PhotonicState) -> PhotonicState:
    """Product state of two states living on disjoint rails."""
    shared = s1.rails & s2.rails
    if shared:
        raise ValueError(f"tensor factors share rails {sorted(shared)}")
    terms = ((c1 + c2, a1 * a2) for (c1, a1), (c2, a2) in itertools.product(s1, s2))
    return PhotonicState(terms, prune_epsilon=min(s1.prune_epsilon, s2.prune_epsilon))


def inner_product(s1: PhotonicState, s2: PhotonicState) -> complex:
    """<s1|s2>, antilinear in the first argument."""
    if len(s1) > len(s2):
        return sum((a.conjugate() * s2.amplitude(c) for c, a in s1), 0j)
    return sum((s1.amplitude(c).conjugate() * a for c, a in s2), 0j)


def norm(s: PhotonicState) -> float:
    return math.sqrt(sum(abs(a) ** 2 for _, a in s))


def fidelity(s1: PhotonicState, s2: PhotonicState) -> float:
    """Phase-insensitive overlap |<s1|s2>|^2 / (|s1|^2 |s2|^2)."""
    n1, n2 = norm(s1), norm(s2)
    if n1 == 0 or n2 == 0:
        return 0.0
    return abs(inner_product(s1, s2)) ** 2 / (n1 * n2) ** 2


def project_and_collapse(
    state: PhotonicState,
    fixed: OccupationConfig,
    measured_rails: Iterable[str] | None = None,
) -> tuple[PhotonicState, float]:
    """Project the measured rails onto ``fixed``.

    Returns the renormalized state of the unmeasured rails and the outcome
    probability (relative to the squared norm of ``state``).  A zero
    probability yields the zero state.
    """
    rails = frozenset(fixed.rails if measured_rails is None else measured_rails)
    stray = fixed.rails - rails
    if stray:
        raise ValueError(f"fixed config touches unmeasured rails {sorted(stray)}")
    total = norm(state) ** 2
    if total == 0:
        raise ValueError("cannot measure the zero vector")
    matched = {}
    for cfg, amp in state:
        inside, outside = cfg.split(rails)
        if inside == fixed:
            matched[outside] = amp
    residual = PhotonicState(matched, prune_epsilon=state.prune_epsilon)
    prob = norm(residual) ** 2 / total
    if prob == 0:
        return PhotonicState(prune_epsilon=state.prune_epsilon), 0.0
    return residual.normalized(), prob


def global_phase_aligned(state: PhotonicState, reference: PhotonicState) -> PhotonicState:
    """Rotate ``state`` by the global phase that makes <reference|state> real positive."""
    ov = inner_product(reference, state)
    if ov == 0:
        return state
    return state * cmath.exp(-1j * cmath.phase(ov))
