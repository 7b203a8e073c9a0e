"""Optical elements as mode transforms.

Every constructor returns a :class:`~ecpsim.fock.ModeTransform` acting on the
named rails and on all three time bins of each rail, so elements can be
placed before or after a time-delay stage.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

from .fock import ModeLabel, ModeTransform, Polarization, TimeBin

H, V = Polarization.H, Polarization.V
TIMEBINS = tuple(TimeBin)
SQRT1_2 = 1 / math.sqrt(2)
NORMALIZATION_ATOL = 1e-12

HWP_ANGLES = (0.0, 22.5, 45.0)


@functools.lru_cache(maxsize=256)
def beam_splitter(a: str, b: str) -> ModeTransform:
    """50:50 beam splitter with the minus sign on the b -> a path.

    a -> (a + b)/sqrt2,  b -> (-a + b)/sqrt2, for both polarizations.
    """
    if a == b:
        raise ValueError("beam splitter needs two distinct rails")
    cols = {}
    for p in Polarization:
        for t in TIMEBINS:
            ma, mb = ModeLabel(a, p, t), ModeLabel(b, p, t)
            cols[ma] = [(ma, SQRT1_2), (mb, SQRT1_2)]
            cols[mb] = [(ma, -SQRT1_2), (mb, SQRT1_2)]
    return ModeTransform(cols, name=f"BS({a},{b})")


def _polarization_map(rail: str, h_image, v_image, name: str) -> ModeTransform:
    cols = {}
    for t in TIMEBINS:
        cols[ModeLabel(rail, H, t)] = [(ModeLabel(rail, p, t), c) for p, c in h_image]
        cols[ModeLabel(rail, V, t)] = [(ModeLabel(rail, p, t), c) for p, c in v_image]
    return ModeTransform(cols, name=name)


@functools.lru_cache(maxsize=256)
def hwp(rail: str, angle: float) -> ModeTransform:
    """Half-wave plate at one of the protocol angles (degrees).

    0 deg is sigma_z, 22.5 deg the Hadamard rotation, 45 deg the H/V swap.
    """
    if math.isclose(angle, 45.0):
        return _polarization_map(rail, [(V, 1)], [(H, 1)], f"HWP45({rail})")
    if math.isclose(angle, 22.5):
        return _polarization_map(
            rail, [(H, SQRT1_2), (V, SQRT1_2)], [(H, SQRT1_2), (V, -SQRT1_2)], f"HWP22.5({rail})"
        )
    if math.isclose(angle, 0.0, abs_tol=1e-12):
        return _polarization_map(rail, [(H, 1)], [(V, -1)], f"HWP0({rail})")
    raise ValueError(f"unsupported wave-plate angle {angle}; expected one of {HWP_ANGLES}")


def sigma_z(rail: str) -> ModeTransform:
    return hwp(rail, 0.0)


def sigma_x(rail: str) -> ModeTransform:
    return hwp(rail, 45.0)


def hadamard(rail: str) -> ModeTransform:
    return hwp(rail, 22.5)


@functools.lru_cache(maxsize=256)
def time_delay(rail: str) -> ModeTransform:
    """Unbalanced interferometer: tag H with t0 and V with t1.

    Only untagged modes are mapped; the tagged modes of the rail must be
    empty when the transform is applied.
    """
    cols = {
        ModeLabel(rail, H, TimeBin.UNTAGGED): [(ModeLabel(rail, H, TimeBin.T0), 1)],
        ModeLabel(rail, V, TimeBin.UNTAGGED): [(ModeLabel(rail, V, TimeBin.T1), 1)],
    }
    vacant = [ModeLabel(rail, p, t) for p in Polarization for t in (TimeBin.T0, TimeBin.T1)]
    return ModeTransform(cols, vacant=vacant, name=f"Delay({rail})")


def pbs(in_rails, out_rails) -> ModeTransform:
    """Polarizing beam splitter; H is transmitted, V reflected.

    ``in_rails`` holds one or two input rails, ``out_rails`` exactly two.
    Input i sends H to ``out_rails[i]`` and V to ``out_rails[1 - i]``.  With a
    single input this is the measurement splitter feeding an (H, V) detector
    pair.
    """
    in_rails, out_rails = tuple(in_rails), tuple(out_rails)
    if len(in_rails) not in (1, 2) or len(out_rails) != 2:
        raise ValueError(f"PBS takes 1-2 input rails and 2 output rails, got {len(in_rails)} and {len(out_rails)}")
    if len(set(in_rails)) != len(in_rails) or len(set(out_rails)) != 2:
        raise ValueError("PBS rails must be distinct")
    cols = {}
    for i, r in enumerate(in_rails):
        for t in TIMEBINS:
            cols[ModeLabel(r, H, t)] = [(ModeLabel(out_rails[i], H, t), 1)]
            cols[ModeLabel(r, V, t)] = [(ModeLabel(out_rails[1 - i], V, t), 1)]
    return ModeTransform(cols, name=f"PBS({','.join(in_rails)}->{','.join(out_rails)})")


def attenuation(alpha: complex, beta: complex, rails) -> ModeTransform:
    """Channel decay of a pair of maximally entangled sources.

    Each rail in ``rails`` marks the branch of one source (it holds one photon
    whose polarization labels the |H..H> or |V..V> term).  H is scaled by
    alpha*sqrt2 and V by beta*sqrt2, turning (|H..H> + |V..V>)/sqrt2 into
    alpha|H..H> + beta|V..V>.  Not unitary.
    """
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > NORMALIZATION_ATOL:
        raise ValueError(f"|alpha|^2 + |beta|^2 must be 1, got {abs(alpha) ** 2 + abs(beta) ** 2!r}")
    ca, cb = alpha * math.sqrt(2), beta * math.sqrt(2)
    cols = {}
    for r in rails:
        for t in TIMEBINS:
            cols[ModeLabel(r, H, t)] = [(ModeLabel(r, H, t), ca)]
            cols[ModeLabel(r, V, t)] = [(ModeLabel(r, V, t), cb)]
    return ModeTransform(cols, unitary=False, name=f"Decay({','.join(rails)})")


@dataclass(frozen=True)
class ElementSpec:
    """One stage of a circuit: which element, on which rails, with which settings."""

    kind: str
    rails: tuple[str, ...]
    params: tuple = field(default=())

    KINDS = ("BS", "PBS", "HWP", "TimeDelay", "SigmaZ", "Attenuation")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown element kind {self.kind!r}")
        n = len(self.rails)
        if self.kind == "BS" and n != 2:
            raise ValueError("BS touches exactly two rails")
        if self.kind in ("HWP", "TimeDelay", "SigmaZ") and n != 1:
            raise ValueError(f"{self.kind} touches exactly one rail")
        if self.kind == "PBS" and n not in (3, 4):
            raise ValueError("PBS needs 1-2 input rails followed by 2 output rails")

    @functools.lru_cache(maxsize=1024)
    def transform(self) -> ModeTransform:
        k, r = self.kind, self.rails
        if k == "BS":
            return beam_splitter(*r)
        if k == "HWP":
            return hwp(r[0], self.params[0])
        if k == "TimeDelay":
            return time_delay(r[0])
        if k == "SigmaZ":
            return sigma_z(r[0])
        if k == "PBS":
            return pbs(r[:-2], r[-2:])
        return attenuation(self.params[0], self.params[1], r)

    def __str__(self):
        if self.kind == "HWP":
            return f"HWP{self.params[0]:g}({self.rails[0]})"
        if self.kind == "PBS":
            return f"PBS({','.join(self.rails[:-2])}->{','.join(self.rails[-2:])})"
        return f"{self.kind}({','.join(self.rails)})"
