"""Protocol builders for the Bell and N-party GHZ concentration circuits.

Two copies of an n-party GHZ state are shared between n parties.  Rails
``A, B, C, ...`` carry the first copy and ``A', B', C', ...`` the second.
Photons A and B' meet on a beam splitter, the channel then degrades both
copies to alpha|H..H> + beta|V..V>, and the parties run their local
stations: a 45 deg wave plate on A', time delays and Hadamard plates on A and
B', Hadamard plates on C'..Z', and PBS + detector pairs on every measured
rail.  Photons A', B, C..Z are kept.
"""

from __future__ import annotations

import cmath
import math
import string
from collections.abc import Mapping
from dataclasses import dataclass, field
from types import MappingProxyType

from .elements import NORMALIZATION_ATOL, ElementSpec, sigma_x
from .fock import (
    ModeLabel,
    OccupationConfig,
    PhotonicState,
    Polarization,
    TimeBin,
    apply_transform,
    tensor,
)

H, V = Polarization.H, Polarization.V
MAX_PARTIES = len(string.ascii_uppercase)
RECYCLE_ATOL = 1e-10


def party_rail(k: int, primed: bool = False) -> str:
    return string.ascii_uppercase[k] + ("'" if primed else "")


def detector_rail(det_id: int) -> str:
    return f"D{det_id}"


@dataclass(frozen=True)
class ProtocolSpec:
    """Input of one concentration run.

    ``n_parties == 2`` is the Bell protocol.  ``beta`` defaults to the
    non-negative real sqrt(1 - |alpha|^2).
    """

    n_parties: int = 2
    alpha: complex = 1 / math.sqrt(2)
    beta: complex | None = None
    recycle_rounds: int = 0

    def __post_init__(self):
        if not 2 <= self.n_parties <= MAX_PARTIES:
            raise ValueError(f"n_parties must be in [2, {MAX_PARTIES}], got {self.n_parties}")
        if self.recycle_rounds < 0:
            raise ValueError("recycle_rounds must be non-negative")
        if self.beta is None:
            if abs(self.alpha) > 1 + NORMALIZATION_ATOL:
                raise ValueError(f"|alpha| must not exceed 1, got {abs(self.alpha)}")
            object.__setattr__(self, "beta", math.sqrt(max(0.0, 1 - abs(self.alpha) ** 2)))
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1) > NORMALIZATION_ATOL:
            raise ValueError("|alpha|^2 + |beta|^2 must equal 1")

    @classmethod
    def bell(cls, alpha=1 / math.sqrt(2), beta=None, recycle_rounds=0) -> ProtocolSpec:
        return cls(2, alpha, beta, recycle_rounds)

    @classmethod
    def ghz(cls, n_parties: int, alpha=1 / math.sqrt(2), beta=None, recycle_rounds=0) -> ProtocolSpec:
        return cls(n_parties, alpha, beta, recycle_rounds)

    @property
    def protocol(self) -> str:
        return "bell" if self.n_parties == 2 else "ghz"

    @property
    def kept_rails(self) -> tuple[str, ...]:
        return (party_rail(0, True), party_rail(1)) + tuple(party_rail(k) for k in range(2, self.n_parties))

    @property
    def measured_rails(self) -> tuple[str, ...]:
        return (party_rail(0), party_rail(1, True)) + tuple(party_rail(k, True) for k in range(2, self.n_parties))


@dataclass(frozen=True)
class Detector:
    det_id: int
    rail: str
    port: Polarization

    @property
    def output_rail(self) -> str:
        return detector_rail(self.det_id)


def default_detector_map(n_parties: int) -> dict[int, tuple[str, Polarization]]:
    """Detector id -> (measured rail, PBS port).

    D1/D2 watch A (H/V ports) and D3/D4 watch B'.  On the extra rails C'..Z'
    the lower id of each pair sits on the V port (D5 = V, D6 = H for C'),
    which is the labelling the GHZ detection table uses.
    """
    out = {1: (party_rail(0), H), 2: (party_rail(0), V), 3: (party_rail(1, True), H), 4: (party_rail(1, True), V)}
    for k in range(2, n_parties):
        v_id = 2 * k + 1
        out[v_id] = (party_rail(k, True), V)
        out[v_id + 1] = (party_rail(k, True), H)
    return out


@dataclass(frozen=True)
class CircuitPlan:
    elements: tuple[ElementSpec, ...]
    measured_rails: tuple[str, ...]
    kept_rails: tuple[str, ...]
    detectors: Mapping[int, Detector] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "detectors", MappingProxyType(dict(self.detectors)))
        measured, kept = set(self.measured_rails), set(self.kept_rails)
        if measured & kept:
            raise ValueError(f"rails both measured and kept: {sorted(measured & kept)}")
        watched = {d.rail for d in self.detectors.values()}
        if watched != measured:
            raise ValueError("every measured rail needs a detector pair and only measured rails may be watched")
        delayed = [e.rails[0] for e in self.elements if e.kind == "TimeDelay"]
        if len(delayed) != len(set(delayed)):
            raise ValueError("a rail may pass at most one time delay")

    @property
    def detector_rails(self) -> tuple[str, ...]:
        return tuple(d.output_rail for _, d in sorted(self.detectors.items()))

    def detector_of_rail(self, rail: str) -> Detector:
        return next(d for d in self.detectors.values() if d.output_rail == rail)

    def __len__(self):
        return len(self.elements)


def _ghz(rails, amp_h: complex = 1 / math.sqrt(2), amp_v: complex = 1 / math.sqrt(2)) -> PhotonicState:
    all_h = OccupationConfig.of(*(ModeLabel(r, H) for r in rails))
    all_v = OccupationConfig.of(*(ModeLabel(r, V) for r in rails))
    return PhotonicState({all_h: amp_h, all_v: amp_v})


def prepare_sources(spec: ProtocolSpec) -> PhotonicState:
    """Two maximally entangled n-photon GHZ states on unprimed and primed rails."""
    n = spec.n_parties
    first = _ghz([party_rail(k) for k in range(n)])
    second = _ghz([party_rail(k, True) for k in range(n)])
    return tensor(first, second)


def build_plan(spec: ProtocolSpec, detector_map: Mapping[int, tuple[str, Polarization]] | None = None) -> CircuitPlan:
    """Ordered element list, measured/kept rails and detector wiring.

    The Bell plan has nine stages; each extra party adds a Hadamard plate and
    a PBS on its primed rail.
    """
    n = spec.n_parties
    a, b = party_rail(0), party_rail(1)
    a_p, b_p = party_rail(0, True), party_rail(1, True)
    dmap = default_detector_map(n) if detector_map is None else dict(detector_map)
    detectors = {i: Detector(i, r, Polarization(p)) for i, (r, p) in dmap.items()}

    def pbs_stage(rail):
        ports = {d.port: d.output_rail for d in detectors.values() if d.rail == rail}
        if set(ports) != {H, V}:
            raise ValueError(f"rail {rail} needs one H and one V detector")
        return ElementSpec("PBS", (rail, ports[H], ports[V]))

    elements = [
        ElementSpec("BS", (a, b_p)),
        ElementSpec("Attenuation", (b, a_p), (spec.alpha, spec.beta)),
        ElementSpec("HWP", (a_p,), (45.0,)),
        ElementSpec("TimeDelay", (a,)),
        ElementSpec("TimeDelay", (b_p,)),
        ElementSpec("HWP", (a,), (22.5,)),
        ElementSpec("HWP", (b_p,), (22.5,)),
        pbs_stage(a),
        pbs_stage(b_p),
    ]
    for k in range(2, n):
        rail = party_rail(k, True)
        elements += [ElementSpec("HWP", (rail,), (22.5,)), pbs_stage(rail)]
    return CircuitPlan(tuple(elements), spec.measured_rails, spec.kept_rails, detectors)


def run_plan(state: PhotonicState, plan: CircuitPlan) -> PhotonicState:
    for element in plan.elements:
        state = apply_transform(state, element.transform())
    return state


def run_to_premeasurement(spec: ProtocolSpec, detector_map=None) -> PhotonicState:
    """Normalized state arriving at the detectors."""
    plan = build_plan(spec, detector_map)
    return run_plan(prepare_sources(spec), plan).normalized()


def less_entangled_state(spec: ProtocolSpec) -> PhotonicState:
    """alpha|H..H> + beta|V..V> on the kept rails (A', B, C, ...)."""
    return _ghz(spec.kept_rails, spec.alpha, spec.beta)


def maximally_entangled_target(n_parties: int) -> PhotonicState:
    """(|H..H> + |V..V>)/sqrt2 on the kept rails."""
    return _ghz(ProtocolSpec(n_parties).kept_rails)


def recycled_coefficients(alpha: complex, beta: complex) -> tuple[complex, complex]:
    """Coefficients (alpha^2, beta^2)/sqrt(|alpha|^4 + |beta|^4) of the recyclable state."""
    s = math.sqrt(abs(alpha) ** 4 + abs(beta) ** 4)
    return alpha**2 / s, beta**2 / s


def recyclable_target(spec: ProtocolSpec, sign: int = 1) -> PhotonicState:
    """alpha'|V H..H> +/- beta'|H V..V> on the kept rails (A' flipped)."""
    a1, b1 = recycled_coefficients(spec.alpha, spec.beta)
    a_p, rest = spec.kept_rails[0], spec.kept_rails[1:]
    vhh = OccupationConfig.of(ModeLabel(a_p, V), *(ModeLabel(r, H) for r in rest))
    hvv = OccupationConfig.of(ModeLabel(a_p, H), *(ModeLabel(r, V) for r in rest))
    return PhotonicState({vhh: a1, hvv: sign * b1})


def recyclable_to_input(state: PhotonicState, n_parties: int | None = None) -> ProtocolSpec:
    """Turn a recyclable residual into the input of a fresh round.

    A 45 deg plate on A' maps alpha'|V H..H> + beta'|H V..V> onto
    alpha'|H..H> + beta'|V..V>; the coefficients of that state (global phase
    fixed so alpha' is real non-negative) seed the next spec.
    """
    if n_parties is None:
        n_parties = len(state.rails)
    kept = ProtocolSpec(n_parties).kept_rails
    if state.rails - set(kept):
        raise ValueError(f"state lives on {sorted(state.rails)}, expected kept rails {kept}")
    flipped = apply_transform(state, sigma_x(kept[0])).normalized()
    all_h = OccupationConfig.of(*(ModeLabel(r, H) for r in kept))
    all_v = OccupationConfig.of(*(ModeLabel(r, V) for r in kept))
    a1, b1 = flipped.amplitude(all_h), flipped.amplitude(all_v)
    deficit = 1 - (abs(a1) ** 2 + abs(b1) ** 2)
    if deficit > RECYCLE_ATOL:
        raise ValueError(f"state is not of recyclable form (overlap deficit {deficit:.3g})")
    if abs(a1) > 0:
        phase = cmath.exp(-1j * cmath.phase(a1))
        a1, b1 = a1 * phase, b1 * phase
    a1 = a1.real if abs(a1.imag) < 1e-15 else a1
    b1 = b1.real if abs(b1.imag) < 1e-15 else b1
    return ProtocolSpec(n_parties, a1, b1)


__all__ = [
    "CircuitPlan",
    "Detector",
    "ProtocolSpec",
    "build_plan",
    "default_detector_map",
    "detector_rail",
    "less_entangled_state",
    "maximally_entangled_target",
    "party_rail",
    "prepare_sources",
    "recyclable_target",
    "recyclable_to_input",
    "recycled_coefficients",
    "run_plan",
    "run_to_premeasurement",
]
