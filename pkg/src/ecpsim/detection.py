"""Detector read-out, signature classification and feed-forward.

The detectors are threshold (click / no-click) devices that resolve the
*relative* arrival time of photons but carry no absolute clock.  When every
time-tagged photon arrives in the same bin, the record is just "these
detectors fired together" and the bin label is erased before the kept
photons are conditioned on the result.  Because the delay satisfies
omega (t0 - t1) = 2 n pi, the erased alternatives add with no relative phase.
"""

from __future__ import annotations

import enum
import math
import re
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass

from .circuits import (
    CircuitPlan,
    ProtocolSpec,
    build_plan,
    maximally_entangled_target,
    prepare_sources,
    recyclable_target,
    run_plan,
)
from .elements import sigma_z
from .fock import (
    ModeLabel,
    OccupationConfig,
    PhotonicState,
    Polarization,
    TimeBin,
    apply_transform,
    fidelity,
    global_phase_aligned,
)

FEEDFORWARD_RAIL = "B"


class Label(enum.Enum):
    SUCCESS_PLUS = "SuccessPlus"
    SUCCESS_MINUS = "SuccessMinus"
    RECYCLABLE_PLUS = "RecyclablePlus"
    RECYCLABLE_MINUS = "RecyclableMinus"

    @property
    def is_success(self) -> bool:
        return self in (Label.SUCCESS_PLUS, Label.SUCCESS_MINUS)

    @property
    def sign(self) -> int:
        return 1 if self in (Label.SUCCESS_PLUS, Label.RECYCLABLE_PLUS) else -1


class FeedForward(enum.Enum):
    NONE = "none"
    SIGMA_Z_B = "sigma_z(B)"


FEEDFORWARD_FOR = {
    Label.SUCCESS_PLUS: FeedForward.NONE,
    Label.SUCCESS_MINUS: FeedForward.SIGMA_Z_B,
    Label.RECYCLABLE_PLUS: FeedForward.NONE,
    Label.RECYCLABLE_MINUS: FeedForward.SIGMA_Z_B,
}


class UnreachablePatternError(ValueError):
    """Click pattern that the protocol cannot produce."""


Click = tuple[int, TimeBin]

_CLICK_RE = re.compile(r"^D(\d+)(?:\^?@?(t0|t1))?$")


def parse_pattern(text: str) -> frozenset[Click]:
    """Parse ``"D1^t0, D3^t1, D5"`` (``@`` also accepted) into a click set."""
    clicks = set()
    for token in re.split(r"[\s,()]+", text.strip()):
        if not token:
            continue
        m = _CLICK_RE.match(token)
        if m is None:
            raise ValueError(f"bad click token {token!r}")
        tb = {None: TimeBin.UNTAGGED, "t0": TimeBin.T0, "t1": TimeBin.T1}[m.group(2)]
        clicks.add((int(m.group(1)), tb))
    return frozenset(clicks)


def format_pattern(clicks: Iterable[Click]) -> str:
    parts = []
    for det, tb in sorted(clicks, key=lambda c: (c[1] == TimeBin.UNTAGGED, c[1], c[0])):
        parts.append(f"D{det}" if tb is TimeBin.UNTAGGED else f"D{det}^{tb.name.lower()}")
    return "(" + ",".join(parts) + ")"


@dataclass(frozen=True)
class DetectionEvent:
    """One detector record.

    ``clicks`` is what the experimenter sees; ``internal_counts`` keeps the
    photon numbers behind it for bookkeeping and is never used to classify.
    """

    clicks: frozenset[Click]
    internal_counts: tuple[tuple[Click, int], ...]

    @classmethod
    def from_config(cls, config: OccupationConfig, plan: CircuitPlan) -> DetectionEvent:
        counts: dict[Click, int] = defaultdict(int)
        for m, n in config:
            counts[(plan.detector_of_rail(m.rail).det_id, m.timebin)] += n
        return cls(frozenset(counts), tuple(sorted(counts.items())))

    @property
    def photons(self) -> int:
        return sum(n for _, n in self.internal_counts)

    @property
    def sort_key(self):
        return tuple(sorted(self.clicks)), self.internal_counts

    def __str__(self):
        return format_pattern(self.clicks)


@dataclass(frozen=True)
class Outcome:
    event: DetectionEvent
    probability: float
    residual: PhotonicState


@dataclass(frozen=True)
class HeraldedEvent:
    event: DetectionEvent
    label: Label
    feedforward: FeedForward
    probability: float
    residual: PhotonicState  # after feed-forward
    fidelity: float


@dataclass(frozen=True)
class HeraldedOutcome:
    label: Label
    feedforward: FeedForward
    probability: float
    residual: PhotonicState
    fidelity: float
    n_events: int


def erase_absolute_time(config: OccupationConfig) -> OccupationConfig:
    """Drop the time-bin label when all tagged photons share one bin."""
    bins = {m.timebin for m, _ in config} - {TimeBin.UNTAGGED}
    if len(bins) != 1:
        return config
    return OccupationConfig(
        (ModeLabel(m.rail, m.polarization, TimeBin.UNTAGGED), n) for m, n in config
    )


def enumerate_outcomes(state: PhotonicState, plan: CircuitPlan) -> list[Outcome]:
    """All detector records with nonzero probability, in canonical order.

    Residuals are normalized states on the kept rails.
    """
    det_rails = set(plan.detector_rails)
    leftover = state.rails - det_rails - set(plan.kept_rails)
    if leftover:
        raise ValueError(f"state has photons on rails neither measured nor kept: {sorted(leftover)}")
    grouped: dict[OccupationConfig, dict[OccupationConfig, complex]] = defaultdict(lambda: defaultdict(complex))
    for cfg, amp in state:
        det, kept = cfg.split(det_rails)
        grouped[erase_absolute_time(det)][kept] += amp
    total = state.norm() ** 2
    outcomes = []
    for det_cfg, kept_terms in grouped.items():
        residual = PhotonicState(kept_terms, prune_epsilon=state.prune_epsilon)
        weight = residual.norm() ** 2
        if weight < state.prune_epsilon**2:
            continue
        outcomes.append(Outcome(DetectionEvent.from_config(det_cfg, plan), weight / total, residual.normalized()))
    outcomes.sort(key=lambda o: o.event.sort_key)
    return outcomes


# Detection tables of the Bell and three-party GHZ protocols, one line per
# table row.  Untagged entries fired together; t0/t1 entries fired with a
# delay |t0 - t1| between them.
BELL_TABLE = {
    Label.RECYCLABLE_PLUS: ["D1", "D2", "D3", "D4"],
    Label.RECYCLABLE_MINUS: ["D1,D2", "D3,D4"],
    Label.SUCCESS_PLUS: [
        "D1^t0,D1^t1", "D2^t0,D2^t1", "D3^t0,D3^t1", "D4^t0,D4^t1",
        "D1^t0,D2^t1", "D1^t1,D2^t0", "D3^t0,D4^t1", "D3^t1,D4^t0",
    ],
    Label.SUCCESS_MINUS: [
        "D1^t0,D3^t1", "D1^t1,D3^t0", "D2^t0,D4^t1", "D2^t1,D4^t0",
        "D2^t0,D3^t1", "D2^t1,D3^t0", "D1^t0,D4^t1", "D1^t1,D4^t0",
    ],
}

GHZ3_TABLE = {
    Label.RECYCLABLE_PLUS: [
        "D1,D2,D5", "D3,D4,D5",
        "D1,D6", "D2,D6", "D3,D6", "D4,D6",
    ],
    Label.RECYCLABLE_MINUS: [
        "D1,D2,D6", "D3,D4,D6",
        "D1,D5", "D2,D5", "D3,D5", "D4,D5",
    ],
    Label.SUCCESS_PLUS: [
        "D1^t0,D1^t1,D6", "D2^t0,D2^t1,D6",
        "D3^t0,D3^t1,D6", "D4^t0,D4^t1,D6",
        "D1^t0,D2^t1,D6", "D1^t1,D2^t0,D6",
        "D3^t0,D4^t1,D6", "D3^t1,D4^t0,D6",
        "D1^t0,D3^t1,D5", "D1^t1,D3^t0,D5",
        "D2^t0,D4^t1,D5", "D2^t1,D4^t0,D5",
        "D2^t0,D3^t1,D5", "D2^t1,D3^t0,D5",
        "D1^t0,D4^t1,D5", "D1^t1,D4^t0,D5",
    ],
    Label.SUCCESS_MINUS: [
        "D1^t0,D1^t1,D5", "D2^t0,D2^t1,D5",
        "D3^t0,D3^t1,D5", "D4^t0,D4^t1,D5",
        "D1^t0,D2^t1,D5", "D1^t1,D2^t0,D5",
        "D3^t0,D4^t1,D5", "D3^t1,D4^t0,D5",
        "D1^t0,D3^t1,D6", "D1^t1,D3^t0,D6",
        "D2^t0,D4^t1,D6", "D2^t1,D4^t0,D6",
        "D2^t0,D3^t1,D6", "D2^t1,D3^t0,D6",
        "D1^t0,D4^t1,D6", "D1^t1,D4^t0,D6",
    ],
}

GOLDEN_TABLES = {2: BELL_TABLE, 3: GHZ3_TABLE}


def golden_lookup(n_parties: int) -> dict[frozenset[Click], Label]:
    table = GOLDEN_TABLES[n_parties]
    out = {}
    for label, rows in table.items():
        for row in rows:
            key = parse_pattern(row)
            if key in out:
                raise AssertionError(f"duplicate table row {row}")
            out[key] = label
    return out


_GOLDEN_LOOKUPS = {n: golden_lookup(n) for n in GOLDEN_TABLES}


def derived_classify(event: DetectionEvent, plan: CircuitPlan) -> Label:
    """Classify from clicks alone with the rule valid for any party count.

    Clicks behind A and B' decide success (two clicks |t0 - t1| apart) or
    recycling (simultaneous).  The sign flips when a success pair spans
    Alice and Bob, when a simultaneous pair hits both ports of one PBS, and
    once per V-port click on the remaining rails.
    """
    a_rail, b_rail = plan.measured_rails[0], plan.measured_rails[1]
    dets = plan.detectors
    main, extra = [], defaultdict(list)
    for det_id, tb in event.clicks:
        if det_id not in dets:
            raise UnreachablePatternError(f"unknown detector D{det_id} in {event}")
        d = dets[det_id]
        if d.rail in (a_rail, b_rail):
            main.append((d, tb))
        else:
            if tb is not TimeBin.UNTAGGED:
                raise UnreachablePatternError(f"time tag on an undelayed detector in {event}")
            extra[d.rail].append(d)

    missing = set(plan.measured_rails[2:]) - set(extra)
    if missing or any(len(v) != 1 for v in extra.values()):
        raise UnreachablePatternError(f"need exactly one click per rail {plan.measured_rails[2:]}: {event}")
    v_clicks = sum(ds[0].port is Polarization.V for ds in extra.values())

    bins = sorted(tb for _, tb in main)
    if bins == [TimeBin.T0, TimeBin.T1]:
        success = True
        sign = -1 if main[0][0].rail != main[1][0].rail else 1
    elif bins and set(bins) == {TimeBin.UNTAGGED} and len(main) <= 2:
        success = False
        if len({d.rail for d, _ in main}) != 1:
            raise UnreachablePatternError(f"simultaneous clicks on both A and B' detectors: {event}")
        sign = -1 if len(main) == 2 else 1
    else:
        raise UnreachablePatternError(f"no protocol branch yields {event}")
    sign *= (-1) ** v_clicks
    if success:
        return Label.SUCCESS_PLUS if sign > 0 else Label.SUCCESS_MINUS
    return Label.RECYCLABLE_PLUS if sign > 0 else Label.RECYCLABLE_MINUS


def classify(event: DetectionEvent, plan: CircuitPlan) -> tuple[Label, FeedForward]:
    """Label and feed-forward from the click pattern only.

    Bell and three-party GHZ runs use the published tables; other party
    counts use :func:`derived_classify`.
    """
    n = len(plan.kept_rails)
    if n in _GOLDEN_LOOKUPS:
        try:
            label = _GOLDEN_LOOKUPS[n][event.clicks]
        except KeyError:
            raise UnreachablePatternError(f"pattern {event} is not in the detection table") from None
    else:
        label = derived_classify(event, plan)
    return label, FEEDFORWARD_FOR[label]


def apply_feedforward(residual: PhotonicState, op: FeedForward, rail: str = FEEDFORWARD_RAIL) -> PhotonicState:
    if op is FeedForward.NONE:
        return residual
    return apply_transform(residual, sigma_z(rail))


def target_state(label: Label, spec: ProtocolSpec) -> PhotonicState:
    """State the kept photons should hold after feed-forward."""
    if label.is_success:
        return maximally_entangled_target(spec.n_parties)
    return recyclable_target(spec, +1)


def herald_events(spec: ProtocolSpec, detector_map=None) -> list[HeraldedEvent]:
    """Run the circuit, classify every record and apply its feed-forward."""
    plan = build_plan(spec, detector_map)
    state = run_plan(prepare_sources(spec), plan).normalized()
    out = []
    for o in enumerate_outcomes(state, plan):
        label, ff = classify(o.event, plan)
        target = target_state(label, spec)
        corrected = global_phase_aligned(apply_feedforward(o.residual, ff), target)
        out.append(HeraldedEvent(o.event, label, ff, o.probability, corrected, fidelity(corrected, target)))
    return out


def herald(spec: ProtocolSpec, detector_map=None) -> list[HeraldedOutcome]:
    """Probability mass per label, in fixed label order.

    ``residual`` is the corrected state of the most likely record of that
    label (all records of one label agree up to a global phase) and
    ``fidelity`` the worst fidelity over the label's records.
    """
    events = herald_events(spec, detector_map)
    out = []
    for label in Label:
        mine = [e for e in events if e.label is label]
        if not mine:
            out.append(HeraldedOutcome(label, FEEDFORWARD_FOR[label], 0.0, PhotonicState(), math.nan, 0))
            continue
        best = max(mine, key=lambda e: e.probability)
        out.append(
            HeraldedOutcome(
                label,
                FEEDFORWARD_FOR[label],
                math.fsum(e.probability for e in mine),
                best.residual,
                min(e.fidelity for e in mine),
                len(mine),
            )
        )
    return out


def success_mass(outcomes: Iterable[HeraldedOutcome | HeraldedEvent]) -> float:
    return math.fsum(o.probability for o in outcomes if o.label.is_success)


def recyclable_mass(outcomes: Iterable[HeraldedOutcome | HeraldedEvent]) -> float:
    return math.fsum(o.probability for o in outcomes if not o.label.is_success)
