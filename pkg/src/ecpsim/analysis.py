"""Success probabilities: closed forms, simulated values, sweeps and table checks."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .circuits import (
    ProtocolSpec,
    build_plan,
    prepare_sources,
    recyclable_to_input,
    recycled_coefficients,
    run_plan,
)
from .detection import (
    FEEDFORWARD_FOR,
    GOLDEN_TABLES,
    Outcome,
    Label,
    UnreachablePatternError,
    apply_feedforward,
    derived_classify,
    enumerate_outcomes,
    format_pattern,
    golden_lookup,
    herald_events,
    recyclable_mass,
    success_mass,
    target_state,
)
from .fock import fidelity

FIDELITY_TOL = 1e-10
MASS_TOL = 1e-10


def _beta(alpha: float) -> float:
    if not 0 <= abs(alpha) <= 1:
        raise ValueError(f"|alpha| must lie in [0, 1], got {alpha}")
    return math.sqrt(1 - abs(alpha) ** 2)


def p_success(alpha: float) -> float:
    """2|alpha beta|^2, the heralded success probability of one round."""
    a2 = abs(alpha) ** 2
    _beta(alpha)
    return 2 * a2 * (1 - a2)


def p_recyclable(alpha: float) -> float:
    a2 = abs(alpha) ** 2
    _beta(alpha)
    return a2**2 + (1 - a2) ** 2


def recycling_gain(alpha: float) -> float:
    """Extra success from one more round on the recyclable state.

    Equal to (|alpha|^4 + |beta|^4) * 2|alpha' beta'|^2
    = 2|alpha beta|^4 / (|alpha|^4 + |beta|^4).
    """
    a2 = abs(alpha) ** 2
    b2 = abs(_beta(alpha)) ** 2
    return 2 * (a2 * b2) ** 2 / (a2**2 + b2**2)


def total_probability(alpha: float, rounds: int = 1) -> float:
    """Success probability accumulated over ``rounds`` recycling rounds.

    Round r feeds the recyclable residual of round r - 1, with coefficients
    (alpha^2, beta^2)/sqrt(|alpha|^4 + |beta|^4), back into the protocol.
    Rounds beyond the first have no published counterpart.
    """
    if rounds < 0:
        raise ValueError("rounds must be non-negative")
    total, weight, a = 0.0, 1.0, abs(alpha)
    for r in range(rounds + 1):
        total += weight * p_success(a)
        if r == rounds:
            break
        weight *= p_recyclable(a)
        a = abs(recycled_coefficients(a, _beta(a))[0])
    return total


def simulated_masses(alpha: complex, n_parties: int = 2, beta: complex | None = None) -> tuple[float, float]:
    """(success, recyclable) probability mass from the full circuit simulation."""
    events = herald_events(ProtocolSpec(n_parties, alpha, beta))
    return success_mass(events), recyclable_mass(events)


def simulate_total_probability(alpha: complex, rounds: int = 1, n_parties: int = 2, beta: complex | None = None) -> float:
    """Total success over recycling rounds, each round simulated end to end.

    The recyclable residual of one round is turned into the next input by
    :func:`~ecpsim.circuits.recyclable_to_input`.
    """
    spec = ProtocolSpec(n_parties, alpha, beta)
    total, weight = 0.0, 1.0
    for r in range(rounds + 1):
        events = herald_events(spec)
        total += weight * success_mass(events)
        recyc = [e for e in events if not e.label.is_success]
        if r == rounds or not recyc:
            break
        weight *= recyclable_mass(events)
        spec = recyclable_to_input(max(recyc, key=lambda e: e.probability).residual, n_parties)
    return total


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    p_success: float
    p_recyclable: float
    p_total_after_rounds: float
    rounds: int


def default_grid(points: int = 99) -> list[float]:
    """``points`` uniformly spaced values strictly inside (0, 1)."""
    if points < 2:
        raise ValueError("grid needs at least two points")
    return [i / (points + 1) for i in range(1, points + 1)]


def sweep_row(alpha: float, rounds: int = 1, n_parties: int = 2, simulate: bool = True) -> SweepRow:
    if simulate:
        ps, pr = simulated_masses(alpha, n_parties)
        pt = ps if rounds == 0 else simulate_total_probability(alpha, rounds, n_parties)
    else:
        ps, pr, pt = p_success(alpha), p_recyclable(alpha), total_probability(alpha, rounds)
    return SweepRow(alpha, ps, pr, pt, rounds)


def sweep(
    alphas: Iterable[float] | None = None,
    rounds: int = 1,
    n_parties: int = 2,
    simulate: bool = True,
    workers: int = 1,
) -> list[SweepRow]:
    """One row per alpha, in grid order regardless of ``workers``."""
    alphas = default_grid() if alphas is None else list(alphas)

    def job(a):
        return sweep_row(a, rounds, n_parties, simulate)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, alphas))
    return [job(a) for a in alphas]


# ---------------------------------------------------------------------------
# detection-table verification


def table_grid(points: int = 9) -> list[float]:
    return default_grid(points)


@dataclass
class RowCheck:
    pattern: str
    label: Label
    passed: bool = True
    min_fidelity: float = 1.0
    problems: list[str] = field(default_factory=list)

    def fail(self, msg: str):
        self.passed = False
        self.problems.append(msg)


@dataclass
class TableReport:
    n_parties: int
    alphas: list[float]
    rows: list[RowCheck]
    source: str  # "published table" or "derived rule"
    mass_errors: list[str] = field(default_factory=list)

    @property
    def n_passed(self) -> int:
        return sum(r.passed for r in self.rows)

    @property
    def passed(self) -> bool:
        return self.n_passed == len(self.rows) and not self.mass_errors

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} rows={self.n_passed}/{len(self.rows)}"

    def lines(self) -> list[str]:
        name = "Bell" if self.n_parties == 2 else f"GHZ({self.n_parties})"
        out = [f"{name}: {len(self.rows)} signatures from the {self.source}, {len(self.alphas)} alpha values"]
        for r in self.rows:
            mark = "ok  " if r.passed else "FAIL"
            ff = FEEDFORWARD_FOR[r.label].value
            out.append(f"  {mark} {r.pattern:<24} {r.label.value:<16} ff={ff:<11} min F={r.min_fidelity:.12f}")
            for p in r.problems:
                out.append(f"       {p}")
        out.extend(f"  FAIL {m}" for m in self.mass_errors)
        return out


def verify_tables(
    n_parties: int = 2,
    alphas: Sequence[float] | None = None,
    detector_map: Mapping | None = None,
) -> TableReport:
    """Check every detection signature against the simulated residual states.

    For Bell and three-party GHZ the rows come from the published tables and
    must also match the derived classifier; for other party counts the rows
    are every pattern the simulation produces, labelled by the derived rule.
    In both cases each row must occur at every alpha, and its corrected
    residual must reach the label's target state to within 1e-10 in fidelity.
    """
    alphas = table_grid() if alphas is None else list(alphas)
    plan = build_plan(ProtocolSpec(n_parties), detector_map)
    expected: dict[frozenset, Label] | None = golden_lookup(n_parties) if n_parties in GOLDEN_TABLES else None
    raw_events: dict[float, dict[frozenset, Outcome]] = {}
    for a in alphas:
        spec = ProtocolSpec(n_parties, a)
        plan_a = build_plan(spec, detector_map)
        state = run_plan(prepare_sources(spec), plan_a).normalized()
        raw_events[a] = {o.event.clicks: o for o in enumerate_outcomes(state, plan_a)}

    report_rows: list[RowCheck] = []
    mass_errors: list[str] = []
    if expected is None:
        expected = {}
        for a in alphas:
            for clicks, o in raw_events[a].items():
                try:
                    expected.setdefault(clicks, derived_classify(o.event, plan))
                except UnreachablePatternError as exc:
                    mass_errors.append(f"alpha={a:g}: {exc}")
        source = "derived rule"
    else:
        source = "published table"

    for clicks, label in sorted(expected.items(), key=lambda kv: (list(Label).index(kv[1]), sorted(kv[0]))):
        row = RowCheck(format_pattern(clicks), label)
        for a in alphas:
            o = raw_events[a].get(clicks)
            if o is None:
                row.fail(f"alpha={a:g}: signature never occurs")
                continue
            try:
                derived = derived_classify(o.event, plan)
            except UnreachablePatternError as exc:
                row.fail(f"alpha={a:g}: derived rule rejects it ({exc})")
                derived = None
            if derived is not None and derived is not label:
                row.fail(f"alpha={a:g}: derived rule says {derived.value}")
            spec = ProtocolSpec(n_parties, a)
            corrected = apply_feedforward(o.residual, FEEDFORWARD_FOR[label])
            f = fidelity(corrected, target_state(label, spec))
            row.min_fidelity = min(row.min_fidelity, f)
            if f < 1 - FIDELITY_TOL:
                row.fail(f"alpha={a:g}: fidelity {f:.12f} with target")
        report_rows.append(row)

    for a in alphas:
        extra = set(raw_events[a]) - set(expected)
        for clicks in sorted(extra, key=sorted):
            mass_errors.append(f"alpha={a:g}: signature {format_pattern(clicks)} occurs but is not listed")
        s = math.fsum(o.probability for c, o in raw_events[a].items() if expected.get(c, Label.RECYCLABLE_PLUS).is_success)
        if abs(s - p_success(a)) > MASS_TOL:
            mass_errors.append(f"alpha={a:g}: success mass {s:.12f} != {p_success(a):.12f}")
    return TableReport(n_parties, alphas, report_rows, source, mass_errors)
