"""Exact stochastic simulation of the order book's continuous-time dynamics.

Each step draws an exponential waiting time at the state's normalized total
event rate and then selects one event with probability proportional to its
rate, applying it through the book core (including any matching cascade).
Trajectories are fully determined by the seed: every step consumes exactly
two uniform draws, time first, then event selection against the cumulative
rate table in its fixed order (ask arrivals by level, bid arrivals by level,
cancellations by submission seq).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .book import BookState, StateCaps, Transaction, empty_book, validate_book
from .observables import DepthProfile, QuoteSnapshot, XlmValues, depth, quotes, xlm
from .rates import (
    AbsorbingStateError,
    AnchoringMode,
    EventDescriptor,
    EventKind,
    RateModel,
    apply_event,
    arrival_rates,
    event_table,
)


class EngineError(Exception):
    """Base class for simulation driver errors."""


@dataclass(frozen=True)
class RecordingConfig:
    """What a simulation keeps as it runs.

    ``events`` retains one record per step; ``quotes``/``liquidity`` attach
    per-step snapshots to those records. ``depth_window`` keeps depth
    profiles for the final N steps (heatmap-style output). Book states are
    snapshotted at each time in ``checkpoint_times``; a checkpoint past the
    simulated horizon is simply absent from the result.
    """

    events: bool = True
    quotes: bool = False
    liquidity: bool = False
    depth_window: int = 0
    checkpoint_times: tuple[float, ...] = ()
    collect_inter_event_times: bool = False


@dataclass
class TrajectoryRecord:
    """One applied event with its time, trades, and optional snapshots."""

    time: float
    event: EventDescriptor
    transactions: tuple[Transaction, ...]
    quote: Optional[QuoteSnapshot] = None
    liquidity: Optional[XlmValues] = None


@dataclass
class DepthFrame:
    """Depth snapshot for one step in the trailing heatmap window."""

    event_index: int
    profile: DepthProfile
    transacted: bool


@dataclass
class SimulationResult:
    """A finished run: records per recording config, plus final state/time."""

    records: list[TrajectoryRecord]
    final_state: BookState
    final_time: float
    event_count: int
    checkpoints: dict[float, BookState]
    depth_frames: list[DepthFrame]
    inter_event_times: Optional[np.ndarray]
    initial_state: BookState
    seed: Optional[int]


@dataclass(frozen=True)
class StepResult:
    delta_t: float
    event: EventDescriptor
    state: BookState
    transactions: tuple[Transaction, ...]


class _PreparedTable:
    """Sampling-ready view of a state's event table.

    ``blueprints`` holds an :class:`EventDescriptor` for arrivals and an
    integer slot for cancellations, where slot i targets the state's i-th
    resident order in submission order; ``cum`` is the cumulative raw-rate
    array in the table's fixed order.
    """

    __slots__ = ("blueprints", "cum")

    def __init__(self, blueprints: list, cum: np.ndarray) -> None:
        self.blueprints = blueprints
        self.cum = cum

    @property
    def raw_total(self) -> float:
        return float(self.cum[-1]) if len(self.cum) else 0.0


class _TableBuilder:
    """Builds per-state sampling tables, caching state-independent parts.

    Uncapped static-support models have state-independent arrival rates, so
    the full cumulative table only depends on the resident-order count and
    is cached per count. Capped runs are cached per canonical book structure
    (the cap filter and relative rates only depend on it). Opposite-best
    uncapped tables are rebuilt per state.
    """

    def __init__(self, model: RateModel, caps: Optional[StateCaps]) -> None:
        self.model = model
        self.caps = caps
        self._by_count: dict[int, _PreparedTable] = {}
        self._by_key: dict = {}
        self._static = (
            caps is None and model.anchoring_mode is AnchoringMode.STATIC_SUPPORT
        )
        if self._static:
            arrivals = arrival_rates(model, empty_book(model.grid_size))
            self._arrival_blueprints = [d for d, _ in arrivals.entries]
            self._arrival_rates = np.asarray([r for _, r in arrivals.entries])

    def prepare(self, state: BookState) -> _PreparedTable:
        if self._static:
            count = state.order_count()
            prepared = self._by_count.get(count)
            if prepared is None:
                omega = self.model.per_order_cancel_rate
                cancel_part = (
                    np.full(count, omega) if omega > 0.0 else np.empty(0)
                )
                raw = np.concatenate([self._arrival_rates, cancel_part])
                blueprints = self._arrival_blueprints + list(range(len(cancel_part)))
                prepared = _PreparedTable(blueprints, np.cumsum(raw))
                self._by_count[count] = prepared
            return prepared
        if self.caps is not None:
            key = state.canonical_key()
            prepared = self._by_key.get(key)
            if prepared is None:
                prepared = self._build_from_table(state)
                self._by_key[key] = prepared
            return prepared
        return self._build_from_table(state)

    def _build_from_table(self, state: BookState) -> _PreparedTable:
        table = event_table(self.model, state, caps=self.caps)
        blueprints: list = []
        cancel_slot = 0
        for descriptor, _ in table.entries:
            if descriptor.kind is EventKind.CANCELLATION:
                blueprints.append(cancel_slot)
                cancel_slot += 1
            else:
                blueprints.append(descriptor)
        raw = np.asarray([r for _, r in table.entries])
        return _PreparedTable(blueprints, np.cumsum(raw))


def _sample_event(
    prepared: _PreparedTable, state: BookState, u: float
) -> EventDescriptor:
    cum = prepared.cum
    index = int(np.searchsorted(cum, u * cum[-1], side="right"))
    if index >= len(cum):
        index = len(cum) - 1
    blueprint = prepared.blueprints[index]
    if isinstance(blueprint, EventDescriptor):
        return blueprint
    order = state.orders_by_seq()[blueprint]
    return EventDescriptor(
        EventKind.CANCELLATION, order.price_level, order.quantity, target_order_id=order.id
    )


def step(
    state: BookState,
    model: RateModel,
    rng: np.random.Generator,
    now: float,
    caps: Optional[StateCaps] = None,
    _builder: Optional[_TableBuilder] = None,
) -> StepResult:
    """Advance the book by one event.

    Draws the waiting time from Exp(event intensity) — the per-state
    normalization pins the total rate there — then selects the event with
    probability proportional to its rate and applies it. Raises
    :class:`AbsorbingStateError` when the state admits no transition.
    """
    builder = _builder if _builder is not None else _TableBuilder(model, caps)
    prepared = builder.prepare(state)
    if prepared.raw_total <= 0.0:
        raise AbsorbingStateError("state has no outgoing transitions")
    u_time = rng.random()
    delta_t = -math.log1p(-u_time) / model.event_intensity
    u_event = rng.random()
    event = _sample_event(prepared, state, u_event)
    new_state, transactions = apply_event(state, event, now + delta_t)
    return StepResult(delta_t, event, new_state, tuple(transactions))


def simulate(
    model: RateModel,
    initial: Optional[BookState] = None,
    *,
    event_count: Optional[int] = None,
    time_horizon: Optional[float] = None,
    seed: int,
    recording: RecordingConfig = RecordingConfig(),
    caps: Optional[StateCaps] = None,
    debug_invariants: bool = False,
    _builder: Optional[_TableBuilder] = None,
) -> SimulationResult:
    """Run one trajectory until the stop criterion.

    Exactly reproducible: the same (model, initial, stop, seed, recording,
    caps) produce the same trajectory bit for bit. Stops after
    ``event_count`` events or when the next event would pass
    ``time_horizon``, whichever comes first; at least one must be given.
    """
    if event_count is None and time_horizon is None:
        raise EngineError("need event_count and/or time_horizon")
    if event_count is not None and event_count < 0:
        raise EngineError("event_count must be nonnegative")
    if time_horizon is not None and time_horizon < 0:
        raise EngineError("time_horizon must be nonnegative")

    state = initial if initial is not None else empty_book(model.grid_size)
    rng = np.random.default_rng(seed)
    builder = _builder if _builder is not None else _TableBuilder(model, caps)

    records: list[TrajectoryRecord] = []
    checkpoints: dict[float, BookState] = {}
    pending_checkpoints = sorted(recording.checkpoint_times)
    cp_index = 0
    window: deque[DepthFrame] = deque(maxlen=recording.depth_window or None)
    dts: list[float] = []

    now = 0.0
    events = 0
    while event_count is None or events < event_count:
        result = step(state, model, rng, now, caps=caps, _builder=builder)
        t_next = now + result.delta_t
        if time_horizon is not None and t_next > time_horizon:
            now = time_horizon
            break
        while cp_index < len(pending_checkpoints) and pending_checkpoints[cp_index] < t_next:
            checkpoints[pending_checkpoints[cp_index]] = state
            cp_index += 1
        state = result.state
        now = t_next
        events += 1
        if debug_invariants:
            validate_book(state)
        if recording.collect_inter_event_times:
            dts.append(result.delta_t)
        if recording.events:
            records.append(
                TrajectoryRecord(
                    time=now,
                    event=result.event,
                    transactions=result.transactions,
                    quote=quotes(state) if recording.quotes else None,
                    liquidity=(
                        xlm(state)
                        if recording.liquidity and state.bids and state.asks
                        else None
                    ),
                )
            )
        if recording.depth_window:
            window.append(DepthFrame(events, depth(state), bool(result.transactions)))

    while cp_index < len(pending_checkpoints) and pending_checkpoints[cp_index] <= now:
        checkpoints[pending_checkpoints[cp_index]] = state
        cp_index += 1

    return SimulationResult(
        records=records,
        final_state=state,
        final_time=now,
        event_count=events,
        checkpoints=checkpoints,
        depth_frames=list(window),
        inter_event_times=np.asarray(dts) if recording.collect_inter_event_times else None,
        initial_state=initial if initial is not None else empty_book(model.grid_size),
        seed=seed,
    )


def derive_run_seeds(base_seed: int, runs: int) -> list[int]:
    """Deterministic, independent per-run seeds from one base seed."""
    words = np.random.SeedSequence(base_seed).generate_state(runs, dtype=np.uint64)
    return [int(w) for w in words]


def run_ensemble(
    model: RateModel,
    runs: int,
    events_per_run: Optional[int] = None,
    base_seed: int = 0,
    *,
    time_horizon: Optional[float] = None,
    initial: Optional[BookState] = None,
    recording: RecordingConfig = RecordingConfig(),
    caps: Optional[StateCaps] = None,
    reduce: Optional[Callable[[SimulationResult], object]] = None,
) -> list:
    """Run independent trajectories with per-run seeds derived from the base.

    Results come back in run order; ``reduce`` maps each finished run to
    whatever should be kept (per-run summaries, final states, ...) so large
    ensembles do not hold every trajectory in memory.
    """
    if runs < 1:
        raise EngineError("runs must be >= 1")
    seeds = derive_run_seeds(base_seed, runs)
    builder = _TableBuilder(model, caps)
    out: list = []
    for run_seed in seeds:
        result = simulate(
            model,
            initial,
            event_count=events_per_run,
            time_horizon=time_horizon,
            seed=run_seed,
            recording=recording,
            caps=caps,
            _builder=builder,
        )
        out.append(reduce(result) if reduce is not None else result)
    return out
