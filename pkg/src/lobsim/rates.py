"""State-dependent transition rates for the order book.

Order arrivals are drawn from per-side mixtures of DGX (discrete Gaussian
exponential, i.e. discrete truncated log-normal) distributions over
price-level ranks, one mixture component per trader group. Every resident
order carries a flat cancellation rate. The full per-state event table is
rescaled so its total equals a fixed event intensity, which pins the number
of events per unit of simulated time while leaving the relative odds of the
individual events untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from .book import BookState, Order, Side, StateCaps, cancel_order, submit_order


class RateModelError(Exception):
    """Base class for rate model configuration and evaluation errors."""


class AbsorbingStateError(RateModelError):
    """Raised when a state has no outgoing transition at all."""


class AnchoringMode(Enum):
    """How DGX rank 1 is pinned to an absolute price level."""

    STATIC_SUPPORT = "static"
    OPPOSITE_BEST = "opposite_best"


@dataclass(frozen=True)
class DgxParams:
    """Parameters of a DGX distribution over ranks ``1..support_size``."""

    mu: float
    sigma: float
    support_size: int

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise RateModelError(f"sigma must be positive, got {self.sigma}")
        if self.support_size < 1:
            raise RateModelError(f"support_size must be >= 1, got {self.support_size}")


def dgx_pmf(params: DgxParams) -> np.ndarray:
    """Probability weights over ranks 1..support_size.

    weight(r) is proportional to (1/r) * exp(-(ln r - mu)^2 / (2 sigma^2)),
    normalized to sum to one.
    """
    ranks = np.arange(1, params.support_size + 1, dtype=float)
    log_ranks = np.log(ranks)
    weights = np.exp(-((log_ranks - params.mu) ** 2) / (2.0 * params.sigma**2)) / ranks
    return weights / weights.sum()


@lru_cache(maxsize=256)
def _dgx_pmf_cached(params: DgxParams) -> np.ndarray:
    pmf = dgx_pmf(params)
    pmf.flags.writeable = False
    return pmf


@dataclass(frozen=True)
class TraderGroup:
    """One group's share of the order flow and its placement behavior."""

    share: float
    ask_params: DgxParams
    bid_params: DgxParams
    ask_anchor: int
    bid_anchor: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.share <= 1.0:
            raise RateModelError(f"group share must lie in [0, 1], got {self.share}")


@dataclass(frozen=True)
class RateModel:
    """Arrival and cancellation rates plus the global event intensity.

    ``per_order_cancel_rate`` applies to every resident order individually;
    ``event_intensity`` is the normalized total rate of any event occurring,
    enforced per state. Arrival quantities are fixed to ``unit_quantity``.
    """

    grid_size: int
    groups: tuple[TraderGroup, ...]
    per_order_cancel_rate: float
    event_intensity: float
    anchoring_mode: AnchoringMode = AnchoringMode.STATIC_SUPPORT
    unit_quantity: int = 1

    def __post_init__(self) -> None:
        if self.event_intensity <= 0:
            raise RateModelError(f"event intensity must be positive, got {self.event_intensity}")
        if self.per_order_cancel_rate < 0:
            raise RateModelError("cancellation rate must be nonnegative")
        if self.unit_quantity < 1:
            raise RateModelError("unit quantity must be >= 1")
        if not self.groups:
            raise RateModelError("at least one trader group is required")
        total_share = sum(g.share for g in self.groups)
        if abs(total_share - 1.0) > 1e-9:
            raise RateModelError(f"group shares must sum to 1, got {total_share}")
        for g in self.groups:
            for side, params, anchor in (
                (Side.ASK, g.ask_params, g.ask_anchor),
                (Side.BID, g.bid_params, g.bid_anchor),
            ):
                low, high = _support_bounds(side, anchor, params.support_size)
                if low < 1 or high > self.grid_size:
                    raise RateModelError(
                        f"{side.value} support {low}..{high} leaves grid 1..{self.grid_size}"
                    )


def _support_bounds(side: Side, anchor: int, support_size: int) -> tuple[int, int]:
    if side is Side.ASK:
        return anchor, anchor + support_size - 1
    return anchor - support_size + 1, anchor


class EventKind(Enum):
    ARRIVAL_ASK = "arrival_ask"
    ARRIVAL_BID = "arrival_bid"
    CANCELLATION = "cancellation"


_ARRIVAL_KIND = {Side.ASK: EventKind.ARRIVAL_ASK, Side.BID: EventKind.ARRIVAL_BID}
_ARRIVAL_SIDE = {EventKind.ARRIVAL_ASK: Side.ASK, EventKind.ARRIVAL_BID: Side.BID}


@dataclass(frozen=True)
class EventDescriptor:
    """One elementary transition: an arrival at a level or a cancellation."""

    kind: EventKind
    price_level: int
    quantity: int
    target_order_id: Optional[int] = None

    @property
    def side(self) -> Side:
        if self.kind is EventKind.CANCELLATION:
            raise ValueError("cancellation side is determined by the target order")
        return _ARRIVAL_SIDE[self.kind]


@dataclass(frozen=True)
class ArrivalRates:
    """Per-(side, level) arrival rates with truncation diagnostics.

    ``side_mass`` holds each side's total rate before global normalization;
    ``dropped_mass`` records DGX weight that mapped outside the grid (only
    possible in opposite-best anchoring).
    """

    entries: tuple[tuple[EventDescriptor, float], ...]
    side_mass: dict[Side, float]
    dropped_mass: dict[Side, float]

    def rate(self, side: Side, price_level: int) -> float:
        kind = _ARRIVAL_KIND[side]
        return sum(
            r for d, r in self.entries if d.kind is kind and d.price_level == price_level
        )


def _group_anchor(
    model: RateModel, group: TraderGroup, side: Side, state: BookState
) -> int:
    if model.anchoring_mode is AnchoringMode.STATIC_SUPPORT:
        return group.ask_anchor if side is Side.ASK else group.bid_anchor
    # Opposite-best: rank 1 sits on the opposite side's best quote, falling
    # back to the static anchor when that side is empty.
    if side is Side.ASK:
        best = state.best_bid()
        return best if best is not None else group.ask_anchor
    best = state.best_ask()
    return best if best is not None else group.bid_anchor


def arrival_rates(model: RateModel, state: BookState) -> ArrivalRates:
    """Arrival rate per (side, price level), summed over trader groups.

    Ranks map to levels ascending from the anchor on the ask side and
    descending on the bid side. Rank weight that falls off the grid is
    dropped (not renormalized) and reported in ``dropped_mass``. With valid
    static supports each side's mass is exactly the sum of group shares,
    i.e. 1.
    """
    entries: list[tuple[EventDescriptor, float]] = []
    side_mass: dict[Side, float] = {}
    dropped: dict[Side, float] = {}
    for side in (Side.ASK, Side.BID):
        level_rates: dict[int, float] = {}
        dropped_mass = 0.0
        for group in model.groups:
            if group.share == 0.0:
                continue
            params = group.ask_params if side is Side.ASK else group.bid_params
            pmf = _dgx_pmf_cached(params)
            anchor = _group_anchor(model, group, side, state)
            step = 1 if side is Side.ASK else -1
            for rank_index, weight in enumerate(pmf):
                level = anchor + step * rank_index
                if 1 <= level <= model.grid_size:
                    level_rates[level] = level_rates.get(level, 0.0) + group.share * weight
                else:
                    dropped_mass += group.share * weight
        kind = _ARRIVAL_KIND[side]
        for level in sorted(level_rates):
            rate = level_rates[level]
            if rate > 0.0:
                entries.append(
                    (EventDescriptor(kind, level, model.unit_quantity), rate)
                )
        side_mass[side] = sum(level_rates.values())
        dropped[side] = dropped_mass
    return ArrivalRates(tuple(entries), side_mass, dropped)


def cancellation_rates(
    model: RateModel, state: BookState
) -> tuple[tuple[Order, float], ...]:
    """Per-resident-order cancellation rates, in submission (seq) order."""
    omega = model.per_order_cancel_rate
    if omega == 0.0:
        return ()
    return tuple((order, omega) for order in state.orders_by_seq())


def level_cancellation_rate(model: RateModel, state: BookState, side: Side, price_level: int) -> float:
    """Aggregate cancellation rate at one level: omega times the order count there."""
    count = sum(
        1 for o in state.side_orders(side) if o.price_level == price_level
    )
    return model.per_order_cancel_rate * count


@dataclass(frozen=True)
class EventRateTable:
    """All possible transitions out of one state with their raw rates.

    Entry order is fixed: ask arrivals by level ascending, bid arrivals by
    level ascending, then cancellations by resident seq. ``raw_total`` is the
    pre-normalization total; multiplying every entry by ``normalization``
    rescales the table so it sums to the configured event intensity.
    """

    entries: tuple[tuple[EventDescriptor, float], ...]
    raw_total: float
    event_intensity: float

    @property
    def normalization(self) -> float:
        return self.event_intensity / self.raw_total

    def normalized_rates(self) -> list[tuple[EventDescriptor, float]]:
        factor = self.normalization
        return [(d, r * factor) for d, r in self.entries]

    def probabilities(self) -> list[tuple[EventDescriptor, float]]:
        return [(d, r / self.raw_total) for d, r in self.entries]


class VacuumLookupError(RateModelError):
    """A cancellation event referenced an id that is not resident."""

    def __init__(self, order_id: Optional[int]) -> None:
        super().__init__(f"cancellation target {order_id} is not resident")


def apply_event(
    state: BookState, event: EventDescriptor, time: float = 0.0
) -> tuple[BookState, list]:
    """Apply one elementary transition through the book core."""
    if event.kind is EventKind.CANCELLATION:
        target = state.find_order(event.target_order_id)
        if target is None:
            raise VacuumLookupError(event.target_order_id)
        new_state = cancel_order(
            state, target.side, target.price_level, target.quantity, target.id
        )
        return new_state, []
    return submit_order(state, event.side, event.price_level, event.quantity, time)


def _within_caps(state: BookState, caps: StateCaps) -> bool:
    if caps.max_orders is not None and state.order_count() > caps.max_orders:
        return False
    if caps.max_quantity is not None:
        for order in state.bids + state.asks:
            if order.quantity > caps.max_quantity:
                return False
    return True


def event_table(
    model: RateModel, state: BookState, caps: Optional[StateCaps] = None
) -> EventRateTable:
    """Enumerate every possible next event from ``state`` with its rate.

    With ``caps`` set, transitions whose resulting book would exceed the
    cutoffs are removed *before* normalization, so the surviving table still
    totals the configured event intensity; the engine and the exact solver
    share this table and therefore realize the same truncated process.

    Raises :class:`AbsorbingStateError` when nothing can happen at all.
    """
    arrivals = arrival_rates(model, state)
    entries: list[tuple[EventDescriptor, float]] = []
    for descriptor, rate in arrivals.entries:
        if caps is not None:
            if caps.max_quantity is not None and descriptor.quantity > caps.max_quantity:
                continue
            result, _ = apply_event(state, descriptor)
            if not _within_caps(result, caps):
                continue
        entries.append((descriptor, rate))
    for order, rate in cancellation_rates(model, state):
        entries.append(
            (
                EventDescriptor(
                    EventKind.CANCELLATION,
                    order.price_level,
                    order.quantity,
                    target_order_id=order.id,
                ),
                rate,
            )
        )
    raw_total = sum(rate for _, rate in entries)
    if raw_total <= 0.0:
        raise AbsorbingStateError("state has no outgoing transitions")
    return EventRateTable(tuple(entries), raw_total, model.event_intensity)
