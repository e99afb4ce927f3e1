"""Shared helpers: randomized book walks and independent brute-force oracles.

These are used at small scale by the unit tests and at full scale by the
acceptance suite. The brute-force routines deliberately re-derive their
answers from first principles rather than calling the implementation paths
they check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lobsim.book import (
    BookState,
    Side,
    empty_book,
    submit_order,
    cancel_order,
    validate_book,
)


@dataclass
class WalkStats:
    operations: int
    submissions: int
    cancellations: int
    transactions: int


def random_operation_walk(
    operations: int,
    seed: int,
    grid_size: int = 20,
    max_quantity: int = 3,
    cancel_probability: float = 0.35,
) -> WalkStats:
    """Drive random submissions and cancellations, asserting the core rules.

    After every operation the book must be uncrossed and well ordered, each
    submission must conserve quantity (trades plus resting remainder), and
    every transaction must print at a price level where an opposite-side
    order was resident before the submission.
    """
    rng = np.random.default_rng(seed)
    state = empty_book(grid_size)
    submissions = cancellations = transactions = 0
    for _ in range(operations):
        residents = state.bids + state.asks
        if residents and rng.random() < cancel_probability:
            victim = residents[rng.integers(len(residents))]
            state = cancel_order(
                state, victim.side, victim.price_level, victim.quantity, victim.id
            )
            cancellations += 1
        else:
            side = Side.BID if rng.random() < 0.5 else Side.ASK
            level = int(rng.integers(1, grid_size + 1))
            quantity = int(rng.integers(1, max_quantity + 1))
            opposite_levels = {
                o.price_level for o in state.side_orders(side.opposite)
            }
            new_id = state.next_seq
            state, trades = submit_order(state, side, level, quantity, time=float(submissions))
            submissions += 1
            transactions += len(trades)
            traded = sum(t.quantity for t in trades)
            rested = state.find_order(new_id)
            remainder = rested.quantity if rested is not None else 0
            assert traded + remainder == quantity, "quantity not conserved"
            for trade in trades:
                assert trade.price_level in opposite_levels, (
                    "transaction printed off any resident level"
                )
        validate_book(state)
    return WalkStats(operations, submissions, cancellations, transactions)


def brute_force_clearing(state: BookState) -> tuple[int, int] | None:
    """Independent volume-maximizing clearing price with the documented
    tie-break: max executable volume, then minimum absolute imbalance, then
    the tied price closest to the midpoint of the tied range, taking the
    higher price when equidistant."""
    levels = sorted({o.price_level for o in state.bids} | {o.price_level for o in state.asks})
    best: list[tuple[int, int]] = []  # (price, imbalance) at max volume
    best_volume = 0
    for price in levels:
        bid_quantity = sum(o.quantity for o in state.bids if o.price_level >= price)
        ask_quantity = sum(o.quantity for o in state.asks if o.price_level <= price)
        volume = min(bid_quantity, ask_quantity)
        if volume > best_volume:
            best_volume = volume
            best = [(price, bid_quantity - ask_quantity)]
        elif volume == best_volume and volume > 0:
            best.append((price, bid_quantity - ask_quantity))
    if best_volume <= 0:
        return None
    smallest = min(abs(imb) for _, imb in best)
    tied = [price for price, imb in best if abs(imb) == smallest]
    if len(tied) > 1:
        midpoint = (min(tied) + max(tied)) / 2.0
        best_distance = min(abs(p - midpoint) for p in tied)
        tied = [p for p in tied if abs(p - midpoint) == best_distance]
    return max(tied), best_volume


def random_crossed_book(rng: np.random.Generator, grid_size: int = 12) -> BookState:
    """Collect random orders without matching, as in an auction call phase."""
    state = empty_book(grid_size)
    n_orders = int(rng.integers(2, 9))
    for _ in range(n_orders):
        side = Side.BID if rng.random() < 0.5 else Side.ASK
        level = int(rng.integers(1, grid_size + 1))
        quantity = int(rng.integers(1, 4))
        state, _ = submit_order(state, side, level, quantity, matching=False)
    return state
