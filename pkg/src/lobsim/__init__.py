"""Exact stochastic limit order book simulation.

A deterministic matching core (price-time priority, partial matching,
call-auction uncross), a state-dependent event-rate model with DGX arrival
mixtures, a Gillespie-style exact simulator, snapshot and trajectory
observables, and an exact generator-matrix solver on truncated state spaces
for validating the engine.
"""

from .book import (
    BookState,
    DeltaMismatchError,
    InvariantViolation,
    Order,
    OrderBookError,
    OrderSizeError,
    PriceGridError,
    Side,
    StateCaps,
    Transaction,
    VacuumAnnihilationError,
    auction_match,
    cancel_order,
    empty_book,
    indicative_price,
    submit_order,
    validate_book,
)
from .engine import (
    RecordingConfig,
    SimulationResult,
    StepResult,
    TrajectoryRecord,
    derive_run_seeds,
    run_ensemble,
    simulate,
    step,
)
from .observables import (
    DepthProfile,
    MomentEstimate,
    QuoteSnapshot,
    RunSummary,
    TransactionSeries,
    UndefinedLiquidityError,
    XlmValues,
    depth,
    ensemble_covariance,
    ensemble_moment,
    quotes,
    returns,
    summarize_run,
    transaction_observables,
    xlm,
)
from .rates import (
    AbsorbingStateError,
    AnchoringMode,
    ArrivalRates,
    DgxParams,
    EventDescriptor,
    EventKind,
    EventRateTable,
    RateModel,
    RateModelError,
    TraderGroup,
    apply_event,
    arrival_rates,
    cancellation_rates,
    dgx_pmf,
    event_table,
)

__version__ = "0.1.0"

__all__ = [
    "AbsorbingStateError",
    "AnchoringMode",
    "ArrivalRates",
    "BookState",
    "DeltaMismatchError",
    "DepthProfile",
    "DgxParams",
    "EventDescriptor",
    "EventKind",
    "EventRateTable",
    "InvariantViolation",
    "MomentEstimate",
    "Order",
    "OrderBookError",
    "OrderSizeError",
    "PriceGridError",
    "QuoteSnapshot",
    "RateModel",
    "RateModelError",
    "RecordingConfig",
    "RunSummary",
    "Side",
    "SimulationResult",
    "StateCaps",
    "StepResult",
    "TraderGroup",
    "TrajectoryRecord",
    "Transaction",
    "TransactionSeries",
    "UndefinedLiquidityError",
    "VacuumAnnihilationError",
    "XlmValues",
    "apply_event",
    "arrival_rates",
    "auction_match",
    "cancel_order",
    "cancellation_rates",
    "depth",
    "derive_run_seeds",
    "dgx_pmf",
    "empty_book",
    "ensemble_covariance",
    "ensemble_moment",
    "event_table",
    "indicative_price",
    "quotes",
    "returns",
    "run_ensemble",
    "simulate",
    "step",
    "submit_order",
    "summarize_run",
    "transaction_observables",
    "validate_book",
    "xlm",
]
