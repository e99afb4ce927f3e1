"""Scenario configuration, ensemble execution, reporting, and validation.

Scenarios are described by JSON files (or built-in presets) naming the price
grid, the trader groups with their DGX placement parameters, the
cancellation rate, and the event intensity. Running a scenario executes a
deterministic seeded ensemble, reduces each run to its summary observables,
and writes plain-CSV outputs plus a metadata echo for reproducibility.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine, observables, oracle
from .book import Side
from .engine import RecordingConfig, SimulationResult, run_ensemble
from .observables import RunSummary, summarize_run
from .rates import (
    AnchoringMode,
    DgxParams,
    RateModel,
    RateModelError,
    TraderGroup,
    arrival_rates,
)

SCHEMA_VERSION = 1

SUMMARY_COLUMNS = [
    "run",
    "completed",
    "events",
    "elapsed_time",
    "transaction_count",
    "transaction_rate",
    "mean_spread",
    "std_spread",
    "mean_mid",
    "std_mid",
    "mean_best_bid",
    "mean_best_ask",
    "mean_transaction_price",
    "std_transaction_price",
    "mean_return",
    "return_volatility",
    "mean_xlm_ask",
    "mean_xlm_bid",
    "mean_xlm",
    "quote_coverage",
]

HEATMAP_COLUMNS = ["step_offset", "side", "price_level", "mean_quantity", "transaction_frequency"]

EVENTS_COLUMNS = [
    "run",
    "step",
    "time",
    "kind",
    "price_level",
    "quantity",
    "transaction_count",
    "transaction_price",
    "best_bid",
    "best_ask",
]

RATES_COLUMNS = ["side", "price_level", "arrival_rate"]

# Observables compared between scenario bundles (per-run means).
COMPARED_OBSERVABLES = [
    "mean_spread",
    "transaction_rate",
    "mean_return",
    "return_volatility",
    "mean_xlm",
    "mean_transaction_price",
    "mean_mid",
    "mean_best_bid",
    "mean_best_ask",
]


class ConfigError(Exception):
    """Scenario configuration failed validation; ``problems`` itemizes why."""

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ValidationFailure(Exception):
    """An oracle validation check exceeded its tolerance."""


@dataclass(frozen=True)
class GroupConfig:
    """One trader group: flow share and symmetric DGX placement parameters."""

    share: float
    mu: float
    sigma: float
    support: int
    bid_anchor: int
    ask_anchor: int


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    groups: tuple[GroupConfig, ...]
    grid_size: int = 20
    unit_quantity: int = 1
    cancel_rate: float = 0.1
    event_intensity: float = 6.0
    anchoring: str = "static"
    runs: int = 200
    events_per_run: int = 5000
    base_seed: int = 12345
    record: str = "summary"
    heatmap_window: int = 100


PRESETS: dict[str, ScenarioConfig] = {
    "scenario1": ScenarioConfig(
        name="scenario1",
        groups=(GroupConfig(1.0, 1.0, 3.0, 12, bid_anchor=12, ask_anchor=9),),
    ),
    "scenario2": ScenarioConfig(
        name="scenario2",
        groups=(
            GroupConfig(0.7, 1.0, 3.0, 12, bid_anchor=12, ask_anchor=9),
            GroupConfig(0.3, 4.0, 1.0, 14, bid_anchor=14, ask_anchor=7),
        ),
    ),
}


def config_from_dict(raw: dict, name: str = "custom") -> ScenarioConfig:
    """Build and validate a config, collecting every problem found."""
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top-level config must be an object"])
    known = {
        "name",
        "groups",
        "grid_size",
        "unit_quantity",
        "cancel_rate",
        "event_intensity",
        "anchoring",
        "runs",
        "events_per_run",
        "base_seed",
        "record",
        "heatmap_window",
    }
    for key in raw:
        if key not in known:
            problems.append(f"unknown key {key!r}")

    def get_number(key, default, minimum=None, integer=False):
        value = raw.get(key, default)
        if integer and not isinstance(value, int):
            problems.append(f"{key} must be an integer, got {value!r}")
            return default
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            problems.append(f"{key} must be a number, got {value!r}")
            return default
        if minimum is not None and value < minimum:
            problems.append(f"{key} must be >= {minimum}, got {value}")
            return default
        return value

    grid_size = get_number("grid_size", 20, minimum=1, integer=True)
    unit_quantity = get_number("unit_quantity", 1, minimum=1, integer=True)
    cancel_rate = float(get_number("cancel_rate", 0.1, minimum=0.0))
    event_intensity = float(get_number("event_intensity", 6.0))
    if event_intensity <= 0:
        problems.append(f"event_intensity must be positive, got {event_intensity}")
    anchoring = raw.get("anchoring", "static")
    if anchoring not in ("static", "opposite_best"):
        problems.append(f"anchoring must be 'static' or 'opposite_best', got {anchoring!r}")
    runs = get_number("runs", 200, minimum=1, integer=True)
    events_per_run = get_number("events_per_run", 5000, minimum=0, integer=True)
    base_seed = get_number("base_seed", 12345, integer=True)
    record = raw.get("record", "summary")
    if record not in ("summary", "events", "heatmap"):
        problems.append(f"record must be one of summary|events|heatmap, got {record!r}")
    heatmap_window = get_number("heatmap_window", 100, minimum=1, integer=True)

    groups_raw = raw.get("groups")
    groups: list[GroupConfig] = []
    if not isinstance(groups_raw, list) or not groups_raw:
        problems.append("groups must be a non-empty list")
    else:
        for i, g in enumerate(groups_raw):
            if not isinstance(g, dict):
                problems.append(f"groups[{i}] must be an object")
                continue
            try:
                group = GroupConfig(
                    share=float(g["share"]),
                    mu=float(g["mu"]),
                    sigma=float(g["sigma"]),
                    support=int(g["support"]),
                    bid_anchor=int(g["bid_anchor"]),
                    ask_anchor=int(g["ask_anchor"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                problems.append(f"groups[{i}] invalid: {exc!r}")
                continue
            if not 0.0 <= group.share <= 1.0:
                problems.append(f"groups[{i}].share must lie in [0, 1]")
            if group.sigma <= 0:
                problems.append(f"groups[{i}].sigma must be positive")
            if group.support < 1:
                problems.append(f"groups[{i}].support must be >= 1")
            if not 1 <= group.ask_anchor <= grid_size:
                problems.append(f"groups[{i}].ask_anchor outside grid")
            elif group.ask_anchor + group.support - 1 > grid_size:
                problems.append(f"groups[{i}] ask support leaves the grid")
            if not 1 <= group.bid_anchor <= grid_size:
                problems.append(f"groups[{i}].bid_anchor outside grid")
            elif group.bid_anchor - group.support + 1 < 1:
                problems.append(f"groups[{i}] bid support leaves the grid")
            groups.append(group)
        share_total = sum(g.share for g in groups)
        if groups and abs(share_total - 1.0) > 1e-9:
            problems.append(f"group shares must sum to 1, got {share_total}")

    if problems:
        raise ConfigError(problems)
    return ScenarioConfig(
        name=raw.get("name", name),
        groups=tuple(groups),
        grid_size=grid_size,
        unit_quantity=unit_quantity,
        cancel_rate=cancel_rate,
        event_intensity=event_intensity,
        anchoring=anchoring,
        runs=runs,
        events_per_run=events_per_run,
        base_seed=base_seed,
        record=record,
        heatmap_window=heatmap_window,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a JSON scenario file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON: {exc}"]) from exc
    return config_from_dict(raw, name=path.stem)


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError([f"unknown preset {name!r}; choose from {sorted(PRESETS)}"])
    return PRESETS[name]


def build_rate_model(config: ScenarioConfig) -> RateModel:
    groups = tuple(
        TraderGroup(
            share=g.share,
            ask_params=DgxParams(g.mu, g.sigma, g.support),
            bid_params=DgxParams(g.mu, g.sigma, g.support),
            ask_anchor=g.ask_anchor,
            bid_anchor=g.bid_anchor,
        )
        for g in config.groups
    )
    mode = (
        AnchoringMode.STATIC_SUPPORT
        if config.anchoring == "static"
        else AnchoringMode.OPPOSITE_BEST
    )
    try:
        return RateModel(
            grid_size=config.grid_size,
            groups=groups,
            per_order_cancel_rate=config.cancel_rate,
            event_intensity=config.event_intensity,
            anchoring_mode=mode,
            unit_quantity=config.unit_quantity,
        )
    except RateModelError as exc:
        raise ConfigError([str(exc)]) from exc


def config_hash(config: ScenarioConfig) -> str:
    payload = json.dumps(asdict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class HeatmapCell:
    step_offset: int
    side: Side
    price_level: int
    mean_quantity: float
    transaction_frequency: float


@dataclass
class OutputBundle:
    """Everything a scenario run produces, ready to serialize."""

    config: ScenarioConfig
    summaries: list[RunSummary]
    aborted_runs: list[int]
    heatmap: Optional[list[HeatmapCell]]
    events: Optional[list[list[str]]]
    metadata: dict


def _recording_for(config: ScenarioConfig) -> RecordingConfig:
    return RecordingConfig(
        events=True,
        quotes=True,
        liquidity=True,
        depth_window=config.heatmap_window if config.record == "heatmap" else 0,
    )


def _aggregate_heatmap(
    config: ScenarioConfig, frames_per_run: list[list[engine.DepthFrame]]
) -> list[HeatmapCell]:
    window = config.heatmap_window
    k = config.grid_size
    quantity = {
        side: np.zeros((window, k)) for side in (Side.BID, Side.ASK)
    }
    transacted = np.zeros(window)
    counted = np.zeros(window)
    for frames in frames_per_run:
        offset0 = window - len(frames)
        for slot, frame in enumerate(frames):
            row = offset0 + slot
            quantity[Side.BID][row] += frame.profile.bid_quantities
            quantity[Side.ASK][row] += frame.profile.ask_quantities
            transacted[row] += 1.0 if frame.transacted else 0.0
            counted[row] += 1.0
    cells: list[HeatmapCell] = []
    for row in range(window):
        n = counted[row]
        for side in (Side.BID, Side.ASK):
            for level in range(1, k + 1):
                mean_q = quantity[side][row, level - 1] / n if n else float("nan")
                freq = transacted[row] / n if n else float("nan")
                cells.append(HeatmapCell(row - window, side, level, mean_q, freq))
    return cells


def _event_rows(run_index: int, result: SimulationResult) -> list[list[str]]:
    rows = []
    for step_index, record in enumerate(result.records):
        last_price = record.transactions[-1].price_level if record.transactions else ""
        quote = record.quote
        rows.append(
            [
                str(run_index),
                str(step_index),
                _format(record.time),
                record.event.kind.value,
                str(record.event.price_level),
                str(record.event.quantity),
                str(len(record.transactions)),
                str(last_price),
                "" if quote.best_bid is None else str(quote.best_bid),
                "" if quote.best_ask is None else str(quote.best_ask),
            ]
        )
    return rows


def run_scenario(config: ScenarioConfig) -> OutputBundle:
    """Execute the configured ensemble and reduce it to per-run summaries."""
    model = build_rate_model(config)
    recording = _recording_for(config)
    summaries: list[RunSummary] = []
    aborted: list[int] = []
    frames_per_run: list[list[engine.DepthFrame]] = []
    event_rows: list[list[str]] = []

    seeds = engine.derive_run_seeds(config.base_seed, config.runs)
    builder = engine._TableBuilder(model, None)
    for run_index, run_seed in enumerate(seeds):
        try:
            result = engine.simulate(
                model,
                event_count=config.events_per_run,
                seed=run_seed,
                recording=recording,
                _builder=builder,
            )
        except engine.AbsorbingStateError:
            aborted.append(run_index)
            summaries.append(_nan_summary())
            continue
        summaries.append(summarize_run(result))
        if config.record == "heatmap":
            frames_per_run.append(result.depth_frames)
        elif config.record == "events":
            event_rows.extend(_event_rows(run_index, result))

    heatmap = (
        _aggregate_heatmap(config, frames_per_run) if config.record == "heatmap" else None
    )
    metadata = {
        "schema_version": SCHEMA_VERSION,
        "config": asdict(config),
        "config_hash": config_hash(config),
        "base_seed": config.base_seed,
        "runs": config.runs,
        "aborted_runs": aborted,
    }
    return OutputBundle(
        config,
        summaries,
        aborted,
        heatmap,
        event_rows if config.record == "events" else None,
        metadata,
    )


def _nan_summary() -> RunSummary:
    nan = float("nan")
    return RunSummary(
        events=0,
        elapsed_time=nan,
        transaction_count=0,
        transaction_rate=nan,
        mean_spread=nan,
        std_spread=nan,
        mean_mid=nan,
        std_mid=nan,
        mean_best_bid=nan,
        mean_best_ask=nan,
        mean_transaction_price=nan,
        std_transaction_price=nan,
        mean_return=nan,
        return_volatility=nan,
        mean_xlm_ask=nan,
        mean_xlm_bid=nan,
        mean_xlm=nan,
        quote_coverage=nan,
    )


def _format(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def summary_rows(bundle: OutputBundle) -> list[list[str]]:
    rows = []
    for run_index, summary in enumerate(bundle.summaries):
        completed = run_index not in bundle.aborted_runs
        row = [str(run_index), str(int(completed))]
        row.extend(
            _format(getattr(summary, column)) for column in SUMMARY_COLUMNS[2:]
        )
        rows.append(row)
    return rows


def write_bundle(bundle: OutputBundle, out_dir: str | Path) -> list[Path]:
    """Write summary.csv, metadata.json, and heatmap.csv (when recorded).

    Output bytes are a pure function of config and seed: floats are written
    with shortest round-trip formatting and no timestamps are embedded.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    summary_path = out / "summary.csv"
    with summary_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(summary_rows(bundle))
    written.append(summary_path)

    metadata_path = out / "metadata.json"
    metadata_path.write_text(
        json.dumps(bundle.metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(metadata_path)

    if bundle.heatmap is not None:
        heatmap_path = out / "heatmap.csv"
        with heatmap_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(HEATMAP_COLUMNS)
            for cell in bundle.heatmap:
                writer.writerow(
                    [
                        str(cell.step_offset),
                        cell.side.value,
                        str(cell.price_level),
                        _format(cell.mean_quantity),
                        _format(cell.transaction_frequency),
                    ]
                )
        written.append(heatmap_path)

    if bundle.events is not None:
        events_path = out / "events.csv"
        with events_path.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(EVENTS_COLUMNS)
            writer.writerows(bundle.events)
        written.append(events_path)
    return written


def read_summaries(out_dir: str | Path) -> tuple[dict, list[dict[str, float]]]:
    """Load metadata and per-run summary rows back from a bundle directory."""
    out = Path(out_dir)
    metadata = json.loads((out / "metadata.json").read_text(encoding="utf-8"))
    rows: list[dict[str, float]] = []
    with (out / "summary.csv").open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            rows.append({key: float(value) for key, value in row.items()})
    return metadata, rows


@dataclass(frozen=True)
class ComparisonRow:
    observable: str
    mean_a: float
    se_a: float
    ci_a: tuple[float, float]
    mean_b: float
    se_b: float
    ci_b: tuple[float, float]
    verdict: str


@dataclass
class ComparisonReport:
    label_a: str
    label_b: str
    rows: list[ComparisonRow]

    def verdict(self, observable: str) -> str:
        for row in self.rows:
            if row.observable == observable:
                return row.verdict
        raise KeyError(observable)

    def lines(self) -> list[str]:
        out = [f"comparison: B={self.label_b} relative to A={self.label_a}"]
        for row in self.rows:
            out.append(
                f"  {row.observable}: A={row.mean_a:.6g} (ci {row.ci_a[0]:.6g}..{row.ci_a[1]:.6g})"
                f"  B={row.mean_b:.6g} (ci {row.ci_b[0]:.6g}..{row.ci_b[1]:.6g})"
                f"  -> {row.verdict}"
            )
        return out


def _mean_se_ci(values: list[float]) -> tuple[float, float, tuple[float, float]]:
    arr = np.asarray([v for v in values if not math.isnan(v)], dtype=float)
    if arr.size == 0:
        nan = float("nan")
        return nan, nan, (nan, nan)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
    half = 1.959963984540054 * se
    return mean, se, (mean - half, mean + half)


def compare_summaries(
    rows_a: list[dict[str, float]],
    rows_b: list[dict[str, float]],
    label_a: str = "A",
    label_b: str = "B",
    observables: Sequence[str] = tuple(COMPARED_OBSERVABLES),
) -> ComparisonReport:
    """Per-observable means with 95% confidence intervals and a verdict.

    The verdict describes B against A: ``greater``/``less`` when the
    intervals do not overlap, ``indistinguishable`` otherwise.
    """
    report_rows: list[ComparisonRow] = []
    for name in observables:
        a_values = [row[name] for row in rows_a]
        b_values = [row[name] for row in rows_b]
        mean_a, se_a, ci_a = _mean_se_ci(a_values)
        mean_b, se_b, ci_b = _mean_se_ci(b_values)
        if any(math.isnan(x) for x in (*ci_a, *ci_b)):
            verdict = "indistinguishable"
        elif ci_b[0] > ci_a[1]:
            verdict = "greater"
        elif ci_b[1] < ci_a[0]:
            verdict = "less"
        else:
            verdict = "indistinguishable"
        report_rows.append(
            ComparisonRow(name, mean_a, se_a, ci_a, mean_b, se_b, ci_b, verdict)
        )
    return ComparisonReport(label_a, label_b, report_rows)


def compare_bundles(dir_a: str | Path, dir_b: str | Path) -> ComparisonReport:
    meta_a, rows_a = read_summaries(dir_a)
    meta_b, rows_b = read_summaries(dir_b)
    grid_a = meta_a["config"]["grid_size"]
    grid_b = meta_b["config"]["grid_size"]
    if grid_a != grid_b:
        raise ConfigError([f"grid mismatch: {grid_a} vs {grid_b}"])
    return compare_summaries(
        rows_a, rows_b, label_a=str(dir_a), label_b=str(dir_b)
    )


ORACLE_MODELS = {
    "tiny": oracle.tiny_nonoverlapping_model,
    "tiny-overlap": oracle.tiny_overlapping_model,
}


@dataclass
class OracleReport:
    """Validation results: generator diagnostics, TV distances, moments."""

    model_name: str
    state_count: int
    max_column_sum: float
    min_off_diagonal: float
    tv_distances: dict[float, float]
    tv_tolerance: float
    moment_checks: list[tuple[float, int, float, float, float]]
    runs: int

    @property
    def passed(self) -> bool:
        if self.max_column_sum > 1e-12 or self.min_off_diagonal < 0:
            return False
        if any(tv > self.tv_tolerance for tv in self.tv_distances.values()):
            return False
        for _, _, exact, estimate, se in self.moment_checks:
            if not math.isfinite(se) or abs(estimate - exact) > 3.0 * se:
                return False
        return True

    def lines(self) -> list[str]:
        out = [
            f"oracle validation: model={self.model_name} states={self.state_count} runs={self.runs}",
            f"  generator: max |column sum| = {self.max_column_sum:.3e}, "
            f"min off-diagonal = {self.min_off_diagonal:.3e}",
        ]
        for t in sorted(self.tv_distances):
            out.append(
                f"  TV(t={t}) = {self.tv_distances[t]:.5f} (tolerance {self.tv_tolerance})"
            )
        for t, order, exact, estimate, se in self.moment_checks:
            out.append(
                f"  E[orders^{order}](t={t}): exact {exact:.6f}, "
                f"ensemble {estimate:.6f} +- {se:.6f}"
            )
        out.append(f"  result: {'PASS' if self.passed else 'FAIL'}")
        return out


def generator_diagnostics(generator) -> tuple[float, float]:
    """(max |column sum|, min off-diagonal entry) of a generator matrix."""
    column_sums = np.asarray(generator.sum(axis=0)).ravel()
    max_column_sum = float(np.abs(column_sums).max()) if column_sums.size else 0.0
    coo = generator.tocoo()
    off_diag = coo.data[coo.row != coo.col]
    min_off = float(off_diag.min()) if off_diag.size else 0.0
    return max_column_sum, min_off


def validate_against_oracle(
    model_name: str = "tiny",
    runs: int = 100_000,
    times: Sequence[float] = (0.5, 1.0, 2.0),
    base_seed: int = 2024,
    tv_tolerance: float = 0.02,
) -> OracleReport:
    """Compare the capped engine's state distribution with the exact solution.

    Runs the ensemble once to the largest requested time, snapshotting the
    state at each time, and reports total variation distances plus first and
    second moment checks of the resident-order count.
    """
    if model_name not in ORACLE_MODELS:
        raise ConfigError(
            [f"unknown oracle model {model_name!r}; choose from {sorted(ORACLE_MODELS)}"]
        )
    model, caps = ORACLE_MODELS[model_name]()
    index = oracle.enumerate_states(model.grid_size, caps.max_quantity, caps.max_orders)
    generator = oracle.build_generator(model, index)
    max_column_sum, min_off = generator_diagnostics(generator)

    times = tuple(sorted(times))
    horizon = times[-1]
    recording = RecordingConfig(events=False, checkpoint_times=times)
    results = run_ensemble(
        model,
        runs=runs,
        time_horizon=horizon,
        base_seed=base_seed,
        recording=recording,
        caps=caps,
        reduce=lambda r: r.checkpoints,
    )

    p0 = oracle.vacuum_vector(index)
    counts = oracle.order_count_observable(index)
    tv_distances: dict[float, float] = {}
    moment_checks: list[tuple[float, int, float, float, float]] = []
    for t in times:
        exact = oracle.evolve(p0, generator, t)
        states_at_t = [checkpoints[t] for checkpoints in results]
        empirical = oracle.empirical_distribution(index, states_at_t)
        tv_distances[t] = oracle.compare_distributions(empirical, exact)
        sampled_counts = [s.order_count() for s in states_at_t]
        for order in (1, 2):
            exact_moment = oracle.exact_moment(generator, p0, t, counts, order)
            estimate = observables.ensemble_moment(sampled_counts, order)
            moment_checks.append(
                (t, order, exact_moment, estimate.value, estimate.standard_error)
            )

    return OracleReport(
        model_name=model_name,
        state_count=len(index),
        max_column_sum=max_column_sum,
        min_off_diagonal=min_off,
        tv_distances=tv_distances,
        tv_tolerance=tv_tolerance,
        moment_checks=moment_checks,
        runs=runs,
    )


def arrival_rate_rows(config: ScenarioConfig) -> list[list[str]]:
    """Per-side arrival-rate table (side, price level, rate), CSV-ready."""
    model = build_rate_model(config)
    from .book import empty_book

    rates = arrival_rates(model, empty_book(config.grid_size))
    rows: list[list[str]] = []
    for side in (Side.ASK, Side.BID):
        for level in range(1, config.grid_size + 1):
            rate = rates.rate(side, level)
            if rate > 0.0:
                rows.append([side.value, str(level), _format(rate)])
    return rows
