"""Experiment designs: tape-recording runs, homogeneous and heterogeneous
live-trading session batches, and profit-sample persistence.

Session i of a batch uses seed seed_base + i. Per-slot agent streams derive
from the session seed independently of agent kind, so a heterogeneous batch
is seed-matched with its homogeneous baseline: replacing one slot leaves
every other trader's random stream untouched.
"""
from __future__ import annotations

import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

from loblab.agents import TraderBase, TruthTeller
from loblab.book import Side
from loblab.mimic_trader import MimicTrader
from loblab.mlp import MlpModel, load_model
from loblab.session import (
    SessionConfig,
    SessionConfigError,
    SessionResult,
    TraderSlot,
    derive_streams,
    run_session,
    slot_kinds,
    slot_trader_id,
)
from loblab.tape import TapeRecord
from loblab.zip_trader import ZipTrader


class ExperimentMode(Enum):
    HOMOGENEOUS_ZIP = "homogeneous_zip"
    HETEROGENEOUS = "heterogeneous"
    HOMOGENEOUS_MIMIC = "homogeneous_mimic"


@dataclass(frozen=True)
class ExperimentSpec:
    mode: ExperimentMode
    n_sessions: int
    config: SessionConfig
    tracked_slot: int
    seed_base: int
    model_path: str | None = None


@dataclass(frozen=True)
class ProfitSample:
    values: tuple[int, ...]
    mode: ExperimentMode


@lru_cache(maxsize=8)
def _cached_model(path: str) -> MlpModel:
    return load_model(path)


def make_agent(kind: str, trader_id: str, role: Side, seed: int, config: SessionConfig):
    """Agent factory for the kind strings used in session configs."""
    if kind == "ZIP":
        return ZipTrader(
            trader_id, role, random.Random(seed), config.zip_params, config.price_range
        )
    if kind == "TRUTH":
        return TruthTeller(trader_id, role)
    if kind.startswith("MIMIC:"):
        model = _cached_model(kind.split(":", 1)[1])
        return MimicTrader(trader_id, role, model, config.price_range)
    raise SessionConfigError(f"unknown agent kind {kind!r}")


def build_roster_with_kinds(
    config: SessionConfig, kinds: list[tuple[str, Side]]
) -> list[TraderSlot]:
    """Build agents for an explicit per-slot kind list (roster order)."""
    _, _, slot_seeds = derive_streams(config.rng_seed, len(kinds))
    roster = []
    for index, ((kind, role), seed) in enumerate(zip(kinds, slot_seeds)):
        trader_id = slot_trader_id(index, role, config.n_buyers)
        agent = make_agent(kind, trader_id, role, seed, config)
        roster.append(TraderSlot(trader_id, role, kind, agent))
    return roster


def mode_kinds(
    mode: ExperimentMode,
    config: SessionConfig,
    tracked_slot: int,
    model_path: str | None,
) -> list[tuple[str, Side]]:
    kinds = slot_kinds(config)
    if not 0 <= tracked_slot < len(kinds):
        raise SessionConfigError(f"tracked_slot {tracked_slot} outside roster of {len(kinds)}")
    if mode is ExperimentMode.HOMOGENEOUS_ZIP:
        return kinds
    if model_path is None:
        raise SessionConfigError(f"mode {mode.value} needs a model file")
    mimic = f"MIMIC:{model_path}"
    if mode is ExperimentMode.HETEROGENEOUS:
        kinds[tracked_slot] = (mimic, kinds[tracked_slot][1])
        return kinds
    return [(mimic, role) for _, role in kinds]


def _run_tracked_session(args) -> int:
    config, kinds, tracked_id = args
    roster = build_roster_with_kinds(config, kinds)
    result = run_session(config, roster, collect_events=False)
    return result.profit_by_trader[tracked_id]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ProfitSample:
    """Run n independent sessions and sample the tracked slot's final profit."""
    if spec.n_sessions < 1:
        raise SessionConfigError("n_sessions must be positive")
    kinds = mode_kinds(spec.mode, spec.config, spec.tracked_slot, spec.model_path)
    role = kinds[spec.tracked_slot][1]
    tracked_id = slot_trader_id(spec.tracked_slot, role, spec.config.n_buyers)
    tasks = [
        (replace(spec.config, rng_seed=spec.seed_base + i), kinds, tracked_id)
        for i in range(spec.n_sessions)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(_run_tracked_session, tasks))
    else:
        values = [_run_tracked_session(task) for task in tasks]
    return ProfitSample(values=tuple(values), mode=spec.mode)


# -- tape recording -------------------------------------------------------


@dataclass
class RecordingResult:
    """Per-trader tapes and cumulative profits over the recording sessions."""

    tapes: dict[str, list[TapeRecord]]
    cumulative_profit: dict[str, int]
    focal_slot: int
    focal_id: str
    kinds: list[tuple[str, Side]]
    session_results: list[SessionResult]


def record_sessions(config: SessionConfig, n_sessions: int = 1) -> RecordingResult:
    """Run recording sessions and pick the focal trader: the ZIP trader with
    the highest cumulative profit (ties broken by roster order)."""
    if n_sessions < 1:
        raise SessionConfigError("n_sessions must be positive")
    kinds = slot_kinds(config)
    ids = [
        slot_trader_id(i, role, config.n_buyers) for i, (_, role) in enumerate(kinds)
    ]
    tapes: dict[str, list[TapeRecord]] = {tid: [] for tid in ids}
    cumulative = {tid: 0 for tid in ids}
    results = []
    for i in range(n_sessions):
        cfg = replace(config, rng_seed=config.rng_seed + i)
        roster = build_roster_with_kinds(cfg, kinds)
        result = run_session(cfg, roster, collect_events=True)
        results.append(result)
        for tid, profit in result.profit_by_trader.items():
            cumulative[tid] += profit
        for event in result.event_tape:
            pre = event.pre_snapshot
            record = TapeRecord(
                time=event.time,
                side=event.side,
                limit_price=event.limit_price,
                best_bid=pre.best_bid,
                best_bid_qty=pre.best_bid_qty,
                best_ask=pre.best_ask,
                best_ask_qty=pre.best_ask_qty,
                midprice=pre.midprice,
                spread=pre.spread,
                bid_depth=pre.bid_depth,
                ask_depth=pre.ask_depth,
                last_trade_price=pre.last_trade_price,
                quote_price=event.price,
            )
            tapes[event.trader_id].append(record)
    focal_slot = max(
        (i for i, (kind, _) in enumerate(kinds) if kind == "ZIP"),
        key=lambda i: (cumulative[ids[i]], -i),
        default=None,
    )
    if focal_slot is None:
        raise SessionConfigError("recording roster contains no ZIP trader")
    return RecordingResult(
        tapes=tapes,
        cumulative_profit=cumulative,
        focal_slot=focal_slot,
        focal_id=ids[focal_slot],
        kinds=kinds,
        session_results=results,
    )


# -- profit CSV -----------------------------------------------------------


def write_profits(values, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("profit\n")
        for v in values:
            fh.write(f"{v}\n")


def read_profits(path) -> list[int]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "profit":
        raise ValueError(f"{path}: expected one-column CSV with header 'profit'")
    try:
        return [int(line) for line in lines[1:] if line != ""]
    except ValueError as exc:
        raise ValueError(f"{path}: bad profit value: {exc}") from None
