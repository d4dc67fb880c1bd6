"""One market session: client-order generation, trader polling, matching,
event broadcast, replenishment, and profit accounting.

Time is discrete ticks; one trader is polled per tick, and the updated book
is broadcast to every trader before the next tick. Client orders are
replenished the moment a trader completes its previous assignment.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from loblab.book import Book, LobSnapshot, Order, OrderRejected, Side, Trade


class SessionConfigError(ValueError):
    """Raised for an inconsistent session configuration."""


class ScheduleCoverageError(ValueError):
    """Raised when a tick falls outside every schedule segment."""


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero.

    Symmetric for buyers and sellers, unlike banker's rounding.
    """
    return int(math.floor(x + 0.5)) if x >= 0 else int(math.ceil(x - 0.5))


@dataclass(frozen=True)
class Assignment:
    """A client order a sales trader is working."""

    side: Side
    limit_price: int
    issue_time: int


@dataclass(frozen=True)
class ScheduleSegment:
    """A time slice of a supply or demand schedule.

    Limit prices on the segment are drawn uniformly from the integer range
    [round(min_base + min_slope*t), round(max_base + max_slope*t)]; nonzero
    slopes give trending (bull/bear) markets, zero slopes stationary ones.
    """

    t_start: int
    t_end: int
    min_base: float
    min_slope: float = 0.0
    max_base: float = 0.0
    max_slope: float = 0.0

    def __post_init__(self):
        if self.t_start >= self.t_end:
            raise SessionConfigError(
                f"segment [{self.t_start}, {self.t_end}) is empty"
            )
        for t in (self.t_start, self.t_end):
            if self.min_base + self.min_slope * t > self.max_base + self.max_slope * t:
                raise SessionConfigError(
                    f"segment price bounds inverted at t={t}: "
                    f"min {self.min_base}+{self.min_slope}t exceeds "
                    f"max {self.max_base}+{self.max_slope}t"
                )

    def contains(self, t: int) -> bool:
        return self.t_start <= t < self.t_end

    def price_bounds(self, t: int) -> tuple[int, int]:
        lo = round_half_away(self.min_base + self.min_slope * t)
        hi = round_half_away(self.max_base + self.max_slope * t)
        return lo, hi


def limit_price_at(
    segment: ScheduleSegment,
    t: int,
    rng: random.Random,
    price_range: tuple[int, int] = (1, 500),
) -> int:
    """Draw one limit price from a segment at tick t, clamped to the book range."""
    if not segment.contains(t):
        raise ScheduleCoverageError(f"t={t} outside segment [{segment.t_start}, {segment.t_end})")
    lo, hi = segment.price_bounds(t)
    price = rng.randint(lo, hi)
    return min(max(price, price_range[0]), price_range[1])


def draw_limit_price(
    schedule: tuple[ScheduleSegment, ...],
    t: int,
    rng: random.Random,
    price_range: tuple[int, int],
) -> int:
    """Draw from the first segment covering t; the segments must tile the session."""
    for segment in schedule:
        if segment.contains(t):
            return limit_price_at(segment, t, rng, price_range)
    raise ScheduleCoverageError(f"t={t} not covered by any schedule segment")


@dataclass(frozen=True)
class ZipParams:
    """Initialisation ranges and perturbation constants for adaptive traders."""

    beta_min: float = 0.1
    beta_max: float = 0.5
    momentum_min: float = 0.0
    momentum_max: float = 0.1
    margin_min: float = 0.05
    margin_max: float = 0.35
    rel_perturbation: float = 0.05
    abs_perturbation: float = 0.05


@dataclass(frozen=True)
class SessionConfig:
    duration: int
    rng_seed: int
    buyer_specs: tuple[tuple[str, int], ...] = (("ZIP", 5),)
    seller_specs: tuple[tuple[str, int], ...] = (("ZIP", 5),)
    demand_schedule: tuple[ScheduleSegment, ...] = ()
    supply_schedule: tuple[ScheduleSegment, ...] = ()
    min_price: int = 1
    max_price: int = 500
    zip_params: ZipParams = ZipParams()

    @property
    def n_buyers(self) -> int:
        return sum(n for _, n in self.buyer_specs)

    @property
    def n_sellers(self) -> int:
        return sum(n for _, n in self.seller_specs)

    @property
    def n_traders(self) -> int:
        return self.n_buyers + self.n_sellers

    @property
    def price_range(self) -> tuple[int, int]:
        return (self.min_price, self.max_price)

    def validate(self) -> None:
        if self.n_buyers < 1 or self.n_sellers < 1:
            raise SessionConfigError("need at least one buyer and one seller")
        if self.duration < 0:
            raise SessionConfigError("duration must be non-negative")
        if self.duration > 0:
            _check_coverage(self.demand_schedule, self.duration, "demand")
            _check_coverage(self.supply_schedule, self.duration, "supply")


def _check_coverage(schedule: tuple[ScheduleSegment, ...], duration: int, name: str) -> None:
    segments = sorted(schedule, key=lambda s: s.t_start)
    covered = 0
    for seg in segments:
        if seg.t_start > covered:
            raise SessionConfigError(
                f"{name} schedule leaves [{covered}, {seg.t_start}) uncovered"
            )
        covered = max(covered, seg.t_end)
    if covered < duration:
        raise SessionConfigError(
            f"{name} schedule covers only [0, {covered}) of [0, {duration})"
        )


@dataclass(frozen=True)
class MarketEvent:
    """What every trader sees after a quote is processed: the quote's price,
    its side, and whether it crossed (resulted in a trade)."""

    time: int
    side: Side
    price: int
    accepted: bool


@dataclass(frozen=True)
class QuoteEvent:
    """One entry of the session event tape.

    ``pre_snapshot`` is the book state the quoting trader saw, i.e. the state
    broadcast after the previous event; ``trade`` is set when the quote crossed.
    """

    time: int
    trader_id: str
    side: Side
    price: int
    accepted: bool
    limit_price: int
    pre_snapshot: LobSnapshot
    trade: Trade | None


@dataclass(frozen=True)
class Fill:
    """A trade together with both parties' client limits at execution."""

    trade: Trade
    buyer_limit: int
    seller_limit: int


@dataclass
class SessionDiagnostics:
    declined_quotes: int = 0
    loss_rejects: int = 0
    range_rejects: int = 0


@dataclass
class SessionResult:
    trades: list[Trade]
    profit_by_trader: dict[str, int]
    event_tape: list[QuoteEvent]
    fills: list[Fill]
    diagnostics: SessionDiagnostics
    alpha_series: list[float] | None = None


@dataclass
class TraderSlot:
    """One roster position: a trader id, a fixed role, and the agent filling it."""

    trader_id: str
    role: Side
    kind: str
    agent: object


def derive_streams(seed: int, n_slots: int) -> tuple[random.Random, random.Random, list[int]]:
    """Split a session seed into schedule, polling, and per-slot agent streams.

    Slot seeds are drawn for every roster position regardless of agent kind,
    so replacing one agent leaves every other agent's stream untouched.
    """
    master = random.Random(seed)
    sched_rng = random.Random(master.getrandbits(64))
    poll_rng = random.Random(master.getrandbits(64))
    slot_seeds = [master.getrandbits(64) for _ in range(n_slots)]
    return sched_rng, poll_rng, slot_seeds


def slot_kinds(config: SessionConfig) -> list[tuple[str, Side]]:
    """Expand the roster specs into (kind, role) per slot: buyers first."""
    kinds: list[tuple[str, Side]] = []
    for kind, count in config.buyer_specs:
        kinds.extend((kind, Side.BID) for _ in range(count))
    for kind, count in config.seller_specs:
        kinds.extend((kind, Side.ASK) for _ in range(count))
    return kinds


def slot_trader_id(index: int, role: Side, n_buyers: int) -> str:
    if role is Side.BID:
        return f"B{index:02d}"
    return f"S{index - n_buyers:02d}"


def build_roster(config: SessionConfig, agent_factory) -> list[TraderSlot]:
    """Create agents for every slot. ``agent_factory(kind, trader_id, role, seed,
    config)`` builds one agent; slot seeds derive from the session seed."""
    kinds = slot_kinds(config)
    _, _, slot_seeds = derive_streams(config.rng_seed, len(kinds))
    roster = []
    for index, ((kind, role), seed) in enumerate(zip(kinds, slot_seeds)):
        trader_id = slot_trader_id(index, role, config.n_buyers)
        agent = agent_factory(kind, trader_id, role, seed, config)
        roster.append(TraderSlot(trader_id, role, kind, agent))
    return roster


def run_session(
    config: SessionConfig,
    roster: list[TraderSlot],
    collect_events: bool = True,
    equilibrium_price: float | None = None,
) -> SessionResult:
    """Run one session over ``config.duration`` ticks and account profit.

    Each tick: poll one active trader at random for a quote, process it on the
    book, broadcast the event and fresh snapshot to all traders, and on a
    trade credit both parties and issue them fresh client orders.
    """
    config.validate()
    if len(roster) != config.n_traders:
        raise SessionConfigError(
            f"roster has {len(roster)} slots, config specifies {config.n_traders}"
        )

    sched_rng, poll_rng, _ = derive_streams(config.rng_seed, len(roster))
    book = Book(config.min_price, config.max_price)
    by_id = {slot.trader_id: slot for slot in roster}
    profits = {slot.trader_id: 0 for slot in roster}
    trades: list[Trade] = []
    fills: list[Fill] = []
    tape: list[QuoteEvent] = []
    diagnostics = SessionDiagnostics()

    if config.duration == 0:
        return SessionResult([], profits, [], [], diagnostics)

    def replenish(slot: TraderSlot, t: int) -> None:
        schedule = (
            config.demand_schedule if slot.role is Side.BID else config.supply_schedule
        )
        limit = draw_limit_price(schedule, t, sched_rng, config.price_range)
        slot.agent.assign(Assignment(slot.role, limit, t))

    # Session start: every trader gets an initial client order, in roster order.
    for slot in roster:
        replenish(slot, 0)

    for t in range(config.duration):
        active = [slot for slot in roster if slot.agent.assignment is not None]
        if not active:
            break
        slot = active[poll_rng.randrange(len(active))]
        snapshot = book.summary()
        price = slot.agent.quote(snapshot, t)
        if price is None:
            diagnostics.declined_quotes += 1
            continue

        limit = slot.agent.assignment.limit_price
        loss_making = price > limit if slot.role is Side.BID else price < limit
        if loss_making:
            diagnostics.loss_rejects += 1
            continue

        try:
            post_snapshot, trade = book.process_order(
                Order(slot.trader_id, slot.role, price, t)
            )
        except OrderRejected:
            diagnostics.range_rejects += 1
            continue

        completed: list[TraderSlot] = []
        if trade is not None:
            buyer = by_id[trade.buyer_id]
            seller = by_id[trade.seller_id]
            buyer_limit = buyer.agent.assignment.limit_price
            seller_limit = seller.agent.assignment.limit_price
            profits[buyer.trader_id] += buyer_limit - trade.price
            profits[seller.trader_id] += trade.price - seller_limit
            trades.append(trade)
            fills.append(Fill(trade, buyer_limit, seller_limit))
            for party in (buyer, seller):
                party.agent.complete()
                completed.append(party)

        if collect_events:
            tape.append(
                QuoteEvent(
                    t, slot.trader_id, slot.role, price, trade is not None,
                    limit, snapshot, trade,
                )
            )

        event = MarketEvent(t, slot.role, price, trade is not None)
        for other in roster:
            other.agent.observe(event, post_snapshot)

        for party in completed:
            replenish(party, t)

    result = SessionResult(trades, profits, tape, fills, diagnostics)
    if equilibrium_price is not None and trades:
        result.alpha_series = _alpha_thirds(trades, equilibrium_price)
    return result


def _alpha_thirds(trades: list[Trade], p0: float) -> list[float]:
    prices = [tr.price for tr in trades]
    n = len(prices)
    cut1, cut2 = n // 3, 2 * n // 3
    windows = [prices[:cut1] or prices, prices[cut1:cut2] or prices, prices[cut2:] or prices]
    return [100.0 * math.sqrt(sum((p - p0) ** 2 for p in w) / len(w)) / p0 for w in windows]
