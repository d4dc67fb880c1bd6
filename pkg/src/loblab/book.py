"""Single-instrument limit-order-book exchange with continuous-double-auction matching.

Matching rules, in BSE style: every trader has at most one resting order
(a new quote atomically replaces the old one), all orders are for one unit,
and a quote that crosses the spread executes immediately at the price of the
standing order on the opposite side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class Side(Enum):
    """Side of the book a quote goes to: buyers bid, sellers ask."""

    BID = "bid"
    ASK = "ask"

    @property
    def opposite(self) -> "Side":
        return Side.ASK if self is Side.BID else Side.BID


class BookConfigError(ValueError):
    """Raised for an invalid price range at book creation."""


class OrderRejected(ValueError):
    """Raised when an order fails validation; the book is left unchanged."""


@dataclass(frozen=True)
class Order:
    """A live limit order: one unit at an integer tick price."""

    trader_id: str
    side: Side
    price: int
    time: int
    qty: int = 1

    def __post_init__(self):
        if not isinstance(self.side, Side):
            raise OrderRejected(f"unknown order side: {self.side!r}")
        if self.qty != 1:
            raise OrderRejected(f"order quantity must be 1, got {self.qty}")
        if not isinstance(self.price, int) or isinstance(self.price, bool):
            raise OrderRejected(f"order price must be an integer tick, got {self.price!r}")


@dataclass(frozen=True)
class Trade:
    """An execution at the standing order's price."""

    price: int
    time: int
    buyer_id: str
    seller_id: str


@dataclass(frozen=True)
class LobSnapshot:
    """Anonymized aggregated view of the book plus last-trade info.

    ``bids`` is sorted by price descending, ``asks`` ascending; quantities are
    totals per price level. ``midprice`` is the one half-tick quantity and is
    kept as an exact float (integer halves are representable exactly).
    """

    bids: tuple[tuple[int, int], ...]
    asks: tuple[tuple[int, int], ...]
    best_bid: int | None
    best_ask: int | None
    midprice: float | None
    spread: int | None
    bid_depth: int
    ask_depth: int
    last_trade_price: int | None
    time: int

    @property
    def best_bid_qty(self) -> int | None:
        return self.bids[0][1] if self.bids else None

    @property
    def best_ask_qty(self) -> int | None:
        return self.asks[0][1] if self.asks else None


@dataclass
class _HalfBook:
    """One side of the book: price level -> resting orders in arrival order."""

    levels: dict[int, list[Order]] = field(default_factory=dict)

    def best(self, side: Side) -> int | None:
        if not self.levels:
            return None
        return max(self.levels) if side is Side.BID else min(self.levels)

    def add(self, order: Order) -> None:
        self.levels.setdefault(order.price, []).append(order)

    def remove(self, order: Order) -> None:
        queue = self.levels[order.price]
        queue.remove(order)
        if not queue:
            del self.levels[order.price]

    def aggregated(self, side: Side) -> tuple[tuple[int, int], ...]:
        newest_first = side is Side.BID
        prices = sorted(self.levels, reverse=newest_first)
        return tuple((p, sum(o.qty for o in self.levels[p])) for p in prices)


class Book:
    """Deterministic single-instrument order book.

    One session owns one book; all calls are sequential. Snapshots returned
    from it are immutable values.
    """

    def __init__(self, min_price: int, max_price: int):
        if not (1 <= min_price < max_price):
            raise BookConfigError(
                f"invalid price range [{min_price}, {max_price}]: need 1 <= min < max"
            )
        self.min_price = min_price
        self.max_price = max_price
        self._sides = {Side.BID: _HalfBook(), Side.ASK: _HalfBook()}
        self._resting: dict[str, Order] = {}
        self._last_trade: Trade | None = None
        self._time = 0

    def process_order(self, order: Order) -> tuple[LobSnapshot, Trade | None]:
        """Apply one quote: replace any prior order from the same trader, then
        match or rest. Returns the post-event snapshot and the trade, if any.
        """
        if not (self.min_price <= order.price <= self.max_price):
            raise OrderRejected(
                f"price {order.price} outside book range "
                f"[{self.min_price}, {self.max_price}]"
            )

        # Replacement is atomic: the old order leaves before the new one is matched.
        previous = self._resting.pop(order.trader_id, None)
        if previous is not None:
            self._sides[previous.side].remove(previous)

        self._time = order.time
        trade = self._try_match(order)
        if trade is None:
            self._sides[order.side].add(order)
            self._resting[order.trader_id] = order
        else:
            self._last_trade = trade
        return self.summary(), trade

    def _try_match(self, order: Order) -> Trade | None:
        opposite = self._sides[order.side.opposite]
        best = opposite.best(order.side.opposite)
        if best is None:
            return None
        crosses = order.price >= best if order.side is Side.BID else order.price <= best
        if not crosses:
            return None
        # Price-time priority: earliest arrival at the best opposite price.
        standing = opposite.levels[best][0]
        opposite.remove(standing)
        del self._resting[standing.trader_id]
        if order.side is Side.BID:
            buyer, seller = order.trader_id, standing.trader_id
        else:
            buyer, seller = standing.trader_id, order.trader_id
        return Trade(price=best, time=order.time, buyer_id=buyer, seller_id=seller)

    def summary(self) -> LobSnapshot:
        """Snapshot of the current book state."""
        bids = self._sides[Side.BID].aggregated(Side.BID)
        asks = self._sides[Side.ASK].aggregated(Side.ASK)
        best_bid = bids[0][0] if bids else None
        best_ask = asks[0][0] if asks else None
        two_sided = best_bid is not None and best_ask is not None
        return LobSnapshot(
            bids=bids,
            asks=asks,
            best_bid=best_bid,
            best_ask=best_ask,
            midprice=(best_bid + best_ask) / 2 if two_sided else None,
            spread=best_ask - best_bid if two_sided else None,
            bid_depth=sum(q for _, q in bids),
            ask_depth=sum(q for _, q in asks),
            last_trade_price=self._last_trade.price if self._last_trade else None,
            time=self._time,
        )

    def resting_order(self, trader_id: str) -> Order | None:
        return self._resting.get(trader_id)


def new_book(min_price: int, max_price: int) -> Book:
    return Book(min_price, max_price)
