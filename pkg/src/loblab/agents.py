"""Trader agents: the common interface and the scripted truth-teller.

An agent holds at most one active assignment. The session engine calls
``quote`` when the agent is polled, ``observe`` after every processed quote,
``complete`` when the agent's order executes, and ``assign`` on replenishment.
"""
from __future__ import annotations

from loblab.book import LobSnapshot, Side
from loblab.session import Assignment, MarketEvent


class TraderBase:
    """Minimal agent: never quotes, never learns."""

    def __init__(self, trader_id: str, role: Side):
        self.trader_id = trader_id
        self.role = role
        self.assignment: Assignment | None = None

    def assign(self, assignment: Assignment) -> None:
        self.assignment = assignment

    def complete(self) -> None:
        self.assignment = None

    def quote(self, snapshot: LobSnapshot, time: int) -> int | None:
        return None

    def observe(self, event: MarketEvent, snapshot: LobSnapshot) -> None:
        pass


class TruthTeller(TraderBase):
    """Scripted test agent: quotes its client limit once per assignment."""

    def __init__(self, trader_id: str, role: Side):
        super().__init__(trader_id, role)
        self._quoted = False

    def assign(self, assignment: Assignment) -> None:
        super().assign(assignment)
        self._quoted = False

    def quote(self, snapshot: LobSnapshot, time: int) -> int | None:
        if self.assignment is None or self._quoted:
            return None
        self._quoted = True
        return self.assignment.limit_price
