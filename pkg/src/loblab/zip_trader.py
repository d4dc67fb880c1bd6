"""The ZIP adaptive sales trader.

A ZIP trader prices its client limit through a profit margin: sellers quote
limit*(1+mu) with mu >= 0, buyers with -1 <= mu <= 0. The margin adapts to
every observed market event via a Widrow-Hoff rule with momentum: when an
event suggests the trader's own quote p is uncompetitive (or too generous),
it picks a stochastically perturbed target price tau near the event price q
and moves toward it:

    delta = beta * (tau - p)
    gamma_mem' = momentum * gamma_mem + (1 - momentum) * delta
    p' = p + gamma_mem'
    mu' = p' / limit - 1, clamped to the role's margin range

The update-trigger rules, with p the trader's own quote price and q the
event's quote price:

  seller:  accepted and p <= q             -> raise margin (target above q)
           accepted bid, working, p >= q   -> lower margin (target below q)
           rejected ask, working, p >= q   -> lower margin
  buyer:   accepted and p >= q             -> raise margin (target below q)
           accepted ask, working, p <= q   -> lower margin (target above q)
           rejected bid, working, p <= q   -> lower margin

Raise rules fire whether or not the trader is currently working an order;
lower rules only while working one. Both may fire on the same event when
p == q, in which case they apply in sequence.
"""
from __future__ import annotations

import random

from loblab.book import LobSnapshot, Side
from loblab.session import Assignment, MarketEvent, ZipParams, round_half_away
from loblab.agents import TraderBase


class ZipTrader(TraderBase):
    """Zero-Intelligence-Plus adaptive trader, one fixed role per instance."""

    def __init__(
        self,
        trader_id: str,
        role: Side,
        rng: random.Random,
        params: ZipParams = ZipParams(),
        price_range: tuple[int, int] = (1, 500),
    ):
        super().__init__(trader_id, role)
        self.params = params
        self.price_range = price_range
        self.rng = rng
        self.learn_rate = rng.uniform(params.beta_min, params.beta_max)
        self.momentum = rng.uniform(params.momentum_min, params.momentum_max)
        magnitude = rng.uniform(params.margin_min, params.margin_max)
        self.margin = magnitude if role is Side.ASK else -magnitude
        self.momentum_memory = 0.0
        # Own shout price; tracked as a real number between quotes so the
        # Widrow-Hoff update is exact, re-pinned to the issued tick on quoting.
        self.price: float | None = None
        self.limit_price: int | None = None

    # -- session hooks -------------------------------------------------

    def assign(self, assignment: Assignment) -> None:
        super().assign(assignment)
        self.limit_price = assignment.limit_price
        if self.price is None:
            self.price = self.limit_price * (1.0 + self.margin)

    def quote(self, snapshot: LobSnapshot, time: int) -> int | None:
        if self.assignment is None:
            return None
        price = round_half_away(self.assignment.limit_price * (1.0 + self.margin))
        price = min(max(price, self.price_range[0]), self.price_range[1])
        self.price = float(price)
        return price

    def observe(self, event: MarketEvent, snapshot: LobSnapshot) -> None:
        if self.price is None or self.limit_price is None:
            return
        q = event.price
        working = self.assignment is not None
        if self.role is Side.ASK:
            if event.accepted:
                if self.price <= q:
                    self.adjust_toward(self._target_above(q))
                if event.side is Side.BID and working and self.price >= q:
                    self.adjust_toward(self._target_below(q))
            elif event.side is Side.ASK and working and self.price >= q:
                self.adjust_toward(self._target_below(q))
        else:
            if event.accepted:
                if self.price >= q:
                    self.adjust_toward(self._target_below(q))
                if event.side is Side.ASK and working and self.price <= q:
                    self.adjust_toward(self._target_above(q))
            elif event.side is Side.BID and working and self.price <= q:
                self.adjust_toward(self._target_above(q))

    # -- margin mechanics ----------------------------------------------

    def _target_above(self, q: int) -> float:
        u1 = self.rng.uniform(0.0, self.params.rel_perturbation)
        u2 = self.rng.uniform(0.0, self.params.abs_perturbation)
        return q * (1.0 + u1) + u2

    def _target_below(self, q: int) -> float:
        u1 = self.rng.uniform(0.0, self.params.rel_perturbation)
        u2 = self.rng.uniform(0.0, self.params.abs_perturbation)
        return q * (1.0 - u1) - u2

    def adjust_toward(self, target: float) -> None:
        """One Widrow-Hoff-with-momentum step of the shout price toward target."""
        delta = self.learn_rate * (target - self.price)
        self.momentum_memory = (
            self.momentum * self.momentum_memory + (1.0 - self.momentum) * delta
        )
        new_price = self.price + self.momentum_memory
        margin = new_price / self.limit_price - 1.0
        clamped = self._clamp_margin(margin)
        self.margin = clamped
        if clamped != margin:
            new_price = self.limit_price * (1.0 + clamped)
        self.price = new_price

    def _clamp_margin(self, margin: float) -> float:
        if self.role is Side.ASK:
            return max(margin, 0.0)
        return min(max(margin, -1.0), 0.0)
