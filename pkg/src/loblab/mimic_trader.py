"""A trained network wrapped as a live trading agent.

The mimic featurizes the current book state and its client order with the
normalization constants stored in the model file, runs the forward pass,
denormalizes, and quotes. It has no online learning hook: broadcast events
are ignored, its adaptivity is baked into features that include book state.
"""
from __future__ import annotations

import math

from loblab.agents import TraderBase
from loblab.book import LobSnapshot, Side
from loblab.mlp import MlpModel, mlp_forward
from loblab.session import round_half_away
from loblab.tape import featurize


class MimicTrader(TraderBase):
    """Frozen imitation trader; safe to clone for homogeneous markets."""

    def __init__(
        self,
        trader_id: str,
        role: Side,
        model: MlpModel,
        price_range: tuple[int, int] = (1, 500),
    ):
        super().__init__(trader_id, role)
        self.model = model
        self.price_range = price_range
        self.nonfinite_outputs = 0

    def quote(self, snapshot: LobSnapshot, time: int) -> int | None:
        if self.assignment is None:
            return None
        features = featurize(snapshot, self.assignment, time, self.model.constants)
        raw = mlp_forward(self.model, features)
        if not math.isfinite(raw):
            self.nonfinite_outputs += 1
            return None
        price = round_half_away(raw * self.model.constants.p_max)
        price = min(max(price, self.price_range[0]), self.price_range[1])
        # Never quote through the client limit, even if the network extrapolates.
        if self.role is Side.BID:
            price = min(price, self.assignment.limit_price)
        else:
            price = max(price, self.assignment.limit_price)
        return price
