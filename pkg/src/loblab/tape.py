"""Consolidated-tape records, feature extraction, dataset splitting, and CSV io.

A tape record captures what one trader saw and did at one quote event: the
top-of-book state, its current client order, and the quote it issued. The CSV
serialization is bit-exact (prices are integers, the midprice is written with
17 significant digits) so a write-read roundtrip reproduces every field.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from loblab.book import LobSnapshot, Side
from loblab.session import Assignment

TAPE_HEADER = (
    "time,side,limit,best_bid,bid_qty,best_ask,ask_qty,"
    "midprice,spread,bid_depth,ask_depth,last_trade,quote"
)

N_FEATURES = 14


class TapeFormatError(ValueError):
    """Raised for malformed tape files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"{message} (line {line})")
        self.line = line


class DatasetError(ValueError):
    """Raised when a tape cannot be split into nonempty partitions."""


@dataclass(frozen=True)
class NormConstants:
    """Normalization constants shared by featurization, training, and live use.

    p_max bounds every price, q_norm every depth (unit orders make the trader
    count a hard bound), t_max is the session duration.
    """

    p_max: int
    q_norm: int
    t_max: int

    def __post_init__(self):
        if self.p_max <= 0 or self.q_norm <= 0 or self.t_max <= 0:
            raise ValueError(f"normalization constants must be positive: {self}")


@dataclass(frozen=True)
class TapeRecord:
    """One observation event on a trader's consolidated tape."""

    time: int
    side: Side
    limit_price: int
    best_bid: int | None
    best_bid_qty: int | None
    best_ask: int | None
    best_ask_qty: int | None
    midprice: float | None
    spread: int | None
    bid_depth: int
    ask_depth: int
    last_trade_price: int | None
    quote_price: int

    @classmethod
    def from_snapshot(
        cls,
        snapshot: LobSnapshot,
        assignment: Assignment,
        time: int,
        quote_price: int,
    ) -> "TapeRecord":
        return cls(
            time=time,
            side=assignment.side,
            limit_price=assignment.limit_price,
            best_bid=snapshot.best_bid,
            best_bid_qty=snapshot.best_bid_qty,
            best_ask=snapshot.best_ask,
            best_ask_qty=snapshot.best_ask_qty,
            midprice=snapshot.midprice,
            spread=snapshot.spread,
            bid_depth=snapshot.bid_depth,
            ask_depth=snapshot.ask_depth,
            last_trade_price=snapshot.last_trade_price,
            quote_price=quote_price,
        )


def featurize(
    snapshot: LobSnapshot,
    assignment: Assignment,
    time: int,
    constants: NormConstants,
) -> tuple[float, ...]:
    """Encode a market state and client order as the 14-slot input vector."""
    return _features(
        side=assignment.side,
        limit_price=assignment.limit_price,
        best_bid=snapshot.best_bid,
        best_bid_qty=snapshot.best_bid_qty,
        best_ask=snapshot.best_ask,
        best_ask_qty=snapshot.best_ask_qty,
        midprice=snapshot.midprice,
        spread=snapshot.spread,
        bid_depth=snapshot.bid_depth,
        ask_depth=snapshot.ask_depth,
        last_trade_price=snapshot.last_trade_price,
        time=time,
        constants=constants,
    )


def featurize_record(
    record: TapeRecord, constants: NormConstants
) -> tuple[tuple[float, ...], float]:
    """Feature vector and target for one tape record.

    Goes through the same encoder as live featurization, so offline training
    data and live inputs cannot skew apart.
    """
    features = _features(
        side=record.side,
        limit_price=record.limit_price,
        best_bid=record.best_bid,
        best_bid_qty=record.best_bid_qty,
        best_ask=record.best_ask,
        best_ask_qty=record.best_ask_qty,
        midprice=record.midprice,
        spread=record.spread,
        bid_depth=record.bid_depth,
        ask_depth=record.ask_depth,
        last_trade_price=record.last_trade_price,
        time=record.time,
        constants=constants,
    )
    return features, record.quote_price / constants.p_max


def _features(
    *,
    side: Side,
    limit_price: int,
    best_bid: int | None,
    best_bid_qty: int | None,
    best_ask: int | None,
    best_ask_qty: int | None,
    midprice: float | None,
    spread: int | None,
    bid_depth: int,
    ask_depth: int,
    last_trade_price: int | None,
    time: int,
    constants: NormConstants,
) -> tuple[float, ...]:
    p, q, t = constants.p_max, constants.q_norm, constants.t_max
    # Absent book fields encode as 0 alongside a presence flag of 0.
    return (
        1.0 if side is Side.BID else -1.0,
        limit_price / p,
        1.0 if best_bid is not None else 0.0,
        (best_bid or 0) / p,
        (best_bid_qty or 0) / q,
        1.0 if best_ask is not None else 0.0,
        (best_ask or 0) / p,
        (best_ask_qty or 0) / q,
        (midprice or 0.0) / p,
        (spread or 0) / p,
        bid_depth / q,
        ask_depth / q,
        (last_trade_price or 0) / p,
        time / t,
    )


@dataclass(frozen=True)
class Dataset:
    """A chronologically split tape plus its normalization constants."""

    records: tuple[TapeRecord, ...]
    constants: NormConstants
    split_index: int

    @property
    def train_records(self) -> tuple[TapeRecord, ...]:
        return self.records[: self.split_index]

    @property
    def test_records(self) -> tuple[TapeRecord, ...]:
        return self.records[self.split_index :]

    def partition_arrays(self, records: tuple[TapeRecord, ...]):
        """Feature matrix and target vector for a partition, as numpy arrays."""
        pairs = [featurize_record(r, self.constants) for r in records]
        x = np.array([f for f, _ in pairs], dtype=np.float64)
        y = np.array([t for _, t in pairs], dtype=np.float64)
        return x, y

    def train_arrays(self):
        return self.partition_arrays(self.train_records)

    def test_arrays(self):
        return self.partition_arrays(self.test_records)


def split_dataset(
    tape: list[TapeRecord] | tuple[TapeRecord, ...],
    train_fraction: float,
    constants: NormConstants,
) -> Dataset:
    """Chronological split at floor(n * train_fraction); no shuffling, so the
    test partition is strictly later than the training partition."""
    if not 0.0 < train_fraction < 1.0:
        raise DatasetError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(tape)
    split = math.floor(n * train_fraction)
    if split < 1 or split >= n:
        raise DatasetError(
            f"tape of {n} records cannot be split {train_fraction:g}/"
            f"{1 - train_fraction:g} into nonempty partitions"
        )
    return Dataset(records=tuple(tape), constants=constants, split_index=split)


# -- tape CSV ------------------------------------------------------------


def _format_real(x: float) -> str:
    return "%.17g" % x


def _opt(value) -> str:
    return "" if value is None else str(value)


def tape_to_csv(records: list[TapeRecord] | tuple[TapeRecord, ...]) -> str:
    lines = [TAPE_HEADER]
    for r in records:
        lines.append(
            ",".join(
                (
                    str(r.time),
                    r.side.value,
                    str(r.limit_price),
                    _opt(r.best_bid),
                    _opt(r.best_bid_qty),
                    _opt(r.best_ask),
                    _opt(r.best_ask_qty),
                    "" if r.midprice is None else _format_real(r.midprice),
                    _opt(r.spread),
                    str(r.bid_depth),
                    str(r.ask_depth),
                    _opt(r.last_trade_price),
                    str(r.quote_price),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_tape(records, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(tape_to_csv(records))


def _parse_int(field: str, name: str, line: int) -> int:
    try:
        return int(field)
    except ValueError:
        raise TapeFormatError(f"bad integer for {name!r}: {field!r}", line) from None


def _parse_opt_int(field: str, name: str, line: int) -> int | None:
    return None if field == "" else _parse_int(field, name, line)


def parse_tape(text: str) -> list[TapeRecord]:
    lines = text.splitlines()
    if not lines or lines[0].strip() == "":
        raise TapeFormatError("empty tape file", 1)
    if lines[0] != TAPE_HEADER:
        raise TapeFormatError(f"header mismatch: expected {TAPE_HEADER!r}", 1)
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw == "":
            continue
        fields = raw.split(",")
        if len(fields) != 13:
            raise TapeFormatError(f"expected 13 columns, got {len(fields)}", lineno)
        (time_s, side_s, limit_s, bb, bbq, ba, baq, mid, spr, bdep, adep, last, quote) = fields
        if side_s not in (Side.BID.value, Side.ASK.value):
            raise TapeFormatError(f"bad side {side_s!r}", lineno)
        try:
            midprice = None if mid == "" else float(mid)
        except ValueError:
            raise TapeFormatError(f"bad real for 'midprice': {mid!r}", lineno) from None
        records.append(
            TapeRecord(
                time=_parse_int(time_s, "time", lineno),
                side=Side(side_s),
                limit_price=_parse_int(limit_s, "limit", lineno),
                best_bid=_parse_opt_int(bb, "best_bid", lineno),
                best_bid_qty=_parse_opt_int(bbq, "bid_qty", lineno),
                best_ask=_parse_opt_int(ba, "best_ask", lineno),
                best_ask_qty=_parse_opt_int(baq, "ask_qty", lineno),
                midprice=midprice,
                spread=_parse_opt_int(spr, "spread", lineno),
                bid_depth=_parse_int(bdep, "bid_depth", lineno),
                ask_depth=_parse_int(adep, "ask_depth", lineno),
                last_trade_price=_parse_opt_int(last, "last_trade", lineno),
                quote_price=_parse_int(quote, "quote", lineno),
            )
        )
    if not records:
        raise TapeFormatError("tape file has a header but no records", 2)
    return records


def read_tape(path) -> list[TapeRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_tape(fh.read())
