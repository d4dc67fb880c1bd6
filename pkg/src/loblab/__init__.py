"""loblab: a limit-order-book market laboratory.

Simulates continuous-double-auction trading among adaptive sales-trader
agents, records a consolidated tape of a profitable trader, trains a
feedforward network to imitate it, and re-inserts the trained network as a
live agent for profitability comparison.
"""

from loblab.book import Book, LobSnapshot, Order, OrderRejected, Side, Trade, new_book

__all__ = [
    "Book",
    "LobSnapshot",
    "Order",
    "OrderRejected",
    "Side",
    "Trade",
    "new_book",
]

__version__ = "0.1.0"
