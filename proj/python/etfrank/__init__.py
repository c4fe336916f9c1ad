"""Point-in-time ETF ranking from constituent financial statements."""

from ._core import (
    ConfigError,
    DataError,
    Error,
    NumericError,
    ShapeError,
    aggregate,
    annualized_return,
    annualized_volatility,
    backtest,
    ingest,
    neutralize_labels,
    report,
    run_cli,
    score,
    selftest,
    sharpe,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "NumericError",
    "ShapeError",
    "aggregate",
    "annualized_return",
    "annualized_volatility",
    "backtest",
    "ingest",
    "neutralize_labels",
    "report",
    "run_cli",
    "score",
    "selftest",
    "sharpe",
    "train",
]
