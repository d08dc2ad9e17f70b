"""Sentiment-driven daily trading: tweet scoring, classifiers, a Q-learning agent and backtests."""

__version__ = "0.1.0"
