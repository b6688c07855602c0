"""Cost-sensitive transaction fraud detection: data pipeline, tree-ensemble
models, threshold optimization, real-time decision engine, phishing URL gate,
and the HTTP scoring service."""

__version__ = "0.1.0"
