"""Lexical phishing-URL scoring: deterministic feature extraction from the
normalized URL and a capped weighted-sum heuristic mapped onto
safe / suspicious / phishing bands. Runs fully isolated from the fraud path."""

from __future__ import annotations

import ipaddress
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union
from urllib.parse import urlsplit, urlunsplit

VERDICT_SAFE = "safe"
VERDICT_SUSPICIOUS = "suspicious"
VERDICT_PHISHING = "phishing"

_DEFAULT_PORTS = {"http": 80, "https": 443}

# count-valued features; everything else scores as a boolean risk signal
COUNT_FEATURES = ("keyword_hits", "num_hyphens_in_host", "num_subdomains",
                  "num_dots_in_host", "path_depth", "url_length", "host_length")
BOOL_FEATURES = ("has_ip_host", "has_at_symbol", "has_punycode",
                 "suspicious_tld", "no_https")


@dataclass(frozen=True)
class UrlFeatures:
    url_length: int
    host_length: int
    num_dots_in_host: int
    num_hyphens_in_host: int
    num_subdomains: int
    has_ip_host: bool
    has_at_symbol: bool
    uses_https: bool
    has_punycode: bool
    suspicious_tld: bool
    keyword_hits: int
    path_depth: int


@dataclass(frozen=True)
class HeuristicWeights:
    """Non-negative weight per risk feature; counts saturate at their cap
    before weighting, and the weighted sum is divided by the normalization
    denominator then clamped into [0, 1]."""

    weights: dict[str, float]
    caps: dict[str, float]
    denominator: float

    def __post_init__(self):
        if self.denominator <= 0:
            raise ValueError("denominator must be positive")
        for name, w in self.weights.items():
            if w < 0:
                raise ValueError(f"weight for {name} must be non-negative")
        for name, c in self.caps.items():
            if c < 0:
                raise ValueError(f"cap for {name} must be non-negative")


@dataclass(frozen=True)
class VerdictBands:
    """score < suspicious_min -> safe; [suspicious_min, phishing_min) ->
    suspicious; >= phishing_min -> phishing."""

    suspicious_min: float = 0.4
    phishing_min: float = 0.7

    def __post_init__(self):
        if not 0.0 <= self.suspicious_min <= self.phishing_min <= 1.0:
            raise ValueError("bands must satisfy 0 <= suspicious_min <= phishing_min <= 1")

    def verdict(self, score: float) -> str:
        if score >= self.phishing_min:
            return VERDICT_PHISHING
        if score >= self.suspicious_min:
            return VERDICT_SUSPICIOUS
        return VERDICT_SAFE


@dataclass(frozen=True)
class PhishConfig:
    keywords: tuple[str, ...]
    suspicious_tlds: tuple[str, ...]
    weights: HeuristicWeights
    bands: VerdictBands


@dataclass(frozen=True)
class PhishVerdict:
    risk_score: float
    verdict: str
    matched_features: tuple[str, ...]


def load_config(path: Optional[Union[str, Path]] = None) -> PhishConfig:
    """Load the scoring config; the packaged default ships with the library."""
    if path is None:
        raw = resources.files("fraudwatch").joinpath("phishing_config.json").read_text()
    else:
        raw = Path(path).read_text(encoding="utf-8")
    doc = json.loads(raw)
    bands = doc.get("bands", {})
    return PhishConfig(
        keywords=tuple(doc["keywords"]),
        suspicious_tlds=tuple(doc["suspicious_tlds"]),
        weights=HeuristicWeights(
            weights={k: float(v) for k, v in doc["weights"].items()},
            caps={k: float(v) for k, v in doc["caps"].items()},
            denominator=float(doc["denominator"]),
        ),
        bands=VerdictBands(
            suspicious_min=float(bands.get("suspicious_min", 0.4)),
            phishing_min=float(bands.get("phishing_min", 0.7)),
        ),
    )


_default_config: Optional[PhishConfig] = None


def default_config() -> PhishConfig:
    global _default_config
    if _default_config is None:
        _default_config = load_config()
    return _default_config


def _normalize(url: str) -> tuple[str, str, str, str, str]:
    """(normalized_url, scheme, netloc, host, path) with lowercase
    scheme/host and default ports stripped; raises on anything without a
    scheme and host."""
    parts = urlsplit(url.strip())
    scheme = parts.scheme.lower()
    if not scheme or not parts.netloc:
        raise ValueError(f"unparseable URL (need scheme and host): {url!r}")
    try:
        host = parts.hostname
        port = parts.port
    except ValueError:
        raise ValueError(f"unparseable URL (bad host or port): {url!r}")
    if not host:
        raise ValueError(f"unparseable URL (empty host): {url!r}")
    host = host.lower()
    netloc = parts.netloc.lower()
    if port is not None and port == _DEFAULT_PORTS.get(scheme):
        netloc = netloc.rsplit(":", 1)[0]
    normalized = urlunsplit((scheme, netloc, parts.path, parts.query, parts.fragment))
    return normalized, scheme, netloc, host, parts.path


def _is_ip(host: str) -> bool:
    try:
        ipaddress.ip_address(host)
        return True
    except ValueError:
        return False


def extract_url_features(url: str, config: Optional[PhishConfig] = None) -> UrlFeatures:
    """Deterministic lexical features of the normalized URL."""
    cfg = config or default_config()
    normalized, scheme, netloc, host, path = _normalize(url)
    is_ip = _is_ip(host)
    labels = host.split(".") if not is_ip else []
    haystack = (host + path).lower()
    return UrlFeatures(
        url_length=len(normalized),
        host_length=len(host),
        num_dots_in_host=host.count("."),
        num_hyphens_in_host=host.count("-"),
        num_subdomains=max(0, len(labels) - 2) if not is_ip else 0,
        has_ip_host=is_ip,
        has_at_symbol="@" in netloc,
        uses_https=scheme == "https",
        has_punycode="xn--" in host,
        suspicious_tld=bool(labels) and labels[-1] in cfg.suspicious_tlds,
        keyword_hits=sum(haystack.count(kw) for kw in cfg.keywords),
        path_depth=sum(1 for seg in path.split("/") if seg),
    )


def _contributions(f: UrlFeatures, w: HeuristicWeights) -> list[tuple[str, float]]:
    out = []
    flags = {
        "has_ip_host": f.has_ip_host,
        "has_at_symbol": f.has_at_symbol,
        "has_punycode": f.has_punycode,
        "suspicious_tld": f.suspicious_tld,
        "no_https": not f.uses_https,
    }
    for name in BOOL_FEATURES:
        weight = w.weights.get(name, 0.0)
        if flags[name] and weight > 0:
            out.append((name, weight))
    for name in COUNT_FEATURES:
        weight = w.weights.get(name, 0.0)
        value = float(getattr(f, name))
        capped = min(value, w.caps.get(name, value))
        if weight > 0 and capped > 0:
            out.append((name, weight * capped))
    return out


def heuristic_score(f: UrlFeatures, w: Optional[HeuristicWeights] = None) -> float:
    """Capped weighted sum of risk features over the normalization
    denominator, clamped to [0, 1]; monotone non-decreasing in every risk
    feature (https contributes risk only when absent)."""
    weights = w or default_config().weights
    total = sum(v for _, v in _contributions(f, weights))
    return min(1.0, max(0.0, total / weights.denominator))


def classify_url(url: str, config: Optional[PhishConfig] = None) -> PhishVerdict:
    """Extract, score, and band one URL; matched features explain the score."""
    cfg = config or default_config()
    features = extract_url_features(url, cfg)
    contributions = _contributions(features, cfg.weights)
    score = min(1.0, max(0.0, sum(v for _, v in contributions) / cfg.weights.denominator))
    return PhishVerdict(
        risk_score=score,
        verdict=cfg.bands.verdict(score),
        matched_features=tuple(name for name, _ in contributions),
    )
