"""Real-time decision and enforcement: score a transaction before execution,
map the probability to allow/flag/block through the deployed policy, and
persist one audit record per decision."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterator, Optional, Union

import numpy as np

from .data import (
    Dataset,
    SyntheticParams,
    TransactionRecord,
    encode,
    format_timestamp,
    generate_synthetic,
    parse_timestamp,
)
from .models import EnsembleModel, ensemble_predict, load_model, save_model

BUNDLE_SCHEMA_VERSION = 1

VERDICT_ALLOW = "allow"
VERDICT_FLAG = "flag"
VERDICT_BLOCK = "block"


@dataclass(frozen=True)
class DecisionPolicy:
    """block_threshold is tau* from threshold optimization; the optional
    review band [review_lower, block_threshold) flags instead of blocking.
    Monitor mode downgrades every block to a flag (shadow rollout)."""

    block_threshold: float
    review_lower: Optional[float] = None  # None -> empty band
    mode: str = "enforce"

    def __post_init__(self):
        if not 0.0 <= self.block_threshold <= 1.0:
            raise ValueError("block_threshold must lie in [0, 1]")
        if self.review_lower is None:
            object.__setattr__(self, "review_lower", self.block_threshold)
        if not 0.0 <= self.review_lower <= self.block_threshold:
            raise ValueError("review_lower must lie in [0, block_threshold]")
        if self.mode not in ("enforce", "monitor"):
            raise ValueError(f"unknown policy mode {self.mode!r}")


@dataclass(frozen=True)
class DeploymentBundle:
    """The versioned unit served in real time: ensemble (with its codec),
    the decision policy, and provenance metadata."""

    ensemble: EnsembleModel
    policy: DecisionPolicy
    model_version: str
    created_at: datetime

    def __post_init__(self):
        if not self.model_version:
            raise ValueError("model_version must be non-empty")


@dataclass(frozen=True)
class Decision:
    verdict: str
    fraud_probability: float
    threshold: float
    latency_us: int


@dataclass(frozen=True)
class AuditRecord:
    ts: datetime
    tx_id: str
    fraud_probability: float
    threshold: float
    verdict: str
    model_version: str
    latency_us: int


def verdict_for(policy: DecisionPolicy, probability: float) -> str:
    """Pure verdict mapping; replaying an audit log through this function
    reproduces every decision."""
    if probability >= policy.block_threshold:
        return VERDICT_FLAG if policy.mode == "monitor" else VERDICT_BLOCK
    if probability >= policy.review_lower:
        return VERDICT_FLAG
    return VERDICT_ALLOW


def decide(bundle: DeploymentBundle, record: TransactionRecord) -> Decision:
    """Encode, score, and map to a verdict; latency covers exactly those steps."""
    start = time.perf_counter_ns()
    x = encode(bundle.ensemble.codec, record)
    p = ensemble_predict(bundle.ensemble, x)
    p = min(max(p, 0.0), 1.0)
    verdict = verdict_for(bundle.policy, p)
    latency_us = (time.perf_counter_ns() - start) // 1000
    return Decision(verdict=verdict, fraud_probability=p,
                    threshold=bundle.policy.block_threshold,
                    latency_us=int(latency_us))


def audit_record_for(decision: Decision, tx_id: str, model_version: str,
                     ts: Optional[datetime] = None) -> AuditRecord:
    return AuditRecord(
        ts=ts or datetime.now(timezone.utc),
        tx_id=tx_id,
        fraud_probability=decision.fraud_probability,
        threshold=decision.threshold,
        verdict=decision.verdict,
        model_version=model_version,
        latency_us=decision.latency_us,
    )


class AuditLog:
    """Append-only JSON-lines sink; appends are serialized through one lock
    so concurrent deciders never tear or interleave lines."""

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._fh: Optional[IO[str]] = open(self.path, "a", encoding="utf-8")

    def append(self, rec: AuditRecord) -> None:
        line = json.dumps({
            "ts": rec.ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z"),
            "tx_id": rec.tx_id,
            "fraud_probability": rec.fraud_probability,
            "threshold": rec.threshold,
            "verdict": rec.verdict,
            "model_version": rec.model_version,
            "latency_us": rec.latency_us,
        })
        with self._lock:
            if self._fh is None:
                raise ValueError("audit log is closed")
            self._fh.write(line + "\n")
            self._fh.flush()

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def __enter__(self) -> "AuditLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def iter_audit_records(path: Union[str, Path]) -> Iterator[AuditRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            yield AuditRecord(
                ts=parse_timestamp(obj["ts"]),
                tx_id=obj["tx_id"],
                fraud_probability=float(obj["fraud_probability"]),
                threshold=float(obj["threshold"]),
                verdict=obj["verdict"],
                model_version=obj["model_version"],
                latency_us=int(obj["latency_us"]),
            )


def save_bundle(bundle: DeploymentBundle) -> bytes:
    model_doc = json.loads(save_model(bundle.ensemble).decode("utf-8"))
    doc = {
        "bundle_schema_version": BUNDLE_SCHEMA_VERSION,
        "model_version": bundle.model_version,
        "created_at": format_timestamp(bundle.created_at),
        "policy": {
            "block_threshold": bundle.policy.block_threshold,
            "review_lower": bundle.policy.review_lower,
            "mode": bundle.policy.mode,
        },
        "model": model_doc,
    }
    return (json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n").encode()


def load_bundle(data: bytes) -> DeploymentBundle:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"corrupt bundle document: {exc}")
    if not isinstance(doc, dict) or "bundle_schema_version" not in doc:
        raise ValueError("corrupt bundle document: missing bundle_schema_version")
    if doc["bundle_schema_version"] != BUNDLE_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported bundle_schema_version {doc['bundle_schema_version']}")
    if "policy" not in doc:
        raise ValueError("corrupt bundle document: missing policy")
    try:
        pol = doc["policy"]
        policy = DecisionPolicy(
            block_threshold=float(pol["block_threshold"]),
            review_lower=float(pol["review_lower"]),
            mode=str(pol["mode"]),
        )
        ensemble = load_model(
            (json.dumps(doc["model"], sort_keys=True, separators=(",", ":")) + "\n").encode())
        return DeploymentBundle(
            ensemble=ensemble,
            policy=policy,
            model_version=str(doc["model_version"]),
            created_at=parse_timestamp(doc["created_at"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"corrupt bundle document: {exc}")


def load_bundle_file(path: Union[str, Path]) -> DeploymentBundle:
    return load_bundle(Path(path).read_bytes())


def benchmark_decide(bundle: DeploymentBundle, n: int = 10_000,
                     seed: int = 0) -> dict[str, float]:
    """Time decide() on n synthetic records; latencies in microseconds."""
    if n < 100:
        raise ValueError("benchmark needs n >= 100")
    ds = generate_synthetic(SyntheticParams(rows=n, fraud_rate=0.01, seed=seed))
    latencies = np.empty(n)
    for i, rec in enumerate(ds.records):
        start = time.perf_counter_ns()
        decide(bundle, rec)
        latencies[i] = (time.perf_counter_ns() - start) / 1000.0
    return {
        "n": float(n),
        "mean_us": float(latencies.mean()),
        "p50_us": float(np.percentile(latencies, 50)),
        "p95_us": float(np.percentile(latencies, 95)),
        "p99_us": float(np.percentile(latencies, 99)),
    }
