import sys
from datetime import datetime, timezone
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fraudwatch.cli import optimize_pipeline, train_pipeline
from fraudwatch.costopt import CostParams
from fraudwatch.data import SyntheticParams, TransactionRecord, generate_synthetic
from fraudwatch.models import TrainConfig

UTC = timezone.utc


@pytest.fixture(scope="session")
def desk_bundle():
    """Small trained deployment bundle shared across service tests."""
    ds = generate_synthetic(SyntheticParams(rows=4000, fraud_rate=0.02, seed=7))
    cfg = TrainConfig(n_trees=8, tree_max_depth=6, iterations=120, seed=7)
    ensemble = train_pipeline(ds, 0.8, "class_weights", seed=7, cfg=cfg)
    _, bundle = optimize_pipeline(ds, ensemble, 0.8, CostParams(c_fn=50, c_fp=1))
    return bundle


# verdicts confirmed by one oracle run of the desk bundle, then frozen
FRAUD_LIKE_RECORD = TransactionRecord(
    tx_id="fx-fraud", timestamp=datetime(2024, 2, 2, 3, 12, 0, tzinfo=UTC),
    user_id="u9", amount=2500.0, tx_type="transfer", auth_method="password",
    device_id="d-new", location="BR", avg_amount_30d=100.0, tx_count_24h=9,
    is_foreign=True, is_new_device=True, label=None)

BENIGN_RECORD = TransactionRecord(
    tx_id="fx-benign", timestamp=datetime(2024, 2, 2, 14, 30, 0, tzinfo=UTC),
    user_id="u3", amount=50.0, tx_type="payment", auth_method="pin",
    device_id="d3", location="US", avg_amount_30d=55.0, tx_count_24h=2,
    is_foreign=False, is_new_device=False, label=None)


def record_to_json(rec: TransactionRecord) -> dict:
    return {
        "tx_id": rec.tx_id,
        "timestamp": rec.timestamp.isoformat().replace("+00:00", "Z"),
        "user_id": rec.user_id,
        "amount": rec.amount,
        "tx_type": rec.tx_type,
        "auth_method": rec.auth_method,
        "device_id": rec.device_id,
        "location": rec.location,
        "avg_amount_30d": rec.avg_amount_30d,
        "tx_count_24h": rec.tx_count_24h,
        "is_foreign": rec.is_foreign,
        "is_new_device": rec.is_new_device,
    }
