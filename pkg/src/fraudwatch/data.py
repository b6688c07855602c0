"""Transaction data handling: CSV ingest, synthetic generation, feature
encoding, temporal train/test splitting, and class balancing."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import BinaryIO, Optional, Union

import numpy as np

TX_TYPES = ("transfer", "payment", "withdrawal", "deposit")
AUTH_METHODS = ("pin", "biometric", "password", "otp")

CSV_COLUMNS = (
    "tx_id", "timestamp", "user_id", "amount", "tx_type", "auth_method",
    "device_id", "location", "avg_amount_30d", "tx_count_24h",
    "is_foreign", "is_new_device", "label",
)

# Derived features are fixed; they are computed from the record, never stored.
DERIVED_FEATURES = ("hour_of_day", "day_of_week", "amount_ratio")

_REGIONS = ("US", "GB", "DE", "FR", "IN", "BR", "JP", "AU")


@dataclass(frozen=True, slots=True)
class TransactionRecord:
    """One raw banking transaction with behavioral and contextual attributes."""

    tx_id: str
    timestamp: datetime  # tz-aware UTC
    user_id: str
    amount: float
    tx_type: str
    auth_method: str
    device_id: str
    location: str
    avg_amount_30d: float
    tx_count_24h: int
    is_foreign: bool
    is_new_device: bool
    label: Optional[int] = None


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of records; either fully labeled or fully unlabeled."""

    records: tuple[TransactionRecord, ...]
    provenance: str = "ingested"

    def __post_init__(self):
        if self.provenance not in ("ingested", "synthetic", "derived"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        labeled = sum(1 for r in self.records if r.label is not None)
        if labeled not in (0, len(self.records)):
            raise ValueError("dataset must be all-labeled or all-unlabeled")
        seen = set()
        for r in self.records:
            if r.tx_id in seen:
                raise ValueError(f"duplicate tx_id {r.tx_id!r}")
            seen.add(r.tx_id)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def labeled(self) -> bool:
        return len(self.records) > 0 and self.records[0].label is not None

    def labels(self) -> np.ndarray:
        if not self.labeled:
            raise ValueError("dataset is unlabeled")
        return np.array([r.label for r in self.records], dtype=np.int64)


@dataclass(frozen=True)
class PreprocessConfig:
    """Which raw fields are one-hot encoded vs z-scored; epsilon guards
    the amount_ratio denominator for users with no history."""

    one_hot_fields: tuple[str, ...] = ("tx_type", "auth_method", "location")
    numeric_fields: tuple[str, ...] = (
        "amount", "avg_amount_30d", "tx_count_24h", "is_foreign", "is_new_device",
    )
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if set(self.one_hot_fields) & set(self.numeric_fields):
            raise ValueError("one_hot_fields and numeric_fields must be disjoint")


@dataclass(frozen=True)
class FeatureCodec:
    """Fitted encoding statistics. Vocabulary and z-score stats come from the
    training partition only; feature_order is stable across save/load."""

    category_vocab: dict[str, tuple[str, ...]]
    numeric_stats: dict[str, tuple[float, float]]  # name -> (mean, stddev)
    feature_order: tuple[str, ...]
    epsilon: float
    schema_version: int = 1

    @property
    def width(self) -> int:
        return len(self.feature_order)

    @property
    def one_hot_field_order(self) -> tuple[str, ...]:
        """One-hot group order as recorded in feature_order (dict iteration
        order is not trustworthy after serialization round-trips)."""
        seen: list[str] = []
        for name in self.feature_order:
            if "=" in name:
                f = name.split("=", 1)[0]
                if not seen or seen[-1] != f:
                    seen.append(f)
        return tuple(seen)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "epsilon": self.epsilon,
            "category_vocab": {k: list(v) for k, v in self.category_vocab.items()},
            "numeric_stats": {k: [m, s] for k, (m, s) in self.numeric_stats.items()},
            "feature_order": list(self.feature_order),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureCodec":
        return cls(
            category_vocab={k: tuple(v) for k, v in d["category_vocab"].items()},
            numeric_stats={k: (float(m), float(s)) for k, (m, s) in d["numeric_stats"].items()},
            feature_order=tuple(d["feature_order"]),
            epsilon=float(d["epsilon"]),
            schema_version=int(d["schema_version"]),
        )


@dataclass(frozen=True)
class SyntheticParams:
    """Generator knobs. Fraud rows get elevated amount ratios and higher
    odd-hour / new-device probabilities so the signal is learnable."""

    rows: int
    fraud_rate: float = 0.005
    seed: int = 0
    fraud_amount_ratio_multiplier: float = 8.0
    fraud_odd_hour_probability: float = 0.7
    fraud_new_device_probability: float = 0.6

    def __post_init__(self):
        if self.rows <= 0:
            raise ValueError("rows must be positive")
        if not 0.0 < self.fraud_rate < 1.0:
            raise ValueError("fraud_rate must be in (0, 1)")


def parse_timestamp(raw: str) -> datetime:
    """ISO-8601 UTC timestamp, e.g. 2024-01-15T09:30:00Z."""
    try:
        ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        raise ValueError(f"invalid timestamp {raw!r}")
    if ts.tzinfo is None:
        raise ValueError(f"timestamp must carry a UTC offset: {raw!r}")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _parse_bool(raw: str, col: str, row: int) -> bool:
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise ValueError(f"{col} must be 0 or 1, row {row}")


def _parse_row(values: list[str], row: int) -> TransactionRecord:
    rec = dict(zip(CSV_COLUMNS, values))
    try:
        amount = float(rec["amount"])
    except ValueError:
        raise ValueError(f"amount not numeric, row {row}")
    if amount < 0:
        raise ValueError(f"amount must be ≥ 0, row {row}")
    try:
        avg30 = float(rec["avg_amount_30d"])
    except ValueError:
        raise ValueError(f"avg_amount_30d not numeric, row {row}")
    if avg30 < 0:
        raise ValueError(f"avg_amount_30d must be ≥ 0, row {row}")
    try:
        count24 = int(rec["tx_count_24h"])
    except ValueError:
        raise ValueError(f"tx_count_24h not an integer, row {row}")
    if count24 < 0:
        raise ValueError(f"tx_count_24h must be ≥ 0, row {row}")
    if rec["tx_type"] not in TX_TYPES:
        raise ValueError(f"unknown tx_type {rec['tx_type']!r}, row {row}")
    if rec["auth_method"] not in AUTH_METHODS:
        raise ValueError(f"unknown auth_method {rec['auth_method']!r}, row {row}")
    label_raw = rec["label"]
    if label_raw == "":
        label = None
    elif label_raw in ("0", "1"):
        label = int(label_raw)
    else:
        raise ValueError(f"label must be 0, 1 or empty, row {row}")
    try:
        ts = parse_timestamp(rec["timestamp"])
    except ValueError as exc:
        raise ValueError(f"{exc}, row {row}")
    return TransactionRecord(
        tx_id=rec["tx_id"],
        timestamp=ts,
        user_id=rec["user_id"],
        amount=amount,
        tx_type=rec["tx_type"],
        auth_method=rec["auth_method"],
        device_id=rec["device_id"],
        location=rec["location"],
        avg_amount_30d=avg30,
        tx_count_24h=count24,
        is_foreign=_parse_bool(rec["is_foreign"], "is_foreign", row),
        is_new_device=_parse_bool(rec["is_new_device"], "is_new_device", row),
        label=label,
    )


def parse_csv(source: Union[bytes, BinaryIO]) -> Dataset:
    """Parse the canonical 13-column CSV into a Dataset, preserving row order.

    Row numbers in error messages are 1-based over data rows (header excluded).
    """
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    text = io.TextIOWrapper(source, encoding="utf-8", newline="")
    reader = csv.reader(text)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV: missing header row")
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(
            f"bad header: expected {','.join(CSV_COLUMNS)}, got {','.join(header)}"
        )
    records = []
    seen_ids = set()
    for row_no, values in enumerate(reader, start=1):
        if not values:
            continue
        if len(values) != len(CSV_COLUMNS):
            raise ValueError(
                f"expected {len(CSV_COLUMNS)} columns, got {len(values)}, row {row_no}"
            )
        rec = _parse_row(values, row_no)
        if rec.tx_id in seen_ids:
            raise ValueError(f"duplicate tx_id {rec.tx_id!r}, row {row_no}")
        seen_ids.add(rec.tx_id)
        records.append(rec)
    return Dataset(records=tuple(records), provenance="ingested")


def _format_amount(v: float) -> str:
    # repr gives the shortest string that round-trips the float
    return repr(float(v))


def write_csv(ds: Dataset, sink: BinaryIO) -> None:
    """Write a Dataset in the canonical CSV layout (inverse of parse_csv)."""
    text = io.TextIOWrapper(sink, encoding="utf-8", newline="")
    writer = csv.writer(text, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in ds.records:
        writer.writerow([
            r.tx_id,
            format_timestamp(r.timestamp),
            r.user_id,
            _format_amount(r.amount),
            r.tx_type,
            r.auth_method,
            r.device_id,
            r.location,
            _format_amount(r.avg_amount_30d),
            str(r.tx_count_24h),
            "1" if r.is_foreign else "0",
            "1" if r.is_new_device else "0",
            "" if r.label is None else str(r.label),
        ])
    text.flush()
    text.detach()


_EPOCH_START = int(datetime(2024, 1, 1, tzinfo=timezone.utc).timestamp())


def generate_synthetic(params: SyntheticParams) -> Dataset:
    """Seeded synthetic transaction stream with an exact fraud count.

    Timestamps are strictly increasing; fraud labels are placed preferentially
    on odd-hour (00:00-05:59 UTC) rows and carry elevated amount ratios and
    new-device rates. Pure function of (params, seed).
    """
    n = params.rows
    rng = np.random.default_rng(params.seed)

    steps = rng.integers(1, 87, size=n)  # 1..86 s gaps -> strictly increasing
    epochs = _EPOCH_START + np.cumsum(steps)
    hours = (epochs % 86400) // 3600
    odd_hour = hours < 6

    n_fraud = round(n * params.fraud_rate)
    fraud_mask = np.zeros(n, dtype=bool)
    if n_fraud > 0:
        odd_idx = np.flatnonzero(odd_hour)
        other_idx = np.flatnonzero(~odd_hour)
        want_odd = min(round(n_fraud * params.fraud_odd_hour_probability),
                       odd_idx.size, n_fraud)
        want_other = min(n_fraud - want_odd, other_idx.size)
        want_odd = min(n_fraud - want_other, odd_idx.size)
        picked = []
        if want_odd > 0:
            picked.append(rng.choice(odd_idx, size=want_odd, replace=False))
        if want_other > 0:
            picked.append(rng.choice(other_idx, size=want_other, replace=False))
        fraud_mask[np.concatenate(picked)] = True

    n_users = max(1, n // 20)
    user_ids = rng.integers(0, n_users, size=n)
    device_ids = rng.integers(0, 3 * n_users, size=n)

    avg30 = np.round(rng.lognormal(4.0, 0.6, size=n), 2)
    new_user = rng.random(n) < 0.003
    avg30[new_user] = 0.0

    ratio_legit = rng.lognormal(0.0, 0.35, size=n)
    ratio_fraud = rng.lognormal(
        math.log(params.fraud_amount_ratio_multiplier), 0.45, size=n)
    ratio = np.where(fraud_mask, ratio_fraud, ratio_legit)
    base = np.where(avg30 > 0, avg30, math.exp(4.0))
    amounts = np.round(base * ratio, 2)

    tx_types = rng.choice(len(TX_TYPES), size=n, p=(0.30, 0.45, 0.15, 0.10))
    auths = rng.choice(len(AUTH_METHODS), size=n, p=(0.40, 0.25, 0.25, 0.10))
    locations = rng.choice(
        len(_REGIONS), size=n,
        p=(0.35, 0.12, 0.10, 0.08, 0.12, 0.08, 0.08, 0.07))
    is_foreign = rng.random(n) < 0.05
    p_new_dev = np.where(fraud_mask, params.fraud_new_device_probability, 0.05)
    is_new_device = rng.random(n) < p_new_dev
    counts24 = rng.poisson(2.0, size=n)

    utc = timezone.utc
    records = tuple(
        TransactionRecord(
            tx_id=f"tx{i:08d}",
            timestamp=datetime.fromtimestamp(int(epochs[i]), tz=utc),
            user_id=f"u{int(user_ids[i])}",
            amount=float(amounts[i]),
            tx_type=TX_TYPES[tx_types[i]],
            auth_method=AUTH_METHODS[auths[i]],
            device_id=f"d{int(device_ids[i])}",
            location=_REGIONS[locations[i]],
            avg_amount_30d=float(avg30[i]),
            tx_count_24h=int(counts24[i]),
            is_foreign=bool(is_foreign[i]),
            is_new_device=bool(is_new_device[i]),
            label=int(fraud_mask[i]),
        )
        for i in range(n)
    )
    return Dataset(records=records, provenance="synthetic")


def _derived_value(rec: TransactionRecord, name: str, epsilon: float) -> float:
    if name == "hour_of_day":
        return float(rec.timestamp.astimezone(timezone.utc).hour)
    if name == "day_of_week":
        return float(rec.timestamp.astimezone(timezone.utc).weekday())
    if name == "amount_ratio":
        return rec.amount / max(rec.avg_amount_30d, epsilon)
    raise ValueError(f"unknown derived feature {name!r}")


def _numeric_value(rec: TransactionRecord, name: str) -> float:
    v = getattr(rec, name)
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    return float(v)


def fit_codec(train: Dataset, config: PreprocessConfig = PreprocessConfig()) -> FeatureCodec:
    """Fit vocabularies and z-score stats on the training partition only.

    Feature order: numeric fields (schema order), derived features (fixed
    order), then one-hot groups (config field order, sorted values).
    Stddev is the population standard deviation.
    """
    if len(train.records) == 0:
        raise ValueError("cannot fit codec on an empty dataset")
    if not train.labeled:
        raise ValueError("codec must be fitted on labeled training data")

    numeric_stats: dict[str, tuple[float, float]] = {}
    for name in config.numeric_fields:
        col = np.array([_numeric_value(r, name) for r in train.records])
        numeric_stats[name] = (float(col.mean()), float(col.std()))
    for name in DERIVED_FEATURES:
        col = np.array([_derived_value(r, name, config.epsilon) for r in train.records])
        numeric_stats[name] = (float(col.mean()), float(col.std()))

    category_vocab: dict[str, tuple[str, ...]] = {}
    for name in config.one_hot_fields:
        category_vocab[name] = tuple(sorted({getattr(r, name) for r in train.records}))

    order = list(config.numeric_fields) + list(DERIVED_FEATURES)
    for name in config.one_hot_fields:
        order.extend(f"{name}={v}" for v in category_vocab[name])
    return FeatureCodec(
        category_vocab=category_vocab,
        numeric_stats=numeric_stats,
        feature_order=tuple(order),
        epsilon=config.epsilon,
    )


def _numeric_names(codec: FeatureCodec) -> list[str]:
    return [name for name in codec.feature_order if "=" not in name]


def encode(codec: FeatureCodec, record: TransactionRecord) -> np.ndarray:
    """Encode one record into a fixed-width feature vector.

    Numeric and derived features are z-scored; a zero training stddev maps
    the feature to 0. Categories unseen at fit time yield an all-zero
    one-hot group, so encoding never fails.
    """
    out = np.zeros(codec.width)
    i = 0
    for name in _numeric_names(codec):
        if name in DERIVED_FEATURES:
            v = _derived_value(record, name, codec.epsilon)
        else:
            v = _numeric_value(record, name)
        mean, std = codec.numeric_stats[name]
        out[i] = (v - mean) / std if std > 0 else 0.0
        i += 1
    for field_name in codec.one_hot_field_order:
        vocab = codec.category_vocab[field_name]
        value = getattr(record, field_name)
        for j, known in enumerate(vocab):
            if value == known:
                out[i + j] = 1.0
                break
        i += len(vocab)
    return out


def encode_dataset(codec: FeatureCodec, ds: Dataset) -> np.ndarray:
    """Vectorized encode of every record; row i corresponds to ds.records[i]."""
    n = len(ds.records)
    X = np.zeros((n, codec.width))
    col = 0
    for name in _numeric_names(codec):
        if name in DERIVED_FEATURES:
            raw = np.array([_derived_value(r, name, codec.epsilon) for r in ds.records])
        else:
            raw = np.array([_numeric_value(r, name) for r in ds.records])
        mean, std = codec.numeric_stats[name]
        X[:, col] = (raw - mean) / std if std > 0 else 0.0
        col += 1
    for field_name in codec.one_hot_field_order:
        vocab = codec.category_vocab[field_name]
        index = {v: j for j, v in enumerate(vocab)}
        values = [index.get(getattr(r, field_name), -1) for r in ds.records]
        for i, j in enumerate(values):
            if j >= 0:
                X[i, col + j] = 1.0
        col += len(vocab)
    return X


def temporal_split(data: Dataset, train_fraction: float) -> tuple[Dataset, Dataset]:
    """Time-ordered split: first ceil(n * train_fraction) records form the
    training partition. Ties on timestamp break by tx_id. The test side keeps
    its natural label distribution."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be in (0, 1)")
    n = len(data.records)
    if n < 2:
        raise ValueError("need at least 2 records to split")
    ordered = sorted(data.records, key=lambda r: (r.timestamp, r.tx_id))
    n_train = math.ceil(n * train_fraction)
    train = Dataset(records=tuple(ordered[:n_train]), provenance="derived")
    test = Dataset(records=tuple(ordered[n_train:]), provenance="derived")
    return train, test


def balance(train: Dataset, strategy: str = "class_weights",
            seed: int = 0) -> tuple[Dataset, dict[int, float]]:
    """Balance the training partition.

    class_weights leaves the data unchanged and returns weight_c = n / (2 n_c)
    per class; undersample randomly (seeded) drops majority records down to
    the minority count, retaining every minority record.
    """
    if not train.labeled:
        raise ValueError("balance requires labeled data")
    labels = train.labels()
    n = labels.size
    n_fraud = int(labels.sum())
    n_legit = n - n_fraud
    if n_fraud == 0 or n_legit == 0:
        raise ValueError("balance requires both classes present")

    if strategy == "class_weights":
        weights = {0: n / (2.0 * n_legit), 1: n / (2.0 * n_fraud)}
        return train, weights
    if strategy == "undersample":
        rng = np.random.default_rng(seed)
        minority = 1 if n_fraud <= n_legit else 0
        majority = 1 - minority
        maj_idx = np.flatnonzero(labels == majority)
        min_count = min(n_fraud, n_legit)
        keep_maj = rng.choice(maj_idx, size=min_count, replace=False)
        keep = np.sort(np.concatenate([np.flatnonzero(labels == minority), keep_maj]))
        records = tuple(train.records[i] for i in keep)
        return Dataset(records=records, provenance="derived"), {0: 1.0, 1: 1.0}
    raise ValueError(f"unknown balance strategy {strategy!r}")


def sample_weights(ds: Dataset, class_weights: dict[int, float]) -> np.ndarray:
    """Per-record training weights from per-class weights."""
    return np.array([class_weights[r.label] for r in ds.records])
