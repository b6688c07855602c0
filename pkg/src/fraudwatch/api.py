"""HTTP scoring service: authenticated score/decide/phishing endpoints plus
an unauthenticated health probe. /v1/score is a dry run; /v1/decide enforces
the policy and appends exactly one audit record per successful decision, and
fails closed when it cannot."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, AwareDatetime

from .data import TransactionRecord
from .engine import (
    AuditLog,
    DeploymentBundle,
    audit_record_for,
    decide,
    load_bundle_file,
)
from .phishgate import PhishConfig, classify_url, default_config, load_config

API_KEY_HEADER = "X-API-Key"


@dataclass
class ApiConfig:
    """Service wiring; environment variables override the serve flags."""

    addr: str = "127.0.0.1:8000"
    api_key: str = ""
    bundle_path: Optional[str] = None
    phishing_config_path: Optional[str] = None
    audit_log_path: str = "audit.jsonl"

    @classmethod
    def from_env(cls, **overrides) -> "ApiConfig":
        cfg = cls(**overrides)
        cfg.addr = os.environ.get("FRAUDWATCH_ADDR", cfg.addr)
        cfg.api_key = os.environ.get("FRAUDWATCH_API_KEY", cfg.api_key)
        cfg.bundle_path = os.environ.get("FRAUDWATCH_BUNDLE", cfg.bundle_path)
        cfg.phishing_config_path = os.environ.get(
            "FRAUDWATCH_PHISH_CONFIG", cfg.phishing_config_path)
        cfg.audit_log_path = os.environ.get(
            "FRAUDWATCH_AUDIT_LOG", cfg.audit_log_path)
        return cfg


class TransactionIn(BaseModel):
    """Request body mirroring the CSV schema field names (label omitted)."""

    tx_id: str
    timestamp: AwareDatetime
    user_id: str
    amount: float = Field(ge=0)
    tx_type: Literal["transfer", "payment", "withdrawal", "deposit"]
    auth_method: Literal["pin", "biometric", "password", "otp"]
    device_id: str
    location: str
    avg_amount_30d: float = Field(ge=0)
    tx_count_24h: int = Field(ge=0)
    is_foreign: bool
    is_new_device: bool

    def to_record(self) -> TransactionRecord:
        return TransactionRecord(
            tx_id=self.tx_id, timestamp=self.timestamp, user_id=self.user_id,
            amount=self.amount, tx_type=self.tx_type,
            auth_method=self.auth_method, device_id=self.device_id,
            location=self.location, avg_amount_30d=self.avg_amount_30d,
            tx_count_24h=self.tx_count_24h, is_foreign=self.is_foreign,
            is_new_device=self.is_new_device, label=None)


class ScoreResponse(BaseModel):
    tx_id: str
    fraud_probability: float
    threshold: float
    verdict: str


class DecideResponse(ScoreResponse):
    latency_us: int


class PhishingRequest(BaseModel):
    url: str


class PhishingResponse(BaseModel):
    url: str
    risk_score: float
    verdict: str
    matched_features: list[str]


class HealthResponse(BaseModel):
    status: str
    model_version: str
    block_threshold: float
    review_lower: float
    mode: str


class ServiceState:
    """Mutable runtime state; bundle replacement is a single atomic
    assignment, so in-flight requests finish on the bundle they started with."""

    def __init__(self, config: ApiConfig):
        self.config = config
        self.bundle: Optional[DeploymentBundle] = None
        self.audit: Optional[AuditLog] = None
        self.phish_config: PhishConfig = (
            load_config(config.phishing_config_path)
            if config.phishing_config_path else default_config())

    def load(self) -> None:
        if self.config.bundle_path and Path(self.config.bundle_path).exists():
            self.swap_bundle(load_bundle_file(self.config.bundle_path))
        if self.audit is None:
            self.audit = AuditLog(self.config.audit_log_path)

    def swap_bundle(self, bundle: DeploymentBundle) -> None:
        self.bundle = bundle

    def close(self) -> None:
        if self.audit is not None:
            self.audit.close()
            self.audit = None


def create_app(config: ApiConfig, load: bool = True) -> FastAPI:
    app = FastAPI(title="fraudwatch", version="0.1.0")
    state = ServiceState(config)
    if load:
        state.load()
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        # field-level messages with a 400 (not the framework default 422)
        errors = [
            {"field": ".".join(str(p) for p in err["loc"] if p != "body"),
             "message": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": errors})

    def require_api_key(request: Request) -> None:
        expected = state.config.api_key
        if not expected:
            return
        provided = request.headers.get(API_KEY_HEADER)
        if provided != expected:
            raise ApiError(401, "invalid or missing API key")

    class ApiError(Exception):
        def __init__(self, status_code: int, detail: str):
            self.status_code = status_code
            self.detail = detail

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status_code,
                            content={"detail": exc.detail})

    def require_bundle() -> DeploymentBundle:
        if state.bundle is None:
            raise ApiError(503, "no deployment bundle loaded")
        return state.bundle

    @app.post("/v1/score", response_model=ScoreResponse)
    def score(tx: TransactionIn, _: None = Depends(require_api_key)) -> ScoreResponse:
        bundle = require_bundle()
        d = decide(bundle, tx.to_record())
        return ScoreResponse(tx_id=tx.tx_id, fraud_probability=d.fraud_probability,
                             threshold=d.threshold, verdict=d.verdict)

    @app.post("/v1/decide", response_model=DecideResponse)
    def decide_endpoint(tx: TransactionIn,
                        _: None = Depends(require_api_key)) -> DecideResponse:
        bundle = require_bundle()
        try:
            d = decide(bundle, tx.to_record())
            state.audit.append(
                audit_record_for(d, tx.tx_id, bundle.model_version))
        except Exception:
            # fail closed: an unauditable decision is never reported as allowed
            raise ApiError(500, "decision unavailable")
        return DecideResponse(tx_id=tx.tx_id, fraud_probability=d.fraud_probability,
                              threshold=d.threshold, verdict=d.verdict,
                              latency_us=d.latency_us)

    @app.post("/v1/phishing/score", response_model=PhishingResponse)
    def phishing_score(body: PhishingRequest,
                       _: None = Depends(require_api_key)) -> PhishingResponse:
        try:
            verdict = classify_url(body.url, state.phish_config)
        except ValueError as exc:
            raise ApiError(400, str(exc))
        return PhishingResponse(url=body.url, risk_score=verdict.risk_score,
                                verdict=verdict.verdict,
                                matched_features=list(verdict.matched_features))

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        bundle = require_bundle()
        return HealthResponse(status="ok", model_version=bundle.model_version,
                              block_threshold=bundle.policy.block_threshold,
                              review_lower=bundle.policy.review_lower,
                              mode=bundle.policy.mode)

    return app
