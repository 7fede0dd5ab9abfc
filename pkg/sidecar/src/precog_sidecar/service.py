"""FastAPI service exposing top-k masked-token predictions.

Wire protocol:
    POST /topk  {"tokens": [str], "masked_index": int, "k": int}
                -> {"model": str, "tokens": [str]}
    GET /health -> {"model": str}

Requests carry pre-tokenized token strings, never raw text, so the caller's
tokenizer stays the single source of truth. Responses are deterministic for
a fixed model and device. Status codes: 400 malformed request, 422
unmaskable position, 503 while the model is still loading.
"""

import logging
import threading
from dataclasses import dataclass

import torch
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

DEFAULT_MODEL = "bert-base-uncased"


@dataclass
class SidecarConfig:
    model_id: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8400
    max_length: int = 512
    device: str = "cpu"


class TopkRequest(BaseModel):
    tokens: list[str] = Field(min_length=1)
    masked_index: int
    k: int = Field(default=100, ge=1)


class MaskedLM:
    """A loaded masked-LM head plus the vocabulary bookkeeping the
    endpoints need."""

    def __init__(self, model_id: str, device: str = "cpu",
                 local_path: str | None = None):
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        source = local_path or model_id
        self.model_id = model_id
        self.device = torch.device(device)
        self.tokenizer = AutoTokenizer.from_pretrained(source)
        self.model = AutoModelForMaskedLM.from_pretrained(source)
        self.model.to(self.device)
        self.model.eval()
        self.vocab: dict[str, int] = self.tokenizer.get_vocab()
        self.mask_token: str = self.tokenizer.mask_token
        self.separator: str = self.tokenizer.sep_token or "[SEP]"

    def _token_type_ids(self, tokens: list[str]) -> list[int]:
        # The protocol carries no segment ids; positions after the first
        # separator (exclusive) belong to the second segment.
        types = []
        second = False
        for token in tokens:
            types.append(int(second))
            if token == self.separator and not second:
                second = True
        return types

    @torch.no_grad()
    def topk(self, tokens: list[str], masked_index: int, k: int) -> list[str]:
        ids = [self.vocab[t] for t in tokens]
        input_ids = torch.tensor([ids], device=self.device)
        token_type_ids = torch.tensor([self._token_type_ids(tokens)],
                                      device=self.device)
        logits = self.model(input_ids=input_ids,
                            token_type_ids=token_type_ids).logits[0, masked_index]
        k = min(k, logits.shape[-1])
        best = torch.topk(logits, k).indices.tolist()
        return self.tokenizer.convert_ids_to_tokens(best)


class _ModelHolder:
    def __init__(self):
        self.model: MaskedLM | None = None
        self.error: str | None = None
        self._lock = threading.Lock()

    def set(self, model: MaskedLM):
        with self._lock:
            self.model = model

    def fail(self, message: str):
        with self._lock:
            self.error = message


def default_loader(config: SidecarConfig) -> MaskedLM:
    return MaskedLM(config.model_id, device=config.device)


def create_app(config: SidecarConfig, loader=default_loader,
               eager: bool = False) -> FastAPI:
    """Build the service. With eager=True the model loads before the app is
    returned (tests, in-process transports); otherwise loading happens in a
    background thread at startup and requests get 503 until it finishes."""
    holder = _ModelHolder()

    def load():
        try:
            holder.set(loader(config))
            logger.info("model %s ready", config.model_id)
        except Exception as exc:  # pragma: no cover - exercised via holder.error
            logger.exception("model load failed")
            holder.fail(str(exc))

    if eager:
        load()
        if holder.error:
            raise RuntimeError(f"model load failed: {holder.error}")

    async def lifespan(app):
        if holder.model is None and holder.error is None:
            threading.Thread(target=load, daemon=True).start()
        yield

    app = FastAPI(title="precog-sidecar", lifespan=lifespan)
    app.state.holder = holder

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"detail": exc.errors()})

    def ready_model() -> MaskedLM:
        if holder.error is not None:
            raise HTTPException(status_code=500,
                                detail=f"model failed to load: {holder.error}")
        if holder.model is None:
            raise HTTPException(status_code=503, detail="model loading")
        return holder.model

    @app.get("/health")
    async def health():
        model = ready_model()
        return {"model": model.model_id}

    @app.post("/topk")
    async def topk(request: TopkRequest):
        model = ready_model()
        if len(request.tokens) > config.max_length:
            raise HTTPException(
                status_code=400,
                detail=f"sequence length {len(request.tokens)} exceeds "
                       f"the {config.max_length} limit")
        unknown = [t for t in request.tokens if t not in model.vocab]
        if unknown:
            raise HTTPException(
                status_code=400,
                detail=f"tokens not in the model vocabulary: {unknown[:5]}")
        if not 0 <= request.masked_index < len(request.tokens):
            raise HTTPException(
                status_code=422,
                detail=f"masked_index {request.masked_index} out of range")
        if request.tokens[request.masked_index] != model.mask_token:
            raise HTTPException(
                status_code=422,
                detail=f"position {request.masked_index} holds "
                       f"{request.tokens[request.masked_index]!r}, "
                       f"not the mask token {model.mask_token!r}")
        predicted = model.topk(request.tokens, request.masked_index, request.k)
        return {"model": model.model_id, "tokens": predicted}

    return app
