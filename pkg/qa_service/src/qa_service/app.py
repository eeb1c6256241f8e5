"""HTTP service answering yes/no compatibility questions over a context.

Wire protocol:
  POST /v1/answer  {"context": str, "question": str}
      -> 200 {"answer": "yes"|"no", "loss": number}
         (plus "forced": true when the raw generation was not a clean
         yes/no and the answer came from scoring the two candidates)
  GET  /v1/health  -> 200 {"status": "ok", "model": str}
  errors -> 4xx/5xx {"error": str}
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig
from .model import build_answerer, format_input

log = logging.getLogger(__name__)


class AnswerRequest(BaseModel):
    context: str
    question: str


def _normalize(text: str) -> str | None:
    lowered = text.strip().lower()
    if lowered.startswith("yes"):
        return "yes"
    if lowered.startswith("no"):
        return "no"
    return None


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    """Build the app; the model loads now, or the service refuses to start."""
    config = config or ServiceConfig.from_env()
    answerer = build_answerer(config.model_id)
    answerer.load()

    app = FastAPI(title="compatibility-qa", version="0.1.0")
    app.state.config = config
    app.state.answerer = answerer

    @app.exception_handler(RequestValidationError)
    async def validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc.errors()[:1])})

    @app.exception_handler(Exception)
    async def internal_error(_request: Request, exc: Exception):
        log.exception("answer failed")
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "model": answerer.model_id}

    @app.post("/v1/answer")
    async def answer(body: AnswerRequest):
        question = body.question.strip()
        context = body.context.strip()
        if not question:
            return JSONResponse(status_code=422, content={"error": "question must be non-empty"})
        if not context:
            return JSONResponse(status_code=422, content={"error": "context must be non-empty"})
        if len(question) > config.max_input_chars:
            return JSONResponse(
                status_code=422,
                content={"error": f"question longer than {config.max_input_chars} characters"},
            )
        budget = config.max_input_chars - len(question)
        if len(context) > budget:
            log.info("truncating context from %d to %d characters", len(context), budget)
            context = context[:budget]

        prompt = format_input(question, context)
        text, loss = answerer.generate(prompt)
        normalized = _normalize(text)
        if normalized is not None:
            return {"answer": normalized, "loss": loss}
        # Off-distribution generation: force-score both candidates instead.
        scored = sorted(
            (answerer.score(prompt, candidate), candidate) for candidate in ("yes", "no")
        )
        forced_loss, forced_answer = scored[0]
        log.info("generation %r was not yes/no; forced choice %r", text, forced_answer)
        return {"answer": forced_answer, "loss": forced_loss, "forced": True}

    return app


def main() -> None:
    import uvicorn

    config = ServiceConfig.from_env()
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
