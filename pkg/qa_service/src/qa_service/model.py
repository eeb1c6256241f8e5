"""Answer generation backends.

Two implementations of the same small interface: a deterministic stub for
tests and protocol work, and a transformers-backed text-to-text model loaded
lazily so the service can run without torch installed. Inputs follow the
question-first convention: ``"<question> \\n <context>"``, lowercased.
"""

from __future__ import annotations

import hashlib
import logging
import threading

log = logging.getLogger(__name__)

_NEGATIVE_CUES = (
    "not compatible",
    "incompatible",
    "doesn't work",
    "does not work",
    "doesn't support",
    "does not support",
    "no longer",
    "removed in",
    "deprecated",
    "cannot open",
    "failed to load",
)


def format_input(question: str, context: str) -> str:
    return f"{question} \\n {context}".lower()


class StubAnswerer:
    """Deterministic heuristic answerer for offline runs and protocol tests.

    The generated text is "yes"/"no" from a cue-word rule; a context
    containing "[ambiguous]" yields a non-yes/no generation so callers can
    exercise their forced-choice fallback. Losses are stable hashes.
    """

    model_id = "stub"

    def load(self) -> None:
        pass

    @staticmethod
    def _loss(payload: str) -> float:
        digest = hashlib.sha256(payload.encode("utf-8")).digest()
        return round(0.05 + (digest[0] / 256) * 0.9, 6)

    def generate(self, prompt: str) -> tuple[str, float]:
        if "[ambiguous]" in prompt:
            return "hard to say", self._loss(prompt)
        question, _, context = prompt.partition(" \\n ")
        negative_context = any(cue in context for cue in _NEGATIVE_CUES)
        negative_question = " not " in question
        answer = "yes" if negative_context == negative_question else "no"
        return answer, self._loss(prompt)

    def score(self, prompt: str, candidate: str) -> float:
        return self._loss(prompt + "\x00" + candidate)


class TransformersAnswerer:
    """Greedy text-to-text generation with sequence cross-entropy losses."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self._lock = threading.Lock()
        self._model = None
        self._tokenizer = None

    def load(self) -> None:
        import torch  # noqa: F401  (fail fast if the extra is missing)
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        log.info("loading model %s", self.model_id)
        self._tokenizer = AutoTokenizer.from_pretrained(self.model_id)
        self._model = AutoModelForSeq2SeqLM.from_pretrained(self.model_id)
        self._model.eval()

    def _sequence_loss(self, input_ids, target_ids) -> float:
        import torch

        with torch.no_grad():
            out = self._model(input_ids=input_ids, labels=target_ids)
        return float(out.loss)

    def generate(self, prompt: str) -> tuple[str, float]:
        import torch

        with self._lock:
            encoded = self._tokenizer(prompt, return_tensors="pt", truncation=True)
            with torch.no_grad():
                generated = self._model.generate(
                    **encoded, max_new_tokens=8, num_beams=1, do_sample=False
                )
            text = self._tokenizer.decode(generated[0], skip_special_tokens=True)
            labels = self._tokenizer(text, return_tensors="pt").input_ids
            loss = self._sequence_loss(encoded.input_ids, labels)
        return text, loss

    def score(self, prompt: str, candidate: str) -> float:
        with self._lock:
            encoded = self._tokenizer(prompt, return_tensors="pt", truncation=True)
            labels = self._tokenizer(candidate, return_tensors="pt").input_ids
            return self._sequence_loss(encoded.input_ids, labels)


def build_answerer(model_id: str):
    if model_id == "stub":
        return StubAnswerer()
    return TransformersAnswerer(model_id)
