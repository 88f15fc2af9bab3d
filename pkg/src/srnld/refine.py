"""Polishing NLD sentences: offline merge rule, endpoint client, voting.

The offline refiner is deterministic and needs no network.  The endpoint
path sends one chat-completion request per vote and keeps the medoid
candidate (highest mean token Jaccard similarity to the other candidates).
"""

from __future__ import annotations

import functools
import logging
import os
import re
import time
from dataclasses import dataclass, replace
from fractions import Fraction
from importlib import resources
from typing import Callable, Optional, Sequence

import httpx

from .errors import (
    AllCandidatesEmpty,
    EmptyDoc,
    EndpointError,
    GeneratorFailure,
    HttpStatus,
    MalformedResponse,
    Timeout,
    TransportError,
)
from .nld import NldDoc

__all__ = [
    "RefinerConfig",
    "refine_offline",
    "refine_with_votes",
    "select_medoid",
    "endpoint_generate",
    "refine_prompt",
    "refine_doc",
    "TOKEN_ENV",
]

log = logging.getLogger(__name__)

TOKEN_ENV = "SRNLD_API_TOKEN"
_ARTICLES = ("The ", "A ", "An ")


@dataclass(frozen=True)
class RefinerConfig:
    mode: str = "offline"
    votes: int = 3
    endpoint_url: Optional[str] = None
    model_name: Optional[str] = None
    temperature: float = 0.7
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0

    def __post_init__(self):
        if self.mode not in ("offline", "endpoint"):
            raise ValueError(f"unknown refiner mode {self.mode!r}")
        if self.votes < 1:
            raise ValueError("votes must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.mode == "endpoint" and not (self.endpoint_url and self.model_name):
            raise ValueError("endpoint mode needs endpoint_url and model_name")


# offline


def _split(sentence: str) -> tuple[Optional[str], str]:
    body = sentence.strip()
    if body.endswith("."):
        body = body[:-1].rstrip()
    idx = body.find(" is ")
    return (body[:idx] if idx > 0 else None), body


def _head(subject: Optional[str]) -> Optional[str]:
    return subject.split()[-1].lower() if subject else None


def _lower_article(text: str) -> str:
    if text.startswith(_ARTICLES):
        return text[0].lower() + text[1:]
    return text


def refine_offline(sentences: Sequence[str]) -> str:
    """Join sentences, merging runs that talk about the same subject head word.

    The subject is the text before the first `` is ``; its last word is the
    head.  A sentence whose head matches the previous sentence's head is
    appended with "and also".  When the whole subject repeats, the repeated
    "<subject> is" prefix is dropped.

    >>> refine_offline(["x is dog.", "x is animal."])
    'x is dog and also animal.'
    """
    if not sentences:
        raise EmptyDoc("nothing to refine")
    out: list[str] = []
    current: Optional[str] = None
    prev_subject: Optional[str] = None
    for sentence in sentences:
        subject, body = _split(sentence)
        if current is not None and subject and prev_subject and _head(subject) == _head(prev_subject):
            if subject.lower() == prev_subject.lower():
                piece = body[len(subject) + len(" is "):]
            else:
                piece = _lower_article(body)
            current = f"{current} and also {piece}"
        else:
            if current is not None:
                out.append(current + ".")
            current = body
        prev_subject = subject
    out.append(current + ".")
    return " ".join(out)


# voting


def _tokens(text: str) -> set[str]:
    return set(re.findall(r"\w+", text.lower()))


def _jaccard(a: set[str], b: set[str]) -> Fraction:
    union = a | b
    return Fraction(len(a & b), len(union)) if union else Fraction(1)


def select_medoid(candidates: Sequence[str]) -> int:
    """Index of the candidate with the highest mean Jaccard similarity to the others.

    Empty candidates are ignored; ties go to the lowest index.  Scores are
    exact fractions so ties are real ties, not rounding accidents.
    """
    live = [i for i, c in enumerate(candidates) if c.strip()]
    if not live:
        raise AllCandidatesEmpty(f"all {len(candidates)} candidates are empty")
    if len(live) == 1:
        return live[0]
    toks = {i: _tokens(candidates[i]) for i in live}
    best, best_score = live[0], Fraction(-1)
    for i in live:
        score = sum((_jaccard(toks[i], toks[j]) for j in live if j != i), Fraction(0)) / (len(live) - 1)
        if score > best_score:
            best, best_score = i, score
    return best


def refine_prompt(kind: str, sentences: Sequence[str]) -> str:
    template = resources.files("srnld").joinpath("data", f"refine_{kind.lower()}.txt").read_text(encoding="utf-8")
    return template.replace("{sentences}", "\n".join(sentences))


def refine_with_votes(
    sentences: Sequence[str],
    config: RefinerConfig,
    generator: Callable[[str], str],
    kind: str = "AMR",
) -> str:
    """Generate ``config.votes`` candidates and return the medoid.

    ``generator`` receives the rendered refinement prompt.  A failing call is
    retried up to ``config.max_retries`` times; endpoint errors are final
    because the endpoint client already retried them.
    """
    if not sentences:
        raise EmptyDoc("nothing to refine")
    prompt = refine_prompt(kind, sentences)
    candidates = []
    for vote in range(config.votes):
        for attempt in range(config.max_retries + 1):
            try:
                candidates.append(generator(prompt))
                break
            except EndpointError as exc:
                raise GeneratorFailure(f"vote {vote}: {exc}") from exc
            except Exception as exc:
                if attempt == config.max_retries:
                    raise GeneratorFailure(f"vote {vote} failed {attempt + 1} times: {exc}") from exc
                log.warning("vote %d attempt %d failed: %s", vote, attempt, exc)
    return candidates[select_medoid(candidates)].strip()


# endpoint client


@functools.lru_cache(maxsize=1)
def shared_client() -> httpx.Client:
    return httpx.Client()


def _headers() -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(TOKEN_ENV)
    if token:
        headers["Authorization"] = f"Bearer {token}"
    return headers


def _content(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        content = data["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"no choices[0].message.content in response: {resp.text[:200]}") from exc
    if not isinstance(content, str):
        raise MalformedResponse("message content is not a string")
    return content


def endpoint_generate(
    prompt: str,
    config: RefinerConfig,
    client: Optional[httpx.Client] = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """POST one chat-completion request and return the first choice's text.

    Transport errors, 429 and 5xx are retried with exponential backoff
    (``backoff_base``, doubling) up to ``max_retries`` times.
    """
    if not config.endpoint_url or not config.model_name:
        raise ValueError("endpoint_generate needs endpoint_url and model_name")
    client = client or shared_client()
    body = {
        "model": config.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
    }
    last: EndpointError = EndpointError("no attempt made")
    for attempt in range(config.max_retries + 1):
        try:
            resp = client.post(config.endpoint_url, json=body, headers=_headers(), timeout=config.timeout)
        except httpx.TimeoutException as exc:
            last = Timeout(f"request timed out after {config.timeout}s: {exc}")
        except httpx.TransportError as exc:
            last = TransportError(f"transport error: {exc}")
        else:
            if resp.status_code == 429 or resp.status_code >= 500:
                last = HttpStatus(resp.status_code, resp.text)
            elif resp.status_code >= 400:
                raise HttpStatus(resp.status_code, resp.text)
            else:
                return _content(resp)
        if attempt < config.max_retries:
            delay = config.backoff_base * 2**attempt
            log.info("retrying in %.2fs after: %s", delay, last)
            sleep(delay)
    raise last


def refine_doc(
    doc: NldDoc,
    config: RefinerConfig,
    generator: Optional[Callable[[str], str]] = None,
) -> NldDoc:
    """Return a copy of ``doc`` with ``refined`` filled in."""
    if config.mode == "offline":
        refined = refine_offline(doc.sentences)
    else:
        gen = generator or functools.partial(endpoint_generate, config=config)
        refined = refine_with_votes(doc.sentences, config, gen, doc.kind)
    return replace(doc, refined=refined)
