"""Semantic triple extraction.

Two extractors share one output type:

* :func:`extract_llm` sends each paragraph to a chat-completion endpoint
  with a bundled few-shot conversation and parses the bracketed output
  format strictly (any surrounding prose is a format error, never salvaged).
* :func:`extract_fallback` is a deterministic offline pattern extractor
  (first verb between two noun runs per clause).  Low recall by design; it
  exists so the rest of the pipeline can run without a model endpoint.

The consistency audit maps extracted subjects/objects back to the source
text via Levenshtein distance to quantify hallucination.
"""

from __future__ import annotations

import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .resources import closed_class_words, fewshot_prompt, verb_lexicon

MAX_PARAGRAPH_LINES = 15


@dataclass(frozen=True)
class RawTriple:
    subject: str
    predicate: str
    object: str
    doc_id: str
    date: tuple[int, int]
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        for part in (self.subject, self.predicate, self.object):
            if not part.strip():
                raise ValueError("triple fields must be nonempty")


@dataclass
class ExtractionReport:
    paragraphs: int = 0
    well_formed: int = 0
    triples: int = 0
    total_lines: int = 0
    total_seconds: float = 0.0
    pct_inconsistent_at_2: float = 0.0
    pct_inconsistent_at_3: float = 0.0

    @property
    def avg_triples_per_paragraph(self) -> float:
        return self.triples / self.paragraphs if self.paragraphs else 0.0

    @property
    def pct_well_formed(self) -> float:
        return 100.0 * self.well_formed / self.paragraphs if self.paragraphs else 100.0

    @property
    def avg_seconds_per_line(self) -> float:
        return self.total_seconds / self.total_lines if self.total_lines else 0.0


class FormatError(Exception):
    """Generation does not match the bracketed triple-list format."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


def build_prompt(paragraph: str) -> list[dict[str, str]]:
    """Few-shot conversation ending with the paragraph as the input text."""
    if not paragraph.strip():
        raise ValueError("paragraph must be nonempty")
    asset = fewshot_prompt()
    messages: list[dict[str, str]] = []
    for example in asset["examples"]:
        messages.append({"role": "user", "content": example["user"]})
        messages.append({"role": "assistant", "content": example["assistant"]})
    final = asset["final_user_template"].replace("{paragraph}", paragraph)
    messages.append({"role": "user", "content": final})
    return messages


def parse_triples(generation: str) -> list[tuple[str, str, str]]:
    """Parse "[(s; p; o), ...]" strictly; raises FormatError otherwise."""
    text = generation
    i, n = 0, len(text)

    def skip_ws(j: int) -> int:
        while j < n and text[j].isspace():
            j += 1
        return j

    def read_field(j: int, terminators: str) -> tuple[str, int]:
        start = j
        while j < n and text[j] not in ";()[]":
            j += 1
        if j >= n or text[j] not in terminators:
            raise FormatError("expected field terminator", j if j < n else n)
        value = text[start:j].strip()
        if not value:
            raise FormatError("empty triple field", start)
        return value, j

    i = skip_ws(i)
    if i >= n or text[i] != "[":
        raise FormatError("expected '['", i)
    i = skip_ws(i + 1)
    triples: list[tuple[str, str, str]] = []
    if i < n and text[i] == "]":
        i += 1
    else:
        while True:
            if i >= n or text[i] != "(":
                raise FormatError("expected '('", i)
            subject, i = read_field(i + 1, ";")
            predicate, i = read_field(i + 1, ";")
            obj, i = read_field(i + 1, ")")
            triples.append((subject, predicate, obj))
            i = skip_ws(i + 1)
            if i < n and text[i] == ",":
                i = skip_ws(i + 1)
                continue
            if i < n and text[i] == "]":
                i += 1
                break
            raise FormatError("expected ',' or ']'", i)
    i = skip_ws(i)
    if i != n:
        raise FormatError("trailing content after ']'", i)
    return triples


def render_triples(triples: list[tuple[str, str, str]]) -> str:
    """Inverse of parse_triples."""
    return "[" + ", ".join(f"({s}; {p}; {o})" for s, p, o in triples) + "]"


def split_paragraphs(body: str, max_lines: int = MAX_PARAGRAPH_LINES) -> list[str]:
    """Blank-line delimited blocks, sub-split at max_lines lines."""
    paragraphs = []
    for block in re.split(r"\n\s*\n", body):
        lines = [ln for ln in block.split("\n") if ln.strip()]
        for start in range(0, len(lines), max_lines):
            chunk = "\n".join(lines[start : start + max_lines]).strip()
            if chunk:
                paragraphs.append(chunk)
    return paragraphs


@dataclass
class ExtractionConfig:
    base_url: str = ""
    model: str = ""
    temperature: float = 0.0
    timeout: float = 60.0
    max_in_flight: int = 4
    api_key_env: str = "CHAT_API_KEY"
    retries: int = 3
    use_fallback: bool = True


class EndpointError(Exception):
    """Transport failure after all retries."""


class ChatEndpointClient:
    """Minimal chat-completion client: message list in, completion text out."""

    def __init__(self, cfg: ExtractionConfig, session: requests.Session | None = None):
        self.cfg = cfg
        self.session = session or requests.Session()

    def complete(self, messages: list[dict[str, str]]) -> str:
        headers = {}
        api_key = os.environ.get(self.cfg.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        payload = {
            "model": self.cfg.model,
            "messages": messages,
            "temperature": self.cfg.temperature,
        }
        url = self.cfg.base_url.rstrip("/") + "/chat/completions"
        delay = 1.0
        last_error: Exception | None = None
        for attempt in range(self.cfg.retries):
            try:
                response = self.session.post(
                    url, json=payload, headers=headers, timeout=self.cfg.timeout
                )
                response.raise_for_status()
                return response.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
                if attempt < self.cfg.retries - 1:
                    time.sleep(delay)
                    delay *= 2
        raise EndpointError(f"endpoint failed after {self.cfg.retries} attempts: {last_error}")


def extract_llm(doc, client, cfg: ExtractionConfig | None = None):
    """Extract triples from every paragraph of doc.body via the endpoint.

    Ill-formed generations are counted in the report and skipped whole.
    Requests run concurrently up to max_in_flight; results merge in
    paragraph order, so output is deterministic for a deterministic endpoint.
    """
    cfg = cfg or getattr(client, "cfg", ExtractionConfig())
    paragraphs = split_paragraphs(doc.body)
    report = ExtractionReport(paragraphs=len(paragraphs))
    report.total_lines = sum(p.count("\n") + 1 for p in paragraphs)

    def run_one(paragraph: str) -> str:
        return client.complete(build_prompt(paragraph))

    started = time.monotonic()
    max_workers = max(1, getattr(cfg, "max_in_flight", 1))
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        generations = list(pool.map(run_one, paragraphs))
    report.total_seconds = time.monotonic() - started

    triples: list[RawTriple] = []
    for generation in generations:
        try:
            parsed = parse_triples(generation)
        except FormatError:
            continue
        report.well_formed += 1
        for s, p, o in parsed:
            triples.append(
                RawTriple(s, p, o, doc_id=doc.id, date=doc.date, categories=doc.categories)
            )
    report.triples = len(triples)
    if triples:
        report.pct_inconsistent_at_2 = 100.0 * audit_consistency(triples, doc.body, 2)
        report.pct_inconsistent_at_3 = 100.0 * audit_consistency(triples, doc.body, 3)
    return triples, report


# --- offline fallback extractor ---------------------------------------------

_WORD_RE = re.compile(r"[A-Za-z][A-Za-z'-]*")


def _is_verb(token: str) -> bool:
    verbs = verb_lexicon()
    if token in verbs:
        return True
    for suffix, restores in (("s", ("",)), ("es", ("",)), ("ed", ("", "e")), ("ing", ("", "e"))):
        if token.endswith(suffix) and len(token) > len(suffix) + 2:
            stem = token[: -len(suffix)]
            for tail in restores:
                if stem + tail in verbs:
                    return True
            if len(stem) >= 3 and stem[-1] == stem[-2] and stem[:-1] in verbs:
                return True
    return False


def _clause_triple(tokens: list[str]) -> tuple[str, str, str] | None:
    closed = closed_class_words()
    subject_run: list[str] = []
    current_run: list[str] = []
    i = 0
    n = len(tokens)
    while i < n:
        token = tokens[i]
        lower = token.lower()
        if _is_verb(lower):
            if current_run:
                subject_run = current_run
            if not subject_run:
                current_run = []
                i += 1
                continue
            verb_run = []
            while i < n and _is_verb(tokens[i].lower()):
                verb_run.append(tokens[i].lower())
                i += 1
            while i < n and tokens[i].lower() in closed:
                i += 1
            object_run = []
            while i < n and tokens[i].lower() not in closed and not _is_verb(tokens[i].lower()):
                object_run.append(tokens[i].lower())
                i += 1
            if object_run:
                return (" ".join(subject_run), " ".join(verb_run), " ".join(object_run))
            return None
        elif lower in closed:
            if current_run:
                subject_run = current_run
            current_run = []
        else:
            current_run.append(lower)
        i += 1
    return None


def extract_fallback(doc) -> list[RawTriple]:
    """Deterministic SVO pattern extractor over doc.body (one triple per
    clause at most)."""
    triples: list[RawTriple] = []
    for sentence in re.split(r"[.!?]+", doc.body):
        for clause in re.split(r"[,;:]", sentence):
            tokens = _WORD_RE.findall(clause)
            found = _clause_triple(tokens)
            if found:
                triples.append(
                    RawTriple(
                        *found, doc_id=doc.id, date=doc.date, categories=doc.categories
                    )
                )
    return triples


# --- consistency audit -------------------------------------------------------


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, char_a in enumerate(a, start=1):
        current = [i]
        for j, char_b in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (char_a != char_b),
                )
            )
        previous = current
    return previous[-1]


def audit_consistency(triples, source_text: str, max_dist: int) -> float:
    """Fraction of triples whose subject or object contains a word with no
    source-text token within the given edit distance."""
    if max_dist < 0:
        raise ValueError("max_dist must be >= 0")
    if not triples:
        return 0.0
    source_tokens = sorted(set(_WORD_RE.findall(source_text.lower())))

    def word_ok(word: str) -> bool:
        for token in source_tokens:
            if abs(len(token) - len(word)) <= max_dist and levenshtein(word, token) <= max_dist:
                return True
        return False

    inconsistent = 0
    for triple in triples:
        words = (triple.subject.lower().split()) + (triple.object.lower().split())
        if not all(word_ok(w) for w in words):
            inconsistent += 1
    return inconsistent / len(triples)
