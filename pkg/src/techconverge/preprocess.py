"""Raw-text cleanup: citation stripping, dehyphenation, abbreviation expansion.

The abbreviation detector is the Schwartz-Hearst character-alignment
algorithm (Schwartz & Hearst, 2003): parenthesized candidates are aligned
right-to-left against the preceding words to find the shortest long form.

Cleanup order matters: citations are stripped and hyphen breaks repaired
first, and abbreviation detection runs afterwards (numeric/year parentheses
are never valid definitions, so stripping them first loses nothing).
"""

from __future__ import annotations

import re

# bracketed content that is only numbers / commas / dashes / whitespace,
# e.g. [12], [3, 5], [7-9], (12)
_NUMERIC_BRACKET = re.compile(r"\s*[\[(]\s*\d[\d\s,–—-]*[\])]")
# bracketed content containing a four-digit year, e.g. (Smith et al., 2019)
_YEAR_BRACKET = re.compile(r"\s*[\[(][^\[\]()]*\b(?:19|20)\d{2}\b[^\[\]()]*[\])]")
_MULTISPACE = re.compile(r"[ \t]{2,}")

# word broken by a dash at a (pdf-extraction) line break: lowercase letters
# required on both sides so clause-level dashes survive
_HYPHEN_BREAK = re.compile(r"(?<=[a-z])-[ \t]*\n[ \t]*(?=[a-z])")
_HYPHEN_SPACE = re.compile(r"(?<=[a-z])- (?=[a-z])")


class AbbreviationMap(dict):
    """Short form -> long form.  Validated on insertion."""

    def __init__(self, items=()):
        super().__init__()
        for short, long in dict(items).items():
            self[short] = long

    def __setitem__(self, short: str, long: str) -> None:
        if not short:
            raise ValueError("empty short form")
        if len(short) >= len(long):
            raise ValueError(f"short form {short!r} not shorter than long form {long!r}")
        super().__setitem__(short, long)


def strip_citations(text: str) -> str:
    """Remove numeric and year-bearing bracketed citations."""
    text = _NUMERIC_BRACKET.sub("", text)
    text = _YEAR_BRACKET.sub("", text)
    return _MULTISPACE.sub(" ", text)


def dehyphenate(text: str) -> str:
    """Rejoin words split as "pre- fix" across line breaks (and the single
    space residue pdf extractors leave behind)."""
    text = _HYPHEN_BREAK.sub("", text)
    return _HYPHEN_SPACE.sub("", text)


def _is_valid_short_form(candidate: str) -> bool:
    if not (2 <= len(candidate) <= 10):
        return False
    if len(candidate.split()) > 2:
        return False
    if not any(c.isalpha() for c in candidate):
        return False
    return candidate[0].isalnum()


def _find_best_long_form(short: str, preceding: str) -> str | None:
    """Right-to-left character alignment of the short form against the
    preceding words; the short form's first character must start a word."""
    s_index = len(short) - 1
    l_index = len(preceding) - 1
    while s_index >= 0:
        char = short[s_index].lower()
        if not char.isalnum():
            s_index -= 1
            continue
        while (l_index >= 0 and preceding[l_index].lower() != char) or (
            s_index == 0 and l_index > 0 and preceding[l_index - 1].isalnum()
        ):
            l_index -= 1
        if l_index < 0:
            return None
        l_index -= 1
        s_index -= 1
    start = preceding.rfind(" ", 0, l_index + 1) + 1
    return preceding[start:]


def _validate_pair(short: str, long: str) -> bool:
    if len(long) <= len(short):
        return False
    if short in long.split():
        return False
    n_words = len(long.split())
    return n_words <= min(len(short) + 5, len(short) * 2)


_PAREN_CANDIDATE = re.compile(r"\(([^()]{1,60})\)")


def detect_abbreviations(text: str) -> AbbreviationMap:
    """Extract validated (short form, long form) pairs from definitional
    parentheticals like "artificial intelligence (AI)"."""
    found = AbbreviationMap()
    for line in text.split("\n"):
        for match in _PAREN_CANDIDATE.finditer(line):
            candidate = match.group(1).strip()
            if not _is_valid_short_form(candidate):
                continue
            preceding = line[: match.start()].rstrip()
            words = preceding.split()
            max_words = min(len(candidate) + 5, len(candidate) * 2)
            context = " ".join(words[-max_words:])
            long_form = _find_best_long_form(candidate, context)
            if long_form and _validate_pair(candidate, long_form):
                found[candidate] = long_form
    return found


def expand_abbreviations(text: str, abbreviations: AbbreviationMap) -> str:
    """Replace standalone short forms by their long form and drop the
    defining "(SHORT)" parenthetical.  Replacement is token-boundary aware,
    so short forms embedded in longer words are left alone."""
    for short, long in abbreviations.items():
        text = re.sub(r" ?\(\s*" + re.escape(short) + r"\s*\)", "", text)
        text = re.sub(
            r"(?<![A-Za-z0-9])" + re.escape(short) + r"(?![A-Za-z0-9])", long, text
        )
    return text


def preprocess_text(text: str) -> tuple[str, AbbreviationMap]:
    """Full cleanup pass; returns the cleaned text and the document-local
    abbreviation map used for expansion."""
    text = dehyphenate(strip_citations(text))
    abbreviations = detect_abbreviations(text)
    return expand_abbreviations(text, abbreviations), abbreviations
