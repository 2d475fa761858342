"""SDG tagging by controlled-vocabulary phrase matching over title+abstract.

Matching is multi-pattern over the token sequence, on whole-token
boundaries, reporting every (possibly overlapping) occurrence. The
automaton operates on token sequences, so "exchanged" never matches the
phrase "change".
"""

from __future__ import annotations

import csv
import re
from collections import defaultdict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .model import Project

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class SdgError(Exception):
    pass


class BadSdgNumber(SdgError):
    def __init__(self, line: int, value: str):
        super().__init__(f"line {line}: SDG number out of range 1..17: {value!r}")


class DuplicateEntry(SdgError):
    def __init__(self, line: int, sdg: int, phrase: str):
        super().__init__(f"line {line}: duplicate vocabulary entry ({sdg}, {phrase!r})")


@dataclass(frozen=True)
class VocabularyEntry:
    sdg: int
    phrase: str
    case_sensitive: bool

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(_TOKEN_RE.findall(self.phrase))


@dataclass
class SdgVocabulary:
    entries: list[VocabularyEntry]

    def __len__(self) -> int:
        return len(self.entries)

    def sdgs(self) -> set[int]:
        return {e.sdg for e in self.entries}


@dataclass(frozen=True)
class SdgMatch:
    sdg: int
    phrase: str
    positions: tuple[int, ...]  # token offsets of each occurrence start

    @property
    def count(self) -> int:
        return len(self.positions)


def raw_tokens(text: str) -> list[str]:
    """Token sequence used for phrase matching: split only, case preserved."""
    return _TOKEN_RE.findall(text)


def load_vocabulary(file: str | Path) -> SdgVocabulary:
    """Load and validate the CSV vocabulary (sdg,phrase,caseSensitive)."""
    entries: list[VocabularyEntry] = []
    seen: set[tuple[int, str]] = set()
    with open(file, "r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.DictReader(fh)
        line = 2
        for row in reader:
            try:
                sdg = int(row["sdg"].strip())
            except (TypeError, ValueError):
                raise BadSdgNumber(line, str(row.get("sdg")))
            if not 1 <= sdg <= 17:
                raise BadSdgNumber(line, row["sdg"])
            case_sensitive = row["caseSensitive"].strip().lower() in ("true", "1", "yes")
            phrase = row["phrase"].strip()
            if not case_sensitive:
                phrase = phrase.lower()
            entry = VocabularyEntry(sdg=sdg, phrase=phrase, case_sensitive=case_sensitive)
            if not entry.tokens:
                raise SdgError(f"line {line}: phrase empty after normalization")
            if not 1 <= len(entry.tokens) <= 5:
                raise SdgError(f"line {line}: phrase must be 1-5 tokens: {phrase!r}")
            key = (sdg, phrase)
            if key in seen:
                raise DuplicateEntry(line, sdg, phrase)
            seen.add(key)
            entries.append(entry)
            line += 1
    return SdgVocabulary(entries=entries)


class _TokenAutomaton:
    """Aho-Corasick over token sequences (alphabet = tokens, not characters)."""

    def __init__(self, patterns: Iterable[tuple[tuple[str, ...], int]]):
        # trie: list of dict token -> state; outputs per state: pattern ids
        self.next: list[dict[str, int]] = [{}]
        self.fail: list[int] = [0]
        self.out: list[list[int]] = [[]]
        for tokens, pid in patterns:
            state = 0
            for tok in tokens:
                nxt = self.next[state].get(tok)
                if nxt is None:
                    nxt = len(self.next)
                    self.next[state][tok] = nxt
                    self.next.append({})
                    self.fail.append(0)
                    self.out.append([])
                state = nxt
            self.out[state].append(pid)
        queue: deque[int] = deque()
        for state in self.next[0].values():
            queue.append(state)
        while queue:
            state = queue.popleft()
            for tok, nxt in self.next[state].items():
                queue.append(nxt)
                f = self.fail[state]
                while f and tok not in self.next[f]:
                    f = self.fail[f]
                self.fail[nxt] = self.next[f].get(tok, 0)
                self.out[nxt] = self.out[nxt] + self.out[self.fail[nxt]]

    def scan(self, tokens: Sequence[str]):
        """Yield (end_index, pattern_id) for every occurrence."""
        state = 0
        for i, tok in enumerate(tokens):
            while state and tok not in self.next[state]:
                state = self.fail[state]
            state = self.next[state].get(tok, 0)
            for pid in self.out[state]:
                yield i, pid


class SdgTagger:
    """Immutable matcher built once per vocabulary; tagging is pure."""

    def __init__(self, vocab: SdgVocabulary):
        self.vocab = vocab
        folded: list[tuple[tuple[str, ...], int]] = []
        exact: list[tuple[tuple[str, ...], int]] = []
        self._lengths: list[int] = []
        for pid, entry in enumerate(vocab.entries):
            toks = entry.tokens
            self._lengths.append(len(toks))
            if entry.case_sensitive:
                exact.append((toks, pid))
            else:
                folded.append((tuple(t.lower() for t in toks), pid))
        self._folded = _TokenAutomaton(folded) if folded else None
        self._exact = _TokenAutomaton(exact) if exact else None

    def tag_text(self, text: str) -> list[SdgMatch]:
        tokens = raw_tokens(text)
        lower = [t.lower() for t in tokens]
        hits: dict[int, list[int]] = defaultdict(list)
        if self._folded is not None:
            for end, pid in self._folded.scan(lower):
                hits[pid].append(end - self._lengths[pid] + 1)
        if self._exact is not None:
            for end, pid in self._exact.scan(tokens):
                hits[pid].append(end - self._lengths[pid] + 1)
        matches = []
        for pid in sorted(hits):
            entry = self.vocab.entries[pid]
            positions = tuple(sorted(hits[pid]))
            matches.append(SdgMatch(sdg=entry.sdg, phrase=entry.phrase, positions=positions))
        matches.sort(key=lambda m: (m.sdg, m.phrase))
        return matches

    def tag(self, project: Project) -> list[SdgMatch]:
        return self.tag_text(project.text())


def tag(project: Project, vocab: SdgVocabulary) -> list[SdgMatch]:
    """One-shot convenience wrapper; build an SdgTagger for bulk use."""
    return SdgTagger(vocab).tag(project)


def apply_tags(project: Project, matches: Sequence[SdgMatch]) -> None:
    """Store distinct SDGs with their matched phrases on the project."""
    tags: dict[int, list[str]] = defaultdict(list)
    for m in matches:
        tags[m.sdg].append(m.phrase)
    project.enrichment.sdg_tags = {
        sdg: tuple(sorted(set(phrases))) for sdg, phrases in sorted(tags.items())
    }


def write_tag_dump(
    rows: Iterable[tuple[str, Sequence[SdgMatch]]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["projectId", "sdg", "phrase", "count"])
        for pid, matches in rows:
            for m in matches:
                writer.writerow([pid, m.sdg, m.phrase, m.count])
