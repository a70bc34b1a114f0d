"""Domain name parsing, public suffix stripping and token encoding."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EncodingOverflowError, InvalidDomainError

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789.-_"
CHAR_TO_INDEX = {c: i for i, c in enumerate(ALPHABET)}
START = 39
END = 40
PAD = 41
VOCAB_SIZE = 42

MIN_LENGTH = 4
MAX_LENGTH = 253

TokenSequence = list[int]


@dataclass(frozen=True)
class PublicSuffixList:
    """Immutable set of exact public suffixes with longest-match lookup."""

    entries: frozenset[str]
    _by_length: dict[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        entries = frozenset(e.strip().lower() for e in self.entries)
        if any(not e for e in entries):
            raise ValueError("public suffix entries must be non-empty")
        object.__setattr__(self, "entries", entries)
        by_length: dict[int, int] = {}
        for e in entries:
            by_length[len(e)] = by_length.get(len(e), 0) + 1
        object.__setattr__(self, "_by_length", by_length)

    @classmethod
    def from_iterable(cls, suffixes: Iterable[str]) -> PublicSuffixList:
        return cls(frozenset(suffixes))

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> PublicSuffixList:
        """Parse one suffix per line.

        Accepts '#' comments as well as the upstream list's '//' comments.
        Upstream wildcard ('*.') and exception ('!') rules are not exact
        suffixes and are skipped, as are non-ASCII entries.
        """
        suffixes = []
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if not line or line.startswith("//"):
                continue
            rule = line.split()[0].lstrip(".")
            if rule.startswith(("*", "!")) or not rule.isascii():
                continue
            suffixes.append(rule)
        return cls(frozenset(suffixes))

    @classmethod
    def load(cls, path: str | Path) -> PublicSuffixList:
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(f)

    def __contains__(self, suffix: str) -> bool:
        return suffix in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def longest_match(self, labels: Sequence[str]) -> int:
        """Index of the first label of the longest matching suffix, or len(labels)."""
        for i in range(len(labels)):
            if ".".join(labels[i:]) in self.entries:
                return i
        return len(labels)

    def count_of_length(self, length: int) -> int:
        """Number of entries whose text is exactly ``length`` characters long."""
        return self._by_length.get(length, 0)


@lru_cache(maxsize=1)
def default_psl() -> PublicSuffixList:
    """The bundled suffix list (ICANN section of the Mozilla list)."""
    text = resources.files("fanci_privacy").joinpath("data/public_suffix_list.txt").read_text("utf-8")
    return PublicSuffixList.from_lines(text.splitlines())


@dataclass(frozen=True)
class DomainName:
    raw: str
    labels: tuple[str, ...]
    public_suffix: str
    subdomain_labels: tuple[str, ...]

    @property
    def dsf(self) -> str:
        """Dot-free, suffix-free part: the sub-domain labels concatenated."""
        return "".join(self.subdomain_labels)

    def __str__(self):
        return self.raw


def validate_domain(raw: str) -> str:
    """Lowercase ``raw`` and check length, alphabet and label structure."""
    if not raw:
        raise InvalidDomainError("empty domain")
    raw = raw.lower()
    if not MIN_LENGTH <= len(raw) <= MAX_LENGTH:
        raise InvalidDomainError(f"length {len(raw)} outside [{MIN_LENGTH}, {MAX_LENGTH}]: {raw!r}")
    bad = sorted(set(raw) - CHAR_TO_INDEX.keys())
    if bad:
        raise InvalidDomainError(f"characters {''.join(bad)!r} not allowed: {raw!r}")
    if "" in raw.split("."):
        raise InvalidDomainError(f"empty label: {raw!r}")
    return raw


def parse_domain(raw: str, psl: PublicSuffixList | None = None) -> DomainName:
    """Parse ``raw`` and strip its longest public suffix.

    Domains without a matching suffix are kept whole, with an empty
    ``public_suffix``.
    """
    raw = validate_domain(raw)
    if psl is None:
        psl = default_psl()
    labels = tuple(raw.split("."))
    cut = psl.longest_match(labels)
    return DomainName(
        raw=raw,
        labels=labels,
        public_suffix=".".join(labels[cut:]),
        subdomain_labels=labels[:cut],
    )


def encode_domain(domain: DomainName | str, max_len: int) -> TokenSequence:
    raw = domain.raw if isinstance(domain, DomainName) else domain
    if len(raw) + 2 > max_len:
        raise EncodingOverflowError(f"{len(raw)} characters plus markers exceed max_len {max_len}")
    tokens = [START]
    tokens.extend(CHAR_TO_INDEX[c] for c in raw)
    tokens.append(END)
    tokens.extend([PAD] * (max_len - len(tokens)))
    return tokens


def decode_tokens(tokens: Iterable[int]) -> str:
    """Text between the first START and the next END; '' when there is no START.

    PAD tokens and stray START markers inside the body are skipped.
    """
    out = []
    started = False
    for t in tokens:
        t = int(t)
        if not started:
            started = t == START
            continue
        if t == END:
            break
        if 0 <= t < len(ALPHABET):
            out.append(ALPHABET[t])
    return "".join(out)


def read_domain_lines(path: str | Path) -> list[str]:
    """Non-blank, non-comment lines of a domain list file, stripped."""
    lines = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                lines.append(line)
    return lines
