"""Unions of disjoint integer intervals and their dilation.

A :class:`Pattern` is the alternating length list ``[|A1|, |B1|, |A2|, ...]``
anchored at site 0; an :class:`IntervalSet` is the resulting set of A-blocks.
Only separations between sites enter the correlation matrix, so the absolute
position of a pattern never matters.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import PatternError, PatternTooSmall


@dataclass(frozen=True)
class Pattern:
    lengths: tuple[int, ...]

    def __post_init__(self):
        lengths = tuple(int(v) for v in self.lengths)
        if len(lengths) % 2 != 1:
            raise PatternError(f"pattern needs an odd number of entries, got {list(lengths)}")
        if any(v <= 0 for v in lengths):
            raise PatternError(f"pattern entries must be positive, got {list(lengths)}")
        object.__setattr__(self, "lengths", lengths)

    @classmethod
    def of(cls, *lengths: int) -> "Pattern":
        return cls(tuple(lengths))

    @property
    def n_blocks(self) -> int:
        return (len(self.lengths) + 1) // 2

    @property
    def a_lengths(self) -> tuple[int, ...]:
        return self.lengths[::2]

    @property
    def gaps(self) -> tuple[int, ...]:
        return self.lengths[1::2]

    @property
    def total_sites(self) -> int:
        return sum(self.a_lengths)

    @property
    def span(self) -> int:
        return sum(self.lengths)

    def dilate(self, lam: int) -> "Pattern":
        return dilate(self, lam)

    def interval_set(self) -> "IntervalSet":
        return IntervalSet.from_pattern(self)

    def __str__(self):
        return ",".join(str(v) for v in self.lengths)


def dilate(a: Pattern, lam: int) -> Pattern:
    """Uniform dilation: every interval and every gap scaled by ``lam``."""
    lam = int(lam)
    if lam < 1:
        raise PatternError(f"dilation factor must be >= 1, got {lam}")
    return Pattern(tuple(v * lam for v in a.lengths))


_PATTERN_RE = re.compile(r"^\s*(\d+(?:\s*,\s*\d+)*)\s*(?:x\s*(\d+))?\s*$")


def parse_pattern(text: str) -> Pattern:
    """Parse ``"1,3,2"`` or the dilated form ``"1,3,2x4"``."""
    m = _PATTERN_RE.match(text)
    if not m:
        raise PatternError(f"cannot parse pattern {text!r}")
    pattern = Pattern(tuple(int(v) for v in m.group(1).split(",")))
    return dilate(pattern, int(m.group(2))) if m.group(2) else pattern


@dataclass(frozen=True)
class PatternFamily:
    """A one-parameter family of patterns indexed by ``lam``.

    ``template`` entries are either fixed lengths or ``None``; ``None`` entries
    are replaced by ``lam`` (non-uniform dilation).  With ``uniform=True`` every
    entry is multiplied by ``lam`` instead.
    """

    template: tuple[int | None, ...]
    uniform: bool = False

    @classmethod
    def from_pattern(cls, pattern: Pattern) -> "PatternFamily":
        return cls(pattern.lengths, uniform=True)

    @classmethod
    def parse(cls, text: str) -> "PatternFamily":
        """``"1,3,2"`` is uniform; ``"28,*,24"`` scales only the ``*`` entries."""
        if "*" not in text:
            return cls.from_pattern(parse_pattern(text))
        entries = []
        for token in text.split(","):
            token = token.strip()
            if token == "*":
                entries.append(None)
            elif token.isdigit():
                entries.append(int(token))
            else:
                raise PatternError(f"cannot parse pattern family {text!r}")
        family = cls(tuple(entries))
        family.at(1)
        return family

    def at(self, lam: int) -> Pattern:
        if self.uniform:
            return dilate(Pattern(self.template), lam)
        return Pattern(tuple(lam if v is None else v for v in self.template))

    @property
    def n_blocks(self) -> int:
        return (len(self.template) + 1) // 2

    def __str__(self):
        return ",".join("*" if v is None else str(v) for v in self.template)


@dataclass(frozen=True)
class IntervalSet:
    """Sorted, pairwise disjoint, non-touching ``(offset, length)`` blocks."""

    blocks: tuple[tuple[int, int], ...]

    def __post_init__(self):
        raw = sorted((int(o), int(n)) for o, n in self.blocks)
        if not raw:
            raise PatternError("an interval set needs at least one block")
        merged: list[list[int]] = []
        for offset, length in raw:
            if offset < 0 or length <= 0:
                raise PatternError(f"invalid block ({offset}, {length})")
            if merged and offset < merged[-1][0] + merged[-1][1]:
                raise PatternError(f"block at {offset} overlaps the previous block")
            if merged and offset == merged[-1][0] + merged[-1][1]:
                merged[-1][1] += length
            else:
                merged.append([offset, length])
        object.__setattr__(self, "blocks", tuple((o, n) for o, n in merged))

    @classmethod
    def from_pattern(cls, pattern: Pattern, offset: int = 0) -> "IntervalSet":
        blocks, pos = [], offset
        for i, length in enumerate(pattern.lengths):
            if i % 2 == 0:
                blocks.append((pos, length))
            pos += length
        return cls(tuple(blocks))

    @classmethod
    def from_sites(cls, sites: Sequence[int]) -> "IntervalSet":
        return cls(tuple((int(s), 1) for s in sorted(set(int(s) for s in sites))))

    @property
    def total_sites(self) -> int:
        return sum(n for _, n in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def translate(self, shift: int) -> "IntervalSet":
        return IntervalSet(tuple((o + shift, n) for o, n in self.blocks))

    def open_ends(self) -> list[int]:
        """First and last site of every block (the boundary of the set)."""
        ends = []
        for offset, length in self.blocks:
            ends.extend(sorted({offset, offset + length - 1}))
        return ends


def site_list(a: IntervalSet | Pattern) -> np.ndarray:
    """Ascending lattice sites covered by ``a``."""
    if isinstance(a, Pattern):
        a = a.interval_set()
    return np.concatenate([np.arange(o, o + n) for o, n in a.blocks])


class Constituent(NamedTuple):
    """A signed contiguous run ``lengths[first..last]`` of a pattern."""

    sign: int
    first: int
    last: int
    length: int

    @property
    def pattern(self) -> Pattern:
        return Pattern((self.length,))


def _expand(segments):
    # segments alternate A, B, A, ... as (first, last) index ranges of the
    # original pattern; returns Counter of single runs -> coefficient
    if len(segments) == 1:
        return Counter({segments[0]: 1})
    x, b, rest = segments[0], segments[1], segments[2:]
    terms = Counter()
    xby = [(x[0], rest[0][1])] + rest[1:]
    by = [(b[0], rest[0][1])] + rest[1:]
    terms.update(_expand(xby))
    terms.update({(x[0], b[1]): -1})
    terms.subtract(_expand(by))
    terms.update({x: 1, b: 1})
    terms.update(_expand(rest))
    return terms


def constituents(a: Pattern) -> list[Constituent]:
    """Signed single-interval terms of the inclusion-exclusion identity.

    Built by applying the two-interval identity
    ``S(X u Y) = S(XBY) - S(XB) - S(BY) + S(X) + S(B) + S(Y)`` with ``X`` the
    first block and ``Y`` the remaining (possibly disjoint) blocks, recursing
    until every term is a single contiguous run.  Terms are ordered by run
    length (longest first), then by position.
    """
    if a.n_blocks < 2:
        raise PatternTooSmall(f"pattern {a} has {a.n_blocks} block(s); need >= 2")
    segments = [(i, i) for i in range(len(a.lengths))]
    terms = _expand(segments)
    prefix = np.concatenate([[0], np.cumsum(a.lengths)])
    out = [
        Constituent(coef, first, last, int(prefix[last + 1] - prefix[first]))
        for (first, last), coef in terms.items()
        if coef != 0
    ]
    out.sort(key=lambda t: (-(t.last - t.first), t.first))
    return out
