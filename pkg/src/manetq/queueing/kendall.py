"""Kendall notation ``[A/B/s]:{d/e/f}``.

Grammar (whitespace allowed between tokens)::

    spec   := '[' code '/' code '/' int ']' ':' '{' limit '/' limit '/' rule '}'
    code   := 'M' | 'E' | 'G' | 'GI'
    limit  := int | 'inf' (any case) | '∞'
    rule   := 'FCFS' | 'LCFS' | 'PRI'   (aliases FIFO, LIFO, PRIORITY)

``d`` is the system capacity, ``e`` the calling population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

CODES = ("GI", "M", "E", "G")  # GI before G: longest match first
RULES = {"FCFS": "FCFS", "FIFO": "FCFS", "LCFS": "LCFS", "LIFO": "LCFS",
         "PRI": "PRI", "PRIORITY": "PRI"}
INF = math.inf

Limit = Union[int, float]


class ParseError(ValueError):
    def __init__(self, text: str, pos: int, expected: str):
        self.text = text
        self.pos = pos
        # byte offset into the UTF-8 encoding
        self.offset = len(text[:pos].encode("utf-8"))
        got = repr(text[pos]) if pos < len(text) else "end of input"
        super().__init__(f"at byte {self.offset}: expected {expected}, got {got}")


@dataclass(frozen=True)
class KendallSpec:
    arrival: str = "M"
    service: str = "M"
    servers: int = 1
    capacity: Limit = INF
    population: Limit = INF
    ranking: str = "FCFS"

    def __post_init__(self):
        if self.arrival not in CODES or self.service not in CODES:
            raise ValueError(f"unknown distribution code in {self!r}")
        if self.servers < 1:
            raise ValueError("servers must be >= 1")
        for v in (self.capacity, self.population):
            if not (v == INF or (isinstance(v, int) and v >= 1)):
                raise ValueError(f"limit must be a positive integer or inf, got {v!r}")
        if self.ranking not in ("FCFS", "LCFS", "PRI"):
            raise ValueError(f"unknown ranking {self.ranking!r}")

    def __str__(self) -> str:
        return format_kendall(self)


def _fmt_limit(v: Limit) -> str:
    return "inf" if v == INF else str(int(v))


def format_kendall(spec: KendallSpec) -> str:
    return (f"[{spec.arrival}/{spec.service}/{spec.servers}]:"
            f"{{{_fmt_limit(spec.capacity)}/{_fmt_limit(spec.population)}/{spec.ranking}}}")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, lit: str) -> None:
        self.skip()
        if not self.text.startswith(lit, self.pos):
            raise ParseError(self.text, self.pos, repr(lit))
        self.pos += len(lit)

    def code(self) -> str:
        self.skip()
        for c in CODES:
            end = self.pos + len(c)
            if self.text.startswith(c, self.pos) and (end >= len(self.text) or not self.text[end].isalnum()):
                self.pos = end
                return c
        raise ParseError(self.text, self.pos, "distribution code M, E, G or GI")

    def integer(self) -> int:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit() and self.text[self.pos].isascii():
            self.pos += 1
        if start == self.pos:
            raise ParseError(self.text, start, "positive integer")
        value = int(self.text[start:self.pos])
        if value < 1:
            raise ParseError(self.text, start, "positive integer")
        return value

    def limit(self) -> Limit:
        self.skip()
        if self.text.startswith("∞", self.pos):
            self.pos += 1
            return INF
        if self.text[self.pos:self.pos + 3].lower() == "inf":
            self.pos += 3
            return INF
        if self.pos < len(self.text) and self.text[self.pos].isdigit():
            return self.integer()
        raise ParseError(self.text, self.pos, "positive integer or 'inf'")

    def rule(self) -> str:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        word = self.text[start:self.pos]
        if word not in RULES:
            raise ParseError(self.text, start, "ranking FCFS, LCFS or PRI")
        return RULES[word]


def parse_kendall(text: str) -> KendallSpec:
    s = _Scanner(text)
    s.expect("[")
    a = s.code()
    s.expect("/")
    b = s.code()
    s.expect("/")
    servers = s.integer()
    s.expect("]")
    s.expect(":")
    s.expect("{")
    cap = s.limit()
    s.expect("/")
    pop = s.limit()
    s.expect("/")
    rule = s.rule()
    s.expect("}")
    s.skip()
    if s.pos != len(text):
        raise ParseError(text, s.pos, "end of input")
    return KendallSpec(a, b, servers, cap, pop, rule)
