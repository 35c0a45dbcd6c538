"""Redundancy rules controlling the pretrack activation threshold.

Rule files are plain text, one rule per blank-line-separated block:

    polygon={0,2;10,2;10,-2;0,-2}
    modifyCount=2000
    condition=( RADARFront && !( LASERFront || LIDARFront ) )

The condition is a boolean expression over sensor-kind presence flags
with ``&&``, ``||``, ``!`` and parentheses.  Malformed rules fail at load
time, never during ingest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..geometry import Polygon2, point_in_polygon
from .objects import SensorKind


class RuleError(ValueError):
    pass


# ------------------------------------------------------------- conditions

_TOKEN_RE = re.compile(r"\s*(\(|\)|&&|\|\||!|[A-Za-z_][A-Za-z0-9_]*)")


class _Node:
    def evaluate(self, flags: frozenset[str]) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class _Flag(_Node):
    name: str

    def evaluate(self, flags):
        return self.name in flags


@dataclass(frozen=True)
class _Not(_Node):
    child: _Node

    def evaluate(self, flags):
        return not self.child.evaluate(flags)


@dataclass(frozen=True)
class _And(_Node):
    left: _Node
    right: _Node

    def evaluate(self, flags):
        return self.left.evaluate(flags) and self.right.evaluate(flags)


@dataclass(frozen=True)
class _Or(_Node):
    left: _Node
    right: _Node

    def evaluate(self, flags):
        return self.left.evaluate(flags) or self.right.evaluate(flags)


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise RuleError(f"bad condition syntax near {text[pos:]!r}")
            break
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Parser:
    """Recursive descent; precedence ! > && > ||."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> _Node:
        node = self.parse_or()
        if self.peek() is not None:
            raise RuleError(f"unexpected token {self.peek()!r} in condition")
        return node

    def parse_or(self) -> _Node:
        node = self.parse_and()
        while self.peek() == "||":
            self.take()
            node = _Or(node, self.parse_and())
        return node

    def parse_and(self) -> _Node:
        node = self.parse_unary()
        while self.peek() == "&&":
            self.take()
            node = _And(node, self.parse_unary())
        return node

    def parse_unary(self) -> _Node:
        tok = self.take()
        if tok == "!":
            return _Not(self.parse_unary())
        if tok == "(":
            node = self.parse_or()
            if self.take() != ")":
                raise RuleError("unbalanced parentheses in condition")
            return node
        if tok is None:
            raise RuleError("condition ended unexpectedly")
        if tok in ("&&", "||", ")"):
            raise RuleError(f"unexpected token {tok!r} in condition")
        try:
            SensorKind(tok)
        except ValueError:
            raise RuleError(f"unknown sensor kind {tok!r} in condition") from None
        return _Flag(tok)


def parse_condition(text: str) -> _Node:
    return _Parser(_tokenize(text)).parse()


# ------------------------------------------------------------- rule files

@dataclass(frozen=True)
class RedundancyRule:
    polygon: Polygon2
    modify_count: int
    condition_text: str
    condition: _Node

    def __post_init__(self) -> None:
        if self.modify_count < 1:
            raise RuleError("modifyCount must be >= 1")

    def applies(self, position, present_kinds: frozenset[str]) -> bool:
        return (point_in_polygon(position, self.polygon)
                and self.condition.evaluate(present_kinds))


def _parse_polygon(text: str) -> Polygon2:
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise RuleError(f"polygon must be of the form {{x,y;x,y;...}}: {text!r}")
    points = []
    for chunk in body[1:-1].split(";"):
        xy = chunk.split(",")
        if len(xy) != 2:
            raise RuleError(f"bad polygon vertex {chunk!r}")
        try:
            points.append((float(xy[0]), float(xy[1])))
        except ValueError:
            raise RuleError(f"bad polygon vertex {chunk!r}") from None
    try:
        return Polygon2.from_points(points)
    except ValueError as e:
        raise RuleError(str(e)) from None


def parse_rules(text: str) -> list[RedundancyRule]:
    rules = []
    for block_no, block in enumerate(re.split(r"\n\s*\n", text.strip()), start=1):
        if not block.strip():
            continue
        entries: dict[str, str] = {}
        for line in block.splitlines():
            line = line.strip().rstrip(",;")
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise RuleError(f"rule {block_no}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            entries[key.strip()] = value.strip()
        missing = {"polygon", "modifyCount", "condition"} - entries.keys()
        if missing:
            raise RuleError(f"rule {block_no}: missing keys {sorted(missing)}")
        extra = entries.keys() - {"polygon", "modifyCount", "condition"}
        if extra:
            raise RuleError(f"rule {block_no}: unknown keys {sorted(extra)}")
        try:
            count = int(entries["modifyCount"])
        except ValueError:
            raise RuleError(f"rule {block_no}: modifyCount must be an integer") from None
        rules.append(RedundancyRule(
            polygon=_parse_polygon(entries["polygon"]),
            modify_count=count,
            condition_text=entries["condition"],
            condition=parse_condition(entries["condition"]),
        ))
    return rules


def activation_threshold(rules, position, present_kinds, default: int) -> int:
    """Threshold of the first applicable rule, else the default."""
    flags = frozenset(present_kinds)
    for rule in rules:
        if rule.applies(position, flags):
            return rule.modify_count
    return default
