"""Frobenius trace data (p, a_p) and witness search: a prime whose Frobenius
characteristic polynomial x^2 - a_p x + p has no root mod l^n certifies that
the curve is not locally-almost-everywhere l^n-isogenous up to isogeny.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .modring import PrimePowerModulus, is_prime, quad_roots_int


class ApParseError(ValueError):
    """Malformed line in an a_p file; carries the line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ApDataError(ValueError):
    """A record violating the Hasse bound or with composite p."""


class BadReductionError(ValueError):
    """frob_passes refuses p = l; the caller must exclude such records."""


@dataclass(frozen=True)
class FrobRecord:
    p: int
    a_p: int

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ApDataError(f"{self.p} is not prime")
        if self.a_p * self.a_p > 4 * self.p:
            raise ApDataError(
                f"|a_p| = {abs(self.a_p)} violates the Hasse bound for p = {self.p}")


def parse_ap_file(source) -> list[FrobRecord]:
    """Parse whitespace-separated "p a_p" lines; '#' starts a comment."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    elif hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = list(source)
    records = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ApParseError(f"expected 'p a_p', got {raw.strip()!r}", line_no)
        try:
            p, a_p = int(parts[0]), int(parts[1])
        except ValueError:
            raise ApParseError(f"non-integer fields in {raw.strip()!r}",
                               line_no) from None
        records.append(FrobRecord(p, a_p))
    return records


def frob_passes(rec: FrobRecord, modulus: PrimePowerModulus) -> bool:
    """Does x^2 - a_p x + p have a root mod l^n?"""
    if rec.p == modulus.prime:
        raise BadReductionError(
            f"p = l = {rec.p}: the record must be excluded by the caller")
    return bool(quad_roots_int(-rec.a_p, rec.p, modulus.prime,
                               modulus.exponent))


def find_witness(records: Iterable[FrobRecord],
                 modulus: PrimePowerModulus) -> Optional[FrobRecord]:
    """First record (in input order) whose Frobenius polynomial has no root.

    A returned witness disproves the local-almost-everywhere condition mod
    l^n; absence of a witness proves nothing (one-sided test).
    """
    for rec in records:
        if not frob_passes(rec, modulus):
            return rec
    return None
