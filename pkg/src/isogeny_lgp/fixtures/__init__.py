"""Fixture files and their loaders.

Group fixtures are JSON records {prime, exponent, generators} with
generators in the row-major [[a,b],[c,d]] literal format; a_p files are
text with one "p a_p" pair per line.  Relative fixture names are resolved
against the working directory, then $ISOGENY_LGP_FIXTURES, then the files
shipped with the package.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..modring import PrimePowerModulus
from ..mat2 import Mat2
from ..grp import DEFAULT_CAP, MatGroup

_PKG_DIR = Path(__file__).parent

SEARCH_ENV = "ISOGENY_LGP_FIXTURES"


def fixture_path(name: str | Path) -> Path:
    p = Path(name)
    if p.is_absolute():
        return p
    if p.exists():
        return p
    env = os.environ.get(SEARCH_ENV)
    if env and (Path(env) / p).exists():
        return Path(env) / p
    if (_PKG_DIR / p).exists():
        return _PKG_DIR / p
    raise FileNotFoundError(f"fixture {name!r} not found (cwd, ${SEARCH_ENV}, "
                            f"or package data)")


def load_group_fixture(name: str | Path, cap: int = DEFAULT_CAP) -> MatGroup:
    with open(fixture_path(name), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    modulus = PrimePowerModulus(data["prime"], data["exponent"])
    gens = [Mat2.from_rows(rows, modulus) for rows in data["generators"]]
    return MatGroup.from_generators(gens, modulus, cap)


def save_group_fixture(group: MatGroup, path: str | Path) -> None:
    data = {
        "prime": group.modulus.prime,
        "exponent": group.modulus.exponent,
        "generators": [[[g[0], g[1]], [g[2], g[3]]] for g in group.generators],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def load_exc2_catalog(max_n: int | None = None, close: bool = True) -> list[dict]:
    """Rows of the 2-adic exceptional-subgroup catalog, optionally closed."""
    with open(fixture_path("exc2_catalog.json"), "r", encoding="utf-8") as fh:
        data = json.load(fh)
    rows = []
    for row in data["rows"]:
        if max_n is not None and row["n"] > max_n:
            continue
        row = dict(row)
        if close:
            modulus = PrimePowerModulus(2, row["n"])
            gens = [Mat2.from_rows(g, modulus) for g in row["generators"]]
            row["group"] = MatGroup.from_generators(gens, modulus)
        rows.append(row)
    return rows
