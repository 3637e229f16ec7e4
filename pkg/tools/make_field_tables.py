"""Regenerate the bundled field tables in src/btq/data.

Degree 2: every real quadratic field with discriminant below the bound that
the genus-3 tabulation needs.  The field of discriminant 97 is stored with the
non-maximal polynomial x^2 - 97 (and its prime data at 2) so that elements
like 10 - sqrt(97) have their natural coordinates.
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "btq" / "data"


def squarefree(n: int) -> bool:
    k = 2
    while k * k <= n:
        if n % (k * k) == 0:
            return False
        k += 1
    return True


def quadratic_entry(d: int) -> dict:
    if d == 97:
        return {
            "label": "2.2.97.1",
            "poly": [-97, 0, 1],
            "integral_basis": [[1, 0], ["1/2", "1/2"]],
            "disc": 97,
            "automorphisms": [[1, -2]],
            "index_primes": [{"p": 2, "factors": [{"gen": [0, 1], "e": 1, "f": 1}, {"gen": [-1, 1], "e": 1, "f": 1}]}],
        }
    if d % 4 == 1:
        disc = d
        return {
            "label": f"2.2.{disc}.1",
            "poly": [-(d - 1) // 4, -1, 1],
            "integral_basis": [[1, 0], [0, 1]],
            "disc": disc,
            "automorphisms": [[1, -1]],
            "index_primes": [],
        }
    disc = 4 * d
    return {
        "label": f"2.2.{disc}.1",
        "poly": [-d, 0, 1],
        "integral_basis": [[1, 0], [0, 1]],
        "disc": disc,
        "automorphisms": [[0, -1]],
        "index_primes": [],
    }


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-disc", type=int, default=1100)
    args = ap.parse_args()
    DATA.mkdir(parents=True, exist_ok=True)
    rationals = [{"label": "1.1.1.1", "poly": [0, 1], "integral_basis": [[1]], "disc": 1, "automorphisms": [], "index_primes": []}]
    (DATA / "fields_deg1.json").write_text(json.dumps(rationals, indent=1) + "\n")
    entries = []
    for d in range(2, args.max_disc + 1):
        if not squarefree(d):
            continue
        e = quadratic_entry(d)
        if e["disc"] <= args.max_disc:
            entries.append(e)
    entries.sort(key=lambda e: e["disc"])
    (DATA / "fields_deg2.json").write_text(json.dumps(entries, indent=1) + "\n")
    print(f"wrote {len(entries)} quadratic fields")


if __name__ == "__main__":
    main()
