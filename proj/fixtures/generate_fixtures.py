#!/usr/bin/env python3
"""Regenerates the synthetic peak fixtures from planted species totals.

Counts are composed as total x isotopologue probability using the shipped
isotope table, so the deconvolution has a known answer.
"""
import itertools
import json
from collections import defaultdict
from pathlib import Path

HERE = Path(__file__).resolve().parent
ISO = json.loads((HERE.parent / "assets" / "isotopes.json").read_text())["elements"]


def pattern(element, k):
    """mass number -> (probability, mean mass) by brute-force enumeration."""
    out = defaultdict(lambda: [0.0, 0.0])
    for combo in itertools.product(ISO[element], repeat=k):
        p = 1.0
        for iso in combo:
            p *= iso["abundance"]
        a = sum(iso["A"] for iso in combo)
        m = sum(iso["mass_Da"] for iso in combo)
        out[a][0] += p
        out[a][1] += p * m
    return {a: (p, pm / p) for a, (p, pm) in sorted(out.items())}


def compose(planted, round_counts):
    """planted: list of (species label, element, k, charge, total)."""
    peaks = {}
    for label, element, k, q, total in planted:
        for a, (p, m) in pattern(element, k).items():
            key = round(2 * m / q) / 2  # peaks sit on a half-Da lattice
            entry = peaks.setdefault(key, {"mz": 0.0, "counts": 0.0, "assign": []})
            entry["counts"] += total * p
            entry["assign"].append(f"{label}:{q}:{a}")
            entry["mz"] = m / q if not entry["mz"] else entry["mz"]
    rows = []
    for key in sorted(peaks):
        e = peaks[key]
        c = round(e["counts"]) if round_counts else e["counts"]
        rows.append((e["mz"], c, ";".join(e["assign"])))
    return rows


def write(name, rows, header_note):
    path = HERE / "deconv" / name
    with path.open("w") as f:
        f.write(f"# {header_note}\n")
        f.write("mz_Da,counts,assignments\n")
        for mz, c, assign in rows:
            cs = f"{c:d}" if isinstance(c, int) else f"{c:.12g}"
            f.write(f"{mz:.4f},{cs},{assign}\n")


def main():
    write("si_overlap_free.csv",
          compose([("Si", "Si", 1, 1, 20000.0), ("Si", "Si", 1, 2, 3000.0)], True),
          "synthetic: Si+ 20000 and Si^2+ 3000 planted, no shared peaks")
    write("si_si2_blend.csv",
          compose([("Si", "Si", 1, 1, 10000.0), ("Si2", "Si", 2, 2, 5000.0)], False),
          "synthetic: Si+ 10000 and Si2^2+ 5000 planted, noiseless")
    # Si2 CSR 0.048 when ranged naively, 0.543 after deconvolution.
    b = 21720.0            # Si2^2+
    a = 18280.0            # Si2+
    p2 = pattern("Si", 2)
    p4 = pattern("Si", 4)
    naive_2plus = b * (p2[57][0] + p2[59][0])
    even4 = sum(p for m, (p, _) in p4.items() if m % 2 == 0)
    c = (naive_2plus / 0.048 - naive_2plus - a) / even4   # Si4^2+
    write("si2_deconvolution.csv",
          compose([("Si2", "Si", 2, 1, a), ("Si", "Si", 1, 1, 400000.0),
                   ("Si2", "Si", 2, 2, b), ("Si4", "Si", 4, 2, c)], True),
          f"synthetic: Si+ 400000, Si2+ {a:.0f}, Si2^2+ {b:.0f}, Si4^2+ {c:.0f} planted")
    write("colinear.csv",
          [(74.9216, 5000, "As:1:75;As2:2:150"), (37.4608, 100, "As:2:75")],
          "synthetic: As+ and As2^2+ share one line and cannot be separated")


if __name__ == "__main__":
    main()
