"""Combinatorial catalog of multi-wave-mixing peak positions.

Each interaction contributes a signed pseudo-wave vector k_A(nu_j) = (nu_j, 0) or
k_B(nu_j) = (nu_j, nu_j).  A process of a given order is a multiset of ``order``
signed interactions; it survives the E_AB - E_A - E_B subtraction only if both
fields take part.  Processes in which one field's interactions cancel pairwise
(same polariton, opposite signs) are pump-probe (PP); the rest are wave mixing
(labelled by wave count: 4WM for order 3, 6WM for order 5, 8WM for order 7).
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from collections import Counter
from dataclasses import dataclass

MAX_ORDER = 7
LOCATION_DIGITS = 9


@dataclass(frozen=True)
class MixingPeak:
    order: int
    location: tuple[float, float]  # (nu_t, nu_tau) THz
    composition: tuple[str, ...]  # one entry per distinct multiset, e.g. "+A:LP1 +A:UP2 -B:UP2"
    degeneracy: int  # ordered interaction sequences (Liouville paths) reaching the location
    resonant: bool
    kind: str  # "PP", "WM" or "PP+WM"

    @property
    def label(self) -> str:
        if self.kind == "PP":
            return "PP"
        wm = f"{self.order + 1}WM"
        return wm if self.kind == "WM" else f"PP+{wm}"


def _vector(field, nu):
    return (nu, 0.0) if field == "A" else (nu, nu)


def _is_pump_probe(multiset) -> bool:
    for field in ("A", "B"):
        net = Counter()
        for sign, f, j in multiset:
            if f == field:
                net[j] += sign
        if any(1 for sign, f, _ in multiset if f == field) and all(v == 0 for v in net.values()):
            return True
    return False


def _multinomial(multiset) -> int:
    counts = Counter(multiset).values()
    out = math.factorial(sum(counts))
    for c in counts:
        out //= math.factorial(c)
    return out


def enumerate_mixing_peaks(freqs, order=3, fields=("A", "B"), names=None, resonance_tol=1e-6):
    """All peak positions with nu_t > 0 reachable by ``order`` signed interactions.

    ``freqs`` are polariton frequencies (THz), positive and distinct.  Peaks are
    grouped by location; a location is resonant when nu_t matches one of ``freqs``
    within ``resonance_tol``.
    """
    freqs = [float(f) for f in freqs]
    if order < 3 or order % 2 == 0 or order > MAX_ORDER:
        raise ValueError(f"order must be odd, between 3 and {MAX_ORDER}")
    if any(f <= 0 for f in freqs) or len(set(freqs)) != len(freqs):
        raise ValueError("polariton frequencies must be positive and distinct")
    fields = tuple(fields)
    names = list(names) if names is not None else [f"P{k}" for k in range(len(freqs))]
    letters = [(s, f, j) for f in fields for j in range(len(freqs)) for s in (1, -1)]

    groups = {}
    for multiset in itertools.combinations_with_replacement(letters, order):
        used = {f for _, f, _ in multiset}
        if len(fields) > 1 and len(used) < len(fields):
            continue
        nu_t = sum(s * freqs[j] for s, f, j in multiset)
        nu_tau = sum(s * _vector(f, freqs[j])[1] for s, f, j in multiset)
        if nu_t <= 1e-12:
            continue
        key = (round(nu_t, LOCATION_DIGITS), round(nu_tau, LOCATION_DIGITS))
        g = groups.setdefault(key, {"paths": 0, "comps": [], "pp": False, "wm": False})
        g["paths"] += _multinomial(multiset)
        g["comps"].append(" ".join(f"{'+' if s > 0 else '-'}{f}:{names[j]}" for s, f, j in multiset))
        if _is_pump_probe(multiset):
            g["pp"] = True
        else:
            g["wm"] = True

    peaks = []
    for (nu_t, nu_tau), g in sorted(groups.items()):
        kind = "PP+WM" if g["pp"] and g["wm"] else ("PP" if g["pp"] else "WM")
        resonant = any(abs(nu_t - f) <= resonance_tol for f in freqs)
        peaks.append(MixingPeak(order, (nu_t, nu_tau), tuple(g["comps"]), g["paths"], resonant, kind))
    return peaks


def find_peak(catalog, nu_t, nu_tau, tol=1e-6):
    for p in catalog:
        if abs(p.location[0] - nu_t) <= tol and abs(p.location[1] - nu_tau) <= tol:
            return p
    return None


def catalog_to_csv(catalog, stream=None):
    """CSV with columns nu_t,nu_tau,order,type,degeneracy,resonant,composition."""
    out = stream if stream is not None else io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["nu_t", "nu_tau", "order", "type", "degeneracy", "resonant", "composition"])
    for p in catalog:
        w.writerow([f"{p.location[0]:.9g}", f"{p.location[1]:.9g}", p.order, p.label, p.degeneracy,
                    int(p.resonant), " | ".join(p.composition)])
    return out.getvalue() if stream is None else None
