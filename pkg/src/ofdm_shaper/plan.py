"""Carrier bookkeeping: data / cancellation / null sets around notched bands.

Carriers covered by the suppression band ranges are null by default;
the remaining carriers form circular "data islands".  Every boundary
between an island and a banded run is an *edge*.  Each edge repurposes
the nearest island carriers as inband cancellation carriers (CC), claims
the nearest banded carriers as outband CC, and selects the following
data carriers for the reduced set that will carry optimized pulses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import OfdmConfig, band_from_carriers
from .errors import ValidationError


@dataclass(frozen=True)
class PlanRules:
    """How a CarrierPlan is derived from the band ranges.

    n_cc_data      -- inband CC per edge (repurposed data carriers)
    n_cc_band      -- outband CC per edge (carriers inside the band)
    n_d            -- optimized data carriers per edge, or "all"
    per_carrier_cc -- "nearest": each optimized carrier uses the CC of the
                      edges that selected it; "full": every optimized
                      carrier uses all CC
    """

    n_cc_data: int = 2
    n_cc_band: int = 1
    n_d: object = 9
    per_carrier_cc: str = "nearest"

    def __post_init__(self):
        if self.n_cc_data < 0 or self.n_cc_band < 0:
            raise ValidationError("CC counts must be non-negative")
        if not (self.n_d == "all" or (isinstance(self.n_d, int) and self.n_d >= 0)):
            raise ValidationError("n_d must be a non-negative integer or 'all'")
        if self.per_carrier_cc not in ("nearest", "full"):
            raise ValidationError("per_carrier_cc must be 'nearest' or 'full'")


@dataclass(frozen=True)
class Edge:
    """One island/band boundary (position in fractional carrier units)."""

    boundary: float
    cc: tuple
    reduced: tuple
    band_edge_freqs: tuple


@dataclass(frozen=True)
class CarrierPlan:
    """Disjoint carrier sets and per-carrier cancellation assignments."""

    n_carriers: int
    data: tuple
    cc_inband: tuple
    cc_outband: tuple
    reduced_data: tuple
    per_carrier_cc: dict
    per_carrier_edge_freqs: dict
    edges: tuple = field(default=())

    def __post_init__(self):
        data = set(self.data)
        inband = set(self.cc_inband)
        outband = set(self.cc_outband)
        if data & inband or data & outband or inband & outband:
            raise ValidationError("data and CC sets must be pairwise disjoint")
        for s in (data, inband, outband):
            for k in s:
                if not 0 <= k < self.n_carriers:
                    raise ValidationError(f"carrier {k} outside [0, {self.n_carriers})")
        if not set(self.reduced_data) <= data:
            raise ValidationError("reduced_data must be a subset of data")
        cc = inband | outband
        for k, sub in self.per_carrier_cc.items():
            if k not in set(self.reduced_data):
                raise ValidationError(f"per-carrier CC given for non-reduced carrier {k}")
            if not set(sub) <= cc:
                raise ValidationError(f"per-carrier CC of {k} not a subset of the CC set")
        object.__setattr__(self, "data", tuple(sorted(data)))
        object.__setattr__(self, "cc_inband", tuple(sorted(inband)))
        object.__setattr__(self, "cc_outband", tuple(sorted(outband)))
        object.__setattr__(self, "reduced_data", tuple(sorted(self.reduced_data)))

    @property
    def cc(self) -> tuple:
        return tuple(sorted(set(self.cc_inband) | set(self.cc_outband)))

    @property
    def null(self) -> tuple:
        used = set(self.data) | set(self.cc_inband) | set(self.cc_outband)
        return tuple(k for k in range(self.n_carriers) if k not in used)

    def to_dict(self) -> dict:
        return {
            "n_carriers": self.n_carriers,
            "data": list(self.data),
            "cc_inband": list(self.cc_inband),
            "cc_outband": list(self.cc_outband),
            "reduced_data": list(self.reduced_data),
            "per_carrier_cc": {str(k): list(v) for k, v in self.per_carrier_cc.items()},
            "per_carrier_edge_freqs": {
                str(k): list(v) for k, v in self.per_carrier_edge_freqs.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CarrierPlan":
        return cls(
            n_carriers=int(d["n_carriers"]),
            data=tuple(d["data"]),
            cc_inband=tuple(d["cc_inband"]),
            cc_outband=tuple(d["cc_outband"]),
            reduced_data=tuple(d["reduced_data"]),
            per_carrier_cc={int(k): tuple(v) for k, v in d["per_carrier_cc"].items()},
            per_carrier_edge_freqs={
                int(k): tuple(v) for k, v in d["per_carrier_edge_freqs"].items()
            },
        )


def _banded_mask(n: int, carrier_ranges) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for a, b in carrier_ranges:
        a, b = int(a), int(b)
        if not (0 <= a < n and 0 <= b < n):
            raise ValidationError(f"carrier range ({a}, {b}) outside [0, {n})")
        if a <= b:
            mask[a:b + 1] = True
        else:  # wrap-around range
            mask[a:] = True
            mask[:b + 1] = True
    return mask


def _circ_dist(a: float, b: float, n: int) -> float:
    d = (a - b) % n
    return min(d, n - d)


def _circular_runs(mask: np.ndarray):
    """Maximal circular runs of True, as (start, length) pairs."""
    n = len(mask)
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    starts = [i for i in range(n) if mask[i] and not mask[(i - 1) % n]]
    runs = []
    for s in starts:
        length = 0
        while mask[(s + length) % n]:
            length += 1
        runs.append((s, length))
    return runs


def build_carrier_plan(config: OfdmConfig, carrier_ranges, rules: PlanRules,
                       guard_fraction: float = 0.5,
                       reduced_override=None) -> CarrierPlan:
    """Derive the carrier sets from the suppression-band carrier ranges.

    ``reduced_override`` replaces the per-edge nearest-N_D rule with an
    explicit carrier set (each member is assigned to its nearest edge for
    the per-carrier CC map).
    """
    n = config.n_carriers
    banded = _banded_mask(n, carrier_ranges)
    if banded.all():
        raise ValidationError("band ranges cover every carrier; no data remains")

    island_runs = _circular_runs(~banded)
    band_runs = _circular_runs(banded)

    # Frequencies of the interval endpoints of each banded run.
    run_freqs = []
    for rs, rl in band_runs:
        re = (rs + rl - 1) % n
        bs = band_from_carriers(config, [(rs, re)], guard_fraction)
        freqs = sorted({f for lo, hi in bs.intervals for f in (lo, hi)})
        run_freqs.append(tuple(freqs))
    run_id = np.full(n, -1, dtype=int)
    for i, (rs, rl) in enumerate(band_runs):
        for j in range(rl):
            run_id[(rs + j) % n] = i

    # Edge descriptors: (boundary position, inward direction, island, band run).
    raw_edges = []
    for s, length in island_runs:
        e = (s + length - 1) % n
        if band_runs:
            raw_edges.append((s - 0.5, +1, (s, length), run_id[(s - 1) % n]))
            raw_edges.append((e + 0.5, -1, (s, length), run_id[(e + 1) % n]))

    claimed_cc = set()
    inband, outband = set(), set()
    edge_cc = []
    for boundary, step, (s, length), rid in raw_edges:
        first = s if step > 0 else (s + length - 1) % n
        cset = []
        # Inband CC: nearest island carriers, walking inward.
        pos, taken = first, 0
        for _ in range(length):
            if taken == rules.n_cc_data:
                break
            if pos not in claimed_cc:
                claimed_cc.add(pos)
                inband.add(pos)
                cset.append(pos)
                taken += 1
            pos = (pos + step) % n
        # Outband CC: nearest banded carriers, walking outward.
        pos = (first - step) % n
        run_len = band_runs[rid][1]
        for _ in range(min(rules.n_cc_band, run_len)):
            if banded[pos]:
                outband.add(pos)
                cset.append(pos)
            pos = (pos - step) % n
        edge_cc.append(tuple(sorted(cset)))

    data = sorted(k for k in range(n) if not banded[k] and k not in inband)
    data_set = set(data)

    # Reduced (optimized) data carriers per edge.
    edge_reduced = []
    reduced = set()
    claims = {}  # carrier -> list of edge ids
    if reduced_override is not None:
        reduced = set(int(k) for k in reduced_override) & data_set
        for k in sorted(reduced):
            if raw_edges:
                dists = [_circ_dist(k, b, n) for b, _, _, _ in raw_edges]
                claims.setdefault(k, []).append(int(np.argmin(dists)))
        edge_reduced = [tuple(sorted(k for k, es in claims.items() if i in es))
                        for i in range(len(raw_edges))]
    else:
        want = len(data) if rules.n_d == "all" else int(rules.n_d)
        for eid, (boundary, step, (s, length), rid) in enumerate(raw_edges):
            first = s if step > 0 else (s + length - 1) % n
            sel, pos = [], first
            for _ in range(length):
                if len(sel) == want:
                    break
                if pos in data_set:
                    sel.append(pos)
                    reduced.add(pos)
                    claims.setdefault(pos, []).append(eid)
                pos = (pos + step) % n
            edge_reduced.append(tuple(sorted(sel)))
        if rules.n_d == "all":
            # Every data carrier is optimized; unclaimed ones attach to the
            # nearest edge.
            for k in data:
                if k not in reduced:
                    reduced.add(k)
                    dists = [_circ_dist(k, b, n) for b, _, _, _ in raw_edges]
                    claims.setdefault(k, []).append(int(np.argmin(dists)))

    all_cc = tuple(sorted(inband | outband))
    per_cc, per_freqs = {}, {}
    for k in sorted(reduced):
        eids = claims.get(k, [])
        if rules.per_carrier_cc == "full":
            per_cc[k] = all_cc
            per_freqs[k] = tuple(sorted({f for fr in run_freqs for f in fr}))
        else:
            subset = set()
            freqs = set()
            for eid in eids:
                subset.update(edge_cc[eid])
                freqs.update(run_freqs[raw_edges[eid][3]])
            per_cc[k] = tuple(sorted(subset))
            per_freqs[k] = tuple(sorted(freqs))

    edges = tuple(
        Edge(boundary=raw_edges[i][0], cc=edge_cc[i],
             reduced=edge_reduced[i] if i < len(edge_reduced) else (),
             band_edge_freqs=run_freqs[raw_edges[i][3]])
        for i in range(len(raw_edges))
    )
    return CarrierPlan(
        n_carriers=n,
        data=tuple(data),
        cc_inband=tuple(sorted(inband)),
        cc_outband=tuple(sorted(outband)),
        reduced_data=tuple(sorted(reduced)),
        per_carrier_cc=per_cc,
        per_carrier_edge_freqs=per_freqs,
        edges=edges,
    )
