"""Scenario data model: road network, targets, depots, vehicles.

A scenario describes one mission: a road network made of polyline branches
that all meet at a single junction, a set of point targets, candidate start
depots on the road, one UAV and one UGV, two stop regions (sub-segments of
branches where the UGV may park), and a mission horizon.

Input files use kilometres; everything here is metres and seconds once
loaded.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

SNAP_TOL = 1.0  # m; a point within this of a branch counts as on the road


class ScenarioError(Exception):
    pass


class ScenarioParseError(ScenarioError):
    """Malformed document (bad JSON, missing keys, wrong shapes)."""


class ScenarioValidationError(ScenarioError):
    """Well-formed document that breaks a scenario invariant."""


class Polyline:
    """Immutable 2-D polyline with arclength queries.

    Points are an (N, 2) float array in metres; consecutive duplicates are
    rejected so every segment has positive length.
    """

    __slots__ = ("pts", "cum", "length")

    def __init__(self, pts) -> None:
        arr = np.asarray(pts, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ValueError("polyline needs an (N>=2, 2) point array")
        if not np.isfinite(arr).all():
            raise ValueError("polyline has non-finite coordinates")
        seg = np.diff(arr, axis=0)
        seglen = np.hypot(seg[:, 0], seg[:, 1])
        if (seglen <= 0.0).any():
            raise ValueError("polyline has a zero-length segment")
        arr = arr.copy()
        arr.flags.writeable = False
        self.pts = arr
        cum = np.concatenate(([0.0], np.cumsum(seglen)))
        cum.flags.writeable = False
        self.cum = cum
        self.length = float(cum[-1])

    def point_at(self, s: float) -> tuple[float, float]:
        """Point at arclength s (clamped to [0, length])."""
        s = min(max(s, 0.0), self.length)
        i = int(np.searchsorted(self.cum, s, side="right")) - 1
        i = min(i, len(self.pts) - 2)
        seg = self.cum[i + 1] - self.cum[i]
        t = (s - self.cum[i]) / seg
        p = self.pts[i] * (1.0 - t) + self.pts[i + 1] * t
        return (float(p[0]), float(p[1]))

    def project(self, p) -> tuple[float, float]:
        """Nearest point on the polyline: returns (arclength, distance)."""
        p = np.asarray(p, dtype=float)
        a = self.pts[:-1]
        b = self.pts[1:]
        ab = b - a
        denom = np.einsum("ij,ij->i", ab, ab)
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
        close = a + t[:, None] * ab
        d2 = np.einsum("ij,ij->i", close - p, close - p)
        i = int(np.argmin(d2))
        s = float(self.cum[i] + t[i] * (self.cum[i + 1] - self.cum[i]))
        return s, float(math.sqrt(d2[i]))

    def slice(self, s0: float, s1: float) -> np.ndarray:
        """Sub-polyline points from arclength s0 to s1 (directed)."""
        lo, hi = (s0, s1) if s0 <= s1 else (s1, s0)
        lo = min(max(lo, 0.0), self.length)
        hi = min(max(hi, 0.0), self.length)
        inside = (self.cum > lo + 1e-9) & (self.cum < hi - 1e-9)
        mids = [self.pts[i] for i in np.flatnonzero(inside)]
        pts = [np.asarray(self.point_at(lo))] + mids + [np.asarray(self.point_at(hi))]
        out = np.array(pts)
        if s0 > s1:
            out = out[::-1]
        return out


@dataclass(frozen=True)
class VehicleSpec:
    speed: float          # m/s
    fuel_capacity: float  # J


@dataclass(frozen=True)
class Depot:
    id: int               # 1-based, in document order
    position: tuple[float, float]
    ugv_rechargeable: bool


@dataclass(frozen=True)
class RoadSegmentRef:
    """A sub-segment of one branch, by arclength bounds in metres."""
    branch: int
    from_m: float
    to_m: float


@dataclass(frozen=True)
class Scenario:
    name: str
    branches: tuple[Polyline, ...]
    targets: tuple[tuple[float, float], ...]
    depots: tuple[Depot, ...]
    uav: VehicleSpec
    ugv: VehicleSpec
    stop_region_1: RoadSegmentRef
    stop_region_2: RoadSegmentRef
    horizon: float        # s

    @cached_property
    def junction(self) -> tuple[float, float]:
        """The common point all branches pass through."""
        if len(self.branches) == 1:
            p = self.branches[0].pts[0]
            return (float(p[0]), float(p[1]))
        for br in self.branches:
            for v in br.pts:
                if all(b.project(v)[1] <= SNAP_TOL for b in self.branches):
                    return (float(v[0]), float(v[1]))
        raise ScenarioValidationError(
            "branches do not share a common junction point")

    @cached_property
    def _junction_s(self) -> tuple[float, ...]:
        j = self.junction
        return tuple(br.project(j)[0] for br in self.branches)

    def snap(self, p) -> list[tuple[int, float]]:
        """All (branch, arclength) placements of p on the network."""
        hits = []
        for i, br in enumerate(self.branches):
            s, d = br.project(p)
            if d <= SNAP_TOL:
                hits.append((i, s))
        return hits


def road_path(scenario: Scenario, a, b) -> Polyline:
    """Shortest on-road path between two points on the network.

    Both points must lie within SNAP_TOL of some branch.  Points on the
    same branch connect directly; otherwise the path runs through the
    junction.  Returns a Polyline (its .length is the path length).
    """
    snaps_a = scenario.snap(a)
    snaps_b = scenario.snap(b)
    if not snaps_a or not snaps_b:
        missing = "first" if not snaps_a else "second"
        raise ScenarioValidationError(
            f"{missing} point does not lie on the road network")
    common = [(sa, sb) for ba, sa in snaps_a for bb, sb in snaps_b if ba == bb]
    if common:
        branch = next(ba for ba, _ in snaps_a
                      if any(bb == ba for bb, _ in snaps_b))
        sa = dict(snaps_a)[branch]
        sb = dict(snaps_b)[branch]
        return Polyline(_dedupe(scenario.branches[branch].slice(sa, sb)))
    best = None
    for ba, sa in snaps_a:
        for bb, sb in snaps_b:
            ja = scenario._junction_s[ba]
            jb = scenario._junction_s[bb]
            length = abs(sa - ja) + abs(sb - jb)
            if best is None or length < best[0]:
                best = (length, ba, sa, ja, bb, sb, jb)
    _, ba, sa, ja, bb, sb, jb = best
    first = scenario.branches[ba].slice(sa, ja)
    second = scenario.branches[bb].slice(jb, sb)
    return Polyline(_dedupe(np.vstack((first, second))))


def _dedupe(pts: np.ndarray) -> np.ndarray:
    """Drop consecutive (near-)duplicate points; keep at least two."""
    keep = [0]
    for i in range(1, len(pts)):
        if np.hypot(*(pts[i] - pts[keep[-1]])) > 1e-9:
            keep.append(i)
    if len(keep) == 1:
        # degenerate zero-length path: represent as a tiny two-point stub
        return np.array([pts[0], pts[0] + 1e-9])
    return pts[keep]


def point_to_polyline_dist(p, pts: np.ndarray) -> float:
    """Distance from point p to the polyline given by points pts."""
    p = np.asarray(p, dtype=float)
    a = pts[:-1]
    b = pts[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom == 0.0, 1.0, denom)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / denom, 0.0, 1.0)
    close = a + t[:, None] * ab
    d2 = np.einsum("ij,ij->i", close - p, close - p)
    return float(math.sqrt(d2.min()))


def region_point(scenario: Scenario, region: RoadSegmentRef,
                 frac: float) -> tuple[float, float]:
    """Point at fractional position frac in a stop region."""
    frac = min(max(frac, 0.0), 1.0)
    s = region.from_m + frac * (region.to_m - region.from_m)
    return scenario.branches[region.branch].point_at(s)


def _require(cond: bool, invariant: str) -> None:
    if not cond:
        raise ScenarioValidationError(invariant)


def scenario_from_json(text: str) -> Scenario:
    """Parse and validate a scenario document (JSON, kilometres)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"malformed scenario document: {e}") from e
    try:
        name = doc["name"]
        raw_branches = doc["branches"]
        raw_targets = doc["targets"]
        raw_depots = doc["depots"]
        uav = VehicleSpec(speed=float(doc["uav"]["speed_mps"]),
                          fuel_capacity=float(doc["uav"]["fuel_capacity_kj"]) * 1e3)
        ugv = VehicleSpec(speed=float(doc["ugv"]["speed_mps"]),
                          fuel_capacity=float(doc["ugv"]["fuel_capacity_mj"]) * 1e6)
        regions_raw = (doc["stop_region_1"], doc["stop_region_2"])
        horizon = float(doc["horizon_s"])
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioParseError(f"malformed scenario document: {e}") from e

    _require(isinstance(name, str) and name != "", "scenario name is empty")
    _require(isinstance(raw_branches, list) and len(raw_branches) >= 1,
             "scenario has no branches")
    try:
        branches = tuple(Polyline(np.asarray(b, dtype=float) * 1000.0)
                         for b in raw_branches)
    except ValueError as e:
        raise ScenarioValidationError(f"bad branch geometry: {e}") from e

    try:
        targets = tuple((float(t[0]) * 1000.0, float(t[1]) * 1000.0)
                        for t in raw_targets)
    except (TypeError, ValueError, IndexError) as e:
        raise ScenarioParseError(f"malformed target list: {e}") from e
    _require(all(math.isfinite(x) and math.isfinite(y) for x, y in targets),
             "target has non-finite coordinates")

    _require(isinstance(raw_depots, list) and len(raw_depots) >= 1,
             "scenario has no depots")
    depots = []
    for i, d in enumerate(raw_depots):
        try:
            pos = (float(d["position"][0]) * 1000.0,
                   float(d["position"][1]) * 1000.0)
            depots.append(Depot(id=i + 1, position=pos,
                                ugv_rechargeable=bool(d["ugv_rechargeable"])))
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ScenarioParseError(f"malformed depot entry {i}: {e}") from e

    regions = []
    for k, r in enumerate(regions_raw, start=1):
        try:
            region = RoadSegmentRef(branch=int(r["branch"]),
                                    from_m=float(r["from_km"]) * 1000.0,
                                    to_m=float(r["to_km"]) * 1000.0)
        except (KeyError, TypeError, ValueError) as e:
            raise ScenarioParseError(f"malformed stop region {k}: {e}") from e
        _require(0 <= region.branch < len(branches),
                 f"stop region {k} references a missing branch")
        _require(0.0 <= region.from_m < region.to_m,
                 f"stop region {k} is degenerate or reversed")
        # JSON carries km; a few tenths of a millimetre of round-off is fine
        _require(region.to_m <= branches[region.branch].length + 1e-3,
                 f"stop region {k} extends past its branch")
        if region.to_m > branches[region.branch].length:
            region = RoadSegmentRef(branch=region.branch, from_m=region.from_m,
                                    to_m=branches[region.branch].length)
        regions.append(region)

    _require(uav.speed > 0 and ugv.speed > 0, "vehicle speed must be positive")
    _require(uav.fuel_capacity > 0 and ugv.fuel_capacity > 0,
             "vehicle fuel capacity must be positive")
    _require(horizon > 0, "mission horizon must be positive")

    scn = Scenario(name=name, branches=branches, targets=targets,
                   depots=tuple(depots), uav=uav, ugv=ugv,
                   stop_region_1=regions[0], stop_region_2=regions[1],
                   horizon=horizon)
    scn.junction  # raises if the branches share no common point
    for d in scn.depots:
        _require(bool(scn.snap(d.position)),
                 f"depot {d.id} does not lie on the road network")
    return scn


def load_scenario(path) -> Scenario:
    """Load a scenario from a JSON file path."""
    return scenario_from_json(Path(path).read_text())


def bundled_scenario_path(name: str) -> Path:
    """Path of a scenario shipped with the package (e.g. 'scenario1')."""
    stem = name[:-5] if name.endswith(".json") else name
    p = Path(__file__).parent / "data" / f"{stem}.json"
    if not p.exists():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return p


def load_bundled_scenario(name: str) -> Scenario:
    return load_scenario(bundled_scenario_path(name))
