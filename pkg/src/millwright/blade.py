"""Deterministic blade deviation analytics.

All deviations and offsets are signed inches; positive means surplus
material along the outward surface normal. Inspection points 2-16 lie on
the pressure side and pair with suction points 17-31 under the pair-key
convention "i+(i+15)".
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from millwright.errors import ConfigurationError, ToolError

PRESSURE_POINTS = range(2, 17)
SUCTION_OFFSET = 15
PAIRS_PER_LEVEL = 3
DEFAULT_TILT_DEG = 25.0
DEFAULT_EPS = 1e-9


def parse_pair_key(pair_key: str) -> tuple[int, int]:
    """Split "i+(i+15)" into (i, i+15); reject any other form."""
    parts = pair_key.split("+")
    if len(parts) != 2:
        raise ToolError(f"malformed pair key {pair_key!r}: expected 'i+j'")
    try:
        i, j = int(parts[0]), int(parts[1])
    except ValueError:
        raise ToolError(f"malformed pair key {pair_key!r}: non-integer point ids") from None
    if j != i + SUCTION_OFFSET:
        raise ToolError(f"malformed pair key {pair_key!r}: partner must be i+{SUCTION_OFFSET}")
    return i, j


def pair_key_for(point: int) -> str:
    return f"{point}+{point + SUCTION_OFFSET}"


@dataclass(frozen=True)
class PairMeasurement:
    """One matched pressure/suction measurement for a single part."""

    pair_key: str
    part_index: int
    delta_p: float
    delta_s: float

    @property
    def v(self) -> float:
        """Combined thickness-direction deviation."""
        return self.delta_p + self.delta_s

    @property
    def s(self) -> float:
        """Per-surface deviation under the paired-surface sign convention."""
        return self.v / 2.0


@dataclass(frozen=True)
class PathingField:
    """Per-pair path-tracking deviation, halved to per-surface form."""

    entries: dict[str, tuple[float, float]]  # pair_key -> (r_k, p_k)

    def p(self, pair_key: str) -> float:
        return self.entries[pair_key][1]


@dataclass
class PairSeries:
    """Per-surface deviations for one pair across parts, ordered by part index."""

    pair_key: str
    parts: list[tuple[int, float]]  # (part index n, s_{k,n})
    p_k: float = 0.0

    def __post_init__(self) -> None:
        ns = [n for n, _ in self.parts]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ToolError(f"part indices for {self.pair_key} must be strictly increasing")

    @property
    def n_count(self) -> int:
        return len(self.parts)

    def u_values(self) -> np.ndarray:
        """Non-pathing deviations u = s - p_k."""
        return np.array([s - self.p_k for _, s in self.parts], dtype=float)


@dataclass
class DriftFit:
    """Affine fit u = c + b(n-1) + eps over part index."""

    pair_key: str
    b: float
    c: float
    w_d: float
    w_v: float | None  # absent (None) when fewer than 3 parts
    residuals: np.ndarray
    part_indices: np.ndarray
    n_bar: float
    u_bar: float
    p_k: float = 0.0

    @property
    def n_count(self) -> int:
        return int(self.part_indices.size)

    def predict_u(self, n: float) -> float:
        return self.c + self.b * (n - 1.0)


@dataclass(frozen=True)
class AttributionResult:
    """Magnitude-share attribution of predicted deviation at a target part."""

    pair_key: str
    target: int
    phi_p: float
    phi_c: float
    phi_d: float
    psi_v: float | None
    s_hat: float
    s_bar: float
    epsilon_floor: float


@dataclass(frozen=True)
class CompensationVector:
    pair_key: str
    delta: float
    t_l: float
    t_r: float
    theta_deg: float


@dataclass
class PairingResult:
    measurements: list[PairMeasurement]
    unmatched: list[tuple[int, int]] = field(default_factory=list)  # (part, point)

    def series(self, pair_key: str, parts: range | None = None,
               pathing: PathingField | None = None) -> PairSeries:
        rows = sorted(
            ((m.part_index, m.s) for m in self.measurements
             if m.pair_key == pair_key and (parts is None or m.part_index in parts)),
        )
        p_k = pathing.p(pair_key) if pathing is not None else 0.0
        return PairSeries(pair_key=pair_key, parts=list(rows), p_k=p_k)

    def pair_keys(self) -> list[str]:
        seen: dict[str, None] = {}
        for m in self.measurements:
            seen.setdefault(m.pair_key, None)
        return sorted(seen, key=lambda k: parse_pair_key(k)[0])


def compute_inspection_pairs(rows: list[dict]) -> PairingResult:
    """Match pressure and suction rows of an inspection table.

    ``rows`` carry part_id, point_id, deviation_in. Duplicate (part, point)
    rows are rejected with their row numbers; points with no partner are
    reported in the unmatched list, never silently dropped.
    """
    by_key: dict[tuple[int, int], float] = {}
    duplicates: list[int] = []
    for idx, row in enumerate(rows, start=1):
        try:
            part = int(row["part_id"])
            point = int(row["point_id"])
            dev = float(row["deviation_in"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ToolError(f"inspection row {idx}: {exc}") from None
        if (part, point) in by_key:
            duplicates.append(idx)
            continue
        by_key[(part, point)] = dev
    if duplicates:
        raise ToolError(f"duplicate (part, point) rows at lines {duplicates}")

    measurements: list[PairMeasurement] = []
    unmatched: list[tuple[int, int]] = []
    for (part, point), dev in sorted(by_key.items()):
        if point in PRESSURE_POINTS:
            partner = (part, point + SUCTION_OFFSET)
            if partner in by_key:
                measurements.append(PairMeasurement(
                    pair_key=pair_key_for(point),
                    part_index=part,
                    delta_p=dev,
                    delta_s=by_key[partner],
                ))
            else:
                unmatched.append((part, point))
        elif point - SUCTION_OFFSET in PRESSURE_POINTS:
            if (part, point - SUCTION_OFFSET) not in by_key:
                unmatched.append((part, point))
        else:
            unmatched.append((part, point))
    return PairingResult(measurements=measurements, unmatched=unmatched)


def rb_compute_pathing_dev(field_rows: dict[str, float],
                           keys: list[str] | None = None) -> PathingField:
    """Halve the combined path-tracking deviation r_k to per-surface p_k."""
    wanted = list(field_rows) if keys is None else keys
    entries: dict[str, tuple[float, float]] = {}
    for key in wanted:
        parse_pair_key(key)
        if key not in field_rows:
            raise ToolError(f"pathing export has no entry for pair {key}")
        r = float(field_rows[key])
        entries[key] = (r, r / 2.0)
    return PathingField(entries=entries)


def rb_compute_wear_drift(series: PairSeries) -> DriftFit:
    """Closed-form least-squares drift fit of u over part index.

    b = sum((n - n_bar)(u - u_bar)) / sum((n - n_bar)^2), c = u_bar - b(n_bar - 1).
    For contiguous parts 1..N, n_bar reduces to (N + 1)/2. The dispersion
    w_v uses the N-2 divisor and is absent for N < 3.
    """
    n_obs = series.n_count
    if n_obs < 2:
        raise ToolError(f"pair {series.pair_key}: drift fit needs at least 2 parts, got {n_obs}")
    ns = np.array([n for n, _ in series.parts], dtype=float)
    u = series.u_values()
    n_bar = float(ns.mean())
    u_bar = float(u.mean())
    dn = ns - n_bar
    b = float(np.dot(dn, u - u_bar) / np.dot(dn, dn))
    c = u_bar - b * (n_bar - 1.0)
    residuals = u - (c + b * (ns - 1.0))
    w_d = b * (n_obs - 1)
    w_v: float | None = None
    if n_obs >= 3:
        w_v = float(np.sqrt(np.sum(residuals ** 2) / (n_obs - 2)))
    return DriftFit(
        pair_key=series.pair_key,
        b=b,
        c=c,
        w_d=w_d,
        w_v=w_v,
        residuals=residuals,
        part_indices=ns,
        n_bar=n_bar,
        u_bar=u_bar,
        p_k=series.p_k,
    )


def rb_compute_process_variability(fit: DriftFit) -> float:
    """Residual dispersion w_v; unavailable (not zero) below 3 parts."""
    if fit.w_v is None:
        raise ToolError(
            f"pair {fit.pair_key}: variability needs at least 3 parts, got {fit.n_count}")
    return fit.w_v


def rb_compute_residual_systematic(fit: DriftFit) -> float:
    """Baseline systematic term c; absorbs compliance and other unmodeled
    systematic effects and is not uniquely identifiable as deflection alone."""
    return fit.c


def rb_compute_attribution_fractions(p_k: float, fit: DriftFit, target: int,
                                     eps: float = DEFAULT_EPS) -> AttributionResult:
    """Epsilon-floored magnitude shares of pathing, baseline, and drift.

    Shares are taken over a = |p| + |c| + |b(n*-1)| + eps so they stay in
    [0, 1) with sum < 1 even when every component vanishes.
    """
    if target < 1:
        raise ToolError(f"target part index must be >= 1, got {target}")
    if eps <= 0:
        raise ToolError(f"epsilon floor must be positive, got {eps}")
    p_a = abs(p_k)
    c_a = abs(fit.c)
    w_a = abs(fit.b * (target - 1))
    a = p_a + c_a + w_a + eps
    s_hat = p_k + fit.c + fit.b * (target - 1)
    psi_v = None if fit.w_v is None else fit.w_v / (abs(s_hat) + eps)
    return AttributionResult(
        pair_key=fit.pair_key,
        target=target,
        phi_p=p_a / a,
        phi_c=c_a / a,
        phi_d=w_a / a,
        psi_v=psi_v,
        s_hat=s_hat,
        s_bar=fit.u_bar + p_k,
        epsilon_floor=eps,
    )


def rb_compute_pair_tool_comp(delta: float, theta_deg: float = DEFAULT_TILT_DEG,
                              pair_key: str = "") -> CompensationVector:
    """Map a signed tool-axis correction to length/radius offsets at fixed tilt."""
    if not 0.0 < theta_deg < 90.0:
        raise ConfigurationError(f"tilt angle must be in (0, 90) degrees, got {theta_deg}")
    theta = math.radians(theta_deg)
    return CompensationVector(
        pair_key=pair_key,
        delta=delta,
        t_l=delta * math.cos(theta),
        t_r=delta * math.sin(theta),
        theta_deg=theta_deg,
    )


def rb_compute_tool_length(delta: float, theta_deg: float = DEFAULT_TILT_DEG) -> float:
    return rb_compute_pair_tool_comp(delta, theta_deg).t_l


def rb_compute_radius_offset(delta: float, theta_deg: float = DEFAULT_TILT_DEG) -> float:
    return rb_compute_pair_tool_comp(delta, theta_deg).t_r


def rb_compute_values(values: list[float]) -> list[float]:
    if not values:
        raise ToolError("empty value slice")
    return [float(v) for v in values]


def rb_compute_average(values: list[float]) -> float:
    if not values:
        raise ToolError("empty value slice")
    return float(np.mean(values))


def rb_compute_std_dev(values: list[float]) -> float:
    """Sample standard deviation (N-1 divisor)."""
    if len(values) < 2:
        raise ToolError(f"std dev needs at least 2 values, got {len(values)}")
    return float(np.std(values, ddof=1))


def rb_compute_level(pair_key: str) -> int:
    i, _ = parse_pair_key(pair_key)
    _check_layout_range(pair_key, i)
    return (i - PRESSURE_POINTS.start) // PAIRS_PER_LEVEL + 1


def rb_compute_position_in_level(pair_key: str) -> int:
    i, _ = parse_pair_key(pair_key)
    _check_layout_range(pair_key, i)
    return (i - PRESSURE_POINTS.start) % PAIRS_PER_LEVEL + 1


def _check_layout_range(pair_key: str, i: int) -> None:
    if i not in PRESSURE_POINTS:
        raise ToolError(
            f"pair {pair_key} outside the {PRESSURE_POINTS.start}-{PRESSURE_POINTS.stop - 1} "
            "pressure-point layout")


@dataclass
class SliceResult:
    rows: list[PairMeasurement]
    cache_key: str
    warning: str | None = None


def fetch_inspection_slices(pairing: PairingResult,
                            parts: tuple[int, int] | None = None,
                            pair_keys: list[str] | None = None) -> SliceResult:
    """Select measurement rows by part window and/or pair keys.

    The slice is cached by the engine under a deterministic selector digest;
    an empty match is returned with a warning rather than raised.
    """
    rows = [
        m for m in pairing.measurements
        if (parts is None or parts[0] <= m.part_index <= parts[1])
        and (pair_keys is None or m.pair_key in pair_keys)
    ]
    selector = json.dumps({"parts": parts, "pair_keys": pair_keys}, sort_keys=True)
    cache_key = hashlib.sha1(selector.encode()).hexdigest()[:16]
    warning = None
    if not rows:
        warning = f"selector matched no rows: {selector}"
    return SliceResult(rows=rows, cache_key=cache_key, warning=warning)
