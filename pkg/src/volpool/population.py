"""Synthetic host populations and churn.

Three building blocks live here: resampling distributions fitted from data
(or built from a parametric shape), a churn model pairing an arrival rate
with a lifetime distribution, and a pool specification that deterministically
expands into a list of host records under a 64-bit seed.

Generation is marginal-by-marginal: every numeric field draws independently
unless a rank-correlation hook couples a pair. Categorical fields draw from
explicit weight tables. The same spec and seed always produce the same pool,
bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from . import ingest
from .hosts import (
    NUMERIC_FIELDS,
    CpuVendor,
    HostRecord,
    OperatingSystem,
    Preferences,
    Venue,
    field_getter,
)
from .units import SECONDS_PER_DAY

# A host silent for this long is considered departed; anything younger is
# still censored and must not enter lifetime estimates.
CENSOR_DAYS = 30.0

USER_BUCKETS = (
    ("1", 1, 1),
    ("2-10", 2, 10),
    ("11-100", 11, 100),
    ("101-1000", 101, 1000),
    ("1000+", 1000, 3000),
)


@dataclass(frozen=True)
class EmpiricalDistribution:
    """A distribution represented by its sorted sample vector.

    Sampling inverts the empirical CDF: a uniform draw picks one of the
    stored samples (plain resampling), or linearly interpolates between
    neighbouring order statistics when ``interpolate`` is set. The mean of
    the resampling distribution equals the sample mean exactly.
    """

    sorted_samples: tuple[float, ...]
    field_name: str = ""
    interpolate: bool = False

    def __post_init__(self):
        if len(self.sorted_samples) == 0:
            raise ValueError("no data to fit")
        if any(
            a > b for a, b in zip(self.sorted_samples, self.sorted_samples[1:])
        ):
            raise ValueError("samples are not sorted ascending")

    @cached_property
    def _array(self) -> np.ndarray:
        return np.asarray(self.sorted_samples, dtype=float)

    def mean(self) -> float:
        return float(np.mean(self._array))

    def quantile(self, u):
        """Inverse CDF at u in [0, 1); accepts scalars or arrays."""
        arr = self._array
        n = len(arr)
        u = np.asarray(u, dtype=float)
        if np.any((u < 0.0) | (u >= 1.0)):
            raise ValueError("quantile argument outside [0, 1)")
        if self.interpolate:
            out = np.interp(u * (n - 1), np.arange(n), arr)
        else:
            idx = np.minimum((u * n).astype(np.int64), n - 1)
            out = arr[idx]
        return out if out.ndim else float(out)

    def sample(self, rng: np.random.Generator, n: int | None = None):
        if n is None:
            return self.quantile(rng.random())
        return self.quantile(rng.random(n))

    @classmethod
    def from_lognormal(
        cls, mean: float, cv: float, n: int = 1024, field_name: str = ""
    ) -> "EmpiricalDistribution":
        """Deterministic lognormal-shaped sample vector with an exact mean.

        Builds n mid-quantiles of a lognormal with the given coefficient of
        variation, then rescales so the sample mean lands on ``mean``
        exactly. No randomness involved.
        """
        if mean <= 0:
            raise ValueError("mean must be positive")
        if cv <= 0:
            raise ValueError("cv must be positive")
        sigma = math.sqrt(math.log(1.0 + cv * cv))
        norm = NormalDist()
        z = [norm.inv_cdf((i + 0.5) / n) for i in range(n)]
        raw = np.exp(sigma * np.asarray(z))
        scaled = raw * (mean / float(np.mean(raw)))
        return cls(tuple(float(v) for v in scaled), field_name=field_name)


def fit_empirical(records: Sequence[HostRecord], selector) -> EmpiricalDistribution:
    """Fit a resampling distribution to one field of a host list."""
    if len(records) == 0:
        raise ValueError("no data to fit")
    getter = field_getter(selector)
    values = sorted(float(getter(r)) for r in records)
    name = selector if isinstance(selector, str) else getattr(selector, "__name__", "")
    return EmpiricalDistribution(tuple(values), field_name=name)


@dataclass(frozen=True)
class ChurnModel:
    """Arrival process plus lifetime distribution for a host pool.

    ``arrival_rate`` is either a constant in hosts/day or a piecewise-constant
    schedule ((start_day, rate), ...) with the first segment starting at day
    zero. Lifetimes are exponential with the given mean unless an empirical
    sample vector is supplied.
    """

    arrival_rate: float | tuple[tuple[float, float], ...] = 0.0
    lifetime_mean_days: float = 91.0
    lifetime_samples: EmpiricalDistribution | None = None

    def __post_init__(self):
        if isinstance(self.arrival_rate, (int, float)):
            if self.arrival_rate < 0:
                raise ValueError("arrival_rate is negative")
        else:
            segs = tuple(self.arrival_rate)
            if not segs or segs[0][0] != 0.0:
                raise ValueError("piecewise arrival schedule must start at day 0")
            starts = [s for s, _ in segs]
            if starts != sorted(starts):
                raise ValueError("arrival schedule segments out of order")
            if any(r < 0 for _, r in segs):
                raise ValueError("arrival_rate is negative")
        if self.lifetime_samples is None:
            if self.lifetime_mean_days <= 0:
                raise ValueError("lifetime_mean_days must be positive")
        elif self.lifetime_samples.sorted_samples[0] <= 0:
            raise ValueError("lifetime samples must be positive")

    def _segments(self, duration: float) -> list[tuple[float, float, float]]:
        if isinstance(self.arrival_rate, (int, float)):
            return [(0.0, duration, float(self.arrival_rate))]
        segs = list(self.arrival_rate)
        out = []
        for i, (start, rate) in enumerate(segs):
            end = segs[i + 1][0] if i + 1 < len(segs) else duration
            if start >= duration:
                break
            out.append((start, min(end, duration), float(rate)))
        return out

    def rate_at(self, day: float) -> float:
        if isinstance(self.arrival_rate, (int, float)):
            return float(self.arrival_rate)
        current = 0.0
        for start, rate in self.arrival_rate:
            if day < start:
                break
            current = rate
        return current

    def mean_arrival_rate(self, duration: float) -> float:
        """Time-averaged arrival rate over [0, duration] days."""
        if duration <= 0:
            raise ValueError("duration must be positive")
        total = sum((e - s) * r for s, e, r in self._segments(duration))
        return total / duration

    def mean_lifetime(self) -> float:
        if self.lifetime_samples is not None:
            return self.lifetime_samples.mean()
        return self.lifetime_mean_days

    def arrival_times(self, duration: float, rng: np.random.Generator) -> list[float]:
        """Poisson arrival instants in days over [0, duration)."""
        times: list[float] = []
        for start, end, rate in self._segments(duration):
            if rate <= 0:
                continue
            t = start
            scale = 1.0 / rate
            while True:
                t += rng.exponential(scale)
                if t >= end:
                    break
                times.append(t)
        return times

    def sample_lifetimes(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.lifetime_samples is not None:
            return np.asarray(self.lifetime_samples.quantile(rng.random(n)), dtype=float)
        return rng.exponential(self.lifetime_mean_days, n)


def expected_active_hosts(arrival_rate: float, mean_lifetime: float) -> float:
    """Steady-state pool size: arrivals/day times mean lifetime in days."""
    if arrival_rate < 0 or mean_lifetime < 0:
        raise ValueError("rate and lifetime must be non-negative")
    return arrival_rate * mean_lifetime


FieldGenerator = "float | EmpiricalDistribution"

_INT_FIELDS = frozenset({"n_cpus", "tz_offset", "created", "last_contact"})
_FRACTION_FIELDS = frozenset(
    {
        "on_fraction",
        "connected_fraction",
        "active_fraction",
        "cpu_efficiency",
        "resource_share",
    }
)
# tz_offset may be negative; everything else non-negative.
_SIGNED_FIELDS = frozenset({"tz_offset"})


@dataclass(frozen=True)
class PoolSpec:
    """Deterministic recipe for a synthetic pool.

    ``field_generators`` maps every numeric host field to a constant or an
    EmpiricalDistribution. Categorical weights need not be normalised; they
    only need a positive sum. ``hosts_per_user_weights`` gives the target
    share of hosts owned through each ownership bucket. The optional
    ``rank_correlations`` entries (field_a, field_b, weight) couple two
    fields through a mixture copula: with probability ``weight`` field_b
    reuses field_a's uniform draw, so the rank correlation equals the weight.
    """

    n_hosts: int
    seed: int
    field_generators: Mapping[str, object]
    vendor_weights: Mapping[CpuVendor, float] = field(
        default_factory=lambda: {CpuVendor.OTHER: 1.0}
    )
    os_weights: Mapping[OperatingSystem, float] = field(
        default_factory=lambda: {OperatingSystem.OTHER: 1.0}
    )
    country_weights: Mapping[str, float] = field(
        default_factory=lambda: {"Other": 1.0}
    )
    venue_weights: Mapping[Venue, float] = field(
        default_factory=lambda: {Venue.NONE: 1.0}
    )
    hosts_per_user_weights: Mapping[str, float] = field(
        default_factory=lambda: {"1": 1.0}
    )
    preferences: Preferences = Preferences()
    rank_correlations: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self):
        if self.n_hosts < 0:
            raise ValueError("n_hosts is negative")
        missing = [f for f in NUMERIC_FIELDS if f not in self.field_generators]
        if missing:
            raise ValueError(f"field_generators missing {missing}")
        for name, weights in (
            ("vendor_weights", self.vendor_weights),
            ("os_weights", self.os_weights),
            ("country_weights", self.country_weights),
            ("venue_weights", self.venue_weights),
            ("hosts_per_user_weights", self.hosts_per_user_weights),
        ):
            if any(w < 0 for w in weights.values()):
                raise ValueError(f"{name} has a negative weight")
        bad = set(self.hosts_per_user_weights) - {b for b, _, _ in USER_BUCKETS}
        if bad:
            raise ValueError(f"unknown ownership buckets: {sorted(bad)}")
        seen = set()
        for a, b, w in self.rank_correlations:
            if not (0.0 <= w <= 1.0):
                raise ValueError("rank correlation weight outside [0, 1]")
            if a not in NUMERIC_FIELDS or b not in NUMERIC_FIELDS:
                raise ValueError("rank correlation names unknown field")
            if a == b or a in seen or b in seen:
                raise ValueError("each field may appear in one correlated pair")
            seen.update((a, b))

    def field_mean(self, name: str) -> float:
        """Mean of a field's generator, before integer rounding or clamps."""
        gen = self.field_generators[name]
        if isinstance(gen, EmpiricalDistribution):
            return gen.mean()
        return float(gen)


def _categorical(rng, weights: Mapping, n: int, label: str):
    keys = list(weights.keys())
    w = np.asarray([float(weights[k]) for k in keys], dtype=float)
    total = w.sum()
    if total <= 0:
        raise ValueError(f"{label} weights sum to zero")
    idx = rng.choice(len(keys), size=n, p=w / total)
    return [keys[i] for i in idx]


def generate_pool(spec: PoolSpec) -> list[HostRecord]:
    """Expand a pool spec into host records, bit-identical per seed."""
    n = spec.n_hosts
    if n == 0:
        return []
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))

    reuse = {b: (a, w) for a, b, w in spec.rank_correlations}
    uniforms: dict[str, np.ndarray] = {}
    for name in NUMERIC_FIELDS:
        if name in reuse:
            src, weight = reuse[name]
            mix = rng.random(n)
            fresh = rng.random(n)
            uniforms[name] = np.where(mix < weight, uniforms[src], fresh)
        else:
            uniforms[name] = rng.random(n)

    columns: dict[str, np.ndarray] = {}
    for name in NUMERIC_FIELDS:
        gen = spec.field_generators[name]
        if isinstance(gen, EmpiricalDistribution):
            vals = np.asarray(gen.quantile(uniforms[name]), dtype=float)
        else:
            vals = np.full(n, float(gen))
        if name in _FRACTION_FIELDS:
            vals = np.clip(vals, 0.0, 1.0)
        elif name not in _SIGNED_FIELDS:
            vals = np.maximum(vals, 0.0)
        columns[name] = vals

    columns["disk_free"] = np.minimum(columns["disk_free"], columns["disk_total"])
    columns["last_contact"] = np.maximum(columns["last_contact"], columns["created"])
    n_cpus = np.maximum(np.rint(columns["n_cpus"]), 1).astype(np.int64)
    tz = np.rint(columns["tz_offset"]).astype(np.int64)
    created = np.rint(columns["created"]).astype(np.int64)
    last_contact = np.maximum(np.rint(columns["last_contact"]).astype(np.int64), created)

    vendors = _categorical(rng, spec.vendor_weights, n, "vendor")
    oses = _categorical(rng, spec.os_weights, n, "os")
    countries = _categorical(rng, spec.country_weights, n, "country")
    venues = _categorical(rng, spec.venue_weights, n, "venue")

    flops = columns["flops_per_cpu"]
    iops = columns["iops_per_cpu"]
    ram = columns["ram"]
    swap = columns["swap"]
    disk_total = columns["disk_total"]
    disk_free = columns["disk_free"]
    thr = columns["throughput_down"]
    onf = columns["on_fraction"]
    conn = columns["connected_fraction"]
    act = columns["active_fraction"]
    eff = columns["cpu_efficiency"]
    share = columns["resource_share"]
    prefs = spec.preferences

    pool = [
        HostRecord(
            host_id=f"h{i}",
            user_id=f"u{i}",
            n_cpus=int(n_cpus[i]),
            flops_per_cpu=float(flops[i]),
            iops_per_cpu=float(iops[i]),
            ram=float(ram[i]),
            swap=float(swap[i]),
            disk_total=float(disk_total[i]),
            disk_free=float(disk_free[i]),
            throughput_down=float(thr[i]),
            on_fraction=float(onf[i]),
            connected_fraction=float(conn[i]),
            active_fraction=float(act[i]),
            cpu_efficiency=float(eff[i]),
            cpu_vendor=vendors[i],
            os=oses[i],
            country=countries[i],
            venue=venues[i],
            tz_offset=int(tz[i]),
            created=int(created[i]),
            last_contact=int(last_contact[i]),
            resource_share=float(share[i]),
            preferences=prefs,
        )
        for i in range(n)
    ]
    return pool


def _apportion(weights: Sequence[float], total: int) -> list[int]:
    """Largest-remainder split of ``total`` items proportional to weights."""
    wsum = sum(weights)
    if wsum <= 0:
        raise ValueError("ownership weights sum to zero")
    quotas = [w / wsum * total for w in weights]
    counts = [int(q) for q in quotas]
    leftover = total - sum(counts)
    order = sorted(
        range(len(weights)), key=lambda i: (quotas[i] - counts[i], -i), reverse=True
    )
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def assign_users(
    pool: Sequence[HostRecord],
    weights: Mapping[str, float],
    seed: int,
    prefix: str = "u",
) -> list[HostRecord]:
    """Group hosts into users so each ownership bucket owns its weight of hosts.

    The pool is partitioned into contiguous bucket chunks by largest-remainder
    apportionment; within a chunk, user sizes draw uniformly from the bucket's
    range. The tail of a chunk is reshaped so the final users stay inside the
    bucket's bounds whenever the chunk is big enough to allow it, keeping
    recovered bucket shares faithful to the weights. Host order is preserved;
    only user ids change.
    """
    if not pool:
        return []
    by_bucket = {b: (lo, hi) for b, lo, hi in USER_BUCKETS}
    for b in weights:
        if b not in by_bucket:
            raise ValueError(f"unknown ownership bucket: {b!r}")
    labels = [b for b, _, _ in USER_BUCKETS]
    w = [float(weights.get(b, 0.0)) for b in labels]
    if any(x < 0 for x in w):
        raise ValueError("ownership weights must be non-negative")
    counts = _apportion(w, len(pool))

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    out: list[HostRecord] = []
    cursor = 0
    user_seq = 0
    for label, chunk in zip(labels, counts):
        lo, hi = by_bucket[label]
        remaining = chunk
        while remaining > 0:
            size = min(int(rng.integers(lo, hi + 1)), remaining)
            # never leave a tail smaller than the bucket minimum
            if 0 < remaining - size < lo:
                if remaining <= hi:
                    size = remaining
                else:
                    size = remaining - lo
            uid = f"{prefix}{user_seq}"
            user_seq += 1
            for host in pool[cursor : cursor + size]:
                out.append(replace(host, user_id=uid))
            cursor += size
            remaining -= size
    return out


@dataclass(frozen=True)
class LifetimeStats:
    """Lifetime summary over hosts no longer reporting."""

    mean_days: float
    n_hosts: int
    histogram: "ingest.Histogram"


def lifetime_stats(
    records: Sequence[HostRecord],
    now: float,
    bin_edges: Sequence[float] | None = None,
) -> LifetimeStats:
    """Mean and histogram of host lifetimes, censoring-aware.

    Only hosts silent for at least CENSOR_DAYS before ``now`` count; their
    lifetime is last_contact minus created. Default bins are 30-day wide.
    """
    lifetimes = []
    for r in records:
        if (now - r.last_contact) / SECONDS_PER_DAY >= CENSOR_DAYS:
            lifetimes.append((r.last_contact - r.created) / SECONDS_PER_DAY)
    if not lifetimes:
        raise ValueError("all hosts censored")
    if bin_edges is None:
        top = max(lifetimes)
        n_bins = max(1, math.ceil((top + 1e-9) / CENSOR_DAYS))
        bin_edges = [CENSOR_DAYS * i for i in range(n_bins + 1)]
    hist = ingest.histogram_of_values(lifetimes, bin_edges, "lifetime_days")
    return LifetimeStats(
        mean_days=float(np.mean(lifetimes)), n_hosts=len(lifetimes), histogram=hist
    )


def pool_spec_from_config(cfg: Mapping, default_seed: int) -> PoolSpec:
    """Build a PoolSpec from a JSON-shaped dict, filling gaps from presets."""
    from . import presets

    base = presets.reference_pool_spec(
        n_hosts=int(cfg.get("n_hosts", 10000)),
        seed=int(cfg.get("seed", default_seed)),
    )
    gens = dict(base.field_generators)
    for name, genspec in dict(cfg.get("fields", {})).items():
        if name not in NUMERIC_FIELDS:
            raise ValueError(f"unknown numeric field: {name!r}")
        gens[name] = _generator_from_config(name, genspec)

    def enum_weights(key, enum_cls, default):
        if key not in cfg:
            return default
        table = {}
        for label, w in cfg[key].items():
            table[enum_cls(label)] = float(w)
        return table

    return replace(
        base,
        field_generators=gens,
        vendor_weights=enum_weights("vendor_weights", CpuVendor, base.vendor_weights),
        os_weights=enum_weights("os_weights", OperatingSystem, base.os_weights),
        country_weights={
            str(k): float(v) for k, v in cfg["country_weights"].items()
        }
        if "country_weights" in cfg
        else base.country_weights,
        venue_weights=enum_weights("venue_weights", Venue, base.venue_weights),
        hosts_per_user_weights=dict(cfg.get("hosts_per_user_weights", base.hosts_per_user_weights)),
    )


def _generator_from_config(name: str, genspec):
    if isinstance(genspec, (int, float)):
        return float(genspec)
    if isinstance(genspec, Mapping):
        if "lognormal" in genspec:
            p = genspec["lognormal"]
            return EmpiricalDistribution.from_lognormal(
                mean=float(p["mean"]),
                cv=float(p["cv"]),
                n=int(p.get("n", 1024)),
                field_name=name,
            )
        if "samples" in genspec:
            return EmpiricalDistribution(
                tuple(sorted(float(v) for v in genspec["samples"])),
                field_name=name,
                interpolate=bool(genspec.get("interpolate", False)),
            )
    raise ValueError(f"bad generator spec for field {name!r}")
