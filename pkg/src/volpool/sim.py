"""Event-driven simulation of a redundant volunteer computing project.

The simulated world: hosts arrive by a Poisson process, live for sampled
lifetimes, and flip between on/off, connected/disconnected and
allowed/blocked states through independent alternating renewal processes
with exponential sojourns calibrated so the long-run fractions match each
host's recorded availability. A central server hands out replicas of
identical work units, at most one per user per unit, requiring ``min_quorum``
matching results to validate and topping up replicas after mismatches,
timeouts and host departures until ``max_replicas`` is exhausted.

A host fetches work only while communication is allowed, spacing RPCs by its
minimum connection interval and requesting enough to cover that interval. It
downloads one input file at a time at its own link speed (jointly capped by
the optional server egress limit, shared max-min fairly), computes one
replica at a time at ``whole_host_flops * cpu_efficiency`` (scaled by its
resource share when other projects compete), and overlaps the next download
with the current computation. Completed results return at the next allowed
communication; results still out at their deadline are written off and
reissued.

Everything random flows from one 64-bit seed: identical configs give
identical reports, byte for byte. Time is seconds internally, days at the
configuration and reporting surface.
"""

from __future__ import annotations

import heapq
import math
import random
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .capacity import CapacityFactors, potential_flops
from .hosts import HostRecord, whole_host_flops
from .population import ChurnModel, PoolSpec, generate_pool, pool_spec_from_config
from .units import (
    GIGA,
    RATE_QUANTUM_FLOP,
    SECONDS_PER_DAY,
    SECONDS_PER_HOUR,
    kbps_to_mb_per_s,
    mbps_to_mb_per_s,
)


class WorkUnitState(Enum):
    UNSENT = "Unsent"
    IN_PROGRESS = "InProgress"
    VALIDATED = "Validated"
    INVALID = "Invalid"


class ResultOutcome(Enum):
    CORRECT = "Correct"
    ERRONEOUS = "Erroneous"
    TIMED_OUT = "TimedOut"
    LOST = "Lost"


@dataclass(frozen=True)
class TaskSpec:
    """One work unit's resource demands. FLOP, MB and days throughout."""

    flops_per_task: float
    input_size: float
    output_size: float = 0.0
    deadline: float = 7.0
    memory_footprint: float = 32.0

    def __post_init__(self):
        if self.flops_per_task <= 0:
            raise ValueError("flops_per_task must be positive")
        if self.input_size <= 0:
            raise ValueError("input_size must be positive")
        if self.output_size < 0:
            raise ValueError("output_size is negative")
        if self.deadline <= 0:
            raise ValueError("deadline must be positive")
        if self.memory_footprint <= 0:
            raise ValueError("memory_footprint must be positive")

    @property
    def data_rate(self) -> float:
        """MB of input per 3.6e12 FLOP of computing."""
        return self.input_size / (self.flops_per_task / RATE_QUANTUM_FLOP)


@dataclass(frozen=True)
class ResultRecord:
    host_id: str
    user_id: str
    outcome: ResultOutcome
    finish_time: float  # days since simulation start


@dataclass
class WorkUnit:
    id: int
    spec: TaskSpec
    replicas_issued: int = 0
    results: list[ResultRecord] = field(default_factory=list)
    state: WorkUnitState = WorkUnitState.UNSENT
    # scheduler bookkeeping
    users: set = field(default_factory=set)
    n_correct: int = 0
    deficit: int = 0
    in_needs: bool = False


class QuorumOutcome(Enum):
    VALIDATED = "Validated"
    NEED_MORE = "NeedMore"
    INVALID = "Invalid"


@dataclass(frozen=True)
class QuorumDecision:
    outcome: QuorumOutcome
    additional_replicas: int = 0


def validate_quorum(
    results: Sequence[ResultRecord], min_quorum: int, max_replicas: int
) -> QuorumDecision:
    """Apply the validation rule to a finished set of results.

    Correct results always agree, erroneous ones never match anything, so
    validation needs ``min_quorum`` correct results from distinct users.
    If the remaining replica budget cannot reach that, the unit is a write-off.
    """
    if min_quorum < 1:
        raise ValueError("min_quorum must be at least 1")
    if max_replicas < min_quorum:
        raise ValueError("max_replicas below min_quorum")
    correct_users = {r.user_id for r in results if r.outcome is ResultOutcome.CORRECT}
    n_correct = len(correct_users)
    if n_correct >= min_quorum:
        return QuorumDecision(QuorumOutcome.VALIDATED)
    needed = min_quorum - n_correct
    budget = max_replicas - len(results)
    if needed > budget:
        return QuorumDecision(QuorumOutcome.INVALID)
    return QuorumDecision(QuorumOutcome.NEED_MORE, additional_replicas=needed)


@dataclass(frozen=True)
class SimConfig:
    """Full description of one simulation run."""

    duration_days: float
    seed: int
    churn: ChurnModel
    pool_spec: PoolSpec
    task: TaskSpec
    min_quorum: int = 2
    max_replicas: int = 4
    error_rate: float = 0.0
    server_egress_cap: float | None = None  # Mbps, shared across downloads
    competing_share: bool = False
    mean_dwell_hours: float = 12.0  # mean sojourn in the up state of each renewal
    work_buffer_days: float | None = None  # fetch horizon; default connection interval
    timeline_step_hours: float = 6.0
    collect_fetch_log: bool = False
    collect_workunits: bool = False

    def __post_init__(self):
        if self.duration_days <= 0:
            raise ValueError("duration_days must be positive")
        if self.min_quorum < 1:
            raise ValueError("min_quorum must be at least 1")
        if self.max_replicas < self.min_quorum:
            raise ValueError("max_replicas below min_quorum")
        if not (0.0 <= self.error_rate < 1.0):
            raise ValueError("error_rate outside [0, 1)")
        if self.server_egress_cap is not None and self.server_egress_cap <= 0:
            raise ValueError("server_egress_cap must be positive")
        if self.mean_dwell_hours <= 0:
            raise ValueError("mean_dwell_hours must be positive")
        if self.work_buffer_days is not None and self.work_buffer_days <= 0:
            raise ValueError("work_buffer_days must be positive")
        if self.timeline_step_hours <= 0:
            raise ValueError("timeline_step_hours must be positive")


@dataclass(frozen=True)
class TimelineSample:
    time_days: float
    active_hosts: int
    validated_workunits: int
    achieved_gflops: float  # cumulative validated work over elapsed time
    raw_gflops: float
    bytes_downloaded: float  # cumulative input payload delivered, MB


@dataclass(frozen=True)
class SimReport:
    """Aggregates of one run. Rates are GFLOPS, sustained over the run."""

    achieved_flops: float
    raw_flops: float
    bytes_downloaded: float  # total input payload delivered, MB
    mean_active_hosts: float
    replicas_per_validated_task: float
    timeline: tuple[TimelineSample, ...]
    duration_days: float
    seed: int
    n_workunits: int = 0
    n_validated: int = 0
    n_invalid: int = 0
    n_results: int = 0
    downloads_completed: int = 0
    observed_on_fraction: float = 0.0
    observed_connected_fraction: float = 0.0
    observed_active_fraction: float = 0.0
    fetch_log: tuple = ()
    workunit_log: tuple = ()

    def to_json_dict(self) -> dict:
        return {
            "achieved_gflops": self.achieved_flops,
            "raw_gflops": self.raw_flops,
            "bytes_downloaded": self.bytes_downloaded,
            "mean_active_hosts": self.mean_active_hosts,
            "replicas_per_validated_task": self.replicas_per_validated_task,
            "duration_days": self.duration_days,
            "seed": self.seed,
            "n_workunits": self.n_workunits,
            "n_validated": self.n_validated,
            "n_invalid": self.n_invalid,
            "n_results": self.n_results,
            "downloads_completed": self.downloads_completed,
            "observed_on_fraction": self.observed_on_fraction,
            "observed_connected_fraction": self.observed_connected_fraction,
            "observed_active_fraction": self.observed_active_fraction,
        }


def fair_shares(caps: Sequence[float], total: float | None) -> list[float]:
    """Max-min fair split of ``total`` among flows individually capped.

    Flows too slow to use an equal share keep their own cap; the slack is
    redistributed among the rest. With no total, every flow gets its cap.
    """
    if total is None or sum(caps) <= total:
        return list(caps)
    alloc = [0.0] * len(caps)
    order = sorted(range(len(caps)), key=lambda i: (caps[i], i))
    remaining = total
    left = len(caps)
    for i in order:
        share = remaining / left
        give = min(caps[i], share)
        alloc[i] = give
        remaining -= give
        left -= 1
    return alloc


# Replica locations.
_DL_QUEUE, _DL_ACTIVE, _READY, _COMPUTING, _COMPLETED, _GONE = range(6)

# Event codes, dispatch order is tie-broken by insertion sequence.
_EV_ARRIVE, _EV_DEPART, _EV_TOGGLE, _EV_FETCH, _EV_DL_DONE, _EV_CP_DONE, _EV_DEADLINE, _EV_SAMPLE = range(8)

_PROC_ON, _PROC_CONN, _PROC_ALLOW = range(3)


class _Replica:
    __slots__ = ("wu", "host", "flops_left", "input_left", "deadline_s", "loc",
                 "outcome", "finish_s")

    def __init__(self, wu, host, flops, input_mb, deadline_s):
        self.wu = wu
        self.host = host
        self.flops_left = flops
        self.input_left = input_mb
        self.deadline_s = deadline_s
        self.loc = _DL_QUEUE
        self.outcome = None
        self.finish_s = 0.0


class _Host:
    __slots__ = (
        "rec", "idx", "user", "alive", "arrive_s", "depart_s",
        "on", "conn", "allow",
        "flops_rate", "dl_cap", "mem_ok", "buffer_flop", "min_conn_s",
        "computing", "ready", "dl_queue", "dl_cur", "completed",
        "cp_running", "cp_mark", "cp_epoch",
        "dl_running", "dl_rate", "dl_mark", "dl_epoch",
        "on_hand_flop", "next_fetch_s", "fetch_pending",
        "occ_mark",
    )

    def __init__(self, rec: HostRecord, idx: int):
        self.rec = rec
        self.idx = idx
        self.user = rec.user_id
        self.alive = True
        self.arrive_s = 0.0
        self.depart_s = math.inf
        self.on = True
        self.conn = True
        self.allow = True
        self.flops_rate = 0.0
        self.dl_cap = kbps_to_mb_per_s(rec.throughput_down)
        self.mem_ok = True
        self.buffer_flop = 0.0
        self.min_conn_s = rec.preferences.min_connection_interval * SECONDS_PER_DAY
        self.computing = None
        self.ready = deque()
        self.dl_queue = deque()
        self.dl_cur = None
        self.completed = deque()
        self.cp_running = False
        self.cp_mark = 0.0
        self.cp_epoch = 0
        self.dl_running = False
        self.dl_rate = 0.0
        self.dl_mark = 0.0
        self.dl_epoch = 0
        self.on_hand_flop = 0.0
        self.next_fetch_s = -1.0
        self.fetch_pending = False
        self.occ_mark = 0.0

    def comm_ok(self) -> bool:
        return self.on and self.conn and self.allow

    def compute_ok(self) -> bool:
        return self.on and self.allow


class _Engine:
    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.duration_s = cfg.duration_days * SECONDS_PER_DAY
        self.task = cfg.task
        self.heap: list = []
        self.seq = 0
        self.now = 0.0

        ss = np.random.SeedSequence(cfg.seed)
        kids = ss.spawn(3)
        self.arrival_rng = np.random.default_rng(kids[0])
        self.life_rng = np.random.default_rng(kids[1])
        self.rng = random.Random(int(kids[2].generate_state(2, np.uint64)[0]))

        self.dwell_s = cfg.mean_dwell_hours * SECONDS_PER_HOUR
        self.cap_mb = (
            mbps_to_mb_per_s(cfg.server_egress_cap)
            if cfg.server_egress_cap is not None
            else None
        )

        # server
        self.needs: deque[WorkUnit] = deque()
        self.wu_seq = 0
        self.n_validated = 0
        self.n_invalid = 0
        self.n_results = 0
        self.validated_results_total = 0
        self.validated_flop = 0.0

        # accumulators
        self.raw_flop = 0.0
        self.mb_downloaded = 0.0
        self.downloads_completed = 0
        self.member_time = 0.0
        self.on_time = 0.0
        self.conn_time = 0.0
        self.allow_time = 0.0
        self.hosts: list[_Host] = []
        self.n_alive = 0
        self.dl_set: dict[int, _Host] = {}  # hosts holding a current download
        self.timeline: list[TimelineSample] = []
        self.fetch_log: list[tuple[str, float]] = []
        self.unit_log: list[WorkUnit] | None = [] if cfg.collect_workunits else None

    # -- event plumbing ----------------------------------------------------

    def _push(self, t: float, code: int, a=None, b=0):
        self.seq += 1
        heapq.heappush(self.heap, (t, self.seq, code, a, b))

    # -- occupancy ---------------------------------------------------------

    def _settle_occupancy(self, h: _Host, now: float):
        dt = now - h.occ_mark
        if dt > 0.0:
            self.member_time += dt
            if h.on:
                self.on_time += dt
            if h.conn:
                self.conn_time += dt
            if h.allow:
                self.allow_time += dt
        h.occ_mark = now

    # -- compute side ------------------------------------------------------

    def _settle_compute(self, h: _Host, now: float):
        r = h.computing
        if r is not None and h.cp_running:
            done = (now - h.cp_mark) * h.flops_rate
            if done > r.flops_left:
                done = r.flops_left
            if done > 0.0:
                r.flops_left -= done
                h.on_hand_flop -= done
                self.raw_flop += done
        h.cp_mark = now

    def _sync_compute(self, h: _Host, now: float):
        """Start the next replica if idle, pause or resume the current one.

        Settle must have run first. A running replica whose state did not
        change keeps its scheduled completion: constant rate means the
        completion instant is unchanged.
        """
        if h.computing is None and h.ready:
            nxt = h.ready.popleft()
            nxt.loc = _COMPUTING
            h.computing = nxt
        desired = (
            h.computing is not None and h.compute_ok() and h.flops_rate > 0.0
        )
        if desired == h.cp_running and not desired:
            return
        if desired == h.cp_running and h.computing is not None:
            return  # still running, same rate, same completion instant
        h.cp_epoch += 1
        h.cp_running = desired
        if desired:
            h.cp_mark = now
            eta = now + h.computing.flops_left / h.flops_rate
            self._push(eta, _EV_CP_DONE, h, h.cp_epoch)

    # -- download side -----------------------------------------------------

    def _settle_download(self, h: _Host, now: float):
        r = h.dl_cur
        if r is not None and h.dl_running:
            moved = (now - h.dl_mark) * h.dl_rate
            if moved > r.input_left:
                moved = r.input_left
            if moved > 0.0:
                r.input_left -= moved
        h.dl_mark = now

    def _sync_download_uncapped(self, h: _Host, now: float):
        if h.dl_cur is None and h.dl_queue:
            nxt = h.dl_queue.popleft()
            nxt.loc = _DL_ACTIVE
            h.dl_cur = nxt
            self.dl_set[h.idx] = h
        desired = h.dl_cur is not None and h.comm_ok() and h.dl_cap > 0.0
        if desired and h.dl_running and h.dl_rate == h.dl_cap:
            return  # unchanged; completion event stands
        h.dl_epoch += 1
        h.dl_running = desired
        if desired:
            h.dl_rate = h.dl_cap
            h.dl_mark = now
            eta = now + h.dl_cur.input_left / h.dl_rate
            self._push(eta, _EV_DL_DONE, h, h.dl_epoch)
        else:
            h.dl_rate = 0.0

    def _refit_downloads(self, now: float):
        """Recompute all shared download rates under the egress cap."""
        live = []
        for idx in sorted(self.dl_set):
            h = self.dl_set[idx]
            if h.dl_cur is None:
                continue
            self._settle_download(h, now)
            if h.comm_ok() and h.dl_cap > 0.0:
                live.append(h)
            else:
                h.dl_epoch += 1
                h.dl_running = False
                h.dl_rate = 0.0
        shares = fair_shares([h.dl_cap for h in live], self.cap_mb)
        for h, rate in zip(live, shares):
            h.dl_epoch += 1
            if rate > 0.0:
                h.dl_running = True
                h.dl_rate = rate
                h.dl_mark = now
                self._push(now + h.dl_cur.input_left / rate, _EV_DL_DONE, h, h.dl_epoch)
            else:
                h.dl_running = False
                h.dl_rate = 0.0

    def _dl_changed(self, h: _Host, now: float):
        """A host's download queue or communication eligibility changed."""
        if self.cap_mb is None:
            self._sync_download_uncapped(h, now)
            return
        if h.dl_cur is None and h.dl_queue:
            nxt = h.dl_queue.popleft()
            nxt.loc = _DL_ACTIVE
            h.dl_cur = nxt
            self.dl_set[h.idx] = h
        self._refit_downloads(now)

    # -- server ------------------------------------------------------------

    def _make_replica(self, wu: WorkUnit, h: _Host, now: float) -> _Replica:
        wu.replicas_issued += 1
        wu.deficit -= 1
        wu.users.add(h.user)
        if wu.state is WorkUnitState.UNSENT:
            wu.state = WorkUnitState.IN_PROGRESS
        return _Replica(
            wu, h, self.task.flops_per_task, self.task.input_size,
            now + self.task.deadline * SECONDS_PER_DAY,
        )

    def _assign(self, h: _Host, n: int, now: float) -> list[_Replica]:
        out: list[_Replica] = []
        skipped: list[WorkUnit] = []
        while n > 0 and self.needs:
            wu = self.needs.popleft()
            if wu.state is not WorkUnitState.IN_PROGRESS or wu.deficit <= 0:
                wu.in_needs = False
                continue
            if h.user in wu.users:
                skipped.append(wu)
                continue
            out.append(self._make_replica(wu, h, now))
            n -= 1
            if wu.deficit > 0:
                skipped.append(wu)
            else:
                wu.in_needs = False
        if skipped:
            self.needs.extendleft(reversed(skipped))
        while n > 0:
            wu = WorkUnit(id=self.wu_seq, spec=self.task, deficit=self.cfg.min_quorum)
            self.wu_seq += 1
            if self.unit_log is not None:
                self.unit_log.append(wu)
            out.append(self._make_replica(wu, h, now))
            n -= 1
            if wu.deficit > 0:
                wu.in_needs = True
                self.needs.append(wu)
        return out

    def _deliver(self, r: _Replica, outcome: ResultOutcome, finish_s: float):
        """Attach a terminal result to its work unit and react."""
        wu = r.wu
        rec = ResultRecord(
            host_id=r.host.rec.host_id,
            user_id=r.host.user,
            outcome=outcome,
            finish_time=finish_s / SECONDS_PER_DAY,
        )
        wu.results.append(rec)
        self.n_results += 1
        if wu.state is WorkUnitState.VALIDATED:
            self.validated_results_total += 1
            return
        if wu.state is not WorkUnitState.IN_PROGRESS:
            return
        if outcome is ResultOutcome.CORRECT:
            wu.n_correct += 1
            if wu.n_correct >= self.cfg.min_quorum:
                wu.state = WorkUnitState.VALIDATED
                self.n_validated += 1
                self.validated_results_total += len(wu.results)
                self.validated_flop += self.task.flops_per_task
                wu.deficit = 0
                return
        outstanding = wu.replicas_issued - len(wu.results)
        potential = wu.n_correct + outstanding + (self.cfg.max_replicas - wu.replicas_issued)
        if potential < self.cfg.min_quorum:
            wu.state = WorkUnitState.INVALID
            self.n_invalid += 1
            wu.deficit = 0
            return
        want = self.cfg.min_quorum - wu.n_correct - outstanding - wu.deficit
        room = self.cfg.max_replicas - wu.replicas_issued - wu.deficit
        grow = min(want, room)
        if grow > 0:
            wu.deficit += grow
            if not wu.in_needs:
                wu.in_needs = True
                self.needs.append(wu)

    def _flush_returns(self, h: _Host, now: float):
        while h.completed:
            r = h.completed.popleft()
            if r.loc is not _COMPLETED:
                continue
            r.loc = _GONE
            self._deliver(r, r.outcome, r.finish_s)

    # -- work fetch ----------------------------------------------------------

    def _try_fetch(self, h: _Host, now: float):
        if not h.alive or not h.mem_ok or not h.comm_ok():
            return
        if now + 1e-9 < h.next_fetch_s:
            if not h.fetch_pending and h.next_fetch_s <= self.duration_s:
                h.fetch_pending = True
                self._push(h.next_fetch_s, _EV_FETCH, h)
            return
        # bring the in-flight replica up to date so the buffer gap is real
        self._settle_compute(h, now)
        need = h.buffer_flop - h.on_hand_flop
        if need <= 0.0:
            return
        n = math.ceil(need / self.task.flops_per_task)
        replicas = self._assign(h, n, now)
        for r in replicas:
            h.dl_queue.append(r)
            h.on_hand_flop += self.task.flops_per_task
            if r.deadline_s <= self.duration_s:
                self._push(r.deadline_s, _EV_DEADLINE, r)
        h.next_fetch_s = now + h.min_conn_s
        if self.cfg.collect_fetch_log:
            self.fetch_log.append((h.rec.host_id, now / SECONDS_PER_DAY))
        self._dl_changed(h, now)
        self._sync_compute(h, now)

    # -- state changes -------------------------------------------------------

    def _apply_transition(self, h: _Host, now: float):
        self._sync_compute(h, now)
        if self.cap_mb is None:
            self._sync_download_uncapped(h, now)
        elif h.dl_cur is not None:
            self._refit_downloads(now)
        if h.comm_ok():
            self._flush_returns(h, now)
            self._try_fetch(h, now)

    def _drop_replica(self, h: _Host, r: _Replica):
        """Remove a replica from wherever it sits on the host.

        Caller settles first. Epoch bumps orphan any in-flight completion
        event for the removed replica.
        """
        loc = r.loc
        r.loc = _GONE
        if loc == _COMPUTING:
            h.computing = None
            h.cp_running = False
            h.cp_epoch += 1
            h.on_hand_flop -= r.flops_left
        elif loc == _DL_ACTIVE:
            h.dl_cur = None
            h.dl_running = False
            h.dl_epoch += 1
            h.on_hand_flop -= r.flops_left
            if not h.dl_queue:
                self.dl_set.pop(h.idx, None)
        elif loc == _DL_QUEUE:
            h.dl_queue.remove(r)
            h.on_hand_flop -= r.flops_left
        elif loc == _READY:
            h.ready.remove(r)
            h.on_hand_flop -= r.flops_left
        elif loc == _COMPLETED:
            h.completed.remove(r)

    # -- event handlers --------------------------------------------------------

    def _on_arrive(self, h: _Host, now: float):
        f_on = h.rec.on_fraction
        f_conn = h.rec.connected_fraction
        f_allow = h.rec.active_fraction
        cfg = self.cfg
        h.arrive_s = now
        h.flops_rate = (
            whole_host_flops(h.rec) * GIGA * h.rec.cpu_efficiency
            * (h.rec.resource_share if cfg.competing_share else 1.0)
        )
        h.mem_ok = h.rec.ram >= self.task.memory_footprint
        buffer_days = max(
            cfg.work_buffer_days or 0.0, h.rec.preferences.min_connection_interval
        )
        h.buffer_flop = buffer_days * SECONDS_PER_DAY * h.flops_rate
        h.occ_mark = now
        h.cp_mark = now
        h.dl_mark = now

        for proc, frac in ((_PROC_ON, f_on), (_PROC_CONN, f_conn), (_PROC_ALLOW, f_allow)):
            if frac >= 1.0:
                state = True
            elif frac <= 0.0:
                state = False
            else:
                state = self.rng.random() < frac
                mean = self.dwell_s if state else self.dwell_s * (1.0 - frac) / frac
                self._push(now + self.rng.expovariate(1.0 / mean), _EV_TOGGLE, h, proc)
            if proc == _PROC_ON:
                h.on = state
            elif proc == _PROC_CONN:
                h.conn = state
            else:
                h.allow = state

        self.hosts.append(h)
        self.n_alive += 1
        if h.depart_s <= self.duration_s:
            self._push(h.depart_s, _EV_DEPART, h)
        if h.comm_ok():
            self._try_fetch(h, now)

    def _on_depart(self, h: _Host, now: float):
        if not h.alive:
            return
        self._settle_occupancy(h, now)
        self._settle_compute(h, now)
        self._settle_download(h, now)
        h.alive = False
        self.n_alive -= 1
        doomed = []
        if h.computing is not None:
            doomed.append(h.computing)
        if h.dl_cur is not None:
            doomed.append(h.dl_cur)
        doomed.extend(h.dl_queue)
        doomed.extend(h.ready)
        doomed.extend(h.completed)
        h.computing = None
        h.dl_cur = None
        h.dl_queue.clear()
        h.ready.clear()
        h.completed.clear()
        h.cp_running = False
        h.dl_running = False
        h.cp_epoch += 1
        h.dl_epoch += 1
        self.dl_set.pop(h.idx, None)
        for r in doomed:
            r.loc = _GONE
            self._deliver(r, ResultOutcome.LOST, now)
        if self.cap_mb is not None:
            self._refit_downloads(now)

    def _on_toggle(self, h: _Host, proc: int, now: float):
        if not h.alive:
            return
        self._settle_occupancy(h, now)
        self._settle_compute(h, now)
        self._settle_download(h, now)
        if proc == _PROC_ON:
            h.on = not h.on
            frac, state = h.rec.on_fraction, h.on
        elif proc == _PROC_CONN:
            h.conn = not h.conn
            frac, state = h.rec.connected_fraction, h.conn
        else:
            h.allow = not h.allow
            frac, state = h.rec.active_fraction, h.allow
        mean = self.dwell_s if state else self.dwell_s * (1.0 - frac) / frac
        nxt = now + self.rng.expovariate(1.0 / mean)
        if nxt <= self.duration_s:
            self._push(nxt, _EV_TOGGLE, h, proc)
        self._apply_transition(h, now)

    def _on_cp_done(self, h: _Host, epoch: int, now: float):
        if not h.alive or epoch != h.cp_epoch:
            return
        self._settle_compute(h, now)
        r = h.computing
        if r is None:
            return
        # credit any float residue so raw accounting is exact
        if r.flops_left > 0.0:
            self.raw_flop += r.flops_left
            h.on_hand_flop -= r.flops_left
            r.flops_left = 0.0
        r.loc = _COMPLETED
        r.finish_s = now
        r.outcome = (
            ResultOutcome.ERRONEOUS
            if self.cfg.error_rate > 0.0 and self.rng.random() < self.cfg.error_rate
            else ResultOutcome.CORRECT
        )
        h.computing = None
        h.cp_running = False
        h.cp_epoch += 1
        h.completed.append(r)
        if h.comm_ok():
            self._flush_returns(h, now)
        self._sync_compute(h, now)
        if h.comm_ok():
            self._try_fetch(h, now)

    def _on_dl_done(self, h: _Host, epoch: int, now: float):
        if not h.alive or epoch != h.dl_epoch:
            return
        self._settle_download(h, now)
        r = h.dl_cur
        if r is None:
            return
        r.input_left = 0.0
        r.loc = _READY
        h.dl_cur = None
        h.dl_running = False
        h.dl_epoch += 1
        h.ready.append(r)
        self.mb_downloaded += self.task.input_size
        self.downloads_completed += 1
        if not h.dl_queue:
            self.dl_set.pop(h.idx, None)
        self._dl_changed(h, now)
        self._sync_compute(h, now)

    def _on_deadline(self, r: _Replica, now: float):
        if r.loc == _GONE:
            return
        h = r.host
        self._settle_compute(h, now)
        self._settle_download(h, now)
        was = r.loc
        self._drop_replica(h, r)
        self._deliver(r, ResultOutcome.TIMED_OUT, now)
        if was == _COMPUTING:
            self._sync_compute(h, now)
        if was == _DL_ACTIVE or was == _DL_QUEUE:
            self._dl_changed(h, now)
        if h.comm_ok():
            self._try_fetch(h, now)

    def _on_fetch(self, h: _Host, now: float):
        h.fetch_pending = False
        self._try_fetch(h, now)

    def _on_sample(self, now: float):
        t = now if now > 0 else 1.0
        self.timeline.append(
            TimelineSample(
                time_days=now / SECONDS_PER_DAY,
                active_hosts=self.n_alive,
                validated_workunits=self.n_validated,
                achieved_gflops=self.validated_flop / t / GIGA,
                raw_gflops=self.raw_flop / t / GIGA,
                bytes_downloaded=self.mb_downloaded,
            )
        )

    # -- main loop -------------------------------------------------------------

    def run(self) -> SimReport:
        cfg = self.cfg
        duration_days = cfg.duration_days

        initial = generate_pool(cfg.pool_spec)
        arrivals_d = cfg.churn.arrival_times(duration_days, self.arrival_rng)
        arrival_seed = int(
            np.random.SeedSequence(cfg.seed).generate_state(4, np.uint64)[3]
        )
        arrival_pool = generate_pool(
            replace(cfg.pool_spec, n_hosts=len(arrivals_d), seed=arrival_seed)
        )
        arrival_pool = [
            replace(r, host_id=f"a{r.host_id}", user_id=f"a{r.user_id}")
            for r in arrival_pool
        ]
        lifetimes_d = cfg.churn.sample_lifetimes(
            len(initial) + len(arrival_pool), self.life_rng
        )

        idx = 0
        for rec, life in zip(initial, lifetimes_d[: len(initial)]):
            h = _Host(rec, idx)
            idx += 1
            h.depart_s = life * SECONDS_PER_DAY
            self._push(0.0, _EV_ARRIVE, h)
        for rec, t_arr, life in zip(
            arrival_pool, arrivals_d, lifetimes_d[len(initial):]
        ):
            h = _Host(rec, idx)
            idx += 1
            h.depart_s = (t_arr + life) * SECONDS_PER_DAY
            self._push(t_arr * SECONDS_PER_DAY, _EV_ARRIVE, h)

        step = cfg.timeline_step_hours * SECONDS_PER_HOUR
        t = step
        while t < self.duration_s:
            self._push(t, _EV_SAMPLE)
            t += step
        self._push(self.duration_s, _EV_SAMPLE)

        heap = self.heap
        while heap:
            t, _, code, a, b = heapq.heappop(heap)
            if t > self.duration_s:
                break
            self.now = t
            if code == _EV_CP_DONE:
                self._on_cp_done(a, b, t)
            elif code == _EV_DL_DONE:
                self._on_dl_done(a, b, t)
            elif code == _EV_TOGGLE:
                self._on_toggle(a, b, t)
            elif code == _EV_FETCH:
                self._on_fetch(a, t)
            elif code == _EV_DEADLINE:
                self._on_deadline(a, t)
            elif code == _EV_ARRIVE:
                self._on_arrive(a, t)
            elif code == _EV_DEPART:
                self._on_depart(a, t)
            else:
                self._on_sample(t)

        end = self.duration_s
        for h in self.hosts:
            if h.alive:
                self._settle_occupancy(h, end)
                self._settle_compute(h, end)

        dur_s = self.duration_s
        member = self.member_time
        return SimReport(
            achieved_flops=self.validated_flop / dur_s / GIGA,
            raw_flops=self.raw_flop / dur_s / GIGA,
            bytes_downloaded=self.mb_downloaded,
            mean_active_hosts=member / dur_s,
            replicas_per_validated_task=(
                self.validated_results_total / self.n_validated
                if self.n_validated
                else 0.0
            ),
            timeline=tuple(self.timeline),
            duration_days=duration_days,
            seed=cfg.seed,
            n_workunits=self.wu_seq,
            n_validated=self.n_validated,
            n_invalid=self.n_invalid,
            n_results=self.n_results,
            downloads_completed=self.downloads_completed,
            observed_on_fraction=self.on_time / member if member else 0.0,
            observed_connected_fraction=self.conn_time / member if member else 0.0,
            observed_active_fraction=self.allow_time / member if member else 0.0,
            fetch_log=tuple(self.fetch_log) if cfg.collect_fetch_log else (),
            workunit_log=tuple(self.unit_log) if self.unit_log is not None else (),
        )


def run_simulation(config: SimConfig) -> SimReport:
    """Run one seeded simulation to completion and aggregate it."""
    return _Engine(config).run()


def analytic_comparison(report: SimReport, factors: CapacityFactors) -> dict:
    """Compare a steady-state run against the closed-form prediction.

    Meaningful only once churn has fully turned the pool over; the guard
    demands the run cover at least twenty mean lifetimes.
    """
    if report.duration_days < 20.0 * factors.mean_lifetime:
        raise ValueError("run too short for steady-state comparison")
    predicted = potential_flops(factors)
    if predicted <= 0:
        raise ValueError("predicted capacity is zero")
    achieved = report.achieved_flops
    return {
        "predicted": predicted,
        "achieved": achieved,
        "relative_error": abs(achieved - predicted) / predicted,
    }


def factors_from_sim_config(cfg: SimConfig) -> CapacityFactors:
    """Capacity factors implied by a simulation config.

    Field means come from the pool generators before rounding and clamping,
    redundancy from the quorum, resource share only when projects compete.
    """
    pool = cfg.pool_spec

    def frac(name: str) -> float:
        return min(1.0, max(0.0, pool.field_mean(name)))

    return CapacityFactors(
        arrival_rate=cfg.churn.mean_arrival_rate(cfg.duration_days),
        mean_lifetime=cfg.churn.mean_lifetime(),
        mean_ncpus=pool.field_mean("n_cpus"),
        mean_flops_per_cpu=pool.field_mean("flops_per_cpu"),
        cpu_efficiency=frac("cpu_efficiency"),
        on_fraction=frac("on_fraction"),
        active_fraction=frac("active_fraction"),
        redundancy=float(cfg.min_quorum),
        resource_share=frac("resource_share") if cfg.competing_share else 1.0,
        connected_fraction=frac("connected_fraction"),
    )


def sim_config_from_config(cfg: Mapping, seed_override: int | None = None) -> SimConfig:
    """Build a SimConfig from a JSON-shaped dict with modest defaults."""
    known = {
        "duration_days", "seed", "churn", "pool", "task", "min_quorum",
        "max_replicas", "error_rate", "server_egress_cap_mbps",
        "competing_share", "mean_dwell_hours", "work_buffer_days",
        "timeline_step_hours",
    }
    unknown = set(cfg) - known
    if unknown:
        raise ValueError(f"unknown simulate option: {sorted(unknown)[0]!r}")
    seed = int(cfg.get("seed", 1)) if seed_override is None else seed_override

    churn_cfg = dict(cfg.get("churn", {}))
    unknown = set(churn_cfg) - {"arrival_rate", "lifetime_mean_days"}
    if unknown:
        raise ValueError(f"unknown churn option: {sorted(unknown)[0]!r}")
    rate = churn_cfg.get("arrival_rate", 2.0)
    if isinstance(rate, list):
        rate = tuple((float(s), float(r)) for s, r in rate)
    else:
        rate = float(rate)
    churn = ChurnModel(
        arrival_rate=rate,
        lifetime_mean_days=float(churn_cfg.get("lifetime_mean_days", 91.0)),
    )

    pool_cfg = dict(cfg.get("pool", {}))
    pool_cfg.setdefault("n_hosts", 200)
    pool = pool_spec_from_config(pool_cfg, default_seed=seed)

    task_cfg = dict(cfg.get("task", {}))
    unknown = set(task_cfg) - {
        "flops_per_task", "input_size_mb", "output_size_mb", "deadline_days",
        "memory_footprint_mb",
    }
    if unknown:
        raise ValueError(f"unknown task option: {sorted(unknown)[0]!r}")
    task = TaskSpec(
        flops_per_task=float(task_cfg.get("flops_per_task", 1.3e13)),
        input_size=float(task_cfg.get("input_size_mb", 5.0)),
        output_size=float(task_cfg.get("output_size_mb", 0.1)),
        deadline=float(task_cfg.get("deadline_days", 7.0)),
        memory_footprint=float(task_cfg.get("memory_footprint_mb", 32.0)),
    )

    egress = cfg.get("server_egress_cap_mbps")
    return SimConfig(
        duration_days=float(cfg.get("duration_days", 30.0)),
        seed=seed,
        churn=churn,
        pool_spec=pool,
        task=task,
        min_quorum=int(cfg.get("min_quorum", 2)),
        max_replicas=int(cfg.get("max_replicas", 4)),
        error_rate=float(cfg.get("error_rate", 0.0)),
        server_egress_cap=float(egress) if egress is not None else None,
        competing_share=bool(cfg.get("competing_share", False)),
        mean_dwell_hours=float(cfg.get("mean_dwell_hours", 12.0)),
        work_buffer_days=(
            float(cfg["work_buffer_days"]) if cfg.get("work_buffer_days") else None
        ),
        timeline_step_hours=float(cfg.get("timeline_step_hours", 6.0)),
    )
