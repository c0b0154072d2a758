"""Command line front end.

Five subcommands cover the toolkit: ``ingest`` (parse and normalize a host
CSV), ``stats`` (breakdowns, user buckets, histograms, lifetimes), ``capacity``
(closed-form capacity products), ``sweep`` (capacity versus task data rate)
and ``simulate`` (the event-driven project simulation).

Conventions shared by every subcommand: configuration comes from a JSON file
named by ``--config``; ``--seed`` overrides any seed found there; outputs land
in ``--out`` (default: current directory). Every CSV written starts with a
``# seed=... config=...`` comment and every JSON document carries the same
pair under a ``meta`` key, so an output can always be traced to the exact
inputs that produced it. Exit status is 0 for success and 2 for any usage,
configuration, input or data problem; 1 is reserved for a requested check
failing its assertion, which no current subcommand performs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from typing import Mapping, Sequence

import numpy as np

from . import capacity as cap
from . import ingest as ing
from . import population as pop
from . import sim as simmod
from .hosts import field_getter
from .units import SECONDS_PER_DAY

# (file stem, field selector) pairs behind the hist_<stem>.csv outputs;
# flops and iops are whole-host aggregates, the rest raw record fields.
HIST_FIELDS = (
    ("flops", "flops"),
    ("iops", "iops"),
    ("ram", "ram"),
    ("swap", "swap"),
    ("throughput", "throughput_down"),
    ("disk_total", "disk_total"),
    ("disk_free", "disk_free"),
    ("tz", "tz_offset"),
)


class _UsageError(Exception):
    pass


class _DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad usage; raise instead so main() stays
    # in control of the exit code and tests can call it in-process.
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="volpool", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_config, helptext in (
        ("ingest", True, "parse a host CSV, writing accepted rows and rejects"),
        ("stats", True, "summarize a host CSV: breakdowns, buckets, histograms"),
        ("capacity", False, "evaluate the closed-form capacity products"),
        ("sweep", True, "capacity as a function of task data rate"),
        ("simulate", True, "run the event-driven project simulation"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=needs_config, help="JSON config file")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument(
            "--format", choices=("csv", "json"), default="json",
            help="format for single-document outputs",
        )
    return p


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as err:
        raise _UsageError(f"cannot read config: {err}") from err
    except json.JSONDecodeError as err:
        raise _UsageError(f"config is not valid JSON: {err}") from err
    if not isinstance(cfg, dict):
        raise _UsageError("config root must be a JSON object")
    return cfg


def _meta(seed: int, cfg: Mapping) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]
    return {"seed": seed, "config_sha256": digest}


def _comment(meta: Mapping) -> str:
    return f"# seed={meta['seed']} config={meta['config_sha256']}"


def _write_csv(path: str, meta: Mapping, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(meta) + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_json(path: str, meta: Mapping, payload: dict) -> None:
    doc = dict(payload)
    doc["meta"] = dict(meta)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outpath(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _resolve_seed(args, cfg: Mapping) -> int:
    if args.seed is not None:
        return args.seed
    return int(cfg.get("seed", 0))


def _records_from_config(cfg: Mapping, seed: int):
    """Host records named by the config: a CSV to ingest or a pool to draw."""
    if "input" in cfg:
        try:
            result = ing.parse_hosts(cfg["input"])
        except OSError as err:
            raise _DataError(f"cannot read input: {err}") from err
        except ValueError as err:
            raise _DataError(str(err)) from err
        if not result.records:
            raise _DataError("no rows accepted from input")
        return list(result.records)
    pool_cfg = cfg.get("pool", {})
    try:
        spec = pop.pool_spec_from_config(dict(pool_cfg), default_seed=seed)
        return pop.generate_pool(spec)
    except ValueError as err:
        raise _UsageError(f"bad pool config: {err}") from err


# -- subcommands ---------------------------------------------------------------


def cmd_ingest(args, cfg: Mapping) -> int:
    if "input" not in cfg:
        raise _UsageError("ingest config needs an 'input' path")
    seed = _resolve_seed(args, cfg)
    meta = _meta(seed, cfg)
    try:
        result = ing.parse_hosts(cfg["input"])
    except OSError as err:
        raise _DataError(f"cannot read input: {err}") from err
    except ValueError as err:
        raise _DataError(str(err)) from err

    out_csv = _outpath(args, "hosts.parsed.csv")
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write(_comment(meta) + "\n")
        fh.write(ing.serialize_hosts(result.records))
    _write_csv(
        _outpath(args, "rejects.csv"), meta, ("line", "reason"), result.rejects
    )
    print(
        f"ingest: {len(result.records)} accepted, "
        f"{len(result.rejects)} rejected -> {out_csv}"
    )
    if not result.records:
        raise _DataError("no rows accepted from input")
    return 0


def _write_histogram(path: str, meta: Mapping, hist) -> None:
    rows = [
        (hist.bin_edges[i], hist.bin_edges[i + 1], hist.counts[i])
        for i in range(len(hist.counts))
    ]
    rows.append(("overflow", "", hist.overflow))
    _write_csv(path, meta, ("bin_start", "bin_end", "count"), rows)


def cmd_stats(args, cfg: Mapping) -> int:
    seed = _resolve_seed(args, cfg)
    meta = _meta(seed, cfg)
    records = _records_from_config(cfg, seed)
    if not records:
        raise _DataError("empty record set")

    # breakdown_vendor.csv keeps the short stem; the record attribute it
    # groups on is cpu_vendor.
    for stem, key in (("vendor", "cpu_vendor"), ("os", "os"),
                      ("country", "country"), ("venue", "venue")):
        rows = ing.breakdown(records, key)
        _write_csv(
            _outpath(args, f"breakdown_{stem}.csv"),
            meta,
            (key, "n_hosts", "mean_flops", "total_flops",
             "mean_disk_free", "mean_throughput"),
            ((r.key, r.n_hosts, r.mean_flops, r.total_flops,
              r.mean_disk_free, r.mean_throughput) for r in rows),
        )

    buckets = ing.hosts_per_user(records)
    _write_csv(
        _outpath(args, "hosts_per_user.csv"),
        meta,
        ("bucket", "n_users", "n_hosts", "pct_hosts"),
        ((r.bucket, r.n_users, r.n_hosts, r.pct_hosts) for r in buckets),
    )

    for stem, selector in HIST_FIELDS:
        values = [field_getter(selector)(r) for r in records]
        hist = ing.histogram_of_values(values, ing.auto_edges(values), stem)
        _write_histogram(_outpath(args, f"hist_{stem}.csv"), meta, hist)

    now = max(r.last_contact for r in records) + 30.0 * SECONDS_PER_DAY
    try:
        life = pop.lifetime_stats(records, now=now)
    except ValueError:
        life = None
    if life is not None:
        _write_histogram(_outpath(args, "hist_lifetime.csv"), meta, life.histogram)
    else:  # every host still reporting: no lifetimes to bin yet
        empty = ing.histogram_of_values([], [0.0, 30.0], "lifetime_days")
        _write_histogram(_outpath(args, "hist_lifetime.csv"), meta, empty)
    payload = {
        "n_hosts": len(records),
        "hardware_gflops": cap.hardware_flops(records),
        "lifetime_mean_days": life.mean_days if life else None,
        "lifetime_n_hosts": life.n_hosts if life else 0,
    }
    _write_json(_outpath(args, "stats.json"), meta, payload)
    print(f"stats: {len(records)} hosts summarized -> {args.out}")
    return 0


def cmd_capacity(args, cfg: Mapping) -> int:
    seed = _resolve_seed(args, cfg)
    meta = _meta(seed, cfg)
    try:
        factors = cap.factors_from_config(dict(cfg.get("factors", {})))
    except ValueError as err:
        raise _UsageError(f"bad factors config: {err}") from err
    hardware = cap.hardware_product(factors)
    util = cap.utilization_product(factors)
    potential = cap.potential_flops(factors)
    payload = {
        "hardware_gflops": hardware,
        "utilization": util,
        "potential_gflops": potential,
        "factors": {
            "arrival_rate": factors.arrival_rate,
            "mean_lifetime": factors.mean_lifetime,
            "mean_ncpus": factors.mean_ncpus,
            "mean_flops_per_cpu": factors.mean_flops_per_cpu,
            "cpu_efficiency": factors.cpu_efficiency,
            "on_fraction": factors.on_fraction,
            "active_fraction": factors.active_fraction,
            "redundancy": factors.redundancy,
            "resource_share": factors.resource_share,
            "connected_fraction": factors.connected_fraction,
        },
    }
    if args.format == "csv":
        rows = [("hardware_gflops", hardware), ("utilization", util),
                ("potential_gflops", potential)]
        rows += sorted(payload["factors"].items())
        _write_csv(_outpath(args, "capacity.csv"), meta, ("name", "value"), rows)
    else:
        _write_json(_outpath(args, "capacity.json"), meta, payload)
    print(
        f"capacity: {potential:.1f} GFLOPS sustained "
        f"({hardware:.1f} GFLOPS hardware x {util:.6f} utilization)"
    )
    return 0


def cmd_sweep(args, cfg: Mapping) -> int:
    seed = _resolve_seed(args, cfg)
    meta = _meta(seed, cfg)
    records = _records_from_config(cfg, seed)

    grid_cfg = cfg.get("rates", {"start": 0.0, "stop": 10.0, "n": 51})
    if isinstance(grid_cfg, list):
        grid = [float(x) for x in grid_cfg]
    else:
        unknown = set(grid_cfg) - {"start", "stop", "n", "log"}
        if unknown:
            raise _UsageError(f"unknown rates option: {sorted(unknown)[0]!r}")
        n = int(grid_cfg.get("n", 51))
        start = float(grid_cfg.get("start", 0.0))
        stop = float(grid_cfg.get("stop", 10.0))
        if grid_cfg.get("log"):
            if start <= 0:
                raise _UsageError("log-spaced rates need a positive start")
            grid = list(np.geomspace(start, stop, n))
        else:
            grid = list(np.linspace(start, stop, n))

    per_host = bool(cfg.get("per_host_factors", False))
    try:
        factors = cap.factors_from_config(dict(cfg.get("factors", {})))
        points = cap.compute_vs_rate_curve(
            records, grid, factors, per_host_factors=per_host
        )
    except ValueError as err:
        raise _UsageError(str(err)) from err
    _write_csv(
        _outpath(args, "rate_curve.csv"),
        meta,
        ("data_rate", "total_gflops", "unsaturated_fraction"),
        ((p.data_rate, p.total_flops, p.unsaturated_fraction) for p in points),
    )
    print(f"sweep: {len(points)} grid points over {len(records)} hosts")
    return 0


def cmd_simulate(args, cfg: Mapping) -> int:
    try:
        sim_cfg = simmod.sim_config_from_config(cfg, seed_override=args.seed)
    except (ValueError, TypeError) as err:
        raise _UsageError(f"bad simulate config: {err}") from err
    meta = _meta(sim_cfg.seed, cfg)
    report = simmod.run_simulation(sim_cfg)
    _write_json(_outpath(args, "sim_report.json"), meta, report.to_json_dict())
    _write_csv(
        _outpath(args, "timeline.csv"),
        meta,
        ("time_days", "active_hosts", "validated_workunits",
         "achieved_gflops", "raw_gflops", "bytes_downloaded"),
        ((s.time_days, s.active_hosts, s.validated_workunits,
          s.achieved_gflops, s.raw_gflops, s.bytes_downloaded)
         for s in report.timeline),
    )
    factors = simmod.factors_from_sim_config(sim_cfg)
    try:
        comparison = simmod.analytic_comparison(report, factors)
        payload = {"valid": True, **comparison}
    except ValueError as err:
        payload = {"valid": False, "reason": str(err)}
    _write_json(_outpath(args, "analytic_comparison.json"), meta, payload)
    print(
        f"simulate: {report.n_validated} validated of {report.n_workunits} "
        f"workunits, {report.achieved_flops:.3f} GFLOPS sustained"
    )
    return 0


_COMMANDS = {
    "ingest": cmd_ingest,
    "stats": cmd_stats,
    "capacity": cmd_capacity,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except (_UsageError, _DataError) as err:
        print(f"volpool: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
