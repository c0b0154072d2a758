"""Shared fixtures: cheap deterministic pools and a homogeneous-spec factory."""

import pytest

from volpool import population as pop
from volpool import presets


def flat_spec(
    n,
    seed,
    flops=1.0,
    on=1.0,
    conn=1.0,
    act=1.0,
    eff=1.0,
    share=1.0,
    thr=1000.0,
    ram=1024.0,
):
    """PoolSpec whose every numeric field is a constant: n identical hosts."""
    return pop.PoolSpec(
        n_hosts=n,
        seed=seed,
        field_generators={
            "n_cpus": 1.0,
            "flops_per_cpu": flops,
            "iops_per_cpu": 1.0,
            "ram": ram,
            "swap": 1.0,
            "disk_total": 50.0,
            "disk_free": 20.0,
            "throughput_down": thr,
            "on_fraction": on,
            "connected_fraction": conn,
            "active_fraction": act,
            "cpu_efficiency": eff,
            "tz_offset": 0.0,
            "created": 0.0,
            "last_contact": 0.0,
            "resource_share": share,
        },
    )


@pytest.fixture(scope="session")
def make_flat_spec():
    return flat_spec


@pytest.fixture(scope="session")
def reference_pool_2k():
    """Small reference-marginal pool, shared across statistical tests."""
    return pop.generate_pool(presets.reference_pool_spec(n_hosts=2000, seed=7))


@pytest.fixture(scope="session")
def reference_pool_20k():
    """Larger reference-marginal pool for tighter statistical checks."""
    return pop.generate_pool(presets.reference_pool_spec(n_hosts=20000, seed=7))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criteria verdict lines collected during the run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line("  " + line)
