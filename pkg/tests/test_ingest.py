"""Host CSV parsing, serialization and summary statistics."""

import dataclasses
import io
import math

import pytest
from hypothesis import given, settings, strategies as st

from volpool import ingest, presets
from volpool.hosts import whole_host_flops
from volpool.ingest import (
    auto_edges,
    breakdown,
    histogram,
    histogram_of_values,
    hosts_per_user,
    parse_hosts,
    record_to_row,
    serialize_hosts,
    write_hosts_csv,
)
from volpool.population import generate_pool

from conftest import flat_spec

HEADER = ",".join(ingest.HOST_CSV_COLUMNS)

# Hand-written rows using shortest-repr floats so a parse/serialize cycle is
# byte-identical.
CANON_ROWS = [
    "a1,ua,1,1.5,2.0,1024.0,1.0,60.0,30.0,289.0,0.81,0.83,0.84,0.899,"
    "Intel,Windows XP,USA,Home,-18000,1104192000,1138752000,0.917",
    "b2,ub,2,1.737,1.25,512.0,2.5,40.0,10.5,64.0,1.0,1.0,1.0,1.0,"
    "AMD,Linux,Germany,None,3600,1110000000,1130000000,1.0",
    "c3,uc,1,0.755,0.5,256.0,0.25,8.0,0.0,33.6,0.5,0.25,0.75,0.9,"
    "SPARC,SunOS,Japan,Work,32400,1104192000,1104192000,0.05",
]
CANON_TEXT = HEADER + "\n" + "\n".join(CANON_ROWS) + "\n"


@pytest.fixture()
def canon_records():
    result = parse_hosts(io.StringIO(CANON_TEXT))
    assert result.rejects == ()
    return result.records


# -- parsing -----------------------------------------------------------------


def test_parse_canonical_rows(canon_records):
    assert len(canon_records) == 3
    a, b, c = canon_records
    assert a.host_id == "a1" and a.user_id == "ua"
    assert a.flops_per_cpu == 1.5 and a.throughput_down == 289.0
    assert a.cpu_vendor.value == "Intel" and a.os.value == "Windows XP"
    assert a.tz_offset == -18000 and a.created == 1104192000
    assert b.n_cpus == 2 and b.venue.value == "None"
    assert c.disk_free == 0.0 and c.resource_share == 0.05


def test_round_trip_is_byte_identical(canon_records):
    assert serialize_hosts(canon_records) == CANON_TEXT


def test_round_trip_through_file(tmp_path, canon_records):
    path = tmp_path / "hosts.csv"
    write_hosts_csv(canon_records, path, header_comment="fixture")
    text = path.read_text()
    assert text.startswith("# fixture\n")
    again = parse_hosts(path)
    assert again.records == canon_records
    assert again.rejects == ()


def test_round_trip_generated_pool():
    pool = generate_pool(presets.reference_pool_spec(n_hosts=50, seed=4))
    result = parse_hosts(io.StringIO(serialize_hosts(pool)))
    assert result.records == tuple(pool)
    assert result.rejects == ()


def test_comment_lines_before_header_skipped():
    text = "# one\n# two\n" + CANON_TEXT
    result = parse_hosts(io.StringIO(text))
    assert len(result.records) == 3


def test_header_only_file():
    result = parse_hosts(io.StringIO(HEADER + "\n"))
    assert result.records == ()
    assert result.rejects == ()


def test_missing_header():
    with pytest.raises(ValueError, match="missing header row"):
        parse_hosts(io.StringIO(""))
    with pytest.raises(ValueError, match="missing header row"):
        parse_hosts(io.StringIO("# only a comment\n"))


def test_unknown_column():
    bad = HEADER.replace("swap_gb", "pagefile_gb")
    with pytest.raises(ValueError, match="unknown column: 'pagefile_gb'"):
        parse_hosts(io.StringIO(bad + "\n"))


def test_reordered_header_rejected():
    cols = list(ingest.HOST_CSV_COLUMNS)
    cols[0], cols[1] = cols[1], cols[0]
    with pytest.raises(ValueError, match="header does not match"):
        parse_hosts(io.StringIO(",".join(cols) + "\n"))


def row_with(**patches) -> str:
    """CANON row a with named CSV fields replaced."""
    fields = dict(zip(ingest.HOST_CSV_COLUMNS, CANON_ROWS[0].split(",")))
    fields.update({k: str(v) for k, v in patches.items()})
    return ",".join(fields[c] for c in ingest.HOST_CSV_COLUMNS)


@pytest.mark.parametrize(
    "patch, reason",
    [
        (dict(cpu_vendor="VIA"), "unknown cpu_vendor: 'VIA'"),
        (dict(os="BeOS"), "unknown os: 'BeOS'"),
        (dict(venue="Cafe"), "unknown venue: 'Cafe'"),
        (dict(ram_mb="soft"), "invalid ram_mb: 'soft'"),
        (dict(n_cpus="1.5"), "invalid n_cpus: '1.5'"),
        (dict(ram_mb="nan"), "invalid ram_mb: 'nan'"),
        (dict(disk_free_gb="61.0"), "disk_free exceeds disk_total"),
        (dict(on_fraction="1.2"), "on_fraction outside [0, 1]"),
        (dict(last_contact_utc="0"), "last_contact precedes created"),
    ],
)
def test_bad_rows_rejected_with_reason(patch, reason):
    text = HEADER + "\n" + row_with(**patch) + "\n"
    result = parse_hosts(io.StringIO(text))
    assert result.records == ()
    assert len(result.rejects) == 1
    line, msg = result.rejects[0]
    assert line == 2
    assert msg == reason


def test_wrong_column_count_rejected():
    text = HEADER + "\n" + CANON_ROWS[0] + ",extra\n"
    result = parse_hosts(io.StringIO(text))
    assert result.rejects == ((2, "wrong column count"),)


def test_good_rows_survive_bad_neighbours():
    text = (
        HEADER + "\n"
        + CANON_ROWS[0] + "\n"
        + row_with(cpu_vendor="VIA") + "\n"
        + CANON_ROWS[2] + "\n"
    )
    result = parse_hosts(io.StringIO(text))
    assert [r.host_id for r in result.records] == ["a1", "c3"]
    assert result.rejects == ((3, "unknown cpu_vendor: 'VIA'"),)


def test_record_to_row_uses_shortest_repr(canon_records):
    row = record_to_row(canon_records[0])
    assert row[3] == "1.5"
    assert row[2] == "1"
    assert row[18] == "-18000"


# -- breakdowns ------------------------------------------------------------------


def test_breakdown_trio(canon_records):
    rows = breakdown(list(canon_records), "cpu_vendor")
    # 1 host each: alphabetical order, Total appended
    assert [r.key for r in rows] == ["AMD", "Intel", "SPARC", "Total"]
    by_key = {r.key: r for r in rows}
    assert by_key["AMD"].mean_flops == pytest.approx(2 * 1.737)
    assert by_key["Intel"].total_flops == pytest.approx(1.5)
    total = by_key["Total"]
    assert total.n_hosts == 3
    assert total.total_flops == pytest.approx(1.5 + 3.474 + 0.755)
    assert total.mean_disk_free == pytest.approx((30.0 + 10.5 + 0.0) / 3)
    assert total.mean_throughput == pytest.approx((289.0 + 64.0 + 33.6) / 3)


def test_breakdown_sorted_by_count(canon_records):
    extra = dataclasses.replace(canon_records[2], host_id="c4")
    rows = breakdown(list(canon_records) + [extra], "cpu_vendor")
    assert [r.key for r in rows] == ["SPARC", "AMD", "Intel", "Total"]
    assert rows[0].n_hosts == 2


def test_breakdown_counts_sum_to_total(canon_records):
    for key in ingest.BREAKDOWN_KEYS:
        rows = breakdown(list(canon_records), key)
        assert rows[-1].key == "Total"
        assert sum(r.n_hosts for r in rows[:-1]) == rows[-1].n_hosts


def test_breakdown_venue_none_label(canon_records):
    rows = breakdown(list(canon_records), "venue")
    assert any(r.key == "None" and r.n_hosts == 1 for r in rows)


def test_breakdown_unknown_key(canon_records):
    with pytest.raises(ValueError, match="unknown breakdown key"):
        breakdown(list(canon_records), "ram")


def test_vendor_conditional_pool_breakdown():
    """Per-vendor pools keep their own speed scale after mixing."""
    pool = presets.vendor_conditional_pool(30000, seed=9)
    rows = {r.key: r for r in breakdown(pool, "cpu_vendor")}
    total_share = sum(n for n, _ in presets.VENDOR_TABLE.values())
    for vendor, (count, mean_gflops) in presets.VENDOR_TABLE.items():
        row = rows[vendor.value]
        expect_n = 30000 * count / total_share
        assert abs(row.n_hosts - expect_n) <= 3 * math.sqrt(expect_n) + 1
        # resampling noise around the per-vendor mean: cv 0.6 fixture shape
        sigma = 0.6 * mean_gflops / math.sqrt(max(row.n_hosts, 1))
        assert abs(row.mean_flops - mean_gflops) <= 3 * sigma + 1e-9
    assert rows["Total"].mean_flops == pytest.approx(1.613, abs=0.03)


# -- ownership -----------------------------------------------------------------


def owned(user_id, n, start=0):
    base = generate_pool(flat_spec(1, seed=1))[0]
    return [
        dataclasses.replace(base, host_id=f"{user_id}.{i}", user_id=user_id)
        for i in range(start, start + n)
    ]


def test_hosts_per_user_buckets():
    records = (
        owned("s1", 1) + owned("s2", 1) + owned("s3", 1)
        + owned("m", 5)
        + owned("farm", 2987)
    )
    rows = {r.bucket: r for r in hosts_per_user(records)}
    assert rows["1"].n_users == 3 and rows["1"].n_hosts == 3
    assert rows["2-10"].n_users == 1 and rows["2-10"].n_hosts == 5
    assert rows["11-100"].n_users == 0
    assert rows["101-1000"].n_hosts == 0
    assert rows["1000+"].n_users == 1 and rows["1000+"].n_hosts == 2987
    assert sum(r.n_hosts for r in rows.values()) == len(records)
    assert sum(r.pct_hosts for r in rows.values()) == pytest.approx(100.0)
    assert rows["1000+"].pct_hosts == pytest.approx(100.0 * 2987 / len(records))


def test_hosts_per_user_empty():
    rows = hosts_per_user([])
    assert all(r.n_users == 0 and r.pct_hosts == 0.0 for r in rows)


# -- histograms -------------------------------------------------------------------


def test_histogram_of_values_basic():
    h = histogram_of_values([0.0, 1.0, 2.5, 5.0, 5.0], [0.0, 2.0, 4.0, 5.0], "x")
    assert h.counts == (2, 1, 0)
    assert h.overflow == 2  # the last edge is exclusive
    assert h.bin_edges == (0.0, 2.0, 4.0, 5.0)
    assert h.field_name == "x"


def test_histogram_half_open_bins():
    h = histogram_of_values([2.0], [0.0, 2.0, 4.0], "x")
    assert h.counts == (0, 1)  # inner edge belongs to the right bin
    below = histogram_of_values([-0.5], [0.0, 2.0], "x")
    assert below.counts == (0,)
    assert below.overflow == 1


def test_histogram_empty_values():
    h = histogram_of_values([], [0.0, 1.0, 2.0], "x")
    assert h.counts == (0, 0)
    assert h.overflow == 0


def test_histogram_edge_validation():
    with pytest.raises(ValueError, match="at least two bin edges"):
        histogram_of_values([1.0], [0.0], "x")
    with pytest.raises(ValueError, match="strictly ascending"):
        histogram_of_values([1.0], [0.0, 0.0, 1.0], "x")


@settings(max_examples=60)
@given(
    values=st.lists(st.floats(-50, 50), max_size=60),
    edges=st.lists(
        st.floats(-40, 40), min_size=2, max_size=8, unique=True
    ).map(sorted),
)
def test_histogram_conserves_samples(values, edges):
    h = histogram_of_values(values, edges, "x")
    assert sum(h.counts) + h.overflow == len(values)
    assert len(h.counts) == len(edges) - 1


@settings(max_examples=30)
@given(
    values=st.lists(st.floats(0, 10), max_size=30),
    seed=st.integers(0, 100),
)
def test_histogram_permutation_invariant(values, seed):
    import random

    shuffled = list(values)
    random.Random(seed).shuffle(shuffled)
    edges = [0.0, 2.0, 5.0, 10.0]
    assert histogram_of_values(values, edges, "x") == histogram_of_values(
        shuffled, edges, "x"
    )


def test_histogram_over_records(canon_records):
    h = histogram(list(canon_records), "flops", [0.0, 1.0, 2.0, 4.0])
    direct = histogram_of_values(
        [whole_host_flops(r) for r in canon_records], [0.0, 1.0, 2.0, 4.0], "flops"
    )
    assert h == direct
    assert h.counts == (1, 1, 1)  # 0.755, 1.5, 3.474


def test_histogram_named_field(canon_records):
    h = histogram(list(canon_records), "ram", [0.0, 600.0, 2000.0])
    assert h.counts == (2, 1)
    assert h.field_name == "ram"


def test_auto_edges_cover_data():
    values = [3.0, 1.0, 14.0, 7.5]
    edges = auto_edges(values, n_bins=10)
    assert len(edges) == 11
    assert edges[0] == 1.0
    assert edges[-1] > 14.0  # nudged past the max so it lands in-range
    h = histogram_of_values(values, edges, "x")
    assert h.overflow == 0
    assert sum(h.counts) == 4


def test_auto_edges_degenerate():
    assert auto_edges([], 5) == [0.0, 1.0]
    assert auto_edges([2.0, 2.0], 5) == [2.0, 3.0]
