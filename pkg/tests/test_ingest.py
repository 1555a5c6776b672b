import io
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetprint.errors import ParseError
from fleetprint.ingest import HEADER, format_csv, format_number, read_csv, stream_lines, subscribe_stream, write_csv
from fleetprint.telemetry import DEFAULT_NODES, METERS, AppLabel, Dataset, MeterId, MeterSample, TelemetryRun, featurize


def test_empty_corpus_is_header_only(tmp_path):
    path = tmp_path / "c.csv"
    n = write_csv([], path)
    assert path.read_bytes() == (HEADER + "\n").encode()
    assert n == len(HEADER) + 1


def test_single_record_layout():
    run = TelemetryRun(AppLabel.MCNP6, DEFAULT_NODES, [MeterSample(0.0, "digi-a", MeterId.CPU_UTIL, 97.5)], 5.0, "r1")
    lines = format_csv([run]).split("\n")
    assert lines[0] == HEADER
    assert lines[1] == "r1,MCNP6,0,digi-a,cpu_util,97.5"
    assert lines[2] == ""


@settings(max_examples=200)
@given(st.floats(min_value=0, max_value=1e300, allow_nan=False, allow_infinity=False))
def test_number_format_round_trips(x):
    assert float(format_number(x)) == x


def test_round_trip_generated_corpus(small_corpus, tmp_path):
    path = tmp_path / "corpus.csv"
    write_csv(small_corpus, path)
    back = read_csv(path)
    assert back == small_corpus
    assert [r.nodes for r in back] == [r.nodes for r in small_corpus]


def test_output_is_byte_deterministic(small_corpus, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(small_corpus, a)
    write_csv(list(reversed(small_corpus)), b)
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()


def test_records_sorted(small_corpus):
    lines = format_csv(small_corpus).splitlines()[1:]
    first_run = [ln for ln in lines if ln.startswith(small_corpus[0].run_id + ",")]
    meters = [ln.split(",")[4] for ln in first_run[:20]]
    assert meters == [m.value for m in METERS] * 2
    assert [ln.split(",")[3] for ln in first_run[:20]] == ["digi-a"] * 10 + ["digi-b"] * 10


def test_read_two_records():
    text = HEADER + "\nr,CADO_NFS,0,digi-a,cpu_util,1\nr,CADO_NFS,5,digi-a,cpu_util,2\n"
    (run,) = read_csv(io.StringIO(text))
    assert len(run.samples) == 2
    assert run.sample_period == 5.0
    assert run.master.name == "digi-a"


def test_master_defaults_to_first_seen_node():
    text = HEADER + "\nr,CADO_NFS,0,zeta,cpu_util,1\nr,CADO_NFS,0,alpha,cpu_util,2\n"
    (run,) = read_csv(io.StringIO(text))
    assert run.master.name == "zeta"


@pytest.mark.parametrize(
    "row, needle",
    [
        ("r,MCNP6,0,digi-a,cpu_uti,1", "cpu_uti"),
        ("r,MCNP6,0,digi-a,cpu_util,-1", "negative"),
        ("r,MCNP6,0,digi-a,cpu_util", "fields"),
        ("r,MCNP7,0,digi-a,cpu_util,1", "label"),
        ("r,MCNP6,abc,digi-a,cpu_util,1", "timestamp"),
        ("r,MCNP6,0,digi-a,cpu_util,101", "exceeds"),
    ],
)
def test_parse_errors_name_the_line(row, needle):
    text = HEADER + "\nr,MCNP6,0,digi-a,cpu_util,1\n" + row + "\n"
    with pytest.raises(ParseError) as info:
        read_csv(io.StringIO(text))
    assert info.value.line_no == 3
    assert needle in str(info.value)


def test_inconsistent_label_is_rejected():
    text = HEADER + "\nr,MCNP6,0,digi-a,cpu_util,1\nr,OPENFOAM,5,digi-a,cpu_util,1\n"
    with pytest.raises(ParseError, match="conflicts"):
        read_csv(io.StringIO(text))


def test_bad_header():
    with pytest.raises(ParseError):
        read_csv(io.StringIO("a,b,c\n"))


# streaming -------------------------------------------------------------------


def one_bucket_lines(run_id="s", label=""):
    return [f"{run_id},{label},0,{n},{m.value},1\n" for n in ("digi-a", "digi-b") for m in METERS]


def test_window_one_single_bucket():
    out = list(subscribe_stream(one_bucket_lines(), window=1))
    assert len(out) == 1
    run_id, ds = out[0]
    assert run_id == "s"
    assert ds.X.shape == (1, 20)
    assert ds.y is None


def test_truncated_final_bucket_not_emitted():
    lines = one_bucket_lines()[:-1]
    assert list(subscribe_stream(lines, window=1)) == []


def test_stream_skips_header():
    out = list(subscribe_stream([HEADER + "\n"] + one_bucket_lines(label="MCNP6"), window=3))
    assert len(out) == 1
    assert out[0][1].labels == [AppLabel.MCNP6]


def test_stream_parse_error_raises_or_reports():
    lines = ["bogus\n"] + one_bucket_lines()
    with pytest.raises(ParseError):
        list(subscribe_stream(lines, window=1))
    seen = []
    out = list(subscribe_stream(lines, window=1, on_error=seen.append))
    assert len(out) == 1
    assert seen[0].line_no == 1


def test_window_slides(small_corpus):
    run = small_corpus[0]
    windows = [ds for _, ds in subscribe_stream(stream_lines([run]), window=4)]
    batch = featurize(run)
    assert len(windows) == len(batch)
    assert [len(w) for w in windows[:5]] == [1, 2, 3, 4, 4]
    np.testing.assert_array_equal(windows[-1].X, batch.X[-4:])


def test_stream_matches_batch_featurize(small_corpus):
    runs = small_corpus[:3]
    per_run = {r.run_id: [] for r in runs}
    for run_id, ds in subscribe_stream(stream_lines(runs, unlabeled=True), window=1):
        per_run[run_id].append(ds.X[0])
    for run in runs:
        np.testing.assert_array_equal(np.array(per_run[run.run_id]), featurize(run).X)


def test_interleaving_within_bucket_is_irrelevant(small_corpus):
    run = small_corpus[1]
    lines = stream_lines([run])
    shuffled = []
    rnd = random.Random(0)
    for start in range(0, len(lines), 20):
        chunk = lines[start : start + 20]
        rnd.shuffle(chunk)
        shuffled.extend(chunk)
    a = [ds for _, ds in subscribe_stream(lines, window=3)]
    b = [ds for _, ds in subscribe_stream(shuffled, window=3)]
    assert len(a) == len(b)
    assert all(x.equals(y) for x, y in zip(a, b))


def test_interleaved_runs_tracked_separately(small_corpus):
    r1, r2 = small_corpus[0], small_corpus[3]
    l1, l2 = stream_lines([r1]), stream_lines([r2])
    merged = [ln for pair in zip(l1, l2) for ln in pair]
    out = {}
    for run_id, ds in subscribe_stream(merged, window=1):
        out.setdefault(run_id, []).append(ds.X[0])
    np.testing.assert_array_equal(np.array(out[r1.run_id]), featurize(r1).X)
    np.testing.assert_array_equal(np.array(out[r2.run_id]), featurize(r2).X)
