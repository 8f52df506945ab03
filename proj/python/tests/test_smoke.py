import math

import numpy as np
import pytest

import gibbsmf


def small_problem(seed=3):
    data = gibbsmf.synthetic(40, 30, 2, train_cells=600, test_cells=150, noise_sd=0.05, seed=seed)
    return data


def same_trace(a, b):
    # rmse_avg is NaN during burn-in
    key = lambda t: [{k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()} for r in t]
    return key(a) == key(b)


def make_session(data, **kw):
    rows, cols, vals = data["train"]
    trows, tcols, tvals = data["test"]
    opts = dict(num_latent=2, burnin=20, nsamples=30, seed=1)
    opts.update(kw)
    return gibbsmf.Session(40, 30, rows, cols, vals, trows, tcols, tvals, **opts)


def test_run_recovers_low_rank():
    data = small_problem()
    session = make_session(data, noise="fixed:400")
    trace = session.run()
    assert len(trace) == 50
    assert trace[-1]["phase"] == "sample"
    assert session.iterations_done == session.total_iterations == 50
    assert trace[-1]["rmse_avg"] < 0.2
    assert session.rmse() == pytest.approx(trace[-1]["rmse_avg"], abs=1e-12)


def test_factors_shape_and_prediction():
    data = small_problem()
    session = make_session(data)
    session.run()
    u = session.factors(0)
    v = session.factors(1)
    assert u.shape == (2, 40) and v.shape == (2, 30)
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(v))
    mean, sd = session.predict(int(data["test"][0][0]), int(data["test"][1][0]))
    assert math.isfinite(mean) and sd >= 0.0
    with pytest.raises(IndexError):
        session.factors(2)


def test_same_seed_same_trace_across_threads():
    data = small_problem()
    a = make_session(data, threads=1, split_threshold=1).run()
    b = make_session(data, threads=2, split_threshold=4096).run()
    assert same_trace(a, b)


def test_save_load_resume(tmp_path):
    data = small_problem()
    full = make_session(data)
    full_trace = full.run()

    first = make_session(data)
    for _ in range(17):
        first.step()
    first.save(str(tmp_path / "snap"))
    resumed = make_session(data)
    resumed.load(str(tmp_path / "snap"))
    assert resumed.iterations_done == 17
    assert same_trace(resumed.run(), full_trace[17:])
    np.testing.assert_array_equal(resumed.factors(0), full.factors(0))

    out = gibbsmf.predict(str(tmp_path / "snap"), [(0, 0), (3, 4)])
    assert out.shape == (2, 2)


def test_matrix_market_round_trip(tmp_path):
    rows = np.array([0, 2, 1])
    cols = np.array([1, 0, 2])
    vals = np.array([1.5, -2.25, 1e-17])
    path = str(tmp_path / "m.mtx")
    gibbsmf.write_coordinate(path, 3, 4, rows, cols, vals)
    (shape, (r, c, v)) = gibbsmf.read_matrix_market(path)
    assert shape == (3, 4)
    got = sorted(zip(r.tolist(), c.tolist(), v.tolist()))
    assert got == sorted(zip(rows.tolist(), cols.tolist(), vals.tolist()))

    dense = np.arange(6.0).reshape(2, 3) / 7.0
    apath = str(tmp_path / "a.mtx")
    gibbsmf.write_array(apath, dense)
    np.testing.assert_array_equal(gibbsmf.read_matrix_market(apath), dense)


def test_errors_map_to_python_exceptions(tmp_path):
    bad = tmp_path / "bad.mtx"
    bad.write_text("not a matrix\n")
    with pytest.raises(gibbsmf.DataError):
        gibbsmf.read_matrix_market(str(bad))
    data = small_problem()
    with pytest.raises((gibbsmf.UsageError, ValueError)):
        make_session(data, preset="nope")


def test_bench_checksums_agree():
    rows = gibbsmf.bench("accumulate", num_latent=4, reps=2, entries=5000,
                         split_thresholds=[1, 100000], threads=[2])
    assert len(rows) == 2
    assert rows[0]["checksum"] == rows[1]["checksum"]
