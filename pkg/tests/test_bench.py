import csv

from tsvft.bench import BenchConfig, run_bench, summarize, worker_count


def test_worker_count(monkeypatch):
    monkeypatch.setenv("TSVTOL_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(0) == 1
    monkeypatch.setenv("TSVTOL_WORKERS", "x")
    assert worker_count() == 1


def test_summarize_counts_baseline_infeasible_as_win():
    rows = [
        {"instance": "a", "mode": "adaptive", "status": "ok", "total_stsvs": 5, "max_mux_ports": 3},
        {"instance": "a", "mode": "fixed-k3", "status": "ok", "total_stsvs": 10, "max_mux_ports": 4},
        {"instance": "b", "mode": "adaptive", "status": "ok", "total_stsvs": 7, "max_mux_ports": 3},
        {"instance": "b", "mode": "fixed-k3", "status": "infeasible", "total_stsvs": "", "max_mux_ports": ""},
    ]
    s = {r["mode"]: r for r in summarize(rows)}
    assert s["adaptive"]["not_worse_than_baseline"] == 2
    assert s["adaptive"]["paired_with_baseline"] == 1
    assert s["adaptive"]["mean_rel_stsvs_vs_baseline_pct"] == -50.0
    assert s["fixed-k3"]["infeasible"] == 1


def test_small_bench_writes_outputs(tmp_path):
    cfg = BenchConfig(out_dir=tmp_path / "a", count=2, n_min=20, n_max=30, sweep_n=20,
                      sweep_targets=(0.99, 0.995), workers=1)
    info = run_bench(cfg)
    for name in ("matrix.csv", "summary.csv", "sweep.csv", "timing.csv", "matrix.png", "sweep.png"):
        assert (tmp_path / "a" / name).stat().st_size > 0
    with (tmp_path / "a" / "matrix.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6 and {r["mode"] for r in rows} == {"adaptive", "kcap3", "fixed-k3"}
    assert info["workers"] == 1

    cfg2 = BenchConfig(out_dir=tmp_path / "b", count=2, n_min=20, n_max=30, sweep_n=20,
                       sweep_targets=(0.99, 0.995), workers=2, plots=False)
    run_bench(cfg2)
    for name in ("matrix.csv", "summary.csv", "sweep.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
