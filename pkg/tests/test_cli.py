import numpy as np
import pytest

from dpdsolve.cli import (
    EXIT_CONFIG,
    EXIT_IO,
    EXIT_OK,
    EXIT_VIOLATION,
    main,
)
from dpdsolve.diagnostics import HistoryRecord, read_history_csv, write_history_csv
from dpdsolve.imaging import make_phantom, read_dpdf, write_dpdf, write_pgm


def test_missing_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_deblur_gauss_tiny_run_writes_everything(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["deblur-gauss", "--size", "16", "--iters", "3",
                 "--kernel", "3,0", "--out-dir", str(out)])
    assert code == EXIT_OK
    for name in ("recovered.pgm", "recovered.dpdf", "history.csv",
                 "degraded.pgm", "degraded.dpdf"):
        assert (out / name).exists()
    records = read_history_csv(out / "history.csv")
    assert [r.t for r in records] == [1, 2, 3]
    for rec in records:
        assert rec.snr_db is not None
        assert rec.gap is None and rec.bound is None
        assert rec.theta is not None and rec.eta is not None
        assert rec.wall_ms is None
    printed = capsys.readouterr().out
    assert "final snr_db" in printed
    img = read_dpdf(out / "recovered.dpdf")
    assert img.m == 16 and img.n == 16


def test_deblur_gauss_timing_flag_fills_wall_ms(tmp_path):
    out = tmp_path / "run"
    code = main(["deblur-gauss", "--size", "16", "--iters", "2",
                 "--kernel", "3,0", "--out-dir", str(out), "--timing"])
    assert code == EXIT_OK
    records = read_history_csv(out / "history.csv")
    assert all(r.wall_ms is not None for r in records)


def test_deblur_gauss_repeated_runs_are_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["deblur-gauss", "--size", "16", "--iters", "3",
                     "--kernel", "3,0", "--out-dir", str(out)]) == EXIT_OK
        outs.append(out)
    a, b = outs
    assert (a / "history.csv").read_bytes() == (b / "history.csv").read_bytes()
    assert (a / "recovered.dpdf").read_bytes() == (b / "recovered.dpdf").read_bytes()
    assert (a / "degraded.dpdf").read_bytes() == (b / "degraded.dpdf").read_bytes()


def test_deblur_gauss_accepts_an_existing_degraded_image(tmp_path):
    degraded = make_phantom(16, 16)
    path = tmp_path / "degraded.dpdf"
    write_dpdf(path, degraded)
    out = tmp_path / "run"
    code = main(["deblur-gauss", "--degraded-input", str(path),
                 "--iters", "2", "--kernel", "3,0", "--out-dir", str(out)])
    assert code == EXIT_OK
    # nothing was degraded here, so no degraded copies are re-written
    assert not (out / "degraded.pgm").exists()
    records = read_history_csv(out / "history.csv")
    # without a clean reference there is no SNR column to fill
    assert all(r.snr_db is None for r in records)


def test_deblur_gauss_with_clean_input_pgm(tmp_path):
    clean = make_phantom(16, 16)
    path = tmp_path / "clean.pgm"
    write_pgm(path, clean)
    out = tmp_path / "run"
    code = main(["deblur-gauss", "--input", str(path), "--iters", "2",
                 "--kernel", "3,0", "--out-dir", str(out)])
    assert code == EXIT_OK
    records = read_history_csv(out / "history.csv")
    assert all(r.snr_db is not None for r in records)


def test_deblur_gauss_rejects_regimes_the_model_cannot_satisfy(tmp_path):
    # the quadratic data term has no strong convexity, so the strongly
    # convex primal schedules must refuse to run
    code = main(["deblur-gauss", "--size", "16", "--iters", "2",
                 "--kernel", "3,0", "--regime", "strongly-convex-primal",
                 "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_CONFIG
    code = main(["deblur-gauss", "--size", "16", "--iters", "2",
                 "--kernel", "3,0", "--solver", "edpd",
                 "--regime", "strongly-convex-primal",
                 "--out-dir", str(tmp_path / "y")])
    assert code == EXIT_CONFIG
    code = main(["deblur-gauss", "--size", "16", "--iters", "2",
                 "--kernel", "3,0", "--solver", "edpd",
                 "--regime", "single-step",
                 "--out-dir", str(tmp_path / "z")])
    assert code == EXIT_CONFIG


def test_deblur_gauss_bad_kernel_spec_is_a_config_error(tmp_path):
    code = main(["deblur-gauss", "--size", "16", "--iters", "2",
                 "--kernel", "3", "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_deblur_gauss_missing_input_is_an_io_error(tmp_path):
    code = main(["deblur-gauss", "--input", str(tmp_path / "nope.pgm"),
                 "--iters", "2", "--kernel", "3,0",
                 "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_IO


def test_deblur_sp_continuation_labels_the_history(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["deblur-sp", "--size", "16", "--iters", "4",
                 "--kernel", "3", "--mu-g0", "0.03", "--halve-every", "2",
                 "--out-dir", str(out)])
    assert code == EXIT_OK
    first = (out / "history.csv").read_text().splitlines()[0]
    assert first == "# heuristic continuation"
    assert "heuristic continuation" in capsys.readouterr().out
    records = read_history_csv(out / "history.csv")
    assert all(r.bound is None for r in records)
    # the dual step tracks the halved smoothing weight: tau jumps up
    # when mu_g halves at t = 3
    assert records[2].tau > records[1].tau


def test_deblur_sp_fixed_smoothing_has_no_label(tmp_path):
    out = tmp_path / "run"
    code = main(["deblur-sp", "--size", "16", "--iters", "3",
                 "--kernel", "3", "--mu-g0", "0.03", "--halve-every", "0",
                 "--out-dir", str(out)])
    assert code == EXIT_OK
    first = (out / "history.csv").read_text().splitlines()[0]
    assert first.startswith("t,")


def test_deblur_sp_zero_smoothing_runs_the_weakly_convex_regime(tmp_path):
    out = tmp_path / "run"
    code = main(["deblur-sp", "--size", "16", "--iters", "3",
                 "--kernel", "3", "--mu-g0", "0",
                 "--out-dir", str(out)])
    assert code == EXIT_OK
    records = read_history_csv(out / "history.csv")
    # constant steps: every iteration uses the same tau
    taus = {r.tau for r in records}
    assert len(taus) == 1
    assert all(r.alpha == 1.0 for r in records)


def test_deblur_sp_even_kernel_is_a_config_error(tmp_path):
    code = main(["deblur-sp", "--size", "16", "--iters", "2",
                 "--kernel", "4", "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_synth_bench_small_run_writes_all_histories(tmp_path, capsys):
    out = tmp_path / "bench"
    code = main(["synth-bench", "--dims", "10,8", "--iters", "40",
                 "--out-dir", str(out)])
    assert code == EXIT_OK
    tags = ["ldpd-weakly-convex", "ldpd-strongly-convex-dual",
            "ldpd-strongly-convex-primal", "ldpd-single-step",
            "edpd-strongly-convex-primal", "edpd-strongly-convex-dual",
            "edpd-weakly-convex"]
    for tag in tags:
        records = read_history_csv(out / f"{tag}.csv")
        assert len(records) == 40
        assert all(r.gap is not None for r in records)
    printed = capsys.readouterr().out
    assert "all guarantees hold" in printed
    # the horizon-tuned guarantee exists only at the final iteration
    wc = read_history_csv(out / "ldpd-weakly-convex.csv")
    assert all(r.bound is None for r in wc[:-1])
    assert wc[-1].bound is not None


def test_synth_bench_bad_dims_is_a_config_error(tmp_path):
    code = main(["synth-bench", "--dims", "banana", "--iters", "10",
                 "--out-dir", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_rates_from_dir_passes_on_conforming_series(tmp_path):
    ks = range(1, 201)
    by_tag = {
        "ldpd-strongly-convex-dual": [(k, 1.0 / k**2) for k in ks],
        "edpd-strongly-convex-dual": [(k, 3.0 / k**2) for k in ks],
        "edpd-weakly-convex": [(k, 1.0 / k) for k in ks],
    }
    for tag, series in by_tag.items():
        records = [HistoryRecord(t=k, gap=g) for k, g in series]
        write_history_csv(tmp_path / f"{tag}.csv", records)
    assert main(["rates", "--from-dir", str(tmp_path)]) == EXIT_OK


def test_rates_from_dir_fails_on_flat_series(tmp_path, capsys):
    ks = range(1, 201)
    for tag in ("ldpd-strongly-convex-dual", "edpd-strongly-convex-dual"):
        records = [HistoryRecord(t=k, gap=1.0 / k**2) for k in ks]
        write_history_csv(tmp_path / f"{tag}.csv", records)
    flat = [HistoryRecord(t=k, gap=0.5) for k in ks]
    write_history_csv(tmp_path / "edpd-weakly-convex.csv", flat)
    assert main(["rates", "--from-dir", str(tmp_path)]) == EXIT_VIOLATION
    assert "FAIL" in capsys.readouterr().out


def test_rates_from_dir_missing_file_is_an_io_error(tmp_path):
    assert main(["rates", "--from-dir", str(tmp_path)]) == EXIT_IO


def test_recovered_images_round_trip_through_both_formats(tmp_path):
    out = tmp_path / "run"
    assert main(["deblur-gauss", "--size", "16", "--iters", "3",
                 "--kernel", "3,0", "--out-dir", str(out)]) == EXIT_OK
    exact = read_dpdf(out / "recovered.dpdf")
    assert exact.m == 16 and exact.n == 16
    assert np.all(np.isfinite(exact.data))
