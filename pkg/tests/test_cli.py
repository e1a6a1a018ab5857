import json

import numpy as np
import pytest

from qarseg.cli import InputError, load_report, main, read_series_csv
from qarseg.experiment import (
    ExperimentSummary,
    ModeSummary,
    ReplicationResult,
    parse_tau_mode,
    replication_seeds,
)

FAST_GA = ["--islands", "3", "--subpopulation", "8", "--migrants", "1",
           "--max-generations", "15", "--stall-limit", "3", "--max-order", "2"]


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def shift_series(n=200, cut=130, rng_seed=1):
    rng = np.random.default_rng(rng_seed)
    return np.concatenate([rng.normal(0.0, 1.0, cut), rng.normal(12.0, 1.0, n - cut)])


class TestReadSeriesCsv:
    def test_one_column(self, tmp_path):
        ts = read_series_csv(write(tmp_path / "a.csv", "1.5\n2.5\n3.5\n"))
        np.testing.assert_allclose(ts.values, [1.5, 2.5, 3.5])

    def test_two_columns_with_header(self, tmp_path):
        ts = read_series_csv(write(tmp_path / "a.csv", "t,y\n1,10.0\n2,20.0\n"))
        np.testing.assert_allclose(ts.values, [10.0, 20.0])

    def test_crlf_and_blank_lines(self, tmp_path):
        ts = read_series_csv(write(tmp_path / "a.csv", "1.0\r\n\r\n2.0\r\n"))
        np.testing.assert_allclose(ts.values, [1.0, 2.0])

    def test_non_numeric_row_reports_row_number(self, tmp_path):
        path = write(tmp_path / "a.csv", "1.0\n2.0\noops\n4.0\n")
        with pytest.raises(InputError, match="row 3"):
            read_series_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError):
            read_series_csv(str(tmp_path / "missing.csv"))

    def test_empty_file(self, tmp_path):
        with pytest.raises(InputError):
            read_series_csv(write(tmp_path / "a.csv", ""))

    def test_nan_rejected(self, tmp_path):
        with pytest.raises(InputError):
            read_series_csv(write(tmp_path / "a.csv", "1.0\nnan\n"))


class TestSegmentCommand:
    def test_finds_single_shift(self, tmp_path):
        y = shift_series()
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in y) + "\n")
        out = str(tmp_path / "report.json")
        rc = main(["segment", inp, "--tau", "0.5", "--out", out, *FAST_GA])
        assert rc == 0
        doc = load_report(out)
        assert doc["kind"] == "segmentation_report"
        assert doc["m_hat"] == 1
        assert abs(doc["breaks"][0] - 130) <= 8
        assert abs(doc["relative_locations"][0] - 0.65) <= 0.05

    def test_constant_series_no_breaks(self, tmp_path):
        inp = write(tmp_path / "in.csv", "5.0\n" * 100)
        out = str(tmp_path / "report.json")
        rc = main(["segment", inp, "--tau", "0.5", "--out", out, *FAST_GA])
        assert rc == 0
        doc = load_report(out)
        assert doc["m_hat"] == 0
        seg0 = doc["quantiles"][0]["segments"][0]
        assert seg0["degenerate"] is True
        assert seg0["loss"] == pytest.approx(0.0, abs=1e-9)

    def test_reports_are_byte_identical(self, tmp_path):
        y = shift_series(n=150, cut=90)
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in y) + "\n")
        out1, out2 = str(tmp_path / "r1.json"), str(tmp_path / "r2.json")
        args = ["segment", inp, "--tau", "0.25,0.75", "--seed", "3", *FAST_GA]
        assert main(args + ["--out", out1]) == 0
        assert main(args + ["--out", out2]) == 0
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()

    def test_emit_plot_data(self, tmp_path):
        y = shift_series(n=150, cut=90)
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in y) + "\n")
        out = str(tmp_path / "r.json")
        plot = tmp_path / "plot.csv"
        rc = main(["segment", inp, "--tau", "0.5", "--out", out,
                   "--emit-plot-data", str(plot), *FAST_GA])
        assert rc == 0
        lines = plot.read_text().splitlines()
        assert lines[0] == "t,y,fit_tau_0.5,is_break"
        assert len(lines) == 151
        doc = load_report(out)
        flagged = [int(l.split(",")[0]) for l in lines[1:] if l.endswith(",1")]
        assert flagged == doc["breaks"]

    def test_explicit_weights_are_normalized(self, tmp_path):
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in shift_series(n=120, cut=60)) + "\n")
        out = str(tmp_path / "r.json")
        rc = main(["segment", inp, "--tau", "0.25,0.75", "--weights", "1,3",
                   "--out", out, *FAST_GA])
        assert rc == 0
        doc = load_report(out)
        weights = [q["weight"] for q in doc["quantiles"]]
        assert weights == pytest.approx([0.25, 0.75])

    def test_optimal_weights_accepted(self, tmp_path):
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in shift_series(n=120, cut=60)) + "\n")
        out = str(tmp_path / "r.json")
        rc = main(["segment", inp, "--tau", "0.25,0.5,0.75", "--weights", "optimal",
                   "--out", out, *FAST_GA])
        assert rc == 0
        doc = load_report(out)
        weights = [q["weight"] for q in doc["quantiles"]]
        assert sum(weights) == pytest.approx(1.0)
        # symmetric reference density gives symmetric weights
        assert weights[0] == pytest.approx(weights[2])
        assert weights != pytest.approx([1 / 3, 1 / 3, 1 / 3])

    @pytest.mark.parametrize("tau", ["1.5", "0.75,0.25", "0.5,0.5"])
    def test_bad_tau_exits_2(self, tmp_path, tau):
        inp = write(tmp_path / "in.csv", "1.0\n2.0\n")
        assert main(["segment", inp, "--tau", tau, "--out", str(tmp_path / "r.json")]) == 2

    def test_timing_only_when_requested(self, tmp_path):
        inp = write(tmp_path / "in.csv", "\n".join(f"{float(v)!r}" for v in shift_series(n=120, cut=60)) + "\n")
        out = str(tmp_path / "r.json")
        main(["segment", inp, "--tau", "0.5", "--out", out, *FAST_GA])
        assert "timing" not in load_report(out)
        main(["segment", inp, "--tau", "0.5", "--out", out, "--timing", *FAST_GA])
        assert load_report(out)["timing"]["wall_time_s"] > 0


class TestSimulateCommand:
    def test_writes_series_and_metadata(self, tmp_path):
        out = str(tmp_path / "sim.csv")
        rc = main(["simulate", "--preset", "sim1", "--n", "64", "--seed", "4", "--out", out])
        assert rc == 0
        ts = read_series_csv(out)
        assert ts.n == 64
        meta = json.loads((tmp_path / "sim.csv.meta.json").read_text())
        assert meta["true_breaks"] == [32, 48]
        assert meta["true_m"] == 2

    def test_roundtrip_preserves_values(self, tmp_path):
        from qarseg.simgen import simulate_preset

        out = str(tmp_path / "sim.csv")
        main(["simulate", "--preset", "sim2", "--n", "50", "--seed", "9", "--out", out])
        direct = simulate_preset("sim2", 50, np.random.default_rng(9))
        np.testing.assert_array_equal(read_series_csv(out).values, direct.series.values)

    def test_nonpositive_n_exits_2(self, tmp_path):
        assert main(["simulate", "--preset", "sim1", "--n", "0",
                     "--out", str(tmp_path / "x.csv")]) == 2

    def test_unknown_preset_rejected_by_parser(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--preset", "nope", "--n", "10",
                  "--out", str(tmp_path / "x.csv")])
        assert exc.value.code == 2


class TestExperimentCommand:
    def test_null_preset_end_to_end(self, tmp_path):
        out = str(tmp_path / "exp.json")
        rc = main(["experiment", "--preset", "sim2", "--n", "200", "--reps", "2",
                   "--tau", "0.5", "--out", out, *FAST_GA])
        assert rc == 0
        doc = json.loads((tmp_path / "exp.json").read_text())
        assert doc["kind"] == "experiment_summary"
        assert doc["true_m"] == 0
        mode = doc["modes"][0]
        assert mode["tau"] == "0.5"
        assert len(mode["replications"]) == 2
        csv_text = (tmp_path / "exp.csv").read_text()
        assert csv_text.splitlines()[0] == "tau,metric,key,value"

    def test_unknown_preset_exits_2(self, tmp_path):
        assert main(["experiment", "--preset", "nope", "--n", "100", "--reps", "1",
                     "--tau", "0.5", "--out", str(tmp_path / "x.json")]) == 2

    def test_bad_reps_exits_2(self, tmp_path):
        assert main(["experiment", "--preset", "sim2", "--n", "100", "--reps", "0",
                     "--tau", "0.5", "--out", str(tmp_path / "x.json")]) == 2


class TestSummaryHelpers:
    def test_parse_tau_mode(self):
        assert parse_tau_mode("mult").taus == (0.25, 0.5, 0.75)
        assert parse_tau_mode("0.3").taus == (0.3,)

    def test_replication_seeds_are_stable_and_distinct(self):
        rng_a, seed_a = replication_seeds(5, 0)
        rng_b, seed_b = replication_seeds(5, 0)
        assert seed_a == seed_b
        assert rng_a.uniform() == rng_b.uniform()
        _, seed_c = replication_seeds(5, 1)
        assert seed_c != seed_a

    def test_single_rep_std_is_blank_in_csv(self):
        mode = ModeSummary(
            tau_mode="0.5",
            results=(ReplicationResult(rep=0, m_hat=1, lambdas=(0.5,), orders=(1, 1)),),
            true_m=1,
        )
        summary = ExperimentSummary(
            preset="sim3", n=100, reps=1, seed=0, true_m=1,
            true_lambdas=(0.5,), modes=(mode,),
        )
        rows = summary.csv_rows()
        std_rows = [r for r in rows if r[1] == "lambda_std"]
        assert std_rows == [("0.5", "lambda_std", "1", "")]
        assert mode.conditional_lambda_stats() == [(0.5, None)]


class TestLoadReport:
    def test_rejects_future_major_version(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(json.dumps({"schema_version": "2.0"}))
        with pytest.raises(InputError):
            load_report(str(path))

    def test_accepts_minor_bump(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text(json.dumps({"schema_version": "1.3", "m_hat": 0}))
        assert load_report(str(path))["m_hat"] == 0
