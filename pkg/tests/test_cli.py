import json

import numpy as np
import pytest

from loadid import cli, scenarios, space


def run(argv):
    return cli.main(argv)


@pytest.fixture()
def s1_csv(tmp_path):
    path = tmp_path / "s1.csv"
    assert run(["generate", "--scenario", "S1", "--out", str(path)]) == 0
    return path


class TestGenerate:
    def test_writes_500_rows_and_manifest(self, tmp_path):
        out = tmp_path / "series.csv"
        assert run(["generate", "--scenario", "S1", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,v,p,q"
        assert len(lines) == 501
        manifest = json.loads((tmp_path / "series.csv.manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["config"]["scenario"]["truth"]["k_pm"] == 0.43

    def test_same_seed_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["generate", "--scenario", "S2", "--out", str(a), "--seed", "9",
                    "--noise-std", "0.01"]) == 0
        assert run(["generate", "--scenario", "S2", "--out", str(b), "--seed", "9",
                    "--noise-std", "0.01"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_duration_shorter_than_sag_fails_validation(self, tmp_path):
        code = run(["generate", "--scenario", "S1", "--out", str(tmp_path / "x.csv"),
                    "--duration", "1.0"])
        assert code == cli.EXIT_VALIDATION

    def test_infeasible_scenario_is_numerical_failure(self, tmp_path):
        doc = scenarios.scenario_to_doc(scenarios.builtin_scenario("S1"))
        doc["p_0"] = 50.0
        spec_path = tmp_path / "bad.json"
        spec_path.write_text(json.dumps(doc))
        code = run(["generate", "--spec", str(spec_path), "--out", str(tmp_path / "x.csv")])
        assert code == cli.EXIT_NUMERICAL

    def test_unknown_scenario(self, tmp_path):
        assert run(["generate", "--scenario", "S9", "--out", str(tmp_path / "x.csv")]) == cli.EXIT_VALIDATION


class TestPrelearn:
    def test_persists_task(self, s1_csv, tmp_path):
        lib = tmp_path / "lib"
        code = run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "t1", "--kmax", "2", "--population", "4", "--bins", "10"])
        assert code == 0
        task = lib / "t1"
        assert (task / "metadata.json").exists()
        assert (task / "signature.csv").exists()
        assert (task / "knowledge.bin").exists()
        assert (task / "trace.csv").exists()
        meta = json.loads((task / "metadata.json").read_text())
        assert meta["grid"]["bins"] == 10

    def test_knowledge_shapes_at_default_bins(self, s1_csv, tmp_path):
        from loadid import transfer

        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "t1", "--kmax", "1", "--population", "4"]) == 0
        rec = transfer.load_task(lib / "t1")
        assert len(rec.knowledge) == 13
        assert all(m.shape == (100, 100) for m in rec.knowledge)

    def test_kmax_zero_trace_length_one(self, s1_csv, tmp_path):
        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "t0", "--kmax", "0", "--population", "4", "--bins", "8"]) == 0
        trace = (lib / "t0" / "trace.csv").read_text().splitlines()
        assert len(trace) == 2  # header + single entry

    def test_refuses_overwrite_without_force(self, s1_csv, tmp_path):
        lib = tmp_path / "lib"
        args = ["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                "--name", "t1", "--kmax", "1", "--population", "4", "--bins", "8"]
        assert run(args) == 0
        assert run(args) == cli.EXIT_VALIDATION
        assert run(args + ["--force"]) == 0

    def test_missing_measurements_is_io_error(self, tmp_path):
        code = run(["prelearn", "--measurements", str(tmp_path / "nope.csv"),
                    "--library", str(tmp_path / "lib"), "--name", "x"])
        assert code == cli.EXIT_IO


class TestIdentify:
    @pytest.fixture()
    def library(self, s1_csv, tmp_path):
        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "s1", "--kmax", "3", "--population", "4", "--bins", "12",
                    "--seed", "1"]) == 0
        return lib

    def test_outputs(self, s1_csv, library, tmp_path):
        out = tmp_path / "ident"
        code = run(["identify", "--measurements", str(s1_csv), "--library", str(library),
                    "--kmax", "2", "--population", "4", "--out", str(out)])
        assert code == 0
        best = json.loads((out / "best.json").read_text())
        assert set(space.PARAM_NAMES) <= set(best["params"])
        sim_lines = (out / "similarity.csv").read_text().splitlines()
        assert sim_lines[0] == "source,su,sp,sq,r"
        row = sim_lines[1].split(",")
        assert row[0] == "s1"
        assert all(0.0 <= float(x) <= 1.0 for x in row[1:])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["mode"] == "weighted-sum"

    def test_mode_recorded(self, s1_csv, library, tmp_path):
        out = tmp_path / "ident2"
        code = run(["identify", "--measurements", str(s1_csv), "--library", str(library),
                    "--kmax", "1", "--population", "4", "--mode", "best-source",
                    "--out", str(out)])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["mode"] == "best-source"

    def test_empty_library_advises_prelearn(self, s1_csv, tmp_path):
        code = run(["identify", "--measurements", str(s1_csv),
                    "--library", str(tmp_path / "empty"), "--out", str(tmp_path / "o")])
        assert code == cli.EXIT_VALIDATION

    def test_env_var_library(self, s1_csv, library, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.LIBRARY_ENV_VAR, str(library))
        out = tmp_path / "ident3"
        code = run(["identify", "--measurements", str(s1_csv), "--kmax", "1",
                    "--population", "4", "--out", str(out)])
        assert code == 0

    def test_warm_start_not_worse_than_cold_at_seed(self, s1_csv, tmp_path):
        # paired-seed comparison of first-iteration best fitness against a
        # properly trained source for the same measurements
        from loadid import itq, transfer

        series = scenarios.read_measurements(s1_csv)
        grid = space.build_grid(12)
        train = itq.ItqConfig.prelearning(k_max=60, population=4, seed=1)
        source = itq.run_itq(series, grid, train)
        rec = transfer.record_from_result("s1", series, grid, train, source)
        config = itq.ItqConfig.transfer(k_max=1, population=4, seed=7)
        warm, _ = transfer.run_transfer_identify(series, [rec], grid, config)
        cold = itq.run_itq(series, grid, config)
        assert warm.trace[1] <= cold.trace[1] + 1e-15


class TestConfigFile:
    def test_precedence_defaults_file_flags(self, s1_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"itq": {"epsilon": 0.9, "k_max": 7}}))
        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "t", "--config", str(cfg), "--kmax", "2",
                    "--population", "4", "--bins", "8"]) == 0
        manifest = json.loads((lib / "t" / "manifest.json").read_text())
        assert manifest["config"]["itq"]["epsilon"] == 0.9  # from file
        assert manifest["config"]["itq"]["k_max"] == 2  # flag wins

    def test_unknown_key_rejected(self, s1_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"itq": {"nope": 1}}))
        code = run(["prelearn", "--measurements", str(s1_csv),
                    "--library", str(tmp_path / "lib"), "--name", "t",
                    "--config", str(cfg), "--kmax", "1", "--population", "4"])
        assert code == cli.EXIT_VALIDATION

    def test_baseline_and_similarity_sections(self, s1_csv, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "baseline": {"pso_inertia": 0.5},
            "similarity": {"w1": 1.0, "w2": 0.0, "w3": 0.0},
        }))
        out = tmp_path / "cmp"
        assert run(["compare", "--measurements", str(s1_csv), "--optimizers", "pso",
                    "--runs", "1", "--kmax", "2", "--population", "4",
                    "--config", str(cfg), "--out", str(out)]) == 0
        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "s1", "--kmax", "1", "--population", "4", "--bins", "8"]) == 0
        ident = tmp_path / "id"
        assert run(["identify", "--measurements", str(s1_csv), "--library", str(lib),
                    "--kmax", "1", "--population", "4", "--config", str(cfg),
                    "--out", str(ident)]) == 0
        manifest = json.loads((ident / "manifest.json").read_text())
        assert manifest["config"]["weights"] == {"w1": 1.0, "w2": 0.0, "w3": 0.0}


class TestCompare:
    def test_unknown_optimizer_listed(self, s1_csv, tmp_path):
        code = run(["compare", "--measurements", str(s1_csv), "--optimizers", "itq,nope",
                    "--out", str(tmp_path / "c")])
        assert code == cli.EXIT_VALIDATION

    def test_counts_and_summary(self, s1_csv, tmp_path):
        out = tmp_path / "cmp"
        code = run(["compare", "--measurements", str(s1_csv), "--optimizers", "itq,woa",
                    "--runs", "2", "--kmax", "2", "--population", "4", "--bins", "8",
                    "--out", str(out)])
        assert code == 0
        summary = (out / "summary.csv").read_text().splitlines()
        assert len(summary) == 3
        assert summary[0].startswith("optimizer,runs,")
        assert summary[1].split(",")[1] == "2"
        results = (out / "results.csv").read_text().splitlines()
        rows = [r.split(",") for r in results[1:]]
        assert {r[0] for r in rows} == {"itq", "woa"}
        assert {r[1] for r in rows} == {"0", "1"}

    def test_results_byte_identical_across_reruns(self, s1_csv, tmp_path):
        outs = []
        for name in ("c1", "c2"):
            out = tmp_path / name
            assert run(["compare", "--measurements", str(s1_csv),
                        "--optimizers", "itq,pso,lm", "--runs", "2", "--kmax", "2",
                        "--population", "4", "--bins", "8", "--out", str(out)]) == 0
            outs.append(out)
        assert (outs[0] / "results.csv").read_bytes() == (outs[1] / "results.csv").read_bytes()
        assert (outs[0] / "summary.csv").read_bytes() == (outs[1] / "summary.csv").read_bytes()

    def test_single_run_median_equals_final(self, s1_csv, tmp_path):
        out = tmp_path / "cmp1"
        code = run(["compare", "--measurements", str(s1_csv), "--optimizers", "pso",
                    "--runs", "1", "--kmax", "2", "--population", "4", "--out", str(out)])
        assert code == 0
        line = (out / "summary.csv").read_text().splitlines()[1].split(",")
        final_rows = [
            r.split(",") for r in (out / "results.csv").read_text().splitlines()[1:]
            if r.startswith("pso,")
        ]
        final = float(final_rows[-1][3])
        assert float(line[4]) == final  # median of one run is that run


class TestReport:
    def test_five_number_of_known_sample(self):
        assert cli.five_number([5, 1, 4, 2, 3]) == (1.0, 2.0, 3.0, 4.0, 5.0)

    def test_quartiles_match_sort_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            data = rng.normal(size=rng.integers(1, 40))
            q1, med, q3 = cli.quartiles(data)
            assert q1 == pytest.approx(np.percentile(data, 25, method="linear"), abs=1e-12)
            assert med == pytest.approx(np.percentile(data, 50, method="linear"), abs=1e-12)
            assert q3 == pytest.approx(np.percentile(data, 75, method="linear"), abs=1e-12)

    def test_report_files(self, s1_csv, tmp_path):
        cmp_out = tmp_path / "cmp"
        assert run(["compare", "--measurements", str(s1_csv), "--optimizers", "itq",
                    "--runs", "2", "--kmax", "2", "--population", "4", "--bins", "8",
                    "--out", str(cmp_out)]) == 0
        ident = tmp_path / "id"
        lib = tmp_path / "lib"
        assert run(["prelearn", "--measurements", str(s1_csv), "--library", str(lib),
                    "--name", "s1", "--kmax", "2", "--population", "4", "--bins", "8"]) == 0
        assert run(["identify", "--measurements", str(s1_csv), "--library", str(lib),
                    "--kmax", "1", "--population", "4", "--out", str(ident)]) == 0
        rep = tmp_path / "rep"
        code = run(["report", "--results", str(cmp_out / "results.csv"), "--out", str(rep),
                    "--measurements", str(s1_csv), "--params", str(ident / "best.json")])
        assert code == 0
        overlay = (rep / "overlay.csv").read_text().splitlines()
        assert len(overlay) == 501
        assert overlay[0] == "t,v,p_meas,q_meas,p_est,q_est"
        assert (rep / "boxplot.csv").exists()
        assert (rep / "convergence_itq.csv").exists()

    def test_bad_results_header(self, tmp_path):
        bad = tmp_path / "r.csv"
        bad.write_text("a,b\n")
        assert run(["report", "--results", str(bad), "--out", str(tmp_path / "rep")]) == cli.EXIT_IO
