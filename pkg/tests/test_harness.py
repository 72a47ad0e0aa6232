"""Harness machinery: sweeps, false-tie search, interleaving study,
benchmarks, fuzzing, witnesses, and the CLI."""

import json

import pytest

from coedit.bench import bench_scaling, bench_tombstone, records_to_csv
from coedit.cli import main
from coedit.fuzz import fuzz_convergence, random_script, replay_fuzz_witness
from coedit.interleave import scenario_interleaving
from coedit.sweeps import (
    replay_concurrent_witness,
    search_ft_puzzle,
    sweep_concurrent_convergence,
)
from coedit.witness import load_witnesses, save_witnesses


class TestFalseTieSearch:
    def test_naive_left_finds_witnesses(self):
        report = search_ft_puzzle(max_ops=2, doc_len=1)
        assert report.witnesses

    def test_site_order_same_space_clean(self):
        report = search_ft_puzzle(max_ops=2, doc_len=1, tie_break="site-order")
        assert not report.witnesses

    def test_single_op_no_concurrency(self):
        report = search_ft_puzzle(max_ops=1, doc_len=1)
        assert not report.witnesses

    def test_witness_replays_to_divergence(self):
        report = search_ft_puzzle(max_ops=2, doc_len=1)
        w = report.witnesses[0]
        texts1 = replay_concurrent_witness(w)
        texts2 = replay_concurrent_witness(w)
        assert texts1 == texts2  # bit-exact replay
        assert len(texts1) > 1  # still divergent


class TestSweep:
    def test_small_spaces_clean_for_all_engines(self):
        for engine in ("ot", "woot", "logoot"):
            report = sweep_concurrent_convergence(engine, max_ops=2, max_doc_len=1)
            assert report.clean, engine
            assert report.cases > 0

    def test_symmetry_dedupe_halves_without_losing_findings(self):
        full = sweep_concurrent_convergence(
            "ot", max_ops=2, max_doc_len=1, tie_break="naive-left", symmetry_dedupe=False
        )
        half = sweep_concurrent_convergence(
            "ot", max_ops=2, max_doc_len=1, tie_break="naive-left", symmetry_dedupe=True
        )
        assert half.cases < full.cases
        assert bool(half.witnesses) == bool(full.witnesses) == True  # noqa: E712

    def test_woot_permutation_mode_drains(self):
        report = sweep_concurrent_convergence(
            "woot", max_ops=2, max_doc_len=1, mode="permutations"
        )
        assert report.clean and report.stalls == 0


class TestInterleaving:
    def test_ot_string_ops_always_contiguous(self):
        r = scenario_interleaving("Alice", "Bob", "ot", seeds=20)
        assert r.contiguous == r.runs == 20
        assert r.converged == 20

    def test_woot_chained_typing_contiguous(self):
        r = scenario_interleaving("Alice", "Bob", "woot", seeds=20)
        assert r.contiguous == 20

    def test_logoot_uniform_interleaves_sometimes(self):
        r = scenario_interleaving("Alice", "Bob", "logoot", seeds=100, strategy="uniform")
        assert r.converged == 100
        assert r.noncontiguous >= 1
        assert r.noncontiguous_examples


class TestBench:
    def test_tombstone_counting_small(self):
        rec = bench_tombstone(100, 0.5, "woot")[0]
        # 100 typed + 20 probe inserts, half of the 100 deleted
        assert rec.space_proxy == 100 + 20 + 2
        assert rec.deletions == 50

    def test_logoot_space_tracks_visible(self):
        rec = bench_tombstone(100, 0.5, "logoot")[0]
        assert rec.doc_size == 100 - 50 + 20
        m = rec.extra["engine_metrics"]
        assert m["visible"] == rec.doc_size

    def test_scaling_smoke_and_csv(self):
        recs = bench_scaling([200, 400], 4, "ot", windows=1)
        csv = records_to_csv(recs)
        assert csv.splitlines()[0].startswith("engine,workload")
        assert len(csv.splitlines()) == len(recs) + 1
        for r in recs:
            assert r.work_per_remote_max <= 4 * 4

    def test_ot_counts_independent_of_doc_size(self):
        recs = bench_scaling([300, 3000], 5, "ot", windows=2)
        one_sided = [r for r in recs if r.workload == "scaling one-sided"]
        assert one_sided[0].work_per_remote_max == one_sided[1].work_per_remote_max


class TestFuzz:
    def test_clean_sample(self):
        for engine in ("ot", "woot", "logoot"):
            summary = fuzz_convergence(engine, runs=12)
            assert summary.clean, engine
            assert summary.converged == 12

    def test_zero_runs_empty_summary(self):
        summary = fuzz_convergence("ot", runs=0)
        assert summary.runs == 0 and not summary.witnesses

    def test_divergence_minimized_and_replayable(self):
        # the flawed tie-break makes divergence findable, exercising the
        # minimizer and witness replay machinery end to end
        summary = fuzz_convergence("ot", runs=30, tie_break="naive-left", ops_per_site=4)
        assert summary.divergences >= 1
        w = summary.witnesses[0]
        texts1, texts2 = replay_fuzz_witness(w), replay_fuzz_witness(w)
        assert texts1 == texts2
        assert len(set(texts1.values())) > 1
        assert len(w.intents) <= 12  # minimizer stripped ops

    def test_script_generation_deterministic(self):
        assert random_script(7) == random_script(7)


class TestWitnessIO:
    def test_round_trip(self, tmp_path):
        report = search_ft_puzzle(max_ops=2, doc_len=1)
        path = tmp_path / "w.json"
        save_witnesses(report.witnesses, path)
        loaded = load_witnesses(path)
        assert loaded == report.witnesses


class TestCli:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["fuzz", "--no-such-flag"])
        assert exc.value.code == 2

    def test_missing_scenario_exits_2(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "missing.json")]) == 2

    def test_run_scenario_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(["run", "scenarios/alice-bob.json", "--engine", "ot", "--out", str(out)])
        assert code == 0
        report = json.loads(out.read_text())
        assert report["converged"] is True
        assert set(report["texts"].values()) == {"AliceBob"}

    def test_fuzz_clean_exit(self, tmp_path):
        out = tmp_path / "fuzz.json"
        code = main(
            ["fuzz", "--runs", "5", "--engines", "woot", "--out", str(out)]
        )
        assert code == 0
        data = json.loads(out.read_text())
        assert data["summaries"][0]["divergences"] == 0

    def test_search_ft_reports_both_policies(self, tmp_path):
        out = tmp_path / "ft.json"
        code = main(["search-ft", "--max-ops", "2", "--doc-len", "1", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert data["naive_left"]["witnesses"]
        assert not data["site_order"]["witnesses"]

    def test_bench_csv_output(self, tmp_path):
        out = tmp_path / "bench.csv"
        code = main(
            [
                "bench-tombstone",
                "--insertions",
                "50",
                "--fractions",
                "0.5",
                "--engines",
                "woot",
                "--csv",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert out.read_text().startswith("engine,workload")

    def test_interleave_report(self, tmp_path):
        out = tmp_path / "il.json"
        code = main(["interleave", "--seeds", "10", "--out", str(out)])
        assert code == 0
        data = json.loads(out.read_text())
        assert {r["engine"] for r in data["reports"]} == {"ot", "woot", "logoot"}
