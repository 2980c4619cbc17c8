from datetime import datetime

import pytest

from app.bench import runner
from app.bench.runner import BENCH_HEADER, bench, bucketize, solve, validate
from app.bench.scenarios import DensityTooHigh, Scenario, gen
from app.main import main
from app.planning.anytime import AnytimeEvent
from app.planning.search import PlannerConfig
from app.storage.files import read_json, read_rows_csv, run_directory, write_json
from app.world.domain import Operation, Plan
from app.world.geometry import TableSpec


class TestGen:
    def test_scenarios_are_valid(self):
        for seed in range(5):
            scenario = gen(6, seed=seed)
            scenario.validate()
            assert scenario.n == 6
            assert scenario.robot_start == 0.0
            assert scenario.rho == pytest.approx(0.5)

    def test_same_seed_same_scenario(self):
        assert gen(4, seed=11) == gen(4, seed=11)
        assert gen(4, seed=11) != gen(4, seed=12)

    def test_overfull_table_is_rejected(self):
        with pytest.raises(DensityTooHigh):
            gen(200, TableSpec(1.0, 1.0), radius=0.05)
        with pytest.raises(DensityTooHigh):
            gen(1, TableSpec(1.0, 1.0), radius=0.6)

    def test_json_form(self, tmp_path):
        scenario = gen(3, seed=2)
        path = write_json(tmp_path / "s.json", scenario.to_dict())
        assert Scenario.from_dict(read_json(path)) == scenario

    def test_malformed_json_form(self):
        with pytest.raises(ValueError):
            Scenario.from_dict({"radius": 0.05})


class TestBucketize:
    def test_carry_forward(self):
        events = [AnytimeEvent(0.05, 10.0), AnytimeEvent(0.25, 8.0)]
        assert bucketize(events, 0.5, 100) == [(100, 10.0), (200, 10.0), (300, 8.0), (400, 8.0), (500, 8.0)]

    def test_no_solution(self):
        assert bucketize([], 0.3, 100) == [(100, None), (200, None), (300, None)]

    def test_late_event_counts_for_the_last_bucket(self):
        events = [AnytimeEvent(0.05, 10.0), AnytimeEvent(0.31, 7.0)]
        assert bucketize(events, 0.3, 100)[-1] == (300, 7.0)


class TestValidate:
    @pytest.fixture
    def solved(self, tmp_path):
        scenario = gen(3, seed=4)
        config = PlannerConfig.preset("trlb", seed=4)
        result, plan_path, events_path = solve(scenario, "trlb", config, 1.0, tmp_path)
        return scenario, Plan.from_dict(read_json(plan_path)), events_path

    def test_solver_output_passes(self, solved):
        scenario, plan, events_path = solved
        report = validate(scenario, plan)
        assert report.ok
        assert str(report).startswith("PASS")
        rows = read_rows_csv(events_path)
        assert len(rows) == 1
        assert float(rows[0]["best_cost"]) == pytest.approx(plan.total_cost)

    def test_unreachable_operation_fails(self, solved):
        scenario, plan, _ = solved
        first = plan.sequence[0]
        far = (first.standing + scenario.table.perimeter / 2.0) % scenario.table.perimeter
        broken = Plan((Operation.pick(first.obj, first.pose, far),) + plan.sequence[1:], plan.total_cost, plan.meta)
        report = validate(scenario, broken)
        if report.ok:
            pytest.skip("pose reachable from both sides of the table")
        assert "OutOfReach" in report.message

    def test_wrong_cost_fails(self, solved):
        scenario, plan, _ = solved
        report = validate(scenario, Plan(plan.sequence, plan.total_cost + 0.5, plan.meta))
        assert not report.ok
        assert "cost mismatch" in report.message

    def test_cost_is_recomputed_with_the_given_mc(self, solved):
        scenario, plan, _ = solved
        assert not validate(scenario, plan, mc=2.0).ok


class TestCommandLine:
    def test_gen_solve_validate(self, tmp_path, capsys):
        scenario_path = tmp_path / "scenario.json"
        assert main(["gen", "--n", "3", "--seed", "5", "--out", str(scenario_path)]) == 0
        assert scenario_path.exists()

        out_dir = tmp_path / "run"
        assert main(["solve", str(scenario_path), "--planner", "trlb", "--seed", "5", "--out", str(out_dir)]) == 0
        plan_path = out_dir / "trlb_single_seed5_plan.json"
        assert plan_path.exists()
        assert (out_dir / "trlb_single_seed5_events.csv").exists()

        capsys.readouterr()
        assert main(["validate", str(scenario_path), str(plan_path)]) == 0
        assert capsys.readouterr().out.startswith("PASS")

    def test_validate_fails_on_a_tampered_plan(self, tmp_path):
        scenario_path = tmp_path / "scenario.json"
        main(["gen", "--n", "2", "--seed", "1", "--out", str(scenario_path)])
        out_dir = tmp_path / "run"
        main(["solve", str(scenario_path), "--planner", "trlb", "--seed", "1", "--out", str(out_dir)])
        plan_path = out_dir / "trlb_single_seed1_plan.json"
        data = read_json(plan_path)
        data["total_cost"] += 1.0
        write_json(plan_path, data)
        assert main(["validate", str(scenario_path), str(plan_path)]) == 1

    def test_bad_input_exits_with_failure(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2]", encoding="utf-8")
        assert main(["solve", str(bad), "--planner", "trlb"]) == 1
        assert main(["gen", "--n", "500", "--radius", "0.2", "--out", str(tmp_path / "x.json")]) == 1

    def test_orla_rejects_the_multiple_strategy(self, tmp_path):
        scenario_path = tmp_path / "scenario.json"
        main(["gen", "--n", "2", "--seed", "1", "--out", str(scenario_path)])
        args = ["solve", str(scenario_path), "--planner", "orla", "--strategy", "multiple", "--out", str(tmp_path)]
        assert main(args) == 1


class TestBench:
    def test_grid_rows_and_monotone_curves(self, tmp_path):
        bench_path, summary_path = bench(
            n_list=[2, 3],
            planners=["trlb", "strap2"],
            trials=2,
            timeout=0.5,
            mc_list=[1.0],
            seed=0,
            out_dir=tmp_path,
            bucket_ms=100,
            overrides={"max_iterations": 10},
        )
        rows = read_rows_csv(bench_path)
        assert tuple(rows[0]) == BENCH_HEADER
        # 2 planners x 2 sizes x 1 mc x 2 trials x 5 buckets
        assert len(rows) == 40

        curves: dict[tuple, list[float]] = {}
        for row in rows:
            if row["best_cost"]:
                curves.setdefault((row["planner"], row["n"], row["seed"]), []).append(float(row["best_cost"]))
        for costs in curves.values():
            assert costs == sorted(costs, reverse=True)

        summary = read_rows_csv(summary_path)
        assert len(summary) == 2 * 2 * 5

    def test_crashing_planner_is_recorded_per_row(self, tmp_path, monkeypatch):
        def crash(scenario, config, cm):
            raise RuntimeError("reconstruction failed")

        monkeypatch.setitem(runner.PLANNERS, "mcts", crash)
        bench_path, _ = bench([2], ["mcts", "trlb"], 1, 0.2, [1.0], 0, tmp_path, bucket_ms=100)
        rows = read_rows_csv(bench_path)
        crashed = [r for r in rows if r["planner"] == "mcts"]
        solved = [r for r in rows if r["planner"] == "trlb"]
        assert len(crashed) == 2 and len(solved) == 2
        assert {r["status"] for r in crashed} == {"error:RuntimeError"}
        assert all(r["best_cost"] == "" for r in crashed)
        assert {r["status"] for r in solved} == {"ok"}

    def test_unknown_planner(self, tmp_path):
        with pytest.raises(ValueError):
            bench([2], ["nope"], 1, 0.1, [1.0], 0, tmp_path)


def test_run_directory_is_timestamped(tmp_path):
    path = run_directory(tmp_path, datetime(2024, 5, 1, 12, 30, 5))
    assert path == tmp_path / "2024-05-01_12-30-05"
    assert path.is_dir()
