import os
import subprocess

import pytest

import blocknas


@pytest.fixture(scope="module")
def space():
    return blocknas.SearchSpace.preset("custom:4x3", 1)


@pytest.fixture(scope="module")
def oracle(space):
    return blocknas.Oracle.synthetic(space, seed=1)


def test_preset_shapes():
    nb = blocknas.SearchSpace.preset("nb201", 0)
    assert nb.num_nodes == 6
    assert nb.candidate_count == "15625"
    assert blocknas.SearchSpace.preset("custom:2x2").candidate_count == "4"


def test_space_json_round_trip(space):
    again = blocknas.SearchSpace.from_json(space.to_json())
    assert again.fingerprint == space.fingerprint


def test_estimate_predict_base(space, oracle):
    table = blocknas.estimate(space, oracle, mode="single")
    assert table.mode == "single"
    assert table.evaluations > 0
    base = table.base_config
    pred = blocknas.predict(table, space, base, "gpu")
    truth = blocknas.evaluate(oracle, base)
    assert pred["accuracy"] == pytest.approx(truth["accuracy"], abs=1e-12)
    assert pred["latency"] == pytest.approx(truth["latency"]["gpu"], abs=1e-12)


def test_search_unconstrained_and_infeasible(space, oracle):
    table = blocknas.estimate(space, oracle, mode="full")
    res = blocknas.search(space, table, "gpu", unconstrained=True)
    assert res["status"] == "optimal"
    assert len(res["config"].split(",")) == 4
    res = blocknas.search(space, table, "gpu", lat_budget=1e-6)
    assert res["status"] == "infeasible"
    assert res["config"] is None


def test_search_requires_budget(space, oracle):
    table = blocknas.estimate(space, oracle)
    with pytest.raises(blocknas.Error) as info:
        blocknas.search(space, table, "gpu")
    assert info.value.code == "invalid_argument"


def test_solvers_agree(space, oracle):
    table = blocknas.estimate(space, oracle, mode="partial", samples=5, seed=3)
    budget = blocknas.predict(table, space, table.base_config, "gpu")["latency"]
    configs = {
        blocknas.search(space, table, "gpu", lat_budget=budget, solver=s)["config"]
        for s in ("branch_and_bound", "dinkelbach", "exhaustive")
    }
    assert len(configs) == 1


def test_validate_and_correlations(space, oracle):
    table = blocknas.estimate(space, oracle, mode="full")
    rep = blocknas.validate(space, oracle, table, "gpu", samples=100, seed=2)
    assert rep["samples"] == 100
    assert rep["latency"]["spearman"] == pytest.approx(1.0)
    assert blocknas.spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert blocknas.kendall_tau([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)


def test_fit_delta_law_reciprocal():
    flops = [10.0 * k for k in range(1, 21)]
    fits = blocknas.fit_delta_law(flops, [2.5 / f for f in flops])
    assert fits[0]["family"] == "reciprocal"
    assert fits[0]["params"][1] == pytest.approx(2.5, rel=1e-9)


def test_deployment_plan(space, oracle):
    table = blocknas.estimate(space, oracle)
    plan = blocknas.deployment_plan(space, table, "gpu", k=3)
    assert plan["reachable_count"] == "81"


def test_records_oracle():
    data = os.environ.get("BLOCKNAS_TEST_DATA")
    if not data:
        pytest.skip("test data path not set")
    space = blocknas.SearchSpace.load(os.path.join(data, "grid81_space.json"))
    oracle = blocknas.Oracle.records(space, os.path.join(data, "grid81_records.csv"))
    assert blocknas.evaluate(oracle, "0-0-0-0")["accuracy"] == pytest.approx(0.7156118143)
    with pytest.raises(blocknas.Error):
        blocknas.evaluate(oracle, [0, 0, 0, 7])


def test_cli_version():
    cli = os.environ.get("BLOCKNAS_CLI")
    if not cli:
        pytest.skip("CLI path not set")
    out = subprocess.run([cli, "--version"], capture_output=True, text=True, check=True)
    assert blocknas.__version__ in out.stdout
