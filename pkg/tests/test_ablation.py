"""Tests for ablation grids and the tau monotonicity check."""

import pytest

from src.agents.factory import build_backends
from src.core.errors import ConfigurationError
from src.core.models import SelectionConfig
from src.evaluation.ablation import Variant, ablate, load_grid, parse_grid, tau_monotonicity, variant_config
from src.evaluation.harness import evaluate


@pytest.fixture
def factory(stub_config):
    run_config = stub_config()

    def make(selection: SelectionConfig):
        return build_backends(run_config.model_copy(update={"selection": selection}), use_cache=False)

    return make


def test_parse_grid_with_sweep():
    grid = parse_grid({"baseline": "r3", "variants": {"r3": {}, "fmv": {"mode": "fmv"}}, "sweep": {"tau": [0.0, 0.5]}})
    assert [v.name for v in grid.variants] == ["r3", "fmv", "tau=0.0", "tau=0.5"]
    assert grid.variants[3].overrides == {"tau": 0.5}


def test_parse_grid_list_form():
    grid = parse_grid({"variants": [{"name": "single", "overrides": {"order_policy": "single"}}]})
    assert grid.baseline == "r3"
    assert grid.variants[0].overrides == {"order_policy": "single"}


@pytest.mark.parametrize(
    "document",
    [
        {},
        {"variants": [{"name": "a"}, {"name": "a"}]},
        {"variants": {"tau=0.5": {}}, "sweep": {"tau": [0.5]}},
        ["r3"],
    ],
)
def test_parse_grid_rejects(document):
    with pytest.raises(ConfigurationError):
        parse_grid(document)


def test_load_grid(tmp_path):
    path = tmp_path / "grid.yaml"
    path.write_text("variants:\n  r3: {}\n  fmv: {mode: fmv}\n", encoding="utf-8")
    assert [v.name for v in load_grid(path).variants] == ["r3", "fmv"]
    with pytest.raises(ConfigurationError):
        load_grid(tmp_path / "missing.yaml")


def test_variant_config_validates():
    base = SelectionConfig(resampling="off")
    assert variant_config(base, Variant(name="fmv", overrides={"mode": "fmv"})).mode == "fmv"
    with pytest.raises(ConfigurationError):
        variant_config(base, Variant(name="bad", overrides={"tau": 2.0}))


async def test_r3_against_fmv_on_chlorine_task(task_map, pools, stub_config, factory):
    grid = parse_grid({"baseline": "r3", "variants": {"r3": {}, "fmv": {"mode": "fmv"}}})
    report = await ablate([task_map["t01"]], stub_config().selection, grid, factory, pools=pools)

    by_name = {v.name: v for v in report.variants}
    assert by_name["r3"].report.ex == 100.0
    assert by_name["fmv"].report.ex == 0.0
    assert by_name["fmv"].delta_ex == -100.0
    assert by_name["r3"].delta_ex == 0.0
    assert report.tau_check.monotone
    assert report.tau_check.n_traces == 1


async def test_tau_sweep_on_fixture_suite(tasks, pools, stub_config, factory):
    grid = parse_grid({"baseline": "r3", "variants": {"r3": {}}, "sweep": {"tau": [0.0, 0.05, 0.5, 1.0]}})
    report = await ablate(tasks, stub_config().selection, grid, factory, pools=pools)

    check = report.tau_check
    assert check.monotone
    assert check.taus == (0.0, 0.05, 0.25, 0.5, 1.0)
    means = [m for m in check.mean_r_list if m is not None]
    assert means == sorted(means, reverse=True)
    rows = report.rows()
    assert [r["variant"] for r in rows] == ["r3", "tau=0.0", "tau=0.05", "tau=0.5", "tau=1.0"]
    assert rows[0]["ex"] == 70.0


async def test_fmv_baseline_has_no_tau_check(task_map, pools, stub_config, factory):
    grid = parse_grid({"baseline": "fmv", "variants": {"fmv": {"mode": "fmv"}}})
    report = await ablate([task_map["t01"]], stub_config().selection, grid, factory, pools=pools)
    assert report.tau_check is None


async def test_tau_monotonicity_from_traces(tasks, pools, stub_config, factory):
    config = stub_config().selection
    traces = []
    await evaluate(tasks, config, factory(config), pools=pools, trace_sink=traces.append, progress=False)
    check = tau_monotonicity(traces, config)
    assert check.monotone
    assert check.n_traces == 10
    assert len(check.mean_r_list) == 5
