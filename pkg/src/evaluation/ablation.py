"""Ablation sweeps: one evaluation per named config variant.

A grid document (YAML or JSON) lists variants as overrides of the base
SelectionConfig:

    baseline: r3
    variants:
      r3: {}
      fmv: {mode: fmv}
      no_pointwise: {pointwise_enabled: false}
    sweep:
      tau: [0.0, 0.05, 0.5, 1.0]

Each `sweep` value becomes a variant named "<field>=<value>".
"""

import logging
from pathlib import Path
from typing import Any, Callable, Optional

import yaml
from pydantic import Field, ValidationError

from ..agents.factory import Backends
from ..core.errors import ConfigurationError
from ..core.models import Record, SelectionConfig, SelectionTrace, Task
from ..selection.pipeline import rescore
from .harness import EvalReport, evaluate
from .metrics import ratio

logger = logging.getLogger(__name__)

BackendsFactory = Callable[[SelectionConfig], Backends]
DEFAULT_TAUS = (0.0, 0.05, 0.25, 0.5, 1.0)


class Variant(Record):
    name: str
    overrides: dict[str, Any] = Field(default_factory=dict)


class Grid(Record):
    baseline: str = "r3"
    variants: tuple[Variant, ...]


class TauCheck(Record):
    """Mean r_list per tau, replayed from the baseline's recorded votes."""

    taus: tuple[float, ...]
    mean_r_list: tuple[Optional[float], ...]
    monotone: bool  # no group's r_list ever increases with tau
    n_traces: int


class VariantResult(Record):
    name: str
    config: SelectionConfig
    report: EvalReport
    delta_ex: Optional[float] = None


class AblationReport(Record):
    baseline: str
    variants: tuple[VariantResult, ...]
    tau_check: Optional[TauCheck] = None

    def rows(self) -> list[dict]:
        """Sweep table rows: variant, ex, n_included, n_excluded, resample_rate, wall_ms."""
        return [
            {
                "variant": v.name,
                "ex": v.report.ex,
                "n_included": v.report.n_included,
                "n_excluded": v.report.n_excluded,
                "resample_rate": "" if v.report.resample_rate is None else v.report.resample_rate,
                "wall_ms": v.report.timings.get("wall_ms", ""),
            }
            for v in self.variants
        ]


def parse_grid(data: dict) -> Grid:
    """Build a Grid from a grid document."""
    if not isinstance(data, dict):
        raise ConfigurationError("grid document must be a mapping")
    variants: list[Variant] = []
    raw = data.get("variants") or {}
    if isinstance(raw, dict):
        variants.extend(Variant(name=str(k), overrides=v or {}) for k, v in raw.items())
    else:
        variants.extend(Variant(name=str(v["name"]), overrides=v.get("overrides") or {}) for v in raw)
    for field_name, values in (data.get("sweep") or {}).items():
        variants.extend(Variant(name=f"{field_name}={value}", overrides={field_name: value}) for value in values)

    if not variants:
        raise ConfigurationError("grid has no variants")
    names = [v.name for v in variants]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ConfigurationError(f"duplicate grid variants: {duplicates}")
    return Grid(baseline=str(data.get("baseline", "r3")), variants=tuple(variants))


def load_grid(path: Path) -> Grid:
    if not path.exists():
        raise ConfigurationError(f"grid file not found: {path}")
    with open(path) as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"grid file {path} is not valid YAML/JSON: {e}") from e
    return parse_grid(data)


def variant_config(base: SelectionConfig, variant: Variant) -> SelectionConfig:
    try:
        return SelectionConfig.model_validate({**base.to_dict(), **variant.overrides})
    except ValidationError as e:
        raise ConfigurationError(f"variant {variant.name!r}: {e}") from e


def tau_monotonicity(
    traces: list[SelectionTrace],
    base: SelectionConfig,
    taus: tuple[float, ...] = DEFAULT_TAUS,
) -> TauCheck:
    """Replay traces at increasing tau and check that r_list never grows."""
    taus = tuple(sorted(taus))
    voted = [t for t in traces if t.groups and (t.votes or len(t.groups) == 1)]
    mode = base.mode if base.mode in ("r3", "listwise") else "r3"

    per_tau: list[list[dict[str, int]]] = []
    for tau in taus:
        config = base.model_copy(update={"tau": tau, "mode": mode})
        replayed = [rescore(t, config) for t in voted]
        per_tau.append([{g.fingerprint: g.r_list for g in t.groups} for t in replayed])

    monotone = all(
        later[k][fp] <= earlier[k][fp]
        for earlier, later in zip(per_tau, per_tau[1:])
        for k in range(len(voted))
        for fp in earlier[k]
    )
    means = []
    for scores in per_tau:
        values = [r for task_scores in scores for r in task_scores.values()]
        means.append(ratio(sum(values), len(values)))
    return TauCheck(taus=taus, mean_r_list=tuple(means), monotone=monotone, n_traces=len(voted))


async def ablate(
    tasks: list[Task],
    base_config: SelectionConfig,
    grid: Grid,
    backends_factory: BackendsFactory,
    seed: int = 0,
    pools: Optional[dict[str, list[str]]] = None,
    progress: bool = False,
) -> AblationReport:
    """
    Evaluate every grid variant and compare it with the baseline.

    Args:
        tasks: Tasks with gold SQL
        base_config: Config the variant overrides apply to
        grid: Named variants
        backends_factory: Fresh backends (and ledger) per variant config
        seed: Seed shared by every variant
        pools: Optional pre-built initial pools
        progress: Show a progress bar per variant

    Returns:
        AblationReport with EX deltas against the baseline and, when the
        baseline records votes, the tau monotonicity check
    """
    baseline = grid.baseline if any(v.name == grid.baseline for v in grid.variants) else grid.variants[0].name

    runs: list[tuple[Variant, SelectionConfig, EvalReport]] = []
    baseline_traces: list[SelectionTrace] = []
    for variant in grid.variants:
        config = variant_config(base_config, variant)
        sink = baseline_traces.append if variant.name == baseline else None
        logger.info("[ABLATE] Variant %s", variant.name)
        report = await evaluate(
            tasks,
            config,
            backends_factory(config),
            seed=seed,
            pools=pools,
            trace_sink=sink,
            progress=progress,
        )
        runs.append((variant, config, report))

    baseline_ex = next(report.ex for variant, _, report in runs if variant.name == baseline)
    results = tuple(
        VariantResult(
            name=variant.name,
            config=config,
            report=report,
            delta_ex=round(report.ex - baseline_ex, 2),
        )
        for variant, config, report in runs
    )

    baseline_config = next(config for variant, config, _ in runs if variant.name == baseline)
    tau_check = None
    if baseline_config.mode in ("r3", "listwise"):
        order = {t.task_id: i for i, t in enumerate(tasks)}
        baseline_traces.sort(key=lambda t: order[t.task_id])
        sweep_taus = tuple(c.tau for _, c, _ in runs if set(_overridden(c, baseline_config)) <= {"tau"})
        taus = tuple(sorted(set(sweep_taus) | set(DEFAULT_TAUS)))
        tau_check = tau_monotonicity(baseline_traces, baseline_config, taus)
        if not tau_check.monotone:
            logger.warning("[ABLATE] r_list increased with tau on some group")

    return AblationReport(baseline=baseline, variants=results, tau_check=tau_check)


def _overridden(config: SelectionConfig, base: SelectionConfig) -> list[str]:
    a, b = config.to_dict(), base.to_dict()
    return [k for k in a if a[k] != b[k]]
