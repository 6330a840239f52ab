"""ExperimentManager: instance generation, single runs, batches and summaries."""
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from .config import BatchConfig, RunConfig, SpeedConfig, StrategyConfig, STRATEGY_LABELS, parse_seeds
from .criticality import CriticalityCache
from .engine import SimOutcome, run, write_event_log
from .errors import ConfigurationError, GraphFormatError, InstanceValidationError
from .road_graph import RoadNetwork, load_network_file, save_network
from .scenario import InstanceSpec, generate_instance, load_instance, save_instance, synthetic_grid
from .strategies import make_strategy

logger = logging.getLogger(__name__)

ROW_COLUMNS = [
    "map",
    "seed",
    "strategy",
    "uavs",
    "v_g",
    "v_a",
    "travel_time",
    "computation_time",
    "reached",
    "events",
    "edges_inspected",
]

EXIT_CODES = {
    "CONFIG_ERROR": 2,
    "GRAPH_INVALID": 2,
    "INSTANCE_INVALID": 2,
    "IO_ERROR": 3,
    "RUN_FAILED": 1,
}


def _error(e: Exception, fallback: str) -> Dict[str, Any]:
    """Status dictionary for a failure, classified by exception type."""
    if isinstance(e, (ValidationError, ConfigurationError)):
        code = "CONFIG_ERROR"
    elif isinstance(e, GraphFormatError):
        code = "GRAPH_INVALID"
    elif isinstance(e, InstanceValidationError):
        code = "INSTANCE_INVALID"
    elif isinstance(e, OSError):
        code = "IO_ERROR"
    else:
        code = fallback
    return {"status": "error", "message": str(e), "code": code}


def _network(path: str) -> RoadNetwork:
    """Parsed graph document, reloaded whenever the file changes on disk."""
    stat = Path(path).stat()
    return _load_network(path, stat.st_mtime_ns, stat.st_size)


@lru_cache(maxsize=16)
def _load_network(path: str, mtime_ns: int, size: int) -> RoadNetwork:
    return load_network_file(path)


def _instance(graph: str, seed: Optional[int], instance: Optional[str]) -> InstanceSpec:
    network = _network(graph)
    if instance is not None:
        return load_instance(instance, network)
    assert seed is not None
    return generate_instance(network, seed)


def map_labels(graphs: Sequence[str]) -> Dict[str, str]:
    """Map name per graph path: the file stem, or the whole path when stems collide."""
    stems = Counter(Path(graph).stem for graph in graphs)
    return {graph: Path(graph).stem if stems[Path(graph).stem] == 1 else Path(graph).as_posix() for graph in graphs}


def _instance_owners(paths: Sequence[Path], networks: Dict[str, RoadNetwork]) -> Dict[Path, List[str]]:
    """Graphs each instance file validates against; an instance matching none is kept for all."""
    owners = {}
    for path in paths:
        matched = []
        for graph, network in networks.items():
            try:
                load_instance(path, network)
            except (InstanceValidationError, OSError):
                continue
            matched.append(graph)
        if not matched:
            logger.warning("Instance %s matches none of the batch graphs", path)
        owners[path] = matched or list(networks)
    return owners


def result_row(map_name: str, spec: InstanceSpec, strategy: StrategyConfig, speeds: SpeedConfig, outcome: SimOutcome) -> Dict[str, Any]:
    return {
        "map": map_name,
        "seed": spec.seed,
        "strategy": strategy.label,
        "uavs": strategy.uav_count,
        "v_g": speeds.v_g,
        "v_a": speeds.v_a,
        "travel_time": outcome.travel_time,
        "computation_time": outcome.computation_time,
        "reached": outcome.reached,
        "events": outcome.event_count,
        "edges_inspected": outcome.edges_inspected,
    }


def simulate(
    graph: str,
    spec: InstanceSpec,
    strategy: StrategyConfig,
    speeds: SpeedConfig,
    cache_dir: Optional[str] = None,
) -> SimOutcome:
    network = _network(graph)
    cache = CriticalityCache(cache_dir) if cache_dir else None
    return run(
        network,
        spec.ground_truth(network),
        make_strategy(strategy, cache),
        spec.sim_config(network, speeds),
    )


def _run_cell(cell: Dict[str, Any]) -> Dict[str, Any]:
    """Batch worker: one (graph, instance, strategy, speeds) simulation."""
    strategy = StrategyConfig(**cell["strategy"])
    speeds = SpeedConfig(**cell["speeds"])
    try:
        spec = _instance(cell["graph"], cell.get("seed"), cell.get("instance"))
        outcome = simulate(cell["graph"], spec, strategy, speeds, cell.get("cache"))
        return {"row": result_row(cell["map"], spec, strategy, speeds, outcome)}
    except Exception as e:
        return {"error": str(e)}


def strategy_order(labels: Sequence[str]) -> List[str]:
    """Summary column order: single-vehicle strategies first, then UAV fleets by size."""
    fixed = list(STRATEGY_LABELS.values())

    def key(label: str):
        if label in fixed:
            return (0, fixed.index(label), label)
        count = label.split("-", 1)[0]
        return (1, int(count) if count.isdigit() else 0, label)

    return sorted(set(labels), key=key)


def summary_tables(rows: pd.DataFrame) -> Dict[str, pd.DataFrame]:
    """Mean travel and computation time per (map, speeds) row and strategy column."""
    tables = {}
    for metric in ("travel_time", "computation_time"):
        table = rows.pivot_table(index=["map", "v_g", "v_a"], columns="strategy", values=metric, aggfunc="mean")
        tables[metric] = table[strategy_order(list(table.columns))]
    return tables


def _summary_records(rows: pd.DataFrame) -> List[Dict[str, Any]]:
    records = []
    for metric, table in summary_tables(rows).items():
        for (map_name, v_g, v_a), values in table.iterrows():
            record = {"metric": metric, "map": map_name, "ratio": f"{v_g:g}:{v_a:g}"}
            record.update({k: (None if pd.isna(v) else float(v)) for k, v in values.items()})
            records.append(record)
    return records


def write_rows(rows: pd.DataFrame, path: Path, fmt: str) -> None:
    if fmt == "json":
        rows.to_json(path, orient="records", indent=1)
    else:
        rows.to_csv(path, index=False)


def read_rows(path: Path) -> pd.DataFrame:
    if path.suffix == ".json":
        return pd.read_json(path, orient="records")
    return pd.read_csv(path)


class ExperimentManager:
    """Service object behind the CLI; every method returns a status dictionary."""

    def __init__(self, verbose: bool = False, criticality_cache: Optional[str] = None):
        self.verbose = verbose
        self.criticality_cache = criticality_cache

    def write_grid(self, rows: int, cols: int, spacing: float, out: str) -> Dict[str, Any]:
        """Write a synthetic grid graph document."""
        try:
            network = synthetic_grid(rows, cols, spacing)
            save_network(network, out)
            return {
                "status": "success",
                "graph": out,
                "vertices": network.vertex_count,
                "edges": network.edge_count,
            }
        except Exception as e:
            return _error(e, "RUN_FAILED")

    def generate_instances(self, graph: str, seeds: str, out_dir: str) -> Dict[str, Any]:
        """One instance file per seed; rerunning rewrites identical bytes."""
        try:
            seed_list = parse_seeds(seeds)
            network = _network(graph)
            directory = Path(out_dir)
            directory.mkdir(parents=True, exist_ok=True)
            files = []
            for seed in seed_list:
                path = directory / f"{Path(graph).stem}-{seed}.json"
                save_instance(generate_instance(network, seed), path)
                files.append(str(path))
            logger.info("Wrote %d instances to %s", len(files), directory)
            return {"status": "success", "graph": graph, "count": len(files), "files": files}
        except Exception as e:
            return _error(e, "RUN_FAILED")

    def run_simulation(
        self,
        graph: str,
        strategy: str,
        instance: Optional[str] = None,
        seed: Optional[int] = None,
        uavs: int = 1,
        k: int = 5,
        m: int = 20,
        mc_runs: int = 1000,
        ugv_speed: float = 20.0,
        uav_speed: float = 40.0,
        events_out: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Run one strategy on one instance and report its result row."""
        try:
            config = RunConfig(
                graph=graph,
                instance=instance,
                seed=seed,
                strategy=StrategyConfig(name=strategy, k=k, m=m, mc_runs=mc_runs, uavs=uavs),
                speeds=SpeedConfig(v_g=ugv_speed, v_a=uav_speed),
                events_out=events_out,
                criticality_cache=self.criticality_cache,
            )
            spec = _instance(
                str(config.graph), config.seed, str(config.instance) if config.instance else None
            )
            outcome = simulate(
                str(config.graph),
                spec,
                config.strategy,
                config.speeds,
                str(config.criticality_cache) if config.criticality_cache else None,
            )
            if config.events_out is not None:
                write_event_log(outcome.events, config.events_out)
            result = {"status": "success", "row": result_row(config.graph.stem, spec, config.strategy, config.speeds, outcome)}
            if self.verbose:
                result["trajectory"] = outcome.ugv_trajectory
            return result
        except Exception as e:
            return _error(e, "RUN_FAILED")

    def run_batch(
        self,
        graphs: Sequence[str],
        strategies: Sequence[str],
        ratios: Sequence[str],
        seeds: str = "",
        instance_dir: Optional[str] = None,
        jobs: int = 1,
        out: Optional[str] = None,
        fmt: str = "csv",
        k: int = 5,
        m: int = 20,
        mc_runs: int = 1000,
    ) -> Dict[str, Any]:
        """Cross product of graphs x instances x strategies x speed ratios."""
        try:
            config = BatchConfig(
                graphs=list(graphs),
                seeds=parse_seeds(seeds),
                instance_dir=instance_dir,
                strategies=[StrategyConfig.parse(s, k=k, m=m, mc_runs=mc_runs) for s in strategies],
                ratios=[SpeedConfig.parse(r) for r in ratios],
                jobs=jobs,
                out=out,
                format=fmt,
                criticality_cache=self.criticality_cache,
            )
            cells = self._batch_cells(config)
        except Exception as e:
            return _error(e, "RUN_FAILED")

        try:
            if config.jobs > 1:
                with ProcessPoolExecutor(max_workers=config.jobs) as executor:
                    results = list(executor.map(_run_cell, cells))
            else:
                results = [_run_cell(cell) for cell in cells]
        except Exception as e:
            return _error(e, "RUN_FAILED")

        rows, failed = [], []
        for cell, result in zip(cells, results):
            if "row" in result:
                rows.append(result["row"])
            else:
                failed.append({
                    "graph": cell["graph"],
                    "seed": cell.get("seed"),
                    "instance": cell.get("instance"),
                    "strategy": StrategyConfig(**cell["strategy"]).label,
                    "ratio": SpeedConfig(**cell["speeds"]).ratio,
                    "message": result["error"],
                })
        order = {s.label: i for i, s in enumerate(config.strategies)}
        frame = pd.DataFrame(rows, columns=ROW_COLUMNS)
        if not frame.empty:
            frame = frame.assign(_order=frame["strategy"].map(order))
            frame = frame.sort_values(["map", "seed", "_order", "v_g", "v_a"], kind="mergesort")
            frame = frame.drop(columns="_order").reset_index(drop=True)

        result: Dict[str, Any] = {"status": "partial" if failed else "success", "rows": len(frame), "failed": failed}
        try:
            if config.out is not None:
                write_rows(frame, config.out, config.format)
                result["out"] = str(config.out)
        except OSError as e:
            return _error(e, "IO_ERROR")
        result["summary"] = _summary_records(frame) if not frame.empty else []
        return result

    def _batch_cells(self, config: BatchConfig) -> List[Dict[str, Any]]:
        cells = []
        cache = str(config.criticality_cache) if config.criticality_cache else None
        graphs = [str(graph) for graph in config.graphs]
        labels = map_labels(graphs)
        networks = {graph: _network(graph) for graph in graphs}
        if config.instance_dir is not None:
            owners = _instance_owners(sorted(Path(config.instance_dir).glob("*.json")), networks)
        for graph in graphs:
            if config.instance_dir is not None:
                sources = [{"instance": str(p)} for p, matched in owners.items() if graph in matched]
            else:
                sources = [{"seed": seed} for seed in config.seeds]
            for source in sources:
                for strategy in config.strategies:
                    for speeds in config.ratios:
                        cell = {
                            "graph": graph,
                            "map": labels[graph],
                            "strategy": strategy.model_dump(),
                            "speeds": speeds.model_dump(),
                            "cache": cache,
                        }
                        cell.update(source)
                        cells.append(cell)
        return cells

    def summarize(self, results: str) -> Dict[str, Any]:
        """Recompute the summary tables from a results file."""
        try:
            frame = read_rows(Path(results))
            missing = set(ROW_COLUMNS) - set(frame.columns)
            if missing:
                raise ConfigurationError(f"results file lacks columns {sorted(missing)}")
            return {"status": "success", "rows": len(frame), "summary": _summary_records(frame)}
        except Exception as e:
            return _error(e, "RUN_FAILED")
