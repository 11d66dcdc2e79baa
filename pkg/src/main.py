#!/usr/bin/env python3
"""
RainbowRadar - command-line entry point
Generates multilayered geometric graphs, checks rainbow connectivity and
runs the seeded Monte Carlo experiments.
"""

import argparse
import logging
import math
import os
import sys
from typing import Any, Dict, List, Literal, Optional, Tuple

# Add the src directory to the path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from analysis.estimation import (
    estimate_layer_threshold,
    estimate_threshold,
    probability_sweep,
)
from analysis.experiments import (
    ball_statistics_experiment,
    expansion_bounds,
    expansion_experiment,
    occupancy_experiment,
)
from analysis.formulas import (
    corollary_layer_bounds,
    reference_formulas,
    theorem_constants,
    threshold_radius,
)
from errors import ConfigError, RainbowRadarError
from graph.document import load_graph, serialize
from graph.fixtures import figure1_document, figure1_graph
from graph.multilayer import MAX_LAYERS, GraphParams, MultilayerGraph, generate_random
from rainbow.engine import rainbow_engine
from rainbow.oracle import validate_witness
from settings import reload_settings, settings
from storage.db import RunLedger
from storage.results import atomic_write_text, emit_results, ensure_output_dir, resolve_output, write_summary

logger = logging.getLogger(__name__)

COMMANDS = (
    "gen", "check", "witness", "sweep", "threshold", "expansion",
    "occupancy", "balls", "formulas", "fixture", "layers",
)

REQUIRED = {
    "gen": ("n", "r", "h", "seed"),
    "check": (),
    "witness": ("u", "v"),
    "sweep": ("n", "h", "radii", "trials", "seed"),
    "threshold": ("n", "h", "trials", "tolerance", "seed"),
    "expansion": ("n", "r", "h", "samples", "seed"),
    "occupancy": ("m", "k", "trials", "seed"),
    "balls": ("n", "r", "trials", "seed"),
    "formulas": ("n", "h"),
    "fixture": (),
    "layers": ("n", "r", "h_max", "trials", "seed"),
}

# Fields that never reach the JSON summaries' params.
_RUNTIME_FIELDS = {"command", "out", "workers"}


class ExperimentConfig(BaseModel):
    """One CLI invocation: command, parameters, seed and output directory."""

    model_config = ConfigDict(extra="forbid")

    command: Literal[COMMANDS]
    n: Optional[int] = Field(default=None, ge=0)
    r: Optional[float] = Field(default=None, ge=0.0, le=math.sqrt(2.0))
    h: Optional[int] = Field(default=None, ge=1, le=MAX_LAYERS)
    seed: Optional[int] = Field(default=None, ge=0)
    graph: Optional[str] = None
    fixture: bool = False
    u: Optional[int] = Field(default=None, ge=0)
    v: Optional[int] = Field(default=None, ge=0)
    radii: Optional[List[float]] = None
    trials: Optional[int] = Field(default=None, ge=1)
    tolerance: Optional[float] = Field(default=None, gt=0.0)
    samples: Optional[int] = Field(default=None, ge=1)
    permutations: Optional[int] = Field(default=None, ge=1)
    m: Optional[int] = Field(default=None, ge=1)
    k: Optional[int] = Field(default=None, ge=1)
    a: Optional[List[float]] = None
    h_max: Optional[int] = Field(default=None, ge=1, le=MAX_LAYERS)
    general: bool = False
    full_report: bool = False
    out: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_command_fields(self):
        missing = [name for name in REQUIRED[self.command] if getattr(self, name) is None]
        if missing:
            raise ValueError(f"'{self.command}' needs {', '.join(missing)}")

        if self.command in ("check", "witness"):
            sources = [self.fixture, self.graph is not None]
            generated = [self.n, self.r, self.h, self.seed]
            if any(x is not None for x in generated):
                sources.append(True)
                if any(x is None for x in generated):
                    raise ValueError(f"'{self.command}' on a generated graph needs n, r, h and seed")
            if sum(sources) != 1:
                raise ValueError(f"'{self.command}' needs exactly one of --fixture, --graph or n/r/h/seed")
            if self.command == "witness" and self.u == self.v:
                raise ValueError("witness endpoints u and v must differ")

        if self.radii is not None:
            if not self.radii:
                raise ValueError("radii must not be empty")
            bad = [x for x in self.radii if not 0.0 <= x <= math.sqrt(2.0)]
            if bad:
                raise ValueError(f"radii must lie in [0, sqrt(2)], got {bad}")
        if self.command == "threshold" and self.trials < 50:
            raise ValueError(f"threshold needs trials >= 50, got {self.trials}")
        if self.a is not None and any(x <= 0 for x in self.a):
            raise ValueError("deviations a must be positive")
        return self

    def params(self) -> Dict[str, Any]:
        return self.model_dump(exclude_none=True, exclude=_RUNTIME_FIELDS)


def load_config_file(config_path: str) -> Dict[str, Any]:
    """Experiment file: a JSON (or YAML) mapping whose keys mirror the flags."""
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config file {config_path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"config file {config_path} is not valid JSON/YAML: {e}") from e
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {config_path} must hold a mapping")
    return {str(key).replace("-", "_"): value for key, value in raw.items()}


class RainbowRadarApp:
    """
    Runs one validated ExperimentConfig: dispatches to the command handler,
    writes its files into the output directory and prints a one-line summary.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out_dir = ensure_output_dir(config.out or settings.output.directory)

    def path(self, name: str) -> str:
        return resolve_output(self.out_dir, name)

    def run(self) -> int:
        config = self.config
        logger.info(f"Running {config.command} with {config.params()}")
        handler = getattr(self, f"cmd_{config.command}")
        summary, outputs = handler()
        if settings.storage.ledger_enabled:
            ledger = RunLedger.for_output_dir(self.out_dir)
            try:
                ledger.record_run(config.command, config.params(), config.seed, outputs, self.out_dir)
            finally:
                ledger.close()
        print(summary)
        logger.info(f"Finished {config.command}")
        return 0

    def summarize(self, name: str, outputs: Dict[str, Any]) -> Dict[str, Any]:
        write_summary(self.path(name), self.config.command, self.config.params(), self.config.seed, outputs)
        return outputs

    def load_input_graph(self) -> MultilayerGraph:
        config = self.config
        if config.fixture:
            return figure1_graph()
        if config.graph is not None:
            try:
                return load_graph(config.graph)
            except OSError as e:
                raise ConfigError(f"cannot read graph document {config.graph}: {e}") from e
        return generate_random(GraphParams(config.n, config.r, config.h), config.seed)

    def cmd_gen(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        g = generate_random(GraphParams(config.n, config.r, config.h), config.seed)
        atomic_write_text(self.path("graph.json"), serialize(g))
        summary = f"generated n={g.n} r={g.r:.6g} h={g.h} edges={g.edge_counts()} -> graph.json"
        return summary, {"files": ["graph.json"], "layer_edge_counts": g.edge_counts()}

    def cmd_check(self) -> Tuple[str, Dict[str, Any]]:
        g = self.load_input_graph()
        report = rainbow_engine.is_rainbow_connected(g)
        rows = [
            {"vertex": v, "label": g.label(v), "unconnected": count}
            for v, count in enumerate(report.per_source_unconnected)
        ]
        emit_results(rows, ["vertex", "label", "unconnected"], self.path("check_sources.csv"))
        failure = None
        if report.first_failure is not None:
            u, v = report.first_failure
            failure = {"u": u, "v": v, "labels": [g.label(u), g.label(v)]}
        outputs = self.summarize("check.json", {
            "files": ["check.json", "check_sources.csv"],
            "n": g.n,
            "h": g.h,
            "connected": report.connected,
            "unconnected_pairs": report.unconnected_pairs,
            "first_failure": failure,
        })
        if report.connected:
            return "rainbow connected", outputs
        u, v = report.first_failure
        return f"not rainbow connected; first failure ({g.label(u)},{g.label(v)})", outputs

    def cmd_witness(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        g = self.load_input_graph()
        path = rainbow_engine.witness(g, config.u, config.v)
        found = path is not None
        if found and not validate_witness(g, path, config.u, config.v):
            raise RainbowRadarError(f"witness {path} failed validation")
        outputs = self.summarize("witness.json", {
            "files": ["witness.json"],
            "found": found,
            "vertices": list(path.vertices) if found else None,
            "colors": list(path.colors) if found else None,
            "length": path.length if found else None,
        })
        u_label, v_label = g.label(config.u), g.label(config.v)
        if not found:
            return f"no rainbow path between {u_label} and {v_label}", outputs
        walk = "-".join(g.label(x) for x in path.vertices)
        return f"witness {walk} colors {list(path.colors)}", outputs

    def cmd_sweep(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        estimates = probability_sweep(
            config.n, config.h, config.radii, config.trials, config.seed,
            full_report=config.full_report, workers=config.workers,
        )
        schema = ["r", "trials", "successes", "p_hat", "ci_low", "ci_high"]
        if config.full_report:
            schema += ["mean_unconnected_pairs", "mean_max_source_unconnected"]
        emit_results(estimates, schema, self.path("sweep.csv"))
        outputs = self.summarize("sweep.json", {
            "files": ["sweep.csv", "sweep.json"],
            "points": len(estimates),
            "p_hat": [e.p_hat for e in estimates],
        })
        probabilities = ", ".join(f"{e.p_hat:.3f}" for e in estimates)
        return f"sweep over {len(estimates)} radii: p = [{probabilities}]", outputs

    def cmd_threshold(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        result = estimate_threshold(
            config.n, config.h, config.trials, config.tolerance, config.seed, workers=config.workers
        )
        rows = [
            {"iteration": i, "r": e.r, "trials": e.trials, "successes": e.successes,
             "p_hat": e.p_hat, "ci_low": e.ci_low, "ci_high": e.ci_high}
            for i, e in enumerate(result.trace)
        ]
        emit_results(
            rows, ["iteration", "r", "trials", "successes", "p_hat", "ci_low", "ci_high"],
            self.path("threshold.csv"),
        )
        base = threshold_radius(config.n, config.h) if config.h >= 2 and config.n >= 2 else None
        outputs = self.summarize("threshold.json", {
            "files": ["threshold.csv", "threshold.json"],
            "r_hat": result.r_hat,
            "bracket": list(result.bracket),
            "threshold_radius": base,
            "r_hat_over_threshold_radius": result.r_hat / base if base else None,
            "degenerate": result.degenerate,
            "noisy": result.noisy,
            "flags": result.flags,
        })
        return f"r_hat={result.r_hat:.6g} bracket=[{result.bracket[0]:.6g}, {result.bracket[1]:.6g}]", outputs

    def cmd_expansion(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        result = expansion_experiment(
            config.n, config.r, config.h, config.samples, config.seed,
            permutations_per_source=config.permutations,
        )
        schema = ["source", "sigma", "ell", "size", "lower", "upper", "within", "growth_ratio", "growth_within"]
        emit_results(result.rows, schema, self.path("expansion.csv"))
        bounds = {str(ell): list(expansion_bounds(config.n, config.r, ell)) for ell in range(1, config.h)}
        outputs = self.summarize("expansion.json", {
            "files": ["expansion.csv", "expansion.json"],
            "profiles": result.profiles,
            "bounds": bounds,
            "satisfaction": {str(ell): rate for ell, rate in result.satisfaction.items()},
            "growth_satisfaction": {str(ell): rate for ell, rate in result.growth_satisfaction.items()},
            "regime_factor": result.regime_factor,
            "in_regime": result.in_regime,
        })
        rates = ", ".join(f"l={ell}: {rate:.3f}" for ell, rate in result.satisfaction.items())
        regime = "in regime" if result.in_regime else "out of regime"
        return f"expansion bounds held ({rates}) over {result.profiles} profiles, {regime}", outputs

    def cmd_occupancy(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        stats = occupancy_experiment(config.m, config.k, config.trials, config.seed, a_values=config.a)
        schema = ["a", "frequency", "std_error", "mcdiarmid_bound", "shifted_frequency", "shifted_bound"]
        emit_results(stats.tails, schema, self.path("occupancy.csv"))
        outputs = self.summarize("occupancy.json", {
            "files": ["occupancy.csv", "occupancy.json"],
            "expected": stats.expected,
            "empirical_mean": stats.empirical_mean,
            "max_observed_deviation": stats.max_observed_deviation,
            "trials": stats.trials,
        })
        return f"occupancy mean {stats.empirical_mean:.6g} vs expected {stats.expected:.6g}", outputs

    def cmd_balls(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        stats = ball_statistics_experiment(config.n, config.r, config.trials, config.seed)
        emit_results(stats.per_trial, ["trial", "mean_z", "violation_rate"], self.path("balls.csv"))
        outputs = self.summarize("balls.json", {
            "files": ["balls.csv", "balls.json"],
            "mean_z": stats.mean_z,
            "predicted_mean": stats.predicted_mean,
            "lower_bound": stats.lower_bound,
            "upper_bound": stats.upper_bound,
            "violation_rate": stats.violation_rate,
            "concentration_bound": stats.concentration_bound,
        })
        return (
            f"mean Z {stats.mean_z:.6g} vs predicted {stats.predicted_mean:.6g} "
            f"in [{stats.lower_bound:.6g}, {stats.upper_bound:.6g}]"
        ), outputs

    def cmd_formulas(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        base = threshold_radius(config.n, config.h)
        constants = theorem_constants(config.h, general=config.general)
        outputs: Dict[str, Any] = {
            "files": ["formulas.json"],
            "threshold_radius": base,
            "constants": {
                "b_lower": constants.b_lower,
                "c_upper": constants.c_upper,
                "source": constants.source,
            },
            "connected_radius": constants.b_lower * base,
            "disconnected_radius": constants.c_upper * base,
        }
        if config.n >= 3:
            reference = reference_formulas(config.n, base if config.r is None else config.r)
            outputs["r_c"] = reference.r_c
            outputs["diameter_estimate"] = reference.diameter_estimate
        if config.r is not None and config.n >= 3 and 0.0 < config.r < 1.0:
            bounds = corollary_layer_bounds(config.n, config.r)
            outputs["layer_bounds"] = {
                "h0": bounds.h0, "h1": bounds.h1,
                "h0_quotient": bounds.h0_quotient, "h1_quotient": bounds.h1_quotient,
                "notes": bounds.notes,
            }
        self.summarize("formulas.json", outputs)
        return (
            f"threshold_radius={base:.6g} b={constants.b_lower:.6g} c={constants.c_upper:.6g}"
        ), outputs

    def cmd_fixture(self) -> Tuple[str, Dict[str, Any]]:
        document = figure1_document()
        atomic_write_text(self.path("figure1.json"), document)
        sys.stdout.write(document)
        return "fixture written to figure1.json", {"files": ["figure1.json"]}

    def cmd_layers(self) -> Tuple[str, Dict[str, Any]]:
        config = self.config
        result = estimate_layer_threshold(
            config.n, config.r, config.h_max, config.trials, config.seed, workers=config.workers
        )
        emit_results(
            result.estimates, ["h", "trials", "successes", "p_hat", "ci_low", "ci_high"],
            self.path("layers.csv"),
        )
        bounds = result.bounds
        outputs = self.summarize("layers.json", {
            "files": ["layers.csv", "layers.json"],
            "h_hat": result.h_hat,
            "p_hat": [e.p_hat for e in result.estimates],
            "corollary": None if bounds is None else {
                "h0": bounds.h0, "h1": bounds.h1, "notes": bounds.notes,
            },
        })
        return f"smallest h with p_hat >= 0.5: {result.h_hat}", outputs


def run(config: ExperimentConfig) -> int:
    return RainbowRadarApp(config).run()


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="experiment file (JSON or YAML) mirroring the flags")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes")
    common.add_argument("--settings", default=argparse.SUPPRESS, help="runtime config.yaml")
    common.add_argument("--log-level", default=argparse.SUPPRESS, help="logging level")
    return common


def _add(parser: argparse.ArgumentParser, flag: str, kind=None, **kwargs) -> None:
    if kind is bool:
        parser.add_argument(flag, action="store_true", default=argparse.SUPPRESS, **kwargs)
    else:
        parser.add_argument(flag, type=kind, default=argparse.SUPPRESS, **kwargs)


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="rainbowradar",
        description="Multilayered random geometric graphs and rainbow connectivity experiments.",
        parents=[common],
    )
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def sub(name: str, help_text: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, help=help_text, parents=[common])

    def graph_flags(p: argparse.ArgumentParser) -> None:
        _add(p, "--n", int, help="vertex count")
        _add(p, "--r", float, help="radius")
        _add(p, "--h", int, help="layer count")
        _add(p, "--seed", int, help="master seed")

    p = sub("gen", "generate a random multilayered graph document")
    graph_flags(p)

    for name, help_text in (("check", "check rainbow connectivity"), ("witness", "find a rainbow path")):
        p = sub(name, help_text)
        graph_flags(p)
        _add(p, "--graph", str, help="graph document to load")
        _add(p, "--fixture", bool, help="use the bundled two-layer fixture")
        if name == "witness":
            _add(p, "--u", int, help="source vertex")
            _add(p, "--v", int, help="target vertex")

    p = sub("sweep", "estimate Pr(rainbow connected) over a radius grid")
    _add(p, "--n", int, help="vertex count")
    _add(p, "--h", int, help="layer count")
    _add(p, "--radii", float, nargs="+", help="radius grid")
    _add(p, "--trials", int, help="trials per radius")
    _add(p, "--seed", int, help="master seed")
    _add(p, "--full-report", bool, help="also measure unconnected pair counts")

    p = sub("threshold", "locate the 1/2 crossing radius by bisection")
    _add(p, "--n", int, help="vertex count")
    _add(p, "--h", int, help="layer count")
    _add(p, "--trials", int, help="trials per bisection point")
    _add(p, "--tolerance", float, help="bracket width to stop at")
    _add(p, "--seed", int, help="master seed")

    p = sub("expansion", "measure sigma-ordered neighbourhood sizes against the expansion bounds")
    graph_flags(p)
    _add(p, "--samples", int, help="source vertices to sample")
    _add(p, "--permutations", int, help="permutations per source (default: all)")

    p = sub("occupancy", "random-map image sizes against the concentration bounds")
    _add(p, "--m", int, help="domain size")
    _add(p, "--k", int, help="codomain size")
    _add(p, "--trials", int, help="simulated maps")
    _add(p, "--seed", int, help="master seed")
    _add(p, "--a", float, nargs="+", help="deviations to tabulate (default: 1, 2, 3 x sqrt(m))")

    p = sub("balls", "ball-size statistics of single-layer graphs")
    _add(p, "--n", int, help="vertex count")
    _add(p, "--r", float, help="radius")
    _add(p, "--trials", int, help="graphs to sample")
    _add(p, "--seed", int, help="master seed")

    p = sub("formulas", "evaluate the threshold formulas and constants")
    _add(p, "--n", int, help="vertex count")
    _add(p, "--h", int, help="layer count")
    _add(p, "--r", float, help="radius for the reference values and layer bounds")
    _add(p, "--general", bool, help="use the general constants even for h=2")

    sub("fixture", "print and save the bundled two-layer fixture")

    p = sub("layers", "estimate Pr(rainbow connected) for h = 1..h_max")
    _add(p, "--n", int, help="vertex count")
    _add(p, "--r", float, help="radius")
    _add(p, "--h-max", int, help="largest layer count")
    _add(p, "--trials", int, help="trials per layer count")
    _add(p, "--seed", int, help="master seed")
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """File values first, then flags on top."""
    flags = vars(args).copy()
    for runtime_only in ("config", "settings", "log_level"):
        flags.pop(runtime_only, None)
    values: Dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        values = load_config_file(config_path)
        file_command = values.pop("command", args.command)
        if file_command != args.command:
            raise ConfigError(f"config file is for '{file_command}', not '{args.command}'")
    values.update(flags)
    return ExperimentConfig.model_validate(values)


def setup_logging(level: Optional[str] = None) -> None:
    level_name = (level or settings.logging.level).upper()
    if not isinstance(logging.getLevelName(level_name), int):
        raise ConfigError(f"unknown log level {level}")
    logging.basicConfig(level=level_name, format=settings.logging.format, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "settings", None):
            reload_settings(args.settings)
        setup_logging(getattr(args, "log_level", None))
        return run(build_config(args))
    except ValidationError as e:
        category, status, message = "config", 2, str(e)
    except RainbowRadarError as e:
        category, status, message = e.category, e.exit_status, str(e)
    except OSError as e:
        category, status, message = "io", 4, str(e)
    logger.error(f"{category} error: {message}")
    print(f"error[{category}]: {message}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
