"""Command-line harness: simulate N dialogues, evaluate logs, list goals.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import json
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import click
import yaml

from . import __version__
from .acts import DialogueLog
from .agenda import AgendaUserSimulator
from .backend import BackendConfig, CassetteBackend, HTTPBackend, ScriptedBackend
from .errors import ConfigError, DuetSimError, EmptyLogSet, LogParseError, WorldError
from .loop import DEFAULT_TURN_CAP, DuetSession, DuetUserSimulator, LoopConfig
from .metrics import diversity, fulfillment, render_report, user_utterances
from .prompts import PromptConfig, lint_all_templates, templates_digest
from .system import SystemAgent
from .world import describe_goal, generate_goal, load_world

LOG_SCHEMA_VERSION = 1

SIMULATOR_KINDS = ("duet", "duet-no-verifier", "agenda")


@dataclass
class ExperimentConfig:
    simulator: str = "agenda"
    world: str | None = None
    dialogues: int = 100
    seed: int = 0
    turn_cap: int = DEFAULT_TURN_CAP
    parallelism: int = 4
    output_dir: str = "runs/latest"
    context_mode: str = "utterances"
    omit_goal: bool = False
    omit_history: bool = False
    loop: LoopConfig = field(default_factory=LoopConfig)
    generator_backend: dict = field(default_factory=dict)
    verifier_backend: dict = field(default_factory=dict)
    cassette: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.simulator not in SIMULATOR_KINDS:
            raise ConfigError("simulator", f"must be one of {SIMULATOR_KINDS}")
        if self.dialogues < 1:
            raise ConfigError("dialogues", "must be >= 1")
        if self.turn_cap < 1:
            raise ConfigError("turn_cap", "must be >= 1")
        if self.parallelism < 1:
            raise ConfigError("parallelism", "must be >= 1")
        if self.context_mode not in ("utterances", "acts"):
            raise ConfigError("context_mode", "must be 'utterances' or 'acts'")
        if self.simulator.startswith("duet") and not self.generator_backend:
            raise ConfigError("generator_backend",
                              "required for duet simulators")


_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _interpolate_env(obj):
    """Replace ${VAR} with the environment value, recursively."""
    if isinstance(obj, str):
        return _ENV_RE.sub(lambda m: os.environ.get(m.group(1), ""), obj)
    if isinstance(obj, dict):
        return {k: _interpolate_env(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_interpolate_env(v) for v in obj]
    return obj


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    doc = {}
    if path:
        try:
            with open(path, encoding="utf-8") as f:
                doc = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigError("config", str(e)) from e
        except yaml.YAMLError as e:
            raise ConfigError("config", f"invalid YAML: {e}") from e
    doc = _interpolate_env(doc)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    loop_doc = doc.pop("loop", {}) or {}
    config = ExperimentConfig(**{k: v for k, v in doc.items()
                                 if k in ExperimentConfig.__dataclass_fields__})
    try:
        config.loop = LoopConfig(**loop_doc)
    except (TypeError, ValueError) as e:
        raise ConfigError("loop", str(e)) from e
    config.validate()
    return config


def _build_backend(spec: dict, role: str):
    kind = spec.get("kind", "http")
    if kind == "scripted":
        path = spec.get("script_file")
        if not path:
            raise ConfigError(f"{role}.script_file", "required for scripted backend")
        with open(path, encoding="utf-8") as f:
            responses = [json.loads(line) for line in f if line.strip()]
        return ScriptedBackend(responses)
    if kind == "http":
        try:
            return HTTPBackend(BackendConfig(
                base_url=spec["base_url"],
                model=spec.get("model", ""),
                api_key_env=spec.get("api_key_env", ""),
                timeout=float(spec.get("timeout", 30.0)),
                retries=int(spec.get("retries", 2)),
                backoff_base=float(spec.get("backoff_base", 0.5)),
            ))
        except KeyError as e:
            raise ConfigError(f"{role}.{e.args[0]}", "missing") from e
    raise ConfigError(f"{role}.kind", f"unknown backend kind {kind!r}")


def _wrap_cassette(backend, cassette: dict):
    mode = cassette.get("mode", "off")
    if mode == "off":
        return backend
    if mode not in ("record", "replay"):
        raise ConfigError("cassette.mode", "must be record, replay or off")
    path = cassette.get("path")
    if not path:
        raise ConfigError("cassette.path", "required when cassette is enabled")
    inner = backend if mode == "record" else None
    return CassetteBackend(path=path, mode=mode, inner=inner)


def build_simulator_factory(config: ExperimentConfig, ontology, entities):
    """Returns (factory(goal) -> user simulator, sequential_required)."""
    if config.simulator == "agenda":
        return (lambda goal: AgendaUserSimulator(goal)), False

    gen_backend = _build_backend(config.generator_backend, "generator_backend")
    ver_spec = config.verifier_backend or config.generator_backend
    same = ver_spec is config.generator_backend or ver_spec == config.generator_backend
    ver_backend = gen_backend if same else _build_backend(ver_spec, "verifier_backend")
    sequential = isinstance(gen_backend, ScriptedBackend)
    cassette_mode = config.cassette.get("mode", "off")
    gen_backend = _wrap_cassette(gen_backend, config.cassette)
    ver_backend = gen_backend if same else _wrap_cassette(ver_backend, config.cassette)
    if cassette_mode == "record":
        sequential = True  # keep the cassette append order reproducible

    prompt_config = PromptConfig(omit_goal=config.omit_goal,
                                 omit_history=config.omit_history,
                                 render_mode=config.context_mode)
    loop_config = config.loop
    if config.simulator == "duet-no-verifier":
        loop_config = LoopConfig(max_iterations=loop_config.max_iterations,
                                 verifier_enabled=False,
                                 on_exhaustion=loop_config.on_exhaustion)

    def factory(goal):
        session = DuetSession(goal=goal, ontology=ontology,
                              generator_backend=gen_backend,
                              verifier_backend=ver_backend,
                              loop_config=loop_config,
                              prompt_config=prompt_config)
        return DuetUserSimulator(session)

    return factory, sequential


def run_experiment(config: ExperimentConfig) -> Path:
    """Run the configured number of dialogues and write logs plus manifest."""
    from .loop import run_dialogue

    ontology, entities = load_world(config.world)
    lint_all_templates()
    factory, sequential = build_simulator_factory(config, ontology, entities)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "logs.jsonl"

    seeds = list(range(config.seed, config.seed + config.dialogues))
    started = time.time()
    failures = []

    def run_one(seed: int):
        goal = generate_goal(seed, ontology, entities)
        user = factory(goal)
        system = SystemAgent(ontology, entities, seed=seed)
        return run_dialogue(goal, user, system,
                            max_user_turns=config.turn_cap, seed=seed)

    results: dict[int, DialogueLog] = {}
    workers = 1 if sequential else config.parallelism
    with open(log_path, "w", encoding="utf-8") as log_file:
        next_to_write = 0

        def flush_ready():
            nonlocal next_to_write
            while next_to_write < len(seeds) and seeds[next_to_write] in results:
                log = results.pop(seeds[next_to_write])
                record = {"v": LOG_SCHEMA_VERSION, "log": log.to_dict()}
                log_file.write(json.dumps(record, sort_keys=True) + "\n")
                log_file.flush()
                next_to_write += 1

        if workers == 1:
            for seed in seeds:
                try:
                    results[seed] = run_one(seed)
                except Exception as e:
                    failures.append({"seed": seed, "error": str(e)})
                    results[seed] = _error_log(seed, ontology, entities)
                flush_ready()
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(run_one, s): s for s in seeds}
                for future, seed in futures.items():
                    try:
                        results[seed] = future.result()
                    except Exception as e:
                        failures.append({"seed": seed, "error": str(e)})
                        results[seed] = _error_log(seed, ontology, entities)
                    flush_ready()

    manifest = {
        "config": {
            "simulator": config.simulator, "world": config.world,
            "dialogues": config.dialogues, "seed": config.seed,
            "turn_cap": config.turn_cap, "context_mode": config.context_mode,
            "omit_goal": config.omit_goal, "omit_history": config.omit_history,
            "loop": {"max_iterations": config.loop.max_iterations,
                     "verifier_enabled": config.loop.verifier_enabled,
                     "on_exhaustion": config.loop.on_exhaustion},
        },
        "version": __version__,
        "templates_digest": templates_digest(),
        "started": started,
        "duration_s": time.time() - started,
        "failures": failures,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)
    return out_dir


def _error_log(seed, ontology, entities) -> DialogueLog:
    from .acts import LogAnnotations
    goal = generate_goal(seed, ontology, entities)
    return DialogueLog(goal=goal, turns=[],
                       annotations=LogAnnotations((), ()),
                       termination_reason="error", seed=seed)


def read_logs(paths) -> list[DialogueLog]:
    logs = []
    for path in paths:
        with open(path, encoding="utf-8") as f:
            for i, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    logs.append(DialogueLog.from_dict(record["log"]))
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise LogParseError(i, f"{path}: {e}") from e
    return logs


# --- click entry points ---

@click.group()
def main():
    """User-simulation harness for task-oriented dialogue."""


def _fail(error: DuetSimError, code: int):
    click.echo(f"error: {error}", err=True)
    raise SystemExit(code)


@main.command()
@click.option("--config", "-c", "config_path", type=click.Path(), default=None,
              help="YAML experiment config; flags override its fields.")
@click.option("--simulator", type=click.Choice(SIMULATOR_KINDS), default=None)
@click.option("--world", type=click.Path(), default=None)
@click.option("--dialogues", "-n", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--turn-cap", type=int, default=None)
@click.option("--parallelism", type=int, default=None)
@click.option("--output-dir", "-o", type=click.Path(), default=None)
@click.option("--context-mode", type=click.Choice(["utterances", "acts"]),
              default=None)
@click.option("--omit-goal", is_flag=True, default=None)
@click.option("--omit-history", is_flag=True, default=None)
def simulate(config_path, **overrides):
    """Run an experiment and write logs plus a manifest."""
    try:
        config = load_config(config_path, overrides)
    except (ConfigError, TypeError) as e:
        _fail(e if isinstance(e, ConfigError) else ConfigError("config", str(e)), 1)
    try:
        out_dir = run_experiment(config)
    except (WorldError, DuetSimError) as e:
        _fail(e, 2)
    click.echo(str(out_dir))


@main.command()
@click.argument("log_paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--world", type=click.Path(), default=None)
@click.option("--format", "fmt", type=click.Choice(["table", "json"]),
              default="table")
def evaluate(log_paths, world, fmt):
    """Compute fulfillment and diversity reports over log files."""
    try:
        logs = read_logs(log_paths)
        if not logs:
            raise EmptyLogSet("no log records found")
        ontology, entities = load_world(world)
        f_report = fulfillment(logs, ontology, entities)
        d_report = diversity(user_utterances(logs))
    except (LogParseError, EmptyLogSet, WorldError) as e:
        _fail(e, 2)
    if fmt == "json":
        click.echo(json.dumps({"fulfillment": f_report.to_dict(),
                               "diversity": d_report.to_dict()}, indent=2))
    else:
        click.echo(render_report(f_report, d_report))


@main.command()
@click.option("--seed", type=int, default=0)
@click.option("--count", type=int, default=1)
@click.option("--world", type=click.Path(), default=None)
def goals(seed, count, world):
    """Print randomly generated user goals in human-readable form."""
    if count < 1:
        _fail(ConfigError("count", "must be >= 1"), 1)
    try:
        ontology, entities = load_world(world)
    except WorldError as e:
        _fail(e, 2)
    for s in range(seed, seed + count):
        goal = generate_goal(s, ontology, entities)
        click.echo(f"[goal seed={s}] {describe_goal(goal)}")


if __name__ == "__main__":
    main()
