"""
Subcommand runners: each reads its inputs, calls the core operations and
writes its artifacts plus a manifest into the output directory.
"""

import json
import logging
import sys
from dataclasses import replace
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from core.config_manager import RunConfig
from core.content_validity import aggregate_ratings, compare_groups, compare_two, group_summaries
from core.generation import generate_bank
from core.item_parser import parse_completion
from core.items import DEFAULT_SENTINELS, Facet, ItemBank, Provenance, ProvenanceSource, dumps_bank, load_bank, shuffle_bank
from core.prompts import AuditMarkers, build_prompt, load_prompt_spec, strategy_audit, with_target
from core.psychometrics import analyze_study2
from core.reports import Formatter, merge_reports, stability_report, study1_report, study2_report
from core.simulation import RATING_DESIGNS, SimConfig, load_sim_config, simulate, simulate_expert_ratings
from gateways import get_gateway
from gateways.base import BaseGateway
from utils.config_io import config_hash, file_sha256
from utils.data_io import (
    read_group_map,
    read_meta,
    read_ratings,
    read_responses,
    write_group_map,
    write_meta,
    write_ratings,
    write_responses,
)
from utils.error_handler import ConfigError, PartialGeneration
from utils.workspace import WorkspaceLock, atomic_write_text, remove_partials

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
RESOLVED_CONFIG_NAME = "config.resolved.yaml"
VERSIONED_PACKAGES = ("sjt-forge", "numpy", "scipy", "pandas", "pyyaml", "requests", "python-dotenv")


def package_versions() -> Dict[str, Optional[str]]:
    versions: Dict[str, Optional[str]] = {"python": sys.version.split()[0]}
    for name in VERSIONED_PACKAGES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = None
    return versions


class RunContext:
    """Bookkeeping of one subcommand run: inputs read, artifacts written, final status."""

    def __init__(self, command: str, config: RunConfig, out_dir: Path, argv: Optional[Sequence[str]] = None):
        self.command = command
        self.config = config
        self.out_dir = Path(out_dir)
        self.argv = list(argv) if argv is not None else sys.argv[1:]
        self.seed = config.seed
        self.inputs: Dict[str, str] = {}
        self.outputs: List[str] = []
        self.status = "complete"
        self.started_at = datetime.now(timezone.utc).isoformat()
        self.logger = logging.getLogger(__name__)

    def add_input(self, path: Path) -> Path:
        path = Path(path)
        if path.is_file():
            self.inputs[str(path)] = file_sha256(path)
        return path

    def add_output(self, path: Path) -> Path:
        path = Path(path)
        try:
            shown = path.resolve().relative_to(self.out_dir.resolve()).as_posix()
        except ValueError:
            shown = str(path)
        if shown not in self.outputs:
            self.outputs.append(shown)
        self.logger.info(f"Wrote {path}")
        return path

    def write_text(self, path: Path, text: str) -> Path:
        return self.add_output(atomic_write_text(path, text))

    def write_json(self, path: Path, data: Any) -> Path:
        return self.write_text(path, json.dumps(data, ensure_ascii=False, indent=2) + "\n")

    def manifest(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "argv": self.argv,
            "status": self.status,
            "started_at": self.started_at,
            "seed": self.seed,
            "config_hash": config_hash(self.config.raw),
            "config": self.config.raw,
            "versions": package_versions(),
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": self.outputs,
        }

    def finish(self) -> Path:
        self.config.save(self.out_dir / RESOLVED_CONFIG_NAME)
        self.add_output(self.out_dir / RESOLVED_CONFIG_NAME)
        path = self.out_dir / MANIFEST_NAME
        atomic_write_text(path, json.dumps(self.manifest(), ensure_ascii=False, indent=2, default=str) + "\n")
        self.logger.info(f"Run manifest written to {path} ({self.status})")
        return path


def _opt(args: Any, name: str, default: Any = None) -> Any:
    value = getattr(args, name, None)
    return default if value is None else value


def _formatter(config: RunConfig) -> Formatter:
    return Formatter(
        decimal_places=config.report.decimal_places,
        p_decimal_places=config.report.p_decimal_places,
        star_levels=config.report.star_levels,
    )


def _input(ctx: RunContext, args: Any, name: str, key: str) -> Path:
    """A CLI path argument when given, else the configured file."""
    value = getattr(args, name, None)
    if value is not None:
        path = Path(value)
        if not path.is_file():
            raise ConfigError(f"--{name.replace('_', '-')} points to a missing file: {path}")
    else:
        path = ctx.config.require_file(key)
    return ctx.add_input(path)


def _sentinels(config: RunConfig) -> tuple:
    configured = config.generation.question_sentinel
    return tuple(dict.fromkeys((configured,) + DEFAULT_SENTINELS))


def build_gateway(config: RunConfig) -> BaseGateway:
    if config.gateway.mock_script is not None:
        if not config.gateway.mock_script.is_file():
            raise ConfigError(f"Mock script not found: {config.gateway.mock_script}")
        return get_gateway(mock_script=config.gateway.mock_script)
    return get_gateway("openai")


# prompt ----------------------------------------------------------------


def run_prompt(ctx: Optional[RunContext], config: RunConfig, args: Any, stdout=None) -> int:
    stdout = stdout or sys.stdout
    facet = Facet.parse(args.facet)
    version = _opt(args, "version", config.generation.prompt_version)
    if getattr(args, "spec", None):
        spec = load_prompt_spec(Path(args.spec))
        if ctx is not None:
            ctx.add_input(Path(args.spec))
    else:
        spec = config.prompt_spec_for(facet, version)
    if getattr(args, "target", None):
        spec = with_target(spec, args.target)

    prompt = build_prompt(spec)
    stdout.write(prompt + "\n")
    status = 0
    audit_text = None
    if getattr(args, "audit", False):
        markers = AuditMarkers(emotional_stimulus=spec.emotional_stimulus, delimiter=spec.delimiter)
        report = strategy_audit(prompt, spec.declared_strategies, markers)
        lines = ["", f"Strategy audit ({spec.version}):"]
        for strategy in sorted(report.detected):
            mark = "present" if report.detected[strategy] else "absent"
            expected = "expected" if strategy in report.expected else "not expected"
            lines.append(f"  {int(strategy)}. {strategy.description}: {mark} ({expected})")
        lines.append("Audit passed" if report.passed else f"Missing: {[int(s) for s in report.missing]}")
        audit_text = "\n".join(lines)
        stdout.write(audit_text + "\n")
        status = 0 if report.passed else 1

    if ctx is not None:
        stem = f"prompt_{facet.value}_{spec.version}"
        ctx.write_text(ctx.out_dir / f"{stem}.txt", prompt + "\n")
        if audit_text is not None:
            ctx.write_text(ctx.out_dir / f"{stem}.audit.txt", audit_text.lstrip("\n") + "\n")
    return status


# generate --------------------------------------------------------------


def _temp_tag(temperature: float) -> str:
    text = f"{temperature:.1f}"
    return text if float(text) == temperature else f"{temperature:g}"


def bank_name(stem: str, version: Optional[str] = None, temperature: Optional[float] = None) -> str:
    parts = [stem]
    if version is not None:
        parts.append(version)
    if temperature is not None:
        parts.append(f"temp{_temp_tag(temperature)}")
    return "_".join(parts)


def run_generate(ctx: RunContext, config: RunConfig, args: Any) -> int:
    facets = [Facet.parse(f) for f in _opt(args, "facets", config.generation.facets)]
    want = _opt(args, "items_per_facet", config.generation.items_per_facet)
    max_rounds = _opt(args, "max_rounds", config.generation.max_rounds)
    sweep_versions = getattr(args, "versions", None)
    sweep_temperatures = getattr(args, "temperatures", None)
    versions = sweep_versions or [_opt(args, "version", config.generation.prompt_version)]
    temperatures = sweep_temperatures or [config.gateway.params.temperature]
    shuffle = bool(getattr(args, "shuffle_options", False) or config.generation.shuffle_options)
    stem = _opt(args, "bank_name", "bank")

    gateway = build_gateway(config)
    if config.gateway.mock_script is not None:
        ctx.add_input(config.gateway.mock_script)

    for version in versions:
        for temperature in temperatures:
            params = replace(config.gateway.params, temperature=float(temperature))
            name = bank_name(
                stem,
                version if sweep_versions else None,
                float(temperature) if sweep_temperatures else None,
            )
            specs = {facet: config.prompt_spec_for(facet, version, want) for facet in facets}
            for facet, path in config.generation.prompt_specs.items():
                if facet in specs and path is not None:
                    ctx.add_input(path)
            logger.info(f"Generating {name}: {len(facets)} facets x {want} items, {version}, temperature {temperature}")
            try:
                bank, diagnostics = generate_bank(
                    facets,
                    params,
                    want,
                    gateway,
                    version=version,
                    prompt_specs=specs,
                    max_rounds=max_rounds,
                    sentinel=_sentinels(config),
                    bank_id=name,
                    shuffle_seed=ctx.seed if shuffle else None,
                )
            except PartialGeneration as exc:
                ctx.status = "incomplete"
                partial = ItemBank.from_items(f"{name}.incomplete", exc.items)
                ctx.write_text(ctx.out_dir / f"{name}.incomplete.json", dumps_bank(partial))
                ctx.write_json(
                    ctx.out_dir / f"{name}.diagnostics.json",
                    {facet: d.to_dict() for facet, d in dict(exc.diagnostics).items()},
                )
                raise
            ctx.write_text(ctx.out_dir / f"{name}.json", dumps_bank(bank))
            ctx.write_json(ctx.out_dir / f"{name}.diagnostics.json", {f: d.to_dict() for f, d in diagnostics.items()})
            logger.info(f"{name}: {len(bank.items)} items")
    return 0


# parse -----------------------------------------------------------------


def run_parse(ctx: RunContext, config: RunConfig, args: Any) -> int:
    """Parse saved completion texts of one facet into a bank plus an issues sidecar."""
    facet = Facet.parse(args.facet)
    out_file = Path(args.out_file) if getattr(args, "out_file", None) else ctx.out_dir / "bank.json"
    provenance = Provenance(source=ProvenanceSource.LLM_GENERATED, prompt_version=getattr(args, "version", None))

    items = []
    issues: List[Dict[str, Any]] = []
    for raw_path in args.inputs:
        path = Path(raw_path)
        if not path.is_file():
            raise ConfigError(f"Completion file not found: {path}")
        ctx.add_input(path)
        outcome = parse_completion(
            path.read_text(encoding="utf-8"),
            facet,
            id_start=len(items) + 1,
            provenance=provenance,
            sentinel=_sentinels(config),
            delimiter=config.generation.delimiter,
        )
        items.extend(outcome.items)
        issues.extend(
            {"source": path.name, "scenario_index": i.scenario_index, "code": i.code, "excerpt": i.excerpt}
            for i in outcome.issues
        )
        logger.info(f"{path.name}: {outcome.block_count} scenarios, {len(outcome.items)} items, {len(outcome.issues)} issues")

    bank = ItemBank.from_items(out_file.stem, items)
    if getattr(args, "shuffle_options", False) or config.generation.shuffle_options:
        bank = shuffle_bank(bank, ctx.seed)
    if not items:
        logger.warning("No valid items parsed")
    ctx.write_text(out_file, dumps_bank(bank))
    ctx.write_json(out_file.with_name(f"{out_file.stem}.issues.json"), issues)
    return 0


# cv --------------------------------------------------------------------


def run_cv(ctx: RunContext, config: RunConfig, args: Any) -> int:
    """Two groups give the stability comparison; more groups the omnibus comparison."""
    ratings = read_ratings(_input(ctx, args, "ratings", "ratings"))
    group_map = read_group_map(_input(ctx, args, "groups", "groups"))
    threshold = _opt(args, "threshold", 0.75)
    fmt = _formatter(config)

    summaries = aggregate_ratings(ratings, group_map)
    groups = group_summaries(summaries)
    if len(groups) == 2:
        (label_a, a), (label_b, b) = groups.items()
        report = stability_report(compare_two(a, b, label_a=label_a, label_b=label_b), fmt, summaries, threshold)
    else:
        report = study1_report(compare_groups(summaries, threshold=threshold), fmt, summaries, threshold)
    for path in report.write(ctx.out_dir, _opt(args, "name", "cv")):
        ctx.add_output(path)
    return 0


# psych -----------------------------------------------------------------


def run_psych(ctx: RunContext, config: RunConfig, args: Any) -> int:
    records = read_responses(_input(ctx, args, "responses", "responses"))
    meta = read_meta(_input(ctx, args, "meta", "meta"))
    bank = load_bank(_input(ctx, args, "bank", "bank"))

    result = analyze_study2(records, meta, bank, config.inclusion)
    report = study2_report(result, _formatter(config))
    for path in report.write(ctx.out_dir, _opt(args, "name", "psych")):
        ctx.add_output(path)
    return 0


# simulate --------------------------------------------------------------


def _sim_config(ctx: RunContext, config: RunConfig, args: Any) -> SimConfig:
    path = getattr(args, "sim_config", None) or config.files.get("simConfig")
    if path is not None:
        sim = load_sim_config(ctx.add_input(Path(path)))
    else:
        sim = SimConfig()
    if getattr(args, "seed", None) is not None or path is None:
        sim = replace(sim, seed=ctx.seed)
    return sim


def run_simulate(ctx: RunContext, config: RunConfig, args: Any) -> int:
    """Synthetic respondents for a bank, and with ``--ratings`` the expert-rating fixtures of every design."""
    bank_arg = getattr(args, "bank", None) or config.files.get("bank")
    want_ratings = bool(getattr(args, "ratings", False))
    if bank_arg is None and not want_ratings:
        raise ConfigError("simulate needs a bank (--bank or files.bank) or --ratings")

    if bank_arg is not None:
        bank_path = Path(bank_arg)
        if not bank_path.is_file():
            raise ConfigError(f"Bank file not found: {bank_path}")
        bank = load_bank(ctx.add_input(bank_path))
        sim = _sim_config(ctx, config, args)
        output = simulate(sim, bank)
        ctx.add_output(write_responses(output.records, ctx.out_dir / "responses.csv"))
        ctx.add_output(write_meta(output.meta, ctx.out_dir / "meta.csv"))
        ctx.seed = sim.seed

    if want_ratings:
        raters = _opt(args, "raters", 8)
        n_items = _opt(args, "rating_items", 7)
        for offset, (design, profiles) in enumerate(RATING_DESIGNS.items()):
            ratings, group_map = simulate_expert_ratings(profiles, raters, n_items, seed=ctx.seed + offset)
            ctx.add_output(write_ratings(ratings, ctx.out_dir / f"ratings_{design}.csv"))
            ctx.add_output(write_group_map(group_map, ctx.out_dir / f"groups_{design}.csv"))
    return 0


# report ----------------------------------------------------------------


def run_report(ctx: RunContext, config: RunConfig, args: Any) -> int:
    report_path, index_path = merge_reports(ctx.out_dir)
    ctx.add_output(report_path)
    ctx.add_output(index_path)
    return 0


RUNNERS: Dict[str, Callable[[RunContext, RunConfig, Any], int]] = {
    "generate": run_generate,
    "parse": run_parse,
    "cv": run_cv,
    "psych": run_psych,
    "simulate": run_simulate,
    "report": run_report,
}
COMMANDS = ("prompt",) + tuple(RUNNERS)


def output_dir(command: str, config: RunConfig, args: Any) -> Path:
    if command == "parse" and getattr(args, "out_file", None):
        return Path(args.out_file).parent
    if command == "report" and getattr(args, "directory", None):
        return Path(args.directory)
    return Path(_opt(args, "out", config.workspace))


def run(command: str, config: RunConfig, args: Any, argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand under the workspace lock and write its manifest.

    The manifest is written on failure too, with status "failed" or
    "incomplete", before the error propagates.
    """
    if command == "prompt" and getattr(args, "out", None) is None:
        return run_prompt(None, config, args)
    if command not in COMMANDS:
        raise ConfigError(f"Unknown command '{command}'; expected one of {list(COMMANDS)}")

    out_dir = output_dir(command, config, args)
    with WorkspaceLock(out_dir):
        remove_partials(out_dir)
        ctx = RunContext(command, config, out_dir, argv)
        runner = run_prompt if command == "prompt" else RUNNERS[command]
        try:
            status = runner(ctx, config, args)
        except Exception:
            if ctx.status == "complete":
                ctx.status = "failed"
            ctx.finish()
            raise
        if status != 0:
            ctx.status = "failed"
        ctx.finish()
    return status
