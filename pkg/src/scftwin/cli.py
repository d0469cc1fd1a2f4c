"""Operator command line: run scenarios, verify ledgers, serve the API,
re-emit reports.

Exit codes are fixed so shell harnesses stay stable:
    0  success
    2  invalid input (scenario file, missing directory)
    3  invariant violation during a run
    4  ledger corruption detected
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import PlatformConfig
from .simulator import InvalidConfig, ScenarioConfig, build_twin, drive, generate
from .store import BlockStore, CorruptLog, attach_persistence, init_store, open_twin
from .twin import default_actors

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_INVARIANT = 3
EXIT_CORRUPT = 4


def _load_platform_config(path: str | None) -> PlatformConfig:
    config = PlatformConfig.from_file(path) if path else PlatformConfig()
    return config.with_env_overrides()


def cmd_run(args) -> int:
    try:
        scenario = ScenarioConfig.from_file(args.scenario)
    except InvalidConfig as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    if args.seed is not None:
        scenario.seed = args.seed
    platform_config = _load_platform_config(args.config)

    if args.data:
        actors = default_actors(
            list(scenario.stakeholders),
            investors=list(scenario.investors),
            observers=list(scenario.observers),
            spv_id=platform_config.spv_id,
            bank_id=platform_config.bank_id,
        )
        meta = {"config": platform_config.to_dict(), "scenario": scenario.name, "seed": scenario.seed}
        try:
            twin, _ = init_store(args.data, actors, platform_config, meta=meta)
        except FileExistsError as e:
            print(str(e), file=sys.stderr)
            return EXIT_INVALID_INPUT
    else:
        twin = build_twin(scenario, platform_config)

    script = generate(scenario, platform_config)
    outcome = drive(script, twin, scenario_name=scenario.name, seed=scenario.seed)
    report = outcome.report
    if not report["conservation"]["ok"]:
        print("invariant violation: token conservation failed", file=sys.stderr)
        return EXIT_INVARIANT
    verify = twin.ledger.verify()
    if not verify.ok:
        print(f"invariant violation: chain corrupt at {verify.first_corrupt_height}", file=sys.stderr)
        return EXIT_INVARIANT
    out = Path(args.out) if args.out else None
    payload = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        out.write_text(payload)
    else:
        print(payload, end="")
    return EXIT_OK


def cmd_verify_ledger(args) -> int:
    data = Path(args.data)
    if not data.is_dir() or not (data / "blocks.log").exists():
        print(f"no ledger found under {data}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    store = BlockStore(data)
    ok, height, reason = store.verify_log()
    if ok:
        print("ok")
        return EXIT_OK
    print(f"corrupt at height {height}: {reason}")
    return EXIT_CORRUPT


def cmd_report(args) -> int:
    data = Path(args.data)
    if not data.is_dir() or not (data / "blocks.log").exists():
        print(f"no ledger found under {data}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    try:
        twin, store = open_twin(data)
    except CorruptLog as e:
        print(str(e), file=sys.stderr)
        return EXIT_CORRUPT
    meta = store.read_meta()
    payload = twin.report_bytes(meta.get("scenario", ""), meta.get("seed"))
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode())
    return EXIT_OK


def cmd_serve(args) -> int:
    from .service import serve

    platform_config = _load_platform_config(args.config)
    if args.port is not None:
        from dataclasses import replace

        platform_config = replace(platform_config, port=args.port)
    data = Path(args.data)
    monitoring_log = data / "monitoring.jsonl"
    if (data / "blocks.log").exists():
        try:
            twin, store = open_twin(data, platform_config)
        except CorruptLog as e:
            print(str(e), file=sys.stderr)
            return EXIT_CORRUPT
    else:
        if not platform_config.tokens:
            print("fresh serve needs a config file with tokens and actors", file=sys.stderr)
            return EXIT_INVALID_INPUT
        if platform_config.actors:
            from .twin import ActorSpec

            actors = [ActorSpec(a, r) for a, r in platform_config.actors]
            ids = {a.actor_id for a in actors}
            extra = default_actors([], spv_id=platform_config.spv_id, bank_id=platform_config.bank_id)
            actors.extend(a for a in extra if a.actor_id not in ids)
        else:
            stakeholders = sorted({nid for nid in platform_config.tokens.values()})
            actors = default_actors(stakeholders, spv_id=platform_config.spv_id, bank_id=platform_config.bank_id)
        twin, store = init_store(data, actors, platform_config, meta={"config": platform_config.to_dict()})
    serve(twin, platform_config, monitoring_log=monitoring_log)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="scftwin", description="supply-chain finance digital twin")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="drive a scenario and write the run report")
    p_run.add_argument("--scenario", required=True, help="scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", default=None, help="report output path (default: stdout)")
    p_run.add_argument("--data", default=None, help="persist the chain into this directory")
    p_run.add_argument("--config", default=None, help="platform config JSON file")
    p_run.set_defaults(fn=cmd_run)

    p_verify = sub.add_parser("verify-ledger", help="verify a persisted chain")
    p_verify.add_argument("--data", required=True, help="data directory")
    p_verify.set_defaults(fn=cmd_verify_ledger)

    p_report = sub.add_parser("report", help="replay a data directory and emit its report")
    p_report.add_argument("--data", required=True, help="data directory")
    p_report.add_argument("--out", default=None, help="report output path (default: stdout)")
    p_report.set_defaults(fn=cmd_report)

    p_serve = sub.add_parser("serve", help="serve the HTTP API over a data directory")
    p_serve.add_argument("--data", required=True, help="data directory (resumed if it has a chain)")
    p_serve.add_argument("--config", default=None, help="platform config JSON file")
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
