"""Command line entry points: serve, analyze, replay-check."""

from __future__ import annotations

import argparse
import hashlib
import sys

from .analytics import compute_report, emit_report, write_report
from .api import create_app
from .config import ServiceConfig, load_config
from .errors import CorruptLog, HelpLoopError
from .notifications import LogNotifier, NotificationWorker, SmtpNotifier
from .providers import make_provider
from .service import HelpService
from .store import replay
from .worker import GenerationWorker

__all__ = ["build_app", "main"]


def build_app(config: ServiceConfig):
    """Wire the full service stack from one config object."""
    service = HelpService.open(
        config.log_path,
        snapshot_path=config.snapshot_path,
        policy=config.quota,
        lease_minutes=config.lease_minutes,
        task_catalog=config.tasks,
    )
    provider = make_provider(config.provider)
    generation = GenerationWorker(
        service,
        provider,
        config=config.provider,
        limits=config.sandbox,
        max_workers=config.generation_workers,
    )
    if config.notifier_kind == "smtp":
        notifier = SmtpNotifier(
            config.smtp_host,
            config.smtp_port,
            config.smtp_sender,
            config.instructor_addresses,
            config.student_addresses,
        )
    else:
        notifier = LogNotifier()
    notifications = NotificationWorker(notifier, config.notification_retries)
    notifications.start()
    app = create_app(service, config, generation, notifications)
    return app, service


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    config = load_config(args.config)
    app, _service = build_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    try:
        report = compute_report(args.log)
    except HelpLoopError as exc:
        print(f"analyze failed: {exc}", file=sys.stderr)
        return 1
    if args.report:
        write_report(report, args.report, args.format)
        print(f"report written to {args.report}")
    else:
        sys.stdout.write(emit_report(report, args.format))
    return 0


def _cmd_replay_check(args: argparse.Namespace) -> int:
    try:
        state = replay(args.log)
    except CorruptLog as exc:
        where = (
            f" (sequence {exc.sequence_number})"
            if exc.sequence_number is not None
            else ""
        )
        print(f"corrupt log{where}: {exc}", file=sys.stderr)
        return 1
    except HelpLoopError as exc:
        print(f"replay failed: {exc}", file=sys.stderr)
        return 1
    digest = hashlib.sha256(state.canonical_json().encode("utf-8")).hexdigest()
    print(
        f"ok: {state.last_sequence_number} events, state digest {digest[:16]}"
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="helploop",
        description="AI hint orchestration with instructor escalation",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to the YAML config")
    serve.set_defaults(handler=_cmd_serve)

    analyze = commands.add_parser(
        "analyze", help="recompute deployment metrics from an event log"
    )
    analyze.add_argument("log", help="path to the event log")
    analyze.add_argument("--report", help="write the report to this file")
    analyze.add_argument(
        "--format", choices=("text", "json"), default="text", help="output format"
    )
    analyze.set_defaults(handler=_cmd_analyze)

    check = commands.add_parser(
        "replay-check", help="verify a log replays cleanly and print its digest"
    )
    check.add_argument("log", help="path to the event log")
    check.set_defaults(handler=_cmd_replay_check)

    args = parser.parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
