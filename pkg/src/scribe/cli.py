"""Command line entry points: simulate, replay, report, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .experiment import (
    ADAPT,
    FIXED,
    EngineConfig,
    ExperimentLog,
    build_pool,
    make_writers,
    per_character_rates,
    replay_fixed,
    run_condition,
    session_reports,
    user_reports,
)
from .prototypes import load_prototypes, save_prototypes, train_typical_prototypes
from .service import DATA_DIR_ENV, create_app, default_data_dir, default_service
from .writers import WriterProfile, base_templates


@click.group()
def main():
    """Adaptive handwriting channel: simulation, replay, reporting, serving."""


def _data_path(name: str) -> Path:
    d = default_data_dir()
    d.mkdir(parents=True, exist_ok=True)
    return d / name


@main.command()
@click.option("--users", default=15, show_default=True)
@click.option("--sessions", default=20, show_default=True)
@click.option("--condition", type=click.Choice([ADAPT, FIXED, "both"]), default="both",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help=f"Log path (default: log.jsonl under ${DATA_DIR_ENV}).")
@click.option("--prototypes-out", type=click.Path(path_type=Path), default=None,
              help="Where to store the generation-0 prototypes.")
def simulate(users, sessions, condition, seed, out, prototypes_out):
    """Run synthetic writers through the writing game."""
    out = out or _data_path("log.jsonl")
    prototypes_out = prototypes_out or _data_path("p0.json")
    profile = WriterProfile()
    cfg = EngineConfig()
    templates = base_templates()
    pool = build_pool(seed, profile=profile, resample_len=cfg.adapt.resample_len,
                      templates=templates)
    p0 = train_typical_prototypes(pool, cfg.adapt.k_typical, seed=cfg.adapt.seed)
    save_prototypes(p0, prototypes_out)

    logs = []
    if condition in (ADAPT, "both"):
        writers = make_writers(users, seed, profile, templates=templates)
        adapt_log = run_condition(writers, sessions, ADAPT, p0, pool, cfg, seed=seed)
        logs.append(adapt_log)
        if condition == "both":
            logs.append(replay_fixed(adapt_log, p0, cfg))
    else:
        writers = make_writers(users, seed, profile, templates=templates)
        logs.append(run_condition(writers, sessions, FIXED, p0, pool, cfg, seed=seed))

    merged = ExperimentLog([r for log in logs for r in log.records])
    merged.save(out)
    click.echo(f"wrote {len(merged)} records to {out}; prototypes at {prototypes_out}")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--prototypes", "proto_path", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
def replay(log_path, proto_path, out):
    """Re-decode a recorded log against frozen generation-0 prototypes."""
    log = ExperimentLog.load(log_path)
    p0 = load_prototypes(proto_path)
    replayed = replay_fixed(log, p0)
    out = out or _data_path("replayed.jsonl")
    replayed.save(out)
    click.echo(f"wrote {len(replayed)} replayed records to {out}")


@main.command()
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--group", type=click.Choice(["session", "user", "character"]),
              default="session", show_default=True)
def report(log_path, group):
    """Channel reports as JSON lines, grouped as requested."""
    log = ExperimentLog.load(log_path)
    conditions = sorted({r.condition for r in log.records})
    for condition in conditions:
        sub = log.filter(condition=condition) if len(conditions) > 1 else log
        if group == "session":
            for (user, session), rep in session_reports(sub).items():
                line = {"condition": condition, "user": user, "session": session}
                line.update(json.loads(rep.to_json()))
                click.echo(json.dumps(line))
        elif group == "user":
            for user, rep in user_reports(sub).items():
                line = {"condition": condition, "user": user}
                line.update(json.loads(rep.to_json()))
                click.echo(json.dumps(line))
        else:
            for label, rep in per_character_rates(sub).items():
                line = {"condition": condition, "character": label}
                line.update(json.loads(rep.to_json()))
                click.echo(json.dumps(line))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help=f"State directory (default: ${DATA_DIR_ENV} or cwd).")
def serve(host, port, seed, data_dir):
    """Start the HTTP API for the writing game UI."""
    import uvicorn

    service = default_service(data_dir=data_dir, seed=seed)
    app = create_app(service)
    click.echo(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
