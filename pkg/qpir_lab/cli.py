"""Command-line entry point: ``qpir-lab {demo,run,verify,rate,sweep}``.

Exit codes: 0 success, 2 invalid parameters, 3 failed check, 4 I/O error.
"""

from __future__ import annotations

import json
import pathlib
import sys
from dataclasses import asdict
from typing import List, Optional, Union

import numpy as np
import pandas as pd
import tyro
import wandb
from rich.console import Console
from rich.markup import escape
from rich.progress import Progress, SpinnerColumn, TextColumn, TimeElapsedColumn
from rich.table import Table

from qpir_lab import get_output_root
from qpir_lab.config.base import CONFIG_DATETIME_STR
from qpir_lab.config.cli_config import (
    BaseCommandConfig,
    CliCommand,
    DemoConfig,
    RateConfig,
    RunConfig,
    SweepConfig,
    VerifyConfig,
)
from qpir_lab.errors import (
    CheckFailedError,
    DimensionMismatchError,
    QpirError,
    QpirIoError,
)
from qpir_lab.fields import FieldSpec
from qpir_lab.linalg import MatrixGF
from qpir_lab.protocol import (
    QpirScheme,
    SchemeParams,
    Transcript,
    encode_storage,
    random_files,
    run_protocol,
    run_segmented_protocol,
    split_segments,
)
from qpir_lab.timers import LoopTimer
from qpir_lab.verify import (
    CheckResult,
    VerificationReport,
    collusion_rank_check,
    correctness_sweep,
    default_rate_grid,
    measurement_matrix_checks,
    perturb_file,
    rate_table,
    run_suite,
    server_privacy_check,
    sweep_summary,
    worked_example_scheme,
)

EXIT_OK = 0
EXIT_INVALID_PARAMS = 2
EXIT_CHECK_FAILED = 3
EXIT_IO = 4

CommandConfig = Union[DemoConfig, RunConfig, VerifyConfig, RateConfig, SweepConfig]


def resolve_out(cfg: BaseCommandConfig, stem: str, suffix: str = ".json") -> pathlib.Path:
    if cfg.out is not None:
        return cfg.out
    return get_output_root() / f"{stem}_{CONFIG_DATETIME_STR}{suffix}"


def write_text(path: pathlib.Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise QpirIoError(f"Cannot write {path}: {e}") from e


def write_csv(path: pathlib.Path, df: pd.DataFrame) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(path, index=False)
    except OSError as e:
        raise QpirIoError(f"Cannot write {path}: {e}") from e


def load_files(path: pathlib.Path, field: FieldSpec, params: SchemeParams) -> List[MatrixGF]:
    """Reads {"files": [[...], ...]} and cuts it into file matrices of 2 beta k columns."""
    try:
        doc = json.loads(path.read_text())
    except OSError as e:
        raise QpirIoError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise QpirIoError(f"{path} is not valid JSON: {e}") from e

    files = doc.get("files") if isinstance(doc, dict) else None
    if not isinstance(files, list) or not all(isinstance(f, list) for f in files):
        raise QpirIoError(f'{path} must hold a field "files" with {params.m} integer arrays')
    for i, symbols in enumerate(files, start=1):
        bad = [x for x in symbols if isinstance(x, bool) or not isinstance(x, int) or not 0 <= x < params.q]
        if bad:
            raise QpirIoError(f"File {i} in {path} has symbols outside [0, {params.q}): {bad[:5]}")
    try:
        return split_segments(field, files, params)
    except DimensionMismatchError as e:
        raise QpirIoError(f"{path}: {e}") from e


def print_rounds(transcript: Transcript, console: Console) -> None:
    c = transcript.params.c
    table = Table(title=f"Rounds (K = {transcript.K}, measurement = {transcript.measurement})")
    table.add_column("r", justify="right")
    table.add_column("J_r")
    table.add_column("o (shift half)")
    table.add_column("o (phase half)")
    for state in transcript.rounds:
        o = state.o.view(np.ndarray).tolist()
        table.add_row(
            str(state.r),
            " ".join("{" + ",".join(map(str, block)) + "}" for block in state.schedule.blocks),
            escape(str(o[:c])),
            escape(str(o[c:])),
        )
    console.print(table)


def print_checks(checks: List[CheckResult], console: Console, title: str = "Checks") -> None:
    table = Table(title=title)
    for column in ("Suite", "Check", "Result", "Time (ms)", "Details"):
        table.add_column(column, justify="right" if column == "Time (ms)" else "left")
    for check in checks:
        table.add_row(
            check.suite or "",
            escape(check.name),
            "[green]pass[/green]" if check.passed else "[red]FAIL[/red]",
            "" if check.elapsed_ms is None else f"{check.elapsed_ms:.1f}",
            escape(check.details if check.passed else f"{check.details} (witness: {check.witness})"),
        )
    console.print(table)


def print_dataframe(df: pd.DataFrame, console: Console, title: str) -> None:
    table = Table(title=title)
    for column in df.columns:
        table.add_column(str(column))
    for row in df.itertuples(index=False):
        table.add_row(*[escape(str(value)) for value in row])
    console.print(table)


def wandb_log(d: dict) -> None:
    if wandb.run is not None:
        wandb.log(d)


def instance_checks(scheme: QpirScheme, K: int, seed: int) -> List[CheckResult]:
    p = scheme.params
    checks = list(measurement_matrix_checks(scheme.G_S, scheme.V_basis, p.n_eff, p.k, p.t_eff))
    checks.append(collusion_rank_check(scheme))
    if p.m > 1:
        rng = np.random.default_rng(seed)
        storage = encode_storage(random_files(scheme, rng), scheme.storage_code, p.beta)
        other = 2 if K == 1 else 1
        checks.append(server_privacy_check(scheme, storage, perturb_file(storage, other, rng), K, seed))
    for check in checks:
        check.suite = "demo"
    return checks


def cmd_demo(cfg: DemoConfig, console: Console) -> int:
    scheme = worked_example_scheme(m=2)
    rng = np.random.default_rng(cfg.seed)
    storage = encode_storage(random_files(scheme, rng), scheme.storage_code, scheme.params.beta)
    transcript = run_protocol(scheme, storage, cfg.K, cfg.seed)
    if not np.array_equal(transcript.decoded, storage.file(cfg.K)):
        raise CheckFailedError("demo-decoding", "decoded file differs from the stored file", witness=cfg.K)

    print_rounds(transcript, console)
    console.print(
        f"rate {transcript.rate}, {transcript.q_out} qudits, {transcript.retrieved_symbols} symbols"
    )
    out = resolve_out(cfg, "demo")
    write_text(out, transcript.to_json())
    console.print(f"Transcript written to {out}")
    wandb_log(
        {
            "rate": float(transcript.rate),
            "q_out": transcript.q_out,
            "retrieved_symbols": transcript.retrieved_symbols,
        }
    )

    if cfg.verify:
        checks = instance_checks(scheme, cfg.K, cfg.seed)
        print_checks(checks, console)
        if not all(check.passed for check in checks):
            return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_run(cfg: RunConfig, console: Console) -> int:
    scheme = QpirScheme.from_config(cfg.scheme_config())
    params = scheme.params
    if params.normalized:
        console.print(
            f"[yellow]k + t - 1 < n/2: running with t_eff = {params.t_eff} on the first {params.n_eff} servers[/yellow]"
        )

    if cfg.in_path is None:
        segments = [random_files(scheme, np.random.default_rng(cfg.seed))]
    else:
        segments = load_files(cfg.in_path, scheme.field, params)

    if len(segments) == 1:
        transcript = run_protocol(
            scheme, encode_storage(segments[0], scheme.storage_code, params.beta), cfg.K, cfg.seed
        )
        print_rounds(transcript, console)
        decoded, rate, text = transcript.decoded_symbols, transcript.rate, transcript.to_json(cfg.include_queries)
    else:
        segmented = run_segmented_protocol(scheme, segments, cfg.K, cfg.seed)
        decoded, rate, text = segmented.decoded_symbols, segmented.rate, segmented.to_json(cfg.include_queries)

    rows = slice((cfg.K - 1) * params.beta, cfg.K * params.beta)
    expected = [x for X in segments for x in X[rows].view(np.ndarray).reshape(-1).tolist()]
    if decoded != expected:
        raise CheckFailedError("run-decoding", "decoded file differs from the stored file", witness=cfg.K)

    console.print(f"decoded file {cfg.K}: {decoded}")
    console.print(f"rate {rate} over {len(segments)} segment(s)")
    out = resolve_out(cfg, "run")
    write_text(out, text)
    console.print(f"Transcript written to {out}")
    wandb_log({"rate": float(rate), "segments": len(segments)})
    return EXIT_OK


def cmd_verify(cfg: VerifyConfig, console: Console) -> int:
    timer = LoopTimer()
    with Progress(
        TextColumn("[bold green]{task.description}[/bold green]"),
        SpinnerColumn(),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    ) as progress:
        task_id = progress.add_task(f"verify {cfg.suite}", total=None)

        def on_check(check: CheckResult) -> None:
            progress.update(task_id, description=escape(f"{check.suite}: {check.name}"))
            wandb_log({f"{check.suite}/{check.name}": int(check.passed)})

        report: VerificationReport = run_suite(cfg.suite, timer, on_check)

    print_checks(report.checks, console, title=f"Verification ({cfg.suite})")
    if cfg.verbose:
        timer.pretty_print_section_times(console)
    out = resolve_out(cfg, f"verify_{cfg.suite}")
    write_text(out, report.to_json())
    console.print(
        f"{len(report.checks) - len(report.failures)}/{len(report.checks)} checks passed; report written to {out}"
    )
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_rate(cfg: RateConfig, console: Console) -> int:
    grid = list(cfg.grid) if cfg.grid else default_rate_grid(cfg.max_n)
    df = rate_table(grid)
    print_dataframe(df, console, title="R = min(1, 2(n - k - t + 1)/n)")
    if cfg.out is not None:
        write_csv(cfg.out, df)
    return EXIT_OK if bool(df["agrees"].all()) else EXIT_CHECK_FAILED


def cmd_sweep(cfg: SweepConfig, console: Console) -> int:
    timer = LoopTimer()
    df = correctness_sweep(cfg.qs, cfg.seeds, cfg.m_values, cfg.max_n, progress=True, timer=timer)
    summary = sweep_summary(df, cfg.min_supported_share)
    print_dataframe(summary, console, title="Correctness sweep")
    if cfg.verbose:
        timer.pretty_print_section_times(console)
    failed = df[df["status"] == "fail"]
    if not failed.empty:
        print_dataframe(failed, console, title="Failed configurations")
    write_csv(resolve_out(cfg, "sweep", ".csv"), df)
    for row in summary[summary["below_floor"]].itertuples(index=False):
        console.print(
            f"[yellow]Warning: only {row.supported}/{row.tuples} tuples over GF({row.q}) have a weakly "
            f"self-dual code on the default locators (floor {cfg.min_supported_share:.0%})[/yellow]"
        )
    counts = df["status"].value_counts().to_dict()
    console.print(f"status counts: {counts}")
    wandb_log({f"sweep/{status}": count for status, count in counts.items()})
    return EXIT_OK if failed.empty else EXIT_CHECK_FAILED


COMMANDS = {
    DemoConfig: cmd_demo,
    RunConfig: cmd_run,
    VerifyConfig: cmd_verify,
    RateConfig: cmd_rate,
    SweepConfig: cmd_sweep,
}


def main(cfg: CommandConfig, console: Optional[Console] = None) -> int:
    console = Console() if console is None else console
    if cfg.verbose:
        console.print(f"Config:\n{tyro.extras.to_yaml(cfg)}")
    if cfg.wandb is not None:
        wandb.init(
            project=cfg.wandb.project,
            entity=cfg.wandb.entity,
            name=cfg.wandb.name,
            group=cfg.wandb.group,
            job_type=cfg.wandb.job_type or type(cfg).__name__,
            mode=cfg.wandb.mode,
            config=asdict(cfg),
        )

    try:
        return COMMANDS[type(cfg)](cfg, console)
    except CheckFailedError as e:
        console.print(f"[red]Check failed[/red]: {escape(str(e))}")
        return EXIT_CHECK_FAILED
    except QpirIoError as e:
        console.print(f"[red]I/O error[/red]: {escape(str(e))}")
        return EXIT_IO
    except QpirError as e:
        console.print(f"[red]{type(e).__name__}[/red]: {escape(str(e))}")
        return EXIT_INVALID_PARAMS
    finally:
        if wandb.run is not None:
            wandb.finish()


def entrypoint() -> None:
    sys.exit(main(tyro.cli(CliCommand)))


if __name__ == "__main__":
    entrypoint()
