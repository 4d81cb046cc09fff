"""Command-line interface.

Exit codes: 0 ok, 2 validation error, 3 backend error, 4 I/O error.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import sys

import click

from defurnish import prompts as promptsmod
from defurnish import synthgen
from defurnish.config import PipelineConfig, load_config
from defurnish.errors import BackendError, PipelineStageError, ValidationError

EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_IO = 4


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def cli(verbose):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _load_pipeline_config(config_path, endpoint, seed) -> PipelineConfig:
    cfg = load_config(config_path) if config_path else PipelineConfig()
    if endpoint:
        cfg.inpaint_url = endpoint
    if seed is not None:
        cfg.seed = seed
    return cfg


@cli.command("defurnish")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--mask", "mask_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--endpoint", help="Backend base URL (overrides config / env).")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
def defurnish_cmd(input_path, labels_path, mask_path, config_path, endpoint, seed, out_path, report_path):
    """Remove furniture from one panorama."""
    import os
    import tempfile

    from defurnish.imageio import encode_png
    from defurnish.pipeline import defurnish_files

    cfg = _load_pipeline_config(config_path, endpoint, seed)
    result, run_report = defurnish_files(
        input_path, cfg, labels_path=labels_path, mask_path=mask_path
    )
    # write atomically so failures never leave partial outputs behind
    data = encode_png(result, compress_level=3)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(out_path)) or ".", suffix=".png")
    with os.fdopen(fd, "wb") as f:
        f.write(data)
    os.replace(tmp, out_path)
    run_report.output_path = out_path
    if report_path:
        payload = {
            "stage_ms": {k: round(v, 2) for k, v in run_report.stage_ms.items()},
            "transform": dataclasses.asdict(run_report.transform) if run_report.transform else None,
            "mask_coverage_pct": round(run_report.mask_coverage_pct, 4),
            "backend_name": run_report.backend_name,
            "output_path": run_report.output_path,
        }
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
    click.echo(f"wrote {out_path} ({run_report.total_ms:.0f} ms, backend {run_report.backend_name})")


@cli.command("synth-data")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--kind", type=click.Choice(["train", "eval"]), default="eval")
@click.option("--count", type=int, default=20)
@click.option("--width", type=int, default=1024)
@click.option("--height", type=int, default=512)
@click.option("--seed", type=int, default=0)
@click.option("--empties", "empties_dir", type=click.Path(exists=True, file_okay=False),
              help="Directory of empty panoramas to composite over (default: synthetic).")
def synth_data_cmd(out_dir, kind, count, width, height, seed, empties_dir):
    """Generate a synthetic dataset plus its manifest."""
    empties = None
    if empties_dir:
        import os

        from defurnish.imageio import load_image

        paths = sorted(
            os.path.join(empties_dir, p) for p in os.listdir(empties_dir) if p.endswith(".png")
        )
        if not paths:
            raise ValidationError(f"no PNG files in {empties_dir}")
        empties = [load_image(p) for p in paths]
    manifest = synthgen.generate_dataset(
        out_dir, kind=kind, count=count, size=(width, height), seed=seed, empties=empties
    )
    click.echo(f"wrote {manifest}")


@cli.command("eval")
@click.option("--manifest", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", "methods", multiple=True, required=True,
              help="NAME=URL; use URL 'none' for the no-op baseline.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def eval_cmd(manifest, methods, config_path, out_path):
    """Score defurnishing methods against ground truth; writes a CSV."""
    from defurnish.pipeline import run_eval_suite

    cfg = load_config(config_path) if config_path else PipelineConfig()
    method_map = {}
    for spec in methods:
        if "=" not in spec:
            raise ValidationError(f"--method must be NAME=URL, got {spec!r}")
        name, url = spec.split("=", 1)
        method_map[name] = url
    report = run_eval_suite(manifest, method_map, cfg)
    with open(out_path, "w", encoding="utf-8") as f:
        f.write(report.to_csv())
    click.echo(f"wrote {out_path} ({len(report.rows)} rows, {len(report.failures)} failures)")
    if report.failures:
        for method, case, err in report.failures:
            click.echo(f"  FAILED {method}/{case}: {err}", err=True)


@cli.group("prompts")
def prompts_group():
    """Prompt set utilities."""


@prompts_group.command("list")
def prompts_list_cmd():
    """Print the training prompts, one per line."""
    for p in promptsmod.enumerate_prompts().prompts:
        click.echo(p)


@cli.command("serve-mock")
@click.option("--mode", type=click.Choice(["identity", "oracle", "constant", "fallback_superres"]),
              default="identity")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8601)
@click.option("--target-dir", type=click.Path(file_okay=False),
              help="Directory of {request_id}.png targets (oracle mode).")
@click.option("--color", default="128,128,128", help="Fill color for constant mode (R,G,B).")
def serve_mock_cmd(mode, host, port, target_dir, color):
    """Run a mock backend in the foreground (Ctrl-C to stop)."""
    from defurnish.mockserver import MockBackendServer

    rgb = tuple(int(c) for c in color.split(","))
    server = MockBackendServer(mode=mode, host=host, port=port, target_dir=target_dir, color=rgb)
    click.echo(f"serving {mode} backend at {server.url}")
    server.serve_forever_with_signals()


def main():
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(130)
    except click.ClickException as exc:
        exc.show()
        sys.exit(EXIT_VALIDATION)
    except (ValidationError, click.UsageError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except PipelineStageError as exc:
        click.echo(f"error: {exc}", err=True)
        cause = exc.cause
        if isinstance(cause, BackendError):
            sys.exit(EXIT_BACKEND)
        if isinstance(cause, OSError):
            sys.exit(EXIT_IO)
        sys.exit(EXIT_VALIDATION)
    except BackendError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_BACKEND)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


if __name__ == "__main__":
    main()
