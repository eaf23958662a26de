"""Command-line client for the attentrack service.

Subcommands talk to the HTTP API; without --server the service runs
in-process over an ASGI transport, so no daemon is needed for local use.
`serve` starts a standalone server.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant failure.
"""

import json
import sys

import click
import httpx

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INVARIANT = 3

_KIND_EXIT = {"usage": EXIT_USAGE, "data": EXIT_DATA,
              "invariant": EXIT_INVARIANT}


def _client(server):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import app
    return TestClient(app, base_url="http://attentrack.local",
                      raise_server_exceptions=False)


def _post(server, path, payload):
    with _client(server) as client:
        try:
            resp = client.post(path, json=payload)
        except httpx.HTTPError as exc:
            click.echo(f"error: cannot reach service: {exc}", err=True)
            sys.exit(EXIT_DATA)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", {})
        except ValueError:
            detail = {}
        kind = detail.get("kind", "invariant") if isinstance(detail, dict) \
            else "invariant"
        message = detail.get("message", resp.text) \
            if isinstance(detail, dict) else str(detail)
        click.echo(f"error ({kind}): {message}", err=True)
        sys.exit(_KIND_EXIT.get(kind, EXIT_INVARIANT))
    return resp.json()


@click.group()
def main():
    """Top-view depth-camera head tracking and wall-attention analytics."""


@main.command()
@click.option("--script", "script_path", type=click.Path(), default=None,
              help="Scenario script file; omit with --default-set.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--default-set", is_flag=True,
              help="Render the builtin scenario set instead of one script.")
@click.option("--seed", type=int, default=None)
@click.option("--server", default=None, help="Service URL (default: run "
              "the service in-process).")
def synth(script_path, out_dir, config_path, default_set, seed, server):
    """Render a scenario into depth frames with oracle ground truth."""
    if script_path is None and not default_set:
        click.echo("error (usage): provide --script or --default-set",
                   err=True)
        sys.exit(EXIT_USAGE)
    data = _post(server, "/synth", {
        "script_path": script_path, "out_dir": out_dir,
        "config_path": config_path, "use_default_set": default_set,
        "seed": seed,
    })
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--frames", "frames_dir", type=click.Path(), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--no-track", is_flag=True,
              help="Stop after detection; write detections only.")
@click.option("--heatmap-px-per-sample", type=int, default=1)
@click.option("--refs", "refs_path", type=click.Path(), default=None,
              help="Reference histogram file (default: regenerate).")
@click.option("--server", default=None)
def run(config_path, frames_dir, out_dir, no_track, heatmap_px_per_sample,
        refs_path, server):
    """Run detection, tracking and attention over a frame directory."""
    data = _post(server, "/run", {
        "frames_dir": frames_dir, "out_dir": out_dir,
        "config_path": config_path, "no_track": no_track,
        "heatmap_px_per_sample": heatmap_px_per_sample,
        "refs_path": refs_path,
    })
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--server", default=None)
def refhist(out_path, config_path, server):
    """Regenerate the five reference head histograms."""
    data = _post(server, "/refhist", {
        "out_path": out_path, "config_path": config_path,
    })
    click.echo(json.dumps(data, indent=2))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Start the attentrack HTTP service."""
    import uvicorn
    uvicorn.run("attentrack.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
