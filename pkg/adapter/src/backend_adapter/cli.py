"""Service entry point: `backend-adapter serve [--fake] [--port N]`."""

from __future__ import annotations

import sys

import click
import uvicorn

from .app import create_app
from .models import AdapterConfig


@click.group()
def cli():
    """Model backend adapter for the dataset-construction wire protocol."""


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
@click.option("--fake", is_flag=True, default=False,
              help="Serve deterministic canned outputs instead of real models.")
@click.option("--max-image-side", type=int, default=2048, show_default=True,
              help="Reject images larger than this on either side.")
def serve(host, port, fake, max_image_side):
    """Run the adapter service."""
    config = AdapterConfig(fake=fake, max_image_side=max_image_side)
    try:
        app = create_app(config)
    except RuntimeError as exc:
        raise click.ClickException(str(exc)) from exc
    uvicorn.run(app, host=host, port=port)


def main() -> int:
    try:
        cli.main(standalone_mode=False)
        return 0
    except click.exceptions.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 3
    except click.exceptions.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
