import logging
import sys

import click

from app.api import evaluate, lighting, removal, synth
from app.core.errors import ConfigError, KitError

logger = logging.getLogger("app")


@click.group(name="prk", context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Person-removal toolkit: synthesize triplets, fit lighting, remove, evaluate."""


cli.add_command(synth.synth_mosaic)
cli.add_command(synth.synth_render)
cli.add_command(lighting.fit_light)
cli.add_command(removal.remove_person)
cli.add_command(evaluate.evaluate)
cli.add_command(evaluate.ablate)
cli.add_command(evaluate.split_manifest)
cli.add_command(evaluate.validate)


def dispatch(argv: list[str] | None = None) -> int:
    """
    Runs one subcommand and maps the outcome to an exit code: 0 success,
    1 failure, 2 usage or configuration error.
    """
    try:
        rv = cli.main(args=argv, prog_name="prk", standalone_mode=False)
    except click.UsageError as e:
        if e.ctx is not None:
            click.echo(e.ctx.get_help(), err=True)
            click.echo(err=True)
        e.show()
        return 2
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except ConfigError as e:
        logger.error("%s", e)
        return 2
    except KitError as e:
        logger.error("%s", e)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(dispatch())
