"""Command-line interface for the FG-UAP toolkit.

This module provides the gen-data, train, attack, eval, transfer, redundancy
and run commands. Every command writes a resolved config next to its outputs.
"""

import logging
import sys
import traceback
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, Optional

import click

from . import __version__
from .config.experiment import (
    AttackSection,
    DataSection,
    ExperimentConfig,
    RedundancySection,
    TrainSection,
    load_experiment_config,
    write_resolved_config,
)
from .config.recipes import list_attack_recipes
from .config.settings import get_settings
from .core.perturbation import AttackMethod, AttackMode
from .exceptions import FGUAPError
from .runner import (
    CHECKPOINT_SUFFIX,
    PERTURBATION_SUFFIX,
    ExperimentRunner,
    dataset_file,
    list_files,
)
from .utils.logging import configure_logging
from .utils.validators import VALID_ARCHITECTURES, parse_budget, sanitize_identifier

logger = logging.getLogger(__name__)


class BudgetType(click.ParamType):
    """An L-inf budget given as a real (``0.04``) or a fraction (``10/255``)."""

    name = "budget"

    def convert(self, value, param, ctx):
        if isinstance(value, float):
            return value
        try:
            return parse_budget(value)
        except ValueError as e:
            self.fail(str(e), param, ctx)


class CountsType(click.ParamType):
    """Comma-separated, strictly descending per-class counts."""

    name = "counts"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            return RedundancySection(counts=value).counts
        except ValueError as e:
            self.fail(f"Invalid counts '{value}': {e}", param, ctx)


BUDGET = BudgetType()
COUNTS = CountsType()
EXISTING_FILE = click.Path(exists=True, dir_okay=False, path_type=Path)
EXISTING_DIR = click.Path(exists=True, file_okay=False, path_type=Path)
OUT_DIR = click.Path(file_okay=False, path_type=Path)


def config_default_map(cfg: ExperimentConfig) -> Dict[str, Dict[str, Any]]:
    """Per-command option defaults derived from an experiment config."""
    root = cfg.output_dir
    data_dir = root / "data"
    split_path = dataset_file(data_dir, cfg.eval.split)
    model_stem = sanitize_identifier(f"{cfg.train.arch}-s{cfg.train.seed}")
    checkpoint = root / "models" / f"{model_stem}{CHECKPOINT_SUFFIX}"

    train_opts = {k: v for k, v in cfg.train.model_dump().items() if v is not None}
    attack_opts = {
        k: (v.value if isinstance(v, (AttackMode, AttackMethod)) else v)
        for k, v in cfg.attack.model_dump().items()
        if v is not None
    }
    return {
        "gen-data": {**cfg.data.model_dump(), "out": data_dir},
        "train": {
            **train_opts,
            "train_data": dataset_file(data_dir, "train"),
            "test_data": dataset_file(data_dir, "test"),
            "out": root / "models",
        },
        "attack": {
            **attack_opts,
            "checkpoint": checkpoint,
            "dataset": dataset_file(data_dir, "train"),
            "out": root / "perturbations",
        },
        "eval": {"checkpoint": checkpoint, "dataset": split_path, "out": root / "reports"},
        "transfer": {"dataset": split_path, "out": root / "reports"},
        "redundancy": {
            "checkpoint": checkpoint,
            "dataset": dataset_file(data_dir, "train"),
            "eval_dataset": split_path,
            "counts": cfg.redundancy.counts,
            "seed": cfg.attack.seed,
            "out": root / "reports",
        },
    }


def _base_config(ctx: click.Context) -> ExperimentConfig:
    return ctx.obj.get("config") or ExperimentConfig()


def _write_resolved(ctx: click.Context, out: Path, **sections: Any) -> None:
    cfg = _base_config(ctx).model_copy(update={**sections, "output_dir": out})
    write_resolved_config(cfg, out)


@contextmanager
def _handle_errors(ctx: click.Context) -> Iterator[None]:
    """Runtime failures print one line and exit 1; usage errors keep click's exit 2."""
    try:
        yield
    except click.ClickException:
        raise
    except (FGUAPError, OSError, ValueError, KeyError) as e:
        if ctx.obj.get("verbose"):
            traceback.print_exc()
        click.echo(f"Error: {e}", err=True)
        sys.exit(1)


def _runner(ctx: click.Context, out: Path) -> ExperimentRunner:
    return ExperimentRunner(settings=ctx.obj["settings"], output_dir=out)


@click.group()
@click.version_option(version=__version__, prog_name="fguap")
@click.option(
    "--verbose",
    "-v",
    is_flag=True,
    help="Enable verbose output",
)
@click.option(
    "--config",
    "-c",
    "config_path",
    type=EXISTING_FILE,
    help="Experiment config (key:value lines); flags override its keys",
)
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write logs to this file",
)
@click.pass_context
def cli(ctx, verbose, config_path, log_file):
    """FG-UAP - universal adversarial perturbations by feature gathering.

    Examples:
        fguap gen-data --seed 0 --out runs/demo/data
        fguap train --arch convnet --train-data runs/demo/data/train.uapdata
        fguap attack --checkpoint runs/demo/models/convnet-s0.uapckpt --dataset runs/demo/data/train.uapdata
        fguap --config experiment.txt run
    """
    ctx.ensure_object(dict)
    settings = get_settings()
    ctx.obj["settings"] = settings
    ctx.obj["verbose"] = verbose
    configure_logging("DEBUG" if verbose else settings.log_level, log_file or settings.log_file)

    ctx.obj["config"] = None
    if config_path is not None:
        with _handle_errors(ctx):
            cfg = load_experiment_config(config_path)
        ctx.obj["config"] = cfg
        ctx.default_map = config_default_map(cfg)


@cli.command("gen-data")
@click.option("--seed", type=click.IntRange(min=0), help="Generation seed (default: FGUAP_DEFAULT_SEED, 0)")
@click.option("--classes", type=click.IntRange(min=2), default=8, show_default=True, help="Number of classes")
@click.option("--per-class-train", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--per-class-test", type=click.IntRange(min=1), default=50, show_default=True)
@click.option("--side", type=click.IntRange(min=8), default=24, show_default=True, help="Image side length")
@click.option("--out", "-o", type=OUT_DIR, default=Path("data"), show_default=True, help="Output directory")
@click.option("--preview", is_flag=True, help="Also write a PNG grid of training samples")
@click.pass_context
def gen_data(ctx, seed, classes, per_class_train, per_class_test, side, out, preview):
    """Generate the synthetic train/test datasets."""
    with _handle_errors(ctx):
        runner = _runner(ctx, out)
        seed = runner.resolve_seed(seed)
        train_path, test_path = runner.generate_data(
            seed, classes, per_class_train, per_class_test, side, out=out, preview=preview
        )
        section = DataSection(
            seed=seed, classes=classes, per_class_train=per_class_train, per_class_test=per_class_test, side=side
        )
        _write_resolved(ctx, out, data=section)
        click.echo(f"Wrote {train_path} and {test_path}")


@cli.command()
@click.option("--arch", type=click.Choice(VALID_ARCHITECTURES), default="convnet", show_default=True)
@click.option("--train-data", type=EXISTING_FILE, required=True, help="Training split file")
@click.option("--test-data", type=EXISTING_FILE, help="Held-out split evaluated each epoch")
@click.option("--seed", type=click.IntRange(min=0), help="Seed (default: FGUAP_DEFAULT_SEED, 0)")
@click.option("--epochs", type=click.IntRange(min=0), help="Epochs (default: architecture recipe)")
@click.option("--batch-size", type=click.IntRange(min=1), help="Batch size (default: recipe)")
@click.option("--lr", type=click.FloatRange(min=0, min_open=True), help="Adam learning rate (default: recipe)")
@click.option("--weight-decay", type=click.FloatRange(min=0), help="L2 weight decay (default: recipe)")
@click.option("--out", "-o", type=OUT_DIR, default=Path("models"), show_default=True)
@click.pass_context
def train(ctx, arch, train_data, test_data, seed, epochs, batch_size, lr, weight_decay, out):
    """Train a victim model and write its checkpoint and history."""
    with _handle_errors(ctx):
        runner = _runner(ctx, out)
        seed = runner.resolve_seed(seed)
        summary = runner.train_model(
            arch,
            train_data,
            test_data,
            seed=seed,
            out=out,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
            weight_decay=weight_decay,
        )
        section = TrainSection(
            arch=arch, seed=seed, epochs=epochs, batch_size=batch_size, lr=lr, weight_decay=weight_decay
        )
        _write_resolved(ctx, out, train=section)
        click.echo(f"Checkpoint: {summary.checkpoint}")
        if summary.train_accuracy is not None:
            click.echo(f"Train accuracy: {summary.train_accuracy:.4f}")
        if summary.test_accuracy is not None:
            click.echo(f"Test accuracy: {summary.test_accuracy:.4f}")


@cli.command()
@click.option("--checkpoint", type=EXISTING_FILE, required=True, help="Surrogate model checkpoint")
@click.option("--dataset", type=EXISTING_FILE, required=True, help="Images to craft on")
@click.option("--recipe", type=click.Choice(list_attack_recipes()), default="default", show_default=True)
@click.option("--method", type=click.Choice([m.value for m in AttackMethod]), default="fg", show_default=True)
@click.option("--mode", type=click.Choice([m.value for m in AttackMode]), default="untargeted", show_default=True)
@click.option("--target-class", type=click.IntRange(min=0), help="Target class (targeted mode)")
@click.option("--xi", type=BUDGET, help="L-inf budget, e.g. 10/255 (default: recipe)")
@click.option("--epochs", type=click.IntRange(min=0), help="Attack epochs (default: recipe)")
@click.option("--batch-size", type=click.IntRange(min=1), help="Batch size (default: recipe)")
@click.option("--lr", type=click.FloatRange(min=0, min_open=True), help="Adam learning rate (default: recipe)")
@click.option("--seed", type=click.IntRange(min=0), help="Seed (default: FGUAP_DEFAULT_SEED, 0)")
@click.option("--augment/--no-augment", default=None, help="Rotate/flip batches (default: recipe)")
@click.option("--mini-set", type=click.IntRange(min=1), help="Craft on about this many images")
@click.option("--png", is_flag=True, help="Also write the perturbation as a PNG")
@click.option("--out", "-o", type=OUT_DIR, default=Path("perturbations"), show_default=True)
@click.pass_context
def attack(
    ctx, checkpoint, dataset, recipe, method, mode, target_class, xi, epochs, batch_size, lr, seed, augment,
    mini_set, png, out,
):
    """Craft a universal perturbation on a surrogate model."""
    if mode == AttackMode.TARGETED.value and target_class is None:
        raise click.UsageError("--mode targeted requires --target-class")
    if mode == AttackMode.UNTARGETED.value and target_class is not None:
        raise click.UsageError("--target-class is only valid with --mode targeted")

    with _handle_errors(ctx):
        runner = _runner(ctx, out)
        seed = runner.resolve_seed(seed)
        cfg = runner.attack_config(
            recipe,
            seed=seed,
            method=method,
            mode=mode,
            target_class=target_class,
            xi=xi,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
            augment=augment,
        )
        p, log = runner.craft(checkpoint, dataset, cfg, out=out, mini_set_size=mini_set, png=png)
        section = AttackSection(
            recipe=recipe,
            method=method,
            mode=mode,
            target_class=target_class,
            xi=xi,
            epochs=epochs,
            batch_size=batch_size,
            lr=lr,
            seed=seed,
            augment=augment,
            mini_set=mini_set,
        )
        _write_resolved(ctx, out, attack=section)
        click.echo(f"Perturbation: {p.perturbation_id} (linf={p.linf:.5f})")
        for epoch, loss in enumerate(log.epoch_losses, start=1):
            click.echo(f"  epoch {epoch}: loss={loss:.6f}")


@cli.command("eval")
@click.option("--checkpoint", type=EXISTING_FILE, required=True, help="Victim model checkpoint")
@click.option("--perturbation", type=EXISTING_FILE, required=True, help="Perturbation file")
@click.option("--dataset", type=EXISTING_FILE, required=True, help="Split to evaluate on")
@click.option("--out", "-o", type=OUT_DIR, default=Path("reports"), show_default=True)
@click.pass_context
def eval_command(ctx, checkpoint, perturbation, dataset, out):
    """Evaluate a perturbation against a victim and write the JSON report."""
    with _handle_errors(ctx):
        report = _runner(ctx, out).evaluate(checkpoint, perturbation, dataset, out=out)
        _write_resolved(ctx, out)
        click.echo(f"Fooling ratio: {report.fooling_ratio:.4f}")
        if report.targeted_fooling_ratio is not None:
            click.echo(f"Targeted fooling ratio: {report.targeted_fooling_ratio:.4f}")
        click.echo(
            f"Dominance D1/D3/D5: {report.dominance_1:.4f} / {report.dominance_3:.4f} / {report.dominance_5:.4f}"
        )
        click.echo(f"Perturbation class: {report.uap_class} (rank {report.uap_class_rank})")


@cli.command()
@click.option("--models-dir", type=EXISTING_DIR, required=True, help="Directory of checkpoints")
@click.option("--perturbations-dir", type=EXISTING_DIR, required=True, help="Directory of perturbations")
@click.option("--dataset", type=EXISTING_FILE, required=True, help="Split to evaluate on")
@click.option("--out", "-o", type=OUT_DIR, default=Path("reports"), show_default=True)
@click.pass_context
def transfer(ctx, models_dir, perturbations_dir, dataset, out):
    """Fooling ratio of every perturbation on every victim."""
    with _handle_errors(ctx):
        checkpoints = list_files(models_dir, CHECKPOINT_SUFFIX)
        perturbations = list_files(perturbations_dir, PERTURBATION_SUFFIX)
        if not checkpoints:
            raise ValueError(f"No checkpoints in {models_dir}")
        if not perturbations:
            raise ValueError(f"No perturbations in {perturbations_dir}")
        matrix = _runner(ctx, out).transfer(checkpoints, perturbations, dataset, out=out)
        _write_resolved(ctx, out)
        for surrogate, victim, fr in matrix.rows():
            click.echo(f"{surrogate} -> {victim}: {fr:.4f}")


@cli.command()
@click.option("--checkpoint", type=EXISTING_FILE, required=True, help="Surrogate model checkpoint")
@click.option("--dataset", type=EXISTING_FILE, required=True, help="Images the subsets are drawn from")
@click.option("--eval-dataset", type=EXISTING_FILE, help="Split the fooling ratios are measured on")
@click.option("--counts", type=COUNTS, default="50,20,10,5,1", show_default=True, help="Per-class counts")
@click.option("--recipe", type=click.Choice(list_attack_recipes()), default="redundancy", show_default=True)
@click.option("--seed", type=click.IntRange(min=0), help="Seed (default: FGUAP_DEFAULT_SEED, 0)")
@click.option("--out", "-o", type=OUT_DIR, default=Path("reports"), show_default=True)
@click.pass_context
def redundancy(ctx, checkpoint, dataset, eval_dataset, counts, recipe, seed, out):
    """Fooling ratio of perturbations crafted on shrinking per-class subsets."""
    with _handle_errors(ctx):
        runner = _runner(ctx, out)
        seed = runner.resolve_seed(seed)
        cfg = runner.attack_config(recipe, seed=seed)
        sweep = runner.redundancy(checkpoint, dataset, counts, cfg, eval_path=eval_dataset, out=out)
        _write_resolved(ctx, out, redundancy=RedundancySection(counts=counts))
        click.echo(f"Full-set fooling ratio: {sweep.full_fr:.4f}")
        for row in sweep.rows:
            ratio = "n/a" if row.ratio_to_full is None else f"{row.ratio_to_full:.4f}"
            click.echo(f"  {row.count} per class: FR={row.fr:.4f} ratio={ratio}")


@cli.command()
@click.option("--out", "-o", type=OUT_DIR, help="Output directory (default: config output_dir)")
@click.pass_context
def run(ctx, out):
    """Run gen-data, train, attack and eval for one experiment config."""
    with _handle_errors(ctx):
        cfg = _base_config(ctx)
        if out is not None:
            cfg = cfg.model_copy(update={"output_dir": out})
        report = _runner(ctx, cfg.output_dir).run(cfg)
        click.echo(f"Outputs: {cfg.output_dir}")
        click.echo(f"Fooling ratio: {report.fooling_ratio:.4f}")
        click.echo(f"Dominance D1: {report.dominance_1:.4f}")


def main():
    """Main entry point for CLI."""
    cli(obj={})


if __name__ == "__main__":
    main()
