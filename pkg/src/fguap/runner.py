"""High-level Python API for FG-UAP experiments.

``ExperimentRunner`` wires settings, datasets, victims, attacks and analysis
together and writes every artifact to disk, so a run can be reproduced from
its resolved config alone.
"""

import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

from .config.experiment import ExperimentConfig, write_resolved_config
from .config.recipes import get_attack_recipe, get_train_recipe, override_recipe
from .config.settings import Settings, get_settings
from .core.attack import AttackConfig, run_attack
from .core.evaluator import UAPEvaluator
from .core.perturbation import Perturbation, load_perturbation, save_perturbation
from .core.studies import RedundancySweep, TransferMatrix, redundancy_sweep, transfer_matrix
from .core.trainer import TrainConfig, train
from .data.storage import load_dataset, save_dataset
from .data.synthetic import LabeledDataset, generate_synthetic, subsample_per_class
from .models.checkpoint import load_checkpoint, save_checkpoint
from .models.networks import Model, build
from .reports.models import AttackLog, DatasetManifest, EvalReport, TrainSummary
from .reports.writers import write_history_csv, write_json, write_redundancy_csv, write_transfer_csv
from .utils.image_utils import dataset_preview, save_perturbation_png
from .utils.validators import sanitize_identifier, validate_arch

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

DATASET_SUFFIX = ".uapdata"
CHECKPOINT_SUFFIX = ".uapckpt"
PERTURBATION_SUFFIX = ".uappert"


def dataset_file(directory: PathLike, split: str) -> Path:
    return Path(directory) / f"{split}{DATASET_SUFFIX}"


def mini_set(ds: LabeledDataset, size: int, seed: int) -> LabeledDataset:
    """Subsample ``ceil(size / K)`` images of every class."""
    if size < 1:
        raise ValueError(f"mini-set size must be >= 1, got {size}")
    return subsample_per_class(ds, math.ceil(size / ds.num_classes), seed)


class ExperimentRunner:
    """
    Runs the dataset, training, attack and evaluation stages.

    Examples:
        >>> runner = ExperimentRunner(output_dir="runs/demo")
        >>> train_path, test_path = runner.generate_data(seed=0)
        >>> summary = runner.train_model("convnet", train_path, test_path)
        >>> p, log = runner.craft(summary.checkpoint, train_path)
        >>> report = runner.evaluate(summary.checkpoint, p, test_path)
    """

    def __init__(
        self,
        settings: Optional[Settings] = None,
        output_dir: Optional[PathLike] = None,
        debug_invariants: Optional[bool] = None,
    ):
        """
        Args:
            settings: Settings to use; read from the environment when omitted
            output_dir: Overrides ``settings.output_dir``
            debug_invariants: Overrides ``settings.debug_invariants``
        """
        self.settings = settings if settings is not None else get_settings()
        self.output_dir = Path(output_dir) if output_dir is not None else Path(self.settings.output_dir)
        self.debug_invariants = (
            self.settings.debug_invariants if debug_invariants is None else debug_invariants
        )
        self.evaluator = UAPEvaluator()
        logger.debug(f"ExperimentRunner writing to {self.output_dir}")

    def resolve_seed(self, seed: Optional[int]) -> int:
        """``seed``, or ``settings.default_seed`` when None."""
        return self.settings.default_seed if seed is None else seed

    def _dir(self, out: Optional[PathLike]) -> Path:
        directory = Path(out) if out is not None else self.output_dir
        directory.mkdir(parents=True, exist_ok=True)
        return directory

    # Datasets

    def generate_data(
        self,
        seed: Optional[int] = None,
        num_classes: int = 8,
        per_class_train: int = 200,
        per_class_test: int = 50,
        side: int = 24,
        out: Optional[PathLike] = None,
        preview: bool = False,
    ) -> Tuple[Path, Path]:
        """Generate both splits and write them with a manifest (and optional preview PNG)."""
        seed = self.resolve_seed(seed)
        directory = self._dir(out)
        train_ds, test_ds = generate_synthetic(seed, num_classes, per_class_train, per_class_test, side)
        train_path = save_dataset(train_ds, dataset_file(directory, "train"))
        test_path = save_dataset(test_ds, dataset_file(directory, "test"))
        manifest = DatasetManifest(
            seed=seed,
            num_classes=num_classes,
            per_class_train=per_class_train,
            per_class_test=per_class_test,
            side=side,
            files={"train": train_path.name, "test": test_path.name},
            num_samples={"train": len(train_ds), "test": len(test_ds)},
        )
        write_json(manifest, directory / "manifest.json")
        if preview:
            dataset_preview(train_ds, directory / "preview.png")
        logger.info(f"Generated {len(train_ds)} train / {len(test_ds)} test images in {directory}")
        return train_path, test_path

    # Victims

    def train_model(
        self,
        arch: str,
        train_path: PathLike,
        test_path: Optional[PathLike] = None,
        seed: Optional[int] = None,
        out: Optional[PathLike] = None,
        **overrides,
    ) -> TrainSummary:
        """
        Train a fresh victim with its architecture's recipe.

        Keyword overrides (epochs, batch_size, lr, weight_decay) replace recipe
        values when not None. ``seed`` falls back to ``settings.default_seed``.
        """
        validate_arch(arch)
        seed = self.resolve_seed(seed)
        directory = self._dir(out)
        train_ds = load_dataset(train_path)
        test_ds = load_dataset(test_path) if test_path is not None else None
        cfg = override_recipe(get_train_recipe(arch), overrides).to_train_config(seed=seed)

        model = build(arch, train_ds.num_classes, seed, train_ds.input_shape)
        result = train(model, train_ds, cfg, test_ds=test_ds)
        return self._save_trained(result.model, result.history, cfg, directory)

    def _save_trained(self, model: Model, history, cfg: TrainConfig, directory: Path) -> TrainSummary:
        stem = sanitize_identifier(model.model_id)
        ckpt = save_checkpoint(model, directory / f"{stem}{CHECKPOINT_SUFFIX}")
        hist = write_history_csv(history, directory / f"{stem}_history.csv")
        summary = TrainSummary(
            model_id=model.model_id,
            arch=model.arch,
            epochs=cfg.epochs,
            train_accuracy=history[-1].train_acc if history else None,
            test_accuracy=history[-1].test_acc if history else None,
            checkpoint=str(ckpt),
            history=str(hist),
        )
        write_json(summary, directory / f"{stem}_train.json")
        return summary

    # Attacks

    def attack_config(self, recipe: str = "default", seed: Optional[int] = None, **overrides) -> AttackConfig:
        """Resolve an AttackConfig from a preset plus non-None overrides."""
        return get_attack_recipe(recipe).to_attack_config(seed=self.resolve_seed(seed), **overrides)

    def craft(
        self,
        checkpoint: PathLike,
        dataset_path: PathLike,
        cfg: Optional[AttackConfig] = None,
        out: Optional[PathLike] = None,
        mini_set_size: Optional[int] = None,
        png: bool = False,
    ) -> Tuple[Perturbation, AttackLog]:
        """Craft a perturbation on ``dataset_path`` and write it with its attack log."""
        directory = self._dir(out)
        model = load_checkpoint(checkpoint)
        ds = load_dataset(dataset_path)
        cfg = cfg if cfg is not None else self.attack_config()
        if mini_set_size is not None:
            ds = mini_set(ds, mini_set_size, cfg.seed)
            logger.info(f"Crafting on a mini-set of {len(ds)} images")

        result = run_attack(model, ds, cfg, debug_invariants=self.debug_invariants)
        p = result.perturbation
        stem = sanitize_identifier(p.perturbation_id)
        save_perturbation(p, directory / f"{stem}{PERTURBATION_SUFFIX}")
        log = AttackLog(
            perturbation_id=p.perturbation_id,
            surrogate_id=p.surrogate_id,
            method=p.method.value,
            mode=p.mode.value,
            target_class=p.target_class,
            batch_size=cfg.batch_size,
            epochs=cfg.epochs,
            lr=cfg.lr,
            xi=cfg.xi,
            seed=cfg.seed,
            augment=cfg.augment,
            num_samples=len(ds),
            epoch_losses=result.epoch_losses,
            linf=p.linf,
        )
        write_json(log, directory / f"{stem}_attack.json")
        if png:
            save_perturbation_png(p, directory / f"{stem}.png")
        return p, log

    # Analysis

    def evaluate(
        self,
        checkpoint: PathLike,
        perturbation: Union[Perturbation, PathLike],
        dataset_path: PathLike,
        out: Optional[PathLike] = None,
    ) -> EvalReport:
        """Evaluate a perturbation against a victim and write the JSON report."""
        directory = self._dir(out)
        model = load_checkpoint(checkpoint)
        p = perturbation if isinstance(perturbation, Perturbation) else load_perturbation(perturbation)
        report = self.evaluator.evaluate(model, load_dataset(dataset_path), p)
        name = f"eval_{sanitize_identifier(model.model_id)}_{sanitize_identifier(p.perturbation_id)}.json"
        write_json(report, directory / name)
        return report

    def transfer(
        self,
        checkpoints: Sequence[PathLike],
        perturbations: Sequence[PathLike],
        dataset_path: PathLike,
        out: Optional[PathLike] = None,
    ) -> TransferMatrix:
        """Transfer matrix over the given files, written as ``transfer.csv``."""
        if not checkpoints or not perturbations:
            raise ValueError("transfer needs at least one checkpoint and one perturbation")
        directory = self._dir(out)
        models = [load_checkpoint(path) for path in sorted(map(Path, checkpoints))]
        perts = [load_perturbation(path) for path in sorted(map(Path, perturbations))]
        matrix = transfer_matrix(models, perts, load_dataset(dataset_path))
        for surrogate, is_max in zip(matrix.surrogates, matrix.white_box_is_row_max()):
            if is_max is False:
                logger.warning(f"White-box entry of {surrogate} is not the maximum of its row")
        write_transfer_csv(matrix, directory / "transfer.csv")
        return matrix

    def redundancy(
        self,
        checkpoint: PathLike,
        dataset_path: PathLike,
        counts: Sequence[int],
        cfg: Optional[AttackConfig] = None,
        eval_path: Optional[PathLike] = None,
        out: Optional[PathLike] = None,
    ) -> RedundancySweep:
        """Per-class redundancy sweep, written as ``redundancy.csv``."""
        directory = self._dir(out)
        model = load_checkpoint(checkpoint)
        cfg = cfg if cfg is not None else self.attack_config("redundancy")
        eval_ds = load_dataset(eval_path) if eval_path is not None else None
        sweep = redundancy_sweep(model, load_dataset(dataset_path), counts, cfg, eval_ds=eval_ds)
        write_redundancy_csv(sweep, directory / "redundancy.csv")
        return sweep

    # Pipeline

    def run(self, cfg: ExperimentConfig) -> EvalReport:
        """
        gen-data, train, attack and eval for one experiment config.

        Artifacts go to ``cfg.output_dir`` in data/, models/, perturbations/
        and reports/ subdirectories, next to the resolved config.
        """
        root = self._dir(cfg.output_dir)
        write_resolved_config(cfg, root)
        data = cfg.data
        train_path, test_path = self.generate_data(
            data.seed, data.classes, data.per_class_train, data.per_class_test, data.side, out=root / "data"
        )

        t = cfg.train
        summary = self.train_model(
            t.arch,
            train_path,
            test_path,
            seed=t.seed,
            out=root / "models",
            epochs=t.epochs,
            batch_size=t.batch_size,
            lr=t.lr,
            weight_decay=t.weight_decay,
        )

        a = cfg.attack
        attack_cfg = self.attack_config(
            a.recipe,
            seed=a.seed,
            epochs=a.epochs,
            batch_size=a.batch_size,
            lr=a.lr,
            xi=a.xi,
            augment=a.augment,
            mode=a.mode,
            target_class=a.target_class,
            method=a.method,
        )
        p, _ = self.craft(
            summary.checkpoint,
            train_path,
            attack_cfg,
            out=root / "perturbations",
            mini_set_size=a.mini_set,
            png=True,
        )

        self.evaluator = UAPEvaluator(include_collapse=cfg.eval.collapse, include_per_class=cfg.eval.per_class)
        eval_path = test_path if cfg.eval.split == "test" else train_path
        report = self.evaluate(summary.checkpoint, p, eval_path, out=root / "reports")
        logger.info(f"Pipeline finished: FR={report.fooling_ratio:.4f} in {root}")
        return report


def list_files(directory: PathLike, suffix: str) -> List[Path]:
    """Sorted files with ``suffix`` in ``directory``."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix == suffix)
