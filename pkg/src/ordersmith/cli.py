"""Command-line surface: rank-orderings, select-examples, evaluate, report."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click
import numpy as np

from .data import estimate_prior, load_dataset
from .dist import LabelDist, uniform
from .errors import OrdersmithError
from .evaluation import EvalReport, ReportRow, render_csv, render_markdown
from .experiment import (
    CRITERION_CHOICES,
    Criterion,
    ExperimentConfig,
    Setting,
    run_experiment,
)
from .optimize import (
    CriterionContext,
    CriterionContextFactory,
    rank_and_select,
    sample_orderings,
    select_example_sets,
)
from .prompts import DemoSet


def _load_config(path: str, overrides: dict) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(raw)


def _common_overrides(seed, setting, scoring, criterion, shots, n_orderings, n_keep):
    return {
        "seed": seed,
        "setting": setting,
        "scoring": scoring,
        "criterion": criterion,
        "shots": shots,
        "n_orderings": n_orderings,
        "n_keep": n_keep,
    }


def _selection_inputs(config: ExperimentConfig):
    """Demos, dev view, and prior for a single-seed selection command."""
    space = config.space
    train = load_dataset(config.train_path, space)
    rng = random.Random(config.seed)
    criterion = config.resolved_criterion
    want_dev = criterion is not Criterion.PDO_FEWSHOT and criterion is not Criterion.RANDOM
    demo_idx = rng.sample(range(len(train)), config.shots)
    demos = DemoSet(tuple(train[i] for i in demo_idx))
    dev = []
    if want_dev:
        rest = [i for i in range(len(train)) if i not in set(demo_idx)]
        dev = [train[i] for i in rng.sample(rest, min(config.dev_size, len(rest)))]
    prior = None
    if config.setting is Setting.FEWSHOT_UP and criterion is Criterion.PDO_PRIOR:
        prior = (
            estimate_prior(dev, space)
            if config.prior == "dev"
            else LabelDist(list(config.prior), space)
        )
    elif criterion is Criterion.PDO_PRIOR:
        prior = uniform(space)
    dev_view = dev if criterion is Criterion.ORACLE_NEG_ACC else [e.unlabeled() for e in dev]
    return train, demos, dev_view, prior, rng


common_options = [
    click.option("--seed", type=int, default=None, help="Master RNG seed."),
    click.option(
        "--setting",
        type=click.Choice([s.value for s in Setting]),
        default=None,
        help="Information setting: demos only, plus unlabeled dev set, plus prior.",
    ),
    click.option("--scoring", type=click.Choice(["direct", "pmi"]), default=None),
    click.option("--criterion", type=click.Choice(list(CRITERION_CHOICES)), default=None),
    click.option("--shots", type=int, default=None, help="In-context examples per prompt."),
    click.option("--n-orderings", type=int, default=None, help="Sampled permutations."),
    click.option("--n-keep", type=int, default=None, help="Kept permutations."),
]


def add_options(options):
    def wrap(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return wrap


@click.group()
def main():
    """Select in-context example orderings by matching label distributions."""


@main.command("rank-orderings")
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), default=None)
@add_options(common_options)
def rank_orderings(config_path, output, seed, setting, scoring, criterion, shots, n_orderings, n_keep):
    """Score sampled permutations under the configured criterion and emit them."""
    config = _load_config(
        config_path,
        _common_overrides(seed, setting, scoring, criterion, shots, n_orderings, n_keep),
    )
    _, demos, dev_view, prior, rng = _selection_inputs(config)
    backend = config.backend.build(config.space, config.template)
    ctx = CriterionContext(
        criterion=config.resolved_criterion,
        backend=backend,
        template=config.template,
        space=config.space,
        demos=demos,
        dev_examples=dev_view,
        prior=prior,
    )
    orderings = sample_orderings(config.shots, config.n_orderings, rng.randrange(2**32))
    scored = ctx.score_all(orderings)
    kept = scored if ctx.criterion is Criterion.RANDOM else rank_and_select(scored, config.n_keep)
    payload = {
        "criterion": ctx.criterion.value,
        "demos": [{"text": d.text, "label": d.label_id} for d in demos.demos],
        "sampled": [
            {"permutation": list(s.ordering.perm), "score": s.score} for s in scored
        ],
        "selected": [
            {"permutation": list(s.ordering.perm), "score": s.score} for s in kept
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@main.command("select-examples")
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output", "-o", type=click.Path(), default=None)
@click.option("--n-sets", type=int, default=120, help="Candidate demo sets to sample.")
@click.option("--n-keep-sets", type=int, default=20, help="Demo sets to keep.")
@add_options(common_options)
def select_examples(config_path, output, n_sets, n_keep_sets, seed, setting, scoring,
                    criterion, shots, n_orderings, n_keep):
    """Sample candidate demo sets, score one permutation each, keep the best."""
    config = _load_config(
        config_path,
        _common_overrides(seed, setting, scoring, criterion, shots, n_orderings, n_keep),
    )
    train, demos, dev_view, prior, rng = _selection_inputs(config)
    backend = config.backend.build(config.space, config.template)
    factory = CriterionContextFactory(
        criterion=config.resolved_criterion,
        backend=backend,
        template=config.template,
        space=config.space,
        dev_examples=dev_view,
        prior=prior,
    )
    selected = select_example_sets(
        train, config.shots, n_sets, n_keep_sets, factory, rng.randrange(2**32)
    )
    payload = {
        "criterion": config.resolved_criterion.value,
        "selected_sets": [
            {
                "score": s.score,
                "permutation": list(s.ordering.perm),
                "examples": [{"text": d.text, "label": d.label_id} for d in s.demos.demos],
            }
            for s in selected
        ],
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


@main.command("evaluate")
@click.option("--config", "-c", "config_path", required=True, type=click.Path(exists=True))
@click.option("--artifacts", "-a", required=True, type=click.Path(), help="Artifacts directory.")
@add_options(common_options)
def evaluate(config_path, artifacts, seed, setting, scoring, criterion, shots, n_orderings, n_keep):
    """Run the full selection-and-evaluation protocol, persisting artifacts."""
    config = _load_config(
        config_path,
        _common_overrides(seed, setting, scoring, criterion, shots, n_orderings, n_keep),
    )
    result = run_experiment(config, artifacts)
    r = result.report
    click.echo(
        f"accuracy {r.accuracy_cell()}  ece {r.ece_mean:.1f}  "
        f"runs {r.n_runs}  backend_calls {result.backend_calls}"
    )
    click.echo(f"artifacts in {result.artifacts_dir}")


@main.command("report")
@click.option("--artifacts", "-a", required=True, type=click.Path(exists=True), multiple=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "markdown"]), default="markdown")
@click.option("--output", "-o", type=click.Path(), default=None)
def report(artifacts, fmt, output):
    """Re-render persisted run artifacts as a CSV or Markdown table."""
    rows = []
    for art_dir in artifacts:
        art = Path(art_dir)
        manifest = json.loads((art / "manifest.json").read_text(encoding="utf-8"))
        runs = [
            json.loads(line)
            for line in (art / "runs.jsonl").read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        if not runs:
            raise click.ClickException(f"{art}: no persisted runs")
        accs = np.array([r["accuracy"] for r in runs])
        eces = np.array([r["ece"] for r in runs])
        cfg = manifest["config"]
        rows.append(
            ReportRow(
                dataset=Path(cfg["train_path"]).stem,
                method=f"{cfg['criterion']}/{cfg['setting']}/{cfg['scoring']}",
                report=EvalReport(
                    accuracy_mean=float(accs.mean()) * 100.0,
                    accuracy_std=float(accs.std()) * 100.0,
                    ece_mean=float(eces.mean()) * 100.0,
                    n_runs=len(runs),
                    runs=(),
                ),
            )
        )
    text = render_csv(rows) if fmt == "csv" else render_markdown(rows)
    if output:
        Path(output).write_text(text, encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=False)


def run():
    """Entry point that converts package errors into exit-code-2 messages."""
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.exceptions.Abort:
        sys.exit(1)
    except OrdersmithError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
