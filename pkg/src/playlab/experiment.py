"""Experiment drivers: perturbation detection and cross-language testing.

Each grid cell (language, arena order, arena width, training size) owns its
corpora and model.  Corpora come from substreams labeled by role and cell,
so train, validation, and test data never share a stream:

    train       derive_seed(seed, "train", lang, order, width, size)
    validation  derive_seed(seed, "validation", ...)
    test        derive_seed(seed, "test", ...)
    perturb     derive_seed(seed, "perturb", ...)
    model init  derive_seed(seed, "model", ...)

A report collects per-cell train/validation/test perplexities; figures are
grouped bar charts (one SVG per language and training size) rendered
directly from report values.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .arena import make_arena, uniform_tree
from .corpus import Corpus, Vocab, build_vocab, generate_corpus, perturb
from .play import CONCURRENT, SEQUENTIAL
from .rng import derive_seed, substream
from .seqmodel import LstmModel, ModelConfig, init_model, perplexity, train_model

PERTURBED = "perturbed"
CROSS_LANGUAGE = "cross-language"

CSV_HEADER = ["lang", "order", "width", "train_size", "set", "perplexity"]
BAR_SETS = ("train", "validation", "test")
BAR_COLORS = {"train": "navy", "validation": "turquoise", "test": "yellow"}


@dataclass(frozen=True)
class ExperimentSpec:
    """Grid and budget for one experiment run.

    The default is the desk-scale grid (orders 1-2, hidden 128, 10k
    training plays, 4 epochs); ``full()`` restores the large grid with
    orders 1-3, training sizes 10k and 100k, hidden 200 and 13 epochs.
    """

    languages: tuple[str, ...] = (SEQUENTIAL, CONCURRENT)
    orders: tuple[int, ...] = (1, 2)
    widths: tuple[int, ...] = (1, 5)
    train_sizes: tuple[int, ...] = (10_000,)
    eval_size: int = 10_000
    max_len: int = 50
    p_stop: float = 0.05
    perturb_ratio: float = 0.1
    hidden_dim: int = 128
    embed_dim: int | None = None  # None: same as hidden_dim
    layers: int = 2
    unroll: int = 20
    batch: int = 20
    epochs: int = 4
    seed: int = 0

    @classmethod
    def desk(cls, seed: int = 0) -> "ExperimentSpec":
        return cls(seed=seed)

    @classmethod
    def full(cls, seed: int = 0) -> "ExperimentSpec":
        return cls(
            orders=(1, 2, 3),
            train_sizes=(10_000, 100_000),
            hidden_dim=200,
            epochs=13,
            seed=seed,
        )

    def model_config(self, vocab_size: int, seed: int) -> ModelConfig:
        return ModelConfig(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim or self.hidden_dim,
            hidden_dim=self.hidden_dim,
            layers=self.layers,
            unroll=self.unroll,
            batch=self.batch,
            epochs=self.epochs,
            seed=seed,
        )


@dataclass(frozen=True)
class ReportCell:
    lang: str
    order: int
    width: int
    train_size: int
    test_kind: str  # PERTURBED | CROSS_LANGUAGE | "" when read back from CSV
    train_ppl: float
    validation_ppl: float
    test_ppl: float

    @property
    def test_over_validation(self) -> float:
        return self.test_ppl / self.validation_ppl

    @property
    def validation_over_train(self) -> float:
        return self.validation_ppl / self.train_ppl

    def values(self) -> tuple[float, float, float]:
        return (self.train_ppl, self.validation_ppl, self.test_ppl)

    def label(self) -> str:
        return f"{self.lang}/order{self.order}/width{self.width}/n{self.train_size}"


@dataclass
class Report:
    cells: list[ReportCell] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)


def _concat_ids(vocab: Vocab, corpus: Corpus) -> np.ndarray:
    return np.concatenate([vocab.encode(seq) for seq in corpus.plays])


def train_cell_model(
    spec: ExperimentSpec, lang: str, order: int, width: int, size: int
) -> tuple[LstmModel, Vocab, Corpus]:
    """Train one cell's model on a fresh training corpus."""
    arena = make_arena(uniform_tree(order, width))
    vocab = build_vocab(arena)
    cell = (lang, order, width, size)
    train = generate_corpus(
        arena, lang, size, spec.max_len, derive_seed(spec.seed, "train", *cell), spec.p_stop
    )
    config = spec.model_config(len(vocab), derive_seed(spec.seed, "model", *cell))
    model = init_model(config)
    train_model(model, _concat_ids(vocab, train))
    return model, vocab, train


def _eval_ppl(model: LstmModel, vocab: Vocab, plays) -> float:
    return perplexity(model, [vocab.encode(seq) for seq in plays]).perplexity


def run_cell(
    spec: ExperimentSpec, mode: str, lang: str, order: int, width: int, size: int
) -> ReportCell:
    """Train and evaluate one grid cell.

    ``mode`` picks the test set: PERTURBED mutates fresh legal plays of the
    same language; CROSS_LANGUAGE evaluates legal plays of the other
    language on the same arena.
    """
    arena = make_arena(uniform_tree(order, width))
    cell = (lang, order, width, size)
    model, vocab, train = train_cell_model(spec, *cell)
    validation = generate_corpus(
        arena, lang, spec.eval_size, spec.max_len,
        derive_seed(spec.seed, "validation", *cell), spec.p_stop,
    )
    if mode == PERTURBED:
        base = generate_corpus(
            arena, lang, spec.eval_size, spec.max_len,
            derive_seed(spec.seed, "test", *cell), spec.p_stop,
        )
        pseed = derive_seed(spec.seed, "perturb", *cell)
        test_plays = [
            perturb(seq, vocab, spec.perturb_ratio, substream(pseed, i))
            for i, seq in enumerate(base.plays)
        ]
    elif mode == CROSS_LANGUAGE:
        other = CONCURRENT if lang == SEQUENTIAL else SEQUENTIAL
        test_plays = generate_corpus(
            arena, other, spec.eval_size, spec.max_len,
            derive_seed(spec.seed, "test", *cell), spec.p_stop,
        ).plays
    else:
        raise ValueError(f"unknown test mode {mode!r}")
    return ReportCell(
        lang, order, width, size, mode,
        _eval_ppl(model, vocab, train.plays),
        _eval_ppl(model, vocab, validation.plays),
        _eval_ppl(model, vocab, test_plays),
    )


def _run_grid(spec: ExperimentSpec, mode: str, threads: int, progress) -> Report:
    cells = [
        (lang, order, width, size)
        for lang in spec.languages
        for order in spec.orders
        for width in spec.widths
        for size in spec.train_sizes
    ]
    report = Report()

    def one(cell):
        if progress is not None:
            progress(f"cell {'/'.join(map(str, cell))}: start")
        result = run_cell(spec, mode, *cell)
        if progress is not None:
            progress(
                f"cell {'/'.join(map(str, cell))}: train={result.train_ppl:.3f} "
                f"validation={result.validation_ppl:.3f} test={result.test_ppl:.3f}"
            )
        return result

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(cell, pool.submit(one, cell)) for cell in cells]
            outcomes = [(cell, _outcome(f)) for cell, f in futures]
    else:
        outcomes = []
        for cell in cells:
            try:
                outcomes.append((cell, (one(cell), None)))
            except MemoryError as e:
                outcomes.append((cell, (None, f"out of memory: {e}")))
    for cell, (result, error) in outcomes:
        if result is not None:
            report.cells.append(result)
        else:
            report.failures.append(("/".join(map(str, cell)), error))
    return report


def _outcome(future):
    try:
        return future.result(), None
    except MemoryError as e:
        return None, f"out of memory: {e}"


def run_perturbation_experiment(
    spec: ExperimentSpec, threads: int = 1, progress=None
) -> Report:
    """Per cell: train on legal plays, test on edit-perturbed fresh plays.

    A model that has learned the play language scores the perturbed set
    much worse than validation while validation stays close to training.
    """
    return _run_grid(spec, PERTURBED, threads, progress)


def run_cross_language_experiment(
    spec: ExperimentSpec, threads: int = 1, progress=None
) -> Report:
    """Per cell: train on one language, test on the other (same arena)."""
    return _run_grid(spec, CROSS_LANGUAGE, threads, progress)


def emit_report(report: Report, path) -> Path:
    """CSV, one row per cell and data set, perplexities as full-precision repr."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for cell in report.cells:
            for name, value in zip(BAR_SETS, cell.values()):
                writer.writerow(
                    [cell.lang, cell.order, cell.width, cell.train_size, name, repr(value)]
                )
    return path


def parse_report(path) -> Report:
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {','.join(CSV_HEADER)}")
    table: dict[tuple, dict[str, float]] = {}
    for lang, order, width, size, name, value in rows[1:]:
        table.setdefault((lang, int(order), int(width), int(size)), {})[name] = float(value)
    report = Report()
    for (lang, order, width, size), values in table.items():
        missing = [s for s in BAR_SETS if s not in values]
        if missing:
            raise ValueError(f"{path}: {lang}/{order}/{width}/{size} missing {missing}")
        report.cells.append(
            ReportCell(lang, order, width, size, "",
                       values["train"], values["validation"], values["test"])
        )
    return report


def _format_ppl(value: float) -> str:
    return f"{value:.3g}"


def _bar_chart(title: str, groups: list[tuple[str, tuple[float, float, float]]]) -> str:
    """Grouped log-scale bar chart; every bar carries its exact value in a
    ``data-value`` attribute so figures can be checked against reports."""
    bar_w, bar_gap, group_gap = 26.0, 4.0, 30.0
    left, top, plot_h, bottom = 64.0, 44.0, 300.0, 52.0
    group_w = 3 * bar_w + 2 * bar_gap
    plot_w = len(groups) * (group_w + group_gap) + group_gap
    width = left + plot_w + 150.0
    height = top + plot_h + bottom
    base = top + plot_h
    max_val = max(v for _, values in groups for v in values)
    exp_max = max(1, math.ceil(math.log10(max_val) - 1e-12))

    def y(value: float) -> float:
        return base - plot_h * (math.log10(value) / exp_max)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>',
        f'<text x="{left:.2f}" y="24" font-size="14">{title}</text>',
    ]
    for k in range(exp_max + 1):
        gy = base - plot_h * (k / exp_max)
        parts.append(
            f'<line x1="{left:.2f}" y1="{gy:.2f}" x2="{left + plot_w:.2f}" '
            f'y2="{gy:.2f}" stroke="#ddd"/>'
        )
        parts.append(
            f'<text x="{left - 8:.2f}" y="{gy + 4:.2f}" font-size="10" '
            f'text-anchor="end">10^{k}</text>'
        )
    for gi, (label, values) in enumerate(groups):
        gx = left + group_gap + gi * (group_w + group_gap)
        for bi, (set_name, value) in enumerate(zip(BAR_SETS, values)):
            bx = gx + bi * (bar_w + bar_gap)
            by = y(value)
            parts.append(
                f'<rect x="{bx:.2f}" y="{by:.2f}" width="{bar_w:.2f}" '
                f'height="{base - by:.2f}" fill="{BAR_COLORS[set_name]}" '
                f'stroke="#333" stroke-width="0.5" data-set="{set_name}" '
                f'data-value="{value!r}"/>'
            )
            parts.append(
                f'<text x="{bx + bar_w / 2:.2f}" y="{by - 3:.2f}" font-size="8" '
                f'text-anchor="middle">{_format_ppl(value)}</text>'
            )
        parts.append(
            f'<text x="{gx + group_w / 2:.2f}" y="{base + 16:.2f}" font-size="10" '
            f'text-anchor="middle">{label}</text>'
        )
    parts.append(
        f'<line x1="{left:.2f}" y1="{top:.2f}" x2="{left:.2f}" y2="{base:.2f}" '
        f'stroke="#333"/>'
    )
    parts.append(
        f'<line x1="{left:.2f}" y1="{base:.2f}" x2="{left + plot_w:.2f}" '
        f'y2="{base:.2f}" stroke="#333"/>'
    )
    for si, set_name in enumerate(BAR_SETS):
        ly = top + 16.0 * si
        lx = left + plot_w + 16.0
        parts.append(
            f'<rect x="{lx:.2f}" y="{ly:.2f}" width="12" height="12" '
            f'fill="{BAR_COLORS[set_name]}" stroke="#333" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{lx + 18:.2f}" y="{ly + 10:.2f}" font-size="11">{set_name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_figure(report: Report, out_dir) -> list[Path]:
    """One SVG per (language, training size): grouped bars per arena,
    train/validation/test in the navy/turquoise/yellow convention."""
    if not report.cells:
        raise ValueError("empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    panels: dict[tuple[str, int], list[ReportCell]] = {}
    for cell in report.cells:
        panels.setdefault((cell.lang, cell.train_size), []).append(cell)
    paths = []
    for (lang, size), cells in sorted(panels.items()):
        groups = [
            (f"order {c.order}, width {c.width}", c.values())
            for c in sorted(cells, key=lambda c: (c.order, c.width))
        ]
        svg = _bar_chart(f"{lang} plays, {size} training plays", groups)
        path = out_dir / f"ppl_{lang}_{size}.svg"
        path.write_text(svg, encoding="utf-8")
        paths.append(path)
    return paths
