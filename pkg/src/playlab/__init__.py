"""Game-semantics play laboratory.

Arenas from type signatures, legality checking and generation of sequential
and concurrent plays, corpus serialization and perturbation, an LSTM
language model over move tokens, and the perturbation / cross-language
perplexity experiments built on top.
"""

from .arena import (
    Arena,
    MoveId,
    Polarity,
    TypeSyntaxError,
    TypeTree,
    UnknownMoveError,
    arena_dump,
    arena_order,
    arena_width,
    enabler_of,
    make_arena,
    move_player,
    parse_token,
    parse_type,
    render_type,
    uniform_tree,
)
from .corpus import (
    EOP,
    Corpus,
    CorpusFormatError,
    TokenSeq,
    Vocab,
    build_vocab,
    corpus_text,
    elide,
    generate_corpus,
    generate_play,
    is_complete,
    levenshtein,
    perturb,
    perturb_corpus,
    read_corpus,
    write_corpus,
)
from .experiment import (
    ExperimentSpec,
    Report,
    ReportCell,
    emit_figure,
    emit_report,
    parse_report,
    run_cell,
    run_cross_language_experiment,
    run_perturbation_experiment,
)
from .play import (
    CONCURRENT,
    LANGUAGES,
    SEQUENTIAL,
    IllegalPlayError,
    PointedMove,
    PointedPlay,
    Verdict,
    check_concurrent,
    check_justified,
    check_sequential,
    format_pointed,
    justification_assignments,
    legal_extensions,
    oview,
    parse_pointed,
    pending_questions,
    pview,
)
from .rng import (
    derive_key,
    derive_seed,
    substream,
)
from .seqmodel import (
    Evaluation,
    LstmModel,
    ModelConfig,
    ModelFormatError,
    backward,
    default_lr_schedule,
    forward,
    init_model,
    load_model,
    loss_bits,
    perplexity,
    save_model,
    sgd_epoch,
    step_cell,
    train_model,
)

__version__ = "0.1.0"
