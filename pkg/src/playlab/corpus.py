"""Random play corpora: generation, pointer elision, perturbation, and a
line-oriented text format.

A corpus line is a pointer-elided play: move tokens in order, closed by the
end-of-play token ``$``.  Generation draws each play from its own substream
keyed by (seed, play index), so corpora are reproducible and plays can be
regenerated in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .arena import Arena, make_arena, parse_type, render_type
from .play import LANGUAGES, PointedPlay, _PlayState, pending_questions
from .rng import substream

EOP = "$"

TokenSeq = tuple[str, ...]


class CorpusFormatError(ValueError):
    """Raised on malformed corpus files, with file location where known."""


class Vocab:
    """Dense token ids for one arena: EOP is 0, then the arena's move
    tokens in canonical order."""

    def __init__(self, tokens):
        self.tokens: tuple[str, ...] = tuple(tokens)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if self.tokens[0] != EOP or len(self.index) != len(self.tokens):
            raise ValueError("vocabulary must start with EOP and be duplicate-free")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def encode(self, seq: TokenSeq) -> np.ndarray:
        try:
            return np.array([self.index[t] for t in seq], dtype=np.int64)
        except KeyError as e:
            raise KeyError(f"token {e.args[0]!r} not in vocabulary") from None

    def decode(self, ids) -> TokenSeq:
        return tuple(self.tokens[int(i)] for i in ids)


def build_vocab(arena: Arena) -> Vocab:
    return Vocab((EOP,) + arena.tokens)


@dataclass
class Corpus:
    arena_spec: str
    language: str
    seed: int
    plays: list[TokenSeq] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.plays)


def generate_play(
    arena: Arena, lang: str, max_len: int, rng: np.random.Generator, p_stop: float = 0.05
) -> PointedPlay:
    """One random legal play of length <= max_len.

    Each step first offers to stop (probability ``p_stop``) when the play is
    nonempty and has no pending questions, then appends a uniform choice
    among the legal extensions; generation also stops when no extension
    exists or the length cap is reached.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    state = _PlayState(arena, lang)
    while len(state) < max_len:
        if state.occ_move and not state.pending:
            if rng.random() < p_stop:
                break
        exts = state.extensions()
        if not exts:
            break
        move_idx, justifier = exts[rng.integers(len(exts))]
        state.push(move_idx, justifier)
    return state.to_play()


def is_complete(play: PointedPlay) -> bool:
    return not pending_questions(play)


def elide(play: PointedPlay) -> TokenSeq:
    """Drop names and pointers; keep move tokens in order, close with EOP."""
    return tuple(pm.move.token for pm in play) + (EOP,)


def generate_corpus(
    arena: Arena,
    lang: str,
    count: int,
    max_len: int,
    seed: int,
    p_stop: float = 0.05,
    complete_only: bool = False,
) -> Corpus:
    """``count`` independent plays; play i is drawn from substream (seed, i).

    With ``complete_only`` each substream re-rolls until the play has no
    pending questions (sequential plays always complete, so this only ever
    re-rolls concurrent ones).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if lang not in LANGUAGES:
        raise ValueError(f"unknown language {lang!r}; expected one of {LANGUAGES}")
    plays = []
    for i in range(count):
        rng = substream(seed, i)
        play = generate_play(arena, lang, max_len, rng, p_stop)
        if complete_only:
            for _ in range(1000):
                if is_complete(play):
                    break
                play = generate_play(arena, lang, max_len, rng, p_stop)
            else:
                raise ValueError(f"no complete play found for substream ({seed}, {i})")
        plays.append(elide(play))
    return Corpus(render_type(arena.tree), lang, seed, plays)


def corpus_text(corpus: Corpus) -> str:
    lines = [
        "#version 1",
        f"#arena {corpus.arena_spec}",
        f"#language {corpus.language}",
        f"#seed {corpus.seed}",
        f"#count {len(corpus.plays)}",
    ]
    lines.extend(" ".join(seq) for seq in corpus.plays)
    return "\n".join(lines) + "\n"


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(corpus_text(corpus))


def _header_value(line: str, lineno: int, key: str) -> str:
    prefix = f"#{key} "
    if not line.startswith(prefix):
        raise CorpusFormatError(f"line {lineno}: expected '{prefix}<value>', got {line!r}")
    return line[len(prefix):].strip()


def read_corpus(path) -> Corpus:
    """Parse and validate a corpus file; every token must belong to the
    declared arena's vocabulary, with EOP exactly once and last per play."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != "#version 1":
        found = lines[0].strip() if lines else "empty file"
        raise CorpusFormatError(f"line 1: unsupported corpus format ({found!r})")
    if len(lines) < 5:
        raise CorpusFormatError("truncated header: expected 5 header lines")
    spec = _header_value(lines[1], 2, "arena")
    lang = _header_value(lines[2], 3, "language")
    if lang not in LANGUAGES:
        raise CorpusFormatError(f"line 3: unknown language {lang!r}")
    try:
        seed = int(_header_value(lines[3], 4, "seed"))
        count = int(_header_value(lines[4], 5, "count"))
    except ValueError as e:
        raise CorpusFormatError(f"bad header number: {e}") from None
    vocab = build_vocab(make_arena(parse_type(spec)))
    plays = []
    for lineno, line in enumerate(lines[5:], start=6):
        if not line.strip():
            continue
        seq = tuple(line.split())
        for tok in seq:
            if tok not in vocab:
                raise CorpusFormatError(
                    f"line {lineno}: token {tok!r} outside arena vocabulary"
                )
        if seq.count(EOP) != 1 or seq[-1] != EOP:
            raise CorpusFormatError(f"line {lineno}: play must end with a single {EOP!r}")
        plays.append(seq)
    if len(plays) != count:
        raise CorpusFormatError(f"header count {count} but {len(plays)} plays present")
    return Corpus(spec, lang, seed, plays)


def _core(seq: TokenSeq) -> tuple[str, ...]:
    return seq[:-1] if seq and seq[-1] == EOP else tuple(seq)


def levenshtein(a: TokenSeq, b: TokenSeq) -> int:
    """Token-level edit distance; a trailing EOP on either side is ignored."""
    xs, ys = _core(a), _core(b)
    if len(xs) < len(ys):
        xs, ys = ys, xs
    prev = list(range(len(ys) + 1))
    for i, x in enumerate(xs, start=1):
        cur = [i] + [0] * len(ys)
        for j, y in enumerate(ys, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y))
        prev = cur
    return prev[-1]


def perturb(
    seq: TokenSeq, vocab: Vocab, ratio: float, rng: np.random.Generator
) -> TokenSeq:
    """Apply k = max(1, floor(ratio * len)) random single-token edits.

    Each edit picks uniformly among insert/delete/substitute (insert only,
    once nothing is left to delete or substitute), positions uniformly, and
    replacement tokens uniformly from the arena vocabulary; EOP is neither
    edited nor inserted.  The edit distance to the input is at most k.
    """
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    core = list(_core(seq))
    if not core:
        raise ValueError("cannot perturb an empty sequence")
    move_tokens = vocab.tokens[1:]
    edits = max(1, int(ratio * len(core)))
    for _ in range(edits):
        kind = rng.integers(3) if core else 0
        if kind == 0:
            pos = int(rng.integers(len(core) + 1))
            core.insert(pos, move_tokens[rng.integers(len(move_tokens))])
        elif kind == 1:
            core.pop(int(rng.integers(len(core))))
        else:
            pos = int(rng.integers(len(core)))
            core[pos] = move_tokens[rng.integers(len(move_tokens))]
    return tuple(core) + (EOP,)


def perturb_corpus(
    corpus: Corpus,
    arena: Arena,
    ratio: float,
    seed: int,
    require_illegal: bool = False,
    max_attempts: int = 500,
) -> Corpus:
    """Perturb every play, one substream per play index.

    With ``require_illegal`` each play is re-rolled until no justification
    assignment makes it legal in the corpus language (checked by pointer
    reconstruction).
    """
    from .play import justification_assignments

    vocab = build_vocab(arena)
    out = []
    for i, seq in enumerate(corpus.plays):
        rng = substream(seed, i)
        mutated = perturb(seq, vocab, ratio, rng)
        if require_illegal:
            for _ in range(max_attempts):
                if not justification_assignments(
                    arena, corpus.language, _core(mutated), limit=1
                ):
                    break
                mutated = perturb(seq, vocab, ratio, rng)
            else:
                raise ValueError(f"play {i}: no illegal perturbation in {max_attempts} tries")
        out.append(mutated)
    return Corpus(corpus.arena_spec, corpus.language, seed, out)
