"""Justified pointer sequences and play legality.

A pointed move carries the move itself, a fresh name for this occurrence,
and the name of the earlier occurrence that justifies it (``None`` for the
opening move).  A justified sequence is legal sequential play when it
additionally alternates players, answers only the most recently unanswered
question, and keeps every justifier inside the mover's view; it is legal
concurrent play when every justifier is still pending (fork) and an answer
arrives only after all questions it spawned are answered (join).

Names are realized as 0-based occurrence indices.  Plays are well-opened:
exactly one initial move, placed first.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arena import (
    ANSWER,
    OPPONENT,
    PROPONENT,
    QUESTION,
    Arena,
    MoveId,
    move_player,
    parse_token,
)

SEQUENTIAL = "seq"
CONCURRENT = "conc"
LANGUAGES = (SEQUENTIAL, CONCURRENT)

JUSTIFICATION = "justification"
ALTERNATION = "alternation"
BRACKETING = "bracketing"
VISIBILITY = "visibility"
FORK = "fork"
JOIN = "join"


class IllegalPlayError(ValueError):
    """Raised when an operation requires a legal play and gets an illegal one."""

    def __init__(self, verdict: "Verdict"):
        super().__init__(f"illegal play: {verdict.rule} at index {verdict.index}")
        self.verdict = verdict


class SearchBudgetExceeded(RuntimeError):
    """Raised when justification-assignment search exceeds its node budget."""


@dataclass(frozen=True)
class PointedMove:
    move: MoveId
    name: int
    justifier: int | None  # name of the justifying occurrence, None opens

    def __str__(self) -> str:
        j = "*" if self.justifier is None else str(self.justifier)
        return f"{self.move.token} {self.name} {j}"


@dataclass(frozen=True)
class Verdict:
    legal: bool
    rule: str | None = None
    index: int | None = None

    @staticmethod
    def ok() -> "Verdict":
        return Verdict(True)

    @staticmethod
    def fail(rule: str, index: int) -> "Verdict":
        return Verdict(False, rule, index)


@dataclass(frozen=True)
class PointedPlay:
    items: tuple[PointedMove, ...] = ()

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, key):
        if isinstance(key, slice):
            return PointedPlay(self.items[key])
        return self.items[key]

    def append(self, move: MoveId, justifier: int | None) -> "PointedPlay":
        name = self.items[-1].name + 1 if self.items else 0
        return PointedPlay(self.items + (PointedMove(move, name, justifier),))

    def moves(self) -> tuple[MoveId, ...]:
        return tuple(pm.move for pm in self.items)

    def names(self) -> tuple[int, ...]:
        return tuple(pm.name for pm in self.items)

    @classmethod
    def from_pairs(cls, pairs) -> "PointedPlay":
        """Build from (move, justifier-name) pairs; names are positions."""
        return cls(tuple(PointedMove(m, i, j) for i, (m, j) in enumerate(pairs)))


def format_pointed(play: PointedPlay) -> str:
    """One move per line: ``token name justifier`` with ``*`` for the opener."""
    return "\n".join(str(pm) for pm in play) + ("\n" if len(play) else "")


def parse_pointed(text: str) -> PointedPlay:
    items = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'token name justifier', got {raw!r}")
        move = parse_token(parts[0])
        try:
            name = int(parts[1])
            justifier = None if parts[2] == "*" else int(parts[2])
        except ValueError:
            raise ValueError(f"line {lineno}: bad name or justifier in {raw!r}") from None
        items.append(PointedMove(move, name, justifier))
    return PointedPlay(tuple(items))


def parse_pointed_file(text: str) -> list[PointedPlay]:
    """Blank-line-separated pointed plays."""
    plays = []
    for block in text.split("\n\n"):
        if block.strip():
            plays.append(parse_pointed(block))
    return plays


def _positions(play: PointedPlay) -> dict[int, int]:
    return {pm.name: i for i, pm in enumerate(play.items)}


def check_justified(arena: Arena, play: PointedPlay) -> Verdict:
    """Well-formedness: fresh names, a single opening initial move first,
    and every justifier naming an earlier occurrence that enables the move."""
    seen: dict[int, int] = {}  # name -> move index in arena
    for i, pm in enumerate(play.items):
        mi = arena.index(pm.move)  # raises UnknownMoveError
        if pm.name in seen:
            return Verdict.fail(JUSTIFICATION, i)
        enabler = arena.enabler_idx[mi]
        if pm.justifier is None:
            if enabler is not None or i != 0:
                return Verdict.fail(JUSTIFICATION, i)
        else:
            if enabler is None:  # initial move must open, not point
                return Verdict.fail(JUSTIFICATION, i)
            if pm.justifier not in seen or seen[pm.justifier] != enabler:
                return Verdict.fail(JUSTIFICATION, i)
        seen[pm.name] = mi
    return Verdict.ok()


def _view_walk(items: tuple[PointedMove, ...], end: int, appender: str):
    """Yield the occurrence positions of the ``appender``'s view of
    items[:end], right to left.  The appender's own moves step left; the
    other player's moves pull in their justifier and resume to its left;
    an initial move of the other player ends a proponent view."""
    pos = {pm.name: k for k, pm in enumerate(items[:end])}
    i = end - 1
    while i >= 0:
        pm = items[i]
        yield i
        if move_player(pm.move) == appender:
            i -= 1
        elif pm.justifier is None:
            if appender is not PROPONENT:
                raise ValueError(f"initial move by the view appender at {i}")
            break
        else:
            j = pos.get(pm.justifier)
            if j is None or j >= i:
                raise ValueError(f"unresolved justifier at {i}")
            yield j
            i = j - 1


def _view(play: PointedPlay, appender: str) -> PointedPlay:
    out = [play.items[k] for k in _view_walk(play.items, len(play.items), appender)]
    return PointedPlay(tuple(reversed(out)))


def pview(play: PointedPlay) -> PointedPlay:
    """Proponent view: own moves accumulate, opponent moves jump back to
    their justifier, an opening move restarts the view."""
    return _view(play, PROPONENT)


def oview(play: PointedPlay) -> PointedPlay:
    """Opponent view, dual to ``pview`` but with no restart clause."""
    return _view(play, OPPONENT)


def pending_questions(play: PointedPlay) -> list[int]:
    """Names of question occurrences not yet answered, in occurrence order."""
    answered = {pm.justifier for pm in play.items if pm.move.kind == ANSWER}
    return [
        pm.name
        for pm in play.items
        if pm.move.kind == QUESTION and pm.name not in answered
    ]


def _justifier_visible(items, i: int, viewer: str, target: int) -> bool:
    for k in _view_walk(items, i, viewer):
        if items[k].name == target:
            return True
    return False


def check_sequential(arena: Arena, play: PointedPlay) -> Verdict:
    """Alternation, bracketing, and visibility on top of justification.

    Rules are tested per position in the order justification, alternation,
    bracketing, visibility; the first offending position is reported.
    """
    items = play.items
    seen: dict[int, int] = {}
    pending: list[int] = []
    prev_player = None
    for i, pm in enumerate(items):
        mi = arena.index(pm.move)
        # justification
        if pm.name in seen:
            return Verdict.fail(JUSTIFICATION, i)
        enabler = arena.enabler_idx[mi]
        if pm.justifier is None:
            if enabler is not None or i != 0:
                return Verdict.fail(JUSTIFICATION, i)
        elif enabler is None or pm.justifier not in seen or seen[pm.justifier] != enabler:
            return Verdict.fail(JUSTIFICATION, i)
        # alternation
        player = arena.player[mi]
        if player == prev_player or (i == 0 and player != OPPONENT):
            return Verdict.fail(ALTERNATION, i)
        # bracketing
        if not arena.is_question[mi]:
            if not pending or pm.justifier != pending[-1]:
                return Verdict.fail(BRACKETING, i)
        # visibility
        if pm.justifier is not None:
            if not _justifier_visible(items, i, player, pm.justifier):
                return Verdict.fail(VISIBILITY, i)
        seen[pm.name] = mi
        prev_player = player
        if arena.is_question[mi]:
            pending.append(pm.name)
        else:
            pending.pop()
    return Verdict.ok()


def check_concurrent(arena: Arena, play: PointedPlay) -> Verdict:
    """Fork and join on top of justification; no alternation, no views."""
    seen: dict[int, int] = {}
    pending: set[int] = set()
    open_children: dict[int, int] = {}  # question name -> unanswered spawned questions
    spawned_by: dict[int, int | None] = {}  # question name -> justifier name
    for i, pm in enumerate(play.items):
        mi = arena.index(pm.move)
        # justification
        if pm.name in seen:
            return Verdict.fail(JUSTIFICATION, i)
        enabler = arena.enabler_idx[mi]
        if pm.justifier is None:
            if enabler is not None or i != 0:
                return Verdict.fail(JUSTIFICATION, i)
        elif enabler is None or pm.justifier not in seen or seen[pm.justifier] != enabler:
            return Verdict.fail(JUSTIFICATION, i)
        # fork: the justifying question must still be pending
        if pm.justifier is not None and pm.justifier not in pending:
            return Verdict.fail(FORK, i)
        # join: answering requires every question spawned by it answered
        if not arena.is_question[mi] and open_children[pm.justifier] > 0:
            return Verdict.fail(JOIN, i)
        seen[pm.name] = mi
        if arena.is_question[mi]:
            pending.add(pm.name)
            open_children[pm.name] = 0
            spawned_by[pm.name] = pm.justifier
            if pm.justifier is not None:
                open_children[pm.justifier] += 1
        else:
            pending.discard(pm.justifier)
            parent = spawned_by[pm.justifier]
            if parent is not None:
                open_children[parent] -= 1
    return Verdict.ok()


def checker_for(lang: str):
    if lang == SEQUENTIAL:
        return check_sequential
    if lang == CONCURRENT:
        return check_concurrent
    raise ValueError(f"unknown language {lang!r}; expected one of {LANGUAGES}")


class _PlayState:
    """Incremental state for growing a legal play one move at a time.

    Occurrences are integers 0..n-1 (also their names).  ``push`` assumes
    the appended move came from ``extensions``; it does not re-validate.
    """

    __slots__ = ("arena", "lang", "occ_move", "occ_just", "pending", "open_children")

    def __init__(self, arena: Arena, lang: str):
        if lang not in LANGUAGES:
            raise ValueError(f"unknown language {lang!r}; expected one of {LANGUAGES}")
        self.arena = arena
        self.lang = lang
        self.occ_move: list[int] = []  # arena move index per occurrence
        self.occ_just: list[int] = []  # justifier occurrence, -1 for the opener
        self.pending: list[int] = []  # unanswered question occurrences, oldest first
        self.open_children: list[int] = []  # unanswered questions spawned per occurrence

    def copy(self) -> "_PlayState":
        dup = _PlayState(self.arena, self.lang)
        dup.occ_move = self.occ_move[:]
        dup.occ_just = self.occ_just[:]
        dup.pending = self.pending[:]
        dup.open_children = self.open_children[:]
        return dup

    def __len__(self) -> int:
        return len(self.occ_move)

    def push(self, move_idx: int, justifier: int) -> None:
        arena = self.arena
        k = len(self.occ_move)
        self.occ_move.append(move_idx)
        self.occ_just.append(justifier)
        self.open_children.append(0)
        if arena.is_question[move_idx]:
            self.pending.append(k)
            if justifier >= 0:
                self.open_children[justifier] += 1
        else:
            if self.pending and self.pending[-1] == justifier:
                self.pending.pop()
            else:
                self.pending.remove(justifier)
            parent = self.occ_just[justifier]
            if parent >= 0:
                self.open_children[parent] -= 1

    def _view_occurrences(self, appender: str) -> list[int]:
        arena = self.arena
        out = []
        i = len(self.occ_move) - 1
        while i >= 0:
            out.append(i)
            if arena.player[self.occ_move[i]] == appender:
                i -= 1
            elif self.occ_just[i] < 0:
                break  # opening opponent move; ends a proponent view
            else:
                j = self.occ_just[i]
                out.append(j)
                i = j - 1
        return out

    def extensions(self) -> list[tuple[int, int]]:
        """All (move index, justifier occurrence) pairs that extend this
        play legally; justifier -1 denotes the opener."""
        arena = self.arena
        if not self.occ_move:
            return [(arena.initial_idx, -1)]
        exts: list[tuple[int, int]] = []
        if self.lang == SEQUENTIAL:
            last_player = arena.player[self.occ_move[-1]]
            mover = PROPONENT if last_player == OPPONENT else OPPONENT
            view = self._view_occurrences(mover)
            for occ in view:
                mi = self.occ_move[occ]
                if arena.is_question[mi]:
                    for child in arena.child_questions[mi]:
                        if arena.player[child] == mover:
                            exts.append((child, occ))
            if self.pending:
                occ = self.pending[-1]
                answer = arena.answer_of[self.occ_move[occ]]
                if arena.player[answer] == mover and occ in view:
                    exts.append((answer, occ))
        else:
            for occ in self.pending:
                mi = self.occ_move[occ]
                for child in arena.child_questions[mi]:
                    exts.append((child, occ))
                if self.open_children[occ] == 0:
                    exts.append((arena.answer_of[mi], occ))
        exts.sort()
        return exts

    def to_play(self) -> PointedPlay:
        moves = self.arena.moves
        return PointedPlay(
            tuple(
                PointedMove(moves[mi], k, None if j < 0 else j)
                for k, (mi, j) in enumerate(zip(self.occ_move, self.occ_just))
            )
        )

    @classmethod
    def from_play(cls, arena: Arena, lang: str, play: PointedPlay) -> "_PlayState":
        """Rebuild state from a play already known to be legal in ``lang``."""
        state = cls(arena, lang)
        occ_of = {}
        for i, pm in enumerate(play.items):
            occ_of[pm.name] = i
            state.push(arena.index(pm.move), -1 if pm.justifier is None else occ_of[pm.justifier])
        return state


def legal_extensions(arena: Arena, lang: str, play: PointedPlay) -> list[PointedMove]:
    """Every pointed move that extends ``play`` to a longer legal play,
    in canonical (move, justifier) order."""
    verdict = checker_for(lang)(arena, play)
    if not verdict.legal:
        raise IllegalPlayError(verdict)
    state = _PlayState.from_play(arena, lang, play)
    name = play.items[-1].name + 1 if play.items else 0
    return [
        PointedMove(arena.moves[mi], name, None if j < 0 else play.items[j].name)
        for mi, j in state.extensions()
    ]


def justification_assignments(
    arena: Arena,
    lang: str,
    tokens,
    limit: int = 2,
    budget: int = 1_000_000,
) -> list[PointedPlay]:
    """Pointer reconstructions of a bare token sequence: all ways (up to
    ``limit``) of assigning justifiers so the result is legal in ``lang``.

    Token order is kept; the search walks legal extensions only, so every
    returned play is legal by construction.
    """
    want = [arena.index(parse_token(t)) for t in tokens]
    results: list[PointedPlay] = []
    spent = 0

    def dfs(state: _PlayState, k: int) -> bool:
        nonlocal spent
        if k == len(want):
            results.append(state.to_play())
            return len(results) >= limit
        for mi, j in state.extensions():
            if mi != want[k]:
                continue
            spent += 1
            if spent > budget:
                raise SearchBudgetExceeded(f"more than {budget} extensions explored")
            child = state.copy()
            child.push(mi, j)
            if dfs(child, k + 1):
                return True
        return False

    dfs(_PlayState(arena, lang), 0)
    return results
