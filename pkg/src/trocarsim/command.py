"""Steering-input layer: token grammar, parsing, dispatch, arbitration.

Inputs are text lines as a speech recognizer (or keypad/pedal shim) would
emit them. Parsing is exact-match against a configurable phrase grammar;
anything unrecognized is reported back, never guessed at. Dispatch maps
tokens to controller actions; arbitration merges multi-source event streams
with STOP preemption and duplicate debouncing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Union

from .controller import Axis, MotionMode, MotionRequest


class CommandToken(Enum):
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    UP = "UP"
    DOWN = "DOWN"
    IN = "IN"
    OUT = "OUT"
    STOP = "STOP"
    STEP_MODE = "STEP_MODE"
    CONTINUOUS_MODE = "CONTINUOUS_MODE"
    MANUAL_ON = "MANUAL_ON"
    MANUAL_OFF = "MANUAL_OFF"
    RESET = "RESET"


MOTION_TOKENS = frozenset({
    CommandToken.LEFT, CommandToken.RIGHT, CommandToken.UP,
    CommandToken.DOWN, CommandToken.IN, CommandToken.OUT,
})


class InputSource(Enum):
    VOICE = "VOICE"
    KEYPAD = "KEYPAD"
    PEDAL = "PEDAL"


@dataclass(frozen=True, slots=True)
class UnknownPhrase:
    """Parse result for text not in the grammar; carries the offending line."""

    text: str


class GrammarError(ValueError):
    """Invalid grammar: duplicate phrase, unknown token, or unreachable token."""


def normalize_phrase(line: str, case_insensitive: bool = True) -> str:
    phrase = " ".join(line.split())
    return phrase.casefold() if case_insensitive else phrase


@dataclass(frozen=True)
class GrammarConfig:
    """Phrase-to-token synonym map; every token must be reachable."""

    phrases: Mapping[str, CommandToken]
    case_insensitive: bool = True
    locale: str = "en"

    def __post_init__(self) -> None:
        covered = set(self.phrases.values())
        missing = [t.value for t in CommandToken if t not in covered]
        if missing:
            raise GrammarError(f"grammar does not cover tokens: {', '.join(missing)}")

    @classmethod
    def from_text(cls, text: str, case_insensitive: bool = True,
                  locale: str = "en") -> "GrammarConfig":
        """Parse 'phrase = TOKEN' lines; '#' starts a comment."""
        phrases: dict[str, CommandToken] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GrammarError(f"line {lineno}: expected 'phrase = TOKEN'")
            lhs, rhs = line.split("=", 1)
            phrase = normalize_phrase(lhs, case_insensitive)
            token_name = rhs.strip()
            if not phrase:
                raise GrammarError(f"line {lineno}: empty phrase")
            try:
                token = CommandToken[token_name]
            except KeyError:
                raise GrammarError(f"line {lineno}: unknown token {token_name!r}") from None
            if phrase in phrases and phrases[phrase] is not token:
                raise GrammarError(
                    f"line {lineno}: phrase {phrase!r} maps to both "
                    f"{phrases[phrase].value} and {token.value}")
            phrases[phrase] = token
        return cls(phrases=phrases, case_insensitive=case_insensitive, locale=locale)

    @classmethod
    def load(cls, path: str | Path, case_insensitive: bool = True,
             locale: str = "en") -> "GrammarConfig":
        return cls.from_text(Path(path).read_text(encoding="utf-8"),
                             case_insensitive, locale)

    def phrases_for(self, token: CommandToken) -> list[str]:
        return sorted(p for p, t in self.phrases.items() if t is token)


def default_grammar() -> GrammarConfig:
    text = resources.files("trocarsim.data").joinpath("default.grammar").read_text("utf-8")
    return GrammarConfig.from_text(text)


def parse(line: str, grammar: GrammarConfig) -> CommandToken | UnknownPhrase:
    """Look up a normalized input line; total over arbitrary text."""
    token = grammar.phrases.get(normalize_phrase(line, grammar.case_insensitive))
    return token if token is not None else UnknownPhrase(line)


# --- dispatch -----------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Move:
    request: MotionRequest


@dataclass(frozen=True, slots=True)
class Stop:
    pass


@dataclass(frozen=True, slots=True)
class SetMode:
    mode: MotionMode


@dataclass(frozen=True, slots=True)
class SetManual:
    on: bool


@dataclass(frozen=True, slots=True)
class ResetFault:
    pass


Action = Union[Move, Stop, SetMode, SetManual, ResetFault]

# LEFT/RIGHT swing the base, UP/DOWN incline the scope, IN/OUT drive
# insertion. UP moves the scope toward vertical (screen-up); set
# invert_tilt to flip that convention.
_MOTION_BINDINGS = {
    CommandToken.LEFT: (Axis.PAN, -1),
    CommandToken.RIGHT: (Axis.PAN, +1),
    CommandToken.UP: (Axis.TILT, -1),
    CommandToken.DOWN: (Axis.TILT, +1),
    CommandToken.IN: (Axis.INSERTION, +1),
    CommandToken.OUT: (Axis.INSERTION, -1),
}


def dispatch(token: CommandToken, mode: MotionMode,
             invert_tilt: bool = False) -> Action:
    """Map one token to its controller action under the session's motion mode."""
    if token in _MOTION_BINDINGS:
        axis, direction = _MOTION_BINDINGS[token]
        if invert_tilt and axis is Axis.TILT:
            direction = -direction
        return Move(MotionRequest(axis, direction, mode))
    if token is CommandToken.STOP:
        return Stop()
    if token is CommandToken.STEP_MODE:
        return SetMode(MotionMode.STEP)
    if token is CommandToken.CONTINUOUS_MODE:
        return SetMode(MotionMode.CONTINUOUS)
    if token is CommandToken.MANUAL_ON:
        return SetManual(True)
    if token is CommandToken.MANUAL_OFF:
        return SetManual(False)
    return ResetFault()


# --- arbitration --------------------------------------------------------

@dataclass(frozen=True, slots=True)
class InputEvent:
    t_ms: int
    source: InputSource
    token: CommandToken


class Arbitrator:
    """Orders multi-source token streams for the controller.

    Events sharing one timestamp form a batch (one tick's arrivals). A STOP
    anywhere in a batch is emitted first and drops the batch's motion tokens;
    a duplicate motion token arriving within the debounce window of its last
    emission is collapsed (and does not refresh the window, so a sustained
    duplicate stream still gets through once per window).
    """

    def __init__(self, debounce_ms: int = 150):
        self.debounce_ms = debounce_ms
        self._last_emit: dict[CommandToken, int] = {}

    def feed(self, events: Iterable[InputEvent]) -> list[CommandToken]:
        batch = list(events)
        out: list[CommandToken] = []
        stop_seen = any(e.token is CommandToken.STOP for e in batch)
        if stop_seen:
            out.append(CommandToken.STOP)
        for event in batch:
            tok = event.token
            if tok is CommandToken.STOP:
                continue  # already emitted once, first
            if tok in MOTION_TOKENS:
                if stop_seen:
                    continue  # was queued behind the STOP
                last = self._last_emit.get(tok)
                if last is not None and event.t_ms - last < self.debounce_ms:
                    continue
                self._last_emit[tok] = event.t_ms
            out.append(tok)
        return out


def arbitrate(events: Iterable[InputEvent], debounce_ms: int = 150) -> list[CommandToken]:
    """Arbitrate a whole timestamp-ordered stream at once."""
    arb = Arbitrator(debounce_ms)
    out: list[CommandToken] = []
    batch: list[InputEvent] = []
    last_t: int | None = None
    for event in events:
        if last_t is not None and event.t_ms < last_t:
            raise ValueError("events must be timestamp-ordered")
        if last_t is not None and event.t_ms != last_t:
            out.extend(arb.feed(batch))
            batch = []
        batch.append(event)
        last_t = event.t_ms
    if batch:
        out.extend(arb.feed(batch))
    return out
