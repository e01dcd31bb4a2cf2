"""Order perturbations over token sequences.

Every operator permutes whole tokens and returns the per-unit index trace
of the result. ``rho`` for the neighbor flip is the *release* probability:
``rho=1`` leaves text untouched, ``rho=0`` carries the first token to the
end. Use :func:`flip_prob_to_rho` when thinking in flip probabilities.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Optional

from .core_text import CharIndexTrace, Granularity, Token, TokenSequence, reconstruct
from .rng import SeedPart, SeedPolicy, Xoshiro256, shuffle


class Kind(str, Enum):
    NONE = "none"
    FULL_SHUFFLE = "full_shuffle"
    NEIGHBOR_FLIP = "neighbor_flip"
    PHRASE_SHUFFLE = "phrase_shuffle"
    # non-canonical: adjacent transpositions only, for sensitivity checks
    NEIGHBOR_FLIP_STRICT = "neighbor_flip_strict"


_RHO_KINDS = {Kind.NEIGHBOR_FLIP, Kind.PHRASE_SHUFFLE, Kind.NEIGHBOR_FLIP_STRICT}


class SpecError(ValueError):
    pass


def _fmt_rho(rho: float) -> str:
    return repr(float(rho))


def default_setting_id(kind: Kind, granularity: Granularity, rho: Optional[float]) -> str:
    if kind is Kind.NONE:
        return "benchmark"
    base = f"{granularity.value}-{kind.value}"
    return base if rho is None else f"{base}-{_fmt_rho(rho)}"


@dataclass(frozen=True)
class PerturbationSpec:
    kind: Kind
    granularity: Granularity = Granularity.CHARACTER
    rho: Optional[float] = None
    setting_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "granularity", Granularity(self.granularity))
        has_rho = self.kind in _RHO_KINDS
        if has_rho and self.rho is None:
            raise SpecError(f"{self.kind.value} requires rho")
        if not has_rho and self.rho is not None:
            raise SpecError(f"{self.kind.value} takes no rho")
        if self.rho is not None:
            rho = float(self.rho)
            if not 0.0 <= rho <= 1.0:
                raise SpecError(f"rho must lie in [0, 1], got {rho}")
            object.__setattr__(self, "rho", rho)
        if not self.setting_id:
            object.__setattr__(
                self, "setting_id", default_setting_id(self.kind, self.granularity, self.rho)
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "granularity": self.granularity.value,
            "rho": self.rho,
            "setting_id": self.setting_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PerturbationSpec":
        unknown = set(data) - {"kind", "granularity", "rho", "setting_id"}
        if unknown:
            raise SpecError(f"unknown spec fields: {sorted(unknown)}")
        try:
            return cls(
                kind=Kind(data["kind"]),
                granularity=Granularity(data.get("granularity", "character")),
                rho=data.get("rho"),
                setting_id=data.get("setting_id") or "",
            )
        except KeyError as exc:
            raise SpecError(f"spec missing field {exc}") from None
        except ValueError as exc:
            raise SpecError(str(exc)) from None


@dataclass(frozen=True)
class PerturbationResult:
    perturbed_text: str
    trace: CharIndexTrace
    spec: PerturbationSpec
    seed: int
    tokens: tuple[Token, ...] = ()
    tokenizer_name: str = ""


def flip_prob_to_rho(flip_prob: float) -> float:
    return 1.0 - flip_prob


def _result(
    tokens: list[Token], spec: PerturbationSpec, seed: int, seq: TokenSequence
) -> PerturbationResult:
    return PerturbationResult(
        perturbed_text=reconstruct(tokens),
        trace=CharIndexTrace.from_tokens(tokens),
        spec=spec,
        seed=seed,
        tokens=tuple(tokens),
        tokenizer_name=seq.tokenizer,
    )


def _spec_for(seq: TokenSequence, kind: Kind, rho: Optional[float]) -> PerturbationSpec:
    return PerturbationSpec(kind, seq.granularity, rho)


def identity(seq: TokenSequence, seed: int = 0) -> PerturbationResult:
    return _result(list(seq.tokens), _spec_for(seq, Kind.NONE, None), seed, seq)


def full_shuffle(seq: TokenSequence, seed: int) -> PerturbationResult:
    tokens = list(seq.tokens)
    shuffle(tokens, Xoshiro256(seed))
    return _result(tokens, _spec_for(seq, Kind.FULL_SHUFFLE, None), seed, seq)


def neighbor_flip(seq: TokenSequence, rho: float, seed: int) -> PerturbationResult:
    """Hold-and-release flip.

    The first token is held. For each following token a uniform ``p`` is
    drawn: when ``p < rho`` the held token is emitted and the current one
    becomes held, otherwise the current token is emitted and the held one
    waits. The held token is emitted last.
    """
    spec = _spec_for(seq, Kind.NEIGHBOR_FLIP, rho)
    if not seq.tokens:
        return _result([], spec, seed, seq)
    rng = Xoshiro256(seed)
    out: list[Token] = []
    held = seq.tokens[0]
    for tok in seq.tokens[1:]:
        if rng.random() < rho:
            out.append(held)
            held = tok
        else:
            out.append(tok)
    out.append(held)
    return _result(out, spec, seed, seq)


def neighbor_flip_strict(seq: TokenSequence, rho: float, seed: int) -> PerturbationResult:
    """Adjacent-transposition variant: no token moves more than one slot.

    At each position a uniform ``p`` is drawn; ``p >= rho`` swaps the pair
    (i, i+1) and skips past it. Same ``rho`` direction as :func:`neighbor_flip`.
    """
    spec = _spec_for(seq, Kind.NEIGHBOR_FLIP_STRICT, rho)
    rng = Xoshiro256(seed)
    tokens = list(seq.tokens)
    i = 0
    while i < len(tokens) - 1:
        if rng.random() < rho:
            i += 1
        else:
            tokens[i], tokens[i + 1] = tokens[i + 1], tokens[i]
            i += 2
    return _result(tokens, spec, seed, seq)


def build_phrases(tokens: tuple[Token, ...], rho: float, rng: Xoshiro256) -> list[list[Token]]:
    if not tokens:
        return []
    phrases: list[list[Token]] = []
    phrase = [tokens[0]]
    for tok in tokens[1:]:
        if rng.random() < rho:
            phrases.append(phrase)
            phrase = [tok]
        else:
            phrase.append(tok)
    phrases.append(phrase)
    return phrases


def phrase_shuffle(seq: TokenSequence, rho: float, seed: int) -> PerturbationResult:
    """Cut the sequence into phrases (a cut before each token with probability
    ``rho``), shuffle the phrases uniformly and concatenate them."""
    spec = _spec_for(seq, Kind.PHRASE_SHUFFLE, rho)
    rng = Xoshiro256(seed)
    phrases = build_phrases(seq.tokens, rho, rng)
    shuffle(phrases, rng)
    return _result([tok for phrase in phrases for tok in phrase], spec, seed, seq)


def perturb(seq: TokenSequence, spec: PerturbationSpec, seed: int) -> PerturbationResult:
    """Dispatch ``spec`` on an already tokenized sequence."""
    if spec.kind is Kind.NONE:
        result = identity(seq, seed)
    elif spec.kind is Kind.FULL_SHUFFLE:
        result = full_shuffle(seq, seed)
    elif spec.kind is Kind.NEIGHBOR_FLIP:
        result = neighbor_flip(seq, spec.rho, seed)
    elif spec.kind is Kind.NEIGHBOR_FLIP_STRICT:
        result = neighbor_flip_strict(seq, spec.rho, seed)
    else:
        result = phrase_shuffle(seq, spec.rho, seed)
    return dataclasses.replace(result, spec=spec)


def apply_spec(
    text: str,
    spec: PerturbationSpec,
    tokenizer: Callable[[str], TokenSequence],
    seed_policy: SeedPolicy,
    record_index: SeedPart,
    seed_index: int = 0,
) -> PerturbationResult:
    seq = tokenizer(text)
    if spec.kind is not Kind.NONE and seq.granularity is not spec.granularity:
        raise SpecError(
            f"tokenizer granularity {seq.granularity.value} does not match "
            f"spec granularity {spec.granularity.value}"
        )
    seed = seed_policy.derive(record_index, spec.setting_id, seed_index)
    return perturb(seq, spec, seed)


# Settings evaluated on every task and language: the unperturbed benchmark,
# both full shuffles, and phrase/flip sweeps at each granularity.
SUBWORD_PHRASE_RHOS = (0.9, 0.8, 0.65, 0.5, 0.35, 0.2, 0.1)
SUBWORD_FLIP_RHOS = (0.9, 0.8, 0.6, 0.5, 0.4, 0.2, 0.1)
CHARACTER_PHRASE_RHOS = (
    0.975, 0.95, 0.9, 0.8, 0.65, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1, 0.075, 0.05,
)
CHARACTER_FLIP_RHOS = (
    0.8, 0.65, 0.5, 0.4, 0.3, 0.2, 0.1, 0.075, 0.05, 0.035, 0.025, 0.01,
)


def builtin_grid() -> list[PerturbationSpec]:
    sw, ch = Granularity.SUBWORD, Granularity.CHARACTER
    grid = [PerturbationSpec(Kind.NONE, ch)]
    grid.append(PerturbationSpec(Kind.FULL_SHUFFLE, sw))
    grid.extend(PerturbationSpec(Kind.PHRASE_SHUFFLE, sw, r) for r in SUBWORD_PHRASE_RHOS)
    grid.extend(PerturbationSpec(Kind.NEIGHBOR_FLIP, sw, r) for r in SUBWORD_FLIP_RHOS)
    grid.append(PerturbationSpec(Kind.FULL_SHUFFLE, ch))
    grid.extend(PerturbationSpec(Kind.PHRASE_SHUFFLE, ch, r) for r in CHARACTER_PHRASE_RHOS)
    grid.extend(PerturbationSpec(Kind.NEIGHBOR_FLIP, ch, r) for r in CHARACTER_FLIP_RHOS)
    return grid


BUILTIN_SWEEPS: dict[str, Callable[[], list[PerturbationSpec]]] = {"paper-43": builtin_grid}


def sweep_to_json(specs: Iterable[PerturbationSpec]) -> str:
    return json.dumps([s.to_dict() for s in specs], indent=2, ensure_ascii=False)


def sweep_from_json(text: str) -> list[PerturbationSpec]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise SpecError("a sweep must be a JSON array of specs")
    specs = [PerturbationSpec.from_dict(item) for item in data]
    ids = [s.setting_id for s in specs]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise SpecError(f"duplicate setting ids: {dupes}")
    return specs


def resolve_sweep(name_or_json: str) -> list[PerturbationSpec]:
    """A built-in sweep name, or the JSON text of a sweep."""
    if name_or_json in BUILTIN_SWEEPS:
        return BUILTIN_SWEEPS[name_or_json]()
    return sweep_from_json(name_or_json)
