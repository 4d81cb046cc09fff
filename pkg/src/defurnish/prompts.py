"""Training prompt set and the fixed inference prompt.

The 32 training prompts combine an optional article, an emptiness adjective,
a room synonym, and optional descriptive suffixes (only valid after the
article form). Joining uses single spaces between words; suffixes attach
directly since they carry their own punctuation. Enumeration is sorted so
the list is byte-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from defurnish.errors import ValidationError

ARTICLES = ("", "an")
ADJECTIVES = ("empty", "unfurnished")
NOUNS = ("room", "space", "home", "house")
SUFFIX_BLANK = ". uniformly blank"
SUFFIX_EDGES = ", straight edges"

INFERENCE_PROMPT = "empty room"


@dataclass(frozen=True)
class PromptSet:
    prompts: tuple[str, ...]
    inference_prompt: str = INFERENCE_PROMPT

    def __post_init__(self):
        if len(set(self.prompts)) != len(self.prompts):
            raise ValidationError("prompt set contains duplicates")
        if self.inference_prompt not in self.prompts:
            raise ValidationError("inference prompt must be a member of the prompt set")

    def __len__(self) -> int:
        return len(self.prompts)


def enumerate_prompts(
    articles: tuple[str, ...] = ARTICLES,
    adjectives: tuple[str, ...] = ADJECTIVES,
    nouns: tuple[str, ...] = NOUNS,
) -> PromptSet:
    """Enumerate the full prompt grammar (32 prompts with the defaults)."""
    out = []
    for article in articles:
        for adjective in adjectives:
            for noun in nouns:
                head = f"{article} {adjective} {noun}".strip()
                if article:
                    suffixes = ("", SUFFIX_BLANK, SUFFIX_BLANK + SUFFIX_EDGES)
                else:
                    suffixes = ("",)
                for suffix in suffixes:
                    out.append(head + suffix)
    return PromptSet(tuple(sorted(out)))


def sample_prompt(prompt_set: PromptSet, seed: int, sample_index: int) -> str:
    """Uniform draw, deterministic in (seed, sample_index).

    Callers wanting fresh draws per epoch should fold the epoch into
    sample_index (e.g. epoch * num_samples + i).
    """
    if len(prompt_set) == 0:
        raise ValidationError("prompt set is empty")
    rng = np.random.default_rng([seed, sample_index])
    return prompt_set.prompts[int(rng.integers(len(prompt_set)))]


def load_prompts(path) -> PromptSet:
    """Read a prompt list (one per line); the inference prompt must be present."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    return PromptSet(tuple(lines))
