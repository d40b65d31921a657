"""Few-shot prompt strings built from retrieved examples.

Each example is one line ``[<src>]: <source>. =[<trg>]: <target>``; the
prompt ends with the query line ``[<src>]: <query>. =[<trg>]:``. Lines are
joined with a single newline and there is no trailing newline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class Prompt:
    text: str
    shots: int
    requested: int

    @property
    def complete(self) -> bool:
        return self.shots >= self.requested


def example_line(source: str, target: str, src_lang: str = "src", tgt_lang: str = "trg") -> str:
    return f"[{src_lang}]: {source}. =[{tgt_lang}]: {target}"


def query_line(query: str, src_lang: str = "src", tgt_lang: str = "trg") -> str:
    return f"[{src_lang}]: {query}. =[{tgt_lang}]:"


def build_prompt(query: str, examples: Sequence[tuple[str, str]], shots: int = 3,
                 src_lang: str = "src", tgt_lang: str = "trg") -> Prompt:
    """Prompt with up to ``shots`` examples, kept in retrieval order."""
    used = list(examples[:shots])
    lines = [example_line(s, t, src_lang, tgt_lang) for s, t in used]
    lines.append(query_line(query, src_lang, tgt_lang))
    return Prompt(text="\n".join(lines), shots=len(used), requested=shots)
