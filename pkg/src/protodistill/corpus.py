"""BIO-labeled corpora: CoNLL ingestion, validation, batching, vocabulary.

File format: one ``token<whitespace>tag`` pair per line for labeled data,
one token per line for unlabeled data, blank line between sentences,
lines starting with ``-DOCSTART-`` skipped.  A file must be uniformly
labeled or unlabeled.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .seeding import rng_for


class CorpusError(Exception):
    pass


class UnknownTagError(CorpusError):
    def __init__(self, tag, line_no):
        super().__init__(f"unknown tag {tag!r} at line {line_no}")
        self.tag = tag
        self.line_no = line_no


class BioViolationError(CorpusError):
    def __init__(self, message, line_no):
        super().__init__(f"{message} at line {line_no}")
        self.line_no = line_no


@dataclass(frozen=True)
class LabelScheme:
    """Ordered BIO tag set over a list of entity types. Index 0 is always O."""

    entity_types: tuple[str, ...] = ("PER", "LOC", "ORG", "MISC")

    def __post_init__(self):
        if not self.entity_types or len(set(self.entity_types)) != len(self.entity_types):
            raise CorpusError("entity types must be non-empty and unique")

    @property
    def tags(self) -> tuple[str, ...]:
        out = ["O"]
        for t in self.entity_types:
            out.append(f"B-{t}")
            out.append(f"I-{t}")
        return tuple(out)

    @property
    def size(self) -> int:
        return 1 + 2 * len(self.entity_types)

    def index(self, tag: str) -> int:
        try:
            return self.tags.index(tag)
        except ValueError:
            raise CorpusError(f"unknown tag {tag!r}") from None

    def tag(self, idx: int) -> str:
        return self.tags[idx]

    def entity_type(self, idx: int) -> Optional[str]:
        """Entity type of a tag index, None for O."""
        if idx == 0:
            return None
        return self.entity_types[(idx - 1) // 2]

    def is_begin(self, idx: int) -> bool:
        return idx != 0 and (idx - 1) % 2 == 0


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    language: str

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("empty sentence")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class LabeledSentence(Sentence):
    labels: tuple[int, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        if len(self.labels) != len(self.tokens):
            raise CorpusError("label count does not match token count")


@dataclass
class Corpus:
    sentences: list[Sentence]
    language: str
    split: str
    labeled: bool

    def __post_init__(self):
        for s in self.sentences:
            if s.language != self.language:
                raise CorpusError(
                    f"sentence language {s.language!r} differs from corpus {self.language!r}")

    def __len__(self):
        return len(self.sentences)

    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def n_entities(self, scheme: LabelScheme) -> int:
        if not self.labeled:
            raise CorpusError("unlabeled corpus has no entities to count")
        return sum(1 for s in self.sentences for y in s.labels if scheme.is_begin(y))


def validate_bio(labels: Sequence[int], scheme: LabelScheme) -> list[tuple[int, str]]:
    """All BIO violations in a label sequence as (index, message) pairs."""
    violations = []
    prev = 0
    for i, y in enumerate(labels):
        if y != 0 and not scheme.is_begin(y):
            etype = scheme.entity_type(y)
            prev_type = scheme.entity_type(prev) if prev != 0 else None
            if prev == 0:
                violations.append((i, f"I-{etype} without a preceding entity tag"))
            elif prev_type != etype:
                violations.append((i, f"I-{etype} after a {prev_type} tag"))
        prev = y
    return violations


def _repair_bio(labels: list[int], scheme: LabelScheme) -> list[int]:
    """Rewrite dangling I-t to B-t (lenient mode)."""
    fixed = list(labels)
    for i, _msg in validate_bio(labels, scheme):
        fixed[i] = fixed[i] - 1  # I-t sits one index after B-t
    # a repair can only turn I into B, never creating new violations
    return fixed


def parse_conll(source, scheme: LabelScheme, *, language: str, split: str = "train",
                strict: bool = True, lenient: bool = False,
                max_len: Optional[int] = None) -> Corpus:
    """Parse CoNLL text (string or file-like) into a Corpus.

    Unknown tags and, in strict mode, BIO violations raise with the line
    number.  With ``lenient=True`` a dangling I-t is rewritten to B-t.
    Sentences longer than ``max_len`` are split, backing off to an entity
    boundary so no entity is cut (see ``_split_long``).
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    sentences: list[Sentence] = []
    tokens: list[str] = []
    tags: list[int] = []
    line_starts: list[int] = []
    labeled: Optional[bool] = None

    def flush():
        nonlocal tokens, tags, line_starts
        if not tokens:
            return
        if labeled:
            labels = tags
            violations = validate_bio(labels, scheme)
            if violations and lenient:
                labels = _repair_bio(labels, scheme)
            elif violations and strict:
                idx, msg = violations[0]
                raise BioViolationError(msg, line_starts[idx])
            for part_toks, part_labels in _split_long(tokens, labels, scheme, max_len):
                sentences.append(LabeledSentence(tuple(part_toks), language,
                                                 tuple(part_labels)))
        else:
            for part_toks, _ in _split_long(tokens, None, scheme, max_len):
                sentences.append(Sentence(tuple(part_toks), language))
        tokens, tags, line_starts = [], [], []

    line_no = 0
    for line_no, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        if line.startswith("-DOCSTART-"):
            continue
        fields = line.split()
        if len(fields) == 1:
            has_tag = False
        elif len(fields) == 2:
            has_tag = True
        else:
            raise CorpusError(f"malformed line {line_no}: {raw.rstrip()!r}")
        if labeled is None:
            labeled = has_tag
        elif labeled != has_tag:
            raise CorpusError(f"mixed labeled/unlabeled lines at line {line_no}")
        tokens.append(fields[0])
        line_starts.append(line_no)
        if has_tag:
            try:
                tags.append(scheme.index(fields[1]))
            except CorpusError:
                raise UnknownTagError(fields[1], line_no) from None
    flush()
    if not sentences:
        raise CorpusError("no sentences in input")
    return Corpus(sentences, language=language, split=split, labeled=bool(labeled))


def _split_long(tokens, labels, scheme, max_len):
    """Split an over-long sentence at max_len, backing off to avoid cutting
    an entity.  An entity longer than max_len is cut and the dangling I-t
    of the continuation rewritten to B-t."""
    if max_len is None or len(tokens) <= max_len:
        yield tokens, labels
        return
    start = 0
    n = len(tokens)
    while start < n:
        end = min(start + max_len, n)
        if end < n and labels is not None:
            cut = end
            while cut > start and labels[cut] != 0 and not scheme.is_begin(labels[cut]):
                cut -= 1
            if cut > start:
                end = cut
        part_tokens = tokens[start:end]
        if labels is None:
            yield part_tokens, None
        else:
            part_labels = list(labels[start:end])
            if part_labels and part_labels[0] != 0 and not scheme.is_begin(part_labels[0]):
                part_labels[0] = part_labels[0] - 1
            yield part_tokens, part_labels
        start = end


def serialize_conll(corpus: Corpus, scheme: Optional[LabelScheme] = None) -> str:
    """Inverse of parse_conll (modulo normalized whitespace)."""
    if corpus.labeled and scheme is None:
        raise CorpusError("serializing a labeled corpus requires the label scheme")
    lines = []
    for s in corpus.sentences:
        if corpus.labeled:
            for tok, y in zip(s.tokens, s.labels):
                lines.append(f"{tok} {scheme.tag(y)}")
        else:
            lines.extend(s.tokens)
        lines.append("")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# vocabulary
# ----------------------------------------------------------------------

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"


class Vocab:
    """Token-to-id map with reserved PAD (0) and UNK (1) entries.

    Insertion order follows first appearance, so building from the same
    corpora always yields the same ids.
    """

    def __init__(self, tokens: Iterable[str] = ()):
        self._ids: dict[str, int] = {PAD_TOKEN: 0, UNK_TOKEN: 1}
        for t in tokens:
            self.add(t)

    def add(self, token: str) -> int:
        if token not in self._ids:
            self._ids[token] = len(self._ids)
        return self._ids[token]

    def id(self, token: str) -> int:
        return self._ids.get(token, 1)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    def __len__(self):
        return len(self._ids)

    def __contains__(self, token):
        return token in self._ids

    def tokens(self) -> list[str]:
        return list(self._ids)

    def encode(self, sentence: Sentence) -> np.ndarray:
        return np.asarray([self.id(t) for t in sentence.tokens], dtype=np.int64)


def build_vocab(*corpora: Corpus) -> Vocab:
    """Shared vocabulary over the union of all corpora, in appearance order."""
    v = Vocab()
    for c in corpora:
        for s in c.sentences:
            for t in s.tokens:
                v.add(t)
    return v


# ----------------------------------------------------------------------
# batching
# ----------------------------------------------------------------------

def epoch_batches(corpus: Corpus, batch_size: int, seed: int, epoch: int
                  ) -> list[list[int]]:
    """Sentence-index batches for one epoch, shuffled by a per-epoch stream."""
    if batch_size < 1:
        raise CorpusError(f"batch size must be >= 1, got {batch_size}")
    if not corpus.sentences:
        raise CorpusError("cannot batch an empty corpus")
    order = rng_for(seed, "batches", corpus.language, corpus.split, epoch
                    ).permutation(len(corpus.sentences))
    return [order[i:i + batch_size].tolist() for i in range(0, len(order), batch_size)]


class BatchIterator:
    """Endless batch stream cycling over epochs with per-epoch reshuffles."""

    def __init__(self, corpus: Corpus, batch_size: int, seed: int):
        self.corpus = corpus
        self.batch_size = batch_size
        self.seed = seed
        self.epoch = 0
        self._pending: list[list[int]] = []

    def next_batch(self) -> list[int]:
        if not self._pending:
            self._pending = epoch_batches(self.corpus, self.batch_size,
                                          self.seed, self.epoch)
            self.epoch += 1
        return self._pending.pop(0)


# ----------------------------------------------------------------------
# sealed gold labels
# ----------------------------------------------------------------------

class SealedLabelStore:
    """Gold labels quarantined from the training pipeline.

    Every read is appended to ``access_log``; the zero-resource audit
    asserts the log stays empty throughout training and only carries
    'evaluate' entries afterwards.
    """

    def __init__(self, labels: Sequence[Sequence[int]], corpus_id: str):
        self._labels = tuple(tuple(ls) for ls in labels)
        self.corpus_id = corpus_id
        self.access_log: list[str] = []

    def read(self, purpose: str) -> tuple[tuple[int, ...], ...]:
        self.access_log.append(f"{self.corpus_id}:{purpose}")
        return self._labels

    def __len__(self):
        return len(self._labels)


def seal_labels(corpus: Corpus, corpus_id: str) -> tuple[Corpus, SealedLabelStore]:
    """Strip gold labels off a corpus into a sealed store."""
    if not corpus.labeled:
        raise CorpusError("corpus is already unlabeled")
    store = SealedLabelStore([s.labels for s in corpus.sentences], corpus_id)
    stripped = Corpus([Sentence(s.tokens, s.language) for s in corpus.sentences],
                      language=corpus.language, split=corpus.split, labeled=False)
    return stripped, store
