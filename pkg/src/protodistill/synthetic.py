"""Deterministic synthetic bilingual corpora with controllable label shift.

A source language is built from templated sentences: fixed keyword
positions, sampled noise positions, and entity slots whose tags come
from the template.  The target language reuses the same sentence
skeletons (template, slot, and noise streams are keyed without the
language so the no-shift/identity-cipher case degenerates to an exact
copy) and differs in two controlled ways:

* every surface form is mapped through a fixed bijective cipher,
  except shift-table surfaces, which keep their surface in both
  languages;
* shift-table surfaces are placed into tag slots by per-language
  quotas, so each one has a configurable majority tag and rate per
  language.

An entry whose majority tag and rate match across languages acts as a
shared anchor name; an entry whose majorities differ is a genuine
shift token, the probe for language-specific label preference.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .corpus import (
    Corpus,
    CorpusError,
    LabeledSentence,
    LabelScheme,
    SealedLabelStore,
    seal_labels,
)
from .seeding import rng_for

# Fraction of the eligible tag slots a shift-table entry may occupy.
SHIFT_SHARE = 0.5

SOURCE_LANG = "src"
TARGET_LANG = "tgt"


class SyntheticError(CorpusError):
    pass


@dataclass(frozen=True)
class ShiftEntry:
    surface: str
    source_tag: str
    source_rate: float
    target_tag: str
    target_rate: float

    def __post_init__(self):
        for r in (self.source_rate, self.target_rate):
            if not (0.0 < r < 1.0):
                raise SyntheticError(f"shift rate {r} outside (0,1) for {self.surface!r}")

    def is_shifted(self) -> bool:
        return self.source_tag != self.target_tag


DEFAULT_SHIFT_TABLE = (
    # shared anchor names: same majority in both languages
    ShiftEntry("veria", "B-PER", 0.85, "B-PER", 0.85),
    ShiftEntry("kodan", "B-LOC", 0.85, "B-LOC", 0.85),
    ShiftEntry("senit", "B-ORG", 0.85, "B-ORG", 0.85),
    ShiftEntry("molva", "B-MISC", 0.85, "B-MISC", 0.85),
    # genuine shift tokens: the target language prefers a different tag
    ShiftEntry("madin", "I-ORG", 0.67, "B-LOC", 0.60),
    ShiftEntry("tarek", "I-PER", 0.60, "B-PER", 0.85),
)


@dataclass(frozen=True)
class SyntheticSpec:
    vocab_size: int = 400
    n_templates: int = 30
    train_sentences: int = 2000
    dev_sentences: int = 400
    test_sentences: int = 400
    target_train_sentences: int = 2000
    target_test_sentences: int = 400
    entity_density: float = 0.25
    cipher_seed: Optional[int] = 7
    shift_table: tuple[ShiftEntry, ...] = DEFAULT_SHIFT_TABLE
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 24:
            raise SyntheticError(f"vocabulary size {self.vocab_size} too small")
        if self.n_templates < 1:
            raise SyntheticError("need at least one template")
        if not (0.0 < self.entity_density < 1.0):
            raise SyntheticError("entity density must be in (0,1)")


@dataclass
class SyntheticData:
    scheme: LabelScheme
    source_train: Corpus
    source_dev: Corpus
    source_test: Corpus
    target_train: Corpus            # unlabeled view used by the pipeline
    target_train_gold: SealedLabelStore
    target_test: Corpus             # unlabeled view used by the pipeline
    target_test_gold: SealedLabelStore
    shift_surfaces: tuple[str, ...]  # entries whose majorities differ

    def all_corpora(self):
        return [self.source_train, self.source_dev, self.source_test,
                self.target_train, self.target_test]


# ----------------------------------------------------------------------
# templates
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class _Template:
    # item: ("kw", word) fixed keyword, ("noise",) sampled word, ("ent", tag_idx)
    items: tuple[tuple, ...]


def _build_vocab_pools(spec: SyntheticSpec, scheme: LabelScheme):
    n_ctx = max(8, int(spec.vocab_size * 0.6))
    n_fill = max(2, (spec.vocab_size - n_ctx) // len(scheme.entity_types))
    context = [f"w{i:03d}" for i in range(n_ctx)]
    fillers = {
        t: [f"{t.lower()}{i:03d}" for i in range(n_fill)]
        for t in scheme.entity_types
    }
    return context, fillers


def _build_templates(spec: SyntheticSpec, scheme: LabelScheme, context: list[str]):
    rng = rng_for(spec.seed, "templates")
    templates = []
    for _ in range(spec.n_templates):
        length = int(rng.integers(6, 13))
        n_ent = max(1, min(3, int(round(spec.entity_density * length / 1.6))))
        ent_specs = []
        for _ in range(n_ent):
            etype = scheme.entity_types[int(rng.integers(len(scheme.entity_types)))]
            ent_len = int(rng.choice([1, 2, 3], p=[0.45, 0.35, 0.2]))
            ent_specs.append((etype, ent_len))
        kw_pool = [context[int(rng.integers(len(context)))] for _ in range(4)]
        items: list[tuple] = []
        for etype, ent_len in ent_specs:
            # keyword immediately before the entity carries the class signal
            items.append(("kw", kw_pool[int(rng.integers(len(kw_pool)))]))
            items.append(("ent", scheme.index(f"B-{etype}")))
            for _ in range(ent_len - 1):
                items.append(("ent", scheme.index(f"I-{etype}")))
        while len(items) < length:
            if rng.random() < 0.5:
                items.append(("kw", kw_pool[int(rng.integers(len(kw_pool)))]))
            else:
                items.append(("noise",))
        templates.append(_Template(tuple(items)))
    return templates


# ----------------------------------------------------------------------
# corpus assembly
# ----------------------------------------------------------------------

def _entry_distribution(entry: ShiftEntry, lang: str, scheme: LabelScheme):
    """Tag distribution of one shift-table surface in one language."""
    if lang == SOURCE_LANG:
        maj, rate, other = entry.source_tag, entry.source_rate, entry.target_tag
    else:
        maj, rate, other = entry.target_tag, entry.target_rate, entry.source_tag
    if other != maj:
        minor = other
    else:
        if maj == "O":
            raise SyntheticError(f"shift entry {entry.surface!r} needs an entity tag")
        minor = ("I" + maj[1:]) if maj.startswith("B-") else ("B" + maj[1:])
    scheme.index(maj), scheme.index(minor)  # validates both tags
    return {maj: rate, minor: 1.0 - rate}


def _generate_split(spec: SyntheticSpec, scheme: LabelScheme, templates,
                    context, fillers, split: str, n_sentences: int, lang: str):
    """Sentences plus gold labels for one split of one language.

    Skeleton and fill streams are keyed by (seed, split, size) only, so the
    two languages share them; the shift-quota stream is language-keyed.
    """
    skel_rng = rng_for(spec.seed, "skeleton", split, n_sentences)
    fill_rng = rng_for(spec.seed, "fill", split, n_sentences)

    sentences: list[list[Optional[str]]] = []
    labels: list[list[int]] = []
    slots_by_tag: dict[int, list[tuple[int, int]]] = {}
    for si in range(n_sentences):
        t = templates[int(skel_rng.integers(len(templates)))]
        toks: list[Optional[str]] = []
        labs: list[int] = []
        for item in t.items:
            if item[0] == "kw":
                toks.append(item[1])
                labs.append(0)
            elif item[0] == "noise":
                toks.append(context[int(skel_rng.integers(len(context)))])
                labs.append(0)
            else:
                tag = item[1]
                slots_by_tag.setdefault(tag, []).append((si, len(toks)))
                toks.append(None)
                labs.append(tag)
        sentences.append(toks)
        labels.append(labs)

    # quota placement of shift-table surfaces
    shift_rng = rng_for(spec.seed, "shift", split, n_sentences, lang)
    taken: set[tuple[int, int]] = set()
    for entry in spec.shift_table:
        dist = _entry_distribution(entry, lang, scheme)
        avail = {}
        for tag_name, rate in dist.items():
            tag = scheme.index(tag_name)
            pool = [s for s in slots_by_tag.get(tag, []) if s not in taken]
            if not pool:
                continue
            avail[tag_name] = pool
        if len(avail) < len(dist):
            continue  # this split has no slots of a needed tag
        n_total = int(SHIFT_SHARE * min(len(avail[t]) / r for t, r in dist.items()))
        for tag_name, rate in dist.items():
            count = int(round(n_total * rate))
            pool = avail[tag_name]
            picked = shift_rng.permutation(len(pool))[:count]
            for k in picked:
                si, pos = pool[k]
                sentences[si][pos] = entry.surface
                taken.add((si, pos))

    # regular fillers for the remaining slots, in sentence order
    for si, toks in enumerate(sentences):
        for pos, tok in enumerate(toks):
            if tok is None:
                tag = labels[si][pos]
                etype = scheme.entity_type(tag)
                pool = fillers[etype]
                toks[pos] = pool[int(fill_rng.integers(len(pool)))]
    return sentences, labels


def _build_cipher(spec: SyntheticSpec, context, fillers):
    """Bijective surface map, identity on shift-table surfaces."""
    shared = {e.surface for e in spec.shift_table}
    source_surfaces = list(context)
    for t in sorted(fillers):
        source_surfaces.extend(fillers[t])
    mapping = {s: s for s in shared}
    if spec.cipher_seed is None:
        for s in source_surfaces:
            mapping[s] = s
        return mapping
    perm = rng_for(spec.cipher_seed, "cipher").permutation(len(source_surfaces))
    for i, s in enumerate(source_surfaces):
        mapping[s] = f"x{perm[i]:04d}"
    return mapping


def _to_corpus(sentences, labels, lang, split, scheme) -> Corpus:
    out = [
        LabeledSentence(tuple(toks), lang, tuple(labs))
        for toks, labs in zip(sentences, labels)
    ]
    return Corpus(out, language=lang, split=split, labeled=True)


def generate_synthetic(spec: SyntheticSpec,
                       scheme: Optional[LabelScheme] = None) -> SyntheticData:
    """Build the full bilingual benchmark: labeled source train/dev/test,
    unlabeled target train, and a target test set whose gold labels are
    sealed away from the training pipeline."""
    scheme = scheme or LabelScheme()
    context, fillers = _build_vocab_pools(spec, scheme)
    for entry in spec.shift_table:
        _entry_distribution(entry, SOURCE_LANG, scheme)
        _entry_distribution(entry, TARGET_LANG, scheme)
    templates = _build_templates(spec, scheme, context)
    cipher = _build_cipher(spec, context, fillers)

    def source_split(split, n):
        sents, labs = _generate_split(spec, scheme, templates, context, fillers,
                                      split, n, SOURCE_LANG)
        return _to_corpus(sents, labs, SOURCE_LANG, split, scheme)

    def target_split(split, n):
        sents, labs = _generate_split(spec, scheme, templates, context, fillers,
                                      split, n, TARGET_LANG)
        ciphered = [[cipher[t] for t in toks] for toks in sents]
        return _to_corpus(ciphered, labs, TARGET_LANG, split, scheme)

    src_train = source_split("train", spec.train_sentences)
    src_dev = source_split("dev", spec.dev_sentences)
    src_test = source_split("test", spec.test_sentences)
    tgt_train_full = target_split("train", spec.target_train_sentences)
    tgt_test_full = target_split("test", spec.target_test_sentences)

    tgt_train, train_gold = seal_labels(tgt_train_full, "target_train")
    tgt_test, test_gold = seal_labels(tgt_test_full, "target_test")
    shift_surfaces = tuple(e.surface for e in spec.shift_table if e.is_shifted())
    return SyntheticData(
        scheme=scheme,
        source_train=src_train,
        source_dev=src_dev,
        source_test=src_test,
        target_train=tgt_train,
        target_train_gold=train_gold,
        target_test=tgt_test,
        target_test_gold=test_gold,
        shift_surfaces=shift_surfaces,
    )
