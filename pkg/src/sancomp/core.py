"""Domain types shared by all modules: labels, tokens, sentences, compounds, config.

All types here are immutable after construction and safe to share across
concurrent readers. Text is UTF-8 code points throughout; IAST diacritics
are ordinary characters and are never normalized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from typing import Iterable, Mapping, Optional, Sequence

COMPOUND_ROOT = "CompoundRoot"
GLOBAL_RELATION = "GlobalRelation"
STRUCTURAL_NAMES = (COMPOUND_ROOT, GLOBAL_RELATION)

COARSE_NAMES = ("Avyayībhāva", "Bahuvrīhi", "Tatpuruṣa", "Dvandva")

_FORBIDDEN_LABEL_CHARS = set("<>-")


class SancompError(Exception):
    """Base class for toolkit errors."""


class FormatError(SancompError):
    """Malformed input file or text format."""


class GraphError(SancompError):
    """Invalid dependency structure."""


@dataclass(frozen=True)
class Label:
    """A span/arc label. kind is one of 'coarse', 'fine', 'structural'."""

    name: str
    kind: str = "fine"

    def __post_init__(self):
        validate_label_name(self.name)
        if self.kind not in ("coarse", "fine", "structural"):
            raise ValueError(f"unknown label kind {self.kind!r}")

    @property
    def is_structural(self) -> bool:
        return self.kind == "structural"


def validate_label_name(name: str) -> None:
    if not name:
        raise ValueError("label name is empty")
    if any(c.isspace() or c in _FORBIDDEN_LABEL_CHARS for c in name):
        raise ValueError(f"label name {name!r} contains whitespace or one of '< > -'")


class LabelInventory:
    """Ordered label set with per-label head-rule sides.

    Index = position in file order; the two structural labels CompoundRoot
    and GlobalRelation are always appended last and are never valid span
    labels. Labels without an explicit head rule default to 'right'.
    """

    def __init__(self, labels: Sequence[Label], head_rules: Optional[Mapping[str, str]] = None):
        names = [lab.name for lab in labels]
        if len(set(names)) != len(names):
            dup = next(n for n in names if names.count(n) > 1)
            raise FormatError(f"duplicate label name {dup!r}")
        self.labels: tuple[Label, ...] = tuple(labels)
        self._index = {lab.name: i for i, lab in enumerate(self.labels)}
        rules = dict(head_rules or {})
        for name, side in rules.items():
            if side not in ("left", "right"):
                raise FormatError(f"malformed head rule {side!r} for label {name!r}")
            if name not in self._index:
                raise FormatError(f"head rule for unknown label {name!r}")
        # right is the fallback side: Sanskrit determinative compounds are
        # predominantly right-headed
        self.head_rules: dict[str, str] = {
            lab.name: rules.get(lab.name, "right") for lab in self.labels if not lab.is_structural
        }

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, LabelInventory)
            and self.labels == other.labels
            and self.head_rules == other.head_rules
        )

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown label {name!r}") from None

    def get(self, name: str) -> Label:
        return self.labels[self.index(name)]

    def head_rule(self, name: str) -> str:
        if name not in self._index:
            raise KeyError(f"unknown label {name!r}")
        if self.get(name).is_structural:
            raise KeyError(f"structural label {name!r} has no head rule")
        return self.head_rules[name]

    @property
    def non_structural(self) -> tuple[Label, ...]:
        return tuple(lab for lab in self.labels if not lab.is_structural)

    @property
    def compound_root_index(self) -> int:
        return self._index[COMPOUND_ROOT]

    @property
    def global_relation_index(self) -> int:
        return self._index[GLOBAL_RELATION]

    def save(self, path) -> None:
        """Write one `name<TAB>side` line per non-structural label, file order."""
        with open(path, "w", encoding="utf-8") as fh:
            for lab in self.non_structural:
                fh.write(f"{lab.name}\t{self.head_rules[lab.name]}\n")

    def to_text(self) -> str:
        lines = [f"{lab.name}\t{lab.kind}\t{self.head_rules[lab.name]}" for lab in self.non_structural]
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "LabelInventory":
        labels, rules = [], {}
        for line in text.splitlines():
            if not line.strip():
                continue
            name, kind, side = line.split("\t")
            labels.append(Label(name, kind))
            rules[name] = side
        return cls(_with_structural(labels), rules)


def _with_structural(labels: Iterable[Label]) -> list[Label]:
    out = list(labels)
    out.extend(Label(n, "structural") for n in STRUCTURAL_NAMES)
    return out


def load_label_inventory(path, mode: str = "fine") -> LabelInventory:
    """Load an inventory file: one `label[<TAB>left|right]` per line, `#` comments.

    mode 'coarse' requires exactly the four coarse compound types; 'fine'
    accepts any label set (the 86 fine-grained types live in a guidelines
    document outside this toolkit and are always file-driven).
    """
    if mode not in ("coarse", "fine"):
        raise ValueError(f"mode must be 'coarse' or 'fine', got {mode!r}")
    labels: list[Label] = []
    rules: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            name = parts[0]
            if name in STRUCTURAL_NAMES:
                raise FormatError(f"{path}:{lineno}: {name} is reserved (structural)")
            try:
                validate_label_name(name)
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from None
            if len(parts) > 2:
                raise FormatError(f"{path}:{lineno}: expected 'label[\\tleft|right]'")
            if len(parts) == 2:
                if parts[1] not in ("left", "right"):
                    raise FormatError(f"{path}:{lineno}: malformed head rule {parts[1]!r}")
                rules[name] = parts[1]
            labels.append(Label(name, mode))
    if not labels:
        raise FormatError(f"{path}: empty inventory")
    if mode == "coarse" and sorted(l.name for l in labels) != sorted(COARSE_NAMES):
        raise FormatError(
            f"{path}: coarse inventory must contain exactly {', '.join(COARSE_NAMES)}"
        )
    return LabelInventory(_with_structural(labels), rules)


def collect_labels_from_data(sentences: Iterable["Sentence"]) -> LabelInventory:
    """Fallback inventory: sorted distinct labels observed in gold trees."""
    seen: dict[str, Label] = {}
    for sent in sentences:
        for comp in sent.compounds:
            if comp.gold_tree is None:
                continue
            for lab in comp.gold_tree.iter_labels():
                if lab is not None:
                    seen.setdefault(lab.name, lab)
    labels = [seen[name] for name in sorted(seen)]
    return LabelInventory(_with_structural(labels))


@dataclass(frozen=True)
class Token:
    """One post-segmentation token: either a plain word or one compound component."""

    surface: str
    is_component: bool = False
    compound_id: Optional[str] = None
    component_index: Optional[int] = None  # 1-based within its compound

    def __post_init__(self):
        has_ids = self.compound_id is not None and self.component_index is not None
        if self.is_component != has_ids:
            raise ValueError("is_component requires compound_id and component_index, and vice versa")


@dataclass(frozen=True)
class Compound:
    """A contiguous run of component tokens. Token positions are 1-based inclusive."""

    id: str
    token_start: int
    token_end: int
    gold_tree: Optional["NestingTree"] = None  # noqa: F821  (defined in treeops)

    @property
    def n_components(self) -> int:
        return self.token_end - self.token_start + 1

    def __post_init__(self):
        if self.token_start < 1 or self.token_end < self.token_start:
            raise ValueError(f"bad compound range [{self.token_start}, {self.token_end}]")
        if self.n_components < 2:
            raise ValueError(f"compound {self.id!r} needs at least 2 components")

    def component_positions(self) -> range:
        return range(self.token_start, self.token_end + 1)


@dataclass(frozen=True)
class Sentence:
    """Tokens with compounds expanded into their components.

    Construction checks that each compound covers a contiguous range of
    component tokens and that compound ranges are disjoint.
    """

    tokens: tuple[Token, ...]
    compounds: tuple[Compound, ...] = ()
    sid: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "compounds", tuple(self.compounds))
        covered: set[int] = set()
        for comp in self.compounds:
            if comp.token_end > len(self.tokens):
                raise ValueError(f"compound {comp.id!r} range exceeds sentence length")
            span = set(comp.component_positions())
            if covered & span:
                raise ValueError(f"compound {comp.id!r} overlaps another compound")
            covered |= span
            for pos in comp.component_positions():
                tok = self.tokens[pos - 1]
                if not tok.is_component or tok.compound_id != comp.id:
                    raise ValueError(
                        f"token {pos} of compound {comp.id!r} is not marked as its component"
                    )
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.is_component and pos not in covered:
                raise ValueError(f"component token {pos} belongs to no declared compound")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters and feature switches.

    batch_size/epochs/dropout/lstm_layers/learning_rate default to the
    published training recipe; the four use_* switches drive the ablation
    and context settings.
    """

    word_dim: int = 300
    char_dim: int = 50
    char_feature_dim: int = 100
    span_dim: int = 50
    lstm_hidden: int = 512
    lstm_layers: int = 2
    arc_mlp_dim: int = 512
    label_mlp_dim: int = 128
    dropout: float = 0.33
    learning_rate: float = 0.002
    batch_size: int = 16
    epochs: int = 100
    use_span_encoding: bool = True
    use_pretrained_vectors: bool = True
    use_contextual_vectors: bool = False
    use_context: bool = True
    seed: int = 1

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        for name in ("word_dim", "char_dim", "char_feature_dim", "span_dim",
                     "lstm_hidden", "lstm_layers", "arc_mlp_dim", "label_mlp_dim",
                     "batch_size", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def replace(self, **kw) -> "ModelConfig":
        return replace(self, **kw)

    def to_text(self) -> str:
        return "\n".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        return cls(**parse_config_pairs(text))


def parse_config_pairs(text: str) -> dict:
    """Parse line-oriented `key=value` config text into typed kwargs."""
    types = {f.name: f.type for f in fields(ModelConfig)}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise FormatError(f"line {lineno}: unknown config key {key!r}")
        kind = types[key]
        if kind in ("int", int):
            out[key] = int(value)
        elif kind in ("float", float):
            out[key] = float(value)
        elif kind in ("bool", bool):
            if value.lower() not in ("true", "false", "0", "1"):
                raise FormatError(f"line {lineno}: bad boolean {value!r}")
            out[key] = value.lower() in ("true", "1")
        else:
            out[key] = value
    return out
