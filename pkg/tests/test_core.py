import pytest
from hypothesis import given, strategies as st

from sancomp.core import (
    COARSE_NAMES,
    Compound,
    FormatError,
    Label,
    LabelInventory,
    ModelConfig,
    Sentence,
    Token,
    collect_labels_from_data,
    load_label_inventory,
    parse_config_pairs,
)
from sancomp.treeops import Leaf, Node


def make_component(surface, cid, idx):
    return Token(surface, is_component=True, compound_id=cid, component_index=idx)


def make_sentence(ranges, n_tokens=10):
    """Sentence with one compound per (start, end) range, plain words elsewhere."""
    spans = {}
    for k, (start, end) in enumerate(ranges):
        for pos in range(start, end + 1):
            spans.setdefault(pos, (f"c{k}", pos - start + 1))
    tokens = []
    for pos in range(1, n_tokens + 1):
        if pos in spans:
            cid, idx = spans[pos]
            tokens.append(make_component(f"w{pos}", cid, idx))
        else:
            tokens.append(Token(f"w{pos}"))
    compounds = [Compound(f"c{k}", start, end) for k, (start, end) in enumerate(ranges)]
    return Sentence(tuple(tokens), tuple(compounds))


class TestLabel:
    def test_valid(self):
        lab = Label("Tatpuruṣa", "coarse")
        assert lab.name == "Tatpuruṣa"
        assert not lab.is_structural

    @pytest.mark.parametrize("bad", ["", "a b", "a-b", "a<b", "a>b", "a\tb"])
    def test_rejects_bad_names(self, bad):
        with pytest.raises(ValueError):
            Label(bad)


class TestInventory:
    def test_load_coarse(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text(
            "Avyayībhāva\tleft\nBahuvrīhi\tright\nTatpuruṣa\tright\nDvandva\tright\n",
            encoding="utf-8",
        )
        inv = load_label_inventory(path, "coarse")
        assert len(inv) == 6  # 4 coarse + 2 structural
        assert [l.name for l in inv.non_structural] == list(COARSE_NAMES)
        assert inv.head_rule("Avyayībhāva") == "left"
        assert inv.get("CompoundRoot").is_structural

    def test_empty_file(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("# only comments\n", encoding="utf-8")
        with pytest.raises(FormatError, match="empty inventory"):
            load_label_inventory(path, "fine")

    def test_86_fine_labels(self, tmp_path):
        # the released fine-grained tagset has 86 labels; the loader only
        # counts, never enumerates, so any 86 distinct names exercise it
        names = [f"T{i}" for i in range(1, 87)]
        path = tmp_path / "fine.txt"
        path.write_text("\n".join(names) + "\n", encoding="utf-8")
        inv = load_label_inventory(path, "fine")
        assert len(inv) == 88

    def test_duplicate_label(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("T6\nT6\n", encoding="utf-8")
        with pytest.raises(FormatError, match="duplicate"):
            load_label_inventory(path, "fine")

    def test_malformed_head_rule(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("T6\tmiddle\n", encoding="utf-8")
        with pytest.raises(FormatError, match="head rule"):
            load_label_inventory(path, "fine")

    def test_default_head_rule_is_right(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("T6\n", encoding="utf-8")
        inv = load_label_inventory(path, "fine")
        assert inv.head_rule("T6") == "right"

    def test_coarse_mode_rejects_other_sets(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("T6\nT3\n", encoding="utf-8")
        with pytest.raises(FormatError, match="coarse"):
            load_label_inventory(path, "coarse")

    def test_indices_stable_and_roundtrip(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("Zeta\nAlpha\tleft\nMid\n", encoding="utf-8")
        inv = load_label_inventory(path, "fine")
        # file order, not sorted order
        assert inv.index("Zeta") == 0 and inv.index("Alpha") == 1
        saved = tmp_path / "saved.txt"
        inv.save(saved)
        assert load_label_inventory(saved, "fine") == inv

    def test_structural_name_reserved(self, tmp_path):
        path = tmp_path / "labels.txt"
        path.write_text("CompoundRoot\n", encoding="utf-8")
        with pytest.raises(FormatError, match="reserved"):
            load_label_inventory(path, "fine")


class TestCollectLabels:
    def test_single_label(self):
        t6 = Label("T6")
        tree = Node(Leaf(1), Leaf(2), t6)
        sent = make_sentence([(1, 2)], n_tokens=3)
        sent = Sentence(
            sent.tokens,
            (Compound("c0", 1, 2, gold_tree=tree),),
        )
        inv = collect_labels_from_data([sent])
        assert [l.name for l in inv.labels] == ["T6", "CompoundRoot", "GlobalRelation"]

    def test_empty_dataset(self):
        inv = collect_labels_from_data([])
        assert [l.name for l in inv.labels] == ["CompoundRoot", "GlobalRelation"]

    def test_union_is_sorted(self):
        a, b, c = Label("A"), Label("B"), Label("C")
        s1 = Sentence(
            (make_component("x", "c0", 1), make_component("y", "c0", 2), make_component("z", "c0", 3)),
            (Compound("c0", 1, 3, gold_tree=Node(Node(Leaf(1), Leaf(2), a), Leaf(3), b)),),
        )
        s2 = Sentence(
            (make_component("x", "c0", 1), make_component("y", "c0", 2), make_component("z", "c0", 3)),
            (Compound("c0", 1, 3, gold_tree=Node(Leaf(1), Node(Leaf(2), Leaf(3), c), b)),),
        )
        inv = collect_labels_from_data([s1, s2])
        assert [l.name for l in inv.non_structural] == ["A", "B", "C"]


class TestSentence:
    def test_token_component_fields(self):
        with pytest.raises(ValueError):
            Token("x", is_component=True)
        with pytest.raises(ValueError):
            Token("x", compound_id="c0", component_index=1)

    def test_contiguous_disjoint_ok(self):
        sent = make_sentence([(2, 4), (6, 7)])
        assert len(sent.compounds) == 2

    def test_overlap_rejected(self):
        with pytest.raises(ValueError, match="overlap"):
            make_sentence([(2, 4), (4, 6)])

    @given(
        a=st.integers(1, 8), b=st.integers(1, 8),
        c=st.integers(1, 8), d=st.integers(1, 8),
    )
    def test_random_ranges_overlap_property(self, a, b, c, d):
        r1 = (min(a, b), max(a, b))
        r2 = (min(c, d), max(c, d))
        if r1[1] - r1[0] < 1 or r2[1] - r2[0] < 1:
            return  # not valid compounds
        overlapping = not (r1[1] < r2[0] or r2[1] < r1[0])
        if overlapping:
            with pytest.raises(ValueError):
                make_sentence([r1, r2])
        else:
            make_sentence([r1, r2])


class TestModelConfig:
    def test_published_defaults(self):
        cfg = ModelConfig()
        assert cfg.batch_size == 16
        assert cfg.epochs == 100
        assert cfg.dropout == 0.33
        assert cfg.lstm_layers == 2
        assert cfg.learning_rate == 0.002

    def test_text_roundtrip(self):
        cfg = ModelConfig(word_dim=12, dropout=0.1, use_context=False, seed=7)
        assert ModelConfig.from_text(cfg.to_text()) == cfg

    def test_parse_rejects_unknown_key(self):
        with pytest.raises(FormatError, match="unknown config key"):
            parse_config_pairs("no_such_key=1")

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(dropout=1.5)
        with pytest.raises(ValueError):
            ModelConfig(learning_rate=0.0)
