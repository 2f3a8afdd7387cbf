"""Toolkit for nested analysis of multi-component compounds.

Identifies the binary nesting structure of a compound and the semantic
relation between nested spans by casting the problem as labeled dependency
parsing over the compound's components in sentential context.
"""

from .core import (
    COMPOUND_ROOT,
    GLOBAL_RELATION,
    Compound,
    FormatError,
    GraphError,
    Label,
    LabelInventory,
    ModelConfig,
    SancompError,
    Sentence,
    Token,
    collect_labels_from_data,
    load_label_inventory,
)
from .treeops import (
    DependencyGraph,
    Leaf,
    NestingTree,
    Node,
    SpanTuple,
    catalan,
    dependency_to_tree,
    enumerate_parses,
    parse_bracket,
    render_bracket,
    spans_to_tree,
    tree_to_dependency,
    tree_to_spans,
    validate_graph,
)

__version__ = "0.1.0"

__all__ = [
    "COMPOUND_ROOT",
    "GLOBAL_RELATION",
    "Compound",
    "DependencyGraph",
    "FormatError",
    "GraphError",
    "Label",
    "LabelInventory",
    "Leaf",
    "ModelConfig",
    "NestingTree",
    "Node",
    "SancompError",
    "Sentence",
    "SpanTuple",
    "Token",
    "catalan",
    "collect_labels_from_data",
    "dependency_to_tree",
    "enumerate_parses",
    "load_label_inventory",
    "parse_bracket",
    "render_bracket",
    "spans_to_tree",
    "tree_to_dependency",
    "tree_to_spans",
    "validate_graph",
]
