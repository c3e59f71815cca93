"""Reaction centers, template extraction, canonical template strings and application."""

from .apply import DEFAULT_MAX_MATCHES, RewriteError, apply_template, first_outcome, has_valid_outcome
from .center import ReactionCenter, detect_reaction_center
from .corpus import (
    TemplateAssignment,
    assign_corpus_templates,
    read_assignment,
    read_template_table,
    write_assignment,
    write_template_table,
)
from .reaction import MappingError, Reaction, parse_reaction, read_corpus, reaction_smiles, write_corpus
from .template import CenterError, Template, build_template, canonical_template_string, extract_template

__all__ = [
    "CenterError",
    "DEFAULT_MAX_MATCHES",
    "MappingError",
    "Reaction",
    "ReactionCenter",
    "RewriteError",
    "Template",
    "TemplateAssignment",
    "apply_template",
    "assign_corpus_templates",
    "build_template",
    "canonical_template_string",
    "detect_reaction_center",
    "extract_template",
    "first_outcome",
    "has_valid_outcome",
    "parse_reaction",
    "read_assignment",
    "read_corpus",
    "read_template_table",
    "reaction_smiles",
    "write_assignment",
    "write_corpus",
    "write_template_table",
]
