"""editforge: build, deduplicate, analyze, and evaluate instruction-based
code-editing corpora from git-commit seeds and LLM generation."""

__version__ = "0.1.0"
