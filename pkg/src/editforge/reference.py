"""Published full-scale reference figures for the corpus this pipeline
reproduces.

These values come from the original full-scale release, which depended on
proprietary LLM backends and a long generation run. They are recorded for
comparison in reports and documentation only; nothing in this package
asserts them, because desk-scale runs cannot reproduce them.
"""

# Corpus scale
REFERENCE_TRAIN_SIZE = 108_391
REFERENCE_VALIDATION_SIZE = 5_708
REFERENCE_TEST_SIZE = 134
REFERENCE_TOTAL_SIZE = 114_000  # "over 114,000" instruction-input-output triplets

# Seed provenance
REFERENCE_COMMIT_SEEDS = 768          # commit-derived seed tasks processed
REFERENCE_BOOTSTRAP_SEEDS = 634       # used for instruction bootstrapping
REFERENCE_HELD_OUT_SEEDS = 134        # reserved for the test split
REFERENCE_CURATED_SEEDS = 592         # curated generated samples added as seeds

# Complexity (subword-tokenizer dependent; defaults here count whitespace
# tokens, so length rows are comparable in spirit only)
REFERENCE_MEAN_N_DIFF = 11.9
REFERENCE_MEAN_R_DIFF = 0.52
REFERENCE_TOKEN_LENGTH_MEAN = {"instruction": 21.85, "input": 172.03, "output": 248.43}
REFERENCE_TOKEN_LENGTH_MAX = {"instruction": 116, "input": 1019, "output": 1024}

# Evaluation
REFERENCE_JUDGE_ACCURACY_BEST_33B = 0.893   # largest finetuned model, judge-scored
REFERENCE_HUMAN_BREAKDOWN_CHATGPT = {"correct": 79.3, "partial": 10.4, "wrong": 10.3}
REFERENCE_HUMAN_JUDGE_AGREEMENT = 0.682
REFERENCE_QUALITY_CHECK = {"instruction_valid": 0.97, "output_acceptable": 0.90}
