from .harness import (AnswerEvalItem, EvalQuery, JudgmentCache, MetricsRow, StatsReport,
                      StatsRow, build_stats_report, run_answer_eval, run_retrieval_eval,
                      standard_meta, write_answer_report, write_retrieval_report)
from .judging import (ANSWER_DIMENSIONS, AnswerScores, RelevanceJudgment, judge_answer,
                      judge_prompt_hash, judge_relevance, load_judge_prompt,
                      parse_answer_scores)
from .metrics import ndcg_at_k, recall_at_k
from .stats import (PairedStats, paired_stats, pearson_r, regularized_incomplete_beta,
                    sample_std, student_t_p_two_tailed)

__all__ = [
    "ANSWER_DIMENSIONS", "AnswerEvalItem", "AnswerScores", "EvalQuery", "JudgmentCache",
    "MetricsRow", "PairedStats", "RelevanceJudgment", "StatsReport", "StatsRow",
    "build_stats_report", "judge_answer", "judge_prompt_hash", "judge_relevance",
    "load_judge_prompt", "ndcg_at_k", "paired_stats", "parse_answer_scores", "pearson_r",
    "recall_at_k", "regularized_incomplete_beta", "run_answer_eval", "run_retrieval_eval",
    "sample_std", "standard_meta", "student_t_p_two_tailed", "write_answer_report",
    "write_retrieval_report",
]
