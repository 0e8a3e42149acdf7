#pragma once

#include <string>
#include <vector>

#include "hardneg/matcher.hpp"

namespace hardneg {

struct RankedCandidate {
    double score = 0.0;
    bool relevant = false;
};

struct RankedList {
    std::string context_id;
    std::vector<RankedCandidate> candidates;
};

// Candidate indices by descending score; ties keep input order, so results
// are reproducible byte for byte.
std::vector<std::size_t> ranking(const RankedList& list);

// 1 iff any relevant candidate ranks within the top k. k must be in [1, n].
int recall_at_k(const RankedList& list, std::size_t k);

// Mean over relevant candidates of precision at their rank. Needs at least
// one relevant candidate.
double average_precision(const RankedList& list);

// 1 / rank of the first relevant candidate.
double reciprocal_rank(const RankedList& list);

struct MetricReport {
    double map = 0.0;
    double mrr = 0.0;
    double p_at_1 = 0.0;
    double r_at_1 = 0.0;
    double r_at_2 = 0.0;
    double r_at_5 = 0.0;
    std::size_t contexts_evaluated = 0;
    std::size_t contexts_skipped = 0; // no relevant candidate; left out of every mean
};

MetricReport aggregate(const std::vector<RankedList>& lists);

struct EvalContext {
    Conversation context;
    std::vector<std::pair<Utterance, bool>> candidates; // (response, relevant)
};

// Groups of n_expected candidates per context, scored by the matcher and
// aggregated. Throws on a candidate-count mismatch.
MetricReport evaluate(const MatcherModel& model, const Featurizer& featurizer,
                      const std::vector<EvalContext>& test, std::size_t n_expected = 10);

// Consecutive rows sharing identical context turns form one candidate set.
std::vector<EvalContext> group_eval_contexts(const Dataset& test);

std::string format_report_table(const MetricReport& report);
std::string format_report_kv(const MetricReport& report);

} // namespace hardneg
