#include "hardneg/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace hardneg {

std::vector<std::size_t> ranking(const RankedList& list) {
    std::vector<std::size_t> order(list.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return list.candidates[a].score > list.candidates[b].score;
    });
    return order;
}

int recall_at_k(const RankedList& list, std::size_t k) {
    if (list.candidates.empty()) throw std::invalid_argument("recall_at_k: empty list");
    if (k < 1 || k > list.candidates.size())
        throw std::invalid_argument("recall_at_k: k out of range");
    auto order = ranking(list);
    for (std::size_t r = 0; r < k; ++r)
        if (list.candidates[order[r]].relevant) return 1;
    return 0;
}

double average_precision(const RankedList& list) {
    auto order = ranking(list);
    double hits = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (!list.candidates[order[r]].relevant) continue;
        hits += 1.0;
        sum += hits / static_cast<double>(r + 1);
    }
    if (hits == 0.0) throw std::invalid_argument("average_precision: no relevant candidate");
    return sum / hits;
}

double reciprocal_rank(const RankedList& list) {
    auto order = ranking(list);
    for (std::size_t r = 0; r < order.size(); ++r)
        if (list.candidates[order[r]].relevant) return 1.0 / static_cast<double>(r + 1);
    throw std::invalid_argument("reciprocal_rank: no relevant candidate");
}

MetricReport aggregate(const std::vector<RankedList>& lists) {
    MetricReport rep;
    for (const auto& list : lists) {
        if (list.candidates.empty()) throw std::invalid_argument("aggregate: empty context");
        bool any_relevant = false;
        for (const auto& c : list.candidates) any_relevant |= c.relevant;
        if (!any_relevant) {
            rep.contexts_skipped += 1;
            continue;
        }
        auto order = ranking(list);
        rep.map += average_precision(list);
        rep.mrr += reciprocal_rank(list);
        rep.p_at_1 += list.candidates[order[0]].relevant ? 1.0 : 0.0;
        std::size_t n = list.candidates.size();
        rep.r_at_1 += recall_at_k(list, std::min<std::size_t>(1, n));
        rep.r_at_2 += recall_at_k(list, std::min<std::size_t>(2, n));
        rep.r_at_5 += recall_at_k(list, std::min<std::size_t>(5, n));
        rep.contexts_evaluated += 1;
    }
    if (rep.contexts_evaluated > 0) {
        double n = static_cast<double>(rep.contexts_evaluated);
        rep.map /= n;
        rep.mrr /= n;
        rep.p_at_1 /= n;
        rep.r_at_1 /= n;
        rep.r_at_2 /= n;
        rep.r_at_5 /= n;
    }
    return rep;
}

MetricReport evaluate(const MatcherModel& model, const Featurizer& featurizer,
                      const std::vector<EvalContext>& test, std::size_t n_expected) {
    std::vector<RankedList> lists;
    lists.reserve(test.size());
    for (const auto& ctx : test) {
        if (ctx.candidates.empty())
            throw std::invalid_argument("evaluate: context " + ctx.context.id +
                                        " has no candidates");
        if (n_expected != 0 && ctx.candidates.size() != n_expected)
            throw std::invalid_argument("evaluate: context " + ctx.context.id + " has " +
                                        std::to_string(ctx.candidates.size()) +
                                        " candidates, expected " + std::to_string(n_expected));
        RankedList list;
        list.context_id = ctx.context.id;
        for (const auto& [resp, relevant] : ctx.candidates)
            list.candidates.push_back({score(model, ctx.context, resp, featurizer), relevant});
        lists.push_back(std::move(list));
    }
    return aggregate(lists);
}

std::vector<EvalContext> group_eval_contexts(const Dataset& test) {
    std::vector<EvalContext> out;
    auto same_context = [](const Conversation& a, const Conversation& b) {
        if (a.turns.size() != b.turns.size()) return false;
        for (std::size_t i = 0; i < a.turns.size(); ++i)
            if (a.turns[i].text != b.turns[i].text) return false;
        return true;
    };
    for (const auto& ex : test.examples) {
        if (out.empty() || !same_context(out.back().context, ex.context)) {
            out.push_back({ex.context, {}});
        }
        out.back().candidates.emplace_back(ex.response, ex.label == Label::positive);
    }
    return out;
}

std::string format_report_table(const MetricReport& report) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "MAP    MRR    P1     R1     R2     R5     contexts\n";
    os << report.map << ' ' << report.mrr << ' ' << report.p_at_1 << ' ' << report.r_at_1 << ' '
       << report.r_at_2 << ' ' << report.r_at_5 << ' ' << report.contexts_evaluated;
    if (report.contexts_skipped > 0) os << " (+" << report.contexts_skipped << " skipped)";
    os << '\n';
    return os.str();
}

std::string format_report_kv(const MetricReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "MAP\t" << report.map << '\n'
       << "MRR\t" << report.mrr << '\n'
       << "P1\t" << report.p_at_1 << '\n'
       << "R1\t" << report.r_at_1 << '\n'
       << "R2\t" << report.r_at_2 << '\n'
       << "R5\t" << report.r_at_5 << '\n'
       << "contexts_evaluated\t" << report.contexts_evaluated << '\n'
       << "contexts_skipped\t" << report.contexts_skipped << '\n';
    return os.str();
}

} // namespace hardneg
