#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hardneg/keywords.hpp"

namespace hardneg {

struct FeatureVector {
    static constexpr std::size_t kCount = 5;

    double context_overlap = 0.0;   // idf-weighted share of response tokens seen in the context
    double last_turn_overlap = 0.0; // plain share of response tokens seen in the last turn
    double keyword_overlap = 0.0;   // share of response tokens among extracted keywords
    double length_ratio = 0.0;      // response length / mean context turn length
    double response_idf_mean = 0.0;

    std::array<double, kCount> as_array() const {
        return {context_overlap, last_turn_overlap, keyword_overlap, length_ratio,
                response_idf_mean};
    }
    static const std::array<std::string_view, kCount>& names();
};

// Bundles everything featurize needs beyond the (context, response) pair.
class Featurizer {
public:
    Featurizer(IdfTable idf, TokenizerMode mode, StopwordSet stopwords,
               std::size_t keyword_top_k = 5);

    FeatureVector features(const Conversation& context, const Utterance& response) const;

    const IdfTable& idf() const { return idf_; }
    TokenizerMode mode() const { return mode_; }
    const StopwordSet& stopwords() const { return stopwords_; }

private:
    IdfTable idf_;
    TokenizerMode mode_;
    StopwordSet stopwords_;
    std::size_t keyword_top_k_;
};

struct MatcherModel {
    static constexpr int kFormatVersion = 1;

    std::array<double, FeatureVector::kCount> weights{};
    double bias = 0.0;
    // training metadata
    std::size_t epochs = 0;
    double learning_rate = 0.0;
    std::uint64_t seed = 0;

    double score(const FeatureVector& f) const; // sigmoid(w.f + b), in (0,1)

    void save(const std::string& path) const;
    static MatcherModel load(const std::string& path);
};

struct TrainConfig {
    double learning_rate = 0.5;
    std::size_t epochs = 300;
    double l2 = 1e-4; // bias not regularized
    std::uint64_t seed = 1;
};

// Mean cross-entropy over (features, labels) plus l2/2 * |w|^2.
double logistic_loss(const std::vector<std::array<double, FeatureVector::kCount>>& features,
                     const std::vector<int>& labels,
                     const std::array<double, FeatureVector::kCount>& weights, double bias,
                     double l2);

// Analytic gradient of logistic_loss; last entry is d/d bias.
std::array<double, FeatureVector::kCount + 1>
logistic_gradient(const std::vector<std::array<double, FeatureVector::kCount>>& features,
                  const std::vector<int>& labels,
                  const std::array<double, FeatureVector::kCount>& weights, double bias,
                  double l2);

// Full-batch gradient descent, deterministic given cfg.seed. Needs both
// labels present; final loss never exceeds the initial loss.
MatcherModel train_matcher(const Dataset& train, const Featurizer& featurizer,
                           const TrainConfig& cfg);

double score(const MatcherModel& model, const Conversation& context, const Utterance& response,
             const Featurizer& featurizer);

} // namespace hardneg
