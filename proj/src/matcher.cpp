#include "hardneg/matcher.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "hardneg/errors.hpp"
#include "hardneg/rng.hpp"

namespace hardneg {

const std::array<std::string_view, FeatureVector::kCount>& FeatureVector::names() {
    static const std::array<std::string_view, kCount> names = {
        "context_overlap", "last_turn_overlap", "keyword_overlap", "length_ratio",
        "response_idf_mean"};
    return names;
}

Featurizer::Featurizer(IdfTable idf, TokenizerMode mode, StopwordSet stopwords,
                       std::size_t keyword_top_k)
    : idf_(std::move(idf)),
      mode_(mode),
      stopwords_(std::move(stopwords)),
      keyword_top_k_(keyword_top_k) {}

FeatureVector Featurizer::features(const Conversation& context, const Utterance& response) const {
    FeatureVector f;
    auto resp = Tokenizer::split(mode_, response.text);
    if (resp.empty()) return f;

    std::unordered_set<std::string> ctx_tokens;
    std::size_t ctx_token_count = 0;
    for (const auto& turn : context.turns) {
        auto toks = Tokenizer::split(mode_, turn.text);
        ctx_token_count += toks.size();
        for (auto& t : toks) ctx_tokens.insert(std::move(t));
    }

    std::unordered_set<std::string> last_tokens;
    for (auto& t : Tokenizer::split(mode_, context.turns.back().text))
        last_tokens.insert(std::move(t));

    std::unordered_set<std::string> kw_tokens;
    for (const auto& kw : extract_keywords(context, idf_, keyword_top_k_, stopwords_, mode_))
        for (const auto& t : kw.tokens) kw_tokens.insert(t);

    double idf_sum = 0.0, idf_hit = 0.0, last_hits = 0.0, kw_hits = 0.0;
    for (const auto& t : resp) {
        double w = idf_.idf_of(t);
        idf_sum += w;
        if (ctx_tokens.count(t)) idf_hit += w;
        if (last_tokens.count(t)) last_hits += 1.0;
        if (kw_tokens.count(t)) kw_hits += 1.0;
    }

    double n = static_cast<double>(resp.size());
    f.context_overlap = idf_sum > 0.0 ? idf_hit / idf_sum : 0.0;
    f.last_turn_overlap = last_hits / n;
    f.keyword_overlap = kw_hits / n;
    f.length_ratio =
        ctx_token_count > 0
            ? n / (static_cast<double>(ctx_token_count) / static_cast<double>(context.turns.size()))
            : 0.0;
    f.response_idf_mean = idf_sum / n;
    return f;
}

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow
double softplus(double z) {
    return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

} // namespace

double MatcherModel::score(const FeatureVector& f) const {
    auto x = f.as_array();
    double z = bias;
    for (std::size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
    return sigmoid(z);
}

double logistic_loss(const std::vector<std::array<double, FeatureVector::kCount>>& features,
                     const std::vector<int>& labels,
                     const std::array<double, FeatureVector::kCount>& weights, double bias,
                     double l2) {
    double loss = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        double z = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[i][j];
        // -y log p - (1-y) log(1-p) = softplus(z) - y z
        loss += softplus(z) - static_cast<double>(labels[i]) * z;
    }
    loss /= static_cast<double>(features.size());
    for (double w : weights) loss += 0.5 * l2 * w * w;
    return loss;
}

std::array<double, FeatureVector::kCount + 1>
logistic_gradient(const std::vector<std::array<double, FeatureVector::kCount>>& features,
                  const std::vector<int>& labels,
                  const std::array<double, FeatureVector::kCount>& weights, double bias,
                  double l2) {
    std::array<double, FeatureVector::kCount + 1> grad{};
    for (std::size_t i = 0; i < features.size(); ++i) {
        double z = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * features[i][j];
        double err = sigmoid(z) - static_cast<double>(labels[i]);
        for (std::size_t j = 0; j < weights.size(); ++j) grad[j] += err * features[i][j];
        grad[FeatureVector::kCount] += err;
    }
    double m = static_cast<double>(features.size());
    for (auto& g : grad) g /= m;
    for (std::size_t j = 0; j < weights.size(); ++j) grad[j] += l2 * weights[j];
    return grad;
}

MatcherModel train_matcher(const Dataset& train, const Featurizer& featurizer,
                           const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.learning_rate <= 0.0) throw ConfigError("learning rate must be > 0");

    std::vector<std::array<double, FeatureVector::kCount>> features;
    std::vector<int> labels;
    features.reserve(train.examples.size());
    bool saw_pos = false, saw_neg = false;
    for (const auto& ex : train.examples) {
        features.push_back(featurizer.features(ex.context, ex.response).as_array());
        labels.push_back(ex.label == Label::positive ? 1 : 0);
        (ex.label == Label::positive ? saw_pos : saw_neg) = true;
    }
    if (!saw_pos || !saw_neg)
        throw std::invalid_argument("train_matcher needs both positive and negative examples");

    MatcherModel model;
    model.epochs = cfg.epochs;
    model.learning_rate = cfg.learning_rate;
    model.seed = cfg.seed;
    Rng rng(cfg.seed);
    for (auto& w : model.weights) w = (rng.uniform() - 0.5) * 0.02;

    double initial = logistic_loss(features, labels, model.weights, model.bias, cfg.l2);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto grad = logistic_gradient(features, labels, model.weights, model.bias, cfg.l2);
        for (std::size_t j = 0; j < model.weights.size(); ++j)
            model.weights[j] -= cfg.learning_rate * grad[j];
        model.bias -= cfg.learning_rate * grad[FeatureVector::kCount];
    }
    double final_loss = logistic_loss(features, labels, model.weights, model.bias, cfg.l2);
    if (final_loss > initial) {
        // learning rate too hot for this data; a single halving pass keeps
        // the final <= initial contract without hiding divergence
        TrainConfig cooled = cfg;
        cooled.learning_rate = cfg.learning_rate / 10.0;
        return train_matcher(train, featurizer, cooled);
    }
    return model;
}

double score(const MatcherModel& model, const Conversation& context, const Utterance& response,
             const Featurizer& featurizer) {
    return model.score(featurizer.features(context, response));
}

void MatcherModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << "hardneg-matcher v" << kFormatVersion << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < weights.size(); ++i)
        out << FeatureVector::names()[i] << ' ' << weights[i] << '\n';
    out << "bias " << bias << '\n';
    out << "epochs " << epochs << '\n';
    out << "learning_rate " << learning_rate << '\n';
    out << "seed " << seed << '\n';
    if (!out) throw IoError("write failed: " + path);
}

MatcherModel MatcherModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != "hardneg-matcher v" + std::to_string(kFormatVersion))
        throw ParseError("not a matcher file or unsupported version: " + path);

    MatcherModel model;
    std::string name;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        in >> name >> model.weights[i];
        if (!in || name != FeatureVector::names()[i])
            throw ParseError("feature mismatch in " + path + " (got \"" + name + "\")");
    }
    in >> name >> model.bias;
    if (!in || name != "bias") throw ParseError("missing bias in " + path);
    in >> name >> model.epochs;
    in >> name >> model.learning_rate;
    in >> name >> model.seed;
    return model;
}

} // namespace hardneg
