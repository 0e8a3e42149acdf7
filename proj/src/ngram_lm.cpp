#include "hardneg/ngram_lm.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hardneg/errors.hpp"

namespace hardneg {

namespace {
constexpr const char* kMagic = "hardneg-ngram-lm v1";
}

std::string NGramLM::key_of(std::span<const TokenId> ids) {
    std::string key(ids.size() * sizeof(TokenId), '\0');
    if (!ids.empty()) std::memcpy(key.data(), ids.data(), key.size());
    return key;
}

NGramLM NGramLM::train(const Dataset& corpus, int order, TokenizerMode mode, double discount) {
    if (corpus.examples.empty()) throw std::invalid_argument("train_ngram: empty corpus");
    if (order < 1) throw ConfigError("n-gram order must be >= 1");
    if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("discount must be in (0, 1)");

    NGramLM lm;
    lm.order_ = order;
    lm.discounts_.assign(static_cast<std::size_t>(order), discount);
    lm.raw_.resize(static_cast<std::size_t>(order));

    auto vocab = std::make_shared<Vocab>();
    for (const auto& ex : corpus.examples) {
        for (const auto& turn : ex.context.turns)
            for (const auto& tok : Tokenizer::split(mode, turn.text)) vocab->add(tok);
        for (const auto& tok : Tokenizer::split(mode, ex.response.text)) vocab->add(tok);
    }
    lm.vocab_ = vocab;
    lm.tokenizer_ = Tokenizer(mode, vocab);

    for (const auto& ex : corpus.examples) {
        std::vector<TokenId> ids{Vocab::kBos};
        for (const auto& turn : ex.context.turns) {
            auto toks = lm.tokenizer_.encode(turn.text);
            ids.insert(ids.end(), toks.begin(), toks.end());
            ids.push_back(Vocab::kSep);
        }
        auto toks = lm.tokenizer_.encode(ex.response.text);
        ids.insert(ids.end(), toks.begin(), toks.end());
        ids.push_back(Vocab::kEos);
        lm.count_sequence(ids);
    }

    lm.build_levels();
    return lm;
}

void NGramLM::count_sequence(const std::vector<TokenId>& encoded) {
    // encoded = BOS body...; replace the single BOS by order-1 of them.
    std::vector<TokenId> padded(static_cast<std::size_t>(order_ - 1), Vocab::kBos);
    padded.insert(padded.end(), encoded.begin() + 1, encoded.end());

    for (int k = 1; k <= order_; ++k) {
        auto& table = raw_[static_cast<std::size_t>(k - 1)];
        if (padded.size() < static_cast<std::size_t>(k)) continue;
        for (std::size_t i = 0; i + static_cast<std::size_t>(k) <= padded.size(); ++i)
            table[key_of({padded.data() + i, static_cast<std::size_t>(k)})] += 1;
    }
}

void NGramLM::build_levels() {
    levels_.assign(static_cast<std::size_t>(order_), Table{});

    // Top level: raw counts.
    {
        Table& top = levels_[static_cast<std::size_t>(order_ - 1)];
        for (const auto& [key, count] : raw_[static_cast<std::size_t>(order_ - 1)]) {
            std::size_t ctx_bytes = key.size() - sizeof(TokenId);
            TokenId tok;
            std::memcpy(&tok, key.data() + ctx_bytes, sizeof(TokenId));
            Row& row = top[key.substr(0, ctx_bytes)];
            row.cont[tok] += static_cast<double>(count);
            row.total += static_cast<double>(count);
        }
    }

    // Lower levels: continuation type counts from the raw table one order up.
    for (int k = order_ - 1; k >= 1; --k) {
        Table& level = levels_[static_cast<std::size_t>(k - 1)];
        for (const auto& [key, count] : raw_[static_cast<std::size_t>(k)]) {
            (void)count; // one type = one continuation
            std::string suffix = key.substr(sizeof(TokenId));
            std::size_t ctx_bytes = suffix.size() - sizeof(TokenId);
            TokenId tok;
            std::memcpy(&tok, suffix.data() + ctx_bytes, sizeof(TokenId));
            Row& row = level[suffix.substr(0, ctx_bytes)];
            row.cont[tok] += 1.0;
            row.total += 1.0;
        }
    }
}

ProbDist NGramLM::next_token_dist(std::span<const TokenId> context) const {
    std::size_t v = vocab_->size();
    ProbDist result(v, 0.0);

    std::size_t ctx_len = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    std::span<const TokenId> h = context.subspan(context.size() - ctx_len);

    double carry = 1.0;
    for (std::size_t k = ctx_len + 1; k >= 1; --k) {
        const Table& table = levels_[k - 1];
        auto it = table.find(key_of(h.subspan(h.size() - (k - 1))));
        if (it != table.end() && it->second.total > 0.0) {
            const Row& row = it->second;
            double d = discounts_[k - 1];
            for (const auto& [tok, c] : row.cont)
                result[static_cast<std::size_t>(tok)] += carry * (c - d) / row.total;
            carry *= d * static_cast<double>(row.cont.size()) / row.total;
        }
        if (k == 1) break;
    }
    double floor = carry / static_cast<double>(v);
    for (double& p : result) p += floor;
    return result;
}

double NGramLM::token_prob(std::span<const TokenId> context, TokenId token) const {
    std::size_t ctx_len = std::min(context.size(), static_cast<std::size_t>(order_ - 1));
    std::span<const TokenId> h = context.subspan(context.size() - ctx_len);

    double p = 0.0;
    double carry = 1.0;
    for (std::size_t k = ctx_len + 1; k >= 1; --k) {
        const Table& table = levels_[k - 1];
        auto it = table.find(key_of(h.subspan(h.size() - (k - 1))));
        if (it != table.end() && it->second.total > 0.0) {
            const Row& row = it->second;
            double d = discounts_[k - 1];
            auto ct = row.cont.find(token);
            if (ct != row.cont.end()) p += carry * (ct->second - d) / row.total;
            carry *= d * static_cast<double>(row.cont.size()) / row.total;
        }
        if (k == 1) break;
    }
    p += carry / static_cast<double>(vocab_->size());
    return p;
}

std::vector<double> NGramLM::token_log_probs(std::span<const TokenId> context,
                                             std::span<const TokenId> response) const {
    std::vector<TokenId> ids(context.begin(), context.end());
    std::vector<double> out;
    out.reserve(response.size());
    for (TokenId tok : response) {
        out.push_back(std::log(token_prob(ids, tok)));
        ids.push_back(tok);
    }
    return out;
}

void NGramLM::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << kMagic << '\n';
    out << "order " << order_ << '\n';
    out << "mode " << tokenizer_mode_name(tokenizer_.mode()) << '\n';
    out << "discount";
    for (double d : discounts_) out << ' ' << d;
    out << '\n';
    out << "vocab " << vocab_->size() << '\n';
    for (std::size_t i = 0; i < vocab_->size(); ++i)
        out << vocab_->token_of(static_cast<TokenId>(i)) << '\n';
    for (int k = 1; k <= order_; ++k) {
        const auto& table = raw_[static_cast<std::size_t>(k - 1)];
        // Sorted dump so identical models produce identical files.
        std::vector<std::pair<std::string, std::uint64_t>> grams(table.begin(), table.end());
        std::sort(grams.begin(), grams.end());
        out << "counts " << k << ' ' << grams.size() << '\n';
        for (const auto& [key, count] : grams) {
            for (std::size_t i = 0; i < key.size(); i += sizeof(TokenId)) {
                TokenId id;
                std::memcpy(&id, key.data() + i, sizeof(TokenId));
                out << id << ' ';
            }
            out << count << '\n';
        }
    }
    out << "end\n";
    if (!out) throw IoError("write failed: " + path);
}

NGramLM NGramLM::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != kMagic)
        throw ParseError("not a model file or unsupported version (want \"" +
                         std::string(kMagic) + "\"): " + path);

    NGramLM lm;
    std::string word;
    in >> word >> lm.order_;
    if (word != "order" || lm.order_ < 1) throw ParseError("bad order line in " + path);

    std::string mode_name;
    in >> word >> mode_name;
    auto mode = tokenizer_mode_from_name(mode_name);
    if (word != "mode" || !mode) throw ParseError("bad mode line in " + path);

    in >> word;
    if (word != "discount") throw ParseError("bad discount line in " + path);
    lm.discounts_.resize(static_cast<std::size_t>(lm.order_));
    for (double& d : lm.discounts_) in >> d;

    std::size_t vocab_size = 0;
    in >> word >> vocab_size;
    if (word != "vocab" || vocab_size < 4) throw ParseError("bad vocab line in " + path);
    std::getline(in, line);
    auto vocab = std::make_shared<Vocab>();
    for (std::size_t i = 0; i < vocab_size; ++i) {
        if (!std::getline(in, line)) throw ParseError("truncated vocab in " + path);
        if (i < 4) {
            if (line != vocab->token_of(static_cast<TokenId>(i)))
                throw ParseError("reserved token mismatch in " + path);
        } else {
            vocab->add(line);
        }
    }
    lm.vocab_ = vocab;
    lm.tokenizer_ = Tokenizer(*mode, vocab);

    lm.raw_.resize(static_cast<std::size_t>(lm.order_));
    for (int k = 1; k <= lm.order_; ++k) {
        std::size_t rows = 0;
        int kk = 0;
        in >> word >> kk >> rows;
        if (word != "counts" || kk != k) throw ParseError("bad counts header in " + path);
        auto& table = lm.raw_[static_cast<std::size_t>(k - 1)];
        table.reserve(rows);
        std::vector<TokenId> ids(static_cast<std::size_t>(k));
        for (std::size_t r = 0; r < rows; ++r) {
            for (auto& id : ids) in >> id;
            std::uint64_t count = 0;
            in >> count;
            if (!in) throw ParseError("truncated counts in " + path);
            table[key_of(ids)] = count;
        }
    }
    in >> word;
    if (word != "end") throw ParseError("missing end marker in " + path);

    lm.build_levels();
    return lm;
}

} // namespace hardneg
