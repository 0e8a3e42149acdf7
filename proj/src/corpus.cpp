#include "hardneg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "hardneg/errors.hpp"

namespace hardneg {

using nlohmann::json;

const char* origin_name(Origin o) {
    switch (o) {
        case Origin::golden: return "golden";
        case Origin::random: return "random";
        case Origin::generated_gen1: return "generated-gen1";
        case Origin::generated_gen2_insert: return "generated-gen2-insert";
        case Origin::generated_gen2_start: return "generated-gen2-start";
        case Origin::fallback_random: return "fallback-random";
    }
    return "random";
}

std::optional<Origin> origin_from_name(const std::string& name) {
    static const std::pair<const char*, Origin> table[] = {
        {"golden", Origin::golden},
        {"random", Origin::random},
        {"generated-gen1", Origin::generated_gen1},
        {"generated-gen2-insert", Origin::generated_gen2_insert},
        {"generated-gen2-start", Origin::generated_gen2_start},
        {"fallback-random", Origin::fallback_random},
    };
    for (const auto& [n, o] : table)
        if (name == n) return o;
    return std::nullopt;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

DataFormat format_for_path(const std::string& path) {
    auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        std::string ext = path.substr(dot);
        if (ext == ".jsonl" || ext == ".json") return DataFormat::jsonl;
    }
    return DataFormat::tsv;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return out;
}

Example parse_tsv_line(const std::string& line, std::size_t lineno, Split split) {
    auto fields = split_tabs(line);
    if (fields.size() < 3)
        throw ParseError("expected at least 3 tab-separated fields, got " +
                             std::to_string(fields.size()),
                         lineno);

    Example ex;
    const std::string& label = fields[0];
    if (label == "1") {
        ex.label = Label::positive;
        ex.origin = Origin::golden;
    } else if (label == "0") {
        ex.label = Label::negative;
        ex.origin = Origin::random;
    } else {
        throw ParseError("label must be \"0\" or \"1\", got \"" + label + "\"", lineno);
    }

    ex.context.id = std::string(split_name(split)) + ":" + std::to_string(lineno);
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
        std::string text = trim(fields[i]);
        if (text.empty()) throw ParseError("empty context turn", lineno);
        ex.context.turns.push_back({std::move(text), {}});
    }
    std::string resp = trim(fields.back());
    if (resp.empty()) throw ParseError("empty response", lineno);
    ex.response = {std::move(resp), {}};
    return ex;
}

Example parse_jsonl_line(const std::string& line, std::size_t lineno, Split split) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", lineno);

    Example ex;
    if (j.contains("id") && j["id"].is_string())
        ex.context.id = j["id"].get<std::string>();
    else
        ex.context.id = std::string(split_name(split)) + ":" + std::to_string(lineno);

    if (!j.contains("turns") || !j["turns"].is_array() || j["turns"].empty())
        throw ParseError("missing or empty \"turns\" array", lineno);
    for (const auto& t : j["turns"]) {
        if (!t.is_string()) throw ParseError("\"turns\" entries must be strings", lineno);
        std::string text = trim(t.get<std::string>());
        if (text.empty()) throw ParseError("empty context turn", lineno);
        ex.context.turns.push_back({std::move(text), {}});
    }

    if (!j.contains("response") || !j["response"].is_string())
        throw ParseError("missing \"response\" string", lineno);
    std::string resp = trim(j["response"].get<std::string>());
    if (resp.empty()) throw ParseError("empty response", lineno);
    ex.response = {std::move(resp), {}};

    if (!j.contains("label") || !j["label"].is_number_integer())
        throw ParseError("missing integer \"label\"", lineno);
    int label = j["label"].get<int>();
    if (label != 0 && label != 1) throw ParseError("label must be 0 or 1", lineno);
    ex.label = label == 1 ? Label::positive : Label::negative;

    if (j.contains("origin")) {
        if (!j["origin"].is_string()) throw ParseError("\"origin\" must be a string", lineno);
        auto o = origin_from_name(j["origin"].get<std::string>());
        if (!o) throw ParseError("unknown origin \"" + j["origin"].get<std::string>() + "\"", lineno);
        ex.origin = *o;
    } else {
        ex.origin = ex.label == Label::positive ? Origin::golden : Origin::random;
    }
    return ex;
}

} // namespace

Dataset load_dataset(const std::string& path, DataFormat format, Split split) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    Dataset ds;
    ds.split = split;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (format == DataFormat::jsonl) {
            // Leading metadata line, if any, is not data.
            if (lineno == 1) {
                json j = json::parse(line, nullptr, false);
                if (j.is_object() && j.contains("_meta")) continue;
            }
            ds.examples.push_back(parse_jsonl_line(line, lineno, split));
        } else {
            ds.examples.push_back(parse_tsv_line(line, lineno, split));
        }
    }
    if (ds.examples.empty()) throw ParseError("empty dataset: " + path);
    return ds;
}

void write_dataset(const Dataset& ds, const std::string& path, DataFormat format,
                   const std::optional<FileMeta>& meta) {
    if (ds.examples.empty()) throw IoError("refusing to write an empty dataset");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);

    if (format == DataFormat::tsv) {
        for (const auto& ex : ds.examples) {
            auto check = [&](const std::string& s) {
                if (s.find('\t') != std::string::npos || s.find('\n') != std::string::npos)
                    throw IoError("utterance contains a TAB or newline; tsv output would be "
                                  "ambiguous, use jsonl: \"" + s + "\"");
            };
            out << (ex.label == Label::positive ? '1' : '0');
            for (const auto& turn : ex.context.turns) {
                check(turn.text);
                out << '\t' << turn.text;
            }
            check(ex.response.text);
            out << '\t' << ex.response.text << '\n';
        }
    } else {
        if (meta) {
            json m = {{"_meta", {{"seed", meta->seed}, {"tool", meta->tool}, {"note", meta->note}}}};
            out << m.dump() << '\n';
        }
        for (const auto& ex : ds.examples) {
            json turns = json::array();
            for (const auto& turn : ex.context.turns) turns.push_back(turn.text);
            json j = {{"id", ex.context.id},
                      {"turns", std::move(turns)},
                      {"response", ex.response.text},
                      {"label", ex.label == Label::positive ? 1 : 0},
                      {"origin", origin_name(ex.origin)}};
            out << j.dump() << '\n';
        }
    }
    if (!out) throw IoError("write failed: " + path);
}

CorpusStats corpus_stats(const Dataset& ds) {
    if (ds.examples.empty()) throw std::invalid_argument("corpus_stats: empty dataset");
    CorpusStats st;
    st.dialog_count = ds.examples.size();
    std::size_t turns = 0;
    std::uint64_t pos = 0, neg = 0;
    for (const auto& ex : ds.examples) {
        turns += ex.context.turns.size();
        (ex.label == Label::positive ? pos : neg) += 1;
    }
    st.avg_turns = static_cast<double>(turns) / static_cast<double>(st.dialog_count);
    std::uint64_t g = std::gcd(pos, neg);
    if (g == 0) g = 1;
    st.pos_neg_ratio = {pos / g, neg / g};
    return st;
}

// ---- Tokenization ----------------------------------------------------

const char* tokenizer_mode_name(TokenizerMode m) {
    return m == TokenizerMode::whitespace ? "whitespace" : "character";
}

std::optional<TokenizerMode> tokenizer_mode_from_name(const std::string& name) {
    if (name == "whitespace") return TokenizerMode::whitespace;
    if (name == "character") return TokenizerMode::character;
    return std::nullopt;
}

std::vector<std::string> Tokenizer::split(TokenizerMode mode, const std::string& text) {
    std::vector<std::string> out;
    if (mode == TokenizerMode::whitespace) {
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            if (i > start) out.push_back(text.substr(start, i - start));
        }
    } else {
        // One token per UTF-8 code point; malformed lead bytes pass through
        // as single bytes.
        std::size_t i = 0;
        while (i < text.size()) {
            unsigned char c = static_cast<unsigned char>(text[i]);
            std::size_t len = 1;
            if ((c & 0xE0) == 0xC0) len = 2;
            else if ((c & 0xF0) == 0xE0) len = 3;
            else if ((c & 0xF8) == 0xF0) len = 4;
            if (i + len > text.size()) len = 1;
            if (len == 1 && std::isspace(c)) {
                ++i;
                continue;
            }
            out.push_back(text.substr(i, len));
            i += len;
        }
    }
    return out;
}

const Vocab& Tokenizer::vocab() const {
    if (!vocab_) throw std::logic_error("tokenizer has no vocabulary");
    return *vocab_;
}

std::vector<TokenId> Tokenizer::encode(const std::string& text) const {
    const Vocab& v = vocab();
    std::vector<TokenId> ids;
    for (const auto& tok : split(mode_, text)) ids.push_back(v.id_of(tok));
    return ids;
}

std::string Tokenizer::decode(const std::vector<TokenId>& ids) const {
    const Vocab& v = vocab();
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (mode_ == TokenizerMode::whitespace && i > 0) out += ' ';
        out += v.token_of(ids[i]);
    }
    return out;
}

// ---- Utterance sampling ----------------------------------------------

UtterancePool::UtterancePool(const Dataset& ds) {
    for (const auto& ex : ds.examples) {
        std::size_t n = ex.context.turns.size();
        for (std::size_t t = 0; t < n; ++t)
            entries_.push_back({&ex.context.turns[t], &ex.context.id, t});
        entries_.push_back({&ex.response, &ex.context.id, n});
        turns_per_conv_[ex.context.id] += n + 1;
    }
}

bool UtterancePool::has_candidate_outside(const std::string& conv_id) const {
    auto it = turns_per_conv_.find(conv_id);
    std::size_t inside = it == turns_per_conv_.end() ? 0 : it->second;
    return entries_.size() > inside;
}

UtterancePool::Draw UtterancePool::sample(Rng& rng, const std::string& exclude_conv_id) const {
    if (!has_candidate_outside(exclude_conv_id))
        throw NoCandidateError("utterance pool has no conversation other than " + exclude_conv_id);
    while (true) {
        const Entry& e = entries_[rng.uniform_index(entries_.size())];
        if (*e.conv_id != exclude_conv_id) return {e.utterance, *e.conv_id, e.turn_index};
    }
}

Utterance sample_utterance(const UtterancePool& pool, Rng& rng, const std::string& exclude_conv_id) {
    return *pool.sample(rng, exclude_conv_id).utterance;
}

} // namespace hardneg
