#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hardneg/rng.hpp"
#include "hardneg/vocab.hpp"

namespace hardneg {

struct Utterance {
    std::string text;              // non-empty after whitespace trimming
    std::vector<TokenId> tokens;   // filled after tokenization
};

struct Conversation {
    std::string id;
    std::vector<Utterance> turns;  // dialogue order, N >= 1
};

enum class Label { positive, negative };

enum class Origin {
    golden,
    random,
    generated_gen1,
    generated_gen2_insert,
    generated_gen2_start,
    fallback_random,
};

const char* origin_name(Origin o);
std::optional<Origin> origin_from_name(const std::string& name);

struct Example {
    Conversation context;
    Utterance response;
    Label label = Label::negative;
    Origin origin = Origin::random;
};

enum class Split { train, val, test };
const char* split_name(Split s);

struct Dataset {
    std::vector<Example> examples;
    Split split = Split::train;
};

enum class DataFormat { tsv, jsonl };

// Picks by file extension; ".jsonl"/".json" -> jsonl, anything else tsv.
DataFormat format_for_path(const std::string& path);

struct CorpusStats {
    std::size_t dialog_count = 0;
    double avg_turns = 0.0;                           // context turns only
    std::pair<std::uint64_t, std::uint64_t> pos_neg_ratio{0, 0};
};

// Metadata recorded as a leading {"_meta": {...}} line in jsonl outputs;
// the loader skips it. TSV output carries no header (the format mirrors the
// published distribution files exactly).
struct FileMeta {
    std::uint64_t seed = 0;
    std::string tool;
    std::string note;
};

// TSV lines are `label<TAB>turn_1<TAB>...<TAB>turn_N<TAB>response` with
// label in {0,1}. JSONL lines are
// {"id": str, "turns": [str], "response": str, "label": 0|1, "origin": str}.
Dataset load_dataset(const std::string& path, DataFormat format, Split split = Split::train);
void write_dataset(const Dataset& ds, const std::string& path, DataFormat format,
                   const std::optional<FileMeta>& meta = std::nullopt);

CorpusStats corpus_stats(const Dataset& ds);

// ---- Tokenization ----------------------------------------------------

enum class TokenizerMode { whitespace, character };

const char* tokenizer_mode_name(TokenizerMode m);
std::optional<TokenizerMode> tokenizer_mode_from_name(const std::string& name);

// `whitespace` splits on runs of ASCII whitespace; `character` yields one
// token per UTF-8 code point (ASCII whitespace dropped), the
// segmentation-free stand-in for unsegmented corpora.
class Tokenizer {
public:
    Tokenizer() = default;
    Tokenizer(TokenizerMode mode, std::shared_ptr<const Vocab> vocab)
        : mode_(mode), vocab_(std::move(vocab)) {}

    static std::vector<std::string> split(TokenizerMode mode, const std::string& text);

    // Unknown tokens map to Vocab::kUnk.
    std::vector<TokenId> encode(const std::string& text) const;
    std::string decode(const std::vector<TokenId>& ids) const;

    TokenizerMode mode() const { return mode_; }
    const Vocab& vocab() const;

private:
    TokenizerMode mode_ = TokenizerMode::whitespace;
    std::shared_ptr<const Vocab> vocab_;
};

// ---- Utterance sampling ----------------------------------------------

// Flat view over every turn (context turns plus response) of a dataset.
// Non-owning: must not outlive the dataset it was built from.
class UtterancePool {
public:
    explicit UtterancePool(const Dataset& ds);

    struct Draw {
        const Utterance* utterance;
        std::string conv_id;
        std::size_t turn_index; // response sits at index N within its conversation
    };

    // Uniform over all turns whose conversation id differs from `exclude`.
    // Deterministic given the rng state. Throws NoCandidateError when the
    // pool holds nothing outside the excluded conversation.
    Draw sample(Rng& rng, const std::string& exclude_conv_id) const;

    bool has_candidate_outside(const std::string& conv_id) const;
    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        const Utterance* utterance;
        const std::string* conv_id;
        std::size_t turn_index;
    };
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> turns_per_conv_;
};

Utterance sample_utterance(const UtterancePool& pool, Rng& rng, const std::string& exclude_conv_id);

std::string trim(const std::string& s);

} // namespace hardneg
