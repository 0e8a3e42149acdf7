#include "support/synthetic.hpp"

#include <random>

#include <unistd.h>

#include "hardneg/rng.hpp"

namespace hardneg::testing {

Dataset make_topical_corpus(const SyntheticSpec& spec) {
    Rng rng(spec.seed);

    auto topic_word = [&](std::size_t topic, std::size_t w) {
        return "t" + std::to_string(topic) + "w" + std::to_string(w);
    };
    auto function_word = [&](std::size_t i) { return "f" + std::to_string(i); };

    struct Dialogue {
        std::vector<std::string> turns;
        std::string golden;
    };
    std::vector<Dialogue> dialogues(spec.n_dialogues);

    for (std::size_t d = 0; d < spec.n_dialogues; ++d) {
        std::size_t topic = rng.uniform_index(spec.n_topics);
        std::size_t n_turns =
            spec.min_turns + rng.uniform_index(spec.max_turns - spec.min_turns + 1);
        auto pick_topic_word = [&] { return topic_word(topic, rng.uniform_index(spec.words_per_topic)); };

        Dialogue& dlg = dialogues[d];
        for (std::size_t t = 0; t < n_turns; ++t) {
            std::size_t len = 3 + rng.uniform_index(3);
            std::string turn;
            for (std::size_t i = 0; i < len; ++i) {
                if (!turn.empty()) turn += ' ';
                turn += rng.uniform() < 0.25 ? function_word(rng.uniform_index(10))
                                             : pick_topic_word();
            }
            dlg.turns.push_back(std::move(turn));
        }

        // golden response leans on the last turn: echo two of its tokens
        auto last_tokens = Tokenizer::split(TokenizerMode::whitespace, dlg.turns.back());
        std::string resp = last_tokens[rng.uniform_index(last_tokens.size())];
        resp += ' ';
        resp += last_tokens[rng.uniform_index(last_tokens.size())];
        resp += ' ';
        resp += pick_topic_word();
        resp += ' ';
        resp += function_word(rng.uniform_index(10));
        dlg.golden = std::move(resp);
    }

    Dataset ds;
    ds.split = Split::train;
    std::size_t line = 1;
    for (std::size_t d = 0; d < spec.n_dialogues; ++d) {
        const Dialogue& dlg = dialogues[d];
        Conversation ctx;
        ctx.id = "train:" + std::to_string(line);
        for (const auto& t : dlg.turns) ctx.turns.push_back({t, {}});

        Example pos;
        pos.context = ctx;
        pos.response = {dlg.golden, {}};
        pos.label = Label::positive;
        pos.origin = Origin::golden;
        ds.examples.push_back(std::move(pos));
        ++line;

        std::size_t other = rng.uniform_index(spec.n_dialogues - 1);
        if (other >= d) ++other;
        Example neg;
        neg.context = ctx;
        neg.context.id = "train:" + std::to_string(line);
        neg.response = {dialogues[other].golden, {}};
        neg.label = Label::negative;
        neg.origin = Origin::random;
        ds.examples.push_back(std::move(neg));
        ++line;
    }
    return ds;
}

std::shared_ptr<Vocab> make_vocab(std::size_t n_regular) {
    auto vocab = std::make_shared<Vocab>();
    for (std::size_t i = 0; i < n_regular; ++i) vocab->add("w" + std::to_string(i));
    return vocab;
}

ProbDist uniform_dist(std::size_t v) {
    return ProbDist(v, 1.0 / static_cast<double>(v));
}

TempDir::TempDir() {
    std::random_device rd;
    dir_ = std::filesystem::temp_directory_path() /
           ("hardneg-test-" + std::to_string(rd()) + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
}

} // namespace hardneg::testing
