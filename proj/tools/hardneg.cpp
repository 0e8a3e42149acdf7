#include <algorithm>
#include <functional>
#include <iostream>
#include <vector>

#include "CLI11.hpp"

#include "hardneg/errors.hpp"
#include "hardneg/pipeline.hpp"

namespace {

void add_io(CLI::App* cmd, std::string& format, std::string& split) {
    cmd->add_option("--data-format", format, "input format: tsv or jsonl (default: by extension)");
    cmd->add_option("--split", split, "split tag for generated ids: train, val, test");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"challenging negative response generation for multi-turn response selection"};
    app.require_subcommand(1);

    std::function<void()> run;
    std::string config_file;

    hardneg::TrainLmOptions lm_opts;
    auto* train_lm = app.add_subcommand("train-lm", "train and persist the n-gram language model");
    train_lm->add_option("--config", config_file, "key=value config file; explicit flags win");
    train_lm->add_option("--train", lm_opts.train, "training dataset")->required();
    train_lm->add_option("--val", lm_opts.val, "held-out dataset for the perplexity summary");
    train_lm->add_option("--out", lm_opts.out, "model output path")->required();
    train_lm->add_option("--order", lm_opts.order, "n-gram order");
    train_lm->add_option("--discount", lm_opts.discount, "Kneser-Ney discount");
    train_lm->add_option("--tokenizer", lm_opts.tokenizer, "whitespace or character");
    add_io(train_lm, lm_opts.format, lm_opts.split);
    train_lm->callback([&] { run = [&] { hardneg::cmd_train_lm(lm_opts); }; });

    hardneg::StatsOptions stats_opts;
    auto* stats = app.add_subcommand("stats", "corpus statistics");
    stats->add_option("--config", config_file, "key=value config file; explicit flags win");
    stats->add_option("--input", stats_opts.input, "dataset")->required();
    add_io(stats, stats_opts.format, stats_opts.split);
    stats->callback([&] { run = [&] { hardneg::cmd_stats(stats_opts); }; });

    hardneg::GarbleOptions garble_opts;
    auto* garble = app.add_subcommand("garble", "dump garbled histories with provenance");
    garble->add_option("--config", config_file, "key=value config file; explicit flags win");
    garble->add_option("--input", garble_opts.input, "dataset")->required();
    garble->add_option("--pool", garble_opts.pool, "utterance pool (default: input)");
    garble->add_option("--out", garble_opts.out, "output jsonl")->required();
    garble->add_option("--strategy", garble_opts.strategy, "flow, destroy or both");
    garble->add_option("--seed", garble_opts.seed, "master seed")->required();
    add_io(garble, garble_opts.format, garble_opts.split);
    garble->callback([&] { run = [&] { hardneg::cmd_garble(garble_opts); }; });

    hardneg::KeywordsOptions kw_opts;
    auto* keywords = app.add_subcommand("keywords", "print ranked keywords per conversation");
    keywords->add_option("--config", config_file, "key=value config file; explicit flags win");
    keywords->add_option("--input", kw_opts.input, "dataset")->required();
    keywords->add_option("--idf-corpus", kw_opts.idf_corpus, "idf corpus (default: input)");
    keywords->add_option("--stopwords", kw_opts.stopwords, "stopword file");
    keywords->add_option("--top-k", kw_opts.top_k, "keywords per conversation");
    keywords->add_option("--tokenizer", kw_opts.tokenizer, "whitespace or character");
    add_io(keywords, kw_opts.format, kw_opts.split);
    keywords->callback([&] { run = [&] { hardneg::cmd_keywords(kw_opts); }; });

    hardneg::GenerateOptions gen_opts;
    auto* generate = app.add_subcommand("generate", "dump candidate responses with provenance");
    generate->add_option("--config", config_file, "key=value config file; explicit flags win");
    generate->add_option("--input", gen_opts.input, "dataset")->required();
    generate->add_option("--model", gen_opts.model, "language model file")->required();
    generate->add_option("--pool", gen_opts.pool, "utterance pool (default: input)");
    generate->add_option("--stopwords", gen_opts.stopwords, "stopword file");
    generate->add_option("--out", gen_opts.out, "output jsonl")->required();
    generate->add_option("--seed", gen_opts.seed, "master seed")->required();
    generate->add_option("--n-gen1", gen_opts.n_gen1, "gen1 candidates per context");
    generate->add_option("--n-gen2", gen_opts.n_gen2, "gen2 candidates per context");
    generate->add_option("--keyword-top-k", gen_opts.keyword_top_k, "keyword pool size");
    generate->add_option("--top-p", gen_opts.top_p, "nucleus mass");
    generate->add_option("--max-length", gen_opts.max_length, "response token cap");
    generate->add_option("--min-length", gen_opts.min_length, "EOS masked below this");
    add_io(generate, gen_opts.format, gen_opts.split);
    generate->callback([&] { run = [&] { hardneg::cmd_generate(gen_opts); }; });

    hardneg::AugmentOptions aug_opts;
    auto* augment = app.add_subcommand("augment", "add one selected negative per context (1:2)");
    augment->add_option("--config", config_file, "key=value config file; explicit flags win");
    augment->add_option("--train", aug_opts.train, "1:1 training dataset")->required();
    augment->add_option("--model", aug_opts.model, "language model file")->required();
    augment->add_option("--pool", aug_opts.pool, "utterance pool (default: train)");
    augment->add_option("--stopwords", aug_opts.stopwords, "stopword file");
    augment->add_option("--out", aug_opts.out, "augmented dataset output")->required();
    augment->add_option("--audit", aug_opts.audit, "write per-context audit jsonl here");
    augment->add_option("--seed", aug_opts.seed, "master seed")->required();
    augment->add_option("--workers", aug_opts.workers, "worker threads");
    augment->add_option("--threshold", aug_opts.threshold,
                        "ppl threshold: absolute (\"7.5\") or golden-ppl quantile (\"q0.5\")");
    augment->add_option("--threshold-sample", aug_opts.threshold_sample,
                        "dataset for quantile resolution (default: train)");
    augment->add_option("--n-gen1", aug_opts.n_gen1, "gen1 candidates per context");
    augment->add_option("--n-gen2", aug_opts.n_gen2, "gen2 candidates per context");
    augment->add_option("--keyword-top-k", aug_opts.keyword_top_k, "keyword pool size");
    augment->add_option("--top-p", aug_opts.top_p, "nucleus mass");
    augment->add_option("--max-length", aug_opts.max_length, "response token cap");
    augment->add_option("--min-length", aug_opts.min_length, "EOS masked below this");
    augment->add_flag("--no-garble", aug_opts.no_garble, "generate from the original history");
    augment->add_flag("--no-filter", aug_opts.no_filter, "random choice among candidates");
    augment->add_flag("--no-gen1", aug_opts.no_gen1, "disable gen1 candidates");
    augment->add_flag("--no-gen2", aug_opts.no_gen2, "disable gen2 candidates");
    augment->add_flag("--random-da", aug_opts.random_da,
                      "replace generated negatives with random samples");
    add_io(augment, aug_opts.format, aug_opts.split);
    augment->callback([&] { run = [&] { hardneg::cmd_augment(aug_opts); }; });

    hardneg::TrainMatcherOptions tm_opts;
    auto* train_matcher = app.add_subcommand("train-matcher", "train the response selection model");
    train_matcher->add_option("--config", config_file, "key=value config file; explicit flags win");
    train_matcher->add_option("--train", tm_opts.train, "training dataset")->required();
    train_matcher->add_option("--idf-corpus", tm_opts.idf_corpus, "idf corpus (default: train)");
    train_matcher->add_option("--stopwords", tm_opts.stopwords, "stopword file");
    train_matcher->add_option("--out", tm_opts.out, "matcher output path")->required();
    train_matcher->add_option("--lr", tm_opts.learning_rate, "learning rate");
    train_matcher->add_option("--epochs", tm_opts.epochs, "full-batch epochs");
    train_matcher->add_option("--l2", tm_opts.l2, "l2 penalty");
    train_matcher->add_option("--seed", tm_opts.seed, "init seed");
    train_matcher->add_option("--tokenizer", tm_opts.tokenizer, "whitespace or character");
    add_io(train_matcher, tm_opts.format, tm_opts.split);
    train_matcher->callback([&] { run = [&] { hardneg::cmd_train_matcher(tm_opts); }; });

    hardneg::EvalOptions eval_opts;
    auto* eval = app.add_subcommand("eval", "retrieval metrics over ranked candidate sets");
    eval->add_option("--config", config_file, "key=value config file; explicit flags win");
    eval->add_option("--test", eval_opts.test, "test dataset (n candidates per context)")
        ->required();
    eval->add_option("--matcher", eval_opts.matcher, "matcher model file")->required();
    eval->add_option("--idf-corpus", eval_opts.idf_corpus,
                     "idf corpus; use the matcher's training corpus");
    eval->add_option("--stopwords", eval_opts.stopwords, "stopword file");
    eval->add_option("--report", eval_opts.report, "write <report>.txt and <report>.kv");
    eval->add_option("--n", eval_opts.candidates_per_context,
                     "candidates per context (0 = variable)");
    eval->add_option("--tokenizer", eval_opts.tokenizer, "whitespace or character");
    add_io(eval, eval_opts.format, eval_opts.split);
    eval->callback([&] { run = [&] { hardneg::cmd_eval(eval_opts); }; });

    hardneg::InspectOptions ins_opts;
    auto* inspect = app.add_subcommand("inspect", "pretty-print audit records");
    inspect->add_option("--config", config_file, "key=value config file; explicit flags win");
    inspect->add_option("--audit", ins_opts.audit, "audit jsonl from augment")->required();
    inspect->add_option("--id", ins_opts.id, "conversation id to show");
    inspect->add_option("--limit", ins_opts.limit, "how many records to show");
    inspect->add_option("--seed", ins_opts.seed, "sample records instead of taking the first");
    inspect->callback([&] { run = [&] { hardneg::cmd_inspect(ins_opts); }; });

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = hardneg::apply_config_file(std::move(args));
    } catch (const hardneg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    std::reverse(args.begin(), args.end());

    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        run();
    } catch (const hardneg::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
