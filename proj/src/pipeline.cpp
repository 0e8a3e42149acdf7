#include "hardneg/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_set>

#include "json.hpp"

#include "hardneg/errors.hpp"
#include "hardneg/ngram_lm.hpp"

namespace hardneg {

using nlohmann::json;
namespace fs = std::filesystem;

DataFormat resolve_format(const std::string& format_flag, const std::string& path) {
    if (format_flag.empty()) return format_for_path(path);
    if (format_flag == "tsv") return DataFormat::tsv;
    if (format_flag == "jsonl") return DataFormat::jsonl;
    throw ConfigError("unknown format \"" + format_flag + "\" (want tsv or jsonl)");
}

Split resolve_split(const std::string& split_flag) {
    if (split_flag == "train") return Split::train;
    if (split_flag == "val") return Split::val;
    if (split_flag == "test") return Split::test;
    throw ConfigError("unknown split \"" + split_flag + "\" (want train, val or test)");
}

TokenizerMode resolve_tokenizer_mode(const std::string& flag) {
    auto mode = tokenizer_mode_from_name(flag);
    if (!mode) throw ConfigError("unknown tokenizer mode \"" + flag + "\"");
    return *mode;
}

std::vector<std::string> apply_config_file(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) throw ConfigError("--config needs a file path");
            config_path = args[i + 1];
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
            break;
        }
    }
    if (config_path.empty()) return args;
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file " + config_path);

    std::unordered_set<std::string> given;
    for (const auto& arg : args) {
        if (arg.rfind("--", 0) != 0) continue;
        auto eq = arg.find('=');
        given.insert(eq == std::string::npos ? arg : arg.substr(0, eq));
    }

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string entry = trim(line);
        if (entry.empty() || entry[0] == '#') continue;
        auto eq = entry.find('=');
        if (eq == std::string::npos)
            throw ConfigError(config_path + " line " + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = trim(entry.substr(0, eq));
        std::string value = trim(entry.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty() || key == "config")
            throw ConfigError(config_path + " line " + std::to_string(lineno) + ": bad key");
        if (given.count("--" + key)) continue; // command line wins
        args.push_back("--" + key + "=" + value);
    }
    return args;
}

Dataset load_dataset_checked(const std::string& path, const std::string& format_flag,
                             const std::string& split_flag) {
    if (path.empty()) throw ConfigError("no input path given");
    if (!fs::exists(path)) throw ConfigError("input file not found: " + path);
    return load_dataset(path, resolve_format(format_flag, path), resolve_split(split_flag));
}

StopwordSet load_stopwords_checked(const std::string& path) {
    if (path.empty()) return {};
    if (!fs::exists(path)) throw ConfigError("stopword file not found: " + path);
    return load_stopwords(path);
}

double response_perplexity(const LanguageModel& lm, const Dataset& ds) {
    double log_sum = 0.0;
    std::size_t token_count = 0;
    auto add = [&](const Example& ex) {
        auto tokens = lm.tokenizer().encode(ex.response.text);
        if (tokens.empty()) return;
        log_sum += score_sequence(lm, ex.context, tokens).log_prob;
        token_count += tokens.size();
    };
    for (const auto& ex : ds.examples)
        if (ex.label == Label::positive) add(ex);
    if (token_count == 0)
        for (const auto& ex : ds.examples) add(ex);
    if (token_count == 0) throw std::invalid_argument("no scorable responses in dataset");
    return std::exp(-log_sum / static_cast<double>(token_count));
}

namespace {

json garble_to_json(const GarbleProvenance& g) {
    json j = {{"strategy", garble_strategy_name(g.strategy)}};
    if (g.swap_index) {
        j["swap_index"] = *g.swap_index;
        j["swap_noop"] = g.swap_noop;
    }
    if (!g.replaced.empty()) {
        json reps = json::array();
        for (const auto& r : g.replaced)
            reps.push_back({{"turn_index", r.turn_index},
                            {"source_conv_id", r.source_conv_id},
                            {"source_turn_index", r.source_turn_index}});
        j["replaced"] = std::move(reps);
    }
    return j;
}

json candidate_to_json(const ScoredCandidate& sc, const LanguageModel& lm) {
    const CandidateResponse& c = sc.candidate;
    json j = {{"method", gen_method_name(c.method)},
              {"text", lm.tokenizer().decode(c.tokens)},
              {"ppl", sc.ppl},
              {"sub_seed", c.sub_seed},
              {"garble", garble_to_json(c.garble)}};
    if (c.keyword) {
        std::string phrase;
        for (std::size_t i = 0; i < c.keyword->tokens.size(); ++i) {
            if (i > 0) phrase += ' ';
            phrase += c.keyword->tokens[i];
        }
        j["keyword"] = phrase;
    }
    if (c.insert_step) j["insert_step"] = *c.insert_step;
    return j;
}

json meta_line(const FileMeta& meta) {
    return {{"_meta", {{"seed", meta.seed}, {"tool", meta.tool}, {"note", meta.note}}}};
}

} // namespace

void write_audit_jsonl(const std::vector<AuditRecord>& audit, const LanguageModel& lm,
                       const std::string& path, const FileMeta& meta) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << meta_line(meta).dump() << '\n';
    for (const auto& rec : audit) {
        json cands = json::array();
        for (const auto& sc : rec.batch) cands.push_back(candidate_to_json(sc, lm));
        json j = {{"id", rec.conv_id},
                  {"turns", rec.context_turns},
                  {"threshold", rec.threshold},
                  {"candidates", std::move(cands)},
                  {"origin", origin_name(rec.origin)},
                  {"response", rec.response_text}};
        if (rec.chosen_index) j["chosen_index"] = *rec.chosen_index;
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void cmd_train_lm(const TrainLmOptions& opts) {
    Dataset train = load_dataset_checked(opts.train, opts.format, opts.split);
    NGramLM lm =
        NGramLM::train(train, opts.order, resolve_tokenizer_mode(opts.tokenizer), opts.discount);
    if (opts.out.empty()) throw ConfigError("no output model path given");
    lm.save(opts.out);

    double ppl;
    std::string ppl_source;
    if (!opts.val.empty()) {
        Dataset val = load_dataset_checked(opts.val, opts.format, "val");
        ppl = response_perplexity(lm, val);
        ppl_source = "held-out";
    } else {
        ppl = response_perplexity(lm, train);
        ppl_source = "training";
    }
    std::cout << "model: " << opts.out << "\n"
              << "order: " << lm.order() << "\n"
              << "vocab: " << lm.vocab().size() << "\n"
              << ppl_source << " response ppl: " << ppl << " (uniform baseline "
              << lm.vocab().size() << ")\n";
}

void cmd_stats(const StatsOptions& opts) {
    Dataset ds = load_dataset_checked(opts.input, opts.format, opts.split);
    CorpusStats st = corpus_stats(ds);
    std::cout << "dialogues: " << st.dialog_count << "\n"
              << "avg turns: " << st.avg_turns << "\n"
              << "pos:neg: " << st.pos_neg_ratio.first << ":" << st.pos_neg_ratio.second << "\n";
}

void cmd_garble(const GarbleOptions& opts) {
    Dataset ds = load_dataset_checked(opts.input, opts.format, opts.split);
    Dataset pool_ds =
        opts.pool.empty() ? ds : load_dataset_checked(opts.pool, opts.format, opts.split);
    UtterancePool pool(opts.pool.empty() ? ds : pool_ds);

    bool do_flow = opts.strategy == "flow" || opts.strategy == "both";
    bool do_destroy = opts.strategy == "destroy" || opts.strategy == "both";
    if (!do_flow && !do_destroy)
        throw ConfigError("unknown strategy \"" + opts.strategy + "\" (want flow, destroy, both)");

    std::ofstream out(opts.out);
    if (!out) throw IoError("cannot write " + opts.out);
    out << meta_line({opts.seed, "garble", opts.strategy}).dump() << '\n';

    std::size_t emitted = 0, skipped = 0;
    for (const auto& ex : ds.examples) {
        auto emit = [&](const GarbledConversation& g) {
            json turns = json::array();
            for (const auto& t : g.conv.turns) turns.push_back(t.text);
            json j = {{"id", g.conv.id},
                      {"turns", std::move(turns)},
                      {"provenance", garble_to_json(g.provenance)}};
            out << j.dump() << '\n';
            ++emitted;
        };
        if (do_flow) {
            if (can_flow_distort(ex.context)) {
                Rng rng(derive_seed(opts.seed, ex.context.id, 1));
                emit(flow_distortion(ex.context, rng));
            } else {
                ++skipped;
            }
        }
        if (do_destroy) {
            if (can_context_destroy(ex.context, pool)) {
                Rng rng(derive_seed(opts.seed, ex.context.id, 2));
                emit(context_destruction(ex.context, pool, rng));
            } else {
                ++skipped;
            }
        }
    }
    if (!out) throw IoError("write failed: " + opts.out);
    std::cout << "garbled " << emitted << " histories to " << opts.out << " (" << skipped
              << " ineligible)\n";
}

void cmd_keywords(const KeywordsOptions& opts) {
    Dataset ds = load_dataset_checked(opts.input, opts.format, opts.split);
    Dataset idf_ds = opts.idf_corpus.empty()
                         ? ds
                         : load_dataset_checked(opts.idf_corpus, opts.format, opts.split);
    TokenizerMode mode = resolve_tokenizer_mode(opts.tokenizer);
    IdfTable idf = build_idf(opts.idf_corpus.empty() ? ds : idf_ds, mode);
    StopwordSet stop = load_stopwords_checked(opts.stopwords);

    std::cout.precision(6);
    for (const auto& ex : ds.examples) {
        if (ex.label != Label::positive) continue;
        auto kws = extract_keywords(ex.context, idf, opts.top_k, stop, mode);
        for (std::size_t i = 0; i < kws.size(); ++i) {
            std::cout << ex.context.id << '\t' << i + 1 << '\t' << kws[i].score << '\t';
            for (std::size_t j = 0; j < kws[i].tokens.size(); ++j) {
                if (j > 0) std::cout << ' ';
                std::cout << kws[i].tokens[j];
            }
            std::cout << '\n';
        }
    }
}

namespace {

NGramLM load_model_checked(const std::string& path) {
    if (path.empty()) throw ConfigError("no model path given");
    if (!fs::exists(path)) throw ConfigError("model file not found: " + path);
    return NGramLM::load(path);
}

} // namespace

void cmd_generate(const GenerateOptions& opts) {
    Dataset ds = load_dataset_checked(opts.input, opts.format, opts.split);
    NGramLM lm = load_model_checked(opts.model);
    Dataset pool_ds =
        opts.pool.empty() ? ds : load_dataset_checked(opts.pool, opts.format, opts.split);
    const Dataset& pool_ref = opts.pool.empty() ? ds : pool_ds;
    UtterancePool pool(pool_ref);
    IdfTable idf = build_idf(ds, lm.tokenizer().mode());
    StopwordSet stop = load_stopwords_checked(opts.stopwords);

    GenConfig cfg;
    cfg.n_gen1 = opts.n_gen1;
    cfg.n_gen2 = opts.n_gen2;
    cfg.keyword_top_k = opts.keyword_top_k;
    cfg.decode = {opts.top_p, opts.max_length, opts.min_length, 0};
    cfg.master_seed = opts.seed;
    validate(cfg.decode);

    std::ofstream out(opts.out);
    if (!out) throw IoError("cannot write " + opts.out);
    out << meta_line({opts.seed, "generate", ""}).dump() << '\n';

    std::size_t contexts = 0;
    for (const auto& ex : ds.examples) {
        if (ex.label != Label::positive) continue;
        auto batch = generate_batch(lm, ex.context, pool, idf, stop, cfg);
        json cands = json::array();
        for (auto& c : batch) {
            // ppl field omitted here; scoring belongs to augment
            ScoredCandidate sc{std::move(c), 0.0};
            json cj = candidate_to_json(sc, lm);
            cj.erase("ppl");
            cands.push_back(std::move(cj));
        }
        json turns = json::array();
        for (const auto& t : ex.context.turns) turns.push_back(t.text);
        json j = {{"id", ex.context.id}, {"turns", std::move(turns)}, {"candidates", cands}};
        out << j.dump() << '\n';
        ++contexts;
    }
    if (!out) throw IoError("write failed: " + opts.out);
    std::cout << "generated candidates for " << contexts << " contexts to " << opts.out << "\n";
}

void cmd_augment(const AugmentOptions& opts) {
    if (opts.no_gen1 && opts.no_gen2)
        throw ConfigError("--no-gen1 and --no-gen2 cannot be combined: nothing would generate");
    if (opts.random_da && (opts.no_garble || opts.no_filter || opts.no_gen1 || opts.no_gen2))
        throw ConfigError("--random-da replaces generation entirely and cannot be combined "
                          "with other ablation switches");

    Dataset train = load_dataset_checked(opts.train, opts.format, opts.split);
    NGramLM lm = load_model_checked(opts.model);
    Dataset pool_ds =
        opts.pool.empty() ? train : load_dataset_checked(opts.pool, opts.format, opts.split);
    const Dataset& pool_ref = opts.pool.empty() ? train : pool_ds;
    IdfTable idf = build_idf(train, lm.tokenizer().mode());
    StopwordSet stop = load_stopwords_checked(opts.stopwords);

    std::optional<Dataset> threshold_sample;
    if (!opts.threshold_sample.empty())
        threshold_sample = load_dataset_checked(opts.threshold_sample, opts.format, "val");

    AugmentConfig cfg;
    cfg.gen.n_gen1 = opts.no_gen1 ? 0 : opts.n_gen1;
    cfg.gen.n_gen2 = opts.no_gen2 ? 0 : opts.n_gen2;
    cfg.gen.allow_gen1_fallback = !opts.no_gen1;
    cfg.gen.keyword_top_k = opts.keyword_top_k;
    cfg.gen.decode = {opts.top_p, opts.max_length, opts.min_length, 0};
    cfg.gen.garble_histories = !opts.no_garble;
    cfg.threshold = ThresholdSpec::parse(opts.threshold);
    cfg.master_seed = opts.seed;
    cfg.workers = opts.workers;
    cfg.no_filter = opts.no_filter;
    cfg.random_da = opts.random_da;
    validate(cfg.gen.decode);

    AugmentResult result = augment_dataset(train, lm, pool_ref, idf, stop, cfg,
                                           threshold_sample ? &*threshold_sample : nullptr);

    if (opts.out.empty()) throw ConfigError("no output path given");
    std::string note = "threshold=" + std::to_string(result.resolved_threshold);
    if (opts.no_garble) note += " no-garble";
    if (opts.no_filter) note += " no-filter";
    if (opts.no_gen1) note += " no-gen1";
    if (opts.no_gen2) note += " no-gen2";
    if (opts.random_da) note += " random-da";
    write_dataset(result.dataset, opts.out, resolve_format(opts.format, opts.out),
                  FileMeta{opts.seed, "augment", note});

    if (!opts.audit.empty())
        write_audit_jsonl(result.audit, lm, opts.audit, FileMeta{opts.seed, "augment", note});

    std::size_t fallbacks = 0, generated = 0, randoms = 0;
    for (const auto& rec : result.audit) {
        if (rec.origin == Origin::fallback_random) ++fallbacks;
        else if (rec.origin == Origin::random) ++randoms;
        else ++generated;
    }
    std::cout << "contexts: " << result.audit.size() << "\n"
              << "examples out: " << result.dataset.examples.size() << "\n"
              << "origins: generated " << generated << ", fallback-random " << fallbacks
              << ", random " << randoms << "\n";
    if (!cfg.no_filter && !cfg.random_da)
        std::cout << "threshold: " << result.resolved_threshold << "\n";
}

void cmd_train_matcher(const TrainMatcherOptions& opts) {
    Dataset train = load_dataset_checked(opts.train, opts.format, opts.split);
    TokenizerMode mode = resolve_tokenizer_mode(opts.tokenizer);
    Dataset idf_ds = opts.idf_corpus.empty()
                         ? train
                         : load_dataset_checked(opts.idf_corpus, opts.format, opts.split);
    IdfTable idf = build_idf(opts.idf_corpus.empty() ? train : idf_ds, mode);
    Featurizer featurizer(std::move(idf), mode, load_stopwords_checked(opts.stopwords));

    TrainConfig cfg{opts.learning_rate, opts.epochs, opts.l2, opts.seed};
    MatcherModel model = train_matcher(train, featurizer, cfg);
    if (opts.out.empty()) throw ConfigError("no output model path given");
    model.save(opts.out);

    std::size_t correct = 0;
    for (const auto& ex : train.examples) {
        double s = score(model, ex.context, ex.response, featurizer);
        bool predicted_pos = s >= 0.5;
        if (predicted_pos == (ex.label == Label::positive)) ++correct;
    }
    std::cout << "matcher: " << opts.out << "\n"
              << "examples: " << train.examples.size() << "\n"
              << "train accuracy: "
              << static_cast<double>(correct) / static_cast<double>(train.examples.size())
              << "\n";
}

void cmd_eval(const EvalOptions& opts) {
    Dataset test = load_dataset_checked(opts.test, opts.format, opts.split);
    if (opts.matcher.empty()) throw ConfigError("no matcher model path given");
    if (!fs::exists(opts.matcher)) throw ConfigError("matcher file not found: " + opts.matcher);
    MatcherModel model = MatcherModel::load(opts.matcher);

    TokenizerMode mode = resolve_tokenizer_mode(opts.tokenizer);
    Dataset idf_ds = opts.idf_corpus.empty()
                         ? test
                         : load_dataset_checked(opts.idf_corpus, opts.format, "train");
    IdfTable idf = build_idf(opts.idf_corpus.empty() ? test : idf_ds, mode);
    Featurizer featurizer(std::move(idf), mode, load_stopwords_checked(opts.stopwords));

    auto contexts = group_eval_contexts(test);
    MetricReport report = evaluate(model, featurizer, contexts, opts.candidates_per_context);

    std::string table = format_report_table(report);
    std::cout << table;
    if (!opts.report.empty()) {
        std::ofstream t(opts.report + ".txt");
        std::ofstream kv(opts.report + ".kv");
        if (!t || !kv) throw IoError("cannot write report files at " + opts.report);
        t << table;
        kv << format_report_kv(report);
        if (!t || !kv) throw IoError("report write failed at " + opts.report);
    }
}

void cmd_inspect(const InspectOptions& opts) {
    if (opts.audit.empty()) throw ConfigError("no audit path given");
    if (!fs::exists(opts.audit)) throw ConfigError("audit file not found: " + opts.audit);
    std::ifstream in(opts.audit);
    if (!in) throw IoError("cannot open " + opts.audit);

    std::vector<json> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("invalid JSON in audit file", lineno);
        if (j.contains("_meta")) {
            std::cout << "audit meta: " << j["_meta"].dump() << "\n\n";
            continue;
        }
        records.push_back(std::move(j));
    }
    if (records.empty()) throw ParseError("audit file has no records");

    std::vector<std::size_t> picks;
    if (!opts.id.empty()) {
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].value("id", "") == opts.id) picks.push_back(i);
        if (picks.empty()) throw ConfigError("no audit record with id " + opts.id);
    } else if (opts.seed != 0) {
        Rng rng(opts.seed);
        for (std::size_t i = 0; i < std::min(opts.limit, records.size()); ++i)
            picks.push_back(rng.uniform_index(records.size()));
    } else {
        for (std::size_t i = 0; i < std::min(opts.limit, records.size()); ++i) picks.push_back(i);
    }

    std::cout.precision(6);
    for (std::size_t idx : picks) {
        const json& r = records[idx];
        std::cout << "conversation " << r.value("id", "?") << "\n";
        if (r.contains("turns"))
            for (const auto& t : r["turns"]) std::cout << "  | " << t.get<std::string>() << "\n";
        std::cout << "  threshold: " << r.value("threshold", 0.0) << "\n";
        std::size_t chosen = r.contains("chosen_index")
                                 ? r["chosen_index"].get<std::size_t>()
                                 : static_cast<std::size_t>(-1);
        if (r.contains("candidates")) {
            std::size_t ci = 0;
            for (const auto& c : r["candidates"]) {
                std::cout << "  " << (ci == chosen ? "*" : " ") << " [" << c.value("method", "?")
                          << "] ppl=" << c.value("ppl", 0.0);
                if (c.contains("keyword")) std::cout << " keyword=\"" << c.value("keyword", "") << "\"";
                if (c.contains("insert_step")) std::cout << " step=" << c["insert_step"].get<std::size_t>();
                std::cout << " :: " << c.value("text", "") << "\n";
                ++ci;
            }
        }
        std::cout << "  -> [" << r.value("origin", "?") << "] " << r.value("response", "")
                  << "\n\n";
    }
}

} // namespace hardneg
