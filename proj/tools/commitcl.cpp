#include "commitcl/benchmark.hpp"
#include "commitcl/corpus.hpp"
#include "commitcl/encoder.hpp"
#include "commitcl/error.hpp"
#include "commitcl/evaluate.hpp"
#include "commitcl/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;
namespace fs = std::filesystem;

namespace commitcl {
namespace {

constexpr const char* kVersion = "0.1.0";

enum class KeyType { Unsigned, Real, Boolean, Text };

struct KeySpec {
    const char* name;
    KeyType type;
    json fallback;
    const char* help;
};

// Every key may appear in a --config file and as a --<key> flag.
const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys = [] {
        const TrainConfig t;
        const AugmentConfig a;
        const HashingEncoderConfig h;
        const SplitFractions f;
        const NormConfig n;
        return std::vector<KeySpec>{
            {"seed", KeyType::Unsigned, 0, "seed for splitting, sampling, augmentation and initialization"},
            {"schema", KeyType::Text, "generic", "corpus schema: three_way, two_way or generic"},
            {"train_fraction", KeyType::Real, f.train, "training share of the corpus split"},
            {"val_fraction", KeyType::Real, f.validation, "validation share of the corpus split"},
            {"test_fraction", KeyType::Real, f.test, "test share of the corpus split"},
            {"shots", KeyType::Unsigned, 0, "train on a K-shot episode of the training split (0: whole split)"},
            {"way", KeyType::Unsigned, 0, "classes per episode (0: all)"},
            {"use_code_change", KeyType::Boolean, true, "append the code-change block when the corpus has one"},
            {"r_pairs", KeyType::Unsigned, a.r_pairs, "positive and negative pairs per class"},
            {"anchors_per_class", KeyType::Unsigned, a.anchors_per_class, "template anchors added per class"},
            {"template", KeyType::Text, a.template_text, "anchor template containing {label}"},
            {"tau", KeyType::Real, t.tau, "contrastive temperature"},
            {"learning_rate", KeyType::Real, t.learning_rate, "AdamW learning rate"},
            {"beta1", KeyType::Real, t.beta1, "AdamW first-moment decay"},
            {"beta2", KeyType::Real, t.beta2, "AdamW second-moment decay"},
            {"eps_opt", KeyType::Real, t.eps_opt, "AdamW denominator epsilon"},
            {"weight_decay", KeyType::Real, t.weight_decay, "decoupled weight decay"},
            {"max_epochs", KeyType::Unsigned, t.max_epochs, "epoch limit"},
            {"patience", KeyType::Unsigned, t.patience, "epochs without improvement before stopping"},
            {"batch_rows", KeyType::Unsigned, t.batch_rows, "rows per contrastive batch (even)"},
            {"n_regroups", KeyType::Unsigned, t.n_regroups, "shuffled batchings of the pairs per epoch"},
            {"inference_space", KeyType::Text, std::string(to_string(t.inference_space)),
             "prototype space: projection or encoder"},
            {"out_dim", KeyType::Unsigned, t.out_dim, "projection output dimension"},
            {"use_bias", KeyType::Boolean, t.use_bias, "projection bias term"},
            {"loss_mode", KeyType::Text, std::string(to_string(t.loss_mode)), "loss: nt_xent or pairwise"},
            {"averaging", KeyType::Text, "macro", "metric averaging: macro or weighted"},
            {"hash_dim", KeyType::Unsigned, h.dimension, "hashing encoder dimension"},
            {"ngram_min", KeyType::Unsigned, h.ngram_min, "shortest character n-gram"},
            {"ngram_max", KeyType::Unsigned, h.ngram_max, "longest character n-gram"},
            {"signed_hash", KeyType::Boolean, h.signed_hash, "signed feature hashing"},
            {"norm_p", KeyType::Real, n.p, "order of the embedding norm"},
            {"norm_eps", KeyType::Real, n.eps, "norm floor"},
            {"query", KeyType::Text, "rest", "few-shot query pool: rest or test"},
        };
    }();
    return keys;
}

const KeySpec* find_key(std::string_view name) {
    for (const auto& k : config_keys()) {
        if (name == k.name) {
            return &k;
        }
    }
    return nullptr;
}

json parse_flag_value(const KeySpec& key, const std::string& text) {
    const auto bad = [&] {
        return Error(ErrorKind::InvalidConfig, "invalid value '" + text + "' for " + key.name);
    };
    switch (key.type) {
    case KeyType::Unsigned: {
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
            throw bad();
        }
        return v;
    }
    case KeyType::Real: {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(text, &used);
        } catch (const std::exception&) {
            throw bad();
        }
        if (used != text.size()) {
            throw bad();
        }
        return v;
    }
    case KeyType::Boolean:
        if (text == "true" || text == "1") {
            return true;
        }
        if (text == "false" || text == "0") {
            return false;
        }
        throw bad();
    case KeyType::Text:
        return text;
    }
    throw bad();
}

void check_json_type(const KeySpec& key, const json& value) {
    bool ok = false;
    switch (key.type) {
    case KeyType::Unsigned:
        ok = value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
        break;
    case KeyType::Real:
        ok = value.is_number();
        break;
    case KeyType::Boolean:
        ok = value.is_boolean();
        break;
    case KeyType::Text:
        ok = value.is_string();
        break;
    }
    if (!ok) {
        throw Error(ErrorKind::InvalidConfig, std::string("config key ") + key.name + " has the wrong type");
    }
}

/// Defaults, then the --config file, then flags.
class Settings {
public:
    Settings() {
        for (const auto& k : config_keys()) {
            m_values[k.name] = k.fallback;
        }
    }

    /// Registers --config plus one flag per key, except those in `skip`.
    void attach(CLI::App& app, std::initializer_list<std::string_view> skip = {}) {
        app.add_option("--config", m_config_path, "flat JSON file of config keys")->check(CLI::ExistingFile);
        for (const auto& k : config_keys()) {
            if (std::find(skip.begin(), skip.end(), k.name) != skip.end()) {
                continue;
            }
            app.add_option(std::string("--") + k.name, m_flags[k.name], k.help);
        }
    }

    void attach_keys(CLI::App& app, std::initializer_list<const char*> names) {
        for (const char* name : names) {
            app.add_option(std::string("--") + name, m_flags[name], find_key(name)->help);
        }
    }

    void resolve(const CLI::App& app) {
        if (!m_config_path.empty()) {
            std::ifstream in(m_config_path);
            json file;
            try {
                file = json::parse(in);
            } catch (const json::exception& ex) {
                throw Error(ErrorKind::InvalidConfig, m_config_path + ": " + ex.what());
            }
            if (!file.is_object()) {
                throw Error(ErrorKind::InvalidConfig, m_config_path + ": expected a flat object");
            }
            for (const auto& [name, value] : file.items()) {
                const KeySpec* key = find_key(name);
                if (key == nullptr) {
                    throw Error(ErrorKind::InvalidConfig, "unknown config key '" + name + "'");
                }
                check_json_type(*key, value);
                m_values[name] = value;
            }
        }
        for (const auto& [name, text] : m_flags) {
            if (app.count("--" + name) > 0) {
                m_values[name] = parse_flag_value(*find_key(name), text);
                m_explicit.insert(name);
            }
        }
    }

    bool given(const std::string& name) const { return m_explicit.count(name) > 0; }
    std::uint64_t u(const char* name) const { return m_values.at(name).get<std::uint64_t>(); }
    double d(const char* name) const { return m_values.at(name).get<double>(); }
    bool b(const char* name) const { return m_values.at(name).get<bool>(); }
    std::string s(const char* name) const { return m_values.at(name).get<std::string>(); }

    Schema schema() const {
        const auto v = parse_schema(s("schema"));
        if (!v) {
            throw Error(ErrorKind::InvalidConfig, "unknown schema '" + s("schema") + "'");
        }
        return *v;
    }

    SplitFractions fractions() const { return {d("train_fraction"), d("val_fraction"), d("test_fraction")}; }

    AugmentConfig augment() const {
        AugmentConfig a;
        a.r_pairs = u("r_pairs");
        a.anchors_per_class = u("anchors_per_class");
        a.template_text = s("template");
        a.seed = u("seed");
        a.validate();
        return a;
    }

    TrainConfig train() const {
        TrainConfig t;
        t.batch_rows = u("batch_rows");
        t.learning_rate = d("learning_rate");
        t.beta1 = d("beta1");
        t.beta2 = d("beta2");
        t.eps_opt = d("eps_opt");
        t.weight_decay = d("weight_decay");
        t.max_epochs = u("max_epochs");
        t.patience = u("patience");
        t.tau = d("tau");
        t.n_regroups = u("n_regroups");
        t.seed = u("seed");
        const auto space = parse_inference_space(s("inference_space"));
        if (!space) {
            throw Error(ErrorKind::InvalidConfig, "unknown inference space '" + s("inference_space") + "'");
        }
        t.inference_space = *space;
        t.out_dim = u("out_dim");
        t.use_bias = b("use_bias");
        const auto mode = parse_loss_mode(s("loss_mode"));
        if (!mode) {
            throw Error(ErrorKind::InvalidConfig, "unknown loss mode '" + s("loss_mode") + "'");
        }
        t.loss_mode = *mode;
        t.validate();
        return t;
    }

    Averaging averaging() const {
        const auto v = parse_averaging(s("averaging"));
        if (!v) {
            throw Error(ErrorKind::InvalidConfig, "unknown averaging '" + s("averaging") + "'");
        }
        return *v;
    }

    EncoderSpec encoder_spec() const {
        EncoderSpec spec;
        spec.hashing.dimension = u("hash_dim");
        spec.hashing.ngram_min = u("ngram_min");
        spec.hashing.ngram_max = u("ngram_max");
        spec.hashing.signed_hash = b("signed_hash");
        spec.hashing.validate();
        spec.norm = {d("norm_p"), d("norm_eps")};
        return spec;
    }

private:
    std::string m_config_path;
    std::map<std::string, std::string> m_flags;
    std::set<std::string> m_explicit;
    json m_values = json::object();
};

/// Parsed form of --encoder.
struct EncoderChoice {
    EncoderKind kind = EncoderKind::Hashing;
    std::shared_ptr<const EmbeddingStore> store;
};

EncoderChoice parse_encoder_choice(const std::string& text) {
    if (text.empty() || text == "hashing") {
        return {};
    }
    constexpr std::string_view prefix = "precomputed:";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
        const fs::path path = text.substr(prefix.size());
        return {EncoderKind::Precomputed, std::make_shared<EmbeddingStore>(load_precomputed(path))};
    }
    throw Error(ErrorKind::InvalidConfig, "--encoder must be 'hashing' or 'precomputed:PATH', got '" + text + "'");
}

/// Rebuilds the encoders a checkpoint was trained with.
EncoderSuite suite_for(const Checkpoint& cp, const std::string& encoder_flag) {
    const EncoderChoice choice = parse_encoder_choice(encoder_flag);
    if (cp.encoder.kind == EncoderKind::Precomputed && !choice.store) {
        throw Error(ErrorKind::InvalidConfig, "checkpoint uses precomputed embeddings; pass --encoder precomputed:PATH");
    }
    return build_encoder_suite(cp.encoder, choice.store);
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing " + path.string());
    }
}

void check_format(const std::string& format) {
    if (format != "json" && format != "table") {
        throw Error(ErrorKind::InvalidConfig, "--format must be json or table");
    }
}

/// Report payload to stdout, optionally mirrored as JSON to a file.
void emit(const json& payload, const std::string& table, const std::string& format, const std::string& out_path) {
    const std::string text = payload.dump(2) + "\n";
    if (!out_path.empty()) {
        write_file(out_path, text);
    }
    std::cout << (format == "table" ? table : text) << std::flush;
}

std::vector<CommitRecord> labeled_in(const std::vector<CommitRecord>& records, const LabelSet& labels) {
    std::vector<CommitRecord> out;
    for (const auto& r : records) {
        if (r.label && labels.contains(*r.label)) {
            out.push_back(r);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string input;
    std::string out;
};

int run_ingest(const IngestArgs& args, const Settings& settings) {
    const Corpus corpus = load_dataset(args.input, settings.schema());
    std::ostringstream normalized;
    write_generic(corpus, normalized);

    std::ostringstream summary;
    const auto counts = corpus.class_counts();
    std::size_t labeled = 0;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        summary << corpus.labels().at(c) << ' ' << counts[c] << '\n';
        labeled += counts[c];
    }
    if (labeled != corpus.size()) {
        summary << "(unlabeled) " << corpus.size() - labeled << '\n';
    }
    summary << "total " << corpus.size() << '\n';

    if (args.out.empty()) {
        std::cout << normalized.str() << std::flush;
        std::cerr << summary.str();
    } else {
        write_file(args.out, normalized.str());
        std::cout << summary.str() << std::flush;
    }
    return 0;
}

struct TrainArgs {
    std::string corpus;
    std::string encoder = "hashing";
    std::string out;
};

int run_train(const TrainArgs& args, const Settings& settings) {
    const Corpus corpus = load_dataset(args.corpus, settings.schema());
    const SplitFractions fractions = settings.fractions();
    const std::uint64_t seed = settings.u("seed");
    const AugmentConfig augment = settings.augment();
    const TrainConfig train_config = settings.train();

    EncoderSpec spec = settings.encoder_spec();
    const EncoderChoice choice = parse_encoder_choice(args.encoder);
    spec.kind = choice.kind;
    if (settings.b("use_code_change")) {
        infer_code_change(spec, corpus.records());
    }
    const EncoderSuite encoders = build_encoder_suite(spec, choice.store);

    const CorpusSplit split = split_corpus(corpus, fractions, seed);
    std::vector<std::string> train_ids = split.train;
    if (settings.u("shots") > 0) {
        const std::size_t way = settings.u("way") > 0 ? settings.u("way") : corpus.labels().size();
        train_ids = sample_episode(corpus, split.train, way, settings.u("shots"), std::nullopt, seed).support;
    }
    const auto train_records = labeled_in(corpus.select(train_ids), corpus.labels());
    const LabelSet train_labels = observed_labels(train_records);
    const auto val_records = labeled_in(corpus.select(split.validation), train_labels);

    TrainResult result = train(train_records, val_records, encoders, augment, train_config, [](const EpochLog& log) {
        char line[128];
        std::snprintf(line, sizeof(line), "epoch %zu loss %.6f val_accuracy %.4f\n", log.epoch, log.loss,
                      log.val_accuracy);
        std::cerr << line << std::flush;
    });
    result.checkpoint.split = {fractions, seed};
    save_checkpoint(result.checkpoint, args.out);

    json summary = {{"kind", "train_summary"},
                    {"checkpoint", args.out},
                    {"epochs", result.history.size()},
                    {"best_epoch", result.checkpoint.best_epoch},
                    {"best_val_accuracy", result.checkpoint.best_val_accuracy},
                    {"train_records", train_records.size()},
                    {"val_records", val_records.size()}};
    std::cout << summary.dump() << '\n' << std::flush;
    return 0;
}

struct EvalArgs {
    std::string checkpoint;
    std::string corpus;
    std::string split = "test";
    std::string encoder;
    std::string out;
    std::string format = "json";
    std::string confusion;
};

int run_eval(const EvalArgs& args, const Settings& settings) {
    check_format(args.format);
    const Checkpoint cp = load_checkpoint(args.checkpoint);
    const Classifier classifier(cp, suite_for(cp, args.encoder));
    const Corpus corpus = load_dataset(args.corpus, settings.schema());

    std::vector<std::string> ids;
    if (args.split == "all") {
        ids = corpus.ids();
    } else {
        const std::uint64_t seed = settings.given("seed") ? settings.u("seed") : cp.split.seed;
        const CorpusSplit split = split_corpus(corpus, cp.split.fractions, seed);
        if (args.split == "train") {
            ids = split.train;
        } else if (args.split == "validation") {
            ids = split.validation;
        } else if (args.split == "test") {
            ids = split.test;
        } else {
            throw Error(ErrorKind::InvalidConfig, "--split must be train, validation, test or all");
        }
    }
    std::vector<CommitRecord> records;
    for (auto& r : corpus.select(ids)) {
        if (r.label) {
            records.push_back(std::move(r));
        }
    }
    const EvalReport report = evaluate_records(classifier, records, settings.averaging());
    if (!args.confusion.empty()) {
        write_file(args.confusion, confusion_csv(report.confusion));
    }
    emit(to_json(report), format_table(report), args.format, args.out);
    return 0;
}

struct PredictArgs {
    std::string checkpoint;
    std::string message;
    std::optional<std::string> cc;
    std::string id = "cli:message";
    std::string encoder;
};

std::vector<double> parse_vector(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        try {
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw Error(ErrorKind::InvalidConfig, "--cc expects comma-separated numbers, got '" + item + "'");
        }
    }
    return out;
}

int run_predict(const PredictArgs& args) {
    const Checkpoint cp = load_checkpoint(args.checkpoint);
    const Classifier classifier(cp, suite_for(cp, args.encoder));

    CommitRecord record{args.id, args.message, {}, std::nullopt};
    if (args.cc) {
        switch (cp.encoder.cc_mode) {
        case CcMode::None:
            throw Error(ErrorKind::InvalidConfig, "this checkpoint was trained without a code-change block");
        case CcMode::Text:
            record.code_change = *args.cc;
            break;
        case CcMode::Vector:
            record.code_change = parse_vector(*args.cc);
            break;
        }
    }
    const Prediction p = classifier.predict(record);
    json scores = json::object();
    for (std::size_t c = 0; c < p.scores.size(); ++c) {
        scores[cp.labels.at(c)] = p.scores[c];
    }
    std::cout << json{{"label", p.label}, {"scores", scores}}.dump() << '\n' << std::flush;
    return 0;
}

struct FewshotArgs {
    std::string corpus;
    std::string encoder = "hashing";
    std::vector<std::size_t> shots{5, 10, 15, 20, 50};
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string format = "json";
};

int run_fewshot(const FewshotArgs& args, const Settings& settings) {
    check_format(args.format);
    const Corpus corpus = load_dataset(args.corpus, settings.schema());
    EncoderSpec spec = settings.encoder_spec();
    const EncoderChoice choice = parse_encoder_choice(args.encoder);
    spec.kind = choice.kind;
    if (settings.b("use_code_change")) {
        infer_code_change(spec, corpus.records());
    }
    const EncoderSuite encoders = build_encoder_suite(spec, choice.store);

    FewshotConfig cfg;
    cfg.way = settings.u("way");
    cfg.fractions = settings.fractions();
    cfg.augment = settings.augment();
    cfg.train = settings.train();
    cfg.averaging = settings.averaging();
    const std::string query = settings.s("query");
    if (query != "rest" && query != "test") {
        throw Error(ErrorKind::InvalidConfig, "query must be rest or test");
    }
    cfg.query_from_test_split = query == "test";

    std::vector<std::uint64_t> seeds = args.seeds;
    if (seeds.empty()) {
        const std::uint64_t base = settings.u("seed");
        seeds = {base, base + 1, base + 2};
    }
    const FewshotReport report = run_fewshot_benchmark(corpus, encoders, args.shots, seeds, cfg);
    emit(to_json(report), format_table(report), args.format, args.out);
    return 0;
}

struct BenchArgs {
    std::string checkpoint;
    std::string encoder;
    std::vector<std::size_t> lengths{8, 32, 128, 512};
    std::size_t reps = 100;
    std::string out;
    std::string format = "json";
};

int run_bench(const BenchArgs& args) {
    check_format(args.format);
    const Checkpoint cp = load_checkpoint(args.checkpoint);
    if (cp.encoder.kind != EncoderKind::Hashing) {
        throw Error(ErrorKind::InvalidConfig, "bench synthesizes messages and needs a hashing-encoder checkpoint");
    }
    const Classifier classifier(cp, suite_for(cp, args.encoder));
    const BenchReport report = bench_inference(classifier, args.lengths, args.reps);
    emit(to_json(report), format_table(report), args.format, args.out);
    return 0;
}

std::string version_text() {
    std::ostringstream os;
    os << "commitcl " << kVersion << "\n"
       << "checkpoint format " << kCheckpointFormatVersion << "\n"
       << "report format " << kReportFormatVersion << "\n"
       << "corpus schemas three_way two_way generic";
    return os.str();
}

} // namespace
} // namespace commitcl

int main(int argc, char** argv) {
    using namespace commitcl;

    CLI::App app{"Few-shot commit classification with contrastive learning"};
    app.set_version_flag("--version", version_text());
    app.require_subcommand(1);

    Settings ingest_settings, train_settings, eval_settings, predict_settings, fewshot_settings, bench_settings;

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Validate a labeled CSV and write the normalized corpus");
    ingest_cmd->add_option("--input", ingest.input, "dataset CSV")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--out", ingest.out, "normalized corpus path (default: stdout)");
    ingest_settings.attach_keys(*ingest_cmd, {"schema", "seed"});

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train a projection head and write a checkpoint");
    train_cmd->add_option("--corpus", train_args.corpus, "corpus CSV")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("--encoder", train_args.encoder, "hashing or precomputed:PATH");
    train_cmd->add_option("--out", train_args.out, "checkpoint path")->required();
    train_settings.attach(*train_cmd);

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a corpus split");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
    eval_cmd->add_option("--corpus", eval_args.corpus, "corpus CSV")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--split", eval_args.split, "train, validation, test or all");
    eval_cmd->add_option("--encoder", eval_args.encoder, "precomputed:PATH for precomputed checkpoints");
    eval_cmd->add_option("--out", eval_args.out, "also write the JSON report here");
    eval_cmd->add_option("--format", eval_args.format, "stdout format: json or table");
    eval_cmd->add_option("--confusion", eval_args.confusion, "write the confusion matrix as CSV");
    eval_settings.attach_keys(*eval_cmd, {"schema", "seed", "averaging"});

    PredictArgs predict_args;
    auto* predict_cmd = app.add_subcommand("predict", "Classify one commit");
    predict_cmd->add_option("--checkpoint", predict_args.checkpoint, "checkpoint file")->required();
    predict_cmd->add_option("--message", predict_args.message, "commit message")->required();
    predict_cmd->add_option("--cc", predict_args.cc, "code change: text, or comma-separated numbers");
    predict_cmd->add_option("--id", predict_args.id, "record id for precomputed lookups");
    predict_cmd->add_option("--encoder", predict_args.encoder, "precomputed:PATH for precomputed checkpoints");
    predict_settings.attach_keys(*predict_cmd, {"seed"});

    FewshotArgs fewshot_args;
    auto* fewshot_cmd = app.add_subcommand("fewshot", "Few-shot benchmark over shots and seeds");
    fewshot_cmd->add_option("--corpus", fewshot_args.corpus, "corpus CSV")->required()->check(CLI::ExistingFile);
    fewshot_cmd->add_option("--encoder", fewshot_args.encoder, "hashing or precomputed:PATH");
    fewshot_cmd->add_option("--shots", fewshot_args.shots, "comma-separated shot counts")->delimiter(',');
    fewshot_cmd->add_option("--seeds", fewshot_args.seeds, "comma-separated seeds (default: seed..seed+2)")
        ->delimiter(',');
    fewshot_cmd->add_option("--out", fewshot_args.out, "also write the JSON report here");
    fewshot_cmd->add_option("--format", fewshot_args.format, "stdout format: json or table");
    fewshot_settings.attach(*fewshot_cmd, {"shots"});

    BenchArgs bench_args;
    auto* bench_cmd = app.add_subcommand("bench", "Inference latency by message length");
    bench_cmd->add_option("--checkpoint", bench_args.checkpoint, "checkpoint file")->required();
    bench_cmd->add_option("--encoder", bench_args.encoder, "encoder override");
    bench_cmd->add_option("--lengths", bench_args.lengths, "comma-separated token counts")->delimiter(',');
    bench_cmd->add_option("--reps", bench_args.reps, "timed calls per length");
    bench_cmd->add_option("--out", bench_args.out, "also write the JSON report here");
    bench_cmd->add_option("--format", bench_args.format, "stdout format: json or table");
    bench_settings.attach_keys(*bench_cmd, {"seed"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*ingest_cmd) {
            ingest_settings.resolve(*ingest_cmd);
            return run_ingest(ingest, ingest_settings);
        }
        if (*train_cmd) {
            train_settings.resolve(*train_cmd);
            return run_train(train_args, train_settings);
        }
        if (*eval_cmd) {
            eval_settings.resolve(*eval_cmd);
            return run_eval(eval_args, eval_settings);
        }
        if (*predict_cmd) {
            predict_settings.resolve(*predict_cmd);
            return run_predict(predict_args);
        }
        if (*fewshot_cmd) {
            fewshot_settings.resolve(*fewshot_cmd);
            return run_fewshot(fewshot_args, fewshot_settings);
        }
        if (*bench_cmd) {
            bench_settings.resolve(*bench_cmd);
            return run_bench(bench_args);
        }
    } catch (const Error& e) {
        std::cerr << "commitcl: " << e.what() << '\n';
        return is_input_error(e.kind()) ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "commitcl: " << e.what() << '\n';
        return 3;
    }
    return 3;
}
