#include "commitcl/benchmark.hpp"

#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>

namespace commitcl {

Classifier::Classifier(Checkpoint checkpoint, EncoderSuite encoders)
    : m_checkpoint(std::move(checkpoint)), m_encoders(std::move(encoders)) {
    const std::string digest = m_encoders.digest();
    if (digest != m_checkpoint.encoder_digest) {
        throw Error(ErrorKind::DigestMismatch, "checkpoint was trained with encoder digest " +
                                                   m_checkpoint.encoder_digest + ", got " + digest);
    }
    if (m_encoders.embedding_dim() != m_checkpoint.model.in_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "encoder output does not match the projection input");
    }
}

std::vector<double> Classifier::representation(const CommitRecord& record) const {
    const auto h = encode_commit(record, m_encoders);
    return represent(m_checkpoint.model, h.vector, m_checkpoint.prototypes.space);
}

Prediction Classifier::predict(const CommitRecord& record) const {
    return predict_representation(representation(record), m_checkpoint.prototypes);
}

EvalReport evaluate_records(const Classifier& classifier, const std::vector<CommitRecord>& records,
                            Averaging averaging) {
    const LabelSet& labels = classifier.checkpoint().prototypes.labels;
    ConfusionMatrix cm(labels);
    for (const auto& r : records) {
        if (!r.label) {
            continue;
        }
        const auto truth = labels.index_of(*r.label);
        if (!truth) {
            throw Error(ErrorKind::UnknownLabel, "label '" + *r.label + "' of '" + r.id + "' is not in the checkpoint");
        }
        cm.add(*truth, classifier.predict(r).class_index);
    }
    return metrics(cm, averaging);
}

EvalReport run_fewshot_cell(const Corpus& corpus,
                            const EncoderSuite& encoders,
                            std::size_t shots,
                            std::uint64_t seed,
                            const FewshotConfig& config) {
    const CorpusSplit split = split_corpus(corpus, config.fractions, seed);
    const std::size_t way = config.way == 0 ? observed_labels(corpus.select(split.train)).size() : config.way;
    std::optional<std::vector<std::string>> pool;
    if (config.query_from_test_split) {
        pool = split.test;
    }
    const Episode episode = sample_episode(corpus, split.train, way, shots, pool, seed);

    std::vector<CommitRecord> val;
    for (const auto& r : corpus.select(split.validation)) {
        if (r.label && std::find(episode.classes.begin(), episode.classes.end(), *r.label) != episode.classes.end()) {
            val.push_back(r);
        }
    }
    TrainConfig train_config = config.train;
    train_config.seed = mix_seed(config.train.seed, seed);
    AugmentConfig augment = config.augment;
    augment.seed = mix_seed(config.augment.seed, seed);

    const auto trained = train(corpus.select(episode.support), val, encoders, augment, train_config);
    const Classifier classifier(trained.checkpoint, encoders);
    return evaluate_records(classifier, corpus.select(episode.query), config.averaging);
}

namespace {

std::string fewshot_digest(const FewshotConfig& c, const EncoderSuite& encoders) {
    std::ostringstream os;
    os.precision(17);
    os << encoders.digest() << '|' << c.way << '|' << c.fractions.train << ',' << c.fractions.validation << ','
       << c.fractions.test << '|' << c.augment.r_pairs << ',' << c.augment.anchors_per_class << ','
       << c.augment.template_text << ',' << c.augment.seed << '|' << c.train.batch_rows << ','
       << c.train.learning_rate << ',' << c.train.beta1 << ',' << c.train.beta2 << ',' << c.train.eps_opt << ','
       << c.train.weight_decay << ',' << c.train.max_epochs << ',' << c.train.patience << ',' << c.train.tau << ','
       << c.train.n_regroups << ',' << c.train.seed << ',' << to_string(c.train.inference_space) << ','
       << c.train.out_dim << ',' << c.train.use_bias << ',' << to_string(c.train.loss_mode) << '|'
       << to_string(c.averaging) << '|' << c.query_from_test_split;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(os.str())));
    return buf;
}

} // namespace

FewshotReport run_fewshot_benchmark(const Corpus& corpus,
                                    const EncoderSuite& encoders,
                                    const std::vector<std::size_t>& shots,
                                    const std::vector<std::uint64_t>& seeds,
                                    const FewshotConfig& config) {
    if (shots.empty() || seeds.empty()) {
        throw Error(ErrorKind::InvalidConfig, "few-shot benchmark needs at least one shot count and one seed");
    }
    FewshotReport report;
    report.seeds = seeds;
    report.config_digest = fewshot_digest(config, encoders);
    for (auto k : shots) {
        FewshotCell cell;
        cell.shots = k;
        cell.seeds = seeds;
        for (auto seed : seeds) {
            cell.reports.push_back(run_fewshot_cell(corpus, encoders, k, seed, config));
            cell.mean_accuracy += cell.reports.back().accuracy;
            cell.mean_f1 += cell.reports.back().f1;
        }
        cell.mean_accuracy /= static_cast<double>(seeds.size());
        cell.mean_f1 /= static_cast<double>(seeds.size());
        report.cells.push_back(std::move(cell));
    }
    return report;
}

std::string synthetic_message(std::size_t tokens) {
    static constexpr const char* kWords[] = {"fix",    "null",   "pointer", "update", "refactor", "parser",
                                             "add",    "option", "remove",  "legacy", "handle",   "timeout",
                                             "module", "cache",  "bump",    "deps"};
    std::string out;
    for (std::size_t i = 0; i < tokens; ++i) {
        if (i > 0) {
            out.push_back(' ');
        }
        out += kWords[i % std::size(kWords)];
        out += std::to_string(i % 97);
    }
    return out;
}

BenchReport bench_inference(const Classifier& classifier, const std::vector<std::size_t>& lengths, std::size_t reps) {
    if (reps < 10) {
        throw Error(ErrorKind::InvalidConfig, "bench needs at least 10 repetitions");
    }
    BenchReport report;
    report.reps = reps;
    using clock = std::chrono::steady_clock;
    for (auto length : lengths) {
        CommitRecord record;
        record.id = "bench:" + std::to_string(length);
        record.message = synthetic_message(length);
        std::size_t sink = 0;
        for (int w = 0; w < 3; ++w) {
            sink += classifier.predict(record).class_index;
        }
        const auto start = clock::now();
        for (std::size_t r = 0; r < reps; ++r) {
            sink += classifier.predict(record).class_index;
        }
        const std::chrono::duration<double> elapsed = clock::now() - start;
        // keeps the calls observable
        if (sink == static_cast<std::size_t>(-1)) {
            std::fputs("", stderr);
        }
        report.mean_latency_seconds[length] = elapsed.count() / static_cast<double>(reps);
    }
    return report;
}

nlohmann::json to_json(const FewshotReport& report) {
    nlohmann::json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "fewshot_report";
    j["seeds"] = report.seeds;
    j["config_digest"] = report.config_digest;
    auto& cells = j["cells"] = nlohmann::json::array();
    for (const auto& c : report.cells) {
        nlohmann::json cell;
        cell["shots"] = c.shots;
        cell["mean_accuracy"] = c.mean_accuracy;
        cell["mean_f1"] = c.mean_f1;
        auto& runs = cell["runs"] = nlohmann::json::array();
        for (std::size_t i = 0; i < c.reports.size(); ++i) {
            runs.push_back({{"seed", c.seeds[i]}, {"report", to_json(c.reports[i])}});
        }
        cells.push_back(std::move(cell));
    }
    return j;
}

nlohmann::json to_json(const BenchReport& report) {
    nlohmann::json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "bench_report";
    j["reps"] = report.reps;
    auto& rows = j["latency"] = nlohmann::json::array();
    for (const auto& [length, seconds] : report.mean_latency_seconds) {
        rows.push_back({{"length", length}, {"mean_seconds", seconds}});
    }
    return j;
}

std::string format_table(const FewshotReport& report) {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%6s %10s %10s %6s\n", "shots", "accuracy", "f1", "runs");
    os << buf;
    for (const auto& c : report.cells) {
        std::snprintf(buf, sizeof(buf), "%6zu %10.4f %10.4f %6zu\n", c.shots, c.mean_accuracy, c.mean_f1,
                      c.reports.size());
        os << buf;
    }
    return os.str();
}

std::string format_table(const BenchReport& report) {
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%8s %14s   (reps=%zu)\n", "length", "mean_ms", report.reps);
    os << buf;
    for (const auto& [length, seconds] : report.mean_latency_seconds) {
        std::snprintf(buf, sizeof(buf), "%8zu %14.6f\n", length, seconds * 1e3);
        os << buf;
    }
    return os.str();
}

} // namespace commitcl
