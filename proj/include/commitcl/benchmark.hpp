#pragma once

#include "commitcl/corpus.hpp"
#include "commitcl/encoder.hpp"
#include "commitcl/evaluate.hpp"
#include "commitcl/trainer.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace commitcl {

/// Inference over a checkpoint. Construction fails with DigestMismatch when
/// the encoders differ from the ones the checkpoint was trained with.
class Classifier {
public:
    Classifier(Checkpoint checkpoint, EncoderSuite encoders);

    std::vector<double> representation(const CommitRecord& record) const;
    Prediction predict(const CommitRecord& record) const;

    const Checkpoint& checkpoint() const noexcept { return m_checkpoint; }
    const EncoderSuite& encoders() const noexcept { return m_encoders; }

private:
    Checkpoint m_checkpoint;
    EncoderSuite m_encoders;
};

/// Predicts every labeled record and scores the predictions. Records whose
/// label is outside the checkpoint's label set raise UnknownLabel.
EvalReport evaluate_records(const Classifier& classifier,
                            const std::vector<CommitRecord>& records,
                            Averaging averaging = Averaging::Macro);

struct FewshotConfig {
    std::size_t way = 0;  // 0: every class in the training split
    SplitFractions fractions;
    AugmentConfig augment;
    TrainConfig train;
    Averaging averaging = Averaging::Macro;
    /// Query pool: every non-support record (default), or the test split only.
    bool query_from_test_split = false;
};

struct FewshotCell {
    std::size_t shots = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<EvalReport> reports;  // one per seed, same order
    double mean_accuracy = 0.0;
    double mean_f1 = 0.0;
};

struct FewshotReport {
    std::vector<FewshotCell> cells;  // in the order of the requested shots
    std::vector<std::uint64_t> seeds;
    std::string config_digest;
};

/// Runs one cell: split with `seed`, sample a `shots`-shot episode from the
/// training split, train on it (validation split drives early stopping) and
/// score the episode's query set.
EvalReport run_fewshot_cell(const Corpus& corpus,
                            const EncoderSuite& encoders,
                            std::size_t shots,
                            std::uint64_t seed,
                            const FewshotConfig& config);

FewshotReport run_fewshot_benchmark(const Corpus& corpus,
                                    const EncoderSuite& encoders,
                                    const std::vector<std::size_t>& shots,
                                    const std::vector<std::uint64_t>& seeds,
                                    const FewshotConfig& config);

struct BenchReport {
    std::map<std::size_t, double> mean_latency_seconds;  // sequence length -> mean
    std::size_t reps = 0;
};

/// Synthesizes a message of exactly `length` whitespace-separated tokens per
/// length, then times encode + predict over `reps` calls after 3 warmups.
BenchReport bench_inference(const Classifier& classifier, const std::vector<std::size_t>& lengths, std::size_t reps);

std::string synthetic_message(std::size_t tokens);

nlohmann::json to_json(const FewshotReport& report);
nlohmann::json to_json(const BenchReport& report);
std::string format_table(const FewshotReport& report);
std::string format_table(const BenchReport& report);

} // namespace commitcl
