#pragma once

#include "commitcl/augment.hpp"
#include "commitcl/contrastive.hpp"
#include "commitcl/corpus.hpp"
#include "commitcl/encoder.hpp"
#include "commitcl/evaluate.hpp"
#include "commitcl/projection.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace commitcl {

struct TrainConfig {
    std::size_t batch_rows = 64;
    // Published setting for full transformer fine-tuning is 1e-5; a frozen
    // encoder with a small affine head needs a much larger step.
    double learning_rate = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_opt = 1e-8;
    double weight_decay = 0.01;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    double tau = 0.1;
    std::size_t n_regroups = 1;
    std::uint64_t seed = 0;
    InferenceSpace inference_space = InferenceSpace::Projection;
    std::size_t out_dim = 128;
    bool use_bias = true;
    LossMode loss_mode = LossMode::NtXent;

    void validate() const;
};

class AdamW {
public:
    struct State {
        std::vector<double> m;
        std::vector<double> v;
        std::uint64_t t = 0;
    };

    explicit AdamW(const TrainConfig& config, std::size_t parameter_count = 0);

    /// m <- b1 m + (1-b1) g; v <- b2 v + (1-b2) g^2; bias-corrected with the
    /// incremented step; theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta).
    void step(std::span<double> params, std::span<const double> grads);

    const State& state() const noexcept { return m_state; }

private:
    double m_lr;
    double m_beta1;
    double m_beta2;
    double m_eps;
    double m_weight_decay;
    State m_state;
};

/// Tracks the best validation accuracy; improvement must be strict.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience);

    /// Records the accuracy of `epoch`; returns true when it is a new best.
    bool observe(std::size_t epoch, double accuracy);
    bool should_stop() const noexcept { return m_stale >= m_patience; }

    double best_accuracy() const noexcept { return m_best; }
    std::size_t best_epoch() const noexcept { return m_best_epoch; }

private:
    std::size_t m_patience;
    double m_best = -1.0;
    std::size_t m_best_epoch = 0;
    std::size_t m_stale = 0;
};

inline constexpr int kCheckpointFormatVersion = 1;

/// How the corpus was partitioned when the checkpoint was trained, so that
/// evaluation can rebuild the same held-out split.
struct SplitRecord {
    SplitFractions fractions;
    std::uint64_t seed = 0;

    friend bool operator==(const SplitRecord&, const SplitRecord&) = default;
};

struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    EncoderSpec encoder;
    std::string encoder_digest;
    LabelSet labels;
    TrainConfig train;
    AugmentConfig augment;
    SplitRecord split;
    double best_val_accuracy = 0.0;
    std::size_t best_epoch = 0;
    ProjectionModel model;
    Prototypes prototypes;
};

nlohmann::json to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(std::string_view text);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct EpochLog {
    std::size_t epoch = 0;
    double loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochLog> history;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains the projection head on contrastive pairs built from
/// `train_records` plus template anchors, selecting the epoch with the best
/// validation accuracy under the prototype predictor.
TrainResult train(const std::vector<CommitRecord>& train_records,
                  const std::vector<CommitRecord>& val_records,
                  const EncoderSuite& encoders,
                  const AugmentConfig& augment,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// Prototypes over `support` plus the anchors that `augment` generates.
Prototypes class_prototypes(const ProjectionModel& model,
                            const std::vector<CommitRecord>& support,
                            const LabelSet& labels,
                            const EncoderSuite& encoders,
                            const AugmentConfig& augment,
                            InferenceSpace space);

} // namespace commitcl
