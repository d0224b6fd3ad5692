#include "commitcl/trainer.hpp"

#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

namespace commitcl {

void TrainConfig::validate() const {
    auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
    if (!positive(learning_rate) || !positive(eps_opt)) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate and eps_opt must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "beta1 and beta2 must lie in [0, 1)");
    }
    if (!std::isfinite(weight_decay) || weight_decay < 0.0) {
        throw Error(ErrorKind::InvalidConfig, "weight_decay must be finite and non-negative");
    }
    if (batch_rows < 4 || batch_rows % 2 != 0) {
        throw Error(ErrorKind::InvalidConfig, "batch_rows must be even and at least 4");
    }
    if (patience < 1 || max_epochs < 1 || n_regroups < 1) {
        throw Error(ErrorKind::InvalidConfig, "patience, max_epochs and n_regroups must be at least 1");
    }
    if (out_dim < 2) {
        throw Error(ErrorKind::InvalidConfig, "out_dim must be at least 2");
    }
    LossConfig{tau}.validate();
}

AdamW::AdamW(const TrainConfig& config, std::size_t parameter_count)
    : m_lr(config.learning_rate), m_beta1(config.beta1), m_beta2(config.beta2), m_eps(config.eps_opt),
      m_weight_decay(config.weight_decay) {
    m_state.m.assign(parameter_count, 0.0);
    m_state.v.assign(parameter_count, 0.0);
}

void AdamW::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size()) {
        throw Error(ErrorKind::ShapeMismatch, "parameter/gradient size mismatch: " + std::to_string(params.size()) +
                                                  " vs " + std::to_string(grads.size()));
    }
    if (m_state.m.size() != params.size()) {
        if (m_state.t != 0) {
            throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match the parameter count");
        }
        m_state.m.assign(params.size(), 0.0);
        m_state.v.assign(params.size(), 0.0);
    }
    ++m_state.t;
    const double t = static_cast<double>(m_state.t);
    const double correction1 = 1.0 - std::pow(m_beta1, t);
    const double correction2 = 1.0 - std::pow(m_beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_state.m[i] = m_beta1 * m_state.m[i] + (1.0 - m_beta1) * g;
        m_state.v[i] = m_beta2 * m_state.v[i] + (1.0 - m_beta2) * g * g;
        const double m_hat = m_state.m[i] / correction1;
        const double v_hat = m_state.v[i] / correction2;
        params[i] -= m_lr * (m_hat / (std::sqrt(v_hat) + m_eps) + m_weight_decay * params[i]);
    }
}

EarlyStopping::EarlyStopping(std::size_t patience) : m_patience(patience) {
    if (patience < 1) {
        throw Error(ErrorKind::InvalidConfig, "patience must be at least 1");
    }
}

bool EarlyStopping::observe(std::size_t epoch, double accuracy) {
    if (accuracy > m_best) {
        m_best = accuracy;
        m_best_epoch = epoch;
        m_stale = 0;
        return true;
    }
    ++m_stale;
    return false;
}

// ---------------------------------------------------------------------------
// checkpoint persistence

namespace {

using nlohmann::json;

json encoder_to_json(const EncoderSpec& spec, const std::string& digest) {
    return {{"kind", to_string(spec.kind)},
            {"hashing",
             {{"dimension", spec.hashing.dimension},
              {"ngram_min", spec.hashing.ngram_min},
              {"ngram_max", spec.hashing.ngram_max},
              {"signed", spec.hashing.signed_hash}}},
            {"cc_mode", to_string(spec.cc_mode)},
            {"cc_dim", spec.cc_dim},
            {"norm", {{"p", spec.norm.p}, {"eps", spec.norm.eps}}},
            {"digest", digest}};
}

json train_to_json(const TrainConfig& c) {
    return {{"batch_rows", c.batch_rows},   {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},             {"beta2", c.beta2},
            {"eps_opt", c.eps_opt},         {"weight_decay", c.weight_decay},
            {"max_epochs", c.max_epochs},   {"patience", c.patience},
            {"tau", c.tau},                 {"n_regroups", c.n_regroups},
            {"seed", c.seed},               {"inference_space", to_string(c.inference_space)},
            {"out_dim", c.out_dim},         {"use_bias", c.use_bias},
            {"loss_mode", to_string(c.loss_mode)}};
}

json augment_to_json(const AugmentConfig& c) {
    return {{"r_pairs", c.r_pairs},
            {"anchors_per_class", c.anchors_per_class},
            {"template", c.template_text},
            {"seed", c.seed}};
}

template <typename Enum, typename Parser>
Enum parse_enum(const json& value, Parser parser, const char* what) {
    const auto parsed = parser(value.get<std::string>());
    if (!parsed) {
        throw Error(ErrorKind::CorruptCheckpoint, std::string("unknown ") + what + " '" + value.get<std::string>() + "'");
    }
    return *parsed;
}

} // namespace

json to_json(const Checkpoint& cp) {
    json j;
    j["format"] = "commitcl-checkpoint";
    j["format_version"] = cp.format_version;
    j["encoder"] = encoder_to_json(cp.encoder, cp.encoder_digest);
    j["labels"] = cp.labels.classes();
    j["train_config"] = train_to_json(cp.train);
    j["augment_config"] = augment_to_json(cp.augment);
    j["split"] = {{"train", cp.split.fractions.train},
                  {"validation", cp.split.fractions.validation},
                  {"test", cp.split.fractions.test},
                  {"seed", cp.split.seed}};
    j["best_val_accuracy"] = cp.best_val_accuracy;
    j["best_epoch"] = cp.best_epoch;
    const auto w = cp.model.weights();
    const auto b = cp.model.bias();
    j["model"] = {{"in_dim", cp.model.in_dim()},
                  {"out_dim", cp.model.out_dim()},
                  {"use_bias", cp.model.has_bias()},
                  {"init_seed", cp.model.init_seed},
                  {"weights", std::vector<double>(w.begin(), w.end())},
                  {"bias", std::vector<double>(b.begin(), b.end())}};
    j["prototypes"] = {{"space", to_string(cp.prototypes.space)},
                       {"labels", cp.prototypes.labels.classes()},
                       {"vectors", cp.prototypes.vectors}};
    return j;
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "commitcl-checkpoint") {
            throw Error(ErrorKind::CorruptCheckpoint, "not a commitcl checkpoint");
        }
        Checkpoint cp;
        cp.format_version = j.at("format_version").get<int>();
        if (cp.format_version != kCheckpointFormatVersion) {
            throw Error(ErrorKind::VersionMismatch, "checkpoint format " + std::to_string(cp.format_version) +
                                                        ", expected " + std::to_string(kCheckpointFormatVersion));
        }
        const auto& e = j.at("encoder");
        cp.encoder.kind = e.at("kind").get<std::string>() == "hashing" ? EncoderKind::Hashing : EncoderKind::Precomputed;
        cp.encoder.hashing.dimension = e.at("hashing").at("dimension").get<std::size_t>();
        cp.encoder.hashing.ngram_min = e.at("hashing").at("ngram_min").get<std::size_t>();
        cp.encoder.hashing.ngram_max = e.at("hashing").at("ngram_max").get<std::size_t>();
        cp.encoder.hashing.signed_hash = e.at("hashing").at("signed").get<bool>();
        cp.encoder.cc_mode = parse_enum<CcMode>(e.at("cc_mode"), parse_cc_mode, "cc mode");
        cp.encoder.cc_dim = e.at("cc_dim").get<std::size_t>();
        cp.encoder.norm.p = e.at("norm").at("p").get<double>();
        cp.encoder.norm.eps = e.at("norm").at("eps").get<double>();
        cp.encoder_digest = e.at("digest").get<std::string>();

        cp.labels = LabelSet(j.at("labels").get<std::vector<std::string>>());

        const auto& t = j.at("train_config");
        cp.train.batch_rows = t.at("batch_rows").get<std::size_t>();
        cp.train.learning_rate = t.at("learning_rate").get<double>();
        cp.train.beta1 = t.at("beta1").get<double>();
        cp.train.beta2 = t.at("beta2").get<double>();
        cp.train.eps_opt = t.at("eps_opt").get<double>();
        cp.train.weight_decay = t.at("weight_decay").get<double>();
        cp.train.max_epochs = t.at("max_epochs").get<std::size_t>();
        cp.train.patience = t.at("patience").get<std::size_t>();
        cp.train.tau = t.at("tau").get<double>();
        cp.train.n_regroups = t.at("n_regroups").get<std::size_t>();
        cp.train.seed = t.at("seed").get<std::uint64_t>();
        cp.train.inference_space =
            parse_enum<InferenceSpace>(t.at("inference_space"), parse_inference_space, "inference space");
        cp.train.out_dim = t.at("out_dim").get<std::size_t>();
        cp.train.use_bias = t.at("use_bias").get<bool>();
        cp.train.loss_mode = parse_enum<LossMode>(t.at("loss_mode"), parse_loss_mode, "loss mode");

        const auto& a = j.at("augment_config");
        cp.augment.r_pairs = a.at("r_pairs").get<std::size_t>();
        cp.augment.anchors_per_class = a.at("anchors_per_class").get<std::size_t>();
        cp.augment.template_text = a.at("template").get<std::string>();
        cp.augment.seed = a.at("seed").get<std::uint64_t>();

        const auto& sp = j.at("split");
        cp.split.fractions = {sp.at("train").get<double>(), sp.at("validation").get<double>(),
                              sp.at("test").get<double>()};
        cp.split.seed = sp.at("seed").get<std::uint64_t>();

        cp.best_val_accuracy = j.at("best_val_accuracy").get<double>();
        cp.best_epoch = j.at("best_epoch").get<std::size_t>();

        const auto& m = j.at("model");
        cp.model = ProjectionModel(m.at("in_dim").get<std::size_t>(), m.at("out_dim").get<std::size_t>(),
                                   m.at("use_bias").get<bool>());
        cp.model.init_seed = m.at("init_seed").get<std::uint64_t>();
        const auto weights = m.at("weights").get<std::vector<double>>();
        const auto bias = m.at("bias").get<std::vector<double>>();
        if (weights.size() != cp.model.weights().size() || bias.size() != cp.model.bias().size()) {
            throw Error(ErrorKind::CorruptCheckpoint, "model parameter counts do not match its dimensions");
        }
        std::copy(weights.begin(), weights.end(), cp.model.weights().begin());
        std::copy(bias.begin(), bias.end(), cp.model.bias().begin());

        const auto& p = j.at("prototypes");
        cp.prototypes.space = parse_enum<InferenceSpace>(p.at("space"), parse_inference_space, "inference space");
        cp.prototypes.labels = LabelSet(p.at("labels").get<std::vector<std::string>>());
        cp.prototypes.vectors = p.at("vectors").get<std::vector<std::vector<double>>>();
        if (cp.prototypes.vectors.size() != cp.prototypes.labels.size()) {
            throw Error(ErrorKind::CorruptCheckpoint, "prototype count does not match the label set");
        }
        return cp;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::CorruptCheckpoint, ex.what());
    } catch (const Error& ex) {
        if (ex.kind() == ErrorKind::VersionMismatch || ex.kind() == ErrorKind::CorruptCheckpoint) {
            throw;
        }
        throw Error(ErrorKind::CorruptCheckpoint, ex.what());
    }
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    return to_json(checkpoint).dump(1) + "\n";
}

Checkpoint parse_checkpoint(std::string_view text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorKind::CorruptCheckpoint, "checkpoint is not valid JSON (truncated?)");
    }
    return checkpoint_from_json(j);
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    }
    out << serialize_checkpoint(checkpoint);
    if (!out) {
        throw Error(ErrorKind::IoError, "failed writing '" + path.string() + "'");
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_checkpoint(text);
}

// ---------------------------------------------------------------------------
// training

namespace {

struct EncodedSet {
    std::vector<std::vector<double>> embeddings;
    std::vector<std::size_t> class_of;
};

EncodedSet encode_labeled(const std::vector<CommitRecord>& records, const LabelSet& labels,
                          const EncoderSuite& encoders) {
    EncodedSet out;
    out.embeddings.reserve(records.size());
    out.class_of.reserve(records.size());
    for (const auto& r : records) {
        if (!r.label) {
            throw Error(ErrorKind::UnknownLabel, "record '" + r.id + "' has no label");
        }
        const auto c = labels.index_of(*r.label);
        if (!c) {
            throw Error(ErrorKind::UnknownLabel, "label '" + *r.label + "' of '" + r.id + "' is not a training class");
        }
        out.embeddings.push_back(encode_commit(r, encoders).vector);
        out.class_of.push_back(*c);
    }
    return out;
}

Prototypes prototypes_for(const ProjectionModel& model, const EncodedSet& support, const LabelSet& labels,
                          InferenceSpace space) {
    std::vector<std::vector<double>> reps;
    reps.reserve(support.embeddings.size());
    for (const auto& h : support.embeddings) {
        reps.push_back(represent(model, h, space));
    }
    return prototypes_from_representations(reps, support.class_of, labels, space);
}

double accuracy_of(const ProjectionModel& model, const Prototypes& prototypes, const EncodedSet& eval) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < eval.embeddings.size(); ++i) {
        const auto rep = represent(model, eval.embeddings[i], prototypes.space);
        if (predict_representation(rep, prototypes).class_index == eval.class_of[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(eval.embeddings.size());
}

// Chunks a permutation of `count` items; a trailing chunk of one item joins
// the previous chunk.
std::vector<std::vector<std::size_t>> chunked_permutation(std::size_t count, std::size_t chunk, Rng& rng) {
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(perm), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < count; start += chunk) {
        std::vector<std::size_t> part(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                      perm.begin() + static_cast<std::ptrdiff_t>(std::min(count, start + chunk)));
        if (part.size() < 2 && !out.empty()) {
            out.back().insert(out.back().end(), part.begin(), part.end());
        } else {
            out.push_back(std::move(part));
        }
    }
    return out;
}

} // namespace

Prototypes class_prototypes(const ProjectionModel& model,
                            const std::vector<CommitRecord>& support,
                            const LabelSet& labels,
                            const EncoderSuite& encoders,
                            const AugmentConfig& augment,
                            InferenceSpace space) {
    std::vector<CommitRecord> pool = support;
    const auto anchors = generate_anchors(labels, augment);
    pool.insert(pool.end(), anchors.begin(), anchors.end());
    return prototypes_for(model, encode_labeled(pool, labels, encoders), labels, space);
}

TrainResult train(const std::vector<CommitRecord>& train_records,
                  const std::vector<CommitRecord>& val_records,
                  const EncoderSuite& encoders,
                  const AugmentConfig& augment,
                  const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    augment.validate();
    const LabelSet labels = observed_labels(train_records);
    if (labels.size() < 2) {
        throw Error(ErrorKind::TooFewClasses, "training records cover " + std::to_string(labels.size()) +
                                                  " classes, at least 2 required");
    }
    if (val_records.empty()) {
        throw Error(ErrorKind::EmptyValidation, "validation set is empty");
    }

    std::vector<CommitRecord> pool;
    for (const auto& r : train_records) {
        if (r.label) {
            pool.push_back(r);
        }
    }
    const auto anchors = generate_anchors(labels, augment);
    pool.insert(pool.end(), anchors.begin(), anchors.end());

    const EncodedSet pool_set = encode_labeled(pool, labels, encoders);
    const EncodedSet val_set = encode_labeled(val_records, labels, encoders);

    ProjectionModel model = init_model(encoders.embedding_dim(), config.out_dim, mix_seed(config.seed, 0x1417),
                                       config.use_bias);
    AdamW optimizer(config, model.parameters().size());
    EarlyStopping stopper(config.patience);
    const std::size_t pairs_per_batch = config.batch_rows / 2;

    TrainResult result;
    ProjectionModel best_model = model;
    Prototypes best_prototypes;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        AugmentConfig epoch_augment = augment;
        epoch_augment.seed = mix_seed(augment.seed ^ config.seed, epoch);
        const ContrastiveDataset dataset = build_triplets(pool, labels, epoch_augment);
        const std::uint64_t group_seed = mix_seed(config.seed, 0x2000 + epoch);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        auto apply = [&](const LossGradient& lg) {
            optimizer.step(model.parameters(), lg.grad);
            loss_sum += lg.loss;
            ++batches;
        };

        if (config.loss_mode == LossMode::NtXent) {
            const auto positives = dataset.positive_list();
            for (const auto& ordering : regroup(dataset, config.n_regroups, group_seed, pairs_per_batch)) {
                for (const auto& batch : ordering) {
                    std::vector<std::span<const double>> inputs;
                    inputs.reserve(batch.size() * 2);
                    for (auto idx : batch) {
                        inputs.emplace_back(pool_set.embeddings[positives[idx]->left.index]);
                        inputs.emplace_back(pool_set.embeddings[positives[idx]->right.index]);
                    }
                    apply(loss_gradient(model, inputs, config.tau));
                }
            }
        } else {
            for (std::size_t g = 0; g < config.n_regroups; ++g) {
                Rng rng(mix_seed(group_seed, g));
                for (const auto& batch : chunked_permutation(dataset.triplets.size(), pairs_per_batch, rng)) {
                    std::vector<LabeledPair> pairs;
                    pairs.reserve(batch.size());
                    for (auto idx : batch) {
                        const auto& t = dataset.triplets[idx];
                        pairs.push_back({pool_set.embeddings[t.left.index], pool_set.embeddings[t.right.index],
                                         t.similar});
                    }
                    apply(pairwise_loss_gradient(model, pairs));
                }
            }
        }

        Prototypes prototypes = prototypes_for(model, pool_set, labels, config.inference_space);
        const double acc = accuracy_of(model, prototypes, val_set);
        const EpochLog log{epoch, batches == 0 ? 0.0 : loss_sum / static_cast<double>(batches), acc};
        result.history.push_back(log);
        if (on_epoch) {
            on_epoch(log);
        }
        if (stopper.observe(epoch, acc)) {
            best_model = model;
            best_prototypes = std::move(prototypes);
        }
        if (stopper.should_stop()) {
            break;
        }
    }

    Checkpoint& cp = result.checkpoint;
    cp.encoder = encoders.spec;
    cp.encoder_digest = encoders.digest();
    cp.labels = labels;
    cp.train = config;
    cp.augment = augment;
    cp.split.seed = config.seed;
    cp.best_val_accuracy = stopper.best_accuracy();
    cp.best_epoch = stopper.best_epoch();
    cp.model = std::move(best_model);
    cp.prototypes = std::move(best_prototypes);
    return result;
}

} // namespace commitcl
