// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "commitcl/augment.hpp"
#include "commitcl/benchmark.hpp"
#include "commitcl/contrastive.hpp"
#include "commitcl/encoder.hpp"
#include "commitcl/evaluate.hpp"
#include "commitcl/projection.hpp"
#include "commitcl/random.hpp"
#include "commitcl/trainer.hpp"

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

using namespace commitcl;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<std::vector<double>> random_rows(Rng& rng, std::size_t rows, std::size_t dim) {
    std::vector<std::vector<double>> out(rows, std::vector<double>(dim));
    for (auto& r : out) {
        for (double& x : r) {
            x = uniform_open(rng, -1.0, 1.0);
        }
    }
    return out;
}

std::vector<std::span<const double>> spans_of(const std::vector<std::vector<double>>& rows) {
    return {rows.begin(), rows.end()};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome pair_construction() {
    const auto start = std::chrono::steady_clock::now();
    const Corpus corpus = testing::make_separable_corpus(10, 3);
    AugmentConfig cfg;
    cfg.r_pairs = 20;
    cfg.seed = 11;
    const ContrastiveDataset ds = build_triplets(corpus.records(), corpus.labels(), cfg);

    bool ok = ds.triplets.size() == 120;
    std::size_t positives = 0, negatives = 0, mislabeled = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        ok = ok && ds.positives[c].size() == 20 && ds.negatives[c].size() == 20;
    }
    for (const auto& t : ds.triplets) {
        // labels looked up from the corpus, not from the triplet
        const bool same = *corpus.get(t.left.id).label == *corpus.get(t.right.id).label;
        (t.similar ? positives : negatives) += 1;
        mislabeled += same != t.similar ? 1 : 0;
        ok = ok && t.left.id != t.right.id;
    }
    const double elapsed = seconds_since(start);
    ok = ok && positives == 60 && negatives == 60 && mislabeled == 0 && elapsed < 1.0;
    std::ostringstream os;
    os << ds.triplets.size() << " triplets, " << positives << " similar / " << negatives << " dissimilar, "
       << mislabeled << " mislabeled";
    return {ok, os.str()};
}

Outcome loss_oracle() {
    const auto start = std::chrono::steady_clock::now();
    const double taus[] = {0.05, 0.1, 0.5, 1.0};
    double worst = 0.0;
    Rng rng(2024);
    for (std::size_t b = 0; b < 20; ++b) {
        const std::size_t rows = 2 * (1 + b % 4);
        const double tau = taus[(b / 4) % 4];
        const auto z = random_rows(rng, rows, 16);
        const double fast = batch_loss(z, tau);
        const double naive = testing::naive_batch_loss(z, tau);
        worst = std::max(worst, std::abs(fast - naive) / std::max(std::abs(naive), 1e-300));
    }

    const auto pair = random_rows(rng, 2, 16);
    bool single_zero = true;
    for (double tau : taus) {
        single_zero = single_zero && batch_loss(pair, tau) == 0.0;
    }

    double identical_err = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto row = random_rows(rng, 1, 16)[0];
        const std::vector<std::vector<double>> same(2 * n, row);
        for (double tau : taus) {
            identical_err = std::max(identical_err, std::abs(batch_loss(same, tau) - std::log(2.0 * n - 1.0)));
        }
    }
    const double elapsed = seconds_since(start);
    std::ostringstream os;
    os << "max rel err " << worst << ", single pair " << (single_zero ? "0" : "nonzero")
       << ", identical rows err " << identical_err;
    return {worst <= 1e-9 && single_zero && identical_err <= 1e-12 && elapsed < 5.0, os.str()};
}

Outcome gradient_check() {
    const auto start = std::chrono::steady_clock::now();
    double worst_w = 0.0, worst_b = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        auto model = init_model(8, 6, seed);
        for (double& b : model.bias()) {
            b = uniform_open(rng, -0.5, 0.5);
        }
        const auto inputs = random_rows(rng, 8, 8);
        const double tau = 0.1;
        const auto analytic = loss_gradient(model, spans_of(inputs), tau);
        const auto numeric = testing::finite_difference_gradient(model, [&](const ProjectionModel& m) {
            return testing::naive_batch_loss(testing::naive_project(m, inputs), tau);
        });
        const std::size_t nw = model.weights().size();
        const std::vector<double> aw(analytic.grad.begin(), analytic.grad.begin() + nw);
        const std::vector<double> nw_(numeric.begin(), numeric.begin() + nw);
        const std::vector<double> ab(analytic.grad.begin() + nw, analytic.grad.end());
        const std::vector<double> nb(numeric.begin() + nw, numeric.end());
        worst_w = std::max(worst_w, testing::max_relative_error(aw, nw_));
        worst_b = std::max(worst_b, testing::max_relative_error(ab, nb));
    }
    const double elapsed = seconds_since(start);
    std::ostringstream os;
    os << "max rel err weights " << worst_w << ", bias " << worst_b;
    return {worst_w < 1e-4 && worst_b < 1e-4 && elapsed < 30.0, os.str()};
}

Outcome separability() {
    const Corpus corpus = testing::make_separable_corpus(100, 2);
    const EncoderSuite encoders = build_encoder_suite(EncoderSpec{});
    FewshotConfig cfg;
    bool ok = corpus.size() == 200;
    std::ostringstream os;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const auto start = std::chrono::steady_clock::now();
        const EvalReport report = run_fewshot_cell(corpus, encoders, 10, seed, cfg);
        const double elapsed = seconds_since(start);
        ok = ok && report.accuracy >= 0.95 && elapsed < 60.0;
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%sseed %llu acc %.4f (%.2f s)", seed == 1 ? "" : ", ",
                      static_cast<unsigned long long>(seed), report.accuracy, elapsed);
        os << buf;
    }
    return {ok, os.str()};
}

Outcome fewshot_trend() {
    const auto start = std::chrono::steady_clock::now();
    const Corpus corpus = testing::make_separable_corpus(100, 2);
    const EncoderSuite encoders = build_encoder_suite(EncoderSpec{});
    const FewshotReport report = run_fewshot_benchmark(corpus, encoders, {5, 50}, {1, 2, 3}, FewshotConfig{});
    const double at5 = report.cells[0].mean_accuracy;
    const double at50 = report.cells[1].mean_accuracy;
    const double elapsed = seconds_since(start);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean acc 5-shot %.4f, 50-shot %.4f", at5, at50);
    return {at50 >= at5 && elapsed < 600.0, buf};
}

Outcome metric_formulas() {
    const LabelSet binary({"Positive", "Negative"});
    const EvalReport b = metrics(ConfusionMatrix::from_rows(binary, {{2, 1}, {1, 6}}));
    const double third = 2.0 / 3.0;
    const auto& pos = b.per_class[0];
    bool ok = std::abs(pos.precision - third) <= 1e-15 && std::abs(pos.recall - third) <= 1e-15 &&
              std::abs(pos.f1 - third) <= 1e-15 && b.accuracy == 0.8;

    const LabelSet three({"A", "B", "C"});
    const EvalReport d = metrics(ConfusionMatrix::from_rows(three, {{4, 0, 0}, {0, 7, 0}, {0, 0, 2}}));
    ok = ok && d.accuracy == 1.0 && d.precision == 1.0 && d.recall == 1.0 && d.f1 == 1.0;

    const EvalReport m = metrics(ConfusionMatrix::from_rows(three, {{5, 1, 0}, {2, 6, 1}, {0, 0, 5}}));
    const double err = std::max({std::abs(m.precision - 0.8015873015873016), std::abs(m.recall - 0.8333333333333334),
                                 std::abs(m.f1 - 0.8094405594405595), std::abs(m.accuracy - 0.8)});
    ok = ok && err <= 1e-12;
    std::ostringstream os;
    os << "binary P/R/F1 " << pos.precision << "/" << pos.recall << "/" << pos.f1 << " acc " << b.accuracy
       << ", 3-class max err " << err;
    return {ok, os.str()};
}

Outcome determinism() {
    const Corpus corpus = testing::make_separable_corpus(100, 2);
    const EncoderSuite encoders = build_encoder_suite(EncoderSpec{});
    const CorpusSplit split = split_corpus(corpus, {}, 5);
    TrainConfig cfg;
    cfg.seed = 5;
    AugmentConfig augment;
    augment.seed = 5;

    auto run = [&] {
        const TrainResult r = train(corpus.select(split.train), corpus.select(split.validation), encoders, augment, cfg);
        const Classifier classifier(r.checkpoint, encoders);
        return std::make_pair(serialize_checkpoint(r.checkpoint),
                              to_json(evaluate_records(classifier, corpus.select(split.test))).dump());
    };
    const auto a = run();
    const auto b = run();
    const bool same_checkpoint = a.first == b.first;
    const bool same_report = a.second == b.second;

    // best at epoch 2, then `patience` epochs without strict improvement
    EarlyStopping stop(10);
    const std::vector<double> history{0.5, 0.6, 0.6, 0.4, 0.55, 0.6, 0.3, 0.6, 0.59, 0.6, 0.2, 0.6, 0.95};
    std::size_t stopped = 0;
    for (std::size_t e = 1; e <= history.size() && stopped == 0; ++e) {
        stop.observe(e, history[e - 1]);
        if (stop.should_stop()) {
            stopped = e;
        }
    }
    const bool stops_right = stopped == 12 && stop.best_epoch() == 2;
    std::ostringstream os;
    os << "checkpoints " << (same_checkpoint ? "identical" : "differ") << " (" << a.first.size()
       << " bytes), reports " << (same_report ? "identical" : "differ") << ", scripted stop at epoch " << stopped;
    return {same_checkpoint && same_report && stops_right, os.str()};
}

Outcome geometric_identities() {
    Rng rng(77);
    double idem = 0.0, scale = 0.0, consistency = 0.0, orthogonal = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t dim = 1 + uniform_index(rng, 64);
        const auto h = random_rows(rng, 1, dim)[0];
        const auto z = random_rows(rng, 1, dim)[0];
        const auto n1 = normalize_lp(h);
        const auto n2 = normalize_lp(n1);
        const double alpha = std::exp(uniform_open(rng, std::log(1e-3), std::log(1e3)));
        std::vector<double> scaled = h;
        for (double& x : scaled) {
            x *= alpha;
        }
        const auto ns = normalize_lp(scaled);
        const double s = scalar_projection(z, h);
        const auto v = vector_projection(z, h);
        const double hn = l2_norm(h);
        double residual_dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            idem = std::max(idem, std::abs(n2[i] - n1[i]));
            scale = std::max(scale, std::abs(ns[i] - n1[i]));
            consistency = std::max(consistency, std::abs(v[i] - s * h[i] / hn));
            residual_dot += (z[i] - v[i]) * h[i];
        }
        orthogonal = std::max(orthogonal, std::abs(residual_dot) / (l2_norm(z) * hn));
    }
    std::ostringstream os;
    os << "idempotence " << idem << ", scale " << scale << ", projection consistency " << consistency
       << ", residual cos " << orthogonal;
    return {idem <= 1e-9 && scale <= 1e-9 && consistency <= 1e-9 && orthogonal <= 1e-9, os.str()};
}

Outcome latency_trend() {
    const auto start = std::chrono::steady_clock::now();
    const Corpus corpus = testing::make_separable_corpus(30, 2);
    const EncoderSuite encoders = build_encoder_suite(EncoderSpec{});
    const CorpusSplit split = split_corpus(corpus, {}, 1);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    const TrainResult r = train(corpus.select(split.train), corpus.select(split.validation), encoders, AugmentConfig{}, cfg);
    const Classifier classifier(r.checkpoint, encoders);
    const BenchReport bench = bench_inference(classifier, {8, 32, 128, 512}, 100);

    bool increasing = true;
    double previous = -1.0;
    std::ostringstream os;
    for (const auto& [length, secs] : bench.mean_latency_seconds) {
        increasing = increasing && secs > previous;
        previous = secs;
        os << (length == 8 ? "" : ", ") << length << ": " << secs * 1e6 << " us";
    }
    return {increasing && bench.reps == 100 && seconds_since(start) < 60.0, os.str()};
}

} // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* name;
        std::function<Outcome()> check;
    };
    const std::vector<Criterion> criteria = {
        {"A1", "pair construction", pair_construction},
        {"A2", "NT-Xent oracle", loss_oracle},
        {"A3", "gradient check", gradient_check},
        {"A4", "synthetic separability", separability},
        {"A5", "few-shot trend", fewshot_trend},
        {"A6", "metric formulas", metric_formulas},
        {"A7", "determinism", determinism},
        {"A8", "normalization and projection identities", geometric_identities},
        {"A9", "latency trend", latency_trend},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = c.check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s [%s] (%.2f s)\n", c.id, outcome.pass ? "PASS" : "FAIL", c.name, outcome.detail.c_str(),
                    seconds_since(start));
        std::fflush(stdout);
        failures += outcome.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
