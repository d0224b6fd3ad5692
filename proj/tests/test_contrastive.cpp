#include "commitcl/contrastive.hpp"
#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace commitcl;
using commitcl::testing::finite_difference_gradient;
using commitcl::testing::max_relative_error;
using commitcl::testing::naive_batch_loss;
using commitcl::testing::naive_project;

namespace {

BatchRows random_rows(Rng& rng, std::size_t rows, std::size_t dim) {
    BatchRows out(rows, std::vector<double>(dim));
    for (auto& r : out) {
        for (double& x : r) {
            x = uniform_open(rng, -1, 1);
        }
    }
    return out;
}

std::vector<std::span<const double>> spans_of(const std::vector<std::vector<double>>& rows) {
    return {rows.begin(), rows.end()};
}

} // namespace

TEST_CASE("pairwise similarity examples") {
    const std::vector<double> u{0.6, 0.8};
    CHECK(pairwise_similarity(u, u, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pairwise_similarity(u, u, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(pairwise_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 3}, 0.07) == 0.0);
    CHECK_THROWS_AS(pairwise_similarity(u, std::vector<double>{0, 0}, 1.0), Error);

    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const auto rows = random_rows(rng, 2, 5);
        const double s = pairwise_similarity(rows[0], rows[1], 0.2);
        CHECK(s == doctest::Approx(pairwise_similarity(rows[1], rows[0], 0.2)));
        CHECK(std::abs(s) <= 5.0 + 1e-12);
    }
}

TEST_CASE("nt_xent_pair examples") {
    Rng rng(2);
    const auto pair = random_rows(rng, 2, 4);
    CHECK(nt_xent_pair(pair, 0, 1, 0.1) == doctest::Approx(0.0));

    const BatchRows same(4, std::vector<double>{1, 2, 3});
    for (double tau : {0.05, 1.0, 3.0}) {
        CHECK(std::abs(nt_xent_pair(same, 0, 1, tau) - std::log(3.0)) < 1e-12);
    }

    const auto batch = random_rows(rng, 6, 5);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(nt_xent_pair(batch, i, i ^ 1U, 0.1) >= 0.0);
    }
    CHECK_THROWS_AS(nt_xent_pair(batch, 2, 2, 0.1), Error);
    CHECK_THROWS_AS(nt_xent_pair(batch, 0, 6, 0.1), Error);
}

TEST_CASE("directed pair losses differ in general") {
    Rng rng(12);
    const auto batch = random_rows(rng, 6, 3);
    CHECK(nt_xent_pair(batch, 0, 1, 0.5) != doctest::Approx(nt_xent_pair(batch, 1, 0, 0.5)));
}

TEST_CASE("batch loss matches the naive oracle") {
    Rng rng(5);
    for (std::size_t rows : {2U, 4U, 6U, 8U}) {
        for (double tau : {0.05, 0.1, 0.5, 1.0}) {
            const auto batch = random_rows(rng, rows, 7);
            const double expected = naive_batch_loss(batch, tau);
            CHECK(std::abs(batch_loss(batch, tau) - expected) <= 1e-9 * std::max(1.0, std::abs(expected)));
        }
    }
    CHECK(batch_loss(random_rows(rng, 2, 3), 0.1) == 0.0);
    for (std::size_t n : {2U, 3U, 5U}) {
        const BatchRows same(2 * n, std::vector<double>{0.3, -0.1});
        CHECK(std::abs(batch_loss(same, 0.1) - std::log(2.0 * n - 1)) < 1e-12);
    }
    CHECK_THROWS_AS(batch_loss(random_rows(rng, 3, 2), 0.1), Error);
}

TEST_CASE("large similarities do not overflow") {
    BatchRows rows{{1, 0}, {1, 0}, {0, 1}, {-1, 0}};
    const double loss = batch_loss(rows, 1e-3);
    CHECK(std::isfinite(loss));
}

TEST_CASE("batch loss is invariant to pair order and scales logits with tau") {
    Rng rng(6);
    const auto batch = random_rows(rng, 8, 4);
    BatchRows swapped = {batch[4], batch[5], batch[0], batch[1], batch[6], batch[7], batch[2], batch[3]};
    CHECK(std::abs(batch_loss(batch, 0.3) - batch_loss(swapped, 0.3)) <= 1e-12);

    const double s1 = pairwise_similarity(batch[0], batch[3], 0.2);
    const double s2 = pairwise_similarity(batch[0], batch[3], 0.2 * 4);
    CHECK(s2 == doctest::Approx(s1 / 4).epsilon(1e-14));
}

TEST_CASE("analytic gradient matches central differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        auto model = init_model(5, 4, seed);
        for (double& b : model.bias()) {
            b = uniform_open(rng, -0.5, 0.5);
        }
        const auto inputs = random_rows(rng, 6, 5);
        const double tau = 0.5;
        const auto analytic = loss_gradient(model, spans_of(inputs), tau);
        CHECK(analytic.loss == doctest::Approx(naive_batch_loss(naive_project(model, inputs), tau)).epsilon(1e-12));
        const auto numeric = finite_difference_gradient(
            model, [&](const ProjectionModel& m) { return naive_batch_loss(naive_project(m, inputs), tau); });
        CHECK(max_relative_error(analytic.grad, numeric) < 1e-4);
    }
}

TEST_CASE("single-pair batch has zero gradient") {
    Rng rng(4);
    const auto model = init_model(3, 3, 1);
    const auto inputs = random_rows(rng, 2, 3);
    const auto g = loss_gradient(model, spans_of(inputs), 0.1);
    CHECK(g.loss == doctest::Approx(0.0));
    for (double x : g.grad) {
        CHECK(x == doctest::Approx(0.0));
    }
}

TEST_CASE("degenerate head raises ZeroProjection") {
    const ProjectionModel zero(3, 2, false);
    Rng rng(9);
    const auto inputs = random_rows(rng, 4, 3);
    try {
        loss_gradient(zero, spans_of(inputs), 0.1);
        FAIL("expected ZeroProjection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ZeroProjection);
    }
}

TEST_CASE("pairwise cosine loss gradient matches central differences") {
    Rng rng(21);
    auto model = init_model(4, 3, 2);
    for (double& b : model.bias()) {
        b = uniform_open(rng, -0.5, 0.5);
    }
    const auto rows = random_rows(rng, 8, 4);
    std::vector<LabeledPair> pairs;
    for (std::size_t p = 0; p < 4; ++p) {
        pairs.push_back({rows[2 * p], rows[2 * p + 1], p % 2 == 0});
    }
    auto naive = [&](const ProjectionModel& m) {
        const auto z = naive_project(m, rows);
        double total = 0;
        for (std::size_t p = 0; p < 4; ++p) {
            double d = 0, a = 0, b = 0;
            for (std::size_t k = 0; k < z[0].size(); ++k) {
                d += z[2 * p][k] * z[2 * p + 1][k];
                a += z[2 * p][k] * z[2 * p][k];
                b += z[2 * p + 1][k] * z[2 * p + 1][k];
            }
            const double c = d / std::sqrt(a * b);
            total += pairs[p].similar ? 1 - c : std::max(0.0, c - 0.2);
        }
        return total / 4;
    };
    const auto analytic = pairwise_loss_gradient(model, pairs);
    CHECK(analytic.loss == doctest::Approx(naive(model)).epsilon(1e-12));
    CHECK(max_relative_error(analytic.grad, finite_difference_gradient(model, naive)) < 1e-4);
}
