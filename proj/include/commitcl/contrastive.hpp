#pragma once

#include "commitcl/projection.hpp"

#include <span>
#include <string_view>
#include <optional>
#include <vector>

namespace commitcl {

struct LossConfig {
    double tau = 0.1;

    void validate() const;
};

/// sim(i, j) = z_i·z_j / (tau ||z_i|| ||z_j||). Throws ZeroVector.
double pairwise_similarity(std::span<const double> zi, std::span<const double> zj, double tau);

/// Rows of one contrastive batch. Rows 2k and 2k+1 (0-based) are the two
/// sides of one positive pair; every other row acts as a negative.
using BatchRows = std::vector<std::vector<double>>;

/// Directed loss l(i, j) = -log( exp(sim_ij) / sum_{k != i} exp(sim_ik) ).
/// The denominator keeps the k = j term. Indices are 0-based.
double nt_xent_pair(const BatchRows& rows, std::size_t i, std::size_t j, double tau);

/// L = (1/2N) sum_k [ l(2k, 2k+1) + l(2k+1, 2k) ] over the N adjacent pairs.
double batch_loss(const BatchRows& rows, double tau);

struct LossGradient {
    double loss = 0.0;
    /// Same layout as ProjectionModel::parameters().
    std::vector<double> grad;
};

/// Loss of the projected batch and its analytic gradient with respect to the
/// head parameters. Throws ZeroProjection when a projected row has norm below 1e-12.
LossGradient loss_gradient(const ProjectionModel& model,
                           const std::vector<std::span<const double>>& inputs,
                           double tau);

/// Cosine-embedding loss over labeled pairs: 1 - cos for similar pairs,
/// max(0, cos - margin) for dissimilar ones, averaged.
struct LabeledPair {
    std::span<const double> left;
    std::span<const double> right;
    bool similar = true;
};

LossGradient pairwise_loss_gradient(const ProjectionModel& model,
                                    const std::vector<LabeledPair>& pairs,
                                    double margin = 0.2);

enum class LossMode { NtXent, Pairwise };

std::string_view to_string(LossMode mode) noexcept;
std::optional<LossMode> parse_loss_mode(std::string_view name) noexcept;

} // namespace commitcl
