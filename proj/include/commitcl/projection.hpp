#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace commitcl {

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);
/// Cosine similarity; 0 when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// (H_i · H_j) / ||H_j||. Throws ZeroTarget for a zero target.
double scalar_projection(std::span<const double> source, std::span<const double> target);
/// ((H_i · H_j) / (H_j · H_j)) H_j. Throws ZeroTarget for a zero target.
std::vector<double> vector_projection(std::span<const double> source, std::span<const double> target);

/// Trainable affine head z = W·H + b.
///
/// Parameters live in one flat buffer, row-major weights first and the bias
/// (if any) after them, so the optimizer can treat the model as a single vector.
class ProjectionModel {
public:
    ProjectionModel() = default;
    ProjectionModel(std::size_t in_dim, std::size_t out_dim, bool with_bias);

    std::size_t in_dim() const noexcept { return m_in; }
    std::size_t out_dim() const noexcept { return m_out; }
    bool has_bias() const noexcept { return m_bias; }
    std::size_t weight_count() const noexcept { return m_in * m_out; }

    std::span<double> parameters() noexcept { return m_params; }
    std::span<const double> parameters() const noexcept { return m_params; }
    std::span<double> weights() noexcept { return {m_params.data(), weight_count()}; }
    std::span<const double> weights() const noexcept { return {m_params.data(), weight_count()}; }
    std::span<double> bias() noexcept { return {m_params.data() + weight_count(), m_bias ? m_out : 0}; }
    std::span<const double> bias() const noexcept { return {m_params.data() + weight_count(), m_bias ? m_out : 0}; }

    double& weight(std::size_t row, std::size_t col) { return m_params[row * m_in + col]; }
    double weight(std::size_t row, std::size_t col) const { return m_params[row * m_in + col]; }

    std::uint64_t init_seed = 0;

    friend bool operator==(const ProjectionModel&, const ProjectionModel&) = default;

private:
    std::size_t m_in = 0;
    std::size_t m_out = 0;
    bool m_bias = true;
    std::vector<double> m_params;
};

/// Glorot-uniform weights in (-a, a), a = sqrt(6 / (in + out)); zero bias.
ProjectionModel init_model(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed, bool with_bias = true);

std::vector<double> project(const ProjectionModel& model, std::span<const double> h);

} // namespace commitcl
