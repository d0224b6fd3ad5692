#include "commitcl/contrastive.hpp"

#include "commitcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace commitcl {

void LossConfig::validate() const {
    if (!std::isfinite(tau) || tau <= 0.0) {
        throw Error(ErrorKind::InvalidConfig, "tau must be finite and positive");
    }
}

double pairwise_similarity(std::span<const double> zi, std::span<const double> zj, double tau) {
    const double ni = l2_norm(zi);
    const double nj = l2_norm(zj);
    if (ni == 0.0 || nj == 0.0) {
        throw Error(ErrorKind::ZeroVector, "similarity of a zero vector is undefined");
    }
    return dot(zi, zj) / (tau * ni * nj);
}

namespace {

void check_layout(std::size_t rows) {
    if (rows < 2 || rows % 2 != 0) {
        throw Error(ErrorKind::ShapeMismatch,
                    "batch needs an even number of rows >= 2, got " + std::to_string(rows));
    }
}

double log_sum_exp_excluding(std::span<const double> logits, std::size_t skip) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (k != skip) {
            peak = std::max(peak, logits[k]);
        }
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (k != skip) {
            sum += std::exp(logits[k] - peak);
        }
    }
    return peak + std::log(sum);
}

// Unit rows and their original norms.
struct NormalizedRows {
    std::vector<std::vector<double>> unit;
    std::vector<double> norm;
};

NormalizedRows normalize_rows(const std::vector<std::vector<double>>& rows, double min_norm, ErrorKind on_zero) {
    NormalizedRows out;
    out.unit.reserve(rows.size());
    out.norm.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double n = l2_norm(rows[r]);
        if (!(n >= min_norm) || n == 0.0) {
            throw Error(on_zero, "row " + std::to_string(r) + " has norm " + std::to_string(n));
        }
        std::vector<double> u = rows[r];
        for (double& x : u) {
            x /= n;
        }
        out.unit.push_back(std::move(u));
        out.norm.push_back(n);
    }
    return out;
}

std::vector<std::vector<double>> similarity_matrix(const std::vector<std::vector<double>>& unit, double tau) {
    const std::size_t m = unit.size();
    std::vector<std::vector<double>> sims(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = i; k < m; ++k) {
            const double s = dot(unit[i], unit[k]) / tau;
            sims[i][k] = s;
            sims[k][i] = s;
        }
    }
    return sims;
}

// Chains dL/du_r through u = z / ||z|| and z = W·H + b into parameter space.
std::vector<double> backprop_head(const ProjectionModel& model,
                                  const std::vector<std::span<const double>>& inputs,
                                  const NormalizedRows& rows,
                                  const std::vector<std::vector<double>>& grad_unit) {
    std::vector<double> grad(model.parameters().size(), 0.0);
    const std::size_t in = model.in_dim();
    const std::size_t out = model.out_dim();
    std::vector<double> dz(out);
    for (std::size_t r = 0; r < inputs.size(); ++r) {
        const auto& u = rows.unit[r];
        const auto& g = grad_unit[r];
        const double radial = dot(g, u);
        for (std::size_t o = 0; o < out; ++o) {
            dz[o] = (g[o] - radial * u[o]) / rows.norm[r];
        }
        const auto h = inputs[r];
        for (std::size_t o = 0; o < out; ++o) {
            if (dz[o] == 0.0) {
                continue;
            }
            double* row = grad.data() + o * in;
            for (std::size_t c = 0; c < in; ++c) {
                row[c] += dz[o] * h[c];
            }
        }
        if (model.has_bias()) {
            double* b = grad.data() + model.weight_count();
            for (std::size_t o = 0; o < out; ++o) {
                b[o] += dz[o];
            }
        }
    }
    return grad;
}

std::vector<std::vector<double>> project_all(const ProjectionModel& model,
                                             const std::vector<std::span<const double>>& inputs) {
    std::vector<std::vector<double>> z;
    z.reserve(inputs.size());
    for (const auto& h : inputs) {
        z.push_back(project(model, h));
    }
    return z;
}

constexpr double kMinProjectionNorm = 1e-12;

} // namespace

double nt_xent_pair(const BatchRows& rows, std::size_t i, std::size_t j, double tau) {
    LossConfig{tau}.validate();
    if (i >= rows.size() || j >= rows.size() || i == j) {
        throw Error(ErrorKind::IndexOutOfRange, "pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                                    ") invalid for " + std::to_string(rows.size()) + " rows");
    }
    std::vector<double> logits(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        logits[k] = k == i ? 0.0 : pairwise_similarity(rows[i], rows[k], tau);
    }
    return log_sum_exp_excluding(logits, i) - logits[j];
}

double batch_loss(const BatchRows& rows, double tau) {
    LossConfig{tau}.validate();
    check_layout(rows.size());
    const auto normalized = normalize_rows(rows, 0.0, ErrorKind::ZeroVector);
    const auto sims = similarity_matrix(normalized.unit, tau);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        total += log_sum_exp_excluding(sims[i], i) - sims[i][i ^ 1U];
    }
    return total / static_cast<double>(rows.size());
}

LossGradient loss_gradient(const ProjectionModel& model,
                           const std::vector<std::span<const double>>& inputs,
                           double tau) {
    LossConfig{tau}.validate();
    check_layout(inputs.size());
    const auto rows = normalize_rows(project_all(model, inputs), kMinProjectionNorm, ErrorKind::ZeroProjection);
    const std::size_t m = inputs.size();
    const auto sims = similarity_matrix(rows.unit, tau);
    const std::size_t out = model.out_dim();

    LossGradient result;
    std::vector<std::vector<double>> grad_unit(m, std::vector<double>(out, 0.0));
    const double inv_m = 1.0 / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i ^ 1U;
        const double lse = log_sum_exp_excluding(sims[i], i);
        result.loss += (lse - sims[i][j]) * inv_m;
        for (std::size_t k = 0; k < m; ++k) {
            if (k == i) {
                continue;
            }
            // d l_i / d sim_ik = softmax_ik - [k == j]
            const double coef = (std::exp(sims[i][k] - lse) - (k == j ? 1.0 : 0.0)) * inv_m / tau;
            if (coef == 0.0) {
                continue;
            }
            for (std::size_t o = 0; o < out; ++o) {
                grad_unit[i][o] += coef * rows.unit[k][o];
                grad_unit[k][o] += coef * rows.unit[i][o];
            }
        }
    }
    result.grad = backprop_head(model, inputs, rows, grad_unit);
    return result;
}

LossGradient pairwise_loss_gradient(const ProjectionModel& model,
                                    const std::vector<LabeledPair>& pairs,
                                    double margin) {
    if (pairs.empty()) {
        throw Error(ErrorKind::ShapeMismatch, "pairwise loss needs at least one pair");
    }
    std::vector<std::span<const double>> inputs;
    inputs.reserve(pairs.size() * 2);
    for (const auto& p : pairs) {
        inputs.push_back(p.left);
        inputs.push_back(p.right);
    }
    const auto rows = normalize_rows(project_all(model, inputs), kMinProjectionNorm, ErrorKind::ZeroProjection);
    const std::size_t out = model.out_dim();
    const double inv_p = 1.0 / static_cast<double>(pairs.size());

    LossGradient result;
    std::vector<std::vector<double>> grad_unit(inputs.size(), std::vector<double>(out, 0.0));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& ul = rows.unit[2 * p];
        const auto& ur = rows.unit[2 * p + 1];
        const double c = dot(ul, ur);
        double d_cos = 0.0;
        if (pairs[p].similar) {
            result.loss += (1.0 - c) * inv_p;
            d_cos = -inv_p;
        } else if (c > margin) {
            result.loss += (c - margin) * inv_p;
            d_cos = inv_p;
        }
        for (std::size_t o = 0; o < out; ++o) {
            grad_unit[2 * p][o] += d_cos * ur[o];
            grad_unit[2 * p + 1][o] += d_cos * ul[o];
        }
    }
    result.grad = backprop_head(model, inputs, rows, grad_unit);
    return result;
}

std::string_view to_string(LossMode mode) noexcept {
    return mode == LossMode::NtXent ? "nt_xent" : "pairwise";
}

std::optional<LossMode> parse_loss_mode(std::string_view name) noexcept {
    if (name == "nt_xent") return LossMode::NtXent;
    if (name == "pairwise") return LossMode::Pairwise;
    return std::nullopt;
}

} // namespace commitcl
