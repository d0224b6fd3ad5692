#include "commitcl/projection.hpp"

#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include <cmath>

namespace commitcl {

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "dot of lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(dot(v, v));
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot(a, b) / (na * nb);
}

double scalar_projection(std::span<const double> source, std::span<const double> target) {
    const double norm = l2_norm(target);
    if (norm == 0.0) {
        throw Error(ErrorKind::ZeroTarget, "projection target has zero length");
    }
    return dot(source, target) / norm;
}

std::vector<double> vector_projection(std::span<const double> source, std::span<const double> target) {
    const double tt = dot(target, target);
    if (tt == 0.0) {
        throw Error(ErrorKind::ZeroTarget, "projection target has zero length");
    }
    const double coef = dot(source, target) / tt;
    std::vector<double> out(target.begin(), target.end());
    for (double& x : out) {
        x *= coef;
    }
    return out;
}

ProjectionModel::ProjectionModel(std::size_t in_dim, std::size_t out_dim, bool with_bias)
    : m_in(in_dim), m_out(out_dim), m_bias(with_bias),
      m_params(in_dim * out_dim + (with_bias ? out_dim : 0), 0.0) {
    if (in_dim == 0 || out_dim == 0) {
        throw Error(ErrorKind::InvalidConfig, "projection dimensions must be positive");
    }
}

ProjectionModel init_model(std::size_t in_dim, std::size_t out_dim, std::uint64_t seed, bool with_bias) {
    ProjectionModel model(in_dim, out_dim, with_bias);
    model.init_seed = seed;
    const double a = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    Rng rng(mix_seed(seed, 0x1a17));
    for (double& w : model.weights()) {
        w = uniform_open(rng, -a, a);
    }
    return model;
}

std::vector<double> project(const ProjectionModel& model, std::span<const double> h) {
    if (h.size() != model.in_dim()) {
        throw Error(ErrorKind::DimensionMismatch, "embedding length " + std::to_string(h.size()) +
                                                      " does not match projection input " +
                                                      std::to_string(model.in_dim()));
    }
    std::vector<double> z(model.out_dim(), 0.0);
    const auto w = model.weights();
    const auto b = model.bias();
    for (std::size_t r = 0; r < model.out_dim(); ++r) {
        const double* row = w.data() + r * model.in_dim();
        double s = b.empty() ? 0.0 : b[r];
        for (std::size_t c = 0; c < model.in_dim(); ++c) {
            s += row[c] * h[c];
        }
        z[r] = s;
    }
    return z;
}

} // namespace commitcl
