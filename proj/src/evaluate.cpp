#include "commitcl/evaluate.hpp"

#include "commitcl/csv.hpp"
#include "commitcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace commitcl {

std::string_view to_string(InferenceSpace space) noexcept {
    return space == InferenceSpace::Projection ? "projection" : "encoder";
}

std::optional<InferenceSpace> parse_inference_space(std::string_view name) noexcept {
    if (name == "projection") return InferenceSpace::Projection;
    if (name == "encoder") return InferenceSpace::Encoder;
    return std::nullopt;
}

std::vector<double> represent(const ProjectionModel& model, std::span<const double> embedding, InferenceSpace space) {
    if (space == InferenceSpace::Encoder) {
        return {embedding.begin(), embedding.end()};
    }
    return project(model, embedding);
}

Prototypes prototypes_from_representations(const std::vector<std::vector<double>>& representations,
                                           const std::vector<std::size_t>& class_of,
                                           const LabelSet& labels,
                                           InferenceSpace space) {
    if (representations.size() != class_of.size()) {
        throw Error(ErrorKind::ShapeMismatch, "representations and class indices differ in length");
    }
    Prototypes out;
    out.labels = labels;
    out.space = space;
    const std::size_t dim = representations.empty() ? 0 : representations.front().size();
    std::vector<std::vector<double>> sums(labels.size(), std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(labels.size(), 0);
    for (std::size_t i = 0; i < representations.size(); ++i) {
        const auto c = class_of[i];
        if (c >= labels.size() || representations[i].size() != dim) {
            throw Error(ErrorKind::ShapeMismatch, "bad representation or class index at " + std::to_string(i));
        }
        for (std::size_t d = 0; d < dim; ++d) {
            sums[c][d] += representations[i][d];
        }
        ++counts[c];
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (counts[c] == 0) {
            throw Error(ErrorKind::EmptyClass, "class '" + labels.at(c) + "' has no support records");
        }
        auto& v = sums[c];
        for (double& x : v) {
            x /= static_cast<double>(counts[c]);
        }
        const double norm = l2_norm(v);
        if (norm < 1e-12) {
            throw Error(ErrorKind::EmptyPrototype, "class '" + labels.at(c) + "' has a zero mean representation");
        }
        for (double& x : v) {
            x /= norm;
        }
        out.vectors.push_back(std::move(v));
    }
    return out;
}

Prediction predict_representation(std::span<const double> representation, const Prototypes& prototypes) {
    if (prototypes.vectors.empty()) {
        throw Error(ErrorKind::EmptyClass, "no prototypes to predict against");
    }
    Prediction p;
    p.scores.reserve(prototypes.vectors.size());
    for (std::size_t c = 0; c < prototypes.vectors.size(); ++c) {
        p.scores.push_back(std::clamp(cosine(representation, prototypes.vectors[c]), -1.0, 1.0));
        if (p.scores[c] > p.scores[p.class_index]) {
            p.class_index = c;
        }
    }
    p.label = prototypes.labels.at(p.class_index);
    return p;
}

ConfusionMatrix::ConfusionMatrix(LabelSet labels)
    : m_labels(std::move(labels)), m_counts(m_labels.size() * m_labels.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t count) {
    if (truth >= size() || predicted >= size()) {
        throw Error(ErrorKind::UnknownLabel, "class index outside the confusion matrix");
    }
    m_counts[truth * size() + predicted] += count;
}

std::size_t ConfusionMatrix::total() const noexcept {
    std::size_t t = 0;
    for (auto c : m_counts) {
        t += c;
    }
    return t;
}

std::size_t ConfusionMatrix::trace() const noexcept {
    std::size_t t = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        t += at(i, i);
    }
    return t;
}

ConfusionMatrix ConfusionMatrix::from_rows(LabelSet labels, const std::vector<std::vector<std::size_t>>& rows) {
    ConfusionMatrix cm(std::move(labels));
    if (rows.size() != cm.size()) {
        throw Error(ErrorKind::ShapeMismatch, "confusion rows do not match the label count");
    }
    for (std::size_t t = 0; t < rows.size(); ++t) {
        if (rows[t].size() != cm.size()) {
            throw Error(ErrorKind::ShapeMismatch, "confusion row " + std::to_string(t) + " has wrong length");
        }
        for (std::size_t p = 0; p < rows[t].size(); ++p) {
            cm.add(t, p, rows[t][p]);
        }
    }
    return cm;
}

ConfusionMatrix confusion(const std::vector<std::string>& predictions,
                          const std::vector<std::string>& gold,
                          const LabelSet& labels) {
    if (predictions.size() != gold.size()) {
        throw Error(ErrorKind::ShapeMismatch, "predictions and gold labels differ in length");
    }
    ConfusionMatrix cm(labels);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto t = labels.index_of(gold[i]);
        const auto p = labels.index_of(predictions[i]);
        if (!t || !p) {
            throw Error(ErrorKind::UnknownLabel, "item " + std::to_string(i) + " has a label outside the label set");
        }
        cm.add(*t, *p);
    }
    return cm;
}

std::string_view to_string(Averaging averaging) noexcept {
    return averaging == Averaging::Macro ? "macro" : "weighted";
}

std::optional<Averaging> parse_averaging(std::string_view name) noexcept {
    if (name == "macro") return Averaging::Macro;
    if (name == "weighted") return Averaging::Weighted;
    return std::nullopt;
}

EvalReport metrics(const ConfusionMatrix& cm, Averaging averaging) {
    const std::size_t total = cm.total();
    if (total == 0) {
        throw Error(ErrorKind::EmptyMatrix, "confusion matrix holds no predictions");
    }
    EvalReport report;
    report.averaging = averaging;
    report.total = total;
    report.correct = cm.trace();
    report.accuracy = static_cast<double>(report.correct) / static_cast<double>(total);
    report.confusion = cm;

    const std::size_t n = cm.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t predicted = 0;
        std::size_t actual = 0;
        for (std::size_t k = 0; k < n; ++k) {
            predicted += cm.at(k, c);
            actual += cm.at(c, k);
        }
        const auto tp = static_cast<double>(cm.at(c, c));
        ClassMetrics m;
        m.label = cm.labels().at(c);
        m.support = actual;
        m.degenerate = predicted == 0 || actual == 0;
        m.precision = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
        m.recall = actual == 0 ? 0.0 : tp / static_cast<double>(actual);
        m.f1 = (m.precision + m.recall) == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        report.per_class.push_back(std::move(m));
    }

    for (const auto& m : report.per_class) {
        const double w = averaging == Averaging::Macro ? 1.0 / static_cast<double>(n)
                                                       : static_cast<double>(m.support) / static_cast<double>(total);
        report.precision += w * m.precision;
        report.recall += w * m.recall;
        report.f1 += w * m.f1;
    }
    return report;
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "eval_report";
    j["averaging"] = to_string(report.averaging);
    j["precision"] = report.precision;
    j["recall"] = report.recall;
    j["f1"] = report.f1;
    j["accuracy"] = report.accuracy;
    j["total"] = report.total;
    j["correct"] = report.correct;
    auto& classes = j["per_class"] = nlohmann::json::array();
    for (const auto& m : report.per_class) {
        classes.push_back({{"label", m.label},
                           {"precision", m.precision},
                           {"recall", m.recall},
                           {"f1", m.f1},
                           {"support", m.support},
                           {"degenerate", m.degenerate}});
    }
    const auto& cm = report.confusion;
    j["confusion"]["labels"] = cm.labels().classes();
    auto& rows = j["confusion"]["rows"] = nlohmann::json::array();
    for (std::size_t t = 0; t < cm.size(); ++t) {
        std::vector<std::size_t> row;
        for (std::size_t p = 0; p < cm.size(); ++p) {
            row.push_back(cm.at(t, p));
        }
        rows.push_back(row);
    }
    return j;
}

std::string format_table(const EvalReport& report) {
    std::size_t width = 9;
    for (const auto& m : report.per_class) {
        width = std::max(width, m.label.size());
    }
    std::ostringstream os;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-*s %9s %9s %9s %8s\n", static_cast<int>(width), "class", "precision",
                  "recall", "f1", "support");
    os << buf;
    for (const auto& m : report.per_class) {
        std::snprintf(buf, sizeof(buf), "%-*s %9.4f %9.4f %9.4f %8zu%s\n", static_cast<int>(width), m.label.c_str(),
                      m.precision, m.recall, m.f1, m.support, m.degenerate ? " *" : "");
        os << buf;
    }
    const std::string avg(to_string(report.averaging));
    std::snprintf(buf, sizeof(buf), "%-*s %9.4f %9.4f %9.4f %8zu\n", static_cast<int>(width), avg.c_str(),
                  report.precision, report.recall, report.f1, report.total);
    os << buf;
    std::snprintf(buf, sizeof(buf), "accuracy %.4f (%zu/%zu)\n", report.accuracy, report.correct, report.total);
    os << buf;
    return os.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream os;
    csv::Row header{"true\\predicted"};
    for (const auto& c : cm.labels().classes()) {
        header.push_back(c);
    }
    csv::write_row(os, header);
    for (std::size_t t = 0; t < cm.size(); ++t) {
        csv::Row row{cm.labels().at(t)};
        for (std::size_t p = 0; p < cm.size(); ++p) {
            row.push_back(std::to_string(cm.at(t, p)));
        }
        csv::write_row(os, row);
    }
    return os.str();
}

} // namespace commitcl
