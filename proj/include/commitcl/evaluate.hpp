#pragma once

#include "commitcl/corpus.hpp"
#include "commitcl/projection.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace commitcl {

/// Where labels are read off: the trained projection z, or the frozen encoder
/// representation H.
enum class InferenceSpace { Projection, Encoder };

std::string_view to_string(InferenceSpace space) noexcept;
std::optional<InferenceSpace> parse_inference_space(std::string_view name) noexcept;

std::vector<double> represent(const ProjectionModel& model, std::span<const double> embedding, InferenceSpace space);

/// One unit vector per class in canonical label order.
struct Prototypes {
    LabelSet labels;
    InferenceSpace space = InferenceSpace::Projection;
    std::vector<std::vector<double>> vectors;

    friend bool operator==(const Prototypes&, const Prototypes&) = default;
};

/// L2-normalized class means. `class_of[i]` is the canonical class index of
/// `representations[i]`. Throws EmptyClass when a class has no member and
/// EmptyPrototype when a class mean is (numerically) zero.
Prototypes prototypes_from_representations(const std::vector<std::vector<double>>& representations,
                                           const std::vector<std::size_t>& class_of,
                                           const LabelSet& labels,
                                           InferenceSpace space);

struct Prediction {
    std::size_t class_index = 0;
    std::string label;
    std::vector<double> scores;  // cosine per class, canonical order
};

/// Nearest prototype by cosine; ties go to the earliest class.
Prediction predict_representation(std::span<const double> representation, const Prototypes& prototypes);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(LabelSet labels);

    void add(std::size_t truth, std::size_t predicted, std::size_t count = 1);
    std::size_t at(std::size_t truth, std::size_t predicted) const { return m_counts[truth * size() + predicted]; }
    std::size_t size() const noexcept { return m_labels.size(); }
    std::size_t total() const noexcept;
    std::size_t trace() const noexcept;
    const LabelSet& labels() const noexcept { return m_labels; }

    /// Rows are true classes; columns are predicted classes.
    static ConfusionMatrix from_rows(LabelSet labels, const std::vector<std::vector<std::size_t>>& rows);

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    LabelSet m_labels;
    std::vector<std::size_t> m_counts;
};

ConfusionMatrix confusion(const std::vector<std::string>& predictions,
                          const std::vector<std::string>& gold,
                          const LabelSet& labels);

enum class Averaging { Macro, Weighted };

std::string_view to_string(Averaging averaging) noexcept;
std::optional<Averaging> parse_averaging(std::string_view name) noexcept;

struct ClassMetrics {
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    /// Set when TP+FP = 0 or TP+FN = 0 and the affected ratio was defined as 0.
    bool degenerate = false;
};

struct EvalReport {
    std::vector<ClassMetrics> per_class;
    Averaging averaging = Averaging::Macro;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    std::size_t total = 0;
    std::size_t correct = 0;
    ConfusionMatrix confusion{LabelSet{}};
};

/// Per-class one-vs-rest precision, recall and F1, their average, and accuracy
/// = trace / total. Throws EmptyMatrix when the matrix holds no predictions.
EvalReport metrics(const ConfusionMatrix& cm, Averaging averaging = Averaging::Macro);

inline constexpr int kReportFormatVersion = 1;

nlohmann::json to_json(const EvalReport& report);
std::string format_table(const EvalReport& report);
std::string confusion_csv(const ConfusionMatrix& cm);

} // namespace commitcl
