#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace commitcl {

/// Code-change feature of a commit: absent, raw diff text, or a numeric vector.
using CodeChange = std::variant<std::monostate, std::string, std::vector<double>>;

struct CommitRecord {
    std::string id;
    std::string message;
    CodeChange code_change;
    std::optional<std::string> label;

    bool has_code_change() const noexcept {
        return !std::holds_alternative<std::monostate>(code_change);
    }
};

/// Ordered class identifiers. The order is the canonical axis order for
/// confusion matrices and prototype tables.
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> classes);

    /// Appends `label` if unseen; returns its index.
    std::size_t add(const std::string& label);
    std::optional<std::size_t> index_of(std::string_view label) const;
    bool contains(std::string_view label) const { return index_of(label).has_value(); }

    const std::vector<std::string>& classes() const noexcept { return m_classes; }
    const std::string& at(std::size_t index) const { return m_classes.at(index); }
    std::size_t size() const noexcept { return m_classes.size(); }
    bool empty() const noexcept { return m_classes.empty(); }

    friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.m_classes == b.m_classes; }

private:
    std::vector<std::string> m_classes;
};

/// Labels present in `records`, in first-occurrence order.
LabelSet observed_labels(const std::vector<CommitRecord>& records);

class Corpus {
public:
    Corpus() = default;
    /// Validates id uniqueness, finiteness of numeric code changes and label
    /// membership. Labels absent from `labels` are appended to it.
    Corpus(std::vector<CommitRecord> records, LabelSet labels);

    const std::vector<CommitRecord>& records() const noexcept { return m_records; }
    const LabelSet& labels() const noexcept { return m_labels; }
    std::size_t size() const noexcept { return m_records.size(); }

    const CommitRecord& get(std::string_view id) const;
    bool contains(std::string_view id) const;

    /// Records for `ids`, in the given order.
    std::vector<CommitRecord> select(const std::vector<std::string>& ids) const;
    std::vector<std::string> ids() const;

    /// Count per class in canonical order.
    std::vector<std::size_t> class_counts() const;

private:
    std::vector<CommitRecord> m_records;
    LabelSet m_labels;
    std::unordered_map<std::string, std::size_t> m_index;
};

enum class Schema { ThreeWay, TwoWay, Generic };

std::string_view to_string(Schema schema) noexcept;
std::optional<Schema> parse_schema(std::string_view name) noexcept;

/// Loads a CSV file in one of the supported schemas.
///
/// three_way: Commit_ID, Project, Comment, 3_labels (tokens p/c/a). Any further
///            columns must be numeric and become a pre-vectorized code change.
/// two_way:   Github, Message, Diff, Label (tokens 1/0). Diff text is the code change.
/// generic:   id, message, label, optional code_change text column; any further
///            columns are numeric code-change components.
Corpus load_dataset(const std::filesystem::path& path, Schema schema);
Corpus parse_dataset(std::string_view text, Schema schema);

/// Writes the corpus in the generic schema; numeric code changes are spread
/// over cc_0..cc_{d-1} columns.
void write_generic(const Corpus& corpus, std::ostream& out);

struct SplitFractions {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

struct CorpusSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    SplitFractions fractions;
    std::uint64_t seed = 0;
};

/// Seeded shuffle, then floor-allocated validation and test sizes; the
/// remainder goes to train.
CorpusSplit split_corpus(const Corpus& corpus, const SplitFractions& fractions, std::uint64_t seed);

struct Episode {
    std::size_t way = 0;
    std::size_t shots = 0;
    std::vector<std::string> classes;  // selected classes, canonical order
    std::vector<std::string> support;
    std::vector<std::string> query;
    std::uint64_t seed = 0;
};

/// Samples an N-way K-shot episode from `train_ids`.
///
/// When `way` is smaller than the number of classes present, the classes are
/// drawn by seeded sampling. The query set is `eval_pool` (default: every
/// corpus id) minus the support, restricted to labeled records of the
/// selected classes.
Episode sample_episode(const Corpus& corpus,
                       const std::vector<std::string>& train_ids,
                       std::size_t way,
                       std::size_t shots,
                       const std::optional<std::vector<std::string>>& eval_pool,
                       std::uint64_t seed);

} // namespace commitcl
