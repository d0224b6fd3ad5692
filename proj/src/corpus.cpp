#include "commitcl/corpus.hpp"

#include "commitcl/csv.hpp"
#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace commitcl {

LabelSet::LabelSet(std::vector<std::string> classes) {
    for (auto& c : classes) {
        if (contains(c)) {
            throw Error(ErrorKind::InvalidConfig, "duplicate class '" + c + "' in label set");
        }
        m_classes.push_back(std::move(c));
    }
}

std::size_t LabelSet::add(const std::string& label) {
    if (auto idx = index_of(label)) {
        return *idx;
    }
    m_classes.push_back(label);
    return m_classes.size() - 1;
}

std::optional<std::size_t> LabelSet::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < m_classes.size(); ++i) {
        if (m_classes[i] == label) {
            return i;
        }
    }
    return std::nullopt;
}

LabelSet observed_labels(const std::vector<CommitRecord>& records) {
    LabelSet labels;
    for (const auto& r : records) {
        if (r.label) {
            labels.add(*r.label);
        }
    }
    return labels;
}

Corpus::Corpus(std::vector<CommitRecord> records, LabelSet labels)
    : m_records(std::move(records)), m_labels(std::move(labels)) {
    m_index.reserve(m_records.size());
    for (std::size_t i = 0; i < m_records.size(); ++i) {
        const auto& r = m_records[i];
        if (r.id.empty()) {
            throw Error(ErrorKind::InvalidConfig, "record " + std::to_string(i) + " has an empty id");
        }
        if (!m_index.emplace(r.id, i).second) {
            throw Error(ErrorKind::DuplicateId, "id '" + r.id + "' appears more than once");
        }
        if (const auto* vec = std::get_if<std::vector<double>>(&r.code_change)) {
            if (!std::all_of(vec->begin(), vec->end(), [](double x) { return std::isfinite(x); })) {
                throw Error(ErrorKind::NonFiniteInput, "code change of '" + r.id + "' has non-finite entries");
            }
        }
        if (r.label) {
            m_labels.add(*r.label);
        }
    }
}

const CommitRecord& Corpus::get(std::string_view id) const {
    auto it = m_index.find(std::string(id));
    if (it == m_index.end()) {
        throw Error(ErrorKind::IndexOutOfRange, "no record with id '" + std::string(id) + "'");
    }
    return m_records[it->second];
}

bool Corpus::contains(std::string_view id) const {
    return m_index.contains(std::string(id));
}

std::vector<CommitRecord> Corpus::select(const std::vector<std::string>& ids) const {
    std::vector<CommitRecord> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        out.push_back(get(id));
    }
    return out;
}

std::vector<std::string> Corpus::ids() const {
    std::vector<std::string> out;
    out.reserve(m_records.size());
    for (const auto& r : m_records) {
        out.push_back(r.id);
    }
    return out;
}

std::vector<std::size_t> Corpus::class_counts() const {
    std::vector<std::size_t> counts(m_labels.size(), 0);
    for (const auto& r : m_records) {
        if (r.label) {
            ++counts[*m_labels.index_of(*r.label)];
        }
    }
    return counts;
}

std::string_view to_string(Schema schema) noexcept {
    switch (schema) {
    case Schema::ThreeWay: return "three_way";
    case Schema::TwoWay: return "two_way";
    case Schema::Generic: return "generic";
    }
    return "generic";
}

std::optional<Schema> parse_schema(std::string_view name) noexcept {
    if (name == "three_way") return Schema::ThreeWay;
    if (name == "two_way") return Schema::TwoWay;
    if (name == "generic") return Schema::Generic;
    return std::nullopt;
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) {
        return std::nullopt;
    }
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (*begin == '+') {
        ++begin;
    }
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        return std::nullopt;
    }
    return value;
}

struct ColumnMap {
    std::vector<std::string> header;

    std::optional<std::size_t> find(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    std::size_t require(std::string_view name) const {
        if (auto idx = find(name)) {
            return *idx;
        }
        throw Error(ErrorKind::MissingColumn, "required column '" + std::string(name) + "' not found in header");
    }
};

std::string strip_bom(std::string s) {
    if (s.rfind("\xEF\xBB\xBF", 0) == 0) {
        s.erase(0, 3);
    }
    return s;
}

std::string map_label(Schema schema, const std::string& token, std::size_t row_number) {
    const std::string t = trim(token);
    if (schema == Schema::ThreeWay) {
        if (t == "p") return "Perfective";
        if (t == "c") return "Corrective";
        if (t == "a") return "Adaptive";
    } else if (schema == Schema::TwoWay) {
        if (t == "1") return "Positive";
        if (t == "0") return "Negative";
    }
    throw Error(ErrorKind::UnknownLabelToken,
                "row " + std::to_string(row_number) + ": unknown label token '" + t + "'");
}

} // namespace

Corpus parse_dataset(std::string_view text, Schema schema) {
    auto rows = csv::parse(text);
    if (rows.empty()) {
        throw Error(ErrorKind::MissingColumn, "file has no header row");
    }
    ColumnMap cols;
    for (auto& h : rows.front()) {
        cols.header.push_back(trim(strip_bom(h)));
    }

    std::size_t id_col = 0;
    std::size_t msg_col = 0;
    std::size_t label_col = 0;
    std::optional<std::size_t> text_cc_col;
    std::vector<std::size_t> known;
    switch (schema) {
    case Schema::ThreeWay:
        id_col = cols.require("Commit_ID");
        known.push_back(cols.require("Project"));
        msg_col = cols.require("Comment");
        label_col = cols.require("3_labels");
        break;
    case Schema::TwoWay:
        id_col = cols.require("Github");
        msg_col = cols.require("Message");
        text_cc_col = cols.require("Diff");
        label_col = cols.require("Label");
        break;
    case Schema::Generic:
        id_col = cols.require("id");
        msg_col = cols.require("message");
        label_col = cols.require("label");
        text_cc_col = cols.find("code_change");
        break;
    }
    known.insert(known.end(), {id_col, msg_col, label_col});
    if (text_cc_col) {
        known.push_back(*text_cc_col);
    }
    std::vector<std::size_t> numeric_cols;
    if (schema != Schema::TwoWay) {
        for (std::size_t i = 0; i < cols.header.size(); ++i) {
            if (std::find(known.begin(), known.end(), i) == known.end()) {
                numeric_cols.push_back(i);
            }
        }
    }

    std::vector<CommitRecord> records;
    LabelSet labels;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        const std::size_t row_number = r + 1;  // 1-based file row, header is row 1
        if (row.size() == 1 && row[0].empty()) {
            continue;
        }
        if (row.size() != cols.header.size()) {
            throw Error(ErrorKind::MalformedLine, "row " + std::to_string(row_number) + ": expected " +
                                                      std::to_string(cols.header.size()) + " fields, got " +
                                                      std::to_string(row.size()));
        }
        CommitRecord rec;
        rec.id = trim(row[id_col]);
        rec.message = row[msg_col];
        const std::string label_token = trim(row[label_col]);
        if (schema == Schema::Generic) {
            if (!label_token.empty()) {
                rec.label = label_token;
            }
        } else {
            rec.label = map_label(schema, label_token, row_number);
        }
        if (text_cc_col && !row[*text_cc_col].empty()) {
            rec.code_change = row[*text_cc_col];
        }
        if (!numeric_cols.empty()) {
            std::vector<double> vec;
            vec.reserve(numeric_cols.size());
            for (auto c : numeric_cols) {
                auto value = parse_number(row[c]);
                if (!value) {
                    throw Error(ErrorKind::MalformedLine, "row " + std::to_string(row_number) + ": column '" +
                                                              cols.header[c] + "' is not numeric");
                }
                vec.push_back(*value);
            }
            if (rec.has_code_change()) {
                throw Error(ErrorKind::MalformedLine, "row " + std::to_string(row_number) +
                                                          ": both text and numeric code change present");
            }
            rec.code_change = std::move(vec);
        }
        if (rec.label) {
            labels.add(*rec.label);
        }
        records.push_back(std::move(rec));
    }
    return Corpus(std::move(records), std::move(labels));
}

Corpus load_dataset(const std::filesystem::path& path, Schema schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_dataset(text, schema);
}

void write_generic(const Corpus& corpus, std::ostream& out) {
    std::size_t cc_dim = 0;
    bool any_text = false;
    for (const auto& r : corpus.records()) {
        if (const auto* vec = std::get_if<std::vector<double>>(&r.code_change)) {
            cc_dim = std::max(cc_dim, vec->size());
        } else if (std::holds_alternative<std::string>(r.code_change)) {
            any_text = true;
        }
    }
    csv::Row header{"id", "message", "label"};
    if (any_text) {
        header.push_back("code_change");
    }
    for (std::size_t d = 0; d < cc_dim; ++d) {
        header.push_back("cc_" + std::to_string(d));
    }
    csv::write_row(out, header);

    char buf[32];
    for (const auto& r : corpus.records()) {
        csv::Row row{r.id, r.message, r.label.value_or("")};
        if (any_text) {
            const auto* text = std::get_if<std::string>(&r.code_change);
            row.push_back(text ? *text : std::string());
        }
        if (cc_dim > 0) {
            const auto* vec = std::get_if<std::vector<double>>(&r.code_change);
            for (std::size_t d = 0; d < cc_dim; ++d) {
                const double v = (vec && d < vec->size()) ? (*vec)[d] : 0.0;
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
                row.emplace_back(buf, ptr);
            }
        }
        csv::write_row(out, row);
    }
}

CorpusSplit split_corpus(const Corpus& corpus, const SplitFractions& fractions, std::uint64_t seed) {
    const double parts[] = {fractions.train, fractions.validation, fractions.test};
    for (double f : parts) {
        if (!std::isfinite(f) || f < 0.0) {
            throw Error(ErrorKind::BadFractions, "fractions must be finite and non-negative");
        }
    }
    if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
        throw Error(ErrorKind::BadFractions, "fractions must sum to 1");
    }

    std::vector<std::string> ids = corpus.ids();
    Rng rng(mix_seed(seed, 0x5b1f));
    shuffle(std::span<std::string>(ids), rng);

    const auto n = static_cast<double>(ids.size());
    // the epsilon absorbs representation error such as 1000 * 0.15 = 149.999...
    const auto n_val = static_cast<std::size_t>(std::floor(n * fractions.validation + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * fractions.test + 1e-9));
    const std::size_t n_train = ids.size() - n_val - n_test;

    CorpusSplit split;
    split.fractions = fractions;
    split.seed = seed;
    split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.validation.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                            ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), ids.end());
    return split;
}

Episode sample_episode(const Corpus& corpus,
                       const std::vector<std::string>& train_ids,
                       std::size_t way,
                       std::size_t shots,
                       const std::optional<std::vector<std::string>>& eval_pool,
                       std::uint64_t seed) {
    const LabelSet& labels = corpus.labels();
    std::vector<std::vector<std::string>> by_class(labels.size());
    for (const auto& id : train_ids) {
        const auto& rec = corpus.get(id);
        if (rec.label) {
            by_class[*labels.index_of(*rec.label)].push_back(id);
        }
    }

    std::vector<std::size_t> present;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (!by_class[c].empty()) {
            present.push_back(c);
        }
    }
    if (way == 0 || way > present.size()) {
        throw Error(ErrorKind::InsufficientClassSupport,
                    "requested " + std::to_string(way) + "-way episode but training ids cover " +
                        std::to_string(present.size()) + " classes");
    }

    Rng rng(mix_seed(seed, 0xe915));
    std::vector<std::size_t> chosen = present;
    if (way < present.size()) {
        shuffle(std::span<std::size_t>(chosen), rng);
        chosen.resize(way);
        std::sort(chosen.begin(), chosen.end());
    }

    Episode ep;
    ep.way = way;
    ep.shots = shots;
    ep.seed = seed;
    for (auto c : chosen) {
        auto& pool = by_class[c];
        if (pool.size() < shots) {
            throw Error(ErrorKind::InsufficientClassSupport,
                        "class '" + labels.at(c) + "' has " + std::to_string(pool.size()) +
                            " training instances, fewer than " + std::to_string(shots) + " shots");
        }
        ep.classes.push_back(labels.at(c));
        // partial Fisher-Yates: first `shots` slots become the draw
        Rng class_rng(mix_seed(seed, 0x1000 + c));
        for (std::size_t k = 0; k < shots; ++k) {
            const auto j = k + static_cast<std::size_t>(uniform_index(class_rng, pool.size() - k));
            std::swap(pool[k], pool[j]);
            ep.support.push_back(pool[k]);
        }
    }

    const std::unordered_set<std::string> support_set(ep.support.begin(), ep.support.end());
    const std::vector<std::string> pool_ids = eval_pool ? *eval_pool : corpus.ids();
    for (const auto& id : pool_ids) {
        if (support_set.contains(id)) {
            continue;
        }
        const auto& rec = corpus.get(id);
        if (rec.label && std::find(ep.classes.begin(), ep.classes.end(), *rec.label) != ep.classes.end()) {
            ep.query.push_back(id);
        }
    }
    return ep;
}

} // namespace commitcl
