#include "commitcl/encoder.hpp"

#include "commitcl/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace commitcl {

std::string_view to_string(FeatureTag tag) noexcept {
    return tag == FeatureTag::Msg ? "msg" : "cc";
}

std::optional<FeatureTag> parse_feature_tag(std::string_view name) noexcept {
    if (name == "msg") return FeatureTag::Msg;
    if (name == "cc") return FeatureTag::Cc;
    return std::nullopt;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t hash = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 1099511628211ULL;
    }
    return hash;
}

void HashingEncoderConfig::validate() const {
    if (dimension < 2) {
        throw Error(ErrorKind::InvalidConfig, "hashing dimension must be at least 2");
    }
    if (ngram_min < 1 || ngram_min > ngram_max) {
        throw Error(ErrorKind::InvalidConfig, "require 1 <= ngram_min <= ngram_max");
    }
}

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    }
    return out;
}

namespace {

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> code_point_bounds(std::string_view s) {
    std::vector<std::size_t> bounds;
    bounds.reserve(s.size() + 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
            bounds.push_back(i);
        }
    }
    bounds.push_back(s.size());
    return bounds;
}

} // namespace

FeatureEmbedding hash_encode(std::string_view text, const HashingEncoderConfig& config) {
    config.validate();
    FeatureEmbedding out;
    out.vector.assign(config.dimension, 0.0);
    const std::string norm = normalize_text(text);
    const auto bounds = code_point_bounds(norm);
    const std::size_t n_chars = bounds.size() - 1;
    for (std::size_t start = 0; start < n_chars; ++start) {
        for (std::size_t n = config.ngram_min; n <= config.ngram_max && start + n <= n_chars; ++n) {
            const std::string_view gram(norm.data() + bounds[start], bounds[start + n] - bounds[start]);
            const std::uint64_t h = fnv1a64(gram);
            const double sign = (config.signed_hash && (h >> 63) != 0) ? -1.0 : 1.0;
            out.vector[h % config.dimension] += sign;
        }
    }
    return out;
}

HashingEncoder::HashingEncoder(HashingEncoderConfig config) : m_config(config) {
    m_config.validate();
}

std::string HashingEncoder::config_description() const {
    std::ostringstream os;
    os << "hashing-fnv1a64;dim=" << m_config.dimension << ";ngram=" << m_config.ngram_min << "-"
       << m_config.ngram_max << ";signed=" << (m_config.signed_hash ? 1 : 0);
    return os.str();
}

std::vector<double> HashingEncoder::encode(std::string_view, std::string_view text) const {
    return hash_encode(text, m_config).vector;
}

std::vector<double> normalize_lp(std::span<const double> h, double p, double eps) {
    if (!(p >= 1.0) || !(eps > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "normalize_lp requires p >= 1 and eps > 0");
    }
    double norm = 0.0;
    if (p == 2.0) {
        // scaled accumulation avoids overflow for large entries
        double scale = 0.0;
        for (double x : h) {
            if (!std::isfinite(x)) {
                throw Error(ErrorKind::NonFiniteInput, "embedding has non-finite entries");
            }
            scale = std::max(scale, std::abs(x));
        }
        if (scale > 0.0) {
            double sum = 0.0;
            for (double x : h) {
                const double r = x / scale;
                sum += r * r;
            }
            norm = scale * std::sqrt(sum);
        }
    } else {
        double sum = 0.0;
        for (double x : h) {
            if (!std::isfinite(x)) {
                throw Error(ErrorKind::NonFiniteInput, "embedding has non-finite entries");
            }
            sum += std::pow(std::abs(x), p);
        }
        norm = std::pow(sum, 1.0 / p);
    }
    const double denom = std::max(norm, eps);
    std::vector<double> out(h.begin(), h.end());
    for (double& x : out) {
        x /= denom;
    }
    return out;
}

FeatureEmbedding normalize_lp(const FeatureEmbedding& h, double p, double eps) {
    return FeatureEmbedding{normalize_lp(std::span<const double>(h.vector), p, eps), h.tag, true};
}

void EmbeddingStore::insert(const std::string& id, FeatureTag tag, std::vector<double> vector) {
    auto& dim = m_dims[static_cast<int>(tag)];
    if (dim && *dim != vector.size()) {
        throw Error(ErrorKind::RaggedDimensions, "feature '" + std::string(to_string(tag)) + "' has vectors of length " +
                                                     std::to_string(*dim) + " and " + std::to_string(vector.size()));
    }
    for (double x : vector) {
        if (!std::isfinite(x)) {
            throw Error(ErrorKind::NonFiniteInput, "vector for '" + id + "' has non-finite entries");
        }
    }
    if (!m_vectors.emplace(std::make_pair(id, tag), std::move(vector)).second) {
        throw Error(ErrorKind::DuplicateKey, "duplicate key (" + id + ", " + std::string(to_string(tag)) + ")");
    }
    dim = m_vectors.at({id, tag}).size();
}

const std::vector<double>* EmbeddingStore::find(std::string_view id, FeatureTag tag) const {
    auto it = m_vectors.find(std::make_pair(std::string(id), tag));
    return it == m_vectors.end() ? nullptr : &it->second;
}

std::optional<std::size_t> EmbeddingStore::dimension(FeatureTag tag) const {
    return m_dims[static_cast<int>(tag)];
}

std::string EmbeddingStore::digest() const {
    std::uint64_t h = fnv1a64("embedding-store");
    char buf[32];
    auto feed = [&h](std::string_view bytes) {
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [key, vec] : m_vectors) {
        feed(key.first);
        feed(to_string(key.second));
        for (double x : vec) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
            feed(std::string_view(buf, static_cast<std::size_t>(ptr - buf)));
        }
    }
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void EmbeddingStore::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write '" + path.string() + "'");
    }
    for (const auto& [key, vec] : m_vectors) {
        nlohmann::json line;
        line["id"] = key.first;
        line["feature"] = to_string(key.second);
        line["vector"] = vec;
        out << line.dump() << '\n';
    }
}

EmbeddingStore parse_precomputed(std::string_view text) {
    EmbeddingStore store;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto next = text.find('\n', pos);
        if (next == std::string_view::npos) {
            next = text.size();
        }
        std::string_view line = text.substr(pos, next - pos);
        pos = next + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string_view::npos || line[first] == '#') {
            continue;
        }
        auto malformed = [line_no](const std::string& why) {
            return Error(ErrorKind::MalformedLine, "line " + std::to_string(line_no) + ": " + why);
        };
        nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            throw malformed("not a JSON object");
        }
        if (!obj.contains("id") || !obj["id"].is_string()) {
            throw malformed("missing string field 'id'");
        }
        if (!obj.contains("feature") || !obj["feature"].is_string()) {
            throw malformed("missing string field 'feature'");
        }
        const auto tag = parse_feature_tag(obj["feature"].get<std::string>());
        if (!tag) {
            throw malformed("feature must be \"msg\" or \"cc\"");
        }
        if (!obj.contains("vector") || !obj["vector"].is_array()) {
            throw malformed("missing array field 'vector'");
        }
        std::vector<double> vec;
        vec.reserve(obj["vector"].size());
        for (const auto& x : obj["vector"]) {
            if (!x.is_number()) {
                throw malformed("vector entries must be numbers");
            }
            vec.push_back(x.get<double>());
        }
        store.insert(obj["id"].get<std::string>(), *tag, std::move(vec));
    }
    return store;
}

EmbeddingStore load_precomputed(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_precomputed(text);
}

PrecomputedEncoder::PrecomputedEncoder(std::shared_ptr<const EmbeddingStore> store, FeatureTag tag)
    : m_store(std::move(store)), m_tag(tag) {
    const auto dim = m_store->dimension(tag);
    if (!dim) {
        throw Error(ErrorKind::MissingEmbedding,
                    "embedding store has no vectors for feature '" + std::string(to_string(tag)) + "'");
    }
    m_dimension = *dim;
}

std::string PrecomputedEncoder::config_description() const {
    return "precomputed;feature=" + std::string(to_string(m_tag)) + ";dim=" + std::to_string(m_dimension) +
           ";store=" + m_store->digest();
}

std::vector<double> PrecomputedEncoder::encode(std::string_view record_id, std::string_view) const {
    const auto* vec = m_store->find(record_id, m_tag);
    if (!vec) {
        throw Error(ErrorKind::MissingEmbedding, "no '" + std::string(to_string(m_tag)) + "' vector for id '" +
                                                     std::string(record_id) + "'");
    }
    return *vec;
}

std::size_t EncoderSuite::embedding_dim() const {
    std::size_t dim = msg->dimension();
    if (cc_text) {
        dim += cc_text->dimension();
    } else if (cc_vector_dim) {
        dim += *cc_vector_dim;
    }
    return dim;
}

std::string EncoderSuite::digest() const {
    std::ostringstream os;
    os.precision(17);
    os << "msg=" << msg->config_description();
    if (cc_text) {
        os << "|cc=" << cc_text->config_description();
    } else if (cc_vector_dim) {
        os << "|cc=vector;dim=" << *cc_vector_dim;
    }
    os << "|p=" << norm.p << "|eps=" << norm.eps;
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(os.str())));
    return buf;
}

std::string_view to_string(EncoderKind kind) noexcept {
    return kind == EncoderKind::Hashing ? "hashing" : "precomputed";
}

std::string_view to_string(CcMode mode) noexcept {
    switch (mode) {
    case CcMode::None: return "none";
    case CcMode::Text: return "text";
    case CcMode::Vector: return "vector";
    }
    return "none";
}

std::optional<CcMode> parse_cc_mode(std::string_view name) noexcept {
    if (name == "none") return CcMode::None;
    if (name == "text") return CcMode::Text;
    if (name == "vector") return CcMode::Vector;
    return std::nullopt;
}

void infer_code_change(EncoderSpec& spec, const std::vector<CommitRecord>& records) {
    std::optional<std::size_t> dim;
    bool any_text = false;
    for (const auto& r : records) {
        if (const auto* vec = std::get_if<std::vector<double>>(&r.code_change)) {
            if (dim && *dim != vec->size()) {
                throw Error(ErrorKind::DimensionMismatch, "numeric code changes have lengths " +
                                                              std::to_string(*dim) + " and " +
                                                              std::to_string(vec->size()));
            }
            dim = vec->size();
        } else if (std::holds_alternative<std::string>(r.code_change)) {
            any_text = true;
        }
    }
    if (dim && any_text) {
        throw Error(ErrorKind::DimensionMismatch, "corpus mixes numeric and text code changes");
    }
    spec.cc_mode = dim ? CcMode::Vector : (any_text ? CcMode::Text : CcMode::None);
    spec.cc_dim = dim.value_or(0);
}

EncoderSuite build_encoder_suite(const EncoderSpec& spec, std::shared_ptr<const EmbeddingStore> store) {
    EncoderSuite suite;
    suite.spec = spec;
    suite.norm = spec.norm;
    if (spec.kind == EncoderKind::Hashing) {
        suite.msg = std::make_shared<HashingEncoder>(spec.hashing);
        if (spec.cc_mode == CcMode::Text) {
            suite.cc_text = std::make_shared<HashingEncoder>(spec.hashing);
        }
    } else {
        if (!store) {
            throw Error(ErrorKind::MissingEmbedding, "precomputed encoder requires an embedding store");
        }
        suite.msg = std::make_shared<PrecomputedEncoder>(store, FeatureTag::Msg);
        if (spec.cc_mode == CcMode::Text) {
            suite.cc_text = std::make_shared<PrecomputedEncoder>(store, FeatureTag::Cc);
        }
    }
    if (spec.cc_mode == CcMode::Vector) {
        if (spec.cc_dim == 0) {
            throw Error(ErrorKind::InvalidConfig, "vector code-change mode needs a positive cc_dim");
        }
        suite.cc_vector_dim = spec.cc_dim;
    }
    return suite;
}

CommitEmbedding encode_commit(const CommitRecord& record, const EncoderSuite& encoders) {
    CommitEmbedding out;
    auto msg = normalize_lp(encoders.msg->encode(record.id, record.message), encoders.norm.p, encoders.norm.eps);
    out.layout.push_back({FeatureTag::Msg, 0, msg.size()});
    out.vector = std::move(msg);
    if (!encoders.has_cc_block()) {
        return out;
    }

    std::vector<double> cc;
    if (const auto* vec = std::get_if<std::vector<double>>(&record.code_change)) {
        if (!encoders.cc_vector_dim || vec->size() != *encoders.cc_vector_dim) {
            throw Error(ErrorKind::DimensionMismatch,
                        "code change of '" + record.id + "' has length " + std::to_string(vec->size()) +
                            ", expected " + (encoders.cc_vector_dim ? std::to_string(*encoders.cc_vector_dim) : "none"));
        }
        cc = *vec;
    } else if (const auto* text = std::get_if<std::string>(&record.code_change)) {
        if (!encoders.cc_text) {
            throw Error(ErrorKind::DimensionMismatch,
                        "record '" + record.id + "' carries diff text but no code-change text encoder is configured");
        }
        cc = encoders.cc_text->encode(record.id, *text);
    } else {
        cc.assign(encoders.cc_text ? encoders.cc_text->dimension() : *encoders.cc_vector_dim, 0.0);
    }
    cc = normalize_lp(std::span<const double>(cc), encoders.norm.p, encoders.norm.eps);
    out.layout.push_back({FeatureTag::Cc, out.vector.size(), cc.size()});
    out.vector.insert(out.vector.end(), cc.begin(), cc.end());
    return out;
}

} // namespace commitcl
