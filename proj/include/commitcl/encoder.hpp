#pragma once

#include "commitcl/corpus.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace commitcl {

enum class FeatureTag { Msg, Cc };

std::string_view to_string(FeatureTag tag) noexcept;
std::optional<FeatureTag> parse_feature_tag(std::string_view name) noexcept;

struct FeatureEmbedding {
    std::vector<double> vector;
    FeatureTag tag = FeatureTag::Msg;
    bool normalized = false;
};

struct BlockLayout {
    FeatureTag tag;
    std::size_t offset;
    std::size_t length;

    friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

/// Concatenated representation: normalized msg block followed by the
/// normalized cc block, when one is configured.
struct CommitEmbedding {
    std::vector<double> vector;
    std::vector<BlockLayout> layout;
};

/// Frozen text-to-vector map for one feature.
class FeatureEncoder {
public:
    virtual ~FeatureEncoder() = default;

    virtual std::string identifier() const = 0;
    virtual std::size_t dimension() const = 0;
    /// Stable description of everything that influences the output.
    virtual std::string config_description() const = 0;
    /// Encodes `text`; `record_id` is used by lookup-based encoders.
    virtual std::vector<double> encode(std::string_view record_id, std::string_view text) const = 0;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

struct HashingEncoderConfig {
    std::size_t dimension = 256;
    std::size_t ngram_min = 3;
    std::size_t ngram_max = 5;
    bool signed_hash = true;

    void validate() const;
};

/// Lowercases ASCII letters, collapses whitespace runs to single spaces and
/// trims both ends.
std::string normalize_text(std::string_view text);

/// Signed character n-gram histogram. Characters are UTF-8 code points; each
/// n-gram is hashed over its UTF-8 bytes.
FeatureEmbedding hash_encode(std::string_view text, const HashingEncoderConfig& config);

class HashingEncoder final : public FeatureEncoder {
public:
    explicit HashingEncoder(HashingEncoderConfig config = {});

    std::string identifier() const override { return "hashing"; }
    std::size_t dimension() const override { return m_config.dimension; }
    std::string config_description() const override;
    std::vector<double> encode(std::string_view record_id, std::string_view text) const override;

    const HashingEncoderConfig& config() const noexcept { return m_config; }

private:
    HashingEncoderConfig m_config;
};

/// ĥ = h / max(||h||_p, eps).
std::vector<double> normalize_lp(std::span<const double> h, double p = 2.0, double eps = 1e-12);
FeatureEmbedding normalize_lp(const FeatureEmbedding& h, double p = 2.0, double eps = 1e-12);

/// Vectors keyed by (record id, feature tag), loaded from the line-delimited
/// interchange format:
///   {"id": "...", "feature": "msg"|"cc", "vector": [..]}
/// Blank lines and lines starting with '#' are ignored.
class EmbeddingStore {
public:
    void insert(const std::string& id, FeatureTag tag, std::vector<double> vector);

    const std::vector<double>* find(std::string_view id, FeatureTag tag) const;
    std::optional<std::size_t> dimension(FeatureTag tag) const;
    std::size_t size() const noexcept { return m_vectors.size(); }

    /// Hex digest of the stored content; identifies the store in checkpoints.
    std::string digest() const;

    void save(const std::filesystem::path& path) const;

private:
    std::map<std::pair<std::string, FeatureTag>, std::vector<double>, std::less<>> m_vectors;
    std::optional<std::size_t> m_dims[2];
};

EmbeddingStore load_precomputed(const std::filesystem::path& path);
EmbeddingStore parse_precomputed(std::string_view text);

class PrecomputedEncoder final : public FeatureEncoder {
public:
    PrecomputedEncoder(std::shared_ptr<const EmbeddingStore> store, FeatureTag tag);

    std::string identifier() const override { return "precomputed"; }
    std::size_t dimension() const override { return m_dimension; }
    std::string config_description() const override;
    /// Throws MissingEmbedding when the store has no vector for `record_id`.
    std::vector<double> encode(std::string_view record_id, std::string_view text) const override;

private:
    std::shared_ptr<const EmbeddingStore> m_store;
    FeatureTag m_tag;
    std::size_t m_dimension = 0;
};

struct NormConfig {
    double p = 2.0;
    double eps = 1e-12;
};

enum class EncoderKind { Hashing, Precomputed };
enum class CcMode { None, Text, Vector };

std::string_view to_string(EncoderKind kind) noexcept;
std::string_view to_string(CcMode mode) noexcept;
std::optional<CcMode> parse_cc_mode(std::string_view name) noexcept;

/// Serializable recipe for an EncoderSuite; stored in checkpoints.
struct EncoderSpec {
    EncoderKind kind = EncoderKind::Hashing;
    HashingEncoderConfig hashing;
    CcMode cc_mode = CcMode::None;
    std::size_t cc_dim = 0;  // only for CcMode::Vector
    NormConfig norm;

    friend bool operator==(const EncoderSpec& a, const EncoderSpec& b) {
        return a.kind == b.kind && a.hashing.dimension == b.hashing.dimension &&
               a.hashing.ngram_min == b.hashing.ngram_min && a.hashing.ngram_max == b.hashing.ngram_max &&
               a.hashing.signed_hash == b.hashing.signed_hash && a.cc_mode == b.cc_mode && a.cc_dim == b.cc_dim &&
               a.norm.p == b.norm.p && a.norm.eps == b.norm.eps;
    }
};

/// Picks the cc mode from the records: Vector when any record carries a
/// numeric code change (all must share one length), Text when any carries
/// diff text, None otherwise. Mixing both kinds is a DimensionMismatch.
void infer_code_change(EncoderSpec& spec, const std::vector<CommitRecord>& records);

/// The encoders used for one corpus. The cc block is present when either a
/// text encoder or a numeric cc dimension is configured; records without a
/// code change then receive a zero cc block so every H has the same length.
struct EncoderSuite {
    EncoderSpec spec;
    std::shared_ptr<const FeatureEncoder> msg;
    std::shared_ptr<const FeatureEncoder> cc_text;
    std::optional<std::size_t> cc_vector_dim;
    NormConfig norm;

    std::size_t embedding_dim() const;
    bool has_cc_block() const noexcept { return cc_text != nullptr || cc_vector_dim.has_value(); }
    /// Digest over every encoder description and the normalization settings.
    std::string digest() const;
};

/// `store` is required for EncoderKind::Precomputed and ignored otherwise.
EncoderSuite build_encoder_suite(const EncoderSpec& spec, std::shared_ptr<const EmbeddingStore> store = nullptr);

CommitEmbedding encode_commit(const CommitRecord& record, const EncoderSuite& encoders);

} // namespace commitcl
