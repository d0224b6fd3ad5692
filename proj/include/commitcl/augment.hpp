#pragma once

#include "commitcl/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace commitcl {

struct AugmentConfig {
    std::size_t r_pairs = 20;
    std::size_t anchors_per_class = 20;
    std::string template_text = "This sentence is {label}";
    std::uint64_t seed = 0;

    void validate() const;
};

inline constexpr std::string_view kLabelPlaceholder = "{label}";

std::string render_template(const std::string& template_text, const std::string& label);

/// `anchors_per_class` pseudo-labeled records per class with ids "anchor:{class}:{k}".
std::vector<CommitRecord> generate_anchors(const LabelSet& labels, const AugmentConfig& config);

struct TripletSide {
    std::size_t index = 0;  // position in the pool passed to build_triplets
    std::string id;
    std::string text;
    std::string label;
};

struct ContrastiveTriplet {
    TripletSide left;
    TripletSide right;
    bool similar = false;
};

struct ContrastiveDataset {
    LabelSet labels;
    std::vector<std::vector<ContrastiveTriplet>> positives;  // per class, canonical order
    std::vector<std::vector<ContrastiveTriplet>> negatives;  // per class, canonical order
    /// Class by class: R positives of the class followed by its R negatives.
    std::vector<ContrastiveTriplet> triplets;

    /// Flattened positive triplets in class order; regroup indexes into this.
    std::vector<const ContrastiveTriplet*> positive_list() const;
};

/// For each class c: R same-class pairs (distinct pool items) and R pairs of a
/// class-c item with an item drawn from the other classes. Pool items without
/// a label are ignored.
ContrastiveDataset build_triplets(const std::vector<CommitRecord>& pool,
                                  const LabelSet& labels,
                                  const AugmentConfig& config);

/// `n_regroups` seeded permutations of the positive triplets, each chunked into
/// batches of `pairs_per_batch` pairs. A final chunk with fewer than two pairs
/// is merged into the previous one.
std::vector<std::vector<std::vector<std::size_t>>> regroup(const ContrastiveDataset& dataset,
                                                           std::size_t n_regroups,
                                                           std::uint64_t seed,
                                                           std::size_t pairs_per_batch);

/// One line per triplet: left_id,right_id,similar.
void dump_triplets(const ContrastiveDataset& dataset, std::ostream& out);

} // namespace commitcl
