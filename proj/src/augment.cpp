#include "commitcl/augment.hpp"

#include "commitcl/csv.hpp"
#include "commitcl/error.hpp"
#include "commitcl/random.hpp"

#include <numeric>
#include <ostream>

namespace commitcl {

void AugmentConfig::validate() const {
    if (r_pairs < 1) {
        throw Error(ErrorKind::InvalidConfig, "r_pairs must be at least 1");
    }
    const auto first = template_text.find(kLabelPlaceholder);
    if (first == std::string::npos ||
        template_text.find(kLabelPlaceholder, first + kLabelPlaceholder.size()) != std::string::npos) {
        throw Error(ErrorKind::InvalidConfig, "template must contain exactly one {label} placeholder");
    }
}

std::string render_template(const std::string& template_text, const std::string& label) {
    std::string out = template_text;
    const auto pos = out.find(kLabelPlaceholder);
    if (pos != std::string::npos) {
        out.replace(pos, kLabelPlaceholder.size(), label);
    }
    return out;
}

std::vector<CommitRecord> generate_anchors(const LabelSet& labels, const AugmentConfig& config) {
    config.validate();
    std::vector<CommitRecord> anchors;
    anchors.reserve(labels.size() * config.anchors_per_class);
    for (const auto& c : labels.classes()) {
        const std::string message = render_template(config.template_text, c);
        for (std::size_t k = 0; k < config.anchors_per_class; ++k) {
            CommitRecord rec;
            rec.id = "anchor:" + c + ":" + std::to_string(k);
            rec.message = message;
            rec.label = c;
            anchors.push_back(std::move(rec));
        }
    }
    return anchors;
}

std::vector<const ContrastiveTriplet*> ContrastiveDataset::positive_list() const {
    std::vector<const ContrastiveTriplet*> out;
    for (const auto& per_class : positives) {
        for (const auto& t : per_class) {
            out.push_back(&t);
        }
    }
    return out;
}

ContrastiveDataset build_triplets(const std::vector<CommitRecord>& pool,
                                  const LabelSet& labels,
                                  const AugmentConfig& config) {
    config.validate();
    if (labels.size() < 2) {
        throw Error(ErrorKind::TooFewClasses, "contrastive pairs need at least 2 classes, got " +
                                                  std::to_string(labels.size()));
    }
    std::vector<std::vector<std::size_t>> members(labels.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!pool[i].label) {
            continue;
        }
        const auto c = labels.index_of(*pool[i].label);
        if (!c) {
            throw Error(ErrorKind::UnknownLabel, "pool label '" + *pool[i].label + "' is not in the label set");
        }
        members[*c].push_back(i);
    }
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (members[c].size() < 2) {
            throw Error(ErrorKind::EmptyClassPool, "class '" + labels.at(c) + "' has " +
                                                       std::to_string(members[c].size()) +
                                                       " pool items, at least 2 required");
        }
    }

    auto side = [&pool](std::size_t index) {
        const auto& r = pool[index];
        return TripletSide{index, r.id, r.message, *r.label};
    };

    ContrastiveDataset ds;
    ds.labels = labels;
    ds.positives.resize(labels.size());
    ds.negatives.resize(labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) {
        const auto& own = members[c];
        std::vector<std::size_t> others;
        for (std::size_t o = 0; o < labels.size(); ++o) {
            if (o != c) {
                others.insert(others.end(), members[o].begin(), members[o].end());
            }
        }
        Rng rng(mix_seed(config.seed, c));
        for (std::size_t r = 0; r < config.r_pairs; ++r) {
            const auto a = uniform_index(rng, own.size());
            // second draw skips the first slot so the pair never repeats an item
            auto b = uniform_index(rng, own.size() - 1);
            if (b >= a) {
                ++b;
            }
            ds.positives[c].push_back({side(own[a]), side(own[b]), true});
        }
        for (std::size_t r = 0; r < config.r_pairs; ++r) {
            const auto a = uniform_index(rng, own.size());
            const auto b = uniform_index(rng, others.size());
            ds.negatives[c].push_back({side(own[a]), side(others[b]), false});
        }
        ds.triplets.insert(ds.triplets.end(), ds.positives[c].begin(), ds.positives[c].end());
        ds.triplets.insert(ds.triplets.end(), ds.negatives[c].begin(), ds.negatives[c].end());
    }
    return ds;
}

std::vector<std::vector<std::vector<std::size_t>>> regroup(const ContrastiveDataset& dataset,
                                                           std::size_t n_regroups,
                                                           std::uint64_t seed,
                                                           std::size_t pairs_per_batch) {
    if (n_regroups < 1) {
        throw Error(ErrorKind::InvalidConfig, "n_regroups must be at least 1");
    }
    if (pairs_per_batch < 1) {
        throw Error(ErrorKind::InvalidConfig, "pairs_per_batch must be at least 1");
    }
    std::size_t count = 0;
    for (const auto& per_class : dataset.positives) {
        count += per_class.size();
    }

    std::vector<std::vector<std::vector<std::size_t>>> orderings;
    orderings.reserve(n_regroups);
    for (std::size_t g = 0; g < n_regroups; ++g) {
        std::vector<std::size_t> perm(count);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        Rng rng(mix_seed(seed, 0x9000 + g));
        shuffle(std::span<std::size_t>(perm), rng);

        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t start = 0; start < count; start += pairs_per_batch) {
            const std::size_t end = std::min(count, start + pairs_per_batch);
            std::vector<std::size_t> batch(perm.begin() + static_cast<std::ptrdiff_t>(start),
                                           perm.begin() + static_cast<std::ptrdiff_t>(end));
            if (batch.size() < 2 && !batches.empty()) {
                batches.back().insert(batches.back().end(), batch.begin(), batch.end());
            } else {
                batches.push_back(std::move(batch));
            }
        }
        orderings.push_back(std::move(batches));
    }
    return orderings;
}

void dump_triplets(const ContrastiveDataset& dataset, std::ostream& out) {
    for (const auto& t : dataset.triplets) {
        csv::write_row(out, {t.left.id, t.right.id, t.similar ? "1" : "0"});
    }
}

} // namespace commitcl
