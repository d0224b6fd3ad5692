#pragma once

#include "commitcl/corpus.hpp"
#include "commitcl/random.hpp"

#include <array>
#include <string>
#include <vector>

namespace commitcl::testing {

// Word lists share no word across classes.
inline const std::vector<std::vector<std::string>>& class_vocabularies() {
    static const std::vector<std::vector<std::string>> vocab = {
        {"fix", "bug", "crash", "segfault", "null", "leak", "fault", "regression", "broken", "wrong", "overflow",
         "race"},
        {"add", "feature", "support", "implement", "new", "option", "enable", "introduce", "plugin", "api",
         "extend", "port"},
        {"refactor", "cleanup", "rename", "simplify", "tidy", "format", "docs", "comment", "style", "reorganize",
         "lint", "polish"},
    };
    return vocab;
}

inline const std::vector<std::string>& class_names() {
    static const std::vector<std::string> names = {"Corrective", "Adaptive", "Perfective"};
    return names;
}

/// `per_class` commits for each of `n_classes` classes, interleaved by class,
/// with messages of 4..9 words drawn from the class vocabulary.
inline Corpus make_separable_corpus(std::size_t per_class, std::size_t n_classes = 2, std::uint64_t seed = 1) {
    Rng rng(seed);
    std::vector<CommitRecord> records;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::size_t c = 0; c < n_classes; ++c) {
            const auto& words = class_vocabularies()[c];
            CommitRecord r;
            r.id = "syn-" + std::to_string(c) + "-" + std::to_string(i);
            const auto n_words = 4 + uniform_index(rng, 6);
            for (std::size_t w = 0; w < n_words; ++w) {
                if (w > 0) {
                    r.message.push_back(' ');
                }
                r.message += words[uniform_index(rng, words.size())];
            }
            r.label = class_names()[c];
            records.push_back(std::move(r));
        }
    }
    return Corpus(std::move(records), LabelSet{});
}

} // namespace commitcl::testing
