#pragma once

#include <vector>

#include "disent/errors.hpp"

namespace disent {

// Lookup classifier: each feature index votes for the label it co-occurred
// with most often during training. Ties resolve to the smaller label; feature
// indices never seen in training fall back to the global majority label.
class MajorityVoteModel {
  public:
    MajorityVoteModel(std::vector<int> table, int fallback)
        : table_(std::move(table)), fallback_(fallback) {}

    int predict(int feature) const {
        if (feature < 0) throw argument_error("majority vote: negative feature index");
        if (feature >= static_cast<int>(table_.size()) || table_[feature] < 0) return fallback_;
        return table_[feature];
    }

    double accuracy(const std::vector<int>& features, const std::vector<int>& labels) const {
        if (features.size() != labels.size() || features.empty()) {
            throw argument_error("majority vote: features/labels size mismatch");
        }
        double hits = 0.0;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (predict(features[i]) == labels[i]) hits += 1.0;
        }
        return hits / static_cast<double>(features.size());
    }

  private:
    std::vector<int> table_; // -1 marks unseen feature indices
    int fallback_;
};

inline MajorityVoteModel fit_majority_vote(const std::vector<int>& features,
                                           const std::vector<int>& labels) {
    if (features.size() != labels.size() || features.empty()) {
        throw argument_error("fit_majority_vote: features/labels must be equal-length, non-empty");
    }
    int max_f = 0, max_l = 0;
    for (int f : features) {
        if (f < 0) throw argument_error("fit_majority_vote: negative feature index");
        max_f = std::max(max_f, f);
    }
    for (int l : labels) {
        if (l < 0) throw argument_error("fit_majority_vote: negative label");
        max_l = std::max(max_l, l);
    }
    std::vector<std::vector<long long>> count(max_f + 1, std::vector<long long>(max_l + 1, 0));
    std::vector<long long> global(max_l + 1, 0);
    for (std::size_t i = 0; i < features.size(); ++i) {
        ++count[features[i]][labels[i]];
        ++global[labels[i]];
    }
    auto argmax_small_tie = [](const std::vector<long long>& c) {
        int best = 0;
        for (int l = 1; l < static_cast<int>(c.size()); ++l)
            if (c[l] > c[best]) best = l;
        return best;
    };
    std::vector<int> table(max_f + 1, -1);
    for (int f = 0; f <= max_f; ++f) {
        long long total = 0;
        for (long long c : count[f]) total += c;
        if (total > 0) table[f] = argmax_small_tie(count[f]);
    }
    return MajorityVoteModel(std::move(table), argmax_small_tie(global));
}

} // namespace disent
