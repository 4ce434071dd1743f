// SPDX-License-Identifier: Apache-2.0
#include "kt/baselines.hpp"

#include <algorithm>
#include <numeric>

namespace kt {

BaselineModel baseline_fit(BaselineKind kind, const Corpus& train, std::uint64_t seed) {
    if (train.empty()) throw TrainError("baseline: empty training corpus");
    BaselineModel model;
    model.kind = kind;
    model.seed = seed;
    std::iota(model.ranking.begin(), model.ranking.end(), 0);
    const auto& counts = train.label_counts();
    std::stable_sort(model.ranking.begin(), model.ranking.end(),
                     [&](int a, int b) { return counts[a] > counts[b]; });
    return model;
}

std::array<double, kNumTypes> baseline_predict(const BaselineModel& model,
                                               std::size_t doc_ordinal) {
    std::array<double, kNumTypes> out{};
    int choice = model.ranking[0];
    switch (model.kind) {
        case BaselineKind::MF1:
            break;
        case BaselineKind::MF2: {
            Rng rng(derive_seed(model.seed, doc_ordinal));
            choice = model.ranking[rng.index(2)];
            break;
        }
        case BaselineKind::Rand: {
            Rng rng(derive_seed(model.seed, doc_ordinal));
            choice = static_cast<int>(rng.index(kNumTypes));
            break;
        }
    }
    out[static_cast<std::size_t>(choice)] = 1.0;
    return out;
}

}  // namespace kt
