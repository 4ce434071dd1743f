// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>

#include "kt/corpus.hpp"

namespace kt {

enum class BaselineKind : std::uint8_t { MF1 = 0, MF2 = 1, Rand = 2 };

/// Naive baselines: MF1 always predicts the most frequent training label,
/// MF2 one of the two most frequent (uniformly per document), RAND a
/// uniformly random label. Outputs are one-hot over the 12 types.
struct BaselineModel {
    BaselineKind kind = BaselineKind::MF1;
    std::array<int, kNumTypes> ranking{};  // type ordinals by frequency desc, ties by ordinal
    std::uint64_t seed = 0;
};

BaselineModel baseline_fit(BaselineKind kind, const Corpus& train, std::uint64_t seed);

/// Prediction for the document at position doc_ordinal of the evaluation
/// order. The ordinal keys the per-document random draw, which keeps the
/// model stateless and repeated evaluations identical.
std::array<double, kNumTypes> baseline_predict(const BaselineModel& model,
                                               std::size_t doc_ordinal);

}  // namespace kt
