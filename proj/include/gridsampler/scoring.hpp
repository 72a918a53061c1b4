#ifndef GRIDSAMPLER_SCORING_HPP
#define GRIDSAMPLER_SCORING_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gridsampler/grading.hpp"

namespace gridsampler {

/// Indicator weights keyed by canonical indicator id. Association is always
/// by id, never by position.
using WeightsById = std::map<std::string, double>;

/// One batch item: a unique id plus one reading per indicator in the active
/// rubric set.
struct InspectionItem {
    std::string item_id;
    std::vector<IndicatorReading> readings;
};

/// Conformance-gated weighted quality score: J = 0 as soon as any reading is
/// nonconforming, M = J * sum(W_i * G_i).
struct QualityScore {
    std::string item_id;
    std::vector<GradedReading> graded;
    int j_flag = 1;
    double m_score = 0.0;
};

enum class SamplingStrategy {
    AhpAscending,
    Random,
};

std::string_view strategy_name(SamplingStrategy s);
std::optional<SamplingStrategy> strategy_from_name(std::string_view name);

struct RankedItem {
    std::string item_id;
    double m_score = 0.0;
};

struct SamplingPlan {
    std::vector<RankedItem> ranking;     // full batch; ascending (M, id) for AhpAscending
    std::vector<std::string> selected;   // first min(k, batch size) ids
    int k = 0;                           // requested sample size
    SamplingStrategy strategy = SamplingStrategy::AhpAscending;
    std::optional<std::uint64_t> seed;   // Random strategy only
    bool k_clamped = false;              // k exceeded the batch size
};

/// Evaluates the score gate over already-graded readings: J from the levels,
/// M from the weights. Graded entries must cover exactly the weighted
/// indicator ids (match by canonical id).
QualityScore combine_graded(std::string item_id, std::vector<GradedReading> graded,
                            const WeightsById& weights);

/// Grades every reading of the item against the rubric set, then applies the
/// weight/gate arithmetic. One reading per weighted indicator is required.
QualityScore score_item(const InspectionItem& item, const WeightsById& weights,
                        const RubricSet& rubrics);

/// Element-wise score_item with input order preserved. Item ids must be
/// unique; per-item failures are collected and reported together with item
/// attribution.
std::vector<QualityScore> score_batch(const std::vector<InspectionItem>& items,
                                      const WeightsById& weights, const RubricSet& rubrics);

/// Ascending sort by (M, item_id) and selection of the first min(k, N)
/// items. Nonconforming items (M = 0) therefore sort first and are always
/// selected — they are exactly what the model routes to testing.
SamplingPlan rank_and_select(const std::vector<QualityScore>& scores, int k);

/// Percentage-style baseline: uniform sample without replacement via a
/// seeded partial Fisher-Yates shuffle. Deterministic per seed.
SamplingPlan random_sample(const std::vector<std::string>& item_ids, int k,
                           std::uint64_t seed);

}  // namespace gridsampler

#endif  // GRIDSAMPLER_SCORING_HPP
