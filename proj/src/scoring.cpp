#include "gridsampler/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gridsampler/rng.hpp"

namespace gridsampler {

namespace {

constexpr double kWeightSumTol = 1e-6;

void require_normalized(const WeightsById& weights) {
    if (weights.empty()) {
        throw ValidationError("weight map is empty");
    }
    double sum = 0.0;
    for (const auto& [id, w] : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ValidationError("weight for '" + id + "' must be a finite non-negative "
                                  "number, got " + std::to_string(w));
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw ValidationError("weights must sum to 1, got " + std::to_string(sum));
    }
}

}  // namespace

std::string_view strategy_name(SamplingStrategy s) {
    switch (s) {
        case SamplingStrategy::AhpAscending: return "ahp_ascending";
        case SamplingStrategy::Random: return "random";
    }
    return "unknown";
}

std::optional<SamplingStrategy> strategy_from_name(std::string_view name) {
    if (name == "ahp_ascending" || name == "ahp") return SamplingStrategy::AhpAscending;
    if (name == "random") return SamplingStrategy::Random;
    return std::nullopt;
}

QualityScore combine_graded(std::string item_id, std::vector<GradedReading> graded,
                            const WeightsById& weights) {
    require_normalized(weights);

    QualityScore score;
    score.item_id = std::move(item_id);

    std::set<std::string> covered;
    double weighted_sum = 0.0;
    for (const auto& reading : graded) {
        const auto weight_it = weights.find(reading.indicator_id);
        if (weight_it == weights.end()) {
            throw ValidationError("item '" + score.item_id + "': reading for '" +
                                  reading.indicator_id + "' has no weight");
        }
        if (!covered.insert(reading.indicator_id).second) {
            throw ValidationError("item '" + score.item_id + "': duplicate reading for '" +
                                  reading.indicator_id + "'");
        }
        if (reading.level == Level::Nonconforming) {
            score.j_flag = 0;
        }
        weighted_sum += weight_it->second * reading.score;
    }
    for (const auto& [id, w] : weights) {
        if (!covered.count(id)) {
            throw MissingReading("item '" + score.item_id + "': no reading for indicator '" +
                                 id + "'");
        }
    }

    score.m_score = score.j_flag ? weighted_sum : 0.0;
    score.graded = std::move(graded);
    return score;
}

QualityScore score_item(const InspectionItem& item, const WeightsById& weights,
                        const RubricSet& rubrics) {
    std::vector<GradedReading> graded;
    graded.reserve(item.readings.size());
    for (const auto& reading : item.readings) {
        graded.push_back(classify(reading, rubrics));
    }
    return combine_graded(item.item_id, std::move(graded), weights);
}

std::vector<QualityScore> score_batch(const std::vector<InspectionItem>& items,
                                      const WeightsById& weights, const RubricSet& rubrics) {
    std::set<std::string> ids;
    for (const auto& item : items) {
        if (!ids.insert(item.item_id).second) {
            throw DuplicateItemId("duplicate item id '" + item.item_id + "' in batch");
        }
    }

    std::vector<QualityScore> scores;
    scores.reserve(items.size());
    std::ostringstream failures;
    int failure_count = 0;
    for (const auto& item : items) {
        try {
            scores.push_back(score_item(item, weights, rubrics));
        } catch (const Error& e) {
            ++failure_count;
            failures << "\n  [" << item.item_id << "] " << e.what();
        }
    }
    if (failure_count > 0) {
        throw ValidationError("scoring failed for " + std::to_string(failure_count) +
                              " item(s):" + failures.str());
    }
    return scores;
}

SamplingPlan rank_and_select(const std::vector<QualityScore>& scores, int k) {
    if (k < 0) {
        throw ValidationError("sample size k must be >= 0, got " + std::to_string(k));
    }

    SamplingPlan plan;
    plan.strategy = SamplingStrategy::AhpAscending;
    plan.k = k;

    plan.ranking.reserve(scores.size());
    for (const auto& s : scores) {
        plan.ranking.push_back({s.item_id, s.m_score});
    }
    std::sort(plan.ranking.begin(), plan.ranking.end(),
              [](const RankedItem& x, const RankedItem& y) {
                  if (x.m_score != y.m_score) {
                      return x.m_score < y.m_score;
                  }
                  return x.item_id < y.item_id;  // deterministic tie-break
              });

    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), plan.ranking.size());
    plan.k_clamped = static_cast<std::size_t>(k) > plan.ranking.size();
    plan.selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        plan.selected.push_back(plan.ranking[i].item_id);
    }
    return plan;
}

SamplingPlan random_sample(const std::vector<std::string>& item_ids, int k,
                           std::uint64_t seed) {
    if (k < 0) {
        throw ValidationError("sample size k must be >= 0, got " + std::to_string(k));
    }

    SamplingPlan plan;
    plan.strategy = SamplingStrategy::Random;
    plan.k = k;
    plan.seed = seed;

    std::vector<std::string> order = item_ids;
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), order.size());
    plan.k_clamped = static_cast<std::size_t>(k) > order.size();

    auto rng = seeded_engine(seed);
    // Partial Fisher-Yates: after i steps the first i slots hold a uniform
    // sample without replacement.
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + uniform_below(rng, order.size() - i);
        std::swap(order[i], order[j]);
    }

    plan.ranking.reserve(order.size());
    for (const auto& id : order) {
        plan.ranking.push_back({id, 0.0});  // scores are not consulted
    }
    plan.selected.assign(order.begin(), order.begin() + take);
    return plan;
}

}  // namespace gridsampler
