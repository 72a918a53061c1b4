#ifndef GRIDSAMPLER_SIMULATOR_HPP
#define GRIDSAMPLER_SIMULATOR_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridsampler/grading.hpp"
#include "gridsampler/scoring.hpp"

namespace gridsampler {

/// Where planted-bad items land.
///   Marginal:  lowest conforming band on one indicator (J stays 1); tests
///              the score's discriminative power.
///   Defective: just outside the conforming region on one indicator (J = 0);
///              such items score M = 0 and sort first deterministically.
enum class PlantRegime {
    Marginal,
    Defective,
};

std::string_view plant_regime_name(PlantRegime r);
std::optional<PlantRegime> plant_regime_from_name(std::string_view name);

/// Deviation-noise parameters for generated readings. Healthy readings draw
/// from the Excellent band with probability `excellent_prob`, otherwise from
/// the Good band. A band edge that is unbounded is truncated to
/// `unbounded_span` past its finite edge.
struct NoiseSpec {
    double excellent_prob = 0.5;
    double unbounded_span = 10.0;
};

struct BatchGenSpec {
    int batch_size = 0;
    int planted_bad = 0;
    PlantRegime regime = PlantRegime::Defective;
    NoiseSpec noise;
    std::map<std::string, NoiseSpec> per_indicator_noise;  // overrides by indicator id
    std::uint64_t seed = 0;

    void validate() const;
};

/// A synthetic batch with ground truth: which items were planted bad.
struct GeneratedBatch {
    std::vector<InspectionItem> items;
    std::vector<std::string> planted_ids;  // ascending item id order
};

/// Deterministic per seed. Planted items get one reading in the lowest
/// conforming band (Marginal) or just outside it (Defective); every other
/// reading draws from the Good/Excellent bands.
GeneratedBatch generate_batch(const BatchGenSpec& spec, const RubricSet& rubrics);

struct TrialResult {
    int trial = 0;
    SamplingStrategy strategy = SamplingStrategy::AhpAscending;
    int k = 0;
    int captured = 0;
    double capture_rate = 0.0;
};

struct ComparisonSummary {
    int trials = 0;
    int k = 0;
    int batch_size = 0;
    int planted_bad = 0;
    PlantRegime regime = PlantRegime::Defective;
    std::uint64_t seed = 0;
    double mean_capture_ahp = 0.0;
    double mean_capture_random = 0.0;
    int wins_ahp = 0;     // trials where AHP captured strictly more
    int wins_random = 0;
    int ties = 0;
    double sign_test_p = 1.0;  // one-sided, AHP > random
};

struct ComparisonResult {
    std::vector<TrialResult> results;  // two rows per trial (ahp, random)
    ComparisonSummary summary;
};

/// Runs both strategies over `trials` generated batches with the same k and
/// counts planted-bad captures. Reproducible bit for bit from
/// (spec, seed, trials); each trial derives its own generation and sampling
/// seeds from `seed`, so `spec.seed` is ignored here.
ComparisonResult run_comparison(const BatchGenSpec& spec, const WeightsById& weights,
                                const RubricSet& rubrics, int k, int trials,
                                std::uint64_t seed);

/// One-sided sign test: probability of at least `wins` successes in
/// wins + losses fair coin flips. Ties are dropped before calling.
double sign_test_p_one_sided(int wins, int losses);

/// Writes `trial,strategy,k,captured,capture_rate` rows followed by a
/// `# summary <json>` footer line.
void write_comparison_csv(const ComparisonResult& comparison,
                          const std::filesystem::path& path);

}  // namespace gridsampler

#endif  // GRIDSAMPLER_SIMULATOR_HPP
