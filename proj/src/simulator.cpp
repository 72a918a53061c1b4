#include "gridsampler/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "json.hpp"

#include "gridsampler/data_io.hpp"
#include "gridsampler/errors.hpp"
#include "gridsampler/rng.hpp"

namespace gridsampler {

namespace {

/// How far past the conforming edge a Defective plant lands.
constexpr double kDefectiveSpan = 5.0;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

int level_rank(Level level) {
    return static_cast<int>(level);
}

/// Bands of the rubric ordered best level first.
std::vector<const Band*> bands_by_quality(const GradingRubric& rubric) {
    std::vector<const Band*> out;
    out.reserve(rubric.bands.size());
    for (const auto& band : rubric.bands) out.push_back(&band);
    std::sort(out.begin(), out.end(), [](const Band* a, const Band* b) {
        return level_rank(a->level) < level_rank(b->level);
    });
    return out;
}

/// Uniform draw inside the band. Unbounded sides are truncated `span` past
/// the finite edge; the draw is oriented so the attainable endpoint is the
/// inclusive one.
double draw_in_band(const Band& band, double span, std::mt19937_64& rng) {
    double lo, hi;
    if (band.min && band.max) {
        lo = *band.min;
        hi = *band.max;
    } else if (band.max) {
        hi = *band.max;
        lo = hi - span;
    } else if (band.min) {
        lo = *band.min;
        hi = lo + span;
    } else {
        lo = -span;
        hi = span;
    }
    const double u = uniform01(rng);
    if (band.max_inclusive && !band.min_inclusive) {
        return hi - u * (hi - lo);  // (lo, hi]
    }
    return lo + u * (hi - lo);  // [lo, hi)
}

/// A deviation just past the conforming hull of the rubric — graded
/// Nonconforming, at most kDefectiveSpan away from the edge.
double draw_defective(const GradingRubric& rubric, std::mt19937_64& rng) {
    std::optional<double> hull_min = 0.0, hull_max = 0.0;
    bool first = true;
    for (const auto& band : rubric.bands) {
        if (first) {
            hull_min = band.min;
            hull_max = band.max;
            first = false;
            continue;
        }
        if (!band.min || (hull_min && *band.min < *hull_min)) {
            hull_min = band.min;
        }
        if (!band.max || (hull_max && *band.max > *hull_max)) {
            hull_max = band.max;
        }
    }
    const double u = uniform01(rng);
    if (hull_max) {
        return *hull_max + (1.0 - u) * kDefectiveSpan;  // (max, max + span]
    }
    if (hull_min) {
        return *hull_min - kDefectiveSpan + u * kDefectiveSpan;  // [min - span, min)
    }
    throw ValidationError("rubric '" + rubric.key() +
                          "' conforms everywhere; cannot plant a defective reading");
}

const NoiseSpec& noise_for(const BatchGenSpec& spec, const std::string& indicator_id) {
    const auto it = spec.per_indicator_noise.find(indicator_id);
    return it == spec.per_indicator_noise.end() ? spec.noise : it->second;
}

/// Rubric key each generated reading uses: the bare indicator id, or its
/// first declared variant.
std::string reading_key(const IndicatorSpec& spec) {
    if (spec.variant_keys.empty()) return spec.id;
    return spec.id + "_" + spec.variant_keys.front();
}

std::string item_name(int index, int width) {
    std::string digits = std::to_string(index + 1);
    return "item" + std::string(width - static_cast<int>(digits.size()), '0') + digits;
}

}  // namespace

std::string_view plant_regime_name(PlantRegime r) {
    switch (r) {
        case PlantRegime::Marginal: return "marginal";
        case PlantRegime::Defective: return "defective";
    }
    return "defective";
}

std::optional<PlantRegime> plant_regime_from_name(std::string_view name) {
    if (name == "marginal") return PlantRegime::Marginal;
    if (name == "defective") return PlantRegime::Defective;
    return std::nullopt;
}

void BatchGenSpec::validate() const {
    if (batch_size < 1) {
        throw ValidationError("batch_size must be positive");
    }
    if (planted_bad < 0 || planted_bad > batch_size) {
        throw ValidationError("planted_bad must lie in [0, batch_size]");
    }
    auto check_noise = [](const NoiseSpec& n, const std::string& scope) {
        if (!(n.excellent_prob >= 0.0 && n.excellent_prob <= 1.0)) {
            throw ValidationError(scope + ": excellent_prob must lie in [0, 1]");
        }
        if (!(n.unbounded_span > 0.0)) {
            throw ValidationError(scope + ": unbounded_span must be positive");
        }
    };
    check_noise(noise, "noise");
    for (const auto& [id, n] : per_indicator_noise) {
        check_noise(n, "noise for '" + id + "'");
    }
}

GeneratedBatch generate_batch(const BatchGenSpec& spec, const RubricSet& rubrics) {
    spec.validate();
    const auto& indicator_specs = rubrics.specs();
    if (indicator_specs.empty()) {
        throw ValidationError("rubric set declares no indicators");
    }

    // Stream 0 picks the planted positions; stream 1 + i drives item i, so
    // items draw independently of each other.
    auto position_rng = seeded_engine(spec.seed, 0);
    std::vector<int> order(spec.batch_size);
    for (int i = 0; i < spec.batch_size; ++i) order[i] = i;
    std::set<int> planted;
    for (int i = 0; i < spec.planted_bad; ++i) {
        const auto j = i + static_cast<int>(uniform_below(
                               position_rng, static_cast<std::uint64_t>(spec.batch_size - i)));
        std::swap(order[i], order[j]);
        planted.insert(order[i]);
    }

    const int width = std::max<int>(3, static_cast<int>(std::to_string(spec.batch_size).size()));

    GeneratedBatch batch;
    batch.items.reserve(spec.batch_size);
    for (int i = 0; i < spec.batch_size; ++i) {
        auto rng = seeded_engine(spec.seed, 1 + static_cast<std::uint64_t>(i));
        InspectionItem item;
        item.item_id = item_name(i, width);

        const bool is_planted = planted.count(i) > 0;
        std::size_t bad_index = indicator_specs.size();  // past the end: none
        if (is_planted) {
            bad_index = static_cast<std::size_t>(
                uniform_below(rng, static_cast<std::uint64_t>(indicator_specs.size())));
        }

        for (std::size_t s = 0; s < indicator_specs.size(); ++s) {
            const auto key = reading_key(indicator_specs[s]);
            const auto* rubric = rubrics.find_rubric(key);
            if (rubric == nullptr) {
                throw ValidationError("no rubric behind key '" + key + "'");
            }
            const auto& noise = noise_for(spec, indicator_specs[s].id);

            double deviation;
            if (s == bad_index && spec.regime == PlantRegime::Defective) {
                deviation = draw_defective(*rubric, rng);
            } else if (s == bad_index) {
                // Marginal: the worst band that still conforms.
                deviation = draw_in_band(*bands_by_quality(*rubric).back(),
                                         noise.unbounded_span, rng);
            } else {
                const auto ordered = bands_by_quality(*rubric);
                const Band* good = ordered.size() > 1 ? ordered[1] : ordered[0];
                const Band* pick =
                    uniform01(rng) < noise.excellent_prob ? ordered.front() : good;
                deviation = draw_in_band(*pick, noise.unbounded_span, rng);
            }
            item.readings.push_back(IndicatorReading{key, deviation});
        }
        batch.items.push_back(std::move(item));
        if (is_planted) {
            batch.planted_ids.push_back(batch.items.back().item_id);
        }
    }
    return batch;
}

double sign_test_p_one_sided(int wins, int losses) {
    if (wins < 0 || losses < 0) {
        throw ValidationError("sign test counts must be non-negative");
    }
    const int n = wins + losses;
    if (n == 0) return 1.0;
    const double log_half_n = -static_cast<double>(n) * std::log(2.0);
    double p = 0.0;
    for (int i = wins; i <= n; ++i) {
        p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                      std::lgamma(n - i + 1.0) + log_half_n);
    }
    return std::clamp(p, 0.0, 1.0);
}

ComparisonResult run_comparison(const BatchGenSpec& spec, const WeightsById& weights,
                                const RubricSet& rubrics, int k, int trials,
                                std::uint64_t seed) {
    spec.validate();
    if (trials < 1) {
        throw ValidationError("trials must be positive");
    }
    if (k < 0) {
        throw ValidationError("k must be non-negative");
    }

    ComparisonResult out;
    out.results.reserve(2 * static_cast<std::size_t>(trials));
    double sum_ahp = 0.0;
    double sum_random = 0.0;

    for (int t = 0; t < trials; ++t) {
        BatchGenSpec trial_spec = spec;
        trial_spec.seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(t));
        const auto sample_seed = derive_seed(seed, 2 * static_cast<std::uint64_t>(t) + 1);

        const auto batch = generate_batch(trial_spec, rubrics);
        const std::set<std::string> truth(batch.planted_ids.begin(), batch.planted_ids.end());

        const auto scores = score_batch(batch.items, weights, rubrics);
        const auto ahp_plan = rank_and_select(scores, k);

        std::vector<std::string> ids;
        ids.reserve(batch.items.size());
        for (const auto& item : batch.items) ids.push_back(item.item_id);
        const auto random_plan = random_sample(ids, k, sample_seed);

        auto tally = [&truth](const SamplingPlan& plan) {
            int captured = 0;
            for (const auto& id : plan.selected) {
                captured += truth.count(id) > 0 ? 1 : 0;
            }
            return captured;
        };
        const int captured_ahp = tally(ahp_plan);
        const int captured_random = tally(random_plan);
        const double denom = spec.planted_bad > 0 ? spec.planted_bad : 0;

        auto rate = [&](int captured) {
            return spec.planted_bad > 0 ? captured / denom : 1.0;
        };
        out.results.push_back(
            {t + 1, SamplingStrategy::AhpAscending, k, captured_ahp, rate(captured_ahp)});
        out.results.push_back(
            {t + 1, SamplingStrategy::Random, k, captured_random, rate(captured_random)});

        sum_ahp += rate(captured_ahp);
        sum_random += rate(captured_random);
        if (captured_ahp > captured_random) {
            ++out.summary.wins_ahp;
        } else if (captured_random > captured_ahp) {
            ++out.summary.wins_random;
        } else {
            ++out.summary.ties;
        }
    }

    out.summary.trials = trials;
    out.summary.k = k;
    out.summary.batch_size = spec.batch_size;
    out.summary.planted_bad = spec.planted_bad;
    out.summary.regime = spec.regime;
    out.summary.seed = seed;
    out.summary.mean_capture_ahp = sum_ahp / trials;
    out.summary.mean_capture_random = sum_random / trials;
    out.summary.sign_test_p =
        sign_test_p_one_sided(out.summary.wins_ahp, out.summary.wins_random);
    return out;
}

namespace {

std::string fmt_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

}  // namespace

void write_comparison_csv(const ComparisonResult& comparison,
                          const std::filesystem::path& path) {
    std::string bytes = "trial,strategy,k,captured,capture_rate\n";
    for (const auto& row : comparison.results) {
        bytes += std::to_string(row.trial);
        bytes += ',';
        bytes += strategy_name(row.strategy);
        bytes += ',';
        bytes += std::to_string(row.k);
        bytes += ',';
        bytes += std::to_string(row.captured);
        bytes += ',';
        bytes += fmt_double(row.capture_rate);
        bytes += '\n';
    }

    const auto& s = comparison.summary;
    nlohmann::ordered_json summary;
    summary["trials"] = s.trials;
    summary["k"] = s.k;
    summary["batch_size"] = s.batch_size;
    summary["planted_bad"] = s.planted_bad;
    summary["regime"] = std::string(plant_regime_name(s.regime));
    summary["seed"] = s.seed;
    summary["mean_capture_ahp"] = s.mean_capture_ahp;
    summary["mean_capture_random"] = s.mean_capture_random;
    summary["wins_ahp"] = s.wins_ahp;
    summary["wins_random"] = s.wins_random;
    summary["ties"] = s.ties;
    summary["sign_test_p"] = s.sign_test_p;
    bytes += "# summary " + summary.dump() + "\n";

    atomic_write_text(path, bytes);
}

}  // namespace gridsampler
