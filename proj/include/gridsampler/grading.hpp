#ifndef GRIDSAMPLER_GRADING_HPP
#define GRIDSAMPLER_GRADING_HPP

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gridsampler/errors.hpp"

namespace gridsampler {

enum class Level {
    Excellent,
    Good,
    Qualified,
    BasicQualified,
    Nonconforming,
};

std::string_view level_name(Level level);
std::optional<Level> level_from_name(std::string_view name);

/// Scores attached to the four conforming levels; nonconforming readings
/// always score 0.
struct LevelScoreMap {
    double a = 100.0;  // Excellent
    double b = 85.0;   // Good
    double c = 75.0;   // Qualified
    double d = 60.0;   // Basic qualified

    double score_for(Level level) const;
    /// Requires a > b > c > d > 0.
    void validate() const;

    bool operator==(const LevelScoreMap&) const = default;
};

/// Half-open/closed interval of deviation percentages mapped to one level.
/// A missing bound means the band is unbounded on that side.
struct Band {
    Level level = Level::Qualified;
    std::optional<double> min;
    std::optional<double> max;
    bool min_inclusive = false;
    bool max_inclusive = false;

    bool contains(double deviation_pct) const;

    bool operator==(const Band&) const = default;
};

/// Grading bands for one indicator (optionally one material variant of it).
/// The bands must tile a contiguous conforming region; deviations outside it
/// are nonconforming.
struct GradingRubric {
    std::string indicator_id;
    std::optional<std::string> variant;
    std::vector<Band> bands;

    /// Lookup key used in data files: `indicator_id` or `indicator_id_variant`.
    std::string key() const;

    /// Checks band tiling (no gaps, no overlaps, contiguous) and that no
    /// level repeats. Throws ValidationError.
    void validate() const;

    Level classify_deviation(double deviation_pct) const;

    bool operator==(const GradingRubric&) const = default;
};

struct IndicatorSpec {
    std::string id;
    std::string display_name;
    std::string unit;
    std::vector<std::string> variant_keys;  // empty when the indicator has one rubric

    bool operator==(const IndicatorSpec&) const = default;
};

struct Measurement {
    double measured = 0.0;
    double standard = 0.0;

    bool operator==(const Measurement&) const = default;
};

/// One reading of one indicator: either a measured/standard pair (deviation
/// computed on demand) or a deviation percentage supplied directly.
/// `indicator_id` is the rubric key, i.e. variant-resolved.
struct IndicatorReading {
    std::string indicator_id;
    std::variant<Measurement, double> value;

    bool operator==(const IndicatorReading&) const = default;
};

struct GradedReading {
    std::string indicator_id;  // canonical indicator (variant stripped)
    std::string rubric_key;    // rubric actually applied
    double deviation_pct = 0.0;
    Level level = Level::Nonconforming;
    double score = 0.0;

    bool operator==(const GradedReading&) const = default;
};

/// Immutable bundle of indicator specs, their rubrics, and the score map.
/// Freely shareable across threads once constructed.
class RubricSet {
public:
    RubricSet(std::string id, std::vector<IndicatorSpec> specs,
              std::vector<GradingRubric> rubrics, LevelScoreMap scores);

    const std::string& id() const { return id_; }
    const LevelScoreMap& score_map() const { return scores_; }
    const std::vector<IndicatorSpec>& specs() const { return specs_; }
    const std::vector<GradingRubric>& rubrics() const { return rubrics_; }

    /// Canonical indicator ids in declaration order (Table ordering).
    std::vector<std::string> indicator_ids() const;

    const GradingRubric* find_rubric(const std::string& key) const;
    /// Spec owning the rubric behind `key`, or nullptr.
    const IndicatorSpec* spec_for_key(const std::string& key) const;
    /// Maps a rubric key (or a bare indicator id) to the canonical indicator
    /// id; nullopt when the key is unknown to this rubric set.
    std::optional<std::string> canonical_id(const std::string& key) const;

private:
    std::string id_;
    std::vector<IndicatorSpec> specs_;
    std::vector<GradingRubric> rubrics_;
    LevelScoreMap scores_;
    std::map<std::string, std::size_t> rubric_by_key_;
    std::map<std::string, std::size_t> spec_by_key_;
};

/// Percent deviation 100 * (measured - standard) / standard.
/// Throws ZeroStandard when standard == 0.
double deviation_percent(double measured, double standard);

/// Resolves the reading's deviation, finds its band, and maps the level to a
/// score. Deviations outside every band grade Nonconforming with score 0.
GradedReading classify(const IndicatorReading& reading, const RubricSet& rubrics);

/// The built-in low-voltage power cable rubric: DC conductor resistance
/// (copper and aluminum/alloy variants), average and minimum insulation
/// thickness, minimum sheath thickness; scores 100/85/75/60.
RubricSet builtin_cable_rubric();

inline constexpr std::string_view kBuiltinCableRubricId = "lv_power_cable";

}  // namespace gridsampler

#endif  // GRIDSAMPLER_GRADING_HPP
