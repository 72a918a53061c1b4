#include "gridsampler/grading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gridsampler {

std::string_view level_name(Level level) {
    switch (level) {
        case Level::Excellent: return "Excellent";
        case Level::Good: return "Good";
        case Level::Qualified: return "Qualified";
        case Level::BasicQualified: return "BasicQualified";
        case Level::Nonconforming: return "Nonconforming";
    }
    return "Unknown";
}

std::optional<Level> level_from_name(std::string_view name) {
    if (name == "Excellent") return Level::Excellent;
    if (name == "Good") return Level::Good;
    if (name == "Qualified") return Level::Qualified;
    if (name == "BasicQualified") return Level::BasicQualified;
    if (name == "Nonconforming") return Level::Nonconforming;
    return std::nullopt;
}

double LevelScoreMap::score_for(Level level) const {
    switch (level) {
        case Level::Excellent: return a;
        case Level::Good: return b;
        case Level::Qualified: return c;
        case Level::BasicQualified: return d;
        case Level::Nonconforming: return 0.0;
    }
    return 0.0;
}

void LevelScoreMap::validate() const {
    if (!(a > b && b > c && c > d && d > 0.0)) {
        throw ValidationError("level scores must satisfy a > b > c > d > 0, got a=" +
                              std::to_string(a) + " b=" + std::to_string(b) + " c=" +
                              std::to_string(c) + " d=" + std::to_string(d));
    }
}

bool Band::contains(double deviation_pct) const {
    if (min) {
        if (min_inclusive ? deviation_pct < *min : deviation_pct <= *min) {
            return false;
        }
    }
    if (max) {
        if (max_inclusive ? deviation_pct > *max : deviation_pct >= *max) {
            return false;
        }
    }
    return true;
}

std::string GradingRubric::key() const {
    return variant ? indicator_id + "_" + *variant : indicator_id;
}

void GradingRubric::validate() const {
    if (bands.empty()) {
        throw ValidationError("rubric '" + key() + "' has no bands");
    }
    std::vector<Band> sorted = bands;
    // Sort by lower edge; the (at most one) band unbounded below comes first.
    std::sort(sorted.begin(), sorted.end(), [](const Band& x, const Band& y) {
        const double lx = x.min ? *x.min : -std::numeric_limits<double>::infinity();
        const double ly = y.min ? *y.min : -std::numeric_limits<double>::infinity();
        return lx < ly;
    });

    bool level_seen[4] = {};
    for (const auto& band : sorted) {
        if (band.level == Level::Nonconforming) {
            throw ValidationError("rubric '" + key() +
                                  "' assigns a band to Nonconforming; that level is the "
                                  "complement of the bands");
        }
        bool& seen = level_seen[static_cast<std::size_t>(band.level)];
        if (seen) {
            throw ValidationError("rubric '" + key() + "' repeats level " +
                                  std::string(level_name(band.level)));
        }
        seen = true;
        if (band.min && band.max && !(*band.min < *band.max)) {
            throw ValidationError("rubric '" + key() + "' band " +
                                  std::string(level_name(band.level)) + " is empty");
        }
    }

    for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const Band& lo = sorted[i];
        const Band& hi = sorted[i + 1];
        if (!lo.max || !hi.min) {
            throw ValidationError("rubric '" + key() +
                                  "' has an interior band with an unbounded edge");
        }
        if (*lo.max != *hi.min) {
            throw ValidationError("rubric '" + key() + "' bands " +
                                  std::string(level_name(lo.level)) + " and " +
                                  std::string(level_name(hi.level)) +
                                  " do not share a boundary (gap or overlap)");
        }
        // The shared boundary must belong to exactly one of the two bands.
        if (lo.max_inclusive == hi.min_inclusive) {
            throw ValidationError("rubric '" + key() + "' boundary " +
                                  std::to_string(*lo.max) + " is claimed by " +
                                  (lo.max_inclusive ? "both" : "neither") + " adjacent band(s)");
        }
    }
}

Level GradingRubric::classify_deviation(double deviation_pct) const {
    for (const auto& band : bands) {
        if (band.contains(deviation_pct)) {
            return band.level;
        }
    }
    return Level::Nonconforming;
}

RubricSet::RubricSet(std::string id, std::vector<IndicatorSpec> specs,
                     std::vector<GradingRubric> rubrics, LevelScoreMap scores)
    : id_(std::move(id)),
      specs_(std::move(specs)),
      rubrics_(std::move(rubrics)),
      scores_(scores) {
    scores_.validate();

    std::map<std::string, std::size_t> spec_by_id;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (!spec_by_id.emplace(specs_[i].id, i).second) {
            throw ValidationError("duplicate indicator id '" + specs_[i].id + "' in rubric set");
        }
    }

    for (std::size_t r = 0; r < rubrics_.size(); ++r) {
        const auto& rubric = rubrics_[r];
        rubric.validate();
        const auto spec_it = spec_by_id.find(rubric.indicator_id);
        if (spec_it == spec_by_id.end()) {
            throw ValidationError("rubric '" + rubric.key() +
                                  "' references unknown indicator '" + rubric.indicator_id +
                                  "'");
        }
        const auto& spec = specs_[spec_it->second];
        if (rubric.variant) {
            if (std::find(spec.variant_keys.begin(), spec.variant_keys.end(),
                          *rubric.variant) == spec.variant_keys.end()) {
                throw ValidationError("rubric variant '" + *rubric.variant +
                                      "' is not declared on indicator '" + spec.id + "'");
            }
        } else if (!spec.variant_keys.empty()) {
            throw ValidationError("indicator '" + spec.id +
                                  "' declares variants; its rubrics must name one");
        }
        if (!rubric_by_key_.emplace(rubric.key(), r).second) {
            throw ValidationError("duplicate rubric key '" + rubric.key() + "'");
        }
        spec_by_key_.emplace(rubric.key(), spec_it->second);
    }

    // Every declared indicator/variant needs a rubric.
    for (const auto& spec : specs_) {
        if (spec.variant_keys.empty()) {
            if (!rubric_by_key_.count(spec.id)) {
                throw ValidationError("indicator '" + spec.id + "' has no rubric");
            }
        } else {
            for (const auto& variant : spec.variant_keys) {
                if (!rubric_by_key_.count(spec.id + "_" + variant)) {
                    throw ValidationError("indicator '" + spec.id + "' variant '" + variant +
                                          "' has no rubric");
                }
            }
        }
    }
}

std::vector<std::string> RubricSet::indicator_ids() const {
    std::vector<std::string> ids;
    ids.reserve(specs_.size());
    for (const auto& spec : specs_) {
        ids.push_back(spec.id);
    }
    return ids;
}

const GradingRubric* RubricSet::find_rubric(const std::string& key) const {
    const auto it = rubric_by_key_.find(key);
    return it == rubric_by_key_.end() ? nullptr : &rubrics_[it->second];
}

const IndicatorSpec* RubricSet::spec_for_key(const std::string& key) const {
    const auto it = spec_by_key_.find(key);
    return it == spec_by_key_.end() ? nullptr : &specs_[it->second];
}

std::optional<std::string> RubricSet::canonical_id(const std::string& key) const {
    if (const auto* spec = spec_for_key(key)) {
        return spec->id;
    }
    // A bare id of a variant indicator has no rubric key of its own but is
    // still a valid attribution target (e.g. history rows).
    for (const auto& spec : specs_) {
        if (spec.id == key) {
            return spec.id;
        }
    }
    return std::nullopt;
}

double deviation_percent(double measured, double standard) {
    if (standard == 0.0) {
        throw ZeroStandard("standard value is zero; deviation undefined");
    }
    return 100.0 * (measured - standard) / standard;
}

GradedReading classify(const IndicatorReading& reading, const RubricSet& rubrics) {
    const auto* rubric = rubrics.find_rubric(reading.indicator_id);
    if (rubric == nullptr) {
        throw MissingRubric("no rubric for indicator key '" + reading.indicator_id +
                            "' in rubric set '" + rubrics.id() + "'");
    }

    GradedReading graded;
    graded.rubric_key = reading.indicator_id;
    graded.indicator_id = rubrics.spec_for_key(reading.indicator_id)->id;
    if (const auto* pair = std::get_if<Measurement>(&reading.value)) {
        graded.deviation_pct = deviation_percent(pair->measured, pair->standard);
    } else {
        graded.deviation_pct = std::get<double>(reading.value);
    }
    graded.level = rubric->classify_deviation(graded.deviation_pct);
    graded.score = rubrics.score_map().score_for(graded.level);
    return graded;
}

RubricSet builtin_cable_rubric() {
    std::vector<IndicatorSpec> specs = {
        {"dc_resistance", "20C conductor DC resistance", "ohm/km", {"cu", "al"}},
        {"insulation_min", "minimum insulation thickness", "mm", {}},
        {"insulation_avg", "average insulation thickness", "mm", {}},
        {"sheath_min", "minimum sheath thickness", "mm", {}},
    };

    const auto open_below = [](Level level, double max, bool max_inc) {
        return Band{level, std::nullopt, max, false, max_inc};
    };
    const auto open_above = [](Level level, double min, bool min_inc) {
        return Band{level, min, std::nullopt, min_inc, false};
    };
    const auto closed = [](Level level, double min, bool min_inc, double max, bool max_inc) {
        return Band{level, min, max, min_inc, max_inc};
    };

    std::vector<GradingRubric> rubrics;

    // Resistance grades improve as the deviation goes more negative; the
    // conforming region is delta <= 0.
    rubrics.push_back({"dc_resistance", "cu",
                       {
                           open_below(Level::Excellent, -5.0, true),
                           closed(Level::Good, -5.0, false, -3.0, true),
                           closed(Level::Qualified, -3.0, false, -1.0, true),
                           closed(Level::BasicQualified, -1.0, false, 0.0, true),
                       }});
    // Aluminum and aluminum-alloy conductors share one column.
    rubrics.push_back({"dc_resistance", "al",
                       {
                           open_below(Level::Excellent, -7.0, true),
                           closed(Level::Good, -7.0, false, -4.0, true),
                           closed(Level::Qualified, -4.0, false, -1.0, true),
                           closed(Level::BasicQualified, -1.0, false, 0.0, true),
                       }});
    // Thickness grades improve with positive deviation; conforming region is
    // delta >= 0.
    const std::vector<Band> insulation_bands = {
        open_above(Level::Excellent, 25.0, true),
        closed(Level::Good, 15.0, true, 25.0, false),
        closed(Level::Qualified, 5.0, true, 15.0, false),
        closed(Level::BasicQualified, 0.0, true, 5.0, false),
    };
    rubrics.push_back({"insulation_min", std::nullopt, insulation_bands});
    rubrics.push_back({"insulation_avg", std::nullopt, insulation_bands});
    rubrics.push_back({"sheath_min", std::nullopt,
                       {
                           open_above(Level::Excellent, 50.0, true),
                           closed(Level::Good, 30.0, true, 50.0, false),
                           closed(Level::Qualified, 15.0, true, 30.0, false),
                           closed(Level::BasicQualified, 0.0, true, 15.0, false),
                       }});

    return RubricSet(std::string(kBuiltinCableRubricId), std::move(specs), std::move(rubrics),
                     LevelScoreMap{});
}

}  // namespace gridsampler
