#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "gridsampler/simulator.hpp"
#include "worked_example.hpp"
#include "test_util.hpp"

using namespace gridsampler;

namespace {

BatchGenSpec small_spec() {
    BatchGenSpec spec;
    spec.batch_size = 40;
    spec.planted_bad = 7;
    spec.regime = PlantRegime::Defective;
    spec.seed = 123;
    return spec;
}

WeightsById uniform_weights(const RubricSet& rubrics) {
    WeightsById weights;
    const auto ids = rubrics.indicator_ids();
    for (const auto& id : ids) {
        weights[id] = 1.0 / static_cast<double>(ids.size());
    }
    return weights;
}

int nonconforming_count(const QualityScore& score) {
    int n = 0;
    for (const auto& g : score.graded) {
        n += g.level == Level::Nonconforming ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_CASE("regime names round-trip") {
    CHECK(plant_regime_name(PlantRegime::Marginal) == "marginal");
    CHECK(plant_regime_from_name("defective") == PlantRegime::Defective);
    CHECK_FALSE(plant_regime_from_name("sneaky").has_value());
}

TEST_CASE("generate_batch is deterministic per seed") {
    const auto rubrics = builtin_cable_rubric();
    const auto spec = small_spec();

    const auto a = generate_batch(spec, rubrics);
    const auto b = generate_batch(spec, rubrics);
    REQUIRE(a.items.size() == b.items.size());
    CHECK(a.planted_ids == b.planted_ids);
    for (std::size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].item_id == b.items[i].item_id);
        CHECK(a.items[i].readings == b.items[i].readings);
    }

    auto other = spec;
    other.seed = 124;
    const auto c = generate_batch(other, rubrics);
    bool any_difference = c.planted_ids != a.planted_ids;
    for (std::size_t i = 0; !any_difference && i < a.items.size(); ++i) {
        any_difference = !(a.items[i].readings == c.items[i].readings);
    }
    CHECK(any_difference);
}

TEST_CASE("defective plants grade nonconforming on exactly one indicator") {
    const auto rubrics = builtin_cable_rubric();
    const auto spec = small_spec();
    const auto batch = generate_batch(spec, rubrics);

    REQUIRE(static_cast<int>(batch.items.size()) == spec.batch_size);
    REQUIRE(static_cast<int>(batch.planted_ids.size()) == spec.planted_bad);
    CHECK(std::is_sorted(batch.planted_ids.begin(), batch.planted_ids.end()));

    const std::set<std::string> planted(batch.planted_ids.begin(), batch.planted_ids.end());
    const auto scores = score_batch(batch.items, uniform_weights(rubrics), rubrics);
    for (const auto& score : scores) {
        if (planted.count(score.item_id)) {
            CHECK(score.j_flag == 0);
            CHECK(score.m_score == 0.0);
            CHECK(nonconforming_count(score) == 1);
        } else {
            CHECK(score.j_flag == 1);
            CHECK(score.m_score >= 85.0 - 1e-9);  // healthy readings are Good or better
            CHECK(nonconforming_count(score) == 0);
        }
    }
}

TEST_CASE("defective deviations stay near the conforming hull") {
    const auto rubrics = builtin_cable_rubric();
    auto spec = small_spec();
    spec.batch_size = 60;
    spec.planted_bad = 60;  // every item planted: exercises all indicators
    const auto batch = generate_batch(spec, rubrics);

    for (const auto& item : batch.items) {
        for (const auto& reading : item.readings) {
            const auto graded = classify(reading, rubrics);
            if (graded.level != Level::Nonconforming) {
                continue;
            }
            if (graded.rubric_key == "dc_resistance_cu") {
                CHECK(graded.deviation_pct > 0.0);
                CHECK(graded.deviation_pct <= 5.0);
            } else {
                CHECK(graded.deviation_pct < 0.0);
                CHECK(graded.deviation_pct >= -5.0);
            }
        }
    }
}

TEST_CASE("marginal plants conform but sit in the worst band") {
    const auto rubrics = builtin_cable_rubric();
    auto spec = small_spec();
    spec.regime = PlantRegime::Marginal;
    const auto batch = generate_batch(spec, rubrics);

    const std::set<std::string> planted(batch.planted_ids.begin(), batch.planted_ids.end());
    const auto scores = score_batch(batch.items, uniform_weights(rubrics), rubrics);
    for (const auto& score : scores) {
        CHECK(score.j_flag == 1);  // marginal batches never trip the gate
        if (!planted.count(score.item_id)) {
            continue;
        }
        int basic = 0;
        for (const auto& g : score.graded) {
            if (g.level == Level::BasicQualified) {
                ++basic;
            } else {
                CHECK(level_name(g.level) != "Nonconforming");
            }
        }
        CHECK(basic == 1);
    }
}

TEST_CASE("generated item ids are zero-padded and unique") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 5;
    spec.planted_bad = 0;
    spec.seed = 1;
    const auto batch = generate_batch(spec, rubrics);
    REQUIRE(batch.items.size() == 5);
    CHECK(batch.items.front().item_id == "item001");
    CHECK(batch.items.back().item_id == "item005");
    CHECK(batch.planted_ids.empty());

    std::set<std::string> ids;
    for (const auto& item : batch.items) ids.insert(item.item_id);
    CHECK(ids.size() == batch.items.size());
}

TEST_CASE("batch spec validation") {
    BatchGenSpec spec = small_spec();
    SUBCASE("zero batch") {
        spec.batch_size = 0;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("too many plants") {
        spec.planted_bad = spec.batch_size + 1;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("excellent_prob out of range") {
        spec.noise.excellent_prob = 1.5;
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("non-positive span") {
        spec.per_indicator_noise["sheath_min"] = {0.5, 0.0};
        CHECK_THROWS_AS(spec.validate(), ValidationError);
    }
    SUBCASE("valid spec passes") {
        CHECK_NOTHROW(spec.validate());
    }
}

TEST_CASE("sign test matches closed-form binomial tails") {
    CHECK(sign_test_p_one_sided(0, 0) == 1.0);
    CHECK(sign_test_p_one_sided(0, 5) == doctest::Approx(1.0));
    CHECK(sign_test_p_one_sided(3, 0) == doctest::Approx(0.125));
    CHECK(sign_test_p_one_sided(1, 1) == doctest::Approx(0.75));
    CHECK(sign_test_p_one_sided(2, 0) == doctest::Approx(0.25));
    CHECK(sign_test_p_one_sided(10, 0) == doctest::Approx(std::pow(0.5, 10)));
    CHECK(sign_test_p_one_sided(8, 2) < sign_test_p_one_sided(5, 5));
    CHECK_THROWS_AS(sign_test_p_one_sided(-1, 0), ValidationError);
}

TEST_CASE("run_comparison captures every defective plant when k covers them") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 30;
    spec.planted_bad = 3;
    spec.regime = PlantRegime::Defective;

    const int trials = 25;
    const auto result =
        run_comparison(spec, testutil::worked_weights(), rubrics, 5, trials, 99);

    REQUIRE(result.results.size() == 2 * trials);
    for (int t = 0; t < trials; ++t) {
        const auto& ahp = result.results[2 * t];
        const auto& rnd = result.results[2 * t + 1];
        CHECK(ahp.trial == t + 1);
        CHECK(rnd.trial == t + 1);
        CHECK(ahp.strategy == SamplingStrategy::AhpAscending);
        CHECK(rnd.strategy == SamplingStrategy::Random);
        CHECK(ahp.k == 5);
        CHECK(ahp.captured == 3);  // M = 0 items always sort first
        CHECK(ahp.capture_rate == 1.0);
        CHECK(rnd.captured >= 0);
        CHECK(rnd.captured <= 3);
    }

    const auto& s = result.summary;
    CHECK(s.trials == trials);
    CHECK(s.k == 5);
    CHECK(s.batch_size == 30);
    CHECK(s.planted_bad == 3);
    CHECK(s.regime == PlantRegime::Defective);
    CHECK(s.seed == 99);
    CHECK(s.mean_capture_ahp == 1.0);
    CHECK(s.mean_capture_random < 1.0);
    CHECK(s.sign_test_p == sign_test_p_one_sided(s.wins_ahp, s.wins_random));
    CHECK(s.wins_ahp + s.wins_random + s.ties == trials);
}

TEST_CASE("run_comparison is reproducible per seed") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 20;
    spec.planted_bad = 4;
    spec.seed = 777;  // must be ignored: the run seed governs

    const auto weights = uniform_weights(rubrics);
    const auto a = run_comparison(spec, weights, rubrics, 5, 10, 31);
    spec.seed = 778;
    const auto b = run_comparison(spec, weights, rubrics, 5, 10, 31);
    REQUIRE(a.results.size() == b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        CHECK(a.results[i].captured == b.results[i].captured);
    }
    CHECK(a.summary.mean_capture_random == b.summary.mean_capture_random);

    const auto c = run_comparison(spec, weights, rubrics, 5, 10, 32);
    bool differs = false;
    for (std::size_t i = 0; i < a.results.size() && !differs; ++i) {
        differs = a.results[i].captured != c.results[i].captured;
    }
    CHECK(differs);
}

TEST_CASE("random capture hovers near the hypergeometric mean") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 20;
    spec.planted_bad = 4;

    const auto result =
        run_comparison(spec, uniform_weights(rubrics), rubrics, 5, 300, 5);
    // E[capture] = k / batch = 0.25; se of the mean over 300 trials ~ 0.012.
    CHECK(result.summary.mean_capture_random > 0.15);
    CHECK(result.summary.mean_capture_random < 0.35);
}

TEST_CASE("degenerate comparison setups") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = uniform_weights(rubrics);
    BatchGenSpec spec;
    spec.batch_size = 12;
    spec.planted_bad = 2;

    SUBCASE("k equal to the batch size ties every trial") {
        const auto result = run_comparison(spec, weights, rubrics, 12, 8, 3);
        CHECK(result.summary.mean_capture_ahp == 1.0);
        CHECK(result.summary.mean_capture_random == 1.0);
        CHECK(result.summary.ties == 8);
        CHECK(result.summary.sign_test_p == 1.0);
    }
    SUBCASE("nothing planted counts as full capture") {
        spec.planted_bad = 0;
        const auto result = run_comparison(spec, weights, rubrics, 3, 5, 3);
        CHECK(result.summary.mean_capture_ahp == 1.0);
        CHECK(result.summary.mean_capture_random == 1.0);
    }
    SUBCASE("invalid arguments") {
        CHECK_THROWS_AS(run_comparison(spec, weights, rubrics, 3, 0, 1), ValidationError);
        CHECK_THROWS_AS(run_comparison(spec, weights, rubrics, -1, 5, 1), ValidationError);
    }
}

TEST_CASE("marginal regime still favors guided sampling") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 40;
    spec.planted_bad = 6;
    spec.regime = PlantRegime::Marginal;

    const auto result =
        run_comparison(spec, testutil::worked_weights(), rubrics, 10, 200, 17);
    CHECK(result.summary.mean_capture_ahp > result.summary.mean_capture_random);
    CHECK(result.summary.sign_test_p < 0.05);
}

TEST_CASE("comparison csv carries rows plus a summary footer") {
    const auto rubrics = builtin_cable_rubric();
    BatchGenSpec spec;
    spec.batch_size = 15;
    spec.planted_bad = 3;
    const auto result =
        run_comparison(spec, uniform_weights(rubrics), rubrics, 4, 6, 21);

    testutil::TempDir dir;
    const auto path = dir / "trials.csv";
    write_comparison_csv(result, path);

    const auto text = testutil::read_file(path);
    std::vector<std::string> lines;
    std::string current;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    REQUIRE(lines.size() == 2 + 2 * 6);
    CHECK(lines.front() == "trial,strategy,k,captured,capture_rate");
    CHECK(lines[1].rfind("1,ahp_ascending,4,", 0) == 0);
    CHECK(lines[2].rfind("1,random,4,", 0) == 0);

    const std::string prefix = "# summary ";
    REQUIRE(lines.back().rfind(prefix, 0) == 0);
    const auto summary = nlohmann::json::parse(lines.back().substr(prefix.size()));
    CHECK(summary.at("trials") == 6);
    CHECK(summary.at("k") == 4);
    CHECK(summary.at("batch_size") == 15);
    CHECK(summary.at("planted_bad") == 3);
    CHECK(summary.at("regime") == "defective");
    CHECK(summary.at("seed") == 21);
    CHECK(summary.at("mean_capture_ahp").get<double>() ==
          doctest::Approx(result.summary.mean_capture_ahp));
    CHECK(summary.at("wins_ahp").get<int>() == result.summary.wins_ahp);
}
