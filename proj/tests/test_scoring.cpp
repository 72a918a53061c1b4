#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "gridsampler/rng.hpp"
#include "gridsampler/scoring.hpp"
#include "worked_example.hpp"

using namespace gridsampler;

namespace {

QualityScore quick_score(const std::string& id, double m) {
    QualityScore s;
    s.item_id = id;
    s.m_score = m;
    return s;
}

}  // namespace

TEST_CASE("combine_graded reproduces the ten worked M scores") {
    const auto weights = testutil::worked_weights();
    for (const auto& row : testutil::worked_rows()) {
        const auto score = combine_graded(row.id, testutil::printed_graded(row), weights);
        CHECK(score.item_id == row.id);
        CHECK(score.j_flag == 1);
        CHECK(std::abs(score.m_score - row.m) < 1e-9);
        CHECK(score.graded.size() == 4);
    }
}

TEST_CASE("one nonconforming reading zeroes the item") {
    const auto weights = testutil::worked_weights();
    auto graded = testutil::printed_graded(testutil::worked_rows()[3]);  // all-conforming row
    graded[3].level = Level::Nonconforming;
    graded[3].score = 0.0;

    const auto score = combine_graded("4", std::move(graded), weights);
    CHECK(score.j_flag == 0);
    CHECK(score.m_score == 0.0);
    CHECK(score.graded.size() == 4);  // gate zeroes M, the evidence stays
}

TEST_CASE("graded readings must cover the weighted indicators exactly") {
    const auto weights = testutil::worked_weights();
    const auto& row = testutil::worked_rows()[0];

    SUBCASE("missing reading") {
        auto graded = testutil::printed_graded(row);
        graded.pop_back();
        CHECK_THROWS_AS(combine_graded("1", std::move(graded), weights), MissingReading);
    }
    SUBCASE("reading without a weight") {
        auto graded = testutil::printed_graded(row);
        graded.push_back({"bend_radius", "bend_radius", 0.0, Level::Good, 85.0});
        CHECK_THROWS_AS(combine_graded("1", std::move(graded), weights), ValidationError);
    }
    SUBCASE("duplicate reading") {
        auto graded = testutil::printed_graded(row);
        graded.push_back(graded.front());
        CHECK_THROWS_AS(combine_graded("1", std::move(graded), weights), ValidationError);
    }
}

TEST_CASE("weights are validated before use") {
    const auto& row = testutil::worked_rows()[0];

    CHECK_THROWS_AS(combine_graded("1", testutil::printed_graded(row), WeightsById{}),
                    ValidationError);

    WeightsById unnormalized = testutil::worked_weights();
    unnormalized["sheath_min"] = 0.5;
    CHECK_THROWS_AS(combine_graded("1", testutil::printed_graded(row), unnormalized),
                    ValidationError);

    WeightsById negative = testutil::worked_weights();
    negative["dc_resistance"] = -0.321;
    CHECK_THROWS_AS(combine_graded("1", testutil::printed_graded(row), negative),
                    ValidationError);
}

TEST_CASE("score_item grades the corrected deviations to the printed scores") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();
    for (const auto& row : testutil::worked_rows()) {
        const auto score = score_item(testutil::fixture_item(row), weights, rubrics);
        CHECK(score.j_flag == 1);
        CHECK(std::abs(score.m_score - row.m) < 1e-9);
        REQUIRE(score.graded.size() == row.cells.size());
        for (std::size_t i = 0; i < row.cells.size(); ++i) {
            CAPTURE(row.id);
            CAPTURE(row.cells[i].key);
            CHECK(score.graded[i].score == row.cells[i].printed_score);
        }
    }
}

TEST_CASE("self-consistent rows also score from their printed deviations") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();
    for (const auto& row : testutil::worked_rows()) {
        if (!row.dev_consistent) {
            continue;
        }
        InspectionItem item;
        item.item_id = row.id;
        for (const auto& cell : row.cells) {
            item.readings.push_back({cell.key, cell.printed_dev});
        }
        const auto score = score_item(item, weights, rubrics);
        CHECK(std::abs(score.m_score - row.m) < 1e-9);
    }
}

TEST_CASE("measured/standard pairs and direct deviations score alike") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();

    InspectionItem direct = testutil::fixture_item(testutil::worked_rows()[0]);
    InspectionItem measured = direct;
    measured.readings[0].value = Measurement{0.976, 1.0};  // -2.4%

    const auto a = score_item(direct, weights, rubrics);
    const auto b = score_item(measured, weights, rubrics);
    CHECK(a.m_score == b.m_score);
    CHECK(b.graded[0].level == Level::Qualified);
    CHECK(b.graded[0].deviation_pct == doctest::Approx(-2.4));
}

TEST_CASE("score_batch preserves input order and rejects duplicate ids") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();

    std::vector<InspectionItem> batch;
    for (const auto& row : testutil::worked_rows()) {
        batch.push_back(testutil::fixture_item(row));
    }
    const auto scores = score_batch(batch, weights, rubrics);
    REQUIRE(scores.size() == batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(scores[i].item_id == batch[i].item_id);
    }

    batch.push_back(testutil::fixture_item(testutil::worked_rows()[0]));
    CHECK_THROWS_AS(score_batch(batch, weights, rubrics), DuplicateItemId);
}

TEST_CASE("score_batch reports every failing item with attribution") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();

    std::vector<InspectionItem> batch;
    batch.push_back(testutil::fixture_item(testutil::worked_rows()[0]));
    auto missing = testutil::fixture_item(testutil::worked_rows()[1]);
    missing.readings.pop_back();
    batch.push_back(missing);
    auto unknown = testutil::fixture_item(testutil::worked_rows()[2]);
    unknown.readings.push_back({"bend_radius", 1.0});
    batch.push_back(unknown);

    try {
        score_batch(batch, weights, rubrics);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("2 item(s)") != std::string::npos);
        CHECK(msg.find("[2]") != std::string::npos);
        CHECK(msg.find("[3]") != std::string::npos);
        CHECK(msg.find("[1]") == std::string::npos);
    }
}

TEST_CASE("rank_and_select walks ascending M and takes the worst k") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();
    std::vector<InspectionItem> batch;
    for (const auto& row : testutil::worked_rows()) {
        batch.push_back(testutil::fixture_item(row));
    }
    const auto scores = score_batch(batch, weights, rubrics);

    const auto plan = rank_and_select(scores, 2);
    CHECK(plan.strategy == SamplingStrategy::AhpAscending);
    CHECK(plan.k == 2);
    CHECK_FALSE(plan.k_clamped);
    CHECK_FALSE(plan.seed.has_value());
    REQUIRE(plan.selected.size() == 2);
    CHECK(plan.selected[0] == "2");
    CHECK(plan.selected[1] == "1");
    REQUIRE(plan.ranking.size() == 10);
    CHECK(plan.ranking[0].item_id == "2");
    CHECK(plan.ranking[0].m_score == doctest::Approx(74.1));
    CHECK(plan.ranking[1].item_id == "1");
    CHECK(plan.ranking[1].m_score == doctest::Approx(77.43));
    CHECK(std::is_sorted(plan.ranking.begin(), plan.ranking.end(),
                         [](const RankedItem& x, const RankedItem& y) {
                             return x.m_score < y.m_score;
                         }));
}

TEST_CASE("ranking is invariant to batch order") {
    const auto rubrics = builtin_cable_rubric();
    const auto weights = testutil::worked_weights();
    std::vector<InspectionItem> batch;
    for (const auto& row : testutil::worked_rows()) {
        batch.push_back(testutil::fixture_item(row));
    }
    const auto forward = rank_and_select(score_batch(batch, weights, rubrics), 4);
    std::reverse(batch.begin(), batch.end());
    const auto backward = rank_and_select(score_batch(batch, weights, rubrics), 4);
    CHECK(forward.selected == backward.selected);
    REQUIRE(forward.ranking.size() == backward.ranking.size());
    for (std::size_t i = 0; i < forward.ranking.size(); ++i) {
        CHECK(forward.ranking[i].item_id == backward.ranking[i].item_id);
    }
}

TEST_CASE("rank_and_select edge cases") {
    std::vector<QualityScore> scores = {quick_score("b", 80.0), quick_score("a", 80.0),
                                        quick_score("c", 80.0), quick_score("z", 0.0)};

    SUBCASE("equal scores break ties by id") {
        const auto plan = rank_and_select(scores, 4);
        REQUIRE(plan.selected.size() == 4);
        CHECK(plan.selected[0] == "z");  // gated item first
        CHECK(plan.selected[1] == "a");
        CHECK(plan.selected[2] == "b");
        CHECK(plan.selected[3] == "c");
    }
    SUBCASE("k = 0 selects nothing but still ranks") {
        const auto plan = rank_and_select(scores, 0);
        CHECK(plan.selected.empty());
        CHECK(plan.ranking.size() == 4);
        CHECK_FALSE(plan.k_clamped);
    }
    SUBCASE("k beyond the batch clamps") {
        const auto plan = rank_and_select(scores, 9);
        CHECK(plan.selected.size() == 4);
        CHECK(plan.k == 9);
        CHECK(plan.k_clamped);
    }
    SUBCASE("negative k is rejected") {
        CHECK_THROWS_AS(rank_and_select(scores, -1), ValidationError);
    }
    SUBCASE("empty batch") {
        const auto plan = rank_and_select({}, 3);
        CHECK(plan.selected.empty());
        CHECK(plan.ranking.empty());
        CHECK(plan.k_clamped);
    }
}

TEST_CASE("random_sample is a deterministic sample without replacement") {
    const std::vector<std::string> ids = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"};

    const auto a = random_sample(ids, 3, 42);
    const auto b = random_sample(ids, 3, 42);
    CHECK(a.selected == b.selected);
    CHECK(a.strategy == SamplingStrategy::Random);
    CHECK(a.seed == 42);
    CHECK(a.k == 3);
    REQUIRE(a.selected.size() == 3);

    // selected ids are distinct members of the pool
    std::set<std::string> uniq(a.selected.begin(), a.selected.end());
    CHECK(uniq.size() == a.selected.size());
    for (const auto& id : a.selected) {
        CHECK(std::find(ids.begin(), ids.end(), id) != ids.end());
    }

    // the full ranking is a permutation of the pool
    std::set<std::string> ranked;
    for (const auto& r : a.ranking) {
        ranked.insert(r.item_id);
    }
    CHECK(ranked == std::set<std::string>(ids.begin(), ids.end()));

    // some seed in a small window produces a different draw
    bool differs = false;
    for (std::uint64_t seed = 43; seed < 53; ++seed) {
        if (random_sample(ids, 3, seed).selected != a.selected) {
            differs = true;
            break;
        }
    }
    CHECK(differs);

    CHECK(random_sample(ids, 0, 7).selected.empty());
    CHECK(random_sample(ids, 99, 7).k_clamped);
    CHECK(random_sample(ids, 99, 7).selected.size() == ids.size());
    CHECK_THROWS_AS(random_sample(ids, -2, 7), ValidationError);
}

TEST_CASE("random_sample draws roughly uniformly") {
    const std::vector<std::string> ids = {"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"};
    std::map<std::string, int> hits;
    const int draws = 2000;
    for (int s = 0; s < draws; ++s) {
        const auto plan = random_sample(ids, 1, static_cast<std::uint64_t>(s));
        ++hits[plan.selected.front()];
    }
    for (const auto& id : ids) {
        CAPTURE(id);
        CHECK(hits[id] > 120);  // expect 200 each; 120..300 is ~6 sigma
        CHECK(hits[id] < 300);
    }
}

TEST_CASE("property: M is zero or inside the conforming score hull") {
    const auto score_map = LevelScoreMap{};
    const Level levels[] = {Level::Excellent, Level::Good, Level::Qualified,
                            Level::BasicQualified, Level::Nonconforming};
    auto rng = seeded_engine(2024);
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t n = 2 + uniform_below(rng, 5);
        WeightsById weights;
        std::vector<double> raw(n);
        double sum = 0.0;
        for (auto& w : raw) {
            w = 0.05 + uniform01(rng);
            sum += w;
        }
        for (std::size_t i = 0; i < n; ++i) {
            weights["ind" + std::to_string(i)] = raw[i] / sum;
        }

        std::vector<GradedReading> graded;
        bool any_bad = false;
        for (std::size_t i = 0; i < n; ++i) {
            const Level level = levels[uniform_below(rng, 5)];
            any_bad = any_bad || level == Level::Nonconforming;
            const double g =
                level == Level::Nonconforming ? 0.0 : score_map.score_for(level);
            graded.push_back({"ind" + std::to_string(i), "ind" + std::to_string(i), 0.0,
                              level, g});
        }

        const auto score = combine_graded("x", std::move(graded), weights);
        CHECK(score.j_flag == (any_bad ? 0 : 1));
        if (any_bad) {
            CHECK(score.m_score == 0.0);
        } else {
            CHECK(score.m_score >= 60.0 - 1e-9);
            CHECK(score.m_score <= 100.0 + 1e-9);
        }
    }
}
