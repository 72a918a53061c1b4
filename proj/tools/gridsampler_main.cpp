// Command-line front end: weights / score / sample / simulate / ri.
// Exit codes: 0 ok, 1 input or validation error, 2 I/O error,
// 3 consistency-gate failure.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridsampler/ahp.hpp"
#include "gridsampler/data_io.hpp"
#include "gridsampler/errors.hpp"
#include "gridsampler/grading.hpp"
#include "gridsampler/scoring.hpp"
#include "gridsampler/simulator.hpp"
#include "gridsampler/version.hpp"

namespace gs = gridsampler;

namespace {

struct CommonOpts {
    std::string rubric_path;  // empty -> built-in cable rubric
    std::string out_path;     // empty -> print to stdout
    double cr_threshold = gs::kDefaultCrThreshold;
    double smoothing_floor = gs::kDefaultSmoothingFloor;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--rubric", opts.rubric_path,
                    "Rubric-set config JSON (default: built-in low-voltage cable rubric)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_path,
                    "Write the result report here (default: print to stdout)");
    cmd->add_option("--cr-threshold", opts.cr_threshold,
                    "Consistency-ratio gate for manual matrices")
        ->capture_default_str();
    cmd->add_option("--smoothing-floor", opts.smoothing_floor,
                    "Lower clamp applied to nonconformity rates before ratios")
        ->capture_default_str();
}

gs::RubricSet resolve_rubric(const CommonOpts& opts, gs::Provenance& prov) {
    if (opts.rubric_path.empty()) {
        auto rubric = gs::builtin_cable_rubric();
        prov.rubric_id = rubric.id();
        return rubric;
    }
    auto rubric = gs::load_rubric(opts.rubric_path);
    prov.rubric_id = rubric.id();
    prov.inputs.push_back(
        {"rubric", opts.rubric_path, "fnv1a64:" + gs::fnv1a64_file(opts.rubric_path)});
    return rubric;
}

void record_input(gs::Provenance& prov, const std::string& role, const std::string& path) {
    prov.inputs.push_back({role, path, "fnv1a64:" + gs::fnv1a64_file(path)});
}

void finalize_provenance(gs::Provenance& prov) {
    prov.tool_version = gs::kToolVersion;
    prov.run_id = gs::compute_run_id(prov);
    prov.timestamp = gs::iso8601_utc_now();
}

/// Writes the report to --out (printing a short summary on stdout), or dumps
/// the whole JSON document to stdout when no --out was given.
void emit_report(gs::ResultReport& report, const CommonOpts& opts,
                 const std::string& summary) {
    finalize_provenance(report.provenance);
    if (opts.out_path.empty()) {
        std::cout << gs::report_to_json_string(report);
        return;
    }
    gs::write_report(report, opts.out_path);
    if (!summary.empty()) {
        std::cout << summary;
    }
    std::cout << "report: " << opts.out_path << "\n";
}

/// "p/q" fractions and plain decimals, full-match.
double parse_ratio(const std::string& token, const std::string& file, long line) {
    const auto parse_part = [&](std::string_view text) {
        double value = 0.0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
        if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
            throw gs::ParseError(file, line, "matrix entry",
                                 "'" + std::string(text) + "' is not a number");
        }
        return value;
    };
    const auto slash = token.find('/');
    if (slash == std::string::npos) {
        return parse_part(token);
    }
    const double num = parse_part(std::string_view(token).substr(0, slash));
    const double den = parse_part(std::string_view(token).substr(slash + 1));
    if (den == 0.0) {
        throw gs::ParseError(file, line, "matrix entry", "division by zero in '" + token + "'");
    }
    return num / den;
}

bool looks_numeric(const std::string& token) {
    return !token.empty() &&
           (std::isdigit(static_cast<unsigned char>(token[0])) || token[0] == '-' ||
            token[0] == '+' || token[0] == '.');
}

std::vector<std::string> split_tokens(const std::string& line) {
    std::string normalized = line;
    for (auto& c : normalized) {
        if (c == ',' || c == '\t') c = ' ';
    }
    std::istringstream in(normalized);
    std::vector<std::string> tokens;
    std::string token;
    while (in >> token) tokens.push_back(token);
    return tokens;
}

struct ManualMatrix {
    std::vector<std::string> ids;
    gs::ComparisonMatrix matrix{2};
};

/// Text format: optional first line of indicator ids, then n rows of n
/// entries (decimal or p/q), separated by commas or whitespace.
ManualMatrix load_manual_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw gs::IoError("cannot open '" + path + "' for reading");
    }

    std::vector<std::string> ids;
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto tokens = split_tokens(line);
        if (tokens.empty() || tokens.front().starts_with("#")) continue;
        if (rows.empty() && ids.empty() && !looks_numeric(tokens.front())) {
            ids = std::move(tokens);
            continue;
        }
        std::vector<double> row;
        row.reserve(tokens.size());
        for (const auto& t : tokens) {
            row.push_back(parse_ratio(t, path, line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw gs::ParseError(path, line_no, "matrix", "no matrix rows found");
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) {
            throw gs::ParseError(path, static_cast<long>(i) + (ids.empty() ? 1 : 2), "matrix",
                                 "row has " + std::to_string(rows[i].size()) +
                                     " entries, expected " + std::to_string(rows.size()));
        }
    }
    if (!ids.empty() && ids.size() != rows.size()) {
        throw gs::ParseError(path, 1, "header",
                             "header names " + std::to_string(ids.size()) +
                                 " indicators, matrix has " + std::to_string(rows.size()));
    }
    if (ids.empty()) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            ids.push_back("c" + std::to_string(i + 1));
        }
    }

    ManualMatrix out;
    out.ids = std::move(ids);
    out.matrix = gs::ComparisonMatrix::from_rows(rows);
    return out;
}

std::vector<std::vector<double>> matrix_rows(const gs::ComparisonMatrix& m) {
    std::vector<std::vector<double>> rows(m.order(), std::vector<double>(m.order()));
    for (int i = 0; i < m.order(); ++i) {
        for (int j = 0; j < m.order(); ++j) {
            rows[i][j] = m(i, j);
        }
    }
    return rows;
}

gs::WeightsById by_id(const std::vector<std::string>& ids, const gs::WeightVector& w) {
    gs::WeightsById out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out[ids[i]] = w.values[i];
    }
    return out;
}

/// Shared by `weights` and the weights-from-history paths of `score` and
/// `sample`: history -> rates -> matrix -> weights -> consistency.
void derive_weights_from_history(const std::string& history_path, const gs::RubricSet& rubric,
                                 const CommonOpts& opts, gs::ResultReport& report) {
    auto records = gs::canonicalize_history(gs::load_history(history_path), rubric);
    const auto ids = rubric.indicator_ids();
    const auto rates = gs::compute_rates(records, ids);
    const auto matrix = gs::build_matrix_from_rates(rates, opts.smoothing_floor);

    report.indicator_order = ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        report.rates[ids[i]] = {rates.rates[i], rates.sample_counts[i]};
    }
    report.matrix = matrix_rows(matrix);
    const auto consistency = gs::consistency_report(matrix, opts.cr_threshold);
    report.consistency = consistency;
    report.weights = by_id(ids, gs::principal_eigen(matrix).weights);
    report.weights_by_method["power_iteration"] = report.weights;
    report.weights_by_method["geometric_mean"] = by_id(ids, gs::weights_geometric_mean(matrix));
    report.weights_by_method["sum_product"] = by_id(ids, gs::weights_sum_product(matrix));
    report.provenance.weights_source = "history";
    record_input(report.provenance, "history", history_path);
}

std::string weights_summary(const gs::ResultReport& report) {
    std::ostringstream out;
    for (const auto& id : report.indicator_order) {
        out << "w(" << id << ") = " << report.weights.at(id) << "\n";
    }
    if (report.consistency) {
        const auto& c = *report.consistency;
        out << "lambda_max = " << c.lambda_max << "  CI = " << c.ci << "  RI = " << c.ri
            << "  CR = " << c.cr << "  [" << (c.pass ? "pass" : "fail") << "]\n";
    }
    return out.str();
}

void cmd_weights(const CommonOpts& opts, const std::string& history_path,
                 const std::string& matrix_path) {
    gs::ResultReport report;

    if (!history_path.empty()) {
        const auto rubric = resolve_rubric(opts, report.provenance);
        derive_weights_from_history(history_path, rubric, opts, report);
        emit_report(report, opts, weights_summary(report));
        return;
    }

    // Manual Saaty-scale matrix: the one path where the CR gate can fail.
    auto manual = load_manual_matrix(matrix_path);
    gs::require_valid(manual.matrix);
    report.indicator_order = manual.ids;
    report.matrix = matrix_rows(manual.matrix);
    const auto consistency = gs::consistency_report(manual.matrix, opts.cr_threshold);
    report.consistency = consistency;
    report.weights = by_id(manual.ids, gs::principal_eigen(manual.matrix).weights);
    report.weights_by_method["power_iteration"] = report.weights;
    report.weights_by_method["geometric_mean"] =
        by_id(manual.ids, gs::weights_geometric_mean(manual.matrix));
    report.weights_by_method["sum_product"] =
        by_id(manual.ids, gs::weights_sum_product(manual.matrix));
    report.provenance.weights_source = "matrix";
    record_input(report.provenance, "matrix", matrix_path);

    // The report is still written so the operator can see which judgments to
    // revisit; the exit code carries the verdict.
    emit_report(report, opts, weights_summary(report));
    if (!consistency.pass) {
        std::ostringstream msg;
        msg << "consistency gate failed: CR = " << consistency.cr
            << " >= " << opts.cr_threshold << " (revise the judgment matrix)";
        throw gs::ConsistencyGateError(msg.str());
    }
}

/// Weights for scoring come from a prior report file or are derived from
/// history on the spot; either way the report records the source.
gs::WeightsById obtain_weights(const CommonOpts& opts, const std::string& weights_path,
                               const std::string& history_path, const gs::RubricSet& rubric,
                               gs::ResultReport& report) {
    if (!weights_path.empty()) {
        const auto source = gs::load_report(weights_path);
        if (source.weights.empty()) {
            throw gs::ValidationError("'" + weights_path + "' has no weights section");
        }
        report.provenance.weights_source = "weights_file";
        record_input(report.provenance, "weights", weights_path);
        return source.weights;
    }
    derive_weights_from_history(history_path, rubric, opts, report);
    return report.weights;
}

std::string scores_summary(const std::vector<gs::QualityScore>& scores) {
    std::ostringstream out;
    for (const auto& s : scores) {
        out << s.item_id << "  J=" << s.j_flag << "  M=" << s.m_score << "\n";
    }
    return out.str();
}

void cmd_score(const CommonOpts& opts, const std::string& batch_path,
               const std::string& weights_path, const std::string& history_path) {
    gs::ResultReport report;
    const auto rubric = resolve_rubric(opts, report.provenance);
    if (report.indicator_order.empty()) {
        report.indicator_order = rubric.indicator_ids();
    }

    const auto weights = obtain_weights(opts, weights_path, history_path, rubric, report);
    const auto items = gs::load_batch(batch_path, rubric);
    record_input(report.provenance, "batch", batch_path);
    report.scores = gs::score_batch(items, weights, rubric);

    emit_report(report, opts, scores_summary(report.scores));
}

void cmd_sample(const CommonOpts& opts, const std::string& in_path,
                const std::string& batch_path, const std::string& weights_path,
                const std::string& history_path, int k, const std::string& strategy_name_arg,
                std::optional<std::uint64_t> seed) {
    const auto strategy = gs::strategy_from_name(strategy_name_arg);
    if (!strategy) {
        throw gs::ValidationError("unknown strategy '" + strategy_name_arg +
                                  "' (expected ahp or random)");
    }

    gs::ResultReport report;
    if (!in_path.empty()) {
        const auto source = gs::load_report(in_path);
        if (source.scores.empty()) {
            throw gs::ValidationError("'" + in_path + "' has no scores section");
        }
        report.indicator_order = source.indicator_order;
        report.scores = source.scores;
        report.provenance.rubric_id = source.provenance.rubric_id;
        report.provenance.weights_source = source.provenance.weights_source;
        record_input(report.provenance, "scored_report", in_path);
    } else {
        const auto rubric = resolve_rubric(opts, report.provenance);
        if (report.indicator_order.empty()) {
            report.indicator_order = rubric.indicator_ids();
        }
        const auto weights = obtain_weights(opts, weights_path, history_path, rubric, report);
        const auto items = gs::load_batch(batch_path, rubric);
        record_input(report.provenance, "batch", batch_path);
        report.scores = gs::score_batch(items, weights, rubric);
    }

    if (*strategy == gs::SamplingStrategy::AhpAscending) {
        report.plan = gs::rank_and_select(report.scores, k);
    } else {
        if (!seed) {
            // No seed given: draw one and record it so the run stays
            // reproducible from the report alone.
            seed = std::random_device{}();
        }
        std::vector<std::string> ids;
        ids.reserve(report.scores.size());
        for (const auto& s : report.scores) ids.push_back(s.item_id);
        report.plan = gs::random_sample(ids, k, *seed);
    }
    report.provenance.seed = seed;

    std::ostringstream summary;
    summary << "selected (" << gs::strategy_name(report.plan->strategy) << "):";
    for (const auto& id : report.plan->selected) summary << " " << id;
    summary << "\n";
    emit_report(report, opts, summary.str());
}

gs::NoiseSpec noise_from_json(const nlohmann::json& j, const gs::NoiseSpec& base) {
    gs::NoiseSpec noise = base;
    noise.excellent_prob = j.value("excellent_prob", noise.excellent_prob);
    noise.unbounded_span = j.value("unbounded_span", noise.unbounded_span);
    return noise;
}

void cmd_simulate(const CommonOpts& opts, const std::string& config_path,
                  std::optional<std::uint64_t> seed_flag) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        throw gs::IoError("cannot open '" + config_path + "' for reading");
    }
    nlohmann::json config;
    try {
        config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw gs::ParseError(config_path, 0, "json", e.what());
    }

    gs::Provenance prov;  // rubric resolution wants one; simulate emits CSV
    const auto rubric = resolve_rubric(opts, prov);

    gs::BatchGenSpec spec;
    try {
        spec.batch_size = config.at("batch_size").get<int>();
        spec.planted_bad = config.at("planted_bad").get<int>();
        if (config.contains("regime")) {
            const auto name = config.at("regime").get<std::string>();
            const auto regime = gs::plant_regime_from_name(name);
            if (!regime) {
                throw gs::ValidationError("unknown regime '" + name +
                                          "' (expected marginal or defective)");
            }
            spec.regime = *regime;
        }
        if (config.contains("noise")) {
            spec.noise = noise_from_json(config.at("noise"), spec.noise);
        }
        for (const auto& [id, nj] :
             config.value("per_indicator_noise", nlohmann::json::object()).items()) {
            spec.per_indicator_noise[id] = noise_from_json(nj, spec.noise);
        }

        const int k = config.at("k").get<int>();
        const int trials = config.at("trials").get<int>();
        std::uint64_t seed = config.value("seed", std::uint64_t{0});
        if (seed_flag) seed = *seed_flag;

        gs::WeightsById weights;
        if (config.contains("weights")) {
            for (const auto& [id, w] : config.at("weights").items()) {
                weights[id] = w.get<double>();
            }
        } else {
            // Uniform weights: the simulator's claim should not depend on a
            // particular history.
            const auto ids = rubric.indicator_ids();
            for (const auto& id : ids) {
                weights[id] = 1.0 / static_cast<double>(ids.size());
            }
        }

        const auto comparison = gs::run_comparison(spec, weights, rubric, k, trials, seed);

        nlohmann::ordered_json summary;
        summary["mean_capture_ahp"] = comparison.summary.mean_capture_ahp;
        summary["mean_capture_random"] = comparison.summary.mean_capture_random;
        summary["wins_ahp"] = comparison.summary.wins_ahp;
        summary["wins_random"] = comparison.summary.wins_random;
        summary["ties"] = comparison.summary.ties;
        summary["sign_test_p"] = comparison.summary.sign_test_p;

        if (opts.out_path.empty()) {
            std::cout << "summary " << summary.dump() << "\n";
        } else {
            gs::write_comparison_csv(comparison, opts.out_path);
            std::cout << "summary " << summary.dump() << "\n";
            std::cout << "trials csv: " << opts.out_path << "\n";
        }
    } catch (const nlohmann::json::exception& e) {
        throw gs::ParseError(config_path, 0, "json", e.what());
    }
}

void cmd_ri(const CommonOpts& opts, int n, long long trials, std::uint64_t seed) {
    const auto estimate = gs::monte_carlo_ri(n, trials, seed);
    nlohmann::ordered_json doc;
    doc["n"] = n;
    doc["trials"] = trials;
    doc["seed"] = seed;
    doc["ri"] = estimate.value;
    doc["skipped"] = estimate.skipped;
    doc["table_ri"] = (n >= 1 && n <= 15) ? nlohmann::json(gs::random_index(n))
                                          : nlohmann::json(nullptr);
    doc["tool_version"] = gs::kToolVersion;
    const auto text = doc.dump(2) + "\n";
    if (opts.out_path.empty()) {
        std::cout << text;
    } else {
        gs::atomic_write_text(opts.out_path, text);
        std::cout << "ri(" << n << ") = " << estimate.value << "  (trials=" << trials
                  << ", skipped=" << estimate.skipped << ", seed=" << seed << ")\n";
        std::cout << "report: " << opts.out_path << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AHP-weighted material inspection sampling toolchain"};
    app.set_version_flag("--version", std::string(gs::kToolVersion));
    app.require_subcommand(1);

    CommonOpts weights_opts;
    std::string weights_history, weights_matrix;
    auto* weights_cmd = app.add_subcommand(
        "weights", "Derive indicator weights (history rates or a manual judgment matrix)");
    add_common(weights_cmd, weights_opts);
    auto* opt_history = weights_cmd
                            ->add_option("--history", weights_history,
                                         "History CSV: report_id,indicator_id,conforming")
                            ->check(CLI::ExistingFile);
    weights_cmd
        ->add_option("--matrix", weights_matrix,
                     "Manual judgment matrix file (rows of ratios, 'p/q' accepted)")
        ->check(CLI::ExistingFile)
        ->excludes(opt_history);

    CommonOpts score_opts;
    std::string score_batch, score_weights, score_history;
    auto* score_cmd = app.add_subcommand("score", "Grade and score a measured batch");
    add_common(score_cmd, score_opts);
    score_cmd
        ->add_option("--batch", score_batch,
                     "Batch CSV: item_id,indicator_id,measured,standard,deviation_pct")
        ->required()
        ->check(CLI::ExistingFile);
    auto* opt_score_weights =
        score_cmd->add_option("--weights", score_weights, "Weights report JSON from `weights`")
            ->check(CLI::ExistingFile);
    score_cmd->add_option("--history", score_history, "Derive weights from this history CSV")
        ->check(CLI::ExistingFile)
        ->excludes(opt_score_weights);

    CommonOpts sample_opts;
    std::string sample_in, sample_batch, sample_weights, sample_history;
    std::string sample_strategy = "ahp";
    int sample_k = 0;
    std::optional<std::uint64_t> sample_seed;
    auto* sample_cmd =
        app.add_subcommand("sample", "Rank a scored batch and select k items for testing");
    add_common(sample_cmd, sample_opts);
    auto* opt_sample_in =
        sample_cmd->add_option("--in", sample_in, "Scored report JSON from `score`")
            ->check(CLI::ExistingFile);
    sample_cmd->add_option("--batch", sample_batch, "Batch CSV (scored on the fly)")
        ->check(CLI::ExistingFile)
        ->excludes(opt_sample_in);
    sample_cmd->add_option("--weights", sample_weights, "Weights report JSON")
        ->check(CLI::ExistingFile);
    sample_cmd->add_option("--history", sample_history, "Derive weights from this history CSV")
        ->check(CLI::ExistingFile);
    sample_cmd->add_option("--k", sample_k, "Sample size")->required();
    sample_cmd->add_option("--strategy", sample_strategy, "ahp | random")
        ->capture_default_str();
    sample_cmd->add_option("--seed", sample_seed, "Seed for the random strategy");

    CommonOpts sim_opts;
    std::string sim_config;
    std::optional<std::uint64_t> sim_seed;
    auto* sim_cmd = app.add_subcommand(
        "simulate", "Planted-defect comparison of AHP-guided vs random sampling");
    add_common(sim_cmd, sim_opts);
    sim_cmd->add_option("--config", sim_config, "Simulation spec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sim_cmd->add_option("--seed", sim_seed, "Override the config seed");

    CommonOpts ri_opts;
    int ri_n = 0;
    long long ri_trials = 100'000;
    std::uint64_t ri_seed = 0;
    auto* ri_cmd =
        app.add_subcommand("ri", "Monte Carlo random-index estimate for order n");
    add_common(ri_cmd, ri_opts);
    ri_cmd->add_option("--n", ri_n, "Matrix order")->required();
    ri_cmd->add_option("--trials", ri_trials, "Random matrices to average")
        ->capture_default_str();
    ri_cmd->add_option("--seed", ri_seed, "RNG seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (weights_cmd->parsed()) {
            if (weights_history.empty() == weights_matrix.empty()) {
                throw gs::ValidationError("pass exactly one of --history or --matrix");
            }
            cmd_weights(weights_opts, weights_history, weights_matrix);
        } else if (score_cmd->parsed()) {
            if (score_weights.empty() == score_history.empty()) {
                throw gs::ValidationError("pass exactly one of --weights or --history");
            }
            cmd_score(score_opts, score_batch, score_weights, score_history);
        } else if (sample_cmd->parsed()) {
            if (sample_in.empty()) {
                if (sample_batch.empty()) {
                    throw gs::ValidationError("pass --in or --batch");
                }
                if (sample_weights.empty() == sample_history.empty()) {
                    throw gs::ValidationError("pass exactly one of --weights or --history");
                }
            }
            cmd_sample(sample_opts, sample_in, sample_batch, sample_weights, sample_history,
                       sample_k, sample_strategy, sample_seed);
        } else if (sim_cmd->parsed()) {
            cmd_simulate(sim_opts, sim_config, sim_seed);
        } else if (ri_cmd->parsed()) {
            cmd_ri(ri_opts, ri_n, ri_trials, ri_seed);
        }
    } catch (const gs::ConsistencyGateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const gs::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const gs::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const gs::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
