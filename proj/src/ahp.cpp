#include "gridsampler/ahp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gridsampler/rng.hpp"

namespace gridsampler {

namespace {

constexpr double kReciprocityTol = 1e-9;

}  // namespace

ComparisonMatrix::ComparisonMatrix(int order)
    : order_(order), entries_(static_cast<std::size_t>(order) * order, 1.0) {
    if (order < 1) {
        throw OrderOutOfRange("comparison matrix order must be >= 1, got " +
                              std::to_string(order));
    }
}

ComparisonMatrix::ComparisonMatrix(int order, std::vector<double> row_major_entries)
    : order_(order), entries_(std::move(row_major_entries)) {
    if (order < 1) {
        throw OrderOutOfRange("comparison matrix order must be >= 1, got " +
                              std::to_string(order));
    }
    if (entries_.size() != static_cast<std::size_t>(order) * order) {
        throw ValidationError("entry count " + std::to_string(entries_.size()) +
                              " does not match order " + std::to_string(order));
    }
}

ComparisonMatrix ComparisonMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(n) * n);
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != n) {
            throw ValidationError("comparison matrix rows must all have length " +
                                  std::to_string(n));
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return ComparisonMatrix(n, std::move(flat));
}

void ComparisonMatrix::set_pair(int i, int j, double value) {
    entries_[idx(i, j)] = value;
    entries_[idx(j, i)] = 1.0 / value;
}

void NonconformityRates::validate() const {
    if (rates.size() != sample_counts.size()) {
        throw ValidationError("rates and sample_counts differ in length (" +
                              std::to_string(rates.size()) + " vs " +
                              std::to_string(sample_counts.size()) + ")");
    }
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (!(rates[i] >= 0.0 && rates[i] <= 1.0)) {
            throw ValidationError("nonconformity rate " + std::to_string(i + 1) + " is " +
                                  std::to_string(rates[i]) + ", outside [0, 1]");
        }
        if (sample_counts[i] < 1) {
            throw ValidationError("sample count " + std::to_string(i + 1) +
                                  " must be >= 1, got " + std::to_string(sample_counts[i]));
        }
    }
}

std::string matrix_defect_name(MatrixDefect d) {
    switch (d) {
        case MatrixDefect::NonPositiveEntry: return "NonPositiveEntry";
        case MatrixDefect::ReciprocityViolation: return "ReciprocityViolation";
        case MatrixDefect::DiagonalNotOne: return "DiagonalNotOne";
        case MatrixDefect::OrderOutOfRange: return "OrderOutOfRange";
    }
    return "Unknown";
}

std::string MatrixValidation::summary() const {
    if (ok) {
        return "valid";
    }
    std::ostringstream out;
    out << violations.size() << " violation(s):";
    for (const auto& v : violations) {
        out << " " << matrix_defect_name(v.kind) << " at (" << v.row + 1 << "," << v.col + 1
            << ") value " << v.value << ";";
    }
    return out.str();
}

MatrixValidation validate_matrix(const ComparisonMatrix& m) {
    MatrixValidation result;
    const int n = m.order();

    if (n < ComparisonMatrix::kMinOrder || n > ComparisonMatrix::kMaxOrder) {
        result.violations.push_back(
            {MatrixDefect::OrderOutOfRange, 0, 0, static_cast<double>(n)});
    }

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double a = m(i, j);
            if (!(a > 0.0) || !std::isfinite(a)) {
                result.violations.push_back({MatrixDefect::NonPositiveEntry, i, j, a});
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (m(i, i) != 1.0) {
            result.violations.push_back({MatrixDefect::DiagonalNotOne, i, i, m(i, i)});
        }
    }
    // One reciprocity violation per unordered pair, reported on the
    // lower-triangle cell.
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double prod = m(i, j) * m(j, i);
            if (!std::isfinite(prod) || std::abs(prod - 1.0) > kReciprocityTol) {
                result.violations.push_back({MatrixDefect::ReciprocityViolation, j, i, m(j, i)});
            }
        }
    }

    result.ok = result.violations.empty();
    return result;
}

void require_valid(const ComparisonMatrix& m) {
    const auto validation = validate_matrix(m);
    if (!validation.ok) {
        throw ValidationError("invalid comparison matrix: " + validation.summary());
    }
}

ComparisonMatrix build_matrix_from_rates(const NonconformityRates& rates,
                                         double smoothing_floor) {
    rates.validate();
    if (!(smoothing_floor > 0.0)) {
        throw ValidationError("smoothing floor must be > 0, got " +
                              std::to_string(smoothing_floor));
    }
    const int n = static_cast<int>(rates.size());
    if (n < ComparisonMatrix::kMinOrder || n > ComparisonMatrix::kMaxOrder) {
        throw OrderOutOfRange("need between 2 and 15 indicators, got " + std::to_string(n));
    }

    bool any_above_floor = false;
    std::vector<double> floored(rates.rates);
    for (double& r : floored) {
        if (r >= smoothing_floor) {
            any_above_floor = true;
        } else {
            r = smoothing_floor;
        }
    }
    if (!any_above_floor) {
        throw AllRatesZero(
            "every nonconformity rate is below the smoothing floor; the history carries no "
            "failure signal to weight indicators with");
    }

    ComparisonMatrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m.set(i, j, i == j ? 1.0 : floored[i] / floored[j]);
        }
    }
    return m;
}

EigenResult principal_eigen(const ComparisonMatrix& m, double tol, int max_iter) {
    require_valid(m);
    if (!(tol > 0.0)) {
        throw ValidationError("eigen tolerance must be > 0");
    }
    if (max_iter < 1) {
        throw ValidationError("max_iter must be >= 1");
    }

    const int n = m.order();
    std::vector<double> v(n, 1.0 / n);
    std::vector<double> next(n, 0.0);

    bool converged = false;
    int iterations = 0;
    while (iterations < max_iter) {
        ++iterations;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += m(i, j) * v[j];
            }
            next[i] = acc;
        }
        const double sum = std::accumulate(next.begin(), next.end(), 0.0);
        double diff = 0.0;
        for (int i = 0; i < n; ++i) {
            next[i] /= sum;
            diff = std::max(diff, std::abs(next[i] - v[i]));
        }
        v.swap(next);
        if (diff <= tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NoConvergence("power iteration did not reach tol=" + std::to_string(tol) +
                            " within " + std::to_string(max_iter) + " iterations");
    }

    // Rayleigh quotient v.Av / v.v on the converged iterate.
    double vav = 0.0;
    double vv = 0.0;
    for (int i = 0; i < n; ++i) {
        double av = 0.0;
        for (int j = 0; j < n; ++j) {
            av += m(i, j) * v[j];
        }
        vav += v[i] * av;
        vv += v[i] * v[i];
    }

    EigenResult result;
    result.lambda_max = vav / vv;
    result.weights.values = std::move(v);
    result.iterations = iterations;
    return result;
}

WeightVector weights_geometric_mean(const ComparisonMatrix& m) {
    require_valid(m);
    const int n = m.order();
    WeightVector w;
    w.values.resize(n);
    for (int i = 0; i < n; ++i) {
        double log_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            log_sum += std::log(m(i, j));
        }
        w.values[i] = std::exp(log_sum / n);
    }
    const double sum = std::accumulate(w.values.begin(), w.values.end(), 0.0);
    for (double& x : w.values) {
        x /= sum;
    }
    return w;
}

WeightVector weights_sum_product(const ComparisonMatrix& m) {
    require_valid(m);
    const int n = m.order();
    std::vector<double> col_sum(n, 0.0);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            col_sum[j] += m(i, j);
        }
    }
    WeightVector w;
    w.values.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            w.values[i] += m(i, j) / col_sum[j];
        }
        w.values[i] /= n;
    }
    const double sum = std::accumulate(w.values.begin(), w.values.end(), 0.0);
    for (double& x : w.values) {
        x /= sum;
    }
    return w;
}

double consistency_index(double lambda_max, int n) {
    if (n < 2) {
        throw InvalidOrder("consistency index needs order >= 2, got " + std::to_string(n));
    }
    if (lambda_max < n - 1e-6) {
        throw ValidationError("lambda_max " + std::to_string(lambda_max) +
                              " is below matrix order " + std::to_string(n) +
                              "; not a principal eigenvalue of a reciprocal matrix");
    }
    if (n == 2) {
        return 0.0;  // 2x2 reciprocal matrices are always consistent
    }
    return (lambda_max - n) / (n - 1);
}

namespace {

// Orders 1-9: published constants. Orders 10-15: frozen output of
// monte_carlo_ri(n, 1'000'000, 42), rounded to two decimals.
constexpr std::array<double, 16> kRiTable = {
    0.0,   // unused (order 0)
    0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45,
    1.49, 1.51, 1.54, 1.55, 1.57, 1.58,
};

}  // namespace

double random_index(int n) {
    if (n < 1 || n > ComparisonMatrix::kMaxOrder) {
        throw InvalidOrder("random index is tabulated for orders 1..15, got " +
                           std::to_string(n));
    }
    return kRiTable[static_cast<std::size_t>(n)];
}

CrResult consistency_ratio(double ci, double ri, double threshold) {
    if (ci < 0.0 || ri < 0.0) {
        throw ValidationError("CI and RI must be non-negative");
    }
    if (!(threshold > 0.0)) {
        throw ValidationError("CR threshold must be > 0");
    }
    CrResult result;
    result.cr = ri > 0.0 ? ci / ri : 0.0;
    result.pass = result.cr < threshold;
    return result;
}

ConsistencyReport consistency_report(const ComparisonMatrix& m, double cr_threshold,
                                     double tol, int max_iter) {
    const auto eigen = principal_eigen(m, tol, max_iter);
    ConsistencyReport report;
    report.order = m.order();
    report.lambda_max = eigen.lambda_max;
    report.ci = consistency_index(eigen.lambda_max, m.order());
    report.ri = random_index(m.order());
    const auto cr = consistency_ratio(report.ci, report.ri, cr_threshold);
    report.cr = cr.cr;
    report.pass = cr.pass;
    return report;
}

namespace {

constexpr std::array<double, 17> kSaatyScale = {
    1.0 / 9.0, 1.0 / 8.0, 1.0 / 7.0, 1.0 / 6.0, 1.0 / 5.0, 1.0 / 4.0, 1.0 / 3.0, 1.0 / 2.0,
    1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0,
};

}  // namespace

std::span<const double> saaty_scale() {
    return kSaatyScale;
}

ComparisonMatrix random_saaty_matrix(int n, std::mt19937_64& rng) {
    ComparisonMatrix m(n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const auto pick = uniform_below(rng, kSaatyScale.size());
            m.set_pair(i, j, kSaatyScale[pick]);
        }
    }
    return m;
}

RiEstimate monte_carlo_ri(int n, long long trials, std::uint64_t seed) {
    if (n < 1 || n > ComparisonMatrix::kMaxOrder) {
        throw InvalidOrder("monte carlo RI supports orders 1..15, got " + std::to_string(n));
    }
    if (trials < 1) {
        throw ValidationError("trials must be >= 1");
    }

    RiEstimate estimate;
    estimate.trials = trials;
    if (n == 1) {
        return estimate;  // the only 1x1 reciprocal matrix is [[1]]
    }

    // Looser tolerance than the library default: the per-trial CI enters a
    // mean over >= thousands of trials, so 1e-10 on the iterate is already
    // far below the statistical noise.
    constexpr double kMcTol = 1e-10;

    double ci_sum = 0.0;
    long long successes = 0;
    for (long long t = 0; t < trials; ++t) {
        auto rng = seeded_engine(seed, static_cast<std::uint64_t>(t));
        const auto m = random_saaty_matrix(n, rng);
        try {
            const auto eigen = principal_eigen(m, kMcTol, kDefaultEigenMaxIter);
            ci_sum += consistency_index(eigen.lambda_max, n);
            ++successes;
        } catch (const NoConvergence&) {
            ++estimate.skipped;
        }
    }

    if (estimate.skipped * 100 >= trials) {
        throw NoConvergence("monte carlo RI skipped " + std::to_string(estimate.skipped) +
                            " of " + std::to_string(trials) + " trials (>= 1%)");
    }
    estimate.value = successes > 0 ? ci_sum / static_cast<double>(successes) : 0.0;
    return estimate;
}

}  // namespace gridsampler
