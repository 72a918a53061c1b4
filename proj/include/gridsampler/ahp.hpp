#ifndef GRIDSAMPLER_AHP_HPP
#define GRIDSAMPLER_AHP_HPP

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gridsampler/errors.hpp"

namespace gridsampler {

inline constexpr double kDefaultSmoothingFloor = 1e-6;
inline constexpr double kDefaultCrThreshold = 0.1;
inline constexpr double kDefaultEigenTol = 1e-12;
inline constexpr int kDefaultEigenMaxIter = 10'000;

/// Positive reciprocal pairwise comparison matrix. Entry (i, j) is the
/// importance of indicator i relative to indicator j; the diagonal is 1 and
/// (j, i) holds the reciprocal. Stored row-major.
class ComparisonMatrix {
public:
    static constexpr int kMinOrder = 2;
    static constexpr int kMaxOrder = 15;

    /// All-ones matrix of the given order (every pair equally important).
    explicit ComparisonMatrix(int order);

    ComparisonMatrix(int order, std::vector<double> row_major_entries);

    static ComparisonMatrix from_rows(const std::vector<std::vector<double>>& rows);

    int order() const { return order_; }

    double operator()(int i, int j) const { return entries_[idx(i, j)]; }

    void set(int i, int j, double value) { entries_[idx(i, j)] = value; }

    /// Sets (i, j) and its mirror (j, i) to the exact reciprocal.
    void set_pair(int i, int j, double value);

    std::span<const double> entries() const { return entries_; }

    bool operator==(const ComparisonMatrix&) const = default;

private:
    std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * order_ + j; }

    int order_;
    std::vector<double> entries_;
};

/// Sum-normalized, non-negative indicator weights.
struct WeightVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Per-indicator historical failure fractions with the number of inspection
/// reports behind each one.
struct NonconformityRates {
    std::vector<double> rates;
    std::vector<long long> sample_counts;

    std::size_t size() const { return rates.size(); }
    /// Throws ValidationError unless every rate is in [0, 1], every count
    /// is >= 1, and the two vectors have equal length.
    void validate() const;
};

enum class MatrixDefect {
    NonPositiveEntry,
    ReciprocityViolation,
    DiagonalNotOne,
    OrderOutOfRange,
};

std::string matrix_defect_name(MatrixDefect d);

struct CellViolation {
    MatrixDefect kind;
    int row = 0;  // 1-based in messages, 0-based here
    int col = 0;
    double value = 0.0;
};

struct MatrixValidation {
    bool ok = true;
    std::vector<CellViolation> violations;

    std::string summary() const;
};

/// Checks every ComparisonMatrix invariant and reports each violated cell.
MatrixValidation validate_matrix(const ComparisonMatrix& m);

/// Throws ValidationError carrying the full violation list if `m` is invalid.
void require_valid(const ComparisonMatrix& m);

/// Ratio matrix a_ij = r'_i / r'_j with r'_i = max(r_i, smoothing_floor).
/// Rank one by construction, hence exactly consistent (CR = 0). Throws
/// AllRatesZero when every rate is below the floor.
ComparisonMatrix build_matrix_from_rates(const NonconformityRates& rates,
                                         double smoothing_floor = kDefaultSmoothingFloor);

struct EigenResult {
    double lambda_max = 0.0;
    WeightVector weights;
    int iterations = 0;
};

/// Power iteration from the uniform start vector. Converges to the Perron
/// eigenvector for any valid (strictly positive) comparison matrix; returns
/// the sum-normalized eigenvector and the Rayleigh-quotient eigenvalue.
/// Throws NoConvergence when successive iterates still differ by more than
/// `tol` in max norm after `max_iter` steps.
EigenResult principal_eigen(const ComparisonMatrix& m, double tol = kDefaultEigenTol,
                            int max_iter = kDefaultEigenMaxIter);

/// Square-root method: w_i proportional to the geometric mean of row i.
WeightVector weights_geometric_mean(const ComparisonMatrix& m);

/// Sum-product method: normalize each column to sum 1, average the rows.
WeightVector weights_sum_product(const ComparisonMatrix& m);

/// CI = (lambda_max - n) / (n - 1); defined as 0 for n = 2 since 2x2
/// reciprocal matrices are always consistent. Throws InvalidOrder for n < 2.
double consistency_index(double lambda_max, int n);

/// Random Index for matrix order n in [1, 15], from the built-in table.
/// Orders 1-9 carry the published constants; 10-15 were estimated with
/// monte_carlo_ri (1e6 trials) and frozen here.
double random_index(int n);

struct CrResult {
    double cr = 0.0;
    bool pass = true;
};

/// CR = CI / RI, with CR = 0 when RI = 0 (orders <= 2). Passes when
/// CR < threshold.
CrResult consistency_ratio(double ci, double ri, double threshold = kDefaultCrThreshold);

struct ConsistencyReport {
    double lambda_max = 0.0;
    int order = 0;
    double ci = 0.0;
    double ri = 0.0;
    double cr = 0.0;
    bool pass = true;
};

/// Full consistency work-up for a matrix: principal eigenvalue, CI, RI, CR.
ConsistencyReport consistency_report(const ComparisonMatrix& m,
                                     double cr_threshold = kDefaultCrThreshold,
                                     double tol = kDefaultEigenTol,
                                     int max_iter = kDefaultEigenMaxIter);

/// The 17-value judgment scale: 1/9 .. 1/2, 1, 2 .. 9.
std::span<const double> saaty_scale();

/// Random positive reciprocal matrix whose upper triangle is drawn uniformly
/// from the 17-value scale.
ComparisonMatrix random_saaty_matrix(int n, std::mt19937_64& rng);

struct RiEstimate {
    double value = 0.0;
    long long skipped = 0;  // trials dropped because power iteration failed
    long long trials = 0;
};

/// Monte Carlo Random Index: mean CI over `trials` random scale matrices of
/// order n. Deterministic for a fixed (n, trials, seed) triple; each trial
/// uses its own derived RNG stream, so the result does not depend on how
/// trials might be partitioned. Trials whose eigen computation fails to
/// converge are skipped and counted; more than 1% skipped raises
/// NoConvergence.
RiEstimate monte_carlo_ri(int n, long long trials, std::uint64_t seed);

}  // namespace gridsampler

#endif  // GRIDSAMPLER_AHP_HPP
