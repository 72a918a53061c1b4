#ifndef GRIDSAMPLER_DATA_IO_HPP
#define GRIDSAMPLER_DATA_IO_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridsampler/ahp.hpp"
#include "gridsampler/grading.hpp"
#include "gridsampler/scoring.hpp"

namespace gridsampler {

/// One line of the history file: whether one indicator conformed in one
/// inspection report.
struct HistoricalRecord {
    std::string report_id;
    std::string indicator_id;
    bool conforming = true;

    bool operator==(const HistoricalRecord&) const = default;
};

/// Reads a history CSV (`report_id,indicator_id,conforming`, header
/// required, conforming in {true,false,0,1}). Duplicate
/// (report_id, indicator_id) pairs are rejected.
std::vector<HistoricalRecord> load_history(const std::filesystem::path& path);

/// Per-indicator failure fraction over the records that mention it, in the
/// order of `indicator_ids`. Indicators absent from the records raise
/// MissingIndicatorHistory; records for other indicators are ignored.
NonconformityRates compute_rates(const std::vector<HistoricalRecord>& records,
                                 const std::vector<std::string>& indicator_ids);

/// Rewrites history record ids onto canonical indicator ids (variant rubric
/// keys collapse onto their indicator); ids unknown to the rubric set pass
/// through unchanged.
std::vector<HistoricalRecord> canonicalize_history(std::vector<HistoricalRecord> records,
                                                   const RubricSet& rubrics);

/// Reads a batch CSV (`item_id,indicator_id,measured,standard,deviation_pct`,
/// header required). Each row carries exactly one value form: measured plus
/// standard, or a direct deviation. Items must cover every indicator of the
/// rubric set exactly once.
std::vector<InspectionItem> load_batch(const std::filesystem::path& path,
                                       const RubricSet& rubrics);

/// Loads a rubric-set config (JSON: rubric_id, score_map, indicators with
/// per-variant band lists).
RubricSet load_rubric(const std::filesystem::path& path);

struct ProvenanceInput {
    std::string role;    // e.g. "history", "batch", "weights", "rubric"
    std::string path;
    std::string digest;  // "fnv1a64:<hex>"

    bool operator==(const ProvenanceInput&) const = default;
};

/// Everything needed to reproduce a run bit for bit (given the same tool
/// version). The timestamp is informational and excluded from determinism
/// comparisons.
struct Provenance {
    std::string tool_version;
    std::string run_id;          // digest over inputs + seed + config
    std::string rubric_id;
    std::string weights_source;  // "history" | "weights_file" | "matrix" | "inline"
    std::optional<std::uint64_t> seed;
    std::vector<ProvenanceInput> inputs;
    std::string timestamp;       // ISO 8601 UTC
};

struct IndicatorRate {
    double rate = 0.0;
    long long samples = 0;
};

/// The structured result document: whichever sections a command produced,
/// plus provenance. Serialized as a single JSON file.
struct ResultReport {
    std::vector<std::string> indicator_order;
    WeightsById weights;
    std::map<std::string, WeightsById> weights_by_method;
    std::map<std::string, IndicatorRate> rates;
    std::optional<std::vector<std::vector<double>>> matrix;
    std::optional<ConsistencyReport> consistency;
    std::vector<QualityScore> scores;
    std::optional<SamplingPlan> plan;
    Provenance provenance;
};

/// The report as deterministic JSON (fixed key order, shortest round-trip
/// numbers, M values rounded to 3 decimals, LF endings).
std::string report_to_json_string(const ResultReport& report);

void write_report(const ResultReport& report, const std::filesystem::path& path);

ResultReport load_report(const std::filesystem::path& path);

/// Converts each scored item's per-indicator conformity into history rows
/// (report_id = "<run_id>-<item_id>") and appends them atomically
/// (write-temp-then-rename under an advisory lock file). Collisions with
/// existing records are rejected before anything is written.
void append_history(const ResultReport& report, const std::filesystem::path& history_path);

/// Writes bytes to `path + ".tmp"` then renames over `path`, so readers see
/// either the old content or the new, never a torn file.
void atomic_write_text(const std::filesystem::path& path, const std::string& bytes);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters.
std::string fnv1a64_file(const std::filesystem::path& path);

std::string fnv1a64_hex(std::string_view bytes);

/// Deterministic run id: digest over input digests, seed, rubric id,
/// weights source, and tool version (paths excluded, so content-identical
/// runs share an id).
std::string compute_run_id(const Provenance& provenance);

std::string iso8601_utc_now();

}  // namespace gridsampler

#endif  // GRIDSAMPLER_DATA_IO_HPP
