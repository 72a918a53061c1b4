#include "gridsampler/data_io.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gridsampler {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

struct CsvFile {
    std::string path;
    std::vector<std::vector<std::string>> rows;  // without the header
    long first_data_line = 2;
};

CsvFile read_csv(const std::filesystem::path& path, const std::string& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }

    CsvFile csv;
    csv.path = path.string();
    std::string line;
    long line_no = 0;
    const auto expected_fields = split_csv_line(expected_header).size();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();  // tolerate CRLF input
        }
        if (line_no == 1) {
            if (line != expected_header) {
                throw ParseError(csv.path, 1, "header",
                                 "expected '" + expected_header + "', got '" + line + "'");
            }
            continue;
        }
        if (line.empty()) {
            continue;  // blank line (e.g. trailing newline)
        }
        auto fields = split_csv_line(line);
        if (fields.size() != expected_fields) {
            throw ParseError(csv.path, line_no, "row",
                             "expected " + std::to_string(expected_fields) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        csv.rows.push_back(std::move(fields));
    }
    if (line_no == 0) {
        throw ParseError(csv.path, 1, "header", "file is empty; expected header '" +
                                                    expected_header + "'");
    }
    return csv;
}

double parse_double_field(const std::string& file, long line, const std::string& field,
                          const std::string& text) {
    double value = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ParseError(file, line, field, "'" + text + "' is not a number");
    }
    if (!std::isfinite(value)) {
        throw ParseError(file, line, field, "'" + text + "' is not finite");
    }
    return value;
}

bool parse_bool_field(const std::string& file, long line, const std::string& field,
                      const std::string& text) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    throw ParseError(file, line, field,
                     "'" + text + "' is not a boolean (expected true/false/1/0)");
}

void require_nonempty(const std::string& file, long line, const std::string& field,
                      const std::string& text) {
    if (text.empty()) {
        throw ParseError(file, line, field, "must not be empty");
    }
}

double round3(double x) {
    return std::round(x * 1000.0) / 1000.0;
}

/// Advisory lock file; its existence marks the history file as busy.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& target)
        : path_(target.string() + ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd_ < 0) {
            throw IoError("history file is locked (remove stale '" + path_.string() +
                          "' if no writer is active)");
        }
    }

    ~FileLock() {
        if (fd_ >= 0) {
            ::close(fd_);
            ::unlink(path_.c_str());
        }
    }

    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

}  // namespace

void atomic_write_text(const std::filesystem::path& path, const std::string& bytes) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open '" + tmp.string() + "' for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.flush();
        if (!out) {
            throw IoError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("failed to move '" + tmp.string() + "' into place: " + ec.message());
    }
}

std::vector<HistoricalRecord> load_history(const std::filesystem::path& path) {
    const auto csv = read_csv(path, "report_id,indicator_id,conforming");

    std::vector<HistoricalRecord> records;
    records.reserve(csv.rows.size());
    std::set<std::pair<std::string, std::string>> seen;
    long line = 1;
    for (const auto& row : csv.rows) {
        ++line;
        require_nonempty(csv.path, line, "report_id", row[0]);
        require_nonempty(csv.path, line, "indicator_id", row[1]);
        if (!seen.emplace(row[0], row[1]).second) {
            throw DuplicateRecord(csv.path + ":" + std::to_string(line) + ": duplicate record (" +
                                  row[0] + ", " + row[1] + ")");
        }
        records.push_back({row[0], row[1], parse_bool_field(csv.path, line, "conforming", row[2])});
    }
    return records;
}

NonconformityRates compute_rates(const std::vector<HistoricalRecord>& records,
                                 const std::vector<std::string>& indicator_ids) {
    std::map<std::string, std::pair<long long, long long>> counts;  // id -> (total, failures)
    for (const auto& id : indicator_ids) {
        if (!counts.emplace(id, std::make_pair(0LL, 0LL)).second) {
            throw ValidationError("indicator id '" + id + "' listed twice");
        }
    }
    for (const auto& record : records) {
        const auto it = counts.find(record.indicator_id);
        if (it == counts.end()) {
            continue;  // history covers other materials too
        }
        ++it->second.first;
        if (!record.conforming) {
            ++it->second.second;
        }
    }

    NonconformityRates rates;
    for (const auto& id : indicator_ids) {
        const auto& [total, failures] = counts.at(id);
        if (total == 0) {
            throw MissingIndicatorHistory("no history records for indicator '" + id + "'");
        }
        rates.rates.push_back(static_cast<double>(failures) / static_cast<double>(total));
        rates.sample_counts.push_back(total);
    }
    return rates;
}

std::vector<HistoricalRecord> canonicalize_history(std::vector<HistoricalRecord> records,
                                                   const RubricSet& rubrics) {
    for (auto& record : records) {
        if (const auto id = rubrics.canonical_id(record.indicator_id)) {
            record.indicator_id = *id;
        }
    }
    return records;
}

std::vector<InspectionItem> load_batch(const std::filesystem::path& path,
                                       const RubricSet& rubrics) {
    const auto csv = read_csv(path, "item_id,indicator_id,measured,standard,deviation_pct");

    std::vector<InspectionItem> items;
    std::map<std::string, std::size_t> item_index;
    std::set<std::pair<std::string, std::string>> seen;  // (item, rubric key)
    long line = 1;
    for (const auto& row : csv.rows) {
        ++line;
        const auto& item_id = row[0];
        const auto& key = row[1];
        require_nonempty(csv.path, line, "item_id", item_id);
        require_nonempty(csv.path, line, "indicator_id", key);
        if (rubrics.find_rubric(key) == nullptr) {
            throw MissingRubric(csv.path + ":" + std::to_string(line) +
                                ": no rubric for indicator key '" + key + "' in rubric set '" +
                                rubrics.id() + "'");
        }
        if (!seen.emplace(item_id, key).second) {
            throw DuplicateRecord(csv.path + ":" + std::to_string(line) +
                                  ": duplicate reading (" + item_id + ", " + key + ")");
        }

        const bool has_measured = !row[2].empty();
        const bool has_standard = !row[3].empty();
        const bool has_deviation = !row[4].empty();
        IndicatorReading reading;
        reading.indicator_id = key;
        if (has_deviation && (has_measured || has_standard)) {
            throw BothFormsPresent(csv.path + ":" + std::to_string(line) +
                                   ": row gives both measured/standard and deviation_pct");
        }
        if (has_deviation) {
            reading.value = parse_double_field(csv.path, line, "deviation_pct", row[4]);
        } else if (has_measured && has_standard) {
            reading.value = Measurement{parse_double_field(csv.path, line, "measured", row[2]),
                                        parse_double_field(csv.path, line, "standard", row[3])};
        } else if (has_measured || has_standard) {
            throw ParseError(csv.path, line, has_measured ? "standard" : "measured",
                             "measured and standard must be given together");
        } else {
            throw ParseError(csv.path, line, "row",
                             "row gives neither measured/standard nor deviation_pct");
        }

        auto [it, inserted] = item_index.emplace(item_id, items.size());
        if (inserted) {
            items.push_back({item_id, {}});
        }
        items[it->second].readings.push_back(std::move(reading));
    }

    // Coverage: each item needs exactly one reading per indicator spec.
    for (const auto& item : items) {
        std::map<std::string, int> per_spec;
        for (const auto& reading : item.readings) {
            ++per_spec[rubrics.spec_for_key(reading.indicator_id)->id];
        }
        for (const auto& spec : rubrics.specs()) {
            const auto it = per_spec.find(spec.id);
            if (it == per_spec.end()) {
                throw MissingReading(csv.path + ": item '" + item.item_id +
                                     "' has no reading for indicator '" + spec.id + "'");
            }
            if (it->second > 1) {
                throw DuplicateRecord(csv.path + ": item '" + item.item_id + "' has " +
                                      std::to_string(it->second) + " readings for indicator '" +
                                      spec.id + "' (conflicting variants?)");
            }
        }
    }
    return items;
}

namespace {

Band band_from_json(const ordered_json& j, const std::string& file) {
    Band band;
    const auto level = level_from_name(j.at("level").get<std::string>());
    if (!level) {
        throw ParseError(file, 0, "level",
                         "unknown level '" + j.at("level").get<std::string>() + "'");
    }
    band.level = *level;
    if (j.contains("min") && !j.at("min").is_null()) {
        band.min = j.at("min").get<double>();
        band.min_inclusive = j.value("min_inclusive", false);
    }
    if (j.contains("max") && !j.at("max").is_null()) {
        band.max = j.at("max").get<double>();
        band.max_inclusive = j.value("max_inclusive", false);
    }
    return band;
}

}  // namespace

RubricSet load_rubric(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }

    try {
        std::vector<IndicatorSpec> specs;
        std::vector<GradingRubric> rubrics;
        for (const auto& ind : doc.at("indicators")) {
            IndicatorSpec spec;
            spec.id = ind.at("id").get<std::string>();
            spec.display_name = ind.value("display_name", spec.id);
            spec.unit = ind.value("unit", "");
            for (const auto& rj : ind.at("rubrics")) {
                GradingRubric rubric;
                rubric.indicator_id = spec.id;
                if (rj.contains("variant") && !rj.at("variant").is_null()) {
                    rubric.variant = rj.at("variant").get<std::string>();
                    spec.variant_keys.push_back(*rubric.variant);
                }
                for (const auto& bj : rj.at("bands")) {
                    rubric.bands.push_back(band_from_json(bj, path.string()));
                }
                rubrics.push_back(std::move(rubric));
            }
            specs.push_back(std::move(spec));
        }
        LevelScoreMap scores;
        if (doc.contains("score_map")) {
            const auto& sm = doc.at("score_map");
            scores.a = sm.at("a").get<double>();
            scores.b = sm.at("b").get<double>();
            scores.c = sm.at("c").get<double>();
            scores.d = sm.at("d").get<double>();
        }
        return RubricSet(doc.value("rubric_id", path.stem().string()), std::move(specs),
                         std::move(rubrics), scores);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }
}

namespace {

ordered_json consistency_to_json(const ConsistencyReport& c) {
    return ordered_json{{"lambda_max", c.lambda_max}, {"order", c.order}, {"ci", c.ci},
                        {"ri", c.ri},                 {"cr", c.cr},       {"pass", c.pass}};
}

ConsistencyReport consistency_from_json(const ordered_json& j) {
    ConsistencyReport c;
    c.lambda_max = j.at("lambda_max").get<double>();
    c.order = j.at("order").get<int>();
    c.ci = j.at("ci").get<double>();
    c.ri = j.at("ri").get<double>();
    c.cr = j.at("cr").get<double>();
    c.pass = j.at("pass").get<bool>();
    return c;
}

ordered_json plan_to_json(const SamplingPlan& plan) {
    ordered_json j;
    j["strategy"] = std::string(strategy_name(plan.strategy));
    j["k"] = plan.k;
    j["k_clamped"] = plan.k_clamped;
    if (plan.seed) {
        j["seed"] = *plan.seed;
    }
    auto& ranking = j["ranking"] = ordered_json::array();
    for (const auto& r : plan.ranking) {
        ranking.push_back({{"item_id", r.item_id}, {"m", round3(r.m_score)}});
    }
    j["selected"] = plan.selected;
    return j;
}

SamplingPlan plan_from_json(const ordered_json& j) {
    SamplingPlan plan;
    const auto strategy = strategy_from_name(j.at("strategy").get<std::string>());
    if (!strategy) {
        throw ValidationError("unknown sampling strategy '" +
                              j.at("strategy").get<std::string>() + "'");
    }
    plan.strategy = *strategy;
    plan.k = j.at("k").get<int>();
    plan.k_clamped = j.value("k_clamped", false);
    if (j.contains("seed") && !j.at("seed").is_null()) {
        plan.seed = j.at("seed").get<std::uint64_t>();
    }
    for (const auto& r : j.at("ranking")) {
        plan.ranking.push_back({r.at("item_id").get<std::string>(), r.at("m").get<double>()});
    }
    plan.selected = j.at("selected").get<std::vector<std::string>>();
    return plan;
}

ordered_json score_to_json(const QualityScore& s) {
    ordered_json j;
    j["item_id"] = s.item_id;
    j["j"] = s.j_flag;
    j["m"] = round3(s.m_score);
    auto& readings = j["readings"] = ordered_json::array();
    for (const auto& g : s.graded) {
        readings.push_back({{"indicator", g.indicator_id},
                            {"rubric_key", g.rubric_key},
                            {"deviation_pct", g.deviation_pct},
                            {"level", std::string(level_name(g.level))},
                            {"score", g.score}});
    }
    return j;
}

QualityScore score_from_json(const ordered_json& j) {
    QualityScore s;
    s.item_id = j.at("item_id").get<std::string>();
    s.j_flag = j.at("j").get<int>();
    s.m_score = j.at("m").get<double>();
    for (const auto& rj : j.at("readings")) {
        GradedReading g;
        g.indicator_id = rj.at("indicator").get<std::string>();
        g.rubric_key = rj.at("rubric_key").get<std::string>();
        g.deviation_pct = rj.at("deviation_pct").get<double>();
        const auto level = level_from_name(rj.at("level").get<std::string>());
        if (!level) {
            throw ValidationError("unknown level '" + rj.at("level").get<std::string>() + "'");
        }
        g.level = *level;
        g.score = rj.at("score").get<double>();
        s.graded.push_back(std::move(g));
    }
    return s;
}

ordered_json provenance_to_json(const Provenance& p) {
    ordered_json j;
    j["tool_version"] = p.tool_version;
    j["run_id"] = p.run_id;
    j["rubric_id"] = p.rubric_id;
    j["weights_source"] = p.weights_source;
    if (p.seed) {
        j["seed"] = *p.seed;
    } else {
        j["seed"] = nullptr;
    }
    auto& inputs = j["inputs"] = ordered_json::array();
    for (const auto& input : p.inputs) {
        inputs.push_back({{"role", input.role}, {"path", input.path}, {"digest", input.digest}});
    }
    j["timestamp"] = p.timestamp;
    return j;
}

Provenance provenance_from_json(const ordered_json& j) {
    Provenance p;
    p.tool_version = j.value("tool_version", "");
    p.run_id = j.value("run_id", "");
    p.rubric_id = j.value("rubric_id", "");
    p.weights_source = j.value("weights_source", "");
    if (j.contains("seed") && !j.at("seed").is_null()) {
        p.seed = j.at("seed").get<std::uint64_t>();
    }
    for (const auto& input : j.value("inputs", ordered_json::array())) {
        p.inputs.push_back({input.at("role").get<std::string>(),
                            input.at("path").get<std::string>(),
                            input.at("digest").get<std::string>()});
    }
    p.timestamp = j.value("timestamp", "");
    return p;
}

}  // namespace

std::string report_to_json_string(const ResultReport& report) {
    ordered_json doc;
    doc["indicator_order"] = report.indicator_order;
    if (!report.rates.empty()) {
        auto& rates = doc["rates"] = ordered_json::object();
        for (const auto& id : report.indicator_order) {
            const auto it = report.rates.find(id);
            if (it != report.rates.end()) {
                rates[id] = {{"rate", it->second.rate}, {"samples", it->second.samples}};
            }
        }
    }
    if (report.matrix) {
        doc["matrix"] = *report.matrix;
    }
    if (!report.weights.empty()) {
        auto& weights = doc["weights"] = ordered_json::object();
        for (const auto& id : report.indicator_order) {
            const auto it = report.weights.find(id);
            if (it != report.weights.end()) {
                weights[id] = it->second;
            }
        }
    }
    if (!report.weights_by_method.empty()) {
        auto& methods = doc["weights_by_method"] = ordered_json::object();
        for (const auto& [method, weights] : report.weights_by_method) {
            auto& out = methods[method] = ordered_json::object();
            for (const auto& id : report.indicator_order) {
                const auto it = weights.find(id);
                if (it != weights.end()) {
                    out[id] = it->second;
                }
            }
        }
    }
    if (report.consistency) {
        doc["consistency"] = consistency_to_json(*report.consistency);
    }
    if (!report.scores.empty()) {
        auto& scores = doc["scores"] = ordered_json::array();
        for (const auto& s : report.scores) {
            scores.push_back(score_to_json(s));
        }
    }
    if (report.plan) {
        doc["plan"] = plan_to_json(*report.plan);
    }
    doc["provenance"] = provenance_to_json(report.provenance);

    return doc.dump(2) + "\n";
}

void write_report(const ResultReport& report, const std::filesystem::path& path) {
    atomic_write_text(path, report_to_json_string(report));
}

ResultReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }

    try {
        ResultReport report;
        report.indicator_order = doc.value("indicator_order", std::vector<std::string>{});
        if (doc.contains("rates")) {
            for (const auto& [id, rj] : doc.at("rates").items()) {
                report.rates[id] = {rj.at("rate").get<double>(),
                                    rj.at("samples").get<long long>()};
            }
        }
        if (doc.contains("matrix")) {
            report.matrix = doc.at("matrix").get<std::vector<std::vector<double>>>();
        }
        if (doc.contains("weights")) {
            for (const auto& [id, w] : doc.at("weights").items()) {
                report.weights[id] = w.get<double>();
            }
        }
        if (doc.contains("weights_by_method")) {
            for (const auto& [method, wj] : doc.at("weights_by_method").items()) {
                WeightsById weights;
                for (const auto& [id, w] : wj.items()) {
                    weights[id] = w.get<double>();
                }
                report.weights_by_method[method] = std::move(weights);
            }
        }
        if (doc.contains("consistency")) {
            report.consistency = consistency_from_json(doc.at("consistency"));
        }
        for (const auto& sj : doc.value("scores", ordered_json::array())) {
            report.scores.push_back(score_from_json(sj));
        }
        if (doc.contains("plan")) {
            report.plan = plan_from_json(doc.at("plan"));
        }
        if (doc.contains("provenance")) {
            report.provenance = provenance_from_json(doc.at("provenance"));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }
}

void append_history(const ResultReport& report, const std::filesystem::path& history_path) {
    if (report.provenance.run_id.empty()) {
        throw ValidationError("report has no run_id; cannot derive history report ids");
    }

    FileLock lock(history_path);

    std::vector<HistoricalRecord> existing;
    if (std::filesystem::exists(history_path)) {
        existing = load_history(history_path);
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& record : existing) {
        seen.emplace(record.report_id, record.indicator_id);
    }

    std::vector<HistoricalRecord> appended;
    for (const auto& score : report.scores) {
        const std::string report_id = report.provenance.run_id + "-" + score.item_id;
        for (const auto& graded : score.graded) {
            if (!seen.emplace(report_id, graded.indicator_id).second) {
                throw DuplicateRecord("appending would duplicate record (" + report_id + ", " +
                                      graded.indicator_id + "); was this run already ingested?");
            }
            appended.push_back(
                {report_id, graded.indicator_id, graded.level != Level::Nonconforming});
        }
    }

    std::string bytes = "report_id,indicator_id,conforming\n";
    const auto emit = [&bytes](const HistoricalRecord& r) {
        bytes += r.report_id;
        bytes += ',';
        bytes += r.indicator_id;
        bytes += ',';
        bytes += r.conforming ? "true" : "false";
        bytes += '\n';
    };
    for (const auto& r : existing) {
        emit(r);
    }
    for (const auto& r : appended) {
        emit(r);
    }
    atomic_write_text(history_path, bytes);
}

std::string fnv1a64_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string fnv1a64_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for digest");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return fnv1a64_hex(buffer.str());
}

std::string compute_run_id(const Provenance& provenance) {
    std::string material = provenance.tool_version + "|" + provenance.rubric_id + "|" +
                           provenance.weights_source + "|" +
                           (provenance.seed ? std::to_string(*provenance.seed) : "-");
    for (const auto& input : provenance.inputs) {
        material += "|" + input.role + ":" + input.digest;
    }
    return fnv1a64_hex(material);
}

std::string iso8601_utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return std::string(buf);
}

}  // namespace gridsampler
