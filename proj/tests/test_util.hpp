#ifndef GRIDSAMPLER_TEST_UTIL_HPP
#define GRIDSAMPLER_TEST_UTIL_HPP

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace testutil {

/// Source tree root, exported by ctest so fixtures resolve from any cwd.
inline std::filesystem::path source_root() {
    if (const char* env = std::getenv("GRIDSAMPLER_SRC")) {
        return env;
    }
    return std::filesystem::current_path();
}

inline std::filesystem::path fixture(const std::string& name) {
    return source_root() / "tests" / "fixtures" / name;
}

/// Self-deleting scratch directory.
class TempDir {
public:
    TempDir() {
        auto base = std::filesystem::temp_directory_path();
        std::random_device rd;
        for (int attempt = 0; attempt < 64; ++attempt) {
            auto candidate = base / ("gridsampler-test-" + std::to_string(rd()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
        }
        throw std::runtime_error("could not create a scratch directory");
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << content;
}

/// History CSV with `total` reports per indicator; the first `failures` of
/// them nonconforming. Yields nonconformity rate failures/total exactly.
inline std::string history_csv(const std::vector<std::pair<std::string, int>>& failures,
                               int total) {
    std::string out = "report_id,indicator_id,conforming\n";
    for (int r = 1; r <= total; ++r) {
        for (const auto& [id, bad] : failures) {
            out += "r" + std::to_string(r) + "," + id + "," + (r <= bad ? "false" : "true") +
                   "\n";
        }
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace testutil

#endif  // GRIDSAMPLER_TEST_UTIL_HPP
