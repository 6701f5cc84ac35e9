#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace risklab {

// Result directory with a lock file. Concurrent runs must use distinct
// directories; the lock guarantees it. Created on construction, the lock
// is released on destruction.
class OutDir {
public:
    explicit OutDir(std::string path);
    ~OutDir();
    OutDir(const OutDir&) = delete;
    OutDir& operator=(const OutDir&) = delete;

    const std::string& path() const { return path_; }
    std::string file(const std::string& name) const;

private:
    std::string path_;
    std::string lock_path_;
};

// Deterministic CSV emission: fixed column set, one row per call, numbers
// rendered with %.10g ("nan" for missing values).
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::vector<std::string> columns);

    void row(const std::vector<std::string>& cells);

    static std::string num(double v);
    static std::string num(std::size_t v);

private:
    std::ofstream out_;
    std::size_t n_columns_;
    std::string path_;
};

// manifest.json: config hash, tool version, per-file fingerprints. The
// timestamp field is informational and excluded from determinism checks.
void write_manifest(const std::string& dir, const std::string& config_hash);

// Checks every file listed in dir/manifest.json for existence and
// fingerprint match. Returns the verified file names; throws on the first
// mismatch.
std::vector<std::string> verify_manifest(const std::string& dir);

} // namespace risklab
