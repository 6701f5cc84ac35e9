#include "risklab/results.hpp"

#include "risklab/checksum.hpp"
#include "risklab/errors.hpp"
#include "risklab/version.hpp"

#include "json.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <stdexcept>
#include <system_error>

namespace fs = std::filesystem;

namespace risklab {

OutDir::OutDir(std::string path) : path_(std::move(path)) {
    if (path_.empty()) throw UsageError("output directory must be named");
    std::error_code ec;
    fs::create_directories(path_, ec);
    if (ec) throw UsageError("cannot create output directory: " + path_);
    lock_path_ = (fs::path(path_) / "run.lock").string();
    const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw UsageError("output directory is in use (lock file exists): " + path_ +
                         " (remove run.lock if no run is active)");
    }
    ::close(fd);
}

OutDir::~OutDir() {
    std::error_code ec;
    fs::remove(lock_path_, ec);
}

std::string OutDir::file(const std::string& name) const {
    return (fs::path(path_) / name).string();
}

CsvWriter::CsvWriter(const std::string& path, std::vector<std::string> columns)
    : out_(path, std::ios::binary | std::ios::trunc),
      n_columns_(columns.size()),
      path_(path) {
    if (!out_) throw UsageError("cannot write file: " + path);
    if (columns.empty()) throw UsageError("CSV needs at least one column");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out_ << ',';
        out_ << columns[i];
    }
    out_ << '\n';
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != n_columns_) {
        throw std::runtime_error(path_ + ": row has " + std::to_string(cells.size()) +
                                 " cells for " + std::to_string(n_columns_) + " columns");
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw std::runtime_error("short write on " + path_);
}

std::string CsvWriter::num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

std::string CsvWriter::num(std::size_t v) { return std::to_string(v); }

namespace {

void collect_files(const fs::path& root, const fs::path& dir,
                   std::vector<std::string>& out) {
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_directory()) {
            collect_files(root, e.path(), out);
        } else if (e.is_regular_file()) {
            const std::string rel = fs::relative(e.path(), root).generic_string();
            if (rel == "manifest.json" || rel == "run.lock") continue;
            out.push_back(rel);
        }
    }
}

} // namespace

void write_manifest(const std::string& dir, const std::string& config_hash) {
    std::vector<std::string> files;
    collect_files(dir, dir, files);
    std::sort(files.begin(), files.end());

    nlohmann::json m;
    m["config_hash"] = config_hash;
    m["tool_version"] = kVersion;
    m["schema"] = 1;
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    m["generated_at"] = stamp; // informational; excluded from determinism checks

    nlohmann::json fl = nlohmann::json::object();
    for (const auto& f : files) {
        const std::string full = (fs::path(dir) / f).string();
        nlohmann::json entry;
        entry["fnv1a64"] = fnv1a64_file_hex(full);
        entry["bytes"] = static_cast<std::uint64_t>(fs::file_size(full));
        fl[f] = entry;
    }
    m["files"] = fl;

    std::ofstream out(fs::path(dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write manifest in " + dir);
    out << m.dump(2) << '\n';
}

std::vector<std::string> verify_manifest(const std::string& dir) {
    const fs::path mpath = fs::path(dir) / "manifest.json";
    std::ifstream in(mpath, std::ios::binary);
    if (!in) throw UsageError("no manifest.json in " + dir);
    nlohmann::json m = nlohmann::json::parse(in, nullptr, false);
    if (m.is_discarded() || !m.is_object() || !m.contains("files") ||
        !m["files"].is_object()) {
        throw UsageError(mpath.string() + ": not a result manifest");
    }

    std::vector<std::string> ok;
    for (const auto& [name, entry] : m["files"].items()) {
        const std::string full = (fs::path(dir) / name).string();
        if (!fs::is_regular_file(full)) {
            throw std::runtime_error("manifest check failed: missing file " + name);
        }
        const std::string expect = entry.value("fnv1a64", std::string());
        const std::string got = fnv1a64_file_hex(full);
        if (got != expect) {
            throw std::runtime_error("manifest check failed: " + name +
                                     " fingerprint mismatch (expected " + expect +
                                     ", got " + got + ")");
        }
        ok.push_back(name);
    }
    std::sort(ok.begin(), ok.end());
    return ok;
}

} // namespace risklab
