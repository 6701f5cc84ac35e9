#include "doctest.h"

#include "risklab/errors.hpp"
#include "risklab/results.hpp"

#include "test_support.hpp"

#include <filesystem>
#include <memory>
#include <stdexcept>
#include <vector>

using namespace risklab;
namespace fs = std::filesystem;

TEST_CASE("out dir: creation, lock conflict, release") {
    testsup::TempDir tmp("outdir");
    const std::string target = tmp.file("run1");
    {
        OutDir out(target);
        CHECK(fs::is_directory(target));
        CHECK(fs::exists(target + "/run.lock"));
        CHECK(out.file("a.csv") == target + "/a.csv");
        // a second claim on the same directory is refused while locked
        CHECK_THROWS_WITH_AS(std::make_unique<OutDir>(target),
                             doctest::Contains("run.lock"), UsageError);
    }
    CHECK(!fs::exists(target + "/run.lock"));
    OutDir again(target); // free after release
    CHECK(fs::is_directory(target));
}

TEST_CASE("out dir creates nested paths") {
    testsup::TempDir tmp("outdir");
    const std::string nested = tmp.file("a/b/c");
    OutDir out(nested);
    CHECK(fs::is_directory(nested));
}

TEST_CASE("csv writer: header, rows, formatting") {
    testsup::TempDir tmp("csv");
    const std::string path = tmp.file("t.csv");
    {
        CsvWriter w(path, {"name", "value"});
        w.row({"x", CsvWriter::num(1.5)});
        w.row({"y", CsvWriter::num(std::numeric_limits<double>::quiet_NaN())});
        w.row({"z", CsvWriter::num(std::size_t{42})});
        CHECK_THROWS_AS(w.row({"only-one-cell"}), std::runtime_error);
    }
    CHECK(testsup::slurp(path) == "name,value\nx,1.5\ny,nan\nz,42\n");

    CHECK(CsvWriter::num(0.1) == "0.1");
    CHECK(CsvWriter::num(1.0 / 3.0) == "0.3333333333");
    CHECK(CsvWriter::num(2.5e-100) == "2.5e-100");
    CHECK(CsvWriter::num(90.0) == "90");
}

TEST_CASE("manifest round trip and tamper detection") {
    testsup::TempDir tmp("manifest");
    const std::string dir = tmp.file("res");
    fs::create_directories(dir);
    testsup::spit(dir + "/a.csv", "col\n1\n");
    testsup::spit(dir + "/b.json", "{}\n");
    fs::create_directories(dir + "/snapshots");
    testsup::spit(dir + "/snapshots/m.snap", "payload");
    testsup::spit(dir + "/run.lock", ""); // never fingerprinted

    write_manifest(dir, "deadbeef00000000");

    const std::vector<std::string> files = verify_manifest(dir);
    CHECK(files.size() == 3);
    for (const auto& f : files) {
        CHECK(f != "manifest.json");
        CHECK(f != "run.lock");
    }

    SUBCASE("fingerprint mismatch") {
        testsup::spit(dir + "/a.csv", "col\n2\n");
        CHECK_THROWS_WITH_AS(verify_manifest(dir), doctest::Contains("a.csv"),
                             std::runtime_error);
    }
    SUBCASE("missing file") {
        fs::remove(dir + "/b.json");
        CHECK_THROWS_WITH_AS(verify_manifest(dir), doctest::Contains("missing"),
                             std::runtime_error);
    }
    SUBCASE("no manifest") {
        fs::remove(dir + "/manifest.json");
        CHECK_THROWS_AS(verify_manifest(dir), UsageError);
    }
    SUBCASE("manifest carries the config hash") {
        const std::string text = testsup::slurp(dir + "/manifest.json");
        CHECK(text.find("deadbeef00000000") != std::string::npos);
        CHECK(text.find("generated_at") != std::string::npos);
    }
}

TEST_CASE("manifest rewrite is stable modulo the timestamp") {
    testsup::TempDir tmp("manifest2");
    const std::string dir = tmp.file("res");
    fs::create_directories(dir);
    testsup::spit(dir + "/a.csv", "x\n");
    write_manifest(dir, "0123456789abcdef");
    // rewriting must not trip over the previous manifest.json
    write_manifest(dir, "0123456789abcdef");
    CHECK(verify_manifest(dir).size() == 1);
}
