#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "exbound/csv.hpp"

using namespace exbound;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path tmp_file(const char* name) {
    return fs::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("format_double round-trips doubles exactly") {
    for (double v : {0.1, 1.0 / 3.0, 3.141592653589793, -2.5e-17, 1e308,
                     5e-324, 0.0, -1.0, 123456789.123456789}) {
        const std::string text = format_double(v);
        const double back = std::strtod(text.c_str(), nullptr);
        CHECK(back == v);
    }
    // Fixed 17-significant-digit rendering: equal doubles, equal text.
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-0.5) == "-0.5");
    // Missing values render as nan.
    CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
}

TEST_CASE("writer emits a header, rows, and comment footers") {
    const fs::path p = tmp_file("exbound_csv_test1.csv");
    {
        CsvWriter w(p.string(), {"u", "value", "label"});
        w.field(0.25).field(1.5).field("abc");
        w.end_row();
        w.row({"0.5", "x", "y"});
        w.comment_row({"event", "0.125"});
        w.close();
    }
    const std::string text = slurp(p);
    CHECK(text ==
          "u,value,label\n"
          "0.25,1.5,abc\n"
          "0.5,x,y\n"
          "# event,0.125\n");
    fs::remove(p);
}

TEST_CASE("reruns produce bitwise-identical bytes") {
    const fs::path a = tmp_file("exbound_csv_test2a.csv");
    const fs::path b = tmp_file("exbound_csv_test2b.csv");
    auto emit = [](const fs::path& p) {
        CsvWriter w(p.string(), {"i", "v"});
        for (int i = 0; i < 50; ++i) {
            w.field(i).field(std::sin(i) * 1e-3);
            w.end_row();
        }
        w.close();
    };
    emit(a);
    emit(b);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("unwritable targets throw") {
    CHECK_THROWS_AS(CsvWriter("/nonexistent_dir_zz/x.csv", {"a"}),
                    std::runtime_error);
}
