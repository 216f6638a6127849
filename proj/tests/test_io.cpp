// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/io.hpp"

using namespace gbsde;

TEST_CASE("number formatting round-trips") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-0.0) == "0");
    CHECK(format_double(1e-300) == "1e-300");
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_double(std::nan("")) == "nan");
    const double v = 0.1 + 0.2;
    CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("CSV writer enforces the column count") {
    CsvWriter w({"a", "b"});
    w.cell(1.5).cell(static_cast<long long>(2));
    w.end_row();
    CHECK(w.rows() == 1);
    CHECK(w.text() == "a,b\n1.5,2\n");
    w.cell(std::string("x"));
    CHECK_THROWS_AS(w.end_row(), ConfigurationError);
    w.cell(1.0);
    CHECK_THROWS_AS(w.cell(2.0), ConfigurationError);
}

TEST_CASE("field rows and run directories") {
    const Lattice lat(GParams{}, LatticeSpec{1.0, 2, 0.0});
    ValueField f(lat, 3.0);
    CsvWriter w({"k", "j", "t", "x", "value"});
    append_field_rows(w, f, lat);
    CHECK(w.rows() == static_cast<std::size_t>(lat.levels() * lat.width()));

    const auto dir = std::filesystem::temp_directory_path() / "gbsde_io_test";
    std::filesystem::remove_all(dir);
    RunArtifacts a("unit");
    a.add_csv("f.csv", w, "field");
    a.add_json("x.json", Json::array({1, 2}), "numbers");
    a.manifest()["k"] = 1;
    a.write(dir);
    std::ifstream is(dir / "manifest.json");
    const Json m = Json::parse(is);
    CHECK(m["command"] == "unit");
    CHECK(m["k"] == 1);
    REQUIRE(m["files"].size() == 2);
    CHECK(m["files"][0]["name"] == "f.csv");
    CHECK(m["files"][0]["rows"] == w.rows());
    CHECK(std::filesystem::exists(dir / "x.json"));
    std::filesystem::remove_all(dir);
}
