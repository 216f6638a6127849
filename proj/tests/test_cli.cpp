// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "gbsde/cli.hpp"
#include "gbsde/io.hpp"

using namespace gbsde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("gbsde_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

int run(std::vector<std::string> args, std::string* out_text = nullptr) {
    std::ostringstream out, err;
    const int rc = run_cli(args, out, err);
    if (out_text) *out_text = out.str() + err.str();
    return rc;
}

Json read_json(const fs::path& p) {
    std::ifstream is(p);
    return Json::parse(is);
}

std::map<std::string, std::string> slurp(const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        m[e.path().filename().string()] = os.str();
    }
    return m;
}

}  // namespace

TEST_CASE("solve: driver-free run records f = 0") {
    const fs::path d = scratch("df");
    const fs::path c = write_config(d, R"({"lattice":{"n_steps":30},"problem":{"generator":"driver-free"}})");
    REQUIRE(run({"solve", "--config", c.string(), "--out", (d / "o").string()}) == 0);
    const Json m = read_json(d / "o" / "manifest.json");
    CHECK(m["constants"]["formula"] == "f = 0");
    // every file is listed exactly once
    std::set<std::string> listed;
    for (const Json& f : m["files"]) CHECK(listed.insert(f["name"].get<std::string>()).second);
    for (const auto& e : fs::directory_iterator(d / "o")) {
        const std::string n = e.path().filename().string();
        if (n != "manifest.json") CHECK(listed.count(n) == 1);
    }
    CHECK(listed == std::set<std::string>{"Y.csv", "Z.csv", "K.csv"});
    std::ifstream k(d / "o" / "K.csv");
    std::string header;
    std::getline(k, header);
    CHECK(header == "path_id,policy,step,increment");
}

TEST_CASE("solve: quadratic manifest carries lambda, gamma and kappa") {
    const fs::path d = scratch("quad");
    const fs::path c = write_config(
        d, R"({"lattice":{"n_steps":30},"problem":{"generator":"quadratic-convex","generator_params":{"gamma":0.4,"lambda":0.2}}})");
    REQUIRE(run({"solve", "--config", c.string(), "--out", (d / "o").string()}) == 0);
    const Json m = read_json(d / "o" / "manifest.json");
    CHECK(m["constants"]["lambda"].get<double>() == doctest::Approx(0.2));
    CHECK(m["constants"]["gamma"].get<double>() == doctest::Approx(0.4));
    CHECK(m["constants"]["kappa"].get<double>() == doctest::Approx(1.2));
    CHECK_FALSE(m["config"].contains("threads"));
}

TEST_CASE("configuration errors exit 2 and write nothing") {
    const fs::path d = scratch("bad");
    const fs::path o = d / "o";
    CHECK(run({"solve", "--config", write_config(d, "{not json").string(), "--out", o.string()}) == 2);
    CHECK_FALSE(fs::exists(o));
    CHECK(run({"solve", "--config", write_config(d, R"({"lattice":{"steps":3}})").string(), "--out", o.string()}) == 2);
    CHECK(run({"solve", "--config", write_config(d, R"({"problem":{"generator":"cubic"}})").string(), "--out", o.string()}) == 2);
    CHECK(run({"solve", "--config", write_config(d, R"({"extra":1})").string(), "--out", o.string()}) == 2);
    CHECK(run({"converge", "--config", write_config(d, R"({"converge":{"theta_grid":[0.5,1.5]}})").string(), "--out", o.string()}) == 2);
    CHECK(run({"oracle", "--config", write_config(d, R"({"oracle":{"n_steps":7}})").string(), "--out", o.string()}) == 2);
    CHECK(run({"frobnicate"}) == 2);
    CHECK(run({"solve", "--threads", "x"}) == 2);
    CHECK_FALSE(fs::exists(o));
}

TEST_CASE("verify: empty selection and the wrong-convexity control") {
    const fs::path d = scratch("verify");
    REQUIRE(run({"verify", "--config", write_config(d, R"({"verify":{"checks":[]}})").string(), "--out",
                 (d / "e").string()}) == 0);
    CHECK(read_json(d / "e" / "outcomes.json") == Json::array());
    std::string text;
    const fs::path c = write_config(
        d, R"({"lattice":{"n_steps":30},"problem":{"generator":"quadratic-convex","convexity":"concave"},"verify":{"checks":["assumptions"]}})");
    CHECK(run({"verify", "--config", c.string(), "--out", (d / "w").string()}, &text) == 1);
    CHECK(text.find("FAIL assumptions") != std::string::npos);
    const Json o = read_json(d / "w" / "outcomes.json");
    CHECK(o[0]["status"] == "fail");
}

TEST_CASE("converge: a single level is a degenerate pass") {
    const fs::path d = scratch("conv1");
    const fs::path c = write_config(
        d, R"({"lattice":{"horizon":0.5,"n_steps":20},"problem":{"terminal":"absolute-value","terminal_params":{"scale":3}},
              "converge":{"m_levels":[2],"reference":"max_level","bins":32,"k_paths":10}})");
    CHECK(run({"converge", "--config", c.string(), "--out", (d / "o").string()}) == 0);
    CHECK(read_json(d / "o" / "report.json")["pass"] == true);
}

TEST_CASE("oracle and mc commands") {
    const fs::path d = scratch("om");
    CHECK(run({"oracle", "--out", (d / "o").string()}) == 0);
    CHECK(read_json(d / "o" / "oracle.json")[0]["abs_diff"].get<double>() <= 1e-12);
    const fs::path c = write_config(d, R"({"lattice":{"n_steps":40},"problem":{"generator":"driver-free","terminal":"quadratic"},"mc":{"n_paths":500}})");
    CHECK(run({"mc", "--config", c.string(), "--out", (d / "m").string()}) == 0);
    CHECK(read_json(d / "m" / "mc.json")["consistent"] == true);
}

TEST_CASE("seed and thread flags") {
    const fs::path d = scratch("seed");
    const fs::path c = write_config(d, R"({"lattice":{"n_steps":20},"seed":5,"threads":1,"solve":{"k_paths":3}})");
    REQUIRE(run({"solve", "--config", c.string(), "--out", (d / "a").string()}) == 0);
    REQUIRE(run({"solve", "--config", c.string(), "--out", (d / "b").string(), "--threads", "3"}) == 0);
    REQUIRE(run({"solve", "--config", c.string(), "--out", (d / "c").string(), "--seed", "6"}) == 0);
    CHECK(slurp(d / "a") == slurp(d / "b"));
    CHECK(slurp(d / "a")["K.csv"] != slurp(d / "c")["K.csv"]);
    CHECK(read_json(d / "c" / "manifest.json")["config"]["seed"] == 6);
}

TEST_CASE("system command writes component tables") {
    const fs::path d = scratch("sys");
    const fs::path c = write_config(d, R"({"lattice":{"n_steps":40}})");
    REQUIRE(run({"system", "--config", c.string(), "--out", (d / "o").string()}) == 0);
    const Json m = read_json(d / "o" / "manifest.json");
    CHECK(m["stitched_bound"]["pass"] == true);
    CHECK(m["picard"]["history"].size() == m["picard"]["iterations"].get<std::size_t>());
    std::ifstream y(d / "o" / "Y.csv");
    std::string header;
    std::getline(y, header);
    CHECK(header == "k,j,t,x,component,value");
}
