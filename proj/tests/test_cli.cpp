#include "cli.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using anchorlab::cli::run;
using nlohmann::json;

namespace {

const std::string kFixtures = ANCHORLAB_FIXTURE_DIR;

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "anchorlab_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path) { return json::parse(slurp(path)); }

// Simulated confounded-example data shared by the tests below.
fs::path example2_data() {
    static const fs::path dir = [] {
        const fs::path d = scratch("example2_data");
        REQUIRE(run({"simulate", "--scm", kFixtures + "/example2.json", "--n", "200000", "--seed", "3", "--out",
                     d.string()}) == 0);
        return d;
    }();
    return dir;
}

double fitted(const std::string& gamma, const std::string& lambda = "") {
    const fs::path data = example2_data();
    const fs::path out = scratch("fit_" + gamma + lambda);
    std::vector<std::string> args{"fit",   "--data", (data / "data.csv").string(), "--config",
                                  (data / "config.json").string(), "--gamma", gamma, "--seed", "1", "--out",
                                  out.string(), "--format", "json"};
    if (!lambda.empty()) {
        args.push_back("--lambda");
        args.push_back(lambda);
    }
    REQUIRE(run(args) == 0);
    return read_json(out / "fit.json").at("coefficients").at("x1").get<double>();
}

}  // namespace

TEST_CASE("fit on simulated confounded-example data") {
    CHECK(fitted("1") == doctest::Approx(5.0 / 3.0).epsilon(0.02));
    CHECK(fitted("0", "0") == doctest::Approx(2.0).epsilon(0.02));
    CHECK(fitted("inf") == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("fit writes coefficients and diagnostics") {
    const fs::path data = example2_data();
    const fs::path out = scratch("fit_csv");
    REQUIRE(run({"fit", "--data", (data / "data.csv").string(), "--config", (data / "config.json").string(),
                 "--gamma", "2", "--lambda", "1", "--seed", "1", "--out", out.string(), "--format", "json"}) == 0);
    const json j = read_json(out / "fit.json");
    CHECK(j.at("gamma").get<double>() == 2.0);
    CHECK(j.at("lambda").get<double>() == 1.0);
    CHECK(j.at("diagnostics").at("converged").get<bool>());
    CHECK(j.at("diagnostics").at("n").get<int>() == 200000);

    const fs::path csv = scratch("fit_csv2");
    REQUIRE(run({"fit", "--data", (data / "data.csv").string(), "--config", (data / "config.json").string(),
                 "--gamma", "2", "--seed", "1", "--out", csv.string()}) == 0);
    const std::string text = slurp(csv / "coefficients.csv");
    CHECK(text.rfind("coordinate,estimate\n", 0) == 0);
}

TEST_CASE("exit codes") {
    const fs::path data = example2_data();
    const std::string csv = (data / "data.csv").string();
    const std::string cfg = (data / "config.json").string();
    const fs::path out = scratch("exit");

    // fit is deterministic and needs no seed; unknown subcommand, bad option value
    CHECK(run({"fit", "--data", csv, "--config", cfg, "--out", out.string()}) == 0);
    CHECK(run({"nonsense"}) == 2);
    CHECK(run({"fit", "--data", csv, "--config", cfg, "--gamma", "-1", "--seed", "1", "--out", out.string()}) == 2);

    const fs::path bad = out / "bad.json";
    std::ofstream(bad) << "{\"response\": \"nope\", \"anchors\": [\"A1\"]}";
    CHECK(run({"fit", "--data", csv, "--config", bad.string(), "--seed", "1", "--out", out.string()}) == 2);
    CHECK(run({"fit", "--data", (out / "missing.csv").string(), "--config", cfg, "--seed", "1", "--out",
               out.string()}) == 2);

    // one anchor, one predictor is fine; gamma = inf on a collinear design is numeric
    const fs::path dup = out / "dup.csv";
    std::ofstream(dup) << "y,x1,x2,A1\n1,1,1,1\n2,2,2,-1\n0,3,3,1\n5,4,4,-1\n";
    const fs::path dup_cfg = out / "dup.json";
    std::ofstream(dup_cfg) << "{\"response\": \"y\", \"anchors\": [{\"name\": \"A1\", \"kind\": \"continuous\"}]}";
    CHECK(run({"fit", "--data", dup.string(), "--config", dup_cfg.string(), "--gamma", "1", "--seed", "1", "--out",
               out.string()}) == 3);

    CHECK(run({"--help"}) == 0);
}

TEST_CASE("path endpoints agree with fit") {
    const fs::path data = example2_data();
    const fs::path out = scratch("path");
    REQUIRE(run({"path", "--data", (data / "data.csv").string(), "--config", (data / "config.json").string(),
                 "--grid", "0,1", "--seed", "1", "--out", out.string(), "--format", "json"}) == 0);
    const json j = read_json(out / "path.json");
    std::ostringstream dump;
    dump << j;
    INFO(dump.str());
    REQUIRE(j.contains("coefficients"));
    const json& coef = j.at("coefficients");
    REQUIRE(coef.size() == 2);
    CHECK(coef.at(0).at(0).get<double>() == doctest::Approx(fitted("0")).epsilon(1e-10));
    CHECK(coef.at(1).at(0).get<double>() == doctest::Approx(fitted("1")).epsilon(1e-10));
}

TEST_CASE("population path and shift curves") {
    const fs::path out = scratch("curves");
    REQUIRE(run({"path", "--scm", kFixtures + "/hidden_shift.json", "--grid", "0,1,5", "--shift", "0,0,1",
                 "--tgrid", "0,1,2,3,4", "--seed", "1", "--out", out.string()}) == 0);
    std::ifstream in(out / "shift_curves.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("causal") != std::string::npos);
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<double> v;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
        REQUIRE(v.size() == 5);  // t, three gammas, causal
        // gamma = 5 beats the causal coefficient for every strength on this shift
        CHECK(v[3] <= v[4] + 1e-12);
        ++rows;
    }
    CHECK(rows == 5);
}

TEST_CASE("simulate is deterministic in the seed") {
    const fs::path a = scratch("sim_a"), b = scratch("sim_b"), c = scratch("sim_c");
    const std::string scm = kFixtures + "/two_environment.json";
    REQUIRE(run({"simulate", "--scm", scm, "--n", "50", "--seed", "9", "--out", a.string()}) == 0);
    REQUIRE(run({"simulate", "--scm", scm, "--n", "50", "--seed", "9", "--out", b.string()}) == 0);
    REQUIRE(run({"simulate", "--scm", scm, "--n", "50", "--seed", "10", "--out", c.string()}) == 0);
    CHECK(slurp(a / "data.csv") == slurp(b / "data.csv"));
    CHECK(slurp(a / "data.csv") != slurp(c / "data.csv"));
    CHECK(run({"simulate", "--scm", scm, "--n", "50", "--out", a.string()}) == 2);
}

TEST_CASE("cv and rank outputs") {
    const fs::path data = scratch("two_env");
    REQUIRE(run({"simulate", "--scm", kFixtures + "/two_environment.json", "--n", "2000", "--seed", "4", "--out",
                 data.string()}) == 0);
    const std::string csv = (data / "data.csv").string();
    const std::string cfg = (data / "config.json").string();

    const fs::path cv = scratch("cv");
    REQUIRE(run({"cv", "--data", csv, "--config", cfg, "--folds", "2", "--grid", "0,1,2", "--seed", "1", "--out",
                 cv.string(), "--format", "json"}) == 0);
    const json j = read_json(cv / "cv.json");
    CHECK(j.dump().find("selected") != std::string::npos);

    const fs::path rank = scratch("rank");
    REQUIRE(run({"rank", "--data", csv, "--config", cfg, "--lambda", "1", "--seed", "1", "--out", rank.string()}) ==
            0);
    std::ifstream in(rank / "rank.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "predictor,a_score,l_score");
    int rows = 0;
    while (std::getline(in, line)) {
        const auto c1 = line.find(','), c2 = line.rfind(',');
        CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) <= std::stod(line.substr(c2 + 1)) + 1e-12);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("verify an SCM") {
    const fs::path out = scratch("verify");
    CHECK(run({"verify", "--scm", kFixtures + "/hidden_shift.json", "--seed", "2", "--out", out.string()}) == 0);
    const json j = read_json(out / "verify.json");
    CHECK(j.dump().find("\"passed\":true") != std::string::npos);
    CHECK(run({"verify", "--scm", kFixtures + "/hidden_shift.json", "--out", out.string()}) == 2);
}

TEST_CASE("real lists") {
    const auto v = anchorlab::cli::parse_real_list("0, 1.5,inf");
    REQUIRE(v.size() == 3);
    CHECK(v[1] == 1.5);
    CHECK(std::isinf(v[2]));
}
