#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pendulum/cli_app.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using pendulum::cli::run_cli;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("pendulum_cli_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

fs::path write_config(const TempDir& dir, const json& cfg, const char* name = "config.json") {
    fs::path p = dir.path / name;
    std::ofstream os(p);
    os << cfg.dump(2);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

json read_result(const fs::path& out_dir) { return json::parse(slurp(out_dir / "result.json")); }

int run(const std::vector<std::string>& args) { return run_cli(args); }

}  // namespace

TEST_CASE("simulate: equilibrium produces constant rows and a result record") {
    TempDir dir("simulate");
    json cfg = {{"pivot", {{"kind", "zero"}}},
                {"simulate", {{"phi0", 0.0}, {"p0", 0.0}, {"t_end", 2.0}, {"sample_dt", 0.5}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"simulate", "--config", cfg_path.string(), "--out", out.string()}) == 0);

    std::ifstream csv(out / "trajectory.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,phi,p");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        auto c1 = line.find(','), c2 = line.rfind(',');
        CHECK(line.substr(c1 + 1, c2 - c1 - 1) == "0");
        CHECK(line.substr(c2 + 1) == "0");
    }
    CHECK(rows >= 5);

    json rec = read_result(out);
    CHECK(rec.at("command") == "simulate");
    CHECK(rec.at("tool_version") == pendulum::cli::kToolVersion);
    CHECK(rec.at("config").at("params").at("g") == 9.8);
    CHECK(rec.at("config").at("simulate").at("t_end") == 2.0);
    CHECK(rec.at("outputs").at("crossing").is_null());
    CHECK(rec.contains("input_digest"));
}

TEST_CASE("find-nonfalling: record carries the documented keys and brackets arctan(a/g)") {
    TempDir dir("nonfalling");
    json cfg = {{"pivot", {{"kind", "constant_acceleration"}, {"a", 9.8}}},
                {"nonfalling", {{"tol_phi", 1e-9}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"find-nonfalling", "--config", cfg_path.string(), "--out", out.string()}) == 0);

    json rec = read_result(out);
    const json& o = rec.at("outputs");
    for (const char* key : {"phi_lo", "phi_hi", "witness_phi", "horizon", "witness_survived",
                            "bisection_steps", "escape_profile"})
        CHECK(o.contains(key));
    double quarter_pi = std::numbers::pi / 4;
    CHECK(o.at("phi_lo").get<double>() - 1e-8 <= quarter_pi);
    CHECK(o.at("phi_hi").get<double>() + 1e-8 >= quarter_pi);
    CHECK(o.at("escape_profile").is_array());
    CHECK(o.at("escape_profile").size() >= 2);
    for (const auto& e : o.at("escape_profile")) {
        CHECK(e.contains("phi0"));
        CHECK(e.contains("side"));
        CHECK(e.contains("t_star"));
    }
}

TEST_CASE("validate-segment: forced block reports positive margins and index -1") {
    TempDir dir("segment");
    json cfg = {{"pivot",
                 {{"kind", "harmonic_sum"},
                  {"terms", {{{"amplitude", 0.05}, {"angular_frequency", 2 * std::numbers::pi}}}}}},
                {"segment", {{"T", 1.0}, {"safety", 1.1}, {"grid_n", 128}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"validate-segment", "--config", cfg_path.string(), "--out", out.string()}) == 0);
    json rec = read_result(out);
    const json& o = rec.at("outputs");
    CHECK(o.at("valid") == true);
    CHECK(o.at("min_exit_margin").get<double>() > 0.0);
    CHECK(o.at("min_entry_margin").get<double>() > 0.0);
    CHECK(o.at("tangency_margins").at("p_plus").get<double>() > 0.0);
    CHECK(o.at("tangency_margins").at("corner").get<double>() ==
          doctest::Approx(9.8).epsilon(1e-12));
    CHECK(o.at("euler_characteristic_index") == -1);
}

TEST_CASE("find-periodic: orbit record with optional index cross-check") {
    TempDir dir("periodic");
    json cfg = {{"pivot",
                 {{"kind", "harmonic_sum"},
                  {"terms", {{{"amplitude", 0.01}, {"angular_frequency", 2 * std::numbers::pi}}}}}},
                {"periodic", {{"T", 1.0}, {"grid_n", 128}, {"index_check", true}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"find-periodic", "--config", cfg_path.string(), "--out", out.string()}) == 0);
    json rec = read_result(out);
    const json& orbit = rec.at("outputs").at("orbit");
    CHECK(orbit.at("residual").get<double>() <= 1e-11);
    CHECK(orbit.at("contained") == true);
    CHECK(rec.at("outputs").at("index_check").at("winding") == -1);
    CHECK(fs::exists(out / "orbit.csv"));
}

TEST_CASE("index: explicit region") {
    TempDir dir("index");
    json cfg = {{"pivot", {{"kind", "zero"}}},
                {"index",
                 {{"T", 1.0},
                  {"region", {{"phi", {-0.5, 0.5}}, {"p", {-0.5, 0.5}}}}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"index", "--config", cfg_path.string(), "--out", out.string()}) == 0);
    CHECK(read_result(out).at("outputs").at("winding") == -1);
}

TEST_CASE("exit codes: schema, validation, numerical") {
    TempDir dir("errors");

    // unknown key -> 4
    auto bad_key = write_config(dir, json{{"pivot", {{"kind", "zero"}}}, {"typo", 1}}, "k.json");
    CHECK(run({"simulate", "--config", bad_key.string(),
               "--out", (dir.path / "o1").string()}) == 4);

    // malformed JSON -> 4
    fs::path broken = dir.path / "broken.json";
    std::ofstream(broken) << "{ not json";
    CHECK(run({"simulate", "--config", broken.string(), "--out", (dir.path / "o2").string()}) ==
          4);

    // missing subcommand -> 4
    CHECK(run({}) == 4);

    // bad parameter value -> 2
    auto bad_val = write_config(
        dir, json{{"pivot", {{"kind", "zero"}}}, {"segment", {{"T", 1.0}, {"safety", 1.0}}}},
        "v.json");
    CHECK(run({"validate-segment", "--config", bad_val.string(),
               "--out", (dir.path / "o3").string()}) == 2);

    // aperiodic pivot for a segment command -> 2
    auto aper = write_config(
        dir, json{{"pivot", {{"kind", "constant_acceleration"}, {"a", 1.0}}},
                  {"segment", {{"T", 1.0}}}},
        "a.json");
    CHECK(run({"validate-segment", "--config", aper.string(),
               "--out", (dir.path / "o4").string()}) == 2);

    // fixed point on the index boundary -> 3
    auto on_boundary = write_config(
        dir, json{{"pivot", {{"kind", "zero"}}},
                  {"index",
                   {{"T", 1.0}, {"region", {{"phi", {0.0, 0.4}}, {"p", {-0.4, 0.4}}}}}}},
        "b.json");
    CHECK(run({"index", "--config", on_boundary.string(),
               "--out", (dir.path / "o5").string()}) == 3);
}

TEST_CASE("flag overrides take precedence over the config file") {
    TempDir dir("flags");
    json cfg = {{"pivot", {{"kind", "zero"}}},
                {"integrator", {{"rtol", 1e-6}}},
                {"simulate", {{"t_end", 1.0}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"simulate", "--config", cfg_path.string(), "--out", out.string(),
               "--rtol", "1e-9"}) == 0);
    CHECK(read_result(out).at("config").at("integrator").at("rtol") == 1e-9);
}

TEST_CASE("sweep: escape-side column flips left to right exactly once") {
    TempDir dir("sweep");
    json cfg = {{"pivot", {{"kind", "zero"}}},
                {"sweep",
                 {{"command", "escape"},
                  {"axis", "phi0"},
                  {"range", {-1.5, 1.5}},
                  {"count", 101},
                  {"horizon", 3.0}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out.string(), "--workers",
               "4"}) == 0);

    std::ifstream csv(out / "sweep.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "value,status,side,t_star,phi_exit,p_exit");
    int rows = 0, last_left = -1, first_right = 1000;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() >= 3);
        CHECK(cells[1] == "ok");
        if (cells[2] == "left") last_left = std::max(last_left, rows);
        if (cells[2] == "right") first_right = std::min(first_right, rows);
        ++rows;
    }
    CHECK(rows == 101);
    CHECK(last_left < first_right);
}

TEST_CASE("sweep: empty range yields a header-only table") {
    TempDir dir("sweep_empty");
    json cfg = {{"pivot", {{"kind", "zero"}}},
                {"sweep",
                 {{"command", "escape"}, {"axis", "phi0"}, {"range", {0.0, 1.0}}, {"count", 0}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out.string()}) == 0);
    CHECK(slurp(out / "sweep.csv") == "value,status,side,t_star,phi_exit,p_exit\n");
}

TEST_CASE("determinism: identical configs give byte-identical CSV bodies across workers") {
    TempDir dir("determinism");
    json cfg = {{"pivot",
                 {{"kind", "harmonic_sum"},
                  {"terms", {{{"amplitude", 0.03}, {"angular_frequency", 2 * std::numbers::pi}}}}}},
                {"sweep",
                 {{"command", "escape"},
                  {"axis", "phi0"},
                  {"range", {-0.5, 0.5}},
                  {"count", 24},
                  {"horizon", 2.0}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out1 = dir.path / "w1", out2 = dir.path / "w4", out3 = dir.path / "again";
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out1.string(), "--workers",
               "1"}) == 0);
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out2.string(), "--workers",
               "4"}) == 0);
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out3.string(), "--workers",
               "4"}) == 0);
    CHECK(slurp(out1 / "sweep.csv") == slurp(out2 / "sweep.csv"));
    CHECK(slurp(out2 / "sweep.csv") == slurp(out3 / "sweep.csv"));

    // trajectory CSV reruns are byte-identical as well
    json sim = {{"pivot", {{"kind", "zero"}}}, {"simulate", {{"phi0", 0.2}, {"t_end", 3.0}}}};
    auto sim_path = write_config(dir, sim, "sim.json");
    fs::path s1 = dir.path / "s1", s2 = dir.path / "s2";
    CHECK(run({"simulate", "--config", sim_path.string(), "--out", s1.string()}) == 0);
    CHECK(run({"simulate", "--config", sim_path.string(), "--out", s2.string()}) == 0);
    CHECK(slurp(s1 / "trajectory.csv") == slurp(s2 / "trajectory.csv"));
}

TEST_CASE("sweep: amplitude axis drives the periodic-orbit response") {
    TempDir dir("sweep_amp");
    json cfg = {{"pivot",
                 {{"kind", "harmonic_sum"},
                  {"terms", {{{"amplitude", 0.0}, {"angular_frequency", 2 * std::numbers::pi}}}}}},
                {"periodic", {{"T", 1.0}, {"grid_n", 128}, {"seed_grid", 3}}},
                {"sweep",
                 {{"command", "find-periodic"},
                  {"axis", "amplitude"},
                  {"range", {0.004, 0.02}},
                  {"count", 5}}}};
    auto cfg_path = write_config(dir, cfg);
    fs::path out = dir.path / "out";
    CHECK(run({"sweep", "--config", cfg_path.string(), "--out", out.string(), "--workers",
               "2"}) == 0);

    std::ifstream csv(out / "sweep.csv");
    std::string line;
    std::getline(csv, line);
    std::vector<double> amp, response;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() >= 6);
        CHECK(cells[1] == "ok");
        amp.push_back(std::stod(cells[0]));
        response.push_back(std::stod(cells[5]));
    }
    REQUIRE(amp.size() == 5);
    // linearized response: max|phi| ~ A w^2/(l w^2 + g)
    double w2 = 4 * std::numbers::pi * std::numbers::pi;
    double slope = w2 / (w2 + 9.8);
    for (std::size_t i = 0; i < amp.size(); ++i)
        CHECK(std::abs(response[i] - slope * amp[i]) <= 0.08 * slope * amp[i]);
}
