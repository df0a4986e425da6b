// Config parsing, artifact emission, determinism and exit codes of the CLI.

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "sqha/cli.hpp"

using namespace sqha;

namespace {

fs::path test_dir(const std::string& name) {
    fs::path p = fs::temp_directory_path() / "sqha_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Json small_run_config() {
    return Json{
        {"grid", {{"N", 128}, {"L", 16.0}}},
        {"potential", {{"family", "harmonic"}, {"params", {{"omega", 1.0}}}}},
        {"quantum", {{"hbar", 1.0}, {"mass", 1.0}}},
        {"noise", {{"theta", 0.125}, {"k", 1.0}, {"mobility", 1e-4}, {"f", 1.0}}},
        {"init", {{"gaussian", {{"center", 0.5}, {"sigma", 1.0}, {"momentum", 0.0}}}}},
        {"dt", 0.0},
        {"steps", 200},
        {"seed", 42},
        {"tracers", {{"count", 4}, {"placement", "quantile"}}},
        {"observe_every", 10},
    };
}

fs::path write_config(const fs::path& dir, const Json& j) {
    fs::path p = dir / "run.json";
    std::ofstream os(p);
    os << j.dump(2);
    return p;
}

int run_cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(std::move(args), out, err);
    if (err_text != nullptr) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("config round-trips through json", "[cli]") {
    RunConfig c = config_from_json(small_run_config());
    RunConfig c2 = config_from_json(config_to_json(c));
    CHECK(c2.grid_points == 128);
    CHECK(c2.grid_length == 16.0);
    CHECK(c2.potential.family() == PotentialSpec::Family::Harmonic);
    CHECK(c2.noise.theta == 0.125);
    CHECK(c2.noise.mobility == 1e-4);
    CHECK(c2.init_center == 0.5);
    CHECK(c2.steps == 200);
    CHECK(c2.seed == 42);
    CHECK(c2.tracer_count == 4);
    CHECK(c2.observe_every == 10);

    // A manifest wraps the config; loading it reproduces the settings.
    Json manifest;
    manifest["config"] = config_to_json(c);
    manifest["resolved"] = Json::object();
    RunConfig c3 = config_from_json(manifest);
    CHECK(c3.seed == 42);
}

TEST_CASE("config validation", "[cli]") {
    auto bad_family = small_run_config();
    bad_family["potential"]["family"] = "coulomb";
    CHECK_THROWS_AS(config_from_json(bad_family), Error);

    auto odd_grid = small_run_config();
    odd_grid["grid"]["N"] = 127;
    CHECK_THROWS_AS(config_from_json(odd_grid), Error);

    auto bad_steps = small_run_config();
    bad_steps["steps"] = 0;
    CHECK_THROWS_AS(config_from_json(bad_steps), Error);

    auto bad_placement = small_run_config();
    bad_placement["tracers"]["placement"] = "random";
    CHECK_THROWS_AS(config_from_json(bad_placement), Error);

    auto no_sigma = small_run_config();
    no_sigma["init"]["gaussian"].erase("sigma");
    CHECK_THROWS_AS(config_from_json(no_sigma), Error);
}

TEST_CASE("potential spec strings", "[cli]") {
    CHECK(potential_from_string("harmonic:2.5").omega() == 2.5);
    auto p = potential_from_string("power_tail:1.5,0.5");
    CHECK(p.amplitude() == 1.5);
    CHECK(p.kappa() == 0.5);
    CHECK(potential_from_string("free").family() == PotentialSpec::Family::Free);
    CHECK_THROWS_AS(potential_from_string("harmonic:1,2,3"), Error);
    CHECK_THROWS_AS(potential_from_string("mystery:1"), Error);
}

TEST_CASE("simulate emits deterministic artifacts", "[cli]") {
    auto dir = test_dir("simulate");
    auto cfg = write_config(dir, small_run_config());

    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()}) == 0);
    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out", (dir / "b").string()}) == 0);

    for (const char* name : {"observables.csv", "tracers.csv", "manifest.json"}) {
        CAPTURE(name);
        REQUIRE(fs::exists(dir / "a" / name));
    }
    CHECK(slurp(dir / "a" / "observables.csv") == slurp(dir / "b" / "observables.csv"));
    CHECK(slurp(dir / "a" / "tracers.csv") == slurp(dir / "b" / "tracers.csv"));

    // At least one density snapshot, identical across runs.
    REQUIRE(fs::exists(dir / "a" / "density_00000200.csv"));
    CHECK(slurp(dir / "a" / "density_00000200.csv") == slurp(dir / "b" / "density_00000200.csv"));

    // Rerunning from the manifest reproduces the outputs byte for byte.
    REQUIRE(run_cli({"simulate", "--config", (dir / "a" / "manifest.json").string(), "--out",
                     (dir / "c").string()}) == 0);
    CHECK(slurp(dir / "a" / "observables.csv") == slurp(dir / "c" / "observables.csv"));

    // Observables header carries units.
    const std::string obs = slurp(dir / "a" / "observables.csv");
    CHECK(obs.rfind("t[time],norm[1],energy[energy],mean_q[length],mean_q2[length^2],H_qu[energy]",
                    0) == 0);
}

TEST_CASE("flag overrides reach the manifest", "[cli]") {
    auto dir = test_dir("overrides");
    auto cfg = write_config(dir, small_run_config());
    REQUIRE(run_cli({"simulate", "--config", cfg.string(), "--out", (dir / "o").string(),
                     "--seed", "77", "--steps", "50", "--theta", "0"}) == 0);
    const Json manifest = Json::parse(slurp(dir / "o" / "manifest.json"));
    CHECK(manifest["config"]["seed"] == 77);
    CHECK(manifest["config"]["steps"] == 50);
    CHECK(manifest["config"]["noise"]["theta"] == 0.0);
    CHECK(manifest["resolved"].contains("dt_used"));
}

TEST_CASE("reversal-scan output is independent of the worker count", "[cli]") {
    auto dir = test_dir("scan");
    auto cfg = write_config(dir, small_run_config());
    auto run_scan = [&](const std::string& sub, const std::string& jobs) {
        REQUIRE(run_cli({"reversal-scan", "--config", cfg.string(), "--out",
                         (dir / sub).string(), "--thetas", "0,0.02,0.06", "--horizon", "0.1",
                         "--trials", "30", "--jobs", jobs}) == 0);
    };
    run_scan("j1", "1");
    run_scan("j4", "4");
    const std::string csv = slurp(dir / "j1" / "scan.csv");
    CHECK(csv == slurp(dir / "j4" / "scan.csv"));

    // Header and theta = 0 baseline row.
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "theta[temperature],mean_A[1],stderr_A[1],mean_fidelity_deficit[1],trials[1]");
    std::getline(is, line);
    const double base_a = std::stod(line.substr(line.find(',') + 1));
    CHECK(line.rfind("0,", 0) == 0);
    CHECK(base_a < 1e-8);
}

TEST_CASE("range subcommand writes report and profile", "[cli]") {
    auto dir = test_dir("range");
    REQUIRE(run_cli({"range", "--potential", "harmonic:1.0", "--out",
                     (dir / "report.json").string()}) == 0);
    const Json rep = Json::parse(slurp(dir / "report.json"));
    CHECK(rep["lambda_q"] == "DIVERGENT");
    CHECK(rep["converged"] == false);
    CHECK(fs::exists(dir / "profile.csv"));
    CHECK(fs::exists(dir / "manifest.json"));

    REQUIRE(run_cli({"range", "--potential", "power_tail:1.0,0.5", "--out",
                     (dir / "power").string()}) == 0);
    const Json rep2 = Json::parse(slurp(dir / "power" / "report.json"));
    CHECK(rep2["converged"] == true);
    CHECK(rep2["lambda_q"].is_number());
}

TEST_CASE("noise-validate emits the covariance table", "[cli]") {
    auto dir = test_dir("noisev");
    REQUIRE(run_cli({"noise-validate", "--theta", "0.5", "--grid", "256,32", "--samples",
                     "2000", "--seed", "9", "--out", (dir / "cov.csv").string()}) == 0);
    const std::string csv = slurp(dir / "cov.csv");
    CHECK(csv.rfind("delta[length],empirical[energy^2],theoretical[energy^2]", 0) == 0);

    const Json manifest = Json::parse(slurp(dir / "manifest.json"));
    const double fitted = manifest["resolved"]["fitted_lambda_c"].get<double>();
    CHECK(fitted == Catch::Approx(1.0).epsilon(0.1));  // lambda_c(theta = 0.5) = 1
}

TEST_CASE("classical-compare writes the limit report and paired trajectories", "[cli]") {
    auto dir = test_dir("compare");
    auto cfg = small_run_config();
    cfg["steps"] = 150;
    cfg["tracers"]["count"] = 8;
    auto path = write_config(dir, cfg);
    REQUIRE(run_cli({"classical-compare", "--config", path.string(), "--out",
                     (dir / "limit.json").string()}) == 0);
    const Json rep = Json::parse(slurp(dir / "limit.json"));
    CHECK(rep["lambda_q"] == "DIVERGENT");  // harmonic control
    CHECK(rep["classical_regime"] == false);
    CHECK(fs::exists(dir / "sqha_tracers.csv"));
    CHECK(fs::exists(dir / "classical_tracers.csv"));
}

TEST_CASE("config errors exit 2 with a JSON diagnostic", "[cli]") {
    auto dir = test_dir("errors");
    std::string err;
    CHECK(run_cli({"simulate", "--config", (dir / "missing.json").string(), "--out",
                   (dir / "x").string()}, &err) == 2);
    const Json j = Json::parse(err);
    CHECK(j["error"]["code"] == "CONFIG_ERROR");

    // Unknown flag.
    CHECK(run_cli({"simulate", "--nope"}, &err) == 2);
}

TEST_CASE("numerical-regime errors exit 3", "[cli]") {
    auto dir = test_dir("regime");
    auto cfg = small_run_config();
    cfg["noise"]["mobility"] = 1e9;  // clip gate
    auto path = write_config(dir, cfg);
    std::string err;
    CHECK(run_cli({"simulate", "--config", path.string(), "--out", (dir / "x").string()},
                  &err) == 3);
    CHECK(Json::parse(err)["error"]["code"] == "NOISE_TOO_STRONG");

    auto cfg2 = small_run_config();
    cfg2["noise"]["theta"] = 1e6;  // lambda_c below 2h
    auto path2 = write_config(dir, cfg2);
    CHECK(run_cli({"simulate", "--config", path2.string(), "--out", (dir / "y").string()},
                  &err) == 3);
    CHECK(Json::parse(err)["error"]["code"] == "UNRESOLVED_CORRELATION");
}

TEST_CASE("scan parameters can live in the config file", "[cli]") {
    auto dir = test_dir("scan_cfg");
    auto cfg = small_run_config();
    cfg["scan"] = {{"thetas", {0.0, 0.05}}, {"horizon", 0.1}, {"trials", 30}};
    auto path = write_config(dir, cfg);

    REQUIRE(run_cli({"reversal-scan", "--config", path.string(), "--out",
                     (dir / "from_cfg").string()}) == 0);
    const Json manifest = Json::parse(slurp(dir / "from_cfg" / "manifest.json"));
    CHECK(manifest["resolved"]["trials"] == 30);
    CHECK(manifest["resolved"]["horizon"] == 0.1);
    CHECK(manifest["resolved"]["thetas"].size() == 2);

    // Flags win over the config section.
    REQUIRE(run_cli({"reversal-scan", "--config", path.string(), "--out",
                     (dir / "flag_wins").string(), "--trials", "35"}) == 0);
    const Json m2 = Json::parse(slurp(dir / "flag_wins" / "manifest.json"));
    CHECK(m2["resolved"]["trials"] == 35);

    // Missing both flag and section is a config error.
    auto bare = write_config(test_dir("scan_cfg_bare"), small_run_config());
    std::string err;
    CHECK(run_cli({"reversal-scan", "--config", bare.string(), "--out",
                   (dir / "none").string()}, &err) == 2);
}
