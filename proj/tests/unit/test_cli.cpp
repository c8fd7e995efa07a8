#include "commands.hpp"
#include "config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace spinbridge;
using namespace spinbridge::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("spinbridge_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

struct Invocation {
  int code;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "spinbridge");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_file(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

const char* kSmallRun = R"({
  // tiny truncation keeps the test fast
  "protocol": {"name": "double-swap", "initial": "fock1", "samples": 11},
  "layout": {"dims": [2, 2, 2]},
  "decay": {"kappa1": 0, "gamma_s": 0, "kappa2": 0}
})";

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config overlay") {
    const RunConfig cfg = apply_config_text(RunConfig{}, kSmallRun, "inline");
    CHECK(cfg.protocol == ProtocolKind::DoubleSwap);
    CHECK(cfg.samples == 11);
    REQUIRE(cfg.dims.has_value());
    CHECK(cfg.layout().dims() == std::array<int, 3>{2, 2, 2});
    CHECK(cfg.decay.is_lossless());

    const RunConfig dark = apply_config_text(
        RunConfig{}, R"({"protocol": {"name": "dark-state", "initial": "coherent", "alpha": 0.5},
                        "schedule": {"width2": 4.5, "window": [-5, 10]},
                        "integrator": {"method": "dopri45", "dt": 0.01}})",
        "inline");
    CHECK(dark.protocol == ProtocolKind::DarkState);
    CHECK(std::get<Coherent>(dark.initial).alpha == Complex(0.5, 0.0));
    CHECK(dark.pulses.width2 == 4.5);
    CHECK(dark.dark_window.start == -5.0);
    CHECK(dark.integrator.method == IntegratorMethod::DormandPrince45);
    CHECK(dark.decay.gamma_s == DecayRates::lossy_defaults().gamma_s);
  }

  TEST_CASE("config errors name the problem") {
    auto message = [](const std::string& text) {
      try {
        apply_config_text(RunConfig{}, text, "cfg.json");
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("{\n\"protocol\": {\n\"name\": }\n}").find("cfg.json:3") != std::string::npos);
    CHECK(message(R"({"protocol": {"samples": "many"}})").find("protocol.samples") !=
          std::string::npos);
    CHECK(message(R"({"decay": {"kappa3": 1}})").find("unknown key") != std::string::npos);
    CHECK(message(R"({"extras": {}})").find("unknown section") != std::string::npos);
    CHECK(message(R"({"protocol": {"name": "triple-swap"}})").find("triple-swap") !=
          std::string::npos);
    CHECK(message(R"({"decay": {"gamma_s": -1}})").find(">= 0") != std::string::npos);
    CHECK(message(R"({"layout": {"dims": [1, 2, 2]}})") != "");
    CHECK(message(R"({"integrator": {"dt": 0}})") != "");
    CHECK(message("[1, 2]").find("object") != std::string::npos);
  }

  TEST_CASE("number formatting and unit scale") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(1.0 / 3.0) == "0.333333333");
    CHECK(parse_unit_scale("G").rate == 1.0);
    CHECK(parse_unit_scale("MHz").rate == doctest::Approx(2.0 * 3.141592653589793));
    CHECK_THROWS(parse_unit_scale("GHz"));
    CHECK(sweep_file_name(0.03) == "gamma_s_0.03.csv");
  }

  TEST_CASE("run writes the series CSV") {
    TempDir dir;
    const fs::path cfg = write_file(dir.path, "run.json", kSmallRun);
    const Invocation r =
        invoke({"run", "--config", cfg.string(), "--out", (dir.path / "out").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.find("peak fidelity 1") != std::string::npos);
    const auto lines = read_lines(dir.path / "out" / "double-swap_fock1.csv");
    REQUIRE(lines.size() == 12);
    CHECK(lines[0] == kSeriesHeader);
    CHECK(lines[1].rfind("0,1,0,0,1,0,", 0) == 0);
    CHECK(lines.back().rfind("3.14159265,", 0) == 0);
  }

  TEST_CASE("flags override the config") {
    TempDir dir;
    const fs::path cfg = write_file(dir.path, "run.json", kSmallRun);
    const Invocation r = invoke({"run", "--config", cfg.string(), "--initial", "superposition",
                                 "--out", dir.path.string(), "--unit-scale", "MHz"});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir.path / "double-swap_superposition.csv"));
    const auto lines = read_lines(dir.path / "double-swap_superposition.csv");
    // The G1 column is reported in rad/us.
    CHECK(lines[1].find(",6.28318531,0,") != std::string::npos);
  }

  TEST_CASE("sweep writes one file per rate and a summary") {
    TempDir dir;
    const fs::path cfg = write_file(dir.path, "run.json", kSmallRun);
    const Invocation r = invoke({"sweep", "--config", cfg.string(), "--values", "0.01,0.1",
                                 "--out", dir.path.string()});
    REQUIRE(r.code == kExitOk);
    CHECK(fs::exists(dir.path / "gamma_s_0.01.csv"));
    CHECK(fs::exists(dir.path / "gamma_s_0.1.csv"));
    const auto summary = read_lines(dir.path / "summary.csv");
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == kSummaryHeader);
    CHECK(summary[1].rfind("0.01,", 0) == 0);
  }

  TEST_CASE("exit codes") {
    TempDir dir;
    CHECK(invoke({"run", "--config", (dir.path / "missing.json").string()}).code ==
          kExitBadConfig);
    const fs::path bad = write_file(dir.path, "bad.json", R"({"decay": {"kappa1": "x"}})");
    const Invocation r = invoke({"run", "--config", bad.string()});
    CHECK(r.code == kExitBadConfig);
    CHECK(r.err.find("decay.kappa1") != std::string::npos);
    CHECK(invoke({"run", "--lossless", "--lossy-defaults"}).code == kExitBadConfig);
    CHECK(invoke({"sweep", "--values", ""}).code == kExitBadConfig);
    CHECK(invoke({"run", "--protocol", "nope"}).code == kExitBadConfig);
    CHECK(invoke({"frobnicate"}).code == kExitBadConfig);
    CHECK(invoke({"--help"}).code == kExitOk);

    const fs::path coarse = write_file(dir.path, "coarse.json", R"({
      "protocol": {"name": "dark-state", "samples": 3}, "layout": {"dims": [3, 3, 3]},
      "integrator": {"dt": 5}})");
    CHECK(invoke({"run", "--config", coarse.string(), "--out", dir.path.string()}).code ==
          kExitIntegration);
  }
}
