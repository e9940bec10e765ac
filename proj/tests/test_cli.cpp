#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

// End-to-end checks of the built CLI binary (path via SPDELAB_CLI, set by
// ctest).  Skipped when the binary is not available.

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* p = std::getenv("SPDELAB_CLI");
  return p == nullptr ? std::string() : std::string(p);
}

int run_cli(const std::string& args) {
  const int rc = std::system((cli_path() + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// manifest.txt without its timestamp line
std::string manifest_stable(const fs::path& p) {
  std::istringstream in(slurp(p));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("timestamp=", 0) != 0) out << line << "\n";
  }
  return out.str();
}

const char* kCertifyConfig = R"json({
  "model": {
    "truncation": 64,
    "q": {"kind": "power", "scale": 1.0, "exponent": 2.0},
    "a": {"kind": "power", "scale": 1.0, "exponent": -2.0},
    "theta_star": {"preset": "smooth", "smoothness": 2.0, "cm_norm": 1.0},
    "n": 1000,
    "seed": 11
  },
  "certificate": {"kind": "strong", "delta": 0.1, "c_universal": 1.0,
                  "validate": true, "n_samples": 4000},
  "output_dir": "out",
  "seed": 5
})json";

const char* kSweepConfig = R"json({
  "model": {
    "truncation": 64,
    "q": {"kind": "power", "scale": 1.0, "exponent": 2.0},
    "a": {"kind": "power", "scale": 1.0, "exponent": -2.0},
    "theta_star": {"preset": "smooth", "smoothness": 2.0, "cm_norm": 1.0},
    "n": 1000,
    "seed": 11
  },
  "sweep": {"parameter": "n", "values": [100, 1000, 10000],
            "delta": 0.1, "n_samples": 8000},
  "output_dir": "out",
  "seed": 5
})json";

std::map<std::string, std::string> read_single_row_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  std::map<std::string, std::string> out;
  std::istringstream hs(header), rs(row);
  std::string h, v;
  while (std::getline(hs, h, ',')) {
    if (!std::getline(rs, v, ',')) v = "";
    out[h] = v;
  }
  return out;
}

}  // namespace

TEST_CASE("cli: certify matches the certificates module and reruns "
          "byte-identically") {
  if (cli_path().empty()) {
    MESSAGE("SPDELAB_CLI not set; skipping CLI test");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "spdelab_cli_certify";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << kCertifyConfig;

  const std::string base = "certify --config " + (dir / "cfg.json").string();
  REQUIRE(run_cli(base + " --out " + (dir / "run1").string()) == 0);
  REQUIRE(run_cli(base + " --out " + (dir / "run2").string()) == 0);

  CHECK(slurp(dir / "run1" / "certificate.csv") ==
        slurp(dir / "run2" / "certificate.csv"));
  CHECK(slurp(dir / "run1" / "certificate.txt") ==
        slurp(dir / "run2" / "certificate.txt"));
  CHECK(manifest_stable(dir / "run1" / "manifest.txt") ==
        manifest_stable(dir / "run2" / "manifest.txt"));

  // snapshot against the certificates module oracle
  const auto row = read_single_row_csv(dir / "run1" / "certificate.csv");
  const double radius = std::stod(row.at("radius"));
  // M = 64 coercive instance: mu = 1, B = 1, c = 1, delta = 0.1
  double tr = 0.0, tr_qaq = 0.0;
  for (int m = 1; m <= 64; ++m) {
    tr += std::pow(double(m), -2.0);
    tr_qaq += std::pow(double(m), -2.0);
  }
  const double eps2 =
      (std::sqrt(tr_qaq) + std::sqrt(2.0 * std::log(10.0))) / std::sqrt(1000.0);
  const double expected = std::sqrt(tr / 1000.0) + 1.0 / 1000.0 + eps2 +
                          std::sqrt(std::log(10.0) / 1000.0);
  CHECK(radius == doctest::Approx(expected).epsilon(1e-12));
  CHECK(row.at("validation_pass") == "true");
}

TEST_CASE("cli: sweep emits the n^{-1/2} slope") {
  if (cli_path().empty()) {
    MESSAGE("SPDELAB_CLI not set; skipping CLI test");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "spdelab_cli_sweep";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "cfg.json") << kSweepConfig;
  REQUIRE(run_cli("sweep --config " + (dir / "cfg.json").string() + " --out " +
                  (dir / "run").string()) == 0);

  std::ifstream fit(dir / "run" / "fit.csv");
  std::string line;
  std::getline(fit, line);  // header
  double radius_slope = 0.0;
  bool found = false;
  while (std::getline(fit, line)) {
    const auto comma = line.find(',');
    if (line.substr(0, comma) == "radius") {
      radius_slope = std::stod(line.substr(comma + 1));
      found = true;
    }
  }
  REQUIRE(found);
  CHECK(std::abs(radius_slope + 0.5) < 0.02);
}

TEST_CASE("cli: malformed configs exit 2 with the offending key") {
  if (cli_path().empty()) {
    MESSAGE("SPDELAB_CLI not set; skipping CLI test");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "spdelab_cli_bad";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "bad.json") << R"json({"model": {"truncation": 4,
    "q": {"kind": "power"}, "a": {"kind": "power"}, "n": 10, "oops": 1}})json";
  CHECK(run_cli("certify --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("certify --config " + (dir / "missing.json").string()) == 2);
}

TEST_CASE("cli: audit blocks certificates on non-coercive instances") {
  if (cli_path().empty()) {
    MESSAGE("SPDELAB_CLI not set; skipping CLI test");
    return;
  }
  const fs::path dir = fs::temp_directory_path() / "spdelab_cli_noncoercive";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // mu_m lambda_m -> 0: certificate unavailable
  std::ofstream(dir / "cfg.json") << R"json({
    "model": {
      "truncation": 16,
      "q": {"kind": "power", "scale": 1.0, "exponent": 2.0},
      "a": {"kind": "power", "scale": 1.0, "exponent": 1.0},
      "n": 100, "seed": 2
    },
    "certificate": {"kind": "strong", "delta": 0.1}
  })json";
  CHECK(run_cli("certify --config " + (dir / "cfg.json").string() + " --out " +
                (dir / "run").string()) == 3);
}
