#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qmoney/cli.hpp"
#include "qmoney/rng.hpp"

using namespace qmoney;
using namespace qmoney::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("qmoney_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (scratch() / name).string(); }

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string out;
};

// Runs the front end in-process with stdout and stderr captured.
Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "qmoney-cli");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = main_entry(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str()};
}

}  // namespace

TEST_CASE("figure writes 200 rows plus the header") {
  const auto csv = path("fig.csv");
  const auto r = invoke({"figure", "--N", "10000", "--points", "200", "--out", csv});
  REQUIRE(r.code == kExitOk);
  std::istringstream in(slurp(csv));
  std::string line;
  std::getline(in, line);
  CHECK(line == "theta,N,delta,theta_sqrtN,p_caught,p_probe0,p_probe1");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 200);
  const auto summary = json::parse(r.out);
  CHECK(summary["results"]["rows"] == 200);
  CHECK(summary["config"]["rounds"] == 10000);
}

TEST_CASE("bt-attack reaches the success target") {
  SUBCASE("fast-forward, 2000 trials") {
    const auto r = invoke({"bt-attack", "--n", "16", "--epsilon", "0.1", "--trials", "2000", "--seed", "1",
                           "--mode", "fastforward"});
    REQUIRE(r.code == kExitOk);
    const auto s = json::parse(r.out);
    CHECK(s["results"]["success_frequency"].get<double>() >= 0.9);
    CHECK(s["results"]["wrong_key_count"] == 0);
    CHECK(s["results"]["rounds_per_run"] == 790);
  }
  SUBCASE("sampled, 200 trials") {
    const auto r = invoke({"bt-attack", "--n", "16", "--epsilon", "0.1", "--trials", "200", "--seed", "1"});
    REQUIRE(r.code == kExitOk);
    CHECK(json::parse(r.out)["results"]["success_frequency"].get<double>() >= 0.9);
  }
}

TEST_CASE("output is byte-identical across runs and worker counts") {
  const std::vector<std::string> base{"pm-identify", "--n", "8", "--trials", "64", "--seed", "7"};
  auto with = [&](std::vector<std::string> extra) {
    auto a = base;
    a.insert(a.end(), extra.begin(), extra.end());
    return a;
  };
  const auto one = invoke(with({"--workers", "1", "--out", path("w1.json")}));
  const auto again = invoke(with({"--workers", "1", "--out", path("w1b.json")}));
  const auto four = invoke(with({"--workers", "4", "--out", path("w4.json")}));
  REQUIRE(one.code == kExitOk);
  // Only the out path differs between the three configs.
  auto strip = [](std::string s) {
    auto j = json::parse(s);
    j["config"].erase("out");
    return j.dump();
  };
  CHECK(strip(one.out) == strip(again.out));
  CHECK(strip(one.out) == strip(four.out));
  CHECK(slurp(path("w1.json")) == one.out);

  const auto csv_a = path("a.csv");
  const auto csv_b = path("b.csv");
  invoke({"figure", "--N", "40000", "--points", "50", "--out", csv_a});
  invoke({"figure", "--N", "40000", "--points", "50", "--out", csv_b, "--workers", "3"});
  CHECK(slurp(csv_a) == slurp(csv_b));
}

TEST_CASE("sampled trials depend only on the seed") {
  const auto a = invoke({"bt-attack", "--n", "4", "--epsilon", "0.2", "--trials", "40", "--seed", "3", "--workers", "1"});
  const auto b = invoke({"bt-attack", "--n", "4", "--epsilon", "0.2", "--trials", "40", "--seed", "3", "--workers", "5"});
  const auto c = invoke({"bt-attack", "--n", "4", "--epsilon", "0.2", "--trials", "40", "--seed", "4", "--workers", "1"});
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("config round-trips through JSON") {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    RunConfig c;
    c.subcommand = subcommands()[rng.below(subcommands().size())];
    c.n = 1 + rng.below(100);
    c.epsilon = rng.uniform();
    c.c_fit = 0.1 + rng.uniform();
    c.eta = rng.uniform() / 3;
    c.nu_final = rng.uniform() * 1e-3;
    c.return_frac = rng.uniform() / 7;
    c.master_seed = rng.next_u64();
    c.rounds = rng.next_u64() >> 20;
    c.live = rng.bernoulli(0.5);
    c.out = "dir/out " + std::to_string(i) + ".json";
    const auto text = to_json(c).dump();
    CHECK(config_from_json(json::parse(text)) == c);
  }
}

TEST_CASE("schema lists exactly the config fields") {
  const auto schema = json::parse(slurp(std::string(QMONEY_SOURCE_DIR) + "/schemas/run_config.schema.json"));
  const auto fields = to_json(RunConfig{});
  CHECK(schema["properties"].size() == fields.size());
  for (const auto& [key, value] : fields.items()) {
    REQUIRE_MESSAGE(schema["properties"].contains(key), key);
    const auto type = schema["properties"][key]["type"].get<std::string>();
    if (value.is_boolean()) CHECK(type == "boolean");
    else if (value.is_string()) CHECK(type == "string");
    else if (value.is_number_unsigned()) CHECK(type == "integer");
    else CHECK(type == "number");
  }
  for (const auto& name : subcommands())
    CHECK(std::find(schema["properties"]["subcommand"]["enum"].begin(), schema["properties"]["subcommand"]["enum"].end(),
                    name) != schema["properties"]["subcommand"]["enum"].end());
}

TEST_CASE("config file with flag overrides") {
  const auto cfg = path("cfg.json");
  std::ofstream(cfg) << R"({"subcommand": "ev-bomb", "trials": 7, "rounds": 50, "master_seed": 9})";
  const auto r = invoke({"--config", cfg, "--trials", "3"});
  REQUIRE(r.code == kExitOk);
  const auto s = json::parse(r.out);
  CHECK(s["config"]["trials"] == 3);
  CHECK(s["config"]["rounds"] == 50);
  CHECK(s["master_seed"] == 9);

  // The summary's config echo reproduces the run on its own.
  const auto echo = path("echo.json");
  std::ofstream(echo) << s["config"].dump();
  CHECK(invoke({"--config", echo}).out == r.out);
}

TEST_CASE("config errors exit with 2") {
  const auto bad_type = path("bad_type.json");
  std::ofstream(bad_type) << R"({"subcommand": "bt-attack", "n": "sixteen"})";
  const auto unknown = path("unknown.json");
  std::ofstream(unknown) << R"({"subcommand": "bt-attack", "colour": 1})";
  const auto broken = path("broken.json");
  std::ofstream(broken) << "{";
  CHECK(invoke({"--config", bad_type}).code == kExitConfigError);
  CHECK(invoke({"--config", unknown}).code == kExitConfigError);
  CHECK(invoke({"--config", broken}).code == kExitConfigError);
  CHECK(invoke({"--config", path("missing.json")}).code == kExitConfigError);
  CHECK(invoke({"bt-attack", "--mode", "bogus"}).code == kExitConfigError);
  CHECK(invoke({"bt-attack", "--epsilon", "1.5"}).code == kExitConfigError);
  CHECK(invoke({"bt-attack", "--variant", "parallel", "--mode", "fastforward"}).code == kExitConfigError);
  CHECK(invoke({"bt-attack", "--policy", "noisy", "--return-frac", "0.2", "--reissue-frac", "0.1"}).code ==
        kExitConfigError);
  CHECK(invoke({"bt-list", "--scheme", "listed"}).code == kExitConfigError);
  CHECK(invoke({"figure", "--points", "1"}).code == kExitConfigError);
  CHECK(invoke({"--no-such-flag"}).code == kExitConfigError);
  CHECK(invoke({}).code == kExitConfigError);
}

TEST_CASE("numerical failure exits with 3 and flags the summary") {
  const auto r = invoke({"pm-identify", "--n", "64", "--N", "1", "--mode", "postselected", "--trials", "1"});
  CHECK(r.code == kExitNumericalFailure);
  CHECK(json::parse(r.out)["status"] == "failed");
}

TEST_CASE("transcript and reconstruction artifacts") {
  const auto tr = path("t.jsonl");
  REQUIRE(invoke({"bt-attack", "--n", "2", "--epsilon", "0.2", "--trials", "2", "--transcript", tr}).code == kExitOk);
  std::istringstream lines(slurp(tr));
  std::string line;
  int records = 0;
  while (std::getline(lines, line)) {
    const auto rec = json::parse(line);
    CHECK(rec.contains("round"));
    CHECK(rec.contains("perturbation_gate"));
    CHECK(rec.contains("pass"));
    ++records;
  }
  CHECK(records > 0);

  const auto recon = path("r.json");
  const auto r = invoke({"pm-tomography", "--n", "1", "--trials", "1", "--mode", "fastforward", "--nu-final", "0.6",
                         "--reconstruction", recon});
  REQUIRE(r.code == kExitOk);
  const auto doc = json::parse(slurp(recon));
  if (json::parse(r.out)["results"]["completed_frequency"] == 1.0) {
    REQUIRE(doc.contains("0"));
    CHECK(doc["0"]["est"].size() == 3);
    CHECK(doc["0"]["bloch"].size() == 3);
    CHECK(doc["0"]["fidelity"].get<double>() >= 0.4);
  }
}

TEST_CASE("listed scheme from a state file") {
  const auto states = path("states.json");
  std::ofstream(states) << R"([[1, 0], [0.8, 0.6], [[0.6, 0], [0, 0.8]]])";
  const auto r = invoke({"bt-list", "--scheme", "listed", "--states", states, "--n", "2", "--epsilon", "0.2",
                         "--trials", "50", "--mode", "fastforward"});
  REQUIRE(r.code == kExitOk);
  const auto s = json::parse(r.out)["results"];
  CHECK(s["list_size"] == 3);
  CHECK(s["success_frequency"].get<double>() >= 0.8);
  CHECK(s["wrong_key_count"] == 0);
}

TEST_CASE("master secret derives keys from the environment") {
  ::setenv(kMasterSecretEnv, "correct horse", 1);
  const auto r = invoke({"bt-attack", "--n", "4", "--trials", "20", "--mode", "fastforward"});
  ::unsetenv(kMasterSecretEnv);
  REQUIRE(r.code == kExitOk);
  const auto s = json::parse(r.out);
  CHECK(s["keys"] == "derived");
  CHECK(r.out.find("correct horse") == std::string::npos);
  CHECK(s["results"]["success_frequency"].get<double>() >= 0.8);
}

TEST_CASE("bounds subcommand") {
  const auto r = invoke({"bounds"});
  REQUIRE(r.code == kExitOk);
  const auto s = json::parse(r.out)["results"];
  CHECK(s["bound_0TN0"]["ok"] == true);
  CHECK(s["pm_scaling"]["bounded"] == true);
}

TEST_CASE("emitted numbers carry at most 12 significant digits") {
  const auto r = invoke({"ev-bomb", "--trials", "1000", "--seed", "5"});
  const auto s = json::parse(r.out)["results"];
  for (const auto& [key, value] : s.items()) {
    if (!value.is_number_float()) continue;
    const auto text = value.dump();
    int digits = 0;
    bool leading = true;
    for (char ch : text) {
      if (ch == 'e' || ch == 'E') break;
      if (ch < '0' || ch > '9') continue;
      if (leading && ch == '0') continue;
      leading = false;
      ++digits;
    }
    CHECK_MESSAGE(digits <= 12, key << " = " << text);
  }
}
