#include "qmoney/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "qmoney/analytics.hpp"
#include "qmoney/bank.hpp"
#include "qmoney/bt_attack.hpp"
#include "qmoney/errors.hpp"
#include "qmoney/format.hpp"
#include "qmoney/pm_attack.hpp"
#include "qmoney/rng.hpp"
#include "qmoney/trials.hpp"

namespace qmoney::cli {

namespace {

using nlohmann::json;

template <class C, class F>
void for_each_field(C& c, F&& f) {
  f("subcommand", c.subcommand);
  f("scheme", c.scheme);
  f("state_file", c.state_file);
  f("n", c.n);
  f("policy", c.policy);
  f("return_frac", c.return_frac);
  f("reissue_frac", c.reissue_frac);
  f("variant", c.variant);
  f("live", c.live);
  f("rounds", c.rounds);
  f("epsilon", c.epsilon);
  f("c_fit", c.c_fit);
  f("eta", c.eta);
  f("nu_final", c.nu_final);
  f("f_budget", c.f_budget);
  f("mode", c.mode);
  f("trials", c.trials);
  f("master_seed", c.master_seed);
  f("points", c.points);
  f("out", c.out);
  f("transcript", c.transcript);
  f("reconstruction", c.reconstruction);
}

// Rounded to 12 significant digits; the json writer then prints the
// shortest form, so no number carries more.
double num(double x) { return std::stod(fmt12(x)); }

double frac(std::uint64_t k, std::uint64_t total) {
  return num(static_cast<double>(k) / static_cast<double>(total));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

bool finite_in(double x, double lo, double hi) { return std::isfinite(x) && x >= lo && x <= hi; }

VerificationPolicy policy_of(const RunConfig& c) {
  if (c.policy == "noisy") return NoisyThreshold{c.return_frac, c.reissue_frac};
  return StrictDestroy{};
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

// Per-trial streams: trial i owns stream_seed(master, i), split further by role.
struct TrialSeeds {
  std::uint64_t attacker;
  std::uint64_t bank;
  std::uint64_t states;
};

TrialSeeds seeds_for(std::uint64_t master, std::size_t trial) {
  const auto base = stream_seed(master, trial);
  return {stream_seed(base, 0), stream_seed(base, 1), stream_seed(base, 2)};
}

void apply_secret(Bank& bank, const ExecOptions& exec) {
  if (exec.master_secret) bank.use_master_secret(bytes_of(*exec.master_secret));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << content;
}

PureQubit qubit_from_json(const json& j) {
  auto amp = [](const json& a) -> Amplitude {
    if (a.is_number()) return {a.get<double>(), 0.0};
    if (a.is_array() && a.size() == 2 && a[0].is_number() && a[1].is_number())
      return {a[0].get<double>(), a[1].get<double>()};
    throw ConfigError("state amplitude must be a number or [re, im]");
  };
  if (!j.is_array() || j.size() != 2) throw ConfigError("each state must be [a0, a1]");
  const PureQubit s{amp(j[0]), amp(j[1])};
  if (!(s.norm2() > 1e-12)) throw ConfigError("state has zero norm");
  return s.normalized();
}

StateList load_state_list(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read state file " + path);
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("state file: " + std::string(e.what()));
  }
  if (!doc.is_array() || doc.size() < 2) throw ConfigError("state file must list at least two states");
  std::vector<PureQubit> states;
  for (const auto& s : doc) states.push_back(qubit_from_json(s));
  try {
    return StateList(std::move(states));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("state file: ") + e.what());
  }
}

std::vector<WiesnerSymbol> wiesner_key(const std::vector<KeySymbol>& key) {
  std::vector<WiesnerSymbol> out;
  for (const auto& k : key) out.push_back(std::get<WiesnerSymbol>(k));
  return out;
}

json run_ev_bomb(const RunConfig& c, const ExecOptions& exec) {
  const auto params = BtParams::from_rounds(c.rounds);
  const auto mode = mode_from_name(c.mode);
  struct Trial {
    bool exploded = false;
    int probe = 0;
    double survival = 0.0;
  };
  std::vector<Trial> out(c.trials);
  run_trials(c.trials, exec.workers, [&](std::size_t i) {
    Rng rng(seeds_for(c.master_seed, i).attacker);
    const auto r = ev_bomb_test(c.live, params, mode, rng);
    out[i] = {r.exploded, r.probe_outcome, r.survival_probability};
  });
  std::uint64_t exploded = 0, probe1 = 0;
  double survival = 0.0;
  for (const auto& t : out) {
    exploded += t.exploded;
    probe1 += !t.exploded && t.probe == 1;
    survival += t.survival;
  }
  const double analytic = c.live ? std::pow(std::cos(params.delta), 2.0 * static_cast<double>(c.rounds)) : 1.0;
  return {{"rounds", c.rounds},
          {"delta", num(params.delta)},
          {"explosion_frequency", frac(exploded, c.trials)},
          {"probe1_frequency", frac(probe1, c.trials)},
          {"mean_survival_probability", num(survival / static_cast<double>(c.trials))},
          {"analytic_survival", num(analytic)}};
}

struct AttackTally {
  std::uint64_t success = 0;
  std::uint64_t caught = 0;
  std::uint64_t reissued = 0;
  std::uint64_t wrong = 0;
  std::uint64_t verifications = 0;
  std::uint64_t max_verifications = 0;

  void add(RunStatus status, bool correct, std::uint64_t verifs) {
    if (status == RunStatus::Caught) ++caught;
    if (status == RunStatus::Reissued) ++reissued;
    if (status == RunStatus::Completed) ++(correct ? success : wrong);
    verifications += verifs;
    max_verifications = std::max(max_verifications, verifs);
  }

  json to_json(std::uint64_t trials) const {
    return {{"success_frequency", frac(success, trials)},
            {"caught_frequency", frac(caught, trials)},
            {"reissued_frequency", frac(reissued, trials)},
            {"wrong_key_count", wrong},
            {"mean_verifications", frac(verifications, trials)},
            {"max_verifications", max_verifications}};
  }
};

struct TrialOutcome {
  RunStatus status = RunStatus::Completed;
  bool correct = false;
  std::uint64_t verifications = 0;
};

json run_bt_attack(const RunConfig& c, const ExecOptions& exec) {
  const auto mode = mode_from_name(c.mode);
  const bool parallel = c.variant == "parallel";
  Transcript transcript;
  std::vector<TrialOutcome> out(c.trials);
  run_trials(c.trials, exec.workers, [&](std::size_t i) {
    const auto s = seeds_for(c.master_seed, i);
    Rng rng(s.attacker);
    Bank bank(s.bank, policy_of(c));
    apply_secret(bank, exec);
    const auto note = bank.issue(c.n, FourState{});
    Oracle oracle(bank, note.serial);
    auto wallet = note.state;
    Transcript* tr = i == 0 && !c.transcript.empty() ? &transcript : nullptr;
    const auto kr = parallel ? bt_recover_key_parallel(oracle, wallet, c.epsilon, mode, rng, tr)
                             : bt_recover_key_serial(oracle, wallet, c.epsilon, mode, rng, tr);
    out[i] = {kr.status, kr.key == wiesner_key(note.key), oracle.verifications()};
  });
  AttackTally tally;
  for (const auto& t : out) tally.add(t.status, t.correct, t.verifications);
  if (!c.transcript.empty()) write_file(c.transcript, transcript.to_jsonl());
  auto j = tally.to_json(c.trials);
  j["rounds_per_run"] = attack_rounds(c.n, c.epsilon);
  return j;
}

json run_bt_list(const RunConfig& c, const ExecOptions& exec) {
  const auto mode = mode_from_name(c.mode);
  const bool listed = c.scheme == "listed";
  const StateList list = listed ? load_state_list(c.state_file) : StateList::four_state();
  const double round_constant = list_round_constant(c.c_fit);
  Transcript transcript;
  std::vector<TrialOutcome> out(c.trials);
  run_trials(c.trials, exec.workers, [&](std::size_t i) {
    const auto s = seeds_for(c.master_seed, i);
    Rng rng(s.attacker);
    Bank bank(s.bank, policy_of(c));
    apply_secret(bank, exec);
    const auto note = listed ? bank.issue(c.n, Listed{list}) : bank.issue(c.n, FourState{});
    Oracle oracle(bank, note.serial);
    auto wallet = note.state;
    Transcript* tr = i == 0 && !c.transcript.empty() ? &transcript : nullptr;
    TrialOutcome t;
    t.correct = true;
    for (std::size_t q = 0; q < c.n; ++q) {
      const auto r = bt_list_attack(oracle, wallet, q, list, c.epsilon, round_constant, mode, rng, tr);
      if (r.status != RunStatus::Completed) {
        t.status = r.status;
        break;
      }
      const auto& truth = key_state(note.key[q]);
      if (!r.index || !same_ray(list.states()[*r.index], truth, 1e-9)) t.correct = false;
    }
    t.verifications = oracle.verifications();
    out[i] = t;
  });
  AttackTally tally;
  for (const auto& t : out) tally.add(t.status, t.correct, t.verifications);
  if (!c.transcript.empty()) write_file(c.transcript, transcript.to_jsonl());
  auto j = tally.to_json(c.trials);
  j["list_size"] = list.size();
  j["theta_min"] = num(list.theta_min());
  j["round_constant"] = num(round_constant);
  return j;
}

json run_pm_identify(const RunConfig& c, const ExecOptions& exec) {
  const auto mode = mode_from_name(c.mode);
  std::vector<TrialOutcome> out(c.trials);
  run_trials(c.trials, exec.workers, [&](std::size_t i) {
    const auto s = seeds_for(c.master_seed, i);
    Rng rng(s.attacker);
    Bank bank(s.bank, policy_of(c));
    apply_secret(bank, exec);
    const auto note = bank.issue(c.n, FourState{});
    Oracle oracle(bank, note.serial);
    auto wallet = note.state;
    const auto kr = pm_recover_key(oracle, wallet, c.rounds, mode, rng);
    out[i] = {kr.status, kr.key == wiesner_key(note.key), oracle.verifications()};
  });
  AttackTally tally;
  for (const auto& t : out) tally.add(t.status, t.correct, t.verifications);
  auto j = tally.to_json(c.trials);
  j["rounds"] = c.rounds;
  return j;
}

json reconstruction_json(const Reconstruction& rec, const std::vector<PureQubit>& truth) {
  json j = json::object();
  for (std::size_t q = 0; q < rec.estimates.size(); ++q) {
    json est = json::array(), bloch = json::array();
    for (int k = 0; k < 3; ++k) {
      est.push_back(num(rec.estimates[q][k]));
      bloch.push_back(num(rec.qubits[q].bloch[k]));
    }
    j[std::to_string(q)] = {{"est", est}, {"bloch", bloch}, {"fidelity", num(fidelity_pure(rec.qubits[q], truth[q]))}};
  }
  return j;
}

json run_pm_tomography(const RunConfig& c, const ExecOptions& exec) {
  ForgeOptions opts;
  opts.eta = c.eta;
  opts.nu_final = c.nu_final;
  opts.f_budget = c.f_budget;
  if (c.rounds > 0) opts.rounds = c.rounds;
  opts.mode = mode_from_name(c.mode);
  const auto schedule = forge_schedule(c.n, opts);
  struct Trial {
    RunStatus status = RunStatus::Completed;
    std::uint64_t component_failures = 0;
    bool chain_ok = false;
    bool fidelity_ok = false;
    double fidelity = 0.0;
    std::uint64_t verifications = 0;
  };
  std::vector<Trial> out(c.trials);
  json first;
  run_trials(c.trials, exec.workers, [&](std::size_t i) {
    const auto s = seeds_for(c.master_seed, i);
    Rng rng(s.attacker);
    Rng gen(s.states);
    std::vector<PureQubit> states;
    for (std::size_t q = 0; q < c.n; ++q) states.push_back(PureQubit::random(gen));
    Bank bank(s.bank, policy_of(c));
    apply_secret(bank, exec);
    const auto note = bank.issue_explicit(states);
    Oracle oracle(bank, note.serial);
    auto wallet = note.state;
    const auto rec = pm_forge_note(oracle, wallet, opts, rng);
    Trial t;
    t.status = rec.status;
    t.verifications = oracle.verifications();
    if (rec.status == RunStatus::Completed) {
      for (std::size_t q = 0; q < c.n; ++q) {
        const auto truth = DensityQubit::from_pure(states[q]).bloch;
        for (int k = 0; k < 3; ++k)
          if (std::abs(rec.estimates[q][k] - truth[k]) > schedule.nu) ++t.component_failures;
      }
      const auto chain = fidelity_chain(rec.estimates, states);
      t.chain_ok = chain.holds();
      t.fidelity = chain.fidelity;
      t.fidelity_ok = chain.fidelity >= 1.0 - c.nu_final;
      if (i == 0) first = reconstruction_json(rec, states);
    }
    out[i] = t;
  });
  std::uint64_t completed = 0, failures = 0, chain_ok = 0, fid_ok = 0, verifs = 0;
  double fid = 0.0;
  for (const auto& t : out) {
    verifs += t.verifications;
    if (t.status != RunStatus::Completed) continue;
    ++completed;
    failures += t.component_failures;
    chain_ok += t.chain_ok;
    fid_ok += t.fidelity_ok;
    fid += t.fidelity;
  }
  if (!c.reconstruction.empty()) write_file(c.reconstruction, (first.is_null() ? json::object() : first).dump(2) + "\n");
  return {{"m", schedule.m},
          {"rounds", schedule.rounds},
          {"nu", num(schedule.nu)},
          {"completed_frequency", frac(completed, c.trials)},
          {"component_failure_frequency", completed ? frac(failures, 3 * c.n * completed) : 0.0},
          {"fidelity_target_frequency", completed ? frac(fid_ok, completed) : 0.0},
          {"chain_holds", chain_ok},
          {"mean_fidelity", completed ? num(fid / static_cast<double>(completed)) : 0.0},
          {"mean_verifications", frac(verifs, c.trials)}};
}

json run_figure(const RunConfig& c) {
  const auto rows = analytics::sweep_theta(c.rounds, analytics::log_grid(0.01, 10.0, c.points));
  if (!c.out.empty()) {
    std::ostringstream csv;
    analytics::write_sweep_csv(csv, rows);
    write_file(c.out, csv.str());
  }
  double peak = 0.0, peak_at = 0.0;
  for (const auto& r : rows) {
    if (!std::isfinite(r.outcome.sum())) throw std::runtime_error("non-finite sweep value");
    if (r.outcome.p_caught > peak) {
      peak = r.outcome.p_caught;
      peak_at = r.theta_sqrt_n;
    }
  }
  const auto& lo = rows.front().outcome;
  const auto& hi = rows.back().outcome;
  return {{"rows", rows.size()},
          {"max_p_caught", num(peak)},
          {"max_p_caught_at", num(peak_at)},
          {"first", {{"p_caught", num(lo.p_caught)}, {"p_probe0", num(lo.p_pass_probe0)}, {"p_probe1", num(lo.p_pass_probe1)}}},
          {"last", {{"p_caught", num(hi.p_caught)}, {"p_probe0", num(hi.p_pass_probe0)}, {"p_probe1", num(hi.p_pass_probe1)}}}};
}

json run_bounds(const RunConfig& c) {
  const auto bound = analytics::bound_0TN0_check(analytics::default_bound_thetas(), analytics::default_rounds_grid());
  Rng gen(stream_seed(c.master_seed, 0));
  std::vector<PureQubit> states{PureQubit::zero(), PureQubit::plus(), PureQubit::y_plus()};
  for (int i = 0; i < 5; ++i) states.push_back(PureQubit::random(gen));
  const auto scaling =
      analytics::pm_scaling_check(Operator2::pauli_x(), states, kTomographyCoupling, {100, 1000, 10000, 100000});
  if (!bound.ok || !scaling.bounded) throw std::runtime_error("bounds check failed");
  return {{"bound_0TN0", bound.to_json()}, {"pm_scaling", scaling.to_json()}};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"ev-bomb",       "bt-attack", "bt-list", "pm-identify",
                                              "pm-tomography", "figure",    "bounds"};
  return names;
}

json to_json(const RunConfig& c) {
  json j = json::object();
  for_each_field(c, [&](const char* key, const auto& value) { j[key] = value; });
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for_each_field(c, [&](const char* name, auto& field) {
      if (key != name) return;
      known = true;
      using T = std::decay_t<decltype(field)>;
      bool ok = false;
      if constexpr (std::is_same_v<T, bool>) ok = value.is_boolean();
      else if constexpr (std::is_same_v<T, std::string>) ok = value.is_string();
      else if constexpr (std::is_same_v<T, std::uint64_t>) ok = value.is_number_unsigned();
      else ok = value.is_number();
      if (!ok) throw ConfigError("config field '" + key + "' has the wrong type");
      field = value.get<T>();
    });
    if (!known) throw ConfigError("unknown config field '" + key + "'");
  }
  return c;
}

void validate(const RunConfig& c) {
  const auto& names = subcommands();
  require(std::find(names.begin(), names.end(), c.subcommand) != names.end(),
          "unknown subcommand '" + c.subcommand + "'");
  require(c.scheme == "four-state" || c.scheme == "listed", "scheme must be four-state or listed");
  require(c.scheme == "four-state" || c.subcommand == "bt-list", "listed scheme is only used by bt-list");
  require(c.scheme != "listed" || !c.state_file.empty(), "listed scheme needs state_file");
  require(c.n >= 1 && c.n <= 1024, "n must be in [1, 1024]");
  require(c.policy == "strict" || c.policy == "noisy", "policy must be strict or noisy");
  try {
    qmoney::validate(policy_of(c));
    mode_from_name(c.mode);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  require(c.variant == "serial" || c.variant == "parallel", "variant must be serial or parallel");
  require(!(c.subcommand == "bt-attack" && c.variant == "parallel" && mode_from_name(c.mode) == RunMode::FastForward),
          "the parallel attack has no fast-forward mode");
  require(finite_in(c.epsilon, 1e-9, 1.0) && c.epsilon < 1.0, "epsilon must be in (0, 1)");
  require(finite_in(c.c_fit, 1e-9, 1e6), "c_fit must be positive");
  require(finite_in(c.eta, 1e-12, 1.0) && c.eta < 1.0, "eta must be in (0, 1)");
  require(finite_in(c.nu_final, 1e-9, 1e6), "nu_final must be positive");
  require(finite_in(c.f_budget, 1e-12, 1.0), "f_budget must be in (0, 1]");
  require(c.trials >= 1 && c.trials <= 1000000000ULL, "trials must be in [1, 1e9]");
  require(c.points >= 2 && c.points <= 1000000, "points must be in [2, 1e6]");
  require(c.rounds <= 1000000000000ULL, "rounds must be at most 1e12");
  const bool needs_rounds = c.subcommand == "ev-bomb" || c.subcommand == "pm-identify" || c.subcommand == "figure";
  require(!needs_rounds || c.rounds >= 1, "rounds must be at least 1");
  require(c.subcommand != "figure" || c.rounds >= 16, "figure needs N >= 16 so the sweep stays below theta = pi/2");
}

json run(const RunConfig& config, const ExecOptions& exec) {
  RunConfig c = config;
  if (c.rounds == 0) {
    if (c.subcommand == "ev-bomb") c.rounds = 100;
    if (c.subcommand == "pm-identify") c.rounds = 1000;
    if (c.subcommand == "figure") c.rounds = 10000;
  }
  validate(c);
  json results;
  try {
    if (c.subcommand == "ev-bomb") results = run_ev_bomb(c, exec);
    else if (c.subcommand == "bt-attack") results = run_bt_attack(c, exec);
    else if (c.subcommand == "bt-list") results = run_bt_list(c, exec);
    else if (c.subcommand == "pm-identify") results = run_pm_identify(c, exec);
    else if (c.subcommand == "pm-tomography") results = run_pm_tomography(c, exec);
    else if (c.subcommand == "figure") results = run_figure(c);
    else results = run_bounds(c);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return {{"subcommand", c.subcommand},
          {"status", "ok"},
          {"config", to_json(c)},
          {"master_seed", c.master_seed},
          {"rng", std::string(Rng::kName)},
          {"keys", exec.master_secret ? "derived" : "tabulated"},
          {"results", results}};
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Quantum money attack simulator"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  // Options only override the config file when given on the command line.
  std::vector<std::function<void(RunConfig&)>> overrides;
  auto bind = [&](CLI::App* on, const std::string& flag, auto RunConfig::*field, const std::string& help) {
    using T = std::remove_reference_t<decltype(std::declval<RunConfig&>().*field)>;
    auto holder = std::make_shared<T>();
    auto* opt = on->add_option(flag, *holder, help);
    overrides.push_back([holder, opt, field](RunConfig& c) {
      if (opt->count() > 0) c.*field = *holder;
    });
  };

  std::string config_path;
  unsigned workers = 0;
  std::string master_secret;
  app.add_option("--config", config_path, "JSON run configuration");
  bind(&app, "--seed", &RunConfig::master_seed, "master seed");
  bind(&app, "--trials", &RunConfig::trials, "number of trials");
  bind(&app, "--mode", &RunConfig::mode, "sampled | postselected | fastforward");
  bind(&app, "--out", &RunConfig::out, "summary JSON path (CSV for figure)");
  bind(&app, "--transcript", &RunConfig::transcript, "JSON-lines transcript of trial 0");
  bind(&app, "--policy", &RunConfig::policy, "strict | noisy");
  bind(&app, "--return-frac", &RunConfig::return_frac, "noisy policy: largest failing fraction still returned");
  bind(&app, "--reissue-frac", &RunConfig::reissue_frac, "noisy policy: largest failing fraction reissued");
  app.add_option("--workers", workers, "worker threads (0: all cores)");
  app.add_option("--master-secret", master_secret,
                 std::string("derive keys from this secret (or set ") + kMasterSecretEnv + ")");

  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& name : subcommands()) subs.emplace_back(app.add_subcommand(name), name);
  auto sub = [&](const std::string& name) {
    for (auto& [s, n] : subs)
      if (n == name) return s;
    return static_cast<CLI::App*>(nullptr);
  };

  bool dud = false;
  sub("ev-bomb")->add_flag("--dud", dud, "test a dud instead of a live bomb");
  bind(sub("ev-bomb"), "--N", &RunConfig::rounds, "rounds");
  for (const char* name : {"bt-attack", "bt-list", "pm-identify", "pm-tomography"})
    bind(sub(name), "--n", &RunConfig::n, "qubits per note");
  for (const char* name : {"bt-attack", "bt-list"}) bind(sub(name), "--epsilon", &RunConfig::epsilon, "failure budget");
  bind(sub("bt-attack"), "--variant", &RunConfig::variant, "serial | parallel");
  bind(sub("bt-list"), "--c-fit", &RunConfig::c_fit, "bound constant for the round count");
  bind(sub("bt-list"), "--scheme", &RunConfig::scheme, "four-state | listed");
  bind(sub("bt-list"), "--states", &RunConfig::state_file, "JSON list of candidate states");
  bind(sub("pm-identify"), "--N", &RunConfig::rounds, "rounds");
  bind(sub("pm-tomography"), "--N", &RunConfig::rounds, "rounds (0: from the catch budget)");
  bind(sub("pm-tomography"), "--eta", &RunConfig::eta, "per-estimate failure probability");
  bind(sub("pm-tomography"), "--nu-final", &RunConfig::nu_final, "target infidelity");
  bind(sub("pm-tomography"), "--f-budget", &RunConfig::f_budget, "catch budget");
  bind(sub("pm-tomography"), "--reconstruction", &RunConfig::reconstruction, "reconstruction JSON of trial 0");
  bind(sub("figure"), "--N", &RunConfig::rounds, "rounds");
  bind(sub("figure"), "--points", &RunConfig::points, "grid points");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  RunConfig config;
  ExecOptions exec;
  try {
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      if (!f) throw ConfigError("cannot read config " + config_path);
      json doc;
      try {
        doc = json::parse(f);
      } catch (const json::exception& e) {
        throw ConfigError("config: " + std::string(e.what()));
      }
      config = config_from_json(doc);
    }
    for (auto& apply : overrides) apply(config);
    for (auto& [s, name] : subs)
      if (s->parsed()) config.subcommand = name;
    if (dud) config.live = false;
    if (config.subcommand.empty()) throw ConfigError("no subcommand given");
    exec.workers = workers > 0 ? workers : default_workers();
    if (!master_secret.empty()) {
      exec.master_secret = master_secret;
    } else if (const char* env = std::getenv(kMasterSecretEnv); env && *env) {
      exec.master_secret = std::string(env);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  json summary;
  try {
    summary = run(config, exec);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    summary = {{"subcommand", config.subcommand},
               {"status", "failed"},
               {"error", e.what()},
               {"config", to_json(config)},
               {"master_seed", config.master_seed},
               {"rng", std::string(Rng::kName)}};
    code = kExitNumericalFailure;
  }
  const std::string text = summary.dump(2) + "\n";
  std::cout << text;
  try {
    if (!config.out.empty() && config.subcommand != "figure") write_file(config.out, text);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfigError;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "wall time: " << fmt12(wall) << " s\n";
  return code;
}

}  // namespace qmoney::cli
