#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "modlab/cli/instance.hpp"
#include "modlab/cli/json_out.hpp"
#include "modlab/content.hpp"
#include "modlab/counterexamples.hpp"
#include "modlab/duality.hpp"
#include "modlab/modulus.hpp"
#include "modlab/random_instances.hpp"

namespace modlab::cli {

inline constexpr const char* kReportSchema = "modlab.report/1";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitSchema = 2, kExitNumeric = 3, kExitInvariant = 4 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NumericFailure: return kExitNumeric;
    case ErrorKind::NotMonotone:
    case ErrorKind::ConstructionInvariant: return kExitInvariant;
    default: return kExitSchema;
  }
}

/// Collects named pass/fail checks for a report.
class Checks {
 public:
  void add(std::string name, bool pass, json detail = json::object()) {
    json c = json::object();
    c["name"] = std::move(name);
    c["pass"] = pass;
    if (!detail.empty()) c["detail"] = std::move(detail);
    all_ok_ = all_ok_ && pass;
    list_.push_back(std::move(c));
  }
  bool ok() const { return all_ok_; }
  json to_json() const { return list_.empty() ? json::array() : list_; }

 private:
  json list_ = json::array();
  bool all_ok_ = true;
};

inline json new_report(const std::string& command) {
  json r = json::object();
  r["schema"] = kReportSchema;
  r["tool"] = {{"name", "modlab"}, {"version", kToolVersion}};
  r["command"] = command;
  return r;
}

// ---------------------------------------------------------------------------
// Result serialization

inline json certificate_json(const Certificate& c) {
  json j = json::object();
  j["status"] = solver::to_string(c.status);
  j["primal_residual"] = number(c.primal_residual);
  j["dual_residual"] = number(c.dual_residual);
  j["gap"] = number(c.gap);
  j["iterations"] = c.iterations;
  if (!c.farkas.empty()) {
    j["kind"] = "farkas";
    j["farkas_digest"] = digest(c.farkas);
    j["certificate_residual"] = number(c.certificate_residual);
  }
  if (!c.ray.empty()) {
    j["kind"] = "unbounded-ray";
    j["ray_digest"] = digest(c.ray);
    j["certificate_residual"] = number(c.certificate_residual);
  }
  return j;
}

inline json modulus_json(const ModulusResult& r, const MeasureFamily& fam, Checks& checks) {
  json j = json::object();
  j["value"] = number(r.value);
  j["p"] = number(r.p);
  j["class"] = r.function_class.name();
  j["members"] = fam.size();
  j["certificate"] = certificate_json(r.certificate);
  if (r.minimizer) {
    const auto adm = is_admissible(*r.minimizer, fam);
    j["minimizer"] = {{"digest", digest(r.minimizer->values())},
                      {"sup", number(r.minimizer->sup())},
                      {"min_margin", number(fam.empty() ? 0.0 : adm.min_margin)}};
    if (!fam.empty()) checks.add("minimizer-admissible", adm.min_margin >= -1e-8, {{"min_margin", number(adm.min_margin)}});
  }
  if (r.dual_plan) j["dual_plan"] = {{"digest", digest(r.dual_plan->weights)}, {"total", number(r.dual_plan->total())}};
  if (r.value.is_infinite()) {
    checks.add("infeasibility-certificate", r.certificate.certificate_residual <= solver::kFeasibilityTol,
               {{"residual", number(r.certificate.certificate_residual)}});
  }
  return j;
}

inline json content_json(const ContentResult& r) {
  json j = json::object();
  j["value"] = number(r.value);
  j["p"] = number(r.p);
  j["certificate"] = certificate_json(r.certificate);
  if (r.plan) j["plan"] = {{"digest", digest(r.plan->weights)}, {"total", number(r.plan->total())}};
  if (r.dual_density) j["dual_density"] = {{"digest", digest(r.dual_density->values())}, {"sup", number(r.dual_density->sup())}};
  if (r.p != 1.0 && r.value.is_finite()) {
    j["multiplier"] = number(r.multiplier);
    j["bisection_steps"] = r.bisection_steps;
    j["kkt_residual"] = number(r.kkt_residual);
    j["norm_residual"] = number(r.norm_residual);
  }
  return j;
}

inline json values_json(const std::vector<ExtendedValue>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(number(x));
  return a;
}

inline double default_gap_tol(double p) { return p == 1.0 ? 1e-6 : 1e-3; }

/// Runs the instance task and returns the "results" object.
inline json run_task(const Instance& in, double p, const FunctionClass& cls, std::optional<double> tol, Checks& checks) {
  const auto built = build_space(in.space.raw);
  json res = json::object();
  res["space"] = {{"kind", built.space->kind()}, {"points", built.space->size()},
                  {"total_mass", number(built.space->total_mass())}};
  if (in.task == "modulus" || in.task == "content" || in.task == "duality") {
    const auto fam = build_family(in.family.raw, built, {}, in.options.window);
    if (in.task == "modulus") {
      res["modulus"] = modulus_json(m_p(*built.space, fam, p, cls), fam, checks);
    } else if (in.task == "content") {
      res["content"] = content_json(ct_p(*built.space, fam, p));
    } else {
      const auto d = duality_gap(*built.space, fam, p);
      const double t = tol.value_or(default_gap_tol(p));
      res["duality"] = {{"p", number(p)},
                        {"modulus", number(d.modulus)},
                        {"content", number(d.content)},
                        {"gap", number(d.gap)},
                        {"relative_gap", number(d.relative_gap)},
                        {"matched_infinite", d.matched_infinite},
                        {"plan_cross_residual", number(d.plan_cross_residual)},
                        {"density_cross_residual", number(d.density_cross_residual)}};
      checks.add("duality-gap", d.relative_gap <= t, {{"tol", number(t)}});
    }
    return res;
  }
  const auto seq = build_sequence(in, built);
  const std::size_t K = seq.horizon();
  res["truncation"] = {{"over", in.sequence->over}, {"from", in.sequence->from}, {"to", in.sequence->to}};
  if (in.task == "am-upper") {
    const auto r = am_upper(seq, K, cls);
    res["am_upper"] = {{"values", values_json(r.values)}, {"estimate", number(r.estimate)}, {"note", r.note}};
    checks.add("nondecreasing", r.nondecreasing);
  } else if (in.task == "am-bracket") {
    const auto b = am_bracket(seq, K);
    res["am_bracket"] = {{"lower", number(b.lower)}, {"upper", number(b.upper)}};
    checks.add("lower-le-upper", b.lower.as_double() <= b.upper.as_double() + 1e-8);
  } else {
    const auto r = ct_increasing_limit(seq, K, p);
    res["ct_limit"] = {{"values", values_json(r.values)}, {"union", number(r.union_value)}, {"limit_gap", number(r.limit_gap)}};
    checks.add("nondecreasing", r.nondecreasing);
    checks.add("limit-equals-union", r.limit_gap <= tol.value_or(1e-8));
  }
  return res;
}

// ---------------------------------------------------------------------------
// Counterexample suites

using Params = std::map<std::string, std::string>;

inline double param_real(const Params& ps, const std::string& key, double fallback) {
  auto it = ps.find(key);
  if (it == ps.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used == it->second.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::Schema, "parameter '" + key + "' is not a number");
}

inline std::size_t param_count(const Params& ps, const std::string& key, std::size_t fallback) {
  const double v = param_real(ps, key, static_cast<double>(fallback));
  if (!(v >= 0.0) || v != std::floor(v)) throw Error(ErrorKind::Schema, "parameter '" + key + "' is not a count");
  return static_cast<std::size_t>(v);
}

inline json suite_interval(const Params& ps, Checks& checks) {
  const std::size_t grid = param_count(ps, "grid", 8192), kmin = param_count(ps, "kmin", 2),
                    kmax = param_count(ps, "kmax", 10);
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, grid));
  json rows = json::array();
  std::vector<MeasureFamily> fams;
  for (std::size_t k = kmin; k <= kmax; ++k) {
    auto fam = interval_family(k, s);
    const auto r = m_p(*s, fam, 1.0);
    const double scale = std::ldexp(1.0, static_cast<int>(k));
    const double v = r.value.as_double();
    const double flat = r.value.is_finite() ? min_sup_minimizer(*s, fam, v).sup() : HUGE_VAL;
    rows.push_back({{"k", k}, {"members", fam.size()}, {"m1", number(r.value)},
                    {"sup_over_2k", number(r.minimizer ? r.minimizer->sup() / scale : HUGE_VAL)},
                    {"min_sup_over_2k", number(flat / scale)}});
    checks.add("m1-k" + std::to_string(k), std::abs(v - 1.0) <= 1e-6);
    checks.add("sup-k" + std::to_string(k), r.minimizer && r.minimizer->sup() >= (1.0 - 1e-4) * scale);
    checks.add("min-sup-k" + std::to_string(k), std::abs(flat / scale - 1.0) <= 1e-4);
    fams.push_back(std::move(fam));
  }
  const FamilySequence seq(std::move(fams), true);
  const auto up = am_upper(seq, seq.horizon());
  checks.add("am-upper-estimate", std::abs(up.estimate.as_double() - 1.0) <= 1e-6);
  return {{"truncation", {{"grid", grid}, {"kmin", kmin}, {"kmax", kmax}}},
          {"rows", rows},
          {"am_upper", {{"values", values_json(up.values)}, {"estimate", number(up.estimate)}, {"note", up.note}}}};
}

inline json suite_nonouter(const Params& ps, Checks& checks) {
  const std::size_t grid = param_count(ps, "grid", 4096), jmax = param_count(ps, "extras", 5);
  const double delta1 = param_real(ps, "delta1", 0.5);
  auto s = std::make_shared<const MeasureSpace>(grid_1d(0.0, 1.0, grid));
  json rows = json::array();
  for (std::size_t j = 0; j <= jmax; ++j) {
    const auto r = nonouter_experiment(s, delta1, j);
    rows.push_back({{"extras", j}, {"value", number(r.value)}, {"expected", number(r.expected)}});
    checks.add("extras-" + std::to_string(j), r.pass);
  }
  return {{"truncation", {{"grid", grid}, {"delta1", number(delta1)}, {"extras", jmax}}}, {"rows", rows}};
}

inline json suite_radial(const Params& ps, Checks& checks) {
  const std::size_t grid = param_count(ps, "grid", 32), kmax = param_count(ps, "kmax", 4);
  RadialFamilyOptions opt;
  opt.directions = param_count(ps, "directions", 16);
  opt.radii = param_count(ps, "radii", 8);
  const double L = param_real(ps, "L", 4.0);
  auto s = std::make_shared<const MeasureSpace>(grid_2d({-1.0, 1.0, -1.0, 1.0}, grid, grid));
  json rows = json::array();
  double prev_all = -HUGE_VAL, prev_lip = -HUGE_VAL;
  bool mono_all = true, mono_lip = true;
  for (std::size_t k = 1; k <= kmax; ++k) {
    const auto fam = radial_family(k, s, opt);
    const double all = m_p(*s, fam, 1.0).value.as_double();
    const double lip = m_p(*s, fam, 1.0, FunctionClass::lipschitz_with(L)).value.as_double();
    rows.push_back({{"k", k}, {"members", fam.size()}, {"m1", number(all)}, {"m1_lip", number(lip)}});
    mono_all = mono_all && all >= prev_all - 1e-8;
    mono_lip = mono_lip && lip >= prev_lip - 1e-8;
    prev_all = all;
    prev_lip = lip;
  }
  checks.add("m1-nondecreasing-in-k", mono_all);
  checks.add("m1-lip-nondecreasing-in-k", mono_lip);
  // Heuristic: the mollifier at scale j stays nearly admissible for the
  // members of index j while its L1 norm shrinks.
  json moll = json::array();
  for (std::size_t j = 1; j <= kmax; ++j) {
    const auto fam = radial_family(j, s, opt);
    const auto rho = radial_mollifier(*s, j);
    double lo = HUGE_VAL, l1 = 0.0;
    for (std::size_t i = 0; i < fam.size(); ++i) lo = std::min(lo, integrate(rho, fam[i]));
    for (std::size_t x = 0; x < s->size(); ++x) l1 += rho[x] * s->mass(x);
    moll.push_back({{"j", j}, {"min_integral", number(lo)}, {"l1_norm", number(l1)}});
  }
  return {{"truncation", {{"grid", grid}, {"kmax", kmax}, {"directions", opt.directions}, {"radii", opt.radii}, {"L", number(L)}}},
          {"rows", rows},
          {"mollifier", {{"label", "heuristic"}, {"rows", moll}}}};
}

/// Random candidate sequence h_1..h_K with L1 norms drawn from [lo, hi).
inline std::vector<DensityFunction> random_candidates(const MeasureSpace& s, InstanceRng& rng, std::size_t K,
                                                      double lo, double hi) {
  std::vector<DensityFunction> hs;
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> v(s.size());
    double norm = 0.0;
    for (std::size_t x = 0; x < v.size(); ++x) {
      v[x] = rng.coin(0.5) ? rng.uniform() : 0.0;
      norm += v[x] * s.mass(x);
    }
    if (norm == 0.0) {
      v[0] = 1.0;
      norm = s.mass(0);
    }
    const double target = rng.uniform(lo, hi);
    for (double& e : v) e *= target / norm;
    hs.emplace_back(std::move(v));
  }
  return hs;
}

inline json witness_json(const WitnessReport& w) {
  json ints = json::array();
  for (double v : w.integrals) ints.push_back(number(v));
  return {{"verdict", to_string(w.verdict)}, {"witness", w.witness}, {"thresholds", w.thresholds},
          {"indices", w.indices}, {"budget_relaxed", w.budget_relaxed}, {"bound", number(w.bound)},
          {"integrals", ints}, {"witness_in_e1", w.witness_in_e1}};
}

inline json suite_construction(const Params& ps, Checks& checks) {
  const std::size_t M = param_count(ps, "M", 8), I = param_count(ps, "I", 8);
  const std::size_t K = param_count(ps, "horizon", I > 1 ? I - 1 : 1), trials = param_count(ps, "random", 20);
  const double eps = param_real(ps, "eps", 0.05);
  const auto seed = static_cast<std::uint64_t>(param_count(ps, "seed", 7));
  const auto sp = spiky_space(M, I, param_count(ps, "cells_per_segment", 0));
  const auto seq = construction_families(sp);
  const auto up = am_upper(seq, M);
  bool le_one = true;
  for (const auto& v : up.values) le_one = le_one && v.as_double() <= 1.0 + 1e-8;
  checks.add("am-e_m-le-1", le_one);
  std::vector<DensityFunction> own;
  for (std::size_t k = 1; k <= K; ++k) own.push_back(sp.system.g(1, k));
  const auto w0 = construction_witness(sp, own, eps);
  checks.add("g-sequence-broken", w0.verdict == WitnessVerdict::Broken);
  InstanceRng rng(seed);
  json rnd = json::array();
  std::size_t broken = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto hs = random_candidates(sp.space(), rng, K, 1.0, 2.0 * (1.0 - eps));
    const auto w = construction_witness(sp, hs, eps);
    broken += w.verdict == WitnessVerdict::Broken;
    rnd.push_back(witness_json(w));
  }
  checks.add("random-sequences-broken", broken == trials, {{"broken", broken}, {"trials", trials}});
  return {{"truncation", {{"M", M}, {"I", I}, {"horizon", K}, {"epsilon", number(eps)}, {"seed", seed}}},
          {"am_upper", {{"values", values_json(up.values)}, {"note", up.note}}},
          {"g_sequence", witness_json(w0)},
          {"random_sequences", rnd}};
}

inline json suite_nonincr(const Params& ps, Checks& checks) {
  const std::size_t M = param_count(ps, "M", 3), I = param_count(ps, "I", 3);
  const std::size_t N = param_count(ps, "N", 125);
  const double eps = param_real(ps, "eps", 0.05);
  auto [space, U] = atomic_decay_space(N);
  const auto r = nonincr_measures_family(space, U, M, I);
  const auto up = am_upper(r.sequence, M);
  std::vector<DensityFunction> own;
  for (std::size_t k = 1; k + 1 <= I; ++k) own.push_back(r.system.g(1, k));
  if (own.empty()) own.push_back(r.system.g(1, 1));
  const auto w = construction_witness(r.system, own, eps);
  checks.add("monotone", r.sequence.first_violation(M) == 0);
  checks.add("g-sequence-broken", w.verdict == WitnessVerdict::Broken);
  return {{"truncation", {{"M", M}, {"I", I}, {"N", N}}},
          {"am_upper", {{"values", values_json(up.values)}, {"note", up.note}}},
          {"g_sequence", witness_json(w)}};
}

inline json suite_doubling(const Params& ps, Checks& checks) {
  const std::size_t M = param_count(ps, "M", 6), I = param_count(ps, "I", 6);
  const auto sp = spiky_space(M, I, param_count(ps, "cells_per_segment", 0));
  checks.add("finite", std::isfinite(sp.doubling.value));
  json radii = json::array();
  for (double r : sp.doubling_radii) radii.push_back(number(r));
  return {{"truncation", {{"M", M}, {"I", I}, {"cells_per_shell", sp.cells_per_shell}}},
          {"radii", radii},
          {"value", number(sp.doubling.value)},
          {"argmax_point", sp.doubling.argmax_point},
          {"argmax_radius", number(sp.doubling.argmax_radius)},
          {"skipped", sp.doubling.skipped.size()}};
}

inline json run_suite(const std::string& name, const Params& ps, Checks& checks) {
  if (name == "interval") return suite_interval(ps, checks);
  if (name == "nonouter") return suite_nonouter(ps, checks);
  if (name == "radial") return suite_radial(ps, checks);
  if (name == "construction") return suite_construction(ps, checks);
  if (name == "nonincr") return suite_nonincr(ps, checks);
  if (name == "doubling") return suite_doubling(ps, checks);
  throw Error(ErrorKind::Schema, "unknown counterexample suite '" + name + "'");
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepRow {
  double value = 0.0;
  ExtendedValue modulus;
  ExtendedValue content;
  double gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

inline SweepRow sweep_row(const Instance& in, const std::string& param, double v, double p, const FunctionClass& cls) {
  json space = in.space.raw;
  std::optional<std::size_t> index;
  FunctionClass c = cls;
  auto as_count = [&](double x) {
    if (!(x >= 1.0) || x != std::floor(x)) throw Error(ErrorKind::Schema, param + " values must be positive integers");
    return static_cast<std::size_t>(x);
  };
  const std::string kind = space.at("kind").get<std::string>();
  if (param == "k") {
    if (family_index_key(in.family.raw).empty()) throw Error(ErrorKind::Schema, "family has no k / m parameter");
    index = as_count(v);
  } else if (param == "grid") {
    const std::size_t n = as_count(v);
    if (kind == "grid1d") {
      space["n"] = n;
    } else if (kind == "grid2d") {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
      space["nx"] = side;
      space["ny"] = side;
    } else if (kind == "spiky") {
      space["cells_per_segment"] = n;
    } else {
      throw Error(ErrorKind::Schema, "grid sweep needs a grid or spiky space");
    }
  } else if (param == "L") {
    c = FunctionClass::lipschitz_with(v);
  } else if (param == "p") {
    p = v;
  } else if (param == "depth") {
    if (kind != "spiky") throw Error(ErrorKind::Schema, "depth sweep needs a spiky space");
    space["I"] = as_count(v);
  } else {
    throw Error(ErrorKind::Schema, "sweep parameter must be one of k, grid, L, p, depth");
  }
  const auto built = build_space(space);
  const auto fam = build_family(in.family.raw, built, index, in.options.window);
  const auto mod = m_p(*built.space, fam, p, c);
  const auto ct = ct_p(*built.space, fam, p);
  SweepRow row;
  row.value = v;
  row.modulus = mod.value;
  row.content = ct.value;
  if (mod.value.is_finite() && ct.value.is_finite()) {
    row.gap = std::abs((p == 1.0 ? mod.value.value() : std::pow(mod.value.value(), 1.0 / p)) - ct.value.value());
  } else {
    row.gap = mod.value.is_infinite() == ct.value.is_infinite() ? 0.0 : HUGE_VAL;
  }
  row.primal_residual = mod.certificate.primal_residual;
  row.dual_residual = mod.certificate.dual_residual;
  return row;
}

inline std::string cell(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

inline std::string cell(const ExtendedValue& v) { return v.is_infinite() ? "inf" : format_double(v.value()); }

/// Evaluates `fn(i)` for i < n on up to `jobs` threads; results keep input order.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t n, std::size_t jobs, Fn&& fn) {
  std::vector<std::optional<T>> out(n);
  std::vector<std::exception_ptr> errs(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  std::vector<T> res;
  res.reserve(n);
  for (auto& o : out) res.push_back(std::move(*o));
  return res;
}

inline std::vector<double> parse_values(const std::string& text) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto colon = tok.find(':');
    try {
      if (colon == std::string::npos) {
        vals.push_back(std::stod(tok));
      } else {
        // a:b expands to the integers a..b.
        const long a = std::stol(tok.substr(0, colon)), b = std::stol(tok.substr(colon + 1));
        for (long v = a; v <= b; ++v) vals.push_back(static_cast<double>(v));
      }
    } catch (const std::exception&) {
      throw Error(ErrorKind::Schema, "bad sweep value '" + tok + "'");
    }
  }
  if (vals.empty()) throw Error(ErrorKind::Schema, "sweep needs at least one value");
  return vals;
}

// ---------------------------------------------------------------------------
// Entry point

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline std::size_t default_jobs() {
  if (const char* env = std::getenv("MODLAB_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << text;
  } else {
    write_atomic(out_path, text);
  }
}

/// Full command line front end. Returns the process exit status.
inline int run(int argc, const char* const* argv, Streams io = {std::cout, std::cerr}) {
  CLI::App app{"modulus and plan content of finite measure families", "modlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string instance_path, out_path, class_name, param_name, values_text, plot_dir, suite;
  std::optional<double> p_opt, tol_opt;
  std::uint64_t seed = 1;
  std::size_t jobs = default_jobs(), random_count = 0;
  std::vector<std::string> params;
  std::string task_override;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--instance", instance_path, "instance file (modlab.instance/1)");
    sub->add_option("--out", out_path, "output path (default stdout)");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--p", p_opt, "exponent p >= 1");
    sub->add_option("--class", class_name, "function class: all, lip:L or bv");
    sub->add_option("--tol", tol_opt, "acceptance tolerance");
    sub->add_option("--jobs", jobs, "worker threads (default $MODLAB_JOBS or 1)");
  };
  auto* compute = app.add_subcommand("compute", "run the task of an instance");
  common(compute);
  compute->add_option("--task", task_override, "override the instance task");
  auto* duality = app.add_subcommand("duality", "modulus/content duality check");
  common(duality);
  duality->add_option("--random", random_count, "number of seeded random instances");
  auto* sweep = app.add_subcommand("sweep", "parameter sweep table");
  common(sweep);
  sweep->add_option("--param", param_name, "k, grid, L, p or depth")->required();
  sweep->add_option("--values", values_text, "comma list; a:b expands to integers")->required();
  sweep->add_option("--plot-dir", plot_dir, "directory for two-column plot data");
  auto* counter = app.add_subcommand("counterexample", "run a counterexample suite");
  common(counter);
  counter->add_option("suite", suite, "interval, nonouter, radial, construction, nonincr or doubling")->required();
  counter->add_option("--param", params, "suite parameter key=value (repeatable)");
  auto* validate = app.add_subcommand("validate", "check an instance file against the schema");
  std::string validate_path;
  validate->add_option("path", validate_path, "instance file");
  validate->add_option("--instance", instance_path, "instance file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, io.out, io.err);
  } catch (const CLI::ParseError& e) {
    io.err << "modlab: usage: " << e.what() << "\n";
    return kExitSchema;
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&](json report, const Checks& checks) {
    report["checks"] = checks.to_json();
    report["status"] = checks.ok() ? "pass" : "fail";
    report["timing"] = {{"seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
    emit(dump(report), out_path, io.out);
    if (!checks.ok()) {
      io.err << "modlab: invariant check failed\n";
      return static_cast<int>(kExitInvariant);
    }
    return static_cast<int>(kExitOk);
  };

  try {
    if (validate->parsed()) {
      const std::string path = !validate_path.empty() ? validate_path : instance_path;
      if (path.empty()) throw Error(ErrorKind::Schema, "validate needs an instance path");
      const auto in = load_instance(path);
      io.out << "valid: " << path << " (task " << in.task << ")\n";
      return kExitOk;
    }
    if (compute->parsed()) {
      if (instance_path.empty()) throw Error(ErrorKind::Schema, "compute needs --instance");
      auto in = load_instance(instance_path);
      if (!task_override.empty()) {
        if (!known_tasks().count(task_override)) throw Error(ErrorKind::Schema, "unknown task '" + task_override + "'");
        in.task = task_override;
      }
      const double p = p_opt.value_or(in.options.p);
      const auto cls = parse_class(class_name.empty() ? in.options.function_class : class_name);
      const auto tol = tol_opt ? tol_opt : in.options.tol;
      json report = new_report("compute");
      report["task"] = {{"task", in.task}, {"p", number(p)}, {"class", cls.name()}, {"instance", in.raw}};
      Checks checks;
      report["results"] = run_task(in, p, cls, tol, checks);
      return finish(std::move(report), checks);
    }
    if (duality->parsed()) {
      const double p = p_opt.value_or(1.0);
      const double tol = tol_opt.value_or(default_gap_tol(p));
      json report = new_report("duality");
      Checks checks;
      std::vector<std::pair<std::string, DualityReport>> runs;
      if (random_count > 0) {
        report["task"] = {{"random", random_count}, {"seed", seed}, {"p", number(p)}};
        InstanceRng rng(seed);
        std::vector<RandomInstance> insts;
        for (std::size_t i = 0; i < random_count; ++i) insts.push_back(random_instance(rng));
        auto reps = parallel_map<DualityReport>(insts.size(), jobs, [&](std::size_t i) {
          return duality_gap(*insts[i].space, insts[i].family, p);
        });
        for (std::size_t i = 0; i < reps.size(); ++i) runs.emplace_back("random" + std::to_string(i), reps[i]);
      } else {
        if (instance_path.empty()) throw Error(ErrorKind::Schema, "duality needs --instance or --random N");
        const auto in = load_instance(instance_path);
        report["task"] = {{"instance", in.raw}, {"p", number(p)}};
        const auto built = build_space(in.space.raw);
        const auto fam = build_family(in.family.raw, built, {}, in.options.window);
        runs.emplace_back("instance", duality_gap(*built.space, fam, p));
      }
      json rows = json::array();
      double worst = 0.0;
      for (const auto& [name, d] : runs) {
        worst = std::max(worst, d.relative_gap);
        rows.push_back({{"name", name}, {"modulus", number(d.modulus)}, {"content", number(d.content)},
                        {"gap", number(d.gap)}, {"relative_gap", number(d.relative_gap)}});
      }
      report["results"] = {{"runs", rows}, {"max_relative_gap", number(worst)}, {"tol", number(tol)}};
      checks.add("max-gap", worst <= tol);
      io.err << "max relative gap " << format_double(worst) << "\n";
      return finish(std::move(report), checks);
    }
    if (sweep->parsed()) {
      if (instance_path.empty()) throw Error(ErrorKind::Schema, "sweep needs --instance");
      const auto in = load_instance(instance_path);
      const double p = p_opt.value_or(in.options.p);
      const auto cls = parse_class(class_name.empty() ? in.options.function_class : class_name);
      const auto vals = parse_values(values_text);
      const auto rows = parallel_map<SweepRow>(vals.size(), jobs, [&](std::size_t i) {
        return sweep_row(in, param_name, vals[i], p, cls);
      });
      std::string table = "# param=" + param_name + " p=" + format_double(p) + " class=" + cls.name() + "\n";
      table += "value\tmodulus\tcontent\tgap\tprimal_residual\tdual_residual\n";
      for (const auto& r : rows) {
        table += cell(r.value) + "\t" + cell(r.modulus) + "\t" + cell(r.content) + "\t" + cell(r.gap) + "\t" +
                 cell(r.primal_residual) + "\t" + cell(r.dual_residual) + "\n";
      }
      emit(table, out_path, io.out);
      if (!plot_dir.empty()) {
        std::filesystem::create_directories(plot_dir);
        const std::map<std::string, std::function<std::string(const SweepRow&)>> curves{
            {"modulus", [](const SweepRow& r) { return cell(r.modulus); }},
            {"content", [](const SweepRow& r) { return cell(r.content); }},
            {"gap", [](const SweepRow& r) { return cell(r.gap); }}};
        for (const auto& [name, get] : curves) {
          std::string dat = "# " + param_name + " " + name + "\n";
          for (const auto& r : rows) dat += cell(r.value) + " " + get(r) + "\n";
          write_atomic(std::filesystem::path(plot_dir) / (name + ".dat"), dat);
        }
      }
      return kExitOk;
    }
    if (counter->parsed()) {
      Params ps;
      for (const auto& kv : params) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Schema, "--param expects key=value, got '" + kv + "'");
        ps[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      if (!ps.count("seed")) ps["seed"] = std::to_string(seed);
      json report = new_report("counterexample");
      json echo = json::object();
      for (const auto& [k, v] : ps) echo[k] = v;
      report["task"] = {{"suite", suite}, {"params", echo}};
      Checks checks;
      report["results"] = run_suite(suite, ps, checks);
      return finish(std::move(report), checks);
    }
  } catch (const Error& e) {
    io.err << "modlab: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    io.err << "modlab: schema: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::filesystem::filesystem_error& e) {
    io.err << "modlab: io: " << e.what() << "\n";
    return kExitSchema;
  } catch (const std::exception& e) {
    io.err << "modlab: numeric-failure: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitSchema;
}

}  // namespace modlab::cli
