#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "modlab/cli/json_out.hpp"
#include "modlab/counterexamples.hpp"
#include "modlab/measures.hpp"
#include "modlab/modulus.hpp"
#include "modlab/space.hpp"

namespace modlab::cli {

inline constexpr const char* kInstanceSchema = "modlab.instance/1";

/// Reads one JSON object, recording which keys were consumed; finish()
/// rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail("missing key '" + key + "'");
    seen_.insert(key);
    return j_.at(key);
  }

  std::string str(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }
  std::string str(const std::string& key, const std::string& fallback) { return has(key) ? str(key) : fallback; }

  double real(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    return v.get<double>();
  }
  double real(const std::string& key, double fallback) { return has(key) ? real(key) : fallback; }

  std::size_t count(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail("'" + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) { return has(key) ? count(key) : fallback; }

  std::vector<double> reals(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("'" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> indices(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of indices");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0) fail("'" + key + "' must be an array of indices");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  std::string child(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "'");
  }

  [[noreturn]] void fail(const std::string& what) const { throw Error(ErrorKind::Schema, path_ + ": " + what); }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

struct SpaceSpec {
  json raw;
};

struct FamilySpec {
  json raw;
};

/// Materializes a family parameter range E_from .. E_to.
struct SequenceSpec {
  std::string over;  // "k" (interval, radial) or "m" (construction)
  std::size_t from = 1;
  std::size_t to = 1;
};

struct Options {
  double p = 1.0;
  std::string function_class = "all";
  std::optional<double> tol;
  double epsilon = 0.05;
  std::size_t window = 0;  // 0: default window
};

struct Instance {
  json raw;
  SpaceSpec space;
  FamilySpec family;
  std::optional<SequenceSpec> sequence;
  std::string task = "modulus";
  Options options;
};

inline const std::set<std::string>& known_tasks() {
  static const std::set<std::string> t{"modulus", "content", "duality", "am-upper", "am-bracket", "ct-limit"};
  return t;
}

inline FunctionClass parse_class(const std::string& s) {
  if (s == "all") return FunctionClass::all();
  if (s == "bv") return FunctionClass::boundary_vanishing();
  if (s.rfind("lip:", 0) == 0) {
    std::size_t used = 0;
    double L = 0.0;
    try {
      L = std::stod(s.substr(4), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() - 4) throw Error(ErrorKind::Schema, "bad class '" + s + "'");
    return FunctionClass::lipschitz_with(L);
  }
  throw Error(ErrorKind::Schema, "class must be all, lip:<L> or bv, got '" + s + "'");
}

namespace detail {

inline void check_space(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto kind = r.str("kind");
  if (kind == "grid1d") {
    r.real("a");
    r.real("b");
    r.count("n");
  } else if (kind == "grid2d") {
    if (r.reals("rect").size() != 4) r.fail("'rect' needs four numbers [a, b, c, d]");
    r.count("nx");
    r.count("ny");
  } else if (kind == "spiky") {
    r.count("M");
    r.count("I");
    r.count("cells_per_segment", 0);
  } else if (kind == "explicit") {
    r.reals("mass");
    if (r.has("coords")) {
      const auto& c = r.raw("coords");
      if (!c.is_array()) r.fail("'coords' must be an array of points");
      for (const auto& pt : c) {
        if (!pt.is_array()) r.fail("'coords' must be an array of points");
        for (const auto& v : pt)
          if (!v.is_number()) r.fail("coordinates must be numbers");
      }
    }
    if (r.has("boundary")) r.indices("boundary");
  } else {
    r.fail("unknown space kind '" + kind + "'");
  }
  r.finish();
}

inline void check_family(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto kind = r.str("kind");
  if (kind == "interval") {
    r.count("k");
    r.count("uniform_count", 16);
  } else if (kind == "radial") {
    r.count("k");
    r.count("directions", 64);
    r.count("radii", 32);
  } else if (kind == "dirac-set") {
    r.indices("points");
  } else if (kind == "paths") {
    const auto& ps = r.raw("paths");
    if (!ps.is_array()) r.fail("'paths' must be an array");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      ObjectReader pr(ps[i], r.child("paths[" + std::to_string(i) + "]"));
      pr.str("label", "");
      const auto& poly = pr.raw("polyline");
      if (!poly.is_array() || poly.size() < 2) pr.fail("'polyline' needs at least two vertices");
      for (const auto& v : poly) {
        if (!v.is_array()) pr.fail("vertices must be arrays of numbers");
        for (const auto& c : v)
          if (!c.is_number()) pr.fail("vertices must be arrays of numbers");
      }
      pr.count("repeat", 1);
      pr.finish();
    }
  } else if (kind == "restrictions") {
    const auto& ss = r.raw("sets");
    if (!ss.is_array()) r.fail("'sets' must be an array");
    for (std::size_t i = 0; i < ss.size(); ++i) {
      ObjectReader sr(ss[i], r.child("sets[" + std::to_string(i) + "]"));
      sr.str("label", "");
      sr.indices("points");
      sr.finish();
    }
  } else if (kind == "explicit") {
    const auto& ms = r.raw("members");
    if (!ms.is_array()) r.fail("'members' must be an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      ObjectReader mr(ms[i], r.child("members[" + std::to_string(i) + "]"));
      mr.str("label", "");
      const auto& e = mr.raw("entries");
      if (!e.is_array()) mr.fail("'entries' must be an array of [index, mass] pairs");
      for (const auto& pr : e)
        if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number_integer() || !pr[1].is_number())
          mr.fail("'entries' must be an array of [index, mass] pairs");
      mr.finish();
    }
  } else if (kind == "construction") {
    r.count("m");
  } else if (kind == "union") {
    const auto& fs = r.raw("families");
    if (!fs.is_array() || fs.empty()) r.fail("'families' must be a nonempty array");
    for (std::size_t i = 0; i < fs.size(); ++i) check_family(fs[i], r.child("families[" + std::to_string(i) + "]"));
  } else {
    r.fail("unknown family kind '" + kind + "'");
  }
  r.finish();
}

}  // namespace detail

/// Validates the document against modlab.instance/1 and extracts its parts.
inline Instance parse_instance(const json& doc) {
  ObjectReader r(doc, "$");
  Instance in;
  in.raw = doc;
  if (r.str("schema") != kInstanceSchema) r.fail(std::string("schema must be '") + kInstanceSchema + "'");
  in.space.raw = r.raw("space");
  detail::check_space(in.space.raw, "$.space");
  in.family.raw = r.raw("family");
  detail::check_family(in.family.raw, "$.family");
  in.task = r.str("task", "modulus");
  if (!known_tasks().count(in.task)) r.fail("unknown task '" + in.task + "'");
  if (r.has("sequence")) {
    ObjectReader sr(r.raw("sequence"), "$.sequence");
    SequenceSpec s;
    s.over = sr.str("over");
    s.from = sr.count("from", 1);
    s.to = sr.count("to");
    sr.finish();
    if (s.over != "k" && s.over != "m") sr.fail("'over' must be 'k' or 'm'");
    if (s.from < 1 || s.to < s.from) sr.fail("need 1 <= from <= to");
    in.sequence = s;
  }
  if (r.has("options")) {
    ObjectReader orr(r.raw("options"), "$.options");
    in.options.p = orr.real("p", 1.0);
    in.options.function_class = orr.str("class", "all");
    if (orr.has("tol")) in.options.tol = orr.real("tol");
    in.options.epsilon = orr.real("epsilon", 0.05);
    in.options.window = orr.count("window", 0);
    orr.finish();
    parse_class(in.options.function_class);
  }
  r.finish();
  const bool needs_seq = in.task == "am-upper" || in.task == "am-bracket" || in.task == "ct-limit";
  if (needs_seq && !in.sequence) r.fail("task '" + in.task + "' needs a 'sequence'");
  return in;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Schema, "cannot read instance file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Schema, path + ": " + e.what());
  }
}

inline Instance load_instance(const std::string& path) { return parse_instance(read_json_file(path)); }

/// Space built from its JSON description, with the spiky G-system when applicable.
struct BuiltSpace {
  std::shared_ptr<const MeasureSpace> space;
  std::optional<SpikySpace> spiky;
};

inline BuiltSpace build_space(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  BuiltSpace b;
  if (kind == "grid1d") {
    b.space = std::make_shared<const MeasureSpace>(
        grid_1d(j.at("a").get<double>(), j.at("b").get<double>(), j.at("n").get<std::size_t>()));
  } else if (kind == "grid2d") {
    const auto rect = j.at("rect").get<std::vector<double>>();
    b.space = std::make_shared<const MeasureSpace>(grid_2d({rect[0], rect[1], rect[2], rect[3]},
                                                           j.at("nx").get<std::size_t>(), j.at("ny").get<std::size_t>()));
  } else if (kind == "spiky") {
    b.spiky = spiky_space(j.at("M").get<std::size_t>(), j.at("I").get<std::size_t>(),
                          j.value("cells_per_segment", std::size_t{0}));
    b.space = b.spiky->space_ptr();
  } else {
    std::vector<std::vector<double>> coords;
    if (j.contains("coords")) coords = j.at("coords").get<std::vector<std::vector<double>>>();
    std::vector<std::size_t> boundary;
    if (j.contains("boundary")) boundary = j.at("boundary").get<std::vector<std::size_t>>();
    b.space = std::make_shared<const MeasureSpace>(
        MeasureSpace::create(j.at("mass").get<std::vector<double>>(), std::move(coords), std::move(boundary)));
  }
  return b;
}

/// Family from its JSON description; `index` overrides the k / m parameter when set.
inline MeasureFamily build_family(const json& j, const BuiltSpace& b, std::optional<std::size_t> index = {},
                                  std::size_t window = 0) {
  const std::string kind = j.at("kind").get<std::string>();
  const auto& s = b.space;
  auto label_or = [](const json& o, const std::string& fallback) {
    const std::string l = o.value("label", std::string{});
    return l.empty() ? fallback : l;
  };
  if (kind == "interval") {
    IntervalFamilyOptions opt;
    opt.uniform_count = j.value("uniform_count", std::size_t{16});
    return interval_family(index.value_or(j.at("k").get<std::size_t>()), s, opt);
  }
  if (kind == "radial") {
    RadialFamilyOptions opt;
    opt.directions = j.value("directions", std::size_t{64});
    opt.radii = j.value("radii", std::size_t{32});
    return radial_family(index.value_or(j.at("k").get<std::size_t>()), s, opt);
  }
  MeasureFamily fam(s);
  if (kind == "dirac-set") {
    for (std::size_t x : j.at("points").get<std::vector<std::size_t>>()) fam.add("delta" + std::to_string(x), dirac(*s, x));
  } else if (kind == "paths") {
    std::size_t i = 0;
    for (const auto& p : j.at("paths")) {
      auto poly = p.at("polyline").get<std::vector<std::vector<double>>>();
      const std::size_t rep = p.value("repeat", std::size_t{1});
      std::vector<std::vector<double>> full = poly;
      // Repeats run back and forth over the polyline.
      for (std::size_t r = 1; r < rep; ++r) {
        std::vector<std::vector<double>> leg(poly.rbegin(), poly.rend());
        if (r % 2 == 0) leg.assign(poly.begin(), poly.end());
        full.insert(full.end(), leg.begin() + 1, leg.end());
      }
      fam.add(label_or(p, "path" + std::to_string(i++)), path_measure(*s, full));
    }
  } else if (kind == "restrictions") {
    std::size_t i = 0;
    for (const auto& r : j.at("sets"))
      fam.add(label_or(r, "set" + std::to_string(i++)), restriction(*s, r.at("points").get<std::vector<std::size_t>>()));
  } else if (kind == "explicit") {
    std::size_t i = 0;
    for (const auto& m : j.at("members")) {
      std::vector<Measure::Entry> e;
      for (const auto& pr : m.at("entries")) {
        const auto idx = pr[0].get<long long>();
        if (idx < 0) throw Error(ErrorKind::BadIndex, "negative member index");
        e.emplace_back(static_cast<std::size_t>(idx), pr[1].get<double>());
      }
      fam.add(label_or(m, "mu" + std::to_string(i++)), Measure::from_entries(s->size(), std::move(e)));
    }
  } else if (kind == "construction") {
    if (!b.spiky) throw Error(ErrorKind::Schema, "construction families need a spiky space");
    ConstructionOptions opt;
    opt.window_start = window;
    auto seq = construction_families(*b.spiky, opt);
    return seq.at(index.value_or(j.at("m").get<std::size_t>()));
  } else if (kind == "union") {
    bool first = true;
    for (const auto& f : j.at("families")) {
      auto g = build_family(f, b, index, window);
      fam = first ? std::move(g) : union_families(fam, g);
      first = false;
    }
  }
  return fam;
}

inline std::string family_index_key(const json& family) {
  const std::string kind = family.at("kind").get<std::string>();
  if (kind == "interval" || kind == "radial") return "k";
  if (kind == "construction") return "m";
  return "";
}

inline FamilySequence build_sequence(const Instance& in, const BuiltSpace& b) {
  const auto& s = *in.sequence;
  if (family_index_key(in.family.raw) != s.over) {
    throw Error(ErrorKind::Schema, "sequence over '" + s.over + "' does not match family kind '" +
                                       in.family.raw.at("kind").get<std::string>() + "'");
  }
  std::vector<MeasureFamily> fams;
  for (std::size_t v = s.from; v <= s.to; ++v) fams.push_back(build_family(in.family.raw, b, v, in.options.window));
  return FamilySequence(std::move(fams), true);
}

}  // namespace modlab::cli
