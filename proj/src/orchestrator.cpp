#include "bindlab/orchestrator.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "bindlab/atom_solver.hpp"
#include "bindlab/basis_io.hpp"
#include "bindlab/lemma_lab.hpp"
#include "bindlab/localization.hpp"
#include "bindlab/pt_solver.hpp"
#include "bindlab/threshold_scan.hpp"

#ifndef BINDLAB_VERSION
#define BINDLAB_VERSION "0.0.0"
#endif
#ifndef BINDLAB_GIT_DESCRIBE
#define BINDLAB_GIT_DESCRIBE "unknown"
#endif

namespace bindlab {

namespace {

enum class Type { number, integer, boolean, string, number_array };

struct ParamSpec {
  std::string name;
  Type type;
  Json def;
  std::string help;
  std::vector<std::string> choices{};
  double min = -std::numeric_limits<double>::infinity();
  bool positive = false;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::string seeds_help;
  std::vector<ParamSpec> params;
};

constexpr double kInfD = std::numeric_limits<double>::infinity();

std::vector<ParamSpec> scf_params() {
  return {
      {"scf_tol", Type::number, 1e-9, "SCF energy change tolerance", {}, -kInfD, true},
      {"scf_max_iter", Type::integer, 500, "SCF iteration cap", {}, 1},
      {"mixing", Type::number, 0.7, "SCF density mixing in (0, 1]", {}, -kInfD, true},
  };
}

std::vector<ParamSpec> scan_params(bool polaron) {
  std::vector<ParamSpec> p;
  if (polaron) {
    p = {
        {"alpha", Type::number, 1.0, "coupling constant", {}, -kInfD, true},
        {"u_min", Type::number, 2.0, "first U of the grid", {}, 0.0},
        {"u_max", Type::number, 2.55, "last U of the grid", {}, 0.0},
        {"u_step", Type::number, 0.05, "grid spacing", {}, -kInfD, true},
        {"basis_size", Type::integer, 30, "basis size at the first grid point", {}, 1},
        {"one_body_size", Type::integer, 20, "basis size of the one-polaron solve", {}, 1},
        {"trials", Type::integer, 20, "candidates screened per growth step", {}, 1},
        {"max_stalls", Type::integer, 20, "growth steps without progress before stopping", {}, 1},
    };
    for (auto& s : scf_params()) p.push_back(s);
  } else {
    p = {
        {"u_min", Type::number, 1.0, "first U of the grid", {}, 0.0},
        {"u_max", Type::number, 1.15, "last U of the grid", {}, 0.0},
        {"u_step", Type::number, 0.01, "grid spacing", {}, -kInfD, true},
        {"basis_size", Type::integer, 40, "basis size at the first grid point", {}, 1},
        {"trials", Type::integer, 30, "candidates screened per growth step", {}, 1},
        {"max_stalls", Type::integer, 30, "growth steps without progress before stopping", {}, 1},
    };
  }
  const std::vector<ParamSpec> common = {
      {"u_grid", Type::number_array, Json::array(), "explicit ascending U grid (overrides u_min/u_max/u_step)"},
      {"growth_per_point", Type::integer, 4, "basis elements added at each further grid point", {}, 0},
      {"tol_bind_rel", Type::number, 1e-5, "binding tolerance relative to |breakup|", {}, -kInfD, true},
      {"mc_samples", Type::integer, 20000, "Monte-Carlo samples for the max pair distance", {}, 0},
      {"mass_radius", Type::number, 0.0, "radius for mass_inside; 0 = 2 <r12> at the middle binding point", {}, 0.0},
      {"chained", Type::boolean, true, "warm-start grid points along the chain"},
      {"slope_step", Type::number, 1e-3, "step of the one-sided dE/dU estimate", {}, -kInfD, true},
      {"polish_passes", Type::integer, 2, "envelope polish sweeps", {}, 0},
  };
  for (const auto& s : common) p.push_back(s);
  return p;
}

const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> cmds = [] {
    std::vector<CommandSpec> c;
    {
      CommandSpec s{"pekar1", "one-polaron Pekar energy E1(alpha) with a grown basis",
                    "seeds[0]: basis growth (default 1)", {}};
      s.params = {
          {"alpha", Type::number, 1.0, "coupling constant", {}, -kInfD, true},
          {"basis_size", Type::integer, 20, "basis size", {}, 1},
          {"trials", Type::integer, 20, "candidates screened per growth step", {}, 1},
          {"max_stalls", Type::integer, 20, "growth steps without progress before stopping", {}, 1},
          {"rescale_factors", Type::number_array, Json::array({0.5, 1.0, 4.0}), "scaling-law check factors"},
      };
      for (auto& p : scf_params()) s.params.push_back(p);
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"bipolaron-scan", "two-polaron energy scan in U at fixed alpha",
                    "seeds[0]: basis growth (default 1); seeds[1]: Monte-Carlo (default 2024)",
                    scan_params(true)};
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"npolaron-scan", "N-polaron energy scan in U against the break-up energy",
                    "seeds[0]: basis growth (default 1); seeds[1]: Monte-Carlo (default 2024)",
                    scan_params(true)};
      s.params.insert(s.params.begin() + 1,
                      ParamSpec{"n_particles", Type::integer, 3, "number of polarons (2-4)", {}, 2});
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"atom-scan", "two-electron atom energy scan in U against -1/4",
                    "seeds[0]: basis growth (default 1); seeds[1]: Monte-Carlo (default 2024)",
                    scan_params(false)};
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"locate-critical", "bisection of the binding indicator inside a bracket",
                    "seeds[0]: basis growth (default 1)", {}};
      s.params = {
          {"system", Type::string, "atom", "system to probe", {"atom", "bipolaron", "npolaron"}},
          {"n_particles", Type::integer, 2, "number of polarons for system = npolaron", {}, 2},
          {"alpha", Type::number, 1.0, "coupling constant (polaron systems)", {}, -kInfD, true},
          {"lo", Type::number, 1.05, "binding end of the bracket", {}, 0.0},
          {"hi", Type::number, 1.15, "non-binding end of the bracket", {}, 0.0},
          {"tol", Type::number, 0.01, "final bracket width", {}, -kInfD, true},
          {"basis_size", Type::integer, 60, "basis size grown at every probe", {}, 1},
          {"one_body_size", Type::integer, 20, "basis size of the one-polaron solve", {}, 1},
          {"trials", Type::integer, 30, "candidates screened per growth step", {}, 1},
          {"max_stalls", Type::integer, 30, "growth steps without progress before stopping", {}, 1},
          {"tol_bind_rel", Type::number, 1e-5, "binding tolerance relative to |breakup|", {}, -kInfD, true},
      };
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"verify-partitions", "radial and helium partitions, ball cutoff, IMS identity",
                    "seeds[0]: sampling (default 1)", {}};
      s.params = {
          {"ell", Type::number, 1.0, "partition length", {}, -kInfD, true},
          {"b", Type::number, 2.0, "partition ratio b > 1", {}, 1.0, true},
          {"sum_points", Type::integer, 10000, "sum-to-one test points", {}, 2},
          {"bound_points", Type::integer, 100000, "localization-bound test points", {}, 2},
          {"helium_eps", Type::number, 0.1, "helium partition eps in (0, 1/2)", {}, -kInfD, true},
          {"helium_samples", Type::integer, 100000, "helium partition samples per ell", {}, 1},
          {"helium_ells", Type::number_array, Json::array({1.0, 10.0, 100.0}), "ell values for the C_eps scaling check"},
          {"c_eps_rel_tol", Type::number, 0.01, "allowed relative spread of the realized C_eps", {}, -kInfD, true},
          {"ims_particles", Type::number_array, Json::array({2, 3, 4}), "particle numbers for the IMS identity"},
          {"ims_samples", Type::integer, 2000, "configurations per particle number", {}, 1},
      };
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"verify-lemmas", "falsification search for both calculus lemmas",
                    "seeds[0]: instance generator (default 1)", {}};
      s.params = {
          {"trials", Type::integer, 10000, "hypothesis-passing instances per lemma", {}, 1},
          {"lemma", Type::string, "both", "which lemma", {"both", "simple", "general"}},
          {"nodes", Type::integer, 2000, "density nodes per random instance", {}, 16},
          {"refinement_nodes", Type::integer, 20001, "nodes of the coarse grid in the refinement check", {}, 2},
      };
      c.push_back(std::move(s));
    }
    {
      CommandSpec s{"verify-constants", "kappa_eps, ell_c and the Step-2 inequality sweep",
                    "unused", {}};
      s.params = {
          {"alpha", Type::number, 1.0, "coupling constant", {}, -kInfD, true},
          {"eps", Type::number, 0.1, "eps > 0", {}, -kInfD, true},
          {"delta", Type::number, 0.005, "delta > 0", {}, -kInfD, true},
          {"b", Type::number, 2.0, "partition ratio b > 1", {}, 1.0, true},
          {"n_particles", Type::integer, 2, "number of particles", {}, 2},
          {"j_max", Type::integer, 30, "largest j in the sweep", {}, 1},
          {"d_points", Type::integer, 2001, "d-grid points per j", {}, 2},
      };
      c.push_back(std::move(s));
    }
    return c;
  }();
  return cmds;
}

const CommandSpec& find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown command '" + name + "'");
}

Json check_value(const ParamSpec& p, const Json& v) {
  const auto fail = [&](const std::string& why) {
    throw ConfigError("parameter '" + p.name + "': " + why);
  };
  const auto range = [&](double x) {
    if (!std::isfinite(x)) fail("must be finite");
    if (p.positive ? !(x > std::max(0.0, p.min == -kInfD ? 0.0 : p.min)) : !(x >= p.min)) {
      std::ostringstream m;
      m << "must be " << (p.positive ? "> " : ">= ")
        << (p.positive ? std::max(0.0, p.min == -kInfD ? 0.0 : p.min) : p.min);
      fail(m.str());
    }
  };
  switch (p.type) {
    case Type::number:
      if (!v.is_number()) fail("expected a number");
      range(v.get<double>());
      return v.get<double>();
    case Type::integer:
      if (!v.is_number_integer()) fail("expected an integer");
      range(static_cast<double>(v.get<long long>()));
      return v;
    case Type::boolean:
      if (!v.is_boolean()) fail("expected true or false");
      return v;
    case Type::string:
      if (!v.is_string()) fail("expected a string");
      if (!p.choices.empty() &&
          std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end()) {
        std::string all;
        for (const auto& c : p.choices) all += (all.empty() ? "" : ", ") + c;
        fail("must be one of " + all);
      }
      return v;
    case Type::number_array: {
      if (!v.is_array()) fail("expected an array of numbers");
      Json out = Json::array();
      for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) fail("expected an array of numbers");
        out.push_back(x);
      }
      return out;
    }
  }
  return v;
}

Json schema_type(const ParamSpec& p) {
  Json t;
  switch (p.type) {
    case Type::number:
      t["type"] = "number";
      break;
    case Type::integer:
      t["type"] = "integer";
      break;
    case Type::boolean:
      t["type"] = "boolean";
      break;
    case Type::string:
      t["type"] = "string";
      if (!p.choices.empty()) t["enum"] = p.choices;
      break;
    case Type::number_array:
      t["type"] = "array";
      t["items"] = Json{{"type", "number"}};
      break;
  }
  if (p.type == Type::number || p.type == Type::integer) {
    if (p.positive) {
      t["exclusiveMinimum"] = p.min == -kInfD ? 0.0 : std::max(0.0, p.min);
    } else if (p.min != -kInfD) {
      t["minimum"] = p.min;
    }
  }
  t["default"] = p.def;
  t["description"] = p.help;
  return t;
}

std::string iso_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json num(double x) {
  if (std::isfinite(x)) return x;
  return std::isnan(x) ? Json("nan") : Json(x > 0 ? "inf" : "-inf");
}

long long seed_at(const RunConfig& cfg, std::size_t i, long long def) {
  return i < cfg.seeds.size() ? cfg.seeds[i] : def;
}

ScfOptions scf_from(const Json& p) {
  ScfOptions o;
  o.tol = p.at("scf_tol").get<double>();
  o.max_iter = p.at("scf_max_iter").get<int>();
  o.mixing = p.at("mixing").get<double>();
  if (o.mixing > 1.0) throw ConfigError("parameter 'mixing' must be <= 1");
  return o;
}

std::vector<double> u_grid_from(const Json& p) {
  if (!p.at("u_grid").empty()) return p.at("u_grid").get<std::vector<double>>();
  const double lo = p.at("u_min").get<double>();
  const double hi = p.at("u_max").get<double>();
  const double step = p.at("u_step").get<double>();
  if (hi < lo) throw ConfigError("u_max must be >= u_min");
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::round((lo + step * i) * 1e12) / 1e12;
  return g;
}

Json energy_json(const EnergyReport& r) {
  Json j;
  j["total"] = r.total;
  j["kinetic"] = r.kinetic;
  j["repulsion"] = r.repulsion;
  j["attraction"] = r.attraction;
  j["multiplier"] = r.multiplier;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["history"] = r.history;
  double up = 0.0;
  for (std::size_t k = 1; k < r.history.size(); ++k) up = std::max(up, r.history[k] - r.history[k - 1]);
  j["max_history_increase"] = up;
  return j;
}

const char* kind_name(ScanKind k) {
  switch (k) {
    case ScanKind::bipolaron:
      return "bipolaron";
    case ScanKind::npolaron:
      return "npolaron";
    case ScanKind::atom:
      return "atom";
  }
  return "?";
}

Json scan_json(const ScanResult& s) {
  Json j;
  j["kind"] = kind_name(s.kind);
  j["alpha"] = s.alpha;
  j["n_particles"] = s.n_particles;
  j["tol_bind"] = s.tol_bind;
  j["mass_radius"] = s.mass_radius;
  j["basis_size"] = s.basis.size();
  Json pts = Json::array();
  for (const auto& p : s.points) {
    Json q;
    q["U"] = p.U;
    q["energy"] = p.energy;
    q["direct"] = p.direct;
    q["breakup"] = p.breakup;
    q["binding"] = p.binding;
    q["inv_r12"] = p.inv_r12;
    q["mean_r12"] = p.mean_r12;
    q["mass_inside"] = p.mass_inside;
    q["max_pair_dist"] = p.max_pair_dist;
    q["max_pair_stderr"] = p.max_pair_stderr;
    q["converged"] = p.converged;
    q["left_slope"] = p.left_slope ? Json(*p.left_slope) : Json(nullptr);
    pts.push_back(q);
  }
  j["points"] = pts;
  j["critical_bracket"] = s.critical_bracket
                              ? Json::array({s.critical_bracket->first, s.critical_bracket->second})
                              : Json(nullptr);
  j["left_slope"] = s.left_slope ? Json(*s.left_slope) : Json(nullptr);
  j["warnings"] = s.warnings;
  j["notes"] = s.notes;
  return j;
}

// E <= breakup, monotone and concave in U
Json structure_json(const ScanResult& s) {
  double above = -kInfD, drop = 0.0, curv = -kInfD;
  const auto& p = s.points;
  for (std::size_t i = 0; i < p.size(); ++i) {
    above = std::max(above, p[i].energy - p[i].breakup);
    if (i > 0) drop = std::max(drop, p[i - 1].energy - p[i].energy);
    if (i > 0 && i + 1 < p.size()) {
      const double h1 = p[i].U - p[i - 1].U, h2 = p[i + 1].U - p[i].U;
      // divided second difference scaled to the uniform-grid convention
      const double d = (p[i + 1].energy - p[i].energy) / h2 - (p[i].energy - p[i - 1].energy) / h1;
      curv = std::max(curv, d * 0.5 * (h1 + h2));
    }
  }
  Json j;
  j["max_energy_minus_breakup"] = num(above);
  j["max_decrease"] = drop;
  j["max_second_difference"] = num(curv);
  j["ok"] = above <= 0.0 && drop <= 1e-12 && curv <= 1e-8;
  return j;
}

Json first_order_json(const FirstOrderReport& r) {
  Json j;
  j["complete"] = r.complete;
  j["left_slope"] = r.left_slope;
  j["jump"] = r.jump;
  j["slope_floor"] = r.slope_floor;
  j["last_slopes"] = r.last_slopes;
  j["last_inv_r12"] = r.last_inv_r12;
  j["slope_variation"] = num(r.slope_variation);
  j["max_hf_mismatch"] = r.max_hf_mismatch;
  j["right_slopes"] = r.right_slopes;
  j["min_inv_ratio"] = num(r.min_inv_ratio);
  j["min_mass_inside"] = num(r.min_mass_inside);
  j["above_floor"] = r.above_floor;
  j["notes"] = r.notes;
  return j;
}

std::string csv_of(const ScanResult& s) {
  std::ostringstream os;
  os << scan_csv_header() << "\n";
  for (const auto& p : s.points) {
    os << fmt17(p.U) << ',' << fmt17(p.energy) << ',' << fmt17(p.breakup) << ','
       << (p.binding ? 1 : 0) << ',' << fmt17(p.inv_r12) << ',' << fmt17(p.mean_r12) << ','
       << fmt17(p.mass_inside) << ',' << fmt17(p.max_pair_dist) << ','
       << fmt17(p.max_pair_stderr) << ',' << (p.converged ? 1 : 0) << "\n";
  }
  return os.str();
}

std::optional<PersistedBasis> warm_basis(const RunConfig& cfg) {
  if (cfg.basis_file.empty()) return std::nullopt;
  return load_basis(cfg.basis_file);
}

struct Artifacts {
  Json result;
  int exit_code = kExitOk;
  std::string csv;
  std::optional<PersistedBasis> basis;
};

Artifacts run_pekar1(const RunConfig& cfg) {
  const Json& p = cfg.params;
  Artifacts a;
  CouplingParams params{p.at("alpha").get<double>(), 0.0, 1};
  BasisOptions o;
  o.target_size = p.at("basis_size").get<std::size_t>();
  o.trials = p.at("trials").get<int>();
  o.max_stalls = p.at("max_stalls").get<int>();
  o.seed = static_cast<std::uint64_t>(seed_at(cfg, 0, 1));
  o.scf = scf_from(p);
  const auto warm = warm_basis(cfg);
  if (warm && warm->basis.n_particles() != 1) {
    throw ConfigError("pekar1 needs a one-particle basis file");
  }
  const GrowthResult g = optimize_basis(params, o, warm ? &warm->basis : nullptr);
  a.result["energy_report"] = energy_json(g.report);
  a.result["energy_over_alpha2"] = g.report.total / (params.alpha * params.alpha);
  a.result["basis_size"] = g.basis.size();
  a.result["growth_energies"] = g.energies;
  if (g.basis.size() < o.target_size) {
    a.result["warnings"] = Json::array(
        {"basis growth stopped at " + std::to_string(g.basis.size()) + " of " +
         std::to_string(o.target_size) + " elements (max_stalls reached)"});
  }
  Json rs = Json::array();
  for (double f : p.at("rescale_factors").get<std::vector<double>>()) {
    if (!(f > 0.0)) throw ConfigError("rescale factors must be positive");
    const auto [e, ef] = rescale_check(g.state, params, f);
    rs.push_back(Json{{"factor", f}, {"energy", e}, {"scaled_energy_over_f2", ef}, {"ratio", ef / e}});
  }
  a.result["rescale"] = rs;
  a.basis = PersistedBasis{g.basis, {g.state.coeffs()}};
  if (!g.report.converged) a.exit_code = kExitNonConvergence;
  return a;
}

ScanOptions scan_options(const RunConfig& cfg, bool polaron) {
  const Json& p = cfg.params;
  ScanOptions o;
  o.tol_bind_rel = p.at("tol_bind_rel").get<double>();
  o.growth_per_point = p.at("growth_per_point").get<std::size_t>();
  o.mc_samples = p.at("mc_samples").get<std::size_t>();
  o.mc_seed = static_cast<std::uint64_t>(seed_at(cfg, 1, 2024));
  o.mass_radius = p.at("mass_radius").get<double>();
  o.chained = p.at("chained").get<bool>();
  o.slope_step = p.at("slope_step").get<double>();
  o.polish_passes = p.at("polish_passes").get<int>();
  const auto seed = static_cast<std::uint64_t>(seed_at(cfg, 0, 1));
  if (polaron) {
    o.pt.target_size = p.at("basis_size").get<std::size_t>();
    o.pt.trials = p.at("trials").get<int>();
    o.pt.max_stalls = p.at("max_stalls").get<int>();
    o.pt.seed = seed;
    o.pt.scf = scf_from(p);
    o.one_body_size = p.at("one_body_size").get<std::size_t>();
  } else {
    o.atom.target_size = p.at("basis_size").get<std::size_t>();
    o.atom.trials = p.at("trials").get<int>();
    o.atom.max_stalls = p.at("max_stalls").get<int>();
    o.atom.seed = seed;
  }
  if (const auto warm = warm_basis(cfg)) o.basis = warm->basis;
  return o;
}

Artifacts finish_scan_artifacts(const ScanResult& s) {
  Artifacts a;
  a.result["scan"] = scan_json(s);
  a.result["structure"] = structure_json(s);
  a.result["first_order"] = first_order_json(first_order_report(s));
  a.csv = csv_of(s);
  a.basis = PersistedBasis{s.basis, s.coeffs};
  for (const auto& p : s.points) {
    if (!p.converged) a.exit_code = kExitNonConvergence;
  }
  return a;
}

Artifacts run_scan(const RunConfig& cfg) {
  const Json& p = cfg.params;
  const std::vector<double> grid = u_grid_from(p);
  if (cfg.command == "atom-scan") {
    return finish_scan_artifacts(scan_atom(grid, scan_options(cfg, false)));
  }
  const double alpha = p.at("alpha").get<double>();
  const int n = cfg.command == "bipolaron-scan" ? 2 : p.at("n_particles").get<int>();
  if (n > 4) throw ConfigError("parameter 'n_particles' must be <= 4");
  return finish_scan_artifacts(scan_npolaron(alpha, n, grid, scan_options(cfg, true)));
}

Artifacts run_locate(const RunConfig& cfg) {
  const Json& p = cfg.params;
  Artifacts a;
  const std::string system = p.at("system").get<std::string>();
  const double tol_rel = p.at("tol_bind_rel").get<double>();
  const auto seed = static_cast<std::uint64_t>(seed_at(cfg, 0, 1));
  const auto warm = warm_basis(cfg);
  ProbeFn probe;
  if (system == "atom") {
    AtomBasisOptions o;
    o.target_size = p.at("basis_size").get<std::size_t>();
    o.trials = p.at("trials").get<int>();
    o.max_stalls = p.at("max_stalls").get<int>();
    o.seed = seed;
    probe = atom_probe(o, warm ? warm->basis : BasisSet(2), tol_rel);
  } else {
    const int n = system == "bipolaron" ? 2 : p.at("n_particles").get<int>();
    if (n > 4) throw ConfigError("parameter 'n_particles' must be <= 4");
    const double alpha = p.at("alpha").get<double>();
    BasisOptions o;
    o.target_size = p.at("basis_size").get<std::size_t>();
    o.trials = p.at("trials").get<int>();
    o.max_stalls = p.at("max_stalls").get<int>();
    o.seed = seed;
    BasisOptions sub = o;
    sub.target_size = p.at("one_body_size").get<std::size_t>();
    auto clusters = std::make_shared<ClusterEnergies>(alpha, sub);
    BasisSet base = warm ? warm->basis : BasisSet(n);
    probe = [=](double U) {
      const BreakupResult br = breakup_energy(CouplingParams{alpha, U, n}, *clusters);
      Probe r = polaron_probe(alpha, n, o, base, br.energy, tol_rel)(U);
      r.converged = r.converged && br.converged;
      return r;
    };
  }
  const std::pair<double, double> bracket{p.at("lo").get<double>(), p.at("hi").get<double>()};
  CriticalResult res;
  try {
    res = locate_critical(probe, bracket, p.at("tol").get<double>());
  } catch (const PreconditionError& e) {
    const std::string msg = e.what();
    a.result["error"] = msg;
    a.exit_code = msg.find("converge") != std::string::npos ? kExitNonConvergence : kExitConfig;
    return a;
  }
  a.result["system"] = system;
  a.result["lo"] = res.lo;
  a.result["hi"] = res.hi;
  a.result["width"] = res.hi - res.lo;
  a.result["monotone"] = res.monotone;
  Json probes = Json::array();
  for (const auto& q : res.probes) {
    probes.push_back(Json{{"U", q.U},
                          {"binding", q.binding},
                          {"converged", q.converged},
                          {"energy", q.energy},
                          {"breakup", q.breakup}});
  }
  a.result["probes"] = probes;
  a.result["warnings"] = res.warnings;
  a.result["notes"] = Json::array(
      {"binding below lo is certified by a variational state; non-binding above hi is not "
       "proved for the exact problem"});
  return a;
}

Artifacts run_partitions(const RunConfig& cfg) {
  const Json& p = cfg.params;
  Artifacts a;
  const auto seed = static_cast<std::uint64_t>(seed_at(cfg, 0, 1));
  bool ok = true;
  const RadialPartition rp = build_radial_partition(p.at("ell").get<double>(), p.at("b").get<double>());

  const auto sum = check_sum_to_one(rp, p.at("sum_points").get<std::size_t>());
  a.result["radial_sum_to_one"] = Json{{"points", sum.points},
                                       {"max_deviation", sum.max_deviation},
                                       {"witness_t", sum.witness},
                                       {"ok", sum.max_deviation <= 1e-12}};
  ok = ok && sum.max_deviation <= 1e-12;

  const auto loc = check_localization_bound(rp, p.at("bound_points").get<std::size_t>());
  a.result["localization_bound"] = Json{{"points", loc.points},
                                        {"worst_slack", loc.worst_slack},
                                        {"witness_t", loc.witness},
                                        {"max_error", loc.max_error},
                                        {"ok", loc.ok}};
  ok = ok && loc.ok;

  const auto ball = check_ball_cutoff();
  const double pi2 = std::numbers::pi * std::numbers::pi;
  const bool ball_ok = std::abs(ball.norm - 1.0) <= 1e-6 && std::abs(ball.grad_norm - pi2) <= 1e-5;
  a.result["ball_cutoff"] = Json{{"norm", ball.norm},
                                 {"grad_norm", ball.grad_norm},
                                 {"at_origin", ball.at_origin},
                                 {"ok", ball_ok}};
  ok = ok && ball_ok;

  Json ims = Json::array();
  for (double nd : p.at("ims_particles").get<std::vector<double>>()) {
    const int n = static_cast<int>(nd);
    if (n < 2 || n != nd || n > 8) throw ConfigError("ims_particles entries must be integers in [2, 8]");
    const auto r = verify_ims_radial(rp, n, p.at("ims_samples").get<std::size_t>(), seed + n);
    Json j{{"n_particles", n}, {"samples", r.samples}, {"rejected", r.rejected},
           {"max_rel_error", r.max_rel_error}, {"ok", r.ok}};
    if (!r.ok) j["witness"] = r.witness;
    ims.push_back(j);
    ok = ok && r.ok;
  }
  a.result["ims_radial"] = ims;

  Json he = Json::array();
  double cmin = kInfD, cmax = 0.0;
  bool he_ok = true;
  for (double ell : p.at("helium_ells").get<std::vector<double>>()) {
    const HeliumPartition hp = build_helium_partition(ell, p.at("helium_eps").get<double>());
    const auto r = check_helium_partition(hp, p.at("helium_samples").get<std::size_t>(), seed);
    Json j{{"ell", ell},
           {"samples", r.samples},
           {"rejected_ties", r.rejected_ties},
           {"max_sum_deviation", r.max_sum_deviation},
           {"support_violations", r.support_violations},
           {"symmetry_violations", r.symmetry_violations},
           {"c_inner", r.c_inner},
           {"c_outer", r.c_outer},
           {"c_eps", r.c_eps},
           {"ok", r.ok}};
    if (r.witness) j["witness"] = std::vector<double>(r.witness->begin(), r.witness->end());
    he.push_back(j);
    he_ok = he_ok && r.ok;
    cmin = std::min(cmin, r.c_eps);
    cmax = std::max(cmax, r.c_eps);
  }
  const double spread = cmax > 0.0 ? (cmax - cmin) / cmax : 0.0;
  const bool spread_ok = spread <= p.at("c_eps_rel_tol").get<double>();
  a.result["helium_partition"] = Json{{"runs", he},
                                      {"c_eps_relative_spread", spread},
                                      {"ell_independent", spread_ok},
                                      {"ok", he_ok && spread_ok}};
  ok = ok && he_ok && spread_ok;
  a.result["pass"] = ok;
  if (!ok) a.exit_code = kExitVerification;
  return a;
}

Json falsification_json(const FalsificationResult& f) {
  const auto wj = [](const FalsificationWitness& w) {
    return Json{{"instance", w.instance}, {"a", w.a}, {"b", w.b},
                {"c", w.c}, {"lambda", w.lambda}, {"ell_c", w.ell_c},
                {"margin", w.margin}, {"conclusion", w.conclusion}};
  };
  Json j{{"lemma", to_string(f.which)},
         {"seed", f.seed},
         {"requested", f.requested},
         {"attempts", f.attempts},
         {"passing", f.passing},
         {"violations", f.violations},
         {"worst_relative_margin", num(f.worst_margin)}};
  j["worst"] = f.worst ? wj(*f.worst) : Json(nullptr);
  j["first_violation"] = f.first_violation ? wj(*f.first_violation) : Json(nullptr);
  return j;
}

Artifacts run_lemmas(const RunConfig& cfg) {
  const Json& p = cfg.params;
  Artifacts a;
  const auto seed = static_cast<std::uint64_t>(seed_at(cfg, 0, 1));
  const std::string which = p.at("lemma").get<std::string>();
  const auto trials = p.at("trials").get<std::size_t>();
  const auto nodes = p.at("nodes").get<std::size_t>();
  bool ok = true;
  Json runs = Json::array();
  std::size_t total_violations = 0;
  for (LemmaKind k : {LemmaKind::simple, LemmaKind::general}) {
    if (which != "both" && which != to_string(k)) continue;
    const auto f = falsification_search(k, trials, seed, nodes);
    runs.push_back(falsification_json(f));
    total_violations += f.violations;
    ok = ok && f.violations == 0 && f.passing == trials;
  }
  a.result["falsification"] = runs;
  a.result["violations"] = total_violations;

  // rho ~ e^{-r} on [0, 40], ell_c = 1
  const auto n = p.at("refinement_nodes").get<std::size_t>();
  const auto grid = log_grid(1.0, 40.0, 400);
  const auto f = [](double r) { return std::exp(-r); };
  const auto rs = refinement_check(f, 40.0, n, LemmaKind::simple, 0.0, 5.0, 1.0, 1.0, 1.0, grid);
  const auto rg = refinement_check(f, 40.0, n, LemmaKind::general, 0.1, 5.0, 1.0, 0.5, 1.0, grid);
  const double change = std::max({rs.max_hypothesis_change, rs.max_conclusion_change,
                                  rg.max_hypothesis_change, rg.max_conclusion_change});
  a.result["refinement"] = Json{{"n_coarse", rs.n_coarse},
                                {"n_fine", rs.n_fine},
                                {"simple_hypothesis_change", rs.max_hypothesis_change},
                                {"simple_conclusion_change", rs.max_conclusion_change},
                                {"general_hypothesis_change", rg.max_hypothesis_change},
                                {"general_conclusion_change", rg.max_conclusion_change},
                                {"ok", change < 1e-6}};
  ok = ok && change < 1e-6;
  a.result["pass"] = ok;
  if (!ok) a.exit_code = kExitVerification;
  return a;
}

Artifacts run_constants(const RunConfig& cfg) {
  const Json& p = cfg.params;
  Artifacts a;
  ConstantsReport c;
  try {
    c = compute_constants(p.at("alpha").get<double>(), p.at("eps").get<double>(),
                          p.at("delta").get<double>(), p.at("b").get<double>(),
                          p.at("n_particles").get<int>());
  } catch (const ConfigurationError& e) {
    throw ConfigError(e.what());
  }
  a.result["constants"] = Json{{"alpha", c.alpha}, {"eps", c.eps}, {"delta", c.delta},
                               {"b", c.b}, {"n_particles", c.n_particles},
                               {"kappa", c.kappa}, {"kappa_argmin", c.kappa_argmin},
                               {"d_interval", Json::array({c.d_lo, c.d_hi})},
                               {"ell_c", c.ell_c}, {"ell_c_rederived", c.ell_c_rederived},
                               {"L_over_ell", c.L_over_ell}};
  const int jm = p.at("j_max").get<int>();
  const auto dp = p.at("d_points").get<std::size_t>();
  const auto sweep = [&](double ell) {
    const auto s = check_step2(c, ell, jm, dp);
    return Json{{"ell", s.ell}, {"j_max", s.j_max}, {"d_points", s.d_points},
                {"worst_relative_slack", s.worst_slack}, {"worst_j", s.worst_j},
                {"worst_d", s.worst_d}, {"ok", s.ok}};
  };
  a.result["step2_at_ell_c"] = sweep(c.ell_c);
  a.result["step2_at_ell_c_rederived"] = sweep(c.ell_c_rederived);
  const bool ok = a.result["step2_at_ell_c_rederived"]["ok"].get<bool>();
  a.result["pass"] = ok;
  if (!a.result["step2_at_ell_c"]["ok"].get<bool>()) {
    a.result["notes"] = Json::array(
        {"the closed-form ell_c does not satisfy the sweep for this N; ell_c_rederived does"});
  }
  if (!ok) a.exit_code = kExitVerification;
  return a;
}

void write_text(const std::filesystem::path& path, const std::string& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << s;
}

Json provenance(const RunConfig& cfg, const std::string& started) {
  Json j;
  j["tool"] = "bindlab";
  j["version"] = BINDLAB_VERSION;
  j["git"] = BINDLAB_GIT_DESCRIBE;
  j["command"] = cfg.command;
  j["seeds"] = cfg.seeds;
  j["workers"] = omp_get_max_threads();
  j["started"] = started;
  j["finished"] = iso_now();
  return j;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : commands()) n.push_back(c.name);
    return n;
  }();
  return names;
}

Json config_schema() {
  Json s;
  s["$schema"] = "http://json-schema.org/draft-07/schema#";
  s["title"] = "bindlab run configuration";
  s["type"] = "object";
  s["required"] = Json::array({"command"});
  s["additionalProperties"] = false;
  s["properties"] = Json{
      {"command", Json{{"type", "string"}, {"enum", command_names()}}},
      {"params", Json{{"type", "object"}}},
      {"seeds", Json{{"type", "array"}, {"items", Json{{"type", "integer"}}}}},
      {"output_dir", Json{{"type", "string"}, {"default", "bindlab_out"}}},
      {"basis_file", Json{{"type", "string"}}},
  };
  Json all = Json::array();
  for (const auto& c : commands()) {
    Json props = Json::object();
    for (const auto& p : c.params) props[p.name] = schema_type(p);
    all.push_back(Json{
        {"if", Json{{"properties", Json{{"command", Json{{"const", c.name}}}}}}},
        {"then",
         Json{{"properties",
               Json{{"params", Json{{"type", "object"},
                                    {"description", c.help},
                                    {"additionalProperties", false},
                                    {"properties", props}}},
                    {"seeds", Json{{"description", c.seeds_help}}}}}}},
    });
  }
  s["allOf"] = all;
  return s;
}

RunConfig parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::vector<std::string> top = {"command", "params", "seeds", "output_dir",
                                               "basis_file"};
  for (const auto& [k, v] : doc.items()) {
    if (std::find(top.begin(), top.end(), k) == top.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  if (!doc.contains("command") || !doc["command"].is_string()) {
    throw ConfigError("config needs a string 'command'");
  }
  RunConfig cfg;
  cfg.command = doc["command"].get<std::string>();
  const CommandSpec& spec = find_command(cfg.command);
  const Json params = doc.value("params", Json::object());
  if (!params.is_object()) throw ConfigError("'params' must be an object");
  for (const auto& [k, v] : params.items()) {
    const auto it = std::find_if(spec.params.begin(), spec.params.end(),
                                 [&](const ParamSpec& p) { return p.name == k; });
    if (it == spec.params.end()) {
      throw ConfigError("unknown parameter '" + k + "' for command " + cfg.command);
    }
  }
  for (const auto& p : spec.params) {
    cfg.params[p.name] = check_value(p, params.contains(p.name) ? params[p.name] : p.def);
  }
  if (doc.contains("seeds")) {
    if (!doc["seeds"].is_array()) throw ConfigError("'seeds' must be an array of integers");
    for (const auto& s : doc["seeds"]) {
      if (!s.is_number_integer() || s.get<long long>() < 0) {
        throw ConfigError("'seeds' must be an array of non-negative integers");
      }
      cfg.seeds.push_back(s.get<long long>());
    }
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty()) {
      throw ConfigError("'output_dir' must be a non-empty string");
    }
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("basis_file")) {
    if (!doc["basis_file"].is_string()) throw ConfigError("'basis_file' must be a string");
    cfg.basis_file = doc["basis_file"].get<std::string>();
  }
  return cfg;
}

std::string scan_csv_header() {
  return "U,energy,breakup,binding,inv_r12,mean_r12,mass_inside,max_pair_dist,stderr,converged";
}

RunOutcome run(const RunConfig& cfg) {
  const std::string started = iso_now();
  Artifacts art;
  try {
    if (cfg.command == "pekar1") {
      art = run_pekar1(cfg);
    } else if (cfg.command == "bipolaron-scan" || cfg.command == "npolaron-scan" ||
               cfg.command == "atom-scan") {
      art = run_scan(cfg);
    } else if (cfg.command == "locate-critical") {
      art = run_locate(cfg);
    } else if (cfg.command == "verify-partitions") {
      art = run_partitions(cfg);
    } else if (cfg.command == "verify-lemmas") {
      art = run_lemmas(cfg);
    } else if (cfg.command == "verify-constants") {
      art = run_constants(cfg);
    } else {
      throw ConfigError("unknown command '" + cfg.command + "'");
    }
  } catch (const ConfigurationError& e) {
    throw ConfigError(e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }

  RunOutcome out;
  out.exit_code = art.exit_code;
  out.csv = art.csv;
  out.report["provenance"] = provenance(cfg, started);
  Json config;
  config["command"] = cfg.command;
  config["params"] = cfg.params;
  config["seeds"] = cfg.seeds;
  config["output_dir"] = cfg.output_dir;
  if (!cfg.basis_file.empty()) config["basis_file"] = cfg.basis_file;
  out.report["config"] = config;
  out.report["result"] = art.result;
  out.report["exit_code"] = out.exit_code;

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + cfg.output_dir + ": " + ec.message());
  const fs::path dir(cfg.output_dir);
  write_text(dir / "report.json", out.report.dump(2) + "\n");
  if (!out.csv.empty()) write_text(dir / "scan.csv", out.csv);
  if (art.basis) save_basis((dir / "basis.txt").string(), art.basis->basis, art.basis->coeffs);
  return out;
}

int cli_main(int argc, char** argv) {
  if (const char* w = std::getenv("BINDLAB_WORKERS")) {
    char* end = nullptr;
    const long n = std::strtol(w, &end, 10);
    if (end == w || *end != '\0' || n < 1) {
      std::cerr << "bindlab: BINDLAB_WORKERS must be a positive integer\n";
      return kExitConfig;
    }
    omp_set_num_threads(static_cast<int>(n));
  }

  CLI::App app{"bindlab: binding-threshold solver and verification laboratory"};
  app.set_version_flag("--version", std::string(BINDLAB_VERSION) + " (" + BINDLAB_GIT_DESCRIBE + ")");
  app.require_subcommand(1);

  struct Bound {
    CLI::App* sub;
    std::map<std::string, std::string> scalars;
    std::map<std::string, std::vector<std::string>> arrays;
    std::string config, output_dir, basis_file;
    std::vector<long long> seeds;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& c : commands()) {
    auto b = std::make_unique<Bound>();
    b->sub = app.add_subcommand(c.name, c.help);
    b->sub->add_option("--config", b->config, "JSON run configuration file");
    b->sub->add_option("--output-dir", b->output_dir, "directory for report.json / scan.csv / basis.txt");
    b->sub->add_option("--seed", b->seeds, "seed(s); " + c.seeds_help)->delimiter(',');
    b->sub->add_option("--basis-file", b->basis_file, "warm-start basis file");
    for (const auto& p : c.params) {
      std::string flag = "--" + p.name;
      std::replace(flag.begin(), flag.end(), '_', '-');
      std::ostringstream help;
      help << p.help << " [default " << p.def.dump() << "]";
      if (p.type == Type::number_array) {
        b->sub->add_option(flag, b->arrays[p.name], help.str())->delimiter(',');
      } else {
        b->sub->add_option(flag, b->scalars[p.name], help.str());
      }
    }
    bound.push_back(std::move(b));
  }
  app.add_subcommand("schema", "print the JSON schema of the config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }
  if (app.got_subcommand("schema")) {
    std::cout << config_schema().dump(2) << "\n";
    return kExitOk;
  }

  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    const CommandSpec& spec = find_command(b->sub->get_name());
    try {
      Json doc = Json::object();
      if (!b->config.empty()) {
        std::ifstream is(b->config);
        if (!is) throw ConfigError("cannot read config file " + b->config);
        try {
          doc = Json::parse(is);
        } catch (const Json::parse_error& e) {
          throw ConfigError(std::string("config file is not valid JSON: ") + e.what());
        }
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
        if (doc.contains("command") && doc["command"] != spec.name) {
          throw ConfigError("config command does not match subcommand " + spec.name);
        }
      }
      doc["command"] = spec.name;
      if (!doc.contains("params")) doc["params"] = Json::object();
      // flags override the file
      for (const auto& p : spec.params) {
        std::string flag = "--" + p.name;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (b->sub->count(flag) == 0) continue;
        if (p.type == Type::number_array) {
          Json arr = Json::array();
          for (const auto& s : b->arrays[p.name]) {
            try {
              std::size_t used = 0;
              const double v = std::stod(s, &used);
              if (used != s.size()) throw std::invalid_argument(s);
              arr.push_back(v);
            } catch (const std::exception&) {
              throw ConfigError("flag " + flag + ": '" + s + "' is not a number");
            }
          }
          doc["params"][p.name] = arr;
          continue;
        }
        const std::string& s = b->scalars[p.name];
        if (p.type == Type::string) {
          doc["params"][p.name] = s;
        } else if (p.type == Type::boolean) {
          if (s != "true" && s != "false") throw ConfigError("flag " + flag + " expects true or false");
          doc["params"][p.name] = s == "true";
        } else {
          try {
            doc["params"][p.name] = Json::parse(s);
          } catch (const Json::parse_error&) {
            throw ConfigError("flag " + flag + ": '" + s + "' is not a number");
          }
        }
      }
      if (!b->seeds.empty()) doc["seeds"] = b->seeds;
      if (!b->output_dir.empty()) doc["output_dir"] = b->output_dir;
      if (!b->basis_file.empty()) doc["basis_file"] = b->basis_file;

      const RunConfig cfg = parse_config(doc);
      const RunOutcome out = run(cfg);
      std::cout << "bindlab " << cfg.command << ": exit " << out.exit_code << ", report "
                << (std::filesystem::path(cfg.output_dir) / "report.json").string() << "\n";
      return out.exit_code;
    } catch (const ConfigError& e) {
      std::cerr << "bindlab: config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const ConfigurationError& e) {
      std::cerr << "bindlab: config error: " << e.what() << "\n";
      return kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "bindlab: error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  return kExitConfig;
}

}  // namespace bindlab
