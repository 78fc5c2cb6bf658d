#include "fracheat/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fracheat {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& path,
                  const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw std::runtime_error("config: unknown key '" + path + "." +
                               it.key() + "'");
  }
}

Point parse_point(const json& j, const std::string& path, int d) {
  Point p{};
  if (!j.is_array() || static_cast<int>(j.size()) != d)
    throw std::runtime_error("config: '" + path + "' must be an array of " +
                             std::to_string(d) + " numbers");
  for (int i = 0; i < d; ++i) p[i] = j[i].get<double>();
  return p;
}

TimeProfile parse_time_profile(const json& j, const std::string& path) {
  TimeProfile g;
  if (j.is_null()) return g;
  require_keys(j, path, {"kind", "t0", "t1", "a"});
  const std::string kind = j.value("kind", "one");
  if (kind == "one")
    g.kind = TimeProfile::one;
  else if (kind == "window")
    g.kind = TimeProfile::window;
  else if (kind == "powerDecay")
    g.kind = TimeProfile::power_decay;
  else if (kind == "powerSingular")
    g.kind = TimeProfile::power_sing;
  else
    throw std::runtime_error("config: '" + path +
                             ".kind' must be one of one, window, powerDecay, "
                             "powerSingular");
  g.t0 = j.value("t0", 0.0);
  g.t1 = j.value("t1", 1.0);
  g.a = j.value("a", 0.0);
  return g;
}

DriftField parse_drift(const json& j, const std::string& path, int d) {
  if (j.is_null()) return DriftField::make_zero();
  require_keys(j, path,
               {"family", "center", "width", "amplitude", "omega", "time"});
  const std::string fam = j.value("family", "zero");
  TimeProfile g = parse_time_profile(j.contains("time") ? j["time"] : json(),
                                     path + ".time");
  if (fam == "zero") return DriftField::make_zero();
  if (fam == "constant") {
    Vec v{};
    const Point a = parse_point(j.at("amplitude"), path + ".amplitude", d);
    for (int i = 0; i < d; ++i) v[i] = a[i];
    return DriftField::make_constant(v, g);
  }
  if (fam == "bump") {
    const Point c = parse_point(j.at("center"), path + ".center", d);
    Vec v{};
    const Point a = parse_point(j.at("amplitude"), path + ".amplitude", d);
    for (int i = 0; i < d; ++i) v[i] = a[i];
    return DriftField::make_bump(c, j.at("width").get<double>(), v, g);
  }
  if (fam == "swirl") {
    const Point c = parse_point(j.at("center"), path + ".center", d);
    return DriftField::make_swirl(c, j.at("width").get<double>(),
                                  j.at("omega").get<double>(), g);
  }
  throw std::runtime_error("config: '" + path +
                           ".family' must be one of zero, constant, bump, "
                           "swirl");
}

ScalarField parse_scalar(const json& j, const std::string& path, int d) {
  if (j.is_null()) return ScalarField::make_zero();
  require_keys(j, path,
               {"family", "center", "width", "height", "kappa", "theta",
                "time"});
  const std::string fam = j.value("family", "zero");
  TimeProfile g = parse_time_profile(j.contains("time") ? j["time"] : json(),
                                     path + ".time");
  if (fam == "zero") return ScalarField::make_zero();
  if (fam == "constant")
    return ScalarField::make_constant(j.at("kappa").get<double>(), g);
  if (fam == "bump") {
    const Point c = parse_point(j.at("center"), path + ".center", d);
    return ScalarField::make_bump(c, j.at("width").get<double>(),
                                  j.at("height").get<double>(), g);
  }
  if (fam == "radialPower") {
    const Point c = parse_point(j.at("center"), path + ".center", d);
    return ScalarField::make_radial_power(c, j.at("theta").get<double>(), g);
  }
  throw std::runtime_error("config: '" + path +
                           ".family' must be one of zero, constant, bump, "
                           "radialPower");
}

}  // namespace

ScenarioConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: JSON parse error: ") +
                             e.what());
  }
  require_keys(root, "",
               {"domain", "alpha", "grid", "perturbation", "solve", "report"});
  ScenarioConfig cfg;

  if (root.contains("domain")) {
    const auto& d = root["domain"];
    require_keys(d, "domain", {"kind", "d", "extent"});
    const std::string kind = d.value("kind", "torus");
    if (kind == "torus")
      cfg.domain.kind = DomainKind::torus;
    else if (kind == "box")
      cfg.domain.kind = DomainKind::euclidean_box;
    else
      throw std::runtime_error("config: domain.kind must be torus or box");
    cfg.domain.d = d.value("d", 1);
    if (cfg.domain.d < 1 || cfg.domain.d > 3)
      throw std::runtime_error("config: domain.d must be 1, 2 or 3");
    cfg.domain.extent = d.value("extent", 2.0);
    if (!(cfg.domain.extent > 0.0))
      throw std::runtime_error("config: domain.extent must be positive");
  }

  cfg.alpha = root.value("alpha", 1.5);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 2.0))
    throw std::runtime_error("config: alpha must lie in (0,2)");
  if (cfg.alpha <= 1.0)
    cfg.warnings.push_back(
        "alpha outside (1,2): theorem-level checks need alpha in (1,2); "
        "boundary values are for oracle validation only");

  if (root.contains("grid")) {
    const auto& g = root["grid"];
    require_keys(g, "grid", {"nodesPerAxis", "timeSlices", "farFieldCut"});
    cfg.grid.nodes_per_axis = g.value("nodesPerAxis", 64);
    cfg.grid.time_slices = g.value("timeSlices", 16);
    cfg.grid.far_field_cut = g.value("farFieldCut", 0.0);
    cfg.grid.validate();
  }

  if (root.contains("perturbation")) {
    const auto& p = root["perturbation"];
    require_keys(p, "perturbation", {"b", "c", "analyticDivergence"});
    if (p.contains("b"))
      cfg.b = parse_drift(p["b"], "perturbation.b", cfg.domain.d);
    if (p.contains("c"))
      cfg.c = parse_scalar(p["c"], "perturbation.c", cfg.domain.d);
    cfg.analytic_divergence = p.value("analyticDivergence", true);
  }

  if (root.contains("solve")) {
    const auto& s = root["solve"];
    require_keys(s, "solve",
                 {"window", "tol", "maxIterations", "smallnessTarget",
                  "autoWindow", "clockLevel", "timeGl"});
    cfg.solve.window = s.value("window", 0.5);
    cfg.solve.tol = s.value("tol", 1e-6);
    cfg.solve.max_iterations = s.value("maxIterations", 12);
    cfg.solve.smallness_target = s.value("smallnessTarget", 1.0 / 3.0);
    cfg.solve.auto_window = s.value("autoWindow", false);
    cfg.solve.clock_level = s.value("clockLevel", 4);
    cfg.solve.time_gl = s.value("timeGl", 16);
    if (!(cfg.solve.window > 0.0))
      throw std::runtime_error("config: solve.window must be positive");
    if (cfg.solve.max_iterations < 1)
      throw std::runtime_error("config: solve.maxIterations must be >= 1");
  }
  cfg.solve.grid = cfg.grid;

  if (root.contains("report")) {
    const auto& r = root["report"];
    require_keys(r, "report", {"checks", "samples", "seed", "outDir"});
    if (r.contains("checks")) {
      const auto known = all_check_names();
      for (const auto& c : r["checks"]) {
        const std::string name = c.get<std::string>();
        if (name != "all" &&
            std::find(known.begin(), known.end(), name) == known.end()) {
          std::string msg = "config: report.checks contains unknown check '" +
                            name + "'; valid names:";
          for (const auto& k : known) msg += " " + k;
          throw std::runtime_error(msg);
        }
        cfg.checks.push_back(name);
      }
      if (cfg.checks.size() == 1 && cfg.checks[0] == "all") cfg.checks.clear();
    }
    cfg.samples = r.value("samples", 512);
    cfg.seed = r.value("seed", std::uint64_t{1});
    cfg.out_dir = r.value("outDir", std::string("out"));
  }
  return cfg;
}

ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace fracheat
