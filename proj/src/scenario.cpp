#include "kgan/scenario.hpp"

#include "kgan/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace kgan {

using nlohmann::json;

void PointMasses::validate(const std::string& name) const {
  if (points.rows() != weights.size()) {
    throw ConfigError(name + ": points has " + std::to_string(points.rows()) + " rows but weights has " +
                          std::to_string(weights.size()) + " entries",
                      name + ".weights");
  }
  if (points.rows() == 0) {
    throw ConfigError(name + ": at least one point is required", name + ".points");
  }
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) {
      throw ConfigError(name + ".weights[" + std::to_string(i) + "] must be positive",
                        name + ".weights");
    }
  }
  if (!points.allFinite()) {
    throw ConfigError(name + ".points contains a non-finite coordinate", name + ".points");
  }
}

Hyperparams::Hyperparams(double eta_d, double eta_g, double lambda)
    : eta_d_(eta_d), eta_g_(eta_g), lambda_(lambda) {
  auto check = [](double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ConfigError(std::string("hyper.") + field + " must be positive", std::string("hyper.") + field);
    }
  };
  check(eta_d, "eta_d");
  check(eta_g, "eta_g");
  check(lambda, "lambda");
}

Scenario::Scenario(KernelSpec kernel_, PointMasses real_, PointMasses generated_, Hyperparams hyper_)
    : kernel(kernel_), real(std::move(real_)), generated(std::move(generated_)), hyper(hyper_) {
  real.validate("real");
  generated.validate("generated");
  if (real.dim() != kernel.dim()) {
    throw DimensionError("real points have dimension " + std::to_string(real.dim()) +
                         " but the kernel has dimension " + std::to_string(kernel.dim()));
  }
  if (generated.dim() != kernel.dim()) {
    throw DimensionError("generated points have dimension " + std::to_string(generated.dim()) +
                         " but real points have dimension " + std::to_string(kernel.dim()));
  }
}

Scenario Scenario::with_width(double width) const {
  return Scenario(KernelSpec(width, kernel.dim(), kernel.family()), real, generated, hyper);
}

Scenario Scenario::with_hyper(const Hyperparams& h) const { return Scenario(kernel, real, generated, h); }

Scenario Scenario::with_generated_points(const Matrix& points) const {
  PointMasses g{points, generated.weights};
  return Scenario(kernel, real, std::move(g), hyper);
}

namespace {

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path + " must be an object", path);
  auto it = obj.find(key);
  if (it == obj.end()) {
    const std::string field = path.empty() ? key : path + "." + key;
    throw ConfigError("missing field `" + field + "`", field);
  }
  return *it;
}

double number(const json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError("`" + field + "` must be a number", field);
  return v.get<double>();
}

PointMasses read_masses(const json& root, const std::string& name) {
  const json& sec = require(root, name, "");
  const json& pts = require(sec, "points", name);
  const json& wts = require(sec, "weights", name);
  const std::string pfield = name + ".points";
  const std::string wfield = name + ".weights";
  if (!pts.is_array() || pts.empty()) throw ConfigError("`" + pfield + "` must be a non-empty list", pfield);
  if (!wts.is_array()) throw ConfigError("`" + wfield + "` must be a list", wfield);

  const int n = static_cast<int>(pts.size());
  const int d = pts[0].is_array() ? static_cast<int>(pts[0].size()) : 1;
  if (d == 0) throw ConfigError("`" + pfield + "` entries must be non-empty", pfield);
  PointMasses pm;
  pm.points.resize(n, d);
  for (int i = 0; i < n; ++i) {
    const json& row = pts[i];
    if (row.is_number()) {
      if (d != 1) throw DimensionError(pfield + "[" + std::to_string(i) + "] has dimension 1, expected " + std::to_string(d));
      pm.points(i, 0) = row.get<double>();
      continue;
    }
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw DimensionError(pfield + "[" + std::to_string(i) + "] has dimension " +
                           std::to_string(row.is_array() ? row.size() : 0) + ", expected " + std::to_string(d));
    }
    for (int k = 0; k < d; ++k) pm.points(i, k) = number(row[k], pfield);
  }
  pm.weights.resize(static_cast<Eigen::Index>(wts.size()));
  for (std::size_t i = 0; i < wts.size(); ++i) pm.weights(static_cast<Eigen::Index>(i)) = number(wts[i], wfield);
  return pm;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const std::size_t line = line_of(text, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << "scenario parse error at line " << line << ": " << e.what();
    throw ConfigError(os.str(), "", line);
  }
  if (!root.is_object()) throw ConfigError("scenario document must be an object", "", 1);

  const json& ksec = require(root, "kernel", "");
  std::string family = "RBF";
  if (auto it = ksec.find("family"); it != ksec.end()) {
    if (!it->is_string()) throw ConfigError("`kernel.family` must be a string", "kernel.family");
    family = it->get<std::string>();
  }
  std::string upper = family;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper != "RBF") throw ConfigError("unsupported kernel family `" + family + "`", "kernel.family");
  const double width = number(require(ksec, "width", "kernel"), "kernel.width");
  if (!(width > 0.0)) throw ConfigError("`kernel.width` must be positive", "kernel.width");

  PointMasses real = read_masses(root, "real");
  PointMasses gen = read_masses(root, "generated");
  real.validate("real");
  gen.validate("generated");
  if (gen.dim() != real.dim()) {
    throw DimensionError("generated points have dimension " + std::to_string(gen.dim()) +
                         " but real points have dimension " + std::to_string(real.dim()));
  }

  const json& hsec = require(root, "hyper", "");
  Hyperparams hyper(number(require(hsec, "eta_d", "hyper"), "hyper.eta_d"),
                    number(require(hsec, "eta_g", "hyper"), "hyper.eta_g"),
                    number(require(hsec, "lambda", "hyper"), "hyper.lambda"));

  const int dim = real.dim();
  return Scenario(KernelSpec(width, dim), std::move(real), std::move(gen), hyper);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string(), "");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& s) {
  auto masses = [](const PointMasses& pm) {
    json pts = json::array();
    for (int i = 0; i < pm.size(); ++i) {
      json row = json::array();
      for (int k = 0; k < pm.dim(); ++k) row.push_back(pm.points(i, k));
      pts.push_back(row);
    }
    json w = json::array();
    for (int i = 0; i < pm.size(); ++i) w.push_back(pm.weights(i));
    return json{{"points", pts}, {"weights", w}};
  };
  json root{{"kernel", {{"family", "RBF"}, {"width", s.kernel.width()}}},
            {"real", masses(s.real)},
            {"generated", masses(s.generated)},
            {"hyper", {{"eta_d", s.hyper.eta_d()}, {"eta_g", s.hyper.eta_g()}, {"lambda", s.hyper.lambda()}}}};
  return root.dump(2) + "\n";
}

NeighborhoodPartition partition_isolated(const Scenario& s, double eps) {
  NeighborhoodPartition part;
  part.eps = eps;
  const int nr = s.real.size();
  const int ng = s.generated.size();
  part.members.assign(nr, {});
  part.assignment.assign(ng, -1);

  for (int j = 0; j < ng; ++j) {
    int best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nr; ++i) {
      const double d2 = (s.generated.points.row(j) - s.real.points.row(i)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    part.assignment[j] = best;
    part.members[best].push_back(j);
  }

  // Region r consists of x_r and its generated members.
  auto region_points = [&](int r) {
    std::vector<Vector> pts{s.real.point(r)};
    for (int j : part.members[r]) pts.push_back(s.generated.point(j));
    return pts;
  };
  std::vector<std::vector<Vector>> regions;
  regions.reserve(nr);
  for (int r = 0; r < nr; ++r) regions.push_back(region_points(r));

  double floor = 0.0;
  for (int r = 0; r < nr; ++r) {
    for (int q = r + 1; q < nr; ++q) {
      for (const Vector& x : regions[r]) {
        for (const Vector& y : regions[q]) floor = std::max(floor, eval(s.kernel, x, y));
      }
    }
  }
  part.kernel_floor = floor;
  part.separation_ok = floor <= eps;
  return part;
}

double delta_i(const Scenario& s, const NeighborhoodPartition& part, int region) {
  if (region < 0 || region >= part.regions() || region >= s.real.size()) {
    throw Error("delta_i: region " + std::to_string(region) + " does not exist");
  }
  double gen_mass = 0.0;
  for (int j : part.members[region]) gen_mass += s.generated.weights(j);
  return s.real.weights(region) - gen_mass;
}

}  // namespace kgan
