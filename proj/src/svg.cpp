#include "kgan/errors.hpp"
#include "kgan/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace kgan {

HeatChannel parse_heat_channel(const std::string& name) {
  if (name == "rho_max_sq") return HeatChannel::rho_max_sq;
  if (name == "rho_max") return HeatChannel::rho_max;
  throw ConfigError("unknown heat map channel `" + name + "`", "channel");
}

namespace {

constexpr double kLeft = 90.0;
constexpr double kTop = 40.0;
constexpr double kPlot = 600.0;
constexpr double kLegendX = kLeft + kPlot + 30.0;
constexpr double kWidth = kLegendX + 230.0;
constexpr double kHeight = kTop + kPlot + 70.0;

const char* const kDivergent = "#d62728";
const char* const kColorA = "#000000";
const char* const kColorB = "#1f3fff";
const char* const kColorC = "#16a34a";
const char* const kColorComplex = "#e377c2";
const char* const kColorSat = "#ff8c00";

// Viridis control points.
constexpr std::array<std::array<double, 3>, 5> kRamp{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98},
                                                     {253, 231, 37}}};

std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0) * (kRamp.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(t), kRamp.size() - 2);
  const double f = t - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(kRamp[i][k] + f * (kRamp[i + 1][k] - kRamp[i][k])));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Boundary of the cells where `in(row, col)` holds, as one path.
template <class Pred>
std::string outline(int rows, int cols, double cw, double ch, Pred in) {
  std::ostringstream d;
  auto x = [&](int c) { return kLeft + c * cw; };
  auto y = [&](int r) { return kTop + kPlot - r * ch; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!in(r, c)) continue;
      if (c == 0 || !in(r, c - 1)) d << "M" << num(x(c)) << " " << num(y(r)) << "V" << num(y(r + 1));
      if (c == cols - 1 || !in(r, c + 1)) d << "M" << num(x(c + 1)) << " " << num(y(r)) << "V" << num(y(r + 1));
      if (r == 0 || !in(r - 1, c)) d << "M" << num(x(c)) << " " << num(y(r)) << "H" << num(x(c + 1));
      if (r == rows - 1 || !in(r + 1, c)) d << "M" << num(x(c)) << " " << num(y(r + 1)) << "H" << num(x(c + 1));
    }
  }
  return d.str();
}

void log_ticks(std::ostringstream& os, const std::vector<double>& axis, bool horizontal, double cell) {
  const double l0 = std::log10(axis.front()), l1 = std::log10(axis.back());
  const double span = kPlot - cell;
  for (int e = static_cast<int>(std::ceil(l0 - 1e-9)); e <= static_cast<int>(std::floor(l1 + 1e-9)); ++e) {
    const double f = (e - l0) / (l1 - l0);
    char txt[16];
    std::snprintf(txt, sizeof txt, "1e%d", e);
    if (horizontal) {
      const double x = kLeft + 0.5 * cell + f * span;
      os << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + kPlot) << "\" x2=\"" << num(x) << "\" y2=\""
         << num(kTop + kPlot + 6) << "\" stroke=\"#000\"/>\n";
      os << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + kPlot + 20) << "\" text-anchor=\"middle\">" << txt
         << "</text>\n";
    } else {
      const double y = kTop + kPlot - 0.5 * cell - f * span;
      os << "<line x1=\"" << num(kLeft - 6) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft) << "\" y2=\""
         << num(y) << "\" stroke=\"#000\"/>\n";
      os << "<text x=\"" << num(kLeft - 10) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">" << txt
         << "</text>\n";
    }
  }
}

}  // namespace

std::string render_heatmap_svg(const std::vector<PhaseCell>& cells, HeatChannel channel) {
  if (cells.empty()) throw Error("heat map needs at least one cell");
  std::map<double, int> sig, lam;
  for (const PhaseCell& c : cells) {
    sig.emplace(c.sigma, 0);
    lam.emplace(c.lambda, 0);
  }
  const int cols = static_cast<int>(sig.size());
  const int rows = static_cast<int>(lam.size());
  if (static_cast<std::size_t>(rows) * cols != cells.size()) {
    throw Error("ragged grid: " + std::to_string(cells.size()) + " cells do not fill a " + std::to_string(rows) +
                " x " + std::to_string(cols) + " grid");
  }
  std::vector<double> sigma_axis, lambda_axis;
  for (auto& [v, i] : sig) {
    i = static_cast<int>(sigma_axis.size());
    sigma_axis.push_back(v);
  }
  for (auto& [v, i] : lam) {
    i = static_cast<int>(lambda_axis.size());
    lambda_axis.push_back(v);
  }
  std::vector<const PhaseCell*> grid(cells.size(), nullptr);
  for (const PhaseCell& c : cells) {
    const std::size_t at = static_cast<std::size_t>(lam[c.lambda]) * cols + sig[c.sigma];
    if (grid[at]) throw Error("ragged grid: duplicate cell at sigma=" + label(c.sigma) + " lambda=" + label(c.lambda));
    grid[at] = &c;
  }

  auto value = [&](const PhaseCell& c) { return channel == HeatChannel::rho_max_sq ? c.rho_max * c.rho_max : c.rho_max; };
  double vmin = HUGE_VAL, vmax = -HUGE_VAL;
  for (const PhaseCell& c : cells) {
    if (c.phase.label == PhaseLabel::divergent || !c.note.empty()) continue;
    vmin = std::min(vmin, value(c));
    vmax = std::max(vmax, value(c));
  }
  const bool any_stable = vmin <= vmax;
  const bool degenerate = !any_stable || vmax - vmin <= 1e-15 * std::max(1.0, std::abs(vmax));
  const char* chan = channel == HeatChannel::rho_max_sq ? "|rho_max|^2" : "|rho_max|";

  const double cw = kPlot / cols, ch = kPlot / rows;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth) << "\" height=\""
     << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << " " << num(kHeight)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<defs>\n<linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  for (std::size_t k = 0; k < kRamp.size(); ++k) {
    const double t = static_cast<double>(k) / (kRamp.size() - 1);
    os << "<stop offset=\"" << num(t) << "\" stop-color=\"" << ramp(t) << "\"/>\n";
  }
  os << "</linearGradient>\n</defs>\n";

  os << "<g id=\"cells\" shape-rendering=\"crispEdges\">\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const PhaseCell& cell = *grid[static_cast<std::size_t>(r) * cols + c];
      std::string fill;
      if (!cell.note.empty()) {
        fill = "#808080";
      } else if (cell.phase.label == PhaseLabel::divergent) {
        fill = kDivergent;
      } else {
        fill = ramp(degenerate ? 0.5 : (value(cell) - vmin) / (vmax - vmin));
      }
      os << "<rect class=\"cell\" x=\"" << num(kLeft + c * cw) << "\" y=\"" << num(kTop + kPlot - (r + 1) * ch)
         << "\" width=\"" << num(cw) << "\" height=\"" << num(ch) << "\" fill=\"" << fill << "\"/>\n";
    }
  }
  os << "</g>\n";

  auto at = [&](int r, int c) -> const PhaseCell& { return *grid[static_cast<std::size_t>(r) * cols + c]; };
  auto with_label = [&](PhaseLabel l) {
    return outline(rows, cols, cw, ch, [&](int r, int c) { return at(r, c).note.empty() && at(r, c).phase.label == l; });
  };
  os << "<g id=\"overlays\" fill=\"none\">\n";
  const std::array<std::pair<PhaseLabel, const char*>, 4> phases{{{PhaseLabel::divergent, kDivergent},
                                                                  {PhaseLabel::a_dominant, kColorA},
                                                                  {PhaseLabel::b_dominant, kColorB},
                                                                  {PhaseLabel::c_dominant, kColorC}}};
  for (const auto& [l, color] : phases) {
    const std::string d = with_label(l);
    if (!d.empty()) {
      os << "<path class=\"phase\" data-phase=\"" << phase_name(l) << "\" d=\"" << d << "\" stroke=\"" << color
         << "\" stroke-width=\"2\"/>\n";
    }
  }
  const std::string cx = outline(rows, cols, cw, ch, [&](int r, int c) { return at(r, c).complex_pair; });
  if (!cx.empty()) {
    os << "<path class=\"complex\" d=\"" << cx << "\" stroke=\"" << kColorComplex
       << "\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";
  }
  const std::string sat = outline(rows, cols, cw, ch, [&](int r, int c) { return at(r, c).saturated; });
  if (!sat.empty()) {
    os << "<path class=\"saturation\" d=\"" << sat << "\" stroke=\"" << kColorSat
       << "\" stroke-width=\"1.5\" stroke-dasharray=\"2 2\"/>\n";
  }
  os << "</g>\n";

  os << "<g id=\"axes\">\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kPlot) << "\" height=\""
     << num(kPlot) << "\" fill=\"none\" stroke=\"#000\"/>\n";
  log_ticks(os, sigma_axis, true, cw);
  log_ticks(os, lambda_axis, false, ch);
  os << "<text x=\"" << num(kLeft + 0.5 * kPlot) << "\" y=\"" << num(kTop + kPlot + 45)
     << "\" text-anchor=\"middle\">kernel width sigma (log scale)</text>\n";
  os << "<text transform=\"translate(" << num(kLeft - 55) << " " << num(kTop + 0.5 * kPlot)
     << ") rotate(-90)\" text-anchor=\"middle\">regularization lambda (log scale)</text>\n";
  os << "</g>\n";

  os << "<g id=\"legend\">\n";
  os << "<text x=\"" << num(kLegendX) << "\" y=\"" << num(kTop) << "\">" << escape(chan) << "</text>\n";
  os << "<rect x=\"" << num(kLegendX) << "\" y=\"" << num(kTop + 10) << "\" width=\"24\" height=\"200\" fill=\""
     << (degenerate ? ramp(0.5) : "url(#ramp)") << "\" stroke=\"#000\"/>\n";
  if (!any_stable) {
    os << "<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(kTop + 110) << "\">no stable cells</text>\n";
  } else if (degenerate) {
    os << "<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(kTop + 110) << "\">degenerate range: "
       << label(vmin) << "</text>\n";
  } else {
    os << "<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(kTop + 20) << "\">" << label(vmax) << "</text>\n";
    os << "<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(kTop + 210) << "\">" << label(vmin) << "</text>\n";
  }
  double y = kTop + 250;
  os << "<rect x=\"" << num(kLegendX) << "\" y=\"" << num(y - 10) << "\" width=\"24\" height=\"12\" fill=\""
     << kDivergent << "\"/>\n<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(y) << "\">DIVERGENT</text>\n";
  const std::array<std::tuple<const char*, const char*, const char*>, 5> lines{
      {{kColorA, "", "A dominant (rho_a)"},
       {kColorB, "", "B dominant (rho_b)"},
       {kColorC, "", "C dominant (rho_c)"},
       {kColorComplex, "6 3", "complex rho_c"},
       {kColorSat, "2 2", "saturation"}}};
  for (const auto& [color, dash, text] : lines) {
    y += 22;
    os << "<line x1=\"" << num(kLegendX) << "\" y1=\"" << num(y - 4) << "\" x2=\"" << num(kLegendX + 24) << "\" y2=\""
       << num(y - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"";
    if (*dash) os << " stroke-dasharray=\"" << dash << "\"";
    os << "/>\n<text x=\"" << num(kLegendX + 32) << "\" y=\"" << num(y) << "\">" << text << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace kgan
