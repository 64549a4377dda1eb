#pragma once

// File formats: JSON for parameters, states and RPM reports; CSV with 17
// significant digits for curves, boundaries and per-state checks; SVG for a
// two-hemisphere picture of an RPM.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gyrostat/bifurcation.hpp"
#include "gyrostat/contour.hpp"
#include "gyrostat/core.hpp"
#include "gyrostat/rpm.hpp"

namespace gyrostat {

using nlohmann::json;

namespace detail {

inline Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw InvalidInput(std::string(what) + " must be an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) throw InvalidInput(std::string(what) + " must hold numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

inline json to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

}  // namespace detail

inline json to_json(const GyrostatParams& p) {
  return {{"A", detail::to_json(p.inertia())}, {"lambda", detail::to_json(p.lambda())}};
}

inline GyrostatParams params_from_json(const json& j) {
  if (!j.is_object() || !j.contains("A") || !j.contains("lambda"))
    throw InvalidInput("gyrostat parameters need \"A\" and \"lambda\"");
  return {detail::vec3_from(j.at("A"), "A"), detail::vec3_from(j.at("lambda"), "lambda")};
}

inline json to_json(const State& s) {
  return {{"omega", detail::to_json(s.omega())}, {"nu", detail::to_json(s.nu())}};
}

inline State state_from_json(const json& j) {
  if (!j.is_object() || !j.contains("omega") || !j.contains("nu"))
    throw InvalidInput("state needs \"omega\" and \"nu\"");
  return {detail::vec3_from(j.at("omega"), "omega"), detail::vec3_from(j.at("nu"), "nu")};
}

inline json to_json(const IntegralConstants& k) { return json::array({k.k1, k.k2, k.k3}); }

inline std::string sign_pattern(int first, int second) {
  return std::string(first > 0 ? "+" : "-") + (second > 0 ? "+" : "-");
}

/// J_k type from the number of tori; "critical" on the bifurcation set.
inline std::string manifold_type(RegionLabel label, int tori) {
  if (label == RegionLabel::OnSigma) return "critical";
  switch (tori) {
    case 0: return "empty";
    case 1: return "T2";
    case 2: return "2T2";
    default: return std::to_string(tori) + "T2";
  }
}

inline json to_json(const RpmReport& r) {
  json comps = json::array();
  for (const auto& c : r.components) {
    comps.push_back({{"vertices", c.vertex_count},
                     {"representative", c.representative},
                     {"count_profile", c.count_profile}});
  }
  json curves = json::array();
  for (std::size_t i = 0; i < r.boundary.size(); ++i) {
    const auto& b = r.boundary[i];
    curves.push_back({{"curve_id", i},
                      {"component", b.component},
                      {"sign_pattern", sign_pattern(b.sign_first, b.sign_second)},
                      {"closed", b.curve.closed},
                      {"points", b.curve.points.size()}});
  }
  std::vector<std::size_t> uncertain;
  for (std::size_t v = 0; v < r.uncertain.size(); ++v)
    if (r.uncertain[v]) uncertain.push_back(v);
  return {{"k", to_json(r.k)},
          {"grid",
           {{"type", "icosphere"}, {"level", r.mesh->level()}, {"vertices", r.mesh->size()},
            {"max_edge_rad", r.mesh->max_edge()}}},
          {"counts", r.counts},
          {"uncertain", uncertain},
          {"component_count", r.components.size()},
          {"components", comps},
          {"sheets", r.sheets},
          {"boundary", curves},
          {"region_convention", kRegionConvention}};
}

// ---------------------------------------------------------------------------
// CSV

class CsvPrecision {
 public:
  explicit CsvPrecision(std::ostream& os) : os_(os), old_(os.precision(17)) {}
  ~CsvPrecision() { os_.precision(old_); }
  CsvPrecision(const CsvPrecision&) = delete;
  CsvPrecision& operator=(const CsvPrecision&) = delete;

 private:
  std::ostream& os_;
  std::streamsize old_;
};

inline void write_curve_csv(std::ostream& os, const std::vector<BifurcationCurveSample>& samples) {
  CsvPrecision guard(os);
  os << "sigma,k1,k2,branch\n";
  for (const auto& s : samples) os << s.sigma << ',' << s.k1 << ',' << s.k2 << ',' << to_string(s.branch) << '\n';
}

inline void write_sigma_slice_csv(std::ostream& os, double k3, const std::vector<SigmaSlicePiece>& pieces,
                                  bool header = true) {
  CsvPrecision guard(os);
  if (header) os << "k3,piece,kind,k1,k2\n";
  for (std::size_t i = 0; i < pieces.size(); ++i)
    for (const auto& [k1, k2] : pieces[i].points) os << k3 << ',' << i << ',' << pieces[i].kind << ',' << k1 << ',' << k2 << '\n';
}

/// Columns curve_id, sign_pattern, nu1..nu3, then the preimage omega1..omega3.
inline void write_boundary_csv(std::ostream& os, const std::vector<BoundaryCurve>& curves) {
  CsvPrecision guard(os);
  os << "curve_id,sign_pattern,nu1,nu2,nu3,omega1,omega2,omega3\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    const std::string pattern = sign_pattern(c.sign_first, c.sign_second);
    for (std::size_t j = 0; j < c.curve.points.size(); ++j) {
      const Vec3& nu = c.curve.points[j];
      const Vec3& w = c.omegas[j];
      os << i << ',' << pattern << ',' << nu[0] << ',' << nu[1] << ',' << nu[2] << ',' << w[0] << ',' << w[1] << ','
         << w[2] << '\n';
    }
  }
}

struct StateRow {
  Vec3 omega;
  Vec3 nu;
};

/// Reads any CSV carrying omega1..3 and nu1..3 columns (trajectory or boundary files).
inline std::vector<StateRow> read_states_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidInput("states CSV is empty");
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      out.push_back(cell);
    }
    return out;
  };
  const auto header = split(line);
  const std::array<const char*, 6> names{"omega1", "omega2", "omega3", "nu1", "nu2", "nu3"};
  std::array<std::size_t, 6> column{};
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto it = std::find(header.begin(), header.end(), names[i]);
    if (it == header.end()) throw InvalidInput(std::string("states CSV lacks column ") + names[i]);
    column[i] = static_cast<std::size_t>(it - header.begin());
  }
  std::vector<StateRow> rows;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) {
      try {
        if (column[i] >= cells.size()) throw std::invalid_argument("missing");
        v[i] = std::stod(cells[column[i]]);
      } catch (const std::exception&) {
        throw InvalidInput("states CSV line " + std::to_string(line_no) + ": bad value in column " + names[i]);
      }
    }
    rows.push_back({{v[0], v[1], v[2]}, {v[3], v[4], v[5]}});
  }
  return rows;
}

inline void write_check_csv(std::ostream& os, const std::vector<StateRow>& rows, const GyrostatParams& p,
                            double rank_eps) {
  CsvPrecision guard(os);
  os << "index,contour_condition,sv1,sv2,sv3,rank_defect\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const FiberJacobian j = fiber_jacobian(rows[i].omega, rows[i].nu, p);
    os << i << ',' << contour_condition(rows[i].omega, rows[i].nu, p) << ',' << j.singular_values[0] << ','
       << j.singular_values[1] << ',' << j.singular_values[2] << ',' << rank_defect(j, rank_eps) << '\n';
  }
}

// ---------------------------------------------------------------------------
// SVG: orthographic views along +nu3 (left) and -nu3 (right).

inline void write_rpm_svg(std::ostream& os, const RpmReport& r) {
  constexpr double radius = 200.0, margin = 20.0;
  const double width = 4 * radius + 3 * margin, height = 2 * radius + 2 * margin;
  const std::array<const char*, 5> shade{"#ffffff", "#c6dbef", "#6baed6", "#2171b5", "#08306b"};
  const auto& verts = r.mesh->vertices();

  auto screen = [&](const Vec3& v, bool north) {
    const double cx = margin + radius + (north ? 0.0 : 2 * radius + margin);
    const double x = north ? v[0] : -v[0];
    return std::pair<double, double>{cx + radius * x, margin + radius - radius * v[1]};
  };

  std::array<std::ostringstream, 5> paths;
  for (auto& p : paths) p.precision(5);
  for (const auto& tri : r.mesh->triangles()) {
    Vec3 centroid = Vec3::Zero();
    int count = 0;
    for (int v : tri) {
      centroid += verts[static_cast<std::size_t>(v)];
      count = std::max(count, r.counts[static_cast<std::size_t>(v)]);
    }
    if (count == 0) continue;
    const bool north = centroid[2] >= 0.0;
    auto& path = paths[static_cast<std::size_t>(std::clamp(count, 0, 4))];
    for (std::size_t i = 0; i < 3; ++i) {
      const auto [x, y] = screen(verts[static_cast<std::size_t>(tri[i])], north);
      path << (i == 0 ? 'M' : 'L') << x << ' ' << y << ' ';
    }
    path << "Z ";
  }

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  for (bool north : {true, false}) {
    const double cx = margin + radius + (north ? 0.0 : 2 * radius + margin);
    os << "<circle cx=\"" << cx << "\" cy=\"" << margin + radius << "\" r=\"" << radius
       << "\" fill=\"" << shade[0] << "\" stroke=\"#000\"/>\n";
  }
  for (std::size_t c = 1; c < paths.size(); ++c) {
    const std::string d = paths[c].str();
    if (!d.empty()) os << "<path fill=\"" << shade[c] << "\" stroke=\"none\" d=\"" << d << "\"/>\n";
  }
  for (const auto& b : r.boundary) {
    std::ostringstream line[2];
    bool open[2] = {false, false};
    for (const Vec3& nu : b.curve.points) {
      const bool north = nu[2] >= 0.0;
      const int side = north ? 0 : 1;
      const auto [x, y] = screen(nu, north);
      line[side] << (open[side] ? 'L' : 'M') << x << ' ' << y << ' ';
      open[side] = true;
      open[1 - side] = false;
    }
    for (auto& l : line) {
      const std::string d = l.str();
      if (!d.empty()) os << "<path fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" d=\"" << d << "\"/>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace gyrostat
