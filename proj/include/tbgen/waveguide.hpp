// Copyright 2026 The tbgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Waveguide coupling from gridded mode fields.
//
// The vertical (spin-preserving) dipole couples to the y component of the
// field and the diagonal dipole to the x component. Waveguide-coupled rates
// scale as gamma_bulk * n_g * |E_i|^2 / norm; each dipole also leaks into
// non-guided modes at leak_fraction * gamma_bulk.
//
// Mode-field text format:
//   # n_g=<float>
//   # a_nm=<float>
//   # norm=<float>
//   x y ReEx ImEx ReEy ImEy ReEz ImEz      (one record per grid point)
// Records run over x fastest, then y. Positions are in lattice constants.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tbgen/errors.hpp"
#include "tbgen/parallel.hpp"
#include "tbgen/params.hpp"

namespace tbgen {

using cd = std::complex<double>;

struct ModeField {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<Eigen::Vector3cd> field;  ///< field[iy * xs.size() + ix]
  double n_g = 1.0;
  double norm = 1.0;
  double a_nm = 400.0;

  const Eigen::Vector3cd& at(std::size_t ix, std::size_t iy) const { return field[iy * xs.size() + ix]; }

  bool contains(double x, double y) const {
    return x >= xs.front() && x <= xs.back() && y >= ys.front() && y <= ys.back();
  }

  void check() const {
    std::vector<ValidationError::Field> bad;
    auto monotone = [](const std::vector<double>& v) {
      for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) return false;
      return v.size() >= 2;
    };
    if (!monotone(xs)) bad.push_back({"x", "grid must be strictly increasing with at least 2 points"});
    if (!monotone(ys)) bad.push_back({"y", "grid must be strictly increasing with at least 2 points"});
    if (field.size() != xs.size() * ys.size()) bad.push_back({"field", "size does not match grid"});
    for (const auto& e : field) {
      if (!e.allFinite()) {
        bad.push_back({"field", "non-finite value"});
        break;
      }
    }
    if (!(n_g > 0.0) || std::isinf(n_g)) bad.push_back({"n_g", "must be finite and > 0"});
    if (!(norm > 0.0) || std::isinf(norm)) bad.push_back({"norm", "must be finite and > 0"});
    if (!(a_nm > 0.0)) bad.push_back({"a_nm", "must be > 0"});
    if (!bad.empty()) throw ValidationError(std::move(bad));
  }

  /// Bilinear interpolation of the complex field.
  Eigen::Vector3cd interpolate(double x, double y) const {
    if (!contains(x, y)) {
      throw DomainError("ModeField: position (" + std::to_string(x) + ", " + std::to_string(y) + ") outside grid");
    }
    auto locate = [](const std::vector<double>& v, double t, std::size_t& i, double& w) {
      auto it = std::upper_bound(v.begin(), v.end(), t);
      i = static_cast<std::size_t>(std::distance(v.begin(), it));
      i = std::clamp<std::size_t>(i, 1, v.size() - 1) - 1;
      w = (t - v[i]) / (v[i + 1] - v[i]);
    };
    std::size_t ix = 0, iy = 0;
    double wx = 0.0, wy = 0.0;
    locate(xs, x, ix, wx);
    locate(ys, y, iy, wy);
    return (1 - wx) * (1 - wy) * at(ix, iy) + wx * (1 - wy) * at(ix + 1, iy) + (1 - wx) * wy * at(ix, iy + 1) +
           wx * wy * at(ix + 1, iy + 1);
  }
};

inline ModeField read_mode_field(std::istream& is, const std::string& source = "<stream>") {
  ModeField m;
  std::map<std::string, double> header;
  struct Record {
    double x, y;
    Eigen::Vector3cd e;
    std::size_t line;
  };
  std::vector<Record> records;
  static const char* kColumns[] = {"x", "y", "ReEx", "ImEx", "ReEy", "ImEy", "ReEz", "ImEz"};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(first + 1, eq - first - 1);
      key.erase(0, key.find_first_not_of(" \t"));
      key.erase(key.find_last_not_of(" \t") + 1);
      if (key != "n_g" && key != "a_nm" && key != "norm") continue;
      try {
        std::size_t used = 0;
        const std::string value = line.substr(eq + 1);
        header[key] = std::stod(value, &used);
        if (value.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ParseError(source, lineno, "bad value for header '" + key + "'");
      }
      continue;
    }
    std::istringstream ls(line);
    double v[8];
    for (int c = 0; c < 8; ++c) {
      std::string tok;
      if (!(ls >> tok)) throw ParseError(source, lineno, std::string("missing column ") + kColumns[c]);
      try {
        std::size_t used = 0;
        v[c] = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError(source, lineno, std::string("bad number in column ") + kColumns[c]);
      }
    }
    std::string extra;
    if (ls >> extra) throw ParseError(source, lineno, "unexpected extra column");
    records.push_back({v[0], v[1], Eigen::Vector3cd(cd(v[2], v[3]), cd(v[4], v[5]), cd(v[6], v[7])), lineno});
  }
  for (const char* key : {"n_g", "a_nm", "norm"}) {
    if (!header.count(key)) throw ParseError(source, lineno, std::string("missing header ") + key);
  }
  if (records.empty()) throw ParseError(source, lineno, "no field records");
  m.n_g = header["n_g"];
  m.a_nm = header["a_nm"];
  m.norm = header["norm"];

  std::size_t nx = 0;
  while (nx < records.size() && records[nx].y == records[0].y) ++nx;
  if (records.size() % nx != 0) {
    throw ValidationError(std::vector<ValidationError::Field>{
        {"grid", "record count is not a multiple of the row length (non-rectangular)"}});
  }
  const std::size_t ny = records.size() / nx;
  for (std::size_t i = 0; i < nx; ++i) m.xs.push_back(records[i].x);
  for (std::size_t j = 0; j < ny; ++j) {
    m.ys.push_back(records[j * nx].y);
    for (std::size_t i = 0; i < nx; ++i) {
      const Record& r = records[j * nx + i];
      if (r.x != m.xs[i] || r.y != m.ys[j]) {
        throw ValidationError(std::vector<ValidationError::Field>{
            {"grid", "record on line " + std::to_string(r.line) + " breaks the rectangular grid"}});
      }
      m.field.push_back(r.e);
    }
  }
  m.check();
  return m;
}

inline ModeField load_mode_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  return read_mode_field(in, path);
}

inline void write_mode_field(std::ostream& os, const ModeField& m) {
  os << std::setprecision(17);
  os << "# n_g=" << m.n_g << "\n# a_nm=" << m.a_nm << "\n# norm=" << m.norm << '\n';
  os << "# x y ReEx ImEx ReEy ImEy ReEz ImEz\n";
  for (std::size_t j = 0; j < m.ys.size(); ++j) {
    for (std::size_t i = 0; i < m.xs.size(); ++i) {
      const auto& e = m.at(i, j);
      os << m.xs[i] << ' ' << m.ys[j];
      for (int c = 0; c < 3; ++c) os << ' ' << e[c].real() << ' ' << e[c].imag();
      os << '\n';
    }
  }
}

/// Waveguide-coupled rate of the vertical dipole at the centre of the
/// synthetic mode for n_g = 20, in units of gamma_bulk.
inline constexpr double kSyntheticCenterRate = 4.8;

/// Analytic stand-in for a W1 photonic-crystal waveguide mode on the unit
/// cell [-1/2, 1/2]^2: Ey = cos(pi x) cos(pi y) peaks at the centre, and
/// Ex = sin(2 pi y) cos(pi x) / sqrt(2) vanishes on the line y = 0.
inline ModeField synthetic_w1_mode(double n_g, int points = 41) {
  if (!(n_g > 0.0)) throw DomainError("synthetic_w1_mode: n_g must be > 0");
  if (points < 2) throw DomainError("synthetic_w1_mode: need at least 2 points per axis");
  ModeField m;
  m.n_g = n_g;
  m.norm = 20.0 / kSyntheticCenterRate;
  m.a_nm = 400.0;
  for (int i = 0; i < points; ++i) m.xs.push_back(-0.5 + static_cast<double>(i) / (points - 1));
  m.ys = m.xs;
  const double pi = std::numbers::pi;
  for (double y : m.ys) {
    for (double x : m.xs) {
      const double ex = std::sin(2 * pi * y) * std::cos(pi * x) / std::numbers::sqrt2;
      const double ey = std::cos(pi * x) * std::cos(pi * y);
      m.field.emplace_back(cd(ex, 0.0), cd(ey, 0.0), cd(0.0, 0.0));
    }
  }
  return m;
}

struct EmitterCoupling {
  BranchingBetas betas;
  double gamma_total = 0.0;
  double purcell_factor = 0.0;

  BranchingRatio branching() const { return branching_from_betas(betas); }
  double beta_total() const { return betas.beta_par + betas.beta_perp; }
};

inline EmitterCoupling coupling_at(const ModeField& mode, double x, double y, double gamma_bulk = 1.0,
                                   double leak_fraction = 0.1) {
  if (!(gamma_bulk > 0.0)) throw DomainError("coupling_at: gamma_bulk must be > 0");
  if (!(leak_fraction >= 0.0)) throw DomainError("coupling_at: leak_fraction must be >= 0");
  const Eigen::Vector3cd e = mode.interpolate(x, y);
  const double scale = gamma_bulk * mode.n_g / mode.norm;
  const double par = scale * std::norm(e[1]);
  const double perp = scale * std::norm(e[0]);
  const double leak = leak_fraction * gamma_bulk;
  const double total = par + perp + 2.0 * leak;
  if (!(total > 0.0)) throw DomainError("coupling_at: emitter is fully decoupled");
  EmitterCoupling c;
  c.betas = {par / total, perp / total, leak / total, leak / total};
  c.gamma_total = total;
  c.purcell_factor = total / gamma_bulk;
  return c;
}

struct MapPoint {
  double x = 0.0;
  double y = 0.0;
  double branching = 0.0;  ///< infinite on fully cycling points
  double beta_total = 0.0;
};

/// Evaluates coupling_at on a uniform nx x ny grid spanning the mode's cell.
inline std::vector<MapPoint> branching_map(const ModeField& mode, int nx, int ny, double gamma_bulk = 1.0,
                                           double leak_fraction = 0.1, unsigned workers = default_workers()) {
  if (nx < 2 || ny < 2) throw DomainError("branching_map: resolution must be at least 2x2");
  std::vector<MapPoint> out(static_cast<std::size_t>(nx) * ny);
  auto coord = [](const std::vector<double>& axis, int i, int n) {
    if (i == n - 1) return axis.back();
    return axis.front() + (axis.back() - axis.front()) * i / (n - 1);
  };
  parallel_for(
      out.size(),
      [&](std::size_t k) {
        const int i = static_cast<int>(k % nx);
        const int j = static_cast<int>(k / nx);
        MapPoint& p = out[k];
        p.x = coord(mode.xs, i, nx);
        p.y = coord(mode.ys, j, ny);
        const EmitterCoupling c = coupling_at(mode, p.x, p.y, gamma_bulk, leak_fraction);
        p.branching = branching_value(c.branching());
        p.beta_total = c.beta_total();
      },
      workers);
  return out;
}

inline void write_branching_map_csv(std::ostream& os, const std::vector<MapPoint>& points) {
  os << "x,y,B,beta_total\n" << std::setprecision(10);
  for (const auto& p : points) os << p.x << ',' << p.y << ',' << p.branching << ',' << p.beta_total << '\n';
}

/// Decay rate for a group index, from a table of known (n_g, gamma) pairs.
struct GammaLookup {
  double gamma = 0.0;
  bool extrapolated = false;
  std::string warning;
};

inline const std::map<double, double>& default_gamma_table() {
  static const std::map<double, double> table{{20.0, 3.2}, {56.0, 5.3}};
  return table;
}

/// Exact on table entries, log-linear in between; outside the table the end
/// segment is extended and a warning is attached.
inline GammaLookup gamma_of_group_index(double n_g, const std::map<double, double>& table = default_gamma_table()) {
  if (table.empty()) throw DomainError("gamma_of_group_index: empty table");
  if (!(n_g > 0.0)) throw DomainError("gamma_of_group_index: n_g must be > 0");
  for (const auto& [k, v] : table) {
    if (!(v > 0.0)) throw DomainError("gamma_of_group_index: table rates must be > 0");
  }
  GammaLookup out;
  if (auto it = table.find(n_g); it != table.end()) {
    out.gamma = it->second;
    return out;
  }
  if (table.size() == 1) {
    out.gamma = table.begin()->second;
    out.extrapolated = true;
    out.warning = "single-entry table; returning its rate for n_g=" + std::to_string(n_g);
    return out;
  }
  auto hi = table.upper_bound(n_g);
  if (hi == table.begin()) ++hi;
  if (hi == table.end()) --hi;
  auto lo = std::prev(hi);
  if (n_g < table.begin()->first || n_g > table.rbegin()->first) {
    out.extrapolated = true;
    out.warning = "n_g=" + std::to_string(n_g) + " outside table range; extrapolating";
  }
  const double w = (n_g - lo->first) / (hi->first - lo->first);
  out.gamma = std::exp((1 - w) * std::log(lo->second) + w * std::log(hi->second));
  return out;
}

}  // namespace tbgen
