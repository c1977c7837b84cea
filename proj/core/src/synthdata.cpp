#include "ares/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ares/errors.hpp"

namespace ares {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vector blob_center(std::size_t c, std::size_t k, std::size_t d, double radius) {
  Vector center(d, 0.0);
  const double angle = kTwoPi * static_cast<double>(c) / static_cast<double>(k);
  center[0] = radius * std::cos(angle);
  center[1] = radius * std::sin(angle);
  return center;
}

// Uniform direction on the unit sphere in R^d.
Vector random_direction(std::size_t d, Rng& rng) {
  Vector u(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& ui : u) {
      ui = rng.normal();
      norm += ui * ui;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (auto& ui : u) ui /= norm;
  return u;
}

void check_sizes(std::size_t n, std::size_t k, std::size_t d) {
  if (k < 2 || n < k) throw InvalidParameter("id dataset: need n >= k >= 2");
  if (d < 2) throw InvalidParameter("id dataset: need d >= 2");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double GeneratorSpec::param(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Box bounding_box(std::span<const LabeledVector> points) {
  if (points.empty()) throw InvalidInput("bounding_box: empty point set");
  Box box{points.front().x, points.front().x};
  for (const auto& p : points) {
    for (std::size_t i = 0; i < p.x.size(); ++i) {
      box.lo[i] = std::min(box.lo[i], p.x[i]);
      box.hi[i] = std::max(box.hi[i], p.x[i]);
    }
  }
  return box;
}

std::vector<LabeledVector> make_id_dataset(const GeneratorSpec& spec, std::size_t n,
                                           std::size_t k, std::size_t d, Rng& rng) {
  check_sizes(n, k, d);
  std::vector<LabeledVector> out;
  out.reserve(n);

  if (spec.name == "blobs") {
    const double radius = spec.param("center_radius", 4.0);
    const double spread = spec.param("spread", 0.5);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % k;
      Vector x = blob_center(c, k, d, radius);
      for (auto& xi : x) xi += spread * rng.normal();
      out.push_back({std::move(x), static_cast<int>(c)});
    }
  } else if (spec.name == "moons2d") {
    if (k != 2 || d != 2) throw ConfigError("moons2d: requires classes=2 and dim=2");
    const double noise = spec.param("noise", 0.1);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % 2;
      const double t = std::numbers::pi * rng.uniform();
      Vector x = c == 0 ? Vector{std::cos(t), std::sin(t)}
                        : Vector{1.0 - std::cos(t), 0.5 - std::sin(t)};
      for (auto& xi : x) xi += noise * rng.normal();
      out.push_back({std::move(x), static_cast<int>(c)});
    }
  } else if (spec.name == "rings") {
    const double gap = spec.param("ring_gap", 2.0);
    const double noise = spec.param("noise", 0.2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = i % k;
      const double r = gap * static_cast<double>(c + 1) + noise * rng.normal();
      Vector x = random_direction(d, rng);
      for (auto& xi : x) xi *= r;
      out.push_back({std::move(x), static_cast<int>(c)});
    }
  } else {
    throw ConfigError("unknown id generator '" + spec.name + "'");
  }
  return out;
}

Vector AffineMap::apply(std::span<const double> x) const {
  Vector y = b;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) y[r] += a(r, c) * x[c];
  }
  return y;
}

std::vector<AffineMap> random_ifs(std::size_t d, std::size_t maps, Rng& rng) {
  if (maps < 2) throw InvalidParameter("random_ifs: need at least 2 maps");
  if (d == 0) throw InvalidParameter("random_ifs: dimension must be positive");
  std::vector<AffineMap> ifs;
  ifs.reserve(maps);
  for (std::size_t m = 0; m < maps; ++m) {
    AffineMap map{Matrix(d, d), Vector(d)};
    double frob = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        map.a(r, c) = rng.uniform(-1.0, 1.0);
        frob += map.a(r, c) * map.a(r, c);
      }
    }
    const double factor = rng.uniform(0.3, 0.8);
    const double scale = frob > 0.0 ? factor / std::sqrt(frob) : 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t c = 0; c < d; ++c) map.a(r, c) *= scale;
    }
    for (auto& bi : map.b) bi = rng.uniform(-1.0, 1.0);
    ifs.push_back(std::move(map));
  }
  return ifs;
}

std::vector<Vector> chaos_game(std::span<const AffineMap> maps, std::size_t n,
                               std::size_t burn_in, Rng& rng) {
  if (maps.empty()) throw InvalidParameter("chaos_game: no maps");
  const std::size_t d = maps.front().b.size();
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    for (auto& xi : x) xi = rng.uniform(-1.0, 1.0);
    for (std::size_t it = 0; it <= burn_in; ++it) {
      x = maps[rng.uniform_index(maps.size())].apply(x);
    }
    out.push_back(std::move(x));
  }
  return out;
}

void rescale_to_box(std::vector<Vector>& points, const Box& box) {
  if (points.empty()) return;
  const std::size_t d = box.lo.size();
  for (std::size_t i = 0; i < d; ++i) {
    double lo = points.front()[i];
    double hi = lo;
    for (const auto& p : points) {
      lo = std::min(lo, p[i]);
      hi = std::max(hi, p[i]);
    }
    const double span = hi - lo;
    for (auto& p : points) {
      const double t = span > 0.0 ? (p[i] - lo) / span : 0.5;
      // Clamp guards the last-ulp overshoot of lo + t·(hi − lo).
      p[i] = std::clamp(box.lo[i] + t * (box.hi[i] - box.lo[i]), box.lo[i], box.hi[i]);
    }
  }
}

std::vector<AuxVector> make_aux_dataset(std::size_t n, std::size_t d, Rng& rng,
                                        std::size_t ifs_maps, const Box& box) {
  if (n < 1) throw InvalidParameter("make_aux_dataset: need n >= 1");
  if (box.lo.size() != d || box.hi.size() != d) {
    throw InvalidInput("make_aux_dataset: bounding box dimension mismatch");
  }
  Rng map_rng = rng.child("ifs");
  Rng game_rng = rng.child("chaos");
  const auto maps = random_ifs(d, ifs_maps, map_rng);
  auto points = chaos_game(maps, n, kChaosBurnIn, game_rng);
  rescale_to_box(points, box);
  std::vector<AuxVector> out;
  out.reserve(n);
  for (auto& p : points) out.push_back({std::move(p)});
  return out;
}

std::vector<Vector> make_ood_eval(const GeneratorSpec& spec, std::size_t n,
                                  const OodContext& ctx, Rng& rng) {
  const std::size_t d = ctx.dim;
  if (d < 2) throw InvalidParameter("ood dataset: need d >= 2");
  std::vector<Vector> out;
  out.reserve(n);

  if (spec.name == "ring") {
    const double inner = spec.param("inner", 7.0);
    const double outer = spec.param("outer", 9.0);
    if (!(inner >= 0.0) || !(outer >= inner)) {
      throw InvalidParameter("ring: need 0 <= inner <= outer");
    }
    for (std::size_t i = 0; i < n; ++i) {
      Vector x = random_direction(d, rng);
      const double r = rng.uniform(inner, outer);
      for (auto& xi : x) xi *= r;
      out.push_back(std::move(x));
    }
  } else if (spec.name == "uniform") {
    const double margin = spec.param("margin", 0.0);
    if (ctx.id_box.lo.size() != d) throw InvalidInput("uniform: missing ID bounding box");
    for (std::size_t i = 0; i < n; ++i) {
      Vector x(d);
      for (std::size_t j = 0; j < d; ++j) {
        x[j] = rng.uniform(ctx.id_box.lo[j] - margin, ctx.id_box.hi[j] + margin);
      }
      out.push_back(std::move(x));
    }
  } else if (spec.name == "shifted-blobs") {
    const double offset = spec.param("offset", 2.0);
    const double radius = ctx.id_spec.param("center_radius", 4.0);
    const double spread = ctx.id_spec.param("spread", 0.5);
    const std::size_t k = ctx.classes;
    if (k < 1) throw InvalidParameter("shifted-blobs: need at least one class");
    for (std::size_t i = 0; i < n; ++i) {
      Vector x = blob_center(i % k, k, d, radius);
      const double norm = std::hypot(x[0], x[1]);
      if (norm > 0.0) {
        const double s = 1.0 + offset / norm;
        x[0] *= s;
        x[1] *= s;
      } else {
        x[0] += offset;
      }
      for (auto& xi : x) xi += spread * rng.normal();
      out.push_back(std::move(x));
    }
  } else {
    throw ConfigError("unknown ood generator '" + spec.name + "'");
  }
  return out;
}

Vector rotate_pair(std::span<const double> x, std::span<const double> center,
                   std::size_t i, std::size_t j, double angle) {
  Vector y(x.begin(), x.end());
  const double u = x[i] - center[i];
  const double v = x[j] - center[j];
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  y[i] = center[i] + c * u - s * v;
  y[j] = center[j] + s * u + c * v;
  return y;
}

Vector flip_coordinate(std::span<const double> x, std::span<const double> center,
                       std::size_t i) {
  Vector y(x.begin(), x.end());
  y[i] = center[i] - (x[i] - center[i]);
  return y;
}

Vector swap_coordinates(std::span<const double> x, std::size_t i, std::size_t j) {
  Vector y(x.begin(), x.end());
  std::swap(y[i], y[j]);
  return y;
}

Vector geometric_transform(std::span<const double> x, TransformKind kind,
                           std::span<const double> center, Rng& rng) {
  const std::size_t d = x.size();
  if (d < 2) throw InvalidInput("geometric_transform: need d >= 2");
  if (center.size() != d) throw InvalidInput("geometric_transform: center dimension mismatch");
  const std::size_t i = rng.uniform_index(d);
  std::size_t j = rng.uniform_index(d - 1);
  if (j >= i) ++j;
  switch (kind) {
    case TransformKind::rotate2d:
      return rotate_pair(x, center, i, j, kTwoPi * rng.uniform());
    case TransformKind::flip:
      return flip_coordinate(x, center, i);
    case TransformKind::permute:
      return swap_coordinates(x, i, j);
  }
  throw InvalidParameter("geometric_transform: unknown kind");
}

void write_point_csv(const std::string& path, const PointFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "dim=" << file.dim << ",classes=" << file.classes << ",role=" << file.role << '\n';
  for (const auto& row : file.rows) {
    if (row.x.size() != file.dim) throw InvalidInput("write_point_csv: row dimension mismatch");
    out << row.y;
    for (double v : row.x) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw Error("write to '" + path + "' failed");
}

PointFile read_point_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  PointFile file;
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput(path + ": missing header");
  {
    std::istringstream hs(line);
    std::string field;
    bool has_dim = false;
    bool has_classes = false;
    while (std::getline(hs, field, ',')) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) throw InvalidInput(path + ": malformed header field '" + field + "'");
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "dim") {
        file.dim = std::stoul(value);
        has_dim = true;
      } else if (key == "classes") {
        file.classes = std::stoul(value);
        has_classes = true;
      } else if (key == "role") {
        file.role = value;
      } else {
        throw InvalidInput(path + ": unknown header key '" + key + "'");
      }
    }
    if (!has_dim || !has_classes || file.role.empty()) {
      throw InvalidInput(path + ": header must carry dim, classes and role");
    }
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    LabeledVector row;
    const char* p = line.c_str();
    char* end = nullptr;
    row.y = static_cast<int>(std::strtol(p, &end, 10));
    if (end == p) throw InvalidInput(path + ":" + std::to_string(lineno) + ": bad label");
    p = end;
    while (*p == ',') {
      ++p;
      const double v = std::strtod(p, &end);
      if (end == p) throw InvalidInput(path + ":" + std::to_string(lineno) + ": bad value");
      row.x.push_back(v);
      p = end;
    }
    if (row.x.size() != file.dim) {
      throw InvalidInput(path + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(file.dim) + " values");
    }
    file.rows.push_back(std::move(row));
  }
  return file;
}

std::vector<LabeledVector> unlabeled_rows(std::span<const Vector> points) {
  std::vector<LabeledVector> rows;
  rows.reserve(points.size());
  for (const auto& p : points) rows.push_back({p, -1});
  return rows;
}

std::vector<LabeledVector> unlabeled_rows(std::span<const AuxVector> points) {
  std::vector<LabeledVector> rows;
  rows.reserve(points.size());
  for (const auto& p : points) rows.push_back({p.x, -1});
  return rows;
}

}  // namespace ares
