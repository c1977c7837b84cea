#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ares/numerics.hpp"
#include "ares/rng.hpp"

namespace ares {

struct LabeledVector {
  Vector x;
  int y = 0;

  bool operator==(const LabeledVector&) const = default;
};

/// One point of the auxiliary (fractal stand-in) set.
struct AuxVector {
  Vector x;

  bool operator==(const AuxVector&) const = default;
};

/// Generator name plus named numeric parameters. Unset parameters take
/// per-generator defaults.
struct GeneratorSpec {
  std::string name = "blobs";
  std::map<std::string, double> params;

  double param(const std::string& key, double fallback) const;
};

/// Axis-aligned bounding box.
struct Box {
  Vector lo;
  Vector hi;
};

Box bounding_box(std::span<const LabeledVector> points);

struct DatasetMeta {
  std::string generator;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  std::size_t classes = 0;
};

struct OodSet {
  std::string name;
  std::vector<Vector> points;
};

struct DataBundle {
  std::vector<LabeledVector> id_train;
  std::vector<LabeledVector> id_test;
  std::vector<AuxVector> aux;
  std::vector<OodSet> ood_eval;
  DatasetMeta meta;
};

/// Built-in generators: "blobs", "moons2d", "rings". Points are emitted in
/// class round-robin order so class counts differ by at most one.
std::vector<LabeledVector> make_id_dataset(const GeneratorSpec& spec, std::size_t n,
                                           std::size_t k, std::size_t d, Rng& rng);

/// Contractive affine map x -> A·x + b.
struct AffineMap {
  Matrix a;
  Vector b;

  Vector apply(std::span<const double> x) const;
};

/// Random contractive IFS: each linear part is scaled so its Frobenius norm
/// (an upper bound on the spectral norm) equals a factor drawn from
/// [0.3, 0.8].
std::vector<AffineMap> random_ifs(std::size_t d, std::size_t maps, Rng& rng);

inline constexpr std::size_t kChaosBurnIn = 20;

/// Chaos game: every output point starts at a uniform draw from [-1, 1]^d,
/// runs `burn_in` random maps that are discarded, and is the next iterate.
std::vector<Vector> chaos_game(std::span<const AffineMap> maps, std::size_t n,
                               std::size_t burn_in, Rng& rng);

/// Min-max rescale of each coordinate onto `box`. Constant coordinates land
/// on the box centre.
void rescale_to_box(std::vector<Vector>& points, const Box& box);

std::vector<AuxVector> make_aux_dataset(std::size_t n, std::size_t d, Rng& rng,
                                        std::size_t ifs_maps, const Box& box);

/// What an OOD generator needs to know about the ID world.
struct OodContext {
  GeneratorSpec id_spec;
  std::size_t classes = 0;
  std::size_t dim = 0;
  Box id_box;
};

/// Generators: "ring" (spherical shell, radius in [inner, outer]),
/// "uniform" (ID bounding box widened by `margin`), "shifted-blobs" (ID blob
/// centres pushed radially outward by `offset`).
std::vector<Vector> make_ood_eval(const GeneratorSpec& spec, std::size_t n,
                                  const OodContext& ctx, Rng& rng);

enum class TransformKind { rotate2d, flip, permute };

Vector rotate_pair(std::span<const double> x, std::span<const double> center,
                   std::size_t i, std::size_t j, double angle);
Vector flip_coordinate(std::span<const double> x, std::span<const double> center,
                       std::size_t i);
Vector swap_coordinates(std::span<const double> x, std::size_t i, std::size_t j);

/// Apply `kind` with randomly drawn coordinates (and angle for rotate2d).
Vector geometric_transform(std::span<const double> x, TransformKind kind,
                           std::span<const double> center, Rng& rng);

// ---------------------------------------------------------------------------
// Point CSV format
//
//   dim=<d>,classes=<k>,role=<id|aux|ood>
//   y,x0,x1,...            (y = -1 for unlabeled rows)
//
// Values are written with 17 significant digits, which round-trips doubles.

struct PointFile {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::string role;
  std::vector<LabeledVector> rows;
};

void write_point_csv(const std::string& path, const PointFile& file);
PointFile read_point_csv(const std::string& path);

std::vector<LabeledVector> unlabeled_rows(std::span<const Vector> points);
std::vector<LabeledVector> unlabeled_rows(std::span<const AuxVector> points);

}  // namespace ares
