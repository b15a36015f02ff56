#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "scdf/geometry.hpp"

namespace scdf {

// Collision status of every point of an N^D lattice spanning the joint
// limits (endpoints included), plus the occupied lattice points that have at
// least one free face-neighbor. The boundary points stand in for the
// obstacle-region boundary when measuring configuration distances.
class CollisionGrid {
 public:
  CollisionGrid() = default;

  int resolution() const { return resolution_; }
  int dof() const { return static_cast<int>(bounds_.size()); }
  const std::vector<JointLimit>& bounds() const { return bounds_; }
  std::size_t size() const { return occupancy_.size(); }

  bool occupied(std::size_t index) const { return occupancy_[index] != 0; }
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
  std::size_t num_occupied() const;
  double occupied_fraction() const;

  // D x M matrix, one boundary lattice configuration per column.
  const Eigen::MatrixXd& boundary_points() const { return boundary_; }
  std::size_t num_boundary() const {
    return static_cast<std::size_t>(boundary_.cols());
  }

  Config LatticePoint(std::size_t index) const;
  double spacing(int dim) const;
  // Length of the diagonal of one lattice cell.
  double lattice_diagonal() const;

  // Index of the nearest boundary point and its distance, or nullopt when
  // the boundary is empty.
  std::optional<std::pair<Eigen::Index, double>> NearestBoundary(
      const Config& q) const;

 private:
  friend class GridBuilder;

  int resolution_ = 0;
  std::vector<JointLimit> bounds_;
  std::vector<std::uint8_t> occupancy_;
  Eigen::MatrixXd boundary_;
};

// Largest lattice (in cells) BuildGrid accepts.
inline constexpr std::size_t kMaxGridCells = std::size_t{1} << 24;

// Grids the collision status of `model` against the single obstacle `g`.
// Throws ResourceError when N^D exceeds kMaxGridCells and
// std::invalid_argument when N < 8.
CollisionGrid BuildGrid(const RobotModel& model, const GeometryVector& g,
                        int resolution);
// Self-collision grid (no geometry vector).
CollisionGrid BuildSelfGrid(const RobotModel& model, int resolution);
// All obstacles at once; used as the reference for the min-combination rule.
CollisionGrid BuildUnionGrid(const RobotModel& model,
                             std::span<const GeometryVector> obstacles,
                             int resolution);

// Distance from q to the nearest boundary point, signed by the exact
// collision status of q against `g` (self-collision when g is null).
// Returns +/-sentinel when the boundary is empty.
double SignedDistance(const CollisionGrid& grid, const Config& q,
                      const RobotModel& model, const GeometryVector* g,
                      double sentinel = kDistanceSentinel);
// Same, for a union grid built from `obstacles`.
double SignedDistanceUnion(const CollisionGrid& grid, const Config& q,
                           const RobotModel& model,
                           std::span<const GeometryVector> obstacles,
                           double sentinel = kDistanceSentinel);

// Smallest of the given signed distances. Throws std::invalid_argument on an
// empty list.
double MinCombine(std::span<const double> values);

struct SignedDistanceSample {
  Config q;
  // Empty params for the self-collision dataset.
  GeometryVector g;
  double value = 0.0;
};

struct DatasetHeader {
  // "circle", "aabb" or "self".
  std::string geometry_kind;
  int dof = 0;
  int geometry_size = 0;
  int resolution = 0;
  std::uint64_t seed = 0;
  std::string robot_hash;
};

struct Dataset {
  DatasetHeader header;
  std::vector<SignedDistanceSample> samples;
};

// For each of `num_obstacles` obstacles drawn from `sampler`, grids the
// configuration space and labels `samples_per_obstacle` uniform
// configurations. Obstacles whose grid has no boundary (unreachable or
// covering everything) are redrawn. Deterministic in `seed`: obstacle i uses
// its own stream.
Dataset GenerateDataset(const RobotModel& model, const ObstacleSampler& sampler,
                        int num_obstacles, int samples_per_obstacle,
                        int resolution, std::uint64_t seed);
Dataset GenerateSelfDataset(const RobotModel& model, int num_samples,
                            int resolution, std::uint64_t seed);

// CSV: '#'-prefixed header lines with D, G, N, seed and robot hash, then one
// row per sample (q_1..q_D, g_1..g_G, value) at round-trip precision.
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset LoadDataset(const std::filesystem::path& path);

}  // namespace scdf
