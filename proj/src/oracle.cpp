#include "scdf/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "scdf/scenario.hpp"

namespace scdf {

std::size_t CollisionGrid::num_occupied() const {
  return static_cast<std::size_t>(
      std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

double CollisionGrid::occupied_fraction() const {
  return occupancy_.empty()
             ? 0.0
             : static_cast<double>(num_occupied()) / occupancy_.size();
}

double CollisionGrid::spacing(int dim) const {
  return (bounds_[dim].high - bounds_[dim].low) / (resolution_ - 1);
}

double CollisionGrid::lattice_diagonal() const {
  double sum = 0.0;
  for (int d = 0; d < dof(); ++d) sum += spacing(d) * spacing(d);
  return std::sqrt(sum);
}

Config CollisionGrid::LatticePoint(std::size_t index) const {
  Config q(dof());
  for (int d = 0; d < dof(); ++d) {
    const std::size_t i = index % resolution_;
    index /= resolution_;
    q(d) = bounds_[d].low + static_cast<double>(i) * spacing(d);
  }
  return q;
}

std::optional<std::pair<Eigen::Index, double>> CollisionGrid::NearestBoundary(
    const Config& q) const {
  if (boundary_.cols() == 0) return std::nullopt;
  Eigen::Index best = 0;
  const double d2 = (boundary_.colwise() - q).colwise().squaredNorm().minCoeff(&best);
  return std::make_pair(best, std::sqrt(d2));
}

class GridBuilder {
 public:
  static CollisionGrid Build(const RobotModel& model, int resolution,
                             const std::function<bool(const Config&)>& hit) {
    if (resolution < 8) {
      throw std::invalid_argument("grid resolution must be at least 8");
    }
    const int dof = model.dof();
    std::size_t cells = 1;
    for (int d = 0; d < dof; ++d) {
      cells *= static_cast<std::size_t>(resolution);
      if (cells > kMaxGridCells) {
        throw ResourceError(fmt::format(
            "grid {}^{} exceeds the {} cell limit", resolution, dof,
            kMaxGridCells));
      }
    }
    CollisionGrid grid;
    grid.resolution_ = resolution;
    grid.bounds_ = model.joint_limits;
    grid.occupancy_.assign(cells, 0);
    for (std::size_t i = 0; i < cells; ++i) {
      grid.occupancy_[i] = hit(grid.LatticePoint(i)) ? 1 : 0;
    }
    ExtractBoundary(&grid);
    return grid;
  }

 private:
  static void ExtractBoundary(CollisionGrid* grid) {
    const int dof = grid->dof();
    const std::size_t n = static_cast<std::size_t>(grid->resolution_);
    std::vector<std::size_t> stride(dof, 1);
    for (int d = 1; d < dof; ++d) stride[d] = stride[d - 1] * n;
    std::vector<std::size_t> boundary;
    for (std::size_t i = 0; i < grid->occupancy_.size(); ++i) {
      if (!grid->occupancy_[i]) continue;
      bool has_free_neighbor = false;
      for (int d = 0; d < dof && !has_free_neighbor; ++d) {
        const std::size_t coord = (i / stride[d]) % n;
        if (coord > 0 && !grid->occupancy_[i - stride[d]]) has_free_neighbor = true;
        if (coord + 1 < n && !grid->occupancy_[i + stride[d]]) has_free_neighbor = true;
      }
      if (has_free_neighbor) boundary.push_back(i);
    }
    grid->boundary_.resize(dof, static_cast<Eigen::Index>(boundary.size()));
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      grid->boundary_.col(static_cast<Eigen::Index>(k)) =
          grid->LatticePoint(boundary[k]);
    }
  }
};

CollisionGrid BuildGrid(const RobotModel& model, const GeometryVector& g,
                        int resolution) {
  const std::span<const GeometryVector> one(&g, 1);
  return GridBuilder::Build(model, resolution, [&](const Config& q) {
    return CheckObstacleCollision(model, q, one);
  });
}

CollisionGrid BuildSelfGrid(const RobotModel& model, int resolution) {
  return GridBuilder::Build(model, resolution, [&](const Config& q) {
    return CheckSelfCollision(model, q);
  });
}

CollisionGrid BuildUnionGrid(const RobotModel& model,
                             std::span<const GeometryVector> obstacles,
                             int resolution) {
  return GridBuilder::Build(model, resolution, [&](const Config& q) {
    return CheckObstacleCollision(model, q, obstacles);
  });
}

namespace {

double Signed(const CollisionGrid& grid, const Config& q, bool colliding,
              double sentinel) {
  const auto nearest = grid.NearestBoundary(q);
  const double magnitude = nearest ? nearest->second : sentinel;
  return colliding ? -magnitude : magnitude;
}

}  // namespace

double SignedDistance(const CollisionGrid& grid, const Config& q,
                      const RobotModel& model, const GeometryVector* g,
                      double sentinel) {
  const bool colliding =
      g ? CheckObstacleCollision(model, q, std::span<const GeometryVector>(g, 1))
        : CheckSelfCollision(model, q);
  return Signed(grid, q, colliding, sentinel);
}

double SignedDistanceUnion(const CollisionGrid& grid, const Config& q,
                           const RobotModel& model,
                           std::span<const GeometryVector> obstacles,
                           double sentinel) {
  return Signed(grid, q, CheckObstacleCollision(model, q, obstacles), sentinel);
}

double MinCombine(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("min-combination of an empty list");
  }
  return *std::min_element(values.begin(), values.end());
}

Dataset GenerateDataset(const RobotModel& model, const ObstacleSampler& sampler,
                        int num_obstacles, int samples_per_obstacle,
                        int resolution, std::uint64_t seed) {
  if (num_obstacles <= 0 || samples_per_obstacle <= 0) {
    throw std::invalid_argument("dataset counts must be positive");
  }
  constexpr int kMaxRedraws = 1000;
  Dataset dataset;
  dataset.header = {ShapeKindName(sampler.kind), model.dof(),
                    GeometrySize(sampler.kind), resolution, seed,
                    HexDigest(HashJson(RobotToJson(model)))};
  dataset.samples.reserve(static_cast<std::size_t>(num_obstacles) *
                          samples_per_obstacle);
  for (int i = 0; i < num_obstacles; ++i) {
    std::mt19937_64 rng(StreamSeed(seed, static_cast<std::uint64_t>(i)));
    GeometryVector g;
    CollisionGrid grid;
    int redraws = 0;
    do {
      if (redraws++ > kMaxRedraws) {
        throw std::invalid_argument(
            "obstacle sampler never produces a reachable obstacle");
      }
      g = sampler.Sample(rng);
      grid = BuildGrid(model, g, resolution);
    } while (grid.num_boundary() == 0);
    for (int k = 0; k < samples_per_obstacle; ++k) {
      Config q = SampleUniform(model, rng);
      const double value = SignedDistance(grid, q, model, &g);
      dataset.samples.push_back({std::move(q), g, value});
    }
  }
  return dataset;
}

Dataset GenerateSelfDataset(const RobotModel& model, int num_samples,
                            int resolution, std::uint64_t seed) {
  if (num_samples <= 0) throw std::invalid_argument("num_samples must be positive");
  Dataset dataset;
  dataset.header = {"self", model.dof(), 0, resolution, seed,
                    HexDigest(HashJson(RobotToJson(model)))};
  const CollisionGrid grid = BuildSelfGrid(model, resolution);
  std::mt19937_64 rng(StreamSeed(seed, 0));
  GeometryVector empty;
  empty.params.resize(0);
  for (int k = 0; k < num_samples; ++k) {
    Config q = SampleUniform(model, rng);
    const double value = SignedDistance(grid, q, model, nullptr);
    dataset.samples.push_back({std::move(q), empty, value});
  }
  return dataset;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const DatasetHeader& h = dataset.header;
  out << fmt::format("# kind={} D={} G={} N={} seed={} robot={}\n",
                     h.geometry_kind, h.dof, h.geometry_size, h.resolution,
                     h.seed, h.robot_hash);
  std::string line;
  for (const SignedDistanceSample& s : dataset.samples) {
    line.clear();
    for (Eigen::Index i = 0; i < s.q.size(); ++i) {
      line += fmt::format("{},", s.q(i));
    }
    for (Eigen::Index i = 0; i < s.g.params.size(); ++i) {
      line += fmt::format("{},", s.g.params(i));
    }
    line += fmt::format("{}\n", s.value);
    out << line;
  }
}

Dataset LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw CorruptFileError(path.string() + ": missing dataset header");
  }
  Dataset dataset;
  DatasetHeader& h = dataset.header;
  {
    std::istringstream header(line.substr(2));
    std::string field;
    while (header >> field) {
      const auto eq = field.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = field.substr(0, eq);
      const std::string value = field.substr(eq + 1);
      if (key == "kind") h.geometry_kind = value;
      else if (key == "D") h.dof = std::stoi(value);
      else if (key == "G") h.geometry_size = std::stoi(value);
      else if (key == "N") h.resolution = std::stoi(value);
      else if (key == "seed") h.seed = std::stoull(value);
      else if (key == "robot") h.robot_hash = value;
    }
  }
  if (h.dof <= 0 || h.geometry_size < 0 || h.geometry_kind.empty()) {
    throw CorruptFileError(path.string() + ": incomplete dataset header");
  }
  const bool self = h.geometry_kind == "self";
  const ShapeKind kind = self ? ShapeKind::kCircle : ParseShapeKind(h.geometry_kind);
  const int width = h.dof + h.geometry_size + 1;
  std::vector<double> row(width);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    for (int c = 0; c < width; ++c) {
      std::size_t used = 0;
      try {
        row[c] = std::stod(line.substr(pos), &used);
      } catch (const std::exception&) {
        throw CorruptFileError(path.string() + ": malformed row");
      }
      pos += used;
      if (c + 1 < width) {
        if (pos >= line.size() || line[pos] != ',') {
          throw CorruptFileError(path.string() + ": short row");
        }
        ++pos;
      }
    }
    SignedDistanceSample s;
    s.q = Eigen::Map<const Eigen::VectorXd>(row.data(), h.dof);
    s.g.kind = kind;
    s.g.params = Eigen::Map<const Eigen::VectorXd>(row.data() + h.dof,
                                                   h.geometry_size);
    s.value = row[width - 1];
    dataset.samples.push_back(std::move(s));
  }
  return dataset;
}

}  // namespace scdf
