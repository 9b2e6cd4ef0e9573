#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nodeflow/measures.hpp"

namespace nodeflow {

// Time-stamped ensembles t_0 = 0 < ... < t_G = T, all with identical n and d.
class MeasureTrajectory {
 public:
  MeasureTrajectory() = default;

  MeasureTrajectory(std::vector<double> times, std::vector<ParticleEnsemble> snapshots,
                    json provenance = json::object())
      : times_(std::move(times)), snapshots_(std::move(snapshots)), provenance_(std::move(provenance)) {
    if (times_.empty() || times_.size() != snapshots_.size())
      throw DomainError("trajectory: need one snapshot per grid time");
    if (times_.front() != 0.0) throw DomainError("trajectory: grid must start at t = 0");
    for (std::size_t j = 1; j < times_.size(); ++j)
      if (!(times_[j] > times_[j - 1])) throw DomainError("trajectory: grid must be strictly increasing");
    for (const auto& s : snapshots_)
      if (s.size() != snapshots_.front().size() || s.dim() != snapshots_.front().dim())
        throw DomainError("trajectory: snapshots differ in particle count or dimension");
  }

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<ParticleEnsemble>& snapshots() const noexcept { return snapshots_; }
  const ParticleEnsemble& snapshot(std::size_t j) const { return snapshots_.at(j); }
  const ParticleEnsemble& final() const { return snapshots_.back(); }
  const json& provenance() const noexcept { return provenance_; }
  std::size_t size() const noexcept { return times_.size(); }
  double horizon() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<ParticleEnsemble> snapshots_;
  json provenance_ = json::object();
};

// Uniform grid 0, T/G, ..., T. The last entry is exactly T.
inline std::vector<double> uniform_grid(double horizon, std::size_t intervals) {
  if (intervals == 0 || !(horizon > 0)) throw DomainError("uniform_grid: need T > 0 and at least one interval");
  std::vector<double> t(intervals + 1);
  for (std::size_t j = 0; j <= intervals; ++j) t[j] = horizon * static_cast<double>(j) / static_cast<double>(intervals);
  t.back() = horizon;
  return t;
}

// Directory layout: trajectory.json (grid, provenance) plus snap_<index>.csv per snapshot.
inline void save_trajectory(const MeasureTrajectory& traj, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  for (std::size_t j = 0; j < traj.size(); ++j) {
    const std::string name = "snap_" + std::to_string(j) + ".csv";
    io::write_atomic(dir / name, to_csv(traj.snapshot(j)));
    files.push_back(name);
  }
  json meta = {{"times", traj.times()},
               {"n", traj.snapshot(0).size()},
               {"dim", traj.snapshot(0).dim()},
               {"snapshots", files},
               {"config", traj.provenance().value("integrator", json::object())},
               {"provenance", traj.provenance()}};
  io::write_atomic(dir / "trajectory.json", meta.dump(2));
}

inline MeasureTrajectory load_trajectory(const std::filesystem::path& dir) {
  json meta = json::parse(io::read_file(dir / "trajectory.json"));
  auto times = meta.at("times").get<std::vector<double>>();
  std::vector<ParticleEnsemble> snaps;
  for (const auto& name : meta.at("snapshots")) snaps.push_back(ensemble_from_csv(io::read_file(dir / name.get<std::string>())));
  return MeasureTrajectory(std::move(times), std::move(snaps), meta.value("provenance", json::object()));
}

}  // namespace nodeflow
