#pragma once

#include "flockioc/hierarchy.hpp"
#include "flockioc/types.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flockioc {

/// Raw position samples of one agent on one flight, as ingested from CSV.
struct RawTrack {
  std::string flight_id;
  std::string pigeon_id;
  std::vector<double> t;     ///< strictly increasing timestamps, seconds
  std::vector<Vec3> position;  ///< meters in a flight-local frame

  std::size_t size() const { return t.size(); }
  /// Mean sample period; throws unless spacing is uniform within `tol` seconds.
  double sample_period(double tol = 1e-6) const;
};

enum class TrackFormat {
  kAuto,       ///< decide from the CSV header
  kCartesian,  ///< columns flight_id,pigeon_id,t,x,y,z (meters)
  kGeodetic,   ///< columns flight_id,pigeon_id,t,lat,lon,alt (degrees, meters)
};

/// Loads every track in a CSV file. Geodetic rows are projected to local
/// tangent-plane meters (equirectangular, Earth radius 6371000 m) anchored at
/// the time-earliest sample of each flight; altitude is kept as recorded.
/// Rows may appear in any order; tracks come back sorted by (flight, pigeon)
/// with time-sorted samples. Malformed rows report their line number.
std::vector<RawTrack> load_tracks(const std::string& path,
                                  TrackFormat format = TrackFormat::kAuto);
std::vector<RawTrack> parse_tracks(std::istream& in, TrackFormat format,
                                   const std::string& origin);

/// Writes tracks in the Cartesian CSV schema (full double precision).
void write_tracks_csv(const std::string& path, const std::vector<RawTrack>& tracks);

/// Keeps samples with t in [t_start, t_end] (either bound optional).
RawTrack clip_time_window(const RawTrack& track, std::optional<double> t_start,
                          std::optional<double> t_end);

/// Linear-interpolation resampling onto a uniform grid with period dt,
/// spanning [t.front(), t.back()].
RawTrack resample_track(const RawTrack& track, double dt);

/// Recovers velocities from positions and accelerations from those velocities
/// by central differences (second-order one-sided stencils at the endpoints).
/// An odd `smoothing_window` > 1 first applies a centered moving average to
/// the positions. Requires at least five samples on a uniform grid.
SampledTrajectory differentiate(const RawTrack& track, int smoothing_window = 1);

/// Desired trajectory of a follower: its leader delayed by `delay` seconds.
/// Samples earlier than t0 + delay hold the leader's first sample. The delay
/// must be a nonnegative integer multiple of the grid period (within 1e-9 s).
SampledTrajectory make_desired(const SampledTrajectory& leader, double delay);

/// Everything needed to run inverse optimal control for one follower on one
/// flight: its observed trajectory and the desired trajectory it was tracking.
struct PairDataset {
  std::string follower_id;
  std::string leader_id;
  std::string flight_id;
  double delay = 0.0;
  SampledTrajectory traj;     ///< follower
  SampledTrajectory desired;  ///< delayed leader
};

struct PipelineOptions {
  bool trim_warmup = false;  ///< drop the first delay/dt samples of each dataset
  int smoothing_window = 1;  ///< odd moving-average width for differentiate()
};

/// Builds one dataset per (hierarchy pair, requested flight). Leader and
/// follower grids are aligned by intersecting their time windows; a missing
/// track or mismatched sample period is an error naming the flight and agent.
std::vector<PairDataset> build_pair_datasets(const std::vector<RawTrack>& tracks,
                                             const FlockHierarchy& hierarchy,
                                             const std::vector<std::string>& flights,
                                             const PipelineOptions& options = {});

/// One JSON document (grid metadata plus state/control/desired arrays).
std::string dataset_to_json(const PairDataset& dataset);

}  // namespace flockioc
