#pragma once

// Closed-loop Monte-Carlo harness for the tracking protocol: a beam-cycling
// cold start, then two training beams per cycle steered by the fed-back
// estimate, with the beam-cycling and fixed-pair baselines. All schemes in a
// comparison consume identical trajectories and gain sequences (common
// random numbers); trial workers own independent RNG streams derived from
// (seed, trial, stream).
//
// The tracker couples four pieces: the LUT-selected pair centered on the
// fed-back estimate, a search window capped at the pair's alias-free radius,
// a prior-weighted (MAP) grid search, and loss recovery that falls back to a
// full beam-cycling shot when the received energy stays inconsistent with a
// locked state or the estimate clamps at the window edge. The fixed-pair
// baseline deliberately has none of this: it runs the plain windowed ML the
// heuristic describes.

#include "beamtrack/beam_select.hpp"
#include "beamtrack/estimation.hpp"

#include <iosfwd>
#include <string>

namespace beamtrack {

enum class SchemeKind { Proposed, BeamCycling, FixedPair };

enum class GainModel { Rayleigh, Fixed };

struct SchemeSpec {
  SchemeKind kind = SchemeKind::Proposed;
  int beams = 32;        // BeamCycling: training beams per cycle
  int offset_bins = 5;   // FixedPair: beam offset from the fed-back estimate

  std::string name() const;
  int beams_per_cycle() const;
  // Accepts "proposed", "beam-cycling-<n>", "fixed-pair-<k>".
  static SchemeSpec parse(const std::string& text);
};

struct SimConfig {
  int n_tx = 32;
  int n_rx = 32;
  int grid_size = 192;      // codebook grid M
  int est_grid_size = 0;    // estimation grid; 0 means same as grid_size
  double spacing_ratio = 0.5;
  double sigma_p = 0.05;
  std::vector<double> snr_db_list = {0.0, 5.0, 10.0, 15.0, 20.0};
  int horizon = 100;        // tracked cycles per trajectory
  int trials = 1000;
  int warmup_cycles = 5;    // cycles excluded from aggregate errors
  std::uint64_t seed = 1;
  int feedback_delay_cycles = 1;  // 0 = genie centering on the current true AoD
  int cold_start_beams = 32;
  bool init_on_grid = false;      // snap the initial AoD to the estimation grid
  // Initial angles are drawn uniformly from [-init_range, init_range]; the
  // default keeps trajectories clear of the endfire region where a ULA
  // cannot distinguish theta ~ +1 from theta ~ -1.
  double init_range = 0.8;
  GainModel gain_model = GainModel::Rayleigh;
  bool map_weighting = true;   // prior-weighted tracker search
  bool reacquisition = true;   // beam-cycling fallback on detected loss
  std::vector<SchemeSpec> schemes = {
      {SchemeKind::Proposed, 32, 5},
      {SchemeKind::BeamCycling, 32, 5},
      {SchemeKind::FixedPair, 32, 5},
  };
  std::vector<double> lut_sigma_p = {0.01, 0.02, 0.05, 0.1, 0.2};
};

void validate(const SimConfig& cfg);

// SNR = E|beta|^2 / (2 sigma^2) with E|beta|^2 = 1.
double snr_db_to_noise_var(double snr_db);

struct TraceRecord {
  int t = 0;
  double true_aod = 0.0;
  double est_aod = 0.0;
  double abs_err = 0.0;
  bool out_of_window = false;
  int beam_i = -1;  // pair for two-beam cycles; first/last training beam otherwise
  int beam_j = -1;
};

struct TrackingTrace {
  std::string scheme;
  std::vector<TraceRecord> records;
};

struct MseRow {
  std::string scheme;
  double snr_db = 0.0;
  double sigma_p = 0.0;
  double mse = 0.0;
  int trials = 0;
  int beams_per_cycle = 0;
};

struct MseReport {
  std::vector<MseRow> rows;
};

// AoD/AoA/gain states for cycles 0..horizon; state 0 feeds the cold start.
struct Trajectory {
  std::vector<PathState> states;
};

// Immutable precomputed state shared by all trial workers.
class SimContext {
 public:
  explicit SimContext(const SimConfig& cfg);
  SimContext(const SimConfig& cfg, LookupTable lut);

  const SimConfig& config() const { return cfg_; }
  const Codebook& codebook() const { return codebook_; }
  const LookupTable& lut() const { return lut_; }
  int est_grid() const { return est_grid_; }
  const Eigen::MatrixXcd& est_table() const { return est_table_; }
  const ArrayConfig& tx_array() const { return codebook_.config; }
  // Alias-free window half-width (estimation-grid bins) of the LUT pair
  // tracked at the configured sigma_p.
  int tracking_radius() const { return tracking_radius_; }
  // Full-aperture codebook entries at n uniformly spaced directions.
  std::vector<int> cycling_entries(int n) const;

 private:
  SimConfig cfg_;
  Codebook codebook_;
  LookupTable lut_;
  int est_grid_ = 0;
  Eigen::MatrixXcd est_table_;
  int tracking_radius_ = 1;
};

Trajectory make_trajectory(const SimContext& ctx, std::uint64_t trial);

// One beam-cycling shot over the full grid; returns the initial estimate.
double cold_start(const SimContext& ctx, const PathState& initial, double noise_var,
                  Rng& noise_rng);

// The proposed two-beam tracker (LUT-selected pair, windowed search).
TrackingTrace run_tracking(const SimContext& ctx, const Trajectory& traj, double noise_var,
                           Rng& noise_rng);

// BeamCycling or FixedPair baselines.
TrackingTrace run_baseline(const SimContext& ctx, const SchemeSpec& scheme,
                           const Trajectory& traj, double noise_var, Rng& noise_rng);

TrackingTrace run_scheme(const SimContext& ctx, const SchemeSpec& scheme, const Trajectory& traj,
                         double noise_var, Rng& noise_rng);

// Noise stream for one (trial, scheme) cell; identical across SNR points so
// sweeps are coupled through common random numbers.
Rng noise_stream(const SimContext& ctx, std::uint64_t trial, const SchemeSpec& scheme);

// Full sweep over config schemes x SNR list. Worker threads are capped by
// max_threads; the reduction order is fixed, so results do not depend on the
// thread count. The convenience overload reads BEAMTRACK_THREADS.
MseReport run_mse_sweep(const SimContext& ctx, int max_threads);
MseReport run_mse_sweep(const SimConfig& cfg);

// Worker cap from BEAMTRACK_THREADS, defaulting to the hardware concurrency.
int worker_count();

void write_trace_csv(std::ostream& out, const TrackingTrace& trace);
void write_report_csv(std::ostream& out, const MseReport& report);

}  // namespace beamtrack
