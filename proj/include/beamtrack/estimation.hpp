#pragma once

// Maximum-likelihood joint (AoD, gain) estimation from one training cycle.
// The grid search minimizes the projection residual ||(I - Q(theta)) y||^2,
// equivalently maximizes |g(theta)^H y|^2 / ||g(theta)||^2 with
// g_i(theta) = a(theta)^H f_i.

#include "beamtrack/channel.hpp"

namespace beamtrack {

// Inclusive bin range into an angular grid.
struct Window {
  int lo = 0;
  int hi = 0;
  int size() const { return hi - lo + 1; }
  bool contains(int bin) const { return bin >= lo && bin <= hi; }
};

inline Window full_window(int grid_size) { return {0, grid_size - 1}; }

struct AodEstimate {
  double aod_hat = 0.0;                  // grid angle of the winning bin
  int bin = -1;                          // winning bin index
  std::complex<double> gain_hat{0, 0};   // least-squares gain at aod_hat
  double residual = 0.0;                 // attained minimum of the cost
  Window window;                         // searched range
};

// Gaussian prior on the searched angle. When supplied to the grid search the
// cost becomes residual + (noise_var / sigma^2) (theta - center)^2, the
// negative log-posterior in residual units. sigma <= 0 disables the penalty.
struct TrackingPrior {
  double center = 0.0;
  double sigma = 0.0;
  double noise_var = 0.0;
};

// Stacked beam response at theta: g_i = a(theta)^H f_i.
Eigen::VectorXcd beam_response(const ArrayConfig& cfg, double theta,
                               std::span<const BeamVector> beams);

// Rank-1 orthogonal projector onto g(theta); Hermitian, idempotent, trace 1.
// Throws DegenerateDirectionError when the beams have a null at theta.
Eigen::MatrixXcd projection(double theta, std::span<const BeamVector> beams,
                            const ArrayConfig& cfg);

// Response table on the M-point grid: entry (k, e) = a(theta_k)^H f_e.
// Columns follow codebook entry order.
Eigen::MatrixXcd response_table(const Codebook& codebook, int grid_size);

// Per-bin squared response norms ||g_k||^2 for a fixed beam set; cache for
// repeated searches with the same beams.
Eigen::VectorXd response_norms(const Eigen::MatrixXcd& table, std::span<const int> beam_entries);

// Grid search over `window` given precomputed responses. `beam_entries` are
// column indices into `table` matching the sample order. A prior, when given,
// turns the ML search into the MAP search used by the closed-loop tracker.
AodEstimate ml_estimate_with_table(const Eigen::VectorXcd& samples,
                                   std::span<const int> beam_entries,
                                   const Eigen::MatrixXcd& table, Window window,
                                   const Eigen::VectorXd* cached_norms = nullptr,
                                   const TrackingPrior* prior = nullptr);

// Grid search building responses on the fly from the codebook.
AodEstimate ml_estimate(const Measurement& m, const Codebook& codebook, int grid_size,
                        Window window);

// Search range for the next estimate: the open interval strictly between the
// two training beams' steer angles (the beam bins themselves are excluded;
// at high SNR the two-sample fit otherwise snaps onto off-grid beam-aligned
// hypotheses), widened to cover at least prev_aod +/- 4 sigma_p, clamped.
Window search_window(double prev_aod, const BeamVector& beam_i, const BeamVector& beam_j,
                     const MobilityModel& model, int grid_size);

}  // namespace beamtrack
