#pragma once

// Single-path time-varying channel: Markov dynamics of the departure angle,
// its discretized prior, per-cycle Rayleigh gains, and the training-beam
// observation model (two beams for the tracker, N beams for cycling).

#include "beamtrack/array_geometry.hpp"

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace beamtrack {

// Seeded random stream. Workers derive independent streams from
// (seed, stream, substream); no draw ever comes from ambient entropy.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : Rng(seed, 0, 0) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      static_cast<std::uint32_t>(substream),
                      static_cast<std::uint32_t>(substream >> 32)};
    engine_.seed(seq);
  }

  double gaussian() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  // CN(0, total_variance): real and imaginary parts i.i.d. with half the variance each.
  std::complex<double> circular_gaussian(double total_variance = 1.0) {
    const double s = std::sqrt(0.5 * total_variance);
    return {s * gaussian(), s * gaussian()};
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

struct PathState {
  double aod = 0.0;                    // theta^b in [-1, 1)
  double aoa = 0.0;                    // theta^m in [-1, 1)
  std::complex<double> gain{1.0, 0.0}; // beta
};

struct MobilityModel {
  double sigma_p = 0.05;  // std of the per-cycle Gaussian angle increment
};

struct Measurement {
  Eigen::VectorXcd samples;       // one complex sample per training beam
  std::vector<int> beam_indices;  // codebook entries that produced the samples
  double noise_var = 0.0;         // sigma^2; each complex sample has noise variance 2 sigma^2
};

struct AodPrior {
  int grid_size = 0;
  Eigen::VectorXd mass;  // nonnegative, sums to 1
};

// Folds x into [-1, 1) by mirror reflection at the boundaries.
double reflect_into_range(double x);

// One Markov step: prev + N(0, sigma_p^2), reflected to stay in range.
double evolve_aod(double prev, const MobilityModel& model, Rng& rng);

// Bin masses of the one-step-ahead AoD distribution on the M-point grid,
// with out-of-range mass folded back by reflection. sigma_p = 0 collapses to
// unit mass on the bin containing prev.
AodPrior discretize_aod_prior(double prev, const MobilityModel& model, int grid_size);

// Per-cycle path gain: CN(0, 1).
inline std::complex<double> sample_gain(Rng& rng) { return rng.circular_gaussian(1.0); }

// H = sqrt(Nb Nm) sum_l beta_l a_m(aoa_l) a_b(aod_l)^H, an Nm x Nb matrix.
Eigen::MatrixXcd channel_matrix(const std::vector<PathState>& paths, const ArrayConfig& tx,
                                const ArrayConfig& rx);

// Receives one sample per beam under ideal combining at the mobile:
// sample_i = beta a_b(aod)^H f_i + CN(0, 2 sigma^2).
Measurement observe(const PathState& path, std::span<const BeamVector> beams,
                    const ArrayConfig& tx, double noise_var, Rng& rng);

// Same, with beams referenced by codebook entry index (no copies).
Measurement observe(const PathState& path, const Codebook& codebook,
                    std::span<const int> entries, const ArrayConfig& tx, double noise_var,
                    Rng& rng);

}  // namespace beamtrack
