#include "beamtrack/channel.hpp"

#include <cmath>

namespace beamtrack {

namespace {

// Standard normal CDF.
double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Gaussian N(mean, sigma^2) mass over [lo, hi].
double gaussian_mass(double lo, double hi, double mean, double sigma) {
  return phi((hi - mean) / sigma) - phi((lo - mean) / sigma);
}

}  // namespace

double reflect_into_range(double x) {
  if (x >= -1.0 && x < 1.0) return x;
  double z = std::fmod(x + 1.0, 4.0);
  if (z < 0.0) z += 4.0;
  const double y = (z <= 2.0 ? z : 4.0 - z) - 1.0;
  if (y >= 1.0) return std::nextafter(1.0, -1.0);
  return y;
}

double evolve_aod(double prev, const MobilityModel& model, Rng& rng) {
  if (!(prev >= -1.0 && prev < 1.0))
    throw std::invalid_argument("evolve_aod: prev must lie in [-1, 1)");
  if (model.sigma_p < 0.0) throw std::invalid_argument("evolve_aod: sigma_p must be >= 0");
  return reflect_into_range(prev + model.sigma_p * rng.gaussian());
}

AodPrior discretize_aod_prior(double prev, const MobilityModel& model, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("discretize_aod_prior: grid_size must be >= 1");
  if (!(prev >= -1.0 && prev < 1.0))
    throw std::invalid_argument("discretize_aod_prior: prev must lie in [-1, 1)");
  if (model.sigma_p < 0.0)
    throw std::invalid_argument("discretize_aod_prior: sigma_p must be >= 0");

  AodPrior prior;
  prior.grid_size = grid_size;
  prior.mass = Eigen::VectorXd::Zero(grid_size);

  if (model.sigma_p == 0.0) {
    prior.mass[floor_bin(grid_size, prev)] = 1.0;
    return prior;
  }

  // Method of images for the reflected walk: preimages of y in [-1, 1) are
  // y + 4m and 2 - y + 4m, so each bin collects the matching CDF increments.
  const double sigma = model.sigma_p;
  for (int k = 0; k < grid_size; ++k) {
    const double lo = grid_angle(grid_size, k);
    const double hi = grid_angle(grid_size, k + 1);
    double m = 0.0;
    for (int img = -2; img <= 2; ++img) {
      const double shift = 4.0 * img;
      m += gaussian_mass(lo + shift, hi + shift, prev, sigma);
      m += gaussian_mass(2.0 - hi + shift, 2.0 - lo + shift, prev, sigma);
    }
    prior.mass[k] = m;
  }
  prior.mass /= prior.mass.sum();
  return prior;
}

Eigen::MatrixXcd channel_matrix(const std::vector<PathState>& paths, const ArrayConfig& tx,
                                const ArrayConfig& rx) {
  if (paths.empty()) throw std::invalid_argument("channel_matrix: need at least one path");
  const double scale = std::sqrt(static_cast<double>(tx.num_antennas) *
                                 static_cast<double>(rx.num_antennas));
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(rx.num_antennas, tx.num_antennas);
  for (const PathState& p : paths)
    h.noalias() += scale * p.gain * steering_vector(rx, p.aoa) *
                   steering_vector(tx, p.aod).adjoint();
  return h;
}

namespace {

template <typename BeamAt>
Measurement observe_impl(const PathState& path, std::size_t n_beams, BeamAt&& beam_at,
                         const ArrayConfig& tx, double noise_var, Rng& rng) {
  if (n_beams == 0) throw std::invalid_argument("observe: beam list is empty");
  if (noise_var < 0.0) throw std::invalid_argument("observe: noise_var must be >= 0");

  const Eigen::VectorXcd a = steering_vector(tx, path.aod);
  Measurement m;
  m.noise_var = noise_var;
  m.samples.resize(static_cast<Eigen::Index>(n_beams));
  m.beam_indices.reserve(n_beams);
  for (std::size_t i = 0; i < n_beams; ++i) {
    const BeamVector& beam = beam_at(i);
    m.samples[static_cast<Eigen::Index>(i)] =
        path.gain * a.dot(beam.coefficients) + rng.circular_gaussian(2.0 * noise_var);
    m.beam_indices.push_back(beam.index);
  }
  return m;
}

}  // namespace

Measurement observe(const PathState& path, std::span<const BeamVector> beams,
                    const ArrayConfig& tx, double noise_var, Rng& rng) {
  return observe_impl(
      path, beams.size(), [&](std::size_t i) -> const BeamVector& { return beams[i]; }, tx,
      noise_var, rng);
}

Measurement observe(const PathState& path, const Codebook& codebook,
                    std::span<const int> entries, const ArrayConfig& tx, double noise_var,
                    Rng& rng) {
  return observe_impl(
      path, entries.size(),
      [&](std::size_t i) -> const BeamVector& {
        return codebook.entries[static_cast<std::size_t>(entries[i])];
      },
      tx, noise_var, rng);
}

}  // namespace beamtrack
