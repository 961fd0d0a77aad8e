#include "beamtrack/array_geometry.hpp"

namespace beamtrack {

Codebook build_codebook(const ArrayConfig& cfg, int grid_size) {
  validate(cfg);
  if (grid_size < 2) throw std::invalid_argument("build_codebook: grid_size must be >= 2");
  if (cfg.num_antennas % 2 != 0)
    throw std::invalid_argument("build_codebook: half-aperture beams need an even antenna count");

  Codebook cb;
  cb.config = cfg;
  cb.grid_size = grid_size;
  cb.entries.reserve(2 * static_cast<std::size_t>(grid_size));

  const int n = cfg.num_antennas;
  const int half = n / 2;
  const double renorm = std::sqrt(2.0);  // restores unit norm after zeroing N/2 elements

  for (int k = 0; k < grid_size; ++k) {
    BeamVector b;
    b.steer_angle = grid_angle(grid_size, k);
    b.coefficients = steering_vector(cfg, b.steer_angle);
    b.aperture = Aperture::Full;
    b.index = k;
    cb.entries.push_back(std::move(b));
  }
  for (int k = 0; k < grid_size; ++k) {
    BeamVector b;
    b.steer_angle = grid_angle(grid_size, k);
    b.coefficients = steering_vector(cfg, b.steer_angle);
    b.coefficients.tail(n - half).setZero();
    b.coefficients.head(half) *= renorm;
    b.aperture = Aperture::Half;
    b.index = grid_size + k;
    cb.entries.push_back(std::move(b));
  }
  return cb;
}

Eigen::VectorXd beam_pattern(const ArrayConfig& cfg, const BeamVector& beam, int n_points) {
  if (n_points < 2) throw std::invalid_argument("beam_pattern: need at least two sweep points");
  Eigen::VectorXd pattern(n_points);
  for (int i = 0; i < n_points; ++i) {
    const double theta = -1.0 + 2.0 * i / (n_points - 1.0);
    pattern[i] = std::abs(steering_vector(cfg, theta).dot(beam.coefficients));
  }
  return pattern;
}

}  // namespace beamtrack
