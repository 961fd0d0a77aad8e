#pragma once

// Uniform linear array steering vectors, their angle derivatives, and the
// two-aperture beamforming codebook. Angles are normalized throughout:
// theta = sin(phi) in [-1, 1), so steering phases are linear in theta.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace beamtrack {

template <typename Scalar = double>
using ComplexVector = Eigen::Vector<std::complex<Scalar>, Eigen::Dynamic>;
template <typename Scalar = double>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

struct ArrayConfig {
  int num_antennas = 32;
  double spacing_ratio = 0.5;  // element spacing over wavelength, d / lambda
};

inline void validate(const ArrayConfig& cfg) {
  if (cfg.num_antennas < 1) throw std::invalid_argument("ArrayConfig: num_antennas must be >= 1");
  if (!(cfg.spacing_ratio > 0.0)) throw std::invalid_argument("ArrayConfig: spacing_ratio must be > 0");
}

namespace detail {
template <typename Scalar>
void check_angle(Scalar theta) {
  if (!(theta >= Scalar(-1) && theta <= Scalar(1)))
    throw std::invalid_argument("normalized angle must lie in [-1, 1]");
}
}  // namespace detail

// a(theta): element k equals exp(j 2 pi k (d/lambda) theta) / sqrt(N). Unit norm.
template <typename Scalar = double>
ComplexVector<Scalar> steering_vector(const ArrayConfig& cfg, Scalar theta) {
  validate(cfg);
  detail::check_angle(theta);
  const int n = cfg.num_antennas;
  const Scalar scale = Scalar(1) / std::sqrt(Scalar(n));
  const Scalar step = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(cfg.spacing_ratio) * theta;
  ComplexVector<Scalar> a(n);
  for (int k = 0; k < n; ++k)
    a[k] = std::polar(scale, Scalar(k) * step);
  return a;
}

// d a(theta) / d theta: element k equals (j 2 pi k d/lambda) a_k(theta).
template <typename Scalar = double>
ComplexVector<Scalar> steering_derivative(const ArrayConfig& cfg, Scalar theta) {
  ComplexVector<Scalar> d = steering_vector(cfg, theta);
  const Scalar w = Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(cfg.spacing_ratio);
  for (int k = 0; k < cfg.num_antennas; ++k)
    d[k] *= std::complex<Scalar>(Scalar(0), w * Scalar(k));
  return d;
}

// N x M matrix whose column k is a(-1 + 2k/M).
template <typename Scalar = double>
ComplexMatrix<Scalar> steering_matrix(const ArrayConfig& cfg, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("steering_matrix: grid_size must be >= 1");
  ComplexMatrix<Scalar> m(cfg.num_antennas, grid_size);
  for (int k = 0; k < grid_size; ++k)
    m.col(k) = steering_vector<Scalar>(cfg, Scalar(-1) + Scalar(2) * Scalar(k) / Scalar(grid_size));
  return m;
}

// Angular grid over [-1, 1): bin k is the interval [grid_angle(k), grid_angle(k+1)).
inline double grid_angle(int grid_size, int bin) {
  return -1.0 + 2.0 * static_cast<double>(bin) / static_cast<double>(grid_size);
}

// Index of the grid angle nearest to theta, clamped to [0, M-1].
inline int nearest_bin(int grid_size, double theta) {
  const int k = static_cast<int>(std::lround((theta + 1.0) * 0.5 * grid_size));
  return std::max(0, std::min(grid_size - 1, k));
}

// Index of the bin whose interval contains theta, consistent with
// grid_angle at the bin edges despite roundoff.
inline int floor_bin(int grid_size, double theta) {
  int k = static_cast<int>(std::floor((theta + 1.0) * 0.5 * grid_size));
  if (k > 0 && theta < grid_angle(grid_size, k)) {
    --k;
  } else if (k < grid_size - 1 && theta >= grid_angle(grid_size, k + 1)) {
    ++k;
  }
  return std::max(0, std::min(grid_size - 1, k));
}

enum class Aperture { Full, Half };

inline const char* to_string(Aperture a) { return a == Aperture::Full ? "full" : "half"; }

inline Aperture aperture_from_string(const std::string& s) {
  if (s == "full") return Aperture::Full;
  if (s == "half") return Aperture::Half;
  throw std::invalid_argument("unknown aperture class: " + s);
}

struct BeamVector {
  Eigen::VectorXcd coefficients;  // unit Euclidean norm
  double steer_angle = 0.0;       // normalized steering direction
  Aperture aperture = Aperture::Full;
  int index = -1;                 // position in the owning codebook
};

// 2M beams on the uniform angular grid: entries [0, M) steer the full array,
// entries [M, 2M) use the first half of the elements (wider mainlobe).
struct Codebook {
  ArrayConfig config;
  int grid_size = 0;  // M
  std::vector<BeamVector> entries;

  int entry_index(Aperture a, int bin) const {
    return (a == Aperture::Full ? 0 : grid_size) + bin;
  }
  const BeamVector& at(Aperture a, int bin) const { return entries[entry_index(a, bin)]; }
  int num_entries() const { return static_cast<int>(entries.size()); }
};

Codebook build_codebook(const ArrayConfig& cfg, int grid_size);

// |a(theta)^H f| evaluated on a uniform sweep of n_points angles; used for
// beam-pattern diagnostics.
Eigen::VectorXd beam_pattern(const ArrayConfig& cfg, const BeamVector& beam, int n_points);

}  // namespace beamtrack
