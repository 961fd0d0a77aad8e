#include "beamtrack/crlb.hpp"

#include "beamtrack/errors.hpp"

#include <cmath>
#include <limits>

namespace beamtrack {

namespace {

constexpr double kNullResponse = 1e-15;
constexpr double kBracketFloor = 1e-13;  // relative to ||g'||^2
constexpr double kPenaltyFactor = 1e3;

void check_inputs(const CrlbInputs& inp) {
  validate(inp.array);
  detail::check_angle(inp.theta);
  if (!(inp.noise_var > 0.0)) throw std::invalid_argument("crlb_aod: noise_var must be > 0");
  if (!(std::abs(inp.gain) > 0.0)) throw std::invalid_argument("crlb_aod: |gain| must be > 0");
}

// Responses of the pair at theta: r = a^H f, d = a'^H f.
struct PairResponse {
  std::complex<double> r1, r2, d1, d2;
};

PairResponse responses_at(const ArrayConfig& cfg, const BeamVector& bi, const BeamVector& bj,
                          double theta) {
  const Eigen::VectorXcd a = steering_vector(cfg, theta);
  const Eigen::VectorXcd da = steering_derivative(cfg, theta);
  return {a.dot(bi.coefficients), a.dot(bj.coefficients), da.dot(bi.coefficients),
          da.dot(bj.coefficients)};
}

}  // namespace

std::optional<double> crlb_point(std::complex<double> r1, std::complex<double> r2,
                                 std::complex<double> d1, std::complex<double> d2,
                                 double gain_power, double noise_var) {
  const double ng = std::norm(r1) + std::norm(r2);
  const double nd = std::norm(d1) + std::norm(d2);
  if (ng < kNullResponse || nd <= 0.0) return std::nullopt;
  const std::complex<double> cross = std::conj(d1) * r1 + std::conj(d2) * r2;
  const double bracket = nd - std::norm(cross) / ng;
  if (bracket <= nd * kBracketFloor) return std::nullopt;
  return noise_var / (gain_power * bracket);
}

double crlb_aod(const CrlbInputs& inp) {
  check_inputs(inp);
  const PairResponse p = responses_at(inp.array, inp.beam_i, inp.beam_j, inp.theta);
  const auto value =
      crlb_point(p.r1, p.r2, p.d1, p.d2, std::norm(inp.gain), inp.noise_var);
  if (!value)
    throw InformationDeficitError("crlb_aod: beams carry no angle information at theta");
  return *value;
}

std::optional<double> try_crlb_aod(const CrlbInputs& inp) {
  check_inputs(inp);
  const PairResponse p = responses_at(inp.array, inp.beam_i, inp.beam_j, inp.theta);
  return crlb_point(p.r1, p.r2, p.d1, p.d2, std::norm(inp.gain), inp.noise_var);
}

double average_crlb_binned(const Eigen::VectorXcd& r1, const Eigen::VectorXcd& r2,
                           const Eigen::VectorXcd& d1, const Eigen::VectorXcd& d2,
                           const AodPrior& prior, double gain_power, double noise_var) {
  const int m = prior.grid_size;
  if (r1.size() != m || r2.size() != m || d1.size() != m || d2.size() != m)
    throw std::invalid_argument("average_crlb: response length does not match the prior grid");
  if (std::abs(prior.mass.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("average_crlb: prior is not normalized");

  std::vector<std::optional<double>> bins(static_cast<std::size_t>(m));
  double max_finite = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    bins[static_cast<std::size_t>(k)] =
        crlb_point(r1[k], r2[k], d1[k], d2[k], gain_power, noise_var);
    if (bins[static_cast<std::size_t>(k)])
      max_finite = std::max(max_finite, *bins[static_cast<std::size_t>(k)]);
  }
  if (!std::isfinite(max_finite))
    throw SelectionInfeasibleError("average_crlb: every grid bin is information-deficient");

  const double penalty = kPenaltyFactor * max_finite;
  double sum = 0.0;
  for (int k = 0; k < m; ++k)
    sum += prior.mass[k] * (bins[static_cast<std::size_t>(k)] ? *bins[static_cast<std::size_t>(k)]
                                                              : penalty);
  return sum;
}

double average_crlb(const ArrayConfig& cfg, const BeamVector& beam_i, const BeamVector& beam_j,
                    const AodPrior& prior, double gain_power, double noise_var) {
  const int m = prior.grid_size;
  Eigen::VectorXcd r1(m), r2(m), d1(m), d2(m);
  for (int k = 0; k < m; ++k) {
    const PairResponse p = responses_at(cfg, beam_i, beam_j, grid_angle(m, k));
    r1[k] = p.r1;
    r2[k] = p.r2;
    d1[k] = p.d1;
    d2[k] = p.d2;
  }
  return average_crlb_binned(r1, r2, d1, d2, prior, gain_power, noise_var);
}

Eigen::MatrixX2d crlb_curve(const ArrayConfig& cfg, const BeamVector& beam_i,
                            const BeamVector& beam_j, int grid_size, double gain_power,
                            double noise_var) {
  Eigen::MatrixX2d curve(grid_size, 2);
  for (int k = 0; k < grid_size; ++k) {
    const double theta = grid_angle(grid_size, k);
    const PairResponse p = responses_at(cfg, beam_i, beam_j, theta);
    const auto value = crlb_point(p.r1, p.r2, p.d1, p.d2, gain_power, noise_var);
    curve(k, 0) = theta;
    curve(k, 1) = value ? *value : std::numeric_limits<double>::quiet_NaN();
  }
  return curve;
}

}  // namespace beamtrack
