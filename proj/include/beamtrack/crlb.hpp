#pragma once

// Cramer-Rao lower bound for the AoD under joint (gain, AoD) estimation from
// a stacked beam-pair measurement, and its average under a discretized prior.
//
// With g_i(theta) = a(theta)^H f_i and g'_i(theta) = a'(theta)^H f_i, the
// Fisher information in the real parameters (Re beta, Im beta, theta) of the
// Gaussian mean beta*g(theta) reduces to the scalar bound
//
//   CRLB(theta) = sigma^2 / ( |beta|^2 ( ||g'||^2 - |<g', g>|^2 / ||g||^2 ) ).

#include "beamtrack/channel.hpp"

#include <optional>

namespace beamtrack {

struct CrlbInputs {
  ArrayConfig array;
  BeamVector beam_i;
  BeamVector beam_j;
  std::complex<double> gain{1.0, 0.0};
  double noise_var = 1.0;  // sigma^2
  double theta = 0.0;
};

// Closed-form bound from the two beams' responses (r) and derivative
// responses (d) at one angle. Empty when the pair carries no angle
// information there: a response null or a rank-deficient Fisher bracket.
std::optional<double> crlb_point(std::complex<double> r1, std::complex<double> r2,
                                 std::complex<double> d1, std::complex<double> d2,
                                 double gain_power, double noise_var);

// Throws InformationDeficitError on a deficient configuration.
double crlb_aod(const CrlbInputs& inp);

std::optional<double> try_crlb_aod(const CrlbInputs& inp);

// Prior-weighted average over the grid: deficient bins contribute a penalty
// of 1000x the largest finite bin value so that mostly-informative pairs
// still rank. Throws SelectionInfeasibleError when every bin is deficient.
// Per-bin responses are supplied explicitly so that callers holding
// precomputed tables evaluate the exact same arithmetic.
double average_crlb_binned(const Eigen::VectorXcd& r1, const Eigen::VectorXcd& r2,
                           const Eigen::VectorXcd& d1, const Eigen::VectorXcd& d2,
                           const AodPrior& prior, double gain_power, double noise_var);

double average_crlb(const ArrayConfig& cfg, const BeamVector& beam_i, const BeamVector& beam_j,
                    const AodPrior& prior, double gain_power, double noise_var);

// (theta, CRLB) over the M-point grid for one pair; deficient bins yield NaN.
Eigen::MatrixX2d crlb_curve(const ArrayConfig& cfg, const BeamVector& beam_i,
                            const BeamVector& beam_j, int grid_size, double gain_power,
                            double noise_var);

}  // namespace beamtrack
