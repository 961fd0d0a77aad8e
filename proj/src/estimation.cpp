#include "beamtrack/estimation.hpp"

#include "beamtrack/errors.hpp"

#include <cmath>
#include <limits>

namespace beamtrack {

namespace {
constexpr double kDegenerateNorm = 1e-15;
}

Eigen::VectorXcd beam_response(const ArrayConfig& cfg, double theta,
                               std::span<const BeamVector> beams) {
  const Eigen::VectorXcd a = steering_vector(cfg, theta);
  Eigen::VectorXcd g(static_cast<Eigen::Index>(beams.size()));
  for (std::size_t i = 0; i < beams.size(); ++i)
    g[static_cast<Eigen::Index>(i)] = a.dot(beams[i].coefficients);
  return g;
}

Eigen::MatrixXcd projection(double theta, std::span<const BeamVector> beams,
                            const ArrayConfig& cfg) {
  if (beams.empty()) throw std::invalid_argument("projection: beam list is empty");
  const Eigen::VectorXcd g = beam_response(cfg, theta, beams);
  const double n2 = g.squaredNorm();
  if (n2 < kDegenerateNorm)
    throw DegenerateDirectionError("projection: beams have a null at the requested angle");
  return (g * g.adjoint()) / n2;
}

Eigen::MatrixXcd response_table(const Codebook& codebook, int grid_size) {
  if (grid_size < 1) throw std::invalid_argument("response_table: grid_size must be >= 1");
  Eigen::MatrixXcd table(grid_size, codebook.num_entries());
  for (int k = 0; k < grid_size; ++k) {
    const Eigen::VectorXcd a = steering_vector(codebook.config, grid_angle(grid_size, k));
    for (int e = 0; e < codebook.num_entries(); ++e)
      table(k, e) = a.dot(codebook.entries[static_cast<std::size_t>(e)].coefficients);
  }
  return table;
}

Eigen::VectorXd response_norms(const Eigen::MatrixXcd& table, std::span<const int> beam_entries) {
  Eigen::VectorXd norms = Eigen::VectorXd::Zero(table.rows());
  for (int e : beam_entries) norms += table.col(e).cwiseAbs2();
  return norms;
}

AodEstimate ml_estimate_with_table(const Eigen::VectorXcd& samples,
                                   std::span<const int> beam_entries,
                                   const Eigen::MatrixXcd& table, Window window,
                                   const Eigen::VectorXd* cached_norms,
                                   const TrackingPrior* prior) {
  const int grid_size = static_cast<int>(table.rows());
  if (samples.size() != static_cast<Eigen::Index>(beam_entries.size()))
    throw std::invalid_argument("ml_estimate: sample count does not match beam count");
  if (samples.size() == 0) throw std::invalid_argument("ml_estimate: empty measurement");
  if (window.lo < 0 || window.hi >= grid_size || window.lo > window.hi)
    throw std::invalid_argument("ml_estimate: window must be a nonempty range inside the grid");

  const int len = window.size();

  // corr_k = g_k^H y accumulated beam by beam from the table columns.
  Eigen::VectorXcd corr = Eigen::VectorXcd::Zero(len);
  for (std::size_t i = 0; i < beam_entries.size(); ++i)
    corr += table.col(beam_entries[i]).segment(window.lo, len).conjugate() *
            samples[static_cast<Eigen::Index>(i)];

  Eigen::VectorXd norms(len);
  if (cached_norms != nullptr) {
    norms = cached_norms->segment(window.lo, len);
  } else {
    norms.setZero();
    for (int e : beam_entries) norms += table.col(e).segment(window.lo, len).cwiseAbs2();
  }

  const double y2 = samples.squaredNorm();
  const bool weighted = prior != nullptr && prior->sigma > 0.0;
  const double wprior =
      weighted ? prior->noise_var / (prior->sigma * prior->sigma) : 0.0;

  // Without a prior, argmin of the residual = argmax of |corr|^2 / ||g||^2;
  // the prior adds a quadratic pull toward its center. Ties go to the lowest
  // bin via strict improvement while scanning upward.
  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int k = 0; k < len; ++k) {
    if (norms[k] < kDegenerateNorm) continue;
    double cost = y2 - std::norm(corr[k]) / norms[k];
    if (weighted) {
      const double d = grid_angle(grid_size, window.lo + k) - prior->center;
      cost += wprior * d * d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = k;
    }
  }
  if (best < 0)
    throw EstimationFailureError("ml_estimate: every bin in the window is degenerate");

  AodEstimate est;
  est.bin = window.lo + best;
  est.aod_hat = grid_angle(grid_size, est.bin);
  est.gain_hat = corr[best] / norms[best];
  est.window = window;

  // Reported residual is the explicit ||y - beta g||^2 at the winner; the
  // subtractive form loses precision exactly where the fit is best.
  Eigen::VectorXcd fitted(samples.size());
  for (std::size_t i = 0; i < beam_entries.size(); ++i)
    fitted[static_cast<Eigen::Index>(i)] = est.gain_hat * table(est.bin, beam_entries[i]);
  est.residual = (samples - fitted).squaredNorm();
  return est;
}

AodEstimate ml_estimate(const Measurement& m, const Codebook& codebook, int grid_size,
                        Window window) {
  if (window.lo < 0 || window.hi >= grid_size || window.lo > window.hi)
    throw std::invalid_argument("ml_estimate: window must be a nonempty range inside the grid");

  // Build responses only for the windowed bins, then search with local indices.
  const int len = window.size();
  const auto n_beams = static_cast<Eigen::Index>(m.beam_indices.size());
  Eigen::MatrixXcd local(len, n_beams);
  for (int k = 0; k < len; ++k) {
    const Eigen::VectorXcd a =
        steering_vector(codebook.config, grid_angle(grid_size, window.lo + k));
    for (Eigen::Index i = 0; i < n_beams; ++i) {
      const auto& beam = codebook.entries[static_cast<std::size_t>(m.beam_indices[i])];
      local(k, i) = a.dot(beam.coefficients);
    }
  }
  std::vector<int> local_entries(static_cast<std::size_t>(n_beams));
  for (Eigen::Index i = 0; i < n_beams; ++i)
    local_entries[static_cast<std::size_t>(i)] = static_cast<int>(i);

  AodEstimate est = ml_estimate_with_table(m.samples, local_entries, local, {0, len - 1});
  est.bin += window.lo;
  est.aod_hat = grid_angle(grid_size, est.bin);
  est.window = window;
  return est;
}

Window search_window(double prev_aod, const BeamVector& beam_i, const BeamVector& beam_j,
                     const MobilityModel& model, int grid_size) {
  // Open inter-beam span: the grid bins strictly between the steer angles.
  const double lo_beam = std::min(beam_i.steer_angle, beam_j.steer_angle);
  const double hi_beam = std::max(beam_i.steer_angle, beam_j.steer_angle);
  int lo = grid_size;  // empty until a bin qualifies
  int hi = -1;
  {
    const int lo_bin = nearest_bin(grid_size, lo_beam);
    const int hi_bin = nearest_bin(grid_size, hi_beam);
    for (int k = lo_bin; k <= hi_bin; ++k) {
      const double theta = grid_angle(grid_size, k);
      if (theta > lo_beam && theta < hi_beam) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
      }
    }
  }

  // Prior coverage: smallest index range whose grid angles span +/- 4 sigma.
  const double margin = 4.0 * model.sigma_p;
  const double lo_angle = std::max(prev_aod - margin, -1.0);
  const double hi_angle = std::min(prev_aod + margin, 1.0);
  int plo = static_cast<int>(std::ceil((lo_angle + 1.0) * 0.5 * grid_size - 1e-9));
  int phi = static_cast<int>(std::floor((hi_angle + 1.0) * 0.5 * grid_size + 1e-9));
  plo = std::max(0, std::min(grid_size - 1, plo));
  phi = std::max(0, std::min(grid_size - 1, phi));
  if (plo <= phi) {
    lo = std::min(lo, plo);
    hi = std::max(hi, phi);
  }

  lo = std::max(0, std::min(grid_size - 1, lo));
  hi = std::max(0, std::min(grid_size - 1, hi));
  if (lo > hi) lo = hi = nearest_bin(grid_size, prev_aod);
  return {lo, hi};
}

}  // namespace beamtrack
