#include "beamtrack/beam_select.hpp"

#include "beamtrack/errors.hpp"
#include "beamtrack/estimation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace beamtrack {

namespace {

constexpr double kNullResponse = 1e-15;
// Two in-window directions closer in cos^2 than this are treated as aliases.
constexpr double kAmbiguityMargin = 0.25;

// Per-entry responses on the grid: column e of `resp` is a(theta_k)^H f_e
// over bins k, and `dresp` the derivative responses. Built with the same dot
// products pair_tracking_risk uses, so table-driven selection matches the
// public per-pair objective bit for bit.
struct ResponseTables {
  Eigen::MatrixXcd resp;
  Eigen::MatrixXcd dresp;
};

ResponseTables build_tables(const Codebook& cb) {
  const int m = cb.grid_size;
  const int n_entries = cb.num_entries();
  ResponseTables t;
  t.resp.resize(m, n_entries);
  t.dresp.resize(m, n_entries);
  for (int k = 0; k < m; ++k) {
    const double theta = grid_angle(m, k);
    const Eigen::VectorXcd a = steering_vector(cb.config, theta);
    const Eigen::VectorXcd da = steering_derivative(cb.config, theta);
    for (int e = 0; e < n_entries; ++e) {
      t.resp(k, e) = a.dot(cb.entries[static_cast<std::size_t>(e)].coefficients);
      t.dresp(k, e) = da.dot(cb.entries[static_cast<std::size_t>(e)].coefficients);
    }
  }
  return t;
}

// Risk of one pair given its per-bin responses (columns of the tables).
double risk_from_responses(const Eigen::Ref<const Eigen::VectorXcd>& r1,
                           const Eigen::Ref<const Eigen::VectorXcd>& r2,
                           const Eigen::Ref<const Eigen::VectorXcd>& d1,
                           const Eigen::Ref<const Eigen::VectorXcd>& d2,
                           const AodPrior& prior, double noise_var, int center, int r_target,
                           int radius) {
  const int m = prior.grid_size;
  const double delta = 2.0 / m;
  const int r_used = std::min(radius, r_target);
  const double span = (2.0 * r_used + 1) * delta;
  const double cap = span * span / 12.0;
  const double n_dirs = std::max(1.0, (2.0 * r_used + 1) / 4.0);

  bool any_informative = false;
  double risk = 0.0;
  for (int k = 0; k < m; ++k) {
    const double mass = prior.mass[k];
    if (mass <= 0.0) continue;
    const auto bound = crlb_point(r1[k], r2[k], d1[k], d2[k], 1.0, noise_var);
    if (bound) any_informative = true;
    double cost;
    const int dist = std::abs(k - center);
    if (dist > r_used) {
      const double escape = delta * (dist - r_used);
      cost = escape * escape + cap;
    } else {
      const double energy = std::norm(r1[k]) + std::norm(r2[k]);
      const double p_flip =
          std::min(1.0, n_dirs * std::exp(-energy / (2.0 * noise_var)));
      cost = (bound ? std::min(*bound, cap) : cap) + p_flip * cap;
    }
    risk += mass * cost;
  }
  if (!any_informative)
    throw SelectionInfeasibleError("pair_tracking_risk: pair is deficient on every prior bin");
  return risk;
}

BeamPairChoice make_choice(const Codebook& cb, int e1, int e2, double risk) {
  const auto& bi = cb.entries[static_cast<std::size_t>(e1)];
  const auto& bj = cb.entries[static_cast<std::size_t>(e2)];
  BeamPairChoice c;
  c.index_i = e1;
  c.index_j = e2;
  c.separation_bins = std::abs((e2 % cb.grid_size) - (e1 % cb.grid_size));
  c.aperture_pair = {bi.aperture, bj.aperture};
  c.avg_crlb = risk;
  return c;
}

void check_selection_inputs(const Codebook& cb, const MobilityModel& model) {
  if (cb.num_entries() < 2)
    throw std::invalid_argument("beam selection: codebook has fewer than two entries");
  if (!(model.sigma_p > 0.0))
    throw std::invalid_argument("beam selection: sigma_p must be > 0");
}

constexpr Aperture kCombos[4][2] = {
    {Aperture::Full, Aperture::Full},
    {Aperture::Full, Aperture::Half},
    {Aperture::Half, Aperture::Full},
    {Aperture::Half, Aperture::Half},
};

}  // namespace

int alias_free_radius(const Eigen::MatrixXcd& table, int entry_i, int entry_j, int center_bin,
                      int max_radius) {
  const int m = static_cast<int>(table.rows());
  const int lo = std::max(0, center_bin - max_radius);
  const int hi = std::min(m - 1, center_bin + max_radius);
  const int len = hi - lo + 1;
  const int c = center_bin - lo;

  std::vector<std::complex<double>> u1(static_cast<std::size_t>(len));
  std::vector<std::complex<double>> u2(static_cast<std::size_t>(len));
  std::vector<bool> ok(static_cast<std::size_t>(len), false);
  for (int k = 0; k < len; ++k) {
    const std::complex<double> g1 = table(lo + k, entry_i);
    const std::complex<double> g2 = table(lo + k, entry_j);
    const double n2 = std::norm(g1) + std::norm(g2);
    if (n2 < kNullResponse) continue;
    const double inv = 1.0 / std::sqrt(n2);
    u1[static_cast<std::size_t>(k)] = g1 * inv;
    u2[static_cast<std::size_t>(k)] = g2 * inv;
    ok[static_cast<std::size_t>(k)] = true;
  }
  auto corr2 = [&](int a, int b) {
    const auto sa = static_cast<std::size_t>(a);
    const auto sb = static_cast<std::size_t>(b);
    if (!ok[sa] || !ok[sb]) return 0.0;
    return std::norm(std::conj(u1[sa]) * u1[sb] + std::conj(u2[sa]) * u2[sb]);
  };

  // The pair's own correlation width: the first lag from the center whose
  // directions decorrelate. Closer bins are resolution, not ambiguity.
  int guard = max_radius;
  for (int lag = 1; lag <= max_radius; ++lag) {
    double peak = 0.0;
    if (c - lag >= 0) peak = std::max(peak, corr2(c, c - lag));
    if (c + lag < len) peak = std::max(peak, corr2(c, c + lag));
    if (peak < kAmbiguityMargin) {
      guard = lag;
      break;
    }
  }

  int radius = guard;
  for (int r = guard + 1; r <= max_radius; ++r) {
    bool clean = true;
    for (int side = 0; side < 2 && clean; ++side) {
      const int b = side == 0 ? c - r : c + r;
      if (b < 0 || b >= len) continue;
      for (int a = std::max(0, c - r); a <= std::min(len - 1, c + r); ++a) {
        if (std::abs(a - b) <= guard) continue;
        if (corr2(a, b) > kAmbiguityMargin) {
          clean = false;
          break;
        }
      }
    }
    if (!clean) break;
    radius = r;
  }
  return radius;
}

int target_radius(const MobilityModel& model, int grid_size) {
  const int r = static_cast<int>(std::ceil(4.0 * model.sigma_p * grid_size / 2.0));
  return std::max(1, std::min(grid_size - 1, r));
}

double pair_tracking_risk(const Codebook& cb, int entry_i, int entry_j, const AodPrior& prior,
                          const MobilityModel& model, double noise_var, double prev_aod) {
  const int m = prior.grid_size;
  if (m != cb.grid_size)
    throw std::invalid_argument("pair_tracking_risk: prior grid does not match the codebook");
  const auto& bi = cb.entries[static_cast<std::size_t>(entry_i)];
  const auto& bj = cb.entries[static_cast<std::size_t>(entry_j)];

  Eigen::VectorXcd r1(m), r2(m), d1(m), d2(m);
  for (int k = 0; k < m; ++k) {
    const double theta = grid_angle(m, k);
    const Eigen::VectorXcd a = steering_vector(cb.config, theta);
    const Eigen::VectorXcd da = steering_derivative(cb.config, theta);
    r1[k] = a.dot(bi.coefficients);
    r2[k] = a.dot(bj.coefficients);
    d1[k] = da.dot(bi.coefficients);
    d2[k] = da.dot(bj.coefficients);
  }

  Eigen::MatrixXcd pair_table(m, 2);
  pair_table.col(0) = r1;
  pair_table.col(1) = r2;
  const int center = nearest_bin(m, prev_aod);
  const int r_target = target_radius(model, m);
  const int radius = alias_free_radius(pair_table, 0, 1, center, r_target);
  return risk_from_responses(r1, r2, d1, d2, prior, noise_var, center, r_target, radius);
}

namespace {

template <typename PairVisitor>
BeamPairChoice best_pair(const Codebook& cb, double prev_aod, const MobilityModel& model,
                         double noise_var, PairVisitor&& for_each_pair) {
  const AodPrior prior = discretize_aod_prior(prev_aod, model, cb.grid_size);
  const ResponseTables t = build_tables(cb);
  const int center = nearest_bin(cb.grid_size, prev_aod);
  const int r_target = target_radius(model, cb.grid_size);

  int best_i = -1, best_j = -1;
  double best = std::numeric_limits<double>::infinity();
  auto evaluate = [&](int e1, int e2) {
    const int radius = alias_free_radius(t.resp, e1, e2, center, r_target);
    double risk;
    try {
      risk = risk_from_responses(t.resp.col(e1), t.resp.col(e2), t.dresp.col(e1),
                                 t.dresp.col(e2), prior, noise_var, center, r_target, radius);
    } catch (const SelectionInfeasibleError&) {
      return;
    }
    if (risk < best) {
      best = risk;
      best_i = e1;
      best_j = e2;
    }
  };
  for_each_pair(evaluate);
  if (best_i < 0)
    throw SelectionInfeasibleError("beam selection: every candidate pair is deficient");
  return make_choice(cb, best_i, best_j, best);
}

}  // namespace

BeamPairChoice select_pair_exhaustive(const Codebook& cb, double prev_aod,
                                      const MobilityModel& model, double noise_var) {
  check_selection_inputs(cb, model);
  return best_pair(cb, prev_aod, model, noise_var, [&](auto&& evaluate) {
    for (int e1 = 0; e1 < cb.num_entries(); ++e1)
      for (int e2 = e1 + 1; e2 < cb.num_entries(); ++e2) evaluate(e1, e2);
  });
}

BeamPairChoice select_pair_symmetric(const Codebook& cb, double prev_aod,
                                     const MobilityModel& model, double noise_var) {
  check_selection_inputs(cb, model);
  const int m = cb.grid_size;
  const int center = nearest_bin(m, prev_aod);
  return best_pair(cb, prev_aod, model, noise_var, [&](auto&& evaluate) {
    int prev_k1 = -1, prev_k2 = -1;
    for (int half = 1; half < m; ++half) {
      const int k1 = std::max(0, center - half);
      const int k2 = std::min(m - 1, center + half);
      if (k1 == prev_k1 && k2 == prev_k2) break;  // both ends clamped
      prev_k1 = k1;
      prev_k2 = k2;
      if (k1 == k2) continue;
      for (const auto& combo : kCombos)
        evaluate(cb.entry_index(combo[0], k1), cb.entry_index(combo[1], k2));
    }
  });
}

LookupTable build_lookup_table(const Codebook& cb, std::span<const double> sigma_p_list,
                               double noise_var) {
  if (sigma_p_list.empty())
    throw std::invalid_argument("build_lookup_table: sigma_p list is empty");
  LookupTable lut;
  double prev = 0.0;
  for (double sigma : sigma_p_list) {
    if (!(sigma > prev))
      throw std::invalid_argument("build_lookup_table: sigma_p list must be positive ascending");
    prev = sigma;
    const BeamPairChoice c = select_pair_symmetric(cb, 0.0, MobilityModel{sigma}, noise_var);
    lut.entries.push_back({sigma, c.separation_bins, c.aperture_pair.first,
                           c.aperture_pair.second, c.avg_crlb});
  }
  return lut;
}

BeamPairChoice lut_to_pair(const LookupTable& lut, double sigma_p, double prev_aod,
                           const Codebook& cb) {
  if (lut.entries.empty()) throw std::invalid_argument("lut_to_pair: lookup table is empty");
  const int m = cb.grid_size;

  // Nearest tabulated sigma_p; scanning ascending with strict improvement
  // resolves equidistant ties toward the smaller entry.
  const LutEntry* entry = &lut.entries.front();
  double best_dist = std::numeric_limits<double>::infinity();
  for (const LutEntry& e : lut.entries) {
    const double dist = std::abs(e.sigma_p - sigma_p);
    if (dist < best_dist) {
      best_dist = dist;
      entry = &e;
    }
  }

  const int sep = std::max(1, std::min(entry->separation_bins, m - 1));
  const int center = nearest_bin(m, prev_aod);
  int k1 = center - sep / 2;
  int k2 = k1 + sep;
  if (k1 < 0) {
    k1 = 0;
    k2 = sep;
  } else if (k2 > m - 1) {
    k2 = m - 1;
    k1 = m - 1 - sep;
  }

  BeamPairChoice c;
  c.index_i = cb.entry_index(entry->class_i, k1);
  c.index_j = cb.entry_index(entry->class_j, k2);
  c.separation_bins = k2 - k1;
  c.aperture_pair = {entry->class_i, entry->class_j};
  c.avg_crlb = entry->avg_crlb;
  return c;
}

void save_lookup_table(const LookupTable& lut, std::ostream& out) {
  out << "# sigma_p separation_bins class_i class_j\n";
  char line[128];
  for (const LutEntry& e : lut.entries) {
    std::snprintf(line, sizeof(line), "%.12g %d %s %s\n", e.sigma_p, e.separation_bins,
                  to_string(e.class_i), to_string(e.class_j));
    out << line;
  }
}

void save_lookup_table(const LookupTable& lut, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_lookup_table: cannot open " + path);
  save_lookup_table(lut, out);
}

LookupTable load_lookup_table(std::istream& in) {
  LookupTable lut;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    LutEntry e;
    std::string ci, cj;
    if (!(fields >> e.sigma_p >> e.separation_bins >> ci >> cj))
      throw std::invalid_argument("load_lookup_table: malformed line " + std::to_string(line_no));
    e.class_i = aperture_from_string(ci);
    e.class_j = aperture_from_string(cj);
    lut.entries.push_back(e);
  }
  if (lut.entries.empty()) throw std::invalid_argument("load_lookup_table: no entries");
  return lut;
}

LookupTable load_lookup_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_lookup_table: cannot open " + path);
  return load_lookup_table(in);
}

}  // namespace beamtrack
