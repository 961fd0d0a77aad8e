#include "beamtrack/sim_harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <thread>

namespace beamtrack {

namespace {

constexpr std::uint64_t kTrajectoryStream = 0;

// Loss detection and recovery for the two-beam tracker.
constexpr int kLossAlarmCycles = 2;       // consecutive suspicious cycles before fallback
constexpr double kLossEnergyFraction = 0.15;  // of the pair's peak window response
constexpr double kReacquireAcceptFraction = 0.25;  // of the expected locked energy

std::uint64_t scheme_stream(const SchemeSpec& s) {
  // Distinct, stable stream ids per scheme so adding one scheme never
  // perturbs another's noise sequence.
  switch (s.kind) {
    case SchemeKind::Proposed:
      return 1u;
    case SchemeKind::BeamCycling:
      return (2ull << 32) + static_cast<std::uint64_t>(s.beams);
    case SchemeKind::FixedPair:
      return (3ull << 32) + static_cast<std::uint64_t>(s.offset_bins);
  }
  return 0;
}

int parse_suffix_int(const std::string& text, std::size_t prefix_len, const char* what) {
  int value = 0;
  const char* first = text.data() + prefix_len;
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || value < 1)
    throw std::invalid_argument(std::string("invalid ") + what + " in scheme: " + text);
  return value;
}

}  // namespace

std::string SchemeSpec::name() const {
  switch (kind) {
    case SchemeKind::Proposed:
      return "proposed";
    case SchemeKind::BeamCycling:
      return "beam-cycling-" + std::to_string(beams);
    case SchemeKind::FixedPair:
      return "fixed-pair-" + std::to_string(offset_bins);
  }
  return "unknown";
}

int SchemeSpec::beams_per_cycle() const {
  return kind == SchemeKind::BeamCycling ? beams : 2;
}

SchemeSpec SchemeSpec::parse(const std::string& text) {
  SchemeSpec s;
  if (text == "proposed") {
    s.kind = SchemeKind::Proposed;
    return s;
  }
  if (text.rfind("beam-cycling-", 0) == 0) {
    s.kind = SchemeKind::BeamCycling;
    s.beams = parse_suffix_int(text, std::string("beam-cycling-").size(), "beam count");
    return s;
  }
  if (text.rfind("fixed-pair-", 0) == 0) {
    s.kind = SchemeKind::FixedPair;
    s.offset_bins = parse_suffix_int(text, std::string("fixed-pair-").size(), "bin offset");
    return s;
  }
  throw std::invalid_argument("unknown scheme: " + text);
}

void validate(const SimConfig& cfg) {
  validate(ArrayConfig{cfg.n_tx, cfg.spacing_ratio});
  validate(ArrayConfig{cfg.n_rx, cfg.spacing_ratio});
  if (cfg.grid_size < 2) throw std::invalid_argument("config: grid_size must be >= 2");
  if (cfg.est_grid_size < 0) throw std::invalid_argument("config: est_grid_size must be >= 0");
  if (cfg.sigma_p < 0.0) throw std::invalid_argument("config: sigma_p must be >= 0");
  if (cfg.horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (cfg.warmup_cycles < 0 || cfg.warmup_cycles >= cfg.horizon)
    throw std::invalid_argument("config: warmup_cycles must lie in [0, horizon)");
  if (cfg.feedback_delay_cycles != 0 && cfg.feedback_delay_cycles != 1)
    throw std::invalid_argument("config: feedback_delay_cycles must be 0 or 1");
  if (cfg.cold_start_beams < 1)
    throw std::invalid_argument("config: cold_start_beams must be >= 1");
  if (!(cfg.init_range > 0.0 && cfg.init_range <= 1.0))
    throw std::invalid_argument("config: init_range must lie in (0, 1]");
  if (cfg.snr_db_list.empty()) throw std::invalid_argument("config: snr_db_list is empty");
  if (cfg.schemes.empty()) throw std::invalid_argument("config: schemes is empty");
  for (const SchemeSpec& s : cfg.schemes) {
    if (s.kind == SchemeKind::BeamCycling && s.beams < 1)
      throw std::invalid_argument("config: beam-cycling needs >= 1 beams");
    if (s.kind == SchemeKind::FixedPair &&
        (s.offset_bins < 1 || s.offset_bins >= cfg.grid_size))
      throw std::invalid_argument("config: fixed-pair offset must lie in [1, grid_size)");
  }
  if (cfg.lut_sigma_p.empty()) throw std::invalid_argument("config: lut_sigma_p list is empty");
}

double snr_db_to_noise_var(double snr_db) {
  return 0.5 * std::pow(10.0, -snr_db / 10.0);
}

SimContext::SimContext(const SimConfig& cfg) : SimContext(cfg, LookupTable{}) {}

SimContext::SimContext(const SimConfig& cfg, LookupTable lut) : cfg_(cfg) {
  beamtrack::validate(cfg_);
  codebook_ = build_codebook(ArrayConfig{cfg_.n_tx, cfg_.spacing_ratio}, cfg_.grid_size);
  est_grid_ = cfg_.est_grid_size > 0 ? cfg_.est_grid_size : cfg_.grid_size;
  est_table_ = response_table(codebook_, est_grid_);
  if (lut.entries.empty()) {
    // Pair ranking is invariant to the noise level, so the reference
    // noise_var here is immaterial.
    lut_ = build_lookup_table(codebook_, cfg_.lut_sigma_p, 0.5);
  } else {
    lut_ = std::move(lut);
  }

  // Alias-free half-width of the tracked pair, on the estimation grid.
  const BeamPairChoice pair = lut_to_pair(lut_, cfg_.sigma_p, 0.0, codebook_);
  const int center = nearest_bin(est_grid_, 0.0);
  const int r_target = target_radius(MobilityModel{cfg_.sigma_p}, est_grid_);
  tracking_radius_ =
      alias_free_radius(est_table_, pair.index_i, pair.index_j, center, r_target);
}

std::vector<int> SimContext::cycling_entries(int n) const {
  std::vector<int> entries;
  entries.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double theta = -1.0 + 2.0 * i / n;
    entries.push_back(codebook_.entry_index(Aperture::Full, nearest_bin(cfg_.grid_size, theta)));
  }
  return entries;
}

Trajectory make_trajectory(const SimContext& ctx, std::uint64_t trial) {
  const SimConfig& cfg = ctx.config();
  Rng rng(cfg.seed, trial, kTrajectoryStream);
  const MobilityModel model{cfg.sigma_p};

  Trajectory traj;
  traj.states.resize(static_cast<std::size_t>(cfg.horizon) + 1);
  PathState s;
  s.aod = cfg.init_range * (2.0 * rng.uniform() - 1.0);
  s.aoa = cfg.init_range * (2.0 * rng.uniform() - 1.0);
  if (cfg.init_on_grid) s.aod = grid_angle(ctx.est_grid(), nearest_bin(ctx.est_grid(), s.aod));
  s.gain = cfg.gain_model == GainModel::Fixed ? std::complex<double>(1.0, 0.0)
                                              : sample_gain(rng);
  traj.states[0] = s;
  for (int t = 1; t <= cfg.horizon; ++t) {
    s.aod = evolve_aod(s.aod, model, rng);
    s.aoa = evolve_aod(s.aoa, model, rng);
    // The gain draw happens regardless of the model so that switching the
    // model never shifts the trajectory stream.
    const std::complex<double> gain = sample_gain(rng);
    s.gain = cfg.gain_model == GainModel::Fixed ? std::complex<double>(1.0, 0.0) : gain;
    traj.states[static_cast<std::size_t>(t)] = s;
  }
  return traj;
}

namespace {

Measurement observe_entries(const SimContext& ctx, const PathState& path,
                            std::span<const int> entries, double noise_var, Rng& rng) {
  return observe(path, ctx.codebook(), entries, ctx.tx_array(), noise_var, rng);
}

// Cold-start machinery shared by the initial acquisition and loss recovery.
struct ColdStart {
  std::vector<int> entries;
  Eigen::VectorXd norms;

  ColdStart(const SimContext& ctx, int n_beams)
      : entries(ctx.cycling_entries(n_beams)),
        norms(response_norms(ctx.est_table(), entries)) {}

  AodEstimate estimate(const SimContext& ctx, const PathState& state, double noise_var,
                       Rng& rng, double* energy) const {
    const Measurement m = observe_entries(ctx, state, entries, noise_var, rng);
    if (energy != nullptr) *energy = m.samples.squaredNorm();
    return ml_estimate_with_table(m.samples, entries, ctx.est_table(),
                                  full_window(ctx.est_grid()), &norms);
  }
};

}  // namespace

double cold_start(const SimContext& ctx, const PathState& initial, double noise_var,
                  Rng& noise_rng) {
  const ColdStart cold(ctx, ctx.config().cold_start_beams);
  return cold.estimate(ctx, initial, noise_var, noise_rng, nullptr).aod_hat;
}

namespace {

TrackingTrace run_two_beam(const SimContext& ctx, const SchemeSpec& scheme,
                           const Trajectory& traj, double noise_var, Rng& noise_rng) {
  const SimConfig& cfg = ctx.config();
  const Codebook& cb = ctx.codebook();
  const MobilityModel model{cfg.sigma_p};
  const int est_grid = ctx.est_grid();
  const bool proposed = scheme.kind == SchemeKind::Proposed;

  TrackingTrace trace;
  trace.scheme = scheme.name();
  trace.records.reserve(static_cast<std::size_t>(cfg.horizon));

  const ColdStart cold(ctx, cfg.cold_start_beams);
  double fed_back =
      cold.estimate(ctx, traj.states[0], noise_var, noise_rng, nullptr).aod_hat;

  int alarm = 0;
  std::array<int, 2> entries{};
  for (int t = 1; t <= cfg.horizon; ++t) {
    const PathState& state = traj.states[static_cast<std::size_t>(t)];
    const double center = cfg.feedback_delay_cycles == 0 ? state.aod : fed_back;

    TraceRecord rec;
    rec.t = t;
    rec.true_aod = state.aod;

    if (proposed && cfg.reacquisition && alarm >= kLossAlarmCycles) {
      // Recovery: one conventional beam-cycling shot, accepted only when its
      // received energy is consistent with an unfaded channel.
      double energy = 0.0;
      const AodEstimate est = cold.estimate(ctx, state, noise_var, noise_rng, &energy);
      const double expected =
          2.0 * static_cast<double>(cold.entries.size()) * noise_var + cold.norms[est.bin];
      if (energy >= kReacquireAcceptFraction * expected) {
        fed_back = est.aod_hat;
        alarm = 0;
      }
      rec.est_aod = fed_back;
      rec.abs_err = std::abs(fed_back - state.aod);
      rec.out_of_window = false;
      rec.beam_i = cold.entries.front();
      rec.beam_j = cold.entries.back();
      trace.records.push_back(rec);
      continue;
    }

    if (proposed) {
      const BeamPairChoice pair = lut_to_pair(ctx.lut(), cfg.sigma_p, center, cb);
      entries = {pair.index_i, pair.index_j};
    } else {  // FixedPair
      const int p = nearest_bin(cfg.grid_size, center);
      const int k1 = std::max(0, p - scheme.offset_bins);
      const int k2 = std::min(cfg.grid_size - 1, p + scheme.offset_bins);
      entries = {cb.entry_index(Aperture::Full, k1), cb.entry_index(Aperture::Full, k2)};
    }
    const auto& beam_i = cb.entries[static_cast<std::size_t>(entries[0])];
    const auto& beam_j = cb.entries[static_cast<std::size_t>(entries[1])];

    const Measurement m = observe_entries(ctx, state, entries, noise_var, noise_rng);
    Window window = search_window(center, beam_i, beam_j, model, est_grid);
    if (proposed) {
      // Keep the search inside the pair's alias-free span around the center.
      const int p = nearest_bin(est_grid, center);
      window.lo = std::max(window.lo, p - ctx.tracking_radius());
      window.hi = std::min(window.hi, p + ctx.tracking_radius());
      if (window.lo > window.hi) window.lo = window.hi = p;
    }

    const TrackingPrior prior{center, cfg.sigma_p, noise_var};
    const AodEstimate est =
        ml_estimate_with_table(m.samples, entries, ctx.est_table(), window, nullptr,
                               proposed && cfg.map_weighting ? &prior : nullptr);

    if (proposed && cfg.reacquisition) {
      const bool edge_hit = window.size() > 2 && (est.bin == window.lo || est.bin == window.hi);
      double peak = 0.0;
      for (int k = window.lo; k <= window.hi; ++k)
        peak = std::max(peak, std::norm(ctx.est_table()(k, entries[0])) +
                                  std::norm(ctx.est_table()(k, entries[1])));
      const bool low_energy =
          m.samples.squaredNorm() < 4.0 * noise_var + kLossEnergyFraction * peak;
      if (edge_hit)
        alarm = kLossAlarmCycles;
      else if (low_energy)
        ++alarm;
      else
        alarm = 0;
    }

    rec.est_aod = est.aod_hat;
    rec.abs_err = std::abs(est.aod_hat - state.aod);
    rec.out_of_window = !window.contains(nearest_bin(est_grid, state.aod));
    rec.beam_i = entries[0];
    rec.beam_j = entries[1];
    trace.records.push_back(rec);

    fed_back = est.aod_hat;
  }
  return trace;
}

TrackingTrace run_cycling(const SimContext& ctx, const SchemeSpec& scheme,
                          const Trajectory& traj, double noise_var, Rng& noise_rng) {
  const SimConfig& cfg = ctx.config();
  const int est_grid = ctx.est_grid();
  const std::vector<int> entries = ctx.cycling_entries(scheme.beams);
  const Eigen::VectorXd norms = response_norms(ctx.est_table(), entries);
  const Window window = full_window(est_grid);

  TrackingTrace trace;
  trace.scheme = scheme.name();
  trace.records.reserve(static_cast<std::size_t>(cfg.horizon));
  for (int t = 1; t <= cfg.horizon; ++t) {
    const PathState& state = traj.states[static_cast<std::size_t>(t)];
    const Measurement m = observe_entries(ctx, state, entries, noise_var, noise_rng);
    const AodEstimate est =
        ml_estimate_with_table(m.samples, entries, ctx.est_table(), window, &norms);

    TraceRecord rec;
    rec.t = t;
    rec.true_aod = state.aod;
    rec.est_aod = est.aod_hat;
    rec.abs_err = std::abs(est.aod_hat - state.aod);
    rec.out_of_window = false;
    rec.beam_i = entries.front();
    rec.beam_j = entries.back();
    trace.records.push_back(rec);
  }
  return trace;
}

}  // namespace

TrackingTrace run_tracking(const SimContext& ctx, const Trajectory& traj, double noise_var,
                           Rng& noise_rng) {
  return run_two_beam(ctx, SchemeSpec{SchemeKind::Proposed, 32, 5}, traj, noise_var, noise_rng);
}

TrackingTrace run_baseline(const SimContext& ctx, const SchemeSpec& scheme,
                           const Trajectory& traj, double noise_var, Rng& noise_rng) {
  if (scheme.kind == SchemeKind::Proposed)
    throw std::invalid_argument("run_baseline: scheme must be a baseline");
  return run_scheme(ctx, scheme, traj, noise_var, noise_rng);
}

TrackingTrace run_scheme(const SimContext& ctx, const SchemeSpec& scheme, const Trajectory& traj,
                         double noise_var, Rng& noise_rng) {
  if (traj.states.size() != static_cast<std::size_t>(ctx.config().horizon) + 1)
    throw std::invalid_argument("run_scheme: trajectory length does not match the horizon");
  switch (scheme.kind) {
    case SchemeKind::BeamCycling:
      return run_cycling(ctx, scheme, traj, noise_var, noise_rng);
    case SchemeKind::Proposed:
    case SchemeKind::FixedPair:
      return run_two_beam(ctx, scheme, traj, noise_var, noise_rng);
  }
  throw std::logic_error("run_scheme: unreachable");
}

Rng noise_stream(const SimContext& ctx, std::uint64_t trial, const SchemeSpec& scheme) {
  return Rng(ctx.config().seed, trial, scheme_stream(scheme));
}

int worker_count() {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("BEAMTRACK_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) return std::min(requested, hw * 4);
  }
  return hw;
}

MseReport run_mse_sweep(const SimContext& ctx, int max_threads) {
  const SimConfig& cfg = ctx.config();
  const std::size_t n_schemes = cfg.schemes.size();
  const std::size_t n_snr = cfg.snr_db_list.size();
  const std::size_t n_cells = n_schemes * n_snr;
  const int counted = cfg.horizon - cfg.warmup_cycles;

  // Per-trial partial sums; reduced sequentially afterwards so the result is
  // independent of the worker schedule.
  std::vector<double> sums(static_cast<std::size_t>(cfg.trials) * n_cells, 0.0);

  auto run_trials = [&](int lo, int hi) {
    for (int trial = lo; trial < hi; ++trial) {
      const Trajectory traj = make_trajectory(ctx, static_cast<std::uint64_t>(trial));
      for (std::size_t si = 0; si < n_schemes; ++si) {
        for (std::size_t ni = 0; ni < n_snr; ++ni) {
          Rng rng = noise_stream(ctx, static_cast<std::uint64_t>(trial), cfg.schemes[si]);
          const double noise_var = snr_db_to_noise_var(cfg.snr_db_list[ni]);
          const TrackingTrace trace = run_scheme(ctx, cfg.schemes[si], traj, noise_var, rng);
          double acc = 0.0;
          for (const TraceRecord& rec : trace.records)
            if (rec.t > cfg.warmup_cycles) acc += rec.abs_err * rec.abs_err;
          sums[static_cast<std::size_t>(trial) * n_cells + si * n_snr + ni] = acc;
        }
      }
    }
  };

  const int n_threads = std::max(1, std::min(max_threads, cfg.trials));
  if (n_threads == 1) {
    run_trials(0, cfg.trials);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    const int chunk = (cfg.trials + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
      const int lo = w * chunk;
      const int hi = std::min(cfg.trials, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_trials, lo, hi);
    }
    for (std::thread& th : pool) th.join();
  }

  MseReport report;
  report.rows.reserve(n_cells);
  for (std::size_t si = 0; si < n_schemes; ++si) {
    for (std::size_t ni = 0; ni < n_snr; ++ni) {
      double total = 0.0;
      for (int trial = 0; trial < cfg.trials; ++trial)
        total += sums[static_cast<std::size_t>(trial) * n_cells + si * n_snr + ni];
      MseRow row;
      row.scheme = cfg.schemes[si].name();
      row.snr_db = cfg.snr_db_list[ni];
      row.sigma_p = cfg.sigma_p;
      row.mse = total / (static_cast<double>(cfg.trials) * counted);
      row.trials = cfg.trials;
      row.beams_per_cycle = cfg.schemes[si].beams_per_cycle();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

MseReport run_mse_sweep(const SimConfig& cfg) {
  const SimContext ctx(cfg);
  return run_mse_sweep(ctx, worker_count());
}

namespace {

void append_double(std::string& line, double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  line += buf;
}

}  // namespace

void write_trace_csv(std::ostream& out, const TrackingTrace& trace) {
  out << "t,true_aod,est_aod,abs_err,oow_flag,beam_i,beam_j\n";
  for (const TraceRecord& r : trace.records) {
    std::string line = std::to_string(r.t);
    line += ',';
    append_double(line, r.true_aod);
    line += ',';
    append_double(line, r.est_aod);
    line += ',';
    append_double(line, r.abs_err);
    line += ',';
    line += r.out_of_window ? '1' : '0';
    line += ',';
    line += std::to_string(r.beam_i);
    line += ',';
    line += std::to_string(r.beam_j);
    line += '\n';
    out << line;
  }
}

void write_report_csv(std::ostream& out, const MseReport& report) {
  out << "scheme,snr_db,sigma_p,mse,trials,beams_per_cycle\n";
  for (const MseRow& r : report.rows) {
    std::string line = r.scheme;
    line += ',';
    append_double(line, r.snr_db);
    line += ',';
    append_double(line, r.sigma_p);
    line += ',';
    append_double(line, r.mse);
    line += ',';
    line += std::to_string(r.trials);
    line += ',';
    line += std::to_string(r.beams_per_cycle);
    line += '\n';
    out << line;
  }
}

}  // namespace beamtrack
