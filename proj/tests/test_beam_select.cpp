#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "beamtrack/beam_select.hpp"
#include "beamtrack/errors.hpp"
#include "beamtrack/estimation.hpp"

#include <sstream>

using namespace beamtrack;

namespace {

// Reduced instance small enough for exhaustive cross-validation.
const ArrayConfig kSmallArray{8, 0.5};
constexpr int kSmallGrid = 24;

// Independent enumeration of the selection objective over all pairs.
struct EnumResult {
  int e1 = -1, e2 = -1;
  double risk = std::numeric_limits<double>::infinity();
};

EnumResult enumerate_best(const Codebook& cb, double prev, const MobilityModel& model,
                          double noise_var) {
  const AodPrior prior = discretize_aod_prior(prev, model, cb.grid_size);
  EnumResult best;
  for (int e1 = 0; e1 < cb.num_entries(); ++e1) {
    for (int e2 = e1 + 1; e2 < cb.num_entries(); ++e2) {
      double risk;
      try {
        risk = pair_tracking_risk(cb, e1, e2, prior, model, noise_var, prev);
      } catch (const SelectionInfeasibleError&) {
        continue;
      }
      if (risk < best.risk) {
        best.e1 = e1;
        best.e2 = e2;
        best.risk = risk;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("exhaustive selection matches independent enumeration") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  Rng rng(5);
  for (int i = 0; i < 5; ++i) {
    const double prev = -0.5 + rng.uniform();
    const MobilityModel model{0.02 + 0.08 * rng.uniform()};
    const BeamPairChoice choice = select_pair_exhaustive(cb, prev, model, 0.1);
    const EnumResult ref = enumerate_best(cb, prev, model, 0.1);
    CHECK(choice.index_i == ref.e1);
    CHECK(choice.index_j == ref.e2);
    CHECK(choice.avg_crlb == doctest::Approx(ref.risk).epsilon(1e-12));
  }
}

TEST_CASE("selection objective is invariant to beam order") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const MobilityModel model{0.05};
  const AodPrior prior = discretize_aod_prior(0.1, model, kSmallGrid);
  const double forward = pair_tracking_risk(cb, 10, 14, prior, model, 0.1, 0.1);
  const double swapped = pair_tracking_risk(cb, 14, 10, prior, model, 0.1, 0.1);
  CHECK(forward == doctest::Approx(swapped).epsilon(1e-12));
}

TEST_CASE("symmetric search matches the exhaustive optimum when it is symmetric") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  Rng rng(6);
  int symmetric_hits = 0;
  for (int i = 0; i < 10; ++i) {
    const double prev = -0.4 + 0.8 * rng.uniform();
    const MobilityModel model{0.02 + 0.06 * rng.uniform()};
    const BeamPairChoice ex = select_pair_exhaustive(cb, prev, model, 0.1);
    const BeamPairChoice sym = select_pair_symmetric(cb, prev, model, 0.1);
    CHECK(sym.avg_crlb >= ex.avg_crlb - 1e-12);  // exhaustive is the global optimum

    const int center = nearest_bin(kSmallGrid, prev);
    const int mid2 = (ex.index_i % kSmallGrid) + (ex.index_j % kSmallGrid);
    if (std::abs(mid2 - 2 * center) <= 2) {  // optimum symmetric within a bin
      ++symmetric_hits;
      CHECK(sym.avg_crlb == doctest::Approx(ex.avg_crlb).epsilon(1e-9));
    }
  }
  CHECK(symmetric_hits > 0);
}

TEST_CASE("symmetric search evaluates at most 4 * M/2 candidate pairs at the center") {
  // Count via the cost structure: separations from 1 to M/2 and four
  // aperture combinations is the whole symmetric candidate set.
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const BeamPairChoice c = select_pair_symmetric(cb, 0.0, MobilityModel{0.05}, 0.1);
  CHECK(c.index_i != c.index_j);
  // Candidate half-separations at an interior center cover 1..M/2; the pair
  // returned must be one of them.
  const int k1 = c.index_i % kSmallGrid;
  const int k2 = c.index_j % kSmallGrid;
  CHECK(k1 < k2);
  CHECK(k1 + k2 == doctest::Approx(2.0 * nearest_bin(kSmallGrid, 0.0)).epsilon(0.1));
}

TEST_CASE("selection at a grid edge still returns a valid pair") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const BeamPairChoice c = select_pair_symmetric(cb, 0.97, MobilityModel{0.05}, 0.1);
  CHECK(c.index_i != c.index_j);
  CHECK(c.index_i >= 0);
  CHECK(c.index_j < cb.num_entries());
  CHECK(c.avg_crlb > 0.0);
}

TEST_CASE("selection is deterministic") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const BeamPairChoice a = select_pair_symmetric(cb, 0.2, MobilityModel{0.05}, 0.1);
  const BeamPairChoice b = select_pair_symmetric(cb, 0.2, MobilityModel{0.05}, 0.1);
  CHECK(a.index_i == b.index_i);
  CHECK(a.index_j == b.index_j);
  CHECK(a.avg_crlb == b.avg_crlb);
}

TEST_CASE("selection objective does not depend on the noise level") {
  // The CRLB scales by sigma^2 and the caps scale with the window, so the
  // ranking is noise-invariant; the chosen pair must be too.
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const BeamPairChoice lo = select_pair_symmetric(cb, 0.1, MobilityModel{0.04}, 0.01);
  const BeamPairChoice hi = select_pair_symmetric(cb, 0.1, MobilityModel{0.04}, 1.0);
  CHECK(lo.index_i == hi.index_i);
  CHECK(lo.index_j == hi.index_j);
}

TEST_CASE("no sampled pair beats the selected pair") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const double prev = -0.6 + 1.2 * rng.uniform();
    const MobilityModel model{0.01 + 0.1 * rng.uniform()};
    const AodPrior prior = discretize_aod_prior(prev, model, kSmallGrid);
    const BeamPairChoice best = select_pair_exhaustive(cb, prev, model, 0.1);
    for (int s = 0; s < 200; ++s) {
      const int e1 = static_cast<int>(rng.uniform() * cb.num_entries()) % cb.num_entries();
      const int e2 = static_cast<int>(rng.uniform() * cb.num_entries()) % cb.num_entries();
      if (e1 == e2) continue;
      double risk;
      try {
        risk = pair_tracking_risk(cb, std::min(e1, e2), std::max(e1, e2), prior, model, 0.1,
                                  prev);
      } catch (const SelectionInfeasibleError&) {
        continue;
      }
      CHECK(risk >= best.avg_crlb - 1e-12);
    }
  }
}

TEST_CASE("paper-scale selection is symmetric about the previous estimate") {
  const ArrayConfig cfg{32, 0.5};
  const Codebook cb = build_codebook(cfg, 192);
  const BeamPairChoice c = select_pair_symmetric(cb, 0.0, MobilityModel{0.05}, 0.05);
  const double mid =
      0.5 * (cb.entries[static_cast<std::size_t>(c.index_i)].steer_angle +
             cb.entries[static_cast<std::size_t>(c.index_j)].steer_angle);
  CHECK(std::abs(mid) <= 2.0 / 192 + 1e-12);  // within one grid bin of zero
  CHECK(c.separation_bins > 0);
}

TEST_CASE("alias-free radius flags same-aperture sidelobe ambiguities") {
  const ArrayConfig cfg{32, 0.5};
  const Codebook cb = build_codebook(cfg, 192);
  const Eigen::MatrixXcd table = response_table(cb, 192);

  // Narrow same-class pair: distant sidelobe directions mimic the stacked
  // response, so the usable span stops well short of the target.
  const int narrow =
      alias_free_radius(table, cb.entry_index(Aperture::Full, 94),
                        cb.entry_index(Aperture::Full, 98), 96, 40);
  CHECK(narrow < 20);
  CHECK(narrow >= 1);

  // The radius never exceeds the requested span.
  const int capped =
      alias_free_radius(table, cb.entry_index(Aperture::Half, 90),
                        cb.entry_index(Aperture::Half, 102), 96, 6);
  CHECK(capped <= 6);
}

TEST_CASE("lookup table round-trips through text") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const std::vector<double> sigmas{0.01, 0.02, 0.05, 0.1, 0.2};
  const LookupTable lut = build_lookup_table(cb, sigmas, 0.1);
  REQUIRE(lut.entries.size() == 5);

  std::ostringstream out;
  save_lookup_table(lut, out);
  std::istringstream in(out.str());
  const LookupTable loaded = load_lookup_table(in);
  REQUIRE(loaded.entries.size() == lut.entries.size());
  for (std::size_t i = 0; i < lut.entries.size(); ++i) {
    CHECK(loaded.entries[i].sigma_p == lut.entries[i].sigma_p);
    CHECK(loaded.entries[i].separation_bins == lut.entries[i].separation_bins);
    CHECK(loaded.entries[i].class_i == lut.entries[i].class_i);
    CHECK(loaded.entries[i].class_j == lut.entries[i].class_j);
  }

  SUBCASE("saving twice is byte-identical") {
    std::ostringstream again;
    save_lookup_table(lut, again);
    CHECK(again.str() == out.str());
  }
}

TEST_CASE("lookup entries reproduce the direct symmetric search at the center") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const std::vector<double> sigmas{0.02, 0.05, 0.1};
  const LookupTable lut = build_lookup_table(cb, sigmas, 0.1);
  for (double sigma : sigmas) {
    const BeamPairChoice direct = select_pair_symmetric(cb, 0.0, MobilityModel{sigma}, 0.1);
    const BeamPairChoice via_lut = lut_to_pair(lut, sigma, 0.0, cb);
    CHECK(via_lut.separation_bins == direct.separation_bins);
    CHECK(via_lut.aperture_pair == direct.aperture_pair);
    CHECK(via_lut.index_i == direct.index_i);
    CHECK(via_lut.index_j == direct.index_j);
  }
}

TEST_CASE("lookup translated to an interior angle stays near optimal") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  const std::vector<double> sigmas{0.02, 0.05, 0.1};
  const LookupTable lut = build_lookup_table(cb, sigmas, 0.1);
  const double prev = 0.3;
  const MobilityModel model{0.05};
  const AodPrior prior = discretize_aod_prior(prev, model, kSmallGrid);

  const BeamPairChoice translated = lut_to_pair(lut, 0.05, prev, cb);
  const double translated_risk = pair_tracking_risk(cb, translated.index_i, translated.index_j,
                                                    prior, model, 0.1, prev);
  const BeamPairChoice direct = select_pair_symmetric(cb, prev, model, 0.1);
  CHECK(translated_risk <= 1.05 * direct.avg_crlb);
}

TEST_CASE("lookup interpolation picks the nearest sigma with ties downward") {
  LookupTable lut;
  lut.entries = {{0.01, 2, Aperture::Full, Aperture::Full, 1.0},
                 {0.05, 6, Aperture::Half, Aperture::Half, 2.0}};
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  CHECK(lut_to_pair(lut, 0.02, 0.0, cb).separation_bins == 2);
  CHECK(lut_to_pair(lut, 0.03, 0.0, cb).separation_bins == 2);  // equidistant tie
  CHECK(lut_to_pair(lut, 0.045, 0.0, cb).separation_bins == 6);
  CHECK(lut_to_pair(lut, 0.5, 0.0, cb).separation_bins == 6);   // clamped above
}

TEST_CASE("lookup clamps pairs at the grid edge") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  LookupTable lut;
  lut.entries = {{0.05, 6, Aperture::Full, Aperture::Half, 1.0}};
  const BeamPairChoice c = lut_to_pair(lut, 0.05, 0.99, cb);
  const int k1 = c.index_i % kSmallGrid;
  const int k2 = c.index_j % kSmallGrid;
  CHECK(k2 <= kSmallGrid - 1);
  CHECK(k2 - k1 == 6);  // separation preserved by shifting inward
  CHECK(c.aperture_pair.first == Aperture::Full);
  CHECK(c.aperture_pair.second == Aperture::Half);
}

TEST_CASE("empty lookup tables are rejected") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  CHECK_THROWS_AS(lut_to_pair(LookupTable{}, 0.05, 0.0, cb), std::invalid_argument);
  std::istringstream empty("# header only\n");
  CHECK_THROWS_AS(load_lookup_table(empty), std::invalid_argument);
  std::istringstream garbage("0.05 nope full half\n");
  CHECK_THROWS_AS(load_lookup_table(garbage), std::invalid_argument);
}

TEST_CASE("selection rejects invalid inputs") {
  const Codebook cb = build_codebook(kSmallArray, kSmallGrid);
  CHECK_THROWS_AS(select_pair_symmetric(cb, 0.0, MobilityModel{0.0}, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_lookup_table(cb, std::vector<double>{0.05, 0.01}, 0.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_lookup_table(cb, std::vector<double>{}, 0.1), std::invalid_argument);
}
