#pragma once

// Selection of the training-beam pair for the next cycle, the offline lookup
// table keyed by mobility, and the ambiguity geometry that bounds how far a
// two-beam search window may safely extend.
//
// Pairs are ranked by a windowed-tracking risk built on the prior-averaged
// CRLB: per-bin bounds are capped at the uniform error of the search span,
// bins the window cannot reach pay their escape distance, and bins where the
// pair's response energy is too weak to out-score in-window sidelobe
// directions pay a flip penalty. On benign instances (window covering the
// prior, no caps active) the risk reduces to the plain discretized average
// CRLB.

#include "beamtrack/crlb.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>

namespace beamtrack {

struct BeamPairChoice {
  int index_i = -1;  // codebook entries, index_i != index_j
  int index_j = -1;
  int separation_bins = 0;  // |grid position difference|
  std::pair<Aperture, Aperture> aperture_pair{Aperture::Full, Aperture::Full};
  double avg_crlb = 0.0;  // selection objective: prior-averaged CRLB tracking risk
};

struct LutEntry {
  double sigma_p = 0.0;
  int separation_bins = 0;
  Aperture class_i = Aperture::Full;
  Aperture class_j = Aperture::Full;
  // Tabulation-time objective; NaN for tables reloaded from disk, which only
  // persist the pair geometry.
  double avg_crlb = std::numeric_limits<double>::quiet_NaN();
};

struct LookupTable {
  std::vector<LutEntry> entries;  // ascending sigma_p
};

// Largest half-width r <= max_radius such that no two response directions of
// the pair inside [center - r, center + r] that lie further apart than the
// pair's own correlation width are near-parallel. Beyond this radius the
// two-sample likelihood aliases between distant angles. `table` is a
// response_table() over the search grid.
int alias_free_radius(const Eigen::MatrixXcd& table, int entry_i, int entry_j, int center_bin,
                      int max_radius);

// Half-width of the tracking window implied by the mobility model.
int target_radius(const MobilityModel& model, int grid_size);

// The selection objective for one pair; throws SelectionInfeasibleError when
// the pair is information-deficient on every prior bin.
double pair_tracking_risk(const Codebook& codebook, int entry_i, int entry_j,
                          const AodPrior& prior, const MobilityModel& model, double noise_var,
                          double prev_aod);

// Global argmin of the tracking risk over all unordered codebook pairs.
// Ties break toward the lower (index_i, index_j).
BeamPairChoice select_pair_exhaustive(const Codebook& codebook, double prev_aod,
                                      const MobilityModel& model, double noise_var);

// One-dimensional search over pairs placed symmetrically around prev_aod
// (snapped to the grid), over all four aperture-class combinations.
BeamPairChoice select_pair_symmetric(const Codebook& codebook, double prev_aod,
                                     const MobilityModel& model, double noise_var);

// Tabulates select_pair_symmetric at prev_aod = 0 for each listed sigma_p.
LookupTable build_lookup_table(const Codebook& codebook, std::span<const double> sigma_p_list,
                               double noise_var);

// Applies the nearest tabulated entry (ties toward the smaller sigma_p) at
// prev_aod, shifting the pair inward at grid edges so the separation holds.
BeamPairChoice lut_to_pair(const LookupTable& lut, double sigma_p, double prev_aod,
                           const Codebook& codebook);

// Plain-text persistence: columns sigma_p, separation_bins, class_i, class_j.
void save_lookup_table(const LookupTable& lut, std::ostream& out);
void save_lookup_table(const LookupTable& lut, const std::string& path);
LookupTable load_lookup_table(std::istream& in);
LookupTable load_lookup_table(const std::string& path);

}  // namespace beamtrack
