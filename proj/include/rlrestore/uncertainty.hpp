#pragma once

#include "rlrestore/gmm.hpp"

#include <map>
#include <span>
#include <vector>

namespace rlr::unc {

// Index layout of the flat renewable vector: period-major, wind assets first,
// then solar. Periods are 1-based throughout.
struct FleetLayout {
    int wind_count = 0;
    int solar_count = 0;
    int periods = 1;

    int assets() const { return wind_count + solar_count; }
    int flat_dim() const { return assets() * periods; }
    int flat_index(int period, int asset) const;  // period 1-based, asset 0-based
    void validate() const;
};

// Joint distribution over the remaining horizon, conditioned on everything
// observed so far. Immutable; ingest_observation returns a new state.
class UncertaintyState {
public:
    UncertaintyState(FleetLayout layout, gmm::Gmm prior);

    const FleetLayout& layout() const { return layout_; }
    const gmm::Gmm& prior() const { return prior_; }
    // Joint over periods current_k+1 .. K given the observation log.
    const gmm::Gmm& conditional() const { return conditional_; }
    int current_k() const { return current_k_; }
    int remaining_periods() const { return layout_.periods - current_k_; }
    const std::vector<gmm::Vec>& observations() const { return observations_; }

private:
    friend UncertaintyState ingest_observation(const UncertaintyState&, int, const gmm::Vec&);
    friend UncertaintyState advance_unobserved(const UncertaintyState&);

    FleetLayout layout_;
    gmm::Gmm prior_;
    gmm::Gmm conditional_;
    std::vector<gmm::Vec> observations_;
    int current_k_ = 0;
};

// Conditions the remaining horizon on the period-k realization. k must be
// current_k + 1 and at most K - 1.
UncertaintyState ingest_observation(const UncertaintyState& s, int k, const gmm::Vec& obs);

// Advances the clock without conditioning: the remaining horizon keeps the
// prior marginals. This is the no-update baseline; the period-k realization
// is deliberately discarded.
UncertaintyState advance_unobserved(const UncertaintyState& s);

// Distribution of the W+S outputs in period current_k+1.
gmm::Gmm dist_next_period(const UncertaintyState& s);

// Distribution for a later period t: intermediate periods are replaced one
// at a time by their conditional expectation and conditioned upon, so the
// chain walks forward period by period.
gmm::Gmm dist_future_period(const UncertaintyState& s, int t);

// dist_next_period for t == current_k+1, dist_future_period beyond.
gmm::Gmm dist_for_period(const UncertaintyState& s, int t);

// 1-D distribution of the summed output in period t, over all assets or a
// subset of them.
gmm::Gmm sum_dist_period(const UncertaintyState& s, int t);
gmm::Gmm sum_dist_period(const UncertaintyState& s, int t, std::span<const int> assets);

// 1-D distribution of the total output over periods current_k+1 .. T.
gmm::Gmm sum_dist_horizon(const UncertaintyState& s, int T);
gmm::Gmm sum_dist_horizon(const UncertaintyState& s, int T, std::span<const int> assets);

enum class ForecastMethod { Persistence, UpdatedExpectation };

// Point forecast of the period-t outputs. Persistence repeats the latest
// observation; UpdatedExpectation is the mean of the period-t conditional.
gmm::Vec point_forecast(const UncertaintyState& s, int t, ForecastMethod method);

struct HorizonDistributions {
    std::map<int, gmm::Gmm> per_period;   // t -> W+S dimensional
    std::map<int, gmm::Gmm> period_sums;  // t -> 1-D
    gmm::Gmm horizon_sum;                 // 1-D over all remaining periods
};

// All distributions a restoration window needs, computed in one pass.
HorizonDistributions horizon_distributions(const UncertaintyState& s);

}  // namespace rlr::unc
