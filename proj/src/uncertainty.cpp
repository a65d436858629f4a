#include "rlrestore/uncertainty.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace rlr::unc {

namespace {

std::vector<int> first_block_indices(int assets) {
    std::vector<int> idx(assets);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

void check_future_period(const UncertaintyState& s, int t, const char* what) {
    if (t <= s.current_k() || t > s.layout().periods) {
        throw std::invalid_argument(std::string(what) + ": period " + std::to_string(t) +
                                    " outside remaining horizon (" +
                                    std::to_string(s.current_k() + 1) + ".." +
                                    std::to_string(s.layout().periods) + ")");
    }
}

// Row vector selecting and summing a subset of assets of one period block.
gmm::Mat sum_row(int dim, int offset, std::span<const int> assets) {
    gmm::Mat row = gmm::Mat::Zero(1, dim);
    for (int a : assets) row(0, offset + a) = 1.0;
    return row;
}

void check_assets(const FleetLayout& layout, std::span<const int> assets) {
    if (assets.empty()) {
        throw std::invalid_argument("asset subset must be non-empty");
    }
    for (int a : assets) {
        if (a < 0 || a >= layout.assets()) {
            throw std::invalid_argument("asset index " + std::to_string(a) + " out of range");
        }
    }
}

}  // namespace

int FleetLayout::flat_index(int period, int asset) const {
    if (period < 1 || period > periods || asset < 0 || asset >= assets()) {
        throw std::invalid_argument("flat_index: period " + std::to_string(period) +
                                    ", asset " + std::to_string(asset) + " out of range");
    }
    return (period - 1) * assets() + asset;
}

void FleetLayout::validate() const {
    if (wind_count < 0 || solar_count < 0 || assets() < 1) {
        throw std::invalid_argument("fleet needs at least one wind or solar asset");
    }
    if (periods < 1) {
        throw std::invalid_argument("fleet needs at least one period");
    }
}

UncertaintyState::UncertaintyState(FleetLayout layout, gmm::Gmm prior)
    : layout_(layout), prior_(prior), conditional_(std::move(prior)) {
    layout_.validate();
    if (prior_.dim() != layout_.flat_dim()) {
        throw std::invalid_argument("prior dimension " + std::to_string(prior_.dim()) +
                                    " does not match fleet layout dimension " +
                                    std::to_string(layout_.flat_dim()));
    }
}

UncertaintyState ingest_observation(const UncertaintyState& s, int k, const gmm::Vec& obs) {
    if (k != s.current_k() + 1) {
        throw std::invalid_argument("ingest_observation: expected period " +
                                    std::to_string(s.current_k() + 1) + ", got " +
                                    std::to_string(k));
    }
    if (k >= s.layout().periods) {
        throw std::invalid_argument("ingest_observation: nothing left to update after period " +
                                    std::to_string(k));
    }
    if (obs.size() != s.layout().assets()) {
        throw std::invalid_argument("ingest_observation: observation length " +
                                    std::to_string(obs.size()) + " does not match asset count " +
                                    std::to_string(s.layout().assets()));
    }
    UncertaintyState next = s;
    next.conditional_ =
        gmm::condition(s.conditional(), first_block_indices(s.layout().assets()), obs);
    next.observations_.push_back(obs);
    next.current_k_ = k;
    return next;
}

UncertaintyState advance_unobserved(const UncertaintyState& s) {
    const int k = s.current_k() + 1;
    if (k >= s.layout().periods) {
        throw std::invalid_argument("advance_unobserved: horizon exhausted");
    }
    const int assets = s.layout().assets();
    std::vector<int> keep(s.conditional().dim() - assets);
    std::iota(keep.begin(), keep.end(), assets);
    UncertaintyState next = s;
    next.conditional_ = gmm::marginal(s.conditional(), keep);
    next.current_k_ = k;
    return next;
}

gmm::Gmm dist_next_period(const UncertaintyState& s) {
    if (s.current_k() >= s.layout().periods) {
        throw std::invalid_argument("dist_next_period: horizon exhausted");
    }
    return gmm::marginal(s.conditional(), first_block_indices(s.layout().assets()));
}

gmm::Gmm dist_future_period(const UncertaintyState& s, int t) {
    check_future_period(s, t, "dist_future_period");
    const int assets = s.layout().assets();
    const auto block = first_block_indices(assets);
    gmm::Gmm chain = s.conditional();
    for (int step = s.current_k() + 1; step < t; ++step) {
        // replace this period by its conditional expectation, then condition
        gmm::Vec expected = gmm::Vec::Zero(assets);
        for (const auto& comp : chain.components()) {
            expected += comp.weight * comp.mean.head(assets);
        }
        chain = gmm::condition(chain, block, expected);
    }
    return gmm::marginal(chain, block);
}

gmm::Gmm dist_for_period(const UncertaintyState& s, int t) {
    check_future_period(s, t, "dist_for_period");
    if (t == s.current_k() + 1) return dist_next_period(s);
    return dist_future_period(s, t);
}

gmm::Gmm sum_dist_period(const UncertaintyState& s, int t) {
    std::vector<int> all(s.layout().assets());
    std::iota(all.begin(), all.end(), 0);
    return sum_dist_period(s, t, all);
}

gmm::Gmm sum_dist_period(const UncertaintyState& s, int t, std::span<const int> assets) {
    check_assets(s.layout(), assets);
    const gmm::Gmm period = dist_for_period(s, t);
    return gmm::linear_map(period, sum_row(period.dim(), 0, assets), gmm::Vec::Zero(1));
}

gmm::Gmm sum_dist_horizon(const UncertaintyState& s, int T) {
    std::vector<int> all(s.layout().assets());
    std::iota(all.begin(), all.end(), 0);
    return sum_dist_horizon(s, T, all);
}

gmm::Gmm sum_dist_horizon(const UncertaintyState& s, int T, std::span<const int> assets) {
    check_future_period(s, T, "sum_dist_horizon");
    check_assets(s.layout(), assets);
    const int assets_per_period = s.layout().assets();
    gmm::Mat row = gmm::Mat::Zero(1, s.conditional().dim());
    for (int t = s.current_k() + 1; t <= T; ++t) {
        const int offset = (t - s.current_k() - 1) * assets_per_period;
        for (int a : assets) row(0, offset + a) = 1.0;
    }
    return gmm::linear_map(s.conditional(), row, gmm::Vec::Zero(1));
}

gmm::Vec point_forecast(const UncertaintyState& s, int t, ForecastMethod method) {
    check_future_period(s, t, "point_forecast");
    if (method == ForecastMethod::Persistence) {
        if (s.observations().empty()) {
            throw std::invalid_argument("point_forecast: persistence needs an observation");
        }
        return s.observations().back();
    }
    return gmm::moments(dist_for_period(s, t)).mean;
}

HorizonDistributions horizon_distributions(const UncertaintyState& s) {
    const int K = s.layout().periods;
    std::map<int, gmm::Gmm> per_period;
    std::map<int, gmm::Gmm> period_sums;
    std::vector<int> all(s.layout().assets());
    std::iota(all.begin(), all.end(), 0);
    for (int t = s.current_k() + 1; t <= K; ++t) {
        gmm::Gmm dist = dist_for_period(s, t);
        period_sums.emplace(
            t, gmm::linear_map(dist, sum_row(dist.dim(), 0, all), gmm::Vec::Zero(1)));
        per_period.emplace(t, std::move(dist));
    }
    return HorizonDistributions{std::move(per_period), std::move(period_sums),
                                sum_dist_horizon(s, K)};
}

}  // namespace rlr::unc
