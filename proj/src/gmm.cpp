#include "rlrestore/gmm.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rlr::gmm {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kSymmetryTol = 1e-12;
// Below this a 1-D component is treated as a point mass.
constexpr double kDegenerateVariance = 1e-30;
// All-component log-likelihood underflow threshold for conditioning.
constexpr double kUnderflowLogLik = -700.0;

double two_pi() { return 2.0 * std::numbers::pi; }

void check_dim(const Gmm& g, const Vec& x, const char* what) {
    if (x.size() != g.dim()) {
        throw std::invalid_argument(std::string(what) + ": vector has dimension " +
                                    std::to_string(x.size()) + ", mixture has " +
                                    std::to_string(g.dim()));
    }
}

// log N(x; mu, cov) given the lower Cholesky factor of cov.
double log_normal_pdf(const Vec& x, const Vec& mu, const Mat& chol_lower) {
    const Eigen::Index d = x.size();
    Vec u = chol_lower.triangularView<Eigen::Lower>().solve(x - mu);
    double log_det_half = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        log_det_half += std::log(chol_lower(i, i));
    }
    return -0.5 * u.squaredNorm() - log_det_half - 0.5 * double(d) * std::log(two_pi());
}

double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

std::vector<int> complement_indices(int dim, const std::vector<int>& idx) {
    std::vector<char> taken(dim, 0);
    for (int i : idx) taken[i] = 1;
    std::vector<int> rest;
    rest.reserve(dim - idx.size());
    for (int i = 0; i < dim; ++i) {
        if (!taken[i]) rest.push_back(i);
    }
    return rest;
}

void check_index_set(const std::vector<int>& idx, int dim, const char* what) {
    std::vector<char> seen(dim, 0);
    for (int i : idx) {
        if (i < 0 || i >= dim) {
            throw std::invalid_argument(std::string(what) + ": index " + std::to_string(i) +
                                        " out of range for dimension " + std::to_string(dim));
        }
        if (seen[i]) {
            throw std::invalid_argument(std::string(what) + ": duplicate index " +
                                        std::to_string(i));
        }
        seen[i] = 1;
    }
}

Mat submatrix(const Mat& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    Mat out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            out(i, j) = m(rows[i], cols[j]);
        }
    }
    return out;
}

Vec subvector(const Vec& v, const std::vector<int>& idx) {
    Vec out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
    return out;
}

}  // namespace

namespace detail {

double log_sum_exp(const std::vector<double>& v) {
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) hi = std::max(hi, x);
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

Mat factor_covariance_lower(const Mat& cov) {
    const Eigen::Index d = cov.rows();
    double scale = cov.trace() / double(d);
    if (!(scale > 0.0)) scale = 1.0;

    Eigen::LLT<Mat> llt(cov);
    if (llt.info() == Eigen::Success) {
        Mat lower = llt.matrixL();
        if ((lower.diagonal().array() > 0.0).all()) return lower;
    }
    for (double lambda = 1e-9; lambda <= 1e-3 * 1.0000001; lambda *= 10.0) {
        Mat jittered = cov + lambda * scale * Mat::Identity(d, d);
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) {
            Mat lower = llt.matrixL();
            if ((lower.diagonal().array() > 0.0).all()) return lower;
        }
    }
    throw std::runtime_error("covariance is not positive definite even after maximum ridge");
}

Rng::Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into xoshiro256++ state
    std::uint64_t x = seed;
    for (auto& s : s_) {
        x += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = x;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        s = z ^ (z >> 31);
    }
}

std::uint64_t Rng::next_u64() {
    auto rotl = [](std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); };
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform01() {
    // 53-bit mantissa, shifted into (0, 1]
    return (double((next_u64() >> 11) + 1)) * 0x1.0p-53;
}

double Rng::normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi() * u2);
}

}  // namespace detail

Gmm::Gmm(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    if (components_.empty()) {
        throw std::invalid_argument("mixture needs at least one component");
    }
    dim_ = static_cast<int>(components_[0].dim());
    if (dim_ <= 0) {
        throw std::invalid_argument("mixture dimension must be positive");
    }
    double weight_sum = 0.0;
    for (auto& comp : components_) {
        if (!(comp.weight > 0.0)) {
            throw std::invalid_argument("component weights must be strictly positive");
        }
        if (comp.dim() != dim_ || comp.covariance.rows() != dim_ ||
            comp.covariance.cols() != dim_) {
            throw std::invalid_argument("all components must share the mixture dimension");
        }
        const double mag = std::max(1.0, comp.covariance.cwiseAbs().maxCoeff());
        if ((comp.covariance - comp.covariance.transpose()).cwiseAbs().maxCoeff() >
            kSymmetryTol * mag) {
            throw std::invalid_argument("component covariance is not symmetric");
        }
        comp.covariance = 0.5 * (comp.covariance + comp.covariance.transpose()).eval();
        weight_sum += comp.weight;
        detail::factor_covariance_lower(comp.covariance);  // must be recoverable
    }
    if (std::abs(weight_sum - 1.0) > kWeightSumTol) {
        throw std::invalid_argument("component weights must sum to 1, got " +
                                    std::to_string(weight_sum));
    }
}

Dataset::Dataset(Mat rows) : rows_(std::move(rows)) {
    if (rows_.rows() == 0 || rows_.cols() == 0) {
        throw std::invalid_argument("dataset must be non-empty");
    }
    if (!rows_.allFinite()) {
        throw std::invalid_argument("dataset contains non-finite values");
    }
}

double log_density(const Gmm& g, const Vec& x) {
    check_dim(g, x, "log_density");
    std::vector<double> terms;
    terms.reserve(g.components().size());
    for (const auto& comp : g.components()) {
        Mat lower = detail::factor_covariance_lower(comp.covariance);
        terms.push_back(std::log(comp.weight) + log_normal_pdf(x, comp.mean, lower));
    }
    return detail::log_sum_exp(terms);
}

double density(const Gmm& g, const Vec& x) { return std::exp(log_density(g, x)); }

double log_likelihood(const Gmm& g, const Dataset& d) {
    if (d.dim() != g.dim()) {
        throw std::invalid_argument("log_likelihood: dataset dimension " +
                                    std::to_string(d.dim()) + " does not match mixture " +
                                    std::to_string(g.dim()));
    }
    const int m = g.component_count();
    std::vector<Mat> lowers;
    lowers.reserve(m);
    for (const auto& comp : g.components()) {
        lowers.push_back(detail::factor_covariance_lower(comp.covariance));
    }
    double total = 0.0;
    std::vector<double> terms(m);
    for (Eigen::Index r = 0; r < d.size(); ++r) {
        Vec x = d.rows().row(r);
        for (int j = 0; j < m; ++j) {
            terms[j] = std::log(g.components()[j].weight) +
                       log_normal_pdf(x, g.components()[j].mean, lowers[j]);
        }
        total += detail::log_sum_exp(terms);
    }
    return total;
}

namespace {

// k-means++ choice of m rows as initial means.
std::vector<int> seed_means(const Dataset& d, int m, detail::Rng& rng) {
    const Eigen::Index n = d.size();
    std::vector<int> chosen;
    chosen.push_back(static_cast<int>(rng.next_u64() % std::uint64_t(n)));
    Vec dist2 = Vec::Constant(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(chosen.size()) < m) {
        const auto& last = d.rows().row(chosen.back());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sq = (d.rows().row(i) - last).squaredNorm();
            dist2[i] = std::min(dist2[i], sq);
        }
        const double total = dist2.sum();
        int pick;
        if (total > 0.0) {
            double u = rng.uniform01() * total;
            pick = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                u -= dist2[i];
                if (u <= 0.0) {
                    pick = static_cast<int>(i);
                    break;
                }
            }
        } else {
            pick = static_cast<int>(rng.next_u64() % std::uint64_t(n));
        }
        chosen.push_back(pick);
    }
    return chosen;
}

Mat pooled_covariance(const Dataset& d) {
    const Vec mu = d.rows().colwise().mean();
    Mat centered = d.rows().rowwise() - mu.transpose();
    Mat cov = (centered.transpose() * centered) / double(d.size());
    return 0.5 * (cov + cov.transpose());
}

GaussianComponent closed_form_mle(const Dataset& d) {
    GaussianComponent comp;
    comp.weight = 1.0;
    comp.mean = d.rows().colwise().mean();
    comp.covariance = pooled_covariance(d);
    return comp;
}

// Grow a warm-start mixture to m components by splitting the heaviest
// component along its principal axis.
std::vector<GaussianComponent> expand_init(const Gmm& init, int m) {
    std::vector<GaussianComponent> comps = init.components();
    while (static_cast<int>(comps.size()) < m) {
        auto it = std::max_element(
            comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.weight < b.weight; });
        GaussianComponent heavy = *it;
        comps.erase(it);
        Eigen::SelfAdjointEigenSolver<Mat> eig(heavy.covariance);
        const Eigen::Index top = heavy.covariance.rows() - 1;
        Vec axis = eig.eigenvectors().col(top);
        const double sigma = std::sqrt(std::max(eig.eigenvalues()[top], 1e-12));
        GaussianComponent a = heavy, b = heavy;
        a.weight = b.weight = heavy.weight / 2.0;
        a.mean = heavy.mean - 0.5 * sigma * axis;
        b.mean = heavy.mean + 0.5 * sigma * axis;
        comps.push_back(a);
        comps.push_back(b);
    }
    return comps;
}

}  // namespace

FitResult fit_detailed(const Dataset& d, int m, const FitConfig& cfg) {
    if (m < 1) throw std::invalid_argument("fit: component count must be >= 1");
    if (d.size() < m) {
        throw std::invalid_argument("fit: need at least as many rows as components");
    }
    if (m == 1) {
        Gmm model({closed_form_mle(d)});
        FitResult res{model, {log_likelihood(model, d)}, 1, true};
        return res;
    }

    const Eigen::Index n = d.size();
    const int dim = d.dim();
    std::vector<GaussianComponent> comps;
    if (cfg.init.has_value()) {
        if (cfg.init->dim() != dim) {
            throw std::invalid_argument("fit: warm-start dimension mismatch");
        }
        if (cfg.init->component_count() > m) {
            throw std::invalid_argument("fit: warm start has more components than requested");
        }
        comps = expand_init(*cfg.init, m);
    } else {
        detail::Rng rng(cfg.seed);
        const Mat pooled = pooled_covariance(d);
        for (int idx : seed_means(d, m, rng)) {
            GaussianComponent comp;
            comp.weight = 1.0 / m;
            comp.mean = d.rows().row(idx);
            comp.covariance = pooled;
            comps.push_back(comp);
        }
    }

    FitResult res{Gmm(comps), {}, 0, false};
    Mat resp(n, comps.size());
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < cfg.max_iters; ++iter) {
        const int k = static_cast<int>(comps.size());
        // E step: log-domain responsibilities and the current log-likelihood.
        std::vector<Mat> lowers;
        lowers.reserve(k);
        for (const auto& comp : comps) {
            lowers.push_back(detail::factor_covariance_lower(comp.covariance));
        }
        resp.resize(n, k);
        double ll = 0.0;
        std::vector<double> terms(k);
        for (Eigen::Index r = 0; r < n; ++r) {
            Vec x = d.rows().row(r);
            for (int j = 0; j < k; ++j) {
                terms[j] = std::log(comps[j].weight) + log_normal_pdf(x, comps[j].mean, lowers[j]);
            }
            const double lse = detail::log_sum_exp(terms);
            ll += lse;
            for (int j = 0; j < k; ++j) resp(r, j) = std::exp(terms[j] - lse);
        }
        res.log_likelihood_trace.push_back(ll);
        res.iterations = iter + 1;
        if (std::abs(ll - prev_ll) < cfg.tol) {
            res.converged = true;
            break;
        }
        prev_ll = ll;

        // M step.
        std::vector<GaussianComponent> next;
        next.reserve(k);
        for (int j = 0; j < k; ++j) {
            const double nk = resp.col(j).sum();
            const double w = nk / double(n);
            if (w < cfg.weight_floor) continue;  // dropped, renormalized below
            GaussianComponent comp;
            comp.weight = w;
            comp.mean = (resp.col(j).transpose() * d.rows()).transpose() / nk;
            Mat centered = d.rows().rowwise() - comp.mean.transpose();
            Mat cov = centered.transpose() * (resp.col(j).asDiagonal() * centered) / nk;
            comp.covariance = 0.5 * (cov + cov.transpose());
            next.push_back(comp);
        }
        if (next.empty()) {
            throw std::runtime_error("fit: every component fell below the weight floor");
        }
        double wsum = 0.0;
        for (const auto& comp : next) wsum += comp.weight;
        for (auto& comp : next) comp.weight /= wsum;
        comps = std::move(next);
    }

    res.model = Gmm(comps);
    return res;
}

Gmm fit(const Dataset& d, int m, const FitConfig& cfg) { return fit_detailed(d, m, cfg).model; }

Gmm condition(const Gmm& g, const std::vector<int>& observed_idx, const Vec& y) {
    if (observed_idx.empty()) {
        throw std::invalid_argument("condition: observed index set is empty");
    }
    check_index_set(observed_idx, g.dim(), "condition");
    if (static_cast<int>(observed_idx.size()) >= g.dim()) {
        throw std::invalid_argument("condition: observing every coordinate leaves nothing");
    }
    if (y.size() != static_cast<Eigen::Index>(observed_idx.size())) {
        throw std::invalid_argument("condition: observation length does not match index set");
    }
    const std::vector<int> rest = complement_indices(g.dim(), observed_idx);

    const int m = g.component_count();
    std::vector<GaussianComponent> conditioned(m);
    std::vector<double> log_lik(m);
    for (int j = 0; j < m; ++j) {
        const auto& comp = g.components()[j];
        const Vec mu_y = subvector(comp.mean, observed_idx);
        const Vec mu_z = subvector(comp.mean, rest);
        const Mat s_yy = submatrix(comp.covariance, observed_idx, observed_idx);
        const Mat s_zy = submatrix(comp.covariance, rest, observed_idx);
        const Mat s_zz = submatrix(comp.covariance, rest, rest);

        Mat lower = detail::factor_covariance_lower(s_yy);
        log_lik[j] = log_normal_pdf(y, mu_y, lower);

        // gain = s_zy * inv(s_yy) via two triangular solves
        Mat gain = lower.transpose().triangularView<Eigen::Upper>().solve(
            lower.triangularView<Eigen::Lower>().solve(s_zy.transpose()));
        gain.transposeInPlace();

        conditioned[j].mean = mu_z + gain * (y - mu_y);
        Mat cov = s_zz - gain * s_zy.transpose();
        conditioned[j].covariance = 0.5 * (cov + cov.transpose());
    }

    double max_log_lik = *std::max_element(log_lik.begin(), log_lik.end());
    if (max_log_lik < kUnderflowLogLik) {
        // Observation far outside the prior's support: keep the single most
        // plausible component instead of renormalizing noise.
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            const double score = std::log(g.components()[j].weight) + log_lik[j];
            if (score > best_score) {
                best_score = score;
                best = j;
            }
        }
        std::cerr << "rlrestore: conditioning observation underflows every component; "
                     "hard-assigning component "
                  << best << "\n";
        conditioned[best].weight = 1.0;
        return Gmm({conditioned[best]});
    }

    std::vector<double> log_w(m);
    for (int j = 0; j < m; ++j) log_w[j] = std::log(g.components()[j].weight) + log_lik[j];
    const double lse = detail::log_sum_exp(log_w);
    for (int j = 0; j < m; ++j) conditioned[j].weight = std::exp(log_w[j] - lse);

    // Exact renormalization guards the sum-to-one invariant.
    double wsum = 0.0;
    for (const auto& comp : conditioned) wsum += comp.weight;
    std::vector<GaussianComponent> kept;
    kept.reserve(m);
    for (auto& comp : conditioned) {
        comp.weight /= wsum;
        if (comp.weight > 0.0) kept.push_back(std::move(comp));
    }
    return Gmm(std::move(kept));
}

Gmm linear_map(const Gmm& g, const Mat& a, const Vec& c) {
    if (a.cols() != g.dim()) {
        throw std::invalid_argument("linear_map: matrix has " + std::to_string(a.cols()) +
                                    " columns, mixture dimension is " + std::to_string(g.dim()));
    }
    if (c.size() != a.rows()) {
        throw std::invalid_argument("linear_map: offset length does not match matrix rows");
    }
    if (a.rows() == 0) {
        throw std::invalid_argument("linear_map: output dimension must be positive");
    }
    std::vector<GaussianComponent> comps;
    comps.reserve(g.components().size());
    for (const auto& comp : g.components()) {
        GaussianComponent out;
        out.weight = comp.weight;
        out.mean = a * comp.mean + c;
        Mat cov = a * comp.covariance * a.transpose();
        out.covariance = 0.5 * (cov + cov.transpose());
        comps.push_back(std::move(out));
    }
    return Gmm(std::move(comps));
}

Gmm marginal(const Gmm& g, const std::vector<int>& idx) {
    if (idx.empty()) throw std::invalid_argument("marginal: index list is empty");
    check_index_set(idx, g.dim(), "marginal");
    std::vector<GaussianComponent> comps;
    comps.reserve(g.components().size());
    for (const auto& comp : g.components()) {
        GaussianComponent out;
        out.weight = comp.weight;
        out.mean = subvector(comp.mean, idx);
        out.covariance = submatrix(comp.covariance, idx, idx);
        comps.push_back(std::move(out));
    }
    return Gmm(std::move(comps));
}

Moments moments(const Gmm& g) {
    Vec mean = Vec::Zero(g.dim());
    for (const auto& comp : g.components()) mean += comp.weight * comp.mean;
    Mat cov = Mat::Zero(g.dim(), g.dim());
    for (const auto& comp : g.components()) {
        cov += comp.weight * (comp.covariance + comp.mean * comp.mean.transpose());
    }
    cov -= mean * mean.transpose();
    return {mean, 0.5 * (cov + cov.transpose())};
}

double cdf1(const Gmm& g, double x) {
    if (g.dim() != 1) throw std::invalid_argument("cdf1: mixture must be univariate");
    double acc = 0.0;
    for (const auto& comp : g.components()) {
        const double var = comp.covariance(0, 0);
        if (var <= kDegenerateVariance) {
            acc += (x >= comp.mean[0]) ? comp.weight : 0.0;
        } else {
            acc += comp.weight * standard_normal_cdf((x - comp.mean[0]) / std::sqrt(var));
        }
    }
    return std::min(1.0, std::max(0.0, acc));
}

double quantile1(const Gmm& g, double p) {
    if (g.dim() != 1) throw std::invalid_argument("quantile1: mixture must be univariate");
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("quantile1: probability must lie strictly in (0,1)");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& comp : g.components()) {
        const double sigma = std::sqrt(std::max(comp.covariance(0, 0), 0.0));
        lo = std::min(lo, comp.mean[0] - 10.0 * sigma);
        hi = std::max(hi, comp.mean[0] + 10.0 * sigma);
    }
    if (lo == hi) return lo;
    double step = std::max(1.0, hi - lo);
    for (int i = 0; i < 64 && cdf1(g, lo) > p; ++i) lo -= step;
    for (int i = 0; i < 64 && cdf1(g, hi) < p; ++i) hi += step;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (cdf1(g, mid) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

Dataset sample(const Gmm& g, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample: need at least one draw");
    detail::Rng rng(seed);
    const int m = g.component_count();
    std::vector<Mat> lowers;
    lowers.reserve(m);
    for (const auto& comp : g.components()) {
        lowers.push_back(detail::factor_covariance_lower(comp.covariance));
    }
    Mat rows(n, g.dim());
    Vec z(g.dim());
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform01();
        int pick = m - 1;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) {
            acc += g.components()[j].weight;
            if (u <= acc) {
                pick = j;
                break;
            }
        }
        for (int d = 0; d < g.dim(); ++d) z[d] = rng.normal();
        rows.row(i) = (g.components()[pick].mean + lowers[pick] * z).transpose();
    }
    return Dataset(std::move(rows));
}

std::string to_json(const Gmm& g) {
    nlohmann::ordered_json doc;
    doc["dim"] = g.dim();
    auto& comps = doc["components"] = nlohmann::ordered_json::array();
    for (const auto& comp : g.components()) {
        nlohmann::ordered_json jc;
        jc["weight"] = comp.weight;
        jc["mean"] = std::vector<double>(comp.mean.begin(), comp.mean.end());
        auto& rows = jc["covariance"] = nlohmann::ordered_json::array();
        for (Eigen::Index r = 0; r < comp.covariance.rows(); ++r) {
            rows.push_back(std::vector<double>(comp.covariance.row(r).begin(),
                                               comp.covariance.row(r).end()));
        }
        comps.push_back(std::move(jc));
    }
    return doc.dump(2);
}

Gmm from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("mixture JSON parse error: ") + e.what());
    }
    if (!doc.contains("dim") || !doc.contains("components")) {
        throw std::invalid_argument("mixture JSON needs 'dim' and 'components'");
    }
    const int dim = doc["dim"].get<int>();
    std::vector<GaussianComponent> comps;
    for (const auto& jc : doc["components"]) {
        GaussianComponent comp;
        comp.weight = jc.at("weight").get<double>();
        const auto mean = jc.at("mean").get<std::vector<double>>();
        if (static_cast<int>(mean.size()) != dim) {
            throw std::invalid_argument("mixture JSON: mean length does not match dim");
        }
        comp.mean = Eigen::Map<const Vec>(mean.data(), mean.size());
        comp.covariance.resize(dim, dim);
        const auto& rows = jc.at("covariance");
        if (static_cast<int>(rows.size()) != dim) {
            throw std::invalid_argument("mixture JSON: covariance must be dim x dim");
        }
        for (int r = 0; r < dim; ++r) {
            const auto row = rows[r].get<std::vector<double>>();
            if (static_cast<int>(row.size()) != dim) {
                throw std::invalid_argument("mixture JSON: covariance must be dim x dim");
            }
            for (int c = 0; c < dim; ++c) comp.covariance(r, c) = row[c];
        }
        comps.push_back(std::move(comp));
    }
    return Gmm(std::move(comps));
}

}  // namespace rlr::gmm
