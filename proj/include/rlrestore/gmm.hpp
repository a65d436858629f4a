#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace rlr::gmm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// One weighted multivariate Gaussian. Covariances are stored as given
// (symmetrized on Gmm construction); regularization happens transiently
// inside operations that factorize.
struct GaussianComponent {
    double weight = 1.0;
    Vec mean;
    Mat covariance;

    Eigen::Index dim() const { return mean.size(); }
};

// Finite mixture of Gaussians over a common dimension.
//
// Construction enforces: at least one component, a common dimension,
// strictly positive weights summing to 1 within 1e-12, covariances
// symmetric within (scaled) 1e-12 and factorizable after regularization.
class Gmm {
public:
    explicit Gmm(std::vector<GaussianComponent> components);

    const std::vector<GaussianComponent>& components() const { return components_; }
    int dim() const { return dim_; }
    int component_count() const { return static_cast<int>(components_.size()); }

private:
    std::vector<GaussianComponent> components_;
    int dim_ = 0;
};

// Row-per-sample training/evaluation data.
class Dataset {
public:
    explicit Dataset(Mat rows);

    const Mat& rows() const { return rows_; }
    int dim() const { return static_cast<int>(rows_.cols()); }
    Eigen::Index size() const { return rows_.rows(); }

private:
    Mat rows_;
};

struct FitConfig {
    int max_iters = 500;
    double tol = 1e-8;            // absolute change in log-likelihood
    std::uint64_t seed = 0;       // k-means++ seeding
    double weight_floor = 1e-10;  // components below this are dropped
    std::optional<Gmm> init;      // warm start; split to m components if smaller
};

struct FitResult {
    Gmm model;
    std::vector<double> log_likelihood_trace;  // one entry per EM iteration
    int iterations = 0;
    bool converged = false;
};

struct Moments {
    Vec mean;
    Mat covariance;
};

double density(const Gmm& g, const Vec& x);
double log_density(const Gmm& g, const Vec& x);
double log_likelihood(const Gmm& g, const Dataset& d);

// Maximum-likelihood fit with m components. m == 1 is the closed-form MLE
// (biased sample covariance); otherwise EM with log-domain responsibilities.
FitResult fit_detailed(const Dataset& d, int m, const FitConfig& cfg = {});
Gmm fit(const Dataset& d, int m, const FitConfig& cfg = {});

// Conditional distribution over the complementary indices given exact
// observations at observed_idx. The result is again a mixture; weights are
// reweighted by each component's marginal likelihood of y.
Gmm condition(const Gmm& g, const std::vector<int>& observed_idx, const Vec& y);

// Distribution of A·X + c.
Gmm linear_map(const Gmm& g, const Mat& a, const Vec& c);

// Distribution of the selected coordinates, in the order given.
Gmm marginal(const Gmm& g, const std::vector<int>& idx);

Moments moments(const Gmm& g);

// CDF / quantile of a univariate mixture. Components with (near-)zero
// variance are treated as point masses, so the CDF may step; quantile1
// then returns the atom location. The |cdf1(quantile1(p)) - p| roundtrip
// is meaningful only for mixtures with continuous CDFs.
double cdf1(const Gmm& g, double x);
double quantile1(const Gmm& g, double p);

// n i.i.d. draws; component choice and Box-Muller normals come from an
// explicit 64-bit generator, so results are reproducible for a given seed.
Dataset sample(const Gmm& g, int n, std::uint64_t seed);

// JSON round-trip (decimal representation preserves the double bits).
std::string to_json(const Gmm& g);
Gmm from_json(const std::string& text);

namespace detail {

// Lower Cholesky factor of a symmetric matrix. Tries the matrix as given,
// then adds lambda * scale * I with lambda escalating 1e-9 .. 1e-3 (scale =
// trace/dim, or 1 when the trace vanishes). Throws std::runtime_error when
// even the largest ridge fails.
Mat factor_covariance_lower(const Mat& cov);

// Portable deterministic RNG (splitmix-seeded xorshift + Box-Muller).
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform01();  // (0, 1]
    double normal();

private:
    std::uint64_t s_[4];
};

double log_sum_exp(const std::vector<double>& v);

}  // namespace detail

}  // namespace rlr::gmm
