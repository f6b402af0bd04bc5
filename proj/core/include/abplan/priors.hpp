#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "abplan/math/quadrature.hpp"

namespace abplan {

// Treatment-effect prior N(mu, tau^2), in metric units. Mature programs have
// mu <= 0; a positive mean is allowed but flagged, since the planning results
// downstream assume most ideas do not improve the metric.
struct GaussianPrior {
    double mu;
    double tau;
    bool positive_mean_warning = false;

    GaussianPrior(double mu_, double tau_);

    double variance() const { return tau * tau; }
};

struct PriorAtom {
    double value;
    double weight;
};

// Finitely supported prior; weights must be positive and sum to 1 (within
// 1e-12 of drift, which is renormalized away).
class DiscretePrior {
public:
    explicit DiscretePrior(std::vector<PriorAtom> atoms);

    const std::vector<PriorAtom>& atoms() const { return atoms_; }
    double mean() const;
    double variance() const;

private:
    std::vector<PriorAtom> atoms_;
};

class Prior {
public:
    Prior(GaussianPrior g) : v_(std::move(g)) {}
    Prior(DiscretePrior d) : v_(std::move(d)) {}

    bool is_gaussian() const { return std::holds_alternative<GaussianPrior>(v_); }
    const GaussianPrior& gaussian() const;
    const DiscretePrior& discrete() const;

    double mean() const;
    double variance() const;
    double sd() const;

private:
    std::variant<GaussianPrior, DiscretePrior> v_;
};

// Per-unit fluctuation scale of the return metric; an observed effect from a
// test of size n has sampling noise sigma^2/n. Taken as known input, never
// estimated here.
struct NoiseModel {
    double sigma;

    explicit NoiseModel(double sigma_);

    double observation_sd(double n) const;
};

// One past experiment: observed effect and the allocation it ran with.
struct ExperimentRecord {
    double delta_hat;
    std::int64_t n;

    ExperimentRecord(double delta_hat_, std::int64_t n_);
};

// Increasing utility over realized effects. LossAverse(b) is
// u(x) = x + b*x*1{x<0} with b >= 0 (b = 0 is Linear). Custom handles are
// spot-checked for monotonicity on a 256-point grid at construction.
class Utility {
public:
    enum class Kind { linear, loss_averse, custom };

    static Utility linear();
    static Utility loss_averse(double b);
    static Utility custom(std::function<double(double)> fn, double check_lo,
                          double check_hi);

    Kind kind() const { return kind_; }
    double loss_weight() const { return b_; }

    double operator()(double x) const;

private:
    Utility() = default;

    Kind kind_ = Kind::linear;
    double b_ = 0.0;
    std::function<double(double)> fn_;
};

struct PosteriorMoments {
    double mean;
    double variance;
};

// Conjugate posterior of the effect given an observation delta_hat from a
// test of size n:  Delta | delta_hat ~ N(m, s^2).
PosteriorMoments posterior_moments_gaussian(const GaussianPrior& prior,
                                            const NoiseModel& noise, std::int64_t n,
                                            double delta_hat);

// E[u(Delta) | delta_hat; n]. Dispatch:
//   Gaussian + Linear        -> posterior mean (exact)
//   Gaussian + LossAverse    -> m(1 + b*Phi(-m/s)) - b*s*phi(m/s) (exact)
//   Gaussian + Custom        -> Gauss-Hermite over the posterior (order quad_order)
//   Discrete + any utility   -> exact atom summation with normal likelihood weights
double posterior_expected_utility(const Prior& prior, const NoiseModel& noise,
                                  std::int64_t n, double delta_hat, const Utility& u,
                                  int quad_order = math::kDefaultGaussHermiteOrder);

// E[Delta^+] under the prior. Gaussian closed form tau*phi(mu/tau) + mu*Phi(mu/tau).
double expected_positive_part(const Prior& prior);

struct PriorFit {
    double mu = 0.0;
    double tau2 = 0.0;
    bool tau_degenerate = false;   // tau_hat^2 = 0 boundary solution
    bool bracket_widened = false;  // tau^2 search bracket hit its upper end

    // Throws ValidationError when tau_degenerate (a point mass is not a valid
    // GaussianPrior).
    GaussianPrior prior() const;
};

// Gaussian MLE over heteroskedastic records: maximize
// sum_i log N(delta_hat_i; mu, tau^2 + sigma^2/n_i). mu is profiled out as the
// precision-weighted mean; tau^2 is found by golden section on
// [0, sample variance of delta_hat] (widened x10 with a warning if the upper
// boundary binds).
PriorFit fit_gaussian_mle(std::span<const ExperimentRecord> records,
                          const NoiseModel& noise);

struct MleVariances {
    double var_mu;
    double var_tau2;
};

// Sampling variance of the Gaussian MLE when N units are split equally over
// I0 tests: var_mu = (tau^2 + sigma^2 I0/N)/I0,
// var_tau2 = (tau^2 + sigma^2 I0/N)^2/(I0 - 1).
MleVariances mle_variance_equal_allocation(std::int64_t I0, std::int64_t N,
                                           const NoiseModel& noise, double tau);

// Record ingestion. CSV requires the exact header "delta_hat,n"; JSON is an
// array of objects with the same keys. Parsing is locale-independent.
std::vector<ExperimentRecord> records_from_csv(std::istream& in);
std::vector<ExperimentRecord> records_from_csv_file(const std::filesystem::path& path);
std::vector<ExperimentRecord> records_from_json(const std::string& json_text);

}  // namespace abplan
