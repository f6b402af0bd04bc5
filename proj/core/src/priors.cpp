#include "abplan/priors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "abplan/errors.hpp"
#include "abplan/math/normal.hpp"
#include "abplan/math/optimize.hpp"

namespace abplan {

using math::norm_cdf;
using math::norm_pdf;

GaussianPrior::GaussianPrior(double mu_, double tau_) : mu(mu_), tau(tau_) {
    if (!std::isfinite(mu)) throw ValidationError("GaussianPrior: mu must be finite");
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ValidationError("GaussianPrior: tau must be positive and finite");
    }
    positive_mean_warning = mu > 0.0;  // violates the E[Delta] <= 0 regime assumption
}

DiscretePrior::DiscretePrior(std::vector<PriorAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ValidationError("DiscretePrior: at least one atom required");
    double total = 0.0;
    for (const PriorAtom& a : atoms_) {
        if (!std::isfinite(a.value)) throw ValidationError("DiscretePrior: atom value must be finite");
        if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
            throw ValidationError("DiscretePrior: atom weights must be strictly positive");
        }
        total += a.weight;
    }
    if (std::fabs(total - 1.0) > 1e-12) {
        throw ValidationError("DiscretePrior: weights must sum to 1 within 1e-12");
    }
    for (PriorAtom& a : atoms_) a.weight /= total;
}

double DiscretePrior::mean() const {
    double m = 0.0;
    for (const PriorAtom& a : atoms_) m += a.weight * a.value;
    return m;
}

double DiscretePrior::variance() const {
    const double m = mean();
    double v = 0.0;
    for (const PriorAtom& a : atoms_) v += a.weight * (a.value - m) * (a.value - m);
    return v;
}

const GaussianPrior& Prior::gaussian() const {
    if (!is_gaussian()) throw ValidationError("Prior: not a Gaussian prior");
    return std::get<GaussianPrior>(v_);
}

const DiscretePrior& Prior::discrete() const {
    if (is_gaussian()) throw ValidationError("Prior: not a discrete prior");
    return std::get<DiscretePrior>(v_);
}

double Prior::mean() const {
    return is_gaussian() ? gaussian().mu : discrete().mean();
}

double Prior::variance() const {
    return is_gaussian() ? gaussian().variance() : discrete().variance();
}

double Prior::sd() const { return std::sqrt(variance()); }

NoiseModel::NoiseModel(double sigma_) : sigma(sigma_) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw ValidationError("NoiseModel: sigma must be positive and finite");
    }
}

double NoiseModel::observation_sd(double n) const { return sigma / std::sqrt(n); }

ExperimentRecord::ExperimentRecord(double delta_hat_, std::int64_t n_)
    : delta_hat(delta_hat_), n(n_) {
    if (!std::isfinite(delta_hat)) {
        throw ValidationError("ExperimentRecord: delta_hat must be finite");
    }
    if (n < 1) throw ValidationError("ExperimentRecord: n must be >= 1");
}

Utility Utility::linear() { return Utility{}; }

Utility Utility::loss_averse(double b) {
    if (!(b >= 0.0) || !std::isfinite(b)) {
        throw ValidationError("Utility::loss_averse: b must be >= 0 and finite");
    }
    Utility u;
    u.kind_ = Kind::loss_averse;
    u.b_ = b;
    return u;
}

Utility Utility::custom(std::function<double(double)> fn, double check_lo,
                        double check_hi) {
    if (!fn) throw ValidationError("Utility::custom: empty function handle");
    if (!(check_lo < check_hi)) {
        throw ValidationError("Utility::custom: check range must be non-degenerate");
    }
    constexpr int kGrid = 256;
    double prev = fn(check_lo);
    for (int i = 1; i < kGrid; ++i) {
        const double x = check_lo + (check_hi - check_lo) * i / (kGrid - 1);
        const double y = fn(x);
        if (!(y >= prev)) {
            char buf[160];
            std::snprintf(buf, sizeof buf,
                          "Utility::custom: handle not increasing near x=%.6g", x);
            throw ValidationError(buf);
        }
        prev = y;
    }
    if (!(fn(check_hi) > fn(check_lo))) {
        throw ValidationError("Utility::custom: handle is constant on the check grid");
    }
    Utility u;
    u.kind_ = Kind::custom;
    u.fn_ = std::move(fn);
    return u;
}

double Utility::operator()(double x) const {
    switch (kind_) {
        case Kind::linear:
            return x;
        case Kind::loss_averse:
            return x < 0.0 ? x + b_ * x : x;
        case Kind::custom:
            return fn_(x);
    }
    return x;
}

PosteriorMoments posterior_moments_gaussian(const GaussianPrior& prior,
                                            const NoiseModel& noise, std::int64_t n,
                                            double delta_hat) {
    if (n < 1) throw ValidationError("posterior_moments_gaussian: n must be >= 1");
    const double tau2 = prior.tau * prior.tau;
    const double obs_var = noise.sigma * noise.sigma / static_cast<double>(n);
    const double total = tau2 + obs_var;
    const double m = delta_hat * tau2 / total + prior.mu * obs_var / total;
    const double s2 = tau2 * obs_var / total;
    return {m, s2};
}

namespace {

// E[u(Delta)|delta_hat] for a discrete prior: exact posterior atom weights
// with normal likelihoods, computed in log space to survive tiny noise scales.
double discrete_posterior_utility(const DiscretePrior& prior, const NoiseModel& noise,
                                  std::int64_t n, double delta_hat, const Utility& u) {
    const double se = noise.observation_sd(static_cast<double>(n));
    const std::vector<PriorAtom>& atoms = prior.atoms();
    std::vector<double> logw(atoms.size());
    double max_logw = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double z = (delta_hat - atoms[i].value) / se;
        logw[i] = std::log(atoms[i].weight) - 0.5 * z * z;
        max_logw = std::max(max_logw, logw[i]);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const double w = std::exp(logw[i] - max_logw);
        num += w * u(atoms[i].value);
        den += w;
    }
    return num / den;
}

double gauss_hermite_posterior_utility(const PosteriorMoments& post, const Utility& u,
                                       int quad_order) {
    const math::QuadratureRule& rule = math::gauss_hermite(quad_order);
    const double s = std::sqrt(post.variance);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        acc += rule.weights[i] * u(post.mean + math::kSqrt2 * s * rule.nodes[i]);
    }
    return acc / std::sqrt(3.141592653589793238462643383279502884);
}

}  // namespace

double posterior_expected_utility(const Prior& prior, const NoiseModel& noise,
                                  std::int64_t n, double delta_hat, const Utility& u,
                                  int quad_order) {
    if (n < 1) throw ValidationError("posterior_expected_utility: n must be >= 1");
    double result;
    if (!prior.is_gaussian()) {
        result = discrete_posterior_utility(prior.discrete(), noise, n, delta_hat, u);
    } else {
        const PosteriorMoments post =
            posterior_moments_gaussian(prior.gaussian(), noise, n, delta_hat);
        const double s = std::sqrt(post.variance);
        switch (u.kind()) {
            case Utility::Kind::linear:
                result = post.mean;
                break;
            case Utility::Kind::loss_averse: {
                const double b = u.loss_weight();
                const double r = post.mean / s;
                result = post.mean * (1.0 + b * norm_cdf(-r)) - b * s * norm_pdf(r);
                break;
            }
            case Utility::Kind::custom:
                result = gauss_hermite_posterior_utility(post, u, quad_order);
                break;
            default:
                result = post.mean;
        }
    }
    if (!std::isfinite(result)) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "posterior_expected_utility: non-finite result at "
                      "n=%lld delta_hat=%.17g sigma=%.17g",
                      static_cast<long long>(n), delta_hat, noise.sigma);
        throw NumericalError(buf);
    }
    return result;
}

double expected_positive_part(const Prior& prior) {
    if (prior.is_gaussian()) {
        const GaussianPrior& g = prior.gaussian();
        const double r = g.mu / g.tau;
        return g.tau * norm_pdf(r) + g.mu * norm_cdf(r);
    }
    double acc = 0.0;
    for (const PriorAtom& a : prior.discrete().atoms()) {
        if (a.value > 0.0) acc += a.weight * a.value;
    }
    return acc;
}

GaussianPrior PriorFit::prior() const {
    if (tau_degenerate) {
        throw ValidationError("PriorFit: degenerate fit (tau^2 = 0) has no GaussianPrior");
    }
    return GaussianPrior(mu, std::sqrt(tau2));
}

namespace {

struct ProfilePoint {
    double mu;
    double loglik;
};

// Profile log-likelihood at a fixed tau^2; mu is the precision-weighted mean.
ProfilePoint profile_loglik(std::span<const ExperimentRecord> records, double sigma2,
                            double tau2) {
    double wsum = 0.0, wx = 0.0;
    for (const ExperimentRecord& r : records) {
        const double v = tau2 + sigma2 / static_cast<double>(r.n);
        wsum += 1.0 / v;
        wx += r.delta_hat / v;
    }
    const double mu = wx / wsum;
    double ll = 0.0;
    for (const ExperimentRecord& r : records) {
        const double v = tau2 + sigma2 / static_cast<double>(r.n);
        const double d = r.delta_hat - mu;
        ll += -0.5 * std::log(v) - 0.5 * d * d / v;
    }
    return {mu, ll};
}

}  // namespace

PriorFit fit_gaussian_mle(std::span<const ExperimentRecord> records,
                          const NoiseModel& noise) {
    if (records.size() < 2) {
        throw ValidationError("fit_gaussian_mle: at least 2 records required");
    }
    // Accumulate in a canonical order so the fit is exactly invariant to the
    // order records arrive in.
    std::vector<ExperimentRecord> sorted(records.begin(), records.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const ExperimentRecord& a, const ExperimentRecord& b) {
                  return a.delta_hat != b.delta_hat ? a.delta_hat < b.delta_hat
                                                    : a.n < b.n;
              });
    const double sigma2 = noise.sigma * noise.sigma;

    double mean = 0.0;
    for (const ExperimentRecord& r : sorted) mean += r.delta_hat;
    mean /= static_cast<double>(sorted.size());
    double ss = 0.0;
    for (const ExperimentRecord& r : sorted) {
        ss += (r.delta_hat - mean) * (r.delta_hat - mean);
    }
    const double sample_var = ss / static_cast<double>(sorted.size() - 1);

    PriorFit fit;
    if (sample_var <= 0.0) {
        fit.mu = mean;
        fit.tau2 = 0.0;
        fit.tau_degenerate = true;
        return fit;
    }

    double upper = sample_var;
    math::ScalarSearchResult best{0.0, 0.0, 0.0};
    for (int attempt = 0; attempt < 4; ++attempt) {
        best = math::golden_section_max(
            [&](double t2) { return profile_loglik(sorted, sigma2, t2).loglik; }, 0.0,
            upper, 1e-8, 0.0, 600);
        if (upper - best.x > best.width) break;
        // Marginal variance wants to exceed the observed dispersion; widen.
        upper *= 10.0;
        fit.bracket_widened = true;
    }

    double tau2 = best.x;
    // Snap to the boundary when the likelihood is maximized at tau^2 = 0.
    if (tau2 <= best.width &&
        profile_loglik(sorted, sigma2, 0.0).loglik >= best.fx) {
        tau2 = 0.0;
    }
    const ProfilePoint p = profile_loglik(sorted, sigma2, tau2);
    fit.mu = p.mu;
    fit.tau2 = tau2;
    fit.tau_degenerate = tau2 == 0.0;
    return fit;
}

MleVariances mle_variance_equal_allocation(std::int64_t I0, std::int64_t N,
                                           const NoiseModel& noise, double tau) {
    if (I0 < 2) throw ValidationError("mle_variance_equal_allocation: I0 must be >= 2");
    if (N < 1) throw ValidationError("mle_variance_equal_allocation: N must be >= 1");
    if (!(tau > 0.0)) throw ValidationError("mle_variance_equal_allocation: tau must be > 0");
    const double marginal =
        tau * tau + noise.sigma * noise.sigma * static_cast<double>(I0) /
                        static_cast<double>(N);
    return {marginal / static_cast<double>(I0),
            marginal * marginal / static_cast<double>(I0 - 1)};
}

namespace {

std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && is_space(s[i])) ++i;
    return s.substr(i);
}

double parse_double(const std::string& field, std::size_t line_no) {
    double value{};
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ValidationError("records_from_csv: bad numeric field '" + field +
                              "' on line " + std::to_string(line_no));
    }
    return value;
}

std::int64_t parse_int(const std::string& field, std::size_t line_no) {
    std::int64_t value{};
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw ValidationError("records_from_csv: bad integer field '" + field +
                              "' on line " + std::to_string(line_no));
    }
    return value;
}

}  // namespace

std::vector<ExperimentRecord> records_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("records_from_csv: empty input");
    }
    if (trim(line) != "delta_hat,n") {
        throw ValidationError("records_from_csv: expected header 'delta_hat,n', got '" +
                              trim(line) + "'");
    }
    std::vector<ExperimentRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty()) continue;
        const std::size_t comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw ValidationError("records_from_csv: expected two fields on line " +
                                  std::to_string(line_no));
        }
        records.emplace_back(parse_double(trim(t.substr(0, comma)), line_no),
                             parse_int(trim(t.substr(comma + 1)), line_no));
    }
    return records;
}

std::vector<ExperimentRecord> records_from_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("records_from_csv_file: cannot open " + path.string());
    }
    return records_from_csv(in);
}

std::vector<ExperimentRecord> records_from_json(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("records_from_json: parse error: ") + e.what());
    }
    if (!doc.is_array()) {
        throw ValidationError("records_from_json: top-level value must be an array");
    }
    std::vector<ExperimentRecord> records;
    records.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const nlohmann::json& obj = doc[i];
        if (!obj.is_object() || !obj.contains("delta_hat") || !obj.contains("n")) {
            throw ValidationError("records_from_json: element " + std::to_string(i) +
                                  " must be an object with keys delta_hat and n");
        }
        for (const auto& [key, _] : obj.items()) {
            if (key != "delta_hat" && key != "n") {
                throw ValidationError("records_from_json: unknown key '" + key +
                                      "' in element " + std::to_string(i));
            }
        }
        records.emplace_back(obj.at("delta_hat").get<double>(),
                             obj.at("n").get<std::int64_t>());
    }
    return records;
}

}  // namespace abplan
