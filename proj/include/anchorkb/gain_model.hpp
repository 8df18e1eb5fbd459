#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace anchorkb {

// One benchmark measurement: a host system's baseline score and the
// improvement observed when anchor context is added.
struct GainPoint {
    std::string host;
    std::string metric;  // lme_micro | lme_macro | locomo
    double base = 0.0;   // percentage points, 0..100
    double delta = 0.0;  // percentage points, base + delta <= 100
};

// CSV columns: host,metric,base,delta. A header row is detected and
// skipped. Row problems raise SchemaError.
std::vector<GainPoint> load_gain_csv(const std::string& path);

// Saturating success model P = 1 - e^(-lambda * rho).
double predict_success(double lambda, double rho);

// Expected improvement from adding coverage delta_rho on top of a baseline
// success probability: (1 - e^(-lambda * delta_rho)) * (1 - p_base), which
// is linear in p_base with slope -K for the constant
// K = 1 - e^(-lambda * delta_rho). Requires lambda > 0, delta_rho >= 0 and
// p_base in [0, 1].
double predict_gain(double lambda, double delta_rho, double p_base);
double gain_constant(double lambda, double delta_rho);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_value_slope = 0.0;  // two-sided, slope != 0
    std::size_t n = 0;
};

// Closed-form simple OLS of y on x. Degenerate designs (n < 3 or constant
// x) raise DegenerateDesignError. A perfect fit (zero residual) reports
// r_squared = 1.
LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y);

struct FTestResult {
    double f_stat = 0.0;
    double p_value = 0.0;
    std::size_t df1 = 0;
    std::size_t df2 = 0;
    double rss_restricted = 0.0;
    double rss_full = 0.0;
};

// Nested F-test of slope homogeneity across host groups: the restricted
// model is one common slope and intercept; the full model keeps the common
// intercept but gives each host its own slope. Needs at least two groups
// with two points each.
FTestResult common_slope_f_test(const std::vector<GainPoint>& points);

struct GainAnalysis {
    LinearFit pooled;                        // delta ~ base over all points
    std::map<std::string, LinearFit> per_metric;
    FTestResult f_test;
};

GainAnalysis analyze_gains(const std::vector<GainPoint>& points);

nlohmann::json analysis_to_json(const GainAnalysis& analysis);

}  // namespace anchorkb
