#include "anchorkb/gain_model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "anchorkb/errors.hpp"
#include "anchorkb/stats.hpp"
#include "anchorkb/text.hpp"

namespace anchorkb {

namespace {

const std::set<std::string>& known_metrics() {
    static const std::set<std::string> metrics = {"lme_micro", "lme_macro", "locomo"};
    return metrics;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(trim(field));
    return fields;
}

bool parse_number(const std::string& text, double& out) {
    try {
        std::size_t consumed = 0;
        out = std::stod(text, &consumed);
        return consumed == text.size();
    } catch (const std::exception&) {
        return false;
    }
}

// Solves A x = b in place with partial pivoting; A is n x n row-major.
std::vector<double> solve_linear_system(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::fabs(a[row][col]) > std::fabs(a[pivot][col])) pivot = row;
        }
        if (std::fabs(a[pivot][col]) < 1e-12) {
            throw DegenerateDesignError("singular design matrix in grouped regression");
        }
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (std::size_t row = col + 1; row < n; ++row) {
            double factor = a[row][col] / a[col][col];
            for (std::size_t k = col; k < n; ++k) a[row][k] -= factor * a[col][k];
            b[row] -= factor * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double sum = b[i];
        for (std::size_t k = i + 1; k < n; ++k) sum -= a[i][k] * x[k];
        x[i] = sum / a[i][i];
    }
    return x;
}

}  // namespace

std::vector<GainPoint> load_gain_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open gain dataset: " + path);

    std::vector<GainPoint> points;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto fields = split_csv_line(stripped);
        if (fields.size() != 4) {
            throw SchemaError("gain dataset line " + std::to_string(line_number) +
                              ": expected 4 comma-separated fields");
        }
        double base = 0.0;
        double delta = 0.0;
        bool numeric = parse_number(fields[2], base) && parse_number(fields[3], delta);
        if (!numeric) {
            // The first non-numeric row is treated as the header.
            if (points.empty() && to_lower(fields[0]) == "host") continue;
            throw SchemaError("gain dataset line " + std::to_string(line_number) +
                              ": non-numeric base/delta");
        }
        GainPoint point{fields[0], to_lower(fields[1]), base, delta};
        if (point.host.empty()) {
            throw SchemaError("gain dataset line " + std::to_string(line_number) +
                              ": empty host");
        }
        if (!known_metrics().count(point.metric)) {
            throw SchemaError("gain dataset line " + std::to_string(line_number) +
                              ": unknown metric '" + point.metric + "'");
        }
        if (point.base < 0.0 || point.base > 100.0 || point.base + point.delta > 100.0) {
            throw SchemaError("gain dataset line " + std::to_string(line_number) +
                              ": scores must stay within 0..100");
        }
        points.push_back(std::move(point));
    }
    if (points.empty()) throw EmptyInputError("gain dataset holds no data rows");
    return points;
}

double predict_success(double lambda, double rho) { return 1.0 - std::exp(-lambda * rho); }

double gain_constant(double lambda, double delta_rho) {
    return 1.0 - std::exp(-lambda * delta_rho);
}

double predict_gain(double lambda, double delta_rho, double p_base) {
    if (!(lambda > 0.0)) throw std::invalid_argument("predict_gain: lambda must be positive");
    if (!(delta_rho >= 0.0)) {
        throw std::invalid_argument("predict_gain: delta_rho must be non-negative");
    }
    if (!(p_base >= 0.0 && p_base <= 1.0)) {
        throw std::invalid_argument("predict_gain: p_base must lie in [0, 1]");
    }
    return gain_constant(lambda, delta_rho) * (1.0 - p_base);
}

LinearFit fit_linear(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_linear: size mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw DegenerateDesignError("regression needs at least 3 points");

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mean_x;
        double dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DegenerateDesignError("regression predictor has no variation");

    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = mean_y - fit.slope * mean_x;

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double resid = y[i] - (fit.intercept + fit.slope * x[i]);
        rss += resid * resid;
    }
    if (rss <= 0.0) {
        fit.r_squared = 1.0;
        fit.p_value_slope = 0.0;
        return fit;
    }
    fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - rss / syy;

    double dof = static_cast<double>(n - 2);
    double se_slope = std::sqrt(rss / dof / sxx);
    double t = fit.slope / se_slope;
    fit.p_value_slope = student_t_two_sided_p(t, dof);
    return fit;
}

FTestResult common_slope_f_test(const std::vector<GainPoint>& points) {
    std::vector<double> base;
    std::vector<double> delta;
    std::vector<std::string> groups;
    std::map<std::string, std::size_t> group_index;
    std::vector<std::size_t> membership;
    for (const auto& point : points) {
        base.push_back(point.base);
        delta.push_back(point.delta);
        auto [it, inserted] = group_index.try_emplace(point.host, groups.size());
        if (inserted) groups.push_back(point.host);
        membership.push_back(it->second);
    }
    const std::size_t n = points.size();
    const std::size_t g = groups.size();
    if (g < 2) throw DegenerateDesignError("slope-homogeneity test needs at least 2 groups");
    std::vector<std::size_t> group_sizes(g, 0);
    for (std::size_t member : membership) ++group_sizes[member];
    for (std::size_t i = 0; i < g; ++i) {
        if (group_sizes[i] < 2) {
            throw DegenerateDesignError("host group '" + groups[i] + "' has fewer than 2 points");
        }
    }
    if (n <= g + 1) throw DegenerateDesignError("too few points for the grouped regression");

    LinearFit restricted = fit_linear(base, delta);
    double rss_restricted = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double resid = delta[i] - (restricted.intercept + restricted.slope * base[i]);
        rss_restricted += resid * resid;
    }

    // Full model: delta = a + b_g * base. Normal equations over the
    // parameter vector [a, b_0 .. b_{g-1}].
    const std::size_t p = g + 1;
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t group = membership[i];
        double row[2] = {1.0, base[i]};
        std::size_t cols[2] = {0, 1 + group};
        for (int a = 0; a < 2; ++a) {
            xty[cols[a]] += row[a] * delta[i];
            for (int b = 0; b < 2; ++b) xtx[cols[a]][cols[b]] += row[a] * row[b];
        }
    }
    std::vector<double> params = solve_linear_system(std::move(xtx), std::move(xty));

    double rss_full = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double predicted = params[0] + params[1 + membership[i]] * base[i];
        double resid = delta[i] - predicted;
        rss_full += resid * resid;
    }

    FTestResult result;
    result.df1 = g - 1;
    result.df2 = n - p;
    result.rss_restricted = rss_restricted;
    result.rss_full = rss_full;
    double numerator = (rss_restricted - rss_full) / static_cast<double>(result.df1);
    double denominator = rss_full / static_cast<double>(result.df2);
    if (denominator <= 0.0) {
        throw DegenerateDesignError("full model leaves no residual variance");
    }
    result.f_stat = numerator / denominator;
    result.p_value = f_upper_tail_p(result.f_stat, static_cast<double>(result.df1),
                                    static_cast<double>(result.df2));
    return result;
}

GainAnalysis analyze_gains(const std::vector<GainPoint>& points) {
    GainAnalysis analysis;
    std::vector<double> base;
    std::vector<double> delta;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_metric;
    for (const auto& point : points) {
        base.push_back(point.base);
        delta.push_back(point.delta);
        by_metric[point.metric].first.push_back(point.base);
        by_metric[point.metric].second.push_back(point.delta);
    }
    analysis.pooled = fit_linear(base, delta);
    for (const auto& [metric, series] : by_metric) {
        analysis.per_metric[metric] = fit_linear(series.first, series.second);
    }
    analysis.f_test = common_slope_f_test(points);
    return analysis;
}

nlohmann::json analysis_to_json(const GainAnalysis& analysis) {
    auto fit_json = [](const LinearFit& fit) {
        return nlohmann::json{
            {"slope", fit.slope},           {"intercept", fit.intercept},
            {"r_squared", fit.r_squared},   {"p_value_slope", fit.p_value_slope},
            {"n", fit.n},
        };
    };
    nlohmann::json per_metric = nlohmann::json::object();
    for (const auto& [metric, fit] : analysis.per_metric) per_metric[metric] = fit_json(fit);
    return nlohmann::json{
        {"pooled", fit_json(analysis.pooled)},
        {"per_metric", per_metric},
        {"f_test",
         nlohmann::json{
             {"f_stat", analysis.f_test.f_stat},
             {"p_value", analysis.f_test.p_value},
             {"df1", analysis.f_test.df1},
             {"df2", analysis.f_test.df2},
             {"rss_restricted", analysis.f_test.rss_restricted},
             {"rss_full", analysis.f_test.rss_full},
         }},
    };
}

}  // namespace anchorkb
