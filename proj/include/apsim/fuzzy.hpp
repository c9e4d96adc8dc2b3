#pragma once

#include <array>
#include <filesystem>
#include <string>

namespace apsim {

// Piecewise-linear membership function. Triangles are stored as degenerate
// trapezoids (b == c), so a single evaluator covers both shapes. Equal
// breakpoints form a vertical edge that evaluates to the inclusive limit.
class MembershipFunction {
public:
    enum class Kind { Triangle, Trapezoid };

    static MembershipFunction triangle(double a, double b, double c);
    static MembershipFunction trapezoid(double a, double b, double c, double d);

    // Degree in [0, 1]; zero outside the support.
    double degree(double x) const;

    double support_lo() const { return a_; }
    double support_hi() const { return d_; }
    Kind kind() const { return kind_; }
    // 3 breakpoints for triangles, 4 for trapezoids.
    std::array<double, 4> breakpoints() const { return {a_, b_, c_, d_}; }

private:
    MembershipFunction(double a, double b, double c, double d, Kind kind);
    double a_, b_, c_, d_;
    Kind kind_;
};

enum class TNorm { Product, Min };

// Two-input fuzzy partition: three membership functions per input in the
// order (left trapezoid, center triangle, right trapezoid), plus the input
// universes. Rule r = 3 * (e MF index) + (de MF index).
struct FisInputConfig {
    std::array<MembershipFunction, 3> e_mfs;
    std::array<MembershipFunction, 3> de_mfs;
    double e_min = -300.0, e_max = 300.0;       // mg/dL
    double de_min = -20.0, de_max = 20.0;       // mg/dL/min
    TNorm tnorm = TNorm::Product;

    static FisInputConfig defaults();

    // Verifies that every point of both universes activates at least one MF
    // (grid scan). Throws std::invalid_argument on a coverage gap.
    void validate_coverage(int grid_points = 2001) const;
};

// The 27 consequent parameters: (a_r, b_r, c_r) for rules r = 0..8, so the
// consequent of rule r is u_r = a_r * e + b_r * de + c_r.
struct TsParams {
    std::array<double, 27> v{};

    double a(int rule) const { return v[3 * rule]; }
    double b(int rule) const { return v[3 * rule + 1]; }
    double c(int rule) const { return v[3 * rule + 2]; }
    double rule_output(int rule, double e, double de) const {
        return a(rule) * e + b(rule) * de + c(rule);
    }

    bool finite() const;

    void save(const std::filesystem::path& file) const;
    static TsParams load(const std::filesystem::path& file);
};

// Rule firing strengths w_r = t-norm(mu_e(e), mu_de(de)) in TsParams order.
std::array<double, 9> firing_strengths(double e, double de, const FisInputConfig& cfg);

struct TsEval {
    double u = 0.0;          // weighted-average output, pre-clamp
    double weight_sum = 0.0;
    bool coverage_gap = false;  // set when no rule fired; u is 0 in that case
};

// Weighted-average defuzzification of the nine affine consequents.
TsEval ts_output(double e, double de, const TsParams& params, const FisInputConfig& cfg);

// Pump actuation limits: clamps to [0, u_max].
double clamp_actuation(double u, double u_max);

}  // namespace apsim
