#include "apsim/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apsim {

MembershipFunction::MembershipFunction(double a, double b, double c, double d, Kind kind)
    : a_(a), b_(b), c_(c), d_(d), kind_(kind) {
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) && std::isfinite(d))) {
        throw std::invalid_argument("MembershipFunction: non-finite breakpoint");
    }
    if (!(a <= b && b <= c && c <= d)) {
        throw std::invalid_argument("MembershipFunction: breakpoints must be non-decreasing");
    }
}

MembershipFunction MembershipFunction::triangle(double a, double b, double c) {
    return MembershipFunction(a, b, b, c, Kind::Triangle);
}

MembershipFunction MembershipFunction::trapezoid(double a, double b, double c, double d) {
    return MembershipFunction(a, b, c, d, Kind::Trapezoid);
}

double MembershipFunction::degree(double x) const {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("MembershipFunction::degree: non-finite input");
    }
    if (x < a_ || x > d_) {
        return 0.0;
    }
    if (x >= b_ && x <= c_) {
        return 1.0;
    }
    if (x < b_) {
        return (x - a_) / (b_ - a_);
    }
    return (d_ - x) / (d_ - c_);
}

FisInputConfig FisInputConfig::defaults() {
    FisInputConfig cfg{
        .e_mfs = {MembershipFunction::trapezoid(-300, -300, -60, -10),
                  MembershipFunction::triangle(-40, 0, 40),
                  MembershipFunction::trapezoid(10, 60, 300, 300)},
        .de_mfs = {MembershipFunction::trapezoid(-20, -20, -4, -1),
                   MembershipFunction::triangle(-3, 0, 3),
                   MembershipFunction::trapezoid(1, 4, 20, 20)},
    };
    return cfg;
}

void FisInputConfig::validate_coverage(int grid_points) const {
    auto scan = [grid_points](const std::array<MembershipFunction, 3>& mfs, double lo,
                              double hi, const char* name) {
        for (int i = 0; i < grid_points; ++i) {
            const double x = lo + (hi - lo) * i / (grid_points - 1);
            if (mfs[0].degree(x) <= 0.0 && mfs[1].degree(x) <= 0.0 &&
                mfs[2].degree(x) <= 0.0) {
                std::ostringstream msg;
                msg << "FisInputConfig: coverage gap on " << name << " at x = " << x;
                throw std::invalid_argument(msg.str());
            }
        }
    };
    scan(e_mfs, e_min, e_max, "e");
    scan(de_mfs, de_min, de_max, "de");
}

bool TsParams::finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void TsParams::save(const std::filesystem::path& file) const {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("TsParams::save: cannot open " + file.string());
    }
    out << "# Takagi-Sugeno consequent parameters: u_r = a_r*e + b_r*de + c_r\n";
    out << "# one row per rule, r = 3*(e MF index) + (de MF index), r = 0..8\n";
    out << "# columns: a [mU/min per mg/dL]  b [mU/min per (mg/dL/min)]  c [mU/min]\n";
    out << "version 1\n";
    char buf[96];
    for (int r = 0; r < 9; ++r) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", a(r), b(r), c(r));
        out << buf;
    }
}

TsParams TsParams::load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("TsParams::load: cannot open " + file.string());
    }
    std::string line;
    std::vector<double> values;
    bool version_seen = false;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) {
            continue;
        }
        if (first == "version") {
            int version = 0;
            if (!(ls >> version) || version != 1) {
                throw std::runtime_error("TsParams::load: unsupported version in " +
                                         file.string());
            }
            version_seen = true;
            continue;
        }
        values.push_back(std::stod(first));
        double x;
        while (ls >> x) {
            values.push_back(x);
        }
    }
    if (!version_seen) {
        throw std::runtime_error("TsParams::load: missing version line in " + file.string());
    }
    if (values.size() != 27) {
        throw std::runtime_error("TsParams::load: expected 27 values, got " +
                                 std::to_string(values.size()));
    }
    TsParams p;
    std::copy(values.begin(), values.end(), p.v.begin());
    if (!p.finite()) {
        throw std::runtime_error("TsParams::load: non-finite parameter in " + file.string());
    }
    return p;
}

std::array<double, 9> firing_strengths(double e, double de, const FisInputConfig& cfg) {
    std::array<double, 3> mu_e{}, mu_de{};
    for (int i = 0; i < 3; ++i) {
        mu_e[i] = cfg.e_mfs[i].degree(e);
        mu_de[i] = cfg.de_mfs[i].degree(de);
    }
    std::array<double, 9> w{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            w[3 * i + j] = cfg.tnorm == TNorm::Product ? mu_e[i] * mu_de[j]
                                                       : std::min(mu_e[i], mu_de[j]);
        }
    }
    return w;
}

TsEval ts_output(double e, double de, const TsParams& params, const FisInputConfig& cfg) {
    if (!params.finite()) {
        throw std::invalid_argument("ts_output: non-finite TsParams");
    }
    const std::array<double, 9> w = firing_strengths(e, de, cfg);

    TsEval eval;
    double weighted = 0.0;
    for (int r = 0; r < 9; ++r) {
        eval.weight_sum += w[r];
        weighted += w[r] * params.rule_output(r, e, de);
    }
    if (eval.weight_sum <= 0.0) {
        // Coverage violated; keep the loop alive and flag it.
        eval.coverage_gap = true;
        eval.u = 0.0;
        return eval;
    }
    eval.u = weighted / eval.weight_sum;
    return eval;
}

double clamp_actuation(double u, double u_max) {
    if (!(u_max > 0.0)) {
        throw std::invalid_argument("clamp_actuation: u_max must be positive");
    }
    return std::clamp(u, 0.0, u_max);
}

}  // namespace apsim
