#include "apsim/patient.hpp"

#include <algorithm>
#include <cmath>

namespace apsim {

namespace {

bool all_finite(const StateDerivative& d) {
    return std::isfinite(d.dQ1) && std::isfinite(d.dQ2) && std::isfinite(d.dS1) &&
           std::isfinite(d.dS2) && std::isfinite(d.dI) && std::isfinite(d.dx1) &&
           std::isfinite(d.dx2) && std::isfinite(d.dx3);
}

PatientState axpy(const PatientState& s, double h, const StateDerivative& d) {
    PatientState r;
    r.Q1 = s.Q1 + h * d.dQ1;
    r.Q2 = s.Q2 + h * d.dQ2;
    r.S1 = s.S1 + h * d.dS1;
    r.S2 = s.S2 + h * d.dS2;
    r.I = s.I + h * d.dI;
    r.x1 = s.x1 + h * d.dx1;
    r.x2 = s.x2 + h * d.dx2;
    r.x3 = s.x3 + h * d.dx3;
    return r;
}

}  // namespace

void PatientParams::validate() const {
    auto require_pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string("PatientParams: ") + name +
                                        " must be strictly positive and finite");
        }
    };
    require_pos(body_weight, "body_weight");
    require_pos(k12, "k12");
    require_pos(ka1, "ka1");
    require_pos(ka2, "ka2");
    require_pos(ka3, "ka3");
    require_pos(kb1, "kb1");
    require_pos(kb2, "kb2");
    require_pos(kb3, "kb3");
    require_pos(ke, "ke");
    require_pos(V_I, "V_I");
    require_pos(V_G, "V_G");
    require_pos(t_max_G, "t_max_G");
    require_pos(t_max_I, "t_max_I");
    require_pos(EGP_0, "EGP_0");
    require_pos(F_01, "F_01");
    if (!(A_G > 0.0 && A_G <= 1.0)) {
        throw std::invalid_argument("PatientParams: A_G must be in (0, 1]");
    }
}

bool PatientState::finite() const {
    return std::isfinite(Q1) && std::isfinite(Q2) && std::isfinite(S1) &&
           std::isfinite(S2) && std::isfinite(I) && std::isfinite(x1) &&
           std::isfinite(x2) && std::isfinite(x3);
}

double non_insulin_flux(double glucose_mmol_l, const PatientParams& p) {
    if (!std::isfinite(glucose_mmol_l)) {
        throw std::invalid_argument("non_insulin_flux: non-finite glucose");
    }
    const double full = p.F_01 * p.body_weight;
    if (glucose_mmol_l >= 4.5) {
        return full;
    }
    return full * glucose_mmol_l / 4.5;
}

double renal_clearance(double glucose_mmol_l, const PatientParams& p) {
    if (!std::isfinite(glucose_mmol_l)) {
        throw std::invalid_argument("renal_clearance: non-finite glucose");
    }
    if (glucose_mmol_l > 9.0) {
        return 0.003 * (glucose_mmol_l - 9.0) * p.glucose_volume_l();
    }
    return 0.0;
}

double gut_absorption(double t_min, const std::vector<MealEvent>& meals,
                      const PatientParams& p) {
    double total = 0.0;
    const double tmg = p.t_max_G;
    for (const MealEvent& meal : meals) {
        const double tau = t_min - meal.time_min;
        if (tau < 0.0) {
            continue;
        }
        const double d_g_mmol = meal.carbs_g * kMmolPerGramGlucose;
        total += d_g_mmol * p.A_G * tau * std::exp(-tau / tmg) / (tmg * tmg);
    }
    return total;
}

StateDerivative derivatives(const PatientState& s, double t_min, double u_mu_min,
                            const std::vector<MealEvent>& meals,
                            const PatientParams& p) {
    if (!s.finite()) {
        throw std::invalid_argument("derivatives: non-finite state");
    }
    const double vg = p.glucose_volume_l();
    const double g = s.Q1 / vg;

    const double u_g = gut_absorption(t_min, meals, p);
    const double egp = std::max(0.0, p.EGP_0 * p.body_weight * (1.0 - s.x3));

    StateDerivative d;
    d.dQ1 = -non_insulin_flux(g, p) - s.x1 * s.Q1 + p.k12 * s.Q2 -
            renal_clearance(g, p) + u_g + egp;
    d.dQ2 = s.x1 * s.Q1 - (p.k12 + s.x2) * s.Q2;
    d.dS1 = u_mu_min - s.S1 / p.t_max_I;
    d.dS2 = s.S1 / p.t_max_I - s.S2 / p.t_max_I;
    // Plasma insulin input U_I = S2 / t_max_I, spread over the insulin
    // distribution volume V_I * weight.
    d.dI = s.S2 / (p.t_max_I * p.insulin_volume_l()) - p.ke * s.I;
    d.dx1 = -p.ka1 * s.x1 + p.kb1 * s.I;
    d.dx2 = -p.ka2 * s.x2 + p.kb2 * s.I;
    d.dx3 = -p.ka3 * s.x3 + p.kb3 * s.I;
    return d;
}

PatientState step_rk4(const PatientState& s, double t_min, double dt_min,
                      double u_mu_min, const std::vector<MealEvent>& meals,
                      const PatientParams& p) {
    if (!(dt_min > 0.0)) {
        throw std::invalid_argument("step_rk4: dt must be positive");
    }
    if (u_mu_min < 0.0) {
        throw std::invalid_argument("step_rk4: insulin infusion must be non-negative");
    }

    auto stage = [&](const PatientState& at, double t) {
        if (!at.finite()) {
            throw IntegrationError("step_rk4: non-finite intermediate state", at);
        }
        const StateDerivative d = derivatives(at, t, u_mu_min, meals, p);
        if (!all_finite(d)) {
            throw IntegrationError("step_rk4: non-finite derivative", at);
        }
        return d;
    };

    const StateDerivative k1 = stage(s, t_min);
    const StateDerivative k2 = stage(axpy(s, 0.5 * dt_min, k1), t_min + 0.5 * dt_min);
    const StateDerivative k3 = stage(axpy(s, 0.5 * dt_min, k2), t_min + 0.5 * dt_min);
    const StateDerivative k4 = stage(axpy(s, dt_min, k3), t_min + dt_min);

    PatientState next;
    const double h6 = dt_min / 6.0;
    next.Q1 = s.Q1 + h6 * (k1.dQ1 + 2.0 * k2.dQ1 + 2.0 * k3.dQ1 + k4.dQ1);
    next.Q2 = s.Q2 + h6 * (k1.dQ2 + 2.0 * k2.dQ2 + 2.0 * k3.dQ2 + k4.dQ2);
    next.S1 = s.S1 + h6 * (k1.dS1 + 2.0 * k2.dS1 + 2.0 * k3.dS1 + k4.dS1);
    next.S2 = s.S2 + h6 * (k1.dS2 + 2.0 * k2.dS2 + 2.0 * k3.dS2 + k4.dS2);
    next.I = s.I + h6 * (k1.dI + 2.0 * k2.dI + 2.0 * k3.dI + k4.dI);
    next.x1 = s.x1 + h6 * (k1.dx1 + 2.0 * k2.dx1 + 2.0 * k3.dx1 + k4.dx1);
    next.x2 = s.x2 + h6 * (k1.dx2 + 2.0 * k2.dx2 + 2.0 * k3.dx2 + k4.dx2);
    next.x3 = s.x3 + h6 * (k1.dx3 + 2.0 * k2.dx3 + 2.0 * k3.dx3 + k4.dx3);

    if (!next.finite()) {
        throw IntegrationError("step_rk4: non-finite state after step", next);
    }

    // Guard against tiny negative excursions at low concentrations.
    next.Q1 = std::max(0.0, next.Q1);
    next.Q2 = std::max(0.0, next.Q2);
    next.S1 = std::max(0.0, next.S1);
    next.S2 = std::max(0.0, next.S2);
    next.I = std::max(0.0, next.I);
    next.x1 = std::max(0.0, next.x1);
    next.x2 = std::max(0.0, next.x2);
    next.x3 = std::max(0.0, next.x3);
    return next;
}

double glucose_mmol_l(const PatientState& s, const PatientParams& p) {
    return s.Q1 / p.glucose_volume_l();
}

double glucose_mgdl(const PatientState& s, const PatientParams& p) {
    return glucose_mmol_l(s, p) * kMgdlPerMmolL;
}

PatientState basal_steady_state(const PatientParams& p, double u_mu_min,
                                double target_mgdl) {
    PatientState s;
    s.S1 = u_mu_min * p.t_max_I;
    s.S2 = s.S1;
    s.I = u_mu_min / (p.ke * p.insulin_volume_l());
    s.x1 = (p.kb1 / p.ka1) * s.I;
    s.x2 = (p.kb2 / p.ka2) * s.I;
    s.x3 = (p.kb3 / p.ka3) * s.I;
    s.Q1 = (target_mgdl / kMgdlPerMmolL) * p.glucose_volume_l();
    s.Q2 = s.x1 * s.Q1 / (p.k12 + s.x2);
    return s;
}

namespace {

// Glucose after a meal-free 24 h under constant infusion u, started from the
// algebraic steady state pinned at the target.
double day_end_glucose(const PatientParams& p, double u, double target_mgdl) {
    static const std::vector<MealEvent> no_meals;
    PatientState s = basal_steady_state(p, u, target_mgdl);
    double t = 0.0;
    for (int i = 0; i < 1440; ++i) {
        s = step_rk4(s, t, 1.0, u, no_meals, p);
        t += 1.0;
    }
    return glucose_mgdl(s, p);
}

}  // namespace

double find_basal(const PatientParams& p, double target_mgdl, double tol_mgdl,
                  double u_hi_mu_min) {
    if (!(target_mgdl > 50.0 && target_mgdl < 300.0)) {
        throw std::invalid_argument("find_basal: target must lie in (50, 300) mg/dL");
    }
    if (!(tol_mgdl > 0.0)) {
        throw std::invalid_argument("find_basal: tolerance must be positive");
    }

    double lo = 0.0;
    double hi = u_hi_mu_min;
    double f_lo = day_end_glucose(p, lo, target_mgdl) - target_mgdl;
    double f_hi = day_end_glucose(p, hi, target_mgdl) - target_mgdl;
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_lo < 0.0 || f_hi > 0.0) {
        // Insulin only lowers glucose, so drift must be positive at u = 0 and
        // negative at the top of the bracket.
        throw std::runtime_error("find_basal: target unreachable (no sign change in bracket)");
    }

    double mid = 0.0;
    double f_mid = f_lo;
    for (int i = 0; i < 64 && hi - lo > 1e-12; ++i) {
        mid = 0.5 * (lo + hi);
        f_mid = day_end_glucose(p, mid, target_mgdl) - target_mgdl;
        if (f_mid > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (std::abs(f_mid) > tol_mgdl) {
        throw std::runtime_error("find_basal: bisection did not reach tolerance");
    }
    return mid;
}

}  // namespace apsim
