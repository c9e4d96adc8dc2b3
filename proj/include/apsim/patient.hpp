#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace apsim {

// Unit conversions used throughout the toolkit.
constexpr double kMmolPerGramGlucose = 5.551;  // 1 g glucose = 5.551 mmol
constexpr double kMgdlPerMmolL = 18.018;       // mmol/L -> mg/dL

// Hovorka-type virtual patient parameters. Rate constants are per minute,
// volumes per kilogram of body weight. The numeric defaults follow the
// commonly used adult parameter set; every field can be overridden from a
// patient config file.
struct PatientParams {
    double body_weight = 70.0;  // kg
    double k12 = 0.066;         // 1/min, inter-compartment glucose transfer
    double ka1 = 0.006;         // 1/min
    double ka2 = 0.06;          // 1/min
    double ka3 = 0.03;          // 1/min
    double kb1 = 0.006 * 51.2e-4;  // 1/min per mU/L (= ka1 * S_IT)
    double kb2 = 0.06 * 8.2e-4;    // 1/min per mU/L (= ka2 * S_ID)
    double kb3 = 0.03 * 520e-4;    // 1/min per mU/L (= ka3 * S_IE)
    double ke = 0.138;          // 1/min, plasma insulin elimination
    double V_I = 0.12;          // L/kg, insulin distribution volume
    double V_G = 0.16;          // L/kg, glucose distribution volume
    double A_G = 0.8;           // carbohydrate bioavailability, (0, 1]
    double t_max_G = 40.0;      // min, time of maximum glucose appearance
    double t_max_I = 55.0;      // min, time to maximum insulin absorption
    double EGP_0 = 0.0161;      // mmol/kg/min, endogenous production at zero insulin
    double F_01 = 0.0097;       // mmol/kg/min, non-insulin-dependent flux

    // Throws std::invalid_argument when a field violates its range.
    void validate() const;

    double glucose_volume_l() const { return V_G * body_weight; }
    double insulin_volume_l() const { return V_I * body_weight; }
};

// The eight Hovorka state variables.
struct PatientState {
    double Q1 = 0.0;  // mmol, glucose mass, accessible compartment
    double Q2 = 0.0;  // mmol, glucose mass, non-accessible compartment
    double S1 = 0.0;  // mU, subcutaneous insulin, first compartment
    double S2 = 0.0;  // mU, subcutaneous insulin, second compartment
    double I = 0.0;   // mU/L, plasma insulin concentration
    double x1 = 0.0;  // 1/min, insulin action on glucose transport
    double x2 = 0.0;  // 1/min, insulin action on glucose disposal
    double x3 = 0.0;  // dimensionless, insulin action on EGP

    bool finite() const;
};

// Time derivative of PatientState, same field order, units per minute.
struct StateDerivative {
    double dQ1 = 0.0, dQ2 = 0.0, dS1 = 0.0, dS2 = 0.0;
    double dI = 0.0, dx1 = 0.0, dx2 = 0.0, dx3 = 0.0;
};

struct MealEvent {
    double time_min = 0.0;  // simulation time of ingestion
    double carbs_g = 0.0;   // carbohydrate content, grams
};

// Thrown when an integration step produces a non-finite state; carries the
// offending state for diagnostics.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& msg, const PatientState& state)
        : std::runtime_error(msg), state_(state) {}
    const PatientState& state() const { return state_; }

private:
    PatientState state_;
};

// Non-insulin-dependent glucose flux F_c01 [mmol/min] for glucose
// concentration G [mmol/L]. Piecewise: saturates at F_01 * weight above
// 4.5 mmol/L, linear through the origin below.
double non_insulin_flux(double glucose_mmol_l, const PatientParams& p);

// Renal clearance F_R [mmol/min]; active only above 9 mmol/L.
double renal_clearance(double glucose_mmol_l, const PatientParams& p);

// Gut glucose appearance U_G [mmol/min] at time t from all meals ingested at
// or before t. Meals superpose additively.
double gut_absorption(double t_min, const std::vector<MealEvent>& meals,
                      const PatientParams& p);

// Right-hand side of the full model at state s, time t, with subcutaneous
// insulin infusion u [mU/min]. The EGP term is floored at zero when x3 > 1.
StateDerivative derivatives(const PatientState& s, double t_min, double u_mu_min,
                            const std::vector<MealEvent>& meals,
                            const PatientParams& p);

// One classical RK4 step with u held constant over [t, t + dt] (zero-order
// hold). State components are floored at zero after the step.
PatientState step_rk4(const PatientState& s, double t_min, double dt_min,
                      double u_mu_min, const std::vector<MealEvent>& meals,
                      const PatientParams& p);

double glucose_mmol_l(const PatientState& s, const PatientParams& p);
double glucose_mgdl(const PatientState& s, const PatientParams& p);

// Algebraic steady state of the insulin cascade under constant infusion u,
// with Q1 pinned to the given target glucose and Q2 balancing Q1.
PatientState basal_steady_state(const PatientParams& p, double u_mu_min,
                                double target_mgdl);

// Finds the constant infusion u such that a meal-free 24 h simulation started
// from basal_steady_state(u, target) ends within tol of the target glucose.
// Bisection over [0, u_hi]; throws std::runtime_error when the target is
// unreachable (no sign change in the bracket).
double find_basal(const PatientParams& p, double target_mgdl, double tol_mgdl,
                  double u_hi_mu_min = 100.0);

}  // namespace apsim
