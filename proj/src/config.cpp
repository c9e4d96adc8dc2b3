#include "apsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace apsim {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

KvConfig KvConfig::parse(std::istream& in, const std::string& origin) {
    KvConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        // `key = value` and `key value` are equivalent
        std::replace(line.begin(), line.end(), '=', ' ');
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto space = line.find_first_of(" \t");
        if (space == std::string::npos) {
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected `key value`");
        }
        const std::string key = trim(line.substr(0, space));
        const std::string value = trim(line.substr(space + 1));
        if (key == "meal" || key == "window") {
            // repeatable keys: store indexed
            int n = cfg.get_int(key + "_count", 0);
            cfg.set(key + "." + std::to_string(n), value);
            cfg.set(key + "_count", std::to_string(n + 1));
        } else {
            cfg.set(key, value);
        }
    }
    if (cfg.has("version")) {
        cfg.version_ = cfg.get_int("version", 1);
        if (cfg.version_ != 1) {
            throw std::runtime_error(origin + ": unsupported config version " +
                                     std::to_string(cfg.version_));
        }
    }
    return cfg;
}

KvConfig KvConfig::parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + file.string());
    }
    return parse(in, file.string());
}

bool KvConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::optional<std::string> KvConfig::get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        return std::nullopt;
    }
    return it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return std::stod(*v);
    } catch (const std::exception&) {
        throw std::runtime_error("config key `" + key + "`: not a number: " + *v);
    }
}

int KvConfig::get_int(const std::string& key, int fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return std::stoi(*v);
    } catch (const std::exception&) {
        throw std::runtime_error("config key `" + key + "`: not an integer: " + *v);
    }
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    try {
        return std::stoull(*v);
    } catch (const std::exception&) {
        throw std::runtime_error("config key `" + key + "`: not an integer: " + *v);
    }
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) {
        return fallback;
    }
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw std::runtime_error("config key `" + key + "`: not a boolean: " + *v);
}

std::string KvConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

void KvConfig::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

void KvConfig::set_double(const std::string& key, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    entries_[key] = buf;
}

std::string KvConfig::serialize(const std::string& header_comment) const {
    std::ostringstream out;
    if (!header_comment.empty()) {
        out << "# " << header_comment << "\n";
    }
    out << "version " << version_ << "\n";
    for (const auto& [key, value] : entries_) {
        if (key == "version") {
            continue;
        }
        out << key << " " << value << "\n";
    }
    return out.str();
}

void KvConfig::save(const std::filesystem::path& file,
                    const std::string& header_comment) const {
    std::ofstream out(file);
    if (!out) {
        throw std::runtime_error("cannot write config file: " + file.string());
    }
    out << serialize(header_comment);
}

PatientParams patient_params_from_config(const KvConfig& cfg) {
    PatientParams d;  // defaults
    PatientParams p;
    p.body_weight = cfg.get_double("body_weight", d.body_weight);
    p.k12 = cfg.get_double("k12", d.k12);
    p.ka1 = cfg.get_double("ka1", d.ka1);
    p.ka2 = cfg.get_double("ka2", d.ka2);
    p.ka3 = cfg.get_double("ka3", d.ka3);
    p.kb1 = cfg.get_double("kb1", d.kb1);
    p.kb2 = cfg.get_double("kb2", d.kb2);
    p.kb3 = cfg.get_double("kb3", d.kb3);
    p.ke = cfg.get_double("ke", d.ke);
    p.V_I = cfg.get_double("V_I", d.V_I);
    p.V_G = cfg.get_double("V_G", d.V_G);
    p.A_G = cfg.get_double("A_G", d.A_G);
    p.t_max_G = cfg.get_double("t_max_G", d.t_max_G);
    p.t_max_I = cfg.get_double("t_max_I", d.t_max_I);
    p.EGP_0 = cfg.get_double("EGP_0", d.EGP_0);
    p.F_01 = cfg.get_double("F_01", d.F_01);
    p.validate();
    return p;
}

KvConfig patient_params_to_config(const PatientParams& p) {
    KvConfig cfg;
    cfg.set_double("body_weight", p.body_weight);
    cfg.set_double("k12", p.k12);
    cfg.set_double("ka1", p.ka1);
    cfg.set_double("ka2", p.ka2);
    cfg.set_double("ka3", p.ka3);
    cfg.set_double("kb1", p.kb1);
    cfg.set_double("kb2", p.kb2);
    cfg.set_double("kb3", p.kb3);
    cfg.set_double("ke", p.ke);
    cfg.set_double("V_I", p.V_I);
    cfg.set_double("V_G", p.V_G);
    cfg.set_double("A_G", p.A_G);
    cfg.set_double("t_max_G", p.t_max_G);
    cfg.set_double("t_max_I", p.t_max_I);
    cfg.set_double("EGP_0", p.EGP_0);
    cfg.set_double("F_01", p.F_01);
    return cfg;
}

ScenarioSpec scenario_from_config(const KvConfig& cfg) {
    ScenarioSpec spec;
    spec.name = cfg.get_string("name", "scenario");
    spec.seed = cfg.get_u64("seed", 0);
    const int n_meals = cfg.get_int("meal_count", 0);
    for (int i = 0; i < n_meals; ++i) {
        std::istringstream ss(cfg.get_string("meal." + std::to_string(i), ""));
        MealEvent m;
        if (!(ss >> m.time_min >> m.carbs_g)) {
            throw std::runtime_error("scenario: malformed meal line " + std::to_string(i));
        }
        spec.fixed_meals.push_back(m);
    }
    const int n_windows = cfg.get_int("window_count", 0);
    for (int i = 0; i < n_windows; ++i) {
        std::istringstream ss(cfg.get_string("window." + std::to_string(i), ""));
        MealWindow w;
        if (!(ss >> w.time_lo >> w.time_hi >> w.carbs_lo >> w.carbs_hi)) {
            throw std::runtime_error("scenario: malformed window line " + std::to_string(i));
        }
        ss >> w.probability;  // optional, defaults to 1
        spec.windows.push_back(w);
    }
    spec.validate();
    return spec;
}

KvConfig scenario_to_config(const ScenarioSpec& spec) {
    KvConfig cfg;
    cfg.set("name", spec.name);
    cfg.set("seed", std::to_string(spec.seed));
    int i = 0;
    for (const MealEvent& m : spec.fixed_meals) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g", m.time_min, m.carbs_g);
        cfg.set("meal." + std::to_string(i++), buf);
    }
    if (i > 0) {
        cfg.set("meal_count", std::to_string(i));
    }
    int k = 0;
    for (const MealWindow& w : spec.windows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g", w.time_lo,
                      w.time_hi, w.carbs_lo, w.carbs_hi, w.probability);
        cfg.set("window." + std::to_string(k++), buf);
    }
    if (k > 0) {
        cfg.set("window_count", std::to_string(k));
    }
    return cfg;
}

ScenarioSpec load_scenario(const std::filesystem::path& file) {
    return scenario_from_config(KvConfig::parse_file(file));
}

MembershipFunction mf_from_string(const std::string& text) {
    std::istringstream ss(text);
    std::string kind;
    ss >> kind;
    if (kind == "tri") {
        double a, b, c;
        if (!(ss >> a >> b >> c)) {
            throw std::runtime_error("membership function: expected `tri a b c`");
        }
        return MembershipFunction::triangle(a, b, c);
    }
    if (kind == "trap") {
        double a, b, c, d;
        if (!(ss >> a >> b >> c >> d)) {
            throw std::runtime_error("membership function: expected `trap a b c d`");
        }
        return MembershipFunction::trapezoid(a, b, c, d);
    }
    throw std::runtime_error("membership function: unknown kind `" + kind + "`");
}

std::string mf_to_string(const MembershipFunction& mf) {
    const auto p = mf.breakpoints();
    char buf[140];
    if (mf.kind() == MembershipFunction::Kind::Triangle) {
        std::snprintf(buf, sizeof(buf), "tri %.17g %.17g %.17g", p[0], p[1], p[3]);
    } else {
        std::snprintf(buf, sizeof(buf), "trap %.17g %.17g %.17g %.17g", p[0], p[1], p[2],
                      p[3]);
    }
    return buf;
}

void apply_env_overrides(const KvConfig& cfg, EnvConfig& env) {
    env.g_ref_mgdl = cfg.get_double("env.g_ref", env.g_ref_mgdl);
    env.safe_lo_mgdl = cfg.get_double("env.safe_lo", env.safe_lo_mgdl);
    env.safe_hi_mgdl = cfg.get_double("env.safe_hi", env.safe_hi_mgdl);
    env.term_lo_mgdl = cfg.get_double("env.term_lo", env.term_lo_mgdl);
    env.term_hi_mgdl = cfg.get_double("env.term_hi", env.term_hi_mgdl);
    env.episode_minutes = cfg.get_double("env.episode_minutes", env.episode_minutes);
    env.control_period_min = cfg.get_double("env.control_period", env.control_period_min);
    env.integrator_dt_min = cfg.get_double("env.integrator_dt", env.integrator_dt_min);
    env.u_max_mu_min = cfg.get_double("env.u_max", env.u_max_mu_min);
    env.e_scale_mgdl = cfg.get_double("env.e_scale", env.e_scale_mgdl);
    env.de_scale_mgdl_min = cfg.get_double("env.de_scale", env.de_scale_mgdl_min);
    env.a_range.lo = cfg.get_double("env.a_lo", env.a_range.lo);
    env.a_range.hi = cfg.get_double("env.a_hi", env.a_range.hi);
    env.b_range.lo = cfg.get_double("env.b_lo", env.b_range.lo);
    env.b_range.hi = cfg.get_double("env.b_hi", env.b_range.hi);
    env.c_range.lo = cfg.get_double("env.c_lo", env.c_range.lo);
    env.c_range.hi = cfg.get_double("env.c_hi", env.c_range.hi);
    env.printed_close_branch =
        cfg.get_bool("env.printed_close_branch", env.printed_close_branch);
    env.basal_tol_mgdl = cfg.get_double("env.basal_tol", env.basal_tol_mgdl);

    if (const auto tnorm = cfg.get("env.tnorm")) {
        if (*tnorm == "product") {
            env.fis.tnorm = TNorm::Product;
        } else if (*tnorm == "min") {
            env.fis.tnorm = TNorm::Min;
        } else {
            throw std::runtime_error("env.tnorm must be `product` or `min`");
        }
    }
    env.fis.e_min = cfg.get_double("env.e_min", env.fis.e_min);
    env.fis.e_max = cfg.get_double("env.e_max", env.fis.e_max);
    env.fis.de_min = cfg.get_double("env.de_min", env.fis.de_min);
    env.fis.de_max = cfg.get_double("env.de_max", env.fis.de_max);
    for (int i = 0; i < 3; ++i) {
        if (const auto mf = cfg.get("env.e_mf" + std::to_string(i))) {
            env.fis.e_mfs[i] = mf_from_string(*mf);
        }
        if (const auto mf = cfg.get("env.de_mf" + std::to_string(i))) {
            env.fis.de_mfs[i] = mf_from_string(*mf);
        }
    }

    PatientParams p = env.patient;
    p.body_weight = cfg.get_double("patient.body_weight", p.body_weight);
    p.k12 = cfg.get_double("patient.k12", p.k12);
    p.ka1 = cfg.get_double("patient.ka1", p.ka1);
    p.ka2 = cfg.get_double("patient.ka2", p.ka2);
    p.ka3 = cfg.get_double("patient.ka3", p.ka3);
    p.kb1 = cfg.get_double("patient.kb1", p.kb1);
    p.kb2 = cfg.get_double("patient.kb2", p.kb2);
    p.kb3 = cfg.get_double("patient.kb3", p.kb3);
    p.ke = cfg.get_double("patient.ke", p.ke);
    p.V_I = cfg.get_double("patient.V_I", p.V_I);
    p.V_G = cfg.get_double("patient.V_G", p.V_G);
    p.A_G = cfg.get_double("patient.A_G", p.A_G);
    p.t_max_G = cfg.get_double("patient.t_max_G", p.t_max_G);
    p.t_max_I = cfg.get_double("patient.t_max_I", p.t_max_I);
    p.EGP_0 = cfg.get_double("patient.EGP_0", p.EGP_0);
    p.F_01 = cfg.get_double("patient.F_01", p.F_01);
    env.patient = p;
}

}  // namespace apsim
