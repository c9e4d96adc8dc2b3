#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "apsim/env.hpp"

namespace apsim {

// Line-oriented key-value configuration: one `key value` (or `key = value`)
// pair per line, `#` starts a comment, keys are dotted lowercase. Every
// emitted file carries a `version` key.
class KvConfig {
public:
    static KvConfig parse(std::istream& in, const std::string& origin = "<stream>");
    static KvConfig parse_file(const std::filesystem::path& file);

    bool has(const std::string& key) const;
    std::optional<std::string> get(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    void set(const std::string& key, const std::string& value);
    void set_double(const std::string& key, double value);

    int version() const { return version_; }
    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string serialize(const std::string& header_comment = "") const;
    void save(const std::filesystem::path& file,
              const std::string& header_comment = "") const;

private:
    std::map<std::string, std::string> entries_;
    int version_ = 1;
};

// Patient parameter file <-> PatientParams. Field names mirror the struct.
PatientParams patient_params_from_config(const KvConfig& cfg);
KvConfig patient_params_to_config(const PatientParams& p);

// Scenario file: `name`, `seed`, `meal <time_min> <carbs_g>` lines and/or
// `window <t_lo> <t_hi> <carbs_lo> <carbs_hi> [probability]` lines.
ScenarioSpec scenario_from_config(const KvConfig& cfg);
KvConfig scenario_to_config(const ScenarioSpec& spec);
ScenarioSpec load_scenario(const std::filesystem::path& file);

// Membership function literal: `tri a b c` or `trap a b c d`.
MembershipFunction mf_from_string(const std::string& text);
std::string mf_to_string(const MembershipFunction& mf);

// Applies `env.*` / `patient.*` overrides from a run config onto an EnvConfig.
void apply_env_overrides(const KvConfig& cfg, EnvConfig& env);

}  // namespace apsim
