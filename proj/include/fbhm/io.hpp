#pragma once

#include "fbhm/posterior.hpp"
#include "fbhm/simstudy.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace fbhm {

/// Reads a survival CSV with a header. Columns `time` and `event` are required; every other
/// column is a numeric covariate. Errors name the file and the 1-based line.
SurvivalDataset read_dataset_csv(std::istream& in, const std::string& source = "<input>");
SurvivalDataset read_dataset_csv(const std::filesystem::path& path);

/// One row per retained iteration: iter, chain, J, end, s1..s{J_max} (NA padded), lambda*,
/// lambda0*, beta_*, beta0_*, tau*, sigma2, mu. Values are printed with %.17g.
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);
PosteriorDraws read_draws_csv(std::istream& in);

/// Output options of a fit.
struct SummaryOptions {
    double level = 0.9;              // hazard / survival bands
    double coefficient_level = 0.95; // coefficient HPD intervals
    BandType band = BandType::hpd;
    int grid_points = 2000;
};

/// Everything a command needs; JSON keys mirror the struct fields.
struct RunConfig {
    std::optional<std::string> current;
    std::optional<std::string> historical;
    std::string out_dir = ".";
    int chains = 1;
    int threads = 1;
    ModelSpec model;
    SamplerConfig sampler;
    SummaryOptions summary;
    ScenarioSpec scenario;

    void validate() const;
};

/// Applies the keys present in `j` on top of `base`; unknown keys are a ConfigError.
RunConfig parse_config(const nlohmann::json& j, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

nlohmann::json to_json(const ModelSpec& m);
nlohmann::json to_json(const SamplerConfig& c);
nlohmann::json to_json(const ScenarioSpec& s);
nlohmann::json to_json(const SamplerDiagnostics& d);

std::uint64_t fnv1a64(std::string_view bytes);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

}  // namespace fbhm
