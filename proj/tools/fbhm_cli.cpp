// Command-line front end: fit, profile, simulate, summarize.

#include "fbhm/io.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

using namespace fbhm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { ok = 0, unexpected = 1, config_error = 2, data_error = 3, sampler_failure = 4 };

struct Overrides {
    std::string config;
    std::string current;
    std::string historical;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> chains;
    std::optional<int> threads;
    std::optional<int> replicates;
};

RunConfig resolve(const Overrides& o)
{
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (!o.current.empty())
        c.current = o.current;
    if (!o.historical.empty())
        c.historical = o.historical;
    if (!o.out_dir.empty())
        c.out_dir = o.out_dir;
    if (o.seed) {
        c.sampler.seed = *o.seed;
        c.scenario.seed = *o.seed;
    }
    if (o.chains)
        c.chains = *o.chains;
    if (o.threads)
        c.threads = *o.threads;
    if (o.replicates)
        c.scenario.n_replicates = *o.replicates;
    c.validate();
    return c;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write " + p.string());
    return out;
}

void write_json(const fs::path& p, const json& j)
{
    auto out = open_out(p);
    out << j.dump(2) << "\n";
}

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

json model_config_json(const RunConfig& c)
{
    json summary = {{"level", c.summary.level},
                    {"coefficient_level", c.summary.coefficient_level},
                    {"band", c.summary.band == BandType::hpd ? "hpd" : "equal_tailed"},
                    {"grid_points", c.summary.grid_points}};
    return {{"model", to_json(c.model)}, {"sampler", to_json(c.sampler)}, {"chains", c.chains}, {"summary", summary}};
}

// Curves and the text summary shared by fit and summarize.
std::vector<std::string> write_summaries(const PosteriorDraws& draws, const SummaryOptions& opt, const fs::path& dir,
                                         const std::string& preamble)
{
    std::vector<std::string> files;
    const auto grid = time_grid(draws.end, opt.grid_points);
    {
        auto out = open_out(dir / "hazard.csv");
        write_curve_csv(out, ensemble_hazard(draws, grid, Dataset::current, opt.level, opt.band));
        files.push_back("hazard.csv");
    }
    if (draws.states.front().has_historical()) {
        auto out = open_out(dir / "hazard_historical.csv");
        write_curve_csv(out, ensemble_hazard(draws, grid, Dataset::historical, opt.level, opt.band));
        files.push_back("hazard_historical.csv");
    }
    {
        auto out = open_out(dir / "survival.csv");
        const Eigen::VectorXd reference = Eigen::VectorXd::Zero(draws.states.front().beta.size());
        write_curve_csv(out, survival_curve(draws, grid, reference, Dataset::current, opt.level, opt.band));
        files.push_back("survival.csv");
    }

    std::string text = preamble;
    text += "retained draws: " + std::to_string(draws.size()) + "\n";
    double mean_j = 0.0;
    for (const auto& s : draws.states)
        mean_j += s.partition.num_splits();
    text += "posterior mean of J: " + fmt("%.4f", mean_j / draws.size()) + "\n";
    auto coef_block = [&](Dataset which, const char* label) {
        const Index p = which == Dataset::current ? draws.states.front().beta.size()
                                                  : draws.states.front().beta0.size();
        if (p == 0)
            return;
        text += std::string(label) + " (" + fmt("%g", 100 * opt.coefficient_level) + "% HPD)\n";
        for (Index k = 0; k < p; ++k) {
            const auto c = summarize_coefficient(draws, k, opt.coefficient_level, which);
            text += "  " + c.name + ": mean " + fmt("%.6g", c.mean) + ", sd " + fmt("%.6g", c.sd) + ", interval [" +
                    fmt("%.6g", c.lower) + ", " + fmt("%.6g", c.upper) + "]\n";
        }
    };
    coef_block(Dataset::current, "current coefficients");
    coef_block(Dataset::historical, "historical coefficients");
    if (draws.states.front().beta.size() > 0)
        text += std::string("treatment effect declared (first coefficient): ") +
                (treatment_decision(draws, opt.coefficient_level) ? "yes" : "no") + "\n";
    auto out = open_out(dir / "summary.txt");
    out << text;
    files.push_back("summary.txt");
    return files;
}

std::string acceptance_text(const SamplerDiagnostics& d, bool borrowing)
{
    std::string t = "acceptance rates\n";
    auto line = [&](const char* name, const MoveStats& m) {
        if (m.proposed)
            t += std::string("  ") + name + ": " + fmt("%.4f", m.rate()) + " (" + std::to_string(m.proposed) + ")\n";
    };
    line("beta", d.beta);
    line("beta0", d.beta0);
    line(borrowing ? "lambda0" : "lambda", d.lambda0);
    line("lambda", d.lambda);
    line("shift", d.shift);
    line("birth", d.birth);
    line("death", d.death);
    if (d.truncated_proposals)
        t += "  floored hazard proposals: " + std::to_string(d.truncated_proposals) + "\n";
    return t;
}

json dataset_json(const std::string& path, const SurvivalDataset& d)
{
    return {{"path", path}, {"subjects", d.size()}, {"events", d.num_events()}, {"covariates", d.covariate_names}};
}

int cmd_fit(const Overrides& o)
{
    const RunConfig c = resolve(o);
    if (!c.current)
        throw ConfigError("fit: --current (or \"current\" in the config) is required");
    const auto current = read_dataset_csv(fs::path(*c.current));
    std::optional<SurvivalDataset> historical;
    if (c.historical)
        historical = read_dataset_csv(fs::path(*c.historical));
    fs::create_directories(c.out_dir);
    const fs::path dir = c.out_dir;

    const auto draws = run_chains(current, historical ? &*historical : nullptr, c.model, c.sampler, c.chains, c.threads);
    {
        auto out = open_out(dir / "draws.csv");
        write_draws_csv(out, draws);
    }
    const json config = model_config_json(c);
    const std::string hash = config_hash(config);
    std::string preamble = "model: fbhm (" + std::string(draws.borrowing ? "borrowing" : "single dataset") + ")\n";
    preamble += "seed: " + std::to_string(c.sampler.seed) + ", config hash: " + hash + "\n";
    preamble += acceptance_text(draws.diagnostics, draws.borrowing);
    auto files = write_summaries(draws, c.summary, dir, preamble);
    files.insert(files.begin(), "draws.csv");

    json inputs = {{"current", dataset_json(*c.current, current)}};
    if (historical)
        inputs["historical"] = dataset_json(*c.historical, *historical);
    write_json(dir / "manifest.json", {{"command", "fit"},
                                      {"model", "fbhm"},
                                      {"borrowing", draws.borrowing},
                                      {"seed", c.sampler.seed},
                                      {"config_hash", hash},
                                      {"config", config},
                                      {"inputs", inputs},
                                      {"retained", draws.size()},
                                      {"acceptance", to_json(draws.diagnostics)},
                                      {"outputs", files}});
    std::cout << "wrote " << files.size() + 1 << " files to " << dir.string() << "\n";
    return ok;
}

int cmd_summarize(const Overrides& o, const std::string& draws_path)
{
    const RunConfig c = resolve(o);
    std::ifstream in(draws_path);
    if (!in)
        throw DataError("cannot open " + draws_path);
    const auto draws = read_draws_csv(in);
    fs::create_directories(c.out_dir);
    write_summaries(draws, c.summary, c.out_dir, "draws: " + draws_path + "\n");
    std::cout << "wrote summaries to " << c.out_dir << "\n";
    return ok;
}

int cmd_simulate(const Overrides& o, const std::string& trial_dir)
{
    const RunConfig c = resolve(o);
    const ScenarioSpec& spec = c.scenario;
    fs::create_directories(c.out_dir);
    const fs::path dir = c.out_dir;
    if (!trial_dir.empty()) {
        // one simulated trial as CSV inputs for `fit`
        fs::create_directories(trial_dir);
        Rng rng = Rng::derived(spec.seed, 0);
        const auto trial = generate_trial(spec, scenario_censoring_rate(spec), rng);
        auto dump = [&](const fs::path& p, const SurvivalDataset& d) {
            auto out = open_out(p);
            out << "time,event";
            for (const auto& n : d.covariate_names)
                out << "," << n;
            out << "\n";
            for (Index i = 0; i < d.size(); ++i) {
                out << fmt("%.10g", d.times(i)) << "," << d.events(i);
                for (Index k = 0; k < d.num_covariates(); ++k)
                    out << "," << fmt("%g", d.covariates(i, k));
                out << "\n";
            }
        };
        dump(fs::path(trial_dir) / "current.csv", trial.current);
        dump(fs::path(trial_dir) / "historical.csv", trial.historical);
        std::cout << "wrote one trial to " << trial_dir << "\n";
        return ok;
    }
    std::vector<ReplicateResult> details;
    const auto oc = run_scenario(spec, c.threads, &details);
    const std::string label = std::string(to_string(spec.family)) + "_" + std::string(to_string(spec.scenario)) +
                              "_" + std::string(to_string(spec.analysis.model));
    {
        auto out = open_out(dir / "operating_characteristics.csv");
        write_characteristics_csv(out, {{label, oc}});
    }
    {
        auto out = open_out(dir / "replicates.csv");
        out << "replicate,failed,reject,beta_mean,beta_sd,covered,mse,qcd\n";
        for (std::size_t i = 0; i < details.size(); ++i) {
            const auto& r = details[i];
            out << i << "," << r.failed << "," << r.reject << "," << fmt("%.10g", r.beta_mean) << ","
                << fmt("%.10g", r.beta_sd) << "," << r.covered << "," << fmt("%.10g", r.mse) << ","
                << fmt("%.10g", r.qcd) << "\n";
        }
    }
    const json config = to_json(spec);
    write_json(dir / "manifest.json", {{"command", "simulate"},
                                      {"model", std::string(to_string(spec.analysis.model))},
                                      {"seed", spec.seed},
                                      {"config_hash", config_hash(config)},
                                      {"config", config},
                                      {"censoring_rate", scenario_censoring_rate(spec)},
                                      {"outputs", {"operating_characteristics.csv", "replicates.csv"}}});
    write_characteristics_csv(std::cout, {{label, oc}});
    return ok;
}

struct ProfileArgs {
    double a = 1.0, b = 0.001, c = 1.0, d = 1.0, p0 = 0.5;
    std::optional<double> sseb, xi;
    double max_sseb = 0.1;
    int points = 201;
    std::string out;
};

int cmd_profile(const ProfileArgs& a)
{
    if (a.xi) {
        if (!(*a.xi > 0.0) || !(a.b > 0.0) || !(a.d > 0.0))
            throw ConfigError("profile: xi, b and d must be positive");
        std::printf("%.6f\n", tipping_point_weight(*a.xi, a.b, a.d));
        return ok;
    }
    CommensuratePriorSpec spec;
    spec.a_tau = a.a;
    spec.b_tau = a.b;
    spec.c_tau = a.c;
    spec.d_tau = a.d;
    spec.p0 = a.p0;
    spec.validate();
    if (a.a != 1.0 || a.c != 1.0)
        throw ConfigError("profile: the borrowing profile assumes a = c = 1");
    if (a.sseb) {
        std::printf("%.6f\n", borrowing_profile(*a.sseb, spec));
        return ok;
    }
    if (a.points < 2 || !(a.max_sseb > 0.0))
        throw ConfigError("profile: need --points >= 2 and --max-sseb > 0");
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
    }
    std::ostream& out = a.out.empty() ? std::cout : file;
    out << "sseb,q\n";
    for (int k = 0; k < a.points; ++k) {
        const double s = a.max_sseb * k / (a.points - 1);
        out << fmt("%.8g", s) << "," << fmt("%.8g", borrowing_profile(s, spec)) << "\n";
    }
    return ok;
}

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON configuration file");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Flexible baseline hazard model with historical borrowing"};
    app.require_subcommand(1);
    Overrides o;
    std::string draws_path, trial_dir;
    ProfileArgs pa;

    auto* fit = app.add_subcommand("fit", "fit the model and write draws, curves and a summary");
    add_common(fit, o);
    fit->add_option("--current", o.current, "current trial CSV (time,event,covariates...)");
    fit->add_option("--historical", o.historical, "historical control CSV; omit for the single-dataset model");
    fit->add_option("--chains", o.chains, "number of chains");

    auto* sim = app.add_subcommand("simulate", "run a simulation scenario and write operating characteristics");
    add_common(sim, o);
    sim->add_option("--replicates", o.replicates, "number of simulated trials");
    sim->add_option("--write-trial", trial_dir, "write one simulated trial as CSV to this directory and stop");

    auto* prof = app.add_subcommand("profile", "borrowing profile q(SSEb) or the tipping-point weight p0");
    prof->add_option("--a", pa.a, "lump shape");
    prof->add_option("--b", pa.b, "lump scale");
    prof->add_option("--c", pa.c, "smear shape");
    prof->add_option("--d", pa.d, "smear scale");
    prof->add_option("--p0", pa.p0, "prior lump weight");
    prof->add_option("--sseb", pa.sseb, "evaluate q at one squared discrepancy");
    prof->add_option("--xi", pa.xi, "solve p0 for a tipping point at this absolute log hazard difference");
    prof->add_option("--max-sseb", pa.max_sseb, "upper end of the tabulated curve");
    prof->add_option("--points", pa.points, "number of tabulated points");
    prof->add_option("--out", pa.out, "CSV file for the curve (default stdout)");

    auto* sum = app.add_subcommand("summarize", "recompute curves and summaries from a draws CSV");
    add_common(sum, o);
    sum->add_option("--draws", draws_path, "draws CSV written by fit")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*fit)
            return cmd_fit(o);
        if (*sim)
            return cmd_simulate(o, trial_dir);
        if (*prof)
            return cmd_profile(pa);
        if (*sum)
            return cmd_summarize(o, draws_path);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return config_error;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return data_error;
    } catch (const SamplerError& e) {
        std::cerr << "sampler failure: " << e.what() << "\n";
        return sampler_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return unexpected;
    }
    return unexpected;
}
