#include "fbhm/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace fbhm {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r\"");
    const auto e = s.find_last_not_of(" \t\r\"");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out)
{
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last;
}

std::string fmt(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

SurvivalDataset read_dataset_csv(std::istream& in, const std::string& source)
{
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) {
        throw DataError(source + ": line " + std::to_string(lineno) + ": " + what);
    };
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++lineno;
        if (!trim(line).empty()) {
            header = split(line);
            break;
        }
    }
    if (header.empty())
        throw DataError(source + ": empty file");
    int time_col = -1, event_col = -1;
    std::vector<int> cov_cols;
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = trim(header[c]);
        if (name == "time")
            time_col = static_cast<int>(c);
        else if (name == "event")
            event_col = static_cast<int>(c);
        else {
            cov_cols.push_back(static_cast<int>(c));
            names.push_back(name);
        }
    }
    if (time_col < 0 || event_col < 0)
        fail("header must contain 'time' and 'event' columns");

    std::vector<double> t;
    std::vector<int> e;
    std::vector<std::vector<double>> x;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto fields = split(line);
        if (fields.size() != header.size())
            fail("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        double v;
        if (!parse_double(trim(fields[time_col]), v) || !std::isfinite(v) || v < 0.0)
            fail("time must be a nonnegative number, got '" + trim(fields[time_col]) + "'");
        t.push_back(v);
        const std::string ev = trim(fields[event_col]);
        if (ev != "0" && ev != "1")
            fail("event must be 0 or 1, got '" + ev + "'");
        e.push_back(ev == "1");
        std::vector<double> row;
        for (std::size_t k = 0; k < cov_cols.size(); ++k) {
            if (!parse_double(trim(fields[cov_cols[k]]), v) || !std::isfinite(v))
                fail("covariate '" + names[k] + "' is not a finite number");
            row.push_back(v);
        }
        x.push_back(std::move(row));
    }
    const Index n = static_cast<Index>(t.size());
    if (n == 0)
        throw DataError(source + ": no data rows");
    Eigen::VectorXd tv = Eigen::Map<Eigen::VectorXd>(t.data(), n);
    Eigen::VectorXi ev(n);
    Eigen::MatrixXd xm(n, static_cast<Index>(cov_cols.size()));
    for (Index i = 0; i < n; ++i) {
        ev(i) = e[i];
        for (Index k = 0; k < xm.cols(); ++k)
            xm(i, k) = x[i][k];
    }
    try {
        return SurvivalDataset(tv, ev, xm, names);
    } catch (const DataError& err) {
        throw DataError(source + ": " + err.what());
    }
}

SurvivalDataset read_dataset_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open " + path.string());
    return read_dataset_csv(in, path.string());
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws)
{
    if (draws.empty())
        throw std::invalid_argument("write_draws_csv: no draws");
    const int jmax = draws.j_max;
    const auto& first = draws.states.front();
    const bool hist = first.has_historical();
    const bool shared = first.borrowing.shared;
    const Index p = first.beta.size(), p0 = first.beta0.size();
    auto name = [](const std::vector<std::string>& names, Index k) {
        return k < static_cast<Index>(names.size()) && !names[k].empty() ? names[k] : "x" + std::to_string(k + 1);
    };

    std::string head = "iter,chain,J,end";
    for (int k = 1; k <= jmax; ++k)
        head += ",s" + std::to_string(k);
    for (int k = 1; k <= jmax + 1; ++k)
        head += ",lambda" + std::to_string(k);
    if (hist)
        for (int k = 1; k <= jmax + 1; ++k)
            head += ",lambda0_" + std::to_string(k);
    for (Index k = 0; k < p; ++k)
        head += ",beta_" + name(draws.covariate_names, k);
    for (Index k = 0; k < p0; ++k)
        head += ",beta0_" + name(draws.covariate_names0, k);
    if (hist) {
        if (shared)
            head += ",tau";
        else
            for (int k = 1; k <= jmax + 1; ++k)
                head += ",tau" + std::to_string(k);
    }
    head += ",sigma2,mu\n";
    out << head;

    std::vector<int> iter_in_chain;
    std::string row;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        const auto& s = draws.states[i];
        const int chain = i < draws.chain_of.size() ? draws.chain_of[i] : 0;
        if (chain >= static_cast<int>(iter_in_chain.size()))
            iter_in_chain.resize(chain + 1, 0);
        const int J = s.partition.num_splits();
        if (J > jmax)
            throw std::invalid_argument("write_draws_csv: state exceeds J_max");
        row = std::to_string(++iter_in_chain[chain]) + "," + std::to_string(chain) + "," + std::to_string(J) + "," +
              fmt(s.partition.end());
        auto padded = [&](auto&& value, int have, int width) {
            for (int k = 0; k < width; ++k)
                row += k < have ? "," + fmt(value(k)) : ",NA";
        };
        padded([&](int k) { return s.partition[k + 1]; }, J, jmax);
        padded([&](int k) { return std::exp(s.log_lambda(k)); }, J + 1, jmax + 1);
        if (hist)
            padded([&](int k) { return std::exp(s.log_lambda0(k)); }, J + 1, jmax + 1);
        for (Index k = 0; k < p; ++k)
            row += "," + fmt(s.beta(k));
        for (Index k = 0; k < p0; ++k)
            row += "," + fmt(s.beta0(k));
        if (hist) {
            if (shared)
                row += "," + fmt(s.borrowing.tau(0));
            else
                padded([&](int k) { return s.borrowing.tau(k); }, J + 1, jmax + 1);
        }
        row += "," + fmt(s.sigma2) + "," + fmt(s.mu) + "\n";
        out << row;
    }
}

PosteriorDraws read_draws_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw DataError("draws: empty file");
    const auto header = split(line);
    std::map<std::string, std::vector<int>> groups;
    PosteriorDraws out;
    int jmax = 0;
    bool shared_tau = false;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string h = trim(header[c]);
        std::string key;
        if (h.rfind("lambda0_", 0) == 0)
            key = "lambda0";
        else if (h.rfind("lambda", 0) == 0)
            key = "lambda";
        else if (h.rfind("beta0_", 0) == 0) {
            key = "beta0";
            out.covariate_names0.push_back(h.substr(6));
        } else if (h.rfind("beta_", 0) == 0) {
            key = "beta";
            out.covariate_names.push_back(h.substr(5));
        } else if (h == "tau") {
            key = "tau";
            shared_tau = true;
        } else if (h.rfind("tau", 0) == 0)
            key = "tau";
        else if (h.size() > 1 && h[0] == 's' && std::isdigit(static_cast<unsigned char>(h[1]))) {
            key = "s";
            ++jmax;
        } else
            key = h;
        groups[key].push_back(static_cast<int>(c));
    }
    for (const char* need : {"chain", "J", "end", "sigma2", "mu"})
        if (!groups.count(need))
            throw DataError(std::string("draws: missing column '") + need + "'");
    out.j_max = jmax;
    out.borrowing = groups.count("lambda0") > 0;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty())
            continue;
        const auto f = split(line);
        if (f.size() != header.size())
            throw DataError("draws: line " + std::to_string(lineno) + ": wrong field count");
        auto num = [&](int c) {
            double v;
            if (!parse_double(trim(f[c]), v))
                throw DataError("draws: line " + std::to_string(lineno) + ": bad value '" + f[c] + "'");
            return v;
        };
        ChainState s;
        const int J = static_cast<int>(num(groups["J"][0]));
        std::vector<double> splits{0.0};
        for (int k = 0; k < J; ++k)
            splits.push_back(num(groups["s"][k]));
        splits.push_back(num(groups["end"][0]));
        s.partition = TimePartition(splits);
        auto values = [&](const char* key) {
            Eigen::VectorXd v(J + 1);
            for (int k = 0; k <= J; ++k)
                v(k) = num(groups[key][k]);
            return v;
        };
        auto logs = [&](const char* key) { return Eigen::VectorXd(values(key).array().log()); };
        s.log_lambda = logs("lambda");
        if (out.borrowing) {
            s.log_lambda0 = logs("lambda0");
            s.borrowing.shared = shared_tau;
            if (shared_tau)
                s.borrowing.tau = Eigen::VectorXd::Constant(1, num(groups["tau"][0]));
            else
                s.borrowing.tau = values("tau");
        }
        auto coefs = [&](const char* key) {
            const auto& cols = groups[key];
            Eigen::VectorXd v(cols.size());
            for (std::size_t k = 0; k < cols.size(); ++k)
                v(k) = num(cols[k]);
            return v;
        };
        s.beta = coefs("beta");
        s.beta0 = coefs("beta0");
        s.sigma2 = num(groups["sigma2"][0]);
        s.mu = num(groups["mu"][0]);
        out.end = s.partition.end();
        out.chain_of.push_back(static_cast<int>(num(groups["chain"][0])));
        out.states.push_back(std::move(s));
    }
    if (out.empty())
        throw DataError("draws: no rows");
    return out;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

template <typename T>
void take(const json& j, const char* key, T& field)
{
    if (j.contains(key))
        field = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object())
        throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            ok = ok || it.key() == a;
        if (!ok)
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

}  // namespace

RunConfig parse_config(const json& j, RunConfig c)
{
    try {
        check_keys(j,
                   {"current", "historical", "out_dir", "seed", "chains", "threads", "partition", "gmrf",
                    "commensurate", "sampler", "summary", "scenario"},
                   "config");
        if (j.contains("current"))
            c.current = j["current"].get<std::string>();
        if (j.contains("historical"))
            c.historical = j["historical"].get<std::string>();
        take(j, "out_dir", c.out_dir);
        take(j, "chains", c.chains);
        take(j, "threads", c.threads);
        if (j.contains("seed")) {
            c.sampler.seed = j["seed"].get<std::uint64_t>();
            c.scenario.seed = c.sampler.seed;
        }

        // scenario first: its family sets model defaults that explicit blocks may override
        if (j.contains("scenario")) {
            const auto& s = j["scenario"];
            check_keys(s,
                       {"family", "scenario", "model", "n_treat", "n_ctrl", "n_hist", "censor_rate",
                        "treatment_log_hr", "replicates", "fixed_intervals", "informed", "hierarchical_scale",
                        "level"},
                       "scenario");
            auto fam = c.scenario.family;
            auto sc = c.scenario.scenario;
            auto model = c.scenario.analysis.model;
            if (s.contains("family"))
                fam = parse_family(s["family"].get<std::string>());
            if (s.contains("scenario"))
                sc = parse_scenario(s["scenario"].get<std::string>());
            if (s.contains("model"))
                model = parse_model(s["model"].get<std::string>());
            auto fresh = ScenarioSpec::defaults(fam, sc, model);
            fresh.seed = c.scenario.seed;
            fresh.n_replicates = c.scenario.n_replicates;
            c.scenario = fresh;
            c.model = fresh.analysis.fbhm;
            take(s, "n_treat", c.scenario.n_treat);
            take(s, "n_ctrl", c.scenario.n_ctrl);
            take(s, "n_hist", c.scenario.n_hist);
            take(s, "censor_rate", c.scenario.censor_rate);
            if (s.contains("treatment_log_hr"))
                c.scenario.treatment_log_hr = s["treatment_log_hr"].get<double>();
            take(s, "replicates", c.scenario.n_replicates);
            take(s, "fixed_intervals", c.scenario.analysis.fixed_intervals);
            take(s, "level", c.scenario.analysis.level);
            if (s.contains("hierarchical_scale"))
                c.scenario.analysis.hierarchical_scale = s["hierarchical_scale"].get<double>();
            if (s.contains("informed")) {
                check_keys(s["informed"], {"w", "p0"}, "scenario.informed");
                take(s["informed"], "w", c.scenario.analysis.informed.w);
                take(s["informed"], "p0", c.scenario.analysis.informed.p0);
            }
        }
        if (j.contains("partition")) {
            check_keys(j["partition"], {"phi", "j_max"}, "partition");
            take(j["partition"], "phi", c.model.partition.phi);
            take(j["partition"], "j_max", c.model.partition.j_max);
        }
        if (j.contains("gmrf")) {
            const auto& g = j["gmrf"];
            check_keys(g, {"c_lambda", "a_sigma", "b_sigma", "mu_prior_variance", "mu_prior_mean"}, "gmrf");
            take(g, "c_lambda", c.model.gmrf.c_lambda);
            take(g, "a_sigma", c.model.gmrf.a_sigma);
            take(g, "b_sigma", c.model.gmrf.b_sigma);
            take(g, "mu_prior_variance", c.model.gmrf.mu_prior_variance);
            take(g, "mu_prior_mean", c.model.gmrf.mu_prior_mean);
        }
        if (j.contains("commensurate")) {
            const auto& m = j["commensurate"];
            check_keys(m, {"variant", "a_tau", "b_tau", "c_tau", "d_tau", "p0"}, "commensurate");
            if (m.contains("variant"))
                c.model.commensurate.variant = parse_tau_variant(m["variant"].get<std::string>());
            take(m, "a_tau", c.model.commensurate.a_tau);
            take(m, "b_tau", c.model.commensurate.b_tau);
            take(m, "c_tau", c.model.commensurate.c_tau);
            take(m, "d_tau", c.model.commensurate.d_tau);
            take(m, "p0", c.model.commensurate.p0);
        }
        if (j.contains("sampler")) {
            const auto& s = j["sampler"];
            check_keys(s,
                       {"iterations", "burn_in", "pi_birth", "pi_death", "alpha_power", "c_beta", "c_beta0",
                        "a_lambda", "b_lambda"},
                       "sampler");
            take(s, "iterations", c.sampler.iterations);
            take(s, "burn_in", c.sampler.burn_in);
            take(s, "pi_birth", c.sampler.pi_birth);
            take(s, "pi_death", c.sampler.pi_death);
            take(s, "alpha_power", c.sampler.alpha_power);
            take(s, "c_beta", c.sampler.c_beta);
            take(s, "c_beta0", c.sampler.c_beta0);
            take(s, "a_lambda", c.sampler.a_lambda);
            take(s, "b_lambda", c.sampler.b_lambda);
        }
        if (j.contains("summary")) {
            const auto& s = j["summary"];
            check_keys(s, {"level", "coefficient_level", "band", "grid_points"}, "summary");
            take(s, "level", c.summary.level);
            take(s, "coefficient_level", c.summary.coefficient_level);
            take(s, "grid_points", c.summary.grid_points);
            if (s.contains("band")) {
                const auto b = s["band"].get<std::string>();
                if (b == "hpd")
                    c.summary.band = BandType::hpd;
                else if (b == "equal_tailed")
                    c.summary.band = BandType::equal_tailed;
                else
                    throw ConfigError("summary: band must be 'hpd' or 'equal_tailed'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.scenario.analysis.fbhm = c.model;
    c.scenario.analysis.sampler = c.sampler;
    c.scenario.seed = c.sampler.seed;
    return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_config(j, std::move(base));
}

void RunConfig::validate() const
{
    model.validate();
    sampler.validate();
    if (chains < 1)
        throw ConfigError("chains must be at least 1");
    if (threads < 1)
        throw ConfigError("threads must be at least 1");
    if (static_cast<long>(sampler.retained()) * chains < 100)
        throw ConfigError("sampler: summaries need at least 100 retained draws across chains");
    if (!(summary.level >= 0.0 && summary.level < 1.0))
        throw ConfigError("summary: level must lie in [0, 1)");
    if (!(summary.coefficient_level > 0.0 && summary.coefficient_level < 1.0))
        throw ConfigError("summary: coefficient_level must lie in (0, 1)");
    if (summary.grid_points < 1)
        throw ConfigError("summary: grid_points must be positive");
    scenario.validate();
}

json to_json(const ModelSpec& m)
{
    json g = {{"c_lambda", m.gmrf.c_lambda}, {"a_sigma", m.gmrf.a_sigma}, {"b_sigma", m.gmrf.b_sigma}};
    if (std::isfinite(m.gmrf.mu_prior_variance)) {
        g["mu_prior_variance"] = m.gmrf.mu_prior_variance;
        g["mu_prior_mean"] = m.gmrf.mu_prior_mean;
    }
    return {{"partition", {{"phi", m.partition.phi}, {"j_max", m.partition.j_max}}},
            {"gmrf", g},
            {"commensurate",
             {{"variant", std::string(to_string(m.commensurate.variant))},
              {"a_tau", m.commensurate.a_tau},
              {"b_tau", m.commensurate.b_tau},
              {"c_tau", m.commensurate.c_tau},
              {"d_tau", m.commensurate.d_tau},
              {"p0", m.commensurate.p0}}}};
}

json to_json(const SamplerConfig& c)
{
    return {{"iterations", c.iterations}, {"burn_in", c.burn_in},   {"pi_birth", c.pi_birth},
            {"pi_death", c.pi_death},     {"alpha_power", c.alpha_power}, {"c_beta", c.c_beta},
            {"c_beta0", c.c_beta0},       {"a_lambda", c.a_lambda}, {"b_lambda", c.b_lambda},
            {"seed", c.seed}};
}

json to_json(const ScenarioSpec& s)
{
    json j = {{"family", std::string(to_string(s.family))},
              {"scenario", std::string(to_string(s.scenario))},
              {"model", std::string(to_string(s.analysis.model))},
              {"n_treat", s.n_treat},
              {"n_ctrl", s.n_ctrl},
              {"n_hist", s.n_hist},
              {"censor_rate", s.censor_rate},
              {"treatment_log_hr", s.log_hr()},
              {"replicates", s.n_replicates},
              {"fixed_intervals", s.analysis.fixed_intervals},
              {"level", s.analysis.level},
              {"informed", {{"w", s.analysis.informed.w}, {"p0", s.analysis.informed.p0}}},
              {"seed", s.seed},
              {"model_spec", to_json(s.analysis.fbhm)},
              {"sampler", to_json(s.analysis.sampler)}};
    if (s.analysis.hierarchical_scale)
        j["hierarchical_scale"] = *s.analysis.hierarchical_scale;
    return j;
}

json to_json(const SamplerDiagnostics& d)
{
    auto rate = [](const MoveStats& m) { return json{{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}}; };
    return {{"beta", rate(d.beta)},       {"beta0", rate(d.beta0)}, {"lambda", rate(d.lambda)},
            {"lambda0", rate(d.lambda0)}, {"shift", rate(d.shift)}, {"birth", rate(d.birth)},
            {"death", rate(d.death)},     {"gamma", rate(d.gamma)}, {"truncated_proposals", d.truncated_proposals}};
}

std::uint64_t fnv1a64(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash(const json& config)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

}  // namespace fbhm
