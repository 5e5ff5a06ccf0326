/*
 * Copyright 2026 The sumtrain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sumtrain/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sumtrain/error.hpp"
#include "sumtrain/evaluation.hpp"

namespace sumtrain
{

namespace
{

using json = nlohmann::ordered_json;

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_out(const std::filesystem::path& path)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
    return out;
}

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos)
    {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool parse_double(const std::string& text, double& out)
{
    const std::string t = trim(text);
    if (t.empty())
    {
        return false;
    }
    char* end = nullptr;
    errno = 0;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && errno != ERANGE && std::isfinite(out);
}

bool parse_integer(const std::string& text, long long& out)
{
    const std::string t = trim(text);
    if (t.empty())
    {
        return false;
    }
    char* end = nullptr;
    errno = 0;
    out = std::strtoll(t.c_str(), &end, 10);
    return end == t.c_str() + t.size() && errno != ERANGE;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i)
    {
        const char c = line[i];
        if (quoted)
        {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
            {
                field += '"';
                ++i;
            }
            else if (c == '"')
            {
                quoted = false;
            }
            else
            {
                field += c;
            }
        }
        else if (c == '"')
        {
            quoted = true;
        }
        else if (c == ',')
        {
            fields.push_back(std::move(field));
            field.clear();
        }
        else if (c != '\r')
        {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\n") == std::string::npos)
    {
        return text;
    }
    std::string out = "\"";
    for (const char c : text)
    {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line, const std::string& what)
{
    fail(ErrorKind::io, path.string() + ":" + std::to_string(line) + ": " + what);
}

// ---------------------------------------------------------------------------
// Config reading with error collection.

class Reader
{
public:
    explicit Reader(std::filesystem::path base_dir) : base_dir_(std::move(base_dir)) {}

    std::vector<std::string> errors;

    void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

    bool object(const json& node, const std::string& path)
    {
        if (!node.is_object())
        {
            error(path, "expected an object");
            return false;
        }
        return true;
    }

    void allow(const json& node, const std::string& path, const std::set<std::string>& keys)
    {
        for (const auto& [key, value] : node.items())
        {
            if (!keys.count(key))
            {
                error(join(path, key), "unknown key");
            }
        }
    }

    static std::string join(const std::string& path, const std::string& key)
    {
        return path.empty() ? key : path + "." + key;
    }

    const json* find(const json& node, const std::string& path, const std::string& key, bool required)
    {
        const auto it = node.find(key);
        if (it == node.end())
        {
            if (required)
            {
                error(join(path, key), "missing required key");
            }
            return nullptr;
        }
        return &*it;
    }

    void number(const json& node, const std::string& path, const std::string& key, double& out, bool required = false)
    {
        if (const json* v = find(node, path, key, required))
        {
            if (v->is_number())
            {
                out = v->get<double>();
            }
            else
            {
                error(join(path, key), "expected a number");
            }
        }
    }

    template <class Int>
    void integer(const json& node, const std::string& path, const std::string& key, Int& out, bool required = false)
    {
        if (const json* v = find(node, path, key, required))
        {
            if (v->is_number_integer())
            {
                out = v->get<Int>();
            }
            else
            {
                error(join(path, key), "expected an integer");
            }
        }
    }

    void text(const json& node, const std::string& path, const std::string& key, std::string& out)
    {
        if (const json* v = find(node, path, key, false))
        {
            if (v->is_string())
            {
                out = v->get<std::string>();
            }
            else
            {
                error(join(path, key), "expected a string");
            }
        }
    }

    template <class T>
    void choice(
        const json& node,
        const std::string& path,
        const std::string& key,
        T& out,
        const std::vector<std::pair<std::string, T>>& options)
    {
        std::string value;
        const auto before = errors.size();
        text(node, path, key, value);
        if (value.empty() || errors.size() != before)
        {
            return;
        }
        for (const auto& [name, option] : options)
        {
            if (name == value)
            {
                out = option;
                return;
            }
        }
        std::string names;
        for (const auto& [name, option] : options)
        {
            names += (names.empty() ? "" : ", ") + name;
        }
        error(join(path, key), "must be one of {" + names + "} (got \"" + value + "\")");
    }

    template <class T>
    void list(const json& node, const std::string& path, const std::string& key, std::vector<T>& out)
    {
        const json* v = find(node, path, key, false);
        if (!v)
        {
            return;
        }
        if (!v->is_array())
        {
            error(join(path, key), "expected an array");
            return;
        }
        out.clear();
        for (std::size_t i = 0; i < v->size(); ++i)
        {
            const auto& item = (*v)[i];
            const bool ok = std::is_integral_v<T> ? item.is_number_integer() : item.is_number();
            if (!ok)
            {
                error(join(path, key) + "[" + std::to_string(i) + "]",
                      std::is_integral_v<T> ? "expected an integer" : "expected a number");
                continue;
            }
            out.push_back(item.get<T>());
        }
    }

    void range(bool ok, const std::string& path, const std::string& bound, double got)
    {
        if (!ok)
        {
            error(path, "must be " + bound + " (got " + format_decimal(got) + ")");
        }
    }

    void covariance(const json& node, const std::string& path, Eigen::Index p, CovarianceSpec& spec, std::string& file)
    {
        spec = CovarianceSpec{};
        spec.p = p;
        if (!object(node, path))
        {
            return;
        }
        allow(node, path, {"kind", "n_block", "rho", "file", "matrix"});
        choice<CovarianceKind>(node, path, "kind", spec.kind,
                               {{"identity", CovarianceKind::identity},
                                {"block_ar1", CovarianceKind::block_ar1},
                                {"dense", CovarianceKind::dense}});
        if (spec.kind == CovarianceKind::block_ar1)
        {
            integer(node, path, "n_block", spec.n_block, true);
            number(node, path, "rho", spec.rho, true);
            range(spec.n_block >= 1, join(path, "n_block"), ">= 1", static_cast<double>(spec.n_block));
            range(spec.rho >= 0.0 && spec.rho < 1.0, join(path, "rho"), "in [0, 1)", spec.rho);
        }
        if (spec.kind == CovarianceKind::dense)
        {
            text(node, path, "file", file);
            const json* inline_matrix = find(node, path, "matrix", false);
            if (file.empty() == (inline_matrix == nullptr))
            {
                error(path, "dense covariance needs exactly one of \"file\" or \"matrix\"");
                return;
            }
            try
            {
                if (!file.empty())
                {
                    const auto resolved = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file)
                                                                                    : base_dir_ / file;
                    spec.matrix = read_covariance(resolved).matrix;
                }
                else
                {
                    spec.matrix = matrix_from_json(*inline_matrix, join(path, "matrix"));
                }
            }
            catch (const Error& e)
            {
                error(join(path, file.empty() ? "matrix" : "file"), e.what());
            }
        }
    }

    Eigen::MatrixXd matrix_from_json(const json& node, const std::string& path)
    {
        if (!node.is_array() || node.empty())
        {
            error(path, "expected a non-empty array of rows");
            return {};
        }
        const auto rows = static_cast<Eigen::Index>(node.size());
        const auto cols = node[0].is_array() ? static_cast<Eigen::Index>(node[0].size()) : 0;
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
        {
            const auto& row = node[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            {
                error(path + "[" + std::to_string(i) + "]", "rows must be arrays of equal length");
                return {};
            }
            for (Eigen::Index j = 0; j < cols; ++j)
            {
                const auto& v = row[static_cast<std::size_t>(j)];
                if (!v.is_number())
                {
                    error(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", "expected a number");
                    return {};
                }
                m(i, j) = v.get<double>();
            }
        }
        return m;
    }

private:
    std::filesystem::path base_dir_;
};

void read_data(Reader& rd, const json& node, AppConfig& cfg)
{
    const std::string path = "data";
    if (!rd.object(node, path))
    {
        return;
    }
    rd.allow(node, path,
             {"n", "p", "n_w", "kappa", "sigma_beta2", "h2", "effect_dist", "noise_dist", "covariance", "n_test",
              "max_elements"});
    auto& g = cfg.data;
    rd.integer(node, path, "n", g.n, true);
    rd.integer(node, path, "p", g.p, true);
    rd.integer(node, path, "n_w", g.n_w, true);
    rd.number(node, path, "kappa", g.kappa);
    rd.number(node, path, "sigma_beta2", g.sigma_beta2);
    rd.number(node, path, "h2", g.target_h2);
    rd.choice<EffectDistribution>(node, path, "effect_dist", g.effect_dist,
                                  {{"gaussian", EffectDistribution::gaussian},
                                   {"rademacher", EffectDistribution::rademacher}});
    std::string noise = "gaussian";
    rd.text(node, path, "noise_dist", noise);
    if (noise != "gaussian")
    {
        rd.error("data.noise_dist", "must be \"gaussian\" (got \"" + noise + "\")");
    }
    rd.integer(node, path, "n_test", cfg.n_test);
    rd.number(node, path, "max_elements", g.max_elements);

    rd.range(g.n >= 1, "data.n", ">= 1", static_cast<double>(g.n));
    rd.range(g.p >= 1, "data.p", ">= 1", static_cast<double>(g.p));
    rd.range(g.n_w >= 1, "data.n_w", ">= 1", static_cast<double>(g.n_w));
    rd.range(g.kappa >= 0.0 && g.kappa <= 1.0, "data.kappa", "in [0, 1]", g.kappa);
    rd.range(g.sigma_beta2 > 0.0, "data.sigma_beta2", "> 0", g.sigma_beta2);
    rd.range(g.target_h2 >= 0.0 && g.target_h2 <= 1.0, "data.h2", "in [0, 1]", g.target_h2);
    rd.range(cfg.n_test >= 2, "data.n_test", ">= 2", static_cast<double>(cfg.n_test));
    rd.range(g.max_elements > 0.0, "data.max_elements", "> 0", g.max_elements);

    if (const json* cov = rd.find(node, path, "covariance", false))
    {
        rd.covariance(*cov, "data.covariance", g.p, g.cov, cfg.cov_file);
    }
    else
    {
        g.cov = CovarianceSpec{};
        g.cov.p = g.p;
    }
}

void read_estimator(Reader& rd, const json& node, AppConfig& cfg)
{
    const std::string path = "estimator";
    if (!rd.object(node, path))
    {
        return;
    }
    rd.allow(node, path, {"families", "theta_grid", "k_grid"});
    auto& est = cfg.estimator;
    if (const json* fams = rd.find(node, path, "families", false))
    {
        if (!fams->is_array() || fams->empty())
        {
            rd.error("estimator.families", "expected a non-empty array");
        }
        else
        {
            est.ridge = false;
            est.threshold = false;
            for (const auto& f : *fams)
            {
                const std::string name = f.is_string() ? f.get<std::string>() : "";
                if (name == "ridge")
                {
                    est.ridge = true;
                }
                else if (name == "threshold")
                {
                    est.threshold = true;
                }
                else
                {
                    rd.error("estimator.families", "entries must be \"ridge\" or \"threshold\"");
                }
            }
        }
    }
    if (const json* grid = rd.find(node, path, "theta_grid", false))
    {
        if (grid->is_object())
        {
            rd.allow(*grid, "estimator.theta_grid", {"lo", "hi", "count"});
            double lo = 1e-3;
            double hi = 1e2;
            int count = 25;
            rd.number(*grid, "estimator.theta_grid", "lo", lo, true);
            rd.number(*grid, "estimator.theta_grid", "hi", hi, true);
            rd.integer(*grid, "estimator.theta_grid", "count", count, true);
            if (lo > 0.0 && hi >= lo && count >= 1)
            {
                est.theta_grid = log_grid(lo, hi, static_cast<std::size_t>(count));
            }
            else
            {
                rd.error("estimator.theta_grid", "needs 0 < lo <= hi and count >= 1");
            }
        }
        else
        {
            rd.list(node, path, "theta_grid", est.theta_grid);
        }
        for (const double t : est.theta_grid)
        {
            rd.range(t > 0.0, "estimator.theta_grid", "positive", t);
        }
    }
    rd.list(node, path, "k_grid", est.k_grid);
}

void read_resampler(Reader& rd, const json& node, AppConfig& cfg)
{
    const std::string path = "resampler";
    if (!rd.object(node, path))
    {
        return;
    }
    rd.allow(node, path, {"mode", "noise"});
    rd.choice<ResamplerMode>(node, path, "mode", cfg.resampler.mode,
                             {{"oracle", ResamplerMode::oracle},
                              {"expected", ResamplerMode::expected},
                              {"plugin", ResamplerMode::plugin}});
    rd.choice<ResampleNoise>(node, path, "noise", cfg.resampler.noise,
                             {{"gaussian", ResampleNoise::gaussian}, {"rademacher", ResampleNoise::rademacher}});
}

void read_modes(Reader& rd, const json& node, AppConfig& cfg)
{
    if (!node.is_array() || node.empty())
    {
        rd.error("modes", "expected a non-empty array");
        return;
    }
    cfg.modes = {false, false, false, false};
    for (const auto& m : node)
    {
        const std::string name = m.is_string() ? m.get<std::string>() : "";
        if (name == "pseudo")
        {
            cfg.modes.pseudo = true;
        }
        else if (name == "individual")
        {
            cfg.modes.individual = true;
        }
        else if (name == "theory")
        {
            cfg.modes.theory = true;
        }
        else if (name == "holdout")
        {
            cfg.modes.holdout = true;
        }
        else
        {
            rd.error("modes", "entries must be pseudo, individual, theory or holdout");
        }
    }
}

void read_multi(Reader& rd, const json& node, AppConfig& cfg)
{
    const std::string path = "multi";
    if (!rd.object(node, path))
    {
        return;
    }
    rd.allow(node, path, {"populations", "cross", "weight_step"});
    MultiSection section;
    rd.number(node, path, "weight_step", section.weight_step);
    rd.range(section.weight_step > 0.0 && section.weight_step <= 1.0, "multi.weight_step", "in (0, 1]",
             section.weight_step);
    const json* pops = rd.find(node, path, "populations", true);
    if (pops && (!pops->is_array() || pops->empty()))
    {
        rd.error("multi.populations", "expected a non-empty array");
        pops = nullptr;
    }
    if (pops)
    {
        for (std::size_t j = 0; j < pops->size(); ++j)
        {
            const auto& item = (*pops)[j];
            const std::string ppath = "multi.populations[" + std::to_string(j) + "]";
            MultiPopulationSection pop;
            pop.cov.p = cfg.data.p;
            if (!rd.object(item, ppath))
            {
                continue;
            }
            rd.allow(item, ppath, {"covariance", "kappa", "h2", "theta"});
            rd.number(item, ppath, "kappa", pop.kappa);
            rd.number(item, ppath, "h2", pop.h2);
            rd.number(item, ppath, "theta", pop.theta);
            rd.range(pop.kappa >= 0.0 && pop.kappa <= 1.0, ppath + ".kappa", "in [0, 1]", pop.kappa);
            rd.range(pop.h2 > 0.0 && pop.h2 <= 1.0, ppath + ".h2", "in (0, 1]", pop.h2);
            rd.range(pop.theta > 0.0, ppath + ".theta", "> 0", pop.theta);
            if (const json* cov = rd.find(item, ppath, "covariance", false))
            {
                rd.covariance(*cov, ppath + ".covariance", cfg.data.p, pop.cov, pop.cov_file);
            }
            section.populations.push_back(std::move(pop));
        }
    }
    if (const json* cross = rd.find(node, path, "cross", true))
    {
        section.cross = rd.matrix_from_json(*cross, "multi.cross");
    }
    cfg.multi = std::move(section);
}

json covariance_json(const CovarianceSpec& spec, const std::string& file, bool with_p)
{
    json out;
    switch (spec.kind)
    {
        case CovarianceKind::identity:
            out["kind"] = "identity";
            break;
        case CovarianceKind::block_ar1:
            out["kind"] = "block_ar1";
            out["n_block"] = spec.n_block;
            out["rho"] = spec.rho;
            break;
        case CovarianceKind::dense:
            out["kind"] = "dense";
            if (!file.empty())
            {
                out["file"] = file;
            }
            else
            {
                json rows = json::array();
                for (Eigen::Index i = 0; i < spec.matrix.rows(); ++i)
                {
                    json row = json::array();
                    for (Eigen::Index j = 0; j < spec.matrix.cols(); ++j)
                    {
                        row.push_back(spec.matrix(i, j));
                    }
                    rows.push_back(std::move(row));
                }
                out["matrix"] = std::move(rows);
            }
            break;
    }
    if (with_p)
    {
        out["p"] = spec.p;
    }
    return out;
}

std::string join_errors(const std::vector<std::string>& errors)
{
    std::string out;
    for (const auto& e : errors)
    {
        out += (out.empty() ? "" : "\n") + e;
    }
    return out;
}

}  // namespace

std::string format_decimal(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

ParseOutcome parse_config_string(const std::string& text, const std::filesystem::path& base_dir)
{
    ParseOutcome outcome;
    json root;
    try
    {
        root = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        outcome.errors.push_back(std::string("syntax error: ") + e.what());
        return outcome;
    }
    Reader rd(base_dir);
    if (!rd.object(root, "(root)"))
    {
        outcome.errors = rd.errors;
        return outcome;
    }
    rd.allow(root, "",
             {"version", "seed", "replicates", "split_ratio", "output", "data", "estimator", "resampler", "modes",
              "parity", "ratio", "multi", "ensemble"});

    AppConfig cfg;
    rd.integer(root, "", "version", cfg.version, true);
    if (root.contains("version") && root["version"].is_number_integer() && cfg.version != 1)
    {
        rd.error("version", "unsupported version " + std::to_string(cfg.version) + " (expected 1)");
    }
    if (const json* seed = rd.find(root, "", "seed", false))
    {
        if (seed->is_number_unsigned())
        {
            cfg.seed = seed->get<std::uint64_t>();
        }
        else
        {
            rd.error("seed", "expected a non-negative integer");
        }
    }
    rd.integer(root, "", "replicates", cfg.replicates);
    rd.range(cfg.replicates >= 1, "replicates", ">= 1", cfg.replicates);
    rd.number(root, "", "split_ratio", cfg.split_ratio);
    rd.range(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0, "split_ratio", "in (0, 1)", cfg.split_ratio);
    rd.text(root, "", "output", cfg.output);

    if (const json* data = rd.find(root, "", "data", true))
    {
        read_data(rd, *data, cfg);
    }
    if (const json* est = rd.find(root, "", "estimator", false))
    {
        read_estimator(rd, *est, cfg);
    }
    if (const json* res = rd.find(root, "", "resampler", false))
    {
        read_resampler(rd, *res, cfg);
    }
    if (const json* modes = rd.find(root, "", "modes", false))
    {
        read_modes(rd, *modes, cfg);
    }
    if (const json* parity = rd.find(root, "", "parity", false))
    {
        if (rd.object(*parity, "parity"))
        {
            rd.allow(*parity, "parity", {"h2", "p", "kappa"});
            ParitySection s;
            rd.list(*parity, "parity", "h2", s.h2);
            rd.list(*parity, "parity", "p", s.p);
            rd.list(*parity, "parity", "kappa", s.kappa);
            cfg.parity = std::move(s);
        }
    }
    if (const json* ratio = rd.find(root, "", "ratio", false))
    {
        if (rd.object(*ratio, "ratio"))
        {
            rd.allow(*ratio, "ratio", {"n", "theta"});
            RatioSection s;
            rd.list(*ratio, "ratio", "n", s.n);
            rd.list(*ratio, "ratio", "theta", s.theta);
            cfg.ratio = std::move(s);
        }
    }
    if (const json* multi = rd.find(root, "", "multi", false))
    {
        read_multi(rd, *multi, cfg);
    }
    if (const json* ens = rd.find(root, "", "ensemble", false))
    {
        if (rd.object(*ens, "ensemble"))
        {
            rd.allow(*ens, "ensemble", {"weight_step"});
            EnsembleSection s;
            rd.number(*ens, "ensemble", "weight_step", s.weight_step);
            rd.range(s.weight_step > 0.0 && s.weight_step <= 1.0, "ensemble.weight_step", "in (0, 1]", s.weight_step);
            cfg.ensemble = s;
        }
    }
    cfg.data.seed = cfg.seed;

    // Cross-field checks only once every field parsed cleanly.
    if (rd.errors.empty())
    {
        for (const auto& e : validate(experiment_of(cfg)))
        {
            rd.errors.push_back(e);
        }
        if (cfg.multi)
        {
            for (const auto& e : validate(multi_of(cfg)))
            {
                rd.errors.push_back("multi: " + e);
            }
        }
    }
    outcome.errors = std::move(rd.errors);
    if (outcome.errors.empty())
    {
        outcome.config = std::move(cfg);
    }
    return outcome;
}

ParseOutcome parse_config_file(const std::filesystem::path& path)
{
    std::string text;
    try
    {
        text = read_text(path);
    }
    catch (const Error& e)
    {
        return {std::nullopt, {e.what()}};
    }
    return parse_config_string(text, path.parent_path());
}

AppConfig load_config(const std::filesystem::path& path)
{
    auto outcome = parse_config_file(path);
    require(outcome.ok(), ErrorKind::config, join_errors(outcome.errors));
    return std::move(*outcome.config);
}

std::string serialize_config(const AppConfig& cfg)
{
    json root;
    root["version"] = cfg.version;
    root["seed"] = cfg.seed;
    root["replicates"] = cfg.replicates;
    root["split_ratio"] = cfg.split_ratio;
    if (!cfg.output.empty())
    {
        root["output"] = cfg.output;
    }
    const auto& g = cfg.data;
    json data;
    data["n"] = g.n;
    data["p"] = g.p;
    data["n_w"] = g.n_w;
    data["kappa"] = g.kappa;
    data["sigma_beta2"] = g.sigma_beta2;
    data["h2"] = g.target_h2;
    data["effect_dist"] = g.effect_dist == EffectDistribution::gaussian ? "gaussian" : "rademacher";
    data["noise_dist"] = "gaussian";
    data["covariance"] = covariance_json(g.cov, cfg.cov_file, false);
    data["n_test"] = cfg.n_test;
    data["max_elements"] = g.max_elements;
    root["data"] = std::move(data);

    json est;
    json fams = json::array();
    if (cfg.estimator.ridge)
    {
        fams.push_back("ridge");
    }
    if (cfg.estimator.threshold)
    {
        fams.push_back("threshold");
    }
    est["families"] = std::move(fams);
    if (!cfg.estimator.theta_grid.empty())
    {
        est["theta_grid"] = cfg.estimator.theta_grid;
    }
    if (!cfg.estimator.k_grid.empty())
    {
        est["k_grid"] = cfg.estimator.k_grid;
    }
    root["estimator"] = std::move(est);

    const char* modes[] = {"oracle", "expected", "plugin"};
    root["resampler"] = {{"mode", modes[static_cast<int>(cfg.resampler.mode)]},
                         {"noise", cfg.resampler.noise == ResampleNoise::gaussian ? "gaussian" : "rademacher"}};
    json mode_list = json::array();
    if (cfg.modes.pseudo)
    {
        mode_list.push_back("pseudo");
    }
    if (cfg.modes.individual)
    {
        mode_list.push_back("individual");
    }
    if (cfg.modes.theory)
    {
        mode_list.push_back("theory");
    }
    if (cfg.modes.holdout)
    {
        mode_list.push_back("holdout");
    }
    root["modes"] = std::move(mode_list);

    if (cfg.parity)
    {
        root["parity"] = {{"h2", cfg.parity->h2}, {"p", cfg.parity->p}, {"kappa", cfg.parity->kappa}};
    }
    if (cfg.ratio)
    {
        root["ratio"] = {{"n", cfg.ratio->n}, {"theta", cfg.ratio->theta}};
    }
    if (cfg.multi)
    {
        json pops = json::array();
        for (const auto& pop : cfg.multi->populations)
        {
            pops.push_back({{"covariance", covariance_json(pop.cov, pop.cov_file, false)},
                            {"kappa", pop.kappa},
                            {"h2", pop.h2},
                            {"theta", pop.theta}});
        }
        json cross = json::array();
        for (Eigen::Index i = 0; i < cfg.multi->cross.rows(); ++i)
        {
            json row = json::array();
            for (Eigen::Index j = 0; j < cfg.multi->cross.cols(); ++j)
            {
                row.push_back(cfg.multi->cross(i, j));
            }
            cross.push_back(std::move(row));
        }
        root["multi"] = {{"populations", std::move(pops)},
                         {"cross", std::move(cross)},
                         {"weight_step", cfg.multi->weight_step}};
    }
    if (cfg.ensemble)
    {
        root["ensemble"] = {{"weight_step", cfg.ensemble->weight_step}};
    }
    return root.dump(2) + "\n";
}

ExperimentConfig experiment_of(const AppConfig& cfg)
{
    ExperimentConfig exp;
    exp.gen = cfg.data;
    exp.gen.seed = cfg.seed;
    exp.estimator = cfg.estimator;
    exp.resampler = cfg.resampler;
    exp.modes = cfg.modes;
    exp.split_ratio = cfg.split_ratio;
    exp.replicates = cfg.replicates;
    exp.n_test = cfg.n_test;
    exp.seed = cfg.seed;
    return exp;
}

ParityConfig parity_of(const AppConfig& cfg)
{
    ParityConfig out;
    out.base = experiment_of(cfg);
    if (cfg.parity)
    {
        out.h2_values = cfg.parity->h2;
        out.p_values = cfg.parity->p;
        out.kappa_values = cfg.parity->kappa;
    }
    return out;
}

RatioConfig ratio_of(const AppConfig& cfg)
{
    RatioConfig out;
    out.base = experiment_of(cfg);
    out.n_values = cfg.ratio && !cfg.ratio->n.empty() ? cfg.ratio->n : std::vector<Eigen::Index>{cfg.data.n};
    out.thetas = cfg.ratio && !cfg.ratio->theta.empty() ? cfg.ratio->theta : std::vector<double>{1.0};
    return out;
}

MultiExperimentConfig multi_of(const AppConfig& cfg)
{
    require(cfg.multi.has_value(), ErrorKind::config, "configuration has no multi section");
    MultiExperimentConfig out;
    out.data.n = cfg.data.n;
    out.data.p = cfg.data.p;
    out.data.n_w = cfg.data.n_w;
    out.data.seed = cfg.seed;
    out.data.cross = cfg.multi->cross;
    for (const auto& pop : cfg.multi->populations)
    {
        out.data.populations.push_back({pop.cov, pop.kappa, pop.h2});
        out.thetas.push_back(pop.theta);
    }
    out.weight_step = cfg.multi->weight_step;
    out.split_ratio = cfg.split_ratio;
    out.replicates = cfg.replicates;
    out.resampler = cfg.resampler;
    out.seed = cfg.seed;
    return out;
}

EnsembleStudyConfig ensemble_of(const AppConfig& cfg)
{
    EnsembleStudyConfig out;
    out.base = experiment_of(cfg);
    if (cfg.ensemble)
    {
        out.weight_step = cfg.ensemble->weight_step;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Files

void write_summary(const std::filesystem::path& path, const SummaryStats& stats)
{
    require(
        stats.ids.empty() || static_cast<Eigen::Index>(stats.ids.size()) == stats.p(),
        ErrorKind::validation,
        "summary ids do not match p");
    auto out = open_out(path);
    out << "id,s,n\n";
    for (Eigen::Index i = 0; i < stats.p(); ++i)
    {
        const std::string id = stats.ids.empty() ? "v" + std::to_string(i + 1) : stats.ids[static_cast<std::size_t>(i)];
        out << csv_field(id) << ',' << format_decimal(stats.s(i)) << ',' << stats.n << '\n';
    }
    if (stats.y_norm2)
    {
        out << "#y_norm2=" << format_decimal(*stats.y_norm2) << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

SummaryStats read_summary(const std::filesystem::path& path)
{
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t lineno = 0;
    SummaryStats stats;
    std::vector<double> values;
    bool header = false;
    while (std::getline(in, line))
    {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
        {
            continue;
        }
        if (t[0] == '#')
        {
            const std::string key = "#y_norm2=";
            if (t.rfind(key, 0) == 0)
            {
                double v = 0.0;
                if (!parse_double(t.substr(key.size()), v) || !(v > 0.0))
                {
                    malformed(path, lineno, "y_norm2 must be a positive decimal");
                }
                stats.y_norm2 = v;
            }
            continue;
        }
        if (!header)
        {
            if (t != "id,s,n")
            {
                malformed(path, lineno, "expected header \"id,s,n\"");
            }
            header = true;
            continue;
        }
        const auto fields = split_csv_line(t);
        if (fields.size() != 3)
        {
            malformed(path, lineno, "expected 3 fields");
        }
        double s = 0.0;
        long long n = 0;
        if (!parse_double(fields[1], s))
        {
            malformed(path, lineno, "s is not a finite decimal");
        }
        if (!parse_integer(fields[2], n) || n < 1)
        {
            malformed(path, lineno, "n is not a positive integer");
        }
        if (values.empty())
        {
            stats.n = n;
        }
        else if (n != stats.n)
        {
            malformed(path, lineno, "n must be constant across rows");
        }
        stats.ids.push_back(fields[0]);
        values.push_back(s);
    }
    require(header, ErrorKind::io, path.string() + ": missing header");
    require(!values.empty(), ErrorKind::io, path.string() + ": no rows");
    stats.s = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    stats.label = path.stem().string();
    return stats;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, std::optional<Eigen::Index> n_w)
{
    auto out = open_out(path);
    if (n_w)
    {
        out << "#n_w=" << *n_w << '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i)
    {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
        {
            out << (j ? "," : "") << format_decimal(m(i, j));
        }
        out << '\n';
    }
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path, std::optional<Eigen::Index>* n_w)
{
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t lineno = 0;
    std::vector<double> values;
    Eigen::Index cols = -1;
    Eigen::Index rows = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty())
        {
            continue;
        }
        if (t[0] == '#')
        {
            const std::string key = "#n_w=";
            if (t.rfind(key, 0) == 0)
            {
                long long v = 0;
                if (!parse_integer(t.substr(key.size()), v) || v < 1)
                {
                    malformed(path, lineno, "n_w must be a positive integer");
                }
                if (n_w)
                {
                    *n_w = static_cast<Eigen::Index>(v);
                }
            }
            continue;
        }
        const auto fields = split_csv_line(t);
        if (cols < 0)
        {
            cols = static_cast<Eigen::Index>(fields.size());
        }
        else if (static_cast<Eigen::Index>(fields.size()) != cols)
        {
            malformed(path, lineno, "expected " + std::to_string(cols) + " fields");
        }
        for (const auto& f : fields)
        {
            double v = 0.0;
            if (!parse_double(f, v))
            {
                malformed(path, lineno, "\"" + f + "\" is not a finite decimal");
            }
            values.push_back(v);
        }
        ++rows;
    }
    require(rows > 0, ErrorKind::io, path.string() + ": no rows");
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
}

void write_vector(const std::filesystem::path& path, const Eigen::VectorXd& v)
{
    write_matrix(path, v);
}

Eigen::VectorXd read_vector(const std::filesystem::path& path)
{
    const Eigen::MatrixXd m = read_matrix(path);
    require(m.cols() == 1 || m.rows() == 1, ErrorKind::io, path.string() + ": expected a single column");
    return m.cols() == 1 ? Eigen::VectorXd(m.col(0)) : Eigen::VectorXd(m.row(0).transpose());
}

void write_ld(const std::filesystem::path& path, const LDReference& ld)
{
    write_matrix(path, ld.G, ld.n_w);
}

LDReference read_ld(const std::filesystem::path& path)
{
    std::optional<Eigen::Index> n_w;
    LDReference ld;
    ld.G = read_matrix(path, &n_w);
    require(n_w.has_value(), ErrorKind::io, path.string() + ": missing #n_w= line");
    ld.n_w = *n_w;
    try
    {
        validate(ld);
    }
    catch (const Error& e)
    {
        fail(ErrorKind::validation, path.string() + ": " + e.what());
    }
    return ld;
}

CovarianceSpec read_covariance(const std::filesystem::path& path)
{
    const std::string text = read_text(path);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{')
    {
        Reader rd(path.parent_path());
        json node;
        try
        {
            node = json::parse(text);
        }
        catch (const json::parse_error& e)
        {
            fail(ErrorKind::io, path.string() + ": " + e.what());
        }
        Eigen::Index p = 0;
        rd.integer(node, "", "p", p, true);
        json rest = node;
        rest.erase("p");
        CovarianceSpec spec;
        std::string file;
        rd.covariance(rest, "covariance", p, spec, file);
        require(rd.errors.empty(), ErrorKind::config, path.string() + ": " + join_errors(rd.errors));
        if (spec.kind == CovarianceKind::dense)
        {
            spec.p = spec.matrix.rows();
        }
        return spec;
    }
    CovarianceSpec spec;
    spec.kind = CovarianceKind::dense;
    spec.matrix = read_matrix(path);
    spec.p = spec.matrix.rows();
    require(spec.matrix.rows() == spec.matrix.cols(), ErrorKind::validation, path.string() + ": matrix is not square");
    const double asym = (spec.matrix - spec.matrix.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, spec.matrix.cwiseAbs().maxCoeff());
    require(
        asym <= 1e-8 * scale,
        ErrorKind::validation,
        path.string() + ": matrix is not symmetric (max asymmetry " + format_decimal(asym) + ")");
    return spec;
}

std::string covariance_spec_json(const CovarianceSpec& spec)
{
    return covariance_json(spec, {}, true).dump(2) + "\n";
}

std::string results_csv(const std::vector<ResultRow>& rows)
{
    std::string out = std::string(kResultsHeader) + "\n";
    for (const auto& r : rows)
    {
        out += csv_field(r.setting_id) + ',' + csv_field(r.hyperparameter) + ',' + csv_field(r.mode) + ','
               + format_decimal(r.mean) + ',' + format_decimal(r.se) + ',' + std::to_string(r.n_replicates) + ','
               + std::to_string(r.seed) + '\n';
    }
    return out;
}

void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows)
{
    auto out = open_out(path);
    out << results_csv(rows);
    require(static_cast<bool>(out), ErrorKind::io, "write failed: " + path.string());
}

std::vector<ResultRow> read_results(const std::filesystem::path& path)
{
    std::istringstream in(read_text(path));
    std::string line;
    std::size_t lineno = 0;
    std::vector<ResultRow> rows;
    bool header = false;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
        {
            line.pop_back();
        }
        if (line.empty())
        {
            continue;
        }
        if (!header)
        {
            if (line != kResultsHeader)
            {
                malformed(path, lineno, "unexpected results header");
            }
            header = true;
            continue;
        }
        const auto f = split_csv_line(line);
        if (f.size() != 7)
        {
            malformed(path, lineno, "expected 7 fields");
        }
        ResultRow r;
        r.setting_id = f[0];
        r.hyperparameter = f[1];
        r.mode = f[2];
        long long count = 0;
        long long seed = 0;
        const bool mean_ok = parse_double(f[3], r.mean) || trim(f[3]) == "nan";
        const bool se_ok = parse_double(f[4], r.se) || trim(f[4]) == "nan";
        if (!mean_ok || !se_ok || !parse_integer(f[5], count))
        {
            malformed(path, lineno, "malformed numeric field");
        }
        if (trim(f[3]) == "nan")
        {
            r.mean = std::numeric_limits<double>::quiet_NaN();
        }
        if (trim(f[4]) == "nan")
        {
            r.se = std::numeric_limits<double>::quiet_NaN();
        }
        char* end = nullptr;
        const unsigned long long s = std::strtoull(f[6].c_str(), &end, 10);
        if (f[6].empty() || *end != '\0')
        {
            malformed(path, lineno, "malformed seed");
        }
        (void)seed;
        r.n_replicates = static_cast<int>(count);
        r.seed = s;
        rows.push_back(std::move(r));
    }
    require(header, ErrorKind::io, path.string() + ": missing header");
    return rows;
}

}  // namespace sumtrain
