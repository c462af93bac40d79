#include "isac/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "isac/errors.hpp"

namespace isac {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"experiment",
         {"kind", "trials", "seed", "k_values", "tx_powers", "noiseless", "range_model",
          "sigma", "error_radius", "delta0", "workers"}},
        {"scenario", {"region_side", "num_bs", "bs", "targets", "bs_file", "targets_file"}},
        {"ofdm",
         {"n_subcarriers", "subcarrier_spacing", "cp_length", "max_paths", "tx_power",
          "noise_power"}},
        {"gain", {"model", "beta", "fixed_amplitude"}},
        {"support", {"tau_abs", "rho"}},
    };
    return s;
}

std::vector<std::string> schema_errors(const ConfigFile& config) {
    std::vector<std::string> out;
    for (const auto& [section, entries] : config.values) {
        const auto it = schema().find(section);
        if (it == schema().end()) {
            out.push_back("unknown section [" + section + "]");
            continue;
        }
        for (const auto& [key, value] : entries) {
            (void)value;
            if (!it->second.count(key))
                out.push_back("unknown key " + section + "." + key);
        }
    }
    return out;
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(section + "." + key + ": not a number: '" + value + "'");
    return v;
}

long parse_long(const std::string& section, const std::string& key,
                const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw ConfigError(section + "." + key + ": not an integer: '" + value + "'");
    return v;
}

bool parse_bool(const std::string& section, const std::string& key,
                const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(section + "." + key + ": expected true/false, got '" + value + "'");
}

/// "a,b,c" with "a..b" range expansion.
std::vector<int> parse_int_list(const std::string& section, const std::string& key,
                                const std::string& value) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        const std::size_t dots = token.find("..");
        if (dots != std::string::npos) {
            const int lo = static_cast<int>(
                parse_long(section, key, trim(token.substr(0, dots))));
            const int hi = static_cast<int>(
                parse_long(section, key, trim(token.substr(dots + 2))));
            if (hi < lo) throw ConfigError(section + "." + key + ": empty range " + token);
            for (int v = lo; v <= hi; ++v) out.push_back(v);
        } else {
            out.push_back(static_cast<int>(parse_long(section, key, token)));
        }
    }
    if (out.empty()) throw ConfigError(section + "." + key + ": empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& section, const std::string& key,
                                      const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string token;
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (!token.empty()) out.push_back(parse_double(section, key, token));
    }
    if (out.empty()) throw ConfigError(section + "." + key + ": empty list");
    return out;
}

/// "x y; x y; ..." (comma also accepted inside a pair).
std::vector<Point> parse_points(const std::string& section, const std::string& key,
                                const std::string& value) {
    std::vector<Point> out;
    std::stringstream ss(value);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
        std::string cleaned = pair;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::stringstream ps(cleaned);
        double x = 0.0, y = 0.0;
        if (!(ps >> x >> y))
            throw ConfigError(section + "." + key + ": bad coordinate pair '" + trim(pair) + "'");
        std::string rest;
        if (ps >> rest)
            throw ConfigError(section + "." + key + ": trailing data in '" + trim(pair) + "'");
        out.push_back({x, y});
    }
    return out;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::vector<Point> points_from_config(const ConfigFile& config, const std::string& inline_key,
                                      const std::string& file_key) {
    const bool has_inline = config.has("scenario", inline_key);
    const bool has_file = config.has("scenario", file_key);
    if (has_inline && has_file)
        throw ConfigError("scenario." + inline_key + " and scenario." + file_key +
                          " are mutually exclusive");
    if (has_inline)
        return parse_points("scenario", inline_key, config.get("scenario", inline_key, ""));
    if (has_file) {
        std::filesystem::path p(config.get("scenario", file_key, ""));
        if (p.is_relative() && !config.base_dir.empty())
            p = std::filesystem::path(config.base_dir) / p;
        return read_points_csv(p.string());
    }
    return {};
}

} // namespace

ConfigFile ConfigFile::parse_string(const std::string& text) {
    ConfigFile out;
    std::stringstream ss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            out.values[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.values[section][key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    ConfigFile out = parse_string(buf.str());
    out.base_dir = std::filesystem::path(path).parent_path().string();
    return out;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    const auto it = values.find(section);
    return it != values.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    const auto it = values.find(section);
    if (it == values.end()) return fallback;
    const auto kit = it->second.find(key);
    return kit == it->second.end() ? fallback : kit->second;
}

void ConfigFile::apply_override(const std::string& spec) {
    const std::size_t eq = spec.find('=');
    const std::size_t dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw ConfigError("override must be section.key=value, got '" + spec + "'");
    const std::string section = trim(spec.substr(0, dot));
    const std::string key = trim(spec.substr(dot + 1, eq - dot - 1));
    if (section.empty() || key.empty())
        throw ConfigError("override must be section.key=value, got '" + spec + "'");
    values[section][key] = trim(spec.substr(eq + 1));
}

Scenario load_scenario(const ConfigFile& config) {
    Scenario out;
    out.region_side =
        parse_double("scenario", "region_side", config.get("scenario", "region_side", "200"));
    out.bs = points_from_config(config, "bs", "bs_file");
    out.targets = points_from_config(config, "targets", "targets_file");
    if (config.has("scenario", "num_bs")) {
        const int num_bs =
            static_cast<int>(parse_long("scenario", "num_bs", config.get("scenario", "num_bs", "")));
        if (!out.bs.empty() && static_cast<int>(out.bs.size()) != num_bs)
            throw ConfigError("scenario.num_bs disagrees with the bs list");
    }
    return out;
}

OfdmParams load_ofdm_params(const ConfigFile& config) {
    OfdmParams out;
    out.n_subcarriers = static_cast<int>(
        parse_long("ofdm", "n_subcarriers", config.get("ofdm", "n_subcarriers", "3300")));
    out.subcarrier_spacing = parse_double(
        "ofdm", "subcarrier_spacing", config.get("ofdm", "subcarrier_spacing", "30e3"));
    out.cp_length =
        static_cast<int>(parse_long("ofdm", "cp_length", config.get("ofdm", "cp_length", "232")));
    out.max_paths =
        static_cast<int>(parse_long("ofdm", "max_paths", config.get("ofdm", "max_paths", "200")));
    out.tx_power = parse_double("ofdm", "tx_power", config.get("ofdm", "tx_power", "6"));
    const std::string noise = config.get("ofdm", "noise_power", "auto");
    out.noise_power = noise == "auto" ? 0.0 : parse_double("ofdm", "noise_power", noise);
    return out;
}

GainConfig load_gain_config(const ConfigFile& config) {
    GainConfig out;
    const std::string model = config.get("gain", "model", "radar");
    if (model == "radar")
        out.model = GainModel::RadarEquation;
    else if (model == "fixed")
        out.model = GainModel::FixedAmplitude;
    else
        throw ConfigError("gain.model must be radar or fixed, got '" + model + "'");
    out.beta = parse_double("gain", "beta", config.get("gain", "beta", "0.02"));
    out.fixed_amplitude = parse_double("gain", "fixed_amplitude",
                                       config.get("gain", "fixed_amplitude", "1"));
    return out;
}

SupportRule load_support_rule(const ConfigFile& config) {
    SupportRule out;
    out.tau_abs = parse_double("support", "tau_abs", config.get("support", "tau_abs", "0"));
    out.rho = parse_double("support", "rho", config.get("support", "rho", "0"));
    return out;
}

ExperimentConfig load_experiment_config(const ConfigFile& config) {
    const std::vector<std::string> errors = schema_errors(config);
    if (!errors.empty()) throw ConfigError(errors.front());

    ExperimentConfig out;
    out.kind = experiment_kind_from_string(
        config.get("experiment", "kind", "localization-error"));
    out.trials = static_cast<int>(
        parse_long("experiment", "trials", config.get("experiment", "trials", "1000")));
    out.seed = static_cast<std::uint64_t>(
        parse_long("experiment", "seed", config.get("experiment", "seed", "1")));
    out.k_values =
        parse_int_list("experiment", "k_values", config.get("experiment", "k_values", "2"));
    out.tx_powers = parse_double_list("experiment", "tx_powers",
                                      config.get("experiment", "tx_powers", "6,8"));
    out.noiseless =
        parse_bool("experiment", "noiseless", config.get("experiment", "noiseless", "false"));
    const std::string model = config.get("experiment", "range_model", "midpoint");
    if (model == "midpoint")
        out.range_model = RangeModel::Midpoint;
    else if (model == "gaussian")
        out.range_model = RangeModel::Gaussian;
    else
        throw ConfigError("experiment.range_model must be midpoint or gaussian");
    const std::string sigma = config.get("experiment", "sigma", "auto");
    out.sigma = sigma == "auto" ? -1.0 : parse_double("experiment", "sigma", sigma);
    out.error_radius = parse_double("experiment", "error_radius",
                                    config.get("experiment", "error_radius", "2.5"));
    const std::string delta0 = config.get("experiment", "delta0", "auto");
    out.delta0 = delta0 == "auto" ? -1.0 : parse_double("experiment", "delta0", delta0);
    out.workers = static_cast<int>(
        parse_long("experiment", "workers", config.get("experiment", "workers", "0")));

    const Scenario scn = load_scenario(config);
    out.region_side = scn.region_side;
    out.bs_coords = scn.bs;
    if (config.has("scenario", "num_bs"))
        out.num_bs = static_cast<int>(
            parse_long("scenario", "num_bs", config.get("scenario", "num_bs", "")));
    else if (!scn.bs.empty())
        out.num_bs = static_cast<int>(scn.bs.size());

    out.ofdm = load_ofdm_params(config);
    out.gain = load_gain_config(config);
    out.support = load_support_rule(config);
    out.validate();
    return out;
}

std::string serialize_experiment_config(const ExperimentConfig& config) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "kind = " << to_string(config.kind) << "\n";
    out << "trials = " << config.trials << "\n";
    out << "seed = " << config.seed << "\n";
    out << "k_values = ";
    for (std::size_t i = 0; i < config.k_values.size(); ++i)
        out << (i ? "," : "") << config.k_values[i];
    out << "\n";
    out << "tx_powers = ";
    for (std::size_t i = 0; i < config.tx_powers.size(); ++i)
        out << (i ? "," : "") << format_double(config.tx_powers[i]);
    out << "\n";
    out << "noiseless = " << (config.noiseless ? "true" : "false") << "\n";
    out << "range_model = "
        << (config.range_model == RangeModel::Midpoint ? "midpoint" : "gaussian") << "\n";
    out << "sigma = " << (config.sigma < 0.0 ? "auto" : format_double(config.sigma)) << "\n";
    out << "error_radius = " << format_double(config.error_radius) << "\n";
    out << "delta0 = " << (config.delta0 < 0.0 ? "auto" : format_double(config.delta0)) << "\n";
    out << "workers = " << config.workers << "\n";

    out << "\n[scenario]\n";
    out << "region_side = " << format_double(config.region_side) << "\n";
    out << "num_bs = " << config.num_bs << "\n";
    if (!config.bs_coords.empty()) {
        out << "bs = ";
        for (std::size_t m = 0; m < config.bs_coords.size(); ++m) {
            if (m) out << "; ";
            out << format_double(config.bs_coords[m].x) << " "
                << format_double(config.bs_coords[m].y);
        }
        out << "\n";
    }

    out << "\n[ofdm]\n";
    out << "n_subcarriers = " << config.ofdm.n_subcarriers << "\n";
    out << "subcarrier_spacing = " << format_double(config.ofdm.subcarrier_spacing) << "\n";
    out << "cp_length = " << config.ofdm.cp_length << "\n";
    out << "max_paths = " << config.ofdm.max_paths << "\n";
    out << "tx_power = " << format_double(config.ofdm.tx_power) << "\n";
    out << "noise_power = "
        << (config.ofdm.noise_power == 0.0 ? "auto" : format_double(config.ofdm.noise_power))
        << "\n";

    out << "\n[gain]\n";
    out << "model = "
        << (config.gain.model == GainModel::RadarEquation ? "radar" : "fixed") << "\n";
    out << "beta = " << format_double(config.gain.beta) << "\n";
    out << "fixed_amplitude = " << format_double(config.gain.fixed_amplitude) << "\n";

    out << "\n[support]\n";
    out << "tau_abs = " << format_double(config.support.tau_abs) << "\n";
    out << "rho = " << format_double(config.support.rho) << "\n";
    return out.str();
}

std::vector<std::string> validate_config(const ConfigFile& config) {
    std::vector<std::string> out = schema_errors(config);

    try {
        const OfdmParams ofdm = load_ofdm_params(config);
        ofdm.validate();
    } catch (const Error& e) {
        out.push_back(std::string("ofdm: ") + e.what());
    }

    Scenario scn;
    bool have_scenario = false;
    try {
        scn = load_scenario(config);
        have_scenario = true;
    } catch (const Error& e) {
        out.push_back(std::string("scenario: ") + e.what());
    }
    if (have_scenario && !scn.bs.empty()) {
        if (scn.bs.size() < 3) {
            out.push_back("scenario: M >= 3 BSs required");
        } else {
            for (std::size_t i = 0; i < scn.bs.size(); ++i)
                for (std::size_t j = i + 1; j < scn.bs.size(); ++j)
                    for (std::size_t l = j + 1; l < scn.bs.size(); ++l)
                        if (collinear(scn.bs[i], scn.bs[j], scn.bs[l]))
                            out.push_back("scenario: BSs " + std::to_string(i + 1) + "," +
                                          std::to_string(j + 1) + "," + std::to_string(l + 1) +
                                          " are collinear");
        }
    }

    try {
        load_experiment_config(config);
    } catch (const Error& e) {
        const std::string msg = std::string("experiment: ") + e.what();
        if (std::find(out.begin(), out.end(), msg) == out.end() &&
            std::none_of(out.begin(), out.end(), [&](const std::string& s) {
                return s.find(e.what()) != std::string::npos;
            }))
            out.push_back(msg);
    }
    return out;
}

std::vector<std::string> validate_config_path(const std::string& path) {
    try {
        return validate_config(ConfigFile::parse_file(path));
    } catch (const Error& e) {
        return {e.what()};
    }
}

std::vector<Point> read_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open points file: " + path);
    std::vector<Point> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (lineno == 1 && t.find_first_not_of("xy, \t") == std::string::npos) continue;
        std::string cleaned = t;
        std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
        std::stringstream ss(cleaned);
        double x = 0.0, y = 0.0;
        if (!(ss >> x >> y))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": bad coordinate row");
        out.push_back({x, y});
    }
    return out;
}

void write_points_csv(const std::vector<Point>& points, const std::string& path) {
    std::ostringstream out;
    out.precision(17);
    out << "x,y\n";
    for (const Point& p : points) out << p.x << "," << p.y << "\n";
    write_text_atomic(path, out.str());
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

} // namespace isac
