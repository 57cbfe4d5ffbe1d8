#include "gradgeom/config.hpp"

#include <fstream>
#include <map>
#include <set>

namespace gradgeom {

namespace {

const std::map<std::string, std::set<std::string>>& section_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"network", {"arch", "depth", "widths", "input_dim", "sigma1", "activation"}},
        {"ball", {"rho", "rho1"}},
        {"data", {"model", "n", "d", "teacher_seed", "noise_std"}},
        {"width", {"outer", "restarts", "steps", "step_size"}},
        {"reuse", {"eta", "T", "n_grid", "trials", "oracle_factor"}},
        {"lemmas", {"trials", "sic_n", "sweep_points"}},
        {"canonical", {"samples", "sets"}},
        {"output", {"path", "format"}},
    };
    return keys;
}

// Sections every subcommand needs, beyond "seed" and "output".
const std::map<std::string, std::vector<std::string>>& subcommand_sections() {
    static const std::map<std::string, std::vector<std::string>> req = {
        {"width", {"network", "ball", "data", "width"}},
        {"nerc", {"network", "ball", "data", "width"}},
        {"canonical", {"canonical"}},
        {"verify-lemmas", {"network", "ball", "data", "lemmas"}},
        {"gd-ratio", {"data", "reuse"}},
        {"profile", {"network", "ball", "data"}},
        {"reuse", {"data", "reuse"}},
        {"converge", {"data", "reuse"}},
    };
    return req;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

double num(const Json& j, const std::string& path) {
    require(j.is_number(), "config: " + path + " must be a number");
    return j.get<double>();
}

long integer(const Json& j, const std::string& path) {
    require(j.is_number_integer(), "config: " + path + " must be an integer");
    return j.get<long>();
}

void validate_network(const Json& s) {
    require(s.contains("arch"), "config: network.arch is required");
    const std::string arch = s.at("arch").get<std::string>();
    require(arch == "ffn" || arch == "resnet", "config: network.arch must be 'ffn' or 'resnet'");
    require(s.contains("depth") && integer(s.at("depth"), "network.depth") >= 1,
            "config: network.depth must be an integer >= 1");
    require(s.contains("widths") && s.at("widths").is_array() && !s.at("widths").empty(),
            "config: network.widths must be a non-empty array");
    for (const auto& w : s.at("widths"))
        require(w.is_number_integer() && w.get<long>() >= 1, "config: network.widths entries must be integers >= 1");
    require(s.contains("input_dim") && integer(s.at("input_dim"), "network.input_dim") >= 1,
            "config: network.input_dim must be an integer >= 1");
    require(s.contains("sigma1") && num(s.at("sigma1"), "network.sigma1") > 0.0,
            "config: network.sigma1 must be positive");
    if (s.contains("activation")) {
        const std::string act = s.at("activation").get<std::string>();
        require(act == "relu" || act == "tanh", "config: network.activation must be 'relu' or 'tanh'");
    }
}

void validate_section(const std::string& name, const Json& s) {
    require(s.is_object(), "config: section '" + name + "' must be an object");
    const auto& allowed = section_keys().at(name);
    for (const auto& [key, value] : s.items())
        require(allowed.count(key) > 0, "config: unknown key '" + name + "." + key + "'");

    if (name == "network") validate_network(s);
    if (name == "ball") {
        require(s.contains("rho") && num(s.at("rho"), "ball.rho") >= 0.0, "config: ball.rho must be a number >= 0");
        require(s.contains("rho1") && num(s.at("rho1"), "ball.rho1") >= 0.0, "config: ball.rho1 must be a number >= 0");
    }
    if (name == "data") {
        if (s.contains("model")) {
            const std::string m = s.at("model").get<std::string>();
            require(m == "quadratic1d" || m == "linear" || m == "network",
                    "config: data.model must be 'quadratic1d', 'linear' or 'network'");
        }
        require(s.contains("n") && integer(s.at("n"), "data.n") >= 1, "config: data.n must be an integer >= 1");
        if (s.contains("d")) require(integer(s.at("d"), "data.d") >= 1, "config: data.d must be an integer >= 1");
        if (s.contains("noise_std"))
            require(num(s.at("noise_std"), "data.noise_std") >= 0.0, "config: data.noise_std must be >= 0");
        if (s.contains("teacher_seed")) integer(s.at("teacher_seed"), "data.teacher_seed");
    }
    if (name == "width") {
        require(s.contains("outer") && integer(s.at("outer"), "width.outer") >= 2,
                "config: width.outer must be an integer >= 2");
        if (s.contains("restarts"))
            require(integer(s.at("restarts"), "width.restarts") >= 1, "config: width.restarts must be >= 1");
        if (s.contains("steps")) require(integer(s.at("steps"), "width.steps") >= 0, "config: width.steps must be >= 0");
        if (s.contains("step_size"))
            require(num(s.at("step_size"), "width.step_size") > 0.0, "config: width.step_size must be positive");
    }
    if (name == "reuse") {
        require(s.contains("eta") && num(s.at("eta"), "reuse.eta") >= 0.0, "config: reuse.eta must be >= 0");
        require(s.contains("T") && integer(s.at("T"), "reuse.T") >= 1, "config: reuse.T must be an integer >= 1");
        if (s.contains("n_grid")) {
            require(s.at("n_grid").is_array(), "config: reuse.n_grid must be an array");
            for (const auto& v : s.at("n_grid"))
                require(v.is_number_integer() && v.get<long>() >= 1, "config: reuse.n_grid entries must be >= 1");
        }
        if (s.contains("trials"))
            require(integer(s.at("trials"), "reuse.trials") >= 1, "config: reuse.trials must be >= 1");
        if (s.contains("oracle_factor"))
            require(integer(s.at("oracle_factor"), "reuse.oracle_factor") >= 1,
                    "config: reuse.oracle_factor must be >= 1");
    }
    if (name == "lemmas") {
        require(s.contains("trials") && integer(s.at("trials"), "lemmas.trials") >= 100,
                "config: lemmas.trials must be an integer >= 100");
        if (s.contains("sic_n"))
            require(integer(s.at("sic_n"), "lemmas.sic_n") >= 1 && integer(s.at("sic_n"), "lemmas.sic_n") <= 16,
                    "config: lemmas.sic_n must be in [1, 16]");
        if (s.contains("sweep_points"))
            require(integer(s.at("sweep_points"), "lemmas.sweep_points") >= 1,
                    "config: lemmas.sweep_points must be >= 1");
    }
    if (name == "canonical") {
        require(s.contains("samples") && integer(s.at("samples"), "canonical.samples") >= 2,
                "config: canonical.samples must be an integer >= 2");
        if (s.contains("sets")) require(s.at("sets").is_array(), "config: canonical.sets must be an array");
    }
    if (name == "output") {
        if (s.contains("format")) {
            const std::string f = s.at("format").get<std::string>();
            require(f == "csv" || f == "json", "config: output.format must be 'csv' or 'json'");
        }
    }
}

}  // namespace

Json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    return j;
}

void apply_override(Json& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("config: override must look like key.path=value");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    Json value;
    try {
        value = Json::parse(raw);
    } catch (...) {
        value = raw;  // unquoted strings pass through verbatim
    }

    Json* node = &config;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("config: override path has an empty segment: '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = Json::object();
        node = &(*node)[key];
        start = dot + 1;
    }
}

const std::vector<std::string>& known_subcommands() {
    static const std::vector<std::string> names = {"width",    "nerc",    "canonical", "verify-lemmas",
                                                   "gd-ratio", "profile", "reuse",     "converge"};
    return names;
}

void validate_config(const Json& config, const std::string& subcommand) {
    const auto& req = subcommand_sections();
    const auto it = req.find(subcommand);
    if (it == req.end()) throw ConfigError("config: unknown subcommand '" + subcommand + "'");

    for (const auto& [key, value] : config.items()) {
        if (key == "seed") {
            require(value.is_number_integer(), "config: seed must be an integer");
            continue;
        }
        require(section_keys().count(key) > 0, "config: unknown key '" + key + "'");
    }
    require(config.contains("seed"), "config: seed is required");

    std::vector<std::string> needed = it->second;
    needed.push_back("output");
    const std::string model =
        config.contains("data") && config.at("data").contains("model") ? config.at("data").at("model").get<std::string>() : "";
    const bool gd_like = subcommand == "gd-ratio" || subcommand == "reuse" || subcommand == "converge";
    if (gd_like && model == "network") needed.push_back("network");

    for (const std::string& name : needed)
        require(config.contains(name), "config: section '" + name + "' is required for subcommand '" + subcommand + "'");

    for (const auto& [key, value] : config.items()) {
        if (key == "seed") continue;
        validate_section(key, value);
    }

    if (gd_like) {
        require(config.at("data").contains("model"),
                "config: data.model is required for subcommand '" + subcommand + "'");
        if (model == "linear")
            require(config.at("data").contains("d"), "config: data.d is required for the linear model");
    }
    if (subcommand == "reuse")
        require(config.at("reuse").contains("n_grid") && config.at("reuse").contains("trials"),
                "config: reuse.n_grid and reuse.trials are required for subcommand 'reuse'");
}

}  // namespace gradgeom
