#include "diffnet/config.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "diffnet/errors.hpp"

namespace diffnet {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& v, int line, const std::string& key) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        fail(line, key + ": not a number: '" + v + "'");
    }
    if (pos != v.size()) fail(line, key + ": trailing characters in '" + v + "'");
    return out;
}

long parse_long(const std::string& v, int line, const std::string& key) {
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        fail(line, key + ": not an integer: '" + v + "'");
    }
    if (pos != v.size()) fail(line, key + ": trailing characters in '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& v, int line, const std::string& key) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        fail(line, key + ": not an unsigned integer: '" + v + "'");
    }
    if (pos != v.size()) fail(line, key + ": trailing characters in '" + v + "'");
    return static_cast<std::uint64_t>(out);
}

bool parse_bool(const std::string& v, int line, const std::string& key) {
    if (v == "true") return true;
    if (v == "false") return false;
    fail(line, key + ": expected true or false, got '" + v + "'");
}

GraphModel parse_graph_model(const std::string& v, int line) {
    if (v == "ring") return GraphModel::Ring;
    if (v == "complete") return GraphModel::Complete;
    if (v == "random") return GraphModel::Random;
    fail(line, "topology.type: unknown model '" + v + "' (ring, complete, random)");
}

PolicyConfig parse_policy_line(const std::string& text, int line) {
    std::istringstream is(text);
    PolicyConfig pc;
    is >> pc.name;
    std::string attr;
    while (is >> attr) {
        const std::size_t eq = attr.find('=');
        if (eq == std::string::npos) {
            fail(line, "policy attribute '" + attr + "' is not key=value");
        }
        const std::string key = attr.substr(0, eq);
        const std::string val = attr.substr(eq + 1);
        if (key == "alpha1") {
            pc.alpha1 = parse_double(val, line, "alpha1");
        } else if (key == "alpha2") {
            pc.alpha2 = parse_double(val, line, "alpha2");
        } else {
            fail(line, "unknown policy attribute '" + key + "'");
        }
    }
    return pc;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;
    std::set<std::string> seen_sections;
    std::set<std::string> seen_keys;

    while (std::getline(in, raw)) {
        ++line;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        const std::string s = trim(raw);
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']') fail(line, "unterminated section header");
            section = s.substr(1, s.size() - 2);
            if (section != "experiment" && section != "topology" && section != "adjacency" &&
                section != "model" && section != "policies" && section != "output") {
                fail(line, "unknown section [" + section + "]");
            }
            if (!seen_sections.insert(section).second) {
                fail(line, "section [" + section + "] appears twice");
            }
            continue;
        }
        if (section.empty()) fail(line, "content before any section header");

        if (section == "policies") {
            cfg.policies.push_back(parse_policy_line(s, line));
            continue;
        }
        if (section == "adjacency") {
            if (s.find(':') == std::string::npos) {
                fail(line, "adjacency line must look like 'k: l1 l2 ...'");
            }
            cfg.topology.adjacency_lines.push_back(s);
            continue;
        }

        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) fail(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty()) fail(line, "empty key");
        if (val.empty()) fail(line, "empty value for '" + key + "'");
        if (!seen_keys.insert(section + "." + key).second) {
            fail(line, "duplicate key '" + key + "' in [" + section + "]");
        }

        if (section == "experiment") {
            if (key == "iterations") cfg.n_iters = parse_long(val, line, key);
            else if (key == "runs") cfg.n_runs = parse_long(val, line, key);
            else if (key == "seed") cfg.master_seed = parse_u64(val, line, key);
            else if (key == "tail_window") cfg.tail_window = parse_double(val, line, key);
            else if (key == "log_weights") cfg.log_weights = parse_bool(val, line, key);
            else if (key == "probe_stationarity") cfg.probe_stationarity = parse_bool(val, line, key);
            else if (key == "threads") cfg.n_threads = static_cast<int>(parse_long(val, line, key));
            else fail(line, "unknown key '" + key + "' in [experiment]");
        } else if (section == "topology") {
            if (key == "type") cfg.topology.model = parse_graph_model(val, line);
            else if (key == "nodes") cfg.topology.n_nodes = static_cast<int>(parse_long(val, line, key));
            else if (key == "edge_prob") cfg.topology.edge_prob = parse_double(val, line, key);
            else fail(line, "unknown key '" + key + "' in [topology]");
        } else if (section == "model") {
            if (key == "dim") cfg.model.dim = static_cast<int>(parse_long(val, line, key));
            else if (key == "step") cfg.model.step = parse_double(val, line, key);
            else if (key == "target_reg") cfg.model.target_reg = parse_double(val, line, key);
            else if (key == "mean_scale_min") cfg.model.mean_scale_min = parse_double(val, line, key);
            else if (key == "mean_scale_max") cfg.model.mean_scale_max = parse_double(val, line, key);
            else if (key == "var_min") cfg.model.var_min = parse_double(val, line, key);
            else if (key == "var_max") cfg.model.var_max = parse_double(val, line, key);
            else if (key == "calibration_tol") cfg.model.calibration_tol = parse_double(val, line, key);
            else if (key == "statistics_samples") cfg.model.statistics_samples = parse_long(val, line, key);
            else fail(line, "unknown key '" + key + "' in [model]");
        } else {  // output
            if (key == "directory") cfg.out_dir = val;
            else fail(line, "unknown key '" + key + "' in [output]");
        }
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace diffnet
