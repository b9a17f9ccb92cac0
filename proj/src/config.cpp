#include "qmnum/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace qmnum::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

nlohmann::json parse_scalar(const std::string& tok) {
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
            if (tok[i] == '\\' && i + 2 < tok.size()) {
                ++i;
                switch (tok[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: throw invalid_input("toml: unsupported escape");
                }
            } else {
                out += tok[i];
            }
        }
        return out;
    }
    if (tok == "true") return true;
    if (tok == "false") return false;
    // integer or float
    bool is_float = tok.find_first_of(".eE") != std::string::npos;
    try {
        std::size_t used = 0;
        if (is_float) {
            double v = std::stod(tok, &used);
            if (used == tok.size()) return v;
        } else {
            long long v = std::stoll(tok, &used);
            if (used == tok.size()) return v;
        }
    } catch (...) {
    }
    throw invalid_input("toml: cannot parse value '" + tok + "'");
}

nlohmann::json parse_value(const std::string& raw) {
    std::string tok = trim(raw);
    require(!tok.empty(), "toml: empty value");
    if (tok.front() == '[') {
        require(tok.back() == ']', "toml: unterminated array");
        nlohmann::json arr = nlohmann::json::array();
        std::string body = tok.substr(1, tok.size() - 2);
        std::string cur;
        bool in_string = false;
        for (char ch : body) {
            if (ch == '"') in_string = !in_string;
            if (ch == ',' && !in_string) {
                if (!trim(cur).empty()) arr.push_back(parse_scalar(trim(cur)));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!trim(cur).empty()) arr.push_back(parse_scalar(trim(cur)));
        return arr;
    }
    return parse_scalar(tok);
}

}  // namespace

nlohmann::json parse_toml(const std::string& text) {
    nlohmann::json flat = nlohmann::json::object();
    std::istringstream in(text);
    std::string line, prefix;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            require(line.back() == ']', "toml line " + std::to_string(lineno) + ": bad table");
            prefix = trim(line.substr(1, line.size() - 2));
            require(!prefix.empty(), "toml: empty table name");
            prefix += '.';
            continue;
        }
        std::size_t eq = line.find('=');
        require(eq != std::string::npos, "toml line " + std::to_string(lineno) + ": missing '='");
        std::string key = trim(line.substr(0, eq));
        require(!key.empty(), "toml: empty key");
        std::string full = prefix + key;
        require(!flat.contains(full), "toml: duplicate key " + full);
        flat[full] = parse_value(line.substr(eq + 1));
    }
    return flat;
}

nlohmann::json parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw invalid_input("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_toml(ss.str());
}

void apply_override(nlohmann::json& flat, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    require(eq != std::string::npos, "override must look like key=value");
    std::string key = trim(assignment.substr(0, eq));
    require(!key.empty(), "override: empty key");
    flat[key] = parse_value(assignment.substr(eq + 1));
}

ExperimentConfig make_config(const nlohmann::json& flat) {
    ExperimentConfig cfg;
    cfg.params = nlohmann::json::object();
    const char* env_out = std::getenv("QMNUM_OUT");
    cfg.out_dir = env_out ? env_out : "qmnum-out";
    for (const auto& [key, value] : flat.items()) {
        if (key == "experiment") {
            cfg.name = value.get<std::string>();
        } else if (key == "seed") {
            cfg.seed = value.get<std::uint64_t>();
        } else if (key == "out") {
            cfg.out_dir = value.get<std::string>();
        } else if (key == "workers") {
            cfg.workers = value.get<int>();
        } else if (key.rfind("params.", 0) == 0) {
            cfg.params[key.substr(7)] = value;
        } else {
            throw invalid_input("unknown config key: " + key);
        }
    }
    return cfg;
}

}  // namespace qmnum::config
