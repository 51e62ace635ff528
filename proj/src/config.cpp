#include "cppo/config.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace cppo {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& token, const std::string& key) {
    char* end = nullptr;
    double x = std::strtod(token.c_str(), &end);
    if (end == token.c_str() || *end != '\0')
        throw std::invalid_argument("config: invalid number for key '" + key + "': " + token);
    return x;
}

TomlValue parse_value(const std::string& raw, const std::string& key) {
    std::string v = trim(raw);
    if (v.empty()) throw std::invalid_argument("config: empty value for key '" + key + "'");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"')
            throw std::invalid_argument("config: unterminated string for key '" + key + "'");
        return v.substr(1, v.size() - 2);
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']')
            throw std::invalid_argument("config: unterminated array for key '" + key + "'");
        std::vector<double> items;
        std::string body = v.substr(1, v.size() - 2);
        size_t pos = 0;
        while (pos < body.size()) {
            size_t comma = body.find(',', pos);
            std::string tok = trim(body.substr(pos, comma == std::string::npos ? std::string::npos
                                                                               : comma - pos));
            if (!tok.empty()) items.push_back(parse_number(tok, key));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return items;
    }
    return parse_number(v, key);
}

}  // namespace

std::map<std::string, TomlValue> parse_toml(const std::string& text) {
    std::map<std::string, TomlValue> out;
    size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        // Cut at the first '#' that is not inside a quoted string.
        bool in_string = false;
        for (size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_string = !in_string;
            else if (line[i] == '#' && !in_string) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[')
            throw std::invalid_argument("config: sections are not supported (line " +
                                        std::to_string(line_no) + ")");
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(line_no));
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config: empty key at line " + std::to_string(line_no));
        out[key] = parse_value(line.substr(eq + 1), key);
    }
    return out;
}

namespace {

double as_number(const TomlValue& v, const std::string& key) {
    if (const double* x = std::get_if<double>(&v)) return *x;
    throw std::invalid_argument("config: key '" + key + "' must be a number");
}

std::string as_string(const TomlValue& v, const std::string& key) {
    if (const std::string* s = std::get_if<std::string>(&v)) return *s;
    throw std::invalid_argument("config: key '" + key + "' must be a string");
}

bool as_bool(const TomlValue& v, const std::string& key) {
    if (const bool* b = std::get_if<bool>(&v)) return *b;
    throw std::invalid_argument("config: key '" + key + "' must be a boolean");
}

}  // namespace

void apply_config_file(TrainConfig& cfg, const std::string& toml_text) {
    for (const auto& [key, value] : parse_toml(toml_text)) {
        if (key == "env") {
            std::string e = as_string(value, key);
            if (e == "bridge") cfg.env = EnvKind::Bridge;
            else if (e == "chain") cfg.env = EnvKind::Chain;
            else if (e == "point-circle") cfg.env = EnvKind::PointCircle;
            else throw std::invalid_argument("config: unknown env '" + e + "'");
        } else if (key == "algo") {
            std::string a = as_string(value, key);
            if (a == "cppo") cfg.algo = Algo::Cppo;
            else if (a == "ppo") cfg.algo = Algo::Ppo;
            else if (a == "ppo-lag") cfg.algo = Algo::PpoLag;
            else throw std::invalid_argument("config: unknown algo '" + a + "'");
        } else if (key == "seed") cfg.seed = static_cast<uint64_t>(as_number(value, key));
        else if (key == "total_steps") cfg.total_steps = static_cast<int>(as_number(value, key));
        else if (key == "batch_size") cfg.batch_size = static_cast<int>(as_number(value, key));
        else if (key == "rollout_length") cfg.rollout_length = static_cast<int>(as_number(value, key));
        else if (key == "cost_limit") cfg.cost_limit = as_number(value, key);
        else if (key == "switch_low_fraction") cfg.switch_low_fraction = as_number(value, key);
        else if (key == "gamma") cfg.gae.gamma = as_number(value, key);
        else if (key == "lambda_reward") cfg.gae.lambda_reward = as_number(value, key);
        else if (key == "lambda_cost") cfg.gae.lambda_cost = as_number(value, key);
        else if (key == "kl_target") cfg.kl_target = as_number(value, key);
        else if (key == "paper_radius_scaling") cfg.paper_radius_scaling = as_bool(value, key);
        else if (key == "bound_margin") cfg.bound_margin = as_number(value, key);
        else if (key == "recovery_enabled") cfg.recovery_enabled = as_bool(value, key);
        else if (key == "clip_floor") cfg.mstep.clip_floor = as_number(value, key);
        else if (key == "forward_kl_cap") cfg.mstep.forward_kl_cap = as_number(value, key);
        else if (key == "epochs") cfg.mstep.epochs = static_cast<int>(as_number(value, key));
        else if (key == "minibatch") cfg.mstep.minibatch = static_cast<int>(as_number(value, key));
        else if (key == "learning_rate") cfg.mstep.learning_rate = as_number(value, key);
        else if (key == "recovery_beta") cfg.mstep.recovery_beta = as_number(value, key);
        else if (key == "ladder_fractions") {
            if (const auto* list = std::get_if<std::vector<double>>(&value))
                cfg.mstep.ladder_fractions = *list;
            else
                throw std::invalid_argument("config: key 'ladder_fractions' must be an array");
        } else if (key == "ppo_clip") cfg.ppo_clip = as_number(value, key);
        else if (key == "ppo_lr") cfg.ppo_lr = as_number(value, key);
        else if (key == "lagrangian_lr") cfg.lagrangian_lr = as_number(value, key);
        else if (key == "value_lr") cfg.value_lr = as_number(value, key);
        else if (key == "value_epochs") cfg.value_epochs = static_cast<int>(as_number(value, key));
        else if (key == "bridge_spec") cfg.bridge_spec = as_string(value, key);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
}

}  // namespace cppo
