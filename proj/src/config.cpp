#include "slowfast/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slowfast/csv.hpp"
#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

struct RawValue {
    std::string text;
    int line = 0;
};

using Section = std::map<std::string, RawValue>;

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    std::size_t b = s.find_last_not_of(" \t");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

/// Strips a trailing comment, honouring double quotes.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

double parse_number(const RawValue& raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw.text, &used);
        if (used != raw.text.size()) fail(raw.line, "malformed number '" + raw.text + "'");
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        fail(raw.line, "expected a number, got '" + raw.text + "'");
    }
}

std::int64_t parse_integer(const RawValue& raw) {
    const double v = parse_number(raw);
    if (std::abs(v - std::round(v)) > 1e-9)
        fail(raw.line, "expected an integer, got '" + raw.text + "'");
    return static_cast<std::int64_t>(std::llround(v));
}

std::string parse_string(const RawValue& raw) {
    std::string t = raw.text;
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"')
        return t.substr(1, t.size() - 2);
    return t;
}

std::vector<double> parse_array(const RawValue& raw) {
    std::string t = raw.text;
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        fail(raw.line, "expected an array [..], got '" + t + "'");
    t = t.substr(1, t.size() - 2);
    std::vector<double> out;
    std::stringstream ss(t);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const std::string v = trim(cell);
        if (v.empty()) fail(raw.line, "empty array element");
        out.push_back(parse_number({v, raw.line}));
    }
    if (out.empty()) fail(raw.line, "empty array");
    return out;
}

/// Pops a key from the section, nullopt when absent.
std::optional<RawValue> take(Section& section, const std::string& key) {
    const auto it = section.find(key);
    if (it == section.end()) return std::nullopt;
    RawValue v = it->second;
    section.erase(it);
    return v;
}

void reject_leftovers(const Section& section, const std::string& where) {
    if (section.empty()) return;
    const auto& [key, raw] = *section.begin();
    fail(raw.line, "unknown key '" + key + "' in " + where);
}

void fnv1a(std::uint64_t& h, const std::string& s) {
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    std::map<std::string, Section> sections;
    Section top;

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    Section* current = &top;
    std::string current_name = "top level";
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') fail(lineno, "malformed section header");
            const std::string name = trim(body.substr(1, body.size() - 2));
            static const std::vector<std::string> known = {
                "model", "analyze", "simulate", "rate", "mc", "validate"};
            if (std::find(known.begin(), known.end(), name) == known.end())
                fail(lineno, "unknown section [" + name + "]");
            if (sections.count(name)) fail(lineno, "duplicate section [" + name + "]");
            current = &sections[name];
            current_name = "[" + name + "]";
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty()) fail(lineno, "expected key = value");
        if (current->count(key))
            fail(lineno, "duplicate key '" + key + "' in " + current_name);
        (*current)[key] = {value, lineno};
    }

    ExperimentConfig cfg;

    // [model] is mandatory.
    if (!sections.count("model"))
        throw ConfigError("config: missing required [model] section");
    Section model = sections["model"];
    sections.erase("model");
    if (auto name = take(model, "name"))
        cfg.model_name = parse_string(*name);
    else
        throw ConfigError("config: [model] requires a 'name' key");
    for (const auto& [key, raw] : model) cfg.model_params[key] = parse_number(raw);

    if (auto v = take(top, "x0")) {
        const auto arr = parse_array(*v);
        cfg.x0 = Eigen::Map<const Eigen::VectorXd>(
            arr.data(), static_cast<Eigen::Index>(arr.size()));
    }
    if (auto v = take(top, "y0")) {
        const auto y = parse_integer(*v);
        if (y < 1) fail(v->line, "y0 is a 1-based regime label, must be >= 1");
        cfg.y0 = static_cast<int>(y) - 1;
    }
    if (auto v = take(top, "T")) {
        cfg.T = parse_number(*v);
        if (!(cfg.T > 0.0)) fail(v->line, "T must be positive");
    }
    if (auto v = take(top, "dt")) {
        cfg.dt = parse_number(*v);
        if (!(cfg.dt > 0.0)) fail(v->line, "dt must be positive");
    }
    if (auto v = take(top, "output_dir")) cfg.output_dir = parse_string(*v);
    reject_leftovers(top, "top level");

    if (sections.count("analyze")) {
        Section s = sections["analyze"];
        sections.erase("analyze");
        ExperimentConfig::Analyze block;
        if (auto v = take(s, "knots")) {
            block.knots = static_cast<int>(parse_integer(*v));
            if (block.knots < 2) fail(v->line, "knots must be >= 2");
        }
        reject_leftovers(s, "[analyze]");
        cfg.analyze = block;
    }
    if (sections.count("simulate")) {
        Section s = sections["simulate"];
        sections.erase("simulate");
        ExperimentConfig::Simulate block;
        if (auto v = take(s, "eps")) {
            block.eps = parse_number(*v);
            if (!(block.eps > 0.0)) fail(v->line, "eps must be positive");
        }
        if (auto v = take(s, "seed"))
            block.seed = static_cast<std::uint64_t>(parse_integer(*v));
        reject_leftovers(s, "[simulate]");
        cfg.simulate = block;
    }
    if (sections.count("rate")) {
        Section s = sections["rate"];
        sections.erase("rate");
        ExperimentConfig::Rate block;
        if (auto v = take(s, "path_file"))
            block.path_file = parse_string(*v);
        else
            throw ConfigError("config: [rate] requires 'path_file'");
        reject_leftovers(s, "[rate]");
        cfg.rate = block;
    }
    if (sections.count("mc")) {
        Section s = sections["mc"];
        sections.erase("mc");
        ExperimentConfig::Mc block;
        if (auto v = take(s, "eps_grid"))
            block.eps_grid = parse_array(*v);
        else
            throw ConfigError("config: [mc] requires 'eps_grid'");
        if (auto v = take(s, "h_exponent")) {
            block.h_exponent = parse_number(*v);
            if (!(block.h_exponent > 0.0 && block.h_exponent < 0.5))
                fail(v->line, "h_exponent must be in (0, 0.5)");
        }
        if (auto v = take(s, "a")) block.a = parse_number(*v);
        if (auto v = take(s, "event")) {
            const std::string e = parse_string(*v);
            if (e == "terminal")
                block.event = TailEvent::kTerminal;
            else if (e == "sup")
                block.event = TailEvent::kSup;
            else
                fail(v->line, "event must be 'terminal' or 'sup'");
        }
        if (auto v = take(s, "n_paths")) {
            block.n_paths = parse_integer(*v);
            if (block.n_paths < 1) fail(v->line, "n_paths must be positive");
        } else {
            throw ConfigError("config: [mc] requires 'n_paths'");
        }
        if (auto v = take(s, "seed"))
            block.seed = static_cast<std::uint64_t>(parse_integer(*v));
        if (auto v = take(s, "dt_cap")) {
            block.dt_rule.dt_cap = parse_number(*v);
            if (!(block.dt_rule.dt_cap > 0.0)) fail(v->line, "dt_cap must be positive");
        }
        if (auto v = take(s, "eps_fraction")) {
            block.dt_rule.eps_fraction = parse_number(*v);
            if (!(block.dt_rule.eps_fraction > 0.0))
                fail(v->line, "eps_fraction must be positive");
        }
        if (auto v = take(s, "target_knots")) {
            block.target_knots = static_cast<int>(parse_integer(*v));
            if (block.target_knots < 0) fail(v->line, "target_knots must be >= 0");
        }
        reject_leftovers(s, "[mc]");
        cfg.mc = block;
    }
    if (sections.count("validate")) {
        Section s = sections["validate"];
        sections.erase("validate");
        ExperimentConfig::Validate block;
        if (auto v = take(s, "num_samples")) {
            block.num_samples = static_cast<int>(parse_integer(*v));
            if (block.num_samples < 1) fail(v->line, "num_samples must be >= 1");
        }
        if (auto v = take(s, "radius")) {
            block.radius = parse_number(*v);
            if (!(block.radius > 0.0)) fail(v->line, "radius must be positive");
        }
        if (auto v = take(s, "h_fd")) {
            block.h_fd = parse_number(*v);
            if (!(block.h_fd > 0.0)) fail(v->line, "h_fd must be positive");
        }
        reject_leftovers(s, "[validate]");
        cfg.validate = block;
    }
    for (const auto& [name, section] : sections) {
        (void)section;
        throw ConfigError("config: unhandled section [" + name + "]");
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    const auto put = [&h](const std::string& k, const std::string& v) {
        fnv1a(h, k);
        fnv1a(h, "=");
        fnv1a(h, v);
        fnv1a(h, ";");
    };
    put("model.name", model_name);
    for (const auto& [k, v] : model_params) put("model." + k, format_real(v));
    std::string x0_text;
    for (Eigen::Index i = 0; i < x0.size(); ++i)
        x0_text += (i ? "," : "") + format_real(x0(i));
    put("x0", x0_text);
    put("y0", std::to_string(y0 + 1));
    put("T", format_real(T));
    put("dt", format_real(dt));
    if (analyze) put("analyze.knots", std::to_string(analyze->knots));
    if (simulate) {
        put("simulate.eps", format_real(simulate->eps));
        put("simulate.seed", std::to_string(simulate->seed));
    }
    if (rate) put("rate.path_file", rate->path_file);
    if (mc) {
        std::string grid;
        for (std::size_t i = 0; i < mc->eps_grid.size(); ++i)
            grid += (i ? "," : "") + format_real(mc->eps_grid[i]);
        put("mc.eps_grid", grid);
        put("mc.h_exponent", format_real(mc->h_exponent));
        put("mc.a", format_real(mc->a));
        put("mc.event", mc->event == TailEvent::kTerminal ? "terminal" : "sup");
        put("mc.n_paths", std::to_string(mc->n_paths));
        put("mc.seed", std::to_string(mc->seed));
        put("mc.dt_cap", format_real(mc->dt_rule.dt_cap));
        put("mc.eps_fraction", format_real(mc->dt_rule.eps_fraction));
        put("mc.target_knots", std::to_string(mc->target_knots));
    }
    if (validate) {
        put("validate.num_samples", std::to_string(validate->num_samples));
        put("validate.radius", format_real(validate->radius));
        put("validate.h_fd", format_real(validate->h_fd));
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
}

RegimeModel ExperimentConfig::build_model() const {
    return build_builtin(model_name, model_params);
}

}  // namespace slowfast
