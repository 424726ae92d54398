#include "qdiff/harness/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "qdiff/harness/runner.hpp"

namespace qdiff::harness {

namespace {

using C = ExperimentConfig;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s == "inf" || s == "+inf") {
        v = std::numeric_limits<double>::infinity();
        return true;
    }
    if (s == "-inf") {
        v = -std::numeric_limits<double>::infinity();
        return true;
    }
    if (s.empty()) return false;
    char* end = nullptr;
    errno = 0;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && errno == 0 && !std::isnan(v);
}

template <class Int>
bool parse_int(const std::string& s, Int& v) {
    if (s.empty()) return false;
    const char* b = s.data();
    if (*b == '+') ++b;
    const auto [ptr, ec] = std::from_chars(b, s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_same_v<T, double>) out += format_double(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

// Assigns the textual value to the field; returns the expected type on failure.
struct Assign {
    C& cfg;
    const std::string& value;

    std::string operator()(std::string C::*m) const {
        cfg.*m = value;
        return {};
    }
    std::string operator()(int C::*m) const { return parse_int(value, cfg.*m) ? "" : "an integer"; }
    std::string operator()(long long C::*m) const { return parse_int(value, cfg.*m) ? "" : "an integer"; }
    std::string operator()(std::uint64_t C::*m) const {
        return parse_int(value, cfg.*m) ? "" : "a non-negative integer";
    }
    std::string operator()(double C::*m) const { return parse_double(value, cfg.*m) ? "" : "a number"; }
    std::string operator()(std::vector<double> C::*m) const {
        std::vector<double> out;
        for (const auto& s : split_list(value)) {
            double v;
            if (!parse_double(s, v)) return "a comma-separated list of numbers";
            out.push_back(v);
        }
        cfg.*m = std::move(out);
        return {};
    }
    std::string operator()(std::vector<int> C::*m) const {
        std::vector<int> out;
        for (const auto& s : split_list(value)) {
            int v;
            if (!parse_int(s, v)) return "a comma-separated list of integers";
            out.push_back(v);
        }
        cfg.*m = std::move(out);
        return {};
    }
    std::string operator()(std::vector<std::uint64_t> C::*m) const {
        std::vector<std::uint64_t> out;
        for (const auto& s : split_list(value)) {
            std::uint64_t v;
            if (!parse_int(s, v)) return "a comma-separated list of non-negative integers";
            out.push_back(v);
        }
        cfg.*m = std::move(out);
        return {};
    }
};

struct Render {
    const C& cfg;
    std::string operator()(std::string C::*m) const { return cfg.*m; }
    std::string operator()(int C::*m) const { return std::to_string(cfg.*m); }
    std::string operator()(long long C::*m) const { return std::to_string(cfg.*m); }
    std::string operator()(std::uint64_t C::*m) const { return std::to_string(cfg.*m); }
    std::string operator()(double C::*m) const { return format_double(cfg.*m); }
    std::string operator()(std::vector<double> C::*m) const { return join(cfg.*m); }
    std::string operator()(std::vector<int> C::*m) const { return join(cfg.*m); }
    std::string operator()(std::vector<std::uint64_t> C::*m) const { return join(cfg.*m); }
};

std::string closest(const std::string& word, const std::vector<std::string>& options) {
    std::string best;
    std::size_t best_d = std::numeric_limits<std::size_t>::max();
    for (const auto& o : options) {
        const std::size_t d = levenshtein(word, o);
        if (d < best_d) {
            best_d = d;
            best = o;
        }
    }
    return best_d <= std::max<std::size_t>(2, word.size() / 3) ? best : "";
}

}  // namespace

std::vector<double> ExperimentConfig::time_grid() const {
    if (!times.empty() || !(dt > 0.0)) return times;
    std::vector<double> out;
    for (long k = 1;; ++k) {
        const double t = k * dt;
        if (t > t_max * (1.0 + 1e-12)) break;
        out.push_back(t);
    }
    return out;
}

const std::vector<KeySpec>& config_schema() {
    static const std::vector<KeySpec> schema = {
        {"experiment", "name", &C::name},
        {"experiment", "output_dir", &C::output_dir},
        {"experiment", "seed", &C::seed},
        {"lattice", "d", &C::d},
        {"lattice", "L", &C::L},
        {"lattice", "lambda", &C::lambda},
        {"spectral", "E", &C::E},
        {"spectral", "eta", &C::eta},
        {"spectral", "energies", &C::energies},
        {"spectral", "etas", &C::etas},
        {"spectral", "deltas", &C::deltas},
        {"spectral", "p", &C::p},
        {"spectral", "q", &C::q},
        {"spectral", "c1", &C::c1},
        {"spectral", "radius_scale", &C::radius_scale},
        {"time", "times", &C::times},
        {"time", "t_max", &C::t_max},
        {"time", "dt", &C::dt},
        {"time", "fit_start", &C::fit_start},
        {"time", "fit_end", &C::fit_end},
        {"time", "quad_nodes", &C::quad_nodes},
        {"sampling", "seeds", &C::seeds},
        {"sampling", "n_samples", &C::n_samples},
        {"sampling", "n_trials", &C::n_trials},
        {"numerics", "tol", &C::tol},
        {"numerics", "resolution", &C::resolution},
        {"numerics", "norm_mode", &C::norm_mode},
        {"rmt", "N", &C::N},
        {"rmt", "alpha", &C::alpha},
        {"rmt", "ensemble", &C::ensemble},
        {"rmt", "matrix_size", &C::matrix_size},
        {"walk", "checkpoints", &C::checkpoints},
        {"walk", "kernel_L", &C::kernel_L},
        {"walk", "walk_radius", &C::walk_radius},
    };
    return schema;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError([&] {
          std::string msg = "invalid configuration:";
          for (const auto& e : errors) msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors)) {}

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

namespace {

struct ParseOutcome {
    ExperimentConfig cfg;
    std::vector<std::string> errors;
    std::set<std::string> rejected;  // keys whose value did not parse
};

ParseOutcome parse_text(const std::string& text) {
    const auto& schema = config_schema();
    std::vector<std::string> sections;
    for (const auto& k : schema)
        if (std::find(sections.begin(), sections.end(), k.section) == sections.end()) sections.push_back(k.section);

    ExperimentConfig cfg;
    std::vector<std::string> errors;
    std::set<std::string> seen, rejected;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string where = "line " + std::to_string(line_no) + ": ";
        std::string line = raw;
        if (const auto c = line.find('#'); c != std::string::npos) line.erase(c);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back(where + "malformed section header '" + line + "'");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (std::find(sections.begin(), sections.end(), section) == sections.end()) {
                std::string msg = where + "unknown section [" + section + "]";
                if (const auto s = closest(section, sections); !s.empty()) msg += "; did you mean [" + s + "]?";
                errors.push_back(msg);
                section = "?";
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back(where + "expected 'key = value', got '" + line + "'");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            errors.push_back(where + "key '" + key + "' appears before any [section]");
            continue;
        }
        if (section == "?") continue;
        const auto it = std::find_if(schema.begin(), schema.end(),
                                     [&](const KeySpec& k) { return k.section == section && k.key == key; });
        if (it == schema.end()) {
            std::vector<std::string> here;
            for (const auto& k : schema)
                if (k.section == section) here.push_back(k.key);
            std::string msg = where + "unknown key '" + key + "' in [" + section + "]";
            if (const auto s = closest(key, here); !s.empty()) {
                msg += "; did you mean '" + s + "'?";
            } else {
                for (const auto& k : schema)
                    if (k.key == key) msg += "; '" + key + "' belongs in [" + k.section + "]";
            }
            errors.push_back(msg);
            continue;
        }
        const std::string full = section + "." + key;
        if (!seen.insert(full).second) {
            errors.push_back(where + "duplicate key '" + full + "'");
            continue;
        }
        if (const std::string expected = std::visit(Assign{cfg, value}, it->field); !expected.empty()) {
            errors.push_back(where + full + ": expected " + expected + ", got '" + value + "'");
            rejected.insert(full);
        }
    }
    return {std::move(cfg), std::move(errors), std::move(rejected)};
}

}  // namespace

ExperimentConfig parse_config_unvalidated(const std::string& text) {
    ParseOutcome p = parse_text(text);
    if (!p.errors.empty()) throw ConfigError(std::move(p.errors));
    return std::move(p.cfg);
}

ExperimentConfig parse_config(const std::string& text) {
    ParseOutcome p = parse_text(text);
    // report rule violations alongside syntax errors, skipping keys already rejected
    for (auto& e : validate_config(p.cfg)) {
        const std::string key = e.substr(0, e.find(':'));
        if (!p.rejected.count(key)) p.errors.push_back(std::move(e));
    }
    if (!p.errors.empty()) throw ConfigError(std::move(p.errors));
    return std::move(p.cfg);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot read configuration file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& c) {
    std::vector<std::string> e;
    auto check = [&e](bool ok, const std::string& key, const std::string& rule) {
        if (!ok) e.push_back(key + ": " + rule);
    };
    const auto& reg = experiment_registry();
    const bool known = std::any_of(reg.begin(), reg.end(), [&](const ExperimentInfo& x) { return x.name == c.name; });
    if (!known) {
        std::string names;
        for (const auto& x : reg) names += (names.empty() ? "" : ", ") + x.name;
        e.push_back("experiment.name: unknown experiment '" + c.name + "'; registry: " + names);
    }
    check(!c.output_dir.empty(), "experiment.output_dir", "non-empty path");
    check(c.d >= 1 && c.d <= 3, "lattice.d", "1 <= d <= 3");
    check(c.L >= 2, "lattice.L", "L >= 2");
    check(c.lambda >= 0.0 && std::isfinite(c.lambda), "lattice.lambda", "lambda >= 0");
    check(std::isfinite(c.E), "spectral.E", "E finite");
    check(c.eta > 0.0 && std::isfinite(c.eta), "spectral.eta", "eta > 0");
    for (double v : c.energies) check(std::isfinite(v), "spectral.energies", "every energy finite");
    for (double v : c.etas) check(v > 0.0 && std::isfinite(v), "spectral.etas", "every eta > 0");
    for (double v : c.deltas) check(v > 0.0 && std::isfinite(v), "spectral.deltas", "every delta > 0");
    check(c.p == 1.0 || c.p == 2.0, "spectral.p", "p in {1, 2}");
    check(c.q == 2.0 || c.q == 4.0 || c.q == 6.0 || std::isinf(c.q), "spectral.q", "q in {2, 4, 6, inf}");
    check(c.c1 >= 0.0, "spectral.c1", "c1 >= 0");
    check(c.radius_scale >= 0.0, "spectral.radius_scale", "radius_scale >= 0");
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        check(c.times[i] > 0.0 && std::isfinite(c.times[i]), "time.times", "every time > 0");
        if (i) check(c.times[i] > c.times[i - 1], "time.times", "times strictly increasing");
    }
    check(c.t_max >= 0.0, "time.t_max", "t_max >= 0");
    check(c.dt >= 0.0, "time.dt", "dt >= 0");
    check(c.fit_start >= 0.0 && c.fit_end >= c.fit_start, "time.fit_end", "0 <= fit_start <= fit_end");
    check(c.quad_nodes >= 2 && c.quad_nodes <= 64, "time.quad_nodes", "2 <= quad_nodes <= 64");
    check(!c.seeds.empty(), "sampling.seeds", "at least one seed");
    check(c.n_samples >= 2, "sampling.n_samples", "n_samples >= 2");
    check(c.n_trials >= 1, "sampling.n_trials", "n_trials >= 1");
    check(c.tol > 0.0 && c.tol < 1.0, "numerics.tol", "0 < tol < 1");
    check(c.resolution >= 0, "numerics.resolution", "resolution >= 0 (0 = automatic)");
    check(c.norm_mode == "exact" || c.norm_mode == "sampled", "numerics.norm_mode", "norm_mode in {exact, sampled}");
    check(c.N >= 2, "rmt.N", "N >= 2");
    check(c.alpha > 0.0, "rmt.alpha", "alpha > 0");
    check(c.ensemble == "goe" || c.ensemble == "diagonal" || c.ensemble == "both", "rmt.ensemble",
          "ensemble in {goe, diagonal, both}");
    check(c.matrix_size >= 1 && c.matrix_size <= 32, "rmt.matrix_size", "1 <= matrix_size <= 32");
    for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
        check(c.checkpoints[i] >= 1, "walk.checkpoints", "every checkpoint >= 1");
        if (i) check(c.checkpoints[i] > c.checkpoints[i - 1], "walk.checkpoints", "checkpoints strictly increasing");
    }
    check(c.kernel_L >= 2, "walk.kernel_L", "kernel_L >= 2");
    if (known) experiment_preconditions(c, e);
    return e;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& k : config_schema()) {
        if (section != k.section) {
            if (!section.empty()) out += "\n";
            section = k.section;
            out += "[" + section + "]\n";
        }
        out += std::string(k.key) + " = " + std::visit(Render{cfg}, k.field) + "\n";
    }
    return out;
}

std::string config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace qdiff::harness
