#pragma once

// Plain-text run configuration: `key = value` per line, '#' starts a comment.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "errors.hpp"
#include "forms.hpp"
#include "slice.hpp"
#include "solver.hpp"

namespace hyperconf {

struct RunConfig {
    std::string form_file;
    RadialForm form;
    std::string null_form_file;  // contrast runs: the null comparison form
    RadialForm null_form{1, -1, 0, 0};
    double eps = 1e-3;
    Profile profile;
    double dr = 0.02;
    double rmax = -1;  // <= 0: sized from time.smax
    double smax = 20;
    double slice_ds = 1;  // output.stride: spacing in s between recorded hyperboloids
    double C1_over_C0 = 10;
    double eps_s = 0.05;
    std::string forcing = "none";
    std::map<std::string, std::string> entries;  // as read, for the manifest and hash

    /// Sorted key=value lines of every entry that was set.
    std::string canonical() const {
        std::string out;
        for (const auto& [k, v] : entries) out += k + "=" + v + "\n";
        return out;
    }

    /// FNV-1a of the canonical form, hex.
    std::string hash() const {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : canonical()) {
            h ^= c;
            h *= 1099511628211ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : entries) j[k] = v;
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

/// A real number or a fraction p/q.
inline double parse_number(const std::string& key, const std::string& v) {
    auto bad = [&]() { return Error(ErrorKind::ParseError, "key '" + key + "': bad number '" + v + "'"); };
    auto one = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            double x = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(x)) throw bad();
            return x;
        } catch (const std::invalid_argument&) {
            throw bad();
        } catch (const std::out_of_range&) {
            throw bad();
        }
    };
    if (auto slash = v.find('/'); slash != std::string::npos) {
        double den = one(trim(v.substr(slash + 1)));
        if (den == 0) throw bad();
        return one(trim(v.substr(0, slash))) / den;
    }
    return one(v);
}

inline RadialForm radial_form_file(const std::string& path) {
    FormFile f = load_forms(path);
    if (!f.has_Q) throw Error(ErrorKind::ParseError, "form file " + path + " has no Q entries");
    return RadialForm::from_cubic(f.Q);
}

}  // namespace detail

/// Relative file paths are taken relative to base_dir.
inline RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir = {},
                                  RunConfig cfg = RunConfig{}) {
    std::string line;
    int lineno = 0;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path q(p);
        return (q.is_absolute() || base_dir.empty() ? q : base_dir / q).string();
    };
    bool any = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq)), val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": empty key or value");
        auto num = [&]() { return detail::parse_number(key, val); };
        if (key == "form.file") {
            cfg.form_file = resolve(val);
            cfg.form = detail::radial_form_file(cfg.form_file);
        } else if (key == "contrast.null_form") {
            cfg.null_form_file = resolve(val);
            cfg.null_form = detail::radial_form_file(cfg.null_form_file);
        } else if (key == "eps") {
            cfg.eps = num();
        } else if (key == "profile.kind") {
            if (val == "bump") cfg.profile.kind = ProfileKind::Bump;
            else if (val == "gaussian") cfg.profile.kind = ProfileKind::Gaussian;
            else if (val == "exact") cfg.profile.kind = ProfileKind::ExactLinear;
            else if (val == "file") cfg.profile.kind = ProfileKind::File;
            else throw Error(ErrorKind::ParseError, "profile.kind must be bump, gaussian, exact or file");
        } else if (key == "profile.amplitude") {
            cfg.profile.amplitude = num();
        } else if (key == "profile.width") {
            cfg.profile.width = num();
        } else if (key == "profile.center") {
            cfg.profile.center = num();
        } else if (key == "profile.radius") {
            cfg.profile.radius = num();
        } else if (key == "profile.file") {
            cfg.profile.file = resolve(val);
            if (!std::filesystem::exists(cfg.profile.file))
                throw Error(ErrorKind::NotFound, "profile file " + cfg.profile.file + " does not exist");
        } else if (key == "profile.velocity") {
            if (val == "outgoing") cfg.profile.velocity = VelocityMode::Outgoing;
            else if (val == "zero") cfg.profile.velocity = VelocityMode::Zero;
            else throw Error(ErrorKind::ParseError, "profile.velocity must be outgoing or zero");
        } else if (key == "grid.dr") {
            cfg.dr = num();
            if (!(cfg.dr > 0 && cfg.dr < 0.1)) throw Error(ErrorKind::ParseError, "grid.dr must lie in (0, 0.1)");
        } else if (key == "grid.rmax") {
            cfg.rmax = num();
        } else if (key == "time.smax") {
            cfg.smax = num();
            if (!(cfg.smax >= 2)) throw Error(ErrorKind::ParseError, "time.smax must be at least 2");
        } else if (key == "output.stride") {
            cfg.slice_ds = num();
            if (!(cfg.slice_ds > 0)) throw Error(ErrorKind::ParseError, "output.stride must be positive");
        } else if (key == "bootstrap.C1overC0") {
            cfg.C1_over_C0 = num();
            if (!(cfg.C1_over_C0 > 1)) throw Error(ErrorKind::ParseError, "bootstrap.C1overC0 must exceed 1");
        } else if (key == "structure.eps_s") {
            cfg.eps_s = num();
            if (!(cfg.eps_s > 0)) throw Error(ErrorKind::ParseError, "structure.eps_s must be positive");
        } else if (key == "forcing") {
            if (val != "none" && val != "bump") throw Error(ErrorKind::ParseError, "forcing must be none or bump");
            cfg.forcing = val;
        } else {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
        cfg.entries[key] = val;
        any = true;
    }
    if (!any) throw Error(ErrorKind::ParseError, "configuration is empty");
    if (cfg.profile.kind == ProfileKind::File && cfg.profile.file.empty())
        throw Error(ErrorKind::ParseError, "profile.kind = file needs profile.file");
    cfg.profile.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path, RunConfig defaults = RunConfig{}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::NotFound, "cannot open config " + path);
    return parse_run_config(in, std::filesystem::path(path).parent_path(), std::move(defaults));
}

}  // namespace hyperconf
