// Scenario runner: one subcommand per experiment, plus a plotting-data exporter.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hyperconf/scenarios.hpp"

namespace fs = std::filesystem;
using namespace hyperconf;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::NotFound, "cannot write " + p.string());
    out << text;
}

std::string summary_text(const ScenarioOutput& r) {
    std::ostringstream os;
    os << "scenario: " << r.id << '\n';
    for (const auto& s : r.summary) os << s << '\n';
    for (const auto& c : r.checks) os << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    os << "result: " << (r.pass() ? "pass" : "fail") << '\n';
    return os.str();
}

int run_one(const std::string& id, const std::string& config, const std::string& out_dir, std::uint64_t seed,
            double tol_scale) {
    ScenarioOptions so;
    try {
        so.cfg = config.empty() ? default_config(id) : load_run_config(config, default_config(id));
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    }
    so.seed = seed;
    so.tolerance_scale = tol_scale;
    ScenarioOutput r;
    try {
        r = run_scenario(id, so);
    } catch (const Error& e) {
        std::cerr << id << ": " << e.what() << '\n';
        return e.kind() == ErrorKind::ParseError ? kUsage : kFail;
    }
    fs::path dir = fs::path(out_dir) / id;
    fs::create_directories(dir);
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    nlohmann::json manifest = {{"scenario", id},
                               {"config_hash", so.cfg.hash()},
                               {"config", so.cfg.to_json()},
                               {"seed", seed},
                               {"tolerance_scale", tol_scale},
                               {"pass", r.pass()},
                               {"checks", checks},
                               {"detectors", r.detectors},
                               {"results", r.results},
                               {"files", nlohmann::json::array()}};
    for (const auto& [name, text] : r.files) {
        write_file(dir / name, text);
        manifest["files"].push_back(name);
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    write_file(dir / "timings.json", r.timings.dump(2) + "\n");
    std::string text = summary_text(r);
    write_file(dir / "summary.txt", text);
    std::cout << text;
    return r.pass() ? kPass : kFail;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    return out;
}

/// Long-format `series,s,value` from every CSV in the run directory keyed by s.
int emit_plots_data(const std::string& run_dir, std::string out_path) {
    fs::path dir(run_dir);
    if (!fs::is_directory(dir) || !fs::exists(dir / "manifest.json")) {
        std::cerr << Error(ErrorKind::NotFound, "no completed run in " + run_dir).what() << '\n';
        return kUsage;
    }
    std::vector<fs::path> csvs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv" && e.path().filename() != "plots.csv") csvs.push_back(e.path());
    std::sort(csvs.begin(), csvs.end());
    std::ostringstream os;
    os << "series,s,value\n";
    int rows = 0;
    for (const auto& p : csvs) {
        std::ifstream in(p);
        std::string line;
        if (!std::getline(in, line)) continue;
        auto head = split(line);
        if (head.empty() || head[0] != "s") continue;
        std::vector<std::vector<std::string>> body;
        while (std::getline(in, line))
            if (!line.empty()) body.push_back(split(line));
        for (std::size_t c = 1; c < head.size(); ++c)
            for (const auto& row : body) {
                if (c >= row.size() || row[c] == "nan") continue;
                os << head[c] << ',' << row[0] << ',' << row[c] << '\n';
                ++rows;
            }
    }
    if (out_path.empty()) out_path = (dir / "plots.csv").string();
    write_file(out_path, os.str());
    std::cout << "wrote " << rows << " rows to " << out_path << '\n';
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy and decay experiments for quasilinear waves on hyperboloids"};
    app.require_subcommand(1);
    std::string config, out_dir = "runs";
    std::uint64_t seed = 1;
    double tol_scale = 1.0;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& id : scenario_ids()) {
        CLI::App* sc = app.add_subcommand(id, "run scenario " + id);
        sc->alias(id.substr(0, 2));
        sc->add_option("--config", config, "key = value run configuration")->check(CLI::ExistingFile);
        sc->add_option("--out", out_dir, "output directory (a subdirectory per scenario)");
        sc->add_option("--seed", seed, "seed for point sampling");
        sc->add_option("--tolerance-scale", tol_scale, "multiplies every check tolerance")->check(CLI::PositiveNumber);
        subs.emplace_back(id, sc);
    }
    std::string run_dir, plots_out;
    CLI::App* emit = app.add_subcommand("emit_plots_data", "long-format series,s,value CSV from a finished run");
    emit->add_option("run_dir", run_dir, "scenario output directory")->required();
    emit->add_option("--out", plots_out, "output file (default <run_dir>/plots.csv)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }
    try {
        if (emit->parsed()) return emit_plots_data(run_dir, plots_out);
        for (const auto& [id, sc] : subs)
            if (sc->parsed()) return run_one(id, config, out_dir, seed, tol_scale);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFail;
    }
    return kUsage;
}
