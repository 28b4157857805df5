#include "cellpic/config.hpp"
#include "cellpic/error.hpp"
#include "cellpic/harness.hpp"
#include "cellpic/layout_lab.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace cellpic;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string workers;
    std::string layout;
    std::string out;
    std::optional<int> steps;
};

std::vector<int> parse_worker_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        int n = 0;
        try {
            n = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || n < 1) throw ConfigError("bad worker count '" + item + "'");
        out.push_back(n);
    }
    if (out.empty()) throw ConfigError("empty worker list");
    return out;
}

RunConfig build_config(const CommonOptions& o) {
    RunConfig cfg = o.config_path.empty() ? desk_scale_config() : load_config(o.config_path);
    if (o.seed) cfg.seed = *o.seed;
    if (o.steps) cfg.n_steps = *o.steps;
    if (!o.layout.empty()) cfg.layout = parse_layout(o.layout);
    if (!o.out.empty()) cfg.output.dir = o.out;
    cfg.finalize();
    return cfg;
}

std::filesystem::path prepare_out(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.output.dir);
    return cfg.output.dir;
}

void write_run_descriptor(const std::filesystem::path& path, const RunConfig& cfg, const RunMetrics& m) {
    nlohmann::json doc;
    char hash[19];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.descriptor.config_hash));
    doc["config_hash"] = hash;
    doc["workers"] = m.descriptor.workers;
    doc["layout"] = to_string(m.descriptor.layout);
    doc["species"] = m.descriptor.species_names;
    doc["config"] = to_json(cfg);
    std::ofstream(path, std::ios::binary) << doc.dump(2) << '\n';
}

int cmd_run(const CommonOptions& o) {
    RunConfig cfg = build_config(o);
    if (!o.workers.empty()) {
        const auto w = parse_worker_list(o.workers);
        if (w.size() != 1) throw ConfigError("run takes a single worker count");
        cfg.worker_count = w.front();
    }
    cfg.validate();
    const auto dir = prepare_out(cfg);
    RunOptions options;
    options.trace = cfg.output.trace;
    if (options.trace) options.trace_path = dir / "trace.csv";
    const RunMetrics m = run_simulation(cfg, options);
    write_diagnostics_csv(dir / "diagnostics.csv", m);
    write_tally_csv(dir / "tallies.csv", m, cfg.collisions.enabled ? cfg.collisions.roles.neutral : -1);
    write_metrics_csv(dir / "metrics.csv", m);
    write_fields_csv(dir / "fields.csv", cfg.grid, m.final_fields);
    write_run_descriptor(dir / "run.json", cfg, m);

    const auto& last = m.steps.back();
    std::cout << "steps " << cfg.n_steps << ", workers " << cfg.worker_count << ", total "
              << m.seconds("total") << " s, mover " << m.seconds("mover") << " s\n";
    for (std::size_t isp = 0; isp < cfg.species.size(); ++isp) {
        std::cout << "  " << cfg.species[isp].name << ": " << m.steps.front().species_totals[isp] << " -> "
                  << last.species_totals[isp] << '\n';
    }
    std::cout << "output in " << dir.string() << '\n';
    return 0;
}

int cmd_scale(const CommonOptions& o, bool weak) {
    RunConfig cfg = build_config(o);
    const std::vector<int> workers = parse_worker_list(o.workers.empty() ? "1,2,4" : o.workers);
    cfg.worker_count = 1;
    cfg.validate();
    const auto dir = prepare_out(cfg);
    const ScalingReport report = weak ? weak_scaling_sweep(cfg, workers) : strong_scaling_sweep(cfg, workers);
    write_scaling_csv(dir / "scaling.csv", report);
    for (const auto& r : report.rows) {
        std::cout << "workers " << r.workers << " nc " << r.nc << ": total " << r.t_total << " s, speedup "
                  << r.speedup << ", pe " << r.pe << "%\n";
    }
    if (!weak) {
        std::cout << "diagnostics identical across rows: " << (report.diagnostics_identical ? "yes" : "no") << '\n';
        if (!report.diagnostics_identical) return 2;
    }
    std::cout << "output in " << (dir / "scaling.csv").string() << '\n';
    return 0;
}

int cmd_bench(const CommonOptions& o, int repetitions, int steps_per_rep) {
    CommonOptions copy = o;
    copy.layout.clear();
    RunConfig cfg = build_config(copy);
    cfg.validate();
    LayoutBenchOptions options;
    options.repetitions = repetitions;
    options.steps_per_repetition = steps_per_rep;
    if (!o.layout.empty()) options.layouts = {parse_layout(o.layout)};
    const auto dir = prepare_out(cfg);
    const auto rows = bench_layouts(cfg, options);
    write_layout_csv(dir / "layouts.csv", rows);
    std::cout << "mover kernel only; collision locality is not part of this measurement\n";
    for (const auto& r : rows) {
        std::cout << to_string(r.layout) << " / " << r.scenario << ": " << r.ns_per_particle_median
                  << " ns per particle (IQR " << r.ns_per_particle_iqr << ")\n";
    }
    std::cout << "output in " << (dir / "layouts.csv").string() << '\n';
    return 0;
}

int cmd_validate(const CommonOptions& o) {
    RunConfig cfg = build_config(o);
    if (!o.workers.empty()) cfg.worker_count = parse_worker_list(o.workers).front();
    cfg.validate();
    std::cout << "config ok\n"
              << "  nc " << cfg.grid.nc << ", dx " << cfg.grid.dx_m << " m, dt " << cfg.consts.dt_s << " s\n"
              << "  steps " << cfg.n_steps << ", ppc0 " << cfg.ppc0 << ", scenario " << to_string(cfg.scenario)
              << '\n';
    for (const auto& sp : cfg.species) {
        std::cout << "  " << sp.name << ": weight " << sp.weight_m2 << " m^-2, v_th "
                  << thermal_velocity_grid(sp, cfg.grid, cfg.consts) << " dx/step\n";
    }
    if (cfg.collisions.enabled) {
        const auto& sp = cfg.species[static_cast<std::size_t>(cfg.collisions.roles.neutral)];
        const auto p = collision_probabilities(sp.density_m3, cfg.collisions.rates, cfg.consts.dt_s);
        std::cout << "  P_ionization " << p.ionization << ", P_elastic " << p.elastic << ", P_excitation "
                  << p.excitation << ", substeps " << p.substeps << '\n';
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1D3V electrostatic particle-in-cell engine with Monte Carlo collisions"};
    app.require_subcommand(1);

    CommonOptions o;
    int repetitions = 5;
    int steps_per_rep = 10;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "JSON run configuration (default: built-in desk case)");
        sub->add_option("--seed", o.seed, "Master random seed");
        sub->add_option("--workers", o.workers, "Worker count, or a comma-separated list for sweeps");
        sub->add_option("--layout", o.layout, "cell_sorted | vector_of_structs | array_of_structs");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--steps", o.steps, "Override the number of time steps")->check(CLI::NonNegativeNumber);
    };
    auto* run = app.add_subcommand("run", "Run one simulation and write CSV reports");
    auto* strong = app.add_subcommand("strong-scale", "Fixed problem, varying worker count");
    auto* weak = app.add_subcommand("weak-scale", "Problem size proportional to worker count");
    auto* bench = app.add_subcommand("bench-layouts", "Time the mover kernel in each particle layout");
    auto* validate = app.add_subcommand("validate", "Check a configuration and print derived quantities");
    for (auto* sub : {run, strong, weak, bench, validate}) add_common(sub);
    bench->add_option("--repetitions", repetitions, "Timed repetitions (>= 3)");
    bench->add_option("--steps-per-rep", steps_per_rep, "Mover steps per repetition");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(o);
        if (strong->parsed()) return cmd_scale(o, false);
        if (weak->parsed()) return cmd_scale(o, true);
        if (bench->parsed()) return cmd_bench(o, repetitions, steps_per_rep);
        if (validate->parsed()) return cmd_validate(o);
    } catch (const cellpic::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
