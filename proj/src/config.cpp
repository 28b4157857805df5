#include "cellpic/config.hpp"

#include "cellpic/error.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace cellpic {

using nlohmann::json;

const char* to_string(Scenario s) {
    return s == Scenario::ionization_decay ? "ionization_decay" : "full_pic";
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) {
        throw ConfigError("'" + where + "' must be an object");
    }
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + e.what());
    }
}

template <class T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) {
        throw ConfigError("missing key '" + std::string(key) + "' in " + where);
    }
    return get_or<T>(obj, key, T{}, where);
}

Scenario parse_scenario(const std::string& s) {
    if (s == "ionization_decay") return Scenario::ionization_decay;
    if (s == "full_pic") return Scenario::full_pic;
    throw ConfigError("unknown scenario '" + s + "'");
}

} // namespace

void RunConfig::finalize() {
    if (grid.nc > 0) grid.dx_m = grid.length_m / grid.nc;
    for (auto& sp : species) {
        sp.charged = sp.charge_c != 0.0;
        sp.weight_m2 = ppc0 > 0 ? sp.density_m3 * grid.dx_m / ppc0 : 0.0;
    }
}

int RunConfig::species_index(const std::string& name) const {
    for (std::size_t i = 0; i < species.size(); ++i) {
        if (species[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

void RunConfig::validate(bool allow_zero_steps) const {
    grid.validate();
    consts.validate();
    if (species.empty()) throw ConfigError("at least one species is required");
    std::set<std::string> names;
    for (const auto& sp : species) {
        sp.validate();
        if (!names.insert(sp.name).second) throw ConfigError("duplicate species name '" + sp.name + "'");
    }
    if (ppc0 < 1) throw ConfigError("ppc0 must be >= 1");
    if (n_steps < (allow_zero_steps ? 0 : 1)) throw ConfigError("n_steps must be >= 1");
    if (worker_count < 1) throw ConfigError("worker_count must be >= 1");
    if (worker_count > grid.nc) throw ConfigError("worker_count exceeds the number of cells");
    if (grainsize < 1) throw ConfigError("grainsize must be >= 1");
    if (smoother_passes < 0) throw ConfigError("smoother_passes must be >= 0");
    if (!(capacity_slack >= 1.0)) throw ConfigError("capacity_slack must be >= 1");
    if (scenario == Scenario::full_pic && grid.nc < 3) {
        throw ConfigError("the field solver needs at least 3 cells");
    }
    if (collisions.enabled) collisions.validate(species);
}

RunConfig parse_config(const json& doc) {
    check_keys(doc,
               {"grid", "dt_s", "epsilon0", "ppc0", "n_steps", "seed", "species", "collisions",
                "worker_count", "grainsize", "layout", "scenario", "field_bc", "smoother_passes",
                "capacity_slack", "memory_cap_bytes", "output"},
               "config");
    RunConfig cfg;

    const json& g = doc.contains("grid") ? doc.at("grid") : throw ConfigError("missing key 'grid' in config");
    check_keys(g, {"nc", "length_m"}, "grid");
    cfg.grid.nc = require<int>(g, "nc", "grid");
    cfg.grid.length_m = require<double>(g, "length_m", "grid");

    cfg.consts.dt_s = require<double>(doc, "dt_s", "config");
    cfg.consts.epsilon0 = get_or<double>(doc, "epsilon0", units::epsilon0, "config");
    cfg.ppc0 = get_or<int>(doc, "ppc0", cfg.ppc0, "config");
    cfg.n_steps = get_or<int>(doc, "n_steps", cfg.n_steps, "config");
    cfg.seed = get_or<std::uint64_t>(doc, "seed", cfg.seed, "config");
    cfg.worker_count = get_or<int>(doc, "worker_count", cfg.worker_count, "config");
    cfg.grainsize = get_or<int>(doc, "grainsize", cfg.grainsize, "config");
    cfg.layout = parse_layout(get_or<std::string>(doc, "layout", "cell_sorted", "config"));
    cfg.scenario = parse_scenario(get_or<std::string>(doc, "scenario", "ionization_decay", "config"));
    cfg.smoother_passes = get_or<int>(doc, "smoother_passes", cfg.smoother_passes, "config");
    cfg.capacity_slack = get_or<double>(doc, "capacity_slack", cfg.capacity_slack, "config");
    cfg.memory_cap_bytes = get_or<std::uint64_t>(doc, "memory_cap_bytes", 0, "config");

    if (!doc.contains("species") || !doc.at("species").is_array()) {
        throw ConfigError("'species' must be a list");
    }
    int idx = 0;
    for (const json& s : doc.at("species")) {
        const std::string where = "species[" + std::to_string(idx++) + "]";
        check_keys(s,
                   {"name", "charge_c", "mass_kg", "nstep", "active_mover", "track_transverse",
                    "temperature_ev", "density_m3"},
                   where);
        SpeciesDef sp = make_species(require<std::string>(s, "name", where), require<double>(s, "charge_c", where),
                                     require<double>(s, "mass_kg", where), get_or<int>(s, "nstep", 1, where));
        sp.active_mover = get_or<bool>(s, "active_mover", true, where);
        sp.track_transverse = get_or<bool>(s, "track_transverse", false, where);
        sp.temperature_ev = get_or<double>(s, "temperature_ev", 0.0, where);
        sp.density_m3 = get_or<double>(s, "density_m3", 0.0, where);
        cfg.species.push_back(std::move(sp));
    }

    if (doc.contains("collisions")) {
        const json& c = doc.at("collisions");
        check_keys(c,
                   {"enabled", "electron", "ion", "neutral", "rate_ionization_m3s", "rate_elastic_m3s",
                    "rate_excitation_m3s", "excitation_threshold_ev", "ionization_threshold_ev"},
                   "collisions");
        auto& col = cfg.collisions;
        col.enabled = get_or<bool>(c, "enabled", true, "collisions");
        auto role = [&](const char* key) {
            const std::string name = require<std::string>(c, key, "collisions");
            const int i = cfg.species_index(name);
            if (i < 0) throw ConfigError("collisions." + std::string(key) + " names unknown species '" + name + "'");
            return i;
        };
        col.roles.electron = role("electron");
        col.roles.ion = role("ion");
        col.roles.neutral = role("neutral");
        col.rates.rate_ionization_m3s = get_or<double>(c, "rate_ionization_m3s", 0.0, "collisions");
        col.rates.rate_elastic_m3s = get_or<double>(c, "rate_elastic_m3s", 0.0, "collisions");
        col.rates.rate_excitation_m3s = get_or<double>(c, "rate_excitation_m3s", 0.0, "collisions");
        col.rates.excitation_threshold_ev = get_or<double>(c, "excitation_threshold_ev", 0.0, "collisions");
        col.rates.ionization_threshold_ev = get_or<double>(c, "ionization_threshold_ev", 0.0, "collisions");
    }

    if (doc.contains("field_bc")) {
        const json& f = doc.at("field_bc");
        check_keys(f, {"kind", "phi_left", "phi_right"}, "field_bc");
        const std::string kind = get_or<std::string>(f, "kind", "periodic", "field_bc");
        if (kind == "periodic") {
            cfg.field_bc = FieldBoundary::periodic();
        } else if (kind == "dirichlet") {
            cfg.field_bc = FieldBoundary::dirichlet(get_or<double>(f, "phi_left", 0.0, "field_bc"),
                                                    get_or<double>(f, "phi_right", 0.0, "field_bc"));
        } else {
            throw ConfigError("unknown field_bc kind '" + kind + "'");
        }
    }

    if (doc.contains("output")) {
        const json& o = doc.at("output");
        check_keys(o, {"dir", "trace"}, "output");
        cfg.output.dir = get_or<std::string>(o, "dir", "out", "output");
        cfg.output.trace = get_or<bool>(o, "trace", true, "output");
    }

    cfg.finalize();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
    json doc;
    doc["grid"] = {{"nc", cfg.grid.nc}, {"length_m", cfg.grid.length_m}};
    doc["dt_s"] = cfg.consts.dt_s;
    doc["epsilon0"] = cfg.consts.epsilon0;
    doc["ppc0"] = cfg.ppc0;
    doc["n_steps"] = cfg.n_steps;
    doc["seed"] = cfg.seed;
    json species = json::array();
    for (const auto& sp : cfg.species) {
        species.push_back({{"name", sp.name},
                           {"charge_c", sp.charge_c},
                           {"mass_kg", sp.mass_kg},
                           {"nstep", sp.nstep},
                           {"active_mover", sp.active_mover},
                           {"track_transverse", sp.track_transverse},
                           {"temperature_ev", sp.temperature_ev},
                           {"density_m3", sp.density_m3}});
    }
    doc["species"] = species;
    if (cfg.collisions.roles.electron >= 0) {
        const auto& c = cfg.collisions;
        auto name = [&](int i) { return cfg.species.at(static_cast<std::size_t>(i)).name; };
        doc["collisions"] = {{"enabled", c.enabled},
                             {"electron", name(c.roles.electron)},
                             {"ion", name(c.roles.ion)},
                             {"neutral", name(c.roles.neutral)},
                             {"rate_ionization_m3s", c.rates.rate_ionization_m3s},
                             {"rate_elastic_m3s", c.rates.rate_elastic_m3s},
                             {"rate_excitation_m3s", c.rates.rate_excitation_m3s},
                             {"excitation_threshold_ev", c.rates.excitation_threshold_ev},
                             {"ionization_threshold_ev", c.rates.ionization_threshold_ev}};
    }
    doc["worker_count"] = cfg.worker_count;
    doc["grainsize"] = cfg.grainsize;
    doc["layout"] = to_string(cfg.layout);
    doc["scenario"] = to_string(cfg.scenario);
    if (cfg.field_bc.is_periodic()) {
        doc["field_bc"] = {{"kind", "periodic"}};
    } else {
        doc["field_bc"] = {{"kind", "dirichlet"}, {"phi_left", cfg.field_bc.phi_left}, {"phi_right", cfg.field_bc.phi_right}};
    }
    doc["smoother_passes"] = cfg.smoother_passes;
    doc["capacity_slack"] = cfg.capacity_slack;
    doc["memory_cap_bytes"] = cfg.memory_cap_bytes;
    doc["output"] = {{"dir", cfg.output.dir.string()}, {"trace", cfg.output.trace}};
    return doc;
}

std::uint64_t config_hash(const RunConfig& cfg) {
    json doc = to_json(cfg);
    doc.erase("worker_count");
    doc.erase("grainsize");
    doc.erase("output");
    doc.erase("layout");
    const std::string text = doc.dump();
    return fnv1a(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

std::size_t initial_cell_capacity(const RunConfig& cfg) {
    return static_cast<std::size_t>(std::ceil(cfg.capacity_slack * cfg.ppc0));
}

CellSortedStore init_plasma(const RunConfig& cfg) {
    return init_plasma(cfg, 0, cfg.grid.nc);
}

CellSortedStore init_plasma(const RunConfig& cfg, int first_cell, int cell_count) {
    if (first_cell < 0 || cell_count < 0 || first_cell + cell_count > cfg.grid.nc) {
        throw ConfigError("init_plasma: cell range outside the mesh");
    }
    const std::size_t cap = initial_cell_capacity(cfg);
    if (cfg.memory_cap_bytes > 0) {
        std::uint64_t bytes = 0;
        for (const auto& sp : cfg.species) {
            const std::uint64_t arrays = sp.track_transverse ? 5 : 4;
            bytes += static_cast<std::uint64_t>(cell_count) * cap * arrays * sizeof(double);
            if (bytes > cfg.memory_cap_bytes) {
                throw AllocationError("particle storage for species '" + sp.name + "' needs " +
                                      std::to_string(bytes) + " bytes, above the cap of " +
                                      std::to_string(cfg.memory_cap_bytes));
            }
        }
    }

    CellSortedStore store(cfg.species, cfg.grid.nc, first_cell, cell_count, cap);
    for (std::size_t isp = 0; isp < cfg.species.size(); ++isp) {
        const SpeciesDef& sp = cfg.species[isp];
        const double sigma = thermal_velocity_grid(sp, cfg.grid, cfg.consts);
        for (int j = 0; j < cell_count; ++j) {
            const int global = first_cell + j;
            CounterRng rng(cfg.seed, StreamPurpose::init, static_cast<std::uint32_t>(isp),
                           static_cast<std::uint32_t>(global));
            for (int i = 0; i < cfg.ppc0; ++i) {
                ParticleRecord p;
                p.x = rng.uniform();
                const double gx = rng.normal();
                const double gy = rng.normal();
                const double gz = rng.normal();
                p.vx = sigma > 0.0 ? sigma * gx : 0.0;
                p.vy = sigma > 0.0 ? sigma * gy : 0.0;
                p.vz = sigma > 0.0 ? sigma * gz : 0.0;
                if (sp.track_transverse) p.yp = rng.uniform();
                store.push_back(isp, j, p);
            }
        }
    }
    return store;
}

namespace {

constexpr double kDeuteronMass = 3.3435837724e-27;
constexpr double kDeuteriumAtomMass = kDeuteronMass + units::electron_mass;

} // namespace

RunConfig desk_scale_config() {
    RunConfig cfg;
    cfg.grid = Grid1D::make(1000, 0.01);
    cfg.consts.dt_s = 4e-14;
    cfg.ppc0 = 10;
    cfg.n_steps = 2000;
    cfg.seed = 20240611;

    SpeciesDef e = make_species("e", -units::elementary_charge, units::electron_mass);
    e.temperature_ev = 20.0;
    e.density_m3 = 1e21;
    SpeciesDef ion = make_species("D+", units::elementary_charge, kDeuteronMass);
    ion.temperature_ev = 20.0;
    ion.density_m3 = 1e21;
    SpeciesDef neutral = make_species("D", 0.0, kDeuteriumAtomMass);
    neutral.temperature_ev = 1.0;
    neutral.density_m3 = 1e21;
    cfg.species = {e, ion, neutral};

    cfg.collisions.enabled = true;
    cfg.collisions.roles = {0, 1, 2};
    // n_e R dt = 1e-3 at n_e = 1e21 m^-3, dt = 4e-14 s.
    cfg.collisions.rates.rate_ionization_m3s = 1e-3 / (1e21 * 4e-14);
    cfg.collisions.rates.rate_elastic_m3s = 5e-11;
    cfg.collisions.rates.rate_excitation_m3s = 1e-11;
    cfg.collisions.rates.excitation_threshold_ev = 10.2;
    cfg.collisions.rates.ionization_threshold_ev = 13.6;

    cfg.scenario = Scenario::ionization_decay;
    cfg.grainsize = 500;
    cfg.finalize();
    return cfg;
}

RunConfig production_scale_config() {
    RunConfig cfg = desk_scale_config();
    cfg.grid = Grid1D::make(100000, 1.0);
    cfg.ppc0 = 100;
    cfg.n_steps = 200000;
    cfg.finalize();
    return cfg;
}

} // namespace cellpic
