#include "kglab/tools/config.hpp"

#include "kglab/error.hpp"
#include "kglab/grid.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace kglab::tools {

namespace {

// Reads the keys of one section; anything not consumed is an error.
class Section {
public:
    Section(const Json& doc, std::string name) : name_(std::move(name))
    {
        if (!doc.contains(name_)) throw ConfigError("missing section '" + name_ + "'");
        obj_ = &doc.at(name_);
        if (!obj_->is_object()) throw ConfigError("section '" + name_ + "' must be an object");
    }

    template <class T>
    void read(const char* key, T& out)
    {
        seen_.insert(key);
        if (!obj_->contains(key)) return;
        const Json& v = obj_->at(key);
        if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
        } else {
            if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
        }
        out = v.get<T>();
    }

    void finish() const
    {
        for (const auto& [k, v] : obj_->items())
            if (!seen_.count(k)) throw ConfigError("unknown key '" + where(k.c_str()) + "'");
    }

private:
    std::string where(const char* key) const { return name_ + "." + key; }

    std::string name_;
    const Json* obj_ = nullptr;
    std::set<std::string> seen_;
};

} // namespace

PerturbationSpec ExperimentConfig::perturbation() const
{
    PerturbationSpec s;
    s.delta = model.delta;
    s.c_V = model.c_V;
    s.c_b = model.c_b;
    s.sigma = model.sigma;
    s.taper_radius = model.taper * grid.L;
    return s;
}

FactorOptions ExperimentConfig::factor_options() const
{
    FactorOptions o;
    o.method = parse_factor_method(factorization.method);
    o.K = factorization.K;
    o.floor = factorization.floor;
    return o;
}

SolveOptions ExperimentConfig::solve_options() const
{
    SolveOptions o;
    o.tol = solver.tol;
    o.k_max = solver.k_max;
    o.gamma = solver.gamma;
    o.s = solver.s;
    o.stepper.tol = solver.stepper_tol;
    o.boundary = parse_feynman_boundary(solver.boundary);
    return o;
}

ExperimentConfig parse_config(const Json& doc)
{
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
    const std::set<std::string> known{"experiment", "grid", "timegrid", "model", "factorization", "solver", "source"};
    for (const auto& [k, v] : doc.items())
        if (!known.count(k)) throw ConfigError("unknown section '" + k + "'");

    ExperimentConfig c;
    Section e(doc, "experiment");
    e.read("name", c.name);
    e.read("out", c.out);
    e.finish();

    Section g(doc, "grid");
    g.read("N", c.grid.N);
    g.read("L", c.grid.L);
    g.finish();

    Section t(doc, "timegrid");
    t.read("J", c.timegrid.J);
    t.read("T", c.timegrid.T);
    t.finish();

    Section m(doc, "model");
    m.read("mu", c.model.mu);
    m.read("delta", c.model.delta);
    m.read("c_V", c.model.c_V);
    m.read("c_b", c.model.c_b);
    m.read("sigma", c.model.sigma);
    m.read("taper", c.model.taper);
    m.finish();

    Section f(doc, "factorization");
    f.read("method", c.factorization.method);
    f.read("K", c.factorization.K);
    f.read("floor", c.factorization.floor);
    f.finish();

    Section s(doc, "solver");
    s.read("tol", c.solver.tol);
    s.read("k_max", c.solver.k_max);
    s.read("gamma", c.solver.gamma);
    s.read("s", c.solver.s);
    s.read("stepper_tol", c.solver.stepper_tol);
    s.read("boundary", c.solver.boundary);
    s.finish();

    if (doc.contains("source")) {
        Section src(doc, "source");
        src.read("t0", c.source.t0);
        src.read("x0", c.source.x0);
        src.read("width_t", c.source.width_t);
        src.read("width_x", c.source.width_x);
        src.finish();
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

Json to_json(const ExperimentConfig& c)
{
    return Json{
        {"experiment", {{"name", c.name}, {"out", c.out}}},
        {"grid", {{"N", c.grid.N}, {"L", c.grid.L}}},
        {"timegrid", {{"J", c.timegrid.J}, {"T", c.timegrid.T}}},
        {"model",
         {{"mu", c.model.mu},
          {"delta", c.model.delta},
          {"c_V", c.model.c_V},
          {"c_b", c.model.c_b},
          {"sigma", c.model.sigma},
          {"taper", c.model.taper}}},
        {"factorization", {{"method", c.factorization.method}, {"K", c.factorization.K}, {"floor", c.factorization.floor}}},
        {"solver",
         {{"tol", c.solver.tol},
          {"k_max", c.solver.k_max},
          {"gamma", c.solver.gamma},
          {"s", c.solver.s},
          {"stepper_tol", c.solver.stepper_tol},
          {"boundary", c.solver.boundary}}},
        {"source",
         {{"t0", c.source.t0}, {"x0", c.source.x0}, {"width_t", c.source.width_t}, {"width_x", c.source.width_x}}},
    };
}

void validate(const ExperimentConfig& c)
{
    try {
        if (c.name.empty()) throw ConfigError("experiment.name must not be empty");
        // Grid and time-grid constructors carry their own checks.
        const GridPtr grid = make_grid(c.grid.N, c.grid.L);
        const TimeGridPtr times = make_time_grid(c.timegrid.T, c.timegrid.J);
        if (!(c.model.taper > 0.0 && c.model.taper < 0.9))
            throw ConfigError("model.taper must lie in (0, 0.9)");
        assemble_A(grid, times, c.model.mu, c.perturbation());
        const FactorOptions fo = c.factor_options();
        if (fo.K < 1) throw ConfigError("factorization.K must be at least 1");
        if (fo.floor > c.model.mu) throw ConfigError("factorization.floor exceeds the mass");
        const SolveOptions so = c.solve_options();
        validate(so);
        validate(so.stepper);
        if (!(c.source.width_t > 0.0 && c.source.width_x > 0.0))
            throw ConfigError("source widths must be positive");
        if (std::abs(c.source.t0) > c.timegrid.T || std::abs(c.source.x0) > c.grid.L)
            throw ConfigError("source center lies outside the grid");
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

std::string canonical_text(const ExperimentConfig& cfg)
{
    return to_json(cfg).dump(2) + "\n";
}

std::string git_blob_hash(const std::string& bytes)
{
    const std::string blob = "blob " + std::to_string(bytes.size()) + '\0' + bytes;
    std::array<unsigned char, SHA_DIGEST_LENGTH> d{};
    SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), d.data());
    std::string hex;
    hex.reserve(2 * d.size());
    char buf[3];
    for (unsigned char b : d) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        hex += buf;
    }
    return hex;
}

std::string config_hash(const ExperimentConfig& cfg)
{
    return git_blob_hash(canonical_text(cfg));
}

} // namespace kglab::tools
