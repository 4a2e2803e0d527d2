#include "kglab/tools/runner.hpp"

#include "kglab/error.hpp"
#include "kglab/tools/acceptance.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>

namespace kglab::tools {

namespace {

bool known_command(const std::string& c)
{
    for (const char* k : {"free-check", "factorize", "solve", "asymptotics", "microlocal", "laplim", "converge", "all"})
        if (c == k) return true;
    return false;
}

// Commands that fit decay rates need the time window to reach well past the
// perturbation scale.
bool needs_long_window(const std::string& c)
{
    return c == "factorize" || c == "asymptotics" || c == "all";
}

Outcome dispatch(const RunRequest& req, Lab& lab, std::ostream& out)
{
    const std::string& c = req.command;
    if (c == "free-check") return free_check(lab);
    if (c == "factorize") return factorize(lab);
    if (c == "solve") return solve(lab, parse_solve_method(req.method));
    if (c == "asymptotics") return asymptotics(lab);
    if (c == "microlocal") return microlocal(lab);
    if (c == "laplim") return laplim(lab);
    if (c == "converge") return converge(lab, parse_axis(req.axis));
    std::vector<CriterionResult> results;
    for (int id = 1; id <= kCriterionCount; ++id) {
        results.push_back(run_criterion(lab, id));
        out << summary_line(results.back()) << std::endl;
    }
    return acceptance_outcome(std::move(results));
}

} // namespace

int run(const RunRequest& req, std::ostream& out, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    try {
        if (!known_command(req.command)) throw ConfigError("unknown command '" + req.command + "'");
        if (req.config) cfg = load_config(*req.config);
        if (req.out) cfg.out = *req.out;
        validate(cfg);
        try {
            if (req.command == "solve") (void)parse_solve_method(req.method);
            if (req.command == "converge") (void)parse_axis(req.axis);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (needs_long_window(req.command) && cfg.timegrid.T < 10.0 * cfg.model.sigma)
            throw ConfigError("timegrid.T must be at least 10 * model.sigma for rate fits");
    } catch (const ConfigError& e) {
        out << error_document("config_error", "config", e.what()).dump() << '\n';
        err << "kglab: " << e.what() << '\n';
        return kExitConfig;
    }

    const std::filesystem::path dir = cfg.out;
    try {
        Lab lab(cfg);
        const Outcome outcome = dispatch(req, lab, out);
        write_outcome(dir, req.command, cfg, outcome);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_metadata(dir, wall);
        bool numerical = false;
        if (req.command == "all")
            for (const auto& c : outcome.checks)
                if (c.name.ends_with("_numerical_failure")) numerical = true;
        for (const auto& c : outcome.checks)
            if (!c.pass) err << "check failed: " << c.name << " = " << format_double(c.value) << '\n';
        if (numerical) return kExitNumerical;
        return outcome.pass() ? kExitPass : kExitCheckFailed;
    } catch (const Error& e) {
        const Json doc = error_document("numerical_failure", std::string(to_string(e.code())), e.what());
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (!ec) write_json(dir / "error.json", doc);
        out << doc.dump() << '\n';
        err << "kglab: " << e.what() << '\n';
        return kExitNumerical;
    }
}

} // namespace kglab::tools
