#include "kglab/tools/report.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>

namespace kglab::tools {

Check check_le(std::string name, double value, double bound)
{
    return {std::move(name), value, "<=", 0.0, bound, value <= bound};
}

Check check_ge(std::string name, double value, double bound)
{
    return {std::move(name), value, ">=", bound, 0.0, value >= bound};
}

Check check_in(std::string name, double value, double lo, double hi)
{
    return {std::move(name), value, "in", lo, hi, lo <= value && value <= hi};
}

Json to_json(const Check& c)
{
    Json j{{"name", c.name}, {"value", c.value}, {"relation", c.relation}, {"pass", c.pass}};
    if (c.relation == "<=") j["bound"] = c.hi;
    else if (c.relation == ">=") j["bound"] = c.lo;
    else j["range"] = {c.lo, c.hi};
    return j;
}

bool Outcome::pass() const
{
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

void Outcome::merge(const std::string& key, Outcome other)
{
    for (auto& c : other.checks) checks.push_back(std::move(c));
    for (auto& t : other.tables) tables.push_back(std::move(t));
    for (auto& d : other.documents) documents.push_back(std::move(d));
    for (auto& w : other.warnings) warnings.push_back(std::move(w));
    results[key] = std::move(other.results);
}

std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

void write_csv(const std::filesystem::path& path, const Table& table)
{
    std::ofstream out(path, std::ios::binary);
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_json(const std::filesystem::path& path, const Json& doc)
{
    std::ofstream out(path, std::ios::binary);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

Json make_report(const std::string& command, const ExperimentConfig& cfg, const Outcome& outcome)
{
    Json checks = Json::array();
    for (const auto& c : outcome.checks) checks.push_back(to_json(c));
    Json files = Json::array();
    for (const auto& t : outcome.tables) files.push_back(t.file);
    for (const auto& d : outcome.documents) files.push_back(d.first);
    return Json{
        {"schema_version", kSchemaVersion},
        {"command", command},
        {"experiment", cfg.name},
        {"config_hash", config_hash(cfg)},
        {"config", to_json(cfg)},
        {"pass", outcome.pass()},
        {"checks", checks},
        {"results", outcome.results},
        {"warnings", outcome.warnings},
        {"files", files},
    };
}

void write_outcome(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                   const Outcome& outcome)
{
    std::filesystem::create_directories(dir);
    for (const auto& t : outcome.tables) write_csv(dir / t.file, t);
    for (const auto& [name, doc] : outcome.documents) write_json(dir / name, doc);
    std::ofstream(dir / "config.json", std::ios::binary) << canonical_text(cfg);
    write_json(dir / "report.json", make_report(command, cfg, outcome));
}

void write_metadata(const std::filesystem::path& dir, double wall_seconds)
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    std::filesystem::create_directories(dir);
    write_json(dir / "metadata.json", Json{{"finished_utc", stamp}, {"wall_seconds", wall_seconds}});
}

Json error_document(const std::string& status, const std::string& code, const std::string& message)
{
    return Json{{"schema_version", kSchemaVersion}, {"status", status}, {"code", code}, {"message", message}};
}

} // namespace kglab::tools
