#pragma once

#include "kglab/tools/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace kglab::tools {

inline constexpr const char* kSchemaVersion = "kglab.report/1";

/// One thresholded quantity. relation is "<=", ">=" or "in" (lo <= value <= hi).
struct Check {
    std::string name;
    double value = 0.0;
    std::string relation = "<=";
    double lo = 0.0;
    double hi = 0.0;
    bool pass = false;
};

Check check_le(std::string name, double value, double bound);
Check check_ge(std::string name, double value, double bound);
Check check_in(std::string name, double value, double lo, double hi);

Json to_json(const Check& c);

/// Numeric CSV table.
struct Table {
    std::string file;  ///< e.g. "masses.csv"
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// What one command produced.
struct Outcome {
    std::vector<Check> checks;
    Json results = Json::object();
    std::vector<Table> tables;
    std::vector<std::pair<std::string, Json>> documents;  ///< extra JSON files
    std::vector<std::string> warnings;

    bool pass() const;
    void add(Check c) { checks.push_back(std::move(c)); }
    /// Appends another outcome's checks, tables and warnings; its results go
    /// under key.
    void merge(const std::string& key, Outcome other);
};

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_csv(const std::filesystem::path& path, const Table& table);
void write_json(const std::filesystem::path& path, const Json& doc);

/// report.json body: schema version, command, config and its hash, checks,
/// results and the list of written files. No wall-clock content.
Json make_report(const std::string& command, const ExperimentConfig& cfg, const Outcome& outcome);

/// Writes report.json, the tables and extra documents into dir.
void write_outcome(const std::filesystem::path& dir, const std::string& command, const ExperimentConfig& cfg,
                   const Outcome& outcome);

/// The one file that may differ between reruns.
void write_metadata(const std::filesystem::path& dir, double wall_seconds);

Json error_document(const std::string& status, const std::string& code, const std::string& message);

} // namespace kglab::tools
