#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "entropywalks/io.hpp"

namespace ew::bench {

using json = nlohmann::json;

enum class Kind { Certify, Contraction, Mlsi, Mix, Scale, Exchange, Walk };

std::string_view to_string(Kind kind);
Kind kind_from_string(const std::string& name);

struct ExperimentConfig {
  Kind kind = Kind::Certify;
  json input;   // path (already resolved), generator spec, or inline object
  json params = json::object();
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
};

/// Validates a parsed config; relative paths resolve against `base_dir`.
/// A missing seed is a ConfigParseError: runs never draw ambient entropy.
ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override = {});
ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});

using Cell = std::variant<double, std::int64_t, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Tidy CSV: a "# columns: ..." comment line, a header, then one row per observation.
void write_csv(const std::filesystem::path& path, const Table& table);

struct RunReport {
  json config;               // echo
  std::string content_hash;  // git blob hash of the canonical config + inputs
  json summary;
  std::vector<Table> tables;
  Table plot;                // tidy plotting table
  std::optional<json> witness;
  bool falsified = false;
  double seconds = 0.0;
  std::filesystem::path directory;  // set once written
};

/// Runs the experiment without touching the filesystem (beyond reading inputs).
RunReport execute(const ExperimentConfig& config);
/// execute + write manifest.json, summary.json, CSV tables (and witness.json on
/// falsification) under output_dir/<timestamp>-<hash>/.
RunReport run(const ExperimentConfig& config);

/// Writes the plot table as <dir>/plot_<name>.csv; header-only when empty.
std::filesystem::path emit_plotdata(const RunReport& report, const std::filesystem::path& dir);

/// sha1("blob <len>\0" + content) as 40 hex digits.
std::string git_blob_hash(const std::string& content);

struct ScaleRow {
  int n = 0;
  double delta = 0.0;
  double gap = 0.0;          // exact, NaN beyond the exact cap
  double tmix = 0.0;         // exact worst-start t_mix(1/4), NaN beyond the cap
  double mlsi_lower = 0.0;   // (1 - ||J||_OP) / n
  double steps = 0.0;        // steps used for the empirical column
  double empirical_tv = 0.0; // TV of the magnetization law after `steps` steps from all +1
};

struct ScaleStudy {
  std::vector<ScaleRow> rows;
  double gap_exponent = 0.0;   // least squares gap ~ n^a over exact rows
  double tmix_exponent = 0.0;  // least squares tmix ~ n^b log n over exact rows
};

struct ScaleOptions {
  double epsilon = 0.25;
  int exact_cap = 14;
  std::size_t runs = 2000;
};

/// Curie-Weiss scaling study over `sizes` at fixed delta.
ScaleStudy scale_study(const std::string& generator, const std::vector<int>& sizes, double delta,
                       std::uint64_t seed, const ScaleOptions& options = {});

}  // namespace ew::bench
