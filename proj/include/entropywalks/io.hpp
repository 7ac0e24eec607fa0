#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "entropywalks/certify.hpp"
#include "entropywalks/divergence.hpp"
#include "entropywalks/ising.hpp"
#include "entropywalks/ising_checks.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/subset_density.hpp"
#include "entropywalks/walk.hpp"

namespace ew::io {

using json = nlohmann::json;

/// Parses JSON text; syntax errors become ConfigParseError with line and column.
json parse_json(const std::string& text, const std::string& origin = "<input>");
/// InputNotFound when the file is missing.
json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

// {"n", "k", "entries": [{"set": [...], "w"}]}
SubsetDensity density_from_json(const json& j);
json to_json(const SubsetDensity& mu);

// {"m", "entries": [{"sigma": [+1/-1, ...], "w"}]}
SpinDensity spin_density_from_json(const json& j);
json to_json(const SpinDensity& density);

using Distribution = std::variant<SubsetDensity, SpinDensity>;
/// Either distribution format, told apart by the "m" key.
Distribution distribution_from_json(const json& j);

// {"n", "J": [[...]] or {"u": [...]}, "h": [...]}
IsingModel ising_from_json(const json& j);
json to_json(const IsingModel& model);

/// State list and dense row-major matrix; small kernels only.
json to_json(const TransitionKernel& kernel, std::size_t max_states = 4096);

json to_json(const Certificate& cert);
json to_json(const ContractionReport& report);
json to_json(const MlsiEstimate& estimate, std::uint64_t seed, int trials);
json to_json(const RankOneFlcReport& report);
json to_json(const RankOneContractionReport& report);
json to_json(const ExchangeReport& report);

/// CSV with columns step,state[,energy]; states as hex bitmasks.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory,
                          const std::function<double(Mask)>& energy = {});

std::string hex_mask(Mask m);

}  // namespace ew::io
