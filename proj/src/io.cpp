#include "entropywalks/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "entropywalks/error.hpp"

namespace ew::io {

namespace {

// JSON has no inf/nan; encode them as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::ConfigParseError, std::string("missing key \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigParseError, std::string("bad value for \"") + key + "\": " + e.what());
  }
}

Eigen::VectorXd vector_field(const json& j, const char* key) {
  const auto v = get_field<std::vector<double>>(j, key);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> 1-based line and column.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    fail(ErrorCode::ConfigParseError,
         origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::InputNotFound, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path.string());
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InputNotFound, "cannot write " + path.string());
  out << value.dump(2) << '\n';
}

SubsetDensity density_from_json(const json& j) {
  const int n = get_field<int>(j, "n");
  const int k = get_field<int>(j, "k");
  std::vector<std::pair<std::vector<int>, double>> entries;
  for (const auto& e : get_field<json>(j, "entries"))
    entries.emplace_back(get_field<std::vector<int>>(e, "set"), get_field<double>(e, "w"));
  return SubsetDensity::make(n, k, entries);
}

json to_json(const SubsetDensity& mu) {
  json entries = json::array();
  for (const auto& e : mu.entries()) entries.push_back({{"set", elements_of(e.set)}, {"w", e.weight}});
  return {{"n", mu.ground_size()}, {"k", mu.arity()}, {"entries", entries}};
}

SpinDensity spin_density_from_json(const json& j) {
  const int m = get_field<int>(j, "m");
  std::vector<std::pair<std::vector<int>, double>> entries;
  for (const auto& e : get_field<json>(j, "entries"))
    entries.emplace_back(get_field<std::vector<int>>(e, "sigma"), get_field<double>(e, "w"));
  return SpinDensity::make(m, entries);
}

json to_json(const SpinDensity& density) {
  const int m = density.num_spins();
  json entries = json::array();
  for (const auto& e : density.entries()) {
    std::vector<int> sigma(m);
    for (int i = 0; i < m; ++i) sigma[i] = (e.spins >> i & 1) ? 1 : -1;
    entries.push_back({{"sigma", sigma}, {"w", e.weight}});
  }
  return {{"m", m}, {"entries", entries}};
}

Distribution distribution_from_json(const json& j) {
  if (j.is_object() && j.contains("m")) return spin_density_from_json(j);
  return density_from_json(j);
}

IsingModel ising_from_json(const json& j) {
  const int n = get_field<int>(j, "n");
  Eigen::VectorXd h = j.contains("h") ? vector_field(j, "h") : Eigen::VectorXd::Zero(n);
  if (h.size() != n) fail(ErrorCode::DimensionMismatch, "h must have n entries");
  const auto& jj = get_field<json>(j, "J");
  if (jj.is_object()) {
    const auto u = vector_field(jj, "u");
    if (u.size() != n) fail(ErrorCode::DimensionMismatch, "u must have n entries");
    return IsingModel::make_rank_one(u, h);
  }
  const auto rows = get_field<std::vector<std::vector<double>>>(j, "J");
  if (static_cast<int>(rows.size()) != n) fail(ErrorCode::DimensionMismatch, "J must be n x n");
  Eigen::MatrixXd big(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n) fail(ErrorCode::DimensionMismatch, "J must be n x n");
    for (int c = 0; c < n; ++c) big(i, c) = rows[i][c];
  }
  return IsingModel::make_ising(big, h);
}

json to_json(const IsingModel& model) {
  const int n = model.size();
  const auto& h = model.field();
  json j{{"n", n}, {"h", std::vector<double>(h.data(), h.data() + n)}};
  if (model.is_rank_one()) {
    const auto& u = model.rank_one_u();
    j["J"] = {{"u", std::vector<double>(u.data(), u.data() + n)}};
  } else {
    const auto big = model.interaction();
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
      std::vector<double> r(n);
      for (int c = 0; c < n; ++c) r[c] = big(i, c);
      rows.push_back(r);
    }
    j["J"] = rows;
  }
  return j;
}

json to_json(const TransitionKernel& kernel, std::size_t max_states) {
  if (kernel.num_rows() > max_states || kernel.num_cols() > max_states)
    fail(ErrorCode::StateSpaceTooLarge, "kernel too large to dump densely");
  const auto d = kernel.dense();
  std::vector<double> flat;
  flat.reserve(d.size());
  for (Eigen::Index r = 0; r < d.rows(); ++r)
    for (Eigen::Index c = 0; c < d.cols(); ++c) flat.push_back(d(r, c));
  std::vector<std::string> rows, cols;
  for (Mask m : kernel.row_states()) rows.push_back(hex_mask(m));
  for (Mask m : kernel.col_states()) cols.push_back(hex_mask(m));
  return {{"kind", kernel.kind() == StateKind::Spins ? "spins" : "subsets"},
          {"rows", rows},
          {"cols", cols},
          {"shape", {d.rows(), d.cols()}},
          {"matrix", numbers(flat)},
          {"stationary", numbers(kernel.stationary())},
          {"reversible", kernel.is_reversible()}};
}

json to_json(const Certificate& cert) {
  return {{"property", std::string(to_string(cert.property))},
          {"alpha", numbers(cert.alpha)},
          {"verdict", std::string(to_string(cert.verdict))},
          {"margin", number(cert.margin)},
          {"witness", numbers(cert.witness)},
          {"witness_kind", cert.witness_kind},
          {"samples", cert.samples},
          {"seed", cert.seed}};
}

json to_json(const ContractionReport& report) {
  return {{"coefficient", number(report.coefficient)},
          {"kappa_bound", number(report.kappa_bound)},
          {"witness", numbers(report.witness)},
          {"iterations", report.iterations},
          {"seed", report.seed},
          {"trials", report.trials}};
}

json to_json(const MlsiEstimate& estimate, std::uint64_t seed, int trials) {
  return {{"upper", number(estimate.upper)},
          {"lower", number(estimate.lower)},
          {"coefficient", number(estimate.contraction)},
          {"witness", numbers(estimate.witness_f)},
          {"seed", seed},
          {"trials", trials}};
}

json to_json(const RankOneFlcReport& report) {
  return {{"certificate", to_json(report.certificate)},
          {"max_hessian_eigenvalue", number(report.max_hessian_eigenvalue)},
          {"ineq_margin", number(report.ineq_margin)},
          {"shifts", report.shifts}};
}

json to_json(const RankOneContractionReport& report) {
  return {{"bound", number(report.bound)},
          {"worst_factor", number(report.worst_factor)},
          {"down_margin", number(report.down_margin)},
          {"processing_margin", number(report.processing_margin)},
          {"marginal_margin", number(report.marginal_margin)},
          {"trials", report.trials},
          {"seed", report.seed},
          {"holds", report.holds}};
}

json to_json(const ExchangeReport& report) {
  return {{"max_log_ratio", number(report.max_log_ratio)},
          {"log_bound", number(report.log_bound)},
          {"loose_log_bound", number(report.loose_log_bound)},
          {"pairs", report.pairs},
          {"witness", {{"sigma", hex_mask(report.witness[0])}, {"tau", hex_mask(report.witness[1])},
                       {"i", report.witness[2]}}},
          {"holds", report.holds}};
}

std::string hex_mask(Mask m) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(m));
  return buf;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory, const std::function<double(Mask)>& energy) {
  out << (energy ? "step,state,energy\n" : "step,state\n");
  char buf[32];
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    out << t << ',' << hex_mask(trajectory.states[t]);
    if (energy) {
      std::snprintf(buf, sizeof buf, "%.17g", energy(trajectory.states[t]));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace ew::io
