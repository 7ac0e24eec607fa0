#include "entropywalks/runner.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>

#include "entropywalks/error.hpp"
#include "entropywalks/parallel.hpp"

namespace ew::bench {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Loaded {
  std::optional<SubsetDensity> sets;
  std::optional<SpinDensity> spins;
  std::optional<IsingModel> ising;
  json canonical;
};

template <typename T>
T param(const json& params, const char* key, T fallback) {
  if (!params.contains(key)) return fallback;
  try {
    return params.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigParseError, std::string("bad parameter \"") + key + "\": " + e.what());
  }
}

std::vector<double> scalar_or_list(const json& params, const char* key, std::vector<double> fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (v.is_number()) return {v.get<double>()};
  return param<std::vector<double>>(params, key, fallback);
}

void classify(const json& j, Loaded& out) {
  if (!j.is_object()) fail(ErrorCode::ConfigParseError, "input must be an object or a path");
  if (j.contains("J")) {
    out.ising = io::ising_from_json(j);
  } else if (j.contains("m")) {
    out.spins = io::spin_density_from_json(j);
    out.sets = homogenize(*out.spins);
  } else {
    out.sets = io::density_from_json(j);
  }
}

Loaded load_input(const json& input) {
  Loaded out;
  if (input.is_string()) {
    out.canonical = io::read_json_file(input.get<std::string>());
    classify(out.canonical, out);
    return out;
  }
  if (input.is_object() && input.contains("generator")) {
    out.canonical = input;
    const auto gen = param<std::string>(input, "generator", "");
    if (gen == "uniform") {
      out.sets = SubsetDensity::uniform(param<int>(input, "n", 0), param<int>(input, "k", 0));
    } else if (gen == "r_fold") {
      if (!input.contains("base")) fail(ErrorCode::ConfigParseError, "r_fold needs a base");
      auto base = load_input(input.at("base"));
      if (!base.sets) fail(ErrorCode::ConfigParseError, "r_fold base must be a set distribution");
      out.sets = r_fold(*base.sets, param<int>(input, "r", 2));
      out.canonical["base"] = base.canonical;
    } else if (gen == "curie_weiss") {
      const int n = param<int>(input, "n", 0);
      std::optional<Eigen::VectorXd> h;
      if (input.contains("h")) {
        const auto v = param<std::vector<double>>(input, "h", {});
        h = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      out.ising = IsingModel::curie_weiss(n, param<double>(input, "delta", 0.5), h);
    } else if (gen == "rank_one") {
      const auto u = param<std::vector<double>>(input, "u", {});
      auto h = param<std::vector<double>>(input, "h", std::vector<double>(u.size(), 0.0));
      out.ising = IsingModel::make_rank_one(Eigen::Map<const Eigen::VectorXd>(u.data(), u.size()),
                                            Eigen::Map<const Eigen::VectorXd>(h.data(), h.size()));
    } else {
      fail(ErrorCode::ConfigParseError, "unknown generator \"" + gen + "\"");
    }
    return out;
  }
  out.canonical = input;
  classify(input, out);
  return out;
}

json resolve_paths(json input, const fs::path& base) {
  if (input.is_string()) {
    fs::path p = input.get<std::string>();
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) fail(ErrorCode::InputNotFound, "input not found: " + p.string());
    return fs::weakly_canonical(p).string();
  }
  if (input.is_object() && input.contains("base")) input["base"] = resolve_paths(input["base"], base);
  return input;
}

const SubsetDensity& need_sets(const Loaded& in, const char* kind) {
  if (!in.sets) fail(ErrorCode::InvalidArgument, std::string(kind) + " needs a set or spin distribution");
  return *in.sets;
}

const IsingModel& need_ising(const Loaded& in, const char* kind) {
  if (!in.ising) fail(ErrorCode::InvalidArgument, std::string(kind) + " needs an Ising model");
  return *in.ising;
}

Mask start_from(const json& params, const Loaded& in) {
  if (in.ising) {
    const int n = in.ising->size();
    if (!params.contains("start")) return low_bits(n);
    const auto spins = param<std::vector<int>>(params, "start", {});
    if (static_cast<int>(spins.size()) != n) fail(ErrorCode::InvalidStart, "start must list n spins");
    Mask m = 0;
    for (int i = 0; i < n; ++i) {
      if (spins[i] != 1 && spins[i] != -1) fail(ErrorCode::InvalidStart, "spins must be +1 or -1");
      if (spins[i] == 1) m |= Mask{1} << i;
    }
    return m;
  }
  const auto& mu = *in.sets;
  if (!params.contains("start")) return mu.entries().front().set;
  const auto elems = param<std::vector<int>>(params, "start", {});
  return mask_from_elements(elems);
}

int verdict_rank(Verdict v) {
  switch (v) {
    case Verdict::CertifiedExact: return 0;
    case Verdict::EvidenceSampled: return 1;
    case Verdict::Falsified: return 2;
  }
  return 2;
}

void merge_verdict(RunReport& r, const Certificate& c) {
  const auto current = r.summary.value("verdict", std::string("certified-exact"));
  int rank = 0;
  for (auto v : {Verdict::CertifiedExact, Verdict::EvidenceSampled, Verdict::Falsified})
    if (to_string(v) == current) rank = verdict_rank(v);
  if (verdict_rank(c.verdict) >= rank) r.summary["verdict"] = std::string(to_string(c.verdict));
  if (c.falsified() && !r.witness) {
    r.falsified = true;
    r.witness = io::to_json(c);
  }
}

void run_certify(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& p = cfg.params;
  Table t{"certify", {"alpha", "property", "verdict", "margin", "samples"}, {}};
  r.plot = {"certify", {"alpha", "verdict", "margin"}, {}};
  r.summary["verdict"] = "certified-exact";
  auto record = [&](double alpha, const Certificate& c) {
    const std::string verdict(to_string(c.verdict));
    t.rows.push_back({alpha, std::string(to_string(c.property)), verdict, c.margin,
                      static_cast<std::int64_t>(c.samples)});
    r.plot.rows.push_back({alpha, verdict, c.margin});
    merge_verdict(r, c);
  };

  if (in.ising) {
    const auto& model = *in.ising;
    const auto property = param<std::string>(p, "property", "flc");
    const auto shifts = param<std::size_t>(p, "shifts", 200);
    if (property == "dobrushin") {
      const auto r_mat = dobrushin_matrix(spin_law(model));
      const auto w = param<std::vector<double>>(p, "weights", std::vector<double>(model.size(), 1.0));
      const auto c = weighted_contraction_check(r_mat, w, param<double>(p, "target_eps", 0.0));
      record(kNaN, c);
    } else if (property == "flc" && model.is_rank_one() && !p.contains("alpha")) {
      const auto& u = model.rank_one_u();
      const auto rep = rank_one_flc_certify(u, model.field(), shifts, cfg.seed, param<bool>(p, "force", false));
      record(kNaN, rep.certificate);
      r.summary["ineq_margin"] = rep.ineq_margin;
      r.summary["max_hessian_eigenvalue"] = rep.max_hessian_eigenvalue;
      r.summary["alpha_profile"] = rep.certificate.alpha;
    } else if (property == "flc") {
      for (double a : scalar_or_list(p, "alpha", {1.0}))
        record(a, flc_check(model, AlphaVector::uniform(a), shifts, cfg.seed, param<bool>(p, "structural", false)));
    } else {
      fail(ErrorCode::ConfigParseError, "unknown Ising certify property \"" + property + "\"");
    }
  } else {
    const auto& mu = need_sets(in, "certify");
    const auto property = param<std::string>(p, "property", "entropic");
    for (double a : scalar_or_list(p, "alpha", {1.0})) {
      if (property == "entropic") {
        CertifyOptions o;
        o.mode = param<std::string>(p, "mode", "exact-dual") == "sampled" ? CertifyMode::Sampled : CertifyMode::ExactDual;
        o.all_links = param<bool>(p, "all_links", false);
        o.mesh = param<std::size_t>(p, "mesh", o.mesh);
        o.tangent_samples = param<std::size_t>(p, "tangent_samples", o.tangent_samples);
        o.seed = cfg.seed;
        record(a, entropic_independence_certify(mu, a, o));
      } else if (property == "tangent") {
        const auto pts = tangent_points(mu, param<std::size_t>(p, "tangent_samples", 1000), cfg.seed);
        auto c = tangent_check(mu, a, pts);
        c.seed = cfg.seed;
        record(a, c);
      } else if (property == "flc") {
        FlcOptions o;
        o.samples = param<std::size_t>(p, "samples", o.samples);
        o.structural = param<bool>(p, "structural", false);
        o.seed = cfg.seed;
        record(a, flc_check(mu, AlphaVector::uniform(a), o));
      } else {
        fail(ErrorCode::ConfigParseError, "unknown certify property \"" + property + "\"");
      }
    }
  }
  r.tables.push_back(std::move(t));
}

void run_contraction(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& p = cfg.params;
  r.plot = {"contraction", {"alpha", "ell", "measured", "kappa", "margin"}, {}};
  if (in.ising) {
    const auto& model = need_ising(in, "contraction");
    if (!model.is_rank_one()) fail(ErrorCode::InvalidArgument, "Ising contraction checks need a rank-one model");
    const auto rep = rank_one_contraction_check(model.rank_one_u(), model.field(), param<std::size_t>(p, "trials", 200),
                                                cfg.seed);
    r.tables.push_back({"contraction",
                        {"n", "norm_u_sq", "bound", "worst_factor", "down_margin", "processing_margin",
                         "marginal_margin"},
                        {{static_cast<std::int64_t>(model.size()), model.rank_one_u().squaredNorm(), rep.bound,
                          rep.worst_factor, rep.down_margin, rep.processing_margin, rep.marginal_margin}}});
    r.plot.rows.push_back({kNaN, static_cast<std::int64_t>(model.size() - 1), rep.worst_factor, rep.bound,
                           rep.bound - rep.worst_factor});
    r.summary["report"] = io::to_json(rep);
    r.summary["verified"] = rep.holds;
    if (!rep.holds) {
      r.falsified = true;
      r.witness = io::to_json(rep);
    }
    return;
  }
  const auto& mu = need_sets(in, "contraction");
  const int k = mu.arity();
  std::vector<int> ells;
  if (p.contains("ell")) {
    const auto& v = p.at("ell");
    ells = v.is_number() ? std::vector<int>{v.get<int>()} : param<std::vector<int>>(p, "ell", {});
  } else {
    for (int l = 1; l < k; ++l) ells.push_back(l);
  }
  const auto alphas = scalar_or_list(p, "alpha", {kNaN});
  Table t{"contraction", {"alpha", "ell", "measured", "kappa", "margin", "trials"}, {}};
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  json witnesses = json::array();
  for (int ell : ells) {
    ContractionOptions o;
    o.trials = param<int>(p, "trials", o.trials);
    o.seed = split_seed(cfg.seed, static_cast<std::uint64_t>(ell));
    const auto rep = contraction_coefficient(mu, ell, o);
    for (double a : alphas) {
      double kappa = kNaN;
      if (std::isfinite(a) && ell <= k - static_cast<int>(std::ceil(1.0 / a - 1e-12)))
        kappa = kappa_closed_form(k, ell, a).telescoped;
      const double margin = 1.0 - kappa - rep.coefficient;  // bound is 1 - kappa
      t.rows.push_back({a, static_cast<std::int64_t>(ell), rep.coefficient, kappa, margin,
                        static_cast<std::int64_t>(rep.trials)});
      r.plot.rows.push_back({a, static_cast<std::int64_t>(ell), rep.coefficient, kappa, margin});
      if (std::isfinite(margin)) {
        worst = std::min(worst, margin);
        if (margin < -1e-8 && ok) {
          ok = false;
          r.witness = io::to_json(rep);
          (*r.witness)["alpha"] = a;
          (*r.witness)["ell"] = ell;
        }
      }
    }
  }
  r.tables.push_back(std::move(t));
  r.summary["verified"] = ok;
  r.summary["worst_margin"] = std::isfinite(worst) ? json(worst) : json(nullptr);
  r.falsified = !ok;
}

void run_mlsi(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& p = cfg.params;
  MlsiOptions o;
  o.starts = param<int>(p, "starts", o.starts);
  o.iterations = param<int>(p, "iterations", o.iterations);
  o.contraction_trials = param<int>(p, "trials", o.contraction_trials);
  o.seed = cfg.seed;
  r.plot = {"mlsi", {"upper", "lower", "bound"}, {}};
  double bound = kNaN;
  std::optional<TransitionKernel> kernel;
  if (in.ising) {
    const auto& model = *in.ising;
    kernel = glauber_kernel(model);
    const double op = psd_shift(model).op_norm();
    bound = (1.0 - op) / model.size();
    r.summary["op_norm"] = op;
  } else {
    const auto& mu = need_sets(in, "mlsi");
    const int ell = param<int>(p, "ell", mu.arity() - 1);
    const auto level = param<std::string>(p, "level", "k") == "ell" ? WalkLevel::EllLevel : WalkLevel::KLevel;
    kernel = down_up_kernel(mu, ell, level);
  }
  const auto est = mlsi_estimate(*kernel, o);
  r.tables.push_back({"mlsi", {"upper", "lower", "contraction", "bound"}, {{est.upper, est.lower, est.contraction, bound}}});
  r.plot.rows.push_back({est.upper, est.lower, bound});
  r.summary["estimate"] = io::to_json(est, cfg.seed, o.contraction_trials);
  bool ok = est.lower <= est.upper + 1e-12;
  if (std::isfinite(bound) && bound > 0.0) ok = ok && est.upper >= bound - 1e-8;
  r.summary["verified"] = ok;
  if (!ok) {
    r.falsified = true;
    r.witness = r.summary["estimate"];
  }
}

void run_mix(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& p = cfg.params;
  const double eps = param<double>(p, "epsilon", 0.25);
  std::optional<TransitionKernel> kernel;
  if (in.ising) {
    kernel = glauber_kernel(*in.ising);
  } else {
    const auto& mu = need_sets(in, "mix");
    const auto level = param<std::string>(p, "level", "k") == "ell" ? WalkLevel::EllLevel : WalkLevel::KLevel;
    kernel = down_up_kernel(mu, param<int>(p, "ell", mu.arity() - 1), level);
  }
  std::vector<Mask> starts;
  if (p.contains("starts") && p.at("starts").is_array()) {
    for (const auto& s : p.at("starts")) {
      json one = json::object();
      one["start"] = s;
      starts.push_back(start_from(one, in));
    }
  } else {
    starts.assign(kernel->row_states().begin(), kernel->row_states().end());
  }
  if (!is_ergodic(*kernel)) fail(ErrorCode::NotErgodic, "kernel is not irreducible and aperiodic");
  std::vector<std::size_t> times(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { times[i] = mixing_time(*kernel, starts[i], eps); });
  Table t{"mix", {"start", "tmix"}, {}};
  r.plot = {"mix", {"start", "tmix"}, {}};
  std::size_t worst = 0;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    t.rows.push_back({io::hex_mask(starts[i]), static_cast<std::int64_t>(times[i])});
    r.plot.rows.push_back({io::hex_mask(starts[i]), static_cast<std::int64_t>(times[i])});
    worst = std::max(worst, times[i]);
  }
  r.tables.push_back(std::move(t));
  r.summary["epsilon"] = eps;
  r.summary["tmix_worst"] = worst;
  double rho0 = param<double>(p, "rho0", kNaN);
  if (!std::isfinite(rho0) && kernel->num_rows() <= 4096 && kernel->is_reversible()) {
    MlsiOptions o;
    o.seed = cfg.seed;
    rho0 = mlsi_estimate(*kernel, o).lower;
  }
  if (std::isfinite(rho0) && rho0 > 0.0) {
    r.summary["rho0"] = rho0;
    r.summary["mlsi_bound"] = mlsi_mixing_bound(rho0, kernel->stationary(), eps);
  }
  r.summary["verified"] = true;
}

void run_scale(const ExperimentConfig& cfg, RunReport& r) {
  const auto& p = cfg.params;
  ScaleOptions o;
  o.epsilon = param<double>(p, "epsilon", o.epsilon);
  o.exact_cap = param<int>(p, "exact_cap", o.exact_cap);
  o.runs = param<std::size_t>(p, "runs", o.runs);
  const auto gen = cfg.input.is_object() ? param<std::string>(cfg.input, "generator", "curie_weiss") : "curie_weiss";
  const double delta = param<double>(p, "delta", cfg.input.is_object() ? param<double>(cfg.input, "delta", 0.5) : 0.5);
  const auto study = scale_study(gen, param<std::vector<int>>(p, "sizes", {}), delta, cfg.seed, o);
  Table t{"scale", {"n", "delta", "gap", "tmix_exact", "mlsi_lower", "steps", "empirical_tv"}, {}};
  r.plot = {"scale", {"n", "delta", "gap", "tmix", "bound"}, {}};
  json gap_band = json::array(), tmix_band = json::array();
  for (const auto& row : study.rows) {
    t.rows.push_back({static_cast<std::int64_t>(row.n), row.delta, row.gap, row.tmix, row.mlsi_lower, row.steps,
                      row.empirical_tv});
    r.plot.rows.push_back({static_cast<std::int64_t>(row.n), row.delta, row.gap, row.tmix, row.mlsi_lower});
    if (std::isfinite(row.gap)) {
      gap_band.push_back(row.gap * row.n / row.delta);
      tmix_band.push_back(row.tmix / (row.n * std::log(row.n) / row.delta));
    }
  }
  r.tables.push_back(std::move(t));
  r.summary["gap_exponent"] = study.gap_exponent;
  r.summary["tmix_exponent"] = study.tmix_exponent;
  r.summary["gap_n_over_delta"] = gap_band;
  r.summary["tmix_over_nlogn_delta"] = tmix_band;
  r.summary["verified"] = true;
}

void run_exchange(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& model = need_ising(in, "exchange");
  const auto& p = cfg.params;
  std::optional<std::size_t> pairs;
  if (p.contains("pairs") && p.at("pairs").is_number()) pairs = p.at("pairs").get<std::size_t>();
  const auto rep = exchange_check(model, pairs, cfg.seed);
  r.tables.push_back({"exchange",
                      {"n", "op_norm", "max_log_ratio", "log_bound", "loose_log_bound", "pairs"},
                      {{static_cast<std::int64_t>(model.size()), model.op_norm(), rep.max_log_ratio, rep.log_bound,
                        rep.loose_log_bound, static_cast<std::int64_t>(rep.pairs)}}});
  r.plot = {"exchange", {"n", "max_log_ratio", "log_bound"},
            {{static_cast<std::int64_t>(model.size()), rep.max_log_ratio, rep.log_bound}}};
  r.summary["report"] = io::to_json(rep);
  // The explicit bound is only claimed for ||J||_OP <= 1.
  const bool applies = model.op_norm() <= 1.0 + 1e-12;
  r.summary["verified"] = rep.holds || !applies;
  if (!rep.holds && applies) {
    r.falsified = true;
    r.witness = io::to_json(rep);
  }
}

void run_walk(const ExperimentConfig& cfg, const Loaded& in, RunReport& r) {
  const auto& p = cfg.params;
  const auto steps = param<std::size_t>(p, "steps", 100);
  const Mask start = start_from(p, in);
  Trajectory traj;
  std::function<double(Mask)> energy;
  if (in.ising) {
    traj = simulate_walk(*in.ising, start, steps, cfg.seed);
    energy = [&](Mask m) { return -in.ising->log_weight(m); };
  } else {
    const auto& mu = *in.sets;
    traj = simulate_walk(mu, param<int>(p, "ell", mu.arity() - 1), start, steps, cfg.seed,
                         param<int>(p, "move_budget", kDefaultMoveBudget));
    energy = [&](Mask m) { return -std::log(mu.weight(m)); };
  }
  Table t{"trajectory", {"step", "state", "energy"}, {}};
  r.plot = {"walk", {"step", "state"}, {}};
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    t.rows.push_back({static_cast<std::int64_t>(i), io::hex_mask(traj.states[i]), energy(traj.states[i])});
    r.plot.rows.push_back({static_cast<std::int64_t>(i), io::hex_mask(traj.states[i])});
  }
  r.tables.push_back(std::move(t));
  r.summary["steps"] = traj.step_count;
  r.summary["final_state"] = io::hex_mask(traj.states.back());
  r.summary["verified"] = true;
}

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "nan";
    if (std::isinf(*d)) return *d > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

json config_echo(const ExperimentConfig& cfg) {
  return {{"kind", std::string(to_string(cfg.kind))},
          {"input", cfg.input},
          {"params", cfg.params},
          {"seed", cfg.seed},
          {"output_dir", cfg.output_dir.string()}};
}

// Least squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const auto m = static_cast<double>(x.size());
  if (x.size() < 2) return kNaN;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// Law of the number of +1 spins for Curie-Weiss without field.
std::vector<double> magnetization_law(int n, double delta) {
  std::vector<double> lw(n + 1);
  const double c = (1.0 - delta) / (2.0 * n);
  double top = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n; ++j) {
    const double m = 2.0 * j - n;
    lw[j] = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) + c * m * m;
    top = std::max(top, lw[j]);
  }
  double z = 0.0;
  for (auto& v : lw) z += (v = std::exp(v - top));
  for (auto& v : lw) v /= z;
  return lw;
}

}  // namespace

std::string_view to_string(Kind kind) {
  switch (kind) {
    case Kind::Certify: return "certify";
    case Kind::Contraction: return "contraction";
    case Kind::Mlsi: return "mlsi";
    case Kind::Mix: return "mix";
    case Kind::Scale: return "scale";
    case Kind::Exchange: return "exchange";
    case Kind::Walk: return "walk";
  }
  return "?";
}

Kind kind_from_string(const std::string& name) {
  for (auto k : {Kind::Certify, Kind::Contraction, Kind::Mlsi, Kind::Mix, Kind::Scale, Kind::Exchange, Kind::Walk})
    if (to_string(k) == name) return k;
  fail(ErrorCode::ConfigParseError, "unknown experiment kind \"" + name + "\"");
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir, std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) fail(ErrorCode::ConfigParseError, "config must be a JSON object");
  ExperimentConfig cfg;
  cfg.kind = kind_from_string(param<std::string>(j, "kind", ""));
  if (seed_override) {
    cfg.seed = *seed_override;
  } else {
    if (!j.contains("seed") || !j.at("seed").is_number_integer())
      fail(ErrorCode::ConfigParseError, "config needs an integer \"seed\"");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("input")) cfg.input = resolve_paths(j.at("input"), base_dir);
  if (j.contains("params")) {
    if (!j.at("params").is_object()) fail(ErrorCode::ConfigParseError, "\"params\" must be an object");
    cfg.params = j.at("params");
  }
  fs::path out = param<std::string>(j, "output_dir", "out");
  cfg.output_dir = out.is_relative() ? base_dir / out : out;
  if (cfg.kind != Kind::Scale && cfg.input.is_null()) fail(ErrorCode::ConfigParseError, "config needs an \"input\"");
  return cfg;
}

ExperimentConfig load_config(const fs::path& path, std::optional<std::uint64_t> seed_override) {
  const auto j = io::read_json_file(path);
  return parse_config(j, fs::absolute(path).parent_path(), seed_override);
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr))
    fail(ErrorCode::NumericalBreakdown, "sha1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void write_csv(const fs::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::InputNotFound, "cannot write " + path.string());
  out << "# columns: " << join(table.columns, ", ") << '\n';
  out << join(table.columns, ",") << '\n';
  for (const auto& row : table.rows) {
    std::vector<std::string> cells;
    for (const auto& c : row) cells.push_back(format_cell(c));
    out << join(cells, ",") << '\n';
  }
}

RunReport execute(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport r;
  r.config = config_echo(cfg);
  Loaded in;
  if (cfg.kind != Kind::Scale) in = load_input(cfg.input);
  json hashed{{"kind", r.config["kind"]}, {"params", cfg.params}, {"seed", cfg.seed}, {"input", in.canonical}};
  r.content_hash = git_blob_hash(hashed.dump());
  r.summary = {{"kind", r.config["kind"]}, {"seed", cfg.seed}, {"content_hash", r.content_hash}};
  try {
    switch (cfg.kind) {
      case Kind::Certify: run_certify(cfg, in, r); break;
      case Kind::Contraction: run_contraction(cfg, in, r); break;
      case Kind::Mlsi: run_mlsi(cfg, in, r); break;
      case Kind::Mix: run_mix(cfg, in, r); break;
      case Kind::Scale: run_scale(cfg, r); break;
      case Kind::Exchange: run_exchange(cfg, in, r); break;
      case Kind::Walk: run_walk(cfg, in, r); break;
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string(to_string(cfg.kind)) + ": " + e.detail());
  }
  r.summary["falsified"] = r.falsified;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

RunReport run(const ExperimentConfig& cfg) {
  auto r = execute(cfg);
  fs::path dir = cfg.output_dir / (utc_stamp() + "-" + r.content_hash.substr(0, 12));
  for (int bump = 1; fs::exists(dir); ++bump)
    dir = cfg.output_dir / (utc_stamp() + "-" + r.content_hash.substr(0, 12) + "-" + std::to_string(bump));
  fs::create_directories(dir);
  r.directory = dir;
  json files = json::array();
  for (const auto& t : r.tables) {
    write_csv(dir / (t.name + ".csv"), t);
    files.push_back(t.name + ".csv");
  }
  io::write_json_file(dir / "summary.json", r.summary);
  files.push_back("summary.json");
  if (r.witness) {
    io::write_json_file(dir / "witness.json", *r.witness);
    files.push_back("witness.json");
  }
  io::write_json_file(dir / "manifest.json", {{"config", r.config},
                                              {"content_hash", r.content_hash},
                                              {"files", files},
                                              {"threads", thread_count()},
                                              {"timings", {{"wall_seconds", r.seconds}}}});
  return r;
}

fs::path emit_plotdata(const RunReport& report, const fs::path& dir) {
  const auto name = report.plot.name.empty() ? std::string("empty") : report.plot.name;
  const auto path = dir / ("plot_" + name + ".csv");
  write_csv(path, report.plot);
  return path;
}

ScaleStudy scale_study(const std::string& generator, const std::vector<int>& sizes, double delta, std::uint64_t seed,
                       const ScaleOptions& options) {
  if (generator != "curie_weiss") fail(ErrorCode::InvalidArgument, "scale study supports the curie_weiss generator");
  ScaleStudy study;
  std::vector<double> ln, lgap, ltmix;
  for (int n : sizes) {
    const auto model = IsingModel::curie_weiss(n, delta);
    ScaleRow row;
    row.n = n;
    row.delta = delta;
    row.mlsi_lower = (1.0 - model.op_norm()) / n;
    row.gap = row.tmix = kNaN;
    if (n <= options.exact_cap) {
      const auto kernel = glauber_kernel(model, options.exact_cap);
      row.gap = spectral_gap(kernel);
      // Exchangeable spins: one start per magnetization class suffices.
      std::vector<Mask> starts;
      for (int j = 0; j <= n; ++j) starts.push_back(low_bits(j));
      row.tmix = static_cast<double>(worst_mixing_time(kernel, starts, options.epsilon));
      ln.push_back(std::log(n));
      lgap.push_back(std::log(row.gap));
      ltmix.push_back(std::log(row.tmix / std::log(n)));
    }
    row.steps = std::isfinite(row.tmix) ? row.tmix : std::ceil(n * std::log(n) / delta);
    if (options.runs > 0) {
      const auto steps = static_cast<std::size_t>(row.steps);
      std::vector<int> plus(options.runs);
      const std::uint64_t stream = split_seed(seed, static_cast<std::uint64_t>(n));
      parallel_for(options.runs, [&](std::size_t run) {
        GlauberSampler s(model, std::vector<std::int8_t>(n, 1), split_seed(stream, run));
        s.advance(steps);
        plus[run] = static_cast<int>(std::count(s.spins().begin(), s.spins().end(), std::int8_t{1}));
      });
      std::vector<double> hist(n + 1, 0.0);
      for (int c : plus) hist[c] += 1.0 / options.runs;
      const auto exact = magnetization_law(n, delta);
      double tv = 0.0;
      for (int j = 0; j <= n; ++j) tv += 0.5 * std::abs(hist[j] - exact[j]);
      row.empirical_tv = tv;
    } else {
      row.empirical_tv = kNaN;
    }
    study.rows.push_back(row);
  }
  study.gap_exponent = slope(ln, lgap);
  study.tmix_exponent = slope(ln, ltmix);
  return study;
}

}  // namespace ew::bench
