// rdp: command-line front end for region curves, the Gaussian closed form, coding
// simulations, soft-covering sweeps and maximal couplings.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdp/coding_sim.hpp"
#include "rdp/errors.hpp"
#include "rdp/gaussian_model.hpp"
#include "rdp/info_measures.hpp"
#include "rdp/pmf_json.hpp"
#include "rdp/region_solver.hpp"
#include "rdp/reports.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Global {
  std::uint64_t seed = 0;
  int workers = 0;
  std::string out_dir = ".";
  std::string format = "both";
};

struct RegionArgs {
  std::string source;
  std::vector<double> deltas;
  std::size_t v_size = 0;
  std::size_t starts = 32;
  double realism_tol = 1e-6;
};

struct GaussianArgs {
  double eta = 0.0;
  double delta = 0.0;
  std::size_t samples = 0;
  std::size_t shards = 16;
  std::size_t curve_points = 0;
};

struct SimulateArgs {
  std::string source;
  double delta = 0.0;
  std::size_t v_size = 0;
  std::vector<std::size_t> ns;
  double epsilon = 0.1;
  double rc = 0.0;
  std::size_t trials = 1000;
  bool correct = false;
  double delta_typ = 0.0;
};

struct SoftcoverArgs {
  std::vector<double> pv;
  std::string emit_file;
  double crossover = -1.0;
  std::vector<double> rates;
  std::vector<std::size_t> ns;
  std::size_t codebooks = 32;
};

struct CoupleArgs {
  std::string p_file, q_file;
};

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) rdp::throw_argument("cannot open " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    rdp::throw_argument(path + ": " + e.what());
  }
}

bool want_csv(const Global& g) { return g.format == "csv" || g.format == "both"; }
bool want_json(const Global& g) { return g.format == "json" || g.format == "both"; }

json header(const std::string& command, const Global& g, json config) {
  return json{{"tool", "rdp"}, {"version", rdp::kToolVersion}, {"command", command}, {"seed", g.seed}, {"config", config}};
}

void write_json(const fs::path& path, const json& j) { rdp::write_atomic(path, j.dump(2) + "\n"); }

// CSV files carry no metadata; it goes to <name>.meta.json next to them.
void write_csv(const Global& g, const std::string& name, const std::string& csv, const json& head,
               const json& flags) {
  const fs::path dir(g.out_dir);
  rdp::write_atomic(dir / (name + ".csv"), csv);
  json meta = head;
  meta["guard_flags"] = flags;
  write_json(dir / (name + ".meta.json"), meta);
}

void append_log(const Global& g, const std::string& command, double seconds) {
  std::ofstream log(fs::path(g.out_dir) / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[64];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
  log << stamp << " " << command << " seed=" << g.seed << " workers=" << omp_get_max_threads()
      << " seconds=" << seconds << "\n";
}

int run_region(const Global& g, const RegionArgs& a, bool ed) {
  const std::string cmd = ed ? "ed-region" : "region";
  const rdp::SourceSpec src = rdp::source_from_json(read_json_file(a.source));
  if (a.deltas.empty()) rdp::throw_argument("--delta: at least one value required");
  const std::size_t v = a.v_size ? a.v_size : rdp::default_v_size(src);
  rdp::SolverOptions opts;
  opts.starts = a.starts;
  opts.seed = g.seed;
  opts.realism_tol = a.realism_tol;
  const auto results = rdp::region_curve(src, a.deltas, ed ? rdp::RegionMode::ED : rdp::RegionMode::D, v, opts);

  json config{{"source", rdp::to_json(src)}, {"deltas", a.deltas}, {"v_size", v},
              {"starts", a.starts},          {"realism_tol", a.realism_tol}};
  json head = header(cmd, g, config);
  json flags = json::array();
  std::vector<rdp::CurveRow> rows;
  json points = json::array();
  for (const auto& r : results) {
    rows.push_back(rdp::curve_row(r));
    points.push_back(rdp::to_json(r));
    if (!r.feasible) flags.push_back("infeasible_delta_" + rdp::csv_number(r.delta));
  }
  flags.push_back("inner_bound_only");
  if (want_csv(g)) write_csv(g, cmd, rdp::format_curve(rows), head, flags);
  if (want_json(g)) {
    json j = head;
    j["guard_flags"] = flags;
    j["independent_distortion"] = rdp::independent_distortion(src);
    j["points"] = points;
    write_json(fs::path(g.out_dir) / (cmd + ".json"), j);
  }
  std::printf("%s: %zu points, v_size=%zu, rate range [%s, %s]\n", cmd.c_str(), rows.size(), v,
              rdp::csv_number(rows.back().rate).c_str(), rdp::csv_number(rows.front().rate).c_str());
  return 0;
}

int run_gaussian(const Global& g, const GaussianArgs& a) {
  namespace gs = rdp::gaussian;
  const gs::GaussianParams p = gs::make_params(a.eta, a.delta);
  const double rate = gs::min_rate(p);
  json config{{"eta", a.eta}, {"delta", a.delta}, {"samples", a.samples}, {"shards", a.shards},
              {"curve_points", a.curve_points}, {"normal_transform", std::string(rdp::kNormalTransform)}};
  json head = header("gaussian", g, config);
  json j = head;
  j["eta"] = p.eta;
  j["delta"] = p.delta;
  j["rho"] = p.rho;
  j["b"] = p.b;
  j["rate_bits"] = rate;
  const auto [az, av] = gs::cond_mean_coeffs(p.eta, p.b);
  j["alpha_z"] = az;
  j["alpha_v"] = av;
  json flags = json::array();
  if (a.samples > 0) {
    if (a.samples < 10000) rdp::throw_argument("--samples must be >= 10000 (or 0 to skip Monte Carlo)");
    const gs::McStats st = gs::mc_validate(p, a.samples, rdp::derive_seed(g.seed, "gaussian-mc"), a.shards);
    j["mc"] = rdp::to_json(st);
    for (const auto* e : {&st.mean_sq_err, &st.var_y, &st.mean_sq_cond, &st.cov_xz})
      if (e->flagged) flags.push_back("mc_estimate_beyond_5_se");
  } else {
    j["mc"] = nullptr;
  }
  j["guard_flags"] = flags;
  if (want_json(g)) write_json(fs::path(g.out_dir) / "gaussian.json", j);
  if (want_csv(g) && a.curve_points > 0) {
    std::string csv = "delta,rate_bits\n";
    const double hi = 2.0 - 2.0 * a.eta;
    for (std::size_t i = 1; i <= a.curve_points; ++i) {
      const double d = hi * static_cast<double>(i) / static_cast<double>(a.curve_points);
      csv += rdp::csv_number(d) + "," + rdp::csv_number(gs::min_rate(gs::make_params(a.eta, d))) + "\n";
    }
    write_csv(g, "gaussian_curve", csv, head, flags);
  }
  std::printf("gaussian: eta=%s delta=%s rho=%s b=%s rate_bits=%s\n", rdp::csv_number(p.eta).c_str(),
              rdp::csv_number(p.delta).c_str(), rdp::csv_number(p.rho).c_str(), rdp::csv_number(p.b).c_str(),
              rdp::csv_number(rate).c_str());
  return 0;
}

int run_simulate(const Global& g, const SimulateArgs& a) {
  const rdp::SourceSpec src = rdp::source_from_json(read_json_file(a.source));
  const std::size_t v = a.v_size ? a.v_size : rdp::default_v_size(src);
  if (a.ns.empty()) rdp::throw_argument("--n: at least one blocklength required");
  rdp::SolverOptions opts;
  opts.seed = g.seed;
  const rdp::SolveResult sol = rdp::min_rate(src, a.delta, v, opts);
  if (!sol.feasible || !sol.solution) {
    rdp::throw_numeric("simulate: no feasible point at delta " + rdp::csv_number(a.delta));
  }
  json config{{"source", rdp::to_json(src)}, {"delta", a.delta}, {"v_size", v},        {"n", a.ns},
              {"epsilon", a.epsilon},        {"rc", a.rc},       {"trials", a.trials}, {"correct_realism", a.correct},
              {"delta_typ", a.delta_typ}};
  json head = header("simulate", g, config);
  std::string csv =
      "n,rate_m,rate_mprime,rate_j,trials,avg_distortion,mprime_error_rate,tv_exact,tv_per_letter,seed\n";
  json reports = json::array();
  json flags = json::array();
  for (std::size_t n : a.ns) {
    const rdp::coding::RatePlan plan = rdp::coding::plan_rates(*sol.solution, n, a.epsilon, a.rc);
    rdp::coding::SimOptions so;
    so.trials = a.trials;
    so.seed = g.seed;
    so.correct_realism = a.correct;
    so.delta_typ = a.delta_typ;
    const rdp::coding::SimReport rep = rdp::coding::simulate(*sol.solution, src, plan, so);
    csv += std::to_string(n) + "," + rdp::csv_number(plan.rate_m) + "," + rdp::csv_number(plan.rate_mprime) + "," +
           rdp::csv_number(plan.rate_j) + "," + std::to_string(rep.trials) + "," +
           rdp::csv_number(rep.avg_distortion) + "," + rdp::csv_number(rep.mprime_error_rate) + "," +
           (rep.tv_exact ? rdp::csv_number(*rep.tv_exact) : std::string("")) + "," +
           rdp::csv_number(rep.tv_per_letter) + "," + std::to_string(g.seed) + "\n";
    reports.push_back(rdp::to_json(rep));
    for (const auto& f : rep.flags) flags.push_back("n=" + std::to_string(n) + ": " + f);
    std::printf("simulate: n=%zu distortion=%s mprime_error=%s tv_exact=%s\n", n,
                rdp::csv_number(rep.avg_distortion).c_str(), rdp::csv_number(rep.mprime_error_rate).c_str(),
                rep.tv_exact ? rdp::csv_number(*rep.tv_exact).c_str() : "skipped");
  }
  if (want_csv(g)) write_csv(g, "simulate", csv, head, flags);
  if (want_json(g)) {
    json j = head;
    j["guard_flags"] = flags;
    j["point"] = rdp::to_json(sol);
    j["reports"] = reports;
    write_json(fs::path(g.out_dir) / "simulate.json", j);
  }
  return 0;
}

int run_softcover(const Global& g, const SoftcoverArgs& a) {
  if (a.pv.empty()) rdp::throw_argument("--pv required");
  const rdp::FinitePmf pv({{"V", a.pv.size()}}, a.pv);
  rdp::Channel emit = [&] {
    if (!a.emit_file.empty()) {
      rdp::Channel ch = rdp::channel_from_json(read_json_file(a.emit_file));
      if (ch.inputs().size() != 1 || ch.outputs().size() != 1) rdp::throw_argument("emit: must map V to W");
      return rdp::Channel({{"V", ch.inputs()[0].size}}, {{"W", ch.outputs()[0].size}},
                          std::vector<double>(ch.probs().begin(), ch.probs().end()));
    }
    if (!(a.crossover >= 0.0 && a.crossover <= 1.0)) rdp::throw_argument("give --emit FILE or --crossover in [0,1]");
    if (a.pv.size() != 2) rdp::throw_argument("--crossover needs a binary --pv");
    const double c = a.crossover;
    return rdp::Channel({{"V", 2}}, {{"W", 2}}, {1 - c, c, c, 1 - c});
  }();
  if (emit.input_size() != a.pv.size()) rdp::throw_argument("emit input size differs from --pv");
  const auto cells = rdp::coding::soft_cover_sweep(pv, emit, a.rates, a.ns, a.codebooks,
                                                   rdp::derive_seed(g.seed, "softcover"));
  const double mi = rdp::mutual_information(rdp::compose(pv, emit), {"V"}, {"W"});
  json config{{"pv", a.pv}, {"emit", rdp::to_json(emit)}, {"rates", a.rates}, {"n", a.ns},
              {"codebooks_per_cell", a.codebooks}};
  json head = header("softcover", g, config);
  json flags = json::array();
  std::string csv = "rate,n,codewords,codebooks,mean_tv,std_err,skipped\n";
  json js = json::array();
  for (const auto& c : cells) {
    csv += rdp::csv_number(c.rate) + "," + std::to_string(c.n) + "," + std::to_string(c.codewords) + "," +
           std::to_string(c.codebooks) + "," + (c.skipped ? "" : rdp::csv_number(c.mean_tv)) + "," +
           (c.skipped ? "" : rdp::csv_number(c.std_err)) + "," + (c.skipped ? "1" : "0") + "\n";
    js.push_back(rdp::to_json(c));
    if (c.skipped) flags.push_back("skipped_rate_" + rdp::csv_number(c.rate) + "_n_" + std::to_string(c.n));
  }
  if (want_csv(g)) write_csv(g, "softcover", csv, head, flags);
  if (want_json(g)) {
    json j = head;
    j["guard_flags"] = flags;
    j["i_vw"] = mi;
    j["cells"] = js;
    write_json(fs::path(g.out_dir) / "softcover.json", j);
  }
  std::printf("softcover: %zu cells, I(V;W)=%s bits\n", cells.size(), rdp::csv_number(mi).c_str());
  return 0;
}

int run_couple(const Global& g, const CoupleArgs& a) {
  const rdp::FinitePmf p = rdp::pmf_from_json(read_json_file(a.p_file));
  const rdp::FinitePmf q = rdp::pmf_from_json(read_json_file(a.q_file));
  const rdp::Coupling c = rdp::maximal_coupling(p, q);
  const double tv = rdp::total_variation(p, q.renamed(p.axis_names()));
  const double mismatch = rdp::mismatch_probability(c);
  json config{{"p", rdp::to_json(p)}, {"q", rdp::to_json(q)}};
  json head = header("couple", g, config);
  if (want_json(g)) {
    json j = head;
    j["guard_flags"] = json::array();
    j["total_variation"] = tv;
    j["mismatch_probability"] = mismatch;
    j["coupling"] = rdp::to_json(c.joint);
    j["correction_channel"] = rdp::to_json(rdp::coupling_to_channel(c));
    write_json(fs::path(g.out_dir) / "couple.json", j);
  }
  if (want_csv(g)) {
    std::string csv = "left,right,prob\n";
    const std::size_t nr = q.size();
    for (std::size_t i = 0; i < c.joint.size(); ++i) {
      csv += std::to_string(i / nr) + "," + std::to_string(i % nr) + "," + rdp::csv_number(c.joint[i]) + "\n";
    }
    write_csv(g, "couple", csv, head, json::array());
  }
  std::printf("couple: tv=%s mismatch=%s\n", rdp::csv_number(tv).c_str(), rdp::csv_number(mismatch).c_str());
  return 0;
}

int emit_error(const char* kind, const std::string& msg, int code) {
  std::cerr << json{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}}.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rate-distortion-perception with side information: regions, Gaussian closed form, coding "
               "simulation"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--workers", g.workers, "Worker threads (default: machine parallelism)")->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", g.out_dir, "Directory for artifacts");
  app.add_option("--format", g.format, "Artifact format")->check(CLI::IsMember({"csv", "json", "both"}));

  RegionArgs ra, era;
  auto add_region = [](CLI::App* sub, RegionArgs& r) {
    sub->add_option("--source", r.source, "SourceSpec JSON file")->required();
    sub->add_option("--delta", r.deltas, "Distortion level(s)")->required()->delimiter(',');
    sub->add_option("--v-size", r.v_size, "Auxiliary alphabet size (default |X||Z|+2)");
    sub->add_option("--starts", r.starts, "Optimizer starts")->check(CLI::PositiveNumber);
    sub->add_option("--realism-tol", r.realism_tol, "Realism tolerance")->check(CLI::NonNegativeNumber);
  };
  auto* region = app.add_subcommand("region", "Minimum rate with side information at the decoder");
  add_region(region, ra);
  auto* ed_region = app.add_subcommand("ed-region", "Minimum rate with side information at both ends");
  add_region(ed_region, era);

  GaussianArgs ga;
  auto* gaussian = app.add_subcommand("gaussian", "Gaussian closed form and Monte Carlo checks");
  gaussian->add_option("--eta", ga.eta, "Correlation of X and Z")->required();
  gaussian->add_option("--delta", ga.delta, "Squared-error distortion")->required();
  gaussian->add_option("--samples", ga.samples, "Monte Carlo samples (0 skips)");
  gaussian->add_option("--shards", ga.shards, "Monte Carlo shards")->check(CLI::PositiveNumber);
  gaussian->add_option("--curve-points", ga.curve_points, "Points of the (delta, rate) CSV curve");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Finite-blocklength coding simulation");
  simulate->add_option("--source", sa.source, "SourceSpec JSON file")->required();
  simulate->add_option("--delta", sa.delta, "Design distortion")->required();
  simulate->add_option("--v-size", sa.v_size, "Auxiliary alphabet size");
  simulate->add_option("--n", sa.ns, "Blocklength(s)")->required()->delimiter(',');
  simulate->add_option("--epsilon", sa.epsilon, "Rate slack")->check(CLI::PositiveNumber);
  simulate->add_option("--rc", sa.rc, "Common randomness rate")->check(CLI::NonNegativeNumber);
  simulate->add_option("--trials", sa.trials, "Trials per blocklength")->check(CLI::PositiveNumber);
  simulate->add_flag("--correct-realism", sa.correct, "Apply the maximal-coupling correction when enumerable");
  simulate->add_option("--delta-typ", sa.delta_typ, "Typicality slack (default 0.15 n^-1/3)");

  SoftcoverArgs sc;
  auto* softcover = app.add_subcommand("softcover", "Exact soft-covering TV sweep");
  softcover->add_option("--pv", sc.pv, "Codeword symbol law")->required()->delimiter(',');
  softcover->add_option("--emit", sc.emit_file, "Channel JSON from V to W");
  softcover->add_option("--crossover", sc.crossover, "Binary symmetric emission crossover");
  softcover->add_option("--rates", sc.rates, "Codebook rates")->required()->delimiter(',');
  softcover->add_option("--n", sc.ns, "Blocklengths")->required()->delimiter(',');
  softcover->add_option("--codebooks", sc.codebooks, "Codebooks per cell")->check(CLI::PositiveNumber);

  CoupleArgs ca;
  auto* couple = app.add_subcommand("couple", "Maximal coupling of two pmfs");
  couple->add_option("--p", ca.p_file, "Left pmf JSON")->required();
  couple->add_option("--q", ca.q_file, "Right pmf JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("argument", e.what(), 2);
  }

  const auto t0 = std::chrono::steady_clock::now();
  std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (g.workers > 0) omp_set_num_threads(g.workers);
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (!fs::is_directory(g.out_dir)) rdp::throw_capacity("cannot create output directory " + g.out_dir);
    int rc = 0;
    if (*region) rc = run_region(g, ra, false);
    else if (*ed_region) rc = run_region(g, era, true);
    else if (*gaussian) rc = run_gaussian(g, ga);
    else if (*simulate) rc = run_simulate(g, sa);
    else if (*softcover) rc = run_softcover(g, sc);
    else if (*couple) rc = run_couple(g, ca);
    append_log(g, cmd, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return rc;
  } catch (const rdp::ArgumentError& e) {
    return emit_error("argument", e.what(), 2);
  } catch (const rdp::CapacityError& e) {
    return emit_error("capacity", e.what(), 3);
  } catch (const rdp::NumericError& e) {
    return emit_error("numeric", e.what(), 3);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 3);
  }
}
