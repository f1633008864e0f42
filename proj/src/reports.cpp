#include "rdp/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rdp/errors.hpp"
#include "rdp/pmf_json.hpp"

namespace rdp {

using nlohmann::json;

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CurveRow curve_row(const SolveResult& r) {
  return CurveRow{r.delta, std::max(0.0, r.point.rate), std::max(0.0, r.point.rc_sum), r.point.realism_gap, r.v_size,
                  r.feasible};
}

std::string format_curve(std::vector<CurveRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) { return a.delta < b.delta; });
  std::string out = std::string(kCurveHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_number(r.delta) + "," + csv_number(r.rate) + "," + csv_number(r.rc_sum) + "," +
           csv_number(r.realism_gap) + "," + std::to_string(r.v_size) + "," + (r.feasible ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<CurveRow> parse_curve(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kCurveHeader) throw_argument("parse_curve: missing or unexpected header");
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 6) throw_argument("parse_curve: expected 6 fields per row");
    try {
      CurveRow r;
      r.delta = std::stod(f[0]);
      r.rate = std::stod(f[1]);
      r.rc_sum = std::stod(f[2]);
      r.realism_gap = std::stod(f[3]);
      r.v_size = static_cast<std::size_t>(std::stoull(f[4]));
      if (f[5] != "0" && f[5] != "1") throw_argument("parse_curve: feasible must be 0 or 1");
      r.feasible = f[5] == "1";
      rows.push_back(r);
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ArgumentError*>(&e)) throw;
      throw_argument(std::string("parse_curve: bad number: ") + e.what());
    }
  }
  return rows;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw_capacity("cannot open " + tmp.string() + " for writing");
    os << contents;
    os.flush();
    if (!os) throw_capacity("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw_capacity("cannot rename into " + path.string());
  }
}

void emit_curve(const std::vector<CurveRow>& rows, const std::filesystem::path& path) {
  write_atomic(path, format_curve(rows));
}

SourceSpec source_from_json(const json& j) {
  if (!j.is_object()) throw_argument("source: expected a JSON object");
  if (j.contains("dsbs")) {
    if (!j["dsbs"].is_number()) throw_argument("source: dsbs must be a number");
    return SourceSpec::dsbs(j["dsbs"].get<double>());
  }
  if (j.contains("independent")) {
    const auto& ind = j["independent"];
    if (!ind.is_object() || !ind.contains("px") || !ind.contains("pz")) {
      throw_argument("source: independent needs px and pz");
    }
    try {
      return SourceSpec::independent(ind["px"].get<std::vector<double>>(), ind["pz"].get<std::vector<double>>());
    } catch (const json::exception& e) {
      throw_argument(std::string("source: ") + e.what());
    }
  }
  if (!j.contains("pxz")) throw_argument("source: missing pxz");
  FinitePmf pxz = pmf_from_json(j["pxz"]);
  if (pxz.axes().size() != 2) throw_argument("source: pxz must have two axes (X, Z)");
  pxz = pxz.renamed({"X", "Z"});
  std::vector<std::vector<double>> d;
  if (!j.contains("distortion") || (j["distortion"].is_string() && j["distortion"] == "hamming")) {
    d = SourceSpec::hamming(pxz.axes()[0].size);
  } else {
    try {
      d = j["distortion"].get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw_argument(std::string("source: distortion must be a matrix: ") + e.what());
    }
  }
  return SourceSpec(std::move(pxz), std::move(d));
}

json to_json(const SourceSpec& s) { return json{{"pxz", to_json(s.pxz())}, {"distortion", s.distortion_rows()}}; }

json to_json(const SolveResult& r) {
  json j{{"delta", r.delta},
         {"v_size", r.v_size},
         {"feasible", r.feasible},
         {"rate", std::max(0.0, r.point.rate)},
         {"rate_raw", r.point.rate},
         {"rc_sum", std::max(0.0, r.point.rc_sum)},
         {"rc_sum_raw", r.point.rc_sum},
         {"distortion", r.point.distortion},
         {"realism_gap", r.point.realism_gap},
         {"min_distortion_found", r.min_distortion_found},
         {"inner_bound_only", r.inner_bound_only}};
  if (r.solution) {
    j["encoder"] = to_json(r.solution->enc);
    j["decoder"] = to_json(r.solution->dec);
    const MarkovGaps g = markov_check(r.solution->joint);
    j["markov_gaps"] = {{"z_x_v", g.z_x_v}, {"x_zv_y", g.x_zv_y}};
  }
  return j;
}

namespace {
json estimate_json(const gaussian::Estimate& e) {
  return json{{"mean", e.mean}, {"std_err", e.std_err}, {"target", e.target}, {"flagged", e.flagged}};
}
}  // namespace

json to_json(const gaussian::McStats& s) {
  return json{{"n_samples", s.n_samples},
              {"shards", s.shards},
              {"sigmas", gaussian::kMcSigmas},
              {"mean_sq_err", estimate_json(s.mean_sq_err)},
              {"var_y", estimate_json(s.var_y)},
              {"mean_sq_cond", estimate_json(s.mean_sq_cond)},
              {"cov_xz", estimate_json(s.cov_xz)}};
}

json to_json(const coding::RatePlan& p) {
  return json{{"n", p.n},
              {"epsilon", p.epsilon},
              {"rate_m", p.rate_m},
              {"rate_mprime", p.rate_mprime},
              {"rate_j", p.rate_j},
              {"size_m", p.size_m},
              {"size_mprime", p.size_mprime},
              {"size_j", p.size_j},
              {"i_xv", p.i_xv},
              {"i_zv", p.i_zv},
              {"i_yv", p.i_yv},
              {"sum_rate_xv", p.sum_rate_xv},
              {"sum_rate_yv", p.sum_rate_yv},
              {"warnings", p.warnings}};
}

json to_json(const coding::SimReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"n", r.n},
              {"plan", to_json(r.plan)},
              {"trials", r.trials},
              {"seed", r.seed},
              {"codebook_seed", r.codebook_seed},
              {"delta_typ", r.delta_typ},
              {"avg_distortion", r.avg_distortion},
              {"distortion_se", r.distortion_se},
              {"mprime_error_rate", r.mprime_error_rate},
              {"mprime_error_se", r.mprime_error_se},
              {"encode_fallbacks", r.encode_fallbacks},
              {"decode_flagged", r.decode_flagged},
              {"tv_exact", opt(r.tv_exact)},
              {"tv_exact_scheme", opt(r.tv_exact_scheme)},
              {"tv_per_letter", r.tv_per_letter},
              {"correction_applied", r.correction_applied},
              {"corrected_avg_distortion", opt(r.corrected_avg_distortion)},
              {"corrected_tv_per_letter", opt(r.corrected_tv_per_letter)},
              {"flags", r.flags}};
}

json to_json(const coding::SweepCell& c) {
  return json{{"rate", c.rate},           {"n", c.n},         {"codewords", c.codewords}, {"codebooks", c.codebooks},
              {"mean_tv", c.mean_tv},     {"std_err", c.std_err}, {"skipped", c.skipped}};
}

}  // namespace rdp
