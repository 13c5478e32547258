#include "lisvar/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "lisvar/identification.hpp"
#include "lisvar/inference.hpp"
#include "lisvar/io.hpp"
#include "lisvar/solve.hpp"
#include "lisvar/var_core.hpp"

namespace lisvar {

namespace {

namespace fs = std::filesystem;

int log_level() {
  const char* v = std::getenv("LISVAR_LOG");
  if (!v || !*v) return 0;
  return std::string(v) == "debug" ? 2 : 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[lisvar] " << msg << "\n";
}

bool is_json_path(const std::string& path) {
  return path.size() > 5 && path.substr(path.size() - 5) == ".json";
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

// Reduced-form input: a JSON parameter file or a CSV to be fitted.
struct LoadedForm {
  bool heteroskedastic = false;
  ReducedForm rf;
  HsvarReducedForm hrf;
};

LoadedForm load_form(const RunConfig& cfg) {
  LoadedForm out;
  if (is_json_path(cfg.data_path)) {
    nlohmann::json j = read_json_file(cfg.data_path);
    if (j.contains("t_break")) {
      out.heteroskedastic = true;
      out.hrf = hsvar_from_json(j);
    } else {
      out.rf = reduced_form_from_json(j);
    }
    return out;
  }
  Eigen::MatrixXd data = read_data_csv(cfg.data_path);
  if (cfg.t_break > 0) {
    out.heteroskedastic = true;
    out.hrf = fit_hsvar_fgls(data, cfg.lags, cfg.t_break);
  } else {
    out.rf = fit_ols(data, cfg.lags);
  }
  return out;
}

nlohmann::json set_to_json(const IdentifiedSet& set, const ReducedForm& rf) {
  nlohmann::json j;
  j["route"] = set.route;
  j["count"] = set.count();
  j["q"] = nlohmann::json::array();
  j["a0"] = nlohmann::json::array();
  j["a_plus"] = nlohmann::json::array();
  j["residual_sup"] = nlohmann::json::array();
  for (std::size_t m = 0; m < set.q.size(); ++m) {
    j["q"].push_back(matrix_to_json(set.q[m]));
    StructuralParams sp = map_g_inverse(rf, OrthogonalMatrix(set.q[m]));
    j["a0"].push_back(matrix_to_json(sp.a0));
    j["a_plus"].push_back(matrix_to_json(sp.aplus));
    j["residual_sup"].push_back(round9(set.residuals[m]));
  }
  if (!set.bit_labels.empty()) j["bit_labels"] = set.bit_labels;
  if (set.lambda) {
    nlohmann::json lam = nlohmann::json::array();
    for (int i = 0; i < set.lambda->values.size(); ++i)
      lam.push_back(round9(set.lambda->values(i)));
    j["lambda"] = lam;
    j["admissible_shocks"] = set.admissible_shocks;
  }
  j["diagnostics"] = {{"discarded", set.discarded},
                      {"starts", set.starts},
                      {"converged", set.converged},
                      {"near_degenerate", set.near_degenerate}};
  return j;
}

struct SolvedForm {
  ReducedForm rf;  // structural base (regime 1 when heteroskedastic)
  IdentifiedSet set;
};

SolvedForm solve_loaded(const RunConfig& cfg, const LoadedForm& form,
                        const RestrictionSpec& spec) {
  if (form.heteroskedastic)
    return {form.hrf.regime(1), solve_hsvar(spec, form.hrf, cfg.anchor_shock)};
  return {form.rf, solve_identified_set(spec, form.rf, cfg.seed)};
}

int run_fit(const RunConfig& cfg) {
  LoadedForm form = load_form(cfg);
  if (form.heteroskedastic) {
    write_json_file(out_path(cfg, "hsvar_form.json"), to_json(form.hrf));
    log_info("wrote hsvar_form.json");
  } else {
    write_json_file(out_path(cfg, "reduced_form.json"), to_json(form.rf));
    log_info("wrote reduced_form.json");
  }
  return 0;
}

int run_check_id(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  std::vector<ReducedForm> phis;
  if (is_json_path(cfg.data_path)) {
    phis.push_back(reduced_form_from_json(read_json_file(cfg.data_path)));
  } else {
    Eigen::MatrixXd data = read_data_csv(cfg.data_path);
    PosteriorDrawSet d = sample_posterior_niw(data, cfg.lags, cfg.draws, cfg.seed);
    phis = std::move(d.reduced);
  }
  VerdictEvidence ev = identification_verdict(
      spec, [&](int i) { return phis[static_cast<std::size_t>(i)]; },
      static_cast<int>(phis.size()), /*stop_at_first_success=*/false, cfg.seed);

  const char* verdict = ev.verdict == Verdict::LocallyIdentifiedAlmostEverywhere
                            ? "locally-identified-almost-everywhere"
                            : (ev.verdict == Verdict::NotIdentified ? "not-identified"
                                                                    : "inconclusive");
  nlohmann::json j;
  j["verdict"] = verdict;
  j["draws"] = ev.draws;
  j["admissible_found"] = ev.admissible_found;
  j["rank_satisfied"] = ev.rank_satisfied;
  j["per_draw"] = nlohmann::json::array();
  for (std::size_t i = 0; i < ev.per_draw_found.size(); ++i)
    j["per_draw"].push_back({{"admissible_found", static_cast<bool>(ev.per_draw_found[i])},
                             {"rank_ok", static_cast<bool>(ev.per_draw_rank_ok[i])}});
  write_json_file(out_path(cfg, "verdict.json"), j);
  log_info(std::string("verdict: ") + verdict);
  return 0;
}

int run_identify_set(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  LoadedForm form = load_form(cfg);
  SolvedForm solved = solve_loaded(cfg, form, spec);
  write_json_file(out_path(cfg, "identified_set.json"), set_to_json(solved.set, solved.rf));
  log_info("identified set members: " + std::to_string(solved.set.count()));
  return solved.set.empty() ? 2 : 0;
}

int run_irf(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  LoadedForm form = load_form(cfg);
  SolvedForm solved = solve_loaded(cfg, form, spec);
  nlohmann::json j = set_to_json(solved.set, solved.rf);
  if (solved.set.empty()) {
    write_json_file(out_path(cfg, "irf.json"), j);
    return 2;
  }
  auto irfs = identified_set_irf(solved.set, solved.rf, cfg.h_max);
  j["h_max"] = cfg.h_max;
  j["irf"] = nlohmann::json::array();
  for (const auto& member : irfs) {
    nlohmann::json per_h = nlohmann::json::array();
    for (const auto& mat : member) per_h.push_back(matrix_to_json(mat));
    j["irf"].push_back(std::move(per_h));
  }
  write_json_file(out_path(cfg, "irf.json"), j);

  std::ofstream csv(out_path(cfg, "irf.csv"));
  if (!csv) throw Error("irf.csv: cannot open for writing");
  csv << "horizon,variable,shock,member,value\n";
  for (int h = 0; h <= cfg.h_max; ++h)
    for (int i = 1; i <= solved.rf.n; ++i)
      for (int jj = 1; jj <= solved.rf.n; ++jj)
        for (std::size_t m = 0; m < irfs.size(); ++m)
          csv << h << ',' << i << ',' << jj << ',' << (m + 1) << ','
              << format9(irfs[m][static_cast<std::size_t>(h)](i - 1, jj - 1)) << '\n';
  return 0;
}

PosteriorDrawSet sample_for(const RunConfig& cfg, const Eigen::MatrixXd& data) {
  if (cfg.t_break > 0)
    return sample_posterior_hsvar(data, cfg.lags, cfg.t_break, cfg.draws, cfg.seed);
  return sample_posterior_niw(data, cfg.lags, cfg.draws, cfg.seed);
}

const std::array<double, 5> kHdrLevels = {0.90, 0.75, 0.50, 0.25, 0.10};

nlohmann::json hdr_json(const std::vector<WeightedValue>& cell) {
  std::vector<double> values, weights;
  values.reserve(cell.size());
  weights.reserve(cell.size());
  for (const auto& s : cell) {
    values.push_back(s.value);
    weights.push_back(s.weight);
  }
  nlohmann::json out;
  for (double level : kHdrLevels) {
    nlohmann::json intervals = nlohmann::json::array();
    for (const auto& [lo, hi] : highest_density_region(values, level, weights))
      intervals.push_back({round9(lo), round9(hi)});
    char key[8];
    std::snprintf(key, sizeof key, "%.2f", level);
    out[key] = std::move(intervals);
  }
  return out;
}

int run_posterior(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  Eigen::MatrixXd data = read_data_csv(cfg.data_path);
  PosteriorDrawSet draws = sample_for(cfg, data);
  PosteriorIrf post;
  try {
    post = posterior_irf(draws, spec, cfg.h_max, {}, cfg.seed, cfg.threads);
  } catch (const AllDrawsEmpty&) {
    write_json_file(out_path(cfg, "hdr.json"),
                    {{"used_draws", 0}, {"empty_draws", draws.count()}});
    return 2;
  }
  log_info("posterior draws used: " + std::to_string(post.used_draws) + ", empty: " +
           std::to_string(post.empty_draws));

  std::ofstream csv(out_path(cfg, "posterior_irf.csv"));
  if (!csv) throw Error("posterior_irf.csv: cannot open for writing");
  csv << "variable,shock,horizon,value,weight\n";
  for (int h = 0; h <= cfg.h_max; ++h)
    for (int i = 1; i <= post.n; ++i)
      for (int j = 1; j <= post.n; ++j)
        for (const auto& s : post.at(i, j, h))
          csv << i << ',' << j << ',' << h << ',' << format9(s.value) << ','
              << format9(s.weight) << '\n';

  nlohmann::json j;
  j["used_draws"] = post.used_draws;
  j["empty_draws"] = post.empty_draws;
  j["cells"] = nlohmann::json::array();
  for (int h = 0; h <= cfg.h_max; ++h)
    for (int i = 1; i <= post.n; ++i)
      for (int jj = 1; jj <= post.n; ++jj)
        j["cells"].push_back(
            {{"coordinate", {{"variable", i}, {"shock", jj}, {"horizon", h}}},
             {"hdr", hdr_json(post.at(i, jj, h))}});
  write_json_file(out_path(cfg, "hdr.json"), j);
  return 0;
}

nlohmann::json intervals_json(const std::vector<LabeledInterval>& ivs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& iv : ivs) out.push_back({round9(iv.lo), round9(iv.hi)});
  return out;
}

int run_confsets(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  Eigen::MatrixXd data = read_data_csv(cfg.data_path);
  PosteriorDrawSet draws = sample_for(cfg, data);

  const bool want_switching = cfg.label_mode == "switching" || cfg.label_mode == "both";
  const bool want_fixed = cfg.label_mode == "fixed" || cfg.label_mode == "both";
  IrfCoordinate anchor{cfg.anchor_variable, cfg.anchor_shock, cfg.anchor_horizon};

  PosteriorIrf post;
  ProjectionConfidenceSet sw, fx;
  try {
    post = posterior_irf(draws, spec, cfg.h_max, {}, cfg.seed, cfg.threads);
    PosteriorDrawSet retained = credible_region_phi(draws, cfg.alpha);
    log_info("retained draws: " + std::to_string(retained.count()));
    if (want_switching)
      sw = projection_cs_switching(retained, spec, cfg.alpha, cfg.h_max, cfg.seed,
                                   cfg.threads);
    if (want_fixed)
      fx = projection_cs_fixed(retained, spec, cfg.alpha, cfg.h_max, anchor, cfg.seed,
                               cfg.threads);
  } catch (const AllDrawsEmpty&) {
    write_json_file(out_path(cfg, "confsets.json"),
                    {{"used_draws", 0}, {"empty_draws", draws.count()}});
    return 2;
  }

  const int n = post.n;
  nlohmann::json cells = nlohmann::json::array();
  std::ofstream flat(out_path(cfg, "confsets.csv"));
  if (!flat) throw Error("confsets.csv: cannot open for writing");
  flat << "variable,shock,horizon,kind,index,lo,hi\n";
  auto flat_rows = [&](int i, int j, int h, const std::string& kind,
                       const std::vector<std::pair<double, double>>& ivs) {
    for (std::size_t t = 0; t < ivs.size(); ++t)
      flat << i << ',' << j << ',' << h << ',' << kind << ',' << (t + 1) << ','
           << format9(ivs[t].first) << ',' << format9(ivs[t].second) << '\n';
  };

  for (int h = 0; h <= cfg.h_max; ++h)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        nlohmann::json cell;
        cell["coordinate"] = {{"variable", i}, {"shock", j}, {"horizon", h}};
        cell["hdr"] = hdr_json(post.at(i, j, h));

        IrfCoordinate eta{i, j, h};
        auto mean_range = posterior_mean_range(draws, spec, eta, cfg.seed);
        cell["robust_mean_range"] = {round9(mean_range.first), round9(mean_range.second)};
        flat_rows(i, j, h, "mean_range", {{mean_range.first, mean_range.second}});

        double cred_lo = 0.0, cred_hi = 0.0;
        bool cred_set = false;
        auto take_hull = [&](const std::vector<LabeledInterval>& ivs) {
          for (const auto& iv : ivs) {
            cred_lo = cred_set ? std::min(cred_lo, iv.lo) : iv.lo;
            cred_hi = cred_set ? std::max(cred_hi, iv.hi) : iv.hi;
            cred_set = true;
          }
        };
        if (want_switching) {
          const auto& ivs = sw.at(i, j, h);
          cell["cs_switching"] = intervals_json(ivs);
          std::vector<std::pair<double, double>> plain;
          for (const auto& iv : ivs) plain.emplace_back(iv.lo, iv.hi);
          flat_rows(i, j, h, "cs_switching", plain);
          take_hull(ivs);
        }
        if (want_fixed) {
          const auto& ivs = fx.at(i, j, h);
          cell["cs_fixed"] = intervals_json(ivs);
          std::vector<std::pair<double, double>> plain;
          for (const auto& iv : ivs) plain.emplace_back(iv.lo, iv.hi);
          flat_rows(i, j, h, "cs_fixed", plain);
          take_hull(ivs);
        }
        // Hull of the projection unions: the credible region for the set.
        cell["robust_credible"] = {round9(cred_lo), round9(cred_hi)};
        flat_rows(i, j, h, "robust_credible", {{cred_lo, cred_hi}});
        cells.push_back(std::move(cell));
      }

  nlohmann::json j;
  j["alpha"] = round9(cfg.alpha);
  j["h_max"] = cfg.h_max;
  j["used_draws"] = post.used_draws;
  j["empty_draws"] = post.empty_draws;
  if (want_fixed)
    j["anchor"] = {{"variable", anchor.variable},
                   {"shock", anchor.shock},
                   {"horizon", anchor.horizon}};
  j["cells"] = std::move(cells);
  write_json_file(out_path(cfg, "confsets.json"), j);

  // Per-panel plot data: hull bands per HDR level plus the projection hulls.
  for (int i = 1; i <= n; ++i)
    for (int j2 = 1; j2 <= n; ++j2) {
      std::ofstream panel(out_path(cfg, "panel_" + std::to_string(i) + "_" +
                                            std::to_string(j2) + ".csv"));
      if (!panel) throw Error("panel csv: cannot open for writing");
      panel << "horizon";
      for (double level : kHdrLevels) {
        char key[8];
        std::snprintf(key, sizeof key, "%02d", static_cast<int>(level * 100));
        panel << ",hdr" << key << "_lo,hdr" << key << "_hi";
      }
      if (want_switching) panel << ",sw_lo,sw_hi";
      if (want_fixed) panel << ",fx_lo,fx_hi";
      panel << ",mean_lo,mean_hi\n";
      for (int h = 0; h <= cfg.h_max; ++h) {
        panel << h;
        std::vector<double> values, weights;
        for (const auto& s : post.at(i, j2, h)) {
          values.push_back(s.value);
          weights.push_back(s.weight);
        }
        for (double level : kHdrLevels) {
          auto ivs = highest_density_region(values, level, weights);
          panel << ',' << format9(ivs.front().first) << ','
                << format9(ivs.back().second);
        }
        auto hull = [&](const std::vector<LabeledInterval>& ivs) {
          panel << ',' << format9(ivs.front().lo) << ',' << format9(ivs.back().hi);
        };
        if (want_switching) hull(sw.at(i, j2, h));
        if (want_fixed) hull(fx.at(i, j2, h));
        IrfCoordinate eta{i, j2, h};
        auto mr = posterior_mean_range(draws, spec, eta, cfg.seed);
        panel << ',' << format9(mr.first) << ',' << format9(mr.second) << '\n';
      }
    }
  return 0;
}

int run_hsvar(const RunConfig& cfg) {
  RestrictionSpec spec = parse_spec_file(cfg.spec_path);
  LoadedForm form = load_form(cfg);
  if (!form.heteroskedastic)
    throw InvalidSpec("hsvar: needs --break-index with CSV data or a regime-break JSON");
  IdentifiedSet set = solve_hsvar(spec, form.hrf, cfg.anchor_shock);
  nlohmann::json j = set_to_json(set, form.hrf.regime(1));
  j["form"] = to_json(form.hrf);
  write_json_file(out_path(cfg, "hsvar_set.json"), j);
  log_info("admissible columns: " + std::to_string(set.count()));
  return set.empty() ? 2 : 0;
}

int run_simulate(const RunConfig& cfg) {
  nlohmann::json j = read_json_file(cfg.data_path);
  StructuralParams sp = structural_from_json(j);
  SimResult sim;
  if (j.contains("lambda")) {
    LambdaDiag lambda;
    const auto& arr = j["lambda"];
    lambda.values.resize(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i)
      lambda.values(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    lambda.validate();
    const int t_break = cfg.t_break > 0 ? cfg.t_break : cfg.draws / 2;
    sim = simulate_hsvar(sp, lambda, t_break, cfg.draws, cfg.seed);
  } else {
    sim = simulate(sp, cfg.draws, cfg.seed);
  }
  write_data_csv(out_path(cfg, "sim_data.csv"), sim.data);
  log_info(std::string("simulated ") + std::to_string(sim.data.rows()) + " rows" +
           (sim.stable ? "" : " (unstable autoregression)"));
  return 0;
}

}  // namespace

void RunConfig::validate() const {
  static const std::set<std::string> modes = {"fit",       "check-id", "identify-set",
                                              "irf",       "posterior", "confsets",
                                              "hsvar",     "simulate"};
  if (!modes.count(mode)) throw InvalidSpec("unknown mode: " + mode);
  if (data_path.empty()) throw InvalidSpec("--data is required");
  if (!fs::exists(data_path)) throw InvalidSpec("data file not found: " + data_path);
  static const std::set<std::string> need_spec = {"check-id", "identify-set", "irf",
                                                  "posterior", "confsets", "hsvar"};
  if (need_spec.count(mode)) {
    if (spec_path.empty()) throw InvalidSpec("--spec is required for " + mode);
    if (!fs::exists(spec_path)) throw InvalidSpec("spec file not found: " + spec_path);
  }
  if (lags < 1) throw InvalidSpec("--lags must be at least 1");
  if (h_max < 0) throw InvalidSpec("--hmax must be nonnegative");
  if (draws < 0) throw InvalidSpec("--draws must be nonnegative");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidSpec("--alpha must be in (0, 1)");
  if (threads < 1) throw InvalidSpec("--threads must be at least 1");
  if (label_mode != "switching" && label_mode != "fixed" && label_mode != "both")
    throw InvalidSpec("--mode must be switching, fixed, or both");
}

int run(const RunConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  log_info("mode " + config.mode + ", out " + config.out_dir);
  if (config.mode == "fit") return run_fit(config);
  if (config.mode == "check-id") return run_check_id(config);
  if (config.mode == "identify-set") return run_identify_set(config);
  if (config.mode == "irf") return run_irf(config);
  if (config.mode == "posterior") return run_posterior(config);
  if (config.mode == "confsets") return run_confsets(config);
  if (config.mode == "hsvar") return run_hsvar(config);
  return run_simulate(config);
}

}  // namespace lisvar
