#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "raschkit/analysis.hpp"
#include "raschkit/crowd.hpp"
#include "raschkit/error.hpp"
#include "raschkit/filter.hpp"
#include "raschkit/io.hpp"
#include "raschkit/mml.hpp"
#include "raschkit/response_matrix.hpp"
#include "raschkit/rng.hpp"
#include "raschkit/version.hpp"
#include "raschkit/vi.hpp"

namespace raschkit {

/// One-command benchmark run: simulate a crowd with known parameters, fit it
/// with both estimators and both VI priors, then compare everything.
struct ReproduceConfig {
  std::uint64_t seed = 0;
  std::size_t n_subjects = 1000;
  std::size_t n_items = 100;
  GaussianSpec theta_dist{0.0, 1.0};
  GaussianSpec b_dist{0.0, 1.0};
  double missing_rate = 0.0;
  MmlConfig mml;
  ViConfig vi;
  std::vector<double> fractions = {0.1, 0.25, 0.5, 0.75, 1.0};
  std::size_t density_bins = 20;
  std::size_t disagreement_top_k = 5;
  unsigned threads = 0;
};

namespace detail {

inline std::string reproduce_flags(const ReproduceConfig& c) {
  std::string s = "reproduce --seed " + std::to_string(c.seed);
  s += " --subjects " + std::to_string(c.n_subjects);
  s += " --items " + std::to_string(c.n_items);
  s += " --missing-rate " + format_double(c.missing_rate);
  s += " --quadrature-points " + std::to_string(c.mml.quadrature_points);
  s += " --max-iterations " + std::to_string(c.mml.max_iterations);
  s += " --tol " + format_double(c.mml.convergence_tol);
  s += " --mc-samples " + std::to_string(c.vi.mc_samples);
  s += " --max-steps " + std::to_string(c.vi.max_steps);
  s += " --step-size " + format_double(c.vi.step_size);
  return s;
}

inline AlignedPair aligned(const std::vector<std::string>& ids_x,
                           const std::vector<double>& xs,
                           const std::vector<std::string>& ids_y,
                           const std::vector<double>& ys) {
  auto res = align(ids_x, xs, ids_y, ys);
  return std::move(res.pair);
}

}  // namespace detail

/// Runs the full pipeline, writes all artifacts under outdir, and returns the
/// metrics report (also written as report.json). Deterministic: two runs with
/// the same config produce byte-identical files.
inline nlohmann::ordered_json pipeline_reproduce(const ReproduceConfig& cfg,
                                                 const std::filesystem::path& outdir) {
  namespace fs = std::filesystem;
  fs::create_directories(outdir);
  const std::string header = std::string("raschkit ") + version + " " +
                             detail::reproduce_flags(cfg);
  const std::vector<std::string> comments = {header};

  // simulate
  CrowdSpec crowd;
  crowd.n_subjects = cfg.n_subjects;
  crowd.n_items = cfg.n_items;
  crowd.theta_dist = cfg.theta_dist;
  crowd.b_dist = cfg.b_dist;
  crowd.missing_rate = cfg.missing_rate;
  crowd.seed = cfg.seed;
  const auto sim = simulate(crowd);
  save_matrix(sim.matrix, outdir / "matrix.csv", MatrixFormat::dense_csv, comments);
  save_params_csv(outdir / "theta_true.csv", {"subject_id", "theta_true"},
                  sim.matrix.subject_ids(), {sim.thetas}, comments);
  save_params_csv(outdir / "b_true.csv", {"item_id", "b_true"}, sim.matrix.item_ids(),
                  {sim.bs}, comments);

  const auto pruned = prune(sim.matrix);
  const ResponseMatrix& m = pruned.matrix;

  // MML fit
  MmlConfig mml_cfg = cfg.mml;
  mml_cfg.threads = cfg.threads;
  const auto mml = fit_mml(m, mml_cfg);
  save_params_csv(outdir / "mml_items.csv", {"item_id", "b"}, m.item_ids(),
                  {mml.difficulties}, comments);
  save_params_csv(outdir / "mml_subjects.csv", {"subject_id", "theta"}, m.subject_ids(),
                  {mml.abilities}, comments);
  save_trace_csv(outdir / "mml_trace.csv", "iteration", "marginal_loglik",
                 mml.loglik_trace, comments);

  // VI fits (vague and hierarchical)
  ViConfig vi_cfg = cfg.vi;
  vi_cfg.threads = cfg.threads;
  vi_cfg.seed = rng::key_of(cfg.seed, rng::tag_fit_vi_vague).state;
  const auto vi = fit_vi(m, PriorSpec::vague(), vi_cfg);
  save_params_csv(outdir / "vi_items.csv", {"item_id", "b"}, m.item_ids(), {vi.b_mean},
                  comments);
  save_params_csv(outdir / "vi_subjects.csv", {"subject_id", "theta"}, m.subject_ids(),
                  {vi.theta_mean}, comments);
  save_params_csv(outdir / "vi_items_posterior.csv", {"item_id", "b_mean", "b_std"},
                  m.item_ids(), {vi.b_mean, vi.b_std}, comments);
  save_params_csv(outdir / "vi_subjects_posterior.csv",
                  {"subject_id", "theta_mean", "theta_std"}, m.subject_ids(),
                  {vi.theta_mean, vi.theta_std}, comments);
  save_trace_csv(outdir / "vi_trace.csv", "step", "elbo", vi.elbo_trace, comments);

  ViConfig vi_hier_cfg = vi_cfg;
  vi_hier_cfg.seed = rng::key_of(cfg.seed, rng::tag_fit_vi_hier).state;
  const auto vi_hier = fit_vi(m, PriorSpec::hierarchical(), vi_hier_cfg);
  save_params_csv(outdir / "vi_hier_items.csv", {"item_id", "b_mean", "b_std"},
                  m.item_ids(), {vi_hier.b_mean, vi_hier.b_std}, comments);

  // recovery against the generating parameters
  const auto rec_mml_b =
      detail::aligned(sim.matrix.item_ids(), sim.bs, m.item_ids(), mml.difficulties);
  const auto rec_mml_t =
      detail::aligned(sim.matrix.subject_ids(), sim.thetas, m.subject_ids(), mml.abilities);
  const auto rec_vi_b =
      detail::aligned(sim.matrix.item_ids(), sim.bs, m.item_ids(), vi.b_mean);
  const auto rec_vi_t =
      detail::aligned(sim.matrix.subject_ids(), sim.thetas, m.subject_ids(), vi.theta_mean);

  // estimator agreement
  const auto agree_b = detail::aligned(m.item_ids(), mml.difficulties, m.item_ids(), vi.b_mean);
  const auto agree_t =
      detail::aligned(m.subject_ids(), mml.abilities, m.subject_ids(), vi.theta_mean);

  // split-half stability (independent MML fits on a random subject partition)
  const auto halves = split_half(m, rng::key_of(cfg.seed, rng::tag_split).state);
  const auto h1 = prune(halves.first), h2 = prune(halves.second);
  const auto fit1 = fit_mml(h1.matrix, mml_cfg);
  const auto fit2 = fit_mml(h2.matrix, mml_cfg);
  const auto split_pair = detail::aligned(h1.matrix.item_ids(), fit1.difficulties,
                                          h2.matrix.item_ids(), fit2.difficulties);

  // vague vs hierarchical priors
  const auto prior_pair = detail::aligned(m.item_ids(), vi.b_mean, m.item_ids(), vi_hier.b_mean);

  // where the two estimators rank items most differently
  const auto disagreement = rank_disagreement(agree_b, cfg.disagreement_top_k);

  // filter sweeps over fitted difficulties and percent-correct
  const ItemValues difficulty_values{ValueKind::difficulty, m.item_ids(), mml.difficulties};
  const ItemValues pc_values = percent_correct_values(m);
  save_params_csv(outdir / "pc.csv", {"item_id", "pc"}, pc_values.ids, {pc_values.values},
                  comments);

  nlohmann::ordered_json filters;
  for (StrategyKind kind : {StrategyKind::avi, StrategyKind::avo, StrategyKind::ub,
                            StrategyKind::lb, StrategyKind::pcub, StrategyKind::pclb}) {
    const ItemValues& vals =
        value_kind_for(kind) == ValueKind::difficulty ? difficulty_values : pc_values;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double target : cfg.fractions) {
      const auto strategy = sweep_to_fraction(vals, kind, target);
      const auto report = apply_filter(vals, strategy);
      rows.push_back({{"target", target},
                      {"threshold", strategy.threshold},
                      {"retained_fraction", report.retained_fraction},
                      {"retained", report.retained_item_ids.size()}});
    }
    filters[strategy_name(kind)] = rows;
  }

  // difficulty density for external plotting
  const auto hist = density_summary(mml.difficulties, cfg.density_bins);
  {
    std::string out = detail::comment_block(comments);
    out += "bin_lo,bin_hi,count\n";
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
      out += detail::format_double(hist.edges[k]) + "," +
             detail::format_double(hist.edges[k + 1]) + "," +
             std::to_string(hist.counts[k]) + "\n";
    detail::write_file_atomic(outdir / "b_density.csv", out);
  }

  nlohmann::ordered_json report;
  report["tool"] = {{"name", "raschkit"}, {"version", version}};
  report["config"] = {{"seed", cfg.seed},
                      {"n_subjects", cfg.n_subjects},
                      {"n_items", cfg.n_items},
                      {"theta", {{"mean", cfg.theta_dist.mean}, {"std", cfg.theta_dist.std}}},
                      {"b", {{"mean", cfg.b_dist.mean}, {"std", cfg.b_dist.std}}},
                      {"missing_rate", cfg.missing_rate},
                      {"quadrature_points", cfg.mml.quadrature_points},
                      {"vi",
                       {{"mc_samples", cfg.vi.mc_samples},
                        {"max_steps", cfg.vi.max_steps},
                        {"step_size", cfg.vi.step_size},
                        {"elbo_window", cfg.vi.elbo_window},
                        {"rel_tol", cfg.vi.rel_tol}}}};
  report["recovery"] = {
      {"mml", {{"spearman_b", spearman(rec_mml_b)}, {"spearman_theta", spearman(rec_mml_t)}}},
      {"vi_vague", {{"spearman_b", spearman(rec_vi_b)}, {"spearman_theta", spearman(rec_vi_t)}}}};
  report["agreement"] = {{"rmsd_b", rmsd(agree_b)},
                         {"rmsd_theta", rmsd(agree_t)},
                         {"spearman_b", spearman(agree_b)}};
  report["split_half"] = {{"spearman_b", spearman(split_pair)},
                          {"shared_items", split_pair.ids.size()}};
  report["prior_robustness"] = {{"spearman_b", spearman(prior_pair)},
                                {"rmsd_b", rmsd(prior_pair)}};
  nlohmann::ordered_json top = nlohmann::ordered_json::array();
  for (const auto& e : disagreement.top)
    top.push_back({{"item_id", e.id},
                   {"rank_mml", e.rank_x},
                   {"rank_vi", e.rank_y},
                   {"abs_diff", e.abs_diff}});
  report["rank_disagreement"] = {{"mean_abs_diff", disagreement.mean_abs_diff},
                                 {"top", top}};
  report["filters"] = filters;
  report["estimators"] = {
      {"mml", {{"converged", mml.converged}, {"iterations", mml.iterations}}},
      {"vi_vague", {{"converged", vi.converged}, {"steps", vi.steps}}},
      {"vi_hierarchical", {{"converged", vi_hier.converged}, {"steps", vi_hier.steps}}}};

  detail::write_file_atomic(outdir / "report.json", report.dump(2) + "\n");
  return report;
}

}  // namespace raschkit
