// raschkit command line: simulate, grade, fit, score, filter, sweep, compare,
// split-half, reproduce. Data travels in CSV/JSONL files; every run prints a
// one-line JSON summary on stdout. Exit codes: 0 ok, 1 domain/data error,
// 2 usage error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "raschkit/raschkit.hpp"

namespace rk = raschkit;
using nlohmann::ordered_json;

namespace {

std::string flags_line(const std::string& subcommand, const std::vector<std::string>& kv) {
  std::string s = subcommand;
  for (const auto& part : kv) s += " " + part;
  return std::string("raschkit ") + rk::version + " " + s;
}

void print_summary(const ordered_json& j) { std::cout << j.dump() << "\n"; }

// no subcommand may write over one of its inputs
void check_no_overwrite(const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
  namespace fs = std::filesystem;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    for (const auto& out : outputs) {
      if (out.empty()) continue;
      std::error_code ec;
      if (fs::weakly_canonical(in, ec) == fs::weakly_canonical(out, ec))
        throw rk::DomainError("output path '" + out + "' would overwrite input '" + in + "'");
    }
  }
}

rk::ValueKind kind_from_column(const std::string& name) {
  if (name == "b" || name == "b_mean" || name == "difficulty")
    return rk::ValueKind::difficulty;
  if (name == "pc" || name == "percent_correct") return rk::ValueKind::percent_correct;
  throw rk::DomainError("value column '" + name +
                        "' not recognized (expected b, b_mean, difficulty, pc or "
                        "percent_correct)");
}

struct SimulateArgs {
  std::size_t subjects = 0, items = 0;
  double theta_mean = 0.0, theta_std = 1.0, b_mean = 0.0, b_std = 1.0;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  std::string out, format = "dense-csv", theta_out, b_out;
};

int run_simulate(const SimulateArgs& a) {
  check_no_overwrite({}, {a.out, a.theta_out, a.b_out});
  rk::CrowdSpec spec;
  spec.n_subjects = a.subjects;
  spec.n_items = a.items;
  spec.theta_dist = {a.theta_mean, a.theta_std};
  spec.b_dist = {a.b_mean, a.b_std};
  spec.missing_rate = a.missing_rate;
  spec.seed = a.seed;
  const auto sim = rk::simulate(spec);

  const auto header = flags_line(
      "simulate",
      {"--subjects " + std::to_string(a.subjects), "--items " + std::to_string(a.items),
       "--theta-mean " + rk::detail::format_double(a.theta_mean),
       "--theta-std " + rk::detail::format_double(a.theta_std),
       "--b-mean " + rk::detail::format_double(a.b_mean),
       "--b-std " + rk::detail::format_double(a.b_std),
       "--missing-rate " + rk::detail::format_double(a.missing_rate),
       "--seed " + std::to_string(a.seed), "--format " + a.format});
  rk::save_matrix(sim.matrix, a.out, rk::matrix_format_from_name(a.format), {header});
  ordered_json outputs{{"matrix", a.out}};
  if (!a.theta_out.empty()) {
    rk::save_params_csv(a.theta_out, {"subject_id", "theta_true"},
                        sim.matrix.subject_ids(), {sim.thetas}, {header});
    outputs["theta_true"] = a.theta_out;
  }
  if (!a.b_out.empty()) {
    rk::save_params_csv(a.b_out, {"item_id", "b_true"}, sim.matrix.item_ids(), {sim.bs},
                        {header});
    outputs["b_true"] = a.b_out;
  }
  print_summary({{"subcommand", "simulate"},
                 {"subjects", a.subjects},
                 {"items", a.items},
                 {"responses", sim.matrix.n_responses()},
                 {"seed", a.seed},
                 {"outputs", outputs}});
  return 0;
}

struct GradeArgs {
  std::string predictions, gold, out, format = "dense-csv";
};

int run_grade(const GradeArgs& a) {
  check_no_overwrite({a.predictions, a.gold}, {a.out});
  const auto raw = rk::load_labeled_outputs(a.predictions, a.gold);
  const auto m = rk::grade(raw);
  const auto header = flags_line("grade", {"--predictions " + a.predictions,
                                           "--gold " + a.gold, "--format " + a.format});
  rk::save_matrix(m, a.out, rk::matrix_format_from_name(a.format), {header});
  print_summary({{"subcommand", "grade"},
                 {"subjects", m.n_subjects()},
                 {"items", m.n_items()},
                 {"responses", m.n_responses()},
                 {"outputs", {{"matrix", a.out}}}});
  return 0;
}

struct FitArgs {
  std::string matrix, format = "dense-csv", estimator;
  std::string out_items, out_subjects, out_trace;
  std::string out_posterior_items, out_posterior_subjects;
  std::string prior = "vague";
  bool seed_set = false;
  std::uint64_t seed = 0;
  rk::MmlConfig mml;
  rk::ViConfig vi;
  unsigned threads = 0;
};

int run_fit(const FitArgs& a) {
  check_no_overwrite({a.matrix}, {a.out_items, a.out_subjects, a.out_trace,
                                 a.out_posterior_items, a.out_posterior_subjects});
  const auto loaded = rk::load_matrix(a.matrix, rk::matrix_format_from_name(a.format));
  const auto pruned = rk::prune(loaded);
  const rk::ResponseMatrix& m = pruned.matrix;

  ordered_json summary{{"subcommand", "fit"},
                       {"estimator", a.estimator},
                       {"subjects", m.n_subjects()},
                       {"items", m.n_items()},
                       {"pruned_subjects", pruned.removed_subjects.size()},
                       {"pruned_items", pruned.removed_items.size()}};
  ordered_json outputs;

  if (a.estimator == "mml") {
    const auto header = flags_line(
        "fit", {"--matrix " + a.matrix, "--estimator mml",
                "--quadrature-points " + std::to_string(a.mml.quadrature_points),
                "--prior-theta-sigma " + rk::detail::format_double(a.mml.prior_theta_sigma),
                "--max-iterations " + std::to_string(a.mml.max_iterations),
                "--tol " + rk::detail::format_double(a.mml.convergence_tol),
                "--difficulty-prior-sigma " +
                    rk::detail::format_double(a.mml.difficulty_prior_sigma)});
    rk::MmlConfig cfg = a.mml;
    cfg.threads = a.threads;
    const auto fit = rk::fit_mml(m, cfg);
    rk::save_params_csv(a.out_items, {"item_id", "b"}, m.item_ids(), {fit.difficulties},
                        {header});
    rk::save_params_csv(a.out_subjects, {"subject_id", "theta"}, m.subject_ids(),
                        {fit.abilities}, {header});
    outputs["items"] = a.out_items;
    outputs["subjects"] = a.out_subjects;
    if (!a.out_trace.empty()) {
      rk::save_trace_csv(a.out_trace, "iteration", "marginal_loglik", fit.loglik_trace,
                         {header});
      outputs["trace"] = a.out_trace;
    }
    summary["converged"] = fit.converged;
    summary["iterations"] = fit.iterations;
    summary["final_loglik"] = fit.loglik_trace.back();
  } else if (a.estimator == "vi") {
    const auto header = flags_line(
        "fit", {"--matrix " + a.matrix, "--estimator vi", "--prior " + a.prior,
                "--seed " + std::to_string(a.seed),
                "--mc-samples " + std::to_string(a.vi.mc_samples),
                "--max-steps " + std::to_string(a.vi.max_steps),
                "--step-size " + rk::detail::format_double(a.vi.step_size),
                "--elbo-window " + std::to_string(a.vi.elbo_window),
                "--rel-tol " + rk::detail::format_double(a.vi.rel_tol)});
    rk::ViConfig cfg = a.vi;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    rk::PriorSpec prior;
    prior.kind = rk::prior_kind_from_name(a.prior);
    const auto fit = rk::fit_vi(m, prior, cfg);
    rk::save_params_csv(a.out_items, {"item_id", "b"}, m.item_ids(), {fit.b_mean},
                        {header});
    rk::save_params_csv(a.out_subjects, {"subject_id", "theta"}, m.subject_ids(),
                        {fit.theta_mean}, {header});
    outputs["items"] = a.out_items;
    outputs["subjects"] = a.out_subjects;
    if (!a.out_posterior_items.empty()) {
      rk::save_params_csv(a.out_posterior_items, {"item_id", "b_mean", "b_std"},
                          m.item_ids(), {fit.b_mean, fit.b_std}, {header});
      outputs["posterior_items"] = a.out_posterior_items;
    }
    if (!a.out_posterior_subjects.empty()) {
      rk::save_params_csv(a.out_posterior_subjects,
                          {"subject_id", "theta_mean", "theta_std"}, m.subject_ids(),
                          {fit.theta_mean, fit.theta_std}, {header});
      outputs["posterior_subjects"] = a.out_posterior_subjects;
    }
    if (!a.out_trace.empty()) {
      rk::save_trace_csv(a.out_trace, "step", "elbo", fit.elbo_trace, {header});
      outputs["trace"] = a.out_trace;
    }
    summary["prior"] = a.prior;
    summary["converged"] = fit.converged;
    summary["steps"] = fit.steps;
    summary["final_elbo"] = fit.elbo_trace.back();
  } else {
    throw rk::DomainError("unknown estimator '" + a.estimator + "' (expected mml or vi)");
  }
  summary["outputs"] = outputs;
  print_summary(summary);
  return 0;
}

struct ScoreArgs {
  std::string matrix, format = "dense-csv", items, out;
  double prior_sigma = 1.0;
  unsigned threads = 0;
};

int run_score(const ScoreArgs& a) {
  check_no_overwrite({a.matrix, a.items}, {a.out});
  const auto m = rk::load_matrix(a.matrix, rk::matrix_format_from_name(a.format));
  const auto table = rk::load_params_csv(a.items);
  const auto& values = table.columns[0];
  // difficulties aligned to the matrix item order
  std::vector<double> bs(m.n_items());
  for (std::size_t i = 0; i < m.n_items(); ++i) {
    const auto& id = m.item_ids()[i];
    const auto it = std::find(table.ids.begin(), table.ids.end(), id);
    if (it == table.ids.end())
      throw rk::DomainError("score: no difficulty for item '" + id + "' in " + a.items);
    bs[i] = values[static_cast<std::size_t>(it - table.ids.begin())];
  }
  const auto thetas = rk::score_map(m, bs, a.prior_sigma, a.threads);
  const auto header = flags_line(
      "score", {"--matrix " + a.matrix, "--items " + a.items,
                "--prior-sigma " + rk::detail::format_double(a.prior_sigma)});
  rk::save_params_csv(a.out, {"subject_id", "theta"}, m.subject_ids(), {thetas}, {header});
  print_summary({{"subcommand", "score"},
                 {"subjects", m.n_subjects()},
                 {"outputs", {{"subjects", a.out}}}});
  return 0;
}

rk::ItemValues load_filter_values(const std::string& values_path,
                                  const std::string& matrix_path,
                                  const std::string& format, rk::StrategyKind kind) {
  if (!values_path.empty()) {
    const auto table = rk::load_params_csv(values_path);
    rk::ItemValues v;
    v.kind = kind_from_column(table.column_names[1]);
    v.ids = table.ids;
    v.values = table.columns[0];
    return v;
  }
  if (matrix_path.empty())
    throw rk::DomainError("either --values or --matrix is required");
  if (rk::value_kind_for(kind) != rk::ValueKind::percent_correct)
    throw rk::DomainError(
        "difficulty strategies need --values from a fit; --matrix only yields "
        "percent-correct");
  const auto m = rk::load_matrix(matrix_path, rk::matrix_format_from_name(format));
  return rk::percent_correct_values(m);
}

void write_filter_report(const rk::FilterReport& report, const std::string& out,
                         const std::string& header) {
  std::string content = rk::detail::comment_block({header});
  content += "item_id,value,retained\n";
  for (const auto& row : report.per_item)
    content += row.id + "," + rk::detail::format_double(row.value) + "," +
               (row.retained ? "1" : "0") + "\n";
  rk::detail::write_file_atomic(out, content);
}

struct FilterArgs {
  std::string values, matrix, format = "dense-csv";
  std::string strategy;
  double threshold = 0.0;
  std::string out;
};

int run_filter(const FilterArgs& a) {
  check_no_overwrite({a.values, a.matrix}, {a.out});
  const auto kind = rk::strategy_from_name(a.strategy);
  const auto vals = load_filter_values(a.values, a.matrix, a.format, kind);
  const auto report = rk::apply_filter(vals, {kind, a.threshold});
  const auto header = flags_line(
      "filter", {"--strategy " + a.strategy,
                 "--threshold " + rk::detail::format_double(a.threshold)});
  write_filter_report(report, a.out, header);
  print_summary({{"subcommand", "filter"},
                 {"strategy", rk::strategy_name(kind)},
                 {"threshold", a.threshold},
                 {"retained", report.retained_item_ids.size()},
                 {"retained_fraction", report.retained_fraction},
                 {"outputs", {{"report", a.out}}}});
  return 0;
}

struct SweepArgs {
  std::string values, matrix, format = "dense-csv";
  std::string strategy;
  double target_fraction = 0.0;
  std::string out;
};

int run_sweep(const SweepArgs& a) {
  check_no_overwrite({a.values, a.matrix}, {a.out});
  const auto kind = rk::strategy_from_name(a.strategy);
  const auto vals = load_filter_values(a.values, a.matrix, a.format, kind);
  const auto strategy = rk::sweep_to_fraction(vals, kind, a.target_fraction);
  const auto report = rk::apply_filter(vals, strategy);
  ordered_json summary{{"subcommand", "sweep"},
                       {"strategy", rk::strategy_name(kind)},
                       {"target_fraction", a.target_fraction},
                       {"threshold", strategy.threshold},
                       {"retained", report.retained_item_ids.size()},
                       {"retained_fraction", report.retained_fraction}};
  if (!a.out.empty()) {
    const auto header = flags_line(
        "sweep", {"--strategy " + a.strategy,
                  "--target-fraction " + rk::detail::format_double(a.target_fraction)});
    write_filter_report(report, a.out, header);
    summary["outputs"] = {{"report", a.out}};
  }
  print_summary(summary);
  return 0;
}

struct CompareArgs {
  std::string left, right, disagreement_out;
  std::size_t top_k = 0;
};

int run_compare(const CompareArgs& a) {
  check_no_overwrite({a.left, a.right}, {a.disagreement_out});
  const auto lt = rk::load_params_csv(a.left);
  const auto rt = rk::load_params_csv(a.right);
  const auto res = rk::align(lt.ids, lt.columns[0], rt.ids, rt.columns[0]);
  ordered_json summary{{"subcommand", "compare"},
                       {"n", res.pair.ids.size()},
                       {"spearman", rk::spearman(res.pair)},
                       {"rmsd", rk::rmsd(res.pair)},
                       {"only_left", res.only_x.size()},
                       {"only_right", res.only_y.size()}};
  if (!a.disagreement_out.empty()) {
    const auto k = a.top_k == 0 ? res.pair.ids.size() : a.top_k;
    const auto dis = rk::rank_disagreement(res.pair, k);
    std::string content = rk::detail::comment_block(
        {flags_line("compare", {"--left " + a.left, "--right " + a.right})});
    content += "id,rank_left,rank_right,abs_diff\n";
    for (const auto& e : dis.top)
      content += e.id + "," + rk::detail::format_double(e.rank_x) + "," +
                 rk::detail::format_double(e.rank_y) + "," +
                 rk::detail::format_double(e.abs_diff) + "\n";
    rk::detail::write_file_atomic(a.disagreement_out, content);
    summary["mean_abs_rank_diff"] = dis.mean_abs_diff;
    summary["outputs"] = {{"disagreement", a.disagreement_out}};
  }
  print_summary(summary);
  return 0;
}

struct SplitArgs {
  std::string matrix, format = "dense-csv", out_a, out_b;
  std::uint64_t seed = 0;
};

int run_split(const SplitArgs& a) {
  check_no_overwrite({a.matrix}, {a.out_a, a.out_b});
  const auto m = rk::load_matrix(a.matrix, rk::matrix_format_from_name(a.format));
  const auto halves = rk::split_half(m, a.seed);
  const auto header = flags_line(
      "split-half", {"--matrix " + a.matrix, "--seed " + std::to_string(a.seed)});
  const auto fmt = rk::matrix_format_from_name(a.format);
  rk::save_matrix(halves.first, a.out_a, fmt, {header});
  rk::save_matrix(halves.second, a.out_b, fmt, {header});
  print_summary({{"subcommand", "split-half"},
                 {"subjects_a", halves.first.n_subjects()},
                 {"subjects_b", halves.second.n_subjects()},
                 {"outputs", {{"a", a.out_a}, {"b", a.out_b}}}});
  return 0;
}

struct ReproduceArgs {
  rk::ReproduceConfig cfg;
  std::string out_dir;
};

int run_reproduce(const ReproduceArgs& a) {
  const auto report = rk::pipeline_reproduce(a.cfg, a.out_dir);
  std::cout << report.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"raschkit: Rasch response-pattern estimation and analysis"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate an artificial crowd");
  c_sim->add_option("--subjects", sim.subjects, "Number of subjects")->required();
  c_sim->add_option("--items", sim.items, "Number of items")->required();
  c_sim->add_option("--seed", sim.seed, "RNG seed")->required();
  c_sim->add_option("--theta-mean", sim.theta_mean, "Ability mean")->capture_default_str();
  c_sim->add_option("--theta-std", sim.theta_std, "Ability std")->capture_default_str();
  c_sim->add_option("--b-mean", sim.b_mean, "Difficulty mean")->capture_default_str();
  c_sim->add_option("--b-std", sim.b_std, "Difficulty std")->capture_default_str();
  c_sim->add_option("--missing-rate", sim.missing_rate, "Missing cell rate")
      ->capture_default_str();
  c_sim->add_option("--out", sim.out, "Matrix output path")->required();
  c_sim->add_option("--format", sim.format, "dense-csv or sparse-jsonl")
      ->capture_default_str();
  c_sim->add_option("--theta-out", sim.theta_out, "Ground-truth ability CSV");
  c_sim->add_option("--b-out", sim.b_out, "Ground-truth difficulty CSV");

  GradeArgs gr;
  auto* c_grade = app.add_subcommand("grade", "Grade labeled outputs against gold labels");
  c_grade->add_option("--predictions", gr.predictions, "Predictions JSONL")->required();
  c_grade->add_option("--gold", gr.gold, "Gold labels JSONL")->required();
  c_grade->add_option("--out", gr.out, "Matrix output path")->required();
  c_grade->add_option("--format", gr.format, "dense-csv or sparse-jsonl")
      ->capture_default_str();

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit item difficulties and abilities");
  c_fit->add_option("--matrix", fit.matrix, "Response matrix path")->required();
  c_fit->add_option("--format", fit.format, "dense-csv or sparse-jsonl")
      ->capture_default_str();
  c_fit->add_option("--estimator", fit.estimator, "mml or vi")->required();
  c_fit->add_option("--out-items", fit.out_items, "Item difficulty CSV")->required();
  c_fit->add_option("--out-subjects", fit.out_subjects, "Subject ability CSV")->required();
  c_fit->add_option("--out-trace", fit.out_trace, "Optimization trace CSV");
  c_fit->add_option("--out-posterior-items", fit.out_posterior_items,
                    "VI: item posterior mean/std CSV");
  c_fit->add_option("--out-posterior-subjects", fit.out_posterior_subjects,
                    "VI: subject posterior mean/std CSV");
  c_fit->add_option("--prior", fit.prior, "VI prior: vague or hierarchical")
      ->capture_default_str();
  auto* fit_seed =
      c_fit->add_option("--seed", fit.seed, "RNG seed (required for --estimator vi)");
  c_fit->add_option("--quadrature-points", fit.mml.quadrature_points, "MML grid size")
      ->capture_default_str();
  c_fit->add_option("--prior-theta-sigma", fit.mml.prior_theta_sigma,
                    "Ability prior std (both estimators)")
      ->capture_default_str();
  c_fit->add_option("--max-iterations", fit.mml.max_iterations, "MML EM cap")
      ->capture_default_str();
  c_fit->add_option("--tol", fit.mml.convergence_tol, "MML max |delta b| tolerance")
      ->capture_default_str();
  c_fit->add_option("--difficulty-prior-sigma", fit.mml.difficulty_prior_sigma,
                    "MML ridge std on b")
      ->capture_default_str();
  c_fit->add_option("--mc-samples", fit.vi.mc_samples, "VI Monte Carlo samples per step")
      ->capture_default_str();
  c_fit->add_option("--max-steps", fit.vi.max_steps, "VI step cap")->capture_default_str();
  c_fit->add_option("--step-size", fit.vi.step_size, "VI AdaGrad base step")
      ->capture_default_str();
  c_fit->add_option("--elbo-window", fit.vi.elbo_window, "VI convergence window")
      ->capture_default_str();
  c_fit->add_option("--rel-tol", fit.vi.rel_tol, "VI windowed ELBO relative tolerance")
      ->capture_default_str();
  c_fit->add_option("--threads", fit.threads, "Worker thread cap (0 = all)")
      ->capture_default_str();

  ScoreArgs sc;
  auto* c_score = app.add_subcommand("score", "MAP-score abilities with fixed difficulties");
  c_score->add_option("--matrix", sc.matrix, "Response matrix path")->required();
  c_score->add_option("--format", sc.format, "dense-csv or sparse-jsonl")
      ->capture_default_str();
  c_score->add_option("--items", sc.items, "Item difficulty CSV (item_id,b)")->required();
  c_score->add_option("--prior-sigma", sc.prior_sigma, "Ability prior std")
      ->capture_default_str();
  c_score->add_option("--out", sc.out, "Subject ability CSV")->required();
  c_score->add_option("--threads", sc.threads, "Worker thread cap (0 = all)")
      ->capture_default_str();

  FilterArgs fl;
  auto* c_filter = app.add_subcommand("filter", "Retain items by difficulty or percent-correct");
  c_filter->add_option("--values", fl.values, "Per-item values CSV (item_id,b or item_id,pc)");
  c_filter->add_option("--matrix", fl.matrix, "Matrix path (computes percent-correct)");
  c_filter->add_option("--format", fl.format, "Matrix format")->capture_default_str();
  c_filter->add_option("--strategy", fl.strategy, "AVI, AVO, UB, LB, PCUB or PCLB")
      ->required();
  c_filter->add_option("--threshold", fl.threshold, "Strategy threshold d")->required();
  c_filter->add_option("--out", fl.out, "Report CSV (item_id,value,retained)")->required();

  SweepArgs sw;
  auto* c_sweep = app.add_subcommand("sweep", "Find the threshold for a retained fraction");
  c_sweep->add_option("--values", sw.values, "Per-item values CSV");
  c_sweep->add_option("--matrix", sw.matrix, "Matrix path (computes percent-correct)");
  c_sweep->add_option("--format", sw.format, "Matrix format")->capture_default_str();
  c_sweep->add_option("--strategy", sw.strategy, "AVI, AVO, UB, LB, PCUB or PCLB")
      ->required();
  c_sweep->add_option("--target-fraction", sw.target_fraction, "Fraction to retain (0,1]")
      ->required();
  c_sweep->add_option("--out", sw.out, "Optional report CSV at the found threshold");

  CompareArgs cm;
  auto* c_compare = app.add_subcommand("compare", "Spearman/RMSD between two parameter CSVs");
  c_compare->add_option("--left", cm.left, "Left CSV")->required();
  c_compare->add_option("--right", cm.right, "Right CSV")->required();
  c_compare->add_option("--disagreement-out", cm.disagreement_out,
                        "Rank-disagreement CSV output");
  c_compare->add_option("--top-k", cm.top_k, "Disagreement rows to keep (0 = all)")
      ->capture_default_str();

  SplitArgs sp;
  auto* c_split = app.add_subcommand("split-half", "Randomly halve the subject population");
  c_split->add_option("--matrix", sp.matrix, "Response matrix path")->required();
  c_split->add_option("--format", sp.format, "dense-csv or sparse-jsonl")
      ->capture_default_str();
  c_split->add_option("--seed", sp.seed, "RNG seed")->required();
  c_split->add_option("--out-a", sp.out_a, "First half output")->required();
  c_split->add_option("--out-b", sp.out_b, "Second half output")->required();

  ReproduceArgs rp;
  auto* c_repro = app.add_subcommand(
      "reproduce", "simulate + fit both estimators + compare + split-half + sweeps");
  c_repro->add_option("--seed", rp.cfg.seed, "RNG seed")->required();
  c_repro->add_option("--out-dir", rp.out_dir, "Output directory")->required();
  c_repro->add_option("--subjects", rp.cfg.n_subjects, "Crowd size")->capture_default_str();
  c_repro->add_option("--items", rp.cfg.n_items, "Item count")->capture_default_str();
  c_repro->add_option("--missing-rate", rp.cfg.missing_rate, "Missing cell rate")
      ->capture_default_str();
  c_repro->add_option("--quadrature-points", rp.cfg.mml.quadrature_points, "MML grid size")
      ->capture_default_str();
  c_repro->add_option("--max-iterations", rp.cfg.mml.max_iterations, "MML EM cap")
      ->capture_default_str();
  c_repro->add_option("--tol", rp.cfg.mml.convergence_tol, "MML tolerance")
      ->capture_default_str();
  c_repro->add_option("--mc-samples", rp.cfg.vi.mc_samples, "VI samples per step")
      ->capture_default_str();
  c_repro->add_option("--max-steps", rp.cfg.vi.max_steps, "VI step cap")
      ->capture_default_str();
  c_repro->add_option("--step-size", rp.cfg.vi.step_size, "VI AdaGrad base step")
      ->capture_default_str();
  c_repro->add_option("--elbo-window", rp.cfg.vi.elbo_window, "VI convergence window")
      ->capture_default_str();
  c_repro->add_option("--rel-tol", rp.cfg.vi.rel_tol, "VI relative tolerance")
      ->capture_default_str();
  c_repro->add_option("--threads", rp.cfg.threads, "Worker thread cap (0 = all)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*c_sim) return run_simulate(sim);
    if (*c_grade) return run_grade(gr);
    if (*c_fit) {
      if (fit.estimator == "vi" && fit_seed->count() == 0) {
        std::cerr << "error: --seed is required for --estimator vi\n";
        return 2;
      }
      return run_fit(fit);
    }
    if (*c_score) return run_score(sc);
    if (*c_filter) return run_filter(fl);
    if (*c_sweep) return run_sweep(sw);
    if (*c_compare) return run_compare(cm);
    if (*c_split) return run_split(sp);
    if (*c_repro) return run_reproduce(rp);
  } catch (const rk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
