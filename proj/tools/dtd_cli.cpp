// Command-line front end: run, sweep, verify, fixed-point.

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dtd/analysis.hpp"
#include "dtd/harness.hpp"
#include "dtd/json_io.hpp"
#include "dtd/verify.hpp"

namespace {

using namespace dtd;

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  for (const auto& p : split(text)) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), v);
    if (ec != std::errc() || ptr != p.data() + p.size()) {
      throw std::invalid_argument("bad number in grid: " + p);
    }
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty grid");
  return values;
}

Json vector_json(const Vector& v) {
  auto arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

void write_records(const std::vector<CurveRecord>& records, bool aggregated,
                   const std::string& out, OutputFormat format) {
  if (aggregated) {
    const auto agg = aggregate_groups(records);
    if (out.empty() || out == "-") {
      format == OutputFormat::Csv ? write_csv(std::cout, agg) : write_json(std::cout, agg);
    } else {
      emit(agg, out, format);
    }
  } else if (out.empty() || out == "-") {
    format == OutputFormat::Csv ? write_csv(std::cout, records) : write_json(std::cout, records);
  } else {
    emit(records, out, format);
  }
}

struct RunArgs {
  std::string task = "RW5_MIDDLE";
  std::string env_file;
  std::string algos = "TD,DTD";
  std::string lambdas;
  std::string alphas;
  double alpha_decay = 0.0;
  std::string emphasis = "count";
  int runs = 50;
  long steps = 5000;
  long eval_every = 50;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
  std::string format = "csv";
  bool aggregated = false;
};

int do_run(const RunArgs& a) {
  ExperimentConfig config;
  if (!a.env_file.empty()) {
    config.environment = load_environment(a.env_file);
    config.task = TaskSpec{TaskKind::Custom};
  } else {
    config.task = parse_task(a.task);
  }
  const EmphasisSpec emphasis = parse_emphasis(a.emphasis);
  for (const auto& name : split(a.algos)) {
    AlgoGrid grid;
    grid.algorithm = parse_algorithm(name);
    if (!a.lambdas.empty()) grid.lambdas = parse_grid(a.lambdas);
    if (!a.alphas.empty()) grid.alphas = parse_grid(a.alphas);
    grid.alpha_decay = a.alpha_decay;
    grid.emphasis = emphasis;
    config.algorithms.push_back(std::move(grid));
  }
  config.runs = a.runs;
  config.steps = a.steps;
  config.eval_every = a.eval_every;
  config.base_seed = a.seed;
  config.threads = a.threads;
  config.validate();
  write_records(run_experiment(config), a.aggregated, a.out, parse_format(a.format));
  return 0;
}

int do_sweep(const std::string& path, const std::string& out, const std::string& format,
             bool aggregated) {
  const std::filesystem::path file(path);
  const auto config = experiment_from_json(read_json_file(file), file.parent_path());
  const auto records = run_experiment(config);
  write_records(records, aggregated, out, parse_format(format));
  for (const auto& best : select_best(records, SelectionCriterion::FinalMspbe)) {
    std::cerr << best.task << ' ' << best.algorithm << ' ' << best.emphasis_kind
              << " lambda=" << format_double(best.lambda)
              << " alpha=" << format_double(best.alpha)
              << " final_mspbe=" << format_double(best.score) << '\n';
  }
  return 0;
}

int do_verify(const std::string& filter, std::uint64_t seed) {
  VerifyOptions options;
  options.filter = filter;
  options.seed = seed;
  const auto results = verify_all(options);
  if (results.empty()) {
    std::cerr << "no check matches '" << filter << "'\n";
    return 1;
  }
  const Json report = report_json(results);
  std::cout << report.dump(2) << '\n';
  return report["all_pass"].get<bool>() ? 0 : 1;
}

int do_fixed_point(const std::string& task, const std::string& env_file,
                   const std::string& emphasis_text, double lambda) {
  const Environment env = env_file.empty() ? make_task(parse_task(task)) : load_environment(env_file);
  const EmphasisSpec spec = parse_emphasis(emphasis_text);
  if (spec.adaptive()) {
    throw std::invalid_argument("fixed-point needs a fixed emphasis, not " +
                                std::string(to_string(spec.kind)));
  }
  const Vector d = stationary_distribution(env.mrp);
  Vector f;
  if (spec.kind == EmphasisKind::CountInverse) {
    f = emphasis_from_frequencies(d, spec.epsilon_floor);
  } else {
    const Vector theta0 = Vector::Zero(env.features.n_features());
    f = make_emphasis_state(spec, env.mrp, env.features, theta0).values;
  }
  const auto sys = compute_A_b(env.mrp, env.features, f, lambda, d);
  const Vector theta = fixed_point(sys);
  const auto cond_i = contraction_condition(env.mrp, f, lambda, d);
  const auto cond_ii = contraction_condition(env.mrp, f, lambda, d, 0.0);

  Json out;
  out["emphasis"] = vector_json(f);
  out["lambda"] = lambda;
  out["theta_star"] = vector_json(theta);
  out["residual"] = (sys.a * theta + sys.b).cwiseAbs().maxCoeff();
  out["mspbe"] = mspbe(theta, env.mrp, env.features);
  out["max_symmetric_eigenvalue_A"] = symmetric_max_eigenvalue(sys.a);
  auto report = [](const ContractionReport& r) {
    Json j;
    j["applicable"] = r.applicable;
    j["holds"] = r.holds;
    j["margin"] = finite_or_null(r.margin);
    j["norm_f"] = r.norm_f;
    j["sigma_min_f"] = r.sigma_min_f;
    j["norm_one"] = r.norm_one;
    j["norm_I_minus_lambda_P"] = r.norm_resolvent;
    j["bound"] = finite_or_null(r.bound);
    if (r.kappa) {
      j["kappa"] = *r.kappa;
      j["r_max"] = r.r_max;
    }
    return j;
  };
  out["condition_i"] = report(cond_i);
  out["condition_ii"] = report(cond_ii);
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discerning TD learning: experiments and checks"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Sweep algorithms on one task and write MSPBE curves");
  run->add_option("--task", run_args.task, "RW5_LEFT|RW5_MIDDLE|RW5_RIGHT|RW5_TABULAR|"
                                           "RW5_INVERTED|RW5_DEPENDENT|BOYAN13|NOISY10(<r>)");
  run->add_option("--env-file", run_args.env_file, "Environment JSON replacing --task");
  run->add_option("--algo", run_args.algos, "Comma list of TD,DTD,ETD,PTD,TDW");
  run->add_option("--lambda", run_args.lambdas, "Comma list of lambdas");
  run->add_option("--alpha", run_args.alphas, "Comma list of step sizes");
  run->add_option("--alpha-decay", run_args.alpha_decay, "alpha_t = alpha / (1 + t / decay)");
  run->add_option("--emphasis", run_args.emphasis,
                  "count|noise|abs-td|constant:<c>|table:<v,...>, optional @<eps>");
  run->add_option("--runs", run_args.runs);
  run->add_option("--steps", run_args.steps);
  run->add_option("--eval-every", run_args.eval_every);
  run->add_option("--seed", run_args.seed);
  run->add_option("--threads", run_args.threads, "0 uses all cores");
  run->add_option("--out", run_args.out, "Output path, stdout if omitted");
  run->add_option("--format", run_args.format)->check(CLI::IsMember({"csv", "json"}));
  run->add_flag("--aggregate", run_args.aggregated, "Write mean/std per step instead of raw curves");

  std::string sweep_config, sweep_out, sweep_format = "csv";
  bool sweep_aggregated = false;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment described by a JSON config");
  sweep->add_option("--config", sweep_config)->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", sweep_out);
  sweep->add_option("--format", sweep_format)->check(CLI::IsMember({"csv", "json"}));
  sweep->add_flag("--aggregate", sweep_aggregated);

  std::string verify_filter;
  std::uint64_t verify_seed = VerifyOptions{}.seed;
  auto* verify = app.add_subcommand("verify", "Run the numerical self-checks");
  verify->add_option("--filter", verify_filter, "Substring of the check names to run");
  verify->add_option("--seed", verify_seed);
  verify->add_flag_callback("--list", [] {
    for (const auto& name : verify_check_names()) std::cout << name << '\n';
    std::exit(0);
  }, "List check names");

  std::string fp_task = "RW5_MIDDLE", fp_env, fp_emphasis = "count";
  double fp_lambda = 0.0;
  auto* fp = app.add_subcommand("fixed-point", "Print theta*, MSPBE(theta*) and contraction margins");
  fp->add_option("--task", fp_task);
  fp->add_option("--env-file", fp_env);
  fp->add_option("--emphasis", fp_emphasis);
  fp->add_option("--lambda", fp_lambda)->check(CLI::Range(0.0, 1.0));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return do_run(run_args);
    if (*sweep) return do_sweep(sweep_config, sweep_out, sweep_format, sweep_aggregated);
    if (*verify) return do_verify(verify_filter, verify_seed);
    if (*fp) return do_fixed_point(fp_task, fp_env, fp_emphasis, fp_lambda);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
