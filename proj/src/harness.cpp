#include "dtd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json.hpp"

#include "dtd/analysis.hpp"

namespace dtd {

namespace {

constexpr std::string_view kRawHeader =
    "task,algorithm,lambda,alpha,emphasis_kind,seed,step,mspbe";
constexpr std::string_view kAggregateHeader =
    "task,algorithm,lambda,alpha,emphasis_kind,step,mean_mspbe,std_mspbe,n_runs";

struct Cell {
  std::size_t grid_index;
  double lambda;
  double alpha;
};

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  // from_chars does not accept a leading '+'.
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::invalid_argument("not a number: " + std::string(text));
  }
  return value;
}

template <typename Int>
Int parse_integer(std::string_view text) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: " + std::string(text));
  }
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

nlohmann::ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

/// One run of one cell: eval_points MSPBE values.
std::vector<double> simulate_run(const Environment& env, const AlgoConfig& algo,
                                 const MspbeEvaluator& evaluator, long steps,
                                 long eval_every, std::uint64_t seed) {
  const auto& mrp = env.mrp;
  const auto& features = env.features;
  Rng rng = make_rng(seed);
  LearnerState learner = LearnerState::zeros(features.n_features());
  EmphasisState emphasis =
      make_emphasis_state(algo.emphasis, mrp, features, learner.theta);

  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(steps / eval_every));
  long global = 0;
  const StepObserver observer = [&](const LearnerState& s) {
    ++global;
    if (global % eval_every == 0) {
      const double v = s.theta.allFinite() ? evaluator(s.theta) : 0.0;
      // Overflowing parameters can make the error NaN; report them as divergent.
      curve.push_back(std::isfinite(v) && s.theta.allFinite()
                          ? v
                          : std::numeric_limits<double>::infinity());
    }
  };
  try {
    long used = 0;
    while (used < steps) {
      used += run_episode(mrp, features, algo, emphasis, learner, rng,
                          steps - used, observer);
    }
  } catch (const std::domain_error&) {
    // Diverged: the remaining evaluation points are unbounded.
  }
  curve.resize(static_cast<std::size_t>(steps / eval_every),
               std::numeric_limits<double>::infinity());
  return curve;
}

using CellKey = std::tuple<std::string, std::string, std::string, double, double>;

CellKey key_of(const CurveRecord& r) {
  return {r.task, r.algorithm, r.emphasis_kind, r.lambda, r.alpha};
}

double finite_or_inf(double v) {
  return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
}

}  // namespace

std::string TaskSpec::name() const {
  switch (kind) {
    case TaskKind::RW5Left: return "RW5_LEFT";
    case TaskKind::RW5Middle: return "RW5_MIDDLE";
    case TaskKind::RW5Right: return "RW5_RIGHT";
    case TaskKind::Noisy10: return "NOISY10(" + format_double(reward_level) + ")";
    case TaskKind::RW5Tabular: return "RW5_TABULAR";
    case TaskKind::RW5Inverted: return "RW5_INVERTED";
    case TaskKind::RW5Dependent: return "RW5_DEPENDENT";
    case TaskKind::Boyan13: return "BOYAN13";
    case TaskKind::Custom: return "CUSTOM";
  }
  return "UNKNOWN";
}

TaskSpec parse_task(std::string_view name) {
  if (name == "RW5_LEFT") return {TaskKind::RW5Left};
  if (name == "RW5_MIDDLE") return {TaskKind::RW5Middle};
  if (name == "RW5_RIGHT") return {TaskKind::RW5Right};
  if (name == "RW5_TABULAR") return {TaskKind::RW5Tabular};
  if (name == "RW5_INVERTED") return {TaskKind::RW5Inverted};
  if (name == "RW5_DEPENDENT") return {TaskKind::RW5Dependent};
  if (name == "BOYAN13") return {TaskKind::Boyan13};
  if (name == "CUSTOM") return {TaskKind::Custom};
  if (name.starts_with("NOISY10")) {
    auto rest = name.substr(7);
    if (rest.starts_with("(") && rest.ends_with(")")) {
      rest = rest.substr(1, rest.size() - 2);
    } else if (rest.starts_with(":")) {
      rest = rest.substr(1);
    } else {
      throw std::invalid_argument("NOISY10 needs a reward level, e.g. NOISY10(-1)");
    }
    return {TaskKind::Noisy10, parse_double(rest)};
  }
  throw std::invalid_argument("unknown task: " + std::string(name));
}

Environment make_task(const TaskSpec& task) {
  switch (task.kind) {
    case TaskKind::RW5Left: return make_random_walk(5, InitialState::Left);
    case TaskKind::RW5Middle:
    case TaskKind::RW5Tabular: return make_random_walk(5, InitialState::Middle);
    case TaskKind::RW5Right: return make_random_walk(5, InitialState::Right);
    case TaskKind::Noisy10: return make_noisy_chain(task.reward_level);
    case TaskKind::RW5Inverted: {
      auto env = make_random_walk(5, InitialState::Middle);
      return Environment{env.mrp, make_feature_map(FeatureKind::Inverted, 5)};
    }
    case TaskKind::RW5Dependent: {
      auto env = make_random_walk(5, InitialState::Middle);
      return Environment{env.mrp, make_feature_map(FeatureKind::Dependent, 5)};
    }
    case TaskKind::Boyan13: return make_boyan_chain();
    case TaskKind::Custom: break;
  }
  throw std::invalid_argument("CUSTOM tasks are loaded from an environment file");
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  for (int k = 7; k >= 0; --k) grid.push_back(std::ldexp(1.0, -k));
  return grid;
}

std::vector<double> default_lambda_grid() { return {0.0, 0.4, 0.8, 0.9, 0.95, 1.0}; }

void ExperimentConfig::validate() const {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (eval_every < 1 || steps % eval_every != 0) {
    throw std::invalid_argument("eval_every must divide steps");
  }
  if (algorithms.empty()) throw std::invalid_argument("no algorithms configured");
  if (task.kind == TaskKind::Custom && !environment) {
    throw std::invalid_argument("CUSTOM task requires an environment");
  }
  const Environment env = environment ? *environment : make_task(task);
  for (const auto& grid : algorithms) {
    if (grid.lambdas.empty() || grid.alphas.empty()) {
      throw std::invalid_argument("empty hyperparameter grid");
    }
    for (double lambda : grid.lambdas) {
      for (double alpha : grid.alphas) {
        AlgoConfig{grid.algorithm, lambda, {alpha, grid.alpha_decay}, grid.emphasis}
            .validate();
      }
    }
    if (grid.emphasis.kind == EmphasisKind::Table &&
        static_cast<int>(grid.emphasis.table.size()) != env.mrp.n_states()) {
      throw std::invalid_argument("emphasis table does not match the task");
    }
    if (grid.algorithm == Algorithm::PTD &&
        grid.emphasis.kind == EmphasisKind::Constant && grid.emphasis.constant > 1.0) {
      throw std::invalid_argument("PTD preference must lie in [0, 1]");
    }
  }
}

std::string emphasis_label(const AlgoGrid& grid) {
  const bool uses = grid.algorithm == Algorithm::DTD ||
                    grid.algorithm == Algorithm::PTD ||
                    grid.algorithm == Algorithm::TDW;
  return uses ? std::string(to_string(grid.emphasis.kind)) : "none";
}

std::vector<CurveRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Environment env = config.environment ? *config.environment : make_task(config.task);
  const std::string task_name = config.task.name();
  const MspbeEvaluator evaluator(env.mrp, env.features);

  std::vector<Cell> cells;
  for (std::size_t g = 0; g < config.algorithms.size(); ++g) {
    for (double lambda : config.algorithms[g].lambdas) {
      for (double alpha : config.algorithms[g].alphas) {
        cells.push_back({g, lambda, alpha});
      }
    }
  }

  const auto eval_points = static_cast<std::size_t>(config.steps / config.eval_every);
  std::vector<std::vector<CurveRecord>> per_cell(cells.size());

  auto work = [&](std::size_t index) {
    const Cell& cell = cells[index];
    const AlgoGrid& grid = config.algorithms[cell.grid_index];
    const AlgoConfig algo{grid.algorithm, cell.lambda, {cell.alpha, grid.alpha_decay},
                          grid.emphasis};
    const std::string algo_name(to_string(grid.algorithm));
    const std::string label = emphasis_label(grid);
    auto& out = per_cell[index];
    out.reserve(eval_points * static_cast<std::size_t>(config.runs));
    for (int run = 0; run < config.runs; ++run) {
      const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(run);
      const auto curve =
          simulate_run(env, algo, evaluator, config.steps, config.eval_every, seed);
      for (std::size_t k = 0; k < curve.size(); ++k) {
        out.push_back(CurveRecord{task_name, algo_name, cell.lambda, cell.alpha, label,
                                  seed, static_cast<long>(k + 1) * config.eval_every,
                                  curve[k]});
      }
    }
  };

  unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            work(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<CurveRecord> records;
  records.reserve(cells.size() * eval_points * static_cast<std::size_t>(config.runs));
  for (auto& chunk : per_cell) {
    std::move(chunk.begin(), chunk.end(), std::back_inserter(records));
  }
  return records;
}

std::vector<BestCell> select_best(const std::vector<CurveRecord>& records,
                                  SelectionCriterion criterion) {
  if (records.empty()) throw std::invalid_argument("select_best: no records");

  // Per cell and seed: final value (latest step) or area under the curve.
  struct SeedScore {
    long last_step = -1;
    double last_value = 0.0;
    double sum = 0.0;
    long count = 0;
  };
  std::map<CellKey, std::map<std::uint64_t, SeedScore>> scores;
  std::vector<CellKey> order;
  for (const auto& r : records) {
    const auto key = key_of(r);
    auto [it, inserted] = scores.try_emplace(key);
    if (inserted) order.push_back(key);
    auto& s = it->second[r.seed];
    const double v = finite_or_inf(r.mspbe);
    if (r.step > s.last_step) {
      s.last_step = r.step;
      s.last_value = v;
    }
    s.sum += v;
    ++s.count;
  }

  std::map<std::tuple<std::string, std::string, std::string>, BestCell> best;
  std::vector<std::tuple<std::string, std::string, std::string>> groups;
  for (const auto& key : order) {
    const auto& per_seed = scores.at(key);
    double total = 0.0;
    for (const auto& [seed, s] : per_seed) {
      total += criterion == SelectionCriterion::FinalMspbe ? s.last_value
                                                           : s.sum / static_cast<double>(s.count);
    }
    const double score = total / static_cast<double>(per_seed.size());
    const auto& [task, algorithm, emphasis, lambda, alpha] = key;
    BestCell candidate{task, algorithm, emphasis, lambda, alpha, finite_or_inf(score)};
    const auto group = std::make_tuple(task, algorithm, emphasis);
    auto it = best.find(group);
    if (it == best.end()) {
      best.emplace(group, candidate);
      groups.push_back(group);
      continue;
    }
    const BestCell& cur = it->second;
    const bool better =
        std::tie(candidate.score, candidate.alpha, candidate.lambda) <
        std::tie(cur.score, cur.alpha, cur.lambda);
    if (better) it->second = candidate;
  }

  std::vector<BestCell> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(best.at(g));
  return out;
}

std::vector<AggregateRecord> aggregate(const std::vector<CurveRecord>& records) {
  if (records.empty()) return {};
  const auto key = key_of(records.front());
  std::map<long, std::vector<double>> by_step;
  for (const auto& r : records) {
    if (key_of(r) != key) {
      throw std::invalid_argument("aggregate: records from different groups");
    }
    by_step[r.step].push_back(r.mspbe);
  }
  std::vector<AggregateRecord> out;
  out.reserve(by_step.size());
  const auto& first = records.front();
  for (const auto& [step, values] : by_step) {
    const double n = static_cast<double>(values.size());
    double mean = std::numeric_limits<double>::infinity();
    double sd = std::numeric_limits<double>::infinity();
    if (std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
      // Shifted by the first value so identical runs give exactly zero spread.
      const double shift = values.front();
      double shifted_mean = 0.0;
      for (double v : values) shifted_mean += v - shift;
      shifted_mean /= n;
      double ss = 0.0;
      for (double v : values) ss += (v - shift - shifted_mean) * (v - shift - shifted_mean);
      mean = shift + shifted_mean;
      sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    out.push_back(AggregateRecord{first.task, first.algorithm, first.lambda, first.alpha,
                                  first.emphasis_kind, step, mean, sd,
                                  static_cast<int>(values.size())});
  }
  return out;
}

std::vector<AggregateRecord> aggregate_groups(const std::vector<CurveRecord>& records) {
  std::map<CellKey, std::vector<CurveRecord>> groups;
  std::vector<CellKey> order;
  for (const auto& r : records) {
    auto [it, inserted] = groups.try_emplace(key_of(r));
    if (inserted) order.push_back(it->first);
    it->second.push_back(r);
  }
  std::vector<AggregateRecord> out;
  for (const auto& key : order) {
    auto part = aggregate(groups.at(key));
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<CurveRecord> filter_cell(const std::vector<CurveRecord>& records,
                                     const BestCell& cell) {
  std::vector<CurveRecord> out;
  for (const auto& r : records) {
    if (r.task == cell.task && r.algorithm == cell.algorithm &&
        r.emphasis_kind == cell.emphasis_kind && r.lambda == cell.lambda &&
        r.alpha == cell.alpha) {
      out.push_back(r);
    }
  }
  return out;
}

OutputFormat parse_format(std::string_view name) {
  if (name == "csv") return OutputFormat::Csv;
  if (name == "json") return OutputFormat::Json;
  throw std::invalid_argument("unknown format: " + std::string(name));
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void write_csv(std::ostream& out, const std::vector<CurveRecord>& records) {
  out << kRawHeader << '\n';
  for (const auto& r : records) {
    out << r.task << ',' << r.algorithm << ',' << format_double(r.lambda) << ','
        << format_double(r.alpha) << ',' << r.emphasis_kind << ',' << r.seed << ','
        << r.step << ',' << format_double(r.mspbe) << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<AggregateRecord>& records) {
  out << kAggregateHeader << '\n';
  for (const auto& r : records) {
    out << r.task << ',' << r.algorithm << ',' << format_double(r.lambda) << ','
        << format_double(r.alpha) << ',' << r.emphasis_kind << ',' << r.step << ','
        << format_double(r.mean_mspbe) << ',' << format_double(r.std_mspbe) << ','
        << r.n_runs << '\n';
  }
}

void write_json(std::ostream& out, const std::vector<CurveRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json row;
    row["task"] = r.task;
    row["algorithm"] = r.algorithm;
    row["lambda"] = r.lambda;
    row["alpha"] = r.alpha;
    row["emphasis_kind"] = r.emphasis_kind;
    row["seed"] = r.seed;
    row["step"] = r.step;
    row["mspbe"] = number_or_null(r.mspbe);
    arr.push_back(std::move(row));
  }
  out << arr.dump() << '\n';
}

void write_json(std::ostream& out, const std::vector<AggregateRecord>& records) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json row;
    row["task"] = r.task;
    row["algorithm"] = r.algorithm;
    row["lambda"] = r.lambda;
    row["alpha"] = r.alpha;
    row["emphasis_kind"] = r.emphasis_kind;
    row["step"] = r.step;
    row["mean_mspbe"] = number_or_null(r.mean_mspbe);
    row["std_mspbe"] = number_or_null(r.std_mspbe);
    row["n_runs"] = r.n_runs;
    arr.push_back(std::move(row));
  }
  out << arr.dump() << '\n';
}

namespace {

template <typename Record>
void emit_impl(const std::vector<Record>& records, const std::filesystem::path& path,
               OutputFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (format == OutputFormat::Csv) {
    write_csv(out, records);
  } else {
    write_json(out, records);
  }
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void emit(const std::vector<CurveRecord>& records, const std::filesystem::path& path,
          OutputFormat format) {
  emit_impl(records, path, format);
}

void emit(const std::vector<AggregateRecord>& records, const std::filesystem::path& path,
          OutputFormat format) {
  emit_impl(records, path, format);
}

std::vector<CurveRecord> read_csv_records(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRawHeader) {
    throw std::invalid_argument("missing or unexpected CSV header");
  }
  std::vector<CurveRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::invalid_argument("malformed CSV row: " + line);
    out.push_back(CurveRecord{std::string(f[0]), std::string(f[1]), parse_double(f[2]),
                              parse_double(f[3]), std::string(f[4]),
                              parse_integer<std::uint64_t>(f[5]), parse_integer<long>(f[6]),
                              parse_double(f[7])});
  }
  return out;
}

std::vector<AggregateRecord> read_csv_aggregates(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kAggregateHeader) {
    throw std::invalid_argument("missing or unexpected CSV header");
  }
  std::vector<AggregateRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::invalid_argument("malformed CSV row: " + line);
    out.push_back(AggregateRecord{std::string(f[0]), std::string(f[1]), parse_double(f[2]),
                                  parse_double(f[3]), std::string(f[4]),
                                  parse_integer<long>(f[5]), parse_double(f[6]),
                                  parse_double(f[7]), parse_integer<int>(f[8])});
  }
  return out;
}

}  // namespace dtd
