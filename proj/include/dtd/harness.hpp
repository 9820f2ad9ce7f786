#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtd/emphasis.hpp"
#include "dtd/learners.hpp"
#include "dtd/mrp.hpp"

namespace dtd {

enum class TaskKind {
  RW5Left,
  RW5Middle,
  RW5Right,
  Noisy10,
  RW5Tabular,
  RW5Inverted,
  RW5Dependent,
  Boyan13,
  Custom,
};

struct TaskSpec {
  TaskKind kind = TaskKind::RW5Middle;
  double reward_level = 0.0;  // Noisy10 only

  std::string name() const;
};

/// Accepts RW5_LEFT, RW5_MIDDLE, RW5_RIGHT, RW5_TABULAR, RW5_INVERTED,
/// RW5_DEPENDENT, BOYAN13 and NOISY10(<level>) (or NOISY10:<level>).
TaskSpec parse_task(std::string_view name);
Environment make_task(const TaskSpec& task);

/// Powers of two 2^-7 .. 2^0.
std::vector<double> default_alpha_grid();
/// 0, 0.4, 0.8, 0.9, 0.95, 1.
std::vector<double> default_lambda_grid();

/// One algorithm with the (lambda x alpha) cells to sweep.
struct AlgoGrid {
  Algorithm algorithm = Algorithm::TD;
  std::vector<double> lambdas = default_lambda_grid();
  std::vector<double> alphas = default_alpha_grid();
  double alpha_decay = 0.0;
  EmphasisSpec emphasis;
};

struct ExperimentConfig {
  TaskSpec task;
  /// Replaces the named task when set (task.kind should then be Custom).
  std::optional<Environment> environment;
  std::vector<AlgoGrid> algorithms;
  int runs = 50;
  long steps = 5000;
  long eval_every = 50;
  std::uint64_t base_seed = 0;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct CurveRecord {
  std::string task;
  std::string algorithm;
  double lambda = 0.0;
  double alpha = 0.0;
  std::string emphasis_kind;
  std::uint64_t seed = 0;
  long step = 0;
  double mspbe = 0.0;
};

struct AggregateRecord {
  std::string task;
  std::string algorithm;
  double lambda = 0.0;
  double alpha = 0.0;
  std::string emphasis_kind;
  long step = 0;
  double mean_mspbe = 0.0;
  double std_mspbe = 0.0;
  int n_runs = 0;
};

/// "none" for algorithms that take no emphasis.
std::string emphasis_label(const AlgoGrid& grid);

/**
 * Simulates every (algorithm, lambda, alpha, run) combination for
 * config.steps environment steps, restarting episodes as they end, and
 * records the exact MSPBE every eval_every steps. Run r uses seed
 * base_seed + r for the environment stream, shared by all algorithms.
 * Records are ordered by algorithm, lambda, alpha, run, step. A run whose
 * parameters diverge reports +inf from that point on.
 */
std::vector<CurveRecord> run_experiment(const ExperimentConfig& config);

enum class SelectionCriterion { FinalMspbe, Auc };

struct BestCell {
  std::string task;
  std::string algorithm;
  std::string emphasis_kind;
  double lambda = 0.0;
  double alpha = 0.0;
  double score = 0.0;  // mean criterion over seeds
};

/// Per (task, algorithm, emphasis_kind), the cell with the lowest mean
/// criterion. Ties go to the smaller alpha, then the smaller lambda.
std::vector<BestCell> select_best(const std::vector<CurveRecord>& records,
                                  SelectionCriterion criterion);

/// Mean and sample standard deviation per step. All records must share task,
/// algorithm, emphasis kind and hyperparameters.
std::vector<AggregateRecord> aggregate(const std::vector<CurveRecord>& records);

/// aggregate() applied to each hyperparameter group, in first-seen order.
std::vector<AggregateRecord> aggregate_groups(const std::vector<CurveRecord>& records);

/// Records of one cell, in order.
std::vector<CurveRecord> filter_cell(const std::vector<CurveRecord>& records,
                                     const BestCell& cell);

enum class OutputFormat { Csv, Json };
OutputFormat parse_format(std::string_view name);

void write_csv(std::ostream& out, const std::vector<CurveRecord>& records);
void write_csv(std::ostream& out, const std::vector<AggregateRecord>& records);
void write_json(std::ostream& out, const std::vector<CurveRecord>& records);
void write_json(std::ostream& out, const std::vector<AggregateRecord>& records);

/// Writes records to path; throws std::runtime_error on I/O failure.
void emit(const std::vector<CurveRecord>& records,
          const std::filesystem::path& path, OutputFormat format);
void emit(const std::vector<AggregateRecord>& records,
          const std::filesystem::path& path, OutputFormat format);

std::vector<CurveRecord> read_csv_records(std::istream& in);
std::vector<AggregateRecord> read_csv_aggregates(std::istream& in);

/// Shortest round-trip decimal form.
std::string format_double(double value);

}  // namespace dtd
