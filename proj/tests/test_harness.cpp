#include <cmath>
#include <sstream>

#include "doctest.h"

#include "dtd/harness.hpp"

using namespace dtd;

namespace {

CurveRecord rec(std::string algo, double lambda, double alpha, std::uint64_t seed, long step,
                double mspbe) {
  return {"RW5_LEFT", std::move(algo), lambda, alpha, "none", seed, step, mspbe};
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.task = {TaskKind::RW5Left};
  AlgoGrid td;
  td.algorithm = Algorithm::TD;
  td.lambdas = {0.0, 0.9};
  td.alphas = {0.1};
  AlgoGrid dtd = td;
  dtd.algorithm = Algorithm::DTD;
  dtd.emphasis = EmphasisSpec::count_inverse();
  c.algorithms = {td, dtd};
  c.runs = 3;
  c.steps = 500;
  c.eval_every = 100;
  c.base_seed = 17;
  return c;
}

}  // namespace

TEST_CASE("task names") {
  CHECK(parse_task("NOISY10(-1)").reward_level == -1.0);
  CHECK(parse_task("NOISY10:0.5").reward_level == 0.5);
  CHECK(parse_task("BOYAN13").kind == TaskKind::Boyan13);
  CHECK(TaskSpec{TaskKind::Noisy10, -1.0}.name() == "NOISY10(-1)");
  CHECK_THROWS_AS(parse_task("RW7"), std::invalid_argument);
}

TEST_CASE("experiment records") {
  const auto config = small_config();
  const auto a = run_experiment(config);
  CHECK(a.size() == 2 * 2 * 3 * 5);
  CHECK(a.front().step == 100);
  CHECK(a.front().seed == 17);
  CHECK(a.front().emphasis_kind == "none");
  CHECK(a.back().emphasis_kind == "count");
  for (const auto& r : a) CHECK(std::isfinite(r.mspbe));
  const auto b = run_experiment(config);
  std::ostringstream sa, sb;
  write_csv(sa, a);
  write_csv(sb, b);
  CHECK(sa.str() == sb.str());

  auto threaded = config;
  threaded.threads = 3;
  std::ostringstream st;
  write_csv(st, run_experiment(threaded));
  CHECK(st.str() == sa.str());

  auto longer = config;
  longer.steps = 5000;
  CHECK(run_experiment(longer).size() == 2 * 2 * 3 * 50);
}

TEST_CASE("adding an algorithm leaves the others unchanged") {
  auto config = small_config();
  const auto base = run_experiment(config);
  AlgoGrid etd;
  etd.algorithm = Algorithm::ETD;
  etd.lambdas = {0.5};
  etd.alphas = {0.1};
  config.algorithms.insert(config.algorithms.begin(), etd);
  const auto extended = run_experiment(config);
  std::vector<CurveRecord> tail(extended.end() - static_cast<long>(base.size()), extended.end());
  std::ostringstream a, b;
  write_csv(a, base);
  write_csv(b, tail);
  CHECK(a.str() == b.str());
}

TEST_CASE("invalid experiments") {
  auto c = small_config();
  c.eval_every = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.runs = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.algorithms.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("best cell selection") {
  std::vector<CurveRecord> r = {rec("TD", 0.0, 0.5, 0, 100, 0.3), rec("TD", 0.0, 0.25, 0, 100, 0.2)};
  auto best = select_best(r, SelectionCriterion::FinalMspbe);
  REQUIRE(best.size() == 1);
  CHECK(best[0].alpha == 0.25);
  r = {rec("TD", 0.5, 0.5, 0, 100, 0.2), rec("TD", 0.9, 0.25, 0, 100, 0.2),
       rec("TD", 0.0, 0.25, 0, 100, 0.2)};
  best = select_best(r, SelectionCriterion::FinalMspbe);
  CHECK(best[0].alpha == 0.25);
  CHECK(best[0].lambda == 0.0);
  r = {rec("TD", 0.0, 0.5, 0, 100, 1.0), rec("TD", 0.0, 0.5, 0, 200, 0.0),
       rec("TD", 0.0, 0.25, 0, 100, 0.2), rec("TD", 0.0, 0.25, 0, 200, 0.2)};
  CHECK(select_best(r, SelectionCriterion::FinalMspbe)[0].alpha == 0.5);
  CHECK(select_best(r, SelectionCriterion::Auc)[0].alpha == 0.25);
  r = {rec("TD", 0.0, 0.5, 0, 100, INFINITY), rec("TD", 0.0, 0.25, 0, 100, 5.0)};
  CHECK(select_best(r, SelectionCriterion::FinalMspbe)[0].alpha == 0.25);
}

TEST_CASE("aggregation") {
  const std::vector<CurveRecord> r = {rec("TD", 0, 0.1, 0, 100, 0.1), rec("TD", 0, 0.1, 1, 100, 0.3)};
  const auto agg = aggregate(r);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0].mean_mspbe == doctest::Approx(0.2));
  CHECK(agg[0].std_mspbe == doctest::Approx(0.1414).epsilon(1e-3));
  CHECK(agg[0].n_runs == 2);
  CHECK(aggregate({r[0]})[0].std_mspbe == 0.0);
  const std::vector<CurveRecord> same = {r[0], r[0], r[0]};
  CHECK(aggregate(same)[0].std_mspbe == 0.0);
  const std::vector<CurveRecord> mixed = {r[0], rec("TD", 0, 0.2, 0, 100, 0.1)};
  CHECK_THROWS_AS(aggregate(mixed), std::invalid_argument);
  CHECK(aggregate_groups(mixed).size() == 2);
}

TEST_CASE("CSV and JSON output") {
  std::ostringstream empty;
  write_csv(empty, std::vector<CurveRecord>{});
  CHECK(empty.str() == "task,algorithm,lambda,alpha,emphasis_kind,seed,step,mspbe\n");
  std::ostringstream empty_agg;
  write_csv(empty_agg, std::vector<AggregateRecord>{});
  CHECK(empty_agg.str() == "task,algorithm,lambda,alpha,emphasis_kind,step,mean_mspbe,std_mspbe,n_runs\n");

  const std::vector<CurveRecord> r = {rec("DTD", 0.9, 0.0078125, 3, 50, 0.1),
                                      rec("DTD", 0.9, 0.0078125, 3, 100, INFINITY)};
  std::ostringstream csv;
  write_csv(csv, r);
  std::istringstream in(csv.str());
  const auto back = read_csv_records(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].alpha == 0.0078125);
  CHECK(back[0].mspbe == 0.1);
  CHECK(std::isinf(back[1].mspbe));

  std::ostringstream json;
  write_json(json, r);
  CHECK(json.str().find("null") != std::string::npos);
  CHECK(format_double(0.1) == "0.1");
  CHECK(parse_format("json") == OutputFormat::Json);
  CHECK_THROWS_AS(parse_format("xml"), std::invalid_argument);
}
