// Acceptance harness. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
//
//   acceptance --cli PATH [--work DIR]    criteria 3-8 (minutes)
//   acceptance --full [--work DIR]        criteria 1-2 (the seed sweep, ~30 min)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ecladts/concepts.hpp"
#include "ecladts/error.hpp"
#include "ecladts/io.hpp"
#include "ecladts/ops.hpp"
#include "ecladts/report.hpp"
#include "ecladts/synthdata.hpp"
#include "ecladts/trainer.hpp"
#include "ecladts/validation.hpp"
#include "properties.hpp"
#include "support.hpp"

using namespace ecladts;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradBudgetSeconds = 60.0;
constexpr double kClusterToleranceSigma = 0.1;
constexpr double kClusterBudgetSeconds = 10.0;
constexpr std::size_t kPropertyCases = 1000;
constexpr double kWorkedTolerance = 1e-12;
constexpr double kTrainBudgetSeconds = 300.0;
constexpr std::size_t kSeeds = 10;
constexpr std::size_t kRequiredPerfectSeeds = 8;
constexpr double kLmAlignedFraction = 0.5;

// Training protocol of the seed sweep.
constexpr double kLearningRate = 1e-3;
constexpr std::size_t kMaxEpochs = 40;
constexpr std::size_t kSweepSamples = 2560;
constexpr std::size_t kSweepLength = 256;
constexpr std::size_t kKMeansMaxBatches = 1000;
const std::vector<std::size_t> kConceptGrid = {3, 5, 10, 15, 20};
const std::vector<std::string> kDatasets = {"synthetic-l2", "synthetic-l4", "synthetic-lm"};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void verdict(const std::string& id, bool ok, const std::string& detail) {
  std::printf("%s criterion %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------- criterion 3

struct ContractTally {
  std::size_t runs = 0;
  std::size_t violations = 0;
  std::string first;

  void check(const ConceptReport& r, const std::string& what) {
    ++runs;
    double max_abs = 0.0;
    bool in_range = true;
    for (double v : r.importance.values) {
      max_abs = std::max(max_abs, std::abs(v));
      in_range = in_range && v >= -1.0 && v <= 1.0;
    }
    const bool ok = in_range && (r.importance.all_zero ? max_abs == 0.0 : max_abs == 1.0);
    if (!ok && violations++ == 0) first = what;
  }
};

void criterion_importance_contract() {
  ContractTally tally;
  std::size_t flips = 0, flip_failures = 0;
  for (const std::string& name : kDatasets) {
    const Dataset d = generate(name, 128, 128, 1);
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      const Model m =
          Model::build(ModelSpec::defaults("tiny-cnn", d.spec.ch, d.spec.w, d.spec.num_classes), seed);
      ExtractionOptions plus;
      plus.kmeans.max_batches = 100;
      ExtractionOptions minus = plus;
      minus.wrapper_sign = -1.0;
      const ConceptInputs in_plus = prepare_concept_inputs(m, d, plus);
      const ConceptInputs in_minus = prepare_concept_inputs(m, d, minus);
      for (std::size_t n_c : {3u, 5u, 10u}) {
        const std::string what = name + " seed " + std::to_string(seed) + " n_c " + std::to_string(n_c);
        const ConceptReport ts = eclad_from_inputs(in_plus, d, Method::EcladTs, n_c, seed, plus);
        const ConceptReport ts_neg = eclad_from_inputs(in_minus, d, Method::EcladTs, n_c, seed, minus);
        const ConceptReport van = eclad_from_inputs(in_plus, d, Method::EcladVanilla, n_c, seed, plus);
        MultiVisionOptions mo;
        mo.kmeans.max_batches = 100;
        const ConceptReport mv = multivision_baseline(m, d, n_c, seed, mo);
        tally.check(ts, "eclad-ts " + what);
        tally.check(ts_neg, "eclad-ts (negated) " + what);
        tally.check(van, "eclad-vanilla " + what);
        tally.check(mv, "multivision " + what);
        ++flips;
        bool same = ts.importance.values.size() == ts_neg.importance.values.size();
        for (std::size_t i = 0; same && i < ts.importance.values.size(); ++i) {
          same = ts_neg.importance.values[i] == -ts.importance.values[i];
        }
        if (!same) ++flip_failures;
      }
    }
  }
  verdict("3", tally.violations == 0 && flip_failures == 0,
          std::to_string(tally.runs) + " extraction runs, " + std::to_string(tally.violations) +
              " contract violations" + (tally.violations ? " (first: " + tally.first + ")" : "") +
              "; sign flip exact in " + std::to_string(flips - flip_failures) + "/" +
              std::to_string(flips));
}

// ---------------------------------------------------------------- criterion 4

using testing::check_gradients;
using testing::random_tensor;

Var projected(Tape& tape, const Var& v, std::uint64_t seed) {
  Rng rng(seed);
  return ops::sum(ops::mul(v, tape.leaf(random_tensor(v.shape(), rng))));
}

void criterion_gradients() {
  const auto start = Clock::now();
  Rng rng(2024);
  struct Case {
    std::string name;
    testing::ScalarBuilder f;
    std::vector<Tensor> inputs;
  };
  std::vector<Case> cases;
  cases.push_back({"conv1d",
                   [](Tape& t, const std::vector<Var>& v) {
                     return projected(t, ops::conv1d(v[0], v[1], v[2], 2, 2), 1);
                   },
                   {random_tensor({2, 3, 16}, rng), random_tensor({4, 3, 5}, rng),
                    random_tensor({4}, rng)}});
  cases.push_back({"relu",
                   [](Tape& t, const std::vector<Var>& v) { return projected(t, ops::relu(v[0]), 2); },
                   {random_tensor({4, 9}, rng)}});
  cases.push_back({"linear",
                   [](Tape& t, const std::vector<Var>& v) {
                     return projected(t, ops::linear(v[0], v[1], v[2]), 3);
                   },
                   {random_tensor({3, 5}, rng), random_tensor({4, 5}, rng), random_tensor({4}, rng)}});
  cases.push_back({"global_avg_pool",
                   [](Tape& t, const std::vector<Var>& v) {
                     return projected(t, ops::global_avg_pool(v[0]), 4);
                   },
                   {random_tensor({2, 3, 11}, rng)}});
  cases.push_back({"max_pool1d",
                   [](Tape& t, const std::vector<Var>& v) {
                     return projected(t, ops::max_pool1d(v[0], 3, 2), 5);
                   },
                   {random_tensor({2, 3, 11}, rng)}});
  for (bool training : {true, false}) {
    cases.push_back({std::string("batchnorm1d ") + (training ? "train" : "eval"),
                     [training](Tape& t, const std::vector<Var>& v) {
                       Tensor mean({3}, 0.1);
                       Tensor var({3}, 1.3);
                       return projected(t, ops::batchnorm1d(v[0], v[1], v[2], {mean, var}, training), 6);
                     },
                     {random_tensor({4, 3, 6}, rng), random_tensor({3}, rng), random_tensor({3}, rng)}});
  }
  cases.push_back({"concat/add/scale/mul/mean",
                   [](Tape& t, const std::vector<Var>& v) {
                     const Var c = ops::concat_channels({v[0], v[1]});
                     return ops::add(projected(t, ops::scale(c, -1.5), 7), ops::mean(ops::mul(v[0], v[0])));
                   },
                   {random_tensor({2, 2, 5}, rng), random_tensor({2, 3, 5}, rng)}});
  cases.push_back({"softmax_nll",
                   [](Tape&, const std::vector<Var>& v) {
                     static const int targets[] = {0, 2, 1, 2};
                     return ops::softmax_nll(v[0], targets);
                   },
                   {random_tensor({4, 3}, rng, 2.0)}});
  for (double sign : {1.0, -1.0}) {
    cases.push_back({sign > 0 ? "logit_spread" : "logit_spread (negated)",
                     [sign](Tape&, const std::vector<Var>& v) { return ops::logit_spread(v[0], sign); },
                     {random_tensor({3, 4}, rng)}});
  }

  // g(f(x)) through whole random models, with respect to the input.
  std::vector<Model> models;
  models.reserve(6);  // the builders keep pointers into this vector
  for (const std::string arch : {"tiny-cnn", "mini-inception", "mini-resnet"}) {
    for (std::uint64_t seed = 0; seed < 2; ++seed) {
      models.push_back(Model::build(ModelSpec::defaults(arch, 2, 32, 3), seed));
      const Model* m = &models.back();
      cases.push_back({"g(f(x)) " + arch + " seed " + std::to_string(seed),
                       [m](Tape& t, const std::vector<Var>& v) {
                         return ops::logit_spread(m->forward(t, v[0]).logits);
                       },
                       {random_tensor({2, 2, 32}, rng)}});
    }
  }

  double worst = 0.0;
  std::size_t checked = 0;
  std::string worst_case;
  for (const Case& c : cases) {
    const auto r = check_gradients(c.f, c.inputs, kGradStep);
    checked += r.checked;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_case = c.name + ", " + r.worst;
    }
  }
  const double elapsed = seconds_since(start);
  verdict("4", worst < kGradTolerance && elapsed < kGradBudgetSeconds,
          std::to_string(cases.size()) + " cases, " + std::to_string(checked) +
              " entries, max relative error " + fmt("%.3g", worst) + " (tolerance " +
              fmt("%.0e", kGradTolerance) + ", h " + fmt("%.0e", kGradStep) + ") in " +
              fmt("%.1f s", elapsed) + (worst >= kGradTolerance ? "; worst: " + worst_case : ""));
}

// ---------------------------------------------------------------- criterion 5

void criterion_clustering() {
  const auto start = Clock::now();
  const std::size_t n = 200, dim = 8;
  const double sigma = 1.0;
  double worst = 0.0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    Rng rng = Rng::derive(inst, 5);
    // Two well separated centers, unit-variance isotropic noise.
    std::vector<double> centers(2 * dim);
    for (double& v : centers) v = 6.0 * rng.normal();
    std::vector<double> rows(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = i % 2;
      for (std::size_t j = 0; j < dim; ++j) rows[i * dim + j] = centers[k * dim + j] + sigma * rng.normal();
    }
    KMeansOptions o;
    o.n_c = 2;
    o.batch_size = 32;
    o.seed = inst;
    const Centroids mb = minibatch_kmeans_fit(rows, dim, o);
    const Centroids ll = lloyd_reference(rows, dim, 2, inst);
    for (std::size_t q = 0; q < mb.n_c; ++q) {
      double best = 1e300;
      for (std::size_t r = 0; r < ll.n_c; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
          const double d = mb.row(q)[j] - ll.row(r)[j];
          s += d * d;
        }
        best = std::min(best, std::sqrt(s));
      }
      worst = std::max(worst, best);
    }
  }
  const double elapsed = seconds_since(start);
  verdict("5", worst <= kClusterToleranceSigma * sigma && elapsed < kClusterBudgetSeconds,
          "5 instances (200 x 8), max centroid distance to Lloyd " + fmt("%.4f", worst) +
              " (tolerance " + fmt("%.2f", kClusterToleranceSigma * sigma) + ") in " +
              fmt("%.2f s", elapsed));
}

// ---------------------------------------------------------------- criterion 6

void criterion_properties() {
  const auto results = testing::run_property_suite(kPropertyCases, 6);
  bool ok = true;
  std::string detail;
  for (const auto& [name, t] : results) {
    ok = ok && t.failures == 0 && t.cases >= kPropertyCases;
    if (!detail.empty()) detail += ", ";
    detail += name + " " + std::to_string(t.cases - t.failures) + "/" + std::to_string(t.cases);
  }
  verdict("6", ok && results.size() == 6, detail);
}

// ---------------------------------------------------------------- criterion 7

int run_in(const fs::path& dir, const std::string& cli, const std::string& args) {
  const std::string cmd = "cd '" + dir.string() + "' && '" + cli + "' " + args + " > log.txt 2>&1";
  return std::system(cmd.c_str());
}

void criterion_determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) {
    verdict("7", false, "no --cli executable given");
    return;
  }
  const std::vector<std::string> chain = {
      "gen --dataset synthetic-lm --n 256 --w 128 --seed 3 --out data",
      "train --dataset data --seed 3 --epochs 3 --lr 1e-3 --out train",
      "extract --dataset data --checkpoint train/checkpoint.bin --seed 3 --method eclad-ts "
      "--n-concepts 5 --out ce",
      "validate --report ce/concepts.json --dataset data --out val"};
  const std::vector<std::string> artifacts = {"data/meta.json",    "data/data.bin",
                                              "train/checkpoint.bin", "ce/concepts.json",
                                              "ce/concepts.centroids.bin", "val/alignment.json"};
  std::vector<fs::path> dirs = {work / "determinism_a", work / "determinism_b"};
  for (const fs::path& d : dirs) {
    fs::remove_all(d);
    fs::create_directories(d);
    for (const std::string& step : chain) {
      if (run_in(d, cli, step) != 0) {
        verdict("7", false, "'" + step + "' failed in " + d.string());
        return;
      }
    }
  }
  std::size_t identical = 0;
  std::string differing;
  for (const std::string& a : artifacts) {
    if (read_bytes(dirs[0] / a) == read_bytes(dirs[1] / a)) {
      ++identical;
    } else {
      differing += " " + a;
    }
  }
  verdict("7", identical == artifacts.size(),
          std::to_string(identical) + "/" + std::to_string(artifacts.size()) +
              " artifacts byte-identical across two gen/train/extract/validate chains" +
              (differing.empty() ? "" : "; differing:" + differing));
}

// ---------------------------------------------------------------- criterion 8

void criterion_worked_examples() {
  std::vector<std::string> failed;
  auto near = [&](const std::string& what, double got, double want) {
    if (!(std::abs(got - want) <= kWorkedTolerance)) failed.push_back(what + " = " + fmt("%.17g", got));
  };
  const std::vector<double> y2 = {1, 0}, y3 = {3, 1, 1};
  near("g(1,0)", wrapper_g(y2), std::sqrt(2.0));
  near("g(3,1,1)", wrapper_g(y3), 4.0);

  const ImportanceTable t = importance({{0.4, -0.2}}, {{1, 1}}, 2, 1);
  near("I(c0)", t.at(0, 0), 1.0);
  near("I(c1)", t.at(1, 0), -0.5);

  Mask a(10, 0), b(10, 0);
  a[0] = 1;
  b[5] = 1;
  near("DST single point", sample_dst(a, b, 1, 10), 0.5);

  const DstTable rc_table{1, 2, {0.05, 0.07}};
  near("RC", representation_correctness(associate(rc_table, {true}), rc_table), -0.06);

  Association assoc;
  assoc.primitive = {0u, 0u, std::nullopt};
  const std::vector<double> imp = {1.0, 0.5, 0.1};
  near("IC", importance_correctness(assoc, imp).value, 0.65);

  std::string detail = "7 worked examples at tolerance " + fmt("%.0e", kWorkedTolerance);
  for (const std::string& f : failed) detail += "; wrong: " + f;
  verdict("8", failed.empty(), detail);
}

// ---------------------------------------------------------- criteria 1 and 2

struct SweepModel {
  std::string dataset;
  std::uint64_t seed = 0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
  Model model;
};

double median(std::vector<double> v) { return quartiles(std::move(v)).median; }

void full_sweep(const fs::path& work) {
  fs::create_directories(work);
  TrainConfig tc;
  tc.lr = kLearningRate;
  tc.max_epochs = kMaxEpochs;
  tc.augment = {0.1, 4, 0.05, 0.05};

  std::string c1_detail;
  bool c1_ok = true;
  ContractTally contract;
  std::string c2_detail;
  bool c2_ok = true;

  for (const std::string& name : kDatasets) {
    const Dataset d = generate(name, kSweepSamples, kSweepLength, 0);
    const fs::path ledger = work / (name + "-ledger.csv");
    fs::remove(ledger);
    std::size_t perfect = 0;
    double slowest = 0.0;

    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      const ModelSpec spec = ModelSpec::defaults("tiny-cnn", d.spec.ch, d.spec.w, d.spec.num_classes);
      Model m = Model::build(spec, seed);
      TrainConfig c = tc;
      c.seed = seed;
      const auto t0 = Clock::now();
      const TrainResult r = train(m, d, split(d.size(), c.split_fraction, seed), c);
      const double secs = seconds_since(t0);
      slowest = std::max(slowest, secs);
      const bool ok = r.report.best_val_accuracy == 1.0 && secs <= kTrainBudgetSeconds;
      perfect += ok;
      std::printf("  %s seed %llu: val accuracy %.4f, %zu epochs, %.1f s\n", name.c_str(),
                  static_cast<unsigned long long>(seed), r.report.best_val_accuracy,
                  r.report.epochs.size(), secs);
      std::fflush(stdout);

      ExtractionOptions eo;
      eo.kmeans.max_batches = kKMeansMaxBatches;
      const ConceptInputs in = prepare_concept_inputs(m, d, eo);
      MultiVisionOptions mo;
      mo.kmeans.max_batches = kKMeansMaxBatches;
      for (std::size_t n_c : kConceptGrid) {
        for (Method method : {Method::EcladTs, Method::EcladVanilla, Method::MultiVision}) {
          const ConceptReport rep = method == Method::MultiVision
                                        ? multivision_baseline(m, d, n_c, seed, mo)
                                        : eclad_from_inputs(in, d, method, n_c, seed, eo);
          contract.check(rep, to_string(method) + " " + name + " seed " + std::to_string(seed));
          const AlignmentReport a = validate_run(rep, d);
          append_ledger(ledger, {name, "tiny-cnn", to_string(method), seed, n_c, a.rc, a.ic.value});
        }
      }
    }
    c1_ok = c1_ok && perfect >= kRequiredPerfectSeeds;
    if (!c1_detail.empty()) c1_detail += ", ";
    c1_detail += name + " " + std::to_string(perfect) + "/" + std::to_string(kSeeds) +
                 fmt(" (slowest %.0f s)", slowest);

    const auto rows = read_ledger(ledger);
    const json summary = summarize_ledger(rows);
    write_json(work / (name + "-summary.json"), summary);
    std::vector<double> ts, van, mv;
    for (const LedgerRow& row : rows) {
      (row.method == "eclad-ts" ? ts : row.method == "eclad-vanilla" ? van : mv).push_back(row.rc);
    }
    const double m_ts = median(ts), m_van = median(van), m_mv = median(mv);
    bool ok = m_ts >= m_mv;
    std::string part = name + fmt(": median RC ts %+.4f, vanilla %+.4f, multivision %+.4f", m_ts, m_van, m_mv);
    if (name == "synthetic-lm") {
      const double aligned = static_cast<double>(std::count_if(
                                 ts.begin(), ts.end(), [](double v) { return v > kRcSentinel; })) /
                             static_cast<double>(ts.size());
      ok = ok && aligned >= kLmAlignedFraction && m_van <= m_ts;
      part += fmt(", ts aligned in %.0f%% of runs", 100.0 * aligned);
    }
    c2_ok = c2_ok && ok;
    if (!c2_detail.empty()) c2_detail += "; ";
    c2_detail += part;
  }
  verdict("1", c1_ok, c1_detail);
  verdict("2", c2_ok, c2_detail);
  verdict("3 (sweep runs)", contract.violations == 0,
          std::to_string(contract.runs) + " extraction runs, " +
              std::to_string(contract.violations) + " importance contract violations" +
              (contract.violations ? " (first: " + contract.first + ")" : ""));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ecladts acceptance harness"};
  bool full = false;
  std::string cli;
  std::string work = (fs::temp_directory_path() / "ecladts_acceptance").string();
  app.add_flag("--full", full, "run the seed sweep (criteria 1 and 2)");
  app.add_option("--cli", cli, "path to the ecladts executable (criterion 7)");
  app.add_option("--work", work, "scratch directory for artifacts");
  CLI11_PARSE(app, argc, argv);
  if (!cli.empty()) cli = fs::absolute(cli).string();

  try {
    if (full) {
      full_sweep(work);
    } else {
      fs::create_directories(work);
      criterion_importance_contract();
      criterion_gradients();
      criterion_clustering();
      criterion_properties();
      criterion_determinism(cli, work);
      criterion_worked_examples();
    }
  } catch (const std::exception& e) {
    std::printf("FAIL harness aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
