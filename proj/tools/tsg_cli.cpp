// Command-line front end: instance generation, solvers, experiments,
// sample-size planning, StackExchange ingestion and the self-check suite.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsg/tsg.hpp"

namespace fs = std::filesystem;
using namespace tsg;

namespace {

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2, kData = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  bool deterministic_header = false;
  std::string command;
};

struct SyntheticFlags {
  SyntheticConfig cfg;
  std::string cost_mode = "correlated";
  bool full = false;

  void add_to(CLI::App* app, bool with_runs) {
    app->add_option("--n", cfg.n, "number of items")->capture_default_str();
    app->add_option("--budget,-B", cfg.budget, "budget")->capture_default_str();
    app->add_option("--lambda", cfg.lambda, "cost coefficient: c = 1 + lambda * mean")->capture_default_str();
    app->add_option("--dist", cfg.dist, "bernoulli | exponential | pareto:<shape> | deterministic")
        ->capture_default_str();
    app->add_option("--cost-mode", cost_mode, "correlated | independent")->capture_default_str();
    if (with_runs) {
      app->add_option("--value-fn", cfg.value_fn, "value function tag")->capture_default_str();
      app->add_option("--samples,-N", cfg.samples, "training samples per item")->capture_default_str();
      app->add_option("--instances", cfg.instances, "instances per setting")->capture_default_str();
      app->add_option("--test-reps", cfg.test_reps, "test realizations for evaluation")->capture_default_str();
      app->add_option("--threads", cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
      app->add_flag("--full", full, "run 100 instances per setting");
    }
  }

  SyntheticConfig resolve(const Globals& g) const {
    SyntheticConfig c = cfg;
    c.seed = g.seed;
    c.cost_mode = parse_cost_mode(cost_mode);
    if (full) c.instances = 100;
    c.validate();
    return c;
  }
};

std::string header_line(const Globals& g) {
  std::string line = "# tsg " + g.command + " seed=" + std::to_string(g.seed);
  if (!g.deterministic_header) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    line += std::string(" generated=") + buf;
  }
  return line;
}

/// Output sink: a file under --out, or stdout when no directory is given.
class Sink {
 public:
  Sink(const Globals& g, const std::string& name, bool csv = true) {
    if (!g.out.empty()) {
      fs::create_directories(g.out);
      file_ = std::make_unique<std::ofstream>(fs::path(g.out) / name);
      if (!*file_) throw Error("cannot write " + (fs::path(g.out) / name).string());
    }
    if (csv) stream() << header_line(g) << '\n';
  }

  std::ostream& stream() { return file_ ? static_cast<std::ostream&>(*file_) : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

Instance load_instance(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open instance file " + path, 0);
  return read_instance(f);
}

ItemSet read_order(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open order file " + path, 0);
  ItemSet ids;
  std::string line;
  long lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    for (auto part : split(line, ',')) {
      for (auto tok : split_ws(part)) ids.push_back(parse_int(tok, lineno));
    }
  }
  return ids;
}

void write_solution(const Globals& g, const std::string& algorithm, const Instance& inst, const ValueFunction& fn,
                    const Solution& sol) {
  Sink sink(g, "solution.csv");
  write_solution_header(sink.stream());
  write_solution_row(sink.stream(), {algorithm, g.seed, inst.size(), inst.budget(), fn.tag(), sol});
}

int run_verify(const Globals& g, std::size_t corpus) {
  VerifyOptions opt;
  opt.corpus = corpus;
  opt.seed = g.seed;
  const VerifyReport rep = verify_suite(opt);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  Sink sink(g, "verify.csv");
  sink.stream() << "check,pass,cases,detail\n";
  for (const auto& c : rep.checks) {
    sink.stream() << c.name << ',' << (c.pass ? "pass" : "FAIL") << ',' << c.cases << ",\"" << c.detail << "\"\n";
  }
  std::cerr << (rep.pass() ? "verify: pass" : "verify: FAIL") << '\n';
  return rep.pass() ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test score greedy toolkit for budgeted stochastic utility maximization"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value configuration file");

  Globals g;
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--out", g.out, "output directory (stdout when omitted)");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"csv"}))->capture_default_str();
  app.add_flag("--deterministic-header", g.deterministic_header, "omit the timestamp from CSV header lines");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
  SyntheticFlags gen_flags;
  gen_flags.add_to(gen, false);
  std::size_t gen_index = 0;
  std::string gen_format = "text";
  gen->add_option("--index", gen_index, "instance index")->capture_default_str();
  gen->add_option("--instance-format", gen_format, "text | json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();

  // solve / stream / celf share instance options
  std::string instance_path;
  std::string value_fn = "modular";
  std::size_t samples = 250;
  std::size_t eval_reps = 0;
  auto add_instance_opts = [&](CLI::App* sub) {
    sub->add_option("--instance,-i", instance_path, "instance file (text or JSON)")->required();
    sub->add_option("--value-fn", value_fn, "value function tag")->capture_default_str();
    sub->add_option("--samples,-N", samples, "samples per item / per evaluation")->capture_default_str();
  };

  auto* solve = app.add_subcommand("solve", "run test score greedy on an instance");
  add_instance_opts(solve);
  bool exact = false;
  solve->add_option("--eval-reps", eval_reps, "realizations for comparing candidates (default N)");
  solve->add_flag("--exact", exact, "exact scores and utilities (finite supports only)");

  auto* stream = app.add_subcommand("stream", "run the single-pass streaming variant");
  add_instance_opts(stream);
  std::string order_path;
  stream->add_option("--eval-reps", eval_reps, "realizations for comparing candidates (default N)");
  stream->add_option("--order", order_path, "arrival order file (ids; random order when omitted)");

  auto* celf_cmd = app.add_subcommand("celf", "run the lazy greedy value-oracle benchmark");
  add_instance_opts(celf_cmd);

  // compare / sweep
  auto* compare = app.add_subcommand("compare", "compare TSG and CELF on synthetic instances");
  SyntheticFlags cmp_flags;
  cmp_flags.add_to(compare, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep of TSG/CELF comparisons");
  SyntheticFlags sweep_flags;
  sweep_flags.add_to(sweep_cmd, true);
  std::string axis;
  std::vector<std::string> values;
  sweep_cmd->add_option("--axis", axis, "lambda | N | dist | value_fn")->required();
  sweep_cmd->add_option("--values", values, "axis values")->delimiter(',');

  // plan
  auto* plan = app.add_subcommand("plan", "per-item sufficient sample sizes");
  add_instance_opts(plan);
  double epsilon = 0.1;
  double delta = 0.05;
  double truncation = 1.0 - 1e-6;
  plan->add_option("--epsilon", epsilon, "relative accuracy")->capture_default_str();
  plan->add_option("--delta", delta, "failure probability")->capture_default_str();
  plan->add_option("--truncation", truncation, "quantile at which unbounded supports are cut")->capture_default_str();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "build expert instances from a StackExchange dump");
  std::string posts_path;
  std::string votes_path;
  std::size_t min_answers = 130;
  double a0 = 5.0;
  double b0 = 5.0;
  bool exclude_zero = false;
  double ingest_lambda = 0.0;
  se::SplitOptions split_opt;
  ingest->add_option("--posts", posts_path, "Posts.xml")->required();
  ingest->add_option("--votes", votes_path, "Votes.xml")->required();
  ingest->add_option("--min-answers", min_answers, "minimum answers per expert")->capture_default_str();
  ingest->add_option("--a0", a0, "prior virtual up-votes")->capture_default_str();
  ingest->add_option("--b0", b0, "prior virtual down-votes")->capture_default_str();
  ingest->add_flag("--exclude-zero-vote", exclude_zero, "drop answers without votes");
  ingest->add_option("--lambda", ingest_lambda, "cost coefficient")->capture_default_str();
  ingest->add_option("--train", split_opt.train, "training answers per expert")->capture_default_str();
  ingest->add_option("--holdout", split_opt.holdout, "test answers per expert")->capture_default_str();

  // verify
  auto* verify = app.add_subcommand("verify", "run the invariant self-check suite");
  std::size_t corpus = 40;
  verify->add_option("--corpus", corpus, "cases per check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) {
      g.command = "gen";
      const SyntheticConfig cfg = gen_flags.resolve(g);
      const Instance inst = generate_synthetic(cfg, gen_index);
      const std::string name = gen_format == "json" ? "instance.json" : "instance.txt";
      Sink sink(g, name, false);
      if (gen_format == "json") sink.stream() << instance_to_json(inst).dump(2) << '\n';
      else write_instance_text(sink.stream(), inst);
      return kOk;
    }

    if (*solve || *stream || *celf_cmd || *plan) {
      const Instance inst = load_instance(instance_path);
      const ValueFunction fn = ValueFunction::parse(value_fn);
      const std::size_t reps = eval_reps ? eval_reps : samples;
      if (samples < 1) throw ConfigError("--samples must be >= 1");

      if (*solve) {
        g.command = "solve";
        if (exact) {
          ExactOracle oracle(inst, fn);
          const ScoreTable scores = exact_scores(inst, fn);
          const Solution sol = test_score_greedy(inst, scores, oracle);
          if (!g.out.empty()) write_scores_csv(Sink(g, "scores.csv").stream(), scores);
          write_solution(g, std::string("tsg_exact/") + to_string(sol.winner), inst, fn, sol);
        } else {
          const ScoreTable scores = estimate_scores(inst, fn, samples, g.seed);
          const Solution sol = test_score_greedy(inst, scores, fn, reps, g.seed);
          if (!g.out.empty()) write_scores_csv(Sink(g, "scores.csv").stream(), scores);
          write_solution(g, std::string("tsg/") + to_string(sol.winner), inst, fn, sol);
        }
        return kOk;
      }

      if (*stream) {
        g.command = "stream";
        ItemSet order;
        if (order_path.empty()) {
          RandomStream rng(g.seed, 0, Purpose::kSplit, 1);
          order = random_arrival_order(inst, rng);
        } else {
          order = read_order(order_path);
        }
        const ScoreTable scores = estimate_scores(inst, fn, samples, g.seed);
        const auto [sol, stats] =
            streaming_tsg(inst, order, [&](ItemId id) { return scores.score(id); }, fn, reps, g.seed);
        write_solution(g, std::string("stream/") + to_string(sol.winner), inst, fn, sol);
        std::cerr << "peak_buffer_items=" << stats.peak_buffer_items << " updates=" << stats.updates
                  << " final_buffer=" << join_ids<ItemId>(stats.final_buffer) << '\n';
        return kOk;
      }

      if (*celf_cmd) {
        g.command = "celf";
        const Solution sol = celf(inst, fn, samples, g.seed);
        write_solution(g, "celf", inst, fn, sol);
        return kOk;
      }

      g.command = "plan";
      const AccuracySpec acc(epsilon, delta);
      std::vector<double> r(inst.size());
      for (std::size_t i = 0; i < inst.size(); ++i) {
        const Item& it = inst.items()[i];
        try {
          r[i] = exact_score(it, fn, inst.budget());
        } catch (const CapacityError&) {
          RandomStream rng(g.seed, static_cast<std::uint64_t>(it.id), Purpose::kEstimation);
          r[i] = score_from_samples(fn, sample_values(it.dist, samples, rng), inst.k_at(i)).r_hat;
        }
      }
      const ItemSet ranking = rank_by_score(inst, [&](ItemId id) { return r[inst.position(id)]; });
      const std::size_t cut = budget_cut(inst, ranking);
      const double r_cut = r[inst.position(ranking[std::min(cut, ranking.size() - 1)])];
      std::vector<ItemBoundInputs> inputs;
      for (std::size_t i = 0; i < inst.size(); ++i) {
        const Item& it = inst.items()[i];
        double bound = support_max(it.dist);
        if (!std::isfinite(bound)) bound = truncation_point(it.dist, truncation);
        const SupNorms norms = g_sup_norms(fn, bound, inst.k_at(i));
        inputs.push_back({inst.k_at(i), norms.g_sup, norms.g1_sup});
      }
      auto cell = [](auto&& f) -> std::string {
        try {
          return std::to_string(f());
        } catch (const UndefinedBoundError&) {
          return "undefined";
        }
      };
      std::vector<std::string> topset(inst.size(), "undefined");
      if (r_cut > 0.0) {
        const auto t = topset_samples(inputs, r_cut, acc);
        for (std::size_t i = 0; i < t.size(); ++i) topset[i] = std::to_string(t[i]);
      }
      Sink sink(g, "plan.csv");
      sink.stream() << "id,k,T_hoeffding,T_mcdiarmid,T_topset\n";
      for (std::size_t i = 0; i < inst.size(); ++i) {
        const auto& in = inputs[i];
        sink.stream() << inst.items()[i].id << ',' << in.k << ','
                      << cell([&] { return hoeffding_samples(in.k, in.g_sup, r[i], acc); }) << ','
                      << cell([&] { return mcdiarmid_samples(in.k, in.g1_sup, r[i], acc); }) << ',' << topset[i]
                      << '\n';
      }
      return kOk;
    }

    if (*compare) {
      g.command = "compare";
      const SyntheticConfig cfg = cmp_flags.resolve(g);
      const auto rows = run_comparisons(cfg);
      {
        Sink sink(g, "comparison.csv");
        write_comparison_header(sink.stream());
        for (const auto& r : rows) write_comparison_row(sink.stream(), r);
      }
      if (!g.out.empty()) {
        Sink timing(g, "timing.csv");
        write_timing_header(timing.stream());
        for (const auto& r : rows) write_timing_row(timing.stream(), r);
        Sink summary(g, "summary.csv");
        write_summary_header(summary.stream());
        write_summary_row(summary.stream(), "none", "-", summarize_rows(rows));
      }
      return kOk;
    }

    if (*sweep_cmd) {
      g.command = "sweep";
      const SyntheticConfig base = sweep_flags.resolve(g);
      const SweepAxis ax = parse_sweep_axis(axis);
      const auto cells = sweep(base, ax, values);
      if (!g.out.empty()) {
        write_sweep_outputs(g.out, ax, cells, header_line(g));
      } else {
        std::cout << header_line(g) << '\n';
        write_summary_header(std::cout);
        for (const auto& c : cells) write_summary_row(std::cout, to_string(ax), c.value, c.summary);
      }
      return kOk;
    }

    if (*ingest) {
      g.command = "ingest";
      std::ifstream posts(posts_path);
      if (!posts) throw ParseError("cannot open " + posts_path, 0);
      std::ifstream votes(votes_path);
      if (!votes) throw ParseError("cannot open " + votes_path, 0);
      const auto records = se::parse_dump(posts, votes);
      se::ProfileOptions popt;
      popt.prior = se::BetaPrior(a0, b0);
      popt.include_zero_vote = !exclude_zero;
      const auto profiles = se::build_profiles(records, min_answers, popt);
      std::cerr << records.size() << " answers, " << profiles.size() << " experts with >= " << min_answers
                << " answers\n";
      {
        Sink sink(g, "profiles.csv");
        se::write_profiles_csv(sink.stream(), profiles);
      }
      if (!g.out.empty() && !profiles.empty()) {
        const auto built = se::build_instance(profiles, ingest_lambda, g.seed, split_opt);
        Sink inst_sink(g, "instance.txt", false);
        write_instance_text(inst_sink.stream(), built.instance);
        Sink test_sink(g, "test_samples.csv");
        se::write_test_samples_csv(test_sink.stream(), built.test_samples);
      }
      return kOk;
    }

    if (*verify) {
      g.command = "verify";
      return run_verify(g, corpus);
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
