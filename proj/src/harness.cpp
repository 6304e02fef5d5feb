#include "shlaw/harness.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Seed-stream tags for the independent random streams of one run.
constexpr std::uint64_t kPoolTag = 0x706f6f6cull;    // pool sampling
constexpr std::uint64_t kDataTag = 0x63757276ull;    // curve generation
constexpr std::uint64_t kAllocTag = 0x616c6c6full;   // per-strategy allocator seed
constexpr std::uint64_t kExtrapTag = 0x65787472ull;  // post-hoc GP extrapolation

bool loss_equal(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::UA: return "ua";
    case Strategy::SH: return "sh";
    case Strategy::SH_LMC: return "sh_lmc";
    case Strategy::SH_DE_PL: return "sh_de_pl";
    case Strategy::SH_DE_EXP: return "sh_de_exp";
    case Strategy::SH_DE_MMF: return "sh_de_mmf";
  }
  fail("bad strategy");
}

Strategy strategy_from_name(std::string_view name) {
  if (name == "ua") return Strategy::UA;
  if (name == "sh") return Strategy::SH;
  if (name == "sh_lmc") return Strategy::SH_LMC;
  if (name == "sh_de_pl") return Strategy::SH_DE_PL;
  if (name == "sh_de_exp") return Strategy::SH_DE_EXP;
  if (name == "sh_de_mmf") return Strategy::SH_DE_MMF;
  fail("unknown strategy '" + std::string(name) + "'");
}

std::string_view dataset_name(DatasetKind d) {
  switch (d) {
    case DatasetKind::SyntheticHoffmann: return "synthetic_hoffmann";
    case DatasetKind::SyntheticBesiroglu: return "synthetic_besiroglu";
    case DatasetKind::RecordedFile: return "recorded_file";
  }
  fail("bad dataset kind");
}

DatasetKind dataset_from_name(std::string_view name) {
  if (name == "synthetic_hoffmann") return DatasetKind::SyntheticHoffmann;
  if (name == "synthetic_besiroglu") return DatasetKind::SyntheticBesiroglu;
  if (name == "recorded_file") return DatasetKind::RecordedFile;
  fail("unknown dataset '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (pool_sizes.empty()) fail("pool_sizes must be non-empty");
  for (int m : pool_sizes)
    if (m < 1) fail("pool sizes must be at least 1");
  if (budgets_pflops.empty()) fail("budgets must be non-empty");
  for (double b : budgets_pflops)
    if (!(b > 0)) fail("budgets must be positive");
  if (strategies.empty()) fail("strategies must be non-empty");
  if (runs < 1) fail("runs must be at least 1");
  noise.validate();
  if (!(region_lo > 0) || !(region_lo < region_hi)) fail("region must satisfy 0 < lo < hi");
  if (eta < 2) fail("eta must be at least 2");
  if (points_per_curve < 2) fail("points_per_curve must be at least 2");
  if (gp_restarts < 1 || gp_max_iter < 1 || !(gp_tol > 0)) fail("bad gp fit options");
  if (de_iterations < 1) fail("bad ensemble fit options");
  if (prediction_grid < 2) fail("prediction_grid must be at least 2");
  if (!(z >= 0)) fail("z must be non-negative");
  if (dataset == DatasetKind::RecordedFile && recorded_path.empty())
    fail("recorded dataset requires a path");
}

double relative_improvement(double l_sh, double l_surr) {
  if (!(l_sh > 0)) fail("reference loss must be positive");
  return (l_sh - l_surr) / l_sh;
}

double regret(double obtained, double oracle) {
  if (!std::isfinite(oracle)) throw std::runtime_error("oracle unavailable");
  return obtained - oracle;
}

double cost_saving(double budget, double full_training_cost, std::string* warning) {
  if (!(budget >= 0)) fail("budget must be non-negative");
  if (!(full_training_cost > 0)) fail("full training cost must be positive");
  const double ratio = 1.0 - budget / full_training_cost;
  if (ratio < 0 && warning) *warning = "full training cost below the allocation budget";
  return ratio;
}

namespace {

SurrogateKind surrogate_of(Strategy s) {
  switch (s) {
    case Strategy::UA:
    case Strategy::SH: return SurrogateKind::None;
    case Strategy::SH_LMC: return SurrogateKind::Lmc;
    case Strategy::SH_DE_PL: return SurrogateKind::DePl;
    case Strategy::SH_DE_EXP: return SurrogateKind::DeExp;
    case Strategy::SH_DE_MMF: return SurrogateKind::DeMmf;
  }
  fail("bad strategy");
}

std::uint64_t pool_fingerprint(const std::vector<ModelSpec>& pool) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const ModelSpec& m : pool) h = mix_seed(h, hash_string(m.id));
  return h;
}

struct RunOutcome {
  bool ok = false;
  std::string error;
  double loss = kNan;
  std::string winner;
  double spent = kNan;
  double abc_full = kNan;
  double abc_entire = kNan;
  double abc_gp_mean = kNan;
  double abc_gp_ucb = kNan;
  double abc_gp_lcb = kNan;
  std::optional<PowerScalingLaw> law;
  std::optional<ExtrapolatedLaws> extrap;
  CurveSet final_curves;
};

// Fit the strategy's own law over the compute range its curves actually cover.
std::optional<PowerScalingLaw> covered_law(const CurveSet& set) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (const LearningCurve& c : set.curves()) {
    if (c.points.empty()) continue;
    lo = std::min(lo, c.points.front().compute);
    hi = std::max(hi, c.points.back().compute);
  }
  if (!(lo > 0) || !(lo < hi)) return std::nullopt;
  try {
    return fit_lc_law(efficient_frontier(set, lo, hi), lo, hi);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Post-allocation GP refit on the full final curve set, used for the
// extrapolated laws with confidence bounds.
std::optional<ExtrapolatedLaws> gp_extrapolation(const CurveSet& set,
                                                 const ExperimentConfig& cfg,
                                                 std::uint64_t seed) {
  if (set.size() < 2) return std::nullopt;
  std::vector<LearningCurve> subs;
  for (const LearningCurve& c : set.curves())
    subs.push_back(c.points.size() > 2 ? subsample(c, cfg.points_per_curve) : c);

  NormalizationSpec norm;
  norm.compute_lo = std::numeric_limits<double>::infinity();
  norm.compute_hi = std::log(cfg.region_hi);
  norm.loss_lo = std::numeric_limits<double>::infinity();
  norm.loss_hi = -std::numeric_limits<double>::infinity();
  for (const LearningCurve& c : subs) {
    if (c.points.empty()) return std::nullopt;
    for (const CurvePoint& p : c.points) {
      norm.compute_lo = std::min(norm.compute_lo, std::log(p.compute));
      norm.loss_lo = std::min(norm.loss_lo, std::log(p.loss));
      norm.loss_hi = std::max(norm.loss_hi, std::log(p.loss));
    }
  }
  if (!(norm.loss_hi > norm.loss_lo)) {
    norm.loss_lo -= 1e-6;
    norm.loss_hi += 1e-6;
  }
  if (!(norm.compute_hi > norm.compute_lo)) return std::nullopt;

  std::vector<TaskData> tasks(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& pts = subs[i].points;
    tasks[i].inputs.resize(static_cast<Eigen::Index>(pts.size()));
    tasks[i].outputs.resize(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t j = 0; j < pts.size(); ++j) {
      tasks[i].inputs[static_cast<Eigen::Index>(j)] = norm.norm_compute(std::log(pts[j].compute));
      tasks[i].outputs[static_cast<Eigen::Index>(j)] = norm.norm_loss(std::log(pts[j].loss));
    }
  }
  GpFitOptions opt;
  opt.restarts = cfg.gp_restarts;
  opt.max_iter = cfg.gp_max_iter;
  opt.tol = cfg.gp_tol;
  try {
    LmcSurrogate gp = LmcSurrogate::fit(tasks, seed, opt);
    return extrapolated_laws(gp, norm, set, cfg.region_lo, cfg.region_hi, cfg.z,
                             cfg.prediction_grid);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct Welford {
  int n = 0;
  double sum = 0, sumsq = 0;
  void add(double v) {
    ++n;
    sum += v;
    sumsq += v * v;
  }
  double mean() const { return n ? sum / n : kNan; }
  double sample_std() const {
    if (n < 2) return 0;
    const double m = mean();
    const double var = (sumsq - n * m * m) / (n - 1);
    return std::sqrt(std::max(var, 0.0));
  }
};

}  // namespace

ExperimentReport run_campaign(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;

  std::optional<RecordedCurveSource> recorded;
  if (config.dataset == DatasetKind::RecordedFile)
    recorded.emplace(read_curve_file(std::filesystem::path(config.recorded_path)));

  const ChinchillaParams params = config.dataset == DatasetKind::SyntheticBesiroglu
                                      ? besiroglu_params()
                                      : hoffmann_params();

  for (int pool_size : config.pool_sizes) {
    for (double budget_pflops : config.budgets_pflops) {
      const double budget = budget_pflops * 1e15;
      CellReport cell;
      cell.pool_size = pool_size;
      cell.budget_pflops = budget_pflops;

      const std::size_t n_strats = config.strategies.size();
      std::vector<std::vector<RunOutcome>> outcomes(n_strats);
      for (auto& v : outcomes) v.resize(static_cast<std::size_t>(config.runs));
      std::vector<double> oracle_losses(static_cast<std::size_t>(config.runs), kNan);
      std::vector<std::uint64_t> strat_hash(n_strats, 0xcbf29ce484222325ull);
      std::uint64_t cell_hash = 0xcbf29ce484222325ull;
      std::vector<double> full_costs;

      for (int run = 0; run < config.runs; ++run) {
        std::uint64_t run_seed = mix_seed(config.base_seed, static_cast<std::uint64_t>(pool_size));
        run_seed = mix_seed(run_seed, std::bit_cast<std::uint64_t>(budget_pflops));
        run_seed = mix_seed(run_seed, static_cast<std::uint64_t>(run));

        // Pool sampling (identical across strategies by construction).
        std::vector<ModelSpec> pool;
        if (config.dataset == DatasetKind::RecordedFile) {
          std::vector<ModelSpec> all = recorded->models();
          if (static_cast<int>(all.size()) < pool_size)
            fail("recorded dataset has fewer curves than the requested pool size");
          std::mt19937_64 rng(mix_seed(run_seed, kPoolTag));
          for (int i = 0; i < pool_size; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                            all.size() - 1);
            std::swap(all[static_cast<std::size_t>(i)], all[pick(rng)]);
          }
          pool.assign(all.begin(), all.begin() + pool_size);
        } else {
          pool = sample_models(pool_size, mix_seed(run_seed, kPoolTag));
        }
        cell_hash = mix_seed(cell_hash, pool_fingerprint(pool));

        std::optional<SyntheticCurveSource> synthetic;
        CurveSource* source = nullptr;
        if (config.dataset == DatasetKind::RecordedFile) {
          source = &*recorded;
        } else {
          synthetic.emplace(params, pool, std::max(budget, config.region_hi), config.noise,
                            mix_seed(run_seed, kDataTag));
          source = &*synthetic;
        }

        // Oracle + per-run ground truths (shared by every strategy).
        AllocConfig base_cfg;
        base_cfg.total_budget = budget;
        base_cfg.eta = config.eta;
        base_cfg.seed = run_seed;
        try {
          oracle_losses[static_cast<std::size_t>(run)] =
              pool_oracle(pool, base_cfg, *source).loss;
        } catch (const std::exception&) {
          // leave NaN; regret and conditioning skip this run
        }

        double full_cost = 0;
        std::vector<LearningCurve> pool_fulls;
        for (const ModelSpec& m : pool) {
          LearningCurve c = source->full_curve(m);
          full_cost += c.max_trained_compute();
          pool_fulls.push_back(std::move(c));
        }
        if (full_cost > 0) full_costs.push_back(full_cost);

        std::optional<GroundTruthLaws> truths;
        try {
          std::vector<std::string> pool_ids;
          for (const ModelSpec& m : pool) pool_ids.push_back(m.id);
          if (config.dataset == DatasetKind::RecordedFile) {
            CurveSet full_dataset = recorded->full_set();
            truths = ground_truth_laws(full_dataset, pool_ids, config.region_lo,
                                       config.region_hi);
          } else {
            truths = ground_truth_laws(CurveSet(std::move(pool_fulls)), pool_ids,
                                       config.region_lo, config.region_hi);
          }
        } catch (const std::exception&) {
          // abc columns stay NaN for this run
        }

        for (std::size_t si = 0; si < n_strats; ++si) {
          const Strategy strat = config.strategies[si];
          strat_hash[si] = mix_seed(strat_hash[si], pool_fingerprint(pool));
          RunOutcome& out = outcomes[si][static_cast<std::size_t>(run)];

          AllocConfig cfg = base_cfg;
          cfg.surrogate = surrogate_of(strat);
          cfg.points_per_curve = config.points_per_curve;
          cfg.seed = mix_seed(run_seed, mix_seed(kAllocTag, si));
          cfg.gp_restarts = config.gp_restarts;
          cfg.gp_max_iter = config.gp_max_iter;
          cfg.gp_tol = config.gp_tol;
          cfg.de_iterations = config.de_iterations;
          cfg.prediction_grid = config.prediction_grid;

          try {
            AllocationTrace trace = strat == Strategy::UA ? run_uniform(pool, cfg, *source)
                                                          : run_sh(pool, cfg, *source);
            std::vector<LearningCurve> finals;
            for (const std::string& id : trace.final_pool)
              if (const LearningCurve* c = trace.final_curves.find(id); c && c->has_trained())
                finals.push_back(*c);
            MinLossResult winner = min_loss(CurveSet(std::move(finals)));
            out.loss = winner.loss;
            out.winner = winner.model_id;
            out.spent = trace.spent;
            out.final_curves = trace.final_curves;
            out.law = covered_law(trace.final_curves);
            if (out.law && truths) {
              out.abc_full = abc(*out.law, truths->full_data_law, config.region_lo,
                                 config.region_hi);
              out.abc_entire = abc(*out.law, truths->entire_lcs_law, config.region_lo,
                                   config.region_hi);
            }
            if (config.extrapolate && strat == Strategy::SH_LMC) {
              out.extrap = gp_extrapolation(trace.final_curves, config,
                                            mix_seed(run_seed, kExtrapTag));
              if (out.extrap && truths) {
                out.abc_gp_mean = abc(out.extrap->mean_law, truths->entire_lcs_law,
                                      config.region_lo, config.region_hi);
                out.abc_gp_ucb = abc(out.extrap->ucb_law, truths->entire_lcs_law,
                                     config.region_lo, config.region_hi);
                out.abc_gp_lcb = abc(out.extrap->lcb_law, truths->entire_lcs_law,
                                     config.region_lo, config.region_hi);
              }
            }
            out.ok = true;
          } catch (const std::exception& e) {
            out.error = e.what();
          }
        }
      }

      cell.pool_hash = cell_hash;
      Welford oracle_w;
      for (double o : oracle_losses)
        if (std::isfinite(o)) oracle_w.add(o);
      cell.oracle_mean_loss = oracle_w.mean();

      // Conditioning set: runs where SH succeeded but did not attain the oracle.
      std::ptrdiff_t sh_index = -1;
      for (std::size_t si = 0; si < n_strats; ++si)
        if (config.strategies[si] == Strategy::SH) sh_index = static_cast<std::ptrdiff_t>(si);
      std::vector<bool> conditioning(static_cast<std::size_t>(config.runs), false);
      if (sh_index >= 0) {
        for (int run = 0; run < config.runs; ++run) {
          const RunOutcome& sh = outcomes[static_cast<std::size_t>(sh_index)]
                                         [static_cast<std::size_t>(run)];
          const double oracle = oracle_losses[static_cast<std::size_t>(run)];
          if (sh.ok && std::isfinite(oracle) && sh.loss > oracle && !loss_equal(sh.loss, oracle))
            conditioning[static_cast<std::size_t>(run)] = true;
        }
        cell.conditioning_runs =
            static_cast<int>(std::count(conditioning.begin(), conditioning.end(), true));
      }

      for (std::size_t si = 0; si < n_strats; ++si) {
        StrategyStats st;
        st.strategy = config.strategies[si];
        st.runs_attempted = config.runs;
        st.pool_hash = strat_hash[si];

        Welford loss_w, regret_w, spent_w, abc_full_w, abc_entire_w, gp_mean_w, gp_ucb_w,
            gp_lcb_w, improve_w, degrade_w;
        double max_improve = -std::numeric_limits<double>::infinity();
        double max_degrade = std::numeric_limits<double>::infinity();

        for (int run = 0; run < config.runs; ++run) {
          const RunOutcome& out = outcomes[si][static_cast<std::size_t>(run)];
          if (!out.ok) {
            ++st.runs_failed;
            if (st.failures.size() < 10)
              st.failures.push_back("run " + std::to_string(run) + ": " + out.error);
            continue;
          }
          loss_w.add(out.loss);
          spent_w.add(out.spent);
          st.winners.push_back(out.winner);
          const double oracle = oracle_losses[static_cast<std::size_t>(run)];
          if (std::isfinite(oracle)) regret_w.add(regret(out.loss, oracle));
          if (std::isfinite(out.abc_full)) abc_full_w.add(out.abc_full);
          if (std::isfinite(out.abc_entire)) abc_entire_w.add(out.abc_entire);
          if (std::isfinite(out.abc_gp_mean)) gp_mean_w.add(out.abc_gp_mean);
          if (std::isfinite(out.abc_gp_ucb)) gp_ucb_w.add(out.abc_gp_ucb);
          if (std::isfinite(out.abc_gp_lcb)) gp_lcb_w.add(out.abc_gp_lcb);

          if (st.exemplar_curves.empty()) {
            st.exemplar_curves = out.final_curves;
            st.exemplar_law = out.law;
            st.exemplar_extrapolated = out.extrap;
          }

          if (sh_index >= 0) {
            const RunOutcome& sh = outcomes[static_cast<std::size_t>(sh_index)]
                                           [static_cast<std::size_t>(run)];
            if (sh.ok) {
              if (loss_equal(out.loss, sh.loss))
                ++st.equals;
              else if (out.loss < sh.loss)
                ++st.wins;
              else
                ++st.losses;
              if (conditioning[static_cast<std::size_t>(run)]) {
                const double imp = relative_improvement(sh.loss, out.loss);
                improve_w.add(imp);
                max_improve = std::max(max_improve, imp);
                if (out.loss > sh.loss && !loss_equal(out.loss, sh.loss)) {
                  degrade_w.add(imp);
                  max_degrade = std::min(max_degrade, imp);
                }
              }
            }
          }
        }

        st.mean_loss = loss_w.mean();
        st.loss_std = loss_w.sample_std();
        st.mean_regret = regret_w.mean();
        st.mean_spent = spent_w.mean();
        st.mean_abc_full_data = abc_full_w.mean();
        st.mean_abc_entire_lcs = abc_entire_w.mean();
        st.mean_abc_gp_mean = gp_mean_w.mean();
        st.mean_abc_gp_ucb = gp_ucb_w.mean();
        st.mean_abc_gp_lcb = gp_lcb_w.mean();
        st.mean_improvement = improve_w.mean();
        st.max_improvement = improve_w.n ? max_improve : kNan;
        st.mean_degradation = degrade_w.mean();
        st.max_degradation = degrade_w.n ? max_degrade : kNan;
        if (!full_costs.empty()) {
          double mean_full = 0;
          for (double c : full_costs) mean_full += c;
          mean_full /= static_cast<double>(full_costs.size());
          st.cost_saving = cost_saving(budget, mean_full);
        } else {
          st.cost_saving = kNan;
        }
        cell.strategies.push_back(std::move(st));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

void emit_table(const ExperimentReport& report, std::ostream& os) {
  os << "pool_size,budget_pflops,strategy,runs,failed,mean_loss,loss_std,"
        "mean_rel_improvement,max_rel_improvement,mean_rel_degradation,max_rel_degradation,"
        "wins,equals,losses,mean_regret,abc_full_data,abc_entire_lcs,abc_gp_mean,abc_gp_ucb,"
        "abc_gp_lcb,mean_spent_flops,cost_saving,conditioning_runs,oracle_mean_loss,pool_hash\n";
  for (const CellReport& cell : report.cells) {
    for (const StrategyStats& st : cell.strategies) {
      os << cell.pool_size << ',' << fmt(cell.budget_pflops) << ',' << strategy_name(st.strategy)
         << ',' << st.runs_attempted << ',' << st.runs_failed << ',' << fmt(st.mean_loss) << ','
         << fmt(st.loss_std) << ',' << fmt(st.mean_improvement) << ',' << fmt(st.max_improvement)
         << ',' << fmt(st.mean_degradation) << ',' << fmt(st.max_degradation) << ',' << st.wins
         << ',' << st.equals << ',' << st.losses << ',' << fmt(st.mean_regret) << ','
         << fmt(st.mean_abc_full_data) << ',' << fmt(st.mean_abc_entire_lcs) << ','
         << fmt(st.mean_abc_gp_mean) << ',' << fmt(st.mean_abc_gp_ucb) << ','
         << fmt(st.mean_abc_gp_lcb) << ',' << fmt(st.mean_spent) << ',' << fmt(st.cost_saving)
         << ',' << cell.conditioning_runs << ',' << fmt(cell.oracle_mean_loss) << ','
         << std::hex << st.pool_hash << std::dec << '\n';
    }
  }
}

namespace {

void emit_law_block(std::ostream& os, const CellReport& cell, const StrategyStats& st,
                    std::string_view kind, const PowerScalingLaw& law) {
  os << "#law pool=" << cell.pool_size << " budget=" << fmt(cell.budget_pflops)
     << " strategy=" << strategy_name(st.strategy) << " kind=" << kind
     << " alpha=" << fmt(law.alpha_c) << " gamma=" << fmt(law.gamma)
     << " region_lo=" << fmt(law.region_lo) << " region_hi=" << fmt(law.region_hi) << '\n';
  const std::vector<double> grid = log_spaced(law.region_lo, law.region_hi, 64);
  for (double c : grid) os << fmt(c) << ',' << fmt(law.eval(c)) << '\n';
}

}  // namespace

void emit_plotdata(const ExperimentReport& report, std::ostream& os) {
  for (const CellReport& cell : report.cells) {
    for (const StrategyStats& st : cell.strategies) {
      if (st.exemplar_curves.empty()) continue;
      os << "#curves pool=" << cell.pool_size << " budget=" << fmt(cell.budget_pflops)
         << " strategy=" << strategy_name(st.strategy) << '\n';
      write_curve_file(st.exemplar_curves, os);
      if (st.exemplar_law) emit_law_block(os, cell, st, "fit", *st.exemplar_law);
      if (st.exemplar_extrapolated) {
        emit_law_block(os, cell, st, "gp_mean", st.exemplar_extrapolated->mean_law);
        emit_law_block(os, cell, st, "gp_ucb", st.exemplar_extrapolated->ucb_law);
        emit_law_block(os, cell, st, "gp_lcb", st.exemplar_extrapolated->lcb_law);
      }
    }
  }
}

}  // namespace shlaw
