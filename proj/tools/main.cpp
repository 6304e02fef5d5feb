#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shlaw/allocator.hpp"
#include "shlaw/harness.hpp"
#include "shlaw/scaling_law.hpp"
#include "shlaw/synthgen.hpp"

namespace {

using nlohmann::json;

struct NoiseFlags {
  std::string kind = "none";
  double sigma2 = 0.0;
  double weight = 1.0;
  double ou_mu = 0.0;
  double ou_tau = 1.0;
  double gradient_threshold = 1e-3;

  shlaw::NoiseConfig to_config() const {
    shlaw::NoiseConfig cfg;
    cfg.kind = shlaw::noise_kind_from_name(kind);
    cfg.sigma2 = sigma2;
    cfg.weight = weight;
    cfg.ou_mu = ou_mu;
    cfg.ou_tau = ou_tau;
    cfg.gradient_threshold = gradient_threshold;
    return cfg;
  }
};

void add_noise_flags(CLI::App* cmd, NoiseFlags& n) {
  cmd->add_option("--noise", n.kind, "Noise kind: none|awgn|brownian|ou");
  cmd->add_option("--sigma2", n.sigma2, "Base noise variance");
  cmd->add_option("--weight", n.weight, "Noise weight w");
  cmd->add_option("--ou-mu", n.ou_mu, "OU mean level");
  cmd->add_option("--ou-tau", n.ou_tau, "OU relaxation time");
  cmd->add_option("--gradient-threshold", n.gradient_threshold,
                  "Attenuate noise once |log-log slope| drops below this");
}

std::pair<double, double> parse_region(const std::string& s) {
  const auto sep = s.find_first_of(":,");
  if (sep == std::string::npos)
    throw std::invalid_argument("region must be 'lo:hi', got '" + s + "'");
  return {std::stod(s.substr(0, sep)), std::stod(s.substr(sep + 1))};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing '" + path + "'");
}

json law_to_json(const shlaw::PowerScalingLaw& law) {
  return json{{"alpha", law.alpha_c},
              {"gamma", law.gamma},
              {"region_lo", law.region_lo},
              {"region_hi", law.region_hi}};
}

shlaw::PowerScalingLaw law_from_json(const json& j) {
  shlaw::PowerScalingLaw law;
  law.alpha_c = j.at("alpha").get<double>();
  law.gamma = j.at("gamma").get<double>();
  law.region_lo = j.at("region_lo").get<double>();
  law.region_hi = j.at("region_hi").get<double>();
  law.validate();
  return law;
}

json load_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  is >> j;
  return j;
}

int run_gen(const std::string& preset, int models, double horizon, int grid,
            const NoiseFlags& noise, std::uint64_t seed, const std::string& out) {
  const shlaw::ChinchillaParams params = shlaw::preset_params(preset);
  std::vector<shlaw::ModelSpec> pool = shlaw::sample_models(models, shlaw::mix_seed(seed, 1));
  shlaw::SyntheticCurveSource source(params, pool, horizon, noise.to_config(),
                                     shlaw::mix_seed(seed, 2), grid);
  std::vector<shlaw::LearningCurve> curves;
  for (const shlaw::ModelSpec& m : pool) {
    shlaw::LearningCurve c = source.full_curve(m);
    if (!c.points.empty()) curves.push_back(std::move(c));
  }
  std::ostringstream os;
  shlaw::write_curve_file(shlaw::CurveSet(std::move(curves)), os);
  write_text(out, os.str());
  return 0;
}

json trace_to_json(const shlaw::AllocationTrace& trace) {
  json rounds = json::array();
  for (const shlaw::RoundRecord& r : trace.rounds) {
    json scores = json::array();
    for (const shlaw::SelectionScore& s : r.scores)
      scores.push_back({{"model", s.model_id}, {"score", s.score}});
    rounds.push_back({{"round", r.round},
                      {"budget_per_model", r.budget_per_model},
                      {"bonus_per_model", r.bonus_per_model},
                      {"scores", scores},
                      {"survivors", r.survivors},
                      {"notes", r.notes}});
  }
  return json{{"rounds", rounds},
              {"final_pool", trace.final_pool},
              {"spent_flops", trace.spent},
              {"notes", trace.notes}};
}

int run_alloc(const std::string& data, const std::string& preset, int models, double horizon,
              const NoiseFlags& noise, double budget_pflops, int eta, const std::string& strategy,
              std::uint64_t seed, const std::string& out, const std::string& curves_out) {
  std::optional<shlaw::RecordedCurveSource> recorded;
  std::optional<shlaw::SyntheticCurveSource> synthetic;
  shlaw::CurveSource* source = nullptr;
  std::vector<shlaw::ModelSpec> pool;
  const double budget = budget_pflops * 1e15;
  if (!data.empty()) {
    recorded.emplace(shlaw::read_curve_file(std::filesystem::path(data)));
    pool = recorded->models();
    source = &*recorded;
  } else {
    pool = shlaw::sample_models(models, shlaw::mix_seed(seed, 1));
    synthetic.emplace(shlaw::preset_params(preset), pool,
                      std::max(budget, horizon), noise.to_config(), shlaw::mix_seed(seed, 2));
    source = &*synthetic;
  }

  const shlaw::Strategy strat = shlaw::strategy_from_name(strategy);
  shlaw::AllocConfig cfg;
  cfg.total_budget = budget;
  cfg.eta = eta;
  cfg.seed = seed;
  switch (strat) {
    case shlaw::Strategy::UA:
    case shlaw::Strategy::SH: cfg.surrogate = shlaw::SurrogateKind::None; break;
    case shlaw::Strategy::SH_LMC: cfg.surrogate = shlaw::SurrogateKind::Lmc; break;
    case shlaw::Strategy::SH_DE_PL: cfg.surrogate = shlaw::SurrogateKind::DePl; break;
    case shlaw::Strategy::SH_DE_EXP: cfg.surrogate = shlaw::SurrogateKind::DeExp; break;
    case shlaw::Strategy::SH_DE_MMF: cfg.surrogate = shlaw::SurrogateKind::DeMmf; break;
  }

  shlaw::AllocationTrace trace = strat == shlaw::Strategy::UA
                                     ? shlaw::run_uniform(pool, cfg, *source)
                                     : shlaw::run_sh(pool, cfg, *source);
  json j = trace_to_json(trace);
  j["strategy"] = strategy;
  j["budget_pflops"] = budget_pflops;
  j["eta"] = eta;
  write_text(out, j.dump(2) + "\n");
  if (!curves_out.empty()) {
    std::ostringstream os;
    shlaw::write_curve_file(trace.final_curves, os);
    write_text(curves_out, os.str());
  }
  return 0;
}

int run_fit(const std::string& data, const std::string& kind, const std::string& region,
            int grid, std::uint64_t seed, int restarts, double delta, const std::string& out) {
  const shlaw::CurveSet set = shlaw::read_curve_file(std::filesystem::path(data));
  json j;
  if (kind == "lc") {
    double lo = 0, hi = 0;
    if (!region.empty()) {
      std::tie(lo, hi) = parse_region(region);
    } else {
      lo = std::numeric_limits<double>::infinity();
      for (const shlaw::LearningCurve& c : set.curves()) {
        if (c.points.empty()) continue;
        lo = std::min(lo, c.points.front().compute);
        hi = std::max(hi, c.points.back().compute);
      }
      if (!(lo > 0) || !(lo < hi))
        throw std::runtime_error("curve file covers no usable compute range");
    }
    shlaw::PowerScalingLaw law =
        shlaw::fit_lc_law(shlaw::efficient_frontier(set, lo, hi, grid), lo, hi);
    j = law_to_json(law);
    j["kind"] = "lc";
    j["grid"] = grid;
  } else if (kind == "lnd") {
    std::vector<shlaw::LndObservation> obs;
    for (const shlaw::LearningCurve& c : set.curves()) {
      double last_compute = 0, last_loss = 0;
      for (const shlaw::CurvePoint& p : c.points) {
        if (p.provenance != shlaw::Provenance::Trained) continue;
        if (p.compute > last_compute) {
          last_compute = p.compute;
          last_loss = p.loss;
        }
      }
      if (last_compute <= 0) continue;
      const double n = static_cast<double>(c.model.n_params);
      obs.push_back({n, last_compute / (6.0 * n), last_loss});
    }
    shlaw::LndFitOptions opt;
    opt.huber_delta = delta;
    opt.restarts = restarts;
    shlaw::LndFit fit = shlaw::fit_lnd_law(obs, seed, opt);
    j = json{{"kind", "lnd"},         {"nc", fit.params.nc},       {"dc", fit.params.dc},
             {"e", fit.params.e},     {"alpha", fit.params.alpha}, {"beta", fit.params.beta},
             {"objective", fit.objective}, {"converged", fit.converged}};
  } else {
    throw std::invalid_argument("fit kind must be lc or lnd, got '" + kind + "'");
  }
  write_text(out, j.dump(2) + "\n");
  return 0;
}

int run_abc(const std::string& law_a, const std::string& law_b, const std::string& region,
            int grid, const std::string& out) {
  const shlaw::PowerScalingLaw a = law_from_json(load_json_file(law_a));
  const shlaw::PowerScalingLaw b = law_from_json(load_json_file(law_b));
  double lo = a.region_lo, hi = a.region_hi;
  if (!region.empty()) std::tie(lo, hi) = parse_region(region);
  const double value = shlaw::abc(a, b, lo, hi, grid);
  json j{{"abc", value}, {"grid", std::max(512, grid)}, {"region_lo", lo}, {"region_hi", hi}};
  write_text(out, j.dump(2) + "\n");
  return 0;
}

shlaw::ExperimentConfig config_from_json(const json& j) {
  shlaw::ExperimentConfig cfg;
  if (j.contains("dataset")) cfg.dataset = shlaw::dataset_from_name(j["dataset"].get<std::string>());
  if (j.contains("recorded_path")) cfg.recorded_path = j["recorded_path"].get<std::string>();
  if (j.contains("pool_sizes")) cfg.pool_sizes = j["pool_sizes"].get<std::vector<int>>();
  if (j.contains("budgets_pflops"))
    cfg.budgets_pflops = j["budgets_pflops"].get<std::vector<double>>();
  if (j.contains("strategies")) {
    cfg.strategies.clear();
    for (const auto& s : j["strategies"])
      cfg.strategies.push_back(shlaw::strategy_from_name(s.get<std::string>()));
  }
  if (j.contains("runs")) cfg.runs = j["runs"].get<int>();
  if (j.contains("noise")) {
    const json& n = j["noise"];
    if (n.contains("kind")) cfg.noise.kind = shlaw::noise_kind_from_name(n["kind"].get<std::string>());
    if (n.contains("sigma2")) cfg.noise.sigma2 = n["sigma2"].get<double>();
    if (n.contains("weight")) cfg.noise.weight = n["weight"].get<double>();
    if (n.contains("ou_mu")) cfg.noise.ou_mu = n["ou_mu"].get<double>();
    if (n.contains("ou_tau")) cfg.noise.ou_tau = n["ou_tau"].get<double>();
    if (n.contains("gradient_threshold"))
      cfg.noise.gradient_threshold = n["gradient_threshold"].get<double>();
  }
  if (j.contains("region")) {
    cfg.region_lo = j["region"].at(0).get<double>();
    cfg.region_hi = j["region"].at(1).get<double>();
  }
  if (j.contains("base_seed")) cfg.base_seed = j["base_seed"].get<std::uint64_t>();
  if (j.contains("eta")) cfg.eta = j["eta"].get<int>();
  if (j.contains("points_per_curve")) cfg.points_per_curve = j["points_per_curve"].get<int>();
  if (j.contains("gp_restarts")) cfg.gp_restarts = j["gp_restarts"].get<int>();
  if (j.contains("gp_max_iter")) cfg.gp_max_iter = j["gp_max_iter"].get<int>();
  if (j.contains("gp_tol")) cfg.gp_tol = j["gp_tol"].get<double>();
  if (j.contains("de_iterations")) cfg.de_iterations = j["de_iterations"].get<int>();
  if (j.contains("prediction_grid")) cfg.prediction_grid = j["prediction_grid"].get<int>();
  if (j.contains("extrapolate")) cfg.extrapolate = j["extrapolate"].get<bool>();
  if (j.contains("z")) cfg.z = j["z"].get<double>();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-allocation simulator and scaling-law toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic learning-curve dataset");
  std::string gen_preset = "hoffmann", gen_out;
  int gen_models = 8, gen_grid = 512;
  double gen_horizon = 1e20;
  std::uint64_t gen_seed = 0;
  NoiseFlags gen_noise;
  gen->add_option("--preset", gen_preset, "Surface preset: hoffmann|besiroglu");
  gen->add_option("--models", gen_models, "Number of pool models");
  gen->add_option("--horizon", gen_horizon, "Curve horizon in FLOPs");
  gen->add_option("--grid", gen_grid, "Log-grid points per curve");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Output curve file ('-' for stdout)");
  add_noise_flags(gen, gen_noise);

  // alloc
  auto* alloc = app.add_subcommand("alloc", "Run one allocation and dump its trace");
  std::string alloc_data, alloc_preset = "hoffmann", alloc_strategy = "sh", alloc_out,
              alloc_curves_out;
  int alloc_models = 8, alloc_eta = 2;
  double alloc_budget = 1e3, alloc_horizon = 1e20;
  std::uint64_t alloc_seed = 0;
  NoiseFlags alloc_noise;
  alloc->add_option("--data", alloc_data, "Recorded curve file (otherwise synthetic)");
  alloc->add_option("--preset", alloc_preset, "Surface preset for synthetic pools");
  alloc->add_option("--models", alloc_models, "Synthetic pool size");
  alloc->add_option("--horizon", alloc_horizon, "Synthetic curve horizon in FLOPs");
  alloc->add_option("--budget", alloc_budget, "Total budget in petaFLOPs");
  alloc->add_option("--eta", alloc_eta, "Halving rate");
  alloc->add_option("--strategy", alloc_strategy, "ua|sh|sh_lmc|sh_de_pl|sh_de_exp|sh_de_mmf");
  alloc->add_option("--seed", alloc_seed, "Random seed");
  alloc->add_option("--out", alloc_out, "Trace JSON output ('-' for stdout)");
  alloc->add_option("--curves-out", alloc_curves_out, "Also write final curves as CSV");
  add_noise_flags(alloc, alloc_noise);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a scaling law from a curve file");
  std::string fit_data, fit_kind = "lc", fit_region, fit_out;
  int fit_grid = 512, fit_restarts = 20;
  double fit_delta = 1e-3;
  std::uint64_t fit_seed = 0;
  fit->add_option("--data", fit_data, "Curve file")->required();
  fit->add_option("--kind", fit_kind, "lc (loss-compute) or lnd (loss of N and D)");
  fit->add_option("--region", fit_region, "Fit region 'lo:hi' in FLOPs (lc only)");
  fit->add_option("--grid", fit_grid, "Frontier grid points");
  fit->add_option("--seed", fit_seed, "Random seed (lnd restarts)");
  fit->add_option("--restarts", fit_restarts, "Optimizer restarts (lnd)");
  fit->add_option("--delta", fit_delta, "Huber delta (lnd)");
  fit->add_option("--out", fit_out, "Law JSON output ('-' for stdout)");

  // abc
  auto* abc_cmd = app.add_subcommand("abc", "Area between two scaling laws");
  std::string abc_a, abc_b, abc_region, abc_out;
  int abc_grid = 512;
  abc_cmd->add_option("--law-a", abc_a, "First law JSON")->required();
  abc_cmd->add_option("--law-b", abc_b, "Second law JSON")->required();
  abc_cmd->add_option("--region", abc_region, "Region 'lo:hi' (default: law A's region)");
  abc_cmd->add_option("--grid", abc_grid, "Integration grid points (min 512)");
  abc_cmd->add_option("--out", abc_out, "Result JSON output ('-' for stdout)");

  // campaign
  auto* camp = app.add_subcommand("campaign", "Run a multi-run experiment campaign");
  std::string camp_config, camp_region, camp_dataset, camp_data, camp_out, camp_plot_out;
  std::vector<double> camp_budgets;
  std::vector<int> camp_pools;
  std::vector<std::string> camp_strategies;
  int camp_runs = -1, camp_eta = -1;
  std::int64_t camp_seed = -1;
  bool camp_extrapolate = false;
  camp->add_option("--config", camp_config, "Campaign config JSON");
  camp->add_option("--seed", camp_seed, "Base seed override");
  camp->add_option("--runs", camp_runs, "Runs per cell override");
  camp->add_option("--budget", camp_budgets, "Budget list override (petaFLOPs)");
  camp->add_option("--pool-size", camp_pools, "Pool size list override");
  camp->add_option("--eta", camp_eta, "Halving rate override");
  camp->add_option("--strategy", camp_strategies, "Strategy list override");
  camp->add_option("--region", camp_region, "Region override 'lo:hi' in FLOPs");
  camp->add_option("--dataset", camp_dataset,
                   "synthetic_hoffmann|synthetic_besiroglu|recorded_file");
  camp->add_option("--data", camp_data, "Recorded curve file");
  camp->add_flag("--extrapolate", camp_extrapolate, "Fit GP-extrapolated laws");
  camp->add_option("--out", camp_out, "Report table output ('-' for stdout)");
  camp->add_option("--plot-out", camp_plot_out, "Plot-data output");

  try {
    app.parse(argc, argv);

    if (gen->parsed())
      return run_gen(gen_preset, gen_models, gen_horizon, gen_grid, gen_noise, gen_seed, gen_out);
    if (alloc->parsed())
      return run_alloc(alloc_data, alloc_preset, alloc_models, alloc_horizon, alloc_noise,
                       alloc_budget, alloc_eta, alloc_strategy, alloc_seed, alloc_out,
                       alloc_curves_out);
    if (fit->parsed())
      return run_fit(fit_data, fit_kind, fit_region, fit_grid, fit_seed, fit_restarts, fit_delta,
                     fit_out);
    if (abc_cmd->parsed()) return run_abc(abc_a, abc_b, abc_region, abc_grid, abc_out);
    if (camp->parsed()) {
      shlaw::ExperimentConfig cfg;
      if (!camp_config.empty()) cfg = config_from_json(load_json_file(camp_config));
      if (camp_seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(camp_seed);
      if (camp_runs > 0) cfg.runs = camp_runs;
      if (!camp_budgets.empty()) cfg.budgets_pflops = camp_budgets;
      if (!camp_pools.empty()) cfg.pool_sizes = camp_pools;
      if (camp_eta > 0) cfg.eta = camp_eta;
      if (!camp_strategies.empty()) {
        cfg.strategies.clear();
        for (const std::string& s : camp_strategies)
          cfg.strategies.push_back(shlaw::strategy_from_name(s));
      }
      if (!camp_region.empty()) std::tie(cfg.region_lo, cfg.region_hi) = parse_region(camp_region);
      if (!camp_dataset.empty()) cfg.dataset = shlaw::dataset_from_name(camp_dataset);
      if (!camp_data.empty()) {
        cfg.recorded_path = camp_data;
        cfg.dataset = shlaw::DatasetKind::RecordedFile;
      }
      if (camp_extrapolate) cfg.extrapolate = true;
      if (cfg.pool_sizes.empty()) cfg.pool_sizes = {5};
      if (cfg.budgets_pflops.empty()) cfg.budgets_pflops = {1e3};
      if (cfg.strategies.empty())
        cfg.strategies = {shlaw::Strategy::SH};

      shlaw::ExperimentReport report = shlaw::run_campaign(cfg);
      std::ostringstream table;
      shlaw::emit_table(report, table);
      write_text(camp_out, table.str());
      if (!camp_plot_out.empty()) {
        std::ostringstream plot;
        shlaw::emit_plotdata(report, plot);
        write_text(camp_plot_out, plot.str());
      }
      return 0;
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    json err{{"error", {{"type", "cli"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const std::invalid_argument& e) {
    json err{{"error", {{"type", "invalid_argument"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    json err{{"error", {{"type", "runtime"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
}
