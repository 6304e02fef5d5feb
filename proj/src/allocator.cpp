#include "shlaw/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "shlaw/deep_ensemble.hpp"
#include "shlaw/preprocess.hpp"

namespace shlaw {

namespace {
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

constexpr double kTieTolerance = 1e-12;  // relative slack when comparing losses
}  // namespace

std::string_view surrogate_name(SurrogateKind kind) {
  switch (kind) {
    case SurrogateKind::None: return "none";
    case SurrogateKind::Lmc: return "lmc";
    case SurrogateKind::DePl: return "de_pl";
    case SurrogateKind::DeExp: return "de_exp";
    case SurrogateKind::DeMmf: return "de_mmf";
  }
  fail("bad surrogate kind");
}

SurrogateKind surrogate_from_name(std::string_view name) {
  if (name == "none") return SurrogateKind::None;
  if (name == "lmc") return SurrogateKind::Lmc;
  if (name == "de_pl") return SurrogateKind::DePl;
  if (name == "de_exp") return SurrogateKind::DeExp;
  if (name == "de_mmf") return SurrogateKind::DeMmf;
  fail("unknown surrogate '" + std::string(name) + "'");
}

void AllocConfig::validate() const {
  if (!(total_budget > 0)) fail("total_budget must be positive");
  if (eta < 2) fail("eta must be at least 2");
  if (points_per_curve < 2) fail("points_per_curve must be at least 2");
  if (gp_restarts < 1 || gp_max_iter < 1 || !(gp_tol > 0)) fail("bad gp fit options");
  if (de_iterations < 1) fail("bad ensemble fit options");
  if (prediction_grid < 2) fail("prediction_grid must be at least 2");
}

SyntheticCurveSource::SyntheticCurveSource(const ChinchillaParams& params,
                                           const std::vector<ModelSpec>& pool, double horizon,
                                           const NoiseConfig& noise, std::uint64_t seed,
                                           int grid_points) {
  if (!(horizon > 0)) fail("synthetic source horizon must be positive");
  if (grid_points < 2) fail("synthetic source needs at least two grid points");
  for (const ModelSpec& m : pool) {
    m.validate();
    if (curves_.count(m.id)) fail("duplicate model id '" + m.id + "' in pool");
    LearningCurve curve;
    curve.model = m;
    // First checkpoint lands after one optimizer step.
    double first = 6.0 * static_cast<double>(m.n_params) * static_cast<double>(m.tokens_per_step);
    if (first <= horizon) {
      std::vector<double> grid = first < horizon ? log_spaced(first, horizon, grid_points)
                                                 : std::vector<double>{first};
      curve = generate_curve(params, m, grid, noise, mix_seed(seed, hash_string(m.id)));
    }
    curves_.emplace(m.id, std::move(curve));
  }
}

const LearningCurve& SyntheticCurveSource::stored(const ModelSpec& m) const {
  auto it = curves_.find(m.id);
  if (it == curves_.end()) fail("model '" + m.id + "' is not part of this curve source");
  return it->second;
}

LearningCurve SyntheticCurveSource::slice(const ModelSpec& m, double max_compute) {
  const LearningCurve& full = stored(m);
  LearningCurve out;
  out.model = full.model;
  const double limit = max_compute * (1.0 + 1e-12);
  for (const CurvePoint& p : full.points) {
    if (p.compute > limit) break;
    out.points.push_back(p);
  }
  return out;
}

LearningCurve SyntheticCurveSource::full_curve(const ModelSpec& m) { return stored(m); }

RecordedCurveSource::RecordedCurveSource(CurveSet curves) : curves_(std::move(curves)) {
  for (const LearningCurve& c : curves_.curves())
    if (!c.has_trained()) fail("recorded curve '" + c.model.id + "' has no trained points");
}

LearningCurve RecordedCurveSource::slice(const ModelSpec& m, double max_compute) {
  const LearningCurve* full = curves_.find(m.id);
  if (!full) fail("model '" + m.id + "' is not part of this curve source");
  LearningCurve out;
  out.model = full->model;
  const double limit = max_compute * (1.0 + 1e-12);
  for (const CurvePoint& p : full->points) {
    if (p.provenance != Provenance::Trained) continue;
    if (p.compute > limit) break;
    out.points.push_back(p);
  }
  return out;
}

LearningCurve RecordedCurveSource::full_curve(const ModelSpec& m) {
  const LearningCurve* full = curves_.find(m.id);
  if (!full) fail("model '" + m.id + "' is not part of this curve source");
  return *full;
}

std::vector<ModelSpec> RecordedCurveSource::models() const {
  std::vector<ModelSpec> out;
  out.reserve(curves_.size());
  for (const LearningCurve& c : curves_.curves()) out.push_back(c.model);
  return out;
}

int num_rounds(int initial_pool, int eta) {
  if (initial_pool < 1) fail("pool must contain at least one model");
  if (eta < 2) fail("eta must be at least 2");
  if (initial_pool == 1) return 1;
  // ceil(log_eta(initial_pool)) via exact integer powers.
  int rounds = 0;
  long long reach = 1;
  while (reach < initial_pool) {
    reach *= eta;
    ++rounds;
  }
  return rounds;
}

int survivor_count(int pool_size, int eta) {
  if (pool_size < 1) fail("pool must contain at least one model");
  if (eta < 2) fail("eta must be at least 2");
  return std::max(1, pool_size / eta);
}

double round_budget(double total_budget, int current_pool, int initial_pool, int eta) {
  if (current_pool < 1) fail("pool must contain at least one model");
  flops_t b = to_flops(total_budget);
  flops_t per = b / (static_cast<flops_t>(current_pool) * num_rounds(initial_pool, eta));
  return from_flops(per);
}

double projected_final_cumulative(double total_budget, int initial_pool, int eta) {
  const int rounds = num_rounds(initial_pool, eta);
  flops_t b = to_flops(total_budget);
  flops_t sum = 0;
  int pool = initial_pool;
  for (int r = 0; r < rounds; ++r) {
    sum += b / (static_cast<flops_t>(pool) * rounds);
    pool = survivor_count(pool, eta);
  }
  return from_flops(sum);
}

namespace {

struct StepQuantInt {
  std::int64_t steps = 0;
  flops_t consumed = 0;
};

StepQuantInt quantize_steps_int(flops_t allocated, const ModelSpec& model) {
  model.validate();
  if (allocated < 0) fail("allocated budget must be non-negative");
  flops_t cost = flops_t{6} * model.n_params * model.tokens_per_step;
  flops_t steps = allocated / cost;
  if (steps > static_cast<flops_t>(std::numeric_limits<std::int64_t>::max()))
    fail("step count overflows for model '" + model.id + "'");
  return {static_cast<std::int64_t>(steps), steps * cost};
}

}  // namespace

StepQuant quantize_steps(double allocated, const ModelSpec& model) {
  StepQuantInt q = quantize_steps_int(to_flops(allocated), model);
  return {q.steps, from_flops(q.consumed)};
}

namespace {

// Full ranking by minimum loss (ties: smaller n_params, then id).
std::vector<std::size_t> ranked_order(const std::vector<LearningCurve>& working) {
  std::vector<std::size_t> order(working.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> score(working.size());
  for (std::size_t i = 0; i < working.size(); ++i) score[i] = working[i].min_loss_any();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] < score[b];
    const ModelSpec& ma = working[a].model;
    const ModelSpec& mb = working[b].model;
    if (ma.n_params != mb.n_params) return ma.n_params < mb.n_params;
    return ma.id < mb.id;
  });
  return order;
}

}  // namespace

std::vector<std::size_t> top_k_indices(const std::vector<LearningCurve>& working, int eta) {
  if (working.empty()) fail("top_k on an empty pool");
  const int k = survivor_count(static_cast<int>(working.size()), eta);
  std::vector<std::size_t> order = ranked_order(working);
  order.resize(k);
  return order;
}

namespace {

// Keep only the survivors' coregionalization entries so the fitted kernel can
// warm-start the next round; the shared scalar parameters carry over as-is.
KernelHyperparams subset_hyperparams(const KernelHyperparams& h,
                                     const std::vector<std::size_t>& keep) {
  KernelHyperparams out = h;
  const int q = static_cast<int>(keep.size());
  out.w1.resize(q);
  out.kappa1.resize(q);
  out.w2.resize(q);
  out.kappa2.resize(q);
  out.kappa3.resize(q);
  for (int i = 0; i < q; ++i) {
    const auto k = static_cast<Eigen::Index>(keep[i]);
    out.w1[i] = h.w1[k];
    out.kappa1[i] = h.kappa1[k];
    out.w2[i] = h.w2[k];
    out.kappa2[i] = h.kappa2[k];
    out.kappa3[i] = h.kappa3[k];
  }
  return out;
}

// Shared surrogate-extension step: fits the configured surrogate on the live
// curves' subsampled log-log prefixes and appends Predicted tails out to the
// projected final cumulative budget.
void extend_with_surrogate(std::vector<PoolMember>& live, std::vector<LearningCurve>& working,
                           double final_cumulative, const AllocConfig& cfg, int round,
                           std::optional<KernelHyperparams>* warm_start,
                           std::vector<std::string>* notes) {
  auto note = [notes](const std::string& msg) {
    if (notes) notes->push_back(msg);
  };

  double max_trained = 0;
  for (const LearningCurve& c : working) {
    if (c.points.empty()) {
      note("surrogate skipped: model '" + c.model.id + "' has no trained points yet");
      return;
    }
    max_trained = std::max(max_trained, c.points.back().compute);
  }
  // Nothing to extrapolate once the horizon is already reached (final round).
  if (final_cumulative <= max_trained * (1.0 + 1e-9)) return;

  // Subsample prefixes and move to log space.
  std::vector<LearningCurve> subs;
  subs.reserve(working.size());
  for (const LearningCurve& c : working)
    subs.push_back(c.points.size() > 2 ? subsample(c, cfg.points_per_curve) : c);

  NormalizationSpec norm;
  norm.compute_lo = std::numeric_limits<double>::infinity();
  norm.compute_hi = std::log(final_cumulative);
  norm.loss_lo = std::numeric_limits<double>::infinity();
  norm.loss_hi = -std::numeric_limits<double>::infinity();
  for (const LearningCurve& c : subs) {
    for (const CurvePoint& p : c.points) {
      norm.compute_lo = std::min(norm.compute_lo, std::log(p.compute));
      norm.loss_lo = std::min(norm.loss_lo, std::log(p.loss));
      norm.loss_hi = std::max(norm.loss_hi, std::log(p.loss));
    }
  }
  if (!(norm.loss_hi > norm.loss_lo)) {  // degenerate flat data
    norm.loss_lo -= 1e-6;
    norm.loss_hi += 1e-6;
  }
  if (!(norm.compute_hi > norm.compute_lo)) {
    note("surrogate skipped: no compute headroom after normalization");
    return;
  }

  const std::uint64_t fit_seed = mix_seed(cfg.seed, 0xa110c000ull + static_cast<std::uint64_t>(round));

  if (cfg.surrogate == SurrogateKind::Lmc) {
    std::vector<TaskData> tasks(subs.size());
    for (std::size_t i = 0; i < subs.size(); ++i) {
      const auto& pts = subs[i].points;
      tasks[i].inputs.resize(pts.size());
      tasks[i].outputs.resize(pts.size());
      for (std::size_t j = 0; j < pts.size(); ++j) {
        tasks[i].inputs[j] = norm.norm_compute(std::log(pts[j].compute));
        tasks[i].outputs[j] = norm.norm_loss(std::log(pts[j].loss));
      }
    }
    GpFitOptions opt;
    opt.restarts = cfg.gp_restarts;
    opt.max_iter = cfg.gp_max_iter;
    opt.tol = cfg.gp_tol;
    if (warm_start && *warm_start && (*warm_start)->num_tasks() == static_cast<int>(tasks.size()))
      opt.warm_start = **warm_start;
    std::optional<LmcSurrogate> gp;
    try {
      gp = LmcSurrogate::fit(tasks, fit_seed, opt);
    } catch (const std::exception& e) {
      note(std::string("surrogate fit failed: ") + e.what());
      return;
    }
    if (warm_start) *warm_start = gp->hyperparams();

    for (std::size_t i = 0; i < working.size(); ++i) {
      double last = tasks[i].inputs[tasks[i].inputs.size() - 1];
      if (last >= 1.0) continue;
      Eigen::VectorXd grid;
      grid.setLinSpaced(cfg.prediction_grid, last, 1.0);
      Eigen::VectorXd mean = gp->predict(static_cast<int>(i), grid).first;
      double last_compute = working[i].points.back().compute;
      for (Eigen::Index j = 0; j < grid.size(); ++j) {
        double compute = std::exp(norm.denorm_compute(grid[j]));
        if (compute <= last_compute * (1.0 + 1e-12)) continue;
        double loss = std::exp(norm.denorm_loss(mean[j]));
        working[i].points.push_back({compute, loss, Provenance::Predicted});
      }
    }
    return;
  }

  // Deep-ensemble families.
  CurveFamily family = cfg.surrogate == SurrogateKind::DePl    ? CurveFamily::PL
                       : cfg.surrogate == SurrogateKind::DeExp ? CurveFamily::EXP
                                                               : CurveFamily::MMF;
  std::vector<CurveObservations> data(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const auto& pts = subs[i].points;
    data[i].n_params = static_cast<double>(live[i].model.n_params);
    data[i].x.resize(pts.size());
    data[i].y.resize(pts.size());
    for (std::size_t j = 0; j < pts.size(); ++j) {
      double x = norm.norm_compute(std::log(pts[j].compute));
      // PL is undefined at x = 0; nudge the pool-wide first checkpoint.
      if (family == CurveFamily::PL) x = std::max(x, 1e-6);
      data[i].x[j] = x;
      data[i].y[j] = norm.norm_loss(std::log(pts[j].loss));
    }
  }
  EnsembleOptions eopt;
  eopt.iterations = cfg.de_iterations;
  std::optional<EnsembleSurrogate> de;
  try {
    de = EnsembleSurrogate::fit(std::move(data), family, fit_seed, eopt);
  } catch (const std::exception& e) {
    note(std::string("surrogate fit failed: ") + e.what());
    return;
  }
  for (const std::string& w : de->warnings()) note(w);

  for (std::size_t i = 0; i < working.size(); ++i) {
    double n = static_cast<double>(live[i].model.n_params);
    double last = norm.norm_compute(std::log(working[i].points.back().compute));
    if (family == CurveFamily::PL) last = std::max(last, 1e-6);
    if (last >= 1.0) continue;
    Eigen::VectorXd grid;
    grid.setLinSpaced(cfg.prediction_grid, last, 1.0);
    Eigen::VectorXd mean = de->predict(n, grid);
    double last_compute = working[i].points.back().compute;
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      double compute = std::exp(norm.denorm_compute(grid[j]));
      if (compute <= last_compute * (1.0 + 1e-12)) continue;
      double loss = std::exp(norm.denorm_loss(mean[j]));
      working[i].points.push_back({compute, loss, Provenance::Predicted});
    }
  }
}

}  // namespace

std::vector<LearningCurve> obtain_lcs(std::vector<PoolMember>& live, flops_t budget_per_model,
                                      double final_cumulative, const AllocConfig& cfg,
                                      CurveSource& source, int round,
                                      std::optional<KernelHyperparams>* warm_start,
                                      std::vector<std::string>* notes) {
  auto note = [notes](const std::string& msg) {
    if (notes) notes->push_back(msg);
  };
  if (live.empty()) fail("obtain_lcs on an empty pool");
  if (budget_per_model < 0) fail("per-model budget must be non-negative");

  int zero_step = 0;
  for (PoolMember& m : live) {
    flops_t alloc = budget_per_model + m.carry;
    StepQuantInt q = quantize_steps_int(alloc, m.model);
    m.carry = alloc - q.consumed;
    if (q.steps == 0) {
      ++zero_step;
      note("model '" + m.model.id + "' trained zero steps in round " + std::to_string(round));
      continue;
    }
    m.consumed += q.consumed;
    LearningCurve updated = source.slice(m.model, from_flops(m.consumed));
    if (updated.points.empty()) {
      note("model '" + m.model.id + "' produced no checkpoints up to its target");
      continue;
    }
    m.curve = std::move(updated);
  }
  if (zero_step == static_cast<int>(live.size()))
    note("all models trained zero steps in round " + std::to_string(round));

  std::vector<LearningCurve> working;
  working.reserve(live.size());
  for (const PoolMember& m : live) {
    LearningCurve c = m.curve;
    c.model = m.model;
    working.push_back(std::move(c));
  }

  if (cfg.surrogate != SurrogateKind::None)
    extend_with_surrogate(live, working, final_cumulative, cfg, round, warm_start, notes);
  return working;
}

namespace {

AllocationTrace finish_trace(AllocationTrace trace, const std::vector<PoolMember>& members,
                             flops_t spent) {
  std::vector<LearningCurve> finals;
  for (const PoolMember& m : members) {
    if (m.curve.points.empty()) continue;
    LearningCurve c = m.curve;
    c.model = m.model;
    finals.push_back(std::move(c));
  }
  trace.final_curves = CurveSet(std::move(finals));
  trace.spent = from_flops(spent);
  return trace;
}

void validate_pool(const std::vector<ModelSpec>& pool) {
  if (pool.empty()) fail("pool must contain at least one model");
  std::vector<std::string> ids;
  for (const ModelSpec& m : pool) {
    m.validate();
    ids.push_back(m.id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    fail("pool contains duplicate model ids");
}

}  // namespace

AllocationTrace run_sh(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                       CurveSource& source) {
  cfg.validate();
  validate_pool(pool);

  const int rounds = num_rounds(static_cast<int>(pool.size()), cfg.eta);
  const flops_t budget = to_flops(cfg.total_budget);

  std::vector<PoolMember> members(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    members[i].model = pool[i];
    members[i].curve.model = pool[i];
  }
  std::vector<std::size_t> live_idx(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) live_idx[i] = i;

  // Remaining rounds' budgets are projected off the current live count, so the
  // horizon is recomputed each round (identical to the static schedule unless
  // a round terminates abnormally).
  auto horizon_from = [&](flops_t past, int round, int live_count) {
    flops_t sum = past;
    int p = live_count;
    for (int r = round; r < rounds; ++r) {
      sum += budget / (static_cast<flops_t>(p) * rounds);
      p = survivor_count(p, cfg.eta);
    }
    return sum;
  };

  AllocationTrace trace;
  flops_t spent = 0, handed = 0, returned = 0, past_alloc = 0;
  std::optional<KernelHyperparams> warm_start;

  for (int r = 0; r < rounds; ++r) {
    RoundRecord rec;
    rec.round = r;
    const int live_count = static_cast<int>(live_idx.size());
    const flops_t c_r = budget / (static_cast<flops_t>(live_count) * rounds);
    flops_t bonus = 0;
    if (r == rounds - 1) {
      // Grant the never-handed-out remainder (floor losses and pruned carries)
      // to the final round's survivors.
      flops_t remaining = budget - handed - static_cast<flops_t>(live_count) * c_r + returned;
      if (remaining > 0) bonus = remaining / live_count;
    }
    rec.budget_per_model = from_flops(c_r);
    rec.bonus_per_model = from_flops(bonus);

    std::vector<PoolMember> live;
    live.reserve(live_idx.size());
    for (std::size_t i : live_idx) live.push_back(std::move(members[i]));

    flops_t spent_before = spent;
    for (PoolMember& m : live) spent -= m.consumed;  // re-add after the round
    double horizon = from_flops(horizon_from(past_alloc, r, live_count));
    std::vector<LearningCurve> working =
        obtain_lcs(live, c_r + bonus, horizon, cfg, source, r, &warm_start, &rec.notes);
    for (PoolMember& m : live) spent += m.consumed;
    if (spent < spent_before) throw std::logic_error("spent budget regressed");
    if (spent > budget) throw std::logic_error("spent budget exceeds the total budget");
    handed += static_cast<flops_t>(live_count) * (c_r + bonus);
    past_alloc += c_r + bonus;

    bool all_zero = false;
    for (const std::string& n : rec.notes)
      if (n.rfind("all models trained zero steps", 0) == 0) all_zero = true;

    std::vector<std::size_t> ranking = ranked_order(working);
    std::vector<std::size_t> keep(ranking.begin(),
                                  ranking.begin() + survivor_count(live_count, cfg.eta));
    for (std::size_t w : ranking)
      rec.scores.push_back({working[w].model.id, working[w].min_loss_any()});

    std::vector<bool> kept(working.size(), false);
    for (std::size_t k : keep) kept[k] = true;
    std::vector<std::size_t> next_live;
    for (std::size_t k : keep) rec.survivors.push_back(live[k].model.id);

    // Move members back; pruned members return their carries to the pool.
    for (std::size_t w = 0; w < live.size(); ++w) {
      if (!kept[w] || r == rounds - 1) returned += live[w].carry, live[w].carry = 0;
      members[live_idx[w]] = std::move(live[w]);
    }
    for (std::size_t k : keep) next_live.push_back(live_idx[k]);
    live_idx = std::move(next_live);

    // The fitted kernel's task blocks follow `live` order, so survivors keep
    // their entries as next round's warm start; a stale count means this
    // round's fit was skipped, and the carry-over would misalign.
    if (warm_start) {
      if (warm_start->num_tasks() == static_cast<int>(live.size()))
        warm_start = subset_hyperparams(*warm_start, keep);
      else
        warm_start.reset();
    }

    trace.rounds.push_back(std::move(rec));
    if (all_zero) {
      trace.notes.push_back("terminated after round " + std::to_string(r) +
                            ": all models would train zero steps");
      break;
    }
  }

  for (std::size_t i : live_idx) trace.final_pool.push_back(members[i].model.id);
  return finish_trace(std::move(trace), members, spent);
}

AllocationTrace run_uniform(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                            CurveSource& source) {
  cfg.validate();
  validate_pool(pool);

  const flops_t budget = to_flops(cfg.total_budget);
  const flops_t share = budget / static_cast<flops_t>(pool.size());

  AllocationTrace trace;
  RoundRecord rec;
  rec.round = 0;
  rec.budget_per_model = from_flops(share);

  std::vector<PoolMember> members(pool.size());
  flops_t spent = 0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    members[i].model = pool[i];
    members[i].curve.model = pool[i];
    StepQuantInt q = quantize_steps_int(share, pool[i]);
    if (q.steps == 0) {
      rec.notes.push_back("model '" + pool[i].id + "' trained zero steps");
      continue;
    }
    members[i].consumed = q.consumed;
    spent += q.consumed;
    LearningCurve c = source.slice(pool[i], from_flops(q.consumed));
    if (c.points.empty()) {
      rec.notes.push_back("model '" + pool[i].id + "' produced no checkpoints up to its target");
      continue;
    }
    members[i].curve = std::move(c);
  }
  if (spent > budget) throw std::logic_error("spent budget exceeds the total budget");

  std::vector<LearningCurve> working;
  for (const PoolMember& m : members) {
    LearningCurve c = m.curve;
    c.model = m.model;
    working.push_back(std::move(c));
    rec.survivors.push_back(m.model.id);
    trace.final_pool.push_back(m.model.id);
  }
  for (std::size_t w : ranked_order(working))
    rec.scores.push_back({working[w].model.id, working[w].min_loss_any()});
  trace.rounds.push_back(std::move(rec));
  return finish_trace(std::move(trace), members, spent);
}

OracleResult pool_oracle(const std::vector<ModelSpec>& pool, const AllocConfig& cfg,
                         CurveSource& source) {
  cfg.validate();
  validate_pool(pool);

  const int rounds = num_rounds(static_cast<int>(pool.size()), cfg.eta);
  const flops_t budget = to_flops(cfg.total_budget);

  // Deterministic pool-size schedule and the final-round remainder grant that
  // a lone survivor would receive (pruned carries excluded: unknowable here).
  std::vector<flops_t> round_allocs(rounds);
  flops_t handed = 0;
  int p = static_cast<int>(pool.size());
  int final_count = p;
  for (int r = 0; r < rounds; ++r) {
    round_allocs[r] = budget / (static_cast<flops_t>(p) * rounds);
    handed += static_cast<flops_t>(p) * round_allocs[r];
    final_count = p;
    p = survivor_count(p, cfg.eta);
  }
  flops_t remaining = budget - handed;
  if (remaining > 0) round_allocs[rounds - 1] += remaining / final_count;

  OracleResult best;
  best.loss = std::numeric_limits<double>::infinity();
  const ModelSpec* best_model = nullptr;
  for (const ModelSpec& m : pool) {
    flops_t carry = 0, consumed = 0;
    for (flops_t alloc : round_allocs) {
      StepQuantInt q = quantize_steps_int(alloc + carry, m);
      carry = alloc + carry - q.consumed;
      consumed += q.consumed;
    }
    if (consumed == 0) continue;
    LearningCurve c = source.slice(m, from_flops(consumed));
    if (c.points.empty()) continue;
    double loss = c.min_trained_loss();
    bool better = loss < best.loss;
    if (loss == best.loss && best_model &&
        (m.n_params < best_model->n_params ||
         (m.n_params == best_model->n_params && m.id < best_model->id)))
      better = true;
    if (better) {
      best.loss = loss;
      best.model_id = m.id;
      best_model = &m;
    }
  }
  if (!best_model) throw std::runtime_error("pool oracle: no model could train under this budget");
  return best;
}

}  // namespace shlaw
