#include "shlaw/curves.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace shlaw {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

double parse_double(std::string_view field, const std::string& what, std::size_t line_no) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    fail("curve file line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(field) + "'");
  return v;
}

std::int64_t parse_int(std::string_view field, const std::string& what, std::size_t line_no) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    fail("curve file line " + std::to_string(line_no) + ": bad " + what + " '" + std::string(field) + "'");
  return v;
}

}  // namespace

std::string_view provenance_name(Provenance p) {
  return p == Provenance::Trained ? "trained" : "predicted";
}

Provenance provenance_from_name(std::string_view name) {
  if (name == "trained") return Provenance::Trained;
  if (name == "predicted") return Provenance::Predicted;
  fail("unknown provenance '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (id.empty()) fail("model id must be non-empty");
  if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos)
    fail("model id '" + id + "' may not contain commas or newlines");
  if (n_params <= 0) fail("model '" + id + "': n_params must be positive");
  if (tokens_per_step <= 0) fail("model '" + id + "': tokens_per_step must be positive");
}

void LearningCurve::validate() const {
  model.validate();
  double prev = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const CurvePoint& p = points[i];
    if (!(p.compute > 0) || !std::isfinite(p.compute))
      fail("curve '" + model.id + "' point " + std::to_string(i) + ": compute must be positive and finite");
    if (!(p.loss > 0) || !std::isfinite(p.loss))
      fail("curve '" + model.id + "' point " + std::to_string(i) + ": loss must be positive and finite");
    if (i > 0 && !(p.compute > prev))
      fail("curve '" + model.id + "': compute must be strictly increasing (point " + std::to_string(i) + ")");
    prev = p.compute;
  }
}

bool LearningCurve::has_trained() const {
  return std::any_of(points.begin(), points.end(),
                     [](const CurvePoint& p) { return p.provenance == Provenance::Trained; });
}

double LearningCurve::max_trained_compute() const {
  double best = 0;
  for (const CurvePoint& p : points)
    if (p.provenance == Provenance::Trained && p.compute > best) best = p.compute;
  return best;
}

double LearningCurve::min_trained_loss() const {
  double best = std::numeric_limits<double>::infinity();
  for (const CurvePoint& p : points)
    if (p.provenance == Provenance::Trained && p.loss < best) best = p.loss;
  return best;
}

double LearningCurve::min_loss_any() const {
  double best = std::numeric_limits<double>::infinity();
  for (const CurvePoint& p : points)
    if (p.loss < best) best = p.loss;
  return best;
}

CurveSet::CurveSet(std::vector<LearningCurve> curves) : curves_(std::move(curves)) {
  for (std::size_t i = 0; i < curves_.size(); ++i) {
    curves_[i].validate();
    if (curves_[i].points.empty())
      fail("curve '" + curves_[i].model.id + "' must contain at least one point");
    auto [it, inserted] = index_.emplace(curves_[i].model.id, i);
    if (!inserted) fail("duplicate model id '" + curves_[i].model.id + "' in curve set");
  }
}

const LearningCurve* CurveSet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &curves_[it->second];
}

double total_compute(const CurveSet& set) {
  double sum = 0;
  for (const LearningCurve& c : set.curves()) sum += c.max_trained_compute();
  return sum;
}

MinLossResult min_loss(const CurveSet& set) {
  if (set.empty()) fail("empty curve set");
  MinLossResult best;
  const LearningCurve* best_curve = nullptr;
  for (const LearningCurve& c : set.curves()) {
    double l = c.min_trained_loss();
    if (!std::isfinite(l)) continue;
    bool better = l < best.loss;
    if (l == best.loss && best_curve != nullptr) {
      // Tie on loss: prefer the smaller model, then the lexicographically smaller id.
      if (c.model.n_params < best_curve->model.n_params ||
          (c.model.n_params == best_curve->model.n_params && c.model.id < best_curve->model.id))
        better = true;
    }
    if (better) {
      best.loss = l;
      best.model_id = c.model.id;
      best_curve = &c;
    }
  }
  if (best_curve == nullptr) fail("curve set has no trained points");
  return best;
}

void write_curve_file(const CurveSet& set, std::ostream& os) {
  // Stable order: by model id, then compute (curves are already compute-sorted).
  std::vector<const LearningCurve*> order;
  order.reserve(set.size());
  for (const LearningCurve& c : set.curves()) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const LearningCurve* a, const LearningCurve* b) { return a->model.id < b->model.id; });

  os << "model_id,n_params,compute_flops,loss,provenance\n";
  char buf[64];
  for (const LearningCurve* c : order) {
    for (const CurvePoint& p : c->points) {
      os << c->model.id << ',' << c->model.n_params << ',';
      auto r1 = std::to_chars(buf, buf + sizeof buf, p.compute);
      os.write(buf, r1.ptr - buf);
      os << ',';
      auto r2 = std::to_chars(buf, buf + sizeof buf, p.loss);
      os.write(buf, r2.ptr - buf);
      os << ',' << provenance_name(p.provenance) << '\n';
    }
  }
  if (!os) throw std::runtime_error("curve file write failed");
}

void write_curve_file(const CurveSet& set, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_curve_file(set, os);
}

CurveSet read_curve_file(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail("curve file is empty");
  if (line == "model_id,n_params,compute_flops,loss,provenance\r")
    line.pop_back();
  if (line != "model_id,n_params,compute_flops,loss,provenance")
    fail("curve file has unexpected header '" + line + "'");

  std::vector<LearningCurve> curves;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 5> fields;
    std::string_view rest = line;
    for (int f = 0; f < 5; ++f) {
      std::size_t pos = f < 4 ? rest.find(',') : std::string_view::npos;
      if (f < 4 && pos == std::string_view::npos)
        fail("curve file line " + std::to_string(line_no) + ": expected 5 comma-separated fields");
      fields[f] = rest.substr(0, pos);
      if (f < 4) rest = rest.substr(pos + 1);
    }
    if (fields[4].find(',') != std::string_view::npos)
      fail("curve file line " + std::to_string(line_no) + ": expected 5 comma-separated fields");

    std::string id(fields[0]);
    std::int64_t n_params = parse_int(fields[1], "n_params", line_no);
    CurvePoint p;
    p.compute = parse_double(fields[2], "compute_flops", line_no);
    p.loss = parse_double(fields[3], "loss", line_no);
    p.provenance = provenance_from_name(fields[4]);

    auto it = index.find(id);
    if (it == index.end()) {
      LearningCurve c;
      c.model.id = id;
      c.model.n_params = n_params;
      curves.push_back(std::move(c));
      it = index.emplace(id, curves.size() - 1).first;
    } else if (curves[it->second].model.n_params != n_params) {
      fail("curve file line " + std::to_string(line_no) + ": model '" + id + "' changes n_params");
    }
    curves[it->second].points.push_back(p);
  }
  return CurveSet(std::move(curves));  // validates sortedness, positivity, uniqueness
}

CurveSet read_curve_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "' for reading");
  return read_curve_file(is);
}

}  // namespace shlaw
