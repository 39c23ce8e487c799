#include "vplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <tuple>

#include "json.hpp"

namespace vplan {

namespace {

void check_horizon(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l) {
  if (l == 0) throw std::invalid_argument("metric horizon must be >= 1");
  if (pred.size() < l || gt.size() < l)
    throw std::invalid_argument("metric horizon " + std::to_string(l) + " exceeds a sequence of length " +
                                std::to_string(std::min(pred.size(), gt.size())));
}

}  // namespace

double success_rate(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l) {
  check_horizon(pred, gt, l);
  return std::equal(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(l), gt.begin()) ? 1.0 : 0.0;
}

double mean_accuracy(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l) {
  check_horizon(pred, gt, l);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < l; ++i) hits += pred[i] == gt[i] && pred[i] != kInvalidAction;
  return static_cast<double>(hits) / static_cast<double>(l);
}

double miou(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l) {
  check_horizon(pred, gt, l);
  std::set<ActionId> p(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(l));
  std::set<ActionId> g(gt.begin(), gt.begin() + static_cast<std::ptrdiff_t>(l));
  // The padding action matches nothing, itself included.
  p.erase(kInvalidAction);
  std::size_t inter = 0;
  for (ActionId a : p) inter += g.count(a);
  std::set<ActionId> uni = g;
  uni.insert(p.begin(), p.end());
  const std::size_t pad = static_cast<std::size_t>(
      std::count(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(l), kInvalidAction) > 0);
  const std::size_t denom = uni.size() + pad;
  return denom == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(denom);
}

double next_accuracy(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt) {
  check_horizon(pred, gt, 1);
  return pred[0] == gt[0] && pred[0] != kInvalidAction ? 1.0 : 0.0;
}

std::size_t edit_distance(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt) {
  const std::size_t n = pred.size();
  const std::size_t m = gt.size();
  std::vector<std::size_t> row(m + 1);
  for (std::size_t j = 0; j <= m; ++j) row[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t up = row[j];
      const bool same = pred[i - 1] == gt[j - 1] && pred[i - 1] != kInvalidAction;
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (same ? 0 : 1)});
      diag = up;
    }
  }
  return row[m];
}

double normalized_edit_distance(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt) {
  const std::size_t len = std::max(pred.size(), gt.size());
  return len == 0 ? 0.0 : static_cast<double>(edit_distance(pred, gt)) / static_cast<double>(len);
}

std::vector<ActionId> pad_plan(std::vector<ActionId> plan, std::size_t l) {
  if (plan.size() < l) plan.resize(l, kInvalidAction);
  return plan;
}

std::vector<EvalRecord> evaluate_plan(const std::string& example_id, std::uint32_t goal, std::size_t k,
                                      const std::vector<ActionId>& pred, const std::vector<ActionId>& gt,
                                      const std::vector<std::size_t>& horizons, const std::string& condition,
                                      double noise, std::uint64_t seed) {
  std::vector<EvalRecord> out;
  for (std::size_t l : horizons) {
    const std::vector<ActionId> p = pad_plan({pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(
                                                                               std::min(l, pred.size()))},
                                             l);
    const std::vector<ActionId> g(gt.begin(), gt.begin() + static_cast<std::ptrdiff_t>(std::min(l, gt.size())));
    EvalRecord r;
    r.example_id = example_id;
    r.goal = goal;
    r.k = k;
    r.l = l;
    r.sr = success_rate(p, g, l);
    r.macc = mean_accuracy(p, g, l);
    r.miou = miou(p, g, l);
    r.nacc = next_accuracy(p, g);
    r.ed = edit_distance(p, g);
    r.ed_norm = normalized_edit_distance(p, g);
    r.condition = condition;
    r.noise = noise;
    r.seed = seed;
    out.push_back(std::move(r));
  }
  return out;
}

double metric_value(const EvalRecord& r, const std::string& metric) {
  if (metric == "sr") return r.sr;
  if (metric == "macc") return r.macc;
  if (metric == "miou") return r.miou;
  if (metric == "nacc") return r.nacc;
  if (metric == "ed") return static_cast<double>(r.ed);
  if (metric == "ed_norm") return r.ed_norm;
  throw std::invalid_argument("unknown metric '" + metric + "'");
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

namespace {

using GroupKey = std::tuple<std::string, double, std::size_t>;

}  // namespace

const SummaryRow* Summary::find(const std::string& condition, double noise, std::size_t l,
                                const std::string& metric) const {
  for (const auto& r : rows)
    if (r.condition == condition && r.noise == noise && r.l == l && r.metric == metric) return &r;
  return nullptr;
}

Summary aggregate(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  // group -> seed -> records
  std::map<GroupKey, std::map<std::uint64_t, std::vector<const EvalRecord*>>> groups;
  for (const auto& r : records) groups[{r.condition, r.noise, r.l}][r.seed].push_back(&r);

  Summary s;
  for (const auto& [key, seeds] : groups) {
    const auto& [condition, noise, l] = key;
    for (const std::string& metric : kMetricNames) {
      std::vector<double> seed_means;
      std::size_t n_examples = 0;
      for (const auto& [seed, recs] : seeds) {
        double sum = 0.0;
        for (const EvalRecord* r : recs) sum += metric_value(*r, metric);
        seed_means.push_back(sum / static_cast<double>(recs.size()));
        n_examples = std::max(n_examples, recs.size());
      }
      s.rows.push_back({condition, noise, l, metric, mean(seed_means), standard_error(seed_means), seed_means.size(),
                        n_examples});
    }
    std::map<std::size_t, std::pair<double, std::size_t>> by_k;
    std::map<std::uint32_t, std::tuple<double, double, std::size_t>> by_goal;
    for (const auto& [seed, recs] : seeds) {
      for (const EvalRecord* r : recs) {
        auto& k = by_k[r->k];
        k.first += r->macc;
        ++k.second;
        auto& g = by_goal[r->goal];
        std::get<0>(g) += r->macc;
        std::get<1>(g) += r->sr;
        ++std::get<2>(g);
      }
    }
    for (const auto& [k, acc] : by_k)
      s.per_k.push_back({condition, noise, l, k, acc.first / static_cast<double>(acc.second), acc.second});
    for (const auto& [g, acc] : by_goal) {
      const auto n = static_cast<double>(std::get<2>(acc));
      s.per_goal.push_back({condition, noise, l, g, std::get<0>(acc) / n, std::get<1>(acc) / n, std::get<2>(acc)});
    }
  }
  return s;
}

std::map<std::uint64_t, double> per_seed_means(const std::vector<EvalRecord>& records, const std::string& condition,
                                               double noise, std::size_t l, const std::string& metric) {
  std::map<std::uint64_t, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (r.condition != condition || r.noise != noise || r.l != l) continue;
    auto& a = acc[r.seed];
    a.first += metric_value(r, metric);
    ++a.second;
  }
  std::map<std::uint64_t, double> out;
  for (const auto& [seed, a] : acc) out[seed] = a.first / static_cast<double>(a.second);
  return out;
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

void write_summary_csv(std::ostream& out, const Summary& s) {
  out << "condition,noise,l,metric,mean,ste,n_seeds,n_examples\n";
  for (const auto& r : s.rows)
    out << r.condition << ',' << format_number(r.noise) << ',' << r.l << ',' << r.metric << ','
        << format_number(r.mean) << ',' << format_number(r.ste) << ',' << r.n_seeds << ',' << r.n_examples << '\n';
}

void write_per_k_csv(std::ostream& out, const Summary& s) {
  out << "condition,noise,l,k,macc_mean,n\n";
  for (const auto& r : s.per_k)
    out << r.condition << ',' << format_number(r.noise) << ',' << r.l << ',' << r.k << ','
        << format_number(r.macc_mean) << ',' << r.n << '\n';
}

void write_per_goal_csv(std::ostream& out, const Summary& s) {
  out << "condition,noise,l,goal,macc_mean,sr_mean,n\n";
  for (const auto& r : s.per_goal)
    out << r.condition << ',' << format_number(r.noise) << ',' << r.l << ',' << r.goal << ','
        << format_number(r.macc_mean) << ',' << format_number(r.sr_mean) << ',' << r.n << '\n';
}

void write_summary_table(std::ostream& out, const Summary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %5s %3s %8s %10s %10s %6s\n", "condition", "noise", "l", "metric", "mean",
                "ste", "seeds");
  out << buf;
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%-16s %5.2f %3zu %8s %10.4f %10.4f %6zu%s\n", r.condition.c_str(), r.noise, r.l,
                  r.metric.c_str(), r.mean, r.ste, r.n_seeds, r.n_seeds == 1 ? " (n=1)" : "");
    out << buf;
  }
}

std::string to_jsonl(const EvalRecord& r) {
  nlohmann::ordered_json j;
  j["example_id"] = r.example_id;
  j["goal"] = r.goal;
  j["k"] = r.k;
  j["l"] = r.l;
  j["sr"] = r.sr;
  j["macc"] = r.macc;
  j["miou"] = r.miou;
  j["nacc"] = r.nacc;
  j["ed"] = r.ed;
  j["ed_norm"] = r.ed_norm;
  j["condition"] = r.condition;
  j["noise"] = r.noise;
  j["seed"] = r.seed;
  return j.dump();
}

EvalRecord record_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  EvalRecord r;
  r.example_id = j.at("example_id").get<std::string>();
  r.goal = j.at("goal").get<std::uint32_t>();
  r.k = j.at("k").get<std::size_t>();
  r.l = j.at("l").get<std::size_t>();
  r.sr = j.at("sr").get<double>();
  r.macc = j.at("macc").get<double>();
  r.miou = j.at("miou").get<double>();
  r.nacc = j.at("nacc").get<double>();
  r.ed = j.at("ed").get<std::size_t>();
  r.ed_norm = j.at("ed_norm").get<double>();
  r.condition = j.at("condition").get<std::string>();
  r.noise = j.at("noise").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

std::vector<EvalRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<EvalRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      if (nlohmann::json::parse(line).contains("manifest")) continue;
      out.push_back(record_from_json(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  const std::vector<double> rx = ranks(x);
  const std::vector<double> ry = ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace vplan
