#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vplan/common.hpp"

namespace vplan {

/// 1 iff the first l actions match position by position.
double success_rate(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l);
/// Fraction of the first l positions that match.
double mean_accuracy(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l);
/// |set(pred_1..l) ∩ set(gt_1..l)| / |set(pred_1..l) ∪ set(gt_1..l)|.
double miou(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt, std::size_t l);
double next_accuracy(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt);
/// Levenshtein distance with unit costs.
std::size_t edit_distance(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt);
/// edit_distance / max(|pred|, |gt|); 0 for two empty sequences.
double normalized_edit_distance(const std::vector<ActionId>& pred, const std::vector<ActionId>& gt);

/// Pads with kInvalidAction up to length l.
std::vector<ActionId> pad_plan(std::vector<ActionId> plan, std::size_t l);

struct EvalRecord {
  std::string example_id;
  std::uint32_t goal = 0;
  std::size_t k = 0;
  std::size_t l = 0;
  double sr = 0;
  double macc = 0;
  double miou = 0;
  double nacc = 0;
  std::size_t ed = 0;
  double ed_norm = 0;
  std::string condition;
  double noise = 0;
  std::uint64_t seed = 0;
};

/// One record per horizon, all read off one plan.
std::vector<EvalRecord> evaluate_plan(const std::string& example_id, std::uint32_t goal, std::size_t k,
                                      const std::vector<ActionId>& pred, const std::vector<ActionId>& gt,
                                      const std::vector<std::size_t>& horizons, const std::string& condition,
                                      double noise, std::uint64_t seed);

inline const std::vector<std::string> kMetricNames = {"sr", "macc", "miou", "nacc", "ed", "ed_norm"};
double metric_value(const EvalRecord& r, const std::string& metric);

struct SummaryRow {
  std::string condition;
  double noise = 0;
  std::size_t l = 0;
  std::string metric;
  double mean = 0;
  double ste = 0;
  std::size_t n_seeds = 0;
  std::size_t n_examples = 0;  // per seed
};

struct KRow {
  std::string condition;
  double noise = 0;
  std::size_t l = 0;
  std::size_t k = 0;
  double macc_mean = 0;
  std::size_t n = 0;
};

struct GoalRow {
  std::string condition;
  double noise = 0;
  std::size_t l = 0;
  std::uint32_t goal = 0;
  double macc_mean = 0;
  double sr_mean = 0;
  std::size_t n = 0;
};

/// Per (condition, noise, l): per-seed example means, then mean and
/// standard error (sample std / sqrt(n_seeds)) across seeds. With one seed
/// the error is 0 and n_seeds = 1 flags it. Rows come out sorted by
/// (condition, noise, l, metric order).
struct Summary {
  std::vector<SummaryRow> rows;
  std::vector<KRow> per_k;
  std::vector<GoalRow> per_goal;

  const SummaryRow* find(const std::string& condition, double noise, std::size_t l, const std::string& metric) const;
};

Summary aggregate(const std::vector<EvalRecord>& records);

/// Per-seed mean of one metric for one group, in seed order.
std::map<std::uint64_t, double> per_seed_means(const std::vector<EvalRecord>& records, const std::string& condition,
                                               double noise, std::size_t l, const std::string& metric);

void write_summary_csv(std::ostream& out, const Summary& s);
void write_per_k_csv(std::ostream& out, const Summary& s);
void write_per_goal_csv(std::ostream& out, const Summary& s);
void write_summary_table(std::ostream& out, const Summary& s);

std::string to_jsonl(const EvalRecord& r);
EvalRecord record_from_json(const std::string& line);
std::vector<EvalRecord> load_records(const std::filesystem::path& path);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& v);
double standard_error(const std::vector<double>& v);

/// Fixed-precision formatting so emitted files are byte-stable.
std::string format_number(double x);

}  // namespace vplan
